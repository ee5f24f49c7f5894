//! Binomial coefficients and binomial mass functions.
//!
//! Coefficients with `n <= 64` are computed exactly in integer arithmetic,
//! larger ones in log-space.

use statrs::function::factorial;

const EXACT_LIMIT: u64 = 64;

/// Exact `C(n, k)` for `n <= 64`, `None` otherwise.
pub fn binomial_exact(n: u64, k: u64) -> Option<u64> {
    if n > EXACT_LIMIT {
        return None;
    }
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    Some(acc as u64)
}

/// `ln C(n, k)`, `-inf` when `k > n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    match binomial_exact(n, k) {
        Some(c) => (c as f64).ln(),
        None => factorial::ln_binomial(n, k),
    }
}

/// `C(n, k)` as a float.
pub fn binomial(n: u64, k: u64) -> f64 {
    match binomial_exact(n, k) {
        Some(c) => c as f64,
        None => ln_binomial(n, k).exp(),
    }
}

pub fn ln_factorial(n: u64) -> f64 {
    factorial::ln_factorial(n)
}

/// Mass function of Binomial(n, p) on `0..=n`.
pub fn binomial_pmf(n: u64, p: f64) -> Vec<f64> {
    let len = n as usize + 1;
    if p <= 0.0 {
        let mut v = vec![0.0; len];
        v[0] = 1.0;
        return v;
    }
    if p >= 1.0 {
        let mut v = vec![0.0; len];
        v[n as usize] = 1.0;
        return v;
    }
    // ratio recurrence outward from the mode, then normalize
    let mode = (((n + 1) as f64 * p).floor() as usize).min(n as usize);
    let odds = p / (1.0 - p);
    let mut v = vec![0.0; len];
    v[mode] = 1.0;
    for k in mode..n as usize {
        v[k + 1] = v[k] * (n as usize - k) as f64 / (k + 1) as f64 * odds;
        if v[k + 1] == 0.0 {
            break;
        }
    }
    for k in (1..=mode).rev() {
        v[k - 1] = v[k] * k as f64 / ((n as usize - k + 1) as f64 * odds);
        if v[k - 1] == 0.0 {
            break;
        }
    }
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}
