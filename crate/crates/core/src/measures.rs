//! Probability measures on the non-negative integers.
//!
//! [`Pmf`] stores masses densely, indexed by value, together with the mass
//! that was discarded by truncation (`tail`). Operations that build
//! infinite-support laws truncate the suffix whose total mass is below a
//! tolerance and record the discarded amount in `tail`; nothing is ever
//! silently renormalized.
//!
//! Total variation distances are computed over the explicit supports. When
//! both arguments carry tail mass the true distance can differ from the
//! reported one by at most `(tail_p + tail_q) / 2`.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::binomial_pmf;
use crate::error::{Error, Result};

/// Default truncation tolerance for infinite-support laws.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-12;

/// Accepted deviation of `sum(masses) + tail` from one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// A finitely supported probability mass function on `{0, 1, 2, ...}`.
#[derive(Clone, PartialEq)]
pub struct Pmf {
    masses: Vec<f64>,
    tail: f64,
}

impl fmt::Debug for Pmf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.support()).finish()?;
        if self.tail > 0.0 {
            write!(f, " + tail {:e}", self.tail)?;
        }
        Ok(())
    }
}

fn check_unit_interval(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {x} not in [0, 1]")))
    }
}

/// Removes the longest suffix whose total mass is below `tol`, returning the
/// removed mass.
fn truncate_suffix(masses: &mut Vec<f64>, tol: f64) -> f64 {
    let mut dropped = 0.0;
    while let Some(&last) = masses.last() {
        if masses.len() == 1 || dropped + last >= tol {
            break;
        }
        dropped += last;
        masses.pop();
    }
    dropped
}

fn trim_zeros(masses: &mut Vec<f64>) {
    while masses.len() > 1 && masses.last() == Some(&0.0) {
        masses.pop();
    }
}

impl Pmf {
    /// Builds a measure from dense masses (index = value) and a tail mass.
    pub fn new(masses: Vec<f64>, tail: f64) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidPmf("empty support".into()));
        }
        if let Some((k, m)) = masses.iter().enumerate().find(|(_, m)| !m.is_finite() || **m < 0.0) {
            return Err(Error::InvalidPmf(format!("mass {m} at {k}")));
        }
        if !tail.is_finite() || !(0.0..=1.0).contains(&tail) {
            return Err(Error::InvalidPmf(format!("tail mass {tail}")));
        }
        let total: f64 = masses.iter().sum::<f64>() + tail;
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidPmf(format!("total mass {total}")));
        }
        Ok(Self::from_raw(masses, tail))
    }

    /// Builds a measure from `(value, mass)` pairs with strictly increasing values.
    pub fn from_pairs(pairs: &[(usize, f64)], tail: f64) -> Result<Self> {
        if pairs.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidPmf("support values must be strictly increasing".into()));
        }
        let len = pairs.last().map_or(1, |&(v, _)| v + 1);
        let mut masses = vec![0.0; len];
        for &(v, m) in pairs {
            masses[v] = m;
        }
        Self::new(masses, tail)
    }

    pub(crate) fn from_raw(mut masses: Vec<f64>, tail: f64) -> Self {
        if masses.is_empty() {
            masses.push(0.0);
        }
        trim_zeros(&mut masses);
        Self { masses, tail }
    }

    /// Like `from_raw`, but the tail is whatever mass is missing.
    pub(crate) fn from_raw_missing_tail(masses: Vec<f64>) -> Self {
        let total: f64 = masses.iter().sum();
        Self::from_raw(masses, (1.0 - total).max(0.0))
    }

    pub fn dirac(k: usize) -> Self {
        let mut masses = vec![0.0; k + 1];
        masses[k] = 1.0;
        Self { masses, tail: 0.0 }
    }

    pub fn bernoulli(a: f64) -> Result<Self> {
        check_unit_interval("Bernoulli parameter", a)?;
        Ok(Self::from_raw(vec![1.0 - a, a], 0.0))
    }

    pub fn binomial(n: u64, p: f64) -> Result<Self> {
        check_unit_interval("binomial parameter", p)?;
        Ok(Self::from_raw_missing_tail(binomial_pmf(n, p)))
    }

    /// Poisson(a) truncated at [`DEFAULT_TAIL_TOLERANCE`].
    pub fn poisson(a: f64) -> Result<Self> {
        Self::poisson_truncated(a, DEFAULT_TAIL_TOLERANCE)
    }

    pub fn poisson_truncated(a: f64, tol: f64) -> Result<Self> {
        if !a.is_finite() || !(0.0..=700.0).contains(&a) {
            return Err(Error::InvalidParameter(format!("Poisson parameter {a} outside [0, 700]")));
        }
        if a == 0.0 {
            return Ok(Self::dirac(0));
        }
        let mut masses = Vec::new();
        let mut term = (-a).exp();
        let mut k = 0usize;
        loop {
            masses.push(term);
            let next = term * a / (k + 1) as f64;
            // remaining mass beyond k is at most next / (1 - a / (k + 2)) once k + 2 > a
            if (k + 2) as f64 > 2.0 * a && 2.0 * next < tol * 1e-6 {
                break;
            }
            term = next;
            k += 1;
        }
        truncate_suffix(&mut masses, tol);
        Ok(Self::from_raw_missing_tail(masses))
    }

    /// Geometric law on `{0, 1, ...}` with success parameter `s`:
    /// `P(k) = s (1 - s)^k`, truncated at [`DEFAULT_TAIL_TOLERANCE`].
    pub fn geometric(s: f64) -> Result<Self> {
        Self::geometric_truncated(s, DEFAULT_TAIL_TOLERANCE)
    }

    pub fn geometric_truncated(s: f64, tol: f64) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidParameter(format!("geometric success parameter {s} not in (0, 1]")));
        }
        if s == 1.0 {
            return Ok(Self::dirac(0));
        }
        let ratio = 1.0 - s;
        let mut masses = Vec::new();
        let mut term = s;
        let mut remaining = ratio; // P(X > k) after pushing k
        loop {
            masses.push(term);
            if remaining < tol * 1e-6 {
                break;
            }
            term *= ratio;
            remaining *= ratio;
        }
        truncate_suffix(&mut masses, tol);
        Ok(Self::from_raw_missing_tail(masses))
    }

    /// Dense masses, index = value. The last entry is non-zero unless the
    /// measure is all tail.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, k: usize) -> f64 {
        self.masses.get(k).copied().unwrap_or(0.0)
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail
    }

    /// Largest value carrying explicit mass.
    pub fn max_value(&self) -> usize {
        self.masses.len() - 1
    }

    /// `(value, mass)` pairs with positive mass, in increasing order.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.masses.iter().copied().enumerate().filter(|&(_, m)| m > 0.0)
    }

    /// Explicit mass total, `1 - tail` up to rounding.
    pub fn explicit_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Mean over the explicit support. Values hidden in the tail are not
    /// counted; callers needing a bound should inspect [`Pmf::tail_mass`].
    pub fn mean(&self) -> f64 {
        self.masses.iter().enumerate().map(|(k, m)| k as f64 * m).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.masses
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let d = k as f64 - m;
                d * d * p
            })
            .sum()
    }

    /// Characteristic function `sum_k p(k) e^{ikx}`.
    pub fn char_fn(&self, x: f64) -> Complex64 {
        self.masses.iter().enumerate().map(|(k, &p)| Complex64::from_polar(p, k as f64 * x)).sum()
    }

    /// Moment generating function `sum_k p(k) e^{lambda k}` over the explicit
    /// support.
    pub fn mgf(&self, lambda: f64) -> Result<f64> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidParameter(format!("mgf needs lambda >= 0, got {lambda}")));
        }
        Ok(self.masses.iter().enumerate().map(|(k, p)| p * (lambda * k as f64).exp()).sum())
    }

    /// Law of the number of survivors when each unit is kept independently
    /// with probability `prob`.
    pub fn thin(&self, prob: f64) -> Result<Self> {
        check_unit_interval("thinning probability", prob)?;
        let mut out = vec![0.0; self.masses.len()];
        for (m, &pm) in self.masses.iter().enumerate() {
            if pm == 0.0 {
                continue;
            }
            for (n, b) in binomial_pmf(m as u64, prob).into_iter().enumerate() {
                out[n] += pm * b;
            }
        }
        Ok(Self::from_raw(out, self.tail))
    }

    /// Moves the longest suffix with total mass below `tol` into the tail.
    pub fn truncated(mut self, tol: f64) -> Self {
        self.tail += truncate_suffix(&mut self.masses, tol);
        self
    }

    /// Distribution conditioned on the explicit support.
    pub fn conditioned_on_support(&self) -> Self {
        let total = self.explicit_mass();
        Self::from_raw(self.masses.iter().map(|m| m / total).collect(), 0.0)
    }

    pub fn tv_distance(&self, other: &Pmf) -> f64 {
        tv_distance(self, other)
    }

    /// Draws one value. Tail mass is never returned; the draw is conditioned
    /// on the explicit support.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = self.explicit_mass();
        let mut u = rng.random::<f64>() * total;
        for (k, &m) in self.masses.iter().enumerate() {
            if u < m {
                return k;
            }
            u -= m;
        }
        self.max_value()
    }

    /// Precomputes a cumulative table for repeated sampling.
    pub fn sampler(&self) -> PmfSampler {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = self
            .masses
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        let total = acc;
        for c in &mut cdf {
            *c /= total;
        }
        PmfSampler { cdf }
    }
}

/// Inverse-CDF sampler built by [`Pmf::sampler`].
#[derive(Clone, Debug)]
pub struct PmfSampler {
    cdf: Vec<f64>,
}

impl PmfSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>();
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }
}

#[derive(Serialize, Deserialize)]
struct PmfRepr {
    support: Vec<usize>,
    mass: Vec<f64>,
    tail: f64,
}

impl Serialize for Pmf {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (support, mass) = self.support().unzip();
        PmfRepr { support, mass, tail: self.tail }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pmf {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = PmfRepr::deserialize(d)?;
        if repr.support.len() != repr.mass.len() {
            return Err(serde::de::Error::custom("support and mass have different lengths"));
        }
        let pairs: Vec<(usize, f64)> = repr.support.into_iter().zip(repr.mass).collect();
        Pmf::from_pairs(&pairs, repr.tail).map_err(serde::de::Error::custom)
    }
}

/// `1/2 sum_k |p(k) - q(k)|` over the union of the explicit supports.
pub fn tv_distance(p: &Pmf, q: &Pmf) -> f64 {
    let n = p.masses.len().max(q.masses.len());
    let s: f64 = (0..n).map(|k| (p.mass(k) - q.mass(k)).abs()).sum();
    (0.5 * s).min(1.0)
}

/// Empirical measure `(1/L) sum_x delta_{xi_x}` of an occupancy vector.
pub fn empirical_measure(counts: &[usize]) -> Result<Pmf> {
    if counts.is_empty() {
        return Err(Error::EmptyOccupancy);
    }
    let max = counts.iter().copied().max().unwrap_or(0);
    let mut tally = vec![0u64; max + 1];
    for &c in counts {
        tally[c] += 1;
    }
    let l = counts.len() as f64;
    Ok(Pmf::from_raw(tally.into_iter().map(|t| t as f64 / l).collect(), 0.0))
}

/// A probability mass function on pairs of non-negative integers, stored
/// densely in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPmf {
    rows: usize,
    cols: usize,
    masses: Vec<f64>,
    tail: f64,
}

impl JointPmf {
    /// Builds a joint law on `[0, rows) x [0, cols)` from a mass function.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut masses = Vec::with_capacity(rows * cols);
        for h in 0..rows {
            for k in 0..cols {
                masses.push(f(h, k));
            }
        }
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidPmf("negative or non-finite joint mass".into()));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidPmf(format!("joint total mass {total}")));
        }
        Ok(Self { rows, cols, masses, tail: (1.0 - total).max(0.0) })
    }

    /// Builds a joint law from `((h, k), mass)` entries.
    pub fn from_entries(entries: &[((usize, usize), f64)]) -> Result<Self> {
        let rows = entries.iter().map(|((h, _), _)| h + 1).max().unwrap_or(1);
        let cols = entries.iter().map(|((_, k), _)| k + 1).max().unwrap_or(1);
        let mut dense = vec![0.0; rows * cols];
        for &((h, k), m) in entries {
            dense[h * cols + k] += m;
        }
        Self::from_fn(rows, cols, |h, k| dense[h * cols + k])
    }

    /// Product measure `p ⊗ q`; its tail collects the mass outside the
    /// product of explicit supports.
    pub fn product(p: &Pmf, q: &Pmf) -> Self {
        let (rows, cols) = (p.masses.len(), q.masses.len());
        let mut masses = Vec::with_capacity(rows * cols);
        for &a in &p.masses {
            for &b in &q.masses {
                masses.push(a * b);
            }
        }
        let total: f64 = masses.iter().sum();
        Self { rows, cols, masses, tail: (1.0 - total).max(0.0) }
    }

    pub fn mass(&self, h: usize, k: usize) -> f64 {
        if h < self.rows && k < self.cols {
            self.masses[h * self.cols + k]
        } else {
            0.0
        }
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Non-zero entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.masses
            .iter()
            .enumerate()
            .filter(|(_, m)| **m > 0.0)
            .map(move |(i, &m)| ((i / self.cols, i % self.cols), m))
    }

    pub fn marginal_first(&self) -> Pmf {
        let v = (0..self.rows).map(|h| self.masses[h * self.cols..(h + 1) * self.cols].iter().sum()).collect();
        Pmf::from_raw(v, self.tail)
    }

    pub fn marginal_second(&self) -> Pmf {
        let v = (0..self.cols).map(|k| (0..self.rows).map(|h| self.masses[h * self.cols + k]).sum()).collect();
        Pmf::from_raw(v, self.tail)
    }
}

/// `1/2 sum |p(h,k) - q(h,k)|` over the union of the explicit supports.
pub fn joint_tv_distance(p: &JointPmf, q: &JointPmf) -> f64 {
    let rows = p.rows.max(q.rows);
    let cols = p.cols.max(q.cols);
    let mut s = 0.0;
    for h in 0..rows {
        for k in 0..cols {
            s += (p.mass(h, k) - q.mass(h, k)).abs();
        }
    }
    (0.5 * s).min(1.0)
}
