//! Pearson chi-square goodness-of-fit against exact mass functions.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::measures::{JointPmf, Pmf};

/// Cells with expected count below this are pooled.
const MIN_EXPECTED: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Tests observed counts against cell probabilities. Probability not covered
/// by the cells forms an extra cell holding the remaining observations; cells
/// with small expected counts are pooled.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> ChiSquare {
    assert_eq!(observed.len(), probs.len(), "one probability per cell");
    let n: u64 = observed.iter().sum();
    let nf = n as f64;
    let mut cells: Vec<(f64, f64)> = observed.iter().zip(probs).map(|(&o, &p)| (o as f64, p * nf)).collect();
    if cells.iter().any(|&(o, e)| e == 0.0 && o > 0.0) {
        return ChiSquare { statistic: f64::INFINITY, dof: cells.len().saturating_sub(1), p_value: 0.0 };
    }
    let covered: f64 = probs.iter().sum();
    if covered < 1.0 {
        let rest_obs = nf - cells.iter().map(|c| c.0).sum::<f64>();
        cells.push((rest_obs.max(0.0), (1.0 - covered) * nf));
    }

    let (mut big, small): (Vec<_>, Vec<_>) = cells.into_iter().partition(|c| c.1 >= MIN_EXPECTED);
    let pooled = small.iter().fold((0.0, 0.0), |acc, c| (acc.0 + c.0, acc.1 + c.1));
    if pooled.1 > 0.0 || pooled.0 > 0.0 {
        if pooled.1 >= MIN_EXPECTED || big.is_empty() {
            big.push(pooled);
        } else {
            let smallest = big.iter_mut().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
            smallest.0 += pooled.0;
            smallest.1 += pooled.1;
        }
    }
    let statistic: f64 = big
        .iter()
        .map(|&(o, e)| {
            if e > 0.0 {
                (o - e).powi(2) / e
            } else if o > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .sum();
    let dof = big.len().saturating_sub(1);
    let p_value = if dof == 0 {
        if statistic == 0.0 {
            1.0
        } else {
            0.0
        }
    } else if statistic.is_infinite() {
        0.0
    } else {
        ChiSquared::new(dof as f64).expect("positive dof").sf(statistic)
    };
    ChiSquare { statistic, dof, p_value }
}

/// Tests draws against a single-site law.
pub fn chi_square_values(values: impl IntoIterator<Item = usize>, law: &Pmf) -> ChiSquare {
    let mut counts = vec![0u64; law.masses().len()];
    let mut outside = 0u64;
    for v in values {
        match counts.get_mut(v) {
            Some(c) => *c += 1,
            None => outside += 1,
        }
    }
    let mut probs = law.masses().to_vec();
    if outside > 0 {
        // values outside the support: an impossible cell
        counts.push(outside);
        probs.push(0.0);
    }
    chi_square(&counts, &probs)
}

/// Tests draws of pairs against a joint law.
pub fn chi_square_pairs(pairs: impl IntoIterator<Item = (usize, usize)>, law: &JointPmf) -> ChiSquare {
    let (rows, cols) = law.dims();
    let mut counts = vec![0u64; rows * cols];
    let mut outside = 0u64;
    for (h, k) in pairs {
        if h < rows && k < cols {
            counts[h * cols + k] += 1;
        } else {
            outside += 1;
        }
    }
    let mut probs: Vec<f64> = (0..rows * cols).map(|i| law.mass(i / cols, i % cols)).collect();
    if outside > 0 {
        counts.push(outside);
        probs.push(0.0);
    }
    chi_square(&counts, &probs)
}
