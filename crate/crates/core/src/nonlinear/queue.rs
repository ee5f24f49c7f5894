//! Discrete-time queue `zeta(t+1) = zeta - 1(zeta > 0) + B`, `B ~ mu`.
//!
//! The stationary law is computed by iterating the one-step kernel on
//! measures from `delta_0`. The closed-form characteristic function and mean
//! are kept as independent validators of that solver.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use super::{convolve, serve_one};
use crate::error::{Error, Result};
use crate::measures::{tv_distance, Pmf};

pub const DEFAULT_QUEUE_TOLERANCE: f64 = 1e-10;

/// Suffix mass dropped per kernel iteration. Far below f64 resolution of
/// the unit mass, it only bounds the support.
const KERNEL_TAIL_TOLERANCE: f64 = 1e-20;
/// Arrival means this close to one are treated as critical.
const STABILITY_MARGIN: f64 = 1e-10;
const MAX_ITERATIONS: usize = 5_000_000;
const VALIDATION_TOLERANCE: f64 = 1e-8;
const VALIDATION_POINTS: [f64; 4] = [0.1, 0.5, 1.0, 2.0];
/// Relative share of the moment generating function allowed to hide in the
/// truncated tail.
const MGF_TAIL_SHARE: f64 = 1e-6;

/// An arrival law with mean below one.
///
/// The law is conditioned on its explicit support so that the kernel
/// conserves mass exactly; the discarded tail is kept for reporting.
#[derive(Clone, Debug, PartialEq)]
pub struct QueueArrivalLaw {
    mu: Pmf,
    discarded_tail: f64,
}

impl QueueArrivalLaw {
    pub fn new(mu: &Pmf) -> Result<Self> {
        // tail mass sits beyond the explicit support, so this bounds the mean from below
        let mean = mu.mean() + mu.tail_mass() * (mu.max_value() + 1) as f64;
        if mean >= 1.0 - STABILITY_MARGIN {
            return Err(Error::UnstableQueue { mean });
        }
        let conditioned = mu.conditioned_on_support();
        Ok(Self { mu: conditioned, discarded_tail: mu.tail_mass() })
    }

    pub fn law(&self) -> &Pmf {
        &self.mu
    }

    pub fn discarded_tail(&self) -> f64 {
        self.discarded_tail
    }

    pub fn mean(&self) -> f64 {
        self.mu.mean()
    }

    pub fn step<R: Rng + ?Sized>(&self, zeta: usize, rng: &mut R) -> usize {
        zeta.saturating_sub(1) + self.mu.sample(rng)
    }

    /// One kernel application on a measure.
    pub fn kernel(&self, pi: &[f64]) -> Vec<f64> {
        convolve(&serve_one(pi), self.mu.masses())
    }

    /// `(1 - m) mu^(x) (e^{ix} - 1) / (e^{ix} - mu^(x))`, equal to one at
    /// multiples of `2 pi`.
    pub fn stationary_char_fn(&self, x: f64) -> Complex64 {
        let reduced = x.rem_euclid(std::f64::consts::TAU);
        if reduced < 1e-12 || std::f64::consts::TAU - reduced < 1e-12 {
            return Complex64::new(1.0, 0.0);
        }
        let phase = Complex64::from_polar(1.0, x);
        let mu_hat = self.mu.char_fn(x);
        (1.0 - self.mean()) * mu_hat * (phase - 1.0) / (phase - mu_hat)
    }

    /// `(sigma^2 + m (1 - m)) / (2 (1 - m))`.
    pub fn stationary_mean(&self) -> f64 {
        let m = self.mean();
        (self.mu.variance() + m * (1.0 - m)) / (2.0 * (1.0 - m))
    }

    /// Stationary law by forward kernel iteration from `delta_0`, stopped
    /// once both the last change and its geometric extrapolation fall below
    /// `tol / 10`. Cross-checked against the closed forms before returning.
    pub fn stationary(&self, tol: f64) -> Result<Pmf> {
        if tol.is_nan() || tol <= 0.0 {
            return Err(Error::InvalidParameter(format!("tolerance {tol}")));
        }
        let target = tol / 10.0;
        let mut pi = vec![1.0];
        let mut prev_change = f64::INFINITY;
        let mut converged = false;
        for _ in 0..MAX_ITERATIONS {
            let mut next = self.kernel(&pi);
            let mut dropped = 0.0;
            while next.len() > 1 {
                let last = *next.last().expect("non-empty");
                if dropped + last >= KERNEL_TAIL_TOLERANCE {
                    break;
                }
                dropped += last;
                next.pop();
            }
            let n = pi.len().max(next.len());
            let change =
                0.5 * (0..n).map(|k| (pi.get(k).unwrap_or(&0.0) - next.get(k).unwrap_or(&0.0)).abs()).sum::<f64>();
            pi = next;
            let ratio = (change / prev_change).min(1.0);
            prev_change = change;
            let extrapolated = if ratio < 1.0 { change * ratio / (1.0 - ratio) } else { f64::INFINITY };
            if change < target && (extrapolated < target || change == 0.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numerical(format!("queue solver did not converge in {MAX_ITERATIONS} iterations")));
        }
        let pi = Pmf::from_raw_missing_tail(pi);
        self.validate(&pi)?;
        Ok(pi)
    }

    fn validate(&self, pi: &Pmf) -> Result<()> {
        let step = Pmf::from_raw_missing_tail(self.kernel(pi.masses()));
        let residual = tv_distance(&step, pi);
        if residual > 10.0 * VALIDATION_TOLERANCE {
            return Err(Error::Numerical(format!("kernel residual {residual:e}")));
        }
        let mean_gap = (pi.mean() - self.stationary_mean()).abs();
        if mean_gap > VALIDATION_TOLERANCE {
            return Err(Error::Numerical(format!("stationary mean differs from closed form by {mean_gap:e}")));
        }
        for x in VALIDATION_POINTS {
            let gap = (pi.char_fn(x) - self.stationary_char_fn(x)).norm();
            if gap > VALIDATION_TOLERANCE {
                return Err(Error::Numerical(format!(
                    "characteristic function differs from closed form by {gap:e} at x = {x}"
                )));
            }
        }
        Ok(())
    }

    /// Drift constants `gamma = 1 - e^{-lambda} M(lambda)` and
    /// `C = M(lambda) (1 - e^{-lambda})`, `M` the moment generating function.
    pub fn drift_constants(&self, lambda: f64) -> Result<DriftConstants> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::InvalidParameter(format!("drift constants need lambda > 0, got {lambda}")));
        }
        let mgf = self.mu.mgf(lambda)?;
        let contraction = (-lambda).exp() * mgf;
        let hidden = self.discarded_tail * (lambda * (self.mu.max_value() + 1) as f64).exp();
        // the truncated mgf is a lower bound, so an out-of-range verdict is safe
        if hidden > MGF_TAIL_SHARE * mgf && contraction < 1.0 {
            return Err(Error::TruncatedMgf { lambda });
        }
        Ok(DriftConstants {
            lambda,
            gamma: 1.0 - contraction,
            c: mgf * (1.0 - (-lambda).exp()),
            in_range: contraction > 0.0 && contraction < 1.0,
        })
    }
}

/// Constants of the geometric drift inequality
/// `E[e^{lambda zeta(1)} | zeta] - e^{lambda zeta} <= -gamma e^{lambda zeta} + C`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DriftConstants {
    pub lambda: f64,
    pub gamma: f64,
    pub c: f64,
    /// Whether `gamma` lies in `(0, 1)`.
    pub in_range: bool,
}

pub fn queue_step<R: Rng + ?Sized>(mu: &Pmf, zeta: usize, rng: &mut R) -> usize {
    zeta.saturating_sub(1) + mu.sample(rng)
}

pub fn queue_stationary(mu: &Pmf, tol: f64) -> Result<Pmf> {
    QueueArrivalLaw::new(mu)?.stationary(tol)
}

pub fn stationary_char_fn(mu: &Pmf, x: f64) -> Result<Complex64> {
    Ok(QueueArrivalLaw::new(mu)?.stationary_char_fn(x))
}

pub fn stationary_mean(mu: &Pmf) -> Result<f64> {
    Ok(QueueArrivalLaw::new(mu)?.stationary_mean())
}

pub fn drift_constants(mu: &Pmf, lambda: f64) -> Result<DriftConstants> {
    QueueArrivalLaw::new(mu)?.drift_constants(lambda)
}
