//! The mean-field side: the deterministic measure recursion, the
//! single-particle nonlinear process, the discrete-time queue with
//! deterministic unit service and its stationary law, and the fixed point
//! with prescribed mean.

mod fixed_point;
mod queue;

use rand::Rng;

use crate::error::Result;
use crate::measures::Pmf;
use crate::statistics::ReassignmentLaw;

pub use fixed_point::{fixed_point, stationary_mean_at, FixedPoint};
pub use queue::{
    drift_constants, queue_stationary, queue_step, stationary_char_fn, stationary_mean, DriftConstants,
    QueueArrivalLaw, DEFAULT_QUEUE_TOLERANCE,
};

/// Per-step truncation of the measure recursion.
pub const EVOLVE_TAIL_TOLERANCE: f64 = 1e-14;

pub(crate) fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Law of `eta - 1(eta > 0)` when `eta ~ q`.
pub(crate) fn serve_one(q: &[f64]) -> Vec<f64> {
    if q.len() == 1 {
        return q.to_vec();
    }
    let mut out = q[1..].to_vec();
    out[0] += q[0];
    out
}

/// One step of the measure recursion:
/// `F(q)(n) = q(0) mu(n) + sum_{k=1}^{n+1} q(k) mu(n-k+1)` with `mu = psi(q)`.
pub fn evolve_measure(law: ReassignmentLaw, q: &Pmf) -> Result<Pmf> {
    let mu = law.limit_law_truncated(q.mass(0), EVOLVE_TAIL_TOLERANCE)?;
    let next = convolve(&serve_one(q.masses()), mu.masses());
    Ok(Pmf::from_raw(next, q.tail_mass() + mu.tail_mass()).truncated(EVOLVE_TAIL_TOLERANCE))
}

/// `Q(0) = q0, Q(t+1) = F(Q(t))` for `t < horizon`.
pub fn iterate_measure(law: ReassignmentLaw, q0: &Pmf, horizon: usize) -> Result<Vec<Pmf>> {
    let mut out = Vec::with_capacity(horizon + 1);
    out.push(q0.clone());
    for t in 0..horizon {
        let next = evolve_measure(law, &out[t])?;
        out.push(next);
    }
    Ok(out)
}

/// One path `eta(0..=T)` of the nonlinear process given its marginal laws
/// `Q(0..=T)`; the arrival at step `t` is drawn from `psi(Q(t))`.
pub fn sample_nonlinear_path<R: Rng + ?Sized>(law: ReassignmentLaw, measures: &[Pmf], rng: &mut R) -> Vec<usize> {
    let Some(first) = measures.first() else {
        return Vec::new();
    };
    let mut eta = first.sample(rng);
    let mut path = Vec::with_capacity(measures.len());
    path.push(eta);
    for q in &measures[..measures.len() - 1] {
        eta = eta.saturating_sub(1) + law.sample_limit(q.mass(0), rng);
        path.push(eta);
    }
    path
}

/// Simulates `eta(0..=T)` of the nonlinear process started from `q0`.
pub fn simulate_nonlinear_path<R: Rng + ?Sized>(
    law: ReassignmentLaw,
    q0: &Pmf,
    horizon: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let measures = iterate_measure(law, q0, horizon)?;
    Ok(sample_nonlinear_path(law, &measures, rng))
}
