use serde::Serialize;

use super::evolve_measure;
use super::queue::QueueArrivalLaw;
use crate::error::{Error, Result};
use crate::measures::{tv_distance, Pmf};
use crate::statistics::ReassignmentLaw;

const UPPER_DENSITY: f64 = 1.0 - 1e-9;
const MONOTONICITY_GRID: usize = 64;

/// The stationary law of the nonlinear process with prescribed mean.
#[derive(Clone, Debug, Serialize)]
pub struct FixedPoint {
    pub law: ReassignmentLaw,
    pub r: f64,
    /// Arrival density `1 - pi_bar({0})`.
    pub a_star: f64,
    pub pi_bar: Pmf,
    /// `TV(F(pi_bar), pi_bar)`.
    pub residual_tv: f64,
}

/// Mean of the stationary queue law fed by `limit_law(1 - a)`.
pub fn stationary_mean_at(law: ReassignmentLaw, a: f64) -> Result<f64> {
    let arrivals = law.limit_law(1.0 - a)?;
    Ok(QueueArrivalLaw::new(&arrivals)?.stationary_mean())
}

/// Finds the arrival density `a` whose queue has stationary mean `r` by
/// bisection, then solves for the stationary law and checks it is fixed by
/// the measure recursion within `10 tol`.
pub fn fixed_point(law: ReassignmentLaw, r: f64, tol: f64) -> Result<FixedPoint> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidParameter(format!("r = {r} not in [0, 1)")));
    }
    let g = |a: f64| stationary_mean_at(law, a);

    let mut prev = g(0.0)?;
    for i in 1..=MONOTONICITY_GRID {
        let v = g(UPPER_DENSITY * i as f64 / MONOTONICITY_GRID as f64)?;
        if v <= prev {
            return Err(Error::Numerical(format!("stationary mean not increasing in the arrival density for {law}")));
        }
        prev = v;
    }
    if prev < r {
        return Err(Error::InvalidParameter(format!("mean {r} unreachable for {law}")));
    }

    let (mut lo, mut hi) = (0.0f64, UPPER_DENSITY);
    while hi - lo > tol * 1e-2 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? < r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a_star = 0.5 * (lo + hi);
    let arrivals = law.limit_law(1.0 - a_star)?;
    let pi_bar = QueueArrivalLaw::new(&arrivals)?.stationary(tol)?;
    let residual_tv = tv_distance(&evolve_measure(law, &pi_bar)?, &pi_bar);
    if residual_tv > 10.0 * tol {
        return Err(Error::Numerical(format!("fixed point residual {residual_tv:e} exceeds {:e}", 10.0 * tol)));
    }
    Ok(FixedPoint { law, r, a_star, pi_bar, residual_tv })
}
