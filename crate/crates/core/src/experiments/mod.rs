//! Reproducible experiment harnesses. Each returns an [`ExperimentReport`]
//! echoing its configuration, per-point rows, named checks and warnings.

mod chaos;
mod coupling;
mod equilibrium;
mod mixing;
mod report;
mod tv_suite;

pub use chaos::{chaos_sweep, ChaosConfig, MIN_REPLICAS};
pub use coupling::{coupling_experiment, GOF_P_VALUE_FLOOR, MISMATCH_SIGMAS};
pub use equilibrium::{equilibrium_experiment, EQUILIBRIUM_TV_THRESHOLD, PATH_HISTOGRAM_WARNING};
pub use mixing::{fd_hitting_time, fd_mixing_bound, mixing_experiment, SMALL_SYSTEM};
pub use report::{write_report, Check, ExperimentReport, ReportFormat, ReportRow};
pub use tv_suite::{fd_gap_closed_form, suite_n_grid, tv_bound_suite, two_site_bound, FD_EQUALITY_TOLERANCE};

/// Sample mean and its standard error.
pub(crate) fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Least-squares slope of `ln y` against `ln x`. `None` unless there are at
/// least two points, all with positive coordinates, and the `x` differ.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}
