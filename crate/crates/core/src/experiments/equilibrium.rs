//! Convergence of the measure recursion to the fixed point with the same mean.

use std::time::Instant;

use super::report::{ExperimentReport, ReportRow};
use crate::error::Result;
use crate::measures::{empirical_measure, tv_distance, Pmf};
use crate::nonlinear::{fixed_point, iterate_measure, sample_nonlinear_path, DEFAULT_QUEUE_TOLERANCE};
use crate::seeding::stream;
use crate::statistics::ReassignmentLaw;

/// `TV(Q(T), pi_bar)` must fall below this.
pub const EQUILIBRIUM_TV_THRESHOLD: f64 = 1e-6;

/// Path histograms further than this from `pi_bar` raise a warning.
pub const PATH_HISTOGRAM_WARNING: f64 = 0.1;

/// Iterates the recursion from `Bernoulli(r)` for `horizon` steps and records
/// `TV(Q(t), pi_bar)`. A single nonlinear path is simulated alongside; the
/// histogram of its second half is compared with `pi_bar` as a diagnostic.
pub fn equilibrium_experiment(law: ReassignmentLaw, r: f64, horizon: usize, seed: u64) -> Result<ExperimentReport> {
    let started = Instant::now();
    let mut report =
        ExperimentReport::new("equilibrium", serde_json::json!({ "law": law, "r": r, "T": horizon, "seed": seed }));
    let fp = fixed_point(law, r, DEFAULT_QUEUE_TOLERANCE)?;
    report.metric("a_star", fp.a_star);
    report.metric("fixed_point_residual_tv", fp.residual_tv);
    report.metric("fixed_point_mean", fp.pi_bar.mean());

    let measures = iterate_measure(law, &Pmf::bernoulli(r)?, horizon)?;
    let trace: Vec<f64> = measures.iter().map(|q| tv_distance(q, &fp.pi_bar)).collect();
    let last = *trace.last().expect("trace has T + 1 entries");
    report.metric("final_tv", last);
    report.metric("final_mean", measures[horizon].mean());
    let pass = report.check_le("final TV to the fixed point", last, EQUILIBRIUM_TV_THRESHOLD, true);
    report.rows.push(ReportRow {
        l: 0,
        n_or_r: r,
        estimate: last,
        stderr: None,
        bound: Some(EQUILIBRIUM_TV_THRESHOLD),
        pass,
    });
    report.series.insert("tv_trace".into(), trace);

    let path = sample_nonlinear_path(law, &measures, &mut stream(seed, "equilibrium", 0, 0));
    let half = &path[path.len() / 2..];
    if !half.is_empty() {
        let hist = empirical_measure(half)?;
        let d = tv_distance(&hist, &fp.pi_bar);
        report.metric("path_histogram_tv", d);
        report.check_le("path histogram TV", d, PATH_HISTOGRAM_WARNING, false);
    }
    report.finish(started);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_starts_at_equilibrium() {
        let r = equilibrium_experiment(ReassignmentLaw::FermiDirac, 0.3, 50, 0).unwrap();
        assert!(r.metrics["final_tv"] < 1e-9);
        assert!(r.passed);
    }

    #[test]
    fn short_horizon_fails_honestly() {
        let r = equilibrium_experiment(ReassignmentLaw::MaxwellBoltzmann, 0.75, 1, 0).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn be_reaches_the_fixed_point_in_one_step() {
        let r = equilibrium_experiment(ReassignmentLaw::BoseEinstein, 0.5, 1, 0).unwrap();
        assert!(r.series["tv_trace"][1] < 1e-9);
    }
}
