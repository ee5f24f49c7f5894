//! Monte Carlo check of a coupling: mismatch probability against the exact
//! gap and the bound, plus goodness of fit of both coupled pairs.

use std::time::Instant;

use super::report::{ExperimentReport, ReportRow};
use crate::couplings::{coupling_samples, mismatch_bound, CouplingKind};
use crate::error::{Error, Result};
use crate::gof::chi_square_pairs;
use crate::measures::{joint_tv_distance, JointPmf};

/// Goodness-of-fit p-values below this fail the run.
pub const GOF_P_VALUE_FLOOR: f64 = 1e-3;

/// Standard errors of slack allowed when comparing the mismatch estimate
/// with exact quantities.
pub const MISMATCH_SIGMAS: f64 = 3.0;

pub fn coupling_experiment(
    kind: CouplingKind,
    l: usize,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    if samples < 1000 {
        return Err(Error::InvalidParameter(format!("coupling test needs at least 1000 samples, got {samples}")));
    }
    let started = Instant::now();
    let law = kind.law();
    let mut report = ExperimentReport::new(
        "coupling-test",
        serde_json::json!({ "law": law, "L": l, "N": n, "samples": samples, "seed": seed }),
    );
    let draws = coupling_samples(kind, l, n, samples, seed)?;
    let hits = draws.iter().filter(|s| s.x2 != s.y2).count();
    let p = hits as f64 / samples as f64;
    let se = (p * (1.0 - p) / samples as f64).sqrt();
    let joint = law.two_site_joint(l, n)?;
    let marginal = law.one_site_marginal(l, n)?;
    let product = JointPmf::product(&marginal, &marginal);
    let exact_gap = joint_tv_distance(&joint, &product);
    let bound = mismatch_bound(l, n);
    report.metric("mismatch_probability", p);
    report.metric("mismatch_stderr", se);
    report.metric("exact_marginal_product_gap", exact_gap);

    let slack = MISMATCH_SIGMAS * se;
    // a coupling can only overstate the distance between its marginals
    report.check_le("exact gap below mismatch", exact_gap - slack, p, true);
    let pass = report.check_le("mismatch below bound", p - slack, bound, true);
    report.rows.push(ReportRow { l, n_or_r: n as f64, estimate: p, stderr: Some(se), bound: Some(bound), pass });

    let fit_x = chi_square_pairs(draws.iter().map(|s| (s.x1, s.x2)), &joint);
    let fit_y = chi_square_pairs(draws.iter().map(|s| (s.y1, s.y2)), &product);
    for (name, fit) in [("coupled pair", fit_x), ("independent pair", fit_y)] {
        report.metric(&format!("{name} chi-square p-value"), fit.p_value);
        report.check_le(format!("{name} goodness of fit"), GOF_P_VALUE_FLOOR, fit.p_value, true);
    }
    report.finish(started);
    Ok(report)
}
