//! Mixing of the Fermi-Dirac chain from a concentrated start.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use super::mean_and_stderr;
use super::report::{ExperimentReport, ReportRow};
use crate::error::{Error, Result};
use crate::grbb::{
    count_compositions, exact_mixing_time, MixingStart, OccupancyVector, TransitionMatrix, STATE_SPACE_GUARD,
};
use crate::seeding::stream;
use crate::statistics::ReassignmentLaw;

/// Below this many sites a failed simulated bound check is only a warning.
pub const SMALL_SYSTEM: usize = 100;

const MAX_HITTING_STEPS: usize = 100_000_000;

/// `-5 L ln(1 - (N + 1) / L)`; infinite once `N + 1 >= L`.
pub fn fd_mixing_bound(l: usize, n: usize) -> f64 {
    let ratio = (n + 1) as f64 / l as f64;
    if ratio >= 1.0 {
        f64::INFINITY
    } else {
        -5.0 * l as f64 * (-ratio).ln_1p()
    }
}

/// Steps until no bin of the Fermi-Dirac chain holds more than one ball.
pub fn fd_hitting_time<R: Rng + ?Sized>(start: &OccupancyVector, rng: &mut R) -> Result<usize> {
    if start.total() > start.sites() {
        return Err(Error::StatisticUndefined { l: start.sites(), n: start.total() });
    }
    let mut state = start.clone();
    for t in 0..=MAX_HITTING_STEPS {
        if state.iter().all(|&c| c <= 1) {
            return Ok(t);
        }
        state.step(ReassignmentLaw::FermiDirac, rng);
    }
    Err(Error::Numerical(format!("no hitting within {MAX_HITTING_STEPS} steps")))
}

fn quantile(sorted: &[usize], p: f64) -> f64 {
    let idx = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx] as f64
}

/// Simulates the hitting time from `(N, 0, ..., 0)` and compares
/// `4 (E[tau] + 1) + 1` with [`fd_mixing_bound`]. Small state spaces also get
/// the exact mixing time at `eps = 1/4`.
pub fn mixing_experiment(l: usize, n: usize, replicas: usize, seed: u64) -> Result<ExperimentReport> {
    if n < 2 || n > l {
        return Err(Error::InvalidParameter(format!("mixing experiment needs 2 <= N <= L, got L = {l}, N = {n}")));
    }
    if replicas == 0 {
        return Err(Error::InvalidParameter("replicas must be positive".into()));
    }
    let started = Instant::now();
    let mut report = ExperimentReport::new(
        "mixing",
        serde_json::json!({ "law": "fermi-dirac", "L": l, "N": n, "replicas": replicas, "seed": seed }),
    );
    let start = OccupancyVector::concentrated(l, n)?;
    let mut times = (0..replicas)
        .into_par_iter()
        .map(|r| fd_hitting_time(&start, &mut stream(seed, "mixing", l as u64, r as u64)))
        .collect::<Result<Vec<usize>>>()?;
    times.sort_unstable();
    let as_f64: Vec<f64> = times.iter().map(|&t| t as f64).collect();
    let (mean, se) = mean_and_stderr(&as_f64);
    report.metric("mean_hitting_time", mean);
    report.metric("hitting_time_stderr", se);
    for (name, p) in [("q50", 0.5), ("q90", 0.9), ("q99", 0.99)] {
        report.metric(&format!("hitting_time_{name}"), quantile(&times, p));
    }
    report.metric("hitting_time_max", *times.last().expect("replicas > 0") as f64);

    let bound = fd_mixing_bound(l, n);
    let estimate = 4.0 * (mean + 1.0) + 1.0;
    report.metric("mixing_bound", bound);
    if bound.is_infinite() {
        report.warnings.push(format!("N + 1 >= L: the bound is infinite for L = {l}, N = {n}"));
    }
    let hard = l >= SMALL_SYSTEM;
    let pass = report.check_le("simulated mixing bound", estimate, bound, hard);
    report.rows.push(ReportRow {
        l,
        n_or_r: n as f64,
        estimate,
        stderr: Some(4.0 * se),
        bound: Some(bound),
        pass: pass || !hard,
    });

    if count_compositions(l, n) <= STATE_SPACE_GUARD as u128 {
        let matrix = TransitionMatrix::new(ReassignmentLaw::FermiDirac, l, n)?;
        let t_mix = exact_mixing_time(&matrix, &MixingStart::All, 0.25)? as f64;
        report.metric("exact_mixing_time", t_mix);
        report.check_le("exact mixing bound", t_mix, bound, false);
        report.rows.push(ReportRow {
            l,
            n_or_r: n as f64,
            estimate: t_mix,
            stderr: None,
            bound: Some(bound),
            pass: true,
        });
    }
    report.series.insert("hitting_times".into(), as_f64);
    report.finish(started);
    Ok(report)
}
