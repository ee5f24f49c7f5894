use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use grbb_core::couplings::CouplingKind;
use grbb_core::experiments::{
    chaos_sweep, coupling_experiment, equilibrium_experiment, mixing_experiment, tv_bound_suite, write_report,
    ChaosConfig, ExperimentReport, ReportFormat, ReportRow,
};
use grbb_core::nonlinear::{fixed_point, QueueArrivalLaw, DEFAULT_QUEUE_TOLERANCE};
use grbb_core::seeding::stream;
use grbb_core::{OccupancyVector, Pmf, ReassignmentLaw};

use crate::config::{Plan, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] grbb_core::Error),
    #[error("writing report: {0}")]
    Io(#[from] std::io::Error),
}

/// Slope threshold applied by `chaos` to the fitted mean deviation.
const CHAOS_SLOPE_THRESHOLD: f64 = -0.4;
/// Fixed points are accepted when `TV(F(pi), pi)` is below this.
const FIXED_POINT_RESIDUAL: f64 = 1e-8;

pub fn run(cfg: &RunConfig) -> Result<ExperimentReport, RunError> {
    let seed = cfg.seed;
    let mut trajectory_csv = None;
    let mut report = match &cfg.plan {
        Plan::Simulate { law, l, n, horizon } => {
            let (report, csv) = simulate(*law, *l, *n, *horizon, seed)?;
            trajectory_csv = Some(csv);
            report
        }
        Plan::Chaos { law, l_grid, horizon, delta, replicas, init } => chaos_sweep(&ChaosConfig {
            law: *law,
            l_grid: l_grid.clone(),
            horizon: *horizon,
            delta: *delta,
            replicas: *replicas,
            init_law: init.clone(),
            seed,
            slope_threshold: CHAOS_SLOPE_THRESHOLD,
        })?,
        Plan::TvCheck { law, l_grid } => tv_bound_suite(*law, l_grid)?,
        Plan::CouplingTest { law, l, n, samples } => {
            coupling_experiment(CouplingKind::try_from(*law)?, *l, *n, *samples, seed)?
        }
        Plan::Mixing { l, n, replicas } => mixing_experiment(*l, *n, *replicas, seed)?,
        Plan::Stationary { arrival, lambda } => stationary(arrival, *lambda)?,
        Plan::FixedPoint { law, r } => fixed_point_report(*law, *r)?,
        Plan::Equilibrium { law, r, horizon } => equilibrium_experiment(*law, *r, *horizon, seed)?,
    };
    report.config = serde_json::json!({ "run": cfg, "experiment": report.config });
    if let Some(stem) = &cfg.output {
        match trajectory_csv {
            Some(csv) => write_simulation(&report, &csv, stem, cfg.format)?,
            None => {
                write_report(&report, stem, cfg.format)?;
            }
        }
    }
    Ok(report)
}

/// Runs one trajectory from a state drawn from the law itself. Returns the
/// report and a `t,value,mass` table of the empirical measures.
fn simulate(
    law: ReassignmentLaw,
    l: usize,
    n: usize,
    horizon: usize,
    seed: u64,
) -> Result<(ExperimentReport, String), RunError> {
    let started = Instant::now();
    let mut report = ExperimentReport::new("simulate", serde_json::json!({ "law": law, "L": l, "N": n, "T": horizon }));
    let mut rng = stream(seed, "simulate", l as u64, 0);
    let mut state = OccupancyVector::new(law.sample_occupancy(l, n, &mut rng)?)?;
    let mut csv = String::from("t,value,mass\n");
    let mut worst_drift = 0usize;
    let mut occupied = Vec::with_capacity(horizon + 1);
    for t in 0..=horizon {
        if t > 0 {
            state.step(law, &mut rng);
        }
        worst_drift = worst_drift.max(state.total().abs_diff(n));
        occupied.push(state.occupied() as f64 / l as f64);
        for (value, mass) in state.empirical_measure().support() {
            writeln!(csv, "{t},{value},{mass}").expect("writing to a string");
        }
    }
    report.check_le("ball count drift", worst_drift as f64, 0.0, true);
    report.metric("final_occupied_fraction", *occupied.last().expect("horizon + 1 entries"));
    report.series.insert("occupied_fraction".into(), occupied);
    report.series.insert("final_state".into(), state.iter().map(|&c| c as f64).collect());
    report.finish(started);
    Ok((report, csv))
}

fn write_simulation(report: &ExperimentReport, csv: &str, stem: &Path, format: ReportFormat) -> std::io::Result<()> {
    if matches!(format, ReportFormat::Json | ReportFormat::Both) {
        write_report(report, stem, ReportFormat::Json)?;
    }
    if matches!(format, ReportFormat::Csv | ReportFormat::Both) {
        if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(stem.with_extension("csv"), csv)?;
    }
    Ok(())
}

fn stationary(arrival: &Pmf, lambda: Option<f64>) -> Result<ExperimentReport, RunError> {
    let started = Instant::now();
    let mut report = ExperimentReport::new("stationary", serde_json::json!({ "arrival": arrival, "lambda": lambda }));
    let queue = QueueArrivalLaw::new(arrival)?;
    // the solver validates itself against the closed forms
    let pi = queue.stationary(DEFAULT_QUEUE_TOLERANCE)?;
    let closed = queue.stationary_mean();
    report.metric("arrival_mean", queue.mean());
    report.metric("stationary_mean", pi.mean());
    report.metric("closed_form_mean", closed);
    report.metric("stationary_tail", pi.tail_mass());
    report.check_le("mean against closed form", (pi.mean() - closed).abs(), 1e-8, true);
    for (value, mass) in pi.support() {
        report.rows.push(ReportRow {
            l: 0,
            n_or_r: value as f64,
            estimate: mass,
            stderr: None,
            bound: None,
            pass: true,
        });
    }
    if let Some(lambda) = lambda {
        let d = queue.drift_constants(lambda)?;
        report.metric("drift_gamma", d.gamma);
        report.metric("drift_c", d.c);
        if !d.in_range {
            report.warnings.push(format!("lambda = {lambda} gives gamma = {} outside (0, 1)", d.gamma));
        }
    }
    report.series.insert("pi".into(), pi.masses().to_vec());
    report.finish(started);
    Ok(report)
}

fn fixed_point_report(law: ReassignmentLaw, r: f64) -> Result<ExperimentReport, RunError> {
    let started = Instant::now();
    let mut report = ExperimentReport::new("fixed-point", serde_json::json!({ "law": law, "r": r }));
    let fp = fixed_point(law, r, DEFAULT_QUEUE_TOLERANCE)?;
    report.metric("a_star", fp.a_star);
    report.metric("residual_tv", fp.residual_tv);
    report.metric("mean", fp.pi_bar.mean());
    report.check_le("fixed point residual", fp.residual_tv, FIXED_POINT_RESIDUAL, true);
    report.rows.push(ReportRow { l: 0, n_or_r: r, estimate: fp.a_star, stderr: None, bound: None, pass: true });
    report.series.insert("pi_bar".into(), fp.pi_bar.masses().to_vec());
    report.finish(started);
    Ok(report)
}
