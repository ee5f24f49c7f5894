//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails. Oracles here are computed independently of the library
//! where the library computes the same quantity.

use std::process::ExitCode;
use std::time::Instant;

use grbb_core::couplings::{coupling_samples, CouplingKind};
use grbb_core::experiments::{
    chaos_sweep, coupling_experiment, equilibrium_experiment, mixing_experiment, ChaosConfig,
};
use grbb_core::grbb::OccupancyVector;
use grbb_core::measures::{joint_tv_distance, tv_distance, JointPmf, Pmf};
use grbb_core::nonlinear::{evolve_measure, fixed_point, iterate_measure, QueueArrivalLaw};
use grbb_core::seeding::stream;
use grbb_core::ReassignmentLaw::{self, BoseEinstein, FermiDirac, MaxwellBoltzmann};
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: grbb_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// `ln k!` for `k < len` by direct summation.
fn ln_factorials(len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for k in 1..len {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

fn binom_u128(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        acc = acc * (n as u128 - i) / (i + 1);
    }
    acc
}

/// Half the l1 distance between two dense tables indexed by `(h, k)`.
fn table_tv(p: &dyn Fn(usize, usize) -> f64, q: &dyn Fn(usize, usize) -> f64, size: usize) -> f64 {
    let mut s = 0.0;
    for h in 0..size {
        for k in 0..size {
            s += (p(h, k) - q(h, k)).abs();
        }
    }
    0.5 * s
}

fn criterion_1() -> Outcome {
    let (mut worst, mut pairs) = (0.0f64, 0);
    for l in 2..=30u64 {
        for n in 0..=l {
            pairs += 1;
            let total = binom_u128(l, n) as f64;
            // two-site counts: remaining N-h-k ones among L-2 sites
            let joint = |h: usize, k: usize| {
                if h > 1 || k > 1 || (h + k) as u64 > n {
                    0.0
                } else {
                    binom_u128(l - 2, n - (h + k) as u64) as f64 / total
                }
            };
            let rho = n as f64 / l as f64;
            let bern = |h: usize| {
                if h == 0 {
                    1.0 - rho
                } else if h == 1 {
                    rho
                } else {
                    0.0
                }
            };
            let oracle = table_tv(&joint, &|h, k| bern(h) * bern(k), 2);
            if l <= 12 {
                // full enumeration of subsets as bit masks
                let mut counts = [[0u64; 2]; 2];
                for mask in 0u32..(1 << l) {
                    if u64::from(mask.count_ones()) == n {
                        counts[(mask & 1) as usize][((mask >> 1) & 1) as usize] += 1;
                    }
                }
                let brute = |h: usize, k: usize| counts[h][k] as f64 / total;
                let b = table_tv(&brute, &|h, k| bern(h) * bern(k), 2);
                ensure((b - oracle).abs() < 1e-13, || format!("enumeration disagrees at L={l} N={n}"))?;
            }
            let closed = 2.0 * n as f64 / (l * (l - 1)) as f64 * (1.0 - rho);
            let gap = lib(FermiDirac.condition1_gap(l as usize, n as usize))?;
            ensure((oracle - closed).abs() <= 1e-12 && (gap - closed).abs() <= 1e-12, || {
                format!("L={l} N={n}: oracle {oracle:e}, library {gap:e}, closed form {closed:e}")
            })?;
            worst = worst.max((gap - closed).abs());
        }
    }
    Ok(format!("max |gap - closed form| = {worst:.1e} over {pairs} pairs"))
}

fn occupancy_grid() -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for l in (10..=200).step_by(10) {
        let mut ns = vec![0, 1, l / 4, l / 2, l];
        ns.dedup();
        out.extend(ns.into_iter().map(|n| (l, n)));
    }
    out
}

fn criterion_2() -> Outcome {
    let ln_fact = ln_factorials(512);
    let mut worst_ratio = 0.0f64;
    for (l, n) in occupancy_grid() {
        let (lf, rho) = (l as f64, n as f64 / l as f64);
        let tri = |h: usize, k: usize| {
            if h + k > n {
                return 0.0;
            }
            let r = n - h - k;
            (ln_fact[n] - ln_fact[h] - ln_fact[k] - ln_fact[r] - (h + k) as f64 * lf.ln()
                + r as f64 * (1.0 - 2.0 / lf).ln())
            .exp()
        };
        let pois = |h: usize| (-rho + h as f64 * rho.ln() - ln_fact[h]).exp();
        let pois = |h: usize| if rho == 0.0 { f64::from(h == 0) } else { pois(h) };
        // mass beyond n + 40 is below 1e-40 for rho <= 1
        let oracle = table_tv(&tri, &|h, k| pois(h) * pois(k), n + 40);
        let gap = lib(MaxwellBoltzmann.condition1_gap(l, n))?;
        ensure((gap - oracle).abs() < 1e-10, || format!("L={l} N={n}: library {gap:e} vs oracle {oracle:e}"))?;
        let bound = 4.0 * n as f64 / (lf * lf);
        ensure(gap <= bound, || format!("L={l} N={n}: gap {gap:e} exceeds {bound:e}"))?;
        if n > 0 {
            worst_ratio = worst_ratio.max(gap / bound);
        }
    }
    Ok(format!("max gap / (4N/L^2) = {worst_ratio:.3}"))
}

fn criterion_3() -> Outcome {
    let ln_fact = ln_factorials(1024);
    let ln_binom = |a: usize, b: usize| ln_fact[a] - ln_fact[b] - ln_fact[a - b];
    let (mut worst_two, mut worst_one) = (0.0f64, 0.0f64);
    for (l, n) in occupancy_grid() {
        let (lf, rho) = (l as f64, n as f64 / l as f64);
        let ln_total = ln_binom(n + l - 1, l - 1);
        // remaining N-h-k balls in L-2 bins
        let joint = |h: usize, k: usize| {
            if h + k > n {
                0.0
            } else {
                (ln_binom(n - h - k + l - 3, l - 3) - ln_total).exp()
            }
        };
        let marginal = |h: usize| {
            if h > n {
                0.0
            } else {
                (ln_binom(n - h + l - 2, l - 2) - ln_total).exp()
            }
        };
        let s = 1.0 / (1.0 + rho);
        let geom = |h: usize| s * (1.0 - s).powi(h as i32);
        // geometric tail beyond n + 200 is below 1e-60 for rho <= 1
        let size = n + 200;
        let oracle_two = table_tv(&joint, &|h, k| geom(h) * geom(k), size);
        let oracle_one: f64 = 0.5 * (0..size).map(|h| (marginal(h) - geom(h)).abs()).sum::<f64>();
        let gap = lib(BoseEinstein.condition1_gap(l, n))?;
        let one = lib(BoseEinstein.one_site_gap(l, n))?;
        ensure((gap - oracle_two).abs() < 1e-10 && (one - oracle_one).abs() < 1e-10, || {
            format!("L={l} N={n}: library ({gap:e}, {one:e}) vs oracle ({oracle_two:e}, {oracle_one:e})")
        })?;
        let bound = 14.0 * n as f64 / (lf * lf);
        ensure(gap <= bound, || format!("L={l} N={n}: two-site gap {gap:e} exceeds {bound:e}"))?;
        ensure(one <= 6.0 / lf, || format!("L={l} N={n}: one-site gap {one:e} exceeds 6/L"))?;
        if n > 0 {
            worst_two = worst_two.max(gap / bound);
        }
        worst_one = worst_one.max(one * lf / 6.0);
    }
    Ok(format!("max gap / (14N/L^2) = {worst_two:.3}, max one-site gap / (6/L) = {worst_one:.3}"))
}

const COUPLING_GRID: [(usize, usize); 3] = [(10, 5), (20, 10), (50, 25)];
const COUPLING_SAMPLES: usize = 1_000_000;

fn criterion_4_and_5() -> (Outcome, Outcome) {
    let mut fit_lines = Vec::new();
    let mut mismatch_lines = Vec::new();
    let mut fit_err = None;
    let mut mismatch_err = None;
    for kind in [CouplingKind::Mb, CouplingKind::Be] {
        for (i, &(l, n)) in COUPLING_GRID.iter().enumerate() {
            let report = match coupling_experiment(kind, l, n, COUPLING_SAMPLES, 4000 + i as u64) {
                Ok(r) => r,
                Err(e) => return (Err(e.to_string()), Err(e.to_string())),
            };
            for check in &report.checks {
                let is_fit = check.name.contains("goodness of fit");
                if !check.pass {
                    let slot = if is_fit { &mut fit_err } else { &mut mismatch_err };
                    slot.get_or_insert(format!(
                        "{kind:?} L={l} N={n}: {} ({} vs {})",
                        check.name, check.estimate, check.bound
                    ));
                }
            }
            let p_min = report.metrics["coupled pair chi-square p-value"]
                .min(report.metrics["independent pair chi-square p-value"]);
            fit_lines.push(format!("{kind:?}({l},{n}) p>={p_min:.3}"));
            let (p, se) = (report.metrics["mismatch_probability"], report.metrics["mismatch_stderr"]);
            mismatch_lines.push(format!("{kind:?}({l},{n}) {p:.5}±{se:.5} vs {:.5}", 2.0 * n as f64 / (l * l) as f64));
        }
    }
    // MB at L = 2, N = 1 mismatches with probability exactly 1/2
    match coupling_samples(CouplingKind::Mb, 2, 1, COUPLING_SAMPLES, 4100) {
        Ok(draws) => {
            let p = draws.iter().filter(|s| s.x2 != s.y2).count() as f64 / draws.len() as f64;
            let se = (p * (1.0 - p) / draws.len() as f64).sqrt();
            if (p - 0.5).abs() > 3.0 * se {
                mismatch_err.get_or_insert(format!("MB L=2 N=1 mismatch {p} not within 3 stderr of 0.5"));
            }
            mismatch_lines.push(format!("MB(2,1) {p:.5}"));
        }
        Err(e) => mismatch_err = Some(e.to_string()),
    }
    let fit = fit_err.map_or_else(|| Ok(fit_lines.join(", ")), Err);
    let mismatch = mismatch_err.map_or_else(|| Ok(mismatch_lines.join(", ")), Err);
    (fit, mismatch)
}

/// Random arrival law with mean `target`: a random law on `0..=k` mixed with
/// the point mass at 0.
fn random_arrivals(rng: &mut impl Rng, target: f64) -> Vec<f64> {
    let k = rng.random_range(1..=8usize);
    let mut w: Vec<f64> = (0..=k).map(|_| rng.random::<f64>()).collect();
    w[k] += 0.1;
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    let mean: f64 = w.iter().enumerate().map(|(i, x)| i as f64 * x).sum();
    let theta = (target / mean).min(1.0);
    let mut out: Vec<f64> = w.iter().map(|x| theta * x).collect();
    out[0] += 1.0 - theta;
    out
}

fn criterion_6() -> Outcome {
    let mut rng = stream(6, "acceptance-queue", 0, 0);
    let (mut worst_mean, mut worst_cf) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let target = rng.random_range(0.05..0.95);
        let masses = random_arrivals(&mut rng, target);
        let m: f64 = masses.iter().enumerate().map(|(i, x)| i as f64 * x).sum();
        let second: f64 = masses.iter().enumerate().map(|(i, x)| (i * i) as f64 * x).sum();
        let var = second - m * m;
        let mu = lib(Pmf::new(masses.clone(), 0.0))?;
        let pi = lib(lib(QueueArrivalLaw::new(&mu))?.stationary(1e-12))?;
        let expected_mean = (var + m * (1.0 - m)) / (2.0 * (1.0 - m));
        worst_mean = worst_mean.max((pi.mean() - expected_mean).abs());
        for x in [0.1, 0.5, 1.0, 2.0] {
            let mu_hat: Complex64 =
                masses.iter().enumerate().map(|(k, &p)| Complex64::from_polar(p, x * k as f64)).sum();
            let e = Complex64::from_polar(1.0, x);
            let expected = (1.0 - m) * mu_hat * (e - 1.0) / (e - mu_hat);
            worst_cf = worst_cf.max((pi.char_fn(x) - expected).norm());
        }
    }
    ensure(worst_mean <= 1e-8 && worst_cf <= 1e-8, || {
        format!("mean error {worst_mean:e}, characteristic function error {worst_cf:e}")
    })?;
    let mut worst_bern = 0.0f64;
    for a in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let bern = lib(Pmf::bernoulli(a))?;
        let pi = lib(lib(QueueArrivalLaw::new(&bern))?.stationary(1e-12))?;
        worst_bern = worst_bern.max(tv_distance(&pi, &bern));
    }
    ensure(worst_bern <= 1e-10, || format!("Bernoulli arrivals: TV {worst_bern:e}"))?;
    Ok(format!("mean error {worst_mean:.1e}, char fn error {worst_cf:.1e}, Bernoulli TV {worst_bern:.1e}"))
}

fn criterion_7() -> Outcome {
    let mut worst_residual = 0.0f64;
    for i in 1..=9 {
        let r = i as f64 / 10.0;
        let fp = lib(fixed_point(FermiDirac, r, 1e-12))?;
        let d = tv_distance(&fp.pi_bar, &lib(Pmf::bernoulli(r))?);
        ensure(d <= 1e-8, || format!("FD r={r}: TV to Bernoulli {d:e}"))?;
        worst_residual = worst_residual.max(tv_distance(&lib(evolve_measure(FermiDirac, &fp.pi_bar))?, &fp.pi_bar));
    }
    let mut a_errors = Vec::new();
    for (law, r, a) in [(MaxwellBoltzmann, 0.75, 0.5), (BoseEinstein, 0.5, 1.0 / 3.0)] {
        let fp = lib(fixed_point(law, r, 1e-12))?;
        ensure((fp.a_star - a).abs() <= 1e-8, || format!("{law} r={r}: a* = {}", fp.a_star))?;
        a_errors.push((fp.a_star - a).abs());
        worst_residual = worst_residual.max(tv_distance(&lib(evolve_measure(law, &fp.pi_bar))?, &fp.pi_bar));
    }
    ensure(worst_residual <= 1e-8, || format!("fixed point residual {worst_residual:e}"))?;
    Ok(format!("|a* - 0.5| = {:.1e}, |a* - 1/3| = {:.1e}, max residual {worst_residual:.1e}", a_errors[0], a_errors[1]))
}

fn criterion_8() -> Outcome {
    let mut worst = 0.0f64;
    for law in ReassignmentLaw::ALL {
        for r in [0.2, 0.5, 0.8] {
            let report = lib(equilibrium_experiment(law, r, 10_000, 8))?;
            let tv = report.metrics["final_tv"];
            ensure(report.passed && tv < 1e-6, || format!("{law} r={r}: final TV {tv:e}"))?;
            worst = worst.max(tv);
        }
    }
    Ok(format!("max final TV {worst:.1e}"))
}

fn criterion_9() -> Outcome {
    let cfg = ChaosConfig {
        law: MaxwellBoltzmann,
        l_grid: vec![128, 256, 512, 1024, 2048, 4096],
        horizon: 20,
        delta: 0.05,
        replicas: 2000,
        init_law: lib(Pmf::bernoulli(0.5))?,
        seed: 9,
        slope_threshold: -0.4,
    };
    let report = lib(chaos_sweep(&cfg))?;
    let slope = report.metrics.get("mean_deviation_slope").copied().unwrap_or(f64::NAN);
    if let Some(c) = report.failed_checks().next() {
        return Err(format!("{}: {} vs {}", c.name, c.estimate, c.bound));
    }
    let means: Vec<String> = report.series["mean_deviation"].iter().map(|e| format!("{e:.4}")).collect();
    Ok(format!("slope {slope:.3}, mean deviations [{}]", means.join(", ")))
}

fn criterion_10() -> Outcome {
    let mut parts = Vec::new();
    for (l, n) in [(200, 100), (500, 250), (1000, 300)] {
        let report = lib(mixing_experiment(l, n, 500, 10))?;
        let row = &report.rows[0];
        ensure(report.passed, || format!("L={l} N={n}: {} exceeds {}", row.estimate, row.bound.unwrap_or(f64::NAN)))?;
        parts.push(format!("({l},{n}) {:.0} <= {:.0}", row.estimate, row.bound.unwrap_or(f64::NAN)));
    }
    let mut warnings = 0;
    for (l, n) in [(3, 2), (4, 2), (4, 3)] {
        let report = lib(mixing_experiment(l, n, 500, 10))?;
        let t = report.metrics.get("exact_mixing_time").copied();
        ensure(t.is_some(), || format!("no exact mixing time for L={l} N={n}"))?;
        warnings += report.warnings.len();
        parts.push(format!("t_mix({l},{n}) = {}", t.unwrap_or(f64::NAN)));
    }
    Ok(format!("{}; {warnings} small-system warnings", parts.join(", ")))
}

fn arb_pmf() -> impl Strategy<Value = Pmf> {
    prop::collection::vec(0.0f64..1.0, 1..12).prop_filter_map("needs positive mass", |w| {
        let total: f64 = w.iter().sum();
        (total > 1e-3).then(|| Pmf::new(w.iter().map(|x| x / total).collect(), 0.0).ok()).flatten()
    })
}

fn run_property<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let mut runner = TestRunner::new(Config { cases: 256, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

fn criterion_11() -> Outcome {
    let mut rng = stream(11, "acceptance-conservation", 0, 0);
    let mut steps = 0usize;
    for law in ReassignmentLaw::ALL {
        for _ in 0..200 {
            let l = rng.random_range(1..=60usize);
            let n = if law == FermiDirac { rng.random_range(0..=l) } else { rng.random_range(0..=3 * l) };
            let mut state =
                OccupancyVector::new(lib(law.sample_occupancy(l, n, &mut rng))?).map_err(|e| e.to_string())?;
            for _ in 0..50 {
                state.step(law, &mut rng);
                steps += 1;
                ensure(state.total() == n, || format!("{law} L={l}: count {} != {n}", state.total()))?;
            }
        }
    }
    run_property("TV symmetry and triangle inequality", (arb_pmf(), arb_pmf(), arb_pmf()), |(p, q, r)| {
        prop_assert!((tv_distance(&p, &q) - tv_distance(&q, &p)).abs() < 1e-15);
        prop_assert!(tv_distance(&p, &p) == 0.0);
        prop_assert!(tv_distance(&p, &r) <= tv_distance(&p, &q) + tv_distance(&q, &r) + 1e-12);
        Ok(())
    })?;
    run_property("thinning composes", (arb_pmf(), 0.0f64..=1.0, 0.0f64..=1.0), |(p, a, b)| {
        let twice = p.thin(a).unwrap().thin(b).unwrap();
        prop_assert!(tv_distance(&twice, &p.thin(a * b).unwrap()) < 1e-10);
        prop_assert!((p.thin(a).unwrap().mean() - a * p.mean()).abs() < 1e-10);
        Ok(())
    })?;
    run_property("thinning closure of limit laws", (0.0f64..=1.0, 0.0f64..=1.0), |(q0, p)| {
        for law in ReassignmentLaw::ALL {
            let thinned = law.limit_law(q0).unwrap().thin(p).unwrap();
            let direct = law.limit_law(1.0 - p * (1.0 - q0)).unwrap();
            prop_assert!(tv_distance(&thinned, &direct) < 1e-10, "{law}: q0={q0} p={p}");
            prop_assert!((law.limit_law(q0).unwrap().mean() - (1.0 - q0)).abs() < 1e-10);
        }
        Ok(())
    })?;
    run_property("Lipschitz continuity of psi", (arb_pmf(), arb_pmf()), |(q, q2)| {
        for law in ReassignmentLaw::ALL {
            let lhs = tv_distance(&law.psi(&q).unwrap(), &law.psi(&q2).unwrap());
            prop_assert!(lhs <= law.lipschitz_constant() * tv_distance(&q, &q2) + 1e-12);
        }
        Ok(())
    })?;
    run_property("mean conservation of the recursion", (arb_pmf(), 0usize..=50), |(q, horizon)| {
        prop_assume!(q.mean() < 1.0);
        for law in ReassignmentLaw::ALL {
            for (t, p) in iterate_measure(law, &q, horizon).unwrap().iter().enumerate() {
                prop_assert!((p.mean() - q.mean()).abs() <= t as f64 * 1e-10 + 1e-9, "{law} t={t}");
            }
        }
        Ok(())
    })?;
    // exact two-site joint vs product of its own marginals, as a last sanity check
    for law in ReassignmentLaw::ALL {
        let joint = lib(law.two_site_joint(12, 6))?;
        let m = lib(law.one_site_marginal(12, 6))?;
        let d = joint_tv_distance(&joint, &JointPmf::product(&m, &m));
        ensure(d > 0.0 && d < 1.0, || format!("{law}: degenerate joint gap {d}"))?;
    }
    Ok(format!("{steps} simulated steps conserved, 5 properties x 256 cases"))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: &str, title: &str, started: Instant, outcome: Outcome| {
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {id} {title}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {id} {title}: {detail} ({secs:.1}s)");
            }
        }
    };
    let t = Instant::now();
    report("1", "Fermi-Dirac exact two-site gap", t, criterion_1());
    let t = Instant::now();
    report("2", "Maxwell-Boltzmann two-site bound", t, criterion_2());
    let t = Instant::now();
    report("3", "Bose-Einstein two-site and one-site bounds", t, criterion_3());
    let t = Instant::now();
    let (fit, mismatch) = criterion_4_and_5();
    report("4", "coupling marginals", t, fit);
    report("5", "coupling mismatch", t, mismatch);
    let t = Instant::now();
    report("6", "queue stationary law", t, criterion_6());
    let t = Instant::now();
    report("7", "fixed points", t, criterion_7());
    let t = Instant::now();
    report("8", "nonlinear convergence", t, criterion_8());
    let t = Instant::now();
    report("9", "propagation of chaos", t, criterion_9());
    let t = Instant::now();
    report("10", "Fermi-Dirac mixing", t, criterion_10());
    let t = Instant::now();
    report("11", "structural invariants", t, criterion_11());
    println!("acceptance: {} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
