//! Run configuration: command-line flags merged over an optional
//! `key = value` file, then validated into a typed [`RunConfig`].
//!
//! File format:
//!
//! ```text
//! # keys before any section apply to every command
//! seed = 42
//!
//! [chaos]
//! L = 128,256,512
//! replicas = 2000
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use grbb_core::experiments::{ReportFormat, MIN_REPLICAS};
use grbb_core::{Pmf, ReassignmentLaw};
use serde::Serialize;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("missing required parameter --{0}")]
    Missing(&'static str),
    #[error("invalid value for --{key}: {message}")]
    Invalid { key: String, message: String },
    #[error("unknown key `{key}` in {place}")]
    UnknownKey { key: String, place: String },
    #[error("config file line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Precondition(String),
}

fn invalid(key: &str, message: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), message: message.to_string() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Chaos,
    TvCheck,
    CouplingTest,
    Mixing,
    Stationary,
    FixedPoint,
    Equilibrium,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Chaos => "chaos",
            Command::TvCheck => "tv-check",
            Command::CouplingTest => "coupling-test",
            Command::Mixing => "mixing",
            Command::Stationary => "stationary",
            Command::FixedPoint => "fixed-point",
            Command::Equilibrium => "equilibrium",
        }
    }

    /// Keys the command reads, besides `seed`, `output` and `format`.
    pub fn keys(self) -> &'static [&'static str] {
        match self {
            Command::Simulate => &["law", "L", "N", "T"],
            Command::Chaos => &["law", "L", "T", "delta", "replicas", "init"],
            Command::TvCheck => &["law", "L"],
            Command::CouplingTest => &["law", "L", "N", "samples"],
            Command::Mixing => &["law", "L", "N", "replicas"],
            Command::Stationary => &["arrival", "lambda"],
            Command::FixedPoint => &["law", "r"],
            Command::Equilibrium => &["law", "r", "T"],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const COMMON_KEYS: [&str; 3] = ["seed", "output", "format"];
pub const ALL_KEYS: [&str; 14] = [
    "law", "L", "N", "T", "delta", "replicas", "r", "lambda", "samples", "arrival", "init", "seed", "output", "format",
];

/// Resolved, validated parameters for one command.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Plan {
    Simulate { law: ReassignmentLaw, l: usize, n: usize, horizon: usize },
    Chaos { law: ReassignmentLaw, l_grid: Vec<usize>, horizon: usize, delta: f64, replicas: usize, init: Pmf },
    TvCheck { law: ReassignmentLaw, l_grid: Vec<usize> },
    CouplingTest { law: ReassignmentLaw, l: usize, n: usize, samples: usize },
    Mixing { l: usize, n: usize, replicas: usize },
    Stationary { arrival: Pmf, lambda: Option<f64> },
    FixedPoint { law: ReassignmentLaw, r: f64 },
    Equilibrium { law: ReassignmentLaw, r: f64, horizon: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub plan: Plan,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: ReportFormat,
}

/// Parses the config file text into global keys and per-section keys.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, BTreeMap<String, String>>, ConfigError> {
    let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            sections.entry(current.clone()).or_default();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax { line: i + 1, message: format!("expected `key = value`, got `{line}`") });
        };
        let key = key.trim().trim_start_matches("--").to_string();
        if !ALL_KEYS.contains(&key.as_str()) {
            let place = if current.is_empty() { "config file".to_string() } else { format!("section [{current}]") };
            return Err(ConfigError::UnknownKey { key, place });
        }
        sections.entry(current.clone()).or_default().insert(key, value.trim().to_string());
    }
    Ok(sections)
}

/// Merges file values (global, then the command's section) under `flags`.
pub fn merge(
    command: Command,
    file: Option<&BTreeMap<String, BTreeMap<String, String>>>,
    flags: BTreeMap<String, String>,
) -> Result<BTreeMap<String, String>, ConfigError> {
    let allowed = |k: &str| COMMON_KEYS.contains(&k) || command.keys().contains(&k);
    let mut out = BTreeMap::new();
    if let Some(file) = file {
        for (section, entries) in file {
            if !section.is_empty() && section != command.name() {
                continue;
            }
            for (k, v) in entries {
                if section.is_empty() && !allowed(k) {
                    continue;
                }
                if !allowed(k) {
                    return Err(ConfigError::UnknownKey { key: k.clone(), place: format!("section [{section}]") });
                }
                out.insert(k.clone(), v.clone());
            }
        }
    }
    for (k, v) in flags {
        if !allowed(&k) {
            return Err(ConfigError::UnknownKey { key: k, place: format!("flags for {command}") });
        }
        out.insert(k, v);
    }
    Ok(out)
}

/// Parses `a..b` (inclusive), `a..b:step`, `a,b,c` or a single value.
pub fn parse_grid(text: &str) -> Result<Vec<usize>, String> {
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| format!("`{s}` is not a non-negative integer"));
    if let Some((lo, rest)) = text.split_once("..") {
        let (hi, step) = match rest.split_once(':') {
            Some((hi, step)) => (num(hi)?, num(step)?),
            None => (num(rest)?, 1),
        };
        let lo = num(lo)?;
        if step == 0 || lo > hi {
            return Err(format!("empty range `{text}`"));
        }
        return Ok((lo..=hi).step_by(step).collect());
    }
    text.split(',').map(num).collect()
}

/// Parses `bernoulli:a`, `poisson:a`, `geometric:s`, `dirac:k` or
/// `pmf:m0,m1,...`.
pub fn parse_law_spec(text: &str) -> Result<Pmf, String> {
    let (kind, arg) = text.split_once(':').ok_or_else(|| format!("expected `kind:parameter`, got `{text}`"))?;
    let real = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"));
    let law = match kind.trim() {
        "bernoulli" => Pmf::bernoulli(real(arg)?),
        "poisson" => Pmf::poisson(real(arg)?),
        "geometric" => Pmf::geometric(real(arg)?),
        "dirac" => return arg.trim().parse().map(Pmf::dirac).map_err(|_| format!("`{arg}` is not a count")),
        "pmf" => Pmf::new(arg.split(',').map(real).collect::<Result<Vec<_>, _>>()?, 0.0),
        other => return Err(format!("unknown law kind `{other}`")),
    };
    law.map_err(|e| e.to_string())
}

pub struct Values<'a> {
    map: &'a BTreeMap<String, String>,
}

impl<'a> Values<'a> {
    pub fn new(map: &'a BTreeMap<String, String>) -> Self {
        Self { map }
    }

    fn raw(&self, key: &'static str) -> Option<&'a str> {
        self.map.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &'static str, default: Option<T>) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            Some(v) => v.parse().map_err(|e| invalid(key, format!("`{v}`: {e}"))),
            None => default.ok_or(ConfigError::Missing(key)),
        }
    }

    fn law(&self, default: Option<ReassignmentLaw>) -> Result<ReassignmentLaw, ConfigError> {
        self.parsed("law", default)
    }

    fn grid(&self, default: Option<&str>) -> Result<Vec<usize>, ConfigError> {
        let text = self.raw("L").or(default).ok_or(ConfigError::Missing("L"))?;
        parse_grid(text).map_err(|e| invalid("L", e))
    }

    fn law_spec(&self, key: &'static str, default: Option<&str>) -> Result<Pmf, ConfigError> {
        let text = self.raw(key).or(default).ok_or(ConfigError::Missing(key))?;
        parse_law_spec(text).map_err(|e| invalid(key, e))
    }
}

pub const DEFAULT_CHAOS_GRID: &str = "128,256,512,1024";
pub const DEFAULT_SAMPLES: usize = 1_000_000;

fn positive(key: &str, v: usize) -> Result<usize, ConfigError> {
    if v == 0 {
        Err(invalid(key, "must be positive"))
    } else {
        Ok(v)
    }
}

fn unit_interval(key: &str, r: f64) -> Result<f64, ConfigError> {
    if (0.0..1.0).contains(&r) {
        Ok(r)
    } else {
        Err(invalid(key, format!("{r} not in [0, 1)")))
    }
}

/// Builds and validates the plan for `command` from merged key values.
pub fn resolve(command: Command, values: &BTreeMap<String, String>) -> Result<RunConfig, ConfigError> {
    let v = Values::new(values);
    let plan = match command {
        Command::Simulate => {
            let law = v.law(None)?;
            let l = positive("L", v.parsed("L", None)?)?;
            let n = v.parsed("N", None)?;
            if law == ReassignmentLaw::FermiDirac && n > l {
                return Err(ConfigError::Precondition(grbb_core::Error::StatisticUndefined { l, n }.to_string()));
            }
            Plan::Simulate { law, l, n, horizon: v.parsed("T", Some(100))? }
        }
        Command::Chaos => {
            let replicas = v.parsed("replicas", Some(2000))?;
            if replicas < MIN_REPLICAS {
                return Err(invalid("replicas", format!("need at least {MIN_REPLICAS}")));
            }
            let delta: f64 = v.parsed("delta", Some(0.05))?;
            if delta.is_nan() || delta <= 0.0 {
                return Err(invalid("delta", "must be positive"));
            }
            let l_grid = v.grid(Some(DEFAULT_CHAOS_GRID))?;
            if l_grid.contains(&0) {
                return Err(invalid("L", "sizes must be positive"));
            }
            let law = v.law(Some(ReassignmentLaw::MaxwellBoltzmann))?;
            let init = v.law_spec("init", Some("bernoulli:0.5"))?;
            if law == ReassignmentLaw::FermiDirac && init.max_value() > 1 {
                return Err(invalid("init", "Fermi-Dirac needs an initial law on {0, 1}"));
            }
            Plan::Chaos { law, l_grid, horizon: v.parsed("T", Some(20))?, delta, replicas, init }
        }
        Command::TvCheck => Plan::TvCheck { law: v.law(None)?, l_grid: v.grid(None)? },
        Command::CouplingTest => {
            let law = v.law(None)?;
            if law == ReassignmentLaw::FermiDirac {
                return Err(invalid("law", "couplings exist for mb and be only"));
            }
            let l: usize = v.parsed("L", None)?;
            if l < 2 {
                return Err(invalid("L", "coupling needs L >= 2"));
            }
            let samples = v.parsed("samples", Some(DEFAULT_SAMPLES))?;
            if samples < 1000 {
                return Err(invalid("samples", "need at least 1000"));
            }
            Plan::CouplingTest { law, l, n: v.parsed("N", None)?, samples }
        }
        Command::Mixing => {
            if v.law(Some(ReassignmentLaw::FermiDirac))? != ReassignmentLaw::FermiDirac {
                return Err(invalid("law", "mixing is implemented for fd only"));
            }
            let (l, n): (usize, usize) = (v.parsed("L", None)?, v.parsed("N", None)?);
            if n < 2 || n > l {
                return Err(ConfigError::Precondition(format!("mixing needs 2 <= N <= L, got L = {l}, N = {n}")));
            }
            Plan::Mixing { l, n, replicas: positive("replicas", v.parsed("replicas", Some(500))?)? }
        }
        Command::Stationary => {
            let lambda = match v.raw("lambda") {
                Some(_) => Some(v.parsed::<f64>("lambda", None)?),
                None => None,
            };
            if lambda.is_some_and(|l| l.is_nan() || l <= 0.0) {
                return Err(invalid("lambda", "must be positive"));
            }
            Plan::Stationary { arrival: v.law_spec("arrival", None)?, lambda }
        }
        Command::FixedPoint => Plan::FixedPoint { law: v.law(None)?, r: unit_interval("r", v.parsed("r", None)?)? },
        Command::Equilibrium => Plan::Equilibrium {
            law: v.law(None)?,
            r: unit_interval("r", v.parsed("r", None)?)?,
            horizon: v.parsed("T", Some(10_000))?,
        },
    };
    let format = match v.raw("format").unwrap_or("both") {
        "json" => ReportFormat::Json,
        "csv" => ReportFormat::Csv,
        "both" => ReportFormat::Both,
        other => return Err(invalid("format", format!("`{other}` is not one of json, csv, both"))),
    };
    Ok(RunConfig { plan, seed: v.parsed("seed", Some(0))?, output: v.raw("output").map(PathBuf::from), format })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("4..7").unwrap(), vec![4, 5, 6, 7]);
        assert_eq!(parse_grid("10..40:10").unwrap(), vec![10, 20, 30, 40]);
        assert_eq!(parse_grid("128,256").unwrap(), vec![128, 256]);
        assert_eq!(parse_grid("9").unwrap(), vec![9]);
        assert!(parse_grid("7..4").is_err());
        assert!(parse_grid("a").is_err());
    }

    #[test]
    fn tv_check_grid() {
        let cfg = resolve(Command::TvCheck, &flags(&[("law", "fd"), ("L", "4..30")])).unwrap();
        assert_eq!(cfg.plan, Plan::TvCheck { law: ReassignmentLaw::FermiDirac, l_grid: (4..=30).collect() });
    }

    #[test]
    fn fd_overfull_simulation_is_rejected() {
        let err = resolve(Command::Simulate, &flags(&[("law", "fd"), ("L", "4"), ("N", "9")])).unwrap_err();
        assert!(err.to_string().contains("statistic undefined"));
    }

    #[test]
    fn chaos_is_fully_populated() {
        let f = flags(&[
            ("law", "mb"),
            ("L", "128,256,512"),
            ("T", "20"),
            ("delta", "0.05"),
            ("replicas", "2000"),
            ("seed", "42"),
        ]);
        let cfg = resolve(Command::Chaos, &f).unwrap();
        assert_eq!(cfg.seed, 42);
        match cfg.plan {
            Plan::Chaos { law, l_grid, horizon, delta, replicas, init } => {
                assert_eq!(law, ReassignmentLaw::MaxwellBoltzmann);
                assert_eq!(l_grid, vec![128, 256, 512]);
                assert_eq!((horizon, delta, replicas), (20, 0.05, 2000));
                assert_eq!(init, Pmf::bernoulli(0.5).unwrap());
            }
            other => panic!("unexpected plan {other:?}"),
        }
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config_text("seed = 1\nN = 3\n[simulate]\nlaw = be\nL = 5\n[chaos]\nreplicas = 5\n").unwrap();
        let merged = merge(Command::Simulate, Some(&file), flags(&[("L", "8")])).unwrap();
        let cfg = resolve(Command::Simulate, &merged).unwrap();
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.plan, Plan::Simulate { law: ReassignmentLaw::BoseEinstein, l: 8, n: 3, horizon: 100 });
    }

    #[test]
    fn unknown_and_misplaced_keys_are_rejected() {
        assert!(matches!(parse_config_text("colour = red\n"), Err(ConfigError::UnknownKey { .. })));
        assert!(matches!(parse_config_text("just text\n"), Err(ConfigError::Syntax { line: 1, .. })));
        let file = parse_config_text("[stationary]\ndelta = 0.1\n").unwrap();
        assert!(merge(Command::Stationary, Some(&file), BTreeMap::new()).is_err());
        assert!(merge(Command::TvCheck, None, flags(&[("samples", "10")])).is_err());
    }

    #[test]
    fn missing_and_bad_values() {
        assert_eq!(resolve(Command::FixedPoint, &flags(&[("law", "mb")])).unwrap_err(), ConfigError::Missing("r"));
        assert!(resolve(Command::FixedPoint, &flags(&[("law", "xx"), ("r", "0.5")])).is_err());
        assert!(resolve(Command::FixedPoint, &flags(&[("law", "mb"), ("r", "1.5")])).is_err());
        assert!(resolve(Command::Chaos, &flags(&[("replicas", "10")])).is_err());
    }

    #[test]
    fn law_specs() {
        assert_eq!(parse_law_spec("pmf:0.5,0.5").unwrap(), Pmf::bernoulli(0.5).unwrap());
        assert_eq!(parse_law_spec("dirac:3").unwrap(), Pmf::dirac(3));
        assert!(parse_law_spec("poisson").is_err());
        assert!(parse_law_spec("uniform:3").is_err());
    }
}
