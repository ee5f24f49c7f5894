//! The three classical occupancy statistics used as reassignment rules.
//!
//! For each statistic this module provides an exact sampler of the occupancy
//! vector, closed-form one- and two-site marginals, the limiting single-site
//! law as a function of `q({0})`, and the reference product law at density
//! `N / L`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial_pmf, ln_binomial, ln_factorial};
use crate::error::{Error, Result};
use crate::measures::{joint_tv_distance, JointPmf, Pmf, DEFAULT_TAIL_TOLERANCE};

/// Which occupancy statistic governs the reassignment of released balls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReassignmentLaw {
    /// Uniform over 0/1 configurations with `N` ones.
    FermiDirac,
    /// Multinomial with `N` trials and equal cells.
    MaxwellBoltzmann,
    /// Uniform over compositions of `N` into `L` parts.
    BoseEinstein,
}

impl ReassignmentLaw {
    pub const ALL: [ReassignmentLaw; 3] =
        [ReassignmentLaw::FermiDirac, ReassignmentLaw::MaxwellBoltzmann, ReassignmentLaw::BoseEinstein];

    pub fn short_name(self) -> &'static str {
        match self {
            ReassignmentLaw::FermiDirac => "fd",
            ReassignmentLaw::MaxwellBoltzmann => "mb",
            ReassignmentLaw::BoseEinstein => "be",
        }
    }

    /// Lipschitz constant of `q -> psi(q)` in total variation.
    pub fn lipschitz_constant(self) -> f64 {
        match self {
            ReassignmentLaw::FermiDirac => 1.0,
            ReassignmentLaw::MaxwellBoltzmann => 3.0,
            ReassignmentLaw::BoseEinstein => 4.0,
        }
    }

    fn check(self, l: usize, n: usize) -> Result<()> {
        if l == 0 {
            return Err(Error::InvalidParameter("L must be at least 1".into()));
        }
        if self == ReassignmentLaw::FermiDirac && n > l {
            return Err(Error::StatisticUndefined { l, n });
        }
        Ok(())
    }

    /// Draws an occupancy vector of length `l` holding `n` balls.
    pub fn sample_occupancy<R: Rng + ?Sized>(self, l: usize, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        self.check(l, n)?;
        let mut out = vec![0; l];
        self.sample_into(&mut out, n, rng);
        Ok(out)
    }

    /// Adds a draw of the statistic with `n` balls to `out` (length `L`).
    /// Preconditions are the caller's responsibility.
    pub(crate) fn sample_into<R: Rng + ?Sized>(self, out: &mut [usize], n: usize, rng: &mut R) {
        if n == 0 {
            return;
        }
        let l = out.len();
        match self {
            ReassignmentLaw::FermiDirac => {
                // partial Fisher-Yates over site indices
                let mut idx: Vec<usize> = (0..l).collect();
                for i in 0..n {
                    let j = rng.random_range(i..l);
                    idx.swap(i, j);
                    out[idx[i]] += 1;
                }
            }
            ReassignmentLaw::MaxwellBoltzmann => {
                let mut remaining = n as u64;
                for (i, slot) in out.iter_mut().enumerate() {
                    if remaining == 0 {
                        break;
                    }
                    let sites_left = (l - i) as u64;
                    let x = if sites_left == 1 {
                        remaining
                    } else {
                        Binomial::new(remaining, 1.0 / sites_left as f64).expect("valid binomial").sample(rng)
                    };
                    *slot += x as usize;
                    remaining -= x;
                }
            }
            ReassignmentLaw::BoseEinstein => {
                // stars and bars: L - 1 bars among N + L - 1 positions
                let mut bars: Vec<usize> = rand::seq::index::sample(rng, n + l - 1, l - 1).into_vec();
                bars.sort_unstable();
                let mut prev = 0usize;
                for (i, &b) in bars.iter().enumerate() {
                    out[i] += b - prev;
                    prev = b + 1;
                }
                out[l - 1] += n + l - 1 - prev;
            }
        }
    }

    /// Exact law of the first coordinate.
    pub fn one_site_marginal(self, l: usize, n: usize) -> Result<Pmf> {
        self.check(l, n)?;
        Ok(match self {
            ReassignmentLaw::FermiDirac => Pmf::bernoulli(n as f64 / l as f64)?,
            ReassignmentLaw::MaxwellBoltzmann => Pmf::binomial(n as u64, 1.0 / l as f64)?,
            ReassignmentLaw::BoseEinstein => be_one_site(l, n),
        })
    }

    /// Exact joint law of the first two coordinates.
    pub fn two_site_joint(self, l: usize, n: usize) -> Result<JointPmf> {
        self.check(l, n)?;
        if l < 2 {
            return Err(Error::InvalidParameter("two-site marginal needs L >= 2".into()));
        }
        match self {
            ReassignmentLaw::FermiDirac => {
                let (lf, nf) = (l as f64, n as f64);
                let denom = lf * (lf - 1.0);
                let p11 = nf * (nf - 1.0) / denom;
                let p10 = nf * (lf - nf) / denom;
                let p00 = (lf - nf) * (lf - nf - 1.0) / denom;
                JointPmf::from_entries(&[((0, 0), p00), ((0, 1), p10), ((1, 0), p10), ((1, 1), p11)])
            }
            ReassignmentLaw::MaxwellBoltzmann => {
                if l == 2 {
                    let row = binomial_pmf(n as u64, 0.5);
                    return JointPmf::from_fn(n + 1, n + 1, |h, k| if h + k == n { row[h] } else { 0.0 });
                }
                let lf = l as f64;
                let (ln_site, ln_rest) = ((1.0 / lf).ln(), (1.0 - 2.0 / lf).ln());
                let ln_nf = ln_factorial(n as u64);
                JointPmf::from_fn(n + 1, n + 1, |h, k| {
                    if h + k > n {
                        return 0.0;
                    }
                    let r = n - h - k;
                    (ln_nf - ln_factorial(h as u64) - ln_factorial(k as u64) - ln_factorial(r as u64)
                        + (h + k) as f64 * ln_site
                        + r as f64 * ln_rest)
                        .exp()
                })
            }
            ReassignmentLaw::BoseEinstein => {
                if l == 2 {
                    let u = 1.0 / (n + 1) as f64;
                    return JointPmf::from_fn(n + 1, n + 1, |h, k| if h + k == n { u } else { 0.0 });
                }
                let ln_total = ln_binomial((l - 1 + n) as u64, n as u64);
                JointPmf::from_fn(n + 1, n + 1, |h, k| {
                    if h + k > n {
                        return 0.0;
                    }
                    let r = (n - h - k) as u64;
                    (ln_binomial(l as u64 - 3 + r, r) - ln_total).exp()
                })
            }
        }
    }

    /// The limiting single-site law `mu^q`, which depends on `q` only
    /// through `q0 = q({0})`. Its mean is `1 - q0`.
    pub fn limit_law(self, q0: f64) -> Result<Pmf> {
        self.limit_law_truncated(q0, DEFAULT_TAIL_TOLERANCE)
    }

    pub fn limit_law_truncated(self, q0: f64, tol: f64) -> Result<Pmf> {
        if !(0.0..=1.0).contains(&q0) {
            return Err(Error::InvalidParameter(format!("q0 = {q0} not in [0, 1]")));
        }
        let a = 1.0 - q0;
        match self {
            ReassignmentLaw::FermiDirac => Pmf::bernoulli(a),
            ReassignmentLaw::MaxwellBoltzmann => Pmf::poisson_truncated(a, tol),
            ReassignmentLaw::BoseEinstein => Pmf::geometric_truncated(1.0 / (2.0 - q0), tol),
        }
    }

    /// `psi(q) = limit_law(q({0}))`.
    pub fn psi(self, q: &Pmf) -> Result<Pmf> {
        self.limit_law(q.mass(0))
    }

    /// Single-site reference law at density `N / L`.
    pub fn reference_product_law(self, l: usize, n: usize) -> Result<Pmf> {
        self.check(l, n)?;
        let rho = n as f64 / l as f64;
        match self {
            ReassignmentLaw::FermiDirac => Pmf::bernoulli(rho),
            ReassignmentLaw::MaxwellBoltzmann => Pmf::poisson(rho),
            ReassignmentLaw::BoseEinstein => Pmf::geometric(1.0 / (1.0 + rho)),
        }
    }

    /// Total variation distance between the exact two-site joint and the
    /// product of reference laws.
    pub fn condition1_gap(self, l: usize, n: usize) -> Result<f64> {
        let joint = self.two_site_joint(l, n)?;
        let reference = self.reference_product_law(l, n)?;
        Ok(joint_tv_distance(&joint, &JointPmf::product(&reference, &reference)))
    }

    /// Total variation distance between the exact one-site marginal and the
    /// reference law.
    pub fn one_site_gap(self, l: usize, n: usize) -> Result<f64> {
        Ok(self.one_site_marginal(l, n)?.tv_distance(&self.reference_product_law(l, n)?))
    }

    /// Draws from `limit_law(q0)` without building the mass function.
    pub fn sample_limit<R: Rng + ?Sized>(self, q0: f64, rng: &mut R) -> usize {
        let a = 1.0 - q0;
        if a <= 0.0 {
            return 0;
        }
        match self {
            ReassignmentLaw::FermiDirac => usize::from(rng.random::<f64>() < a),
            ReassignmentLaw::MaxwellBoltzmann => {
                rand_distr::Poisson::new(a).expect("valid Poisson").sample(rng) as usize
            }
            ReassignmentLaw::BoseEinstein => {
                rand_distr::Geometric::new(1.0 / (2.0 - q0)).expect("valid geometric").sample(rng) as usize
            }
        }
    }
}

/// `P(k) = C(L-2+N-k, N-k) / C(L-1+N, N)`, built by the ratio recurrence
/// `P(k+1) / P(k) = (N-k) / (L-2+N-k)` from `P(0) = (L-1) / (L-1+N)`.
fn be_one_site(l: usize, n: usize) -> Pmf {
    if l == 1 {
        return Pmf::dirac(n);
    }
    let mut masses = Vec::with_capacity(n + 1);
    let mut p = (l - 1) as f64 / (l - 1 + n) as f64;
    for k in 0..=n {
        masses.push(p);
        if k < n {
            p *= (n - k) as f64 / (l - 2 + n - k) as f64;
        }
    }
    Pmf::from_raw_missing_tail(masses)
}

impl fmt::Display for ReassignmentLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ReassignmentLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fd" | "fermi-dirac" => Ok(ReassignmentLaw::FermiDirac),
            "mb" | "maxwell-boltzmann" => Ok(ReassignmentLaw::MaxwellBoltzmann),
            "be" | "bose-einstein" => Ok(ReassignmentLaw::BoseEinstein),
            other => Err(Error::InvalidParameter(format!("unknown law `{other}`"))),
        }
    }
}
