//! Couplings of the two-site marginal `(X_1, X_2)` of an occupancy statistic
//! with the product `(Y_1, Y_2)` of its one-site marginals. Both
//! constructions set `Y_1 = X_1`, so `P(X_2 != Y_2)` bounds the total
//! variation distance between the two laws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::PmfSampler;
use crate::seeding::stream_seed;
use crate::statistics::ReassignmentLaw;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingSample {
    pub x1: usize,
    pub x2: usize,
    pub y1: usize,
    pub y2: usize,
}

/// Which coupling construction to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingKind {
    Mb,
    Be,
}

impl CouplingKind {
    pub fn law(self) -> ReassignmentLaw {
        match self {
            CouplingKind::Mb => ReassignmentLaw::MaxwellBoltzmann,
            CouplingKind::Be => ReassignmentLaw::BoseEinstein,
        }
    }
}

impl TryFrom<ReassignmentLaw> for CouplingKind {
    type Error = Error;

    fn try_from(law: ReassignmentLaw) -> Result<Self> {
        match law {
            ReassignmentLaw::MaxwellBoltzmann => Ok(CouplingKind::Mb),
            ReassignmentLaw::BoseEinstein => Ok(CouplingKind::Be),
            ReassignmentLaw::FermiDirac => {
                Err(Error::InvalidParameter("no coupling construction for Fermi-Dirac".into()))
            }
        }
    }
}

/// Maxwell-Boltzmann coupling: `X_1 ~ Bin(N, 1/L)` and shared uniforms
/// `U_1..U_N` drive `X_2 = #{k <= N - X_1 : U_k <= 1/(L-1)}` and
/// `Y_2 = #{k <= N : U_k <= 1/L}`.
#[derive(Clone, Debug)]
pub struct MbCoupler {
    l: usize,
    n: usize,
    first: Binomial,
}

impl MbCoupler {
    pub fn new(l: usize, n: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::InvalidParameter("coupling needs L >= 2".into()));
        }
        let first = Binomial::new(n as u64, 1.0 / l as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(Self { l, n, first })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CouplingSample {
        let x1 = self.first.sample(rng) as usize;
        let (p_rest, p_site) = (1.0 / (self.l - 1) as f64, 1.0 / self.l as f64);
        let (mut x2, mut y2) = (0, 0);
        for k in 0..self.n {
            let u: f64 = rng.random();
            if k < self.n - x1 && u <= p_rest {
                x2 += 1;
            }
            if u <= p_site {
                y2 += 1;
            }
        }
        CouplingSample { x1, x2, y1: x1, y2 }
    }
}

/// Success probability of the test at the `(t+1)`-th coupled draw when ball
/// `k` was drawn from urn A, having been drawn `t_k` times before with
/// `f_k` failed tests.
pub fn be_test_probability(l: usize, t: usize, t_k: usize, f_k: usize) -> f64 {
    ((l + t - 1) * (1 + t_k - f_k)) as f64 / ((l + t) * (1 + t_k)) as f64
}

/// Bose-Einstein coupling through two Pólya urns.
///
/// Urn A starts with balls `2..=L`, urn B with `1..=L`; both use double
/// replacement. Given `X_1 = n < N`, each of `N - n` coupled draws takes
/// ball `k` from A and, if the test of [`be_test_probability`] succeeds,
/// ball `k` from B, otherwise ball 1. Urn B then draws `n` more times on its
/// own. `X_2` counts ball 2 from A, `Y_2` counts ball 2 from B. When
/// `X_1 = N`, `X_2 = 0` and B runs `N` draws alone.
#[derive(Clone, Debug)]
pub struct BeCoupler {
    l: usize,
    n: usize,
    first: PmfSampler,
}

impl BeCoupler {
    pub fn new(l: usize, n: usize) -> Result<Self> {
        if l < 2 || n < 1 {
            return Err(Error::InvalidParameter("Bose-Einstein coupling needs L >= 2 and N >= 1".into()));
        }
        let first = ReassignmentLaw::BoseEinstein.one_site_marginal(l, n)?.sampler();
        Ok(Self { l, n, first })
    }

    /// Ball-2 draws in `steps` Pólya draws from urn B, which currently holds
    /// `total` balls of which `twos` carry number 2.
    fn polya_twos<R: Rng + ?Sized>(mut twos: usize, mut total: usize, steps: usize, rng: &mut R) -> usize {
        let mut drawn = 0;
        for _ in 0..steps {
            if rng.random_range(0..total) < twos {
                twos += 1;
                drawn += 1;
            }
            total += 1;
        }
        drawn
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CouplingSample {
        let (l, n) = (self.l, self.n);
        let x1 = self.first.sample(rng);
        if x1 == n {
            let y2 = Self::polya_twos(1, l, n, rng);
            return CouplingSample { x1, x2: 0, y1: x1, y2 };
        }
        let coupled = n - x1;
        // draws from urn A, replayed to realise double replacement
        let mut history: Vec<usize> = Vec::with_capacity(coupled);
        let mut drawn_a = vec![0usize; l + 1];
        let mut failed = vec![0usize; l + 1];
        for t in 0..coupled {
            // A holds L - 1 + t balls: the originals 2..=L plus one copy per draw
            let pick = rng.random_range(0..l - 1 + t);
            let k = if pick < l - 1 { pick + 2 } else { history[pick - (l - 1)] };
            let p = be_test_probability(l, t, drawn_a[k], failed[k]);
            if rng.random::<f64>() >= p {
                failed[k] += 1;
            }
            drawn_a[k] += 1;
            history.push(k);
        }
        let b_twos = drawn_a[2] - failed[2];
        let y2 = b_twos + Self::polya_twos(1 + b_twos, l + coupled, x1, rng);
        CouplingSample { x1, x2: drawn_a[2], y1: x1, y2 }
    }
}

/// Number of times ball 2 is drawn in `steps` draws from an `L`-colour
/// Pólya urn with double replacement, started with one ball of each colour.
pub fn polya_ball_count<R: Rng + ?Sized>(l: usize, steps: usize, rng: &mut R) -> Result<usize> {
    if l < 2 {
        return Err(Error::InvalidParameter("urn needs at least two colours".into()));
    }
    Ok(BeCoupler::polya_twos(1, l, steps, rng))
}

pub fn mb_coupling_sample<R: Rng + ?Sized>(l: usize, n: usize, rng: &mut R) -> Result<CouplingSample> {
    Ok(MbCoupler::new(l, n)?.sample(rng))
}

pub fn be_coupling_sample<R: Rng + ?Sized>(l: usize, n: usize, rng: &mut R) -> Result<CouplingSample> {
    Ok(BeCoupler::new(l, n)?.sample(rng))
}

/// `2N / L^2`, the bound on `P(X_2 != Y_2)` shared by both constructions.
pub fn mismatch_bound(l: usize, n: usize) -> f64 {
    2.0 * n as f64 / (l as f64 * l as f64)
}

const BLOCK: usize = 1 << 16;

/// Draws `samples` coupling samples in parallel blocks. Block `b` uses the
/// stream seeded by `stream_seed(seed, tag, L, b)`, so the output does not
/// depend on scheduling.
pub fn coupling_samples(
    kind: CouplingKind,
    l: usize,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<CouplingSample>> {
    let tag = match kind {
        CouplingKind::Mb => "coupling-mb",
        CouplingKind::Be => "coupling-be",
    };
    let blocks = samples.div_ceil(BLOCK);
    let run_block = |b: usize, draw: &dyn Fn(&mut ChaCha8Rng) -> CouplingSample| {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, tag, l as u64, b as u64));
        let len = BLOCK.min(samples - b * BLOCK);
        (0..len).map(|_| draw(&mut rng)).collect::<Vec<_>>()
    };
    let out: Vec<Vec<CouplingSample>> = match kind {
        CouplingKind::Mb => {
            let c = MbCoupler::new(l, n)?;
            (0..blocks).into_par_iter().map(|b| run_block(b, &|r| c.sample(r))).collect()
        }
        CouplingKind::Be if n == 0 => {
            return Ok(vec![CouplingSample { x1: 0, x2: 0, y1: 0, y2: 0 }; samples]);
        }
        CouplingKind::Be => {
            let c = BeCoupler::new(l, n)?;
            (0..blocks).into_par_iter().map(|b| run_block(b, &|r| c.sample(r))).collect()
        }
    };
    Ok(out.into_iter().flatten().collect())
}

/// Monte Carlo estimate of `P(X_2 != Y_2)` with its binomial standard error.
pub fn mismatch_probability(kind: CouplingKind, l: usize, n: usize, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if samples < 1000 {
        return Err(Error::InvalidParameter(format!("mismatch estimation needs at least 1000 samples, got {samples}")));
    }
    let draws = coupling_samples(kind, l, n, samples, seed)?;
    let hits = draws.iter().filter(|s| s.x2 != s.y2).count();
    let p = hits as f64 / samples as f64;
    Ok((p, (p * (1.0 - p) / samples as f64).sqrt()))
}
