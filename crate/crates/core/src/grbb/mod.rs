//! The general repeated balls-into-bins chain.
//!
//! At every step each non-empty bin releases one ball and all released balls
//! are reassigned together according to a [`ReassignmentLaw`]. The number of
//! reassigned balls is read off the state, so the total ball count is
//! conserved by construction.

mod exact;

use std::ops::Deref;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{empirical_measure, Pmf};
use crate::statistics::ReassignmentLaw;

pub use exact::{
    count_compositions, exact_mixing_time, stationary_exact, MixingStart, TransitionMatrix, STATE_SPACE_GUARD,
};

/// Ball counts of the `L` bins.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OccupancyVector(Vec<usize>);

impl OccupancyVector {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::EmptyOccupancy);
        }
        Ok(Self(counts))
    }

    pub fn zeros(l: usize) -> Result<Self> {
        Self::new(vec![0; l])
    }

    /// All `n` balls in the first of `l` bins.
    pub fn concentrated(l: usize, n: usize) -> Result<Self> {
        let mut v = Self::zeros(l)?;
        v.0[0] = n;
        Ok(v)
    }

    pub fn sites(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn occupied(&self) -> usize {
        self.0.iter().filter(|&&c| c > 0).count()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }

    pub fn empirical_measure(&self) -> Pmf {
        empirical_measure(&self.0).expect("occupancy vectors are non-empty")
    }

    /// One step of the chain, in place.
    pub fn step<R: Rng + ?Sized>(&mut self, law: ReassignmentLaw, rng: &mut R) {
        let mut released = 0;
        for c in self.0.iter_mut().filter(|c| **c > 0) {
            *c -= 1;
            released += 1;
        }
        // released <= L, so every law accepts it
        law.sample_into(&mut self.0, released, rng);
    }
}

impl Deref for OccupancyVector {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

/// Returns the state after one step from `state`.
pub fn grbb_step<R: Rng + ?Sized>(law: ReassignmentLaw, state: &OccupancyVector, rng: &mut R) -> OccupancyVector {
    let mut next = state.clone();
    next.step(law, rng);
    next
}

/// Empirical measures `Q_L(0), ..., Q_L(T)` along one trajectory.
pub fn grbb_trajectory<R: Rng + ?Sized>(
    law: ReassignmentLaw,
    init: &OccupancyVector,
    horizon: usize,
    rng: &mut R,
) -> Vec<Pmf> {
    let mut state = init.clone();
    let mut out = Vec::with_capacity(horizon + 1);
    out.push(state.empirical_measure());
    for _ in 0..horizon {
        state.step(law, rng);
        out.push(state.empirical_measure());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use ReassignmentLaw::*;

    #[test]
    fn zero_state_is_frozen() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let z = OccupancyVector::zeros(6).unwrap();
        for law in ReassignmentLaw::ALL {
            assert_eq!(grbb_step(law, &z, &mut rng), z);
            let traj = grbb_trajectory(law, &z, 4, &mut rng);
            assert_eq!(traj, vec![Pmf::dirac(0); 5]);
        }
    }

    #[test]
    fn fd_full_state_is_frozen() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ones = OccupancyVector::new(vec![1; 9]).unwrap();
        for _ in 0..20 {
            assert_eq!(grbb_step(FermiDirac, &ones, &mut rng), ones);
        }
    }

    #[test]
    fn single_mobile_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = OccupancyVector::new(vec![2, 0]).unwrap();
        for law in ReassignmentLaw::ALL {
            for _ in 0..50 {
                let next = grbb_step(law, &s, &mut rng);
                assert!(next[..] == [2, 0] || next[..] == [1, 1], "{next:?}");
            }
        }
    }

    #[test]
    fn trajectory_shape_and_conservation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let init = OccupancyVector::new(vec![3, 0, 1, 0, 5]).unwrap();
        assert_eq!(grbb_trajectory(BoseEinstein, &init, 0, &mut rng), vec![init.empirical_measure()]);
        for law in ReassignmentLaw::ALL {
            let mut s = init.clone();
            for _ in 0..500 {
                s.step(law, &mut rng);
                assert_eq!(s.total(), 9);
            }
        }
        let t = grbb_trajectory(FermiDirac, &OccupancyVector::new(vec![1, 0]).unwrap(), 1, &mut rng);
        assert_eq!(t.len(), 2);
        assert_eq!(t[1], Pmf::bernoulli(0.5).unwrap());
    }

    #[test]
    fn constructors_validate() {
        assert!(OccupancyVector::new(vec![]).is_err());
        let c = OccupancyVector::concentrated(4, 3).unwrap();
        assert_eq!(&c[..], &[3, 0, 0, 0]);
        assert_eq!(c.occupied(), 1);
    }
}
