//! Simulation and exact analysis of the repeated balls-into-bins process
//! with Fermi-Dirac, Maxwell-Boltzmann and Bose-Einstein reassignment, its
//! mean-field limit and the associated single-server queue.
//!
//! ```
//! use grbb_core::{OccupancyVector, ReassignmentLaw};
//! use rand::SeedableRng;
//!
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let mut state = OccupancyVector::concentrated(10, 6).unwrap();
//! state.step(ReassignmentLaw::BoseEinstein, &mut rng);
//! assert_eq!(state.total(), 6);
//! ```

pub mod combinatorics;
pub mod couplings;
pub mod error;
pub mod experiments;
pub mod gof;
pub mod grbb;
pub mod measures;
pub mod nonlinear;
pub mod seeding;
pub mod statistics;

pub use error::{Error, Result};
pub use grbb::OccupancyVector;
pub use measures::{JointPmf, Pmf};
pub use statistics::ReassignmentLaw;
