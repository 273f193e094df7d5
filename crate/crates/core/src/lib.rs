//! Planning, execution and verification of transformations between bipartite
//! pure entangled states driven by one party's local operations.
//!
//! * [`singlecopy`]: optimal probabilistic conversion through a unitary
//!   dilation of a diagonal contraction, with no ancilla.
//! * [`deterministic`]: majorization-based deterministic conversion with a
//!   POVM, block unitary and Bob-side corrections.
//! * [`multicopy`]: deterministic conversion from `n` identical copies.
//! * [`montecarlo`]: seeded Born-rule sampling used to check the above.
//! * [`verify`]: randomized invariant suites, drawing instances from [`random`].

pub mod deterministic;
pub mod error;
pub mod linalg;
pub mod montecarlo;
pub mod multicopy;
pub mod random;
pub mod singlecopy;
pub mod statecore;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::ComplexMatrix;
