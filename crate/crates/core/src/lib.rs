//! Sequential supersample laboratory.
//!
//! Builds paired-row experiments (online learning, streaming active learning, stochastic
//! bandits), computes their information quantities exactly on small instances and by
//! Monte Carlo on larger ones, and checks generalization identities and bounds as
//! [`bounds::BoundReport`]s.

pub mod active;
pub mod bandit;
pub mod bounds;
pub mod error;
pub mod info;
pub mod joint;
pub mod online;
pub mod rng;
pub mod scalar;
pub mod supersample;

pub use error::{Error, Result};
pub use joint::{DiscreteJoint, JointKind, JointMeta, Value};
pub use scalar::{Rational, Scalar};
