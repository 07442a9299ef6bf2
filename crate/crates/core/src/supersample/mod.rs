//! Sequential supersample experiments: specifications, exact enumeration, sampling,
//! and the weighted risks with their correlation identities.

pub mod enumerate;
pub mod names;
pub mod random;
pub mod risks;
pub mod sample;
pub mod spec;

pub use enumerate::{enumerate_joint, EnumOptions, DEFAULT_CAP};
pub use risks::{
    conditional_population_holdout, row_swap_correlation, selector_fairness_deviation, sequential_risks,
    two_coordinate_correlation, Risks,
};
pub use sample::{sample_transcripts, RoundRecord, Transcript};
pub use spec::{
    zero_one_loss, History, Learner, LearnerSpec, OutcomeSpace, Record, Retention, RowKernelSpec, UpdateSpec,
    WeightSpec, World, WorldSpec,
};

use crate::error::Result;
use crate::joint::DiscreteJoint;
use crate::scalar::Scalar;

/// Validates both specifications and enumerates their joint law with default options.
pub fn enumerate<S: Scalar>(world: &WorldSpec, learner: &LearnerSpec, n: usize) -> Result<DiscreteJoint<S>> {
    world.validate()?;
    learner.validate(world.space.len())?;
    enumerate_joint::<S>(world, learner, n, &EnumOptions::default())
}
