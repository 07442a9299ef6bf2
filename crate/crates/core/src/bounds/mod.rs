//! Bound evaluation: each inequality becomes a [`BoundReport`] with both sides, the
//! margin, and a verdict.

pub mod batch;
pub mod bernstein;
pub mod report;
pub mod shifted;
pub mod slow;
pub mod stopping;

pub use batch::{batch_ecmi_bound, enumerate_batch, random_batch_problem, vc_pattern_bound, BatchAlgorithm, BatchProblem};
pub use bernstein::{bernstein_bound, psi, psi_envelope, BernsteinParams};
pub use report::{summary_block, tally, write_reports_csv, BoundReport, Mode, Relation, Verdict, EXACT_TOL};
pub use shifted::{
    explicit_fast_rate, fast_rate_reports, feasibility_residual, frontier_root, shifted_rademacher_bound, FastRateInputs,
};
pub use slow::{slow_rate_bound, two_coordinate_bound};
pub use stopping::{stopping_bound, StoppingRule};

use crate::error::Result;
use crate::info::{cmi_values, conditional_mutual_information};
use crate::joint::DiscreteJoint;
use crate::supersample::names;

/// I(X; U_t | G_{t-1}) for named coordinates X.
pub(crate) fn round_cmi(j: &DiscreteJoint<f64>, x: &[&str], t: usize) -> Result<f64> {
    let ctx = names::context(t);
    let ctx: Vec<&str> = ctx.iter().map(String::as_str).collect();
    Ok(conditional_mutual_information(j, x, &[&names::u(t)], &ctx)?.clamped())
}

/// I(X; U_t | G_{t-1}) for per-atom values X.
pub(crate) fn round_cmi_values(j: &DiscreteJoint<f64>, x: &[f64], t: usize) -> Result<f64> {
    let ctx = names::context(t);
    let ctx: Vec<&str> = ctx.iter().map(String::as_str).collect();
    Ok(cmi_values(j, x, &[&names::u(t)], &ctx)?.clamped())
}

/// sum_t sqrt(2 I_t) with each term clamped at zero first.
pub(crate) fn sqrt2_sum(info: &[f64]) -> f64 {
    info.iter().map(|i| (2.0 * i.max(0.0)).sqrt()).sum()
}

/// Prepends `prefix/` to every report name.
pub fn prefixed(reports: Vec<BoundReport>, prefix: &str) -> Vec<BoundReport> {
    reports
        .into_iter()
        .map(|mut r| {
            r.name = format!("{prefix}/{}", r.name);
            r
        })
        .collect()
}
