//! Shifted-Rademacher fast-rate bounds.
//!
//! For (C, eta) on the feasible side of
//!
//! ```text
//!   phi(eta) = e^{2 eta} + e^{-2 eta (C+1)} - 2 <= 0
//! ```
//!
//! the holdout risk satisfies ho <= (1+C) tr + s J / eta, where J is an information sum
//! and s its scale (1/n for averaged risks, 1 for cumulative ones, 1/(p_min n) for
//! importance-weighted ones). Optimizing over C with eta = C/8 gives the explicit form
//!
//! ```text
//!   ho <= tr + 8 s J + 4 sqrt(2 tr s J),      and   ho <= 2 s J / ln 2   when tr = 0.
//! ```

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::joint::DiscreteJoint;
use crate::supersample::{names, risks};

use super::report::{terms, BoundReport, Mode};
use super::round_cmi;

/// Training risk at or below this counts as zero for the interpolation form.
pub const ZERO_TRAIN_TOL: f64 = 1e-14;

/// phi(eta) for contraction C, evaluated with `exp_m1` to keep precision near eta = 0.
pub fn feasibility_residual(c: f64, eta: f64) -> f64 {
    (2.0 * eta).exp_m1() + (-2.0 * eta * (c + 1.0)).exp_m1()
}

pub fn check_feasible(c: f64, eta: f64) -> Result<()> {
    let residual = feasibility_residual(c, eta);
    if !(c > 0.0 && eta > 0.0) || !(residual <= 0.0) {
        return Err(Error::Infeasible { c, eta, residual });
    }
    Ok(())
}

/// The unique positive root of phi for C > 0 (phi is convex with phi(0) = 0, phi'(0) = -2C).
pub fn frontier_root(c: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while feasibility_residual(c, hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    // Start from eta = C/8, which is feasible for C in (0, 1].
    if c <= 1.0 {
        lo = lo.max(c / 8.0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if feasibility_residual(c, mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    lo
}

/// tr + 8x + 4 sqrt(2 tr x) for a scaled information term x = s J.
pub fn explicit_fast_rate(train: f64, x: f64) -> f64 {
    train + 8.0 * x + 4.0 * (2.0 * train.max(0.0) * x.max(0.0)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FastRateInputs {
    pub holdout: f64,
    pub train: f64,
    /// Information sum through the loss.
    pub info_loss: f64,
    /// Information sum through the state, when available.
    pub info_state: Option<f64>,
    pub scale: f64,
}

/// Main, state, explicit and zero-train forms under the names `{prefix}.*`.
pub fn fast_rate_reports(prefix: &str, x: &FastRateInputs, c: f64, eta: f64) -> Result<Vec<BoundReport>> {
    check_feasible(c, eta)?;
    let mut out = Vec::new();
    let mut infos = vec![("loss", x.info_loss)];
    if let Some(s) = x.info_state {
        infos.push(("state", s));
    }
    for (tag, info) in &infos {
        out.push(BoundReport::inequality(
            format!("{prefix}.main.{tag}"),
            x.holdout,
            terms(&[("scaled_train", (1.0 + c) * x.train), ("info", x.scale * info / eta)]),
            Mode::exact(),
        ));
    }
    for (tag, info) in &infos {
        let sj = x.scale * info;
        out.push(BoundReport::inequality(
            format!("{prefix}.explicit.{tag}"),
            x.holdout,
            terms(&[
                ("train", x.train),
                ("info", 8.0 * sj),
                ("cross", 4.0 * (2.0 * x.train.max(0.0) * sj).sqrt()),
            ]),
            Mode::exact(),
        ));
    }
    if x.train.abs() <= ZERO_TRAIN_TOL {
        out.push(BoundReport::inequality(
            format!("{prefix}.zero_train"),
            x.holdout,
            terms(&[("info", 2.0 * x.scale * x.info_loss / LN_2)]),
            Mode::exact(),
        ));
    }
    Ok(out)
}

pub fn shifted_rademacher_bound(j: &DiscreteJoint<f64>, c: f64, eta: f64) -> Result<Vec<BoundReport>> {
    check_feasible(c, eta)?;
    if !j.meta.exchangeable || !j.meta.selected_update {
        return Ok(vec![BoundReport::premise_unmet("shifted.main.loss", "rows are not declared exchangeable")]);
    }
    let n = risks::horizon(j)?;
    let r = risks::sequential_risks(j)?;
    let (mut jl, mut jw) = (0.0, 0.0);
    for t in 1..=n {
        jl += round_cmi(j, &[&names::lplus(t)], t)?;
        jw += round_cmi(j, &[&names::w(t)], t)?;
    }
    let x = FastRateInputs { holdout: r.holdout, train: r.train, info_loss: jl, info_state: Some(jw), scale: 1.0 / n as f64 };
    fast_rate_reports("shifted", &x, c, eta)
}
