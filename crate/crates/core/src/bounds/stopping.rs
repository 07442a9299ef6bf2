//! Cumulative bounds under a predictable stopping time.
//!
//! With I_t = 1{tau >= t} decided from H_{t-1} and l_t = I_t l(W_t, Z_{t,0}),
//!
//! ```text
//!   |L_tau^ho - L_tau^tr| <= 2 sum_t sqrt(2 I(l_t; U_t | G^st_{t-1})),
//!   L_tau^ho <= (1+C) L_tau^tr + (1/eta) sum_t I(l_t; U_t | G^st_{t-1}),
//! ```
//!
//! where G^st_{t-1} = (H_{t-1}, Z_{t,0}, Z_{t,1}, I_t) and the risks are cumulative sums.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::cmi_grouped;
use crate::joint::{combine, grouping_from_keys, DiscreteJoint};
use crate::scalar::float_key;
use crate::supersample::{names, risks};

use super::report::{terms, BoundReport, Mode};
use super::shifted::{check_feasible, fast_rate_reports, FastRateInputs};
use super::sqrt2_sum;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StoppingRule {
    /// tau = N.
    Never,
    /// tau = 0.
    Immediately,
    /// tau = the given round.
    AtRound { tau: usize },
    /// tau = the first round whose selected loss is nonzero (or N).
    AfterFirstLoss,
    /// Continues while the current ghost loss is zero. Not predictable; kept as a
    /// negative control for the structural check.
    PeekGhost,
}

impl StoppingRule {
    /// Names the non-history input the rule reads, if any.
    pub fn illegal_dependence(&self) -> Option<&'static str> {
        match self {
            StoppingRule::PeekGhost => Some("reads the round-t ghost coordinate"),
            _ => None,
        }
    }

    /// I_t given the selected losses of rounds before t and the current ghost loss.
    pub fn indicator(&self, t: usize, past_selected: &[f64], ghost: f64) -> bool {
        match self {
            StoppingRule::Never => true,
            StoppingRule::Immediately => false,
            StoppingRule::AtRound { tau } => t <= *tau,
            StoppingRule::AfterFirstLoss => past_selected.iter().all(|&l| l == 0.0),
            StoppingRule::PeekGhost => ghost == 0.0,
        }
    }
}

pub fn stopping_bound(j: &DiscreteJoint<f64>, rule: &StoppingRule, c: f64, eta: f64) -> Result<Vec<BoundReport>> {
    if let Some(dep) = rule.illegal_dependence() {
        return Err(Error::NotPredictable(dep.into()));
    }
    check_feasible(c, eta)?;
    if !j.meta.exchangeable || !j.meta.selected_update {
        return Ok(vec![BoundReport::premise_unmet("stopping.slow", "rows are not declared exchangeable")]);
    }
    let n = risks::horizon(j)?;
    let m = j.len();
    let mut past: Vec<Vec<f64>> = vec![Vec::with_capacity(n); m];
    let (mut tr, mut ho) = (0.0, 0.0);
    let (mut il, mut iw) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for t in 1..=n {
        let u = j.ints(&names::u(t))?;
        let l0 = j.numeric(&names::l0(t))?;
        let l1 = j.numeric(&names::l1(t))?;
        let ind: Vec<bool> = (0..m)
            .map(|i| {
                let ghost = if u[i] == 0 { l1[i] } else { l0[i] };
                rule.indicator(t, &past[i], ghost)
            })
            .collect();
        // The indicator must be a function of H_{t-1}.
        let h = j.group_ids(&[&names::hist(t - 1)])?;
        let mut seen: Vec<Option<bool>> = vec![None; h.count];
        for i in 0..m {
            match seen[h.ids[i] as usize] {
                None => seen[h.ids[i] as usize] = Some(ind[i]),
                Some(v) if v != ind[i] => {
                    return Err(Error::NotPredictable(format!(
                        "indicator at round {t} differs between atoms with the same history"
                    )))
                }
                _ => {}
            }
        }
        let sel: Vec<f64> = (0..m).map(|i| if u[i] == 0 { l0[i] } else { l1[i] }).collect();
        let gh: Vec<f64> = (0..m).map(|i| if u[i] == 0 { l1[i] } else { l0[i] }).collect();
        let f = |b: bool| if b { 1.0 } else { 0.0 };
        tr += j.expect_with(|i| f(ind[i]) * sel[i]);
        ho += j.expect_with(|i| f(ind[i]) * gh[i]);
        let ell: Vec<f64> = (0..m).map(|i| f(ind[i]) * l0[i]).collect();
        let ctx = names::context(t);
        let ctx: Vec<&str> = ctx.iter().map(String::as_str).collect();
        let g = combine(&j.group_ids(&ctx)?, &grouping_from_keys(ind.iter().copied()));
        let gu = j.group_ids(&[&names::u(t)])?;
        let gl = grouping_from_keys(ell.iter().map(|&v| float_key(v)));
        let gw = j.group_ids(&[&names::w(t)])?;
        il.push(cmi_grouped(j.probs(), &gl, &gu, &g).max(0.0));
        iw.push(cmi_grouped(j.probs(), &gw, &gu, &g).max(0.0));
        for i in 0..m {
            past[i].push(sel[i]);
        }
    }
    let mut out = vec![BoundReport::inequality(
        "stopping.slow",
        (ho - tr).abs(),
        terms(&[("loss_scmi", 2.0 * sqrt2_sum(&il))]),
        Mode::exact(),
    )];
    let x = FastRateInputs {
        holdout: ho,
        train: tr,
        info_loss: il.iter().sum(),
        info_state: Some(iw.iter().sum()),
        scale: 1.0,
    };
    out.extend(fast_rate_reports("stopping", &x, c, eta)?);
    Ok(out)
}
