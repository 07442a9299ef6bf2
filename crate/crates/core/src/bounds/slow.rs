//! Square-root (slow-rate) bounds on the sequential train/holdout gap.
//!
//! ```text
//!   |gap| <= (2/n) sum_t sqrt(2 I(L+_t; U_t | G_{t-1}))              exchangeable rows
//!         <= 2 sqrt((2/n) sum_t I(W_t; U_t | G_{t-1}))
//!
//!   |gap| <= (1/n) sum_t sqrt(2 I(L+_t - L-_t; U_t | G_{t-1}))       fair selectors only
//!         <= (1/n) sum_t sqrt(2 I((L+_t, L-_t); U_t | G_{t-1}))
//!         <= (1/n) sum_t sqrt(2 I(W_t; U_t | G_{t-1}))
//!         <= sqrt((2/n) sum_t I(W_t; U_t | G_{t-1}))
//! ```

use crate::error::{Error, Result};
use crate::joint::DiscreteJoint;
use crate::supersample::{names, risks};

use super::report::{terms, BoundReport, Mode};
use super::{round_cmi, round_cmi_values, sqrt2_sum};

pub fn slow_rate_bound(j: &DiscreteJoint<f64>) -> Result<Vec<BoundReport>> {
    if !j.meta.exchangeable || !j.meta.selected_update {
        return Err(Error::NotExchangeable);
    }
    let n = risks::horizon(j)?;
    let gap = risks::sequential_risks(j)?.gap;
    let mut il = Vec::with_capacity(n);
    let mut iw = Vec::with_capacity(n);
    for t in 1..=n {
        il.push(round_cmi(j, &[&names::lplus(t)], t)?);
        iw.push(round_cmi(j, &[&names::w(t)], t)?);
    }
    let nf = n as f64;
    let loss_term = 2.0 / nf * sqrt2_sum(&il);
    let state_term = 2.0 / nf * sqrt2_sum(&iw);
    let jensen = 2.0 * (2.0 / nf * iw.iter().sum::<f64>()).sqrt();
    let mut out = vec![
        BoundReport::inequality("slow_rate.loss", gap.abs(), terms(&[("loss_scmi", loss_term)]), Mode::exact()),
        BoundReport::inequality("slow_rate.state", loss_term, terms(&[("state_scmi", state_term)]), Mode::exact()),
        BoundReport::inequality("slow_rate.jensen", state_term, terms(&[("state_scmi_total", jensen)]), Mode::exact()),
    ];
    for t in 0..n {
        out.push(BoundReport::inequality(
            format!("slow_rate.data_processing[t={}]", t + 1),
            il[t],
            terms(&[("state_cmi", iw[t])]),
            Mode::exact(),
        ));
    }
    Ok(out)
}

pub fn two_coordinate_bound(j: &DiscreteJoint<f64>) -> Result<Vec<BoundReport>> {
    let n = risks::horizon(j)?;
    let gap = risks::sequential_risks(j)?.gap;
    let (mut id, mut ip, mut iw) = (Vec::new(), Vec::new(), Vec::new());
    for t in 1..=n {
        let lp = j.numeric(&names::lplus(t))?;
        let lm = j.numeric(&names::lminus(t))?;
        let d: Vec<f64> = lp.iter().zip(&lm).map(|(a, b)| a - b).collect();
        id.push(round_cmi_values(j, &d, t)?);
        ip.push(round_cmi(j, &[&names::lplus(t), &names::lminus(t)], t)?);
        iw.push(round_cmi(j, &[&names::w(t)], t)?);
    }
    let nf = n as f64;
    let a = sqrt2_sum(&id) / nf;
    let b = sqrt2_sum(&ip) / nf;
    let c = sqrt2_sum(&iw) / nf;
    let d = (2.0 / nf * iw.iter().sum::<f64>()).sqrt();
    Ok(vec![
        BoundReport::inequality("two_coordinate.difference", gap.abs(), terms(&[("difference_scmi", a)]), Mode::exact()),
        BoundReport::inequality("two_coordinate.pair", a, terms(&[("pair_scmi", b)]), Mode::exact()),
        BoundReport::inequality("two_coordinate.state", b, terms(&[("state_scmi", c)]), Mode::exact()),
        BoundReport::inequality("two_coordinate.jensen", c, terms(&[("state_scmi_total", d)]), Mode::exact()),
    ])
}
