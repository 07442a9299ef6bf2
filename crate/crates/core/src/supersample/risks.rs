//! Weighted train/holdout risks and their correlation identities.
//!
//! With eps_t = 2U_t - 1, L+_t = Q_t l(W_t, Z_{t,0}) and L-_t = Q_t l(W_t, Z_{t,1}):
//!
//! ```text
//!   train   = (1/n) sum_t E[Q_t l(W_t, Z_{t,U_t})]
//!   holdout = (1/n) sum_t E[Q_t l(W_t, Z_{t,1-U_t})]
//!   gap     = holdout - train
//!           = (2/n) sum_t E[eps_t L+_t]            (exchangeable rows, selected updates)
//!           = (1/n) sum_t E[eps_t (L+_t - L-_t)]   (fair selectors only)
//! ```

use crate::error::{Error, Result};
use crate::joint::DiscreteJoint;
use crate::scalar::Scalar;

use super::names;

#[derive(Clone, Debug, PartialEq)]
pub struct Risks<S> {
    pub train: S,
    pub holdout: S,
    pub gap: S,
}

pub fn horizon<S>(j: &DiscreteJoint<S>) -> Result<usize> {
    j.meta.horizon.ok_or_else(|| Error::Schema("joint has no horizon".into()))
}

struct RoundCols<S> {
    u: Vec<i64>,
    lp: Vec<S>,
    lm: Vec<S>,
}

fn round_cols<S: Scalar>(j: &DiscreteJoint<S>, t: usize) -> Result<RoundCols<S>> {
    Ok(RoundCols { u: j.ints(&names::u(t))?, lp: j.numeric(&names::lplus(t))?, lm: j.numeric(&names::lminus(t))? })
}

fn eps<S: Scalar>(u: i64) -> S {
    if u == 1 {
        S::one()
    } else {
        -S::one()
    }
}

pub fn sequential_risks<S: Scalar>(j: &DiscreteJoint<S>) -> Result<Risks<S>> {
    let n = horizon(j)?;
    let (mut tr, mut ho) = (S::zero(), S::zero());
    for t in 1..=n {
        let c = round_cols(j, t)?;
        tr = tr + j.expect_with(|i| if c.u[i] == 0 { c.lp[i].clone() } else { c.lm[i].clone() });
        ho = ho + j.expect_with(|i| if c.u[i] == 0 { c.lm[i].clone() } else { c.lp[i].clone() });
    }
    let nn = S::from_usize(n);
    let train = tr / nn.clone();
    let holdout = ho / nn;
    Ok(Risks { gap: holdout.clone() - train.clone(), train, holdout })
}

/// (2/n) sum_t E[eps_t L+_t]; refuses worlds not declared exchangeable.
pub fn row_swap_correlation<S: Scalar>(j: &DiscreteJoint<S>) -> Result<S> {
    if !j.meta.exchangeable || !j.meta.selected_update {
        return Err(Error::NotExchangeable);
    }
    let n = horizon(j)?;
    let mut acc = S::zero();
    for t in 1..=n {
        let c = round_cols(j, t)?;
        acc = acc + j.expect_with(|i| eps::<S>(c.u[i]) * c.lp[i].clone());
    }
    Ok(S::from_usize(2) * acc / S::from_usize(n))
}

/// (1/n) sum_t E[eps_t (L+_t - L-_t)].
pub fn two_coordinate_correlation<S: Scalar>(j: &DiscreteJoint<S>) -> Result<S> {
    let n = horizon(j)?;
    let mut acc = S::zero();
    for t in 1..=n {
        let c = round_cols(j, t)?;
        acc = acc + j.expect_with(|i| eps::<S>(c.u[i]) * (c.lp[i].clone() - c.lm[i].clone()));
    }
    Ok(acc / S::from_usize(n))
}

/// Largest |P(U_t = 1 | G_{t-1} = g) - 1/2| over rounds and positive-mass contexts.
pub fn selector_fairness_deviation(j: &DiscreteJoint<f64>) -> Result<f64> {
    let n = horizon(j)?;
    let mut worst: f64 = 0.0;
    for t in 1..=n {
        let ctx = names::context(t);
        let refs: Vec<&str> = ctx.iter().map(String::as_str).collect();
        let g = j.group_ids(&refs)?;
        let u = j.ints(&names::u(t))?;
        let mut mass = vec![0.0; g.count];
        let mut ones = vec![0.0; g.count];
        for (i, p) in j.probs().iter().enumerate() {
            mass[g.ids[i] as usize] += p;
            if u[i] == 1 {
                ones[g.ids[i] as usize] += p;
            }
        }
        for (m, o) in mass.iter().zip(&ones) {
            if *m > 0.0 {
                worst = worst.max((o / m - 0.5).abs());
            }
        }
    }
    Ok(worst)
}

/// (1/n) sum_t E[Q_t R_t(W_t)] where R_t is the conditional population risk column.
pub fn conditional_population_holdout<S: Scalar>(j: &DiscreteJoint<S>) -> Result<S> {
    if !j.meta.conditional_product {
        return Err(Error::Invalid("world is not declared conditional-product".into()));
    }
    let n = horizon(j)?;
    let mut acc = S::zero();
    for t in 1..=n {
        let q = j.numeric(&names::q(t))?;
        let r = j.numeric(&names::rpop(t))?;
        acc = acc + j.expect_with(|i| q[i].clone() * r[i].clone());
    }
    Ok(acc / S::from_usize(n))
}
