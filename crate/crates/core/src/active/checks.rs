//! Importance-weighted risks, the population identity and the active SCMI bounds.
//!
//! ```text
//!   L_IW    = (1/n) sum_t E[Q_{t,U} l(W_n, Z_{t,U}) / p_{t,U}]
//!   L_IW_ho = (1/n) sum_t E[Q_{t,1-U} l(W_n, Z_{t,1-U}) / p_{t,1-U}] = E[R(W_n)]
//!
//!   |E[R(W_n)] - L_IW| <= (2/(p_min n)) sum_t sqrt(2 I(L+_{n,t}; U_t | G_{t-1}))
//!   E[R(W_n)] <= (1+C) L_IW + (1/(eta p_min n)) sum_t I(L+_{n,t}; U_t | G_{t-1})
//!
//!   I(L+_{n,t}; U_t | G) = sum_g P(g) Q_{t,0}(g) I_g(l(W_n, Z_{t,0}); U_t)
//!                        <= I(W_n; U_t | G)
//! ```
//!
//! G here is the active context (H_{t-1}, X, Y, V for both coordinates). The coin sits
//! inside it, so Q_{t,0} and p_{t,0} are constant on each context cell.

use crate::bounds::report::{terms, BoundReport, Mode};
use crate::bounds::shifted::{fast_rate_reports, FastRateInputs};
use crate::error::{Error, Result};
use crate::info::{cmi_by_group, conditional_mutual_information};
use crate::joint::{DiscreteJoint, JointKind};
use crate::scalar::Scalar;
use crate::supersample::risks::{self, horizon};

use super::names;

fn check_active<S>(j: &DiscreteJoint<S>) -> Result<(usize, f64)> {
    if j.meta.kind != JointKind::Active {
        return Err(Error::Schema("joint does not carry the active schema".into()));
    }
    let p_min = j.meta.param("p_min").ok_or_else(|| Error::Schema("active joint has no p_min".into()))?;
    Ok((horizon(j)?, p_min))
}

fn premise<S>(j: &DiscreteJoint<S>, name: &str) -> std::result::Result<(usize, f64), BoundReport> {
    check_active(j).map_err(|e| BoundReport::premise_unmet(name, e.to_string()))
}

/// (L_IW, L_IW_ho) of the terminal predictor.
pub fn iw_risks<S: Scalar>(j: &DiscreteJoint<S>) -> Result<(S, S)> {
    check_active(j)?;
    let r = risks::sequential_risks(j)?;
    Ok((r.train, r.holdout))
}

/// E[R(W_m)].
pub fn expected_risk<S: Scalar>(j: &DiscreteJoint<S>, m: usize) -> Result<S> {
    j.expect(&names::rpop(m))
}

/// Per-atom loss l(W_m, Z_{t,u}) from the stored loss table.
fn raw_loss(j: &DiscreteJoint<f64>, m: usize, u: usize, t: usize) -> Result<Vec<f64>> {
    let table = j.meta.loss_table.as_ref().ok_or_else(|| Error::Schema("active joint has no loss table".into()))?;
    let labels = j.meta.param("labels").ok_or_else(|| Error::Schema("active joint has no label count".into()))? as i64;
    let w = j.ints(&names::w(m))?;
    let x = j.ints(&names::x(u, t))?;
    let y = j.ints(&names::y(u, t))?;
    Ok((0..j.len()).map(|i| table[w[i] as usize][(x[i] * labels + y[i]) as usize]).collect())
}

/// Q_{t,u} l(W_m, Z_{t,u}) / p_{t,u} per atom.
fn weighted_loss(j: &DiscreteJoint<f64>, m: usize, u: usize, t: usize) -> Result<Vec<f64>> {
    let l = raw_loss(j, m, u, t)?;
    let q = j.ints(&names::q(u, t))?;
    let p = j.numeric(&names::p(u, t))?;
    Ok((0..j.len()).map(|i| if q[i] == 1 { l[i] / p[i] } else { 0.0 }).collect())
}

/// L_IW_ho = E[R(W_n)] as an exact identity.
pub fn population_identity_check(j: &DiscreteJoint<f64>) -> BoundReport {
    const NAME: &str = "active.population";
    let n = match premise(j, NAME) {
        Ok((n, _)) => n,
        Err(r) => return r,
    };
    if !j.meta.conditional_product {
        return BoundReport::premise_unmet(NAME, "active rows are not declared conditional-product");
    }
    match (iw_risks(j), expected_risk(j, n)) {
        (Ok((_, ho)), Ok(r)) => BoundReport::identity(NAME, ho, terms(&[("expected_risk", r)]), Mode::exact()),
        (Err(e), _) | (_, Err(e)) => BoundReport::inconclusive(NAME, e.to_string()),
    }
}

/// The population identity with W_n replaced by an earlier output W_m, recomputed from
/// the loss table rather than the stored weighted-loss columns.
pub fn nonterminal_identity_check(j: &DiscreteJoint<f64>, m: usize) -> Result<BoundReport> {
    let (n, _) = check_active(j)?;
    if m == 0 || m > n {
        return Err(Error::Invalid(format!("output round {m} outside 1..={n}")));
    }
    let mut ho = 0.0;
    for t in 1..=n {
        let u = j.ints(&names::u(t))?;
        let a = weighted_loss(j, m, 0, t)?;
        let b = weighted_loss(j, m, 1, t)?;
        ho += j.expect_with(|i| if u[i] == 0 { b[i] } else { a[i] });
    }
    ho /= n as f64;
    Ok(BoundReport::identity(
        format!("active.population[m={m}]"),
        ho,
        terms(&[("expected_risk", expected_risk(j, m)?)]),
        Mode::exact(),
    ))
}

/// p_min (L_IW_ho - L_IW) = (2/n) sum_t E[eps_t p_min L+_{n,t}].
pub fn row_swap_check(j: &DiscreteJoint<f64>) -> Result<BoundReport> {
    let (_, p_min) = check_active(j)?;
    let (tr, ho) = iw_risks(j)?;
    let corr = risks::row_swap_correlation(j)?;
    Ok(BoundReport::identity(
        "active.row_swap",
        p_min * (ho - tr),
        terms(&[("selector_correlation", p_min * corr)]),
        Mode::exact(),
    ))
}

fn info_sums(j: &DiscreteJoint<f64>, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut il, mut iw) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for t in 1..=n {
        let ctx = names::context(t);
        let ctx: Vec<&str> = ctx.iter().map(String::as_str).collect();
        let u = names::u(t);
        il.push(conditional_mutual_information(j, &[&names::lplus(t)], &[&u], &ctx)?.clamped());
        iw.push(conditional_mutual_information(j, &[&names::w(n)], &[&u], &ctx)?.clamped());
    }
    Ok((il, iw))
}

/// Square-root bound on |E[R(W_n)] - L_IW|.
pub fn active_slow_bound(j: &DiscreteJoint<f64>) -> Vec<BoundReport> {
    let (n, p_min) = match premise(j, "active.slow") {
        Ok(v) => v,
        Err(r) => return vec![r],
    };
    let run = || -> Result<Vec<BoundReport>> {
        let (tr, _) = iw_risks(j)?;
        let r = expected_risk(j, n)?;
        let (il, iw) = info_sums(j, n)?;
        let scale = 2.0 / (p_min * n as f64);
        let sq = |v: &[f64]| v.iter().map(|i| (2.0 * i).sqrt()).sum::<f64>();
        Ok(vec![
            BoundReport::inequality("active.slow.loss", (r - tr).abs(), terms(&[("loss_scmi", scale * sq(&il))]), Mode::exact()),
            BoundReport::inequality(
                "active.slow.state",
                scale * sq(&il),
                terms(&[("state_scmi", scale * sq(&iw))]),
                Mode::exact(),
            ),
        ])
    };
    run().unwrap_or_else(|e| vec![BoundReport::inconclusive("active.slow", e.to_string())])
}

/// Main, explicit and zero-train forms of the fast-rate bound, scale 1/(p_min n).
pub fn active_fast_bound(j: &DiscreteJoint<f64>, c: f64, eta: f64) -> Result<Vec<BoundReport>> {
    let (n, p_min) = check_active(j)?;
    let (tr, _) = iw_risks(j)?;
    let (il, iw) = info_sums(j, n)?;
    let x = FastRateInputs {
        holdout: expected_risk(j, n)?,
        train: tr,
        info_loss: il.iter().sum(),
        info_state: Some(iw.iter().sum()),
        scale: 1.0 / (p_min * n as f64),
    };
    fast_rate_reports("active", &x, c, eta)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueryAware {
    /// I(L+_{n,t}; U_t | G).
    pub lhs: f64,
    /// sum_g P(g) Q_{t,0}(g) I_g(l(W_n, Z_{t,0}); U_t).
    pub decomposed: f64,
    /// I(W_n; U_t | G).
    pub data_processing: f64,
}

pub fn query_aware_cmi(j: &DiscreteJoint<f64>, t: usize) -> Result<QueryAware> {
    let (n, _) = check_active(j)?;
    if t == 0 || t > n {
        return Err(Error::Invalid(format!("round {t} outside 1..={n}")));
    }
    let ctx = names::context(t);
    let ctx: Vec<&str> = ctx.iter().map(String::as_str).collect();
    let u = names::u(t);
    let lhs = conditional_mutual_information(j, &[&names::lplus(t)], &[&u], &ctx)?.clamped();
    let data_processing = conditional_mutual_information(j, &[&names::w(n)], &[&u], &ctx)?.clamped();

    let l = raw_loss(j, n, 0, t)?;
    let gx = crate::joint::grouping_from_keys(l.iter().map(f64::key));
    let gy = j.group_ids(&[&u])?;
    let gg = j.group_ids(&ctx)?;
    let parts = cmi_by_group(j.probs(), &gx, &gy, &gg);
    let q = j.ints(&names::q(0, t))?;
    let mut q_of = vec![0.0; gg.count];
    for (i, &g) in gg.ids.iter().enumerate() {
        q_of[g as usize] = q[i] as f64;
    }
    let decomposed = parts.iter().zip(&q_of).map(|(p, q)| p * q).sum::<f64>().max(0.0);
    Ok(QueryAware { lhs, decomposed, data_processing })
}

/// Decomposition identity and data-processing inequality for every round.
pub fn query_aware_reports(j: &DiscreteJoint<f64>) -> Vec<BoundReport> {
    let n = match premise(j, "active.query_aware") {
        Ok((n, _)) => n,
        Err(r) => return vec![r],
    };
    let mut out = Vec::new();
    for t in 1..=n {
        match query_aware_cmi(j, t) {
            Ok(qa) => {
                out.push(BoundReport::identity(
                    format!("active.query_aware[t={t}]"),
                    qa.lhs,
                    terms(&[("query_weighted_cmi", qa.decomposed)]),
                    Mode::exact(),
                ));
                out.push(BoundReport::inequality(
                    format!("active.query_aware.data_processing[t={t}]"),
                    qa.lhs,
                    terms(&[("state_cmi", qa.data_processing)]),
                    Mode::exact(),
                ));
            }
            Err(e) => out.push(BoundReport::inconclusive(format!("active.query_aware[t={t}]"), e.to_string())),
        }
    }
    out
}
