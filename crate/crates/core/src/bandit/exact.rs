//! Exact joint law of the paired bandit process up to a terminal round, with the virtual
//! arm drawn from the terminal exponential-weights posterior.
//!
//! The proof context before revealing U_s is
//!
//! ```text
//!   G^bd_{s-1} = (pairs_1, U_1, ..., pairs_{s-1}, U_{s-1}, pairs_s)
//! ```
//!
//! Policies are functions of the selected past, so they need no columns of their own.

use crate::bounds::report::{terms, BoundReport, Mode};
use crate::error::{Error, Result};
use crate::info::{conditional_mutual_information, mutual_information};
use crate::joint::{ColumnBuilder, DiscreteJoint, JointKind, JointMeta, Value};

use super::selector::selector_square_check;
use super::sim::gap_statistic;
use super::{behavior_policy, exp_weights, kl_to_uniform, smooth, BanditEnv, Behavior, Schedule};

pub mod names {
    pub fn arm(u: usize, s: usize) -> String {
        format!("A{u}_{s}")
    }
    pub fn reward(u: usize, s: usize) -> String {
        format!("R{u}_{s}")
    }
    pub fn u(s: usize) -> String {
        format!("U_{s}")
    }
    pub fn selected_arm(s: usize) -> String {
        format!("AS_{s}")
    }
    pub fn selected_reward(s: usize) -> String {
        format!("RS_{s}")
    }
    /// G_{s,u}(virtual arm).
    pub fn gap(u: usize, s: usize) -> String {
        format!("G{u}_{s}")
    }
    pub const VIRTUAL: &str = "ABAR";
    pub const REGRET: &str = "DELTA_RHO";
    pub const SMOOTHED_REGRET: &str = "DELTA_SMOOTHED";
    pub const EMPIRICAL: &str = "EMPIRICAL_GAP";
    pub const KL: &str = "KL_UNIFORM";

    pub fn context(s: usize) -> Vec<String> {
        let mut v = Vec::new();
        for r in 1..=s {
            v.extend([arm(0, r), reward(0, r), arm(1, r), reward(1, r)]);
            if r < s {
                v.push(u(r));
            }
        }
        v
    }

    pub fn selected_history(t: usize) -> Vec<String> {
        (1..=t).flat_map(|s| [selected_arm(s), selected_reward(s)]).collect()
    }
}

struct Branch {
    mass: f64,
    sums: Vec<f64>,
    rho: Vec<f64>,
    /// (pi_s, [(arm, reward); 2], u) per round.
    rounds: Vec<(Vec<f64>, [(usize, f64); 2], usize)>,
}

pub fn enumerate_bandit(
    env: &BanditEnv,
    sched: &Schedule,
    behavior: &Behavior,
    t: usize,
    cap: usize,
) -> Result<DiscreteJoint<f64>> {
    env.validate()?;
    sched.validate(env.k(), t)?;
    if t == 0 {
        return Err(Error::Invalid("terminal round must be at least 1".into()));
    }
    let k = env.k();
    let best = env.best();
    let mut frontier = vec![Branch { mass: 1.0, sums: vec![0.0; k], rho: vec![1.0 / k as f64; k], rounds: Vec::new() }];
    for s in 1..=t {
        let mut next = Vec::new();
        for br in &frontier {
            let pi = behavior_policy(behavior, sched, &br.rho, s)?;
            let feedback: Vec<((usize, f64), f64)> = (0..k)
                .flat_map(|a| {
                    let law = &env.arms[a];
                    let pa = pi[a];
                    law.values.iter().zip(&law.probs).map(move |(&r, &p)| ((a, r), pa * p))
                })
                .filter(|(_, p)| *p > 0.0)
                .collect();
            for &(f0, p0) in &feedback {
                for &(f1, p1) in &feedback {
                    for u in 0..2 {
                        if next.len() >= cap {
                            return Err(Error::EnumerationTooLarge { round: s, atoms: next.len() as u128 + 1, cap });
                        }
                        let pair = [f0, f1];
                        let (a, r) = pair[u];
                        let mut sums = br.sums.clone();
                        sums[a] += r / pi[a];
                        let rhat: Vec<f64> = sums.iter().map(|x| x / s as f64).collect();
                        let mut rounds = br.rounds.clone();
                        rounds.push((pi.clone(), pair, u));
                        next.push(Branch {
                            mass: br.mass * p0 * p1 * 0.5,
                            rho: exp_weights(&rhat, sched.gamma(k, s)),
                            sums,
                            rounds,
                        });
                    }
                }
            }
        }
        frontier = next;
    }

    let mut cols: Vec<ColumnBuilder<f64>> = Vec::new();
    for s in 1..=t {
        for nm in [
            names::arm(0, s),
            names::reward(0, s),
            names::arm(1, s),
            names::reward(1, s),
            names::u(s),
            names::selected_arm(s),
            names::selected_reward(s),
            names::gap(0, s),
            names::gap(1, s),
        ] {
            cols.push(ColumnBuilder::new(nm));
        }
    }
    for nm in [names::VIRTUAL, names::REGRET, names::SMOOTHED_REGRET, names::EMPIRICAL, names::KL] {
        cols.push(ColumnBuilder::new(nm));
    }
    const PER: usize = 9;
    let base = PER * t;
    let eps_next = sched.eps(k, t + 1);
    let mut probs = Vec::new();
    for br in frontier {
        let rhat: Vec<f64> = br.sums.iter().map(|x| x / t as f64).collect();
        let smoothed = smooth(&br.rho, eps_next);
        let emp: f64 = br.rho.iter().zip(&rhat).map(|(p, r)| p * (rhat[best] - r)).sum();
        let kl = kl_to_uniform(&br.rho);
        for (abar, &q) in br.rho.iter().enumerate() {
            if q <= 0.0 {
                continue;
            }
            for (i, (pi, pair, u)) in br.rounds.iter().enumerate() {
                let c = PER * i;
                for v in 0..2 {
                    cols[c + 2 * v].push(Value::Int(pair[v].0 as i64));
                    cols[c + 2 * v + 1].push(Value::Num(pair[v].1));
                    cols[c + 7 + v].push(Value::Num(gap_statistic(pair[v], pi, best, abar)));
                }
                cols[c + 4].push(Value::Int(*u as i64));
                cols[c + 5].push(Value::Int(pair[*u].0 as i64));
                cols[c + 6].push(Value::Num(pair[*u].1));
            }
            cols[base].push(Value::Int(abar as i64));
            cols[base + 1].push(Value::Num(env.regret(&br.rho)));
            cols[base + 2].push(Value::Num(env.regret(&smoothed)));
            cols[base + 3].push(Value::Num(emp));
            cols[base + 4].push(Value::Num(kl));
            probs.push(br.mass * q);
        }
    }
    let meta = JointMeta {
        kind: JointKind::Bandit,
        horizon: Some(t),
        exchangeable: true,
        conditional_product: false,
        selected_update: true,
        loss_table: None,
        params: vec![("k".into(), k as f64), ("delta_min".into(), env.delta_min())],
    };
    DiscreteJoint::new(cols.into_iter().map(ColumnBuilder::finish).collect(), probs, meta)
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// Decomposition, virtual-arm, row-swap, second-moment, transfer, entropy-reduction and
/// one-step checks at terminal round `t` on the exact joint.
pub fn exact_reports(
    env: &BanditEnv,
    sched: &Schedule,
    behavior: &Behavior,
    t: usize,
    cap: usize,
) -> Result<Vec<BoundReport>> {
    let j = enumerate_bandit(env, sched, behavior, t, cap)?;
    let k = env.k();
    let (kf, logk, dmin, tf) = (k as f64, (k as f64).ln(), env.delta_min(), t as f64);
    let eps = sched.eps(k, t);
    let eps_next = sched.eps(k, t + 1);
    let gamma = sched.gamma(k, t);
    let ex = Mode::exact();

    let drho = j.numeric(names::REGRET)?;
    let dsm = j.numeric(names::SMOOTHED_REGRET)?;
    let emp = j.numeric(names::EMPIRICAL)?;
    let e_rho = j.expect(names::REGRET)?;
    let e_sm = j.expect(names::SMOOTHED_REGRET)?;
    let e_emp = j.expect(names::EMPIRICAL)?;
    let e_kl = j.expect(names::KL)?;

    let (mut sel, mut ghost, mut swap, mut square) = (0.0, 0.0, 0.0, 0.0);
    let (mut info, mut info_arm) = (0.0, 0.0);
    let mut out = Vec::new();
    for s in 1..=t {
        let u = j.ints(&names::u(s))?;
        let g0 = j.numeric(&names::gap(0, s))?;
        let g1 = j.numeric(&names::gap(1, s))?;
        sel += j.expect_with(|i| if u[i] == 0 { g0[i] } else { g1[i] });
        ghost += j.expect_with(|i| if u[i] == 0 { g1[i] } else { g0[i] });
        swap += j.expect_with(|i| (2 * u[i] - 1) as f64 * g0[i]);
        square += j.expect_with(|i| g0[i] * g0[i]);
        let ctx = names::context(s);
        let ctx = refs(&ctx);
        let us = names::u(s);
        info += conditional_mutual_information(&j, &[&names::gap(0, s)], &[&us], &ctx)?.clamped();
        info_arm += conditional_mutual_information(&j, &[names::VIRTUAL], &[&us], &ctx)?.clamped();

        let p1 = j.expect_with(|i| if u[i] == 1 { 1.0 } else { 0.0 });
        let sq1 = j.expect_with(|i| if u[i] == 1 { g0[i] * g0[i] } else { 0.0 }) / p1;
        let d1 = j.expect_with(|i| if u[i] == 1 { drho[i] } else { 0.0 }) / p1;
        out.push(BoundReport::inequality(
            format!("bandit.ghost_second_moment[s={s}]"),
            sq1,
            terms(&[("ghost_regret", 2.0 / (eps * dmin) * d1)]),
            ex,
        ));
        let mut rep = selector_square_check(&j, &names::gap(0, s), &us, &ctx, 1.0 / eps);
        rep.name = format!("bandit.selector_square[s={s}]");
        out.push(rep);
    }
    let (sel, ghost, swap, square) = (sel / tf, ghost / tf, 2.0 * swap / tf, square / tf);

    let all: Vec<String> = (1..=t)
        .flat_map(|s| [names::arm(0, s), names::reward(0, s), names::arm(1, s), names::reward(1, s), names::u(s)])
        .collect();
    let info_all = mutual_information(&j, &[names::VIRTUAL], &refs(&all))?.clamped();
    let hist = names::selected_history(t);
    let info_ordinary = mutual_information(&j, &[names::VIRTUAL], &refs(&hist))?.clamped();

    let max_of = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let smoothing_gap: Vec<f64> = dsm.iter().zip(&drho).map(|(a, b)| a - b).collect();
    let scale = 52.0 / (tf * eps * dmin);
    out.extend([
        BoundReport::identity(
            "bandit.decomposition",
            e_sm,
            terms(&[("smoothing", e_sm - e_rho), ("transfer", e_rho - 2.0 * e_emp), ("empirical", 2.0 * e_emp)]),
            ex,
        ),
        BoundReport::inequality("bandit.smoothing_cost", max_of(&smoothing_gap), terms(&[("floor", kf * eps_next)]), ex),
        BoundReport::inequality("bandit.exp_weights_empirical", max_of(&emp), terms(&[("log_k_over_gamma", logk / gamma)]), ex),
        BoundReport::identity("bandit.virtual_selected", e_emp, terms(&[("selected_virtual", sel)]), ex),
        BoundReport::identity("bandit.virtual_ghost", e_rho, terms(&[("ghost_virtual", ghost)]), ex),
        BoundReport::identity("bandit.row_swap", e_rho - e_emp, terms(&[("selector_correlation", swap)]), ex),
        BoundReport::inequality(
            "bandit.selector_square",
            square,
            terms(&[("regret", 6.0 / (eps * dmin) * e_rho), ("info", 20.0 / (tf * eps * eps) * info)]),
            ex,
        ),
        BoundReport::inequality("bandit.transfer", e_rho, terms(&[("empirical", 2.0 * e_emp), ("info", scale * info)]), ex),
        BoundReport::inequality("bandit.entropy_reduction.data_processing", info, terms(&[("virtual_arm_scmi", info_arm)]), ex),
        BoundReport::inequality("bandit.entropy_reduction.chain", info_arm, terms(&[("virtual_arm_mi", info_all)]), ex),
        BoundReport::inequality("bandit.entropy_reduction.prior", info_all, terms(&[("expected_kl", e_kl)]), ex),
        BoundReport::inequality("bandit.entropy_reduction.log_k", e_kl, terms(&[("log_k", logk)]), ex),
    ]);
    let head = [("smoothing", kf * eps_next), ("empirical", 2.0 * logk / gamma)];
    let with = |extra: (&'static str, f64)| {
        let mut v = head.to_vec();
        v.push(extra);
        terms(&v)
    };
    out.extend([
        BoundReport::inequality("bandit.one_step.scmi", e_sm, with(("transfer", scale * info)), ex),
        BoundReport::inequality("bandit.one_step.log_k", e_sm, with(("transfer", scale * logk)), ex),
        BoundReport::inequality(
            "bandit.ordinary_mi",
            e_sm,
            with(("transfer", 6.0 / (tf * eps * dmin) * info_ordinary)),
            ex,
        ),
        BoundReport::inequality("bandit.ordinary_mi.prior", info_ordinary, terms(&[("expected_kl", e_kl)]), ex),
    ]);
    Ok(out)
}
