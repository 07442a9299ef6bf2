//! Exact enumeration of the joint law of a sequential supersample experiment.
//!
//! The frontier holds one branch per positive-mass prefix. Round t expands every branch
//! by each row pair, each selector value and each learner state:
//!
//! ```text
//!   mass' = mass * P_t(z0, z1 | h) * P(U_t = u) * K_t(w | h, obs(z_u))
//! ```

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::joint::{Column, ColumnBuilder, DiscreteJoint, JointKind, JointMeta, Value};
use crate::scalar::{Rational, Scalar};

use super::names;
use super::spec::{History, Learner, Retention, World};

pub const DEFAULT_CAP: usize = 10_000_000;

#[derive(Clone, Debug)]
pub struct EnumOptions {
    pub cap: usize,
    pub retention: Retention,
    /// Debug hook: P(U_t = 1). Anything other than 1/2 breaks selector fairness.
    pub selector_bias: Option<Rational>,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions { cap: DEFAULT_CAP, retention: Retention::default(), selector_bias: None }
    }
}

struct Branch<S> {
    mass: S,
    hist: History,
    codes: Vec<u32>,
}

const PER_ROUND: usize = 11;

pub fn enumerate_joint<S: Scalar>(
    world: &dyn World<S>,
    learner: &dyn Learner<S>,
    n: usize,
    opts: &EnumOptions,
) -> Result<DiscreteJoint<S>> {
    if n == 0 {
        return Err(Error::Invalid("horizon must be at least 1".into()));
    }
    let need = Retention {
        observation: world.needs().observation || learner.needs().observation,
        state: world.needs().state || learner.needs().state,
    };
    if !opts.retention.covers(need) {
        return Err(Error::Invalid(format!(
            "retention {:?} drops variables the world or learner reads ({need:?})",
            opts.retention
        )));
    }
    let k = world.space().len();
    let cond_product = world.conditional_product();
    let half = S::from_rational(Rational::new(1, 2));
    let (p0, p1) = match opts.selector_bias {
        Some(b) => (S::from_rational(Rational::one() - b), S::from_rational(b)),
        None => (half.clone(), half),
    };
    let sel = [p0, p1];

    let mut builders: Vec<ColumnBuilder<S>> = Vec::with_capacity(n * PER_ROUND);
    for t in 1..=n {
        for name in [
            names::hist(t - 1),
            names::z0(t),
            names::z1(t),
            names::u(t),
            names::w(t),
            names::q(t),
            names::l0(t),
            names::l1(t),
            names::lplus(t),
            names::lminus(t),
            names::rpop(t),
        ] {
            builders.push(ColumnBuilder::new(name));
        }
    }

    let mut frontier = vec![Branch { mass: S::one(), hist: History::new(), codes: Vec::new() }];
    for t in 1..=n {
        let base = (t - 1) * PER_ROUND;
        let mut hist_codes: HashMap<History, u32> = HashMap::new();
        let mut next: Vec<Branch<S>> = Vec::new();
        for br in &frontier {
            let hc = match hist_codes.get(&br.hist) {
                Some(&c) => c,
                None => {
                    let c = builders[base].intern(Value::Text(br.hist.label()));
                    hist_codes.insert(br.hist.clone(), c);
                    c
                }
            };
            let q = learner.weight(t, &br.hist)?;
            let qc = builders[base + 5].intern(Value::Num(q.clone()));
            let rows = world.row_law(t, &br.hist)?;
            let marginal0 = if cond_product { first_marginal(&rows, k) } else { Vec::new() };
            for ((z0, z1), pz) in rows {
                for (u, pu) in sel.iter().enumerate() {
                    if pu.is_zero() {
                        continue;
                    }
                    let z = if u == 0 { z0 } else { z1 };
                    let obs = learner.observe(t, &br.hist, z)?;
                    for (w, pw) in learner.update(t, &br.hist, obs)? {
                        if pw.is_zero() {
                            continue;
                        }
                        if next.len() >= opts.cap {
                            return Err(Error::EnumerationTooLarge {
                                round: t,
                                atoms: next.len() as u128 + 1,
                                cap: opts.cap,
                            });
                        }
                        let l0 = learner.loss(w, z0);
                        let l1 = learner.loss(w, z1);
                        let rp = if cond_product {
                            marginal0
                                .iter()
                                .enumerate()
                                .fold(S::zero(), |a, (zz, p)| a + p.clone() * learner.loss(w, zz))
                        } else {
                            S::zero()
                        };
                        let mut codes = Vec::with_capacity(br.codes.len() + PER_ROUND);
                        codes.extend_from_slice(&br.codes);
                        codes.push(hc);
                        codes.push(builders[base + 1].intern(Value::Int(z0 as i64)));
                        codes.push(builders[base + 2].intern(Value::Int(z1 as i64)));
                        codes.push(builders[base + 3].intern(Value::Int(u as i64)));
                        codes.push(builders[base + 4].intern(Value::Int(w as i64)));
                        codes.push(qc);
                        codes.push(builders[base + 6].intern(Value::Num(l0.clone())));
                        codes.push(builders[base + 7].intern(Value::Num(l1.clone())));
                        codes.push(builders[base + 8].intern(Value::Num(q.clone() * l0)));
                        codes.push(builders[base + 9].intern(Value::Num(q.clone() * l1)));
                        codes.push(builders[base + 10].intern(Value::Num(rp)));
                        next.push(Branch {
                            mass: br.mass.clone() * pz.clone() * pu.clone() * pw,
                            hist: br.hist.extended(opts.retention, obs, w as u32),
                            codes,
                        });
                    }
                }
            }
        }
        frontier = next;
    }

    let mut columns: Vec<Column<S>> = builders.into_iter().map(ColumnBuilder::finish).collect();
    for (ci, col) in columns.iter_mut().enumerate() {
        col.codes = frontier.iter().map(|b| b.codes[ci]).collect();
    }
    if !cond_product {
        columns.retain(|c| !c.name.starts_with("R_"));
    }
    let probs = frontier.into_iter().map(|b| b.mass).collect();
    let loss_table = (0..learner.num_states())
        .map(|w| (0..k).map(|z| learner.loss(w, z).to_f64()).collect())
        .collect();
    let meta = JointMeta {
        kind: JointKind::Sequential,
        horizon: Some(n),
        exchangeable: world.exchangeable(),
        conditional_product: cond_product,
        selected_update: true,
        loss_table: Some(loss_table),
        params: Vec::new(),
    };
    DiscreteJoint::new(columns, probs, meta)
}

fn first_marginal<S: Scalar>(rows: &[((usize, usize), S)], k: usize) -> Vec<S> {
    let mut m = vec![S::zero(); k];
    for ((z0, _), p) in rows {
        m[*z0] = m[*z0].clone() + p.clone();
    }
    m
}
