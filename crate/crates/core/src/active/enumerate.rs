//! Exact joint law of the paired active-learning experiment.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::joint::{ColumnBuilder, DiscreteJoint, JointKind, JointMeta, Value};
use crate::scalar::{Rational, Scalar};

use super::{ActiveProblem, LabeledEntry};

/// Column names of the active joint. History, selector, state and the weighted
/// terminal losses reuse the sequential names.
pub mod names {
    pub use crate::supersample::names::{hist, lminus, lplus, rpop, u, w};

    pub fn x(u: usize, t: usize) -> String {
        format!("X{u}_{t}")
    }
    pub fn y(u: usize, t: usize) -> String {
        format!("Y{u}_{t}")
    }
    /// Query-coin cell.
    pub fn v(u: usize, t: usize) -> String {
        format!("V{u}_{t}")
    }
    pub fn p(u: usize, t: usize) -> String {
        format!("P{u}_{t}")
    }
    pub fn q(u: usize, t: usize) -> String {
        format!("Q{u}_{t}")
    }

    /// G^act_{t-1} = (H_{t-1}, X_{t,0}, Y_{t,0}, V_{t,0}, X_{t,1}, Y_{t,1}, V_{t,1}).
    pub fn context(t: usize) -> Vec<String> {
        vec![hist(t - 1), x(0, t), y(0, t), v(0, t), x(1, t), y(1, t), v(1, t)]
    }
}

#[derive(Clone)]
struct Round {
    hist: u32,
    z: [(usize, usize, usize); 2],
    u: usize,
    p: [Rational; 2],
    q: [bool; 2],
    w: usize,
}

struct Branch<S> {
    mass: S,
    sample: Vec<LabeledEntry>,
    label: String,
    w: usize,
    rounds: Vec<Round>,
}

pub fn enumerate_active<S: Scalar>(prob: &ActiveProblem, cap: usize) -> Result<DiscreteJoint<S>> {
    prob.validate()?;
    let (world, learner, query, n) = (&prob.world, &prob.learner, &prob.query, prob.n);
    let labels = world.labels();
    let cells = query.coin_cells();
    let mut triples = Vec::new();
    for x in 0..world.features() {
        for y in 0..labels {
            for (c, &(_, m)) in cells.iter().enumerate() {
                let mass = world.law[x][y] * m;
                if !mass.is_zero() {
                    triples.push(((x, y, c), mass));
                }
            }
        }
    }
    let half = S::from_rational(Rational::new(1, 2));
    let mut hist_cols: Vec<ColumnBuilder<S>> = (0..n).map(|t| ColumnBuilder::new(names::hist(t))).collect();
    let mut frontier =
        vec![Branch { mass: S::one(), sample: Vec::new(), label: "-".into(), w: learner.initial, rounds: Vec::new() }];
    for t in 1..=n {
        let mut next = Vec::new();
        let mut codes: HashMap<String, u32> = HashMap::new();
        for br in &frontier {
            let hc = *codes
                .entry(br.label.clone())
                .or_insert_with(|| hist_cols[t - 1].intern(Value::Text(br.label.clone())));
            for &(a, ma) in &triples {
                for &(b, mb) in &triples {
                    let z = [a, b];
                    let p = [query.rule.prob(br.w, a.0), query.rule.prob(br.w, b.0)];
                    let q = [cells[a.2].0 <= p[0], cells[b.2].0 <= p[1]];
                    for u in 0..2 {
                        let (x, y, c) = z[u];
                        let mut sample = br.sample.clone();
                        if q[u] {
                            sample.push(LabeledEntry { x, y, weight: Rational::one() / p[u] });
                        }
                        for (w, pw) in learner.psi::<S>(labels, &sample, br.w) {
                            if pw.is_zero() {
                                continue;
                            }
                            if next.len() >= cap {
                                return Err(Error::EnumerationTooLarge { round: t, atoms: next.len() as u128 + 1, cap });
                            }
                            let ybar = if q[u] { y.to_string() } else { "_".into() };
                            let step = format!("x{x}c{c}y{ybar}w{w}");
                            let label = if t == 1 { step } else { format!("{}.{step}", br.label) };
                            let mut rounds = br.rounds.clone();
                            rounds.push(Round { hist: hc, z, u, p, q, w });
                            next.push(Branch {
                                mass: br.mass.clone() * S::from_rational(ma * mb) * half.clone() * pw,
                                sample: sample.clone(),
                                label,
                                w,
                                rounds,
                            });
                        }
                    }
                }
            }
        }
        frontier = next;
    }

    let risk: Vec<Rational> = (0..learner.states).map(|w| learner.population_risk(world, w)).collect();
    let mut cols: Vec<ColumnBuilder<S>> = Vec::new();
    for (t, hb) in (1..=n).zip(hist_cols) {
        cols.push(hb);
        for nm in [
            names::x(0, t),
            names::y(0, t),
            names::v(0, t),
            names::x(1, t),
            names::y(1, t),
            names::v(1, t),
            names::u(t),
            names::p(0, t),
            names::p(1, t),
            names::q(0, t),
            names::q(1, t),
            names::w(t),
            names::lplus(t),
            names::lminus(t),
            names::rpop(t),
        ] {
            cols.push(ColumnBuilder::new(nm));
        }
    }
    const PER: usize = 16;
    let mut probs = Vec::with_capacity(frontier.len());
    for br in frontier {
        let wn = br.w;
        for (t, r) in br.rounds.iter().enumerate() {
            let base = t * PER;
            cols[base].push_code(r.hist);
            for u in 0..2 {
                let (x, y, c) = r.z[u];
                cols[base + 1 + 3 * u].push(Value::Int(x as i64));
                cols[base + 2 + 3 * u].push(Value::Int(y as i64));
                cols[base + 3 + 3 * u].push(Value::Int(c as i64));
            }
            cols[base + 7].push(Value::Int(r.u as i64));
            let iw = |u: usize| -> Rational {
                if r.q[u] {
                    let (x, y, _) = r.z[u];
                    learner.loss[wn][world.atom(x, y)] / r.p[u]
                } else {
                    Rational::zero()
                }
            };
            for u in 0..2 {
                cols[base + 8 + u].push(Value::Num(S::from_rational(r.p[u])));
                cols[base + 10 + u].push(Value::Int(r.q[u] as i64));
                cols[base + 13 + u].push(Value::Num(S::from_rational(iw(u))));
            }
            cols[base + 12].push(Value::Int(r.w as i64));
            cols[base + 15].push(Value::Num(S::from_rational(risk[r.w])));
        }
        probs.push(br.mass);
    }
    let meta = JointMeta {
        kind: JointKind::Active,
        horizon: Some(n),
        exchangeable: true,
        conditional_product: true,
        selected_update: true,
        loss_table: Some(learner.loss.iter().map(|r| r.iter().map(|x| x.to_f64()).collect()).collect()),
        params: vec![("p_min".into(), query.p_min.to_f64()), ("labels".into(), labels as f64)],
    };
    DiscreteJoint::new(cols.into_iter().map(ColumnBuilder::finish).collect(), probs, meta)
}
