//! Worlds, learners and histories.
//!
//! A round of the paired experiment, given learner history `H_{t-1}`:
//!
//! ```text
//!   (Z_{t,0}, Z_{t,1}) ~ P_t(. | H_{t-1})          row kernel of the world
//!   U_t ~ Bernoulli(1/2)                           fair selector
//!   W_t ~ K_t(. | H_{t-1}, Z_{t,U_t})              learner update (selected atom only)
//!   Q_t = q_t(H_{t-1}) in [0, 1]                   predictable weight
//!   H_t = H_{t-1} + retained(obs(Z_{t,U_t}), W_t)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::{Rational, Scalar};

// ---------------------------------------------------------------------------
// Outcome space and history

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSpace {
    pub atoms: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_grid: Option<Vec<f64>>,
}

impl OutcomeSpace {
    pub fn new(atoms: Vec<String>) -> Result<Self> {
        let s = OutcomeSpace { atoms, loss_grid: None };
        s.validate()?;
        Ok(s)
    }

    pub fn numbered(k: usize) -> Self {
        OutcomeSpace { atoms: (0..k).map(|i| format!("z{i}")).collect(), loss_grid: None }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.atoms.is_empty() {
            return invalid("outcome space is empty");
        }
        let mut seen = std::collections::HashSet::new();
        for a in &self.atoms {
            if !seen.insert(a) {
                return invalid(format!("duplicate atom label {a}"));
            }
        }
        if let Some(g) = &self.loss_grid {
            if g.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return invalid("loss grid values must lie in [0, 1]");
            }
        }
        Ok(())
    }

    /// Nearest grid point of a loss value, or the value itself without a grid.
    pub fn bin_loss(&self, x: f64) -> f64 {
        match &self.loss_grid {
            Some(g) if !g.is_empty() => *g
                .iter()
                .min_by(|a, b| (*a - x).abs().total_cmp(&(*b - x).abs()))
                .unwrap(),
            _ => x,
        }
    }
}

/// Which selected-path variables enter the learner history.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Retention {
    pub observation: bool,
    pub state: bool,
}

impl Default for Retention {
    fn default() -> Self {
        Retention { observation: true, state: true }
    }
}

impl Retention {
    pub const NONE: Retention = Retention { observation: false, state: false };

    pub fn covers(&self, other: Retention) -> bool {
        (self.observation || !other.observation) && (self.state || !other.state)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Record {
    pub obs: Option<u32>,
    pub state: Option<u32>,
}

/// The learner history: retained variables of past rounds, in order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct History {
    records: Vec<Record>,
}

impl History {
    pub fn new() -> Self {
        History::default()
    }

    pub fn rounds(&self) -> usize {
        self.records.len()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn extended(&self, ret: Retention, obs: u32, state: u32) -> History {
        let mut records = Vec::with_capacity(self.records.len() + 1);
        records.extend_from_slice(&self.records);
        records.push(Record {
            obs: ret.observation.then_some(obs),
            state: ret.state.then_some(state),
        });
        History { records }
    }

    pub fn last_state(&self) -> Option<u32> {
        self.records.last().and_then(|r| r.state)
    }

    pub fn last_obs(&self) -> Option<u32> {
        self.records.last().and_then(|r| r.obs)
    }

    pub fn observations(&self) -> impl Iterator<Item = u32> + '_ {
        self.records.iter().filter_map(|r| r.obs)
    }

    /// Compact printable key, e.g. `o1w0.o0w2`; the empty history prints as `-`.
    pub fn label(&self) -> String {
        if self.records.is_empty() {
            return "-".into();
        }
        let parts: Vec<String> = self
            .records
            .iter()
            .map(|r| {
                let mut s = String::new();
                if let Some(o) = r.obs {
                    s.push_str(&format!("o{o}"));
                }
                if let Some(w) = r.state {
                    s.push_str(&format!("w{w}"));
                }
                if s.is_empty() {
                    s.push('_');
                }
                s
            })
            .collect();
        parts.join(".")
    }
}

// ---------------------------------------------------------------------------
// Traits

pub type RowTable<S> = Vec<((usize, usize), S)>;

pub trait World<S: Scalar>: Send + Sync {
    fn space(&self) -> &OutcomeSpace;
    /// Positive-mass entries of P_t(. | h) over ordered pairs (z0, z1); `t` is 1-based.
    fn row_law(&self, t: usize, h: &History) -> Result<RowTable<S>>;
    fn exchangeable(&self) -> bool;
    fn conditional_product(&self) -> bool;
    fn needs(&self) -> Retention {
        Retention::NONE
    }
}

pub trait Learner<S: Scalar>: Send + Sync {
    fn num_states(&self) -> usize;
    fn initial_state(&self) -> usize {
        0
    }
    /// What the learner records about the selected atom.
    fn observe(&self, _t: usize, _h: &History, z: usize) -> Result<u32> {
        Ok(z as u32)
    }
    /// Law of W_t given the history and the selected observation.
    fn update(&self, t: usize, h: &History, obs: u32) -> Result<Vec<(usize, S)>>;
    /// The predictable weight Q_t.
    fn weight(&self, t: usize, h: &History) -> Result<S>;
    fn loss(&self, w: usize, z: usize) -> S;
    fn needs(&self) -> Retention {
        Retention::NONE
    }
}

// ---------------------------------------------------------------------------
// Configurable world

/// Row kernel families. Pair tables are indexed `[z0][z1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RowKernelSpec {
    /// Independent rows with both coordinates drawn from `p`.
    Iid { p: Vec<Rational> },
    /// One pair table used at every round.
    Table { pairs: Vec<Vec<Rational>> },
    /// `initial` at round 1; afterwards `by_last[o]` where `o` is the last retained observation.
    Markov { initial: Vec<Vec<Rational>>, by_last: Vec<Vec<Vec<Rational>>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldSpec {
    pub space: OutcomeSpace,
    pub rows: RowKernelSpec,
    #[serde(default)]
    pub exchangeable: bool,
    #[serde(default)]
    pub conditional_product: bool,
}

fn check_dist(name: &str, p: &[Rational], len: usize) -> Result<()> {
    if p.len() != len {
        return invalid(format!("{name} has {} entries, expected {len}", p.len()));
    }
    if p.iter().any(|x| x.is_negative()) {
        return invalid(format!("{name} has a negative entry"));
    }
    let s = p.iter().fold(Rational::zero(), |a, &b| a + b);
    if s != Rational::one() {
        return invalid(format!("{name} sums to {s}, not 1"));
    }
    Ok(())
}

fn check_pairs(name: &str, t: &[Vec<Rational>], k: usize) -> Result<()> {
    if t.len() != k || t.iter().any(|r| r.len() != k) {
        return invalid(format!("{name} must be a {k}x{k} table"));
    }
    let flat: Vec<Rational> = t.iter().flatten().copied().collect();
    check_dist(name, &flat, k * k)
}

fn is_symmetric(t: &[Vec<Rational>]) -> bool {
    (0..t.len()).all(|i| (0..t.len()).all(|j| t[i][j] == t[j][i]))
}

fn is_product(t: &[Vec<Rational>]) -> bool {
    let k = t.len();
    let m0: Vec<Rational> = (0..k).map(|i| t[i].iter().fold(Rational::zero(), |a, &b| a + b)).collect();
    let m1: Vec<Rational> = (0..k).map(|j| (0..k).fold(Rational::zero(), |a, i| a + t[i][j])).collect();
    m0 == m1 && (0..k).all(|i| (0..k).all(|j| t[i][j] == m0[i] * m0[j]))
}

impl WorldSpec {
    pub fn iid(space: OutcomeSpace, p: Vec<Rational>) -> Result<Self> {
        let w = WorldSpec {
            space,
            rows: RowKernelSpec::Iid { p },
            exchangeable: true,
            conditional_product: true,
        };
        w.validate()?;
        Ok(w)
    }

    /// All pair tables the kernel can use.
    pub fn tables(&self) -> Vec<Vec<Vec<Rational>>> {
        match &self.rows {
            RowKernelSpec::Iid { p } => {
                vec![p.iter().map(|&a| p.iter().map(|&b| a * b).collect()).collect()]
            }
            RowKernelSpec::Table { pairs } => vec![pairs.clone()],
            RowKernelSpec::Markov { initial, by_last } => {
                let mut v = vec![initial.clone()];
                v.extend(by_last.iter().cloned());
                v
            }
        }
    }

    /// (exchangeable, conditional_product) as actually satisfied by the tables.
    pub fn detect_flags(&self) -> (bool, bool) {
        let ts = self.tables();
        (ts.iter().all(|t| is_symmetric(t)), ts.iter().all(|t| is_product(t)))
    }

    pub fn validate(&self) -> Result<()> {
        self.space.validate()?;
        let k = self.space.len();
        match &self.rows {
            RowKernelSpec::Iid { p } => check_dist("iid marginal", p, k)?,
            RowKernelSpec::Table { pairs } => check_pairs("pair table", pairs, k)?,
            RowKernelSpec::Markov { initial, by_last } => {
                check_pairs("initial pair table", initial, k)?;
                if by_last.len() != k {
                    return invalid(format!("markov kernel needs {k} conditional tables"));
                }
                for (o, t) in by_last.iter().enumerate() {
                    check_pairs(&format!("pair table after observation {o}"), t, k)?;
                }
            }
        }
        let (ex, cp) = self.detect_flags();
        if self.exchangeable && !ex {
            return invalid("world is declared exchangeable but a pair table is not symmetric");
        }
        if self.conditional_product && !cp {
            return invalid("world is declared conditional-product but a pair table is not a product");
        }
        Ok(())
    }

    fn table_for(&self, t: usize, h: &History) -> Result<Vec<Vec<Rational>>> {
        Ok(match &self.rows {
            RowKernelSpec::Iid { .. } | RowKernelSpec::Table { .. } => self.tables().remove(0),
            RowKernelSpec::Markov { initial, by_last } => {
                if t == 1 {
                    initial.clone()
                } else {
                    let o = h
                        .last_obs()
                        .ok_or_else(|| Error::Invalid("markov world needs retained observations".into()))?;
                    by_last
                        .get(o as usize)
                        .cloned()
                        .ok_or_else(|| Error::Invalid(format!("no pair table for observation {o}")))?
                }
            }
        })
    }
}

impl<S: Scalar> World<S> for WorldSpec {
    fn space(&self) -> &OutcomeSpace {
        &self.space
    }

    fn row_law(&self, t: usize, h: &History) -> Result<RowTable<S>> {
        let table = self.table_for(t, h)?;
        let mut out = Vec::new();
        for (i, row) in table.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                if !p.is_zero() {
                    out.push(((i, j), S::from_rational(p)));
                }
            }
        }
        Ok(out)
    }

    fn exchangeable(&self) -> bool {
        self.exchangeable
    }

    fn conditional_product(&self) -> bool {
        self.conditional_product
    }

    fn needs(&self) -> Retention {
        match self.rows {
            RowKernelSpec::Markov { .. } => Retention { observation: true, state: false },
            _ => Retention::NONE,
        }
    }
}

// ---------------------------------------------------------------------------
// Configurable learner

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UpdateSpec {
    /// W_t = state, ignoring data.
    Constant { state: usize },
    /// W_t = Z_{t,U_t} (state index equals atom index).
    MemorizeLast,
    /// W_t ~ table[W_{t-1}][Z_{t,U_t}], starting from `initial`.
    Markov { initial: usize, table: Vec<Vec<Vec<Rational>>> },
    /// W_t minimizes the cumulative loss on retained observations; ties go to the lowest index.
    Erm,
    /// W_t ~ prior(w) exp(-eta * cumulative loss), including the current observation.
    Gibbs { eta: f64, prior: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    Constant { q: Rational },
    /// Q_t = q[W_{t-1}].
    ByPrevState { q: Vec<Rational> },
    /// Q_t = q[t-1]; rounds past the table reuse its last entry.
    ByRound { q: Vec<Rational> },
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec::Constant { q: Rational::one() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub states: usize,
    pub update: UpdateSpec,
    #[serde(default)]
    pub weight: WeightSpec,
    /// `loss[w][z]` in [0, 1].
    pub loss: Vec<Vec<Rational>>,
}

impl LearnerSpec {
    pub fn validate(&self, atoms: usize) -> Result<()> {
        if self.states == 0 {
            return invalid("learner needs at least one state");
        }
        if self.loss.len() != self.states || self.loss.iter().any(|r| r.len() != atoms) {
            return invalid(format!("loss table must be {}x{atoms}", self.states));
        }
        let unit = |x: Rational| !x.is_negative() && x <= Rational::one();
        if !self.loss.iter().flatten().all(|&x| unit(x)) {
            return invalid("loss values must lie in [0, 1]");
        }
        match &self.update {
            UpdateSpec::Constant { state } if *state >= self.states => {
                return invalid("constant state out of range")
            }
            UpdateSpec::MemorizeLast if self.states != atoms => {
                return invalid("memorize-last needs one state per atom")
            }
            UpdateSpec::Markov { initial, table } => {
                if *initial >= self.states || table.len() != self.states {
                    return invalid("markov update table must have one block per state");
                }
                for (w, block) in table.iter().enumerate() {
                    if block.len() != atoms {
                        return invalid(format!("markov block {w} must have one row per atom"));
                    }
                    for (z, row) in block.iter().enumerate() {
                        check_dist(&format!("update law ({w},{z})"), row, self.states)?;
                    }
                }
            }
            UpdateSpec::Gibbs { eta, prior } => {
                if !(*eta >= 0.0) || prior.len() != self.states {
                    return invalid("gibbs update needs eta >= 0 and one prior weight per state");
                }
                let s: f64 = prior.iter().sum();
                if prior.iter().any(|&p| p < 0.0) || (s - 1.0).abs() > 1e-12 {
                    return invalid("gibbs prior must be a probability table");
                }
            }
            _ => {}
        }
        match &self.weight {
            WeightSpec::Constant { q } if !unit(*q) => return invalid("weight must lie in [0, 1]"),
            WeightSpec::ByPrevState { q } => {
                if q.len() != self.states || !q.iter().all(|&x| unit(x)) {
                    return invalid("per-state weights must be in [0, 1], one per state");
                }
            }
            WeightSpec::ByRound { q } => {
                if q.is_empty() || !q.iter().all(|&x| unit(x)) {
                    return invalid("per-round weights must be non-empty and in [0, 1]");
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn loss_f64(&self) -> Vec<Vec<f64>> {
        self.loss.iter().map(|r| r.iter().map(|x| x.to_f64()).collect()).collect()
    }

    fn prev_state(&self, h: &History) -> usize {
        match h.last_state() {
            Some(w) => w as usize,
            None => match &self.update {
                UpdateSpec::Markov { initial, .. } => *initial,
                _ => 0,
            },
        }
    }

    /// Gibbs posterior after the retained observations plus `extra`.
    pub fn gibbs_posterior(eta: f64, prior: &[f64], loss: &[Vec<f64>], obs: impl Iterator<Item = usize>) -> Vec<f64> {
        let mut cum = vec![0.0; prior.len()];
        for z in obs {
            for (w, c) in cum.iter_mut().enumerate() {
                *c += loss[w][z];
            }
        }
        let m = cum.iter().cloned().fold(f64::INFINITY, f64::min);
        let un: Vec<f64> = prior.iter().zip(&cum).map(|(p, c)| p * (-eta * (c - m)).exp()).collect();
        let s: f64 = un.iter().sum();
        un.into_iter().map(|x| x / s).collect()
    }
}

impl<S: Scalar> Learner<S> for LearnerSpec {
    fn num_states(&self) -> usize {
        self.states
    }

    fn initial_state(&self) -> usize {
        match &self.update {
            UpdateSpec::Markov { initial, .. } => *initial,
            UpdateSpec::Constant { state } => *state,
            _ => 0,
        }
    }

    fn update(&self, _t: usize, h: &History, obs: u32) -> Result<Vec<(usize, S)>> {
        let z = obs as usize;
        Ok(match &self.update {
            UpdateSpec::Constant { state } => vec![(*state, S::one())],
            UpdateSpec::MemorizeLast => vec![(z, S::one())],
            UpdateSpec::Markov { table, .. } => table[self.prev_state(h)][z]
                .iter()
                .enumerate()
                .filter(|(_, p)| !p.is_zero())
                .map(|(w, &p)| (w, S::from_rational(p)))
                .collect(),
            UpdateSpec::Erm => {
                let mut cum = vec![Rational::zero(); self.states];
                for o in h.observations().chain(std::iter::once(obs)) {
                    for (w, c) in cum.iter_mut().enumerate() {
                        *c = *c + self.loss[w][o as usize];
                    }
                }
                let best = (0..self.states).min_by(|&a, &b| cum[a].cmp(&cum[b]).then(a.cmp(&b))).unwrap();
                vec![(best, S::one())]
            }
            UpdateSpec::Gibbs { eta, prior } => {
                let loss = self.loss_f64();
                let post = Self::gibbs_posterior(
                    *eta,
                    prior,
                    &loss,
                    h.observations().chain(std::iter::once(obs)).map(|o| o as usize),
                );
                post.into_iter().enumerate().filter(|(_, p)| *p > 0.0).map(|(w, p)| (w, S::from_f64(p))).collect()
            }
        })
    }

    fn weight(&self, t: usize, h: &History) -> Result<S> {
        let q = match &self.weight {
            WeightSpec::Constant { q } => *q,
            WeightSpec::ByPrevState { q } => q[self.prev_state(h)],
            WeightSpec::ByRound { q } => q[(t - 1).min(q.len() - 1)],
        };
        Ok(S::from_rational(q))
    }

    fn loss(&self, w: usize, z: usize) -> S {
        S::from_rational(self.loss[w][z])
    }

    fn needs(&self) -> Retention {
        let mut r = Retention::NONE;
        if matches!(self.update, UpdateSpec::Erm | UpdateSpec::Gibbs { .. }) {
            r.observation = true;
        }
        if matches!(self.update, UpdateSpec::Markov { .. })
            || matches!(self.weight, WeightSpec::ByPrevState { .. })
        {
            r.state = true;
        }
        r
    }
}

/// 0/1 loss 1{w != z} on a square state/atom space.
pub fn zero_one_loss(k: usize) -> Vec<Vec<Rational>> {
    (0..k)
        .map(|w| (0..k).map(|z| if w == z { Rational::zero() } else { Rational::one() }).collect())
        .collect()
}
