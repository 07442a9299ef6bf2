//! Streaming importance-weighted active learning on paired query rows.
//!
//! Each round carries two triples (X_{t,u}, Y_{t,u}, V_{t,u}). The learner sees X_t,
//! queries with probability p_t = pi(W_{t-1}, X_t) in [p_min, 1] and learns from the
//! importance-weighted labeled sample:
//!
//! ```text
//!   Q_t = 1{V_t <= p_t}
//!   S_t = S_{t-1} + {(X_t, Y_t, 1/p_t)}   if Q_t = 1
//!   W_t ~ Psi(S_t, W_{t-1})
//!   L+_{n,t} = Q_{t,0} l(W_n, Z_{t,0}) / p_{t,0}
//! ```

pub mod checks;
pub mod enumerate;
pub mod random;
pub mod sample;

pub use checks::{
    active_fast_bound, active_slow_bound, expected_risk, iw_risks, nonterminal_identity_check,
    population_identity_check, query_aware_cmi, query_aware_reports, row_swap_check, QueryAware,
};
pub use random::random_problem;
pub use enumerate::{enumerate_active, names};
pub use sample::{sample_iwal, ActiveRound, ActiveTranscript};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::{Rational, Scalar};

/// Feature/label law P_XY as a table `law[x][y]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActiveWorld {
    pub law: Vec<Vec<Rational>>,
}

impl ActiveWorld {
    pub fn features(&self) -> usize {
        self.law.len()
    }

    pub fn labels(&self) -> usize {
        self.law.first().map_or(0, Vec::len)
    }

    /// Atom index of z = (x, y).
    pub fn atom(&self, x: usize, y: usize) -> usize {
        x * self.labels() + y
    }

    pub fn atoms(&self) -> usize {
        self.features() * self.labels()
    }

    pub fn validate(&self) -> Result<()> {
        if self.features() == 0 || self.labels() == 0 || self.law.iter().any(|r| r.len() != self.labels()) {
            return invalid("feature/label law must be a non-empty rectangular table");
        }
        let total = self.law.iter().flatten().fold(Rational::zero(), |a, &b| a + b);
        if total != Rational::one() || self.law.iter().flatten().any(|p| p.is_negative()) {
            return invalid("feature/label law must be a probability table");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QueryRule {
    Constant { p: Rational },
    /// p = table[x].
    ByFeature { p: Vec<Rational> },
    /// p = table[w_prev][x].
    ByStateFeature { p: Vec<Vec<Rational>> },
}

impl QueryRule {
    pub fn prob(&self, w_prev: usize, x: usize) -> Rational {
        match self {
            QueryRule::Constant { p } => *p,
            QueryRule::ByFeature { p } => p[x],
            QueryRule::ByStateFeature { p } => p[w_prev][x],
        }
    }

    fn values(&self) -> Vec<Rational> {
        match self {
            QueryRule::Constant { p } => vec![*p],
            QueryRule::ByFeature { p } => p.clone(),
            QueryRule::ByStateFeature { p } => p.iter().flatten().copied().collect(),
        }
    }
}

fn default_grid() -> usize {
    8
}

/// Query probabilities and the query-coin grid V in {1/m, 2/m, ..., 1}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub p_min: Rational,
    pub rule: QueryRule,
    #[serde(default = "default_grid")]
    pub grid: usize,
}

impl QuerySpec {
    pub fn validate(&self, features: usize, states: usize) -> Result<()> {
        if !(self.p_min > Rational::zero() && self.p_min <= Rational::one()) {
            return invalid("p_min must lie in (0, 1]");
        }
        if self.grid == 0 {
            return invalid("coin grid needs at least one atom");
        }
        let shape_ok = match &self.rule {
            QueryRule::Constant { .. } => true,
            QueryRule::ByFeature { p } => p.len() == features,
            QueryRule::ByStateFeature { p } => p.len() == states && p.iter().all(|r| r.len() == features),
        };
        if !shape_ok {
            return invalid("query table shape does not match features/states");
        }
        for p in self.rule.values() {
            if p < self.p_min || p > Rational::one() {
                return invalid(format!("query probability {p} outside [{}, 1]", self.p_min));
            }
            if (p * Rational::integer(self.grid as i64)).denom() != 1 {
                return invalid(format!("query probability {p} is not a multiple of 1/{}", self.grid));
            }
        }
        Ok(())
    }

    /// Coin cells: maximal runs of grid atoms on which 1{V <= p} agrees for every
    /// attainable p. Returns (upper end, mass) per cell; conditioning on the cell is
    /// equivalent to conditioning on the coin itself.
    pub fn coin_cells(&self) -> Vec<(Rational, Rational)> {
        let mut cuts = self.rule.values();
        cuts.push(Rational::one());
        cuts.sort();
        cuts.dedup();
        let mut lo = Rational::zero();
        cuts.into_iter()
            .map(|hi| {
                let cell = (hi, hi - lo);
                lo = hi;
                cell
            })
            .collect()
    }
}

/// An importance-weighted labeled example (x, y, 1/p). Masked labels never get here.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LabeledEntry {
    pub x: usize,
    pub y: usize,
    pub weight: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActiveUpdate {
    /// argmin_w sum_S weight * l(w, (x, y)); ties keep the previous state, then the lowest index.
    WeightedErm,
    /// W ~ prior(w) exp(-eta * weighted loss on S).
    WeightedGibbs { eta: f64, prior: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActiveLearner {
    pub states: usize,
    #[serde(default)]
    pub initial: usize,
    pub update: ActiveUpdate,
    /// `loss[w][atom]` in [0, 1], atoms ordered as (x, y) -> x * labels + y.
    pub loss: Vec<Vec<Rational>>,
}

impl ActiveLearner {
    pub fn validate(&self, atoms: usize) -> Result<()> {
        if self.states == 0 || self.initial >= self.states {
            return invalid("active learner needs states and a valid initial state");
        }
        if self.loss.len() != self.states || self.loss.iter().any(|r| r.len() != atoms) {
            return invalid(format!("active loss table must be {}x{atoms}", self.states));
        }
        if self.loss.iter().flatten().any(|&l| l.is_negative() || l > Rational::one()) {
            return invalid("active loss values must lie in [0, 1]");
        }
        if let ActiveUpdate::WeightedGibbs { eta, prior } = &self.update {
            let s: f64 = prior.iter().sum();
            if !(*eta >= 0.0) || prior.len() != self.states || prior.iter().any(|&p| p < 0.0) || (s - 1.0).abs() > 1e-12 {
                return invalid("weighted gibbs needs eta >= 0 and a prior over the states");
            }
        }
        Ok(())
    }

    /// The learner map Psi(S_t, W_{t-1}) as a law over states.
    pub fn psi<S: Scalar>(&self, labels: usize, sample: &[LabeledEntry], prev: usize) -> Vec<(usize, S)> {
        match &self.update {
            ActiveUpdate::WeightedErm => {
                let risk: Vec<Rational> = (0..self.states)
                    .map(|w| {
                        sample
                            .iter()
                            .fold(Rational::zero(), |a, e| a + e.weight * self.loss[w][e.x * labels + e.y])
                    })
                    .collect();
                let best = risk.iter().copied().min().unwrap();
                let w = if risk[prev] == best { prev } else { risk.iter().position(|&r| r == best).unwrap() };
                vec![(w, S::one())]
            }
            ActiveUpdate::WeightedGibbs { eta, prior } => {
                let risk: Vec<f64> = (0..self.states)
                    .map(|w| sample.iter().map(|e| e.weight.to_f64() * self.loss[w][e.x * labels + e.y].to_f64()).sum())
                    .collect();
                let m = risk.iter().cloned().fold(f64::INFINITY, f64::min);
                let un: Vec<f64> = prior.iter().zip(&risk).map(|(p, r)| p * (-eta * (r - m)).exp()).collect();
                let s: f64 = un.iter().sum();
                un.into_iter()
                    .enumerate()
                    .filter(|(_, p)| *p > 0.0)
                    .map(|(w, p)| (w, S::from_f64(p / s)))
                    .collect()
            }
        }
    }

    /// R(w) under the world's law.
    pub fn population_risk(&self, world: &ActiveWorld, w: usize) -> Rational {
        let mut r = Rational::zero();
        for x in 0..world.features() {
            for y in 0..world.labels() {
                r = r + world.law[x][y] * self.loss[w][world.atom(x, y)];
            }
        }
        r
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActiveProblem {
    pub world: ActiveWorld,
    pub query: QuerySpec,
    pub learner: ActiveLearner,
    pub n: usize,
}

impl ActiveProblem {
    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        self.learner.validate(self.world.atoms())?;
        self.query.validate(self.world.features(), self.learner.states)?;
        if self.n == 0 {
            return invalid("horizon must be at least 1");
        }
        Ok(())
    }
}
