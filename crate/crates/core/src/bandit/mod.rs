//! Stochastic K-armed bandits with smoothed exponential weights and paired proof-side
//! feedback.
//!
//! ```text
//!   R^a_s     = 1{A_s = a} R_s / pi_s(a)
//!   rhat_t(a) = (1/t) sum_s R^a_s
//!   rho_t     ∝ exp(gamma_t rhat_t)
//!   rho~_t    = (1 - K eps_{t+1}) rho_t + eps_{t+1}
//!   G_{s,u}(a) = R^{a*}_{s,u} - R^a_{s,u}
//! ```
//!
//! The behavior policy defaults to pi_s = rho~_{s-1}; any predictable policy that keeps
//! pi_s(a) >= eps_s is accepted.

pub mod ensemble;
pub mod exact;
pub mod selector;
pub mod sim;

pub use ensemble::{
    fit_slope, importance_weight_checks, one_step_reports, regret_curve, Ensemble, RegretCurve, RegretRow,
};
pub use exact::{enumerate_bandit, exact_reports, names as exact_names};
pub use selector::{random_selector_joint, selector_square_check};
pub use sim::{empirical_gap, run_bandit, BanditRound, BanditRun};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest reward grid the exact enumeration accepts.
pub const MAX_GRID: usize = 8;

/// A reward law on a finite grid in [0, 1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardLaw {
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

impl RewardLaw {
    pub fn bernoulli(mean: f64) -> Self {
        RewardLaw { values: vec![0.0, 1.0], probs: vec![1.0 - mean, mean] }
    }

    pub fn point(value: f64) -> Self {
        RewardLaw { values: vec![value], probs: vec![1.0] }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().zip(&self.probs).map(|(v, p)| v * p).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BanditEnv {
    pub arms: Vec<RewardLaw>,
}

impl BanditEnv {
    pub fn bernoulli(means: &[f64]) -> Result<Self> {
        let env = BanditEnv { arms: means.iter().map(|&m| RewardLaw::bernoulli(m)).collect() };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if self.arms.len() < 2 {
            return invalid("a bandit needs at least two arms");
        }
        for (a, law) in self.arms.iter().enumerate() {
            let s: f64 = law.probs.iter().sum();
            if law.values.is_empty()
                || law.values.len() != law.probs.len()
                || law.values.len() > MAX_GRID
                || law.values.iter().any(|v| !(0.0..=1.0).contains(v))
                || law.probs.iter().any(|&p| !(p >= 0.0))
                || (s - 1.0).abs() > 1e-12
            {
                return invalid(format!("arm {a}: reward law must be a distribution on at most {MAX_GRID} points of [0, 1]"));
            }
        }
        if self.delta_min() <= 1e-12 {
            return invalid("the optimal arm must be unique (delta_min > 0)");
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.arms.len()
    }

    pub fn means(&self) -> Vec<f64> {
        self.arms.iter().map(RewardLaw::mean).collect()
    }

    pub fn best(&self) -> usize {
        let m = self.means();
        (0..m.len()).fold(0, |b, a| if m[a] > m[b] { a } else { b })
    }

    pub fn gaps(&self) -> Vec<f64> {
        let m = self.means();
        let top = m[self.best()];
        m.iter().map(|r| top - r).collect()
    }

    pub fn delta_min(&self) -> f64 {
        let best = self.best();
        self.gaps().iter().enumerate().filter(|&(a, _)| a != best).map(|(_, &d)| d).fold(f64::INFINITY, f64::min)
    }

    /// Delta(rho) = sum_a rho(a) Delta(a).
    pub fn regret(&self, rho: &[f64]) -> f64 {
        self.gaps().iter().zip(rho).map(|(d, p)| d * p).sum()
    }
}

// ---------------------------------------------------------------------------
// Schedules

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpsRule {
    /// eps_t = min{1/K, sqrt(c log K / (K t delta_min))}.
    Tuned { delta_min: f64, #[serde(default = "default_coefficient")] coefficient: f64 },
    Constant { eps: f64 },
    /// eps_t = table[t - 1]; the last entry repeats.
    Table { eps: Vec<f64> },
}

fn default_coefficient() -> f64 {
    52.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GammaRule {
    /// gamma_t = 2 log K / (K eps_t).
    Matched,
    Constant { gamma: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub eps: EpsRule,
    pub gamma: GammaRule,
}

impl Schedule {
    pub fn tuned(env: &BanditEnv) -> Self {
        Schedule { eps: EpsRule::Tuned { delta_min: env.delta_min(), coefficient: 52.0 }, gamma: GammaRule::Matched }
    }

    /// Exploration fixed at 1/K: the played policy is uniform forever.
    pub fn uniform(k: usize) -> Self {
        Schedule { eps: EpsRule::Constant { eps: 1.0 / k as f64 }, gamma: GammaRule::Matched }
    }

    /// The schedule held at its round-`t` values: the constant-exploration control.
    pub fn frozen_at(&self, k: usize, t: usize) -> Self {
        Schedule { eps: EpsRule::Constant { eps: self.eps(k, t) }, gamma: GammaRule::Constant { gamma: self.gamma(k, t) } }
    }

    pub fn eps(&self, k: usize, t: usize) -> f64 {
        let kf = k as f64;
        match &self.eps {
            EpsRule::Tuned { delta_min, coefficient } => {
                (1.0 / kf).min((coefficient * kf.ln() / (kf * t as f64 * delta_min)).sqrt())
            }
            EpsRule::Constant { eps } => *eps,
            EpsRule::Table { eps } => eps[(t - 1).min(eps.len() - 1)],
        }
    }

    pub fn gamma(&self, k: usize, t: usize) -> f64 {
        match &self.gamma {
            GammaRule::Matched => 2.0 * (k as f64).ln() / (k as f64 * self.eps(k, t)),
            GammaRule::Constant { gamma } => *gamma,
        }
    }

    /// Checks eps_t in (0, 1/K], nonincreasing, and gamma_t >= 0 for t = 1..=horizon+1.
    pub fn validate(&self, k: usize, horizon: usize) -> Result<()> {
        if let EpsRule::Table { eps } = &self.eps {
            if eps.is_empty() {
                return invalid("empty exploration table");
            }
        }
        if let EpsRule::Tuned { delta_min, coefficient } = &self.eps {
            if !(*delta_min > 0.0 && *coefficient > 0.0) {
                return invalid("tuned schedule needs delta_min > 0 and a positive coefficient");
            }
        }
        let mut prev = f64::INFINITY;
        for t in 1..=horizon + 1 {
            let e = self.eps(k, t);
            let g = self.gamma(k, t);
            let reason = if !(e > 0.0 && e <= 1.0 / k as f64 + 1e-15) {
                Some(format!("eps = {e} outside (0, 1/K]"))
            } else if e > prev + 1e-15 {
                Some(format!("eps increases from {prev} to {e}"))
            } else if !(g >= 0.0) || !g.is_finite() {
                Some(format!("gamma = {g} is not a finite nonnegative number"))
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(Error::Schedule { round: t, reason });
            }
            prev = e;
        }
        Ok(())
    }
}

/// Behavior policy pi_s.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Behavior {
    /// pi_s = rho~_{s-1}, with rho_0 uniform.
    #[default]
    Smoothed,
    Uniform,
    Fixed { probs: Vec<f64> },
}

// ---------------------------------------------------------------------------
// Posterior helpers

/// rho(a) ∝ exp(gamma * rhat(a)).
pub fn exp_weights(rhat: &[f64], gamma: f64) -> Vec<f64> {
    let m = rhat.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = rhat.iter().map(|r| (gamma * (r - m)).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// (1 - K eps) rho + eps.
pub fn smooth(rho: &[f64], eps: f64) -> Vec<f64> {
    let k = rho.len() as f64;
    rho.iter().map(|p| (1.0 - k * eps) * p + eps).collect()
}

/// KL(rho || uniform) = log K - H(rho).
pub fn kl_to_uniform(rho: &[f64]) -> f64 {
    let k = rho.len() as f64;
    rho.iter().filter(|&&p| p > 0.0).map(|p| p * (p * k).ln()).sum::<f64>().max(0.0)
}

/// The policy played at round s given rho_{s-1}; checks the exploration floor.
pub(crate) fn behavior_policy(
    behavior: &Behavior,
    sched: &Schedule,
    rho_prev: &[f64],
    s: usize,
) -> Result<Vec<f64>> {
    let k = rho_prev.len();
    let eps = sched.eps(k, s);
    let pi = match behavior {
        Behavior::Smoothed => smooth(rho_prev, eps),
        Behavior::Uniform => vec![1.0 / k as f64; k],
        Behavior::Fixed { probs } => {
            if probs.len() != k {
                return invalid("fixed behavior policy has the wrong number of arms");
            }
            probs.clone()
        }
    };
    if let Some(a) = (0..k).find(|&a| pi[a] < eps - 1e-15) {
        return Err(Error::Schedule {
            round: s,
            reason: format!("policy puts {} on arm {a}, below the floor {eps}", pi[a]),
        });
    }
    Ok(pi)
}
