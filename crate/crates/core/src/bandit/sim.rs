//! Simulated runs of the paired bandit process.
//!
//! The selected feedback, the ghost feedback, the selector and the virtual arm come from
//! four separate streams. Placing the selected draw at coordinate U_s and the ghost draw
//! at 1 - U_s has the same law as drawing both coordinates and selecting one, and it makes
//! the selected path independent of whether ghost or virtual draws are made at all.

use rand::Rng;

use crate::error::Result;
use crate::rng::{draw_index, stream, Purpose, Stream};

use super::{behavior_policy, exp_weights, smooth, BanditEnv, Behavior, Schedule};

#[derive(Clone, Debug, PartialEq)]
pub struct BanditRound {
    pub policy: Vec<f64>,
    /// (A_{s,u}, R_{s,u}) for u = 0, 1.
    pub pair: [(usize, f64); 2],
    pub u: u8,
    pub rhat: Vec<f64>,
    pub rho: Vec<f64>,
    pub rho_smoothed: Vec<f64>,
    pub virtual_arm: usize,
    /// Delta(rho~_s).
    pub regret: f64,
}

impl BanditRound {
    pub fn selected(&self) -> (usize, f64) {
        self.pair[self.u as usize]
    }

    pub fn ghost(&self) -> (usize, f64) {
        self.pair[1 - self.u as usize]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BanditRun {
    pub seed: u64,
    pub replica: u64,
    pub best: usize,
    pub rounds: Vec<BanditRound>,
}

/// G(a) = 1{A = a*} R / pi(a*) - 1{A = a} R / pi(a) for one feedback coordinate.
pub fn gap_statistic(feedback: (usize, f64), pi: &[f64], best: usize, a: usize) -> f64 {
    let (played, r) = feedback;
    let w = |b: usize| if played == b { r / pi[b] } else { 0.0 };
    w(best) - w(a)
}

/// Delta-hat_t(rho) = sum_a rho(a) (rhat_t(a*) - rhat_t(a)).
pub fn empirical_gap(run: &BanditRun, t: usize, rho: &[f64]) -> f64 {
    let rhat = &run.rounds[t - 1].rhat;
    rho.iter().zip(rhat).map(|(p, r)| p * (rhat[run.best] - r)).sum()
}

fn draw_feedback(env: &BanditEnv, pi: &[f64], rng: &mut Stream) -> (usize, f64) {
    let a = draw_index(rng, pi);
    let law = &env.arms[a];
    (a, law.values[draw_index(rng, &law.probs)])
}

/// Selected-path state shared by full runs and the streaming regret pass.
pub(crate) struct Selected<'a> {
    env: &'a BanditEnv,
    sched: &'a Schedule,
    behavior: &'a Behavior,
    k: usize,
    sums: Vec<f64>,
    pub rho: Vec<f64>,
    pub t: usize,
    rng: Stream,
}

impl<'a> Selected<'a> {
    pub fn new(env: &'a BanditEnv, sched: &'a Schedule, behavior: &'a Behavior, seed: u64, replica: u64) -> Self {
        let k = env.k();
        Selected {
            env,
            sched,
            behavior,
            k,
            sums: vec![0.0; k],
            rho: vec![1.0 / k as f64; k],
            t: 0,
            rng: stream(seed, Purpose::BanditSelected, &[replica]),
        }
    }

    /// Plays round t + 1; returns (pi, selected feedback).
    pub fn step(&mut self) -> Result<(Vec<f64>, (usize, f64))> {
        let s = self.t + 1;
        let pi = behavior_policy(self.behavior, self.sched, &self.rho, s)?;
        let fb = draw_feedback(self.env, &pi, &mut self.rng);
        self.sums[fb.0] += fb.1 / pi[fb.0];
        self.t = s;
        let tf = s as f64;
        let rhat: Vec<f64> = self.sums.iter().map(|x| x / tf).collect();
        self.rho = exp_weights(&rhat, self.sched.gamma(self.k, s));
        Ok((pi, fb))
    }

    pub fn rhat(&self) -> Vec<f64> {
        self.sums.iter().map(|x| x / self.t as f64).collect()
    }

    pub fn smoothed(&self) -> Vec<f64> {
        smooth(&self.rho, self.sched.eps(self.k, self.t + 1))
    }
}

pub fn run_bandit(
    env: &BanditEnv,
    sched: &Schedule,
    behavior: &Behavior,
    horizon: usize,
    seed: u64,
    replica: u64,
) -> Result<BanditRun> {
    env.validate()?;
    sched.validate(env.k(), horizon)?;
    let mut sel = Selected::new(env, sched, behavior, seed, replica);
    let mut ghost_rng = stream(seed, Purpose::BanditGhost, &[replica]);
    let mut selector_rng = stream(seed, Purpose::BanditSelector, &[replica]);
    let mut virtual_rng = stream(seed, Purpose::BanditVirtual, &[replica]);
    let mut rounds = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let (policy, fb) = sel.step()?;
        let ghost = draw_feedback(env, &policy, &mut ghost_rng);
        let u: u8 = selector_rng.random_range(0..2);
        let pair = if u == 0 { [fb, ghost] } else { [ghost, fb] };
        let rho_smoothed = sel.smoothed();
        let virtual_arm = draw_index(&mut virtual_rng, &sel.rho);
        rounds.push(BanditRound {
            policy,
            pair,
            u,
            rhat: sel.rhat(),
            rho: sel.rho.clone(),
            regret: env.regret(&rho_smoothed),
            rho_smoothed,
            virtual_arm,
        });
    }
    Ok(BanditRun { seed, replica, best: env.best(), rounds })
}
