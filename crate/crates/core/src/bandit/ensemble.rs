//! Seed ensembles: regret curves, Monte Carlo one-step checks and pathwise invariants.

use rayon::prelude::*;

use crate::bounds::report::{terms, BoundReport, Mode};
use crate::error::Result;

use super::sim::{gap_statistic, BanditRun, Selected};
use super::{kl_to_uniform, smooth, BanditEnv, Behavior, Schedule};

/// Seeds per work unit. Fixed, so sums do not depend on the thread count.
const CHUNK: usize = 32;

/// Per-round sums over seeds of the one-step regret Delta(rho~_t) and its running total.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    pub seeds: usize,
    step: Vec<f64>,
    step_sq: Vec<f64>,
    cum: Vec<f64>,
    cum_sq: Vec<f64>,
}

impl Ensemble {
    fn zeros(horizon: usize) -> Self {
        Ensemble {
            seeds: 0,
            step: vec![0.0; horizon],
            step_sq: vec![0.0; horizon],
            cum: vec![0.0; horizon],
            cum_sq: vec![0.0; horizon],
        }
    }

    fn absorb(&mut self, o: &Ensemble) {
        self.seeds += o.seeds;
        for (a, b) in [(&mut self.step, &o.step), (&mut self.step_sq, &o.step_sq), (&mut self.cum, &o.cum), (&mut self.cum_sq, &o.cum_sq)] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn horizon(&self) -> usize {
        self.step.len()
    }

    fn mean_se(&self, sum: f64, sq: f64) -> (f64, f64) {
        let n = self.seeds as f64;
        let m = sum / n;
        let var = if self.seeds > 1 { ((sq - n * m * m) / (n - 1.0)).max(0.0) } else { 0.0 };
        (m, (var / n).sqrt())
    }

    /// Mean and standard error of Delta(rho~_t).
    pub fn step(&self, t: usize) -> (f64, f64) {
        self.mean_se(self.step[t - 1], self.step_sq[t - 1])
    }

    /// Mean and standard error of sum_{s <= t} Delta(rho~_s).
    pub fn cumulative(&self, t: usize) -> (f64, f64) {
        self.mean_se(self.cum[t - 1], self.cum_sq[t - 1])
    }

    /// Runs `seeds` replicas of the selected path only.
    pub fn simulate(
        env: &BanditEnv,
        sched: &Schedule,
        behavior: &Behavior,
        horizon: usize,
        seeds: usize,
        seed: u64,
    ) -> Result<Self> {
        env.validate()?;
        sched.validate(env.k(), horizon)?;
        let starts: Vec<usize> = (0..seeds).step_by(CHUNK).collect();
        let parts: Vec<Result<Ensemble>> = starts
            .par_iter()
            .map(|&lo| {
                let mut e = Ensemble::zeros(horizon);
                for rep in lo..(lo + CHUNK).min(seeds) {
                    let mut sel = Selected::new(env, sched, behavior, seed, rep as u64);
                    let mut total = 0.0;
                    for t in 0..horizon {
                        sel.step()?;
                        let r = env.regret(&sel.smoothed());
                        total += r;
                        e.step[t] += r;
                        e.step_sq[t] += r * r;
                        e.cum[t] += total;
                        e.cum_sq[t] += total * total;
                    }
                    e.seeds += 1;
                }
                Ok(e)
            })
            .collect();
        let mut out = Ensemble::zeros(horizon);
        for p in parts {
            out.absorb(&p?);
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Regret curves

#[derive(Clone, Debug, PartialEq)]
pub struct RegretRow {
    pub t: usize,
    pub step_mean: f64,
    pub step_stderr: f64,
    pub cum_mean: f64,
    pub cum_stderr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegretCurve {
    pub rows: Vec<RegretRow>,
    /// Least-squares slope of log cumulative regret on log t over t in [T/10, T].
    pub slope: f64,
}

/// Least-squares slope of log y on log x.
pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Log-spaced rounds in [lo, hi], deduplicated.
pub fn log_grid(lo: usize, hi: usize, points: usize) -> Vec<usize> {
    let (a, b) = ((lo.max(1)) as f64, hi as f64);
    let mut v: Vec<usize> = (0..points)
        .map(|i| (a * (b / a).powf(i as f64 / (points - 1).max(1) as f64)).round() as usize)
        .collect();
    v.dedup();
    v
}

/// Rows at `points` log-spaced rounds plus the slope fitted on [T/10, T].
pub fn regret_curve(ens: &Ensemble, points: usize) -> RegretCurve {
    let horizon = ens.horizon();
    let row = |t: usize| {
        let (step_mean, step_stderr) = ens.step(t);
        let (cum_mean, cum_stderr) = ens.cumulative(t);
        RegretRow { t, step_mean, step_stderr, cum_mean, cum_stderr }
    };
    let window: Vec<(f64, f64)> =
        log_grid(horizon / 10, horizon, 40).into_iter().map(|t| (t as f64, ens.cumulative(t).0)).collect();
    RegretCurve { rows: log_grid(1, horizon, points).into_iter().map(row).collect(), slope: fit_slope(&window) }
}

// ---------------------------------------------------------------------------
// One-step bounds

/// Monte Carlo check of the log K forms of the selector-SCMI and ordinary-MI one-step
/// bounds at each logged round.
pub fn one_step_reports(env: &BanditEnv, sched: &Schedule, ens: &Ensemble, rounds: &[usize]) -> Vec<BoundReport> {
    let k = env.k();
    let (kf, logk, dmin) = (k as f64, (k as f64).ln(), env.delta_min());
    let mut out = Vec::new();
    for &t in rounds {
        let (mean, stderr) = ens.step(t);
        let eps = sched.eps(k, t);
        let tf = t as f64;
        let smoothing = kf * sched.eps(k, t + 1);
        let empirical = 2.0 * logk / sched.gamma(k, t);
        let mode = Mode::MonteCarlo { stderr };
        out.push(BoundReport::inequality(
            format!("bandit.one_step[t={t}]"),
            mean,
            terms(&[("smoothing", smoothing), ("empirical", empirical), ("transfer", 52.0 * logk / (tf * eps * dmin))]),
            mode,
        ));
        out.push(BoundReport::inequality(
            format!("bandit.ordinary_mi[t={t}]"),
            mean,
            terms(&[("smoothing", smoothing), ("empirical", empirical), ("transfer", 6.0 * logk / (tf * eps * dmin))]),
            mode,
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Importance weighting and pathwise invariants

/// Smallest rhs - lhs seen over a set of pathwise inequalities.
struct Worst {
    lhs: f64,
    rhs: f64,
}

impl Worst {
    fn new() -> Self {
        Worst { lhs: f64::NEG_INFINITY, rhs: f64::INFINITY }
    }

    fn see(&mut self, lhs: f64, rhs: f64) {
        if rhs - lhs < self.rhs - self.lhs || self.lhs == f64::NEG_INFINITY {
            self.lhs = lhs;
            self.rhs = rhs;
        }
    }

    fn report(&self, name: &str, rhs_name: &str) -> BoundReport {
        BoundReport::inequality(name, self.lhs, terms(&[(rhs_name, self.rhs)]), Mode::exact())
    }
}

fn mc_identity(name: String, xs: &[f64], target: f64) -> BoundReport {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    BoundReport::identity(name, m, terms(&[("target", target)]), Mode::MonteCarlo { stderr: (var / n).sqrt() })
}

/// Unbiasedness of rhat, centering and range of the fixed-arm differences
/// M_s(a) = Delta(a) - G_s(a), and the pathwise posterior invariants, over a set of runs.
pub fn importance_weight_checks(env: &BanditEnv, sched: &Schedule, runs: &[BanditRun]) -> Vec<BoundReport> {
    let k = env.k();
    let (logk, means, gaps, best) = ((k as f64).ln(), env.means(), env.gaps(), env.best());
    let horizon = runs.iter().map(|r| r.rounds.len()).min().unwrap_or(0);
    let mut out = Vec::new();
    if horizon == 0 {
        return vec![BoundReport::inconclusive("bandit.importance", "no rounds to check")];
    }
    for a in 0..k {
        let xs: Vec<f64> = runs.iter().map(|r| r.rounds[horizon - 1].rhat[a]).collect();
        out.push(mc_identity(format!("bandit.rhat_unbiased[a={a}]"), &xs, means[a]));
    }
    for s in 1..=horizon {
        for a in 0..k {
            let xs: Vec<f64> = runs
                .iter()
                .map(|r| {
                    let rd = &r.rounds[s - 1];
                    gaps[a] - gap_statistic(rd.selected(), &rd.policy, best, a)
                })
                .collect();
            out.push(mc_identity(format!("bandit.fixed_arm_centered[s={s},a={a}]"), &xs, 0.0));
        }
    }

    let (mut floor, mut norm, mut norm_s, mut smoothing) = (Worst::new(), Worst::new(), Worst::new(), Worst::new());
    let (mut empirical, mut kl, mut range, mut smooth_floor) = (Worst::new(), Worst::new(), Worst::new(), Worst::new());
    for run in runs {
        for (i, rd) in run.rounds.iter().enumerate() {
            let s = i + 1;
            let eps_s = sched.eps(k, s);
            let eps_next = sched.eps(k, s + 1);
            for a in 0..k {
                floor.see(eps_s, rd.policy[a]);
                smooth_floor.see(eps_next, rd.rho_smoothed[a]);
                let m = gaps[a] - gap_statistic(rd.selected(), &rd.policy, best, a);
                range.see(m.abs(), 2.0 / eps_s);
            }
            norm.see((rd.rho.iter().sum::<f64>() - 1.0).abs(), 1e-12);
            norm_s.see((rd.rho_smoothed.iter().sum::<f64>() - 1.0).abs(), 1e-12);
            let recomputed = smooth(&rd.rho, eps_next);
            norm_s.see(recomputed.iter().zip(&rd.rho_smoothed).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max), 1e-12);
            smoothing.see(env.regret(&rd.rho_smoothed), env.regret(&rd.rho) + k as f64 * eps_next);
            let emp: f64 = rd.rho.iter().zip(&rd.rhat).map(|(p, r)| p * (rd.rhat[best] - r)).sum();
            empirical.see(emp, logk / sched.gamma(k, s));
            kl.see(kl_to_uniform(&rd.rho), logk);
        }
    }
    out.push(floor.report("bandit.pathwise.policy_floor", "policy"));
    out.push(smooth_floor.report("bandit.pathwise.smoothed_floor", "smoothed"));
    out.push(norm.report("bandit.pathwise.posterior_normalized", "tolerance"));
    out.push(norm_s.report("bandit.pathwise.smoothed_normalized", "tolerance"));
    out.push(smoothing.report("bandit.pathwise.smoothing_cost", "unsmoothed_plus_floor"));
    out.push(empirical.report("bandit.pathwise.exp_weights_empirical", "log_k_over_gamma"));
    out.push(kl.report("bandit.pathwise.kl_to_uniform", "log_k"));
    out.push(range.report("bandit.pathwise.fixed_arm_range", "two_over_eps"));
    out
}
