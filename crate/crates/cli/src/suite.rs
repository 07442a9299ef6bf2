//! The five verbs as functions from a config to a [`SuiteResult`].
//!
//! Independent checks run on a rayon pool of the configured width; results are collected
//! in input order, so every CSV is independent of the width.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use scmi_core::active::{
    active_fast_bound, active_slow_bound, enumerate_active, expected_risk, iw_risks, nonterminal_identity_check,
    population_identity_check, query_aware_reports, random_problem, row_swap_check, ActiveProblem,
};
use scmi_core::bandit::{
    enumerate_bandit, exact_reports, importance_weight_checks, one_step_reports, random_selector_joint,
    regret_curve, run_bandit, selector_square_check, BanditEnv, BanditRun, Ensemble, RegretCurve, Schedule,
};
use scmi_core::bounds::{
    batch_ecmi_bound, bernstein_bound, enumerate_batch, frontier_root, prefixed, random_batch_problem,
    shifted_rademacher_bound, slow_rate_bound, stopping_bound, tally, two_coordinate_bound, BatchProblem,
    BernsteinParams, BoundReport, Mode, Relation, StoppingRule, Verdict,
};
use scmi_core::online::{littlestone_dimension, run_online, verify_pattern_scmi, vc_dimension, BinaryClass, LdimOptions};
use scmi_core::rng::{stream, Purpose};
use scmi_core::supersample::random::{random_instance, Family, GenOptions, Instance};
use scmi_core::supersample::{
    conditional_population_holdout, enumerate_joint, row_swap_correlation, selector_fairness_deviation,
    sequential_risks, two_coordinate_correlation, EnumOptions, DEFAULT_CAP,
};
use scmi_core::{DiscreteJoint, Error, Scalar};

use crate::config::{ExperimentConfig, FamilyName, Kind, NamedWorld};

/// A file written next to the reports, relative to the output directory.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub path: String,
    pub contents: String,
}

#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub kind: Kind,
    pub reports: Vec<BoundReport>,
    pub digest: String,
    pub seed: u64,
    pub wall_time: Duration,
    pub artifacts: Vec<Artifact>,
    /// Extra lines for the summary block.
    pub notes: Vec<String>,
}

impl SuiteResult {
    /// (holds, violated, inconclusive).
    pub fn counts(&self) -> (usize, usize, usize) {
        tally(&self.reports)
    }

    /// 0 when everything holds, 1 on any violation, 3 when the only failures are
    /// inconclusive. Reports whose structural premise is unmet do not count as failures.
    pub fn exit_code(&self) -> i32 {
        let (_, v, _) = self.counts();
        if v > 0 {
            1
        } else if self.reports.iter().any(|r| r.verdict == Verdict::Inconclusive && !r.is_premise_unmet()) {
            3
        } else {
            0
        }
    }
}

/// Runs a config. Errors are configuration or capacity problems of the run itself.
pub fn run(cfg: &ExperimentConfig) -> scmi_core::Result<SuiteResult> {
    run_with_replay(cfg, None)
}

pub fn run_with_replay(cfg: &ExperimentConfig, replay: Option<&Persisted>) -> scmi_core::Result<SuiteResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallel)
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))?;
    let start = Instant::now();
    let mut res = pool.install(|| match (cfg.kind, replay) {
        (Kind::Sweep, Some(p)) => Ok(Output { reports: replay_checks(p)?, ..Output::default() }),
        (_, Some(_)) => Err(Error::Invalid("--replay only applies to sweep".into())),
        (Kind::Identities, None) => verify_identities(cfg),
        (Kind::Sweep, None) => sweep(cfg),
        (Kind::Online, None) => online(cfg),
        (Kind::Active, None) => active(cfg),
        (Kind::Bandit, None) => bandit(cfg),
    })?;
    res.reports = res.reports.into_iter().map(|r| r.with_tolerance(cfg.tolerance)).collect();
    Ok(SuiteResult {
        kind: cfg.kind,
        reports: res.reports,
        digest: cfg.digest(),
        seed: cfg.seed,
        wall_time: start.elapsed(),
        artifacts: res.artifacts,
        notes: res.notes,
    })
}

#[derive(Default)]
struct Output {
    reports: Vec<BoundReport>,
    artifacts: Vec<Artifact>,
    notes: Vec<String>,
}

fn exact_diff(name: &str, lhs: f64, rhs_name: &str, rhs: f64) -> BoundReport {
    BoundReport::identity(name, lhs, vec![(rhs_name.to_string(), rhs)], Mode::exact())
}

/// Runs `f` over `items` on the pool and concatenates the results in input order.
fn par_flat<T: Sync, F>(items: &[T], f: F) -> scmi_core::Result<Vec<BoundReport>>
where
    F: Fn(&T) -> scmi_core::Result<Vec<BoundReport>> + Sync + Send,
{
    let parts: Vec<scmi_core::Result<Vec<BoundReport>>> = items.par_iter().map(f).collect();
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Supersample worlds

fn enum_options(cfg: &ExperimentConfig) -> EnumOptions {
    EnumOptions { selector_bias: cfg.debug.selector_bias, ..EnumOptions::default() }
}

/// Correlation identities and selector fairness on one enumerated joint.
fn world_identities(j: &DiscreteJoint<f64>) -> scmi_core::Result<Vec<BoundReport>> {
    let r = sequential_risks(j)?;
    let ex = Mode::exact();
    let mut out = vec![BoundReport::inequality(
        "identity.selector_fairness",
        selector_fairness_deviation(j)?,
        vec![("fair".into(), 0.0)],
        ex,
    )];
    if j.meta.exchangeable {
        out.push(exact_diff("identity.row_swap", r.gap, "selector_correlation", row_swap_correlation(j)?));
    } else {
        out.push(BoundReport::premise_unmet("identity.row_swap", "rows are not declared exchangeable"));
    }
    out.push(exact_diff("identity.two_coordinate", r.gap, "two_coordinate_correlation", two_coordinate_correlation(j)?));
    if j.meta.conditional_product {
        out.push(exact_diff("identity.population", r.holdout, "conditional_population", conditional_population_holdout(j)?));
    }
    Ok(out)
}

/// The same identities in exact rational arithmetic: lhs is the exact difference.
fn rational_identities(w: &NamedWorld, opts: &EnumOptions) -> scmi_core::Result<Vec<BoundReport>> {
    let j: DiscreteJoint<BigRational> = enumerate_joint(&w.world, &w.learner, w.n, opts)?;
    let r = sequential_risks(&j)?;
    let mut out = Vec::new();
    let diff = |a: BigRational, b: BigRational| (a - b).to_f64();
    if j.meta.exchangeable {
        out.push(exact_diff("identity.row_swap.rational", diff(r.gap.clone(), row_swap_correlation(&j)?), "zero", 0.0));
    }
    out.push(exact_diff(
        "identity.two_coordinate.rational",
        diff(r.gap.clone(), two_coordinate_correlation(&j)?),
        "zero",
        0.0,
    ));
    Ok(out)
}

fn named_world_identities(w: &NamedWorld, opts: &EnumOptions) -> scmi_core::Result<Vec<BoundReport>> {
    w.world.validate()?;
    w.learner.validate(w.world.space.len())?;
    let j: DiscreteJoint<f64> = enumerate_joint(&w.world, &w.learner, w.n, opts)?;
    let mut out = world_identities(&j)?;
    out.extend(rational_identities(w, opts)?);
    Ok(prefixed(out, &w.name))
}

/// Every sequential bound that applies to the joint, plus the identities.
fn world_bounds(j: &DiscreteJoint<f64>, states: usize) -> scmi_core::Result<Vec<BoundReport>> {
    let mut out = world_identities(j)?;
    match slow_rate_bound(j) {
        Ok(r) => out.extend(r),
        Err(Error::NotExchangeable) => {
            out.push(BoundReport::premise_unmet("slow_rate.loss", "rows are not declared exchangeable"))
        }
        Err(e) => return Err(e),
    }
    out.extend(two_coordinate_bound(j)?);
    out.extend(prefixed(shifted_rademacher_bound(j, 1.0, 0.125)?, "c=1"));
    out.extend(prefixed(shifted_rademacher_bound(j, 0.25, frontier_root(0.25) * 0.999)?, "c=0.25"));
    out.extend(stopping_bound(j, &StoppingRule::AfterFirstLoss, 1.0, 0.125)?);
    let params = BernsteinParams::from_contraction(1.0, 1.0, 0.5)?;
    for w in 0..states {
        out.extend(prefixed(bernstein_bound(j, w, params)?, &format!("comparator={w}")));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Active problems

fn active_identities(name: &str, prob: &ActiveProblem) -> scmi_core::Result<Vec<BoundReport>> {
    prob.validate()?;
    let j: DiscreteJoint<f64> = enumerate_active(prob, DEFAULT_CAP)?;
    let mut out = vec![population_identity_check(&j), row_swap_check(&j)?];
    for m in 1..prob.n {
        out.push(nonterminal_identity_check(&j, m)?);
    }
    let jq: DiscreteJoint<BigRational> = enumerate_active(prob, DEFAULT_CAP)?;
    let (_, holdout) = iw_risks(&jq)?;
    let risk = expected_risk(&jq, prob.n)?;
    out.push(exact_diff("active.population.rational", (holdout - risk).to_f64(), "zero", 0.0));
    Ok(prefixed(out, name))
}

fn active_checks(name: &str, prob: &ActiveProblem, c: f64, eta: f64) -> scmi_core::Result<Vec<BoundReport>> {
    prob.validate()?;
    let j: DiscreteJoint<f64> = enumerate_active(prob, DEFAULT_CAP)?;
    let mut out = vec![population_identity_check(&j), row_swap_check(&j)?];
    for m in 1..prob.n {
        out.push(nonterminal_identity_check(&j, m)?);
    }
    out.extend(active_slow_bound(&j));
    out.extend(active_fast_bound(&j, c, eta)?);
    out.extend(query_aware_reports(&j));
    Ok(prefixed(out, name))
}

// ---------------------------------------------------------------------------
// Verbs

fn verify_identities(cfg: &ExperimentConfig) -> scmi_core::Result<Output> {
    let opts = enum_options(cfg);
    let mut reports = par_flat(&cfg.worlds, |w| named_world_identities(w, &opts))?;
    reports.extend(par_flat(&cfg.problems, |p| active_identities(&p.name, &p.problem))?);
    if cfg.bandit.exact_horizon > 0 {
        let env = BanditEnv::bernoulli(&cfg.bandit.means)?;
        let sched = bandit_schedule(cfg, &env);
        let rounds: Vec<usize> = (1..=cfg.bandit.exact_horizon).collect();
        let ex = par_flat(&rounds, |&t| {
            let r = exact_bandit(cfg, &env, &sched, t)?;
            Ok(r.into_iter().filter(|r| r.relation == Relation::Equal || r.lhs.is_nan()).collect())
        })?;
        reports.extend(ex);
    }
    Ok(Output { reports, ..Output::default() })
}

fn online(cfg: &ExperimentConfig) -> scmi_core::Result<Output> {
    let mut reports = par_flat(&cfg.gibbs, |g| Ok(prefixed(run_online(&g.world, &g.learner, g.n, g.c, g.eta)?, &g.name)))?;
    reports.extend(par_flat(&cfg.patterns, |p| {
        let cls = p.class.build()?;
        Ok(prefixed(verify_pattern_scmi(&p.world, &p.learner, &cls, p.n)?, &p.name))
    })?);
    reports.extend(littlestone_checks(cfg)?);
    Ok(Output { reports, ..Output::default() })
}

/// Reference dimensions, the log2 |H| ceiling, and Ldim >= VC on random classes.
fn littlestone_checks(cfg: &ExperimentConfig) -> scmi_core::Result<Vec<BoundReport>> {
    use rand::Rng;
    let opts = LdimOptions::default();
    let ex = Mode::exact();
    let ld = |c: &BinaryClass| littlestone_dimension(c, opts).map(|d| d as f64);
    let mut out = Vec::new();
    let single = BinaryClass::new((0..4).map(|i| format!("x{i}")).collect(), vec![vec![true, false, true, false]])?;
    out.push(exact_diff("ldim.singleton", ld(&single)?, "expected", 0.0));
    for m in 1..=cfg.littlestone.max_points {
        out.push(exact_diff(&format!("ldim.full[m={m}]"), ld(&BinaryClass::full(m))?, "expected", m as f64));
    }
    out.push(exact_diff("ldim.thresholds[m=3]", ld(&BinaryClass::thresholds(3))?, "expected", 2.0));
    let mut rng = stream(cfg.seed, Purpose::Sweep, &[0x1d1e]);
    for i in 0..cfg.littlestone.random_classes {
        let m = rng.random_range(2..=cfg.littlestone.max_points.max(2));
        let size = rng.random_range(1..=12usize.min(1 << m));
        let mut codes: Vec<u64> = (0..size).map(|_| rng.random_range(0..1u64 << m)).collect();
        codes.sort();
        codes.dedup();
        let fns = codes.iter().map(|c| (0..m).map(|x| c >> x & 1 == 1).collect()).collect();
        let cls = BinaryClass::new((0..m).map(|x| format!("x{x}")).collect(), fns)?;
        let d = ld(&cls)?;
        out.push(BoundReport::inequality(format!("ldim.dominates_vc[class={i}]"), vc_dimension(&cls) as f64, vec![("ldim".into(), d)], ex));
        out.push(BoundReport::inequality(
            format!("ldim.log_size[class={i}]"),
            d,
            vec![("log2_size".into(), (cls.len() as f64).log2())],
            ex,
        ));
    }
    Ok(out)
}

fn active(cfg: &ExperimentConfig) -> scmi_core::Result<Output> {
    let reports = par_flat(&cfg.problems, |p| active_checks(&p.name, &p.problem, p.c, p.eta))?;
    Ok(Output { reports, ..Output::default() })
}

// ---------------------------------------------------------------------------
// Sweep

/// A generated instance as written to disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Persisted {
    Supersample { seed: u64, index: u64, instance: Instance },
    Batch { seed: u64, index: u64, problem: BatchProblem },
    Active { seed: u64, index: u64, problem: ActiveProblem },
}

impl Persisted {
    pub fn file_name(&self) -> String {
        match self {
            Persisted::Supersample { index, .. } => format!("worlds/world-{index:04}.toml"),
            Persisted::Batch { index, .. } => format!("worlds/batch-{index:04}.toml"),
            Persisted::Active { index, .. } => format!("worlds/active-{index:04}.toml"),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Persisted::Supersample { index, .. } => format!("world-{index:04}"),
            Persisted::Batch { index, .. } => format!("batch-{index:04}"),
            Persisted::Active { index, .. } => format!("active-{index:04}"),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("instances serialize")
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

fn sweep_instances(cfg: &ExperimentConfig) -> Vec<Persisted> {
    let s = &cfg.sweep;
    let family = match s.family {
        FamilyName::Any => Family::Any,
        FamilyName::Exchangeable => Family::Exchangeable,
        FamilyName::Asymmetric => Family::Asymmetric,
    };
    let opts = GenOptions { max_n: s.max_n, max_atoms: s.max_atoms, max_states: s.max_states, budget: s.budget, family };
    let seed = cfg.seed;
    let mut v: Vec<Persisted> = (0..s.worlds as u64)
        .map(|index| Persisted::Supersample { seed, index, instance: random_instance(seed, index, &opts) })
        .collect();
    v.extend((0..s.batch as u64).map(|index| Persisted::Batch { seed, index, problem: random_batch_problem(seed, index) }));
    v.extend(
        (0..s.active as u64)
            .map(|index| Persisted::Active { seed, index, problem: random_problem(seed, index, s.active_budget) }),
    );
    v
}

fn instance_checks(p: &Persisted) -> scmi_core::Result<Vec<BoundReport>> {
    let reports = match p {
        Persisted::Supersample { instance, .. } => {
            instance.world.validate()?;
            instance.learner.validate(instance.world.space.len())?;
            let j: DiscreteJoint<f64> =
                enumerate_joint(&instance.world, &instance.learner, instance.n, &EnumOptions::default())?;
            world_bounds(&j, instance.learner.states)?
        }
        Persisted::Batch { problem, .. } => {
            problem.validate()?;
            batch_ecmi_bound(&enumerate_batch::<f64>(problem, DEFAULT_CAP)?)?
        }
        Persisted::Active { problem, .. } => return active_checks(&p.label(), problem, 1.0, 0.125),
    };
    Ok(prefixed(reports, &p.label()))
}

fn replay_checks(p: &Persisted) -> scmi_core::Result<Vec<BoundReport>> {
    instance_checks(p)
}

fn sweep(cfg: &ExperimentConfig) -> scmi_core::Result<Output> {
    let instances = sweep_instances(cfg);
    let mut reports = par_flat(&instances, instance_checks)?;
    let mut artifacts: Vec<Artifact> =
        instances.iter().map(|p| Artifact { path: p.file_name(), contents: p.to_toml() }).collect();

    let idx: Vec<u64> = (0..cfg.sweep.selector_joints as u64).collect();
    let joints: Vec<(DiscreteJoint<f64>, BoundReport)> = idx
        .par_iter()
        .map(|&i| {
            let j = random_selector_joint(cfg.seed, i);
            let mut r = selector_square_check(&j, "X", "U", &["G"], 1.0);
            r.name = format!("selector-{i:05}/{}", r.name);
            (j, r)
        })
        .collect();
    let mut csv = String::from("joint,x,u,g,p\n");
    for (i, (j, r)) in joints.into_iter().enumerate() {
        let (x, u, g) = (j.numeric("X")?, j.ints("U")?, j.ints("G")?);
        for (a, p) in j.probs().iter().enumerate() {
            let _ = writeln!(csv, "{i},{:?},{},{},{p:?}", x[a], u[a], g[a]);
        }
        reports.push(r);
    }
    artifacts.push(Artifact { path: "worlds/selector_joints.csv".into(), contents: csv });
    let notes = vec![format!(
        "generated {} worlds, {} batch problems, {} active problems, {} selector joints",
        cfg.sweep.worlds, cfg.sweep.batch, cfg.sweep.active, cfg.sweep.selector_joints
    )];
    Ok(Output { reports, artifacts, notes })
}

// ---------------------------------------------------------------------------
// Bandit

fn bandit_schedule(cfg: &ExperimentConfig, env: &BanditEnv) -> Schedule {
    cfg.bandit.schedule.clone().unwrap_or_else(|| Schedule::tuned(env))
}

/// Exact checks at terminal round t; an instance over the cap is reported as inconclusive
/// and the Monte Carlo one-step check falls back to the log K cap.
fn exact_bandit(cfg: &ExperimentConfig, env: &BanditEnv, sched: &Schedule, t: usize) -> scmi_core::Result<Vec<BoundReport>> {
    let prefix = format!("exact[t={t}]");
    match exact_reports(env, sched, &cfg.bandit.behavior, t, cfg.bandit.exact_cap) {
        Ok(r) => Ok(prefixed(r, &prefix)),
        Err(Error::EnumerationTooLarge { atoms, cap, .. }) => Ok(vec![BoundReport::inconclusive(
            format!("{prefix}/bandit.one_step.scmi"),
            format!("enumeration needs more than {cap} atoms ({atoms} reached); only the log K form was checked"),
        )]),
        Err(e) => Err(e),
    }
}

fn curve_csv(out: &mut String, label: &str, curve: &RegretCurve) {
    for r in &curve.rows {
        let _ = writeln!(
            out,
            "{label},{},{:?},{:?},{:?},{:?}",
            r.t, r.step_mean, r.step_stderr, r.cum_mean, r.cum_stderr
        );
    }
}

fn bandit(cfg: &ExperimentConfig) -> scmi_core::Result<Output> {
    let b = &cfg.bandit;
    let env = BanditEnv::bernoulli(&b.means)?;
    let sched = bandit_schedule(cfg, &env);
    let k = env.k();
    let horizon = cfg.horizon.unwrap_or(10_000);
    let seeds = cfg.seeds.unwrap_or(1000);
    let ex = Mode::exact();

    let ens = Ensemble::simulate(&env, &sched, &b.behavior, horizon, seeds, cfg.seed)?;
    let curve = regret_curve(&ens, b.log_points);
    let logged: Vec<usize> = curve.rows.iter().map(|r| r.t).collect();
    let mut reports = one_step_reports(&env, &sched, &ens, &logged);
    let decrease = curve.rows.windows(2).map(|w| w[0].cum_mean - w[1].cum_mean).fold(0.0, f64::max);
    reports.push(BoundReport::inequality("bandit.cumulative_monotone", decrease, vec![("zero".into(), 0.0)], ex));
    reports.push(BoundReport::inequality("bandit.regret_slope.lower", b.slope_range[0], vec![("slope".into(), curve.slope)], ex));
    reports.push(BoundReport::inequality("bandit.regret_slope.upper", curve.slope, vec![("ceiling".into(), b.slope_range[1])], ex));

    let mut table = String::from("schedule,t,step_mean,step_stderr,cum_mean,cum_stderr\n");
    curve_csv(&mut table, "tuned", &curve);
    let mut slopes = format!("schedule,slope\ntuned,{:?}\n", curve.slope);
    let mut notes = vec![format!("tuned schedule: slope {:.4} over [T/10, T], T = {horizon}, {seeds} seeds", curve.slope)];
    if b.ablation {
        let round = b.ablation_round.unwrap_or((horizon / 10).max(1));
        let frozen = sched.frozen_at(k, round);
        let ens2 = Ensemble::simulate(&env, &frozen, &b.behavior, horizon, seeds, cfg.seed)?;
        let curve2 = regret_curve(&ens2, b.log_points);
        reports.push(BoundReport::inequality(
            "bandit.ablation_slope",
            b.ablation_min_slope,
            vec![("slope".into(), curve2.slope)],
            ex,
        ));
        curve_csv(&mut table, "frozen", &curve2);
        let _ = writeln!(slopes, "frozen,{:?}", curve2.slope);
        notes.push(format!("frozen schedule (eps held at round {round}): slope {:.4}", curve2.slope));
    }

    let ih = b.importance_horizon.min(horizon);
    if b.importance_runs > 0 && ih > 0 {
        let reps: Vec<u64> = (0..b.importance_runs as u64).collect();
        let runs: Vec<scmi_core::Result<BanditRun>> =
            reps.par_iter().map(|&r| run_bandit(&env, &sched, &b.behavior, ih, cfg.seed, r)).collect();
        let runs = runs.into_iter().collect::<scmi_core::Result<Vec<_>>>()?;
        reports.extend(importance_weight_checks(&env, &sched, &runs));
    }
    let rounds: Vec<usize> = (1..=b.exact_horizon).collect();
    reports.extend(par_flat(&rounds, |&t| exact_bandit(cfg, &env, &sched, t))?);

    Ok(Output {
        reports,
        artifacts: vec![
            Artifact { path: "regret.csv".into(), contents: table },
            Artifact { path: "slopes.csv".into(), contents: slopes },
        ],
        notes,
    })
}

/// The exact joint behind the exact bandit reports, for callers that want to inspect it.
pub fn bandit_exact_joint(cfg: &ExperimentConfig, t: usize) -> scmi_core::Result<DiscreteJoint<f64>> {
    let env = BanditEnv::bernoulli(&cfg.bandit.means)?;
    enumerate_bandit(&env, &bandit_schedule(cfg, &env), &cfg.bandit.behavior, t, cfg.bandit.exact_cap)
}
