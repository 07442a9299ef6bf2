//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits nonzero if any
//! criterion fails.
//!
//! ```text
//!   cargo test -p scmi-cli --test acceptance
//! ```

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::Rng;
use scmi_cli::output::reports_csv;
use scmi_cli::{run, ExperimentConfig, Kind, SuiteResult};
use scmi_core::bandit::{exact_reports, BanditEnv, Behavior, Schedule};
use scmi_core::bounds::{feasibility_residual, psi, BernsteinParams, BoundReport, Mode, Relation, Verdict};
use scmi_core::info::kl_divergence;
use scmi_core::online::{littlestone_dimension, vc_dimension, BinaryClass, LdimOptions};
use scmi_core::rng::{stream, Purpose};

const TOL: f64 = 1e-10;
const CONST_TOL: f64 = 1e-9;

type Outcome = Result<String, String>;

fn suite(kind: Kind, edit: impl FnOnce(&mut ExperimentConfig)) -> SuiteResult {
    let mut cfg = ExperimentConfig::bundled(kind);
    edit(&mut cfg);
    run(&cfg).unwrap_or_else(|e| panic!("{} suite failed to run: {e}", kind.verb()))
}

/// Reports that should be judged: everything except those whose premise does not hold.
fn judged(reports: &[BoundReport]) -> impl Iterator<Item = &BoundReport> {
    reports.iter().filter(|r| !r.is_premise_unmet())
}

fn first_failure<'a>(rs: impl IntoIterator<Item = &'a BoundReport>) -> Option<&'a BoundReport> {
    rs.into_iter().find(|r| r.verdict != Verdict::Holds)
}

fn describe(r: &BoundReport) -> String {
    format!("{} is {} (lhs {:e}, rhs {:e}, margin {:e}) {}", r.name, r.verdict.as_str(), r.lhs, r.rhs(), r.margin, r.note)
}

fn min_margin<'a>(rs: impl IntoIterator<Item = &'a BoundReport>) -> f64 {
    rs.into_iter().filter(|r| r.relation == Relation::AtMost).map(|r| r.margin).fold(f64::INFINITY, f64::min)
}

fn max_abs_margin<'a>(rs: impl IntoIterator<Item = &'a BoundReport>) -> f64 {
    rs.into_iter().filter(|r| r.relation == Relation::Equal).map(|r| r.margin.abs()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------

fn identities(sweep: &SuiteResult, ids: &SuiteResult) -> Outcome {
    let checks: Vec<&BoundReport> =
        judged(&sweep.reports).filter(|r| r.name.starts_with("world-") && r.name.contains("/identity.")).collect();
    let worlds: BTreeSet<&str> = checks.iter().filter_map(|r| r.name.split('/').next()).collect();
    let bundled: Vec<&BoundReport> = judged(&ids.reports).collect();
    if worlds.len() < 200 {
        return Err(format!("only {} worlds carry identity checks", worlds.len()));
    }
    if let Some(r) = first_failure(checks.iter().copied().chain(bundled.iter().copied())) {
        return Err(describe(r));
    }
    let all = checks.iter().copied().chain(bundled.iter().copied());
    Ok(format!(
        "{} worlds, {} generated + {} bundled checks, max |difference| {:.1e} (tol {TOL:e})",
        worlds.len(),
        checks.len(),
        bundled.len(),
        max_abs_margin(all)
    ))
}

fn bound_suite(sweep: &SuiteResult, online: &SuiteResult, active: &SuiteResult, elapsed: Duration) -> Outcome {
    let families = [
        "slow_rate", "two_coordinate", "shifted", "stopping", "bernstein", "batch", "active.slow", "active.main",
        "online/slow_rate", "online/shifted", "pattern",
    ];
    let all: Vec<&BoundReport> =
        judged(&sweep.reports).chain(judged(&online.reports)).chain(judged(&active.reports)).filter(|r| !r.name.contains("selector-")).collect();
    for f in families {
        if !all.iter().any(|r| r.name.contains(f)) {
            return Err(format!("no judged report from the {f} family"));
        }
    }
    if let Some(r) = first_failure(all.iter().copied()) {
        return Err(describe(r));
    }
    if elapsed > Duration::from_secs(600) {
        return Err(format!("took {elapsed:?}, over 10 minutes"));
    }
    Ok(format!(
        "{} judged reports across {} families, min margin {:.3e}, {:.1}s",
        all.len(),
        families.len(),
        min_margin(all.iter().copied()),
        elapsed.as_secs_f64()
    ))
}

fn constants() -> Outcome {
    let e = std::f64::consts::E;
    let mut lines = Vec::new();
    let mut check = |what: &str, got: f64, want: f64, extra: bool| {
        let ok = (got - want).abs() <= CONST_TOL && extra;
        lines.push((ok, format!("{what} = {got:.6}")));
    };
    let kl = kl_divergence(&[1.0 / 3.0, 2.0 / 3.0], &[0.5, 0.5]).unwrap().nats;
    let kl_ref = (2.0 / 3.0) * (4.0f64 / 3.0).ln() + (1.0 / 3.0) * (2.0f64 / 3.0).ln();
    check("KL(Bern(2/3)||Bern(1/2))", kl, kl_ref, kl > 0.05 && (kl - 0.056633).abs() < 1e-6);
    let p = psi(1.0, 1.0);
    check("psi_1(1)", p, e - 2.0, p <= 0.75);
    let f = feasibility_residual(1.0, 0.125) + 2.0;
    check("e^(1/4)+e^(-1/2)", f, 0.25f64.exp() + (-0.5f64).exp(), f <= 2.0 && (f - 1.890556).abs() < 1e-6);
    let bp = BernsteinParams::from_contraction(1.0, 1.0, 0.5).unwrap();
    check("lambda(C=1/2,B=1,b=1)", bp.lambda, 3.0 / 7.0, true);
    let c = bp.c.unwrap();
    let coef = 2.0 * (bp.big_b + c * bp.b / 3.0) / (c * (1.0 - c));
    check("unit-interval coefficient", coef, 8.0 * (1.0 + 1.0 / 6.0), (coef - 28.0 / 3.0).abs() <= CONST_TOL);
    let text: Vec<String> = lines.iter().map(|(_, s)| s.clone()).collect();
    if lines.iter().all(|(ok, _)| *ok) {
        Ok(text.join(", "))
    } else {
        Err(lines.iter().filter(|(ok, _)| !ok).map(|(_, s)| s.clone()).collect::<Vec<_>>().join(", "))
    }
}

fn selector_sweep(sweep: &SuiteResult) -> Outcome {
    let rs: Vec<&BoundReport> = sweep.reports.iter().filter(|r| r.name.starts_with("selector-")).collect();
    if rs.len() < 10_000 {
        return Err(format!("only {} selector joints", rs.len()));
    }
    if let Some(r) = first_failure(rs.iter().copied()) {
        return Err(describe(r));
    }
    let slack = rs.iter().map(|r| r.lhs / r.rhs()).filter(|x| x.is_finite()).fold(0.0, f64::max);
    Ok(format!("{} joints, all premises met and all hold, largest lhs/rhs {slack:.3}", rs.len()))
}

fn exact_bandit() -> Outcome {
    let env = BanditEnv::bernoulli(&[0.9, 0.5]).unwrap();
    let sched = Schedule::tuned(&env);
    let mut n = 0;
    let mut worst = f64::INFINITY;
    for t in 1..=3 {
        let rs = exact_reports(&env, &sched, &Behavior::Smoothed, t, 1 << 21).map_err(|e| e.to_string())?;
        if let Some(r) = first_failure(&rs) {
            return Err(format!("t={t}: {}", describe(r)));
        }
        n += rs.len();
        worst = worst.min(min_margin(&rs));
    }
    Ok(format!("K=2, t = 1..3, {n} exact reports hold, min inequality margin {worst:.3e}"))
}

fn monte_carlo_bandit(b: &SuiteResult, horizon: usize, seeds: usize) -> Outcome {
    let one_step: Vec<&BoundReport> = b.reports.iter().filter(|r| r.name.starts_with("bandit.one_step[")).collect();
    if one_step.len() < 20 || !one_step.iter().all(|r| matches!(r.mode, Mode::MonteCarlo { .. })) {
        return Err(format!("{} Monte Carlo one-step reports", one_step.len()));
    }
    if let Some(r) = first_failure(one_step.iter().copied()) {
        return Err(describe(r));
    }
    let slope = b.reports.iter().find(|r| r.name == "bandit.regret_slope.upper").map(|r| r.lhs).ok_or("no slope")?;
    let ablation = b.reports.iter().find(|r| r.name == "bandit.ablation_slope").and_then(|r| r.term("slope")).ok_or("no ablation")?;
    if !(0.35..=0.65).contains(&slope) {
        return Err(format!("regret slope {slope:.4} outside [0.35, 0.65]"));
    }
    if ablation < 0.85 {
        return Err(format!("ablation slope {ablation:.4} < 0.85"));
    }
    if let Some(r) = first_failure(&b.reports) {
        return Err(describe(r));
    }
    Ok(format!(
        "T={horizon}, {seeds} seeds: one-step bound holds at all {} logged rounds (4 sigma), slope {slope:.4}, frozen-exploration slope {ablation:.4}",
        one_step.len()
    ))
}

fn active_learning(ids: &SuiteResult, active: &SuiteResult) -> Outcome {
    let pop: Vec<&BoundReport> = ids.reports.iter().filter(|r| r.name.ends_with("/active.population")).collect();
    let fast: Vec<&BoundReport> = active.reports.iter().filter(|r| r.name.contains("/active.main.") || r.name.contains("/active.explicit.") || r.name.contains("/active.zero_train")).collect();
    let qa: Vec<&BoundReport> = active.reports.iter().filter(|r| r.name.contains("/active.query_aware[")).collect();
    if pop.len() < 3 || fast.is_empty() || qa.is_empty() {
        return Err(format!("{} population, {} fast, {} query-aware reports", pop.len(), fast.len(), qa.len()));
    }
    for r in pop.iter().chain(&qa) {
        if r.is_premise_unmet() || r.margin.abs() > TOL {
            return Err(describe(r));
        }
    }
    if let Some(r) = first_failure(fast.iter().copied()) {
        return Err(describe(r));
    }
    Ok(format!(
        "population identity on {} problems (max |diff| {:.1e}), fast-rate min margin {:.3e}, query-aware max |diff| {:.1e}",
        pop.len(),
        max_abs_margin(pop.iter().copied()),
        min_margin(fast.iter().copied()),
        max_abs_margin(qa.iter().copied())
    ))
}

/// Littlestone dimension by the defining recursion, with no memo: -1 for the empty class,
/// otherwise the best point whose both restrictions are nonempty.
fn ldim_oracle(fns: &[Vec<bool>], m: usize) -> i64 {
    if fns.is_empty() {
        return -1;
    }
    let mut best = 0;
    for x in 0..m {
        let (a, b): (Vec<Vec<bool>>, Vec<Vec<bool>>) = fns.iter().cloned().partition(|f| f[x]);
        if !a.is_empty() && !b.is_empty() {
            best = best.max(1 + ldim_oracle(&a, m).min(ldim_oracle(&b, m)));
        }
    }
    best
}

fn littlestone(online: &SuiteResult) -> Outcome {
    let opts = LdimOptions::default();
    let ld = |c: &BinaryClass| littlestone_dimension(c, opts).unwrap() as i64;
    let oracle = |c: &BinaryClass| ldim_oracle(c.functions(), c.domain().len());
    let single = BinaryClass::new(vec!["a".into(), "b".into(), "c".into()], vec![vec![true, false, true]]).unwrap();
    let mut refs = vec![("singleton", ld(&single), oracle(&single), 0)];
    for m in 1..=4 {
        let c = BinaryClass::full(m);
        refs.push(("full", ld(&c), oracle(&c), m as i64));
    }
    let th = BinaryClass::thresholds(3);
    refs.push(("thresholds(3)", ld(&th), oracle(&th), 2));
    for (what, got, orc, want) in &refs {
        if got != orc || got != want {
            return Err(format!("{what}: ldim {got}, oracle {orc}, expected {want}"));
        }
    }
    let mut rng = stream(0x1177, Purpose::Sweep, &[]);
    for i in 0..50 {
        let m = rng.random_range(2..=5usize);
        let mut fns: Vec<Vec<bool>> = (0..rng.random_range(1..=10)).map(|_| (0..m).map(|_| rng.random_bool(0.5)).collect()).collect();
        fns.sort();
        fns.dedup();
        let c = BinaryClass::new((0..m).map(|x| format!("x{x}")).collect(), fns).unwrap();
        let (d, o, vc) = (ld(&c), oracle(&c), vc_dimension(&c) as i64);
        if d != o || d < vc {
            return Err(format!("random class {i}: ldim {d}, oracle {o}, vc {vc}"));
        }
    }
    let pattern: Vec<&BoundReport> = online.reports.iter().filter(|r| r.name.contains("/pattern.")).collect();
    if pattern.is_empty() {
        return Err("no pattern reports".into());
    }
    if let Some(r) = first_failure(pattern.iter().copied()) {
        return Err(describe(r));
    }
    Ok(format!(
        "reference values match the recursive oracle, Ldim >= VC on 50 random classes, pattern bound min margin {:.3e}",
        min_margin(pattern.iter().copied())
    ))
}

fn byte_identical(sweep: &SuiteResult) -> Outcome {
    let again = suite(Kind::Sweep, |c| c.parallel = 1);
    let same = |a: &SuiteResult, b: &SuiteResult| reports_csv(a).unwrap() == reports_csv(b).unwrap() && a.artifacts == b.artifacts;
    if !same(sweep, &again) {
        return Err("sweep outputs differ between runs".into());
    }
    let small = |p: usize| {
        suite(Kind::Bandit, |c| {
            c.horizon = Some(2000);
            c.seeds = Some(100);
            c.parallel = p;
        })
    };
    let (a, b) = (small(1), small(2));
    if !same(&a, &b) {
        return Err("bandit outputs differ between runs".into());
    }
    Ok(format!("sweep ({} files) and bandit ({} files) identical across runs and worker counts", again.artifacts.len() + 1, a.artifacts.len() + 1))
}

fn main() {
    let t0 = Instant::now();
    let sweep = suite(Kind::Sweep, |_| {});
    let online = suite(Kind::Online, |_| {});
    let active = suite(Kind::Active, |_| {});
    let bound_time = t0.elapsed();
    let ids = suite(Kind::Identities, |_| {});
    let (horizon, seeds) = (100_000, 1000);
    let bandit = suite(Kind::Bandit, |c| {
        c.horizon = Some(horizon);
        c.seeds = Some(seeds);
    });

    let results: Vec<(&str, Outcome)> = vec![
        ("identities", identities(&sweep, &ids)),
        ("bound suite", bound_suite(&sweep, &online, &active, bound_time)),
        ("constants", constants()),
        ("selector square sweep", selector_sweep(&sweep)),
        ("exact bandit", exact_bandit()),
        ("Monte Carlo bandit", monte_carlo_bandit(&bandit, horizon, seeds)),
        ("active learning", active_learning(&ids, &active)),
        ("Littlestone", littlestone(&online)),
        ("byte-identical CSVs", byte_identical(&sweep)),
    ];
    let mut failed = 0;
    for (i, (name, r)) in results.iter().enumerate() {
        match r {
            Ok(s) => println!("criterion {} PASS  {name}: {s}", i + 1),
            Err(s) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {s}", i + 1)
            }
        }
    }
    println!("acceptance: {} of {} criteria pass ({:.1}s)", results.len() - failed, results.len(), t0.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
