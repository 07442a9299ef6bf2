use num_rational::BigRational;
use proptest::prelude::*;

use scmi_core::active::*;
use scmi_core::bounds::{BoundReport, Verdict};
use scmi_core::info::conditional_mutual_information;
use scmi_core::{DiscreteJoint, Rational, Scalar};

fn r(a: i64, b: i64) -> Rational {
    Rational::new(a, b)
}

const CAP: usize = 2_000_000;

/// Two features, binary labels, label agrees with the feature 3/4 of the time.
fn noisy_world() -> ActiveWorld {
    ActiveWorld { law: vec![vec![r(3, 8), r(1, 8)], vec![r(1, 8), r(3, 8)]] }
}

/// Label equals the feature.
fn clean_world() -> ActiveWorld {
    ActiveWorld { law: vec![vec![r(1, 2), r(0, 1)], vec![r(0, 1), r(1, 2)]] }
}

/// All four maps {0,1} -> {0,1} under 0-1 loss; state h encodes h(x) = (h >> x) & 1.
fn lookup_tables(update: ActiveUpdate) -> ActiveLearner {
    let loss = (0..4)
        .map(|h: usize| {
            (0..4)
                .map(|atom| {
                    let (x, y) = (atom / 2, atom % 2);
                    r(((h >> x) & 1 != y) as i64, 1)
                })
                .collect()
        })
        .collect();
    ActiveLearner { states: 4, initial: 0, update, loss }
}

fn constant_rule(p: Rational) -> QuerySpec {
    QuerySpec { p_min: p, rule: QueryRule::Constant { p }, grid: 8 }
}

/// Query fully where the current table disagrees with the identity map, sparsely elsewhere.
fn uncertainty_rule() -> QuerySpec {
    let p = (0..4)
        .map(|h: usize| (0..2).map(|x| if (h >> x) & 1 == x { r(1, 4) } else { r(1, 1) }).collect())
        .collect();
    QuerySpec { p_min: r(1, 4), rule: QueryRule::ByStateFeature { p }, grid: 8 }
}

fn problem(world: ActiveWorld, query: QuerySpec, learner: ActiveLearner, n: usize) -> ActiveProblem {
    ActiveProblem { world, query, learner, n }
}

/// The three reference problems: passive, p = p_min = 1/2, state-dependent queries.
fn reference_problems() -> Vec<(&'static str, ActiveProblem)> {
    vec![
        ("passive", problem(noisy_world(), constant_rule(r(1, 1)), lookup_tables(ActiveUpdate::WeightedErm), 2)),
        ("half", problem(noisy_world(), constant_rule(r(1, 2)), lookup_tables(ActiveUpdate::WeightedErm), 2)),
        ("state_dependent", problem(noisy_world(), uncertainty_rule(), lookup_tables(ActiveUpdate::WeightedErm), 2)),
    ]
}

fn assert_holds(reports: &[BoundReport], ctx: &str) {
    for rep in reports {
        assert!(rep.margin >= -1e-10, "{ctx}: {} margin {} ({rep:?})", rep.name, rep.margin);
        assert_eq!(rep.verdict, Verdict::Holds, "{ctx}: {}", rep.name);
    }
}

fn report<'a>(reports: &'a [BoundReport], name: &str) -> &'a BoundReport {
    reports.iter().find(|r| r.name == name).unwrap_or_else(|| panic!("no report {name}"))
}

// ---------------------------------------------------------------------------
// Construction

#[test]
fn coin_cells_cover_the_unit_interval() {
    let cells = uncertainty_rule().coin_cells();
    assert_eq!(cells, vec![(r(1, 4), r(1, 4)), (r(1, 1), r(3, 4))]);
    assert_eq!(constant_rule(r(1, 1)).coin_cells(), vec![(r(1, 1), r(1, 1))]);
}

#[test]
fn rejects_probabilities_off_grid_or_below_floor() {
    let learner = lookup_tables(ActiveUpdate::WeightedErm);
    let off_grid = QuerySpec { p_min: r(1, 3), rule: QueryRule::Constant { p: r(1, 3) }, grid: 8 };
    assert!(problem(noisy_world(), off_grid, learner.clone(), 1).validate().is_err());
    let below = QuerySpec { p_min: r(1, 2), rule: QueryRule::ByFeature { p: vec![r(1, 4), r(1, 1)] }, grid: 8 };
    assert!(problem(noisy_world(), below, learner, 1).validate().is_err());
}

#[test]
fn passive_rule_labels_every_round() {
    let (_, prob) = &reference_problems()[0];
    for rep in 0..50 {
        let tr = sample_iwal(prob, 3, rep).unwrap();
        assert_eq!(tr.sample.len(), prob.n);
        assert!(tr.sample.iter().all(|e| e.weight == r(1, 1)));
    }
    let j: DiscreteJoint<BigRational> = enumerate_active(prob, CAP).unwrap();
    let (train, _) = iw_risks(&j).unwrap();
    // With unit weights the importance-weighted train risk is the plain empirical risk of W_n.
    let plain = (1..=prob.n).fold(BigRational::from_rational(r(0, 1)), |acc, t| {
        let u = j.ints(&names::u(t)).unwrap();
        let w = j.ints(&names::w(prob.n)).unwrap();
        let x0 = j.ints(&names::x(0, t)).unwrap();
        let y0 = j.ints(&names::y(0, t)).unwrap();
        let x1 = j.ints(&names::x(1, t)).unwrap();
        let y1 = j.ints(&names::y(1, t)).unwrap();
        acc + j.expect_with(|i| {
            let (x, y) = if u[i] == 0 { (x0[i], y0[i]) } else { (x1[i], y1[i]) };
            BigRational::from_rational(prob.learner.loss[w[i] as usize][(2 * x + y) as usize])
        })
    }) / BigRational::from_usize(prob.n);
    assert_eq!(train, plain);
}

#[test]
fn half_rule_labels_half_the_rounds_on_average() {
    let prob = problem(noisy_world(), constant_rule(r(1, 2)), lookup_tables(ActiveUpdate::WeightedErm), 6);
    let reps = 4000;
    let sizes: Vec<f64> = (0..reps).map(|k| sample_iwal(&prob, 11, k).unwrap().sample.len() as f64).collect();
    let mean = sizes.iter().sum::<f64>() / reps as f64;
    let sigma = (prob.n as f64 / 4.0 / reps as f64).sqrt();
    assert!((mean - 3.0).abs() <= 4.0 * sigma, "mean {mean} sigma {sigma}");
}

#[test]
fn state_dependent_enumeration_closes() {
    let prob = problem(noisy_world(), uncertainty_rule(), lookup_tables(ActiveUpdate::WeightedErm), 2);
    let j: DiscreteJoint<BigRational> = enumerate_active(&prob, CAP).unwrap();
    assert_eq!(j.total_mass(), BigRational::from_usize(1));
    let jg: DiscreteJoint<BigRational> =
        enumerate_active(&problem(noisy_world(), uncertainty_rule(), lookup_tables(gibbs(4)), 2), CAP).unwrap();
    assert!((jg.total_mass().to_f64() - 1.0).abs() < 1e-12);
}

#[test]
fn enumeration_respects_the_cap() {
    let (_, prob) = &reference_problems()[2];
    assert!(enumerate_active::<f64>(prob, 100).is_err());
}

fn gibbs(states: usize) -> ActiveUpdate {
    ActiveUpdate::WeightedGibbs { eta: 1.0, prior: vec![1.0 / states as f64; states] }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Masked labels never enter the sample, and weights never exceed 1/p_min.
    #[test]
    fn masked_labels_stay_out_of_the_sample(seed in 0u64..1000, which in 0usize..3) {
        let (_, prob) = &reference_problems()[which];
        let prob = ActiveProblem { n: 8, ..prob.clone() };
        let tr = sample_iwal(&prob, seed, 0).unwrap();
        let queried: Vec<_> = tr.rounds.iter().filter(|r| r.queried).collect();
        prop_assert_eq!(queried.len(), tr.sample.len());
        for (round, entry) in queried.iter().zip(&tr.sample) {
            prop_assert_eq!(round.ybar, Some(entry.y));
            prop_assert_eq!(entry.weight, Rational::one() / round.p);
            prop_assert!(entry.weight <= Rational::one() / prob.query.p_min);
        }
        for round in tr.rounds.iter().filter(|r| !r.queried) {
            prop_assert_eq!(round.ybar, None);
            prop_assert!(round.v > round.p);
        }
    }
}

// ---------------------------------------------------------------------------
// Risks and the population identity

#[test]
fn zero_loss_gives_zero_risks() {
    let mut learner = lookup_tables(ActiveUpdate::WeightedErm);
    learner.loss = vec![vec![r(0, 1); 4]; 4];
    let j: DiscreteJoint<BigRational> =
        enumerate_active(&problem(noisy_world(), uncertainty_rule(), learner, 2), CAP).unwrap();
    let zero = BigRational::from_usize(0);
    assert_eq!(iw_risks(&j).unwrap(), (zero.clone(), zero));
}

#[test]
fn population_identity_is_exact_on_reference_problems() {
    for (name, prob) in reference_problems() {
        let j: DiscreteJoint<BigRational> = enumerate_active(&prob, CAP).unwrap();
        let (_, holdout) = iw_risks(&j).unwrap();
        // Oracle: E[R(W_n)] from the law of W_n and the learner's risk table.
        let w = j.ints(&names::w(prob.n)).unwrap();
        let risk = j.expect_with(|i| BigRational::from_rational(prob.learner.population_risk(&prob.world, w[i] as usize)));
        assert_eq!(holdout, risk, "{name}");
        assert_eq!(expected_risk(&j, prob.n).unwrap(), risk, "{name}");

        let jf = j.to_f64();
        let mut reports = vec![population_identity_check(&jf), row_swap_check(&jf).unwrap()];
        for m in 1..=prob.n {
            reports.push(nonterminal_identity_check(&jf, m).unwrap());
        }
        assert_holds(&reports, name);
        let terminal = report(&reports, &format!("active.population[m={}]", prob.n));
        assert!((terminal.lhs - holdout.to_f64()).abs() < 1e-12, "{name}");
    }
}

#[test]
fn identity_holds_for_gibbs_under_floats() {
    let prob = problem(noisy_world(), uncertainty_rule(), lookup_tables(gibbs(4)), 2);
    let j: DiscreteJoint<f64> = enumerate_active(&prob, CAP).unwrap();
    assert_holds(&[population_identity_check(&j), row_swap_check(&j).unwrap()], "gibbs");
}

/// Per-trajectory IW holdout minus R(W_n) has mean zero; checked at 4 standard errors.
#[test]
fn population_identity_under_monte_carlo() {
    let prob = problem(noisy_world(), uncertainty_rule(), lookup_tables(gibbs(4)), 6);
    let reps = 3000;
    let diffs: Vec<f64> = (0..reps)
        .map(|k| {
            let tr = sample_iwal(&prob, 5, k).unwrap();
            let wn = tr.terminal();
            let mut prev = prob.learner.initial;
            let mut ho = 0.0;
            for round in &tr.rounds {
                let (x, y, v) = round.ghost;
                let p = prob.query.rule.prob(prev, x);
                if v <= p {
                    ho += prob.learner.loss[wn][prob.world.atom(x, y)].to_f64() / p.to_f64();
                }
                prev = round.w;
            }
            ho / prob.n as f64 - prob.learner.population_risk(&prob.world, wn).to_f64()
        })
        .collect();
    let mean = diffs.iter().sum::<f64>() / reps as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
    let stderr = (var / reps as f64).sqrt();
    assert!(mean.abs() <= 4.0 * stderr, "mean {mean} stderr {stderr}");
}

#[test]
fn schema_errors_and_premises() {
    let j = DiscreteJoint::<f64>::from_rows(&["A"], vec![(vec![scmi_core::Value::Int(0)], 1.0)]).unwrap();
    assert!(iw_risks(&j).is_err());
    assert!(population_identity_check(&j).is_premise_unmet());
    assert!(active_slow_bound(&j)[0].is_premise_unmet());
}

// ---------------------------------------------------------------------------
// Bounds

#[test]
fn constant_learner_has_zero_sides() {
    let mut learner = lookup_tables(ActiveUpdate::WeightedGibbs { eta: 0.0, prior: vec![0.0, 0.0, 1.0, 0.0] });
    learner.initial = 2;
    let prob = problem(noisy_world(), uncertainty_rule(), learner, 2);
    let j: DiscreteJoint<f64> = enumerate_active(&prob, CAP).unwrap();
    let slow = active_slow_bound(&j);
    assert!(report(&slow, "active.slow.loss").rhs().abs() < 1e-12);
    let fast = active_fast_bound(&j, 1.0, 0.125).unwrap();
    let main = report(&fast, "active.main.loss");
    assert!(main.term("info").unwrap().abs() < 1e-12);
    assert_holds(&slow, "constant");
    assert_holds(&fast, "constant");
}

#[test]
fn memorizing_learner_single_round() {
    let prob = problem(noisy_world(), constant_rule(r(1, 2)), lookup_tables(ActiveUpdate::WeightedErm), 1);
    let j: DiscreteJoint<f64> = enumerate_active(&prob, CAP).unwrap();
    let slow = active_slow_bound(&j);
    assert_holds(&slow, "memorize");
    assert!(report(&slow, "active.slow.loss").lhs > 1e-3);
}

#[test]
fn realizable_world_meets_zero_train_form() {
    let prob = problem(clean_world(), constant_rule(r(1, 2)), lookup_tables(ActiveUpdate::WeightedErm), 2);
    let j: DiscreteJoint<f64> = enumerate_active(&prob, CAP).unwrap();
    let (train, _) = iw_risks(&j).unwrap();
    assert!(train.abs() < 1e-15);
    let fast = active_fast_bound(&j, 1.0, 0.125).unwrap();
    let zt = report(&fast, "active.zero_train");
    assert!(zt.lhs > 0.0);
    assert_holds(&fast, "realizable");
}

#[test]
fn infeasible_pair_is_rejected() {
    let (_, prob) = &reference_problems()[1];
    let j: DiscreteJoint<f64> = enumerate_active(prob, CAP).unwrap();
    assert!(active_fast_bound(&j, 1.0, 1.0).is_err());
}

#[test]
fn always_query_decomposition_is_plain_cmi() {
    let (_, prob) = &reference_problems()[0];
    let j: DiscreteJoint<f64> = enumerate_active(prob, CAP).unwrap();
    for t in 1..=prob.n {
        let qa = query_aware_cmi(&j, t).unwrap();
        let ctx = names::context(t);
        let ctx: Vec<&str> = ctx.iter().map(String::as_str).collect();
        // With p = 1 the weighted loss is the raw loss of W_n.
        let plain = conditional_mutual_information(&j, &[&names::lplus(t)], &[&names::u(t)], &ctx).unwrap().clamped();
        assert!((qa.decomposed - plain).abs() < 1e-12);
        assert!((qa.lhs - qa.decomposed).abs() < 1e-10);
    }
}

#[test]
fn mixed_coin_decomposition_is_exact() {
    let (_, prob) = &reference_problems()[2];
    let j: DiscreteJoint<f64> = enumerate_active(prob, CAP).unwrap();
    let reports = query_aware_reports(&j);
    assert_eq!(reports.len(), 2 * prob.n);
    assert_holds(&reports, "mixed");
    assert!(reports.iter().any(|r| r.lhs > 1e-6));
}

#[test]
fn random_problem_sweep() {
    let mut informative = 0;
    for k in 0..100 {
        let prob = random_problem(17, k, 40_000);
        let j: DiscreteJoint<f64> = enumerate_active(&prob, CAP).unwrap();
        let ctx = format!("problem {k}");
        let p_min = prob.query.p_min.to_f64();
        for t in 1..=prob.n {
            for v in j.numeric(&names::lplus(t)).unwrap() {
                assert!((0.0..=1.0 + 1e-12).contains(&(p_min * v)), "{ctx}: weighted loss {v}");
            }
        }
        let mut reports = active_slow_bound(&j);
        reports.extend(active_fast_bound(&j, 1.0, 0.125).unwrap());
        reports.extend(query_aware_reports(&j));
        reports.push(population_identity_check(&j));
        reports.push(row_swap_check(&j).unwrap());
        assert_holds(&reports, &ctx);
        if report(&reports, "active.slow.loss").rhs() > 1e-6 {
            informative += 1;
        }
    }
    assert!(informative >= 30, "only {informative} problems carry information");
}
