use std::collections::HashMap;

use proptest::prelude::*;

use scmi_core::info::*;
use scmi_core::supersample::*;
use scmi_core::{DiscreteJoint, Rational, Value};

fn table(names: &[&str], rows: &[(&[i64], f64)]) -> DiscreteJoint<f64> {
    let rows = rows.iter().map(|(v, p)| (v.iter().map(|&x| Value::Int(x)).collect(), *p)).collect();
    DiscreteJoint::from_rows(names, rows).unwrap()
}

/// Oracle: sum p log p(x,y,g) p(g) / (p(x,g) p(y,g)) over explicit tuples.
fn oracle_cmi(cells: &[(i64, i64, i64, f64)]) -> f64 {
    let mut pxg = HashMap::new();
    let mut pyg = HashMap::new();
    let mut pg = HashMap::new();
    let mut pxyg = HashMap::new();
    for &(x, y, g, p) in cells {
        *pxg.entry((x, g)).or_insert(0.0) += p;
        *pyg.entry((y, g)).or_insert(0.0) += p;
        *pg.entry(g).or_insert(0.0) += p;
        *pxyg.entry((x, y, g)).or_insert(0.0) += p;
    }
    pxyg.iter()
        .filter(|(_, &p)| p > 0.0)
        .map(|(&(x, y, g), &p)| p * (p * pg[&g] / (pxg[&(x, g)] * pyg[&(y, g)])).ln())
        .sum()
}

fn normalized(w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn random_table() -> impl Strategy<Value = Vec<(i64, i64, i64, f64)>> {
    (2usize..4, 2usize..4, 1usize..4).prop_flat_map(|(kx, ky, kg)| {
        prop::collection::vec(0.0f64..1.0, kx * ky * kg).prop_filter_map("nonzero", move |w| {
            let s: f64 = w.iter().sum();
            (s > 1e-6).then(|| {
                let w = normalized(w);
                let mut cells = Vec::new();
                for x in 0..kx {
                    for y in 0..ky {
                        for g in 0..kg {
                            let p = w[(x * ky + y) * kg + g];
                            if p > 0.0 {
                                cells.push((x as i64, y as i64, g as i64, p));
                            }
                        }
                    }
                }
                cells
            })
        })
    })
}

fn joint_of(cells: &[(i64, i64, i64, f64)]) -> DiscreteJoint<f64> {
    let rows: Vec<(Vec<Value<f64>>, f64)> =
        cells.iter().map(|&(x, y, g, p)| (vec![Value::Int(x), Value::Int(y), Value::Int(g)], p)).collect();
    DiscreteJoint::from_rows(&["X", "Y", "G"], rows).unwrap()
}

#[test]
fn kl_reference_values() {
    let v = kl_divergence(&[2.0 / 3.0, 1.0 / 3.0], &[0.5, 0.5]).unwrap().nats;
    let oracle = (2.0f64 / 3.0) * (4.0f64 / 3.0).ln() + (1.0f64 / 3.0) * (2.0f64 / 3.0).ln();
    assert!((v - oracle).abs() < 1e-15);
    assert!((v - 0.056633).abs() < 1e-6);
    assert!(v > 0.05);
    let v = kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap().nats;
    assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
}

#[test]
fn kl_infinite_and_mismatched() {
    assert!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap().is_infinite());
    assert!(kl_divergence(&[1.0], &[0.5, 0.5]).is_err());
}

#[test]
fn mutual_information_reference_values() {
    let copy = table(&["X", "Y"], &[(&[0, 0], 0.5), (&[1, 1], 0.5)]);
    assert!((mutual_information(&copy, &["X"], &["Y"]).unwrap().nats - std::f64::consts::LN_2).abs() < 1e-15);
    let indep = table(&["X", "Y"], &[(&[0, 0], 0.25), (&[0, 1], 0.25), (&[1, 0], 0.25), (&[1, 1], 0.25)]);
    assert!(mutual_information(&indep, &["X"], &["Y"]).unwrap().nats.abs() < 1e-15);
    let skew = table(&["X", "Y"], &[(&[0, 0], 0.375), (&[0, 1], 0.125), (&[1, 0], 0.125), (&[1, 1], 0.375)]);
    let v = mutual_information(&skew, &["X"], &["Y"]).unwrap().nats;
    assert!((v - (0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln())).abs() < 1e-14);
    assert!((v - 0.130812).abs() < 1e-6);
}

#[test]
fn single_atom_conditioning_is_plain_mutual_information() {
    let j = table(&["X", "Y", "G"], &[(&[0, 0, 7], 0.5), (&[1, 1, 7], 0.5)]);
    let v = conditional_mutual_information(&j, &["X"], &["Y"], &["G"]).unwrap().nats;
    assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
}

#[test]
fn unknown_names_are_schema_errors() {
    let j = table(&["X", "Y"], &[(&[0, 0], 1.0)]);
    assert!(mutual_information(&j, &["X"], &["Z"]).is_err());
}

#[test]
fn memorize_last_state_information_is_ln2_on_distinct_rows() {
    let world = WorldSpec::iid(OutcomeSpace::numbered(2), vec![Rational::new(1, 2), Rational::new(1, 2)]).unwrap();
    let learner = LearnerSpec {
        states: 2,
        update: UpdateSpec::MemorizeLast,
        weight: WeightSpec::default(),
        loss: zero_one_loss(2),
    };
    let j: DiscreteJoint<f64> = enumerate(&world, &learner, 1).unwrap();
    let budget = scmi_budget(&j, &["W_1".into()], &["U_1".into()], &[vec!["H_0".into(), "Z0_1".into(), "Z1_1".into()]])
        .unwrap();
    // Half the rows have distinct coordinates, each carrying ln 2.
    assert!((budget.total - 0.5 * std::f64::consts::LN_2).abs() < 1e-15);
}

#[test]
fn plug_in_estimate_converges_on_copied_bits() {
    let samples: Vec<(u8, u8, u8)> = (0..4000).map(|i| ((i % 2) as u8, (i % 2) as u8, 0u8)).collect();
    let v = plugin_cmi(&samples, 10);
    assert!((v.nats - std::f64::consts::LN_2).abs() < 1e-3);
    assert!(v.stderr.is_some());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cmi_matches_oracle_and_is_nonnegative(cells in random_table()) {
        let j = joint_of(&cells);
        let v = conditional_mutual_information(&j, &["X"], &["Y"], &["G"]).unwrap();
        prop_assert!(v.nats >= -1e-12);
        prop_assert!((v.nats - oracle_cmi(&cells)).abs() < 1e-10);
    }

    #[test]
    fn kl_of_a_table_with_itself_is_zero(w in prop::collection::vec(0.01f64..1.0, 2..6)) {
        let p = normalized(w);
        prop_assert!(kl_divergence(&p, &p).unwrap().nats.abs() < 1e-15);
    }

    #[test]
    fn chain_rule(cells in random_table()) {
        let j = joint_of(&cells);
        let whole = mutual_information(&j, &["X"], &["Y", "G"]).unwrap().nats;
        let parts = mutual_information(&j, &["X"], &["G"]).unwrap().nats
            + conditional_mutual_information(&j, &["X"], &["Y"], &["G"]).unwrap().nats;
        prop_assert!((whole - parts).abs() < 1e-10);
    }

    #[test]
    fn data_processing_under_deterministic_maps(cells in random_table(), map in prop::collection::vec(0i64..2, 3)) {
        let j = joint_of(&cells);
        let xs = j.ints("X").unwrap();
        let fx: Vec<f64> = xs.iter().map(|&x| map[x as usize] as f64).collect();
        let coarse = cmi_values(&j, &fx, &["Y"], &["G"]).unwrap().nats;
        let fine = conditional_mutual_information(&j, &["X"], &["Y"], &["G"]).unwrap().nats;
        prop_assert!(coarse <= fine + 1e-10);
    }

    #[test]
    fn positive_scaling_leaves_information_unchanged(cells in random_table(), c in 0.01f64..100.0) {
        let j = joint_of(&cells);
        let xs = j.ints("X").unwrap();
        let raw: Vec<f64> = xs.iter().map(|&x| x as f64 * 0.3).collect();
        let scaled: Vec<f64> = raw.iter().map(|v| v * c).collect();
        let a = cmi_values(&j, &raw, &["Y"], &["G"]).unwrap().nats;
        let b = cmi_values(&j, &scaled, &["Y"], &["G"]).unwrap().nats;
        prop_assert!((a - b).abs() < 1e-10);
    }
}
