//! Selector comparison for a bounded square.
//!
//! ```text
//!   P(U = 1 | G) = 1/2,  |X| <= b   =>   E[X^2] <= (3/2) E[X^2 | U = 1] + 20 b^2 I(X; U | G)
//! ```

use rand::Rng;

use crate::bounds::report::{terms, BoundReport, Mode};
use crate::info::conditional_mutual_information;
use crate::joint::{DiscreteJoint, Value};
use crate::rng::{stream, Purpose};

const NAME: &str = "selector_square";

pub fn selector_square_check(j: &DiscreteJoint<f64>, x: &str, u: &str, g: &[&str], b: f64) -> BoundReport {
    let run = || -> crate::Result<BoundReport> {
        let xs = j.numeric(x)?;
        let us = j.ints(u)?;
        let gg = j.group_ids(g)?;
        let p = j.probs();
        if let Some(v) = xs.iter().zip(p).find(|(v, &q)| q > 0.0 && v.abs() > b + 1e-12) {
            return Ok(BoundReport::premise_unmet(NAME, format!("|X| = {} exceeds b = {b}", v.0.abs())));
        }
        let mut mass = vec![0.0; gg.count];
        let mut ones = vec![0.0; gg.count];
        for i in 0..j.len() {
            mass[gg.ids[i] as usize] += p[i];
            if us[i] == 1 {
                ones[gg.ids[i] as usize] += p[i];
            }
        }
        if mass.iter().zip(&ones).any(|(m, o)| *m > 0.0 && (o - 0.5 * m).abs() > 1e-10 * m.max(1e-300)) {
            return Ok(BoundReport::premise_unmet(NAME, "selector is not fair given the context"));
        }
        let second = j.expect_with(|i| xs[i] * xs[i]);
        let p1: f64 = ones.iter().sum();
        let second_u1 = j.expect_with(|i| if us[i] == 1 { xs[i] * xs[i] } else { 0.0 }) / p1;
        let info = conditional_mutual_information(j, &[x], &[u], g)?.clamped();
        Ok(BoundReport::inequality(
            NAME,
            second,
            terms(&[("selected_branch", 1.5 * second_u1), ("info", 20.0 * b * b * info)]),
            Mode::exact(),
        ))
    };
    run().unwrap_or_else(|e| BoundReport::inconclusive(NAME, e.to_string()))
}

/// A random joint over (X, U, G) with a fair selector, |X| <= 1 and |G| <= 4.
///
/// Half of the draws skew X toward larger magnitudes on the U = 0 branch so that the
/// information term is exercised.
pub fn random_selector_joint(seed: u64, index: u64) -> DiscreteJoint<f64> {
    let mut rng = stream(seed, Purpose::Sweep, &[0x5e1ec7, index]);
    let groups = rng.random_range(1..=4);
    let support = rng.random_range(1..=4);
    let values: Vec<f64> = (0..support).map(|_| (rng.random_range(-8..=8) as f64) / 8.0).collect();
    let skew = rng.random_bool(0.5);
    let gw: Vec<f64> = (0..groups).map(|_| rng.random_range(1..=5) as f64).collect();
    let gs: f64 = gw.iter().sum();
    let mut rows = Vec::new();
    for g in 0..groups {
        for u in 0..2 {
            let w: Vec<f64> = values
                .iter()
                .map(|v| {
                    let base = rng.random_range(0..=4) as f64;
                    if skew && u == 0 { base * (1.0 + 4.0 * v.abs()) } else { base }
                })
                .collect();
            let s: f64 = w.iter().sum();
            let w: Vec<f64> = if s > 0.0 { w.iter().map(|x| x / s).collect() } else { vec![1.0 / support as f64; support] };
            for (xi, &v) in values.iter().enumerate() {
                if w[xi] > 0.0 {
                    let row = vec![Value::Num(v), Value::Int(u), Value::Int(g as i64)];
                    rows.push((row, gw[g] / gs * 0.5 * w[xi]));
                }
            }
        }
    }
    DiscreteJoint::from_rows(&["X", "U", "G"], rows).expect("well-formed selector joint")
}
