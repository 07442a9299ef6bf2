//! Batch supersample reference: n i.i.d. rows of two atoms, independent fair selectors,
//! one output W learned from the selected atoms.
//!
//! ```text
//!   |E[L_D(W) - L_S(W)]| <= (2/n) sum_i sqrt(2 I(L+_i; U_i | Z~))
//!   (1/n) sum_i sqrt(I(L+_i; U_i | Z~)) <= sqrt(I(F; U | Z~)/n) <= sqrt(I(W; U | Z~)/n)
//!   I(F; U | Z~) <= max{(d+1) ln 2, d ln(2en/d)}       (VC dimension d)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::info::conditional_mutual_information;
use crate::joint::{ColumnBuilder, DiscreteJoint, JointKind, JointMeta, Value};
use crate::online::littlestone::{vc_dimension, BinaryClass};
use crate::scalar::{Rational, Scalar};

use super::report::{terms, BoundReport, Mode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BatchAlgorithm {
    Constant { hypothesis: usize },
    /// Empirical risk minimizer on the selected atoms; ties go to the lowest index.
    Erm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchProblem {
    /// Law of one atom.
    pub p: Vec<Rational>,
    /// `loss[h][z]` in [0, 1].
    pub loss: Vec<Vec<Rational>>,
    /// `predictions[h][z]`: the prediction of hypothesis h on the input of atom z. When
    /// absent the loss vector stands in for the prediction vector.
    #[serde(default)]
    pub predictions: Option<Vec<Vec<u32>>>,
    pub algorithm: BatchAlgorithm,
    pub n: usize,
}

pub fn z0(i: usize) -> String {
    format!("Z0_{i}")
}
pub fn z1(i: usize) -> String {
    format!("Z1_{i}")
}
pub fn u(i: usize) -> String {
    format!("U_{i}")
}
pub fn lp(i: usize) -> String {
    format!("Lp_{i}")
}
pub fn f(i: usize, c: usize) -> String {
    format!("F{c}_{i}")
}
pub const W: &str = "W";
pub const POP: &str = "LD";

impl BatchProblem {
    pub fn validate(&self) -> Result<()> {
        let k = self.p.len();
        if k == 0 || self.n == 0 || self.loss.is_empty() {
            return invalid("batch problem needs atoms, hypotheses and n >= 1");
        }
        if self.p.iter().fold(Rational::zero(), |a, &b| a + b) != Rational::one() || self.p.iter().any(|x| x.is_negative()) {
            return invalid("atom law must be a probability table");
        }
        if self.loss.iter().any(|r| r.len() != k) {
            return invalid("loss table must have one column per atom");
        }
        if let Some(pr) = &self.predictions {
            if pr.len() != self.loss.len() || pr.iter().any(|r| r.len() != k) {
                return invalid("prediction table must match the loss table");
            }
        }
        if let BatchAlgorithm::Constant { hypothesis } = self.algorithm {
            if hypothesis >= self.loss.len() {
                return invalid("constant hypothesis out of range");
            }
        }
        Ok(())
    }

    fn learn(&self, selected: &[usize]) -> usize {
        match self.algorithm {
            BatchAlgorithm::Constant { hypothesis } => hypothesis,
            BatchAlgorithm::Erm => {
                let risk = |h: usize| selected.iter().fold(Rational::zero(), |a, &z| a + self.loss[h][z]);
                (0..self.loss.len()).min_by(|&a, &b| risk(a).cmp(&risk(b)).then(a.cmp(&b))).unwrap()
            }
        }
    }

    /// VC dimension of the prediction class over atoms, when predictions are binary.
    pub fn vc_dim(&self) -> Option<usize> {
        let pr = self.predictions.as_ref()?;
        if pr.iter().flatten().any(|&v| v > 1) {
            return None;
        }
        let mut fns: Vec<Vec<bool>> = pr.iter().map(|r| r.iter().map(|&v| v == 1).collect()).collect();
        fns.sort();
        fns.dedup();
        let cls = BinaryClass::new((0..self.p.len()).map(|z| format!("z{z}")).collect(), fns).ok()?;
        Some(vc_dimension(&cls))
    }
}

/// The `index`-th random batch problem of the sweep keyed by `seed`: 2 or 3 atoms, 2 to 4
/// binary predictors under 0-1 loss against a random label per atom, n in 1..=3.
pub fn random_batch_problem(seed: u64, index: u64) -> BatchProblem {
    use rand::Rng;
    let mut rng = crate::rng::stream(seed, crate::rng::Purpose::WorldGen, &[0xba7c4, index]);
    let k = rng.random_range(2..=3usize);
    let weights: Vec<i64> = (0..k).map(|_| rng.random_range(1..=4)).collect();
    let total: i64 = weights.iter().sum();
    let labels: Vec<u32> = (0..k).map(|_| rng.random_range(0..2)).collect();
    let mut predictions: Vec<Vec<u32>> = Vec::new();
    let hyps = rng.random_range(2..=4usize);
    while predictions.len() < hyps {
        let h: Vec<u32> = (0..k).map(|_| rng.random_range(0..2)).collect();
        if !predictions.contains(&h) {
            predictions.push(h);
        }
    }
    let loss = predictions
        .iter()
        .map(|h| h.iter().zip(&labels).map(|(a, b)| Rational::integer((a != b) as i64)).collect())
        .collect();
    let algorithm = if rng.random_bool(0.8) {
        BatchAlgorithm::Erm
    } else {
        BatchAlgorithm::Constant { hypothesis: rng.random_range(0..hyps) }
    };
    BatchProblem {
        p: weights.iter().map(|&w| Rational::new(w, total)).collect(),
        loss,
        predictions: Some(predictions),
        algorithm,
        n: rng.random_range(1..=3),
    }
}

/// Exact joint of the batch supersample. Column groups: Z0_i, Z1_i, U_i, W, Lp_i
/// (loss of W on the first atom of row i), F0_i/F1_i (predictions), LD (population risk).
pub fn enumerate_batch<S: Scalar>(prob: &BatchProblem, cap: usize) -> Result<DiscreteJoint<S>> {
    prob.validate()?;
    let k = prob.p.len();
    let n = prob.n;
    let per = (k * k * 2) as u128;
    let total = per.checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > cap as u128 {
        return Err(Error::EnumerationTooLarge { round: n, atoms: total, cap });
    }
    let pop: Vec<Rational> = (0..prob.loss.len())
        .map(|h| (0..k).fold(Rational::zero(), |a, z| a + prob.p[z] * prob.loss[h][z]))
        .collect();
    let mut cols: Vec<ColumnBuilder<S>> = Vec::new();
    let mut names = Vec::new();
    for i in 1..=n {
        names.extend([z0(i), z1(i), u(i), lp(i), f(i, 0), f(i, 1)]);
    }
    names.push(W.to_string());
    names.push(POP.to_string());
    for nm in &names {
        cols.push(ColumnBuilder::new(nm.clone()));
    }
    let mut probs = Vec::new();
    let half = Rational::new(1, 2);
    for code in 0..total as usize {
        let mut c = code;
        let mut rows = Vec::with_capacity(n);
        let mut mass = Rational::one();
        for _ in 0..n {
            let a = c % k;
            c /= k;
            let b = c % k;
            c /= k;
            let s = c % 2;
            c /= 2;
            mass = mass * prob.p[a] * prob.p[b] * half;
            rows.push((a, b, s));
        }
        if mass.is_zero() {
            continue;
        }
        let selected: Vec<usize> = rows.iter().map(|&(a, b, s)| if s == 0 { a } else { b }).collect();
        let h = prob.learn(&selected);
        let pred = |z: usize| -> Value<S> {
            match &prob.predictions {
                Some(pr) => Value::Int(pr[h][z] as i64),
                None => Value::Num(S::from_rational(prob.loss[h][z])),
            }
        };
        let mut col = 0;
        for &(a, b, s) in &rows {
            cols[col].push(Value::Int(a as i64));
            cols[col + 1].push(Value::Int(b as i64));
            cols[col + 2].push(Value::Int(s as i64));
            cols[col + 3].push(Value::Num(S::from_rational(prob.loss[h][a])));
            cols[col + 4].push(pred(a));
            cols[col + 5].push(pred(b));
            col += 6;
        }
        cols[col].push(Value::Int(h as i64));
        cols[col + 1].push(Value::Num(S::from_rational(pop[h])));
        probs.push(S::from_rational(mass));
    }
    let mut params = vec![("atoms".to_string(), k as f64)];
    if let Some(d) = prob.vc_dim() {
        params.push(("vc_dim".to_string(), d as f64));
    }
    let meta = JointMeta {
        kind: JointKind::Batch,
        horizon: Some(n),
        exchangeable: true,
        conditional_product: true,
        selected_update: true,
        loss_table: Some(prob.loss.iter().map(|r| r.iter().map(|x| x.to_f64()).collect()).collect()),
        params,
    };
    DiscreteJoint::new(cols.into_iter().map(ColumnBuilder::finish).collect(), probs, meta)
}

/// max{(d+1) ln 2, d ln(2en/d)}; for d = 0 this is ln 2.
pub fn vc_pattern_bound(d: usize, n: usize) -> f64 {
    let a = (d as f64 + 1.0) * std::f64::consts::LN_2;
    if d == 0 {
        return a;
    }
    let b = d as f64 * (2.0 * std::f64::consts::E * n as f64 / d as f64).ln();
    a.max(b)
}

/// Rejects tables that are not a batch supersample: rows must be i.i.d. with a common
/// atom law and the selector vector uniform and independent of the rows.
fn check_batch(j: &DiscreteJoint<f64>, n: usize) -> Result<()> {
    let reject = |why: &str| Err(Error::Invalid(format!("not an i.i.d. batch supersample: {why}")));
    let zn: Vec<String> = (1..=n).flat_map(|i| [z0(i), z1(i)]).collect();
    let zr: Vec<&str> = zn.iter().map(String::as_str).collect();
    let un: Vec<String> = (1..=n).map(u).collect();
    let ur: Vec<&str> = un.iter().map(String::as_str).collect();
    let single = j.marginal(&[&z0(1)])?;
    let atoms = single.ints(&z0(1))?;
    let law: std::collections::HashMap<i64, f64> = atoms.iter().copied().zip(single.probs().iter().copied()).collect();
    let rows = j.marginal(&zr)?;
    let mut covered = 0.0;
    for a in 0..rows.len() {
        let mut prod = 1.0;
        for nm in &zr {
            let v = rows.column(nm)?.value(a).as_int().unwrap_or(-1);
            prod *= law.get(&v).copied().unwrap_or(0.0);
        }
        covered += prod;
        if (prod - rows.probs()[a]).abs() > 1e-12 {
            return reject("rows are not a product of one atom law");
        }
    }
    if (covered - 1.0).abs() > 1e-9 {
        return reject("row law misses product atoms");
    }
    let mut both = zr.clone();
    both.extend(ur.iter().copied());
    let full = j.marginal(&both)?;
    let gz = full.group_ids(&zr)?;
    let mz = crate::info::group_mass(full.probs(), &gz);
    let expect = 0.5f64.powi(n as i32);
    for a in 0..full.len() {
        if (full.probs()[a] - expect * mz[gz.ids[a] as usize]).abs() > 1e-12 {
            return reject("selectors are not uniform and independent of the rows");
        }
    }
    if full.len() != gz.count * (1 << n) {
        return reject("some selector vector has zero mass");
    }
    Ok(())
}

pub fn batch_ecmi_bound(j: &DiscreteJoint<f64>) -> Result<Vec<BoundReport>> {
    if j.meta.kind != JointKind::Batch {
        return invalid("joint is not a batch supersample");
    }
    let n = j.meta.horizon.ok_or_else(|| Error::Schema("batch joint has no n".into()))?;
    check_batch(j, n)?;
    let zn: Vec<String> = (1..=n).flat_map(|i| [z0(i), z1(i)]).collect();
    let zr: Vec<&str> = zn.iter().map(String::as_str).collect();
    let un: Vec<String> = (1..=n).map(u).collect();
    let ur: Vec<&str> = un.iter().map(String::as_str).collect();
    let fnames: Vec<String> = (1..=n).flat_map(|i| [f(i, 0), f(i, 1)]).collect();
    let fr: Vec<&str> = fnames.iter().map(String::as_str).collect();
    let nf = n as f64;
    let loss = j.meta.loss_table.as_ref().ok_or_else(|| Error::Schema("batch joint has no loss table".into()))?;

    let w = j.ints(W)?;
    let pop = j.numeric(POP)?;
    let (mut train, mut corr) = (0.0, 0.0);
    let mut il = Vec::with_capacity(n);
    for i in 1..=n {
        let a = j.ints(&z0(i))?;
        let b = j.ints(&z1(i))?;
        let s = j.ints(&u(i))?;
        let lpi = j.numeric(&lp(i))?;
        train += j.expect_with(|x| {
            let z = if s[x] == 0 { a[x] } else { b[x] };
            loss[w[x] as usize][z as usize]
        });
        corr += j.expect_with(|x| (2 * s[x] - 1) as f64 * lpi[x]);
        il.push(conditional_mutual_information(j, &[&lp(i)], &[&u(i)], &zr)?.clamped());
    }
    let train = train / nf;
    let gap = j.expect_with(|x| pop[x]) - train;
    let ifun = conditional_mutual_information(j, &fr, &ur, &zr)?.clamped();
    let iw = conditional_mutual_information(j, &[W], &ur, &zr)?.clamped();
    let mut out = vec![
        BoundReport::identity("batch.symmetrization", gap, terms(&[("selector_correlation", 2.0 / nf * corr)]), Mode::exact()),
        BoundReport::inequality(
            "batch.single_loss",
            gap.abs(),
            terms(&[("loss_cmi", 2.0 / nf * il.iter().map(|v| (2.0 * v).sqrt()).sum::<f64>())]),
            Mode::exact(),
        ),
        BoundReport::inequality(
            "batch.loss_to_function",
            il.iter().map(|v| v.sqrt()).sum::<f64>() / nf,
            terms(&[("function_cmi", (ifun / nf).sqrt())]),
            Mode::exact(),
        ),
        BoundReport::inequality(
            "batch.function_to_state",
            (ifun / nf).sqrt(),
            terms(&[("state_cmi", (iw / nf).sqrt())]),
            Mode::exact(),
        ),
    ];
    if let Some(d) = j.meta.param("vc_dim") {
        out.push(BoundReport::inequality(
            "batch.vc_pattern",
            ifun,
            terms(&[("pattern_count", vc_pattern_bound(d as usize, n))]),
            Mode::exact(),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vc_bound_reference_value() {
        let v = vc_pattern_bound(1, 4);
        assert!((v - (8.0 * std::f64::consts::E).ln()).abs() < 1e-12);
        assert!((v - 3.079442).abs() < 1e-6);
    }
}
