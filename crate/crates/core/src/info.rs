//! Entropy, KL divergence, mutual information and conditional mutual information.
//!
//! All values are in nats. For a joint table with coordinates X, Y and context G,
//!
//! ```text
//!   I(X;Y|G) = sum_{x,y,g} p(x,y,g) ln[ p(x,y,g) p(g) / (p(x,g) p(y,g)) ]
//! ```
//!
//! with 0 ln 0 = 0. Terms are accumulated in first-occurrence order of the (x,y,g)
//! groups and reduced pairwise, so the result does not depend on thread count.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::joint::{combine, grouping_from_keys, DiscreteJoint, Grouping};
use crate::scalar::{float_key, pairwise_sum};

/// Values this far below zero are treated as rounding noise and clamped.
pub const NEG_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InfoMode {
    Exact,
    PlugIn,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfoValue {
    pub nats: f64,
    pub mode: InfoMode,
    pub stderr: Option<f64>,
}

impl InfoValue {
    /// An exact value; rounding noise within [-1e-12, 0) is clamped to 0, anything
    /// more negative is kept so callers can see it.
    pub fn exact(raw: f64) -> Self {
        let nats = if (-NEG_TOL..0.0).contains(&raw) { 0.0 } else { raw };
        InfoValue { nats, mode: InfoMode::Exact, stderr: None }
    }

    pub fn plug_in(raw: f64, stderr: Option<f64>) -> Self {
        InfoValue { nats: raw.max(0.0), mode: InfoMode::PlugIn, stderr }
    }

    pub fn is_infinite(&self) -> bool {
        self.nats.is_infinite()
    }

    /// Value clamped at zero, safe to pass to a square root.
    pub fn clamped(&self) -> f64 {
        self.nats.max(0.0)
    }
}

fn xlogx_ratio(p: f64, num: f64, den: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p * (num / den).ln()
    }
}

// ---------------------------------------------------------------------------
// Table-level measures

pub fn entropy(joint: &DiscreteJoint<f64>, names: &[&str]) -> Result<InfoValue> {
    let g = joint.group_ids(names)?;
    let mass = group_mass(joint.probs(), &g);
    let terms: Vec<f64> = mass.iter().map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 }).collect();
    Ok(InfoValue::exact(pairwise_sum(&terms)))
}

/// KL(p || q) over a common indexing of outcomes. Returns an infinite value when p puts
/// mass where q does not.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<InfoValue> {
    if p.len() != q.len() {
        return Err(Error::Schema(format!("support sizes differ: {} vs {}", p.len(), q.len())));
    }
    for (name, t) in [("p", p), ("q", q)] {
        let s: f64 = t.iter().sum();
        if t.iter().any(|&x| x < 0.0) || (s - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("{name} is not a probability table (sum {s})")));
        }
    }
    let mut terms = Vec::with_capacity(p.len());
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 && b <= 0.0 {
            return Ok(InfoValue::exact(f64::INFINITY));
        }
        terms.push(xlogx_ratio(a, a, b));
    }
    Ok(InfoValue::exact(pairwise_sum(&terms)))
}

pub fn mutual_information(joint: &DiscreteJoint<f64>, x: &[&str], y: &[&str]) -> Result<InfoValue> {
    conditional_mutual_information(joint, x, y, &[])
}

pub fn conditional_mutual_information(
    joint: &DiscreteJoint<f64>,
    x: &[&str],
    y: &[&str],
    g: &[&str],
) -> Result<InfoValue> {
    let gx = joint.group_ids(x)?;
    let gy = joint.group_ids(y)?;
    let gg = joint.group_ids(g)?;
    Ok(InfoValue::exact(cmi_grouped(joint.probs(), &gx, &gy, &gg)))
}

/// I(X;Y|G) where X is given by per-atom real values (keyed at 1e-12 resolution).
pub fn cmi_values(joint: &DiscreteJoint<f64>, x: &[f64], y: &[&str], g: &[&str]) -> Result<InfoValue> {
    if x.len() != joint.len() {
        return Err(Error::Schema("value vector length differs from atom count".into()));
    }
    let gx = grouping_from_keys(x.iter().map(|&v| float_key(v)));
    let gy = joint.group_ids(y)?;
    let gg = joint.group_ids(g)?;
    Ok(InfoValue::exact(cmi_grouped(joint.probs(), &gx, &gy, &gg)))
}

/// CMI of already-grouped coordinates.
pub fn cmi_grouped(probs: &[f64], gx: &Grouping, gy: &Grouping, gg: &Grouping) -> f64 {
    pairwise_sum(&cmi_terms(probs, gx, gy, gg).into_iter().map(|(_, v)| v).collect::<Vec<_>>())
}

/// Per-group contributions P(g) I_g(X; Y) of the conditional CMI, indexed by `gg` ids.
/// Their sum is [`cmi_grouped`].
pub fn cmi_by_group(probs: &[f64], gx: &Grouping, gy: &Grouping, gg: &Grouping) -> Vec<f64> {
    let mut out = vec![0.0; gg.count];
    for (g, v) in cmi_terms(probs, gx, gy, gg) {
        out[g] += v;
    }
    out
}

/// One (g, term) pair per (x, y, g) cell in first-occurrence order. Each term is
/// p ln(1 + d) with d = p p(g) / (p(x,g) p(y,g)) - 1 formed in double length, so tables
/// close to conditional independence keep their (tiny) information to full relative
/// precision instead of drowning in the rounding of the ratio.
fn cmi_terms(probs: &[f64], gx: &Grouping, gy: &Grouping, gg: &Grouping) -> Vec<(usize, f64)> {
    let xg = combine(gx, gg);
    let yg = combine(gy, gg);
    let xyg = combine(&xg, gy);
    let m_g = dd_group_mass(probs, gg);
    let m_xg = dd_group_mass(probs, &xg);
    let m_yg = dd_group_mass(probs, &yg);
    let m_xyg = dd_group_mass(probs, &xyg);
    let mut seen = vec![false; xyg.count];
    let mut out = Vec::with_capacity(xyg.count);
    for (i, &id) in xyg.ids.iter().enumerate() {
        if std::mem::replace(&mut seen[id as usize], true) {
            continue;
        }
        let g = gg.ids[i] as usize;
        let p = m_xyg[id as usize];
        if p.hi <= 0.0 {
            out.push((g, 0.0));
            continue;
        }
        let num = p.mul(m_g[g]);
        let den = m_xg[xg.ids[i] as usize].mul(m_yg[yg.ids[i] as usize]);
        let d = num.sub(den).hi / den.hi;
        // Far from independence the ratio itself is accurate and d = -1 + tiny would not be.
        let log = if d.abs() < 0.5 { d.ln_1p() } else { (num.hi / den.hi).ln() };
        out.push((g, p.hi * log));
    }
    out
}

// Double-length floats (hi + lo, |lo| <= ulp(hi) / 2) from the error-free transforms.
#[derive(Clone, Copy, Debug, Default)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    Dd { hi: s, lo: (a - (s - bb)) + (b - bb) }
}

impl Dd {
    fn norm(hi: f64, lo: f64) -> Dd {
        let s = hi + lo;
        Dd { hi: s, lo: lo - (s - hi) }
    }

    fn add_f64(self, x: f64) -> Dd {
        let s = two_sum(self.hi, x);
        Dd::norm(s.hi, s.lo + self.lo)
    }

    fn sub(self, o: Dd) -> Dd {
        let s = two_sum(self.hi, -o.hi);
        Dd::norm(s.hi, s.lo + (self.lo - o.lo))
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p) + (self.hi * o.lo + self.lo * o.hi);
        Dd::norm(p, e)
    }
}

fn dd_group_mass(probs: &[f64], g: &Grouping) -> Vec<Dd> {
    let mut m = vec![Dd::default(); g.count];
    for (&p, &id) in probs.iter().zip(&g.ids) {
        m[id as usize] = m[id as usize].add_f64(p);
    }
    m
}

pub fn group_mass(probs: &[f64], g: &Grouping) -> Vec<f64> {
    let mut m = vec![0.0; g.count];
    for (p, &id) in probs.iter().zip(&g.ids) {
        m[id as usize] += p;
    }
    m
}

// ---------------------------------------------------------------------------
// SCMI budget

#[derive(Clone, Debug)]
pub struct Budget {
    pub terms: Vec<InfoValue>,
    pub total: f64,
}

impl Budget {
    pub fn sqrt_sum(&self) -> f64 {
        self.terms.iter().map(|v| (2.0 * v.clamped()).sqrt()).sum()
    }
}

/// Per-round terms I(loss_t; selector_t | context_t) and their sum.
pub fn scmi_budget(
    joint: &DiscreteJoint<f64>,
    loss_names: &[String],
    selector_names: &[String],
    context_names: &[Vec<String>],
) -> Result<Budget> {
    if loss_names.len() != selector_names.len() || loss_names.len() != context_names.len() {
        return Err(Error::Schema("per-round name lists differ in length".into()));
    }
    let mut terms = Vec::with_capacity(loss_names.len());
    for t in 0..loss_names.len() {
        let ctx: Vec<&str> = context_names[t].iter().map(String::as_str).collect();
        terms.push(conditional_mutual_information(
            joint,
            &[loss_names[t].as_str()],
            &[selector_names[t].as_str()],
            &ctx,
        )?);
    }
    let total = pairwise_sum(&terms.iter().map(|v| v.clamped()).collect::<Vec<_>>());
    Ok(Budget { terms, total })
}

// ---------------------------------------------------------------------------
// Plug-in estimates from samples

/// Plug-in CMI from i.i.d. samples of (x, y, g) keys. The standard error is the spread
/// of the estimate over `batches` disjoint contiguous batches, scaled by 1/sqrt(batches).
pub fn plugin_cmi<K: Clone + Eq + Hash>(samples: &[(K, K, K)], batches: usize) -> InfoValue {
    let full = plugin_cmi_raw(samples);
    let batches = batches.min(samples.len() / 2);
    let stderr = if batches >= 2 {
        let size = samples.len() / batches;
        let est: Vec<f64> = (0..batches).map(|b| plugin_cmi_raw(&samples[b * size..(b + 1) * size])).collect();
        let mean = est.iter().sum::<f64>() / batches as f64;
        let var = est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
        Some((var / batches as f64).sqrt())
    } else {
        None
    };
    InfoValue::plug_in(full, stderr)
}

fn plugin_cmi_raw<K: Clone + Eq + Hash>(samples: &[(K, K, K)]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut ids: [HashMap<K, u32>; 3] = [HashMap::new(), HashMap::new(), HashMap::new()];
    let mut coded: [Vec<u32>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (x, y, g) in samples {
        for (k, key) in [x, y, g].into_iter().enumerate() {
            let next = ids[k].len() as u32;
            coded[k].push(*ids[k].entry(key.clone()).or_insert(next));
        }
    }
    let w = 1.0 / samples.len() as f64;
    let probs = vec![w; samples.len()];
    let gs: Vec<Grouping> = (0..3)
        .map(|k| Grouping { ids: coded[k].clone(), count: ids[k].len() })
        .collect();
    cmi_grouped(&probs, &gs[0], &gs[1], &gs[2])
}
