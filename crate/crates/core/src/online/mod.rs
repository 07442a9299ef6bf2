//! Online specialization: Gibbs learners with unit weights, and pattern-growth control
//! of the selector information for binary loss classes.
//!
//! ```text
//!   W_t ~ pi_0(w) exp(-eta sum_{s <= t} loss(w, Z_s))      Q_t = 1
//!   sum_t I(L+_t; U_t | G_{t-1}) <= log sum_{i <= min(d, n)} C(n, i)   (pathwise realizable)
//! ```

pub mod littlestone;

pub use littlestone::{
    littlestone_dimension, log_binomial_sum, pattern_growth_bound, pattern_growth_from_dim, vc_dimension,
    BinaryClass, LdimOptions, PatternBound,
};

use serde::{Deserialize, Serialize};

use crate::bounds::report::terms;
use crate::bounds::{prefixed, round_cmi, shifted_rademacher_bound, slow_rate_bound, BoundReport, Mode};
use crate::error::{invalid, Result};
use crate::scalar::Rational;
use crate::supersample::{
    enumerate, names, History, Learner, LearnerSpec, Retention, UpdateSpec, WeightSpec, World, WorldSpec,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsLearner {
    pub eta: f64,
    pub prior: Vec<f64>,
    /// `loss[w][z]` in [0, 1].
    pub loss: Vec<Vec<Rational>>,
}

impl GibbsLearner {
    pub fn uniform(eta: f64, loss: Vec<Vec<Rational>>) -> Self {
        let k = loss.len();
        GibbsLearner { eta, prior: vec![1.0 / k as f64; k], loss }
    }

    /// The learner as a configurable spec; the weight is always Q_t = 1.
    pub fn spec(&self) -> LearnerSpec {
        LearnerSpec {
            states: self.loss.len(),
            update: UpdateSpec::Gibbs { eta: self.eta, prior: self.prior.clone() },
            weight: WeightSpec::Constant { q: Rational::one() },
            loss: self.loss.clone(),
        }
    }

    /// Posterior after the observations `obs`.
    pub fn posterior(&self, obs: &[usize]) -> Vec<f64> {
        let loss: Vec<Vec<f64>> = self.loss.iter().map(|r| r.iter().map(|x| x.to_f64()).collect()).collect();
        LearnerSpec::gibbs_posterior(self.eta, &self.prior, &loss, obs.iter().copied())
    }
}

/// Enumerates the online experiment and evaluates the slow-rate chain and the
/// shifted-Rademacher forms at (c, eta_fast).
pub fn run_online(world: &WorldSpec, gibbs: &GibbsLearner, n: usize, c: f64, eta_fast: f64) -> Result<Vec<BoundReport>> {
    let j = enumerate::<f64>(world, &gibbs.spec(), n)?;
    let mut out = prefixed(slow_rate_bound(&j)?, "online");
    out.extend(prefixed(shifted_rademacher_bound(&j, c, eta_fast)?, "online"));
    Ok(out)
}

/// Largest number of (path, row sequence) leaves the realizability check visits.
pub const REALIZABILITY_CAP: usize = 1_000_000;

struct PathCheck<'a> {
    world: &'a WorldSpec,
    learner: &'a LearnerSpec,
    cls: &'a BinaryClass,
    n: usize,
    ret: Retention,
    leaves: usize,
}

impl PathCheck<'_> {
    /// Returns the reason certification failed, if it did. Walks every selector path together with every positive-mass row sequence along it
    /// and asks for one class member reproducing the loss path on the first coordinates.
    fn walk(&mut self, t: usize, h: &History, path: &mut Vec<(usize, bool)>) -> Result<Option<String>> {
        if t > self.n {
            self.leaves += 1;
            if self.leaves > REALIZABILITY_CAP {
                return Ok(Some(format!("more than {REALIZABILITY_CAP} paths")));
            }
            let ok = self.cls.functions().iter().any(|f| path.iter().all(|&(z, l)| f[z] == l));
            return Ok((!ok).then(|| format!("loss path {path:?} is not realized")));
        }
        let rows = <WorldSpec as World<f64>>::row_law(self.world, t, h)?;
        for ((a, b), p) in rows {
            if p <= 0.0 {
                continue;
            }
            for z in [a, b] {
                let obs = <LearnerSpec as Learner<f64>>::observe(self.learner, t, h, z)?;
                let upd = <LearnerSpec as Learner<f64>>::update(self.learner, t, h, obs)?;
                let live: Vec<usize> = upd.iter().filter(|(_, q)| *q > 0.0).map(|(w, _)| *w).collect();
                if live.len() != 1 {
                    return Ok(Some("learner update is randomized".into()));
                }
                let w = live[0];
                let l = <LearnerSpec as Learner<f64>>::loss(self.learner, w, a);
                if l != 0.0 && l != 1.0 {
                    return Ok(Some("loss is not binary".into()));
                }
                path.push((a, l == 1.0));
                let verdict = self.walk(t + 1, &h.extended(self.ret, obs, w as u32), path)?;
                path.pop();
                if verdict.is_some() {
                    return Ok(verdict);
                }
            }
        }
        Ok(None)
    }
}

/// Compares the exact selector-information sum with the pattern-growth bound of `cls`.
///
/// The tree labels are the first coordinates Z_{t,0}. Realizability is certified by
/// exhausting every selector path and row sequence, which needs a deterministic learner;
/// otherwise the report is inconclusive.
pub fn verify_pattern_scmi(world: &WorldSpec, learner: &LearnerSpec, cls: &BinaryClass, n: usize) -> Result<Vec<BoundReport>> {
    world.validate()?;
    learner.validate(world.space.len())?;
    if cls.domain().len() != world.space.len() {
        return invalid("class domain must be the outcome space");
    }
    let mut check =
        PathCheck { world, learner, cls, n, ret: Retention::default(), leaves: 0 };
    if let Some(why) = check.walk(1, &History::new(), &mut Vec::new())? {
        return Ok(vec![BoundReport::inconclusive("pattern.scmi", format!("realizability not certified: {why}"))]);
    }
    let j = enumerate::<f64>(world, learner, n)?;
    let mut sum = 0.0;
    for t in 1..=n {
        sum += round_cmi(&j, &[&names::lplus(t)], t)?;
    }
    let pb = pattern_growth_bound(cls, n)?;
    let mut out = vec![BoundReport::inequality(
        "pattern.scmi",
        sum,
        terms(&[("log_binomial_sum", pb.log_binomial)]),
        Mode::exact(),
    )
    .with_note(format!("ldim={}", pb.ldim))];
    if let Some(v) = pb.ldim_form {
        out.push(BoundReport::inequality("pattern.ldim_form", sum, terms(&[("d_log_en_over_d", v)]), Mode::exact()));
    }
    Ok(out)
}
