//! Bernstein-type fast-rate bound on the holdout excess risk.
//!
//! For a comparator w*, e_{t,u} = Q_t (l(W_t, Z_{t,u}) - l(w*, Z_{t,u})) with |e| <= b.
//! Under R_ho >= 0 and the second-moment condition
//!
//! ```text
//!   (1/n) sum_t E[e_{t,0}^2] <= B R_ho,
//! ```
//!
//! every 0 < lambda < 3/b with 1 - B lambda / (1 - lambda b/3) > 0 gives
//!
//! ```text
//!   (1 - B lambda / (1 - lambda b/3)) R_ho <= R_tr + (2/(lambda n)) sum_t I(e_{t,0}; U_t | G_{t-1}).
//! ```
//!
//! The choice lambda = C/(B + C b/3), C in (0,1), turns this into
//! R_ho <= R_tr/(1-C) + 2(B + C b/3)/(C(1-C) n) sum_t I.

use crate::error::{invalid, Error, Result};
use crate::joint::DiscreteJoint;
use crate::supersample::{names, risks};

use super::report::{terms, BoundReport, Mode, EXACT_TOL};
use super::round_cmi_values;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BernsteinParams {
    /// Range bound on |e|.
    pub b: f64,
    /// Second-moment constant.
    pub big_b: f64,
    pub lambda: f64,
    /// Contraction C when lambda was derived from it.
    pub c: Option<f64>,
}

impl BernsteinParams {
    pub fn from_contraction(b: f64, big_b: f64, c: f64) -> Result<Self> {
        if !(c > 0.0 && c < 1.0) || !(b >= 0.0) || !(big_b > 0.0) {
            return invalid(format!("need C in (0,1), b >= 0, B > 0; got C={c}, b={b}, B={big_b}"));
        }
        Ok(BernsteinParams { b, big_b, lambda: c / (big_b + c * b / 3.0), c: Some(c) })
    }

    pub fn from_lambda(b: f64, big_b: f64, lambda: f64) -> Self {
        BernsteinParams { b, big_b, lambda, c: None }
    }

    /// 1 - B lambda / (1 - lambda b / 3).
    pub fn coefficient(&self) -> f64 {
        1.0 - self.big_b * self.lambda / (1.0 - self.lambda * self.b / 3.0)
    }

    pub fn feasible(&self) -> bool {
        self.lambda > 0.0 && (self.b == 0.0 || self.lambda < 3.0 / self.b) && self.coefficient() > 0.0
    }

    /// Same rule (fixed lambda, or lambda from C) with new range and moment constants.
    fn rebased(&self, b: f64, big_b: f64) -> Self {
        match self.c {
            Some(c) => BernsteinParams { b, big_b, lambda: c / (big_b + c * b / 3.0), c: Some(c) },
            None => BernsteinParams { b, big_b, lambda: self.lambda, c: None },
        }
    }
}

/// psi_b(lambda) = (e^{lambda b} - lambda b - 1) / b^2, with the b -> 0 limit lambda^2/2.
pub fn psi(b: f64, lambda: f64) -> f64 {
    if b == 0.0 {
        return lambda * lambda / 2.0;
    }
    let x = lambda * b;
    // exp_m1 keeps precision for small x.
    (x.exp_m1() - x) / (b * b)
}

/// lambda^2 / (2 (1 - lambda b / 3)), the upper envelope of psi_b on (0, 3/b).
pub fn psi_envelope(b: f64, lambda: f64) -> f64 {
    lambda * lambda / (2.0 * (1.0 - lambda * b / 3.0))
}

/// Excess-process summaries for comparator `w*`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExcessSummary {
    pub holdout: f64,
    pub train: f64,
    /// (1/n) sum_t E[e_{t,0}^2].
    pub second_moment: f64,
    /// max |e_{t,u}| over positive-mass atoms.
    pub range: f64,
    /// min e_{t,u} over positive-mass atoms.
    pub min: f64,
    /// Per-round I(e_{t,0}; U_t | G_{t-1}).
    pub info: Vec<f64>,
}

pub fn excess_summary(j: &DiscreteJoint<f64>, comparator: usize) -> Result<ExcessSummary> {
    let n = risks::horizon(j)?;
    let loss = j.meta.loss_table.as_ref().ok_or_else(|| Error::Schema("joint has no loss table".into()))?;
    let star = loss.get(comparator).ok_or_else(|| Error::Invalid(format!("comparator {comparator} out of range")))?;
    let (mut ho, mut tr, mut m2) = (0.0, 0.0, 0.0);
    let (mut range, mut min): (f64, f64) = (0.0, f64::INFINITY);
    let mut info = Vec::with_capacity(n);
    for t in 1..=n {
        let q = j.numeric(&names::q(t))?;
        let l0 = j.numeric(&names::l0(t))?;
        let l1 = j.numeric(&names::l1(t))?;
        let z0 = j.ints(&names::z0(t))?;
        let z1 = j.ints(&names::z1(t))?;
        let u = j.ints(&names::u(t))?;
        let e0: Vec<f64> = (0..j.len()).map(|i| q[i] * (l0[i] - star[z0[i] as usize])).collect();
        let e1: Vec<f64> = (0..j.len()).map(|i| q[i] * (l1[i] - star[z1[i] as usize])).collect();
        for i in 0..j.len() {
            range = range.max(e0[i].abs()).max(e1[i].abs());
            min = min.min(e0[i]).min(e1[i]);
        }
        ho += j.expect_with(|i| if u[i] == 0 { e1[i] } else { e0[i] });
        tr += j.expect_with(|i| if u[i] == 0 { e0[i] } else { e1[i] });
        m2 += j.expect_with(|i| e0[i] * e0[i]);
        info.push(round_cmi_values(j, &e0, t)?);
    }
    let nf = n as f64;
    Ok(ExcessSummary { holdout: ho / nf, train: tr / nf, second_moment: m2 / nf, range, min, info })
}

/// Checks the Bernstein-type bound, its explicit-C form, and the unit-interval special case.
///
/// The moment constant actually used is max(B_declared, B_empirical) where
/// B_empirical = second moment / R_ho; the range used is max(b_declared, max |e|).
pub fn bernstein_bound(j: &DiscreteJoint<f64>, comparator: usize, params: BernsteinParams) -> Result<Vec<BoundReport>> {
    const MAIN: &str = "bernstein.main";
    if !j.meta.exchangeable || !j.meta.selected_update {
        return Ok(vec![BoundReport::premise_unmet(MAIN, "rows are not declared exchangeable")]);
    }
    let n = risks::horizon(j)? as f64;
    let s = excess_summary(j, comparator)?;
    let info: f64 = s.info.iter().sum();
    let b = params.b.max(s.range);
    if b == 0.0 {
        return Ok(vec![BoundReport::inequality(MAIN, 0.0, terms(&[("train_excess", 0.0), ("info", 0.0)]), Mode::exact())
            .with_note("b = 0: every excess is zero")]);
    }
    if s.holdout < -EXACT_TOL {
        return Ok(vec![BoundReport::premise_unmet(MAIN, format!("holdout excess {:.3e} < 0", s.holdout))]);
    }
    let b_emp = if s.holdout > EXACT_TOL {
        s.second_moment / s.holdout
    } else if s.second_moment <= EXACT_TOL {
        0.0
    } else {
        return Ok(vec![BoundReport::premise_unmet(
            MAIN,
            "second-moment condition fails for every B: zero holdout excess, positive second moment",
        )]);
    };
    let big_b = params.big_b.max(b_emp);
    let p = params.rebased(b, big_b);
    let note = format!("B_declared={} B_empirical={b_emp:.6} b={b:.6} lambda={:.6}", params.big_b, p.lambda);
    if !p.feasible() {
        return Ok(vec![BoundReport::premise_unmet(MAIN, format!("lambda infeasible ({note})"))]);
    }
    let mut out = vec![
        BoundReport::inequality(
            "bernstein.condition",
            s.second_moment,
            terms(&[("B_times_holdout_excess", big_b * s.holdout.max(0.0))]),
            Mode::exact(),
        )
        .with_note(note.clone()),
        BoundReport::inequality(
            MAIN,
            p.coefficient() * s.holdout,
            terms(&[("train_excess", s.train), ("info", 2.0 / (p.lambda * n) * info)]),
            Mode::exact(),
        )
        .with_note(note.clone()),
    ];
    if let Some(c) = p.c {
        out.push(
            BoundReport::inequality(
                "bernstein.explicit",
                s.holdout,
                terms(&[
                    ("scaled_train_excess", s.train / (1.0 - c)),
                    ("info", 2.0 * (big_b + c * b / 3.0) / (c * (1.0 - c) * n) * info),
                ]),
                Mode::exact(),
            )
            .with_note(note),
        );
    }
    const UNIT: &str = "bernstein.unit_interval";
    if s.min < -EXACT_TOL || s.range > 1.0 + EXACT_TOL {
        out.push(BoundReport::premise_unmet(UNIT, "excess outside [0, 1]"));
    } else if s.train > s.holdout + EXACT_TOL {
        out.push(BoundReport::premise_unmet(UNIT, "train excess exceeds holdout excess"));
    } else {
        out.push(BoundReport::inequality(
            UNIT,
            s.holdout,
            terms(&[("twice_train_excess", 2.0 * s.train), ("info", 28.0 / (3.0 * n) * info)]),
            Mode::exact(),
        ));
    }
    Ok(out)
}
