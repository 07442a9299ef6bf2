//! Verified inequalities and identities.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::Result;

/// Numerical tolerance for exact (enumerated) checks.
pub const EXACT_TOL: f64 = 1e-10;
/// Number of standard errors a Monte Carlo margin must clear.
pub const MC_SIGMAS: f64 = 4.0;

const PREMISE_PREFIX: &str = "premise unmet: ";

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    Exact { tol: f64 },
    MonteCarlo { stderr: f64 },
}

impl Mode {
    pub fn exact() -> Self {
        Mode::Exact { tol: EXACT_TOL }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    /// lhs <= sum of rhs terms.
    AtMost,
    /// lhs == sum of rhs terms.
    Equal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Holds,
    Inconclusive,
    Violated,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub name: String,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs_terms: Vec<(String, f64)>,
    /// Sum of rhs terms minus lhs.
    pub margin: f64,
    pub mode: Mode,
    pub verdict: Verdict,
    pub note: String,
}

impl BoundReport {
    pub fn inequality(name: impl Into<String>, lhs: f64, rhs_terms: Vec<(String, f64)>, mode: Mode) -> Self {
        Self::build(name.into(), Relation::AtMost, lhs, rhs_terms, mode)
    }

    pub fn identity(name: impl Into<String>, lhs: f64, rhs_terms: Vec<(String, f64)>, mode: Mode) -> Self {
        Self::build(name.into(), Relation::Equal, lhs, rhs_terms, mode)
    }

    /// A check whose premises failed; `note` names the failed premise.
    pub fn inconclusive(name: impl Into<String>, note: impl Into<String>) -> Self {
        BoundReport {
            name: name.into(),
            relation: Relation::AtMost,
            lhs: f64::NAN,
            rhs_terms: Vec::new(),
            margin: f64::NAN,
            mode: Mode::exact(),
            verdict: Verdict::Inconclusive,
            note: note.into(),
        }
    }

    /// Inconclusive because a structural premise of the bound does not hold for this input.
    pub fn premise_unmet(name: impl Into<String>, premise: impl AsRef<str>) -> Self {
        Self::inconclusive(name, format!("{PREMISE_PREFIX}{}", premise.as_ref()))
    }

    pub fn is_premise_unmet(&self) -> bool {
        self.verdict == Verdict::Inconclusive && self.note.starts_with(PREMISE_PREFIX)
    }

    fn build(name: String, relation: Relation, lhs: f64, rhs_terms: Vec<(String, f64)>, mode: Mode) -> Self {
        let rhs: f64 = rhs_terms.iter().map(|(_, v)| v).sum();
        let margin = rhs - lhs;
        let verdict = if !margin.is_finite() {
            if margin == f64::INFINITY && relation == Relation::AtMost {
                Verdict::Holds
            } else {
                Verdict::Inconclusive
            }
        } else {
            match (relation, mode) {
                (Relation::AtMost, Mode::Exact { tol }) => {
                    if margin >= -tol {
                        Verdict::Holds
                    } else {
                        Verdict::Violated
                    }
                }
                (Relation::Equal, Mode::Exact { tol }) => {
                    if margin.abs() <= tol {
                        Verdict::Holds
                    } else {
                        Verdict::Violated
                    }
                }
                (Relation::AtMost, Mode::MonteCarlo { stderr }) => {
                    let r = MC_SIGMAS * stderr;
                    if margin >= r {
                        Verdict::Holds
                    } else if margin < -r {
                        Verdict::Violated
                    } else {
                        Verdict::Inconclusive
                    }
                }
                (Relation::Equal, Mode::MonteCarlo { stderr }) => {
                    if margin.abs() <= MC_SIGMAS * stderr {
                        Verdict::Holds
                    } else {
                        Verdict::Violated
                    }
                }
            }
        };
        BoundReport { name, relation, lhs, rhs_terms, margin, mode, verdict, note: String::new() }
    }

    /// Re-evaluates an exact-mode verdict under tolerance `tol`; other reports are
    /// returned unchanged. With `tol = 0` float rounding can show up as violations.
    pub fn with_tolerance(self, tol: f64) -> Self {
        match self.mode {
            Mode::Exact { .. } if !self.lhs.is_nan() => {
                let note = self.note;
                let mut r = Self::build(self.name, self.relation, self.lhs, self.rhs_terms, Mode::Exact { tol });
                r.note = note;
                r
            }
            _ => self,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        let note = note.into();
        if self.note.is_empty() {
            self.note = note;
        } else {
            self.note = format!("{}; {note}", self.note);
        }
        self
    }

    pub fn rhs(&self) -> f64 {
        self.rhs_terms.iter().map(|(_, v)| v).sum()
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.rhs_terms.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

pub(crate) fn terms(items: &[(&str, f64)]) -> Vec<(String, f64)> {
    items.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

// ---------------------------------------------------------------------------
// Output

fn fmt_num(x: f64) -> String {
    format!("{x:?}")
}

/// One CSV line per report. Rhs terms are serialized as `name=value` pairs joined by `;`.
pub fn write_reports_csv<W: Write>(reports: &[BoundReport], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["name", "relation", "lhs", "rhs", "margin", "mode", "tolerance", "stderr", "verdict", "rhs_terms", "note"])?;
    for r in reports {
        let (mode, tol, se) = match r.mode {
            Mode::Exact { tol } => ("exact", fmt_num(tol), String::new()),
            Mode::MonteCarlo { stderr } => ("monte-carlo", String::new(), fmt_num(stderr)),
        };
        let rel = match r.relation {
            Relation::AtMost => "<=",
            Relation::Equal => "==",
        };
        let rhs_terms: Vec<String> = r.rhs_terms.iter().map(|(k, v)| format!("{k}={}", fmt_num(*v))).collect();
        wr.write_record([
            r.name.clone(),
            rel.to_string(),
            fmt_num(r.lhs),
            fmt_num(r.rhs()),
            fmt_num(r.margin),
            mode.to_string(),
            tol,
            se,
            r.verdict.as_str().to_string(),
            rhs_terms.join(";"),
            r.note.clone(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Counts of (holds, violated, inconclusive).
pub fn tally(reports: &[BoundReport]) -> (usize, usize, usize) {
    reports.iter().fold((0, 0, 0), |(h, v, i), r| match r.verdict {
        Verdict::Holds => (h + 1, v, i),
        Verdict::Violated => (h, v + 1, i),
        Verdict::Inconclusive => (h, v, i + 1),
    })
}

/// Human-readable block: one line per report that failed for a reason other than an
/// unmet premise, a count of the premise-unmet ones, then the tallies.
pub fn summary_block(reports: &[BoundReport]) -> String {
    let (h, v, i) = tally(reports);
    let mut s = String::new();
    for r in reports.iter().filter(|r| r.verdict != Verdict::Holds && !r.is_premise_unmet()) {
        let _ = writeln!(
            s,
            "  {:<12} {}  lhs={:.6e} rhs={:.6e} margin={:.3e} {}",
            r.verdict.as_str(),
            r.name,
            r.lhs,
            r.rhs(),
            r.margin,
            r.note
        );
    }
    let unmet = reports.iter().filter(|r| r.is_premise_unmet()).count();
    if unmet > 0 {
        let _ = writeln!(s, "  {unmet} inconclusive reports have an unmet premise (see reports.csv)");
    }
    let _ = writeln!(s, "reports: {}  holds: {h}  violated: {v}  inconclusive: {i}", reports.len());
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_is_rhs_minus_lhs() {
        let r = BoundReport::inequality("x", 0.3, terms(&[("a", 0.1), ("b", 0.25)]), Mode::exact());
        assert!((r.lhs + r.margin - r.rhs()).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Holds);
    }

    #[test]
    fn exact_tolerance_is_one_sided() {
        let ok = BoundReport::inequality("x", 1.0 + 5e-11, terms(&[("a", 1.0)]), Mode::exact());
        let bad = BoundReport::inequality("x", 1.0 + 5e-10, terms(&[("a", 1.0)]), Mode::exact());
        assert_eq!(ok.verdict, Verdict::Holds);
        assert_eq!(bad.verdict, Verdict::Violated);
    }

    #[test]
    fn monte_carlo_verdicts_use_four_sigma() {
        let m = Mode::MonteCarlo { stderr: 0.01 };
        assert_eq!(BoundReport::inequality("x", 0.0, terms(&[("a", 0.05)]), m).verdict, Verdict::Holds);
        assert_eq!(BoundReport::inequality("x", 0.0, terms(&[("a", 0.01)]), m).verdict, Verdict::Inconclusive);
        assert_eq!(BoundReport::inequality("x", 0.05, terms(&[("a", 0.0)]), m).verdict, Verdict::Violated);
        assert_eq!(BoundReport::identity("x", 0.02, terms(&[("a", 0.0)]), m).verdict, Verdict::Holds);
    }

    #[test]
    fn tolerance_override_rejudges_exact_reports() {
        let r = BoundReport::identity("x", 1.0, terms(&[("a", 1.0 + 1e-13)]), Mode::exact());
        assert!(r.holds());
        assert_eq!(r.clone().with_tolerance(0.0).verdict, Verdict::Violated);
        let mc = BoundReport::identity("x", 1.0, terms(&[("a", 1.1)]), Mode::MonteCarlo { stderr: 0.1 });
        assert_eq!(mc.clone().with_tolerance(0.0), mc);
    }

    #[test]
    fn nan_is_never_a_pass() {
        let r = BoundReport::inequality("x", f64::NAN, terms(&[("a", 1.0)]), Mode::exact());
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }
}
