//! Experiment configuration: one TOML document per run.
//!
//! Everything that affects results lives in the config. `SCMI_OUT` and `SCMI_PARALLEL`
//! may override the output directory and the worker count, and those two fields are left
//! out of the digest.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use scmi_core::active::ActiveProblem;
use scmi_core::bandit::{Behavior, Schedule};
use scmi_core::online::{BinaryClass, GibbsLearner};
use scmi_core::supersample::{LearnerSpec, WorldSpec};
use scmi_core::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Identities,
    Sweep,
    Online,
    Active,
    Bandit,
}

impl Kind {
    pub fn verb(self) -> &'static str {
        match self {
            Kind::Identities => "verify-identities",
            Kind::Sweep => "sweep",
            Kind::Online => "online",
            Kind::Active => "active",
            Kind::Bandit => "bandit",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedWorld {
    pub name: String,
    pub n: usize,
    pub world: WorldSpec,
    pub learner: LearnerSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedProblem {
    pub name: String,
    #[serde(flatten)]
    pub problem: ActiveProblem,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsCase {
    pub name: String,
    pub n: usize,
    pub world: WorldSpec,
    pub learner: GibbsLearner,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassSpec {
    Full { m: usize },
    Thresholds { m: usize },
    /// One 0/1 row per function over the listed domain points.
    Table { domain: Vec<String>, functions: Vec<Vec<u8>> },
}

impl ClassSpec {
    pub fn build(&self) -> scmi_core::Result<BinaryClass> {
        match self {
            ClassSpec::Full { m } => Ok(BinaryClass::full(*m)),
            ClassSpec::Thresholds { m } => Ok(BinaryClass::thresholds(*m)),
            ClassSpec::Table { domain, functions } => {
                BinaryClass::new(domain.clone(), functions.iter().map(|f| f.iter().map(|&b| b != 0).collect()).collect())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternCase {
    pub name: String,
    pub n: usize,
    pub world: WorldSpec,
    pub learner: LearnerSpec,
    pub class: ClassSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LittlestoneSection {
    /// Random classes for the Ldim >= VC check.
    #[serde(default = "default_random_classes")]
    pub random_classes: usize,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
}

impl Default for LittlestoneSection {
    fn default() -> Self {
        LittlestoneSection { random_classes: default_random_classes(), max_points: default_max_points() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Any,
    Exchangeable,
    Asymmetric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_worlds")]
    pub worlds: usize,
    #[serde(default = "default_family")]
    pub family: FamilyName,
    #[serde(default = "default_max_n")]
    pub max_n: usize,
    #[serde(default = "default_max_atoms")]
    pub max_atoms: usize,
    #[serde(default = "default_max_states")]
    pub max_states: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_active")]
    pub active: usize,
    #[serde(default = "default_active_budget")]
    pub active_budget: usize,
    #[serde(default = "default_selector_joints")]
    pub selector_joints: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        toml::from_str("").expect("sweep defaults")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BanditSection {
    #[serde(default = "default_means")]
    pub means: Vec<f64>,
    /// Defaults to the tuned schedule for `means`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Schedule>,
    #[serde(default)]
    pub behavior: Behavior,
    /// Also run the schedule frozen at round `ablation_round` (default horizon/10).
    #[serde(default = "default_true")]
    pub ablation: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ablation_round: Option<usize>,
    #[serde(default = "default_log_points")]
    pub log_points: usize,
    /// Terminal rounds 1..=exact_horizon are enumerated exactly; 0 disables.
    #[serde(default = "default_exact_horizon")]
    pub exact_horizon: usize,
    #[serde(default = "default_exact_cap")]
    pub exact_cap: usize,
    #[serde(default = "default_importance_runs")]
    pub importance_runs: usize,
    #[serde(default = "default_importance_horizon")]
    pub importance_horizon: usize,
    #[serde(default = "default_slope_range")]
    pub slope_range: [f64; 2],
    #[serde(default = "default_ablation_slope")]
    pub ablation_min_slope: f64,
}

impl Default for BanditSection {
    fn default() -> Self {
        toml::from_str("").expect("bandit defaults")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DebugSection {
    /// P(U_t = 1) in enumerated supersample worlds. Anything but 1/2 is a broken selector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selector_bias: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Worker threads; 0 lets the pool decide.
    #[serde(default)]
    pub parallel: usize,
    #[serde(default = "default_out")]
    pub out: String,
    #[serde(default)]
    pub worlds: Vec<NamedWorld>,
    #[serde(default)]
    pub problems: Vec<NamedProblem>,
    #[serde(default)]
    pub gibbs: Vec<GibbsCase>,
    #[serde(default)]
    pub patterns: Vec<PatternCase>,
    #[serde(default)]
    pub littlestone: LittlestoneSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub bandit: BanditSection,
    #[serde(default)]
    pub debug: DebugSection,
}

fn default_c() -> f64 {
    1.0
}
fn default_eta() -> f64 {
    0.125
}
fn default_random_classes() -> usize {
    50
}
fn default_max_points() -> usize {
    5
}
fn default_worlds() -> usize {
    200
}
fn default_family() -> FamilyName {
    FamilyName::Any
}
fn default_max_n() -> usize {
    4
}
fn default_max_atoms() -> usize {
    3
}
fn default_max_states() -> usize {
    4
}
fn default_budget() -> usize {
    60_000
}
fn default_batch() -> usize {
    50
}
fn default_active() -> usize {
    100
}
fn default_active_budget() -> usize {
    40_000
}
fn default_selector_joints() -> usize {
    10_000
}
fn default_means() -> Vec<f64> {
    vec![0.9, 0.5]
}
fn default_true() -> bool {
    true
}
fn default_log_points() -> usize {
    40
}
fn default_exact_horizon() -> usize {
    3
}
fn default_exact_cap() -> usize {
    1 << 21
}
fn default_importance_runs() -> usize {
    400
}
fn default_importance_horizon() -> usize {
    50
}
fn default_slope_range() -> [f64; 2] {
    [0.35, 0.65]
}
fn default_ablation_slope() -> f64 {
    0.85
}
fn default_tolerance() -> f64 {
    scmi_core::bounds::EXACT_TOL
}
fn default_out() -> String {
    "out".into()
}

// ---------------------------------------------------------------------------
// Loading

/// A configuration problem, with the 1-based line when one is known.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub source: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{l}: {}", self.source, self.message),
            None => write!(f, "{}: {}", self.source, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ExperimentConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self, ConfigError> {
        let err = |line, message: String| ConfigError { source: source.to_string(), line, message };
        if text.trim().is_empty() {
            return Err(err(None, "config is empty".into()));
        }
        let cfg: ExperimentConfig = toml::from_str(text)
            .map_err(|e| err(e.span().map(|s| line_of(text, s.start)), e.message().to_string()))?;
        cfg.validate().map_err(|m| err(None, m))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source: path.display().to_string(),
            line: None,
            message: e.to_string(),
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// The bundled configuration for `kind`.
    pub fn bundled(kind: Kind) -> Self {
        let text = match kind {
            Kind::Identities => include_str!("../configs/identities.toml"),
            Kind::Sweep => include_str!("../configs/sweep.toml"),
            Kind::Online => include_str!("../configs/online.toml"),
            Kind::Active => include_str!("../configs/active.toml"),
            Kind::Bandit => include_str!("../configs/bandit.toml"),
        };
        Self::parse(text, kind.verb()).expect("bundled configs parse")
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.tolerance.is_finite() || self.tolerance < 0.0 {
            return Err(format!("tolerance must be a finite number >= 0, got {}", self.tolerance));
        }
        if self.seeds == Some(0) || self.horizon == Some(0) {
            return Err("seeds and horizon must be at least 1".into());
        }
        match self.kind {
            Kind::Identities if self.worlds.is_empty() && self.problems.is_empty() => {
                Err("verify-identities needs at least one [[worlds]] or [[problems]] entry".into())
            }
            Kind::Active if self.problems.is_empty() => Err("active needs at least one [[problems]] entry".into()),
            Kind::Online if self.gibbs.is_empty() && self.patterns.is_empty() => {
                Err("online needs at least one [[gibbs]] or [[patterns]] entry".into())
            }
            Kind::Bandit if self.bandit.means.len() < 2 => Err("bandit.means needs at least two arms".into()),
            _ => Ok(()),
        }
    }

    /// Applies `SCMI_OUT` and `SCMI_PARALLEL`.
    pub fn apply_env(&mut self) -> Result<(), String> {
        if let Ok(out) = std::env::var("SCMI_OUT") {
            self.out = out;
        }
        if let Ok(p) = std::env::var("SCMI_PARALLEL") {
            self.parallel = p.parse().map_err(|_| format!("SCMI_PARALLEL must be an integer, got {p:?}"))?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization, with `out` and `parallel` blanked.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.out = String::new();
        c.parallel = 0;
        let text = toml::to_string(&c).expect("config serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = ExperimentConfig::parse("kind = \"bandit\"\nseed = 1\nhorizon = \"ten\"\n", "x.toml").unwrap_err();
        assert_eq!(e.line, Some(3), "{e}");
        let e = ExperimentConfig::parse("kind = \"bandit\"\n\n[bandit]\nmeanz = [0.5]\n", "x.toml").unwrap_err();
        assert_eq!(e.line, Some(4), "{e}");
        assert!(e.to_string().starts_with("x.toml:4:"));
    }

    #[test]
    fn empty_config_is_rejected() {
        assert!(ExperimentConfig::parse("  \n", "x").is_err());
    }

    #[test]
    fn bundled_configs_parse() {
        for k in [Kind::Identities, Kind::Sweep, Kind::Online, Kind::Active, Kind::Bandit] {
            assert_eq!(ExperimentConfig::bundled(k).kind, k);
        }
    }

    #[test]
    fn digest_ignores_output_and_width() {
        let a = ExperimentConfig::bundled(Kind::Bandit);
        let mut b = a.clone();
        b.out = "elsewhere".into();
        b.parallel = 7;
        assert_eq!(a.digest(), b.digest());
        b.seed += 1;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
