use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;

use scmi_cli::{output, run_with_replay, ExperimentConfig, Kind, Persisted};

#[derive(Parser)]
#[command(name = "scmi", version, about = "Sequential supersample identity and bound checks")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Exact identities on the configured worlds, active problems and small bandits.
    VerifyIdentities(Common),
    /// Every bound on randomly generated worlds.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Re-run the checks for one persisted world file.
        #[arg(long, value_name = "FILE")]
        replay: Option<PathBuf>,
    },
    /// Online learning: Gibbs learners, pattern bounds, Littlestone dimension.
    Online(Common),
    /// Importance-weighted active learning.
    Active(Common),
    /// Exp3-style bandit ensemble, regret slope and exact small-horizon checks.
    Bandit(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config; defaults to the bundled config for the verb.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo replicas.
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Tolerance for exact checks.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    parallel: Option<usize>,
    /// Enumerate supersample worlds with P(U_t = 1) = P, e.g. 3/5. For debugging only.
    #[arg(long, value_name = "P")]
    debug_selector_bias: Option<String>,
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn build_config(kind: Kind, c: &Common) -> Result<ExperimentConfig, String> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p).map_err(|e| e.to_string())?,
        None => ExperimentConfig::bundled(kind),
    };
    if cfg.kind != kind {
        return Err(format!("config is for `{}`, not `{}`", cfg.kind.verb(), kind.verb()));
    }
    cfg.apply_env()?;
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if c.seeds.is_some() {
        cfg.seeds = c.seeds;
    }
    if c.horizon.is_some() {
        cfg.horizon = c.horizon;
    }
    if let Some(v) = &c.out {
        cfg.out = v.clone();
    }
    if let Some(v) = c.tolerance {
        cfg.tolerance = v;
    }
    if let Some(v) = c.parallel {
        cfg.parallel = v;
    }
    if let Some(p) = &c.debug_selector_bias {
        let r: BigRational = p.parse().map_err(|_| format!("--debug-selector-bias: cannot parse {p:?} as a fraction"))?;
        let (n, d) = (r.numer().try_into(), r.denom().try_into());
        match (n, d) {
            (Ok(n), Ok(d)) if r >= BigRational::from_integer(0.into()) && r <= BigRational::from_integer(1.into()) => {
                cfg.debug.selector_bias = Some(scmi_core::Rational::new(n, d));
            }
            _ => return Err(format!("--debug-selector-bias must be a fraction in [0, 1], got {p}")),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common, replay) = match &cli.verb {
        Verb::VerifyIdentities(c) => (Kind::Identities, c, None),
        Verb::Sweep { common, replay } => (Kind::Sweep, common, replay.as_ref()),
        Verb::Online(c) => (Kind::Online, c, None),
        Verb::Active(c) => (Kind::Active, c, None),
        Verb::Bandit(c) => (Kind::Bandit, c, None),
    };
    let cfg = match build_config(kind, common) {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let persisted = match replay {
        None => None,
        Some(p) => match std::fs::read_to_string(p).map_err(|e| e.to_string()).and_then(|t| {
            Persisted::from_toml(&t).map_err(|e| e.to_string())
        }) {
            Ok(x) => Some(x),
            Err(e) => return usage(format!("{}: {e}", p.display())),
        },
    };
    let res = match run_with_replay(&cfg, persisted.as_ref()) {
        Ok(r) => r,
        Err(e) => return usage(e),
    };
    if let Err(e) = output::write_outputs(&res, std::path::Path::new(&cfg.out)) {
        return usage(format!("writing {}: {e}", cfg.out));
    }
    print!("{}", output::summary_text(&res));
    ExitCode::from(res.exit_code() as u8)
}
