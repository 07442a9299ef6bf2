//! Files written for each run.
//!
//! ```text
//!   out/reports.csv    one line per report
//!   out/manifest.csv   verb, digest, seed, counts
//!   out/summary.txt    failures, tallies, notes, wall time
//!   out/...            suite artifacts (curves, generated worlds)
//! ```
//!
//! Everything except summary.txt is a function of the config alone.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use scmi_core::bounds::{summary_block, write_reports_csv};

use crate::suite::SuiteResult;

pub fn reports_csv(res: &SuiteResult) -> scmi_core::Result<String> {
    let mut buf = Vec::new();
    write_reports_csv(&res.reports, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

pub fn manifest_csv(res: &SuiteResult) -> String {
    let (h, v, i) = res.counts();
    format!(
        "verb,digest,seed,reports,holds,violated,inconclusive,exit_code\n{},{},{},{},{h},{v},{i},{}\n",
        res.kind.verb(),
        res.digest,
        res.seed,
        res.reports.len(),
        res.exit_code()
    )
}

pub fn summary_text(res: &SuiteResult) -> String {
    let mut s = format!("{}  config {}  seed {}\n", res.kind.verb(), res.digest, res.seed);
    s.push_str(&summary_block(&res.reports));
    for n in &res.notes {
        let _ = writeln!(s, "{n}");
    }
    let _ = writeln!(s, "exit code {}  wall time {:.3}s", res.exit_code(), res.wall_time.as_secs_f64());
    s
}

pub fn write_outputs(res: &SuiteResult, dir: &Path) -> scmi_core::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("reports.csv"), reports_csv(res)?)?;
    fs::write(dir.join("manifest.csv"), manifest_csv(res))?;
    fs::write(dir.join("summary.txt"), summary_text(res))?;
    for a in &res.artifacts {
        let path = dir.join(&a.path);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, &a.contents)?;
    }
    Ok(())
}
