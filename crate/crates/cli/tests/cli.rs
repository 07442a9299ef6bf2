use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use scmi_cli::{ExperimentConfig, Kind, Persisted};

const SMALL_SWEEP: &str = r#"
kind = "sweep"
seed = 21
[sweep]
worlds = 12
batch = 4
active = 3
selector_joints = 50
"#;

const SMALL_BANDIT: &str = r#"
kind = "bandit"
seed = 4
seeds = 40
horizon = 300
[bandit]
ablation = false
importance_runs = 20
importance_horizon = 20
exact_horizon = 2
slope_range = [-10.0, 10.0]
"#;

fn scmi(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scmi"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SCMI_OUT")
        .env_remove("SCMI_PARALLEL")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn read(dir: &Path, rel: &str) -> String {
    fs::read_to_string(dir.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

#[test]
fn bundled_identities_exit_zero() {
    let d = tempfile::tempdir().unwrap();
    let o = scmi(&["verify-identities", "--out", "o"], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let reports = read(d.path(), "o/reports.csv");
    assert!(reports.lines().count() > 40);
    assert!(!reports.contains(",violated,"));
    let manifest = read(d.path(), "o/manifest.csv");
    assert!(manifest.starts_with("verb,digest,seed"));
    assert!(read(d.path(), "o/summary.txt").contains("wall time"));
}

#[test]
fn config_errors_exit_two_with_line_numbers() {
    let d = tempfile::tempdir().unwrap();
    let empty = write(d.path(), "empty.toml", "");
    let o = scmi(&["sweep", "--config", &empty], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty"));

    let bad = write(d.path(), "bad.toml", "kind = \"sweep\"\nseed = 1\n[sweep]\nworlds = \"many\"\n");
    let o = scmi(&["sweep", "--config", &bad], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.toml:4:"), "{}", String::from_utf8_lossy(&o.stderr));

    let o = scmi(&["bandit", "--config", &write(d.path(), "s.toml", SMALL_SWEEP)], d.path());
    assert_eq!(o.status.code(), Some(2), "a sweep config given to bandit");

    let o = scmi(&["active", "--tolerance", "-1"], d.path());
    assert_eq!(o.status.code(), Some(2));
    let o = scmi(&["verify-identities", "--debug-selector-bias", "3/2"], d.path());
    assert_eq!(o.status.code(), Some(2));
    let o = scmi(&["sweep", "--no-such-flag"], d.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn biased_selector_is_a_violation() {
    let d = tempfile::tempdir().unwrap();
    let o = scmi(&["verify-identities", "--debug-selector-bias", "3/5", "--out", "o"], d.path());
    assert_eq!(o.status.code(), Some(1));
    let reports = read(d.path(), "o/reports.csv");
    let fairness: Vec<&str> = reports.lines().filter(|l| l.contains("identity.selector_fairness")).collect();
    assert!(!fairness.is_empty());
    assert!(fairness.iter().all(|l| l.contains(",violated,")));
}

#[test]
fn inconclusive_only_exits_three() {
    // An exact cap too small for the t = 2 enumeration leaves one inconclusive report.
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "b.toml", &format!("{SMALL_BANDIT}exact_cap = 300\n"));
    let o = scmi(&["bandit", "--config", &cfg, "--out", "o"], d.path());
    let reports = read(d.path(), "o/reports.csv");
    assert!(!reports.contains(",violated,"));
    assert!(reports.contains("log K form"));
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn premise_unmet_does_not_change_exit_code() {
    // The ordered-pairs world is not exchangeable, so its row-swap identity is premise-unmet.
    let d = tempfile::tempdir().unwrap();
    let o = scmi(&["verify-identities", "--out", "o"], d.path());
    assert!(read(d.path(), "o/reports.csv").contains("premise unmet"));
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn sweep_csvs_are_byte_identical_across_runs_and_widths() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "s.toml", SMALL_SWEEP);
    let a = scmi(&["sweep", "--config", &cfg, "--out", "a", "--parallel", "1"], d.path());
    let b = scmi(&["sweep", "--config", &cfg, "--out", "b", "--parallel", "3"], d.path());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    for f in ["reports.csv", "manifest.csv", "worlds/world-0003.toml", "worlds/selector_joints.csv"] {
        assert_eq!(read(d.path(), &format!("a/{f}")), read(d.path(), &format!("b/{f}")), "{f}");
    }
}

#[test]
fn bandit_csvs_are_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "b.toml", SMALL_BANDIT);
    for out in ["a", "b"] {
        let o = scmi(&["bandit", "--config", &cfg, "--out", out], d.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    }
    for f in ["reports.csv", "manifest.csv", "regret.csv", "slopes.csv"] {
        assert_eq!(read(d.path(), &format!("a/{f}")), read(d.path(), &format!("b/{f}")), "{f}");
    }
    assert!(read(d.path(), "a/regret.csv").starts_with("schedule,t,step_mean,step_stderr,cum_mean,cum_stderr\n"));
}

#[test]
fn replay_reproduces_the_sweep_lines() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "s.toml", SMALL_SWEEP);
    assert_eq!(scmi(&["sweep", "--config", &cfg, "--out", "a"], d.path()).status.code(), Some(0));
    let full = read(d.path(), "a/reports.csv");
    for (file, label) in [("world-0005", "world-0005/"), ("batch-0002", "batch-0002/"), ("active-0001", "active-0001/")] {
        let path = d.path().join(format!("a/worlds/{file}.toml"));
        let o = scmi(&["sweep", "--config", &cfg, "--replay", path.to_str().unwrap(), "--out", "r"], d.path());
        assert_eq!(o.status.code(), Some(0));
        let replayed = read(d.path(), "r/reports.csv");
        let want: Vec<&str> = full.lines().filter(|l| l.starts_with(label)).collect();
        let got: Vec<&str> = replayed.lines().skip(1).collect();
        assert!(!want.is_empty());
        assert_eq!(want, got, "{file}");
    }
}

#[test]
fn persisted_worlds_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "s.toml", SMALL_SWEEP);
    scmi(&["sweep", "--config", &cfg, "--out", "a"], d.path());
    let text = read(d.path(), "a/worlds/world-0000.toml");
    let p = Persisted::from_toml(&text).unwrap();
    assert!(matches!(p, Persisted::Supersample { seed: 21, index: 0, .. }));
    assert_eq!(p.to_toml(), text);
}

#[test]
fn env_overrides_output_directory() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_scmi"))
        .args(["active"])
        .current_dir(d.path())
        .env("SCMI_OUT", "from-env")
        .env("SCMI_PARALLEL", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(d.path().join("from-env/reports.csv").exists());
    let o = Command::new(env!("CARGO_BIN_EXE_scmi"))
        .args(["active"])
        .current_dir(d.path())
        .env("SCMI_PARALLEL", "lots")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tolerance_is_applied_to_exact_reports() {
    let d = tempfile::tempdir().unwrap();
    scmi(&["active", "--tolerance", "0", "--out", "z"], d.path());
    scmi(&["active", "--tolerance", "1e-6", "--out", "w"], d.path());
    let z = read(d.path(), "z/reports.csv");
    let w = read(d.path(), "w/reports.csv");
    assert!(z.lines().skip(1).all(|l| l.contains(",exact,0.0,")));
    assert!(w.lines().skip(1).all(|l| l.contains(",exact,1e-6,")));
    // Loosening never turns a holding report into a failure.
    for (a, b) in z.lines().zip(w.lines()).skip(1) {
        if a.contains(",holds,") {
            assert!(b.contains(",holds,"), "{b}");
        }
    }
}

#[test]
fn digest_ignores_out_and_parallel() {
    let d = tempfile::tempdir().unwrap();
    scmi(&["active", "--out", "a", "--parallel", "1"], d.path());
    scmi(&["active", "--out", "b", "--parallel", "2"], d.path());
    scmi(&["active", "--out", "c", "--seed", "99"], d.path());
    let m = |x: &str| read(d.path(), &format!("{x}/manifest.csv"));
    assert_eq!(m("a"), m("b"));
    assert_ne!(m("a"), m("c"));
    assert!(m("a").contains(&ExperimentConfig::bundled(Kind::Active).digest()));
}
