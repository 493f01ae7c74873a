use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const FAMILY: &str = r#"schema = "rankone-mixing-set/1"
kind = "interval-family"
"#;

fn family(entries: u32) -> String {
    let mut text = FAMILY.to_string();
    for i in 1..=entries {
        let a = 1000u128.pow(i);
        text += &format!("\n[[interval]]\na = \"{a}\"\nlen = \"{}\"\nmultiplicity = {i}\n", a / 2);
    }
    text
}

fn rankone(dir: &Path, args: &[&str]) -> Output {
    rankone_env(dir, args, None)
}

fn rankone_env(dir: &Path, args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rankone"));
    cmd.current_dir(dir).args(args);
    match workers {
        Some(w) => cmd.env("RANKONE_WORKERS", w),
        None => cmd.env_remove("RANKONE_WORKERS"),
    };
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Temp dir with `spec.toml` and a six-stage synthesized `out/schedule.toml`.
fn synthesized() -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("spec.toml"), family(5)).unwrap();
    let o =
        rankone(dir.path(), &["synth", "--spec", "spec.toml", "--theorem", "1", "--stages", "6", "--out-dir", "out"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    dir
}

#[test]
fn synth_writes_schedule_and_audit() {
    let dir = synthesized();
    let audit = fs::read_to_string(dir.path().join("out/audit.txt")).unwrap();
    assert!(audit.contains("result: PASS"));
    assert!(audit.contains("stage 5 t=5"));
    let schedule = fs::read_to_string(dir.path().join("out/schedule.toml")).unwrap();
    assert!(schedule.starts_with("schema = \"rankone-schedule/1\""));
}

#[test]
fn build_round_trips_canonical_text() {
    let dir = synthesized();
    let o = rankone(dir.path(), &["build", "--schedule", "out/schedule.toml"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), fs::read_to_string(dir.path().join("out/schedule.toml")).unwrap());
}

#[test]
fn exhausted_family_stalls_with_required_length() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("spec.toml"), family(3)).unwrap();
    let o =
        rankone(dir.path(), &["synth", "--spec", "spec.toml", "--theorem", "1", "--stages", "8", "--out-dir", "out"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("interval family exhausted") && err.contains("L >="), "{err}");
    assert!(!dir.path().join("out/schedule.toml").exists());
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    assert_eq!(rankone(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(rankone(dir.path(), &["corr", "--schedule", "missing.toml"]).status.code(), Some(1));
    fs::write(dir.path().join("bad.toml"), "schema = \"rankone-schedule/1\"\nsurprise = 1\n").unwrap();
    let o = rankone(dir.path(), &["build", "--schedule", "bad.toml"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn rigidity_and_mixing_reports_pass() {
    let dir = synthesized();
    let o = rankone(
        dir.path(),
        &["verify", "--schedule", "out/schedule.toml", "--kind", "rigidity", "--a", "1:0", "--out-dir", "out"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("verdict: PASS"));
    let csv = fs::read_to_string(dir.path().join("out/verify-rigidity.csv")).unwrap();
    assert!(csv.lines().count() > 1);

    let o = rankone(
        dir.path(),
        &[
            "verify",
            "--schedule",
            "out/schedule.toml",
            "--kind",
            "mixing",
            "--a",
            "1:0",
            "--spec",
            "spec.toml",
            "--count",
            "8",
            "--out-dir",
            "out",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("verdict: PASS (pass 8"));
}

#[test]
fn exact_correlations_match_brute_force() {
    let dir = synthesized();
    let run = |method: &str| {
        let o = rankone(
            dir.path(),
            &[
                "corr",
                "--schedule",
                "out/schedule.toml",
                "--a",
                "1:0",
                "--b",
                "2:3-9",
                "--lags",
                "0-300",
                "--method",
                method,
                "--stage",
                "3",
                "--guard",
                "2000000",
            ],
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        stdout(&o).lines().skip(1).map(|l| l.split(',').take(3).collect::<Vec<_>>().join(",")).collect::<Vec<_>>()
    };
    let (exact, brute) = (run("exact"), run("brute"));
    assert_eq!(exact.len(), 301);
    // exact rows are the limit, brute rows the stage-3 window; they agree once certified
    let mut compared = 0;
    for (e, b) in exact.iter().zip(&brute) {
        let cols: Vec<&str> = e.split(',').collect();
        if cols[1] == cols[2] {
            assert_eq!(e, b);
            compared += 1;
        }
    }
    assert!(compared > 250, "only {compared} certified rows");
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let dir = synthesized();
    let mut runs = Vec::new();
    for workers in ["1", "4"] {
        let corr = format!("corr-{workers}.csv");
        let o = rankone_env(
            dir.path(),
            &[
                "corr",
                "--schedule",
                "out/schedule.toml",
                "--a",
                "2:0,1",
                "--b",
                "2:0-40",
                "--lags",
                "0-2000,1002,1000000",
                "--out",
                &corr,
            ],
            Some(workers),
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let mc = format!("mc-{workers}.csv");
        let o = rankone_env(
            dir.path(),
            &[
                "corr",
                "--schedule",
                "out/schedule.toml",
                "--a",
                "1:0",
                "--b",
                "1:0",
                "--lags",
                "0-20",
                "--method",
                "mc",
                "--stage",
                "3",
                "--samples",
                "2000",
                "--out",
                &mc,
            ],
            Some(workers),
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        runs.push((fs::read(dir.path().join(corr)).unwrap(), fs::read(dir.path().join(mc)).unwrap()));
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn spectral_and_poisson_write_tables() {
    let dir = synthesized();
    let o = rankone(
        dir.path(),
        &["spectral", "--schedule", "out/schedule.toml", "--a", "1:0", "--max-lag", "32", "--out-dir", "spec"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let coeffs = fs::read_to_string(dir.path().join("spec/spectral.csv")).unwrap();
    assert_eq!(coeffs.lines().count(), 34);
    assert!(dir.path().join("spec/density.csv").exists());

    let o = rankone(
        dir.path(),
        &["poisson", "--schedule", "out/schedule.toml", "--a", "1:0", "--lag", "1", "--k-max", "2"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().filter(|l| !l.is_empty()).count(), 10);
}
