use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ricean-se"));
    c.env_remove("RICEAN_SE_WORKERS");
    c
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn sweep_to(dir: &Path, extra: &[&str]) -> String {
    let small = scenario("rayleigh_small.scenario");
    let mut args = vec![
        "run",
        small.to_str().unwrap(),
        "--sweep",
        "M:8,32;K_dB:-inf,6",
        "--out",
        dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    std::fs::read_to_string(dir.join("sweep.csv")).unwrap()
}

#[test]
fn csv_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let e1 = scenario("e1.scenario");
    let o = run(&[
        "run",
        e1.to_str().unwrap(),
        "--sweep",
        "M:4,8;est:ls,mmse",
        "--out",
        dir.path().to_str().unwrap(),
        "--asymptotes",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let got = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let want = include_str!("golden/e1_m_sweep.csv");
    assert_eq!(got, want);
    assert_eq!(
        got.lines().next().unwrap(),
        "axis,axis_value,series,series_value,estimator,sum_se_closed,sum_se_empirical,\
         sum_se_empirical_stderr,sum_se_asymptote,asymptote,seed,drops,blocks"
    );
    for f in ["sweep.svg", "metadata.json"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let svg = std::fs::read_to_string(dir.path().join("sweep.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = sweep_to(a.path(), &["--mc", "--asymptotes", "--seed", "11"]);
    let second = sweep_to(b.path(), &["--mc", "--asymptotes", "--seed", "11"]);
    assert_eq!(first, second);
    let svg = |d: &Path| std::fs::read(d.join("sweep.svg")).unwrap();
    assert_eq!(svg(a.path()), svg(b.path()));
    let other_seed = sweep_to(b.path(), &["--mc", "--asymptotes", "--seed", "12"]);
    assert_ne!(first, other_seed);
}

#[test]
fn worker_count_does_not_change_output() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let one = sweep_to(a.path(), &["--mc", "--workers", "1"]);
    let eight = sweep_to(b.path(), &["--mc", "--workers", "8"]);
    assert_eq!(one, eight);
}

#[test]
fn workers_default_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let e1 = scenario("e1.scenario");
    let o = bin()
        .env("RICEAN_SE_WORKERS", "3")
        .args([
            "run",
            e1.to_str().unwrap(),
            "--sweep",
            "M:4",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let meta = std::fs::read_to_string(dir.path().join("metadata.json")).unwrap();
    if cfg!(feature = "parallel") {
        assert!(meta.contains("\"workers\": 3"), "{meta}");
    }
}

#[test]
fn empty_points_fail_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let e1 = scenario("e1.scenario");
    let o = run(&[
        "run",
        e1.to_str().unwrap(),
        "--sweep",
        "M:",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("no points"), "{}", stderr(&o));
    assert!(!dir.path().join("sweep.csv").exists());
}

#[test]
fn bad_scenarios_fail() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("e1.scenario"))
        .unwrap()
        .replace("antennas = 4", "antennas = 4\nantenas = 4");
    let path = dir.path().join("typo.scenario");
    std::fs::write(&path, text).unwrap();
    let o = run(&[
        "run",
        path.to_str().unwrap(),
        "--sweep",
        "M:4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("antenas"), "{}", stderr(&o));

    let o = run(&["validate", "/nonexistent.scenario", "--suite", "identities"]);
    assert!(!o.status.success());
}

#[test]
fn unwritable_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let e1 = scenario("e1.scenario");
    let out = blocker.join("sub");
    let o = run(&[
        "run",
        e1.to_str().unwrap(),
        "--sweep",
        "M:4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("writing results"), "{}", stderr(&o));
}

#[test]
fn validate_reports_one_line_per_check() {
    let e1 = scenario("e1.scenario");
    let o = run(&["validate", e1.to_str().unwrap(), "--suite", "identities"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().count() >= 3);
    for line in text.lines() {
        let f: Vec<_> = line.split(' ').collect();
        assert_eq!(f.len(), 4, "{line}");
        assert!(f[1].starts_with("measured=") && f[2].starts_with("bound="));
        assert_eq!(f[3], "PASS");
    }
    assert!(text.contains("rayleigh_reduction"));

    let o = run(&[
        "validate",
        e1.to_str().unwrap(),
        "--suite",
        "oracle",
        "--samples",
        "20000",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let o = run(&["validate", e1.to_str().unwrap(), "--suite", "nonsense"]);
    assert!(!o.status.success());
}

#[test]
fn reference_defaults_match_shipped_file() {
    let o = run(&["show", "--reference-defaults"]);
    assert!(o.status.success());
    let shown = String::from_utf8(o.stdout).unwrap();
    let file = run(&["show", scenario("reference.scenario").to_str().unwrap()]);
    assert_eq!(shown, String::from_utf8(file.stdout).unwrap());

    let o = run(&["show"]);
    assert!(!o.status.success());
}

#[test]
fn report_lists_every_provenance() {
    let e1 = scenario("e1.scenario");
    let o = run(&["report", e1.to_str().unwrap(), "--mc"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("user,estimator,provenance,sinr,se,std_error"));
    for p in ["closed_form", "monte_carlo", "asymptotic_m", "asymptotic_k"] {
        assert!(text.contains(p), "{p} missing:\n{text}");
    }
}
