use std::path::PathBuf;

use ricean_se::analytics::sinr_closed;
use ricean_se::{EstimatorKind, Scenario};

fn shipped(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

#[test]
fn reference_file_matches_builtin_defaults() {
    assert_eq!(
        Scenario::load(shipped("reference.scenario")).unwrap(),
        Scenario::reference()
    );
}

#[test]
fn e1_file_gives_four_thirteenths() {
    let s = Scenario::load(shipped("e1.scenario")).unwrap();
    let cfg = s.config(None).unwrap();
    let ls = s.drop(0, None).unwrap();
    for kind in EstimatorKind::ALL {
        let v = sinr_closed(&cfg, &ls, 0, 0, kind).unwrap();
        assert!((v - 4.0 / 13.0).abs() < 1e-12);
    }
}

#[test]
fn every_shipped_scenario_parses() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "scenario") {
            let s = Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            s.config(None).unwrap();
            s.drop(0, None).unwrap();
            seen += 1;
        }
    }
    assert!(seen >= 3);
}
