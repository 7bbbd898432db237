use std::fs;
use std::path::Path;

use pluripot::cli::main_with_args;

fn run(out: &Path, args: &[&str]) -> i32 {
    let mut full = vec!["pluripot"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", out.to_str().unwrap()]);
    main_with_args(full)
}

fn report(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn envelope_of_a_constant_succeeds() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(d.path(), &["envelope", "--fixture", "disk1d", "--phi", "const:3", "--expect", "duality"]), 0);
    let r = report(d.path());
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["command"], "envelope");
    assert_eq!(r["expectation_met"], true);
    assert!(r["results"]["duality_gap"].as_f64().unwrap() < 1e-9);
    assert!(r.get("timing").is_none());
    for f in ["nodes.csv", "envelope.csv", "witnesses.csv"] {
        assert!(d.path().join(f).exists(), "{f}");
    }
}

#[test]
fn unmet_expectation_exits_one() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(d.path(), &["poisson", "--fixture", "disk1d", "--expect", "non-poisson"]), 1);
    assert_eq!(report(d.path())["expectation_met"], false);
}

#[test]
fn bad_input_exits_two() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(d.path(), &["boundary", "--fixture", "annulus"]), 2);
    assert_eq!(run(d.path(), &["boundary", "--fixture", "disk1d", "--resolution", "0.9"]), 2);
    assert_eq!(run(d.path(), &["disc-mc", "--fixture", "disk1d", "--samples", "1000"]), 2);
    assert_eq!(run(d.path(), &["boundary"]), 2);
    assert_eq!(run(d.path(), &["envelope", "--fixture", "disk1d", "--phi", "paper-two-disk"]), 2);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("cfg.json");
    fs::write(&cfg, r#"{"fixture": "disk1d", "seed": 5, "cone_count": 20}"#).unwrap();
    let out = d.path().join("out");
    assert_eq!(run(&out, &["boundary", "--config", cfg.to_str().unwrap(), "--seed", "9"]), 0);
    let r = report(&out);
    assert_eq!(r["config"]["seed"], 9);
    assert_eq!(r["config"]["cone_count"], 20);

    fs::write(&cfg, r#"{"fixture": "disk1d", "colour": 1}"#).unwrap();
    assert_eq!(run(&out, &["boundary", "--config", cfg.to_str().unwrap()]), 2);
}

#[test]
fn csv_boundary_data_is_accepted() {
    let d = tempfile::tempdir().unwrap();
    let phi = d.path().join("phi.csv");
    let rows: String = (0..61).map(|i| format!("{i},2.5\n")).collect();
    fs::write(&phi, format!("node,value\n{rows}")).unwrap();
    let out = d.path().join("out");
    assert_eq!(run(&out, &["envelope", "--fixture", "disk1d", "--phi", phi.to_str().unwrap()]), 0);
    let env = fs::read_to_string(out.join("envelope.csv")).unwrap();
    assert!(env.lines().count() > 61);
}
