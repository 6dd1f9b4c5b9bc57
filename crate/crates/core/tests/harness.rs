use fraclab::harness::{run_estimate_b, run_suite, ExperimentConfig, Suite, VerificationReport};
use serde_json::Value;

fn run(text: &str) -> VerificationReport {
    run_suite(&ExperimentConfig::parse(text).unwrap()).unwrap()
}

fn assert_schema(rep: &VerificationReport) {
    let v: Value = serde_json::from_str(&rep.to_json()).unwrap();
    for key in ["suite", "n", "sigma", "grids", "config_hash"] {
        assert!(v["meta"].get(key).is_some(), "meta.{key}");
    }
    assert!(v["constants"].is_object());
    let checks = v["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    for c in checks {
        for key in ["name", "citation", "computed", "bound", "pass", "margin", "runtime_ms"] {
            assert!(c.get(key).is_some(), "check {} lacks {key}", c["name"]);
        }
        assert!(!c["citation"].as_str().unwrap().is_empty());
    }
    assert_eq!(v["pass"].as_bool().unwrap(), checks.iter().all(|c| c["pass"].as_bool().unwrap()));
    assert!(rep.is_well_formed());
}

#[test]
fn every_suite_passes_at_its_defaults() {
    for suite in [Suite::Oracles, Suite::Thm11B, Suite::Thm12, Suite::Thm13] {
        let rep = run_suite(&ExperimentConfig::for_suite(suite)).unwrap();
        assert!(rep.pass, "{}", rep.summary());
        assert_schema(&rep);
        for c in &rep.checks {
            assert!(c.margin >= 0.0, "{}: margin {}", c.name, c.margin);
        }
    }
}

#[test]
fn config_file_selects_the_suite_and_grids() {
    let rep = run("# mollified sequence\nsuite = thm12\nn = 2\nsigma = 0.5\nj_grid = 4, 16, 64\nx_samples = 0; 0.25\n");
    assert_eq!(rep.meta.suite, "thm12");
    assert_eq!(rep.meta.n, 2);
    assert_eq!(rep.meta.grids["j_grid"], vec![4.0, 16.0, 64.0]);
    assert!(rep.pass, "{}", rep.summary());
}

#[test]
fn hash_tracks_the_experiment_not_the_output() {
    let a = ExperimentConfig::parse("suite = thm12\nsigma = 0.5\n").unwrap();
    let b = ExperimentConfig::parse("suite = thm12\nsigma = 0.5\nout = /tmp/x.json\ncsv_dir = /tmp/t\n").unwrap();
    let c = ExperimentConfig::parse("suite = thm12\nsigma = 0.25\n").unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), c.hash());
    assert_eq!(run_suite(&a).unwrap().meta.config_hash, a.hash());
}

#[test]
fn bad_configs_are_rejected() {
    for text in [
        "suite = thm14",
        "sigma = 1.5",
        "n = 0",
        "j_grid = 16, 4",
        "lambda_grid = 0.5, 1",
        "suite = thm13\nq = -2",
        "p = 0",
        "unknown_key = 1",
        "n = 1\nx_samples = 1, 2",
    ] {
        assert!(ExperimentConfig::parse(text).is_err(), "{text}");
    }
}

#[test]
fn reports_and_tables_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::for_suite(Suite::Thm11B);
    cfg.csv_dir = Some(dir.path().join("tables"));
    let rep = run_suite(&cfg).unwrap();
    let json = dir.path().join("report.json");
    rep.write_json(&json).unwrap();
    rep.write_tables(cfg.csv_dir.as_ref().unwrap()).unwrap();
    let back: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(back["meta"]["suite"], "thm11_b");
    let b = back["constants"]["b"].as_f64().unwrap();
    assert!((b - 1.0).abs() <= 0.05);
    let csv = std::fs::read_to_string(dir.path().join("tables").join("tail_table.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("R,"));
    assert_eq!(lines.count(), cfg.radius_grid.len());
}

#[test]
fn payload_is_reproducible() {
    let cfg = ExperimentConfig::for_suite(Suite::Thm11B);
    let a = run_suite(&cfg).unwrap();
    let b = run_suite(&cfg).unwrap();
    assert_eq!(a.payload_json(), b.payload_json());
    let mut seq = cfg.clone();
    seq.quad.execution = fraclab::Execution::Sequential;
    assert_eq!(a.payload_json(), run_suite(&seq).unwrap().payload_json());
}

#[test]
fn estimate_b_entry_point() {
    let cfg = ExperimentConfig::for_suite(Suite::Thm11B);
    let est = run_estimate_b(&cfg).unwrap();
    assert!((est.b - 1.0).abs() <= 0.05);
    assert_eq!(est.table_csv().unwrap().lines().count(), cfg.radius_grid.len() + 1);
}

#[test]
fn blowup_suite_reports_its_constants() {
    let rep = run("suite = thm13\nn = 2\nlambda_grid = 1, 10, 100\n");
    assert!(rep.pass, "{}", rep.summary());
    let k = &rep.constants;
    assert_eq!(k.r.as_ref().unwrap().len(), 3);
    let d0 = k.delta0.unwrap();
    assert!(d0 > 0.0 && d0 < 0.25);
    assert!((k.c5.unwrap() - k.c4.unwrap() * d0).abs() <= 1e-15 * k.c5.unwrap());
    assert!(rep.checks.iter().any(|c| c.name == "Hessian off-diagonal at 0"));
    assert!(rep.tables.iter().any(|t| t.name == "k_lambda_samples"));
}
