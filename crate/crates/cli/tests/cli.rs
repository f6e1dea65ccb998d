use std::path::Path;
use std::process::{Command, Output};

use snns_cli::config::{ExperimentConfig, TargetSpec};
use snns_cli::svg::{series_from_csv, Plot};
use snns_cli::{export_density_matrix, ingest_density_matrix, CliError};
use snns_core::states;

fn snns(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snns")).args(args).current_dir(dir).env_remove("SNNS_SEED").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn learn_exits_zero_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = snns(&["learn", "--target", "bell", "--partition", "free", "--iters", "300", "--out", "run"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["run.json", "series.csv", "plot.svg"] {
        assert!(dir.path().join("run").join(f).exists(), "missing {f}");
    }
}

#[test]
fn starved_classification_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = snns(&["classify", "--target", "bell", "--iters", "2", "--restarts", "1", "--no-plot"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = snns(&["learn", "--target", "nonsense"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn unknown_config_key_is_located() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "bad.json", "{\n  \"lr\": 0.1\n}\n");
    let err = ExperimentConfig::load(Path::new(&path)).unwrap_err();
    match &err {
        CliError::Parse { line, column, .. } => assert_eq!((*line, *column), (2, 3)),
        other => panic!("unexpected {other:?}"),
    }
    let out = snns(&["learn", "--config", &path], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.json:2:3"));

    let broken = write(dir.path(), "broken.json", "{\n  \"target\": \"bell\",\n  \"iters\" 3\n}\n");
    match ExperimentConfig::load(Path::new(&broken)).unwrap_err() {
        CliError::Parse { line, .. } => assert_eq!(line, 3),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn defaults_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = snns(&["defaults"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg = ExperimentConfig::from_json(&text, "defaults").unwrap();
    assert_eq!(serde_json::to_value(&cfg).unwrap(), serde_json::to_value(ExperimentConfig::default()).unwrap());
}

#[test]
fn density_matrix_files() {
    let dir = tempfile::tempdir().unwrap();
    let rho = states::werner(-0.4, 3).unwrap();
    let path = dir.path().join("werner.json");
    export_density_matrix(&rho, &path).unwrap();
    let back = ingest_density_matrix(&path).unwrap();
    assert_eq!(back.dims(), rho.dims());
    assert!(back.matrix().max_abs_diff(rho.matrix()) < 1e-15);

    let half = write(dir.path(), "half.json", r#"{"dims": [2], "re": [0.25, 0, 0, 0.25], "im": [0, 0, 0, 0]}"#);
    assert!(matches!(
        ingest_density_matrix(Path::new(&half)),
        Err(CliError::InvariantViolation { invariant: "trace", .. })
    ));
    let skew = write(dir.path(), "skew.json", r#"{"dims": [2], "re": [0.5, 0.001, 0, 0.5], "im": [0, 0, 0, 0]}"#);
    assert!(matches!(
        ingest_density_matrix(Path::new(&skew)),
        Err(CliError::InvariantViolation { invariant: "hermiticity", .. })
    ));
    let out = snns(&["learn", "--target", &format!("file:{half}")], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trace"));
}

#[test]
fn svg_is_a_function_of_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "s.csv", "p,variant,value\n0,a,1.0\n0.5,a,0.4\n1,a,0\n0,b,0.8\n1,b,0\n");
    let render = || {
        let series = series_from_csv(Path::new(&csv), "p", "value", Some("variant")).unwrap();
        Plot { title: "t".into(), x_label: "p".into(), y_label: "value".into(), log_y: false, series }.render()
    };
    let first = render();
    assert_eq!(first, render());
    assert!(first.starts_with("<svg"));

    let a = dir.path().join("a.svg").display().to_string();
    let b = dir.path().join("b.svg").display().to_string();
    for svg in [&a, &b] {
        let out = snns(&["plot", "--csv", &csv, "--x", "p", "--y", "value", "--group", "variant", "--svg", svg], dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn target_specs() {
    let t: TargetSpec = "werner:eta=-0.75,d=5".parse().unwrap();
    assert_eq!(t.name, "werner");
    assert_eq!(t.params["d"], 5.0);
    assert_eq!(t.to_string().parse::<TargetSpec>().unwrap(), t);
    let c: TargetSpec = "choi:channel=hw,d=3,param=-0.5".parse().unwrap();
    assert_eq!(c.to_string(), "choi:channel=holevo_werner,d=3,param=-0.5");
    assert_eq!(c.density().unwrap().dims(), &[3, 3]);
    assert!("werner:bogus=1".parse::<TargetSpec>().is_err());
    assert!("choi:channel=amplitude".parse::<TargetSpec>().is_err());
    assert!("werner:eta=x".parse::<TargetSpec>().is_err());
    let noisy: TargetSpec = "w:p=0.25".parse().unwrap();
    assert!((noisy.density().unwrap().purity() - states::depolarise(&states::w_state(), 0.25).unwrap().purity()).abs() < 1e-12);
}
