mod common;

use std::process::{Command, Output};

use common::Fixture;

fn ztsdn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ztsdn")).args(args).output().expect("binary runs")
}

#[test]
fn train_mine_enforce_report() {
    let fx = Fixture::new();
    let cfg = fx.config_file();
    let cfg = cfg.to_str().unwrap();

    let out = ztsdn(&["train", "--config", cfg]);
    let code = out.status.code().unwrap();
    assert!(code == 0 || code == 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("4 edges"));

    for cmd in ["mine", "enforce", "report"] {
        let out = ztsdn(&[cmd, "--config", cfg]);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(fx.config.output_dir.join("report.json")).unwrap()).unwrap();
    assert!(report.get("enforce").is_some());
}

#[test]
fn exit_codes() {
    let fx = Fixture::new();
    let missing = fx.path().join("nope.json");
    let out = ztsdn(&["train", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let empty_models = fx.path().join("empty");
    let out = ztsdn(&["mine", "--config", fx.config_file().to_str().unwrap(), "--model-dir", empty_models.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    assert_eq!(ztsdn(&["frobnicate"]).status.code(), Some(2));
}
