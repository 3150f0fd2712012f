use std::fs;
use std::path::Path;
use std::process::Command;

use wildns::config::{ConfigRegime, RunConfig};
use wildns::driver::run_build;

const SMALL: &str = "n_t = 32\nT = 0.25\ngamma_list = []\n";

fn wildns(dir: &Path, args: &[&str], config: &str) -> (i32, String) {
    let path = dir.join("run.toml");
    fs::write(&path, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_wildns"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .current_dir(dir)
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

#[test]
fn invalid_parameter_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = wildns(dir.path(), &["info"], "m = 0.6\n");
    assert_eq!(code, 2, "{text}");
    assert!(text.contains("m in (0, 1/2)"), "{text}");
}

#[test]
fn aliasing_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = wildns(dir.path(), &["build"], "a = 4\ngrid_n = 32\n");
    assert_eq!(code, 4, "{text}");
}

#[test]
fn verify_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (c1, t1) = wildns(dir.path(), &["verify", "--out", "a"], SMALL);
    let (c2, _) = wildns(dir.path(), &["verify", "--out", "b"], SMALL);
    assert_eq!(c1, 0, "{t1}");
    assert_eq!(c2, 0);
    let r1 = fs::read(dir.path().join("a/report.json")).unwrap();
    let r2 = fs::read(dir.path().join("b/report.json")).unwrap();
    assert_eq!(r1, r2);
    for f in ["provenance.json", "norms.json", "residual.csv", "terms.csv", "v.wnsf", "w_p.wnsf"] {
        assert!(dir.path().join("a").join(f).exists(), "{f} missing");
    }
    assert!(t1.contains("report "), "{t1}");
}

#[test]
fn info_prints_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = wildns(dir.path(), &["info"], SMALL);
    assert_eq!(code, 0, "{text}");
    assert!(serde_json::from_str::<serde_json::Value>(&text).is_ok(), "{text}");
}

#[test]
fn deterministic_regime_matches_zero_amplitude() {
    let base = RunConfig { n_t: 32, horizon: 0.25, gamma_list: Vec::new(), ..RunConfig::default() };
    let det = run_build(&RunConfig { regime: ConfigRegime::Deterministic, ..base.clone() }, None).unwrap();
    let zero = run_build(&RunConfig { amplitude: 0.0, ..base }, None).unwrap();
    assert_eq!(det.dump_hashes, zero.dump_hashes);
}
