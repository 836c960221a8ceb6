use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn workdir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(dir: &PathBuf, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orlicz-lab")).args(args).current_dir(dir).output().unwrap()
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

#[test]
fn norm_of_indicator_is_one() {
    let dir = workdir("cli-norm");
    std::fs::write(dir.join("pos.csv"), "atom,probability,value\na,0.25,2\nb,0.75,0\n").unwrap();
    let out = run(&dir, &["norm", "--phi", "power:p=2", "--input", "pos.csv", "--which", "luxemburg"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out.stdout)["value"].as_f64().unwrap();
    assert!((v - 1.0).abs() <= 1e-8, "{v}");
}

#[test]
fn avar_of_symmetric_coin_is_one() {
    let dir = workdir("cli-avar");
    std::fs::write(dir.join("pos.csv"), "atom,probability,value\na,0.5,-1\nb,0.5,1\n").unwrap();
    let out = run(&dir, &["risk", "eval", "--measure", "avar:alpha=0.5", "--input", "pos.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out.stdout)["values"][0]["value"].as_f64().unwrap();
    assert!((v - 1.0).abs() <= 1e-12, "{v}");
}

#[test]
fn minus_w0_is_rejected_with_certificate() {
    let dir = workdir("cli-member");
    let out = run(&dir, &["cex", "member", "--position", "minus-w0"]);
    assert_eq!(out.status.code(), Some(2));
    let m = &json(&out.stdout)["membership"];
    assert_eq!(m["status"], "not-member");
    assert_eq!(m["verified"], true);
    assert!(!m["farkas"]["multipliers"].as_array().unwrap().is_empty());
    assert_eq!(json(&out.stderr)["exit_code"], 2);
}

#[test]
fn xsr_has_tight_certificate() {
    let dir = workdir("cli-xsr");
    let out = run(&dir, &["cex", "member", "--position", "xsr:s=2,r=3"]);
    assert_eq!(out.status.code(), Some(0));
    let c = &json(&out.stdout)["membership"]["certificate"];
    assert_eq!(c["lambda"].as_f64(), Some(1.0));
    assert_eq!(c["y"][0]["value"].as_f64(), Some(0.25));
}

#[test]
fn unknown_flag_exits_three_with_json() {
    let dir = workdir("cli-flag");
    let out = run(&dir, &["norm", "--bogus"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out.stderr)["error"], "invalid-input");
}

#[test]
fn bad_inputs_exit_three() {
    let dir = workdir("cli-bad");
    std::fs::write(dir.join("pos.csv"), "atom,probability,value\na,0.5,1\nb,0.4,0\n").unwrap();
    std::fs::write(dir.join("hdr.csv"), "name,p,x\na,1,1\n").unwrap();
    for args in [
        &["norm", "--phi", "power:p=2", "--input", "pos.csv"][..],
        &["norm", "--phi", "power:p=2", "--input", "hdr.csv"],
        &["norm", "--phi", "power:p=0.5", "--input", "hdr.csv"],
        &["norm", "--phi", "power:p=2", "--input", "missing.csv"],
        &["cex", "approx", "--eps", "-1"],
    ] {
        let out = run(&dir, args);
        assert_eq!(out.status.code(), Some(3), "{args:?}");
        assert_eq!(json(&out.stderr)["exit_code"], 3);
    }
}

#[test]
fn output_flag_writes_report_file() {
    let dir = workdir("cli-output");
    let out = run(&dir, &["delta2", "--phi", "exp", "--count", "5", "--output", "report.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let report = json(&std::fs::read(dir.join("report.json")).unwrap());
    assert_eq!(report["command"], "delta2");
}
