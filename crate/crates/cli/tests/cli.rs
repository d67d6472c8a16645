use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn xswap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xswap"))
        .args(args)
        .env_remove("XSWAP_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn happy_run_writes_identical_transcripts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    for out in [&a, &b] {
        let o = xswap(&["run", "--scenario", "happy", "--seed", "3", "--out", path(out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(summary["protocol"], "btc_xmr");
        assert_eq!(summary["oracle_pass"], true);
    }
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(!ta.is_empty());
    assert_eq!(ta, tb);
    for line in String::from_utf8(ta).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["tick"].is_u64() && v["kind"].is_string());
    }
}

#[test]
fn seed_comes_from_the_environment() {
    let run = |seed: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_xswap"))
            .args(["run", "--protocol", "xmr_btc", "--scenario", "happy"])
            .env("XSWAP_SEED", seed)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        (v["seed"].as_u64().unwrap(), v["transcript_digest"].as_str().unwrap().to_string())
    };
    let (s5, d5) = run("5");
    let (s6, d6) = run("6");
    assert_eq!((s5, s6), (5, 6));
    assert_ne!(d5, d6);
    let o = Command::new(env!("CARGO_BIN_EXE_xswap"))
        .args(["run", "--scenario", "happy"])
        .env("XSWAP_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn usage_errors_exit_one() {
    let o = xswap(&["run", "--scenario", "nonsense"]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("nonsense") && err.contains("alice_cheats"), "{err}");
    assert_eq!(code(&xswap(&["run", "--protocol", "btc_xmr", "--scenario", "alice_cheats"])), 1);
    assert_eq!(code(&xswap(&["run"])), 1);
    assert_eq!(code(&xswap(&["frobnicate"])), 1);
    assert_eq!(code(&xswap(&["verify-proof", "/nonexistent/proof.json"])), 1);
    assert_eq!(code(&xswap(&["--help"])), 0);
}

#[test]
fn config_file_runs_and_bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    fs::write(
        &good,
        r#"{"protocol": "xmr_btc", "scenario": "alice_cheats", "seed": 9,
            "faults": {"rules": [{"sender": "alice", "effect": "delay", "ticks": 1}]}}"#,
    )
    .unwrap();
    let o = xswap(&["run", "--config", path(&good)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["bob_state"], "emergency_refunded");

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"protocol": "xmr_btc", "scenario": "happy", "colour": 1}"#).unwrap();
    assert_eq!(code(&xswap(&["run", "--config", path(&bad)])), 1);
}

#[test]
fn failing_oracle_exits_two() {
    // Withheld mail stalls the swap, so the happy-path table cannot hold.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("stall.json");
    fs::write(
        &cfg,
        r#"{"protocol": "btc_xmr", "scenario": "happy",
            "faults": {"rules": [{"effect": "drop"}]}}"#,
    )
    .unwrap();
    let o = xswap(&["run", "--config", path(&cfg)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("oracle failed"));
}

#[test]
fn proofs_verify_and_tampering_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("proof.json");
    assert_eq!(code(&xswap(&["prove", "--seed", "4", "--out", path(&file)])), 0);
    let o = xswap(&["verify-proof", path(&file)]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "valid");

    let mut v: serde_json::Value = serde_json::from_slice(&fs::read(&file).unwrap()).unwrap();
    let mut proof = hex::decode(v["proof"].as_str().unwrap()).unwrap();
    proof[40] ^= 1;
    v["proof"] = hex::encode(&proof).into();
    fs::write(&file, v.to_string()).unwrap();
    let o = xswap(&["verify-proof", path(&file)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("invalid"));

    proof.pop();
    v["proof"] = hex::encode(&proof).into();
    fs::write(&file, v.to_string()).unwrap();
    assert_eq!(code(&xswap(&["verify-proof", path(&file)])), 2);

    fs::write(&file, "not json").unwrap();
    assert_eq!(code(&xswap(&["verify-proof", path(&file)])), 1);
}

#[test]
fn quick_selftest_passes() {
    let o = xswap(&["selftest", "--quick"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.lines().any(|l| l.starts_with("PASS")));
    assert!(!out.lines().any(|l| l.starts_with("FAIL")));
}
