//! End-to-end binary tests: argument handling, exit codes, file outputs.

use std::path::PathBuf;
use std::process::Command;

fn scratch_dir(label: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "pxbiharm-bin-{label}-{}-{}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .unwrap()
            .as_nanos()
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &std::path::Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

const GOOD: &str = r#"{
    "domain": {"dim": 1, "counts": [101], "extents": [1.0]},
    "exponents": {"p": "2.5", "q": "0.5", "r": "1.5"},
    "phi": {"tag": "power", "c": 1.0},
    "solve": {"lambdas": [0.5, 1.0]},
    "seed": 42
}"#;

#[test]
fn verify_and_solve_round_trip() {
    let dir = scratch_dir("roundtrip");
    let config = write_config(&dir, GOOD);
    let out = dir.join("out");

    let status = Command::new(env!("CARGO_BIN_EXE_pxbiharm"))
        .args(["verify", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("verify.json").exists());

    let status = Command::new(env!("CARGO_BIN_EXE_pxbiharm"))
        .args(["solve", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    for f in ["u0.json", "result.json", "trace.csv"] {
        assert!(out.join(f).exists(), "missing {f}");
    }

    let output = Command::new(env!("CARGO_BIN_EXE_pxbiharm"))
        .args(["norm", "--config"])
        .arg(&config)
        .arg("--field")
        .arg(out.join("u0.json"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.starts_with("norm "), "{text}");
    assert!(text.contains("\nmodular "), "{text}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = scratch_dir("exitcodes");

    // hypothesis failure -> 1
    let bad_math = write_config(
        &dir,
        r#"{
            "domain": {"dim": 1, "counts": [51], "extents": [1.0]},
            "exponents": {"p": "2.5", "q": "1.2", "r": "1.5"},
            "phi": {"tag": "power", "c": 1.0},
            "solve": {"lambda": 1.0}
        }"#,
    );
    let status = Command::new(env!("CARGO_BIN_EXE_pxbiharm"))
        .args(["verify", "--config"])
        .arg(&bad_math)
        .arg("--out")
        .arg(dir.join("out1"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // malformed config -> 2
    let malformed = dir.join("broken.json");
    std::fs::write(&malformed, "{not json").unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_pxbiharm"))
        .args(["verify", "--config"])
        .arg(&malformed)
        .arg("--out")
        .arg(dir.join("out2"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // missing required argument -> 2 (clap)
    let status = Command::new(env!("CARGO_BIN_EXE_pxbiharm"))
        .arg("verify")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_is_deterministic_across_processes() {
    let dir = scratch_dir("determinism");
    let config = write_config(&dir, GOOD);
    for sub in ["a", "b"] {
        let status = Command::new(env!("CARGO_BIN_EXE_pxbiharm"))
            .args(["sweep", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(dir.join(sub))
            .arg("--seed")
            .arg("42")
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    let a = std::fs::read(dir.join("a/sweep.csv")).unwrap();
    let b = std::fs::read(dir.join("b/sweep.csv")).unwrap();
    assert_eq!(a, b);
    std::fs::remove_dir_all(&dir).ok();
}
