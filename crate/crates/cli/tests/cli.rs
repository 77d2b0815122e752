use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mtssa_core::paillier::{self, PrivateKey, PublicKey};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn mtssa(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtssa"))
        .args(args)
        .env("MTSSA_OUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const DESK: &str = r#"{"region_side": 1000, "wsps": [{"macro": 2, "small": 2}, {"macro": 2, "small": 2}], "bands": [2, 4], "runs": 3, "seed": 11}"#;

#[test]
fn keygen_writes_a_working_key() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("k.json");
    let st = mtssa(&["keygen", "--bits", "256", "--seed", "3", "--out", out.to_str().unwrap()], dir.path());
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let pk: PublicKey = serde_json::from_value(v["public"].clone()).unwrap();
    let sk: PrivateKey = serde_json::from_value(v["private"].clone()).unwrap();
    assert_eq!(pk.bits(), 256);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let m: u64 = rng.gen();
        let c = paillier::encrypt_u64(&pk, m, &mut rng).unwrap();
        assert_eq!(paillier::decrypt(&sk, &c).unwrap(), m.into());
    }
}

#[test]
fn keygen_defaults_to_the_output_directory() {
    let dir = TempDir::new().unwrap();
    let st = mtssa(&["keygen", "--bits", "64", "--seed", "1"], dir.path());
    assert!(st.status.success());
    assert!(dir.path().join("key.json").exists());
}

#[test]
fn auction_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let sc = write(&dir, "s.json", DESK);
    let args = ["auction", "--scenario", &sc, "--seed", "7", "--bits", "256", "--bands", "2", "--mechanism", "all"];
    let a = mtssa(&args, dir.path());
    let b = mtssa(&args, dir.path());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    for name in ["csl:", "mtssa:", "mtssa-fl:"] {
        assert!(text.contains(name));
    }
}

#[test]
fn auction_secure_and_plaintext_agree() {
    let dir = TempDir::new().unwrap();
    let sc = write(&dir, "s.json", DESK);
    let run = |engine: &str| {
        let o = mtssa(
            &["auction", "--scenario", &sc, "--seed", "4", "--bits", "256", "--bands", "2", "--engine", engine, "--format", "json"],
            dir.path(),
        );
        assert!(o.status.success());
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v[0]["outcome"]["stations"].clone()
    };
    assert_eq!(run("secure"), run("plaintext"));
}

#[test]
fn auction_transcript_is_a_json_array() {
    let dir = TempDir::new().unwrap();
    let sc = write(&dir, "s.json", DESK);
    let t = dir.path().join("t.json");
    let o = mtssa(
        &["auction", "--scenario", &sc, "--bits", "128", "--bands", "2", "--transcript", t.to_str().unwrap()],
        dir.path(),
    );
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&t).unwrap()).unwrap();
    let rounds = v.as_array().unwrap();
    assert_eq!(rounds.len(), 8);
    let entries = rounds[0]["transcript"].as_array().unwrap();
    assert!(entries.iter().all(|e| e["payload_digest"].is_string() && e["step"].is_u64()));
}

#[test]
fn simulate_writes_csv_summary_and_plot() {
    let dir = TempDir::new().unwrap();
    let sc = write(&dir, "s.json", DESK);
    let out = dir.path().join("out/r.csv");
    let o = mtssa(&["simulate", "--scenario", &sc, "--out", out.to_str().unwrap(), "--jobs", "2"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "mechanism,num_bs,num_bands,run,utilization,revenue,satisfaction");
    assert_eq!(lines.len(), 1 + 3 * 3 * 2);
    assert!(dir.path().join("out/r.summary.json").exists());
    let plot: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/r.plot.json")).unwrap()).unwrap();
    assert_eq!(plot["revenue"]["mtssa/8 BSs"].as_array().unwrap().len(), 2);

    let rep = mtssa(&["report", "--input", out.to_str().unwrap()], dir.path());
    assert!(rep.status.success());
    let v: serde_json::Value = serde_json::from_slice(&rep.stdout).unwrap();
    assert_eq!(v["means"].as_array().unwrap().len(), 6);
}

#[test]
fn simulate_defaults_to_the_output_directory() {
    let dir = TempDir::new().unwrap();
    let sc = write(&dir, "s.json", DESK);
    let o = mtssa(&["simulate", "--scenario", &sc, "--runs", "1", "--mechanism", "mtssa"], dir.path());
    assert!(o.status.success());
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2);
}

#[test]
fn usage_errors_exit_1() {
    let dir = TempDir::new().unwrap();
    assert_eq!(mtssa(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(mtssa(&["simulate"], dir.path()).status.code(), Some(1));
    assert_eq!(mtssa(&["auction", "--scenario", "x", "--mechanism", "dutch"], dir.path()).status.code(), Some(1));
    assert_eq!(mtssa(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn validation_errors_exit_2_and_name_the_field() {
    let dir = TempDir::new().unwrap();
    let bad_f = write(&dir, "f.json", r#"{"region_side": 100, "wsps": [{"macro": 1, "small": 1}], "bands": 2, "F": 3}"#);
    let o = mtssa(&["auction", "--scenario", &bad_f], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`F`"));

    let outside = write(
        &dir,
        "st.json",
        r#"{"region_side": 100, "bands": 1, "stations": [{"id": 1, "wsp": 1, "kind": "macro", "x": 150, "y": 5, "marginals": [3]}]}"#,
    );
    let o = mtssa(&["simulate", "--scenario", &outside], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stations[0].x"));

    let o = mtssa(&["auction", "--scenario", "/nonexistent/s.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let garbage = write(&dir, "g.json", "{ not json");
    assert_eq!(mtssa(&["auction", "--scenario", &garbage], dir.path()).status.code(), Some(2));
}

#[test]
fn station_list_auction() {
    let dir = TempDir::new().unwrap();
    let sc = write(
        &dir,
        "st.json",
        r#"{"region_side": 100, "bands": 1, "stations": [
            {"id": 1, "wsp": 1, "kind": "macro", "x": 10, "y": 10, "marginals": [5]},
            {"id": 2, "wsp": 1, "kind": "macro", "x": 20, "y": 10, "marginals": [7]},
            {"id": 3, "wsp": 2, "kind": "macro", "x": 30, "y": 10, "marginals": [3]},
            {"id": 4, "wsp": 2, "kind": "macro", "x": 25, "y": 15, "marginals": [8]}]}"#,
    );
    let o = mtssa(&["auction", "--scenario", &sc, "--bits", "128", "--format", "json"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let stations = v[0]["outcome"]["stations"].as_object().unwrap();
    let holders: Vec<_> = stations.iter().filter(|(_, s)| !s["bands"].as_array().unwrap().is_empty()).collect();
    // all four stations conflict, so exactly one holds the band
    assert_eq!(holders.len(), 1);
}
