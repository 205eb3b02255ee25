#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

pub fn polc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polc"))
}

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn run(args: &[&str]) -> Output {
    polc().args(args).output().expect("polc runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub struct Manifest {
    pub resolution: u8,
    pub anchor_slot: u64,
    pub unchecked: bool,
    pub present_signature_hex: Option<String>,
    pub expected_label: String,
}

pub fn manifest(dir: &Path) -> Manifest {
    let text = std::fs::read_to_string(dir.join("scenario.json")).expect("manifest");
    let v: serde_json::Value = serde_json::from_str(&text).expect("manifest json");
    Manifest {
        resolution: v["resolution"].as_u64().expect("resolution") as u8,
        anchor_slot: v["anchor_slot"].as_u64().expect("anchor_slot"),
        unchecked: v["unchecked"].as_bool().expect("unchecked"),
        present_signature_hex: v["present_signature_hex"].as_str().map(str::to_string),
        expected_label: v["expected_label"].as_str().expect("label").to_string(),
    }
}

pub struct RoundTrip {
    pub commit: Output,
    pub prove: Output,
    pub verify: Output,
    pub verify_time: Duration,
    pub bundle: PathBuf,
    pub commitment: PathBuf,
    pub ledger: PathBuf,
}

impl RoundTrip {
    pub fn verdict(&self) -> String {
        let out = stdout(&self.verify);
        let line = out.lines().next().unwrap_or("").to_string();
        line.strip_prefix("reject: ")
            .map(|l| l.split(' ').next().unwrap_or("").to_string())
            .unwrap_or(line)
    }
}

/// commit, prove, verify over one exported fixture directory, writing into
/// `work`.
pub fn round_trip(dir: &Path, work: &Path) -> RoundTrip {
    let m = manifest(dir);
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let commitment = work.join("commitment.json");
    let ledger = work.join("ledger.jsonl");
    let bundle = work.join("bundle.json");
    let _ = std::fs::remove_file(&ledger);
    let w = |p: &Path| p.to_string_lossy().into_owned();
    let res = m.resolution.to_string();
    let slot = m.anchor_slot.to_string();
    let commit = run(&[
        "commit",
        &p("region.json"),
        "--resolution",
        &res,
        "--out",
        &w(&commitment),
        "--ledger",
        &w(&ledger),
        "--slot",
        &slot,
    ]);
    let mut prove_args = vec![
        "prove".to_string(),
        p("claim.pol"),
        w(&commitment),
        p("transcript.json"),
        "--registry".into(),
        p("registry.json"),
        "--key".into(),
        p("prover.key"),
        "--out".into(),
        w(&bundle),
    ];
    if m.unchecked {
        prove_args.push("--unchecked".into());
    }
    if let Some(sig) = &m.present_signature_hex {
        prove_args.push("--present-signature".into());
        prove_args.push(sig.clone());
    }
    let prove = polc().args(&prove_args).output().expect("polc runs");
    let start = Instant::now();
    let verify = run(&[
        "verify",
        &w(&bundle),
        "--registry",
        &p("registry.json"),
        "--ledger",
        &w(&ledger),
        "--claim",
        &p("expected_claim.pol"),
        "--commitment",
        &w(&commitment),
    ]);
    RoundTrip {
        commit,
        prove,
        verify,
        verify_time: start.elapsed(),
        bundle,
        commitment,
        ledger,
    }
}

pub fn fixture_dirs() -> Vec<PathBuf> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(fixtures())
        .expect("fixtures dir")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("scenario.json").exists())
        .collect();
    dirs.sort();
    dirs
}

pub fn sha256_file(path: &Path) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(std::fs::read(path).expect("file exists")))
}
