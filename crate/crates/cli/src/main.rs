//! `polc`: commit regions, prove and verify location claims, run scenarios.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pol_core::attestation::{Registry, Signature, SigningKey, TranscriptFile};
use pol_core::circuit::{synthesize, SynthContext, SynthOptions, Synthesis};
use pol_core::dsl::load_claim;
use pol_core::engine::{
    prove, prove_unchecked, verify, EngineError, MockBackend, ProofBundle, VerifierContext,
};
use pol_core::field::{Fp61, PallasFp, PrimeField};
use pol_core::grid::{
    hasher_for_id, CellRule, CommitmentFile, HexGrid, RegionCommitment, RegionFile,
};
use pol_core::harness::{export_scenario, run_batch, ScenarioConfig};
use pol_core::oracle::soundness_completeness_report;
use pol_core::slots::{LedgerSim, SlotClock, DEFAULT_SLOT_SECONDS};

const SCHEMAS: &str = "\
FILE FORMATS (JSON unless noted)

  region        {\"name\": str, \"ref_latitude\": deg,
                 \"vertices\": [[lon, lat], ...]}
  commitment    {\"root_hex\": hex32, \"cells\": [[q, r], ...],
                 \"resolution\": u8, \"hash_id\": str}
  claim         claim-language text, e.g.
                   claim alice in road-x during [2025-05-12T08:00:00Z, 2025-05-12T08:20:00Z]
                     gap<=60s samples>=34 nontransferable
                 or the JSON object {\"prover_id\", \"region\", \"start\", \"end\",
                 \"min_samples\", \"max_gap\", \"flags\", \"proximity_bound_m\"}
  transcript    {\"prover_pk_hex\": hex, \"resolution\"?: u8,
                 \"samples\": [{\"witness_id\", \"sig_hex\", \"db\", \"cell\": [q, r],
                 \"slot\", \"prover_xy\"?: [x, y]}]}
  registry      {\"witnesses\": [{\"witness_id\", \"pk_hex\", \"x\", \"y\"}],
                 \"provers\": [{\"prover_id\", \"pk_hex\"}]}
  ledger        JSON lines {\"slot\": u64, \"digest_hex\": hex32}
  key           hex secret key (1 byte test group, 32 bytes Pallas)
  bundle        {\"backend_id\", \"field\", \"public\": {\"root_hex\", \"s1\", \"s2\",
                 \"stmt_hash_hex\"}, \"blob_b64\", \"evidence\": {...}}
  scenario      a scenario object or an array of them; every key except
                \"preset\" is optional and defaults from the preset:
                 {\"preset\": \"retail|supply-chain|evoting|road-x\",
                  \"adversary\": \"none|teleport|outside-region|slot-shift|
                    forge-signature|replay-proof|transfer-proof|relay-delay|
                    unanchored-region\",
                  \"trust_model\", \"interaction\", \"precision_m\",
                  \"witness_count\", \"quorum\", \"relay_delay_m\", \"noise_m\",
                  \"nontransferable\", \"prover_profile\", \"field\", \"rng_seed\"}

EXIT STATUS
  0 accept or success, 1 reject, 2 usage or I/O error, 3 internal error";

#[derive(Parser)]
#[command(name = "polc", version, about = "Proof-of-location claim compiler", after_long_help = SCHEMAS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct ClockArgs {
    /// Ledger genesis, Unix seconds.
    #[arg(long, default_value_t = 0)]
    genesis: i64,
    /// Slot duration in seconds.
    #[arg(long, default_value_t = DEFAULT_SLOT_SECONDS)]
    slot_seconds: u64,
}

impl ClockArgs {
    fn clock(self) -> Result<SlotClock, CliError> {
        SlotClock::new(self.genesis, self.slot_seconds).map_err(usage)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    CenterInside,
    AnyOverlap,
}

#[derive(Subcommand)]
enum Command {
    /// Rasterize a region, commit to its cells and anchor the root.
    #[command(after_long_help = SCHEMAS)]
    Commit {
        region: PathBuf,
        #[arg(long)]
        resolution: u8,
        #[arg(long)]
        out: PathBuf,
        /// Merkle hash: poseidon3-fp61, poseidon3-pallas-fp or sha256.
        #[arg(long, default_value = "poseidon3-fp61")]
        hash: String,
        #[arg(long, value_enum, default_value_t = Rule::CenterInside)]
        rule: Rule,
        /// Ledger to append the anchor to; created when missing.
        #[arg(long)]
        ledger: Option<PathBuf>,
        /// Anchor slot; defaults to the ledger's latest slot, or 0.
        #[arg(long)]
        slot: Option<u64>,
    },
    /// Synthesize and prove a claim from a commitment and a transcript.
    #[command(after_long_help = SCHEMAS)]
    Prove {
        claim: PathBuf,
        commitment: PathBuf,
        transcript: PathBuf,
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Prover secret key file; needed for non-transferable claims.
        #[arg(long)]
        key: Option<PathBuf>,
        /// Present this binding signature (hex) instead of signing.
        #[arg(long)]
        present_signature: Option<String>,
        /// Skip the satisfaction check and emit the bundle regardless.
        #[arg(long)]
        unchecked: bool,
        #[command(flatten)]
        clock: ClockArgs,
    },
    /// Verify a proof bundle; prints `accept` or the reject label.
    #[command(after_long_help = SCHEMAS)]
    Verify {
        bundle: PathBuf,
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        ledger: PathBuf,
        /// Claim the verifier expects; the bundle's own claim otherwise.
        #[arg(long)]
        claim: Option<PathBuf>,
        /// Commitment the verifier expects the region root to match.
        #[arg(long)]
        commitment: Option<PathBuf>,
        #[command(flatten)]
        clock: ClockArgs,
    },
    /// Run scenarios end to end and report soundness and completeness.
    #[command(after_long_help = SCHEMAS)]
    Simulate {
        scenario: PathBuf,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        /// Base seed; overrides each scenario's rng_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Per-trial results as JSON lines; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Aggregate report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write the first scenario's input files into this directory.
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    Reject(String),
    Usage(anyhow::Error),
    Internal(anyhow::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Reject(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

fn usage<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Usage(e.into())
}

fn internal<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Internal(e.into())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(CliError::Usage)
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CliError::Usage)
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read(path)?)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(CliError::Usage)
}

fn load_registry(path: &Path) -> Result<Registry, CliError> {
    Registry::from_json(&read(path)?)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(CliError::Usage)
}

fn load_ledger(path: &Path) -> Result<LedgerSim, CliError> {
    let f = fs::File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(CliError::Usage)?;
    LedgerSim::read_jsonl(BufReader::new(f))
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(CliError::Usage)
}

fn load_commitment(path: &Path) -> Result<RegionCommitment, CliError> {
    let file: CommitmentFile = parse_json(path)?;
    file.to_commitment()
        .with_context(|| format!("rebuilding {}", path.display()))
        .map_err(CliError::Usage)
}

#[allow(clippy::too_many_arguments)]
fn cmd_commit(
    region: &Path,
    resolution: u8,
    out: &Path,
    hash: &str,
    rule: Rule,
    ledger: Option<&Path>,
    slot: Option<u64>,
) -> Result<(), CliError> {
    let file: RegionFile = parse_json(region)?;
    let polygon = file.to_polygon().map_err(usage)?;
    let grid = HexGrid::new(resolution).map_err(usage)?;
    let rule = match rule {
        Rule::CenterInside => CellRule::CenterInside,
        Rule::AnyOverlap => CellRule::AnyOverlap,
    };
    let cells = polygon.rasterize(&grid, rule).map_err(usage)?;
    let hasher = hasher_for_id(hash).map_err(usage)?;
    let commitment = RegionCommitment::build(cells, hasher.as_ref()).map_err(usage)?;
    let json = serde_json::to_string_pretty(&CommitmentFile::from(&commitment)).map_err(internal)?;
    write(out, &(json + "\n"))?;
    if let Some(path) = ledger {
        let mut l = if path.exists() {
            load_ledger(path)?
        } else {
            LedgerSim::new()
        };
        let slot = slot.unwrap_or_else(|| l.current_slot().unwrap_or(0));
        l.anchor(slot, commitment.root).map_err(usage)?;
        let mut buf = Vec::new();
        l.write_jsonl(&mut buf).map_err(internal)?;
        fs::write(path, buf)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(CliError::Usage)?;
    }
    println!("cells {}", commitment.len());
    println!("depth {}", commitment.depth);
    println!("root {}", hex::encode(commitment.root));
    Ok(())
}

struct ProveInputs<'a> {
    claim: pol_core::dsl::Claim,
    commitment: RegionCommitment,
    transcript: pol_core::attestation::Transcript,
    registry: Registry,
    clock: SlotClock,
    options: SynthOptions,
    unchecked: bool,
    out: &'a Path,
}

fn prove_in<F: PrimeField>(p: &ProveInputs<'_>) -> Result<(), CliError> {
    let ctx = SynthContext {
        clock: p.clock,
        registry: &p.registry,
        options: p.options,
    };
    let syn: Synthesis<F> =
        synthesize(&p.claim, &p.commitment, &p.transcript, &ctx).map_err(usage)?;
    let bundle = if p.unchecked {
        prove_unchecked(&syn, &p.claim, &p.transcript, &MockBackend)
    } else {
        match prove(&syn, &p.claim, &p.transcript, &MockBackend) {
            Ok(b) => b,
            Err(EngineError::Unsatisfied { index, label }) => {
                return Err(CliError::Reject(format!(
                    "{} (constraint {index} unsatisfied; refusing to prove)",
                    label.label()
                )))
            }
            Err(e) => return Err(internal(e)),
        }
    };
    write(p.out, &(bundle.to_json() + "\n"))?;
    println!("constraints {}", syn.cs.constraints.len());
    println!("samples {}", p.transcript.len());
    println!("statement {}", bundle.public.stmt_hash_hex);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_prove(
    claim: &Path,
    commitment: &Path,
    transcript: &Path,
    registry: &Path,
    out: &Path,
    key: Option<&Path>,
    present_signature: Option<&str>,
    unchecked: bool,
    clock: ClockArgs,
) -> Result<(), CliError> {
    let claim = load_claim(&read(claim)?).map_err(usage)?;
    let commitment = load_commitment(commitment)?;
    let file: TranscriptFile = parse_json(transcript)?;
    let mut t = file.to_transcript(commitment.resolution).map_err(usage)?;
    if let Some(path) = key {
        let sk = SigningKey::from_hex(&read(path)?).map_err(usage)?;
        if sk.public() != t.prover_pk {
            return Err(usage(anyhow!("key does not match the transcript's prover key")));
        }
        t.prover_sk = Some(sk);
    }
    let present_signature = present_signature
        .map(Signature::from_hex)
        .transpose()
        .map_err(usage)?;
    let inputs = ProveInputs {
        claim,
        transcript: t,
        registry: load_registry(registry)?,
        clock: clock.clock()?,
        options: SynthOptions {
            strict: !unchecked,
            present_signature,
        },
        unchecked,
        out,
        commitment,
    };
    let field = inputs.commitment.hash_id.strip_prefix("poseidon3-").unwrap_or("");
    match field {
        f if f == Fp61::FIELD_ID => prove_in::<Fp61>(&inputs),
        f if f == PallasFp::FIELD_ID => prove_in::<PallasFp>(&inputs),
        _ => Err(usage(anyhow!(
            "commitment hash {:?} has no circuit; use a poseidon3 commitment",
            inputs.commitment.hash_id
        ))),
    }
}

fn cmd_verify(
    bundle: &Path,
    registry: &Path,
    ledger: &Path,
    claim: Option<&Path>,
    commitment: Option<&Path>,
    clock: ClockArgs,
) -> Result<(), CliError> {
    let bundle = ProofBundle::from_json(&read(bundle)?)
        .with_context(|| format!("parsing {}", bundle.display()))
        .map_err(CliError::Usage)?;
    let registry = load_registry(registry)?;
    let ledger = load_ledger(ledger)?;
    let expected_claim = claim
        .map(|p| load_claim(&read(p)?).map_err(usage))
        .transpose()?;
    let expected_root = commitment
        .map(|p| load_commitment(p).map(|c| c.root))
        .transpose()?;
    let ctx = VerifierContext {
        registry: &registry,
        ledger: &ledger,
        clock: clock.clock()?,
        expected_claim: expected_claim.as_ref(),
        expected_root,
    };
    match verify(&bundle, &ctx) {
        pol_core::engine::Verdict::Accept => {
            println!("accept");
            Ok(())
        }
        pol_core::engine::Verdict::Reject(r) => {
            let detail = r.detail();
            if detail == r.label() {
                Err(CliError::Reject(r.label().to_string()))
            } else {
                Err(CliError::Reject(format!("{} ({detail})", r.label())))
            }
        }
    }
}

/// Fills the keys a scenario object leaves out from its preset.
fn scenario_configs(path: &Path) -> Result<Vec<ScenarioConfig>, CliError> {
    let value: serde_json::Value = parse_json(path)?;
    let items = match value {
        serde_json::Value::Array(v) => v,
        other => vec![other],
    };
    items
        .into_iter()
        .map(|item| {
            let obj = item
                .as_object()
                .ok_or_else(|| usage(anyhow!("scenario must be an object")))?;
            let preset = obj
                .get("preset")
                .cloned()
                .ok_or_else(|| usage(anyhow!("scenario lacks \"preset\"")))?;
            let preset = serde_json::from_value(preset).map_err(usage)?;
            let adversary = match obj.get("adversary") {
                Some(a) => serde_json::from_value(a.clone()).map_err(usage)?,
                None => pol_core::harness::Adversary::None,
            };
            let mut base = serde_json::to_value(ScenarioConfig::preset(preset, adversary, 0))
                .map_err(internal)?;
            let fields = base.as_object_mut().expect("config is an object");
            for (k, v) in obj {
                fields.insert(k.clone(), v.clone());
            }
            let cfg: ScenarioConfig = serde_json::from_value(base).map_err(usage)?;
            Ok(cfg)
        })
        .collect()
}

fn export(cfg: &ScenarioConfig, dir: &Path) -> Result<(), CliError> {
    let a = export_scenario(cfg).map_err(|e| usage(anyhow!(e)))?;
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(CliError::Usage)?;
    write(&dir.join("region.json"), &pretty(&a.region))?;
    write(&dir.join("claim.pol"), &(a.claim.clone() + "\n"))?;
    write(&dir.join("expected_claim.pol"), &(a.expected_claim.clone() + "\n"))?;
    write(&dir.join("transcript.json"), &pretty(&a.transcript))?;
    write(&dir.join("registry.json"), &(a.registry.clone() + "\n"))?;
    write(&dir.join("prover.key"), &(a.prover_key_hex.clone() + "\n"))?;
    let manifest = serde_json::json!({
        "resolution": a.resolution,
        "hash_id": a.hash_id,
        "anchor_slot": a.anchor_slot,
        "unchecked": a.unchecked,
        "present_signature_hex": a.present_signature_hex,
        "expected_label": cfg.expected_label(),
    });
    write(&dir.join("scenario.json"), &pretty(&manifest))?;
    Ok(())
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("value serializes") + "\n"
}

fn cmd_simulate(
    scenario: &Path,
    trials: usize,
    seed: Option<u64>,
    out: Option<&Path>,
    report: Option<&Path>,
    export_dir: Option<&Path>,
) -> Result<(), CliError> {
    let mut configs = scenario_configs(scenario)?;
    if let Some(s) = seed {
        for c in &mut configs {
            c.rng_seed = s;
        }
    }
    if let Some(dir) = export_dir {
        let first = configs
            .first()
            .ok_or_else(|| usage(anyhow!("no scenarios to export")))?;
        export(first, dir)?;
    }
    let results = run_batch(&configs, trials);
    let mut lines = String::new();
    for r in &results {
        lines.push_str(&r.to_json_line());
        lines.push('\n');
    }
    let rep = soundness_completeness_report(&results);
    match out {
        Some(p) => {
            write(p, &lines)?;
            print!("{}", rep.to_table());
        }
        None => {
            print!("{lines}");
            eprint!("{}", rep.to_table());
        }
    }
    if let Some(p) = report {
        write(p, &(rep.to_json() + "\n"))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Commit {
            region,
            resolution,
            out,
            hash,
            rule,
            ledger,
            slot,
        } => cmd_commit(&region, resolution, &out, &hash, rule, ledger.as_deref(), slot),
        Command::Prove {
            claim,
            commitment,
            transcript,
            registry,
            out,
            key,
            present_signature,
            unchecked,
            clock,
        } => cmd_prove(
            &claim,
            &commitment,
            &transcript,
            &registry,
            &out,
            key.as_deref(),
            present_signature.as_deref(),
            unchecked,
            clock,
        ),
        Command::Verify {
            bundle,
            registry,
            ledger,
            claim,
            commitment,
            clock,
        } => cmd_verify(
            &bundle,
            &registry,
            &ledger,
            claim.as_deref(),
            commitment.as_deref(),
            clock,
        ),
        Command::Simulate {
            scenario,
            trials,
            seed,
            out,
            report,
            export,
        } => cmd_simulate(
            &scenario,
            trials,
            seed,
            out.as_deref(),
            report.as_deref(),
            export.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.code();
            match e {
                CliError::Reject(label) => println!("reject: {label}"),
                CliError::Usage(e) => eprintln!("error: {e:#}"),
                CliError::Internal(e) => eprintln!("internal error: {e:#}"),
            }
            let _ = std::io::stdout().flush();
            ExitCode::from(code)
        }
    }
}
