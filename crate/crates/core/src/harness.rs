//! End-to-end scenarios: geometry, witnesses, attestation, proving,
//! verification and ground truth, honest or under one of several attacks.
//!
//! | preset       | precision | witnesses | trust                  | interaction     |
//! |--------------|-----------|-----------|------------------------|-----------------|
//! | retail       | 150 m     | 1         | centralized anchor     | non-interactive |
//! | supply-chain | 50 m      | 2         | partially distributed  | non-interactive |
//! | evoting      | 8 m       | 3         | decentralized quorum   | interactive     |
//! | road-x       | 30 m      | 4         | partially distributed  | non-interactive |
//!
//! Relay boundary: distance bounding measures at least the physical
//! distance, so a relayed prover passes C2 only when its real distance plus
//! the relay delay stays within the proximity bound. Relayed provers here
//! stand at the neighbouring site, three cell diameters beyond the region,
//! which already exceeds the bound (at most twice a cell diameter) of every
//! interactive configuration.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attestation::{
    attest, keygen, sign_sample, AttestationSample, ChannelModel, GroupProfile, PublicKey,
    Registry, Signature, SigningKey, TestGroup, Transcript, TranscriptFile, WitnessIdentity,
};
use crate::attestation::SchnorrGroup;
use crate::circuit::{synthesize, SynthContext, SynthOptions, Synthesis};
use crate::dsl::{print_claim, Claim, ClaimFlags, RegionRef};
use crate::engine::{
    prove, prove_unchecked, statement_hash, verify, MockBackend, ProofBundle, VerifierContext,
};
use crate::field::{Fp61, PallasFp, PrimeField};
use crate::grid::{
    cell_diameter, resolution_for_precision, CellId, CellRule, FieldHasher, HexGrid, MerkleHasher,
    Polygon, RegionCommitment, RegionFile,
};
use crate::hash::sha256;
use crate::oracle::{eval_claim, Trajectory, TrajectoryPoint};
use crate::slots::{LedgerSim, SlotClock};

/// 2025-05-12T08:00:00Z.
pub const DEFAULT_START: i64 = 1_747_036_800;

/// Reference latitude of the exported region files.
pub const REF_LATITUDE: f64 = 48.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Retail,
    SupplyChain,
    Evoting,
    RoadX,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Retail, Preset::SupplyChain, Preset::Evoting, Preset::RoadX];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Retail => "retail",
            Preset::SupplyChain => "supply-chain",
            Preset::Evoting => "evoting",
            Preset::RoadX => "road-x",
        }
    }

    pub fn region_name(self) -> &'static str {
        match self {
            Preset::Retail => "Store",
            Preset::SupplyChain => "Warehouse",
            Preset::Evoting => "PollingStation",
            Preset::RoadX => "RoadX",
        }
    }

    /// Region size in cell diameters.
    fn extent(self) -> (f64, f64) {
        match self {
            Preset::Retail | Preset::SupplyChain => (6.0, 4.0),
            Preset::Evoting => (4.0, 3.0),
            Preset::RoadX => (40.0, 2.0),
        }
    }

    fn timeline(self) -> Timeline {
        match self {
            Preset::Retail => Timeline::new(600, 30, 60, 0.75),
            Preset::SupplyChain => Timeline::new(600, 40, 90, 0.66),
            Preset::Evoting => Timeline::new(300, 30, 60, 0.66),
            Preset::RoadX => Timeline::new(1200, 30, 60, 1.0),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrustModel {
    CentralizedAnchor,
    PartiallyDistributed,
    DecentralizedQuorum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interaction {
    Interactive,
    NonInteractive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Adversary {
    None,
    Teleport,
    OutsideRegion,
    SlotShift,
    ForgeSignature,
    ReplayProof,
    TransferProof,
    RelayDelay,
    UnanchoredRegion,
}

impl Adversary {
    pub const ATTACKS: [Adversary; 8] = [
        Adversary::Teleport,
        Adversary::OutsideRegion,
        Adversary::SlotShift,
        Adversary::ForgeSignature,
        Adversary::ReplayProof,
        Adversary::TransferProof,
        Adversary::RelayDelay,
        Adversary::UnanchoredRegion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Adversary::None => "none",
            Adversary::Teleport => "teleport",
            Adversary::OutsideRegion => "outside-region",
            Adversary::SlotShift => "slot-shift",
            Adversary::ForgeSignature => "forge-signature",
            Adversary::ReplayProof => "replay-proof",
            Adversary::TransferProof => "transfer-proof",
            Adversary::RelayDelay => "relay-delay",
            Adversary::UnanchoredRegion => "unanchored-region",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldChoice {
    #[default]
    #[serde(rename = "fp61")]
    Fp61,
    #[serde(rename = "pallas-fp")]
    PallasFp,
}

fn default_relay_delay() -> f64 {
    20.0
}

fn default_true() -> bool {
    true
}

fn default_prover_profile() -> GroupProfile {
    GroupProfile::Test
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub preset: Preset,
    pub trust_model: TrustModel,
    pub interaction: Interaction,
    pub precision_m: f64,
    pub witness_count: usize,
    pub adversary: Adversary,
    pub rng_seed: u64,
    /// Witnesses attesting each tick; all of them when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quorum: Option<usize>,
    #[serde(default = "default_relay_delay")]
    pub relay_delay_m: f64,
    /// Upper bound of the honest one-sided distance-bounding noise.
    #[serde(default)]
    pub noise_m: f64,
    #[serde(default = "default_true")]
    pub nontransferable: bool,
    #[serde(default = "default_prover_profile")]
    pub prover_profile: GroupProfile,
    #[serde(default)]
    pub field: FieldChoice,
}

impl ScenarioConfig {
    pub fn preset(preset: Preset, adversary: Adversary, rng_seed: u64) -> Self {
        let (trust_model, interaction, precision_m, witness_count) = match preset {
            Preset::Retail => (TrustModel::CentralizedAnchor, Interaction::NonInteractive, 150.0, 1),
            Preset::SupplyChain => {
                (TrustModel::PartiallyDistributed, Interaction::NonInteractive, 50.0, 2)
            }
            Preset::Evoting => (TrustModel::DecentralizedQuorum, Interaction::Interactive, 8.0, 3),
            Preset::RoadX => (TrustModel::PartiallyDistributed, Interaction::NonInteractive, 30.0, 4),
        };
        ScenarioConfig {
            preset,
            trust_model,
            interaction,
            precision_m,
            witness_count,
            adversary,
            rng_seed,
            quorum: None,
            relay_delay_m: default_relay_delay(),
            noise_m: 0.0,
            nontransferable: true,
            prover_profile: GroupProfile::Test,
            field: FieldChoice::Fp61,
        }
    }

    /// Witnesses attesting each tick. Road-X and centralized deployments use
    /// the single nearest witness by default.
    pub fn effective_quorum(&self) -> usize {
        self.quorum.unwrap_or(match (self.trust_model, self.preset) {
            (TrustModel::CentralizedAnchor, _) | (_, Preset::RoadX) => 1,
            _ => self.witness_count,
        })
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.witness_count == 0 || self.witness_count > 16 {
            return Err("witness_count must be in 1..=16".into());
        }
        if !(self.precision_m.is_finite() && self.precision_m > 0.0 && self.precision_m <= 10_000.0)
        {
            return Err("precision_m must be in (0, 10000]".into());
        }
        let q = self.effective_quorum();
        if q == 0 || q > self.witness_count {
            return Err("quorum must be in 1..=witness_count".into());
        }
        if !(self.noise_m.is_finite() && self.noise_m >= 0.0) {
            return Err("noise_m must be non-negative".into());
        }
        if !(self.relay_delay_m.is_finite() && self.relay_delay_m >= 0.0) {
            return Err("relay_delay_m must be non-negative".into());
        }
        match self.adversary {
            Adversary::RelayDelay if self.interaction == Interaction::NonInteractive => {
                Err("relay-delay needs an interactive scenario; without distance bounding a relay is indistinguishable from presence".into())
            }
            Adversary::TransferProof if !self.nontransferable => {
                Err("transfer-proof needs a non-transferable claim".into())
            }
            _ => Ok(()),
        }
    }

    /// Verdict label an attack is expected to produce; `accept` when honest.
    pub fn expected_label(&self) -> &'static str {
        match self.adversary {
            Adversary::None => "accept",
            Adversary::Teleport => "C5",
            Adversary::OutsideRegion => "C3",
            Adversary::SlotShift => "C4",
            Adversary::ForgeSignature => "C1-native",
            Adversary::ReplayProof => "statement-hash",
            Adversary::TransferProof => {
                if self.prover_profile == GroupProfile::Test && self.field == FieldChoice::Fp61 {
                    "C7"
                } else {
                    "schnorr-binding"
                }
            }
            Adversary::RelayDelay => "C2",
            Adversary::UnanchoredRegion => "root-not-anchored",
        }
    }

    fn proximity_bound(&self) -> Option<u32> {
        (self.interaction == Interaction::Interactive).then(|| self.precision_m.ceil() as u32)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub preset: Preset,
    pub adversary: Adversary,
    pub seed: u64,
    pub ground_truth: bool,
    /// `accept` or the reject label.
    pub verdict: String,
    /// Reject label, or `error: ...` when the pipeline failed before
    /// verification. Absent on accept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_label: Option<String>,
    pub samples: usize,
    pub constraints: usize,
    pub root_hex: String,
    /// SHA-256 of the bundle JSON; empty when no bundle was produced.
    pub bundle_sha256: String,
}

impl ScenarioResult {
    pub fn id(&self) -> String {
        format!("{}/{}/{}", self.preset, self.adversary.name(), self.seed)
    }

    pub fn label_matches(&self) -> bool {
        match &self.expected_label {
            Some(l) => *l == self.verdict,
            None => self.verdict == "accept",
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("result serializes")
    }
}

struct Timeline {
    length: i64,
    cadence: i64,
    max_gap: u64,
    coverage: f64,
}

impl Timeline {
    fn new(length: i64, cadence: i64, max_gap: u64, coverage: f64) -> Self {
        Timeline {
            length,
            cadence,
            max_gap,
            coverage,
        }
    }

    fn ticks(&self, start: i64) -> Vec<i64> {
        (0..self.length / self.cadence)
            .map(|i| start + self.cadence / 2 + i * self.cadence)
            .collect()
    }
}

/// Everything fixed before any prover acts.
struct World {
    region_file: RegionFile,
    anchor_slot: u64,
    grid: HexGrid,
    clock: SlotClock,
    cells: Vec<CellId>,
    interior: Vec<CellId>,
    width: f64,
    height: f64,
    registry: Registry,
    ledger: LedgerSim,
    witnesses: Vec<WitnessIdentity>,
    outside_witness: WitnessIdentity,
    alice: SigningKey,
    mallory: SigningKey,
    claim: Claim,
    ticks: Vec<i64>,
}

const ALICE: &str = "alice";
const MALLORY: &str = "mallory";

fn round_xy((x, y): (f64, f64)) -> (i64, i64) {
    (x.round() as i64, y.round() as i64)
}

impl World {
    fn in_region(&self, p: (i64, i64)) -> bool {
        self.cells
            .binary_search(&self.grid.locate(p.0 as f64, p.1 as f64))
            .is_ok()
    }

    fn hub(&self) -> CellId {
        hub_cell(&self.grid, &self.interior, self.width, self.height)
    }

    fn snap(&self, p: (i64, i64), fallback: CellId) -> (i64, i64) {
        if self.in_region(p) {
            p
        } else {
            round_xy(self.grid.center(fallback))
        }
    }
}

/// Interior cell nearest the middle of the region.
fn hub_cell(grid: &HexGrid, interior: &[CellId], width: f64, height: f64) -> CellId {
    let d = |c: &CellId| {
        let (x, y) = grid.center(*c);
        (x - width / 2.0).hypot(y - height / 2.0)
    };
    *interior
        .iter()
        .min_by(|a, b| d(a).total_cmp(&d(b)))
        .expect("region has cells")
}

fn field_hasher_id(field: FieldChoice) -> Box<dyn MerkleHasher> {
    match field {
        FieldChoice::Fp61 => Box::new(FieldHasher::<Fp61>::new()),
        FieldChoice::PallasFp => Box::new(FieldHasher::<PallasFp>::new()),
    }
}

fn commit(cells: Vec<CellId>, field: FieldChoice) -> Result<RegionCommitment, String> {
    RegionCommitment::build(cells, field_hasher_id(field).as_ref()).map_err(|e| e.to_string())
}

fn build_world(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Result<World, String> {
    let res = resolution_for_precision(cfg.precision_m);
    let grid = HexGrid::new(res).map_err(|e| e.to_string())?;
    let diam = cell_diameter(res);
    let (cols, rows) = cfg.preset.extent();
    let (width, height) = (cols * diam, rows * diam);
    let rect = Polygon::rect(0.0, 0.0, width, height).map_err(|e| e.to_string())?;
    let region_file = RegionFile::from_planar(cfg.preset.region_name(), REF_LATITUDE, &rect);
    let poly = region_file.to_polygon().map_err(|e| e.to_string())?;
    let cells = poly
        .rasterize(&grid, CellRule::CenterInside)
        .map_err(|e| e.to_string())?;
    let interior: Vec<CellId> = cells
        .iter()
        .copied()
        .filter(|c| c.neighbors().iter().all(|n| cells.binary_search(n).is_ok()))
        .collect();
    let interior = if interior.is_empty() {
        cells.clone()
    } else {
        interior
    };
    let clock = SlotClock::default();

    let base = cfg.rng_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut registry = Registry::new();
    let mut world_witnesses = Vec::new();
    let positions: Vec<(i64, i64)> = match cfg.interaction {
        Interaction::Interactive => {
            let bound = cfg.proximity_bound().unwrap_or(1) as f64;
            let spread = (bound / 4.0).floor() as i64;
            let hub = hub_cell(&grid, &interior, width, height);
            let (hx, hy) = round_xy(grid.center(hub));
            (0..cfg.witness_count)
                .map(|_| {
                    let p = (
                        hx + rng.gen_range(-spread..=spread),
                        hy + rng.gen_range(-spread..=spread),
                    );
                    if cells.binary_search(&grid.locate(p.0 as f64, p.1 as f64)).is_ok() {
                        p
                    } else {
                        (hx, hy)
                    }
                })
                .collect()
        }
        Interaction::NonInteractive if cfg.preset == Preset::RoadX => {
            let mut along = interior.clone();
            along.sort_by(|a, b| grid.center(*a).0.total_cmp(&grid.center(*b).0));
            (0..cfg.witness_count)
                .map(|i| {
                    let idx = ((2 * i + 1) * along.len()) / (2 * cfg.witness_count);
                    round_xy(grid.center(along[idx.min(along.len() - 1)]))
                })
                .collect()
        }
        Interaction::NonInteractive => (0..cfg.witness_count)
            .map(|_| round_xy(grid.center(interior[rng.gen_range(0..interior.len())])))
            .collect(),
    };
    for (i, pos) in positions.into_iter().enumerate() {
        let key = keygen(base ^ (1000 + i as u64), GroupProfile::Pallas);
        let w = WitnessIdentity::new(&format!("w{i}"), key, pos, &grid);
        registry
            .add_witness(&w.witness_id, w.public(), pos)
            .map_err(|e| e.to_string())?;
        world_witnesses.push(w);
    }
    let outside_pos = round_xy((width + 3.0 * diam, height / 2.0));
    let outside_witness = WitnessIdentity::new(
        "wx",
        keygen(base ^ 999, GroupProfile::Pallas),
        outside_pos,
        &grid,
    );
    registry
        .add_witness("wx", outside_witness.public(), outside_pos)
        .map_err(|e| e.to_string())?;

    let timeline = cfg.preset.timeline();
    let start = DEFAULT_START;
    let end = start + timeline.length;
    let ticks = timeline.ticks(start);
    // Coverage counts distinct ticks so that attestation multiplicity never
    // stands in for presence.
    let min_samples = ((ticks.len() as f64) * timeline.coverage).ceil() as u64;
    let claim = Claim {
        prover_id: ALICE.into(),
        region: RegionRef::Named(cfg.preset.region_name().into()),
        start,
        end,
        min_samples: min_samples.max(1),
        max_gap: timeline.max_gap,
        flags: ClaimFlags {
            require_proximity: cfg.interaction == Interaction::Interactive,
            require_nontransferability: cfg.nontransferable,
        },
        proximity_bound_m: cfg.proximity_bound(),
    };

    let commitment = commit(cells.clone(), cfg.field)?;
    let s1 = clock.slot_of(start).map_err(|e| e.to_string())?;
    let s2 = clock.slot_of(end).map_err(|e| e.to_string())?;
    let stmt = statement_hash(&commitment.root, s1, s2);
    let alice = keygen(base ^ 1, cfg.prover_profile);
    let mallory = (2..)
        .map(|i| keygen(base ^ i, cfg.prover_profile))
        .find(|k| k.public() != alice.public() && !nonce_coincides(k, &alice.sign(&stmt), &stmt))
        .expect("key search terminates");
    registry
        .add_prover(ALICE, alice.public())
        .map_err(|e| e.to_string())?;
    registry
        .add_prover(MALLORY, mallory.public())
        .map_err(|e| e.to_string())?;

    let mut ledger = LedgerSim::new();
    ledger
        .anchor(s1.saturating_sub(10), commitment.root)
        .map_err(|e| e.to_string())?;

    Ok(World {
        region_file,
        anchor_slot: s1.saturating_sub(10),
        grid,
        clock,
        cells,
        interior,
        width,
        height,
        registry,
        ledger,
        witnesses: world_witnesses,
        outside_witness,
        alice,
        mallory,
        claim,
        ticks,
    })
}

/// One tick of an honest run: where the prover was and who attested.
struct Tick {
    time: i64,
    position: (i64, i64),
    attesters: Vec<usize>,
}

fn honest_ticks(cfg: &ScenarioConfig, w: &World, rng: &mut ChaCha8Rng) -> Vec<Tick> {
    let quorum = cfg.effective_quorum();
    let n = w.witnesses.len();
    let hub = w.hub();
    match cfg.interaction {
        Interaction::Interactive => {
            let bound = cfg.proximity_bound().unwrap_or(1) as f64;
            let spread = (bound / 4.0).floor() as i64;
            let (hx, hy) = round_xy(w.grid.center(hub));
            w.ticks
                .iter()
                .enumerate()
                .map(|(i, &time)| {
                    let p = (
                        hx + rng.gen_range(-spread..=spread),
                        hy + rng.gen_range(-spread..=spread),
                    );
                    Tick {
                        time,
                        position: w.snap(p, hub),
                        attesters: (0..quorum).map(|k| (i + k) % n).collect(),
                    }
                })
                .collect()
        }
        Interaction::NonInteractive => {
            let (a, b) = if cfg.preset == Preset::RoadX {
                let xs = |c: &&CellId| w.grid.center(**c).0;
                let west = w.interior.iter().min_by(|p, q| xs(p).total_cmp(&xs(q)));
                let east = w.interior.iter().max_by(|p, q| xs(p).total_cmp(&xs(q)));
                (*west.unwrap(), *east.unwrap())
            } else {
                let pick = |rng: &mut ChaCha8Rng| w.interior[rng.gen_range(0..w.interior.len())];
                (pick(rng), pick(rng))
            };
            let (ax, ay) = w.grid.center(a);
            let (bx, by) = w.grid.center(b);
            let jitter = (w.grid.edge_length() / 4.0).floor() as i64;
            let steps = (w.ticks.len().max(2) - 1) as f64;
            w.ticks
                .iter()
                .enumerate()
                .map(|(i, &time)| {
                    let f = i as f64 / steps;
                    let p = round_xy((ax + (bx - ax) * f, ay + (by - ay) * f));
                    let p = (
                        p.0 + rng.gen_range(-jitter..=jitter),
                        p.1 + rng.gen_range(-jitter..=jitter),
                    );
                    let p = w.snap(p, a);
                    let mut order: Vec<usize> = (0..n).collect();
                    order.sort_by(|&x, &y| {
                        let d = |k: usize| {
                            let q = w.witnesses[k].position;
                            ((q.0 - p.0) as f64).hypot((q.1 - p.1) as f64)
                        };
                        d(x).total_cmp(&d(y)).then(x.cmp(&y))
                    });
                    order.truncate(quorum);
                    Tick {
                        time,
                        position: p,
                        attesters: order,
                    }
                })
                .collect()
        }
    }
}

fn channel(cfg: &ScenarioConfig) -> ChannelModel {
    if cfg.noise_m > 0.0 {
        ChannelModel::Honest {
            epsilon_m: cfg.noise_m,
        }
    } else {
        ChannelModel::Noiseless
    }
}

fn far_away(w: &World) -> (i64, i64) {
    round_xy((-20.0 * w.width.max(100.0), -20.0 * w.height.max(100.0)))
}

/// What the adversary (or honest prover) hands to the pipeline.
struct Run {
    trajectory: Vec<TrajectoryPoint>,
    samples: Vec<AttestationSample>,
    claimed_prover: &'static str,
    expected_claim: Claim,
    strict: bool,
    commitment_cells: Vec<CellId>,
    transfer: bool,
}

fn point(time: i64, p: (i64, i64)) -> TrajectoryPoint {
    TrajectoryPoint {
        t: time,
        x: p.0 as f64,
        y: p.1 as f64,
    }
}

fn attest_tick(
    cfg: &ScenarioConfig,
    w: &World,
    tick: &Tick,
    witness: &WitnessIdentity,
    prover_pk: &PublicKey,
    channel: ChannelModel,
    rng: &mut ChaCha8Rng,
) -> Result<AttestationSample, String> {
    let mut s = attest(witness, prover_pk, tick.position, &w.clock, tick.time, channel, rng)
        .map_err(|e| e.to_string())?;
    if cfg.interaction == Interaction::NonInteractive {
        s.prover_xy = None;
    }
    Ok(s)
}

fn plan(cfg: &ScenarioConfig, w: &World, rng: &mut ChaCha8Rng) -> Result<Run, String> {
    let ticks = honest_ticks(cfg, w, rng);
    let pk = w.alice.public();
    let ch = channel(cfg);
    let mut trajectory = Vec::new();
    let mut samples = Vec::new();
    let mut run = |ticks: &[Tick], rng: &mut ChaCha8Rng| -> Result<(), String> {
        for t in ticks {
            trajectory.push(point(t.time, t.position));
            for &k in &t.attesters {
                samples.push(attest_tick(cfg, w, t, &w.witnesses[k], &pk, ch, rng)?);
            }
        }
        Ok(())
    };
    let mid = ticks.len() / 2;
    let mut out = Run {
        trajectory: Vec::new(),
        samples: Vec::new(),
        claimed_prover: ALICE,
        expected_claim: w.claim.clone(),
        strict: cfg.adversary == Adversary::None,
        commitment_cells: w.cells.clone(),
        transfer: false,
    };
    match cfg.adversary {
        Adversary::None | Adversary::ReplayProof | Adversary::TransferProof => {
            run(&ticks, rng)?;
            if cfg.adversary == Adversary::ReplayProof {
                out.expected_claim.start += 3600;
                out.expected_claim.end += 3600;
            }
            if cfg.adversary == Adversary::TransferProof {
                out.claimed_prover = MALLORY;
                out.expected_claim.prover_id = MALLORY.into();
                out.transfer = true;
                // Mallory herself never left home.
                trajectory = w.ticks.iter().map(|&t| point(t, far_away(w))).collect();
            }
        }
        Adversary::Teleport => {
            let limit = w.clock.max_gap_slots(w.claim.max_gap);
            let slot = |t: i64| w.clock.slot_of(t).unwrap_or(0);
            let mut k = 1;
            while mid + k < ticks.len() && slot(ticks[mid + k].time) - slot(ticks[mid - 1].time) <= limit {
                k += 1;
            }
            let skipped = mid..mid + k;
            run(&ticks[..mid], rng)?;
            run(&ticks[mid + k..], rng)?;
            for t in &ticks[skipped] {
                trajectory.push(point(t.time, far_away(w)));
            }
            trajectory.sort_by_key(|p| p.t);
        }
        Adversary::OutsideRegion | Adversary::UnanchoredRegion => {
            run(&ticks[..mid], rng)?;
            run(&ticks[mid + 1..], rng)?;
            let wx = &w.outside_witness;
            let pos = wx.position;
            let t = Tick {
                time: ticks[mid].time,
                position: pos,
                attesters: Vec::new(),
            };
            trajectory.push(point(t.time, pos));
            samples.push(attest_tick(cfg, w, &t, wx, &pk, ch, rng)?);
            trajectory.sort_by_key(|p| p.t);
            if cfg.adversary == Adversary::UnanchoredRegion {
                out.strict = true;
                let mut cells = w.cells.clone();
                cells.push(wx.cell);
                cells.sort();
                cells.dedup();
                out.commitment_cells = cells;
            }
        }
        Adversary::SlotShift => {
            let shift = w.claim.end - w.claim.start + 600;
            let shifted: Vec<Tick> = ticks
                .iter()
                .map(|t| Tick {
                    time: t.time - shift,
                    position: t.position,
                    attesters: t.attesters.clone(),
                })
                .collect();
            run(&shifted, rng)?;
            // During the claimed interval the prover was elsewhere.
            for t in &w.ticks {
                trajectory.push(point(*t, far_away(w)));
            }
        }
        Adversary::ForgeSignature => {
            run(&ticks[..mid], rng)?;
            run(&ticks[mid + 1..], rng)?;
            let t = &ticks[mid];
            trajectory.push(point(t.time, far_away(w)));
            trajectory.sort_by_key(|p| p.t);
            let target = &w.witnesses[t.attesters[0]];
            let forger = WitnessIdentity {
                key: keygen(cfg.rng_seed ^ 0xF0F0, GroupProfile::Pallas),
                ..target.clone()
            };
            let slot = w.clock.slot_of(t.time).map_err(|e| e.to_string())?;
            let xy = (cfg.interaction == Interaction::Interactive).then_some(t.position);
            let honest_db = {
                let q = target.position;
                ((q.0 - t.position.0) as f64).hypot((q.1 - t.position.1) as f64).ceil() as u32
            };
            samples.push(sign_sample(&forger, &pk, honest_db, slot, xy));
        }
        Adversary::RelayDelay => {
            let relay = ChannelModel::Relay {
                delay_m: cfg.relay_delay_m,
            };
            // The prover stands at the neighbouring site; an accomplice near
            // the witnesses relays the exchange and reports the honest spot.
            let real = w.outside_witness.position;
            for t in &ticks {
                let at_real = Tick {
                    time: t.time,
                    position: real,
                    attesters: Vec::new(),
                };
                for &k in &t.attesters {
                    let mut s = attest_tick(cfg, w, &at_real, &w.witnesses[k], &pk, relay, rng)?;
                    s.prover_xy = Some(t.position);
                    samples.push(s);
                }
                trajectory.push(point(t.time, real));
            }
        }
    }
    out.trajectory = trajectory;
    out.samples = samples;
    Ok(out)
}

fn prove_run<F: PrimeField>(
    cfg: &ScenarioConfig,
    w: &World,
    run: &Run,
) -> Result<(ProofBundle, usize, [u8; 32]), String> {
    let commitment = commit(run.commitment_cells.clone(), cfg.field)?;
    let strict_ctx = SynthContext {
        clock: w.clock,
        registry: &w.registry,
        options: SynthOptions {
            strict: run.strict,
            ..SynthOptions::default()
        },
    };
    let alice_transcript = Transcript::with_secret(w.alice, run.samples.clone());
    if !run.transfer {
        let syn: Synthesis<F> = synthesize(&w.claim, &commitment, &alice_transcript, &strict_ctx)
            .map_err(|e| e.to_string())?;
        let n = syn.cs.constraints.len();
        let bundle = if run.strict {
            prove(&syn, &w.claim, &alice_transcript, &MockBackend).map_err(|e| e.to_string())?
        } else {
            prove_unchecked(&syn, &w.claim, &alice_transcript, &MockBackend)
        };
        return Ok((bundle, n, commitment.root));
    }
    // Mallory carries Alice's binding signature over to her own key.
    let alice_sig = alice_binding(w, &commitment)?;
    let mallory = w.mallory;
    let claim = run.expected_claim.clone();
    let transcript = Transcript::with_secret(mallory, run.samples.clone());
    let ctx = SynthContext {
        clock: w.clock,
        registry: &w.registry,
        options: SynthOptions {
            strict: false,
            present_signature: Some(alice_sig),
        },
    };
    let syn: Synthesis<F> =
        synthesize(&claim, &commitment, &transcript, &ctx).map_err(|e| e.to_string())?;
    let n = syn.cs.constraints.len();
    Ok((
        prove_unchecked(&syn, &claim, &transcript, &MockBackend),
        n,
        commitment.root,
    ))
}

fn alice_binding(w: &World, commitment: &RegionCommitment) -> Result<Signature, String> {
    let stmt = statement_hash(
        &commitment.root,
        w.clock.slot_of(w.claim.start).map_err(|e| e.to_string())?,
        w.clock.slot_of(w.claim.end).map_err(|e| e.to_string())?,
    );
    Ok(w.alice.sign(&stmt))
}

/// In the order-7 test group a second key's nonce commitment matches a given
/// signature's with probability 1/7, which would make carrying the signature
/// over a forgery rather than a transfer. Scenario keys avoid that case.
fn nonce_coincides(key: &SigningKey, sig: &Signature, stmt: &[u8; 32]) -> bool {
    match (key, sig) {
        (SigningKey::Test(k), Signature::Test { r, .. }) => {
            TestGroup::base_mul(&TestGroup::nonce(k, stmt)) == *r
        }
        _ => false,
    }
}

/// Runs one scenario. Errors are recorded in the result, never raised.
pub fn run_scenario(cfg: &ScenarioConfig) -> ScenarioResult {
    let mut result = ScenarioResult {
        preset: cfg.preset,
        adversary: cfg.adversary,
        seed: cfg.rng_seed,
        ground_truth: false,
        verdict: "error".into(),
        failure_label: None,
        expected_label: (cfg.adversary != Adversary::None)
            .then(|| cfg.expected_label().to_string()),
        samples: 0,
        constraints: 0,
        root_hex: String::new(),
        bundle_sha256: String::new(),
    };
    if let Err(e) = run_inner(cfg, &mut result) {
        result.verdict = "error".into();
        result.failure_label = Some(format!("error: {e}"));
    }
    result
}

fn run_inner(cfg: &ScenarioConfig, result: &mut ScenarioResult) -> Result<(), String> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let world = build_world(cfg, &mut rng)?;
    let run = plan(cfg, &world, &mut rng)?;
    result.samples = run.samples.len();

    let trajectory = Trajectory::new(run.claimed_prover, run.trajectory.clone())
        .map_err(|e| e.to_string())?;
    result.ground_truth = eval_claim(
        &run.expected_claim,
        &trajectory,
        world.cells.iter().copied(),
        world.grid,
        world.clock,
    )
    .map_err(|e| e.to_string())?;

    let (bundle, constraints, root) = match cfg.field {
        FieldChoice::Fp61 => prove_run::<Fp61>(cfg, &world, &run)?,
        FieldChoice::PallasFp => prove_run::<PallasFp>(cfg, &world, &run)?,
    };
    result.constraints = constraints;
    result.root_hex = hex::encode(root);
    let json = bundle.to_json();
    result.bundle_sha256 = hex::encode(sha256(&[json.as_bytes()]));

    let anchored = commit(world.cells.clone(), cfg.field)?.root;
    let ctx = VerifierContext {
        registry: &world.registry,
        ledger: &world.ledger,
        clock: world.clock,
        expected_claim: Some(&run.expected_claim),
        expected_root: (cfg.adversary != Adversary::UnanchoredRegion).then_some(anchored),
    };
    let verdict = verify(&bundle, &ctx);
    result.verdict = verdict.label().to_string();
    result.failure_label = (!verdict.is_accept()).then(|| verdict.label().to_string());
    Ok(())
}

/// Runs every config `trials` times with consecutive seeds. Output order is
/// the input order regardless of scheduling.
pub fn run_batch(configs: &[ScenarioConfig], trials: usize) -> Vec<ScenarioResult> {
    let jobs: Vec<ScenarioConfig> = configs
        .iter()
        .flat_map(|c| {
            (0..trials as u64).map(move |t| ScenarioConfig {
                rng_seed: c.rng_seed.wrapping_add(t),
                ..c.clone()
            })
        })
        .collect();
    jobs.par_iter().map(run_scenario).collect()
}

/// Random valid configuration; used for cross-checking the pipeline against
/// the oracle.
pub fn random_config(rng: &mut impl Rng) -> ScenarioConfig {
    let preset = Preset::ALL[rng.gen_range(0..Preset::ALL.len())];
    let adversary = if rng.gen_bool(0.4) {
        Adversary::None
    } else {
        Adversary::ATTACKS[rng.gen_range(0..Adversary::ATTACKS.len())]
    };
    let mut cfg = ScenarioConfig::preset(preset, adversary, rng.gen());
    cfg.interaction = if rng.gen_bool(0.5) {
        Interaction::Interactive
    } else {
        Interaction::NonInteractive
    };
    if adversary == Adversary::RelayDelay {
        cfg.interaction = Interaction::Interactive;
    }
    cfg.trust_model = [
        TrustModel::CentralizedAnchor,
        TrustModel::PartiallyDistributed,
        TrustModel::DecentralizedQuorum,
    ][rng.gen_range(0..3)];
    cfg.precision_m = rng.gen_range(5.0..300.0f64).round();
    cfg.witness_count = rng.gen_range(1..=4);
    cfg.relay_delay_m = rng.gen_range(0.0..60.0f64).round();
    if rng.gen_bool(0.2) {
        cfg.noise_m = rng.gen_range(0.0..5.0);
    }
    cfg.prover_profile = if rng.gen_bool(0.8) {
        GroupProfile::Test
    } else {
        GroupProfile::Pallas
    };
    cfg
}

/// Input files of one scenario, in the formats the command-line tools read.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioArtifacts {
    pub region: RegionFile,
    pub resolution: u8,
    pub hash_id: String,
    /// Ledger slot at which the region root is anchored.
    pub anchor_slot: u64,
    /// Claim the prover proves, in claim-language source.
    pub claim: String,
    /// Claim the verifier expects.
    pub expected_claim: String,
    pub transcript: TranscriptFile,
    pub prover_key_hex: String,
    /// Binding signature the prover presents instead of signing itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub present_signature_hex: Option<String>,
    /// Registry JSON.
    pub registry: String,
    /// The prover skips the satisfaction check.
    pub unchecked: bool,
}

/// Exports the files a scenario's prover and verifier would hold. Not
/// available for `unanchored-region`, whose commitment is not derived from
/// the region file.
pub fn export_scenario(cfg: &ScenarioConfig) -> Result<ScenarioArtifacts, String> {
    cfg.validate()?;
    if cfg.adversary == Adversary::UnanchoredRegion {
        return Err("unanchored-region has no file-level form".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let w = build_world(cfg, &mut rng)?;
    let run = plan(cfg, &w, &mut rng)?;
    let commitment = commit(run.commitment_cells.clone(), cfg.field)?;
    let (key, present) = if run.transfer {
        (w.mallory, Some(alice_binding(&w, &commitment)?.to_hex()))
    } else {
        (w.alice, None)
    };
    let claim = if run.transfer {
        &run.expected_claim
    } else {
        &w.claim
    };
    Ok(ScenarioArtifacts {
        region: w.region_file.clone(),
        resolution: w.grid.resolution(),
        hash_id: commitment.hash_id.clone(),
        anchor_slot: w.anchor_slot,
        claim: print_claim(claim),
        expected_claim: print_claim(&run.expected_claim),
        transcript: Transcript::new(key.public(), run.samples.clone()).to_file(),
        prover_key_hex: key.to_hex(),
        present_signature_hex: present,
        registry: w.registry.to_json(),
        unchecked: !run.strict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn honest_presets_accept() {
        for p in Preset::ALL {
            let r = run_scenario(&ScenarioConfig::preset(p, Adversary::None, 1));
            assert_eq!(r.verdict, "accept", "{r:?}");
            assert!(r.ground_truth, "{r:?}");
        }
    }

    #[test]
    fn road_x_shape() {
        let r = run_scenario(&ScenarioConfig::preset(Preset::RoadX, Adversary::None, 3));
        assert_eq!(r.samples, 40);
        assert_eq!(r.verdict, "accept");
    }

    #[test]
    fn attacks_hit_expected_labels() {
        for a in Adversary::ATTACKS {
            let cfg = ScenarioConfig::preset(Preset::Evoting, a, 5);
            let r = run_scenario(&cfg);
            assert!(!r.ground_truth, "{r:?}");
            assert_eq!(r.verdict, cfg.expected_label(), "{r:?}");
        }
    }

    #[test]
    fn deterministic_results() {
        let cfg = ScenarioConfig::preset(Preset::SupplyChain, Adversary::Teleport, 9);
        assert_eq!(run_scenario(&cfg).to_json_line(), run_scenario(&cfg).to_json_line());
    }

    #[test]
    fn invalid_configs_are_recorded() {
        let mut cfg = ScenarioConfig::preset(Preset::Retail, Adversary::RelayDelay, 1);
        let r = run_scenario(&cfg);
        assert!(r.failure_label.unwrap().starts_with("error:"));
        cfg.adversary = Adversary::None;
        cfg.witness_count = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn export_matches_the_run() {
        let cfg = ScenarioConfig::preset(Preset::RoadX, Adversary::None, 4);
        let a = export_scenario(&cfg).unwrap();
        assert_eq!(a.transcript.samples.len(), 40);
        assert!(!a.unchecked);
        assert_eq!(a, export_scenario(&cfg).unwrap());
        let key = SigningKey::from_hex(&a.prover_key_hex).unwrap();
        assert_eq!(key.public().to_hex(), a.transcript.prover_pk_hex);
        let grid = HexGrid::new(a.resolution).unwrap();
        let cells = a
            .region
            .to_polygon()
            .unwrap()
            .rasterize(&grid, CellRule::CenterInside)
            .unwrap();
        assert_eq!(hex::encode(commit(cells, cfg.field).unwrap().root), run_scenario(&cfg).root_hex);
        let unanchored = ScenarioConfig::preset(Preset::RoadX, Adversary::UnanchoredRegion, 4);
        assert!(export_scenario(&unanchored).is_err());
    }
}
