//! Witnesses, signed attestation samples and simulated distance bounding.

mod registry;
mod schnorr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use registry::{ProverEntry, RegisteredWitness, Registry, WitnessEntry};
pub use schnorr::{
    keygen, GroupProfile, PallasGroup, PublicKey, SchnorrGroup, Signature, SigningKey, TestGroup,
    TEST_GROUP_ORDER,
};

use crate::grid::{CellId, HexGrid};
use crate::hash::{sha256, Digest};
use crate::slots::{SlotClock, SlotError};

#[derive(Debug, Error)]
pub enum AttestationError {
    #[error("malformed public key")]
    InvalidKey,
    #[error("malformed signature")]
    InvalidSignatureEncoding,
    #[error("unknown witness {0:?}")]
    UnknownWitness(String),
    #[error("duplicate identifier {0:?}")]
    Duplicate(String),
    #[error("distance bound {0} m does not fit the sample encoding")]
    DistanceOverflow(f64),
    #[error("malformed transcript: {0}")]
    Malformed(String),
    #[error(transparent)]
    Slot(#[from] SlotError),
}

#[derive(Clone, Debug)]
pub struct WitnessIdentity {
    pub witness_id: String,
    pub key: SigningKey,
    /// Integer meters in the local planar frame.
    pub position: (i64, i64),
    pub cell: CellId,
}

impl WitnessIdentity {
    pub fn new(witness_id: &str, key: SigningKey, position: (i64, i64), grid: &HexGrid) -> Self {
        WitnessIdentity {
            witness_id: witness_id.to_string(),
            key,
            cell: grid.locate(position.0 as f64, position.1 as f64),
            position,
        }
    }

    pub fn public(&self) -> PublicKey {
        self.key.public()
    }
}

/// Timing channel between prover and witness. Noise only ever adds distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChannelModel {
    Noiseless,
    Honest { epsilon_m: f64 },
    Relay { delay_m: f64 },
}

pub fn distance_bound<R: Rng>(
    prover: (f64, f64),
    witness: (f64, f64),
    channel: ChannelModel,
    rng: &mut R,
) -> f64 {
    let d = (prover.0 - witness.0).hypot(prover.1 - witness.1);
    match channel {
        ChannelModel::Noiseless => d,
        ChannelModel::Honest { epsilon_m } if epsilon_m > 0.0 => d + rng.gen_range(0.0..epsilon_m),
        ChannelModel::Honest { .. } => d,
        ChannelModel::Relay { delay_m } => d + delay_m.max(0.0),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttestationSample {
    pub witness_id: String,
    pub signature: Signature,
    /// Upper bound on prover distance, whole meters rounded up.
    pub db: u32,
    pub cell: CellId,
    pub slot: u64,
    /// Prover position claimed for proximity checks; not signed.
    pub prover_xy: Option<(i64, i64)>,
}

/// Canonical message a witness signs for one sample.
pub fn sample_message(
    witness_id: &str,
    db: u32,
    cell: &CellId,
    slot: u64,
    prover_pk: &PublicKey,
) -> Digest {
    sha256(&[
        b"pol/attest/v1",
        &(witness_id.len() as u32).to_be_bytes(),
        witness_id.as_bytes(),
        &db.to_be_bytes(),
        &cell.q.to_be_bytes(),
        &cell.r.to_be_bytes(),
        &[cell.resolution],
        &slot.to_be_bytes(),
        &prover_pk.to_bytes(),
    ])
}

impl AttestationSample {
    pub fn message(&self, prover_pk: &PublicKey) -> Digest {
        sample_message(&self.witness_id, self.db, &self.cell, self.slot, prover_pk)
    }

    pub fn verify(&self, witness_pk: &PublicKey, prover_pk: &PublicKey) -> bool {
        witness_pk.verify(&self.message(prover_pk), &self.signature)
    }
}

pub fn sign_sample(
    witness: &WitnessIdentity,
    prover_pk: &PublicKey,
    db: u32,
    slot: u64,
    prover_xy: Option<(i64, i64)>,
) -> AttestationSample {
    let msg = sample_message(&witness.witness_id, db, &witness.cell, slot, prover_pk);
    AttestationSample {
        witness_id: witness.witness_id.clone(),
        signature: witness.key.sign(&msg),
        db,
        cell: witness.cell,
        slot,
        prover_xy,
    }
}

/// One distance-bounding exchange followed by the witness signature.
#[allow(clippy::too_many_arguments)]
pub fn attest<R: Rng>(
    witness: &WitnessIdentity,
    prover_pk: &PublicKey,
    prover_position: (i64, i64),
    clock: &SlotClock,
    wall_time: i64,
    channel: ChannelModel,
    rng: &mut R,
) -> Result<AttestationSample, AttestationError> {
    let slot = clock.slot_of(wall_time)?;
    let raw = distance_bound(
        (prover_position.0 as f64, prover_position.1 as f64),
        (witness.position.0 as f64, witness.position.1 as f64),
        channel,
        rng,
    );
    let db = raw.ceil();
    if !(0.0..=u32::MAX as f64).contains(&db) {
        return Err(AttestationError::DistanceOverflow(raw));
    }
    Ok(sign_sample(
        witness,
        prover_pk,
        db as u32,
        slot,
        Some(prover_position),
    ))
}

#[derive(Clone, Debug)]
pub struct Transcript {
    pub prover_pk: PublicKey,
    pub prover_sk: Option<SigningKey>,
    samples: Vec<AttestationSample>,
}

impl Transcript {
    pub fn new(prover_pk: PublicKey, samples: Vec<AttestationSample>) -> Self {
        let mut t = Transcript {
            prover_pk,
            prover_sk: None,
            samples,
        };
        t.sort();
        t
    }

    pub fn with_secret(sk: SigningKey, samples: Vec<AttestationSample>) -> Self {
        let mut t = Transcript::new(sk.public(), samples);
        t.prover_sk = Some(sk);
        t
    }

    fn sort(&mut self) {
        self.samples
            .sort_by(|a, b| (a.slot, &a.witness_id).cmp(&(b.slot, &b.witness_id)));
    }

    pub fn samples(&self) -> &[AttestationSample] {
        &self.samples
    }

    pub fn push(&mut self, s: AttestationSample) {
        self.samples.push(s);
        self.sort();
    }

    /// Replaces the sample list as-is, without re-sorting. Adversarial
    /// tooling uses this to build out-of-order transcripts.
    pub fn set_samples_unsorted(&mut self, samples: Vec<AttestationSample>) {
        self.samples = samples;
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn to_file(&self) -> TranscriptFile {
        TranscriptFile {
            prover_pk_hex: self.prover_pk.to_hex(),
            resolution: self.samples.first().map(|s| s.cell.resolution),
            samples: self
                .samples
                .iter()
                .map(|s| SampleRecord {
                    witness_id: s.witness_id.clone(),
                    sig_hex: s.signature.to_hex(),
                    db: s.db,
                    cell: [s.cell.q, s.cell.r],
                    slot: s.slot,
                    prover_xy: s.prover_xy.map(|(x, y)| [x, y]),
                })
                .collect(),
        }
    }

    /// Digest over the canonical JSON form.
    pub fn digest(&self) -> Digest {
        let json = serde_json::to_vec(&self.to_file()).expect("transcript serializes");
        sha256(&[b"pol/transcript/v1", &json])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub witness_id: String,
    pub sig_hex: String,
    pub db: u32,
    pub cell: [i32; 2],
    pub slot: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prover_xy: Option<[i64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptFile {
    pub prover_pk_hex: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<u8>,
    pub samples: Vec<SampleRecord>,
}

impl TranscriptFile {
    /// `default_resolution` applies when the file carries none.
    pub fn to_transcript(&self, default_resolution: u8) -> Result<Transcript, AttestationError> {
        let prover_pk = PublicKey::from_hex(&self.prover_pk_hex)?;
        let res = self.resolution.unwrap_or(default_resolution);
        let samples = self
            .samples
            .iter()
            .map(|s| {
                Ok(AttestationSample {
                    witness_id: s.witness_id.clone(),
                    signature: Signature::from_hex(&s.sig_hex)?,
                    db: s.db,
                    cell: CellId::new(s.cell[0], s.cell[1], res),
                    slot: s.slot,
                    prover_xy: s.prover_xy.map(|[x, y]| (x, y)),
                })
            })
            .collect::<Result<Vec<_>, AttestationError>>()?;
        Ok(Transcript::new(prover_pk, samples))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn witness(grid: &HexGrid) -> WitnessIdentity {
        WitnessIdentity::new("w0", keygen(10, GroupProfile::Pallas), (0, 0), grid)
    }

    #[test]
    fn noiseless_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            distance_bound((3.0, 4.0), (0.0, 0.0), ChannelModel::Noiseless, &mut rng),
            5.0
        );
        assert_eq!(
            distance_bound(
                (3.0, 4.0),
                (0.0, 0.0),
                ChannelModel::Honest { epsilon_m: 0.0 },
                &mut rng
            ),
            5.0
        );
    }

    #[test]
    fn noise_is_one_sided() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let p: (f64, f64) = (rng.gen_range(-500.0..500.0), rng.gen_range(-500.0..500.0));
            let w = (rng.gen_range(-500.0..500.0), rng.gen_range(-500.0..500.0));
            let d: f64 = (p.0 - w.0).hypot(p.1 - w.1);
            for ch in [
                ChannelModel::Noiseless,
                ChannelModel::Honest { epsilon_m: 3.0 },
                ChannelModel::Relay { delay_m: 20.0 },
            ] {
                let db = distance_bound(p, w, ch, &mut rng);
                assert!(db >= d);
                if let ChannelModel::Honest { epsilon_m } = ch {
                    assert!(db < d + epsilon_m);
                }
                if let ChannelModel::Relay { delay_m } = ch {
                    assert!(db > d && (db - d - delay_m).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn every_field_is_bound_by_the_signature() {
        let grid = HexGrid::new(9).unwrap();
        let w = witness(&grid);
        let prover = keygen(77, GroupProfile::Pallas).public();
        let other = keygen(78, GroupProfile::Pallas).public();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let clock = SlotClock::default();
        for i in 0..20 {
            let s = attest(
                &w,
                &prover,
                (rng.gen_range(-40..40), rng.gen_range(-40..40)),
                &clock,
                1000 + i * 30,
                ChannelModel::Honest { epsilon_m: 2.0 },
                &mut rng,
            )
            .unwrap();
            assert!(s.verify(&w.public(), &prover));
            let mut m = s.clone();
            m.db += 1;
            assert!(!m.verify(&w.public(), &prover));
            let mut m = s.clone();
            m.cell.q += 1;
            assert!(!m.verify(&w.public(), &prover));
            let mut m = s.clone();
            m.slot += 1;
            assert!(!m.verify(&w.public(), &prover));
            assert!(!s.verify(&w.public(), &other));
            let mut m = s.clone();
            m.prover_xy = Some((9999, 9999));
            assert!(m.verify(&w.public(), &prover));
        }
    }

    #[test]
    fn forty_sample_drive() {
        let grid = HexGrid::new(9).unwrap();
        let w = witness(&grid);
        let sk = keygen(5, GroupProfile::Pallas);
        let clock = SlotClock::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let samples = (0..40)
            .map(|i| {
                attest(&w, &sk.public(), (i * 10, 0), &clock, i * 30, ChannelModel::Noiseless, &mut rng)
                    .unwrap()
            })
            .collect();
        let t = Transcript::with_secret(sk, samples);
        assert_eq!(t.len(), 40);
        assert!(t.samples().windows(2).all(|p| p[0].slot <= p[1].slot));
    }

    #[test]
    fn transcript_sorted_with_witness_tiebreak_and_round_trips() {
        let grid = HexGrid::new(9).unwrap();
        let sk = keygen(5, GroupProfile::Test);
        let pk = sk.public();
        let a = WitnessIdentity::new("b", keygen(1, GroupProfile::Test), (0, 0), &grid);
        let b = WitnessIdentity::new("a", keygen(2, GroupProfile::Test), (90, 0), &grid);
        let t = Transcript::new(
            pk,
            vec![
                sign_sample(&a, &pk, 3, 9, None),
                sign_sample(&a, &pk, 3, 4, Some((1, 2))),
                sign_sample(&b, &pk, 3, 9, None),
            ],
        );
        let order: Vec<_> = t.samples().iter().map(|s| (s.slot, s.witness_id.as_str())).collect();
        assert_eq!(order, vec![(4, "b"), (9, "a"), (9, "b")]);
        let json = serde_json::to_string(&t.to_file()).unwrap();
        let back: TranscriptFile = serde_json::from_str(&json).unwrap();
        let t2 = back.to_transcript(0).unwrap();
        assert_eq!(t2.samples(), t.samples());
        assert_eq!(t2.digest(), t.digest());
    }

    #[test]
    fn pre_genesis_propagates() {
        let grid = HexGrid::new(9).unwrap();
        let w = witness(&grid);
        let clock = SlotClock::new(100, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = attest(&w, &w.public(), (0, 0), &clock, 50, ChannelModel::Noiseless, &mut rng);
        assert!(matches!(r, Err(AttestationError::Slot(SlotError::PreGenesis { .. }))));
    }
}
