//! Claim synthesis: claim + region commitment + transcript to a constraint
//! system. Prover and verifier share [`build_circuit`]; the verifier calls it
//! without a witness to rebuild the same shape from public evidence.

use std::sync::Arc;

use super::builder::CircuitBuilder;
use super::gadgets::{self, bit_length, SchnorrPublic};
use super::r1cs::{Assignment, ConstraintSystem, Gadget, Lc};
use super::CircuitError;
use crate::attestation::{
    AttestationSample, PublicKey, Registry, SchnorrGroup, Signature, SigningKey, TestGroup,
    Transcript,
};
use crate::dsl::Claim;
use crate::engine::statement_hash;
use crate::field::{Fp61, PrimeField};
use crate::grid::{CellId, FieldHasher, MerkleHasher, RegionCommitment};
use crate::hash::{digest_to_field, sha256, Digest};
use crate::slots::SlotClock;

pub const DEFAULT_DB_BITS: u32 = 20;

/// `(root, s1, s2, H(root || s1 || s2))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PublicInputs {
    pub root: Digest,
    pub s1: u64,
    pub s2: u64,
    pub stmt: Digest,
}

impl PublicInputs {
    pub fn new(root: Digest, s1: u64, s2: u64) -> Self {
        PublicInputs {
            root,
            s1,
            s2,
            stmt: statement_hash(&root, s1, s2),
        }
    }

    pub fn to_field<F: PrimeField>(&self) -> [F; 4] {
        [
            F::from_bytes_reduced(&self.root),
            F::from_u64(self.s1),
            F::from_u64(self.s2),
            digest_to_field(&self.stmt),
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProximityParams {
    pub db_bits: u32,
    pub bound: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleParams<F> {
    /// Hash of the signed sample tuple.
    pub commitment: F,
    pub witness_xy: Option<(i64, i64)>,
}

/// Everything that fixes the circuit shape, derivable from public evidence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircuitParams<F> {
    pub resolution: u8,
    pub depth: usize,
    pub s1: u64,
    pub s2: u64,
    pub max_gap_slots: u64,
    pub min_samples: u64,
    pub proximity: Option<ProximityParams>,
    pub schnorr: Option<SchnorrPublic>,
    pub samples: Vec<SampleParams<F>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleWitness<F> {
    pub db: u32,
    pub cell: CellId,
    pub slot: u64,
    pub witness_id: F,
    pub prover_xy: Option<(i64, i64)>,
    /// Bottom-up `(is_right_child, sibling)` pairs.
    pub path: Vec<(bool, F)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CircuitWitness<F> {
    pub samples: Vec<SampleWitness<F>>,
    /// `(sk, nonce)` for the in-circuit Schnorr relation.
    pub schnorr: Option<(u8, u8)>,
}

#[derive(Clone, Copy, Debug)]
pub struct SynthOptions {
    /// Refuse non-member cells and unverifiable samples up front. Disabled
    /// only by adversarial tooling that wants the circuit to catch them.
    pub strict: bool,
    /// Binding signature to embed instead of signing the statement with the
    /// transcript's key. Models a prover carrying over another's binding.
    pub present_signature: Option<Signature>,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            strict: true,
            present_signature: None,
        }
    }
}

impl SynthOptions {
    pub fn lenient() -> Self {
        SynthOptions {
            strict: false,
            ..Self::default()
        }
    }
}

pub struct SynthContext<'a> {
    pub clock: SlotClock,
    pub registry: &'a Registry,
    pub options: SynthOptions,
}

pub struct Synthesis<F> {
    pub cs: Arc<ConstraintSystem<F>>,
    pub assignment: Assignment<F>,
    pub public: PublicInputs,
    pub params: CircuitParams<F>,
    pub prover_signature: Option<Signature>,
}

pub fn witness_id_element<F: PrimeField>(witness_id: &str) -> F {
    digest_to_field(&sha256(&[b"pol/witness-id", witness_id.as_bytes()]))
}

/// Tuple hashed by the C1 binding: `[db, q, r, slot, witness]`.
pub fn sample_fields<F: PrimeField>(db: u32, cell: &CellId, slot: u64, witness: F) -> [F; 5] {
    [
        F::from_u64(db as u64),
        F::from_i64(cell.q as i64),
        F::from_i64(cell.r as i64),
        F::from_u64(slot),
        witness,
    ]
}

/// In-circuit Schnorr data when the profile supports it.
pub fn schnorr_public<F: PrimeField>(
    claim: &Claim,
    prover_pk: &PublicKey,
    signature: Option<&Signature>,
) -> Option<SchnorrPublic> {
    if !claim.flags.require_nontransferability || F::FIELD_ID != Fp61::FIELD_ID {
        return None;
    }
    match (prover_pk, signature) {
        (PublicKey::Test(pk), Some(Signature::Test { r, s })) => Some(SchnorrPublic {
            pk: *pk,
            r: *r,
            s: *s,
        }),
        (PublicKey::Test(pk), None) => Some(SchnorrPublic {
            pk: *pk,
            r: Fp61::one(),
            s: 0,
        }),
        _ => None,
    }
}

/// Circuit parameters from a claim and evidence samples.
#[allow(clippy::too_many_arguments)]
pub fn derive_params<F: PrimeField>(
    claim: &Claim,
    samples: &[AttestationSample],
    depth: usize,
    resolution: u8,
    clock: &SlotClock,
    registry: &Registry,
    prover_pk: &PublicKey,
    signature: Option<&Signature>,
) -> Result<CircuitParams<F>, CircuitError> {
    let s1 = clock.slot_of(claim.start)?;
    let s2 = clock.slot_of(claim.end)?;
    let proximity = claim.flags.require_proximity.then(|| {
        let bound = claim.proximity_bound_m.map(u64::from);
        ProximityParams {
            db_bits: bound.map_or(DEFAULT_DB_BITS, |b| bit_length(b).max(1)),
            bound,
        }
    });
    let samples = samples
        .iter()
        .map(|s| {
            let fields = sample_fields::<F>(s.db, &s.cell, s.slot, witness_id_element(&s.witness_id));
            let witness_xy = match proximity {
                Some(_) => Some(
                    registry
                        .witness(&s.witness_id)
                        .ok_or_else(|| CircuitError::UnknownWitness(s.witness_id.clone()))?
                        .position,
                ),
                None => None,
            };
            Ok(SampleParams {
                commitment: gadgets::sample_commitment(&fields),
                witness_xy,
            })
        })
        .collect::<Result<Vec<_>, CircuitError>>()?;
    Ok(CircuitParams {
        resolution,
        depth,
        s1,
        s2,
        max_gap_slots: clock.max_gap_slots(claim.max_gap),
        min_samples: claim.min_samples,
        proximity,
        schnorr: schnorr_public::<F>(claim, prover_pk, signature),
        samples,
    })
}

/// Emits the full system. Without a witness, every private value is zero.
pub fn build_circuit<F: PrimeField>(
    params: &CircuitParams<F>,
    public: &PublicInputs,
    witness: Option<&CircuitWitness<F>>,
) -> Result<(ConstraintSystem<F>, Assignment<F>), CircuitError> {
    if let Some(w) = witness {
        if w.samples.len() != params.samples.len() {
            return Err(CircuitError::WitnessShape(format!(
                "{} witness samples for {} committed samples",
                w.samples.len(),
                params.samples.len()
            )));
        }
    }
    let mut b = CircuitBuilder::<F>::new();
    let [root_v, s1_v, s2_v, stmt_v] = public.to_field::<F>();
    let root = Lc::from_var(b.alloc_public(root_v));
    let s1 = Lc::from_var(b.alloc_public(s1_v));
    let s2 = Lc::from_var(b.alloc_public(s2_v));
    let stmt = Lc::from_var(b.alloc_public(stmt_v));
    let slot_bits = bit_length(params.s2.saturating_sub(params.s1));
    let zero_path = vec![(false, F::zero()); params.depth];

    let mut slots = Vec::with_capacity(params.samples.len());
    for (i, sp) in params.samples.iter().enumerate() {
        let sw = witness.map(|w| &w.samples[i]);
        let val = |f: &dyn Fn(&SampleWitness<F>) -> F| sw.map_or(F::zero(), f);

        b.set_label(Gadget::C1);
        let db = b.alloc_lc(val(&|s| F::from_u64(s.db as u64)));
        let q = b.alloc_lc(val(&|s| F::from_i64(s.cell.q as i64)));
        let r = b.alloc_lc(val(&|s| F::from_i64(s.cell.r as i64)));
        let slot = b.alloc_lc(val(&|s| F::from_u64(s.slot)));
        let wid = b.alloc_lc(val(&|s| s.witness_id));
        gadgets::signature_binding(
            &mut b,
            &[db.clone(), q.clone(), r.clone(), slot.clone(), wid],
            sp.commitment,
        );

        if let Some(px) = params.proximity {
            b.set_label(Gadget::C2);
            let (wx, wy) = sp
                .witness_xy
                .ok_or_else(|| CircuitError::WitnessShape(format!("sample {i} lacks a witness position")))?;
            let pxy = sw.and_then(|s| s.prover_xy).unwrap_or((0, 0));
            let xp = b.alloc_lc(F::from_i64(pxy.0));
            let yp = b.alloc_lc(F::from_i64(pxy.1));
            gadgets::proximity(
                &mut b,
                &xp,
                &yp,
                &Lc::constant(F::from_i64(wx)),
                &Lc::constant(F::from_i64(wy)),
                &db,
                px.db_bits,
                px.bound,
            )?;
        }

        b.set_label(Gadget::C3);
        let path = sw.map_or(&zero_path, |s| &s.path);
        gadgets::merkle(&mut b, &q, &r, params.resolution, path, params.depth, &root)?;

        b.set_label(Gadget::C4);
        gadgets::range(&mut b, &slot, &s1, &s2, slot_bits)?;
        slots.push(slot);
    }

    b.set_label(Gadget::C5);
    gadgets::continuity(&mut b, &slots, params.max_gap_slots)?;

    b.set_label(Gadget::C6);
    let count = Lc::constant(F::from_u64(params.samples.len() as u64));
    gadgets::coverage(&mut b, &count, params.min_samples)?;

    if let Some(sp) = &params.schnorr {
        b.set_label(Gadget::C7);
        let (sk, k) = witness.and_then(|w| w.schnorr).unwrap_or((0, 0));
        gadgets::schnorr(&mut b, sp, &stmt, sk, k)?;
    }
    Ok(b.finish())
}

fn path_values<F: PrimeField>(commitment: &RegionCommitment, index: usize) -> Vec<(bool, F)> {
    let path = commitment.path_at(index);
    path.siblings
        .iter()
        .enumerate()
        .map(|(lvl, s)| ((index >> lvl) & 1 == 1, F::from_bytes_reduced(s)))
        .collect()
}

pub fn synthesize<F: PrimeField>(
    claim: &Claim,
    commitment: &RegionCommitment,
    transcript: &Transcript,
    ctx: &SynthContext<'_>,
) -> Result<Synthesis<F>, CircuitError> {
    let hasher_id = FieldHasher::<F>::new().id();
    if commitment.hash_id != hasher_id {
        return Err(CircuitError::HashMismatch {
            expected: hasher_id,
            got: commitment.hash_id.clone(),
        });
    }
    let public = PublicInputs::new(
        commitment.root,
        ctx.clock.slot_of(claim.start)?,
        ctx.clock.slot_of(claim.end)?,
    );
    let strict = ctx.options.strict;
    if strict {
        for s in transcript.samples() {
            let w = ctx
                .registry
                .witness(&s.witness_id)
                .ok_or_else(|| CircuitError::UnknownWitness(s.witness_id.clone()))?;
            if !s.verify(&w.pk, &transcript.prover_pk) {
                return Err(CircuitError::NativeSignature(s.witness_id.clone()));
            }
        }
    }

    let sk = transcript.prover_sk;
    if claim.flags.require_nontransferability && sk.is_none() {
        return Err(CircuitError::MissingProverKey);
    }
    let prover_signature = ctx
        .options
        .present_signature
        .or_else(|| sk.map(|k| k.sign(&public.stmt)));
    let params = derive_params::<F>(
        claim,
        transcript.samples(),
        commitment.depth,
        commitment.resolution,
        &ctx.clock,
        ctx.registry,
        &transcript.prover_pk,
        prover_signature.as_ref(),
    )?;

    let mut samples = Vec::with_capacity(transcript.len());
    for (i, s) in transcript.samples().iter().enumerate() {
        let index = match commitment.cells.binary_search(&s.cell) {
            Ok(idx) => idx,
            Err(_) if !strict => 0,
            Err(_) => {
                return Err(crate::grid::GridError::NotMember {
                    q: s.cell.q,
                    r: s.cell.r,
                }
                .into())
            }
        };
        if params.proximity.is_some() && s.prover_xy.is_none() && strict {
            return Err(CircuitError::MissingPosition(i));
        }
        samples.push(SampleWitness {
            db: s.db,
            cell: s.cell,
            slot: s.slot,
            witness_id: witness_id_element(&s.witness_id),
            prover_xy: s.prover_xy,
            path: path_values(commitment, index),
        });
    }
    let schnorr = match (params.schnorr, sk) {
        (Some(_), Some(SigningKey::Test(k))) => Some((k, TestGroup::nonce(&k, &public.stmt))),
        _ => None,
    };
    let witness = CircuitWitness { samples, schnorr };
    let (cs, assignment) = build_circuit(&params, &public, Some(&witness))?;
    Ok(Synthesis {
        cs: Arc::new(cs),
        assignment,
        public,
        params,
        prover_signature,
    })
}
