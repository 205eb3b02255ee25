//! Statement hashing, proving and bundle verification.

mod backend;

use std::sync::Arc;
use std::time::{Duration, Instant};

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{BackendReject, MockBackend, MockKeys, ProofBackend};

use crate::attestation::{
    AttestationSample, PublicKey, Registry, SampleRecord, Signature, Transcript, TranscriptFile,
};
use crate::circuit::{build_circuit, derive_params, CircuitError, Gadget, PublicInputs, Synthesis};
use crate::dsl::{canonical_serialize, Claim};
use crate::field::{Fp61, PallasFp, PrimeField};
use crate::hash::{sha256, Digest};
use crate::slots::{LedgerSim, SlotClock};

/// `H(root || s1 || s2)` with 8-byte big-endian slots.
pub fn statement_hash(root: &Digest, s1: u64, s2: u64) -> Digest {
    sha256(&[root, &s1.to_be_bytes(), &s2.to_be_bytes()])
}

pub fn claim_digest(claim: &Claim) -> Digest {
    sha256(&[b"pol/claim/v1", &canonical_serialize(claim)])
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("refusing to prove: constraint {index} ({label}) is unsatisfied")]
    Unsatisfied { index: usize, label: Gadget },
    #[error("backend: {0}")]
    Backend(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicJson {
    pub root_hex: String,
    pub s1: u64,
    pub s2: u64,
    pub stmt_hash_hex: String,
}

/// Data the mock backend's verifier needs beyond the public inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub prover_pk_hex: String,
    pub claim: Claim,
    pub claim_digest_hex: String,
    pub depth: usize,
    pub resolution: u8,
    pub samples: Vec<SampleRecord>,
    pub transcript_digest_hex: String,
    pub signature_set_digest_hex: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProofBundle {
    pub backend_id: String,
    pub field: String,
    pub public: PublicJson,
    pub blob_b64: String,
    pub evidence: Evidence,
}

impl ProofBundle {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn envelope(&self) -> Option<Envelope> {
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(&self.blob_b64)
            .ok()?;
        Envelope::decode(&bytes)
    }

    pub fn set_envelope(&mut self, env: &Envelope) {
        self.blob_b64 = base64::engine::general_purpose::STANDARD.encode(env.encode());
    }
}

/// Backend blob plus the prover's signature over the statement hash.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envelope {
    pub backend_blob: Vec<u8>,
    pub prover_signature: Vec<u8>,
}

impl Envelope {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.backend_blob.len() + self.prover_signature.len());
        out.extend_from_slice(&(self.backend_blob.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.backend_blob);
        out.extend_from_slice(&(self.prover_signature.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.prover_signature);
        out
    }

    pub fn decode(bytes: &[u8]) -> Option<Self> {
        let take = |at: usize| -> Option<(Vec<u8>, usize)> {
            let n = u32::from_be_bytes(bytes.get(at..at + 4)?.try_into().ok()?) as usize;
            let body = bytes.get(at + 4..at + 4 + n)?.to_vec();
            Some((body, at + 4 + n))
        };
        let (backend_blob, next) = take(0)?;
        let (prover_signature, end) = take(next)?;
        (end == bytes.len()).then_some(Envelope {
            backend_blob,
            prover_signature,
        })
    }
}

fn evidence_records(samples: &[AttestationSample]) -> Vec<SampleRecord> {
    samples
        .iter()
        .map(|s| SampleRecord {
            witness_id: s.witness_id.clone(),
            sig_hex: s.signature.to_hex(),
            db: s.db,
            cell: [s.cell.q, s.cell.r],
            slot: s.slot,
            prover_xy: None,
        })
        .collect()
}

fn records_digest(records: &[SampleRecord]) -> Digest {
    let json = serde_json::to_vec(records).expect("records serialize");
    sha256(&[b"pol/evidence-samples/v1", &json])
}

fn signature_set_digest(records: &[SampleRecord]) -> Digest {
    let joined: Vec<u8> = records
        .iter()
        .flat_map(|r| hex::decode(&r.sig_hex).unwrap_or_default())
        .collect();
    sha256(&[b"pol/signature-set/v1", &joined])
}

/// Proves a synthesized instance; refuses unsatisfied ones.
pub fn prove<F: PrimeField, B: ProofBackend<F>>(
    synthesis: &Synthesis<F>,
    claim: &Claim,
    transcript: &Transcript,
    backend: &B,
) -> Result<ProofBundle, EngineError> {
    let report = synthesis
        .cs
        .is_satisfied(&synthesis.assignment)
        .map_err(EngineError::Circuit)?;
    if let Some((index, label)) = report.first_failure {
        return Err(EngineError::Unsatisfied { index, label });
    }
    Ok(prove_unchecked(synthesis, claim, transcript, backend))
}

/// Produces a bundle without the satisfaction check, as a cheating prover
/// would.
pub fn prove_unchecked<F: PrimeField, B: ProofBackend<F>>(
    synthesis: &Synthesis<F>,
    claim: &Claim,
    transcript: &Transcript,
    backend: &B,
) -> ProofBundle {
    let keys = backend.setup(Arc::clone(&synthesis.cs));
    let blob = backend.prove(&keys, &synthesis.assignment);
    let env = Envelope {
        backend_blob: blob,
        prover_signature: synthesis
            .prover_signature
            .map(|s| s.to_bytes())
            .unwrap_or_default(),
    };
    let records = evidence_records(transcript.samples());
    let p = &synthesis.public;
    let mut bundle = ProofBundle {
        backend_id: backend.id().to_string(),
        field: F::FIELD_ID.to_string(),
        public: PublicJson {
            root_hex: hex::encode(p.root),
            s1: p.s1,
            s2: p.s2,
            stmt_hash_hex: hex::encode(p.stmt),
        },
        blob_b64: String::new(),
        evidence: Evidence {
            prover_pk_hex: transcript.prover_pk.to_hex(),
            claim: claim.clone(),
            claim_digest_hex: hex::encode(claim_digest(claim)),
            depth: synthesis.params.depth,
            resolution: synthesis.params.resolution,
            transcript_digest_hex: hex::encode(records_digest(&records)),
            signature_set_digest_hex: hex::encode(signature_set_digest(&records)),
            samples: records,
        },
    };
    bundle.set_envelope(&env);
    bundle
}

/// Recomputes the evidence digests after the sample list was edited.
pub fn refresh_evidence_digests(bundle: &mut ProofBundle) {
    let e = &mut bundle.evidence;
    e.claim_digest_hex = hex::encode(claim_digest(&e.claim));
    e.transcript_digest_hex = hex::encode(records_digest(&e.samples));
    e.signature_set_digest_hex = hex::encode(signature_set_digest(&e.samples));
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RejectReason {
    Malformed(String),
    StatementHash,
    RootNotAnchored,
    RegionMismatch,
    UnknownProver,
    ProofIntegrity(String),
    Gadget(Gadget),
    SchnorrBinding,
    NativeSignature(String),
}

impl RejectReason {
    pub fn label(&self) -> &'static str {
        match self {
            RejectReason::Malformed(_) => "malformed",
            RejectReason::StatementHash => "statement-hash",
            RejectReason::RootNotAnchored => "root-not-anchored",
            RejectReason::RegionMismatch => "region-mismatch",
            RejectReason::UnknownProver => "unknown-prover",
            RejectReason::ProofIntegrity(_) => "proof-integrity",
            RejectReason::Gadget(g) => g.label(),
            RejectReason::SchnorrBinding => "schnorr-binding",
            RejectReason::NativeSignature(_) => "C1-native",
        }
    }

    pub fn detail(&self) -> String {
        match self {
            RejectReason::Malformed(m) | RejectReason::ProofIntegrity(m) => m.clone(),
            RejectReason::NativeSignature(w) => format!("witness {w}"),
            other => other.label().to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Accept => "accept",
            Verdict::Reject(r) => r.label(),
        }
    }
}

pub struct VerifierContext<'a> {
    pub registry: &'a Registry,
    pub ledger: &'a LedgerSim,
    pub clock: SlotClock,
    /// Claim the verifier expects; the bundle's own claim when absent.
    pub expected_claim: Option<&'a Claim>,
    /// Root of the region the verifier has in mind, when it has one.
    pub expected_root: Option<Digest>,
}

pub fn verify(bundle: &ProofBundle, ctx: &VerifierContext<'_>) -> Verdict {
    match bundle.field.as_str() {
        f if f == Fp61::FIELD_ID => verify_in::<Fp61>(bundle, ctx),
        f if f == PallasFp::FIELD_ID => verify_in::<PallasFp>(bundle, ctx),
        other => Verdict::Reject(RejectReason::Malformed(format!("unknown field {other:?}"))),
    }
}

/// Verification with its wall-clock cost.
pub fn verify_timed(bundle: &ProofBundle, ctx: &VerifierContext<'_>) -> (Verdict, Duration) {
    let start = Instant::now();
    let v = verify(bundle, ctx);
    (v, start.elapsed())
}

fn decode_digest(s: &str) -> Option<Digest> {
    hex::decode(s).ok()?.try_into().ok()
}

fn verify_in<F: PrimeField>(bundle: &ProofBundle, ctx: &VerifierContext<'_>) -> Verdict {
    match check::<F>(bundle, ctx) {
        Ok(()) => Verdict::Accept,
        Err(r) => Verdict::Reject(r),
    }
}

fn check<F: PrimeField>(bundle: &ProofBundle, ctx: &VerifierContext<'_>) -> Result<(), RejectReason> {
    let malformed = |m: &str| RejectReason::Malformed(m.to_string());
    if bundle.backend_id != ProofBackend::<F>::id(&MockBackend) {
        return Err(malformed("unsupported backend"));
    }
    let ev = &bundle.evidence;
    let root = decode_digest(&bundle.public.root_hex).ok_or_else(|| malformed("root_hex"))?;
    let stmt =
        decode_digest(&bundle.public.stmt_hash_hex).ok_or_else(|| malformed("stmt_hash_hex"))?;
    let env = bundle.envelope().ok_or_else(|| malformed("blob envelope"))?;
    let prover_pk =
        PublicKey::from_hex(&ev.prover_pk_hex).map_err(|_| malformed("prover public key"))?;
    let transcript = TranscriptFile {
        prover_pk_hex: ev.prover_pk_hex.clone(),
        resolution: Some(ev.resolution),
        samples: ev.samples.clone(),
    }
    .to_transcript(ev.resolution)
    .map_err(|e| RejectReason::Malformed(e.to_string()))?;
    let samples = transcript.samples();
    if hex::encode(claim_digest(&ev.claim)) != ev.claim_digest_hex
        || hex::encode(records_digest(&ev.samples)) != ev.transcript_digest_hex
        || hex::encode(signature_set_digest(&ev.samples)) != ev.signature_set_digest_hex
    {
        return Err(RejectReason::ProofIntegrity("evidence digest".into()));
    }
    let claim = ctx.expected_claim.unwrap_or(&ev.claim);

    // (a) statement hash against the claim interval
    let p = &bundle.public;
    let s1 = ctx.clock.slot_of(claim.start).map_err(|_| RejectReason::StatementHash)?;
    let s2 = ctx.clock.slot_of(claim.end).map_err(|_| RejectReason::StatementHash)?;
    if p.s1 != s1 || p.s2 != s2 || statement_hash(&root, p.s1, p.s2) != stmt {
        return Err(RejectReason::StatementHash);
    }

    // (b) region root anchored on the ledger
    if ctx.ledger.lookup(&root).is_none() {
        return Err(RejectReason::RootNotAnchored);
    }
    if ctx.expected_root.is_some_and(|r| r != root) {
        return Err(RejectReason::RegionMismatch);
    }
    if ctx.registry.prover(&claim.prover_id) != Some(&prover_pk) {
        return Err(RejectReason::UnknownProver);
    }

    // (c) backend check against a shape rebuilt from public evidence
    let signature = if env.prover_signature.is_empty() {
        None
    } else {
        Some(
            Signature::from_bytes(&env.prover_signature)
                .map_err(|_| malformed("prover signature"))?,
        )
    };
    let params = derive_params::<F>(
        claim,
        samples,
        ev.depth,
        ev.resolution,
        &ctx.clock,
        ctx.registry,
        &prover_pk,
        signature.as_ref(),
    )
    .map_err(|e| match e {
        CircuitError::UnknownWitness(w) => RejectReason::NativeSignature(w),
        other => RejectReason::Malformed(other.to_string()),
    })?;
    let public = PublicInputs {
        root,
        s1: p.s1,
        s2: p.s2,
        stmt,
    };
    let (cs, _) = build_circuit(&params, &public, None)
        .map_err(|e| RejectReason::Malformed(e.to_string()))?;
    let keys = ProofBackend::<F>::setup(&MockBackend, Arc::new(cs));
    ProofBackend::<F>::verify(&MockBackend, &keys, &public.to_field::<F>(), &env.backend_blob)
        .map_err(|e| match e {
            BackendReject::Integrity(m) => RejectReason::ProofIntegrity(m),
            BackendReject::Unsatisfied(g) => RejectReason::Gadget(g),
        })?;

    // (d) native evidence: prover binding, then every witness signature
    if claim.flags.require_nontransferability {
        let ok = signature.is_some_and(|s| prover_pk.verify(&stmt, &s));
        if !ok {
            return Err(RejectReason::SchnorrBinding);
        }
    }
    for s in samples {
        let w = ctx
            .registry
            .witness(&s.witness_id)
            .ok_or_else(|| RejectReason::NativeSignature(s.witness_id.clone()))?;
        if !s.verify(&w.pk, &prover_pk) {
            return Err(RejectReason::NativeSignature(s.witness_id.clone()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statement_hash_reference_vector() {
        // Computed with Python's hashlib over 0^32 || be64(0) || be64(1).
        assert_eq!(
            hex::encode(statement_hash(&[0u8; 32], 0, 1)),
            "86f77354f38f799c3e3d853dec927db2d921a6d80cc206b01b9d0cf485324fce"
        );
        assert_eq!(
            hex::encode(statement_hash(&[0u8; 32], 1, 0)),
            "e8d9d27920689aa242fcd3cb9b2ea5add8f029d0b19c831a809eabc06255354e"
        );
    }

    #[test]
    fn statement_hash_is_order_sensitive() {
        let r = sha256(&[b"root"]);
        assert_eq!(statement_hash(&r, 3, 9), statement_hash(&r, 3, 9));
        assert_ne!(statement_hash(&r, 3, 9), statement_hash(&r, 9, 3));
    }

    #[test]
    fn envelope_round_trip_and_truncation() {
        let env = Envelope {
            backend_blob: vec![1, 2, 3],
            prover_signature: vec![9; 9],
        };
        let bytes = env.encode();
        assert_eq!(Envelope::decode(&bytes), Some(env));
        assert!(Envelope::decode(&bytes[..bytes.len() - 1]).is_none());
    }

    #[test]
    fn labels() {
        assert_eq!(RejectReason::Gadget(Gadget::C5).label(), "C5");
        assert_eq!(RejectReason::NativeSignature("w".into()).label(), "C1-native");
        assert_eq!(Verdict::Accept.label(), "accept");
    }
}
