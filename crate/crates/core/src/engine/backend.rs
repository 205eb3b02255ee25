use std::sync::Arc;

use crate::circuit::{ConstraintSystem, Gadget};
use crate::field::PrimeField;
use crate::hash::{sha256, Digest};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BackendReject {
    /// Blob does not decode or does not match the keys and public inputs.
    Integrity(String),
    Unsatisfied(Gadget),
}

/// Pluggable proving system. A succinct backend replaces the mock without
/// touching synthesis.
pub trait ProofBackend<F: PrimeField> {
    type Keys;

    fn id(&self) -> &'static str;
    fn setup(&self, cs: Arc<ConstraintSystem<F>>) -> Self::Keys;
    fn prove(&self, keys: &Self::Keys, assignment: &[F]) -> Vec<u8>;
    fn verify(&self, keys: &Self::Keys, public: &[F], blob: &[u8]) -> Result<(), BackendReject>;
}

const MAGIC: &[u8; 8] = b"POLMOCK1";

/// Ships the full assignment and re-checks every constraint. Sound, but
/// neither succinct nor zero-knowledge: the blob reveals the witness.
#[derive(Clone, Copy, Debug, Default)]
pub struct MockBackend;

pub struct MockKeys<F> {
    pub cs: Arc<ConstraintSystem<F>>,
    pub cs_digest: Digest,
}

fn values_commitment<F: PrimeField>(values: &[u8]) -> Digest {
    sha256(&[b"pol/assignment/v1", F::FIELD_ID.as_bytes(), values])
}

impl<F: PrimeField> ProofBackend<F> for MockBackend {
    type Keys = MockKeys<F>;

    fn id(&self) -> &'static str {
        "mock-r1cs-v1"
    }

    fn setup(&self, cs: Arc<ConstraintSystem<F>>) -> MockKeys<F> {
        MockKeys {
            cs_digest: cs.digest(),
            cs,
        }
    }

    fn prove(&self, keys: &MockKeys<F>, assignment: &[F]) -> Vec<u8> {
        let values: Vec<u8> = assignment
            .iter()
            .flat_map(|v| v.to_compact_bytes())
            .collect();
        let mut blob = Vec::with_capacity(8 + 64 + 4 + values.len());
        blob.extend_from_slice(MAGIC);
        blob.extend_from_slice(&keys.cs_digest);
        blob.extend_from_slice(&values_commitment::<F>(&values));
        blob.extend_from_slice(&(assignment.len() as u32).to_be_bytes());
        blob.extend_from_slice(&values);
        blob
    }

    fn verify(&self, keys: &MockKeys<F>, public: &[F], blob: &[u8]) -> Result<(), BackendReject> {
        let bad = |m: &str| Err(BackendReject::Integrity(m.to_string()));
        if blob.len() < 76 || &blob[..8] != MAGIC {
            return bad("unrecognized blob");
        }
        if blob[8..40] != keys.cs_digest {
            return bad("constraint system mismatch");
        }
        let n = u32::from_be_bytes(blob[72..76].try_into().unwrap()) as usize;
        let values = &blob[76..];
        if n != keys.cs.num_vars || values.len() != n * F::BYTES {
            return bad("assignment length");
        }
        if blob[40..72] != values_commitment::<F>(values) {
            return bad("assignment commitment");
        }
        let assignment = values
            .chunks(F::BYTES)
            .map(F::from_compact_bytes)
            .collect::<Option<Vec<F>>>();
        let Some(assignment) = assignment else {
            return bad("non-canonical field element");
        };
        if public.len() != keys.cs.num_public || assignment[..public.len()] != *public {
            return bad("public inputs");
        }
        let report = keys
            .cs
            .is_satisfied(&assignment)
            .map_err(|e| BackendReject::Integrity(e.to_string()))?;
        match report.first_failure {
            None => Ok(()),
            Some((_, label)) => Err(BackendReject::Unsatisfied(label)),
        }
    }
}
