//! Rank-1 constraint systems, gadgets and claim synthesis.

mod builder;
pub mod gadgets;
mod r1cs;
mod synth;

use thiserror::Error;

pub use builder::CircuitBuilder;
pub use r1cs::{
    Assignment, Constraint, ConstraintSystem, Gadget, LinearCombination, Lc, SatReport, Variable,
    NUM_PUBLIC,
};
pub use synth::{
    build_circuit, derive_params, sample_fields, synthesize, witness_id_element, CircuitParams,
    CircuitWitness, ProximityParams, PublicInputs, SampleParams, SampleWitness, SynthContext,
    SynthOptions, Synthesis, DEFAULT_DB_BITS,
};

use crate::attestation::AttestationError;
use crate::grid::GridError;
use crate::slots::SlotError;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("assignment has {got} values, system has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },
    #[error("capacity: {0}")]
    Capacity(String),
    #[error("membership path has depth {got}, commitment depth is {expected}")]
    DepthMismatch { expected: usize, got: usize },
    #[error("group profile: {0}")]
    GroupProfile(String),
    #[error("witness does not match circuit shape: {0}")]
    WitnessShape(String),
    #[error("unknown witness {0:?}")]
    UnknownWitness(String),
    #[error("sample from {0:?} fails native signature verification")]
    NativeSignature(String),
    #[error("sample {0} lacks a prover position, required for proximity")]
    MissingPosition(usize),
    #[error("commitment uses {got}, circuit field needs {expected}")]
    HashMismatch { expected: String, got: String },
    #[error("prover secret key required for the non-transferability relation")]
    MissingProverKey,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Slot(#[from] SlotError),
    #[error(transparent)]
    Attestation(#[from] AttestationError),
}
