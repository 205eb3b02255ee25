pub mod attestation;
pub mod circuit;
pub mod dsl;
pub mod engine;
pub mod field;
pub mod grid;
pub mod harness;
pub mod hash;
pub mod oracle;
pub mod slots;
