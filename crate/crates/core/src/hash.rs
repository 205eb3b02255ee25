//! Hash primitives.
//!
//! The field-native hash is a width-3 Poseidon-style (HADES) permutation:
//! full rounds at both ends, partial rounds in the middle, a Cauchy MDS layer
//! and round constants expanded from SHA-256 in counter mode. The same
//! permutation is re-expressed as constraints in [`crate::circuit::gadgets`],
//! so every digest computed here can be reproduced inside a circuit.
//!
//! Byte-level digests (transcripts, statement hashes) use SHA-256.

use sha2::{Digest as _, Sha256};

use crate::field::PrimeField;

pub type Digest = [u8; 32];

pub const WIDTH: usize = 3;
pub const FULL_ROUNDS: usize = 8;

/// Domain tags for the sponge capacity element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Leaf = 1,
    Node = 2,
    Sample = 3,
    Schnorr = 4,
}

impl Domain {
    /// Capacity initialiser: domain, an extra parameter and the input length.
    pub fn tag<F: PrimeField>(self, param: u64, len: usize) -> F {
        F::from_u64(((self as u64) << 40) | ((param & 0xffff_ffff) << 8) | (len as u64 & 0xff))
    }
}

#[derive(Clone, Debug)]
pub struct PoseidonParams<F> {
    pub round_constants: Vec<[F; WIDTH]>,
    pub mds: [[F; WIDTH]; WIDTH],
    pub partial_rounds: usize,
    pub alpha: u64,
}

impl<F: PrimeField> PoseidonParams<F> {
    pub fn generate() -> Self {
        let partial_rounds = F::PARTIAL_ROUNDS;
        let total = FULL_ROUNDS + partial_rounds;
        let mut counter = 0u64;
        let mut next = || {
            let mut h = Sha256::new();
            h.update(b"pol-poseidon-rc");
            h.update(F::FIELD_ID.as_bytes());
            h.update(counter.to_be_bytes());
            counter += 1;
            let first = h.finalize();
            let mut h = Sha256::new();
            h.update(first);
            let second = h.finalize();
            let mut wide = first.to_vec();
            wide.extend_from_slice(&second);
            F::from_bytes_reduced(&wide)
        };
        let round_constants = (0..total).map(|_| [next(), next(), next()]).collect();

        // Cauchy matrix 1 / (x_i + y_j) with x_i = i, y_j = WIDTH + j.
        let mut mds = [[F::zero(); WIDTH]; WIDTH];
        for (i, row) in mds.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = F::from_u64((i + WIDTH + j) as u64)
                    .inverse()
                    .expect("small non-zero entry");
            }
        }
        PoseidonParams {
            round_constants,
            mds,
            partial_rounds,
            alpha: F::SBOX_EXPONENT,
        }
    }

    pub fn total_rounds(&self) -> usize {
        FULL_ROUNDS + self.partial_rounds
    }

    pub fn is_full_round(&self, round: usize) -> bool {
        round < FULL_ROUNDS / 2 || round >= FULL_ROUNDS / 2 + self.partial_rounds
    }

    pub fn permute(&self, state: &mut [F; WIDTH]) {
        for round in 0..self.total_rounds() {
            for (s, c) in state.iter_mut().zip(self.round_constants[round].iter()) {
                *s += *c;
            }
            if self.is_full_round(round) {
                for s in state.iter_mut() {
                    *s = s.pow_u64(self.alpha);
                }
            } else {
                state[0] = state[0].pow_u64(self.alpha);
            }
            let old = *state;
            for (i, s) in state.iter_mut().enumerate() {
                *s = (0..WIDTH).fold(F::zero(), |acc, j| acc + self.mds[i][j] * old[j]);
            }
        }
    }

    /// Sponge with rate 2 over a fixed-length input. The capacity element
    /// carries the domain tag, which also encodes the input length.
    pub fn hash(&self, domain: Domain, param: u64, inputs: &[F]) -> F {
        let mut state = [domain.tag(param, inputs.len()), F::zero(), F::zero()];
        if inputs.is_empty() {
            self.permute(&mut state);
        }
        for chunk in inputs.chunks(2) {
            state[1] += chunk[0];
            if let Some(x) = chunk.get(1) {
                state[2] += *x;
            }
            self.permute(&mut state);
        }
        state[1]
    }
}

pub fn sha256(parts: &[&[u8]]) -> Digest {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

/// Maps a byte digest into the field (big-endian integer mod p).
pub fn digest_to_field<F: PrimeField>(d: &Digest) -> F {
    F::from_bytes_reduced(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Fp61, PallasFp};

    #[test]
    fn params_are_deterministic() {
        let a = PoseidonParams::<Fp61>::generate();
        let b = PoseidonParams::<Fp61>::generate();
        assert_eq!(a.round_constants, b.round_constants);
        assert_eq!(a.total_rounds(), 30);
        assert_eq!(PoseidonParams::<PallasFp>::generate().total_rounds(), 64);
    }

    #[test]
    fn permutation_is_injective_on_samples() {
        let p = Fp61::poseidon_params();
        let mut seen = std::collections::HashSet::new();
        for a in 0..20u64 {
            for b in 0..20u64 {
                let mut s = [Fp61::zero(), Fp61::from_u64(a), Fp61::from_u64(b)];
                p.permute(&mut s);
                assert!(seen.insert(s.map(|x| x.value())));
            }
        }
    }

    #[test]
    fn domains_separate() {
        let p = Fp61::poseidon_params();
        let x = [Fp61::from_u64(1), Fp61::from_u64(2)];
        assert_ne!(p.hash(Domain::Leaf, 0, &x), p.hash(Domain::Node, 0, &x));
        assert_ne!(p.hash(Domain::Leaf, 9, &x), p.hash(Domain::Leaf, 10, &x));
        assert_ne!(p.hash(Domain::Sample, 0, &x), p.hash(Domain::Sample, 0, &x[..1]));
    }
}
