//! Prime fields used by the constraint system.
//!
//! Two profiles ship: [`Fp61`], the Mersenne prime 2^61 - 1 used for tests and
//! simulation, and the 255-bit Pallas base field for the cryptographic
//! profile. Everything downstream is generic over [`PrimeField`].

use std::fmt::{self, Debug, Display};
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use num_bigint::BigUint;

use crate::hash::PoseidonParams;

pub trait PrimeField:
    Copy
    + Clone
    + Debug
    + Default
    + PartialEq
    + Eq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    /// Stable identifier written into dumps and bundles.
    const FIELD_ID: &'static str;
    /// Bit length of the modulus.
    const NUM_BITS: u32;
    /// Width in bytes of the compact element encoding.
    const BYTES: usize;
    /// S-box exponent of the algebraic hash; coprime to p - 1.
    const SBOX_EXPONENT: u64;
    const PARTIAL_ROUNDS: usize;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_u64(v: u64) -> Self;
    fn inverse(&self) -> Option<Self>;
    /// Canonical 32-byte big-endian encoding.
    fn to_bytes(&self) -> [u8; 32];
    /// Inverse of [`PrimeField::to_bytes`]; `None` for non-canonical input.
    fn from_bytes(bytes: &[u8; 32]) -> Option<Self>;
    fn modulus() -> &'static BigUint;
    fn poseidon_params() -> &'static PoseidonParams<Self>;

    fn from_i64(v: i64) -> Self {
        if v >= 0 {
            Self::from_u64(v as u64)
        } else {
            -Self::from_u64(v.unsigned_abs())
        }
    }

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    fn square(&self) -> Self {
        *self * *self
    }

    fn pow_u64(&self, mut exp: u64) -> Self {
        let mut base = *self;
        let mut acc = Self::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc *= base;
            }
            base = base.square();
            exp >>= 1;
        }
        acc
    }

    fn to_biguint(&self) -> BigUint {
        BigUint::from_bytes_be(&self.to_bytes())
    }

    fn from_biguint(v: &BigUint) -> Self {
        let reduced = v % Self::modulus();
        let raw = reduced.to_bytes_be();
        let mut bytes = [0u8; 32];
        bytes[32 - raw.len()..].copy_from_slice(&raw);
        Self::from_bytes(&bytes).expect("reduced value is canonical")
    }

    /// Interprets arbitrary bytes as a big-endian integer reduced mod p.
    fn from_bytes_reduced(bytes: &[u8]) -> Self {
        Self::from_biguint(&BigUint::from_bytes_be(bytes))
    }

    /// Value as u64 when it fits.
    fn to_u64(&self) -> Option<u64> {
        let bytes = self.to_bytes();
        if bytes[..24].iter().any(|b| *b != 0) {
            return None;
        }
        Some(u64::from_be_bytes(bytes[24..].try_into().unwrap()))
    }

    /// Signed reading: values above p/2 are negative.
    fn to_i64(&self) -> Option<i64> {
        let neg = (-*self).to_u64();
        match (self.to_u64(), neg) {
            (Some(v), Some(n)) if n < v => i64::try_from(n).ok().map(|n| -n),
            (Some(v), _) => i64::try_from(v).ok(),
            (None, Some(n)) => i64::try_from(n).ok().map(|n| -n),
            (None, None) => None,
        }
    }

    /// Bit `i` of the canonical integer representative.
    fn bit(&self, i: u32) -> bool {
        if i >= 256 {
            return false;
        }
        let bytes = self.to_bytes();
        let byte = bytes[31 - (i / 8) as usize];
        (byte >> (i % 8)) & 1 == 1
    }

    fn to_compact_bytes(&self) -> Vec<u8> {
        self.to_bytes()[32 - Self::BYTES..].to_vec()
    }

    fn append_compact(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_bytes()[32 - Self::BYTES..]);
    }

    fn from_compact_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() != Self::BYTES {
            return None;
        }
        let mut full = [0u8; 32];
        full[32 - Self::BYTES..].copy_from_slice(bytes);
        Self::from_bytes(&full)
    }

    fn to_decimal(&self) -> String {
        self.to_biguint().to_string()
    }
}

/// The Mersenne prime 2^61 - 1.
pub const P61: u64 = (1u64 << 61) - 1;

/// Element of GF(2^61 - 1), always held in canonical form.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fp61(u64);

impl Fp61 {
    pub const fn new(v: u64) -> Self {
        Fp61(reduce_u64(v))
    }

    pub const fn value(self) -> u64 {
        self.0
    }
}

const fn reduce_u64(v: u64) -> u64 {
    let folded = (v & P61) + (v >> 61);
    if folded >= P61 {
        folded - P61
    } else {
        folded
    }
}

fn reduce_u128(v: u128) -> u64 {
    let lo = (v as u64) & P61;
    let hi = (v >> 61) as u64;
    // v < 2^122, so hi < 2^61 and lo + hi fits in a u64.
    reduce_u64(lo + hi)
}

impl Debug for Fp61 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fp61({})", self.0)
    }
}

impl Display for Fp61 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add for Fp61 {
    type Output = Fp61;
    fn add(self, rhs: Fp61) -> Fp61 {
        let s = self.0 + rhs.0;
        Fp61(if s >= P61 { s - P61 } else { s })
    }
}

impl Sub for Fp61 {
    type Output = Fp61;
    fn sub(self, rhs: Fp61) -> Fp61 {
        if self.0 >= rhs.0 {
            Fp61(self.0 - rhs.0)
        } else {
            Fp61(self.0 + P61 - rhs.0)
        }
    }
}

impl Mul for Fp61 {
    type Output = Fp61;
    fn mul(self, rhs: Fp61) -> Fp61 {
        Fp61(reduce_u128(self.0 as u128 * rhs.0 as u128))
    }
}

impl Neg for Fp61 {
    type Output = Fp61;
    fn neg(self) -> Fp61 {
        if self.0 == 0 {
            self
        } else {
            Fp61(P61 - self.0)
        }
    }
}

impl AddAssign for Fp61 {
    fn add_assign(&mut self, rhs: Fp61) {
        *self = *self + rhs;
    }
}

impl SubAssign for Fp61 {
    fn sub_assign(&mut self, rhs: Fp61) {
        *self = *self - rhs;
    }
}

impl MulAssign for Fp61 {
    fn mul_assign(&mut self, rhs: Fp61) {
        *self = *self * rhs;
    }
}

impl PrimeField for Fp61 {
    const FIELD_ID: &'static str = "fp61";
    const NUM_BITS: u32 = 61;
    const BYTES: usize = 8;
    const SBOX_EXPONENT: u64 = 17;
    const PARTIAL_ROUNDS: usize = 22;

    fn zero() -> Self {
        Fp61(0)
    }

    fn one() -> Self {
        Fp61(1)
    }

    fn from_u64(v: u64) -> Self {
        Fp61::new(v)
    }

    fn inverse(&self) -> Option<Self> {
        if self.0 == 0 {
            None
        } else {
            Some(self.pow_u64(P61 - 2))
        }
    }

    fn to_bytes(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        out[24..].copy_from_slice(&self.0.to_be_bytes());
        out
    }

    fn from_bytes(bytes: &[u8; 32]) -> Option<Self> {
        if bytes[..24].iter().any(|b| *b != 0) {
            return None;
        }
        let v = u64::from_be_bytes(bytes[24..].try_into().unwrap());
        (v < P61).then_some(Fp61(v))
    }

    fn to_u64(&self) -> Option<u64> {
        Some(self.0)
    }

    fn bit(&self, i: u32) -> bool {
        i < 64 && (self.0 >> i) & 1 == 1
    }

    fn modulus() -> &'static BigUint {
        static MODULUS: OnceLock<BigUint> = OnceLock::new();
        MODULUS.get_or_init(|| BigUint::from(P61))
    }

    fn poseidon_params() -> &'static PoseidonParams<Self> {
        static PARAMS: OnceLock<PoseidonParams<Fp61>> = OnceLock::new();
        PARAMS.get_or_init(PoseidonParams::generate)
    }
}

/// Base field of the Pallas curve (255-bit).
pub use pasta_curves::Fp as PallasFp;

impl PrimeField for PallasFp {
    const FIELD_ID: &'static str = "pallas-fp";
    const NUM_BITS: u32 = 255;
    const BYTES: usize = 32;
    const SBOX_EXPONENT: u64 = 5;
    const PARTIAL_ROUNDS: usize = 56;

    fn zero() -> Self {
        <PallasFp as ff::Field>::ZERO
    }

    fn one() -> Self {
        <PallasFp as ff::Field>::ONE
    }

    fn from_u64(v: u64) -> Self {
        PallasFp::from(v)
    }

    fn inverse(&self) -> Option<Self> {
        Option::from(ff::Field::invert(self))
    }

    fn to_bytes(&self) -> [u8; 32] {
        let mut repr = ff::PrimeField::to_repr(self);
        repr.reverse();
        repr
    }

    fn from_bytes(bytes: &[u8; 32]) -> Option<Self> {
        let mut le = *bytes;
        le.reverse();
        Option::from(<PallasFp as ff::PrimeField>::from_repr(le))
    }

    fn modulus() -> &'static BigUint {
        static MODULUS: OnceLock<BigUint> = OnceLock::new();
        MODULUS.get_or_init(|| {
            let hex = <PallasFp as ff::PrimeField>::MODULUS.trim_start_matches("0x");
            BigUint::parse_bytes(hex.as_bytes(), 16).expect("modulus constant")
        })
    }

    fn poseidon_params() -> &'static PoseidonParams<Self> {
        static PARAMS: OnceLock<PoseidonParams<PallasFp>> = OnceLock::new();
        PARAMS.get_or_init(PoseidonParams::generate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random<F: PrimeField>(rng: &mut ChaCha8Rng) -> F {
        let mut bytes = [0u8; 48];
        rng.fill(&mut bytes[..]);
        F::from_bytes_reduced(&bytes)
    }

    fn axioms<F: PrimeField>() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let (a, b, c): (F, F, F) = (random(&mut rng), random(&mut rng), random(&mut rng));
            assert_eq!((a + b) + c, a + (b + c));
            assert_eq!((a * b) * c, a * (b * c));
            assert_eq!(a * (b + c), a * b + a * c);
            assert_eq!(a - b + b, a);
            assert_eq!(a + (-a), F::zero());
            if !a.is_zero() {
                assert_eq!(a * a.inverse().unwrap(), F::one());
            }
            assert_eq!(F::from_bytes(&a.to_bytes()), Some(a));
            assert_eq!(F::from_compact_bytes(&a.to_compact_bytes()), Some(a));
        }
        assert!(F::zero().inverse().is_none());
        assert_eq!(F::from_i64(-5) + F::from_u64(5), F::zero());
        assert_eq!(F::from_i64(-123_456).to_i64(), Some(-123_456));
    }

    #[test]
    fn fp61_axioms() {
        axioms::<Fp61>();
    }

    #[test]
    fn pallas_axioms() {
        axioms::<PallasFp>();
    }

    #[test]
    fn fp61_reduction_edges() {
        assert_eq!(Fp61::new(P61), Fp61::zero());
        assert_eq!(Fp61::new(u64::MAX), Fp61::new(u64::MAX % P61));
        let m = Fp61::new(P61 - 1);
        assert_eq!(m * m, Fp61::one());
        assert!(Fp61::from_bytes(&Fp61::new(P61 - 1).to_bytes()).is_some());
        let mut non_canonical = [0u8; 32];
        non_canonical[24..].copy_from_slice(&P61.to_be_bytes());
        assert!(Fp61::from_bytes(&non_canonical).is_none());
    }

    #[test]
    fn bits_match_biguint() {
        let x = Fp61::new(0b1011_0001);
        assert!(x.bit(0) && !x.bit(1) && x.bit(4) && x.bit(7) && !x.bit(8));
        let y = PallasFp::from_u64(0b101);
        assert!(y.bit(0) && !y.bit(1) && y.bit(2));
    }

    #[test]
    fn sbox_exponents_are_permutations() {
        use num_bigint::BigUint;
        fn gcd(a: BigUint, b: BigUint) -> BigUint {
            if b == BigUint::from(0u8) {
                a
            } else {
                let r = &a % &b;
                gcd(b, r)
            }
        }
        let one = BigUint::from(1u8);
        for (m, e) in [
            (Fp61::modulus(), Fp61::SBOX_EXPONENT),
            (PallasFp::modulus(), PallasFp::SBOX_EXPONENT),
        ] {
            assert_eq!(gcd(m - &one, BigUint::from(e)), one);
        }
    }
}
