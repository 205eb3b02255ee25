//! Schnorr signatures over two interchangeable groups.
//!
//! [`TestGroup`] is the order-7 subgroup of the multiplicative group of
//! `Fp61`. It is small enough to express inside a circuit and to enumerate
//! exhaustively in tests, and offers no security at all. [`PallasGroup`] is
//! the Pallas curve and is what real keys use.

use std::fmt::Debug;
use std::sync::OnceLock;

use ff::{Field, FromUniformBytes, PrimeField as _};
use group::{Group, GroupEncoding};
use pasta_curves::pallas;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha512};

use super::AttestationError;
use crate::field::{Fp61, PrimeField, P61};
use crate::hash::{digest_to_field, sha256, Digest, Domain};

pub trait SchnorrGroup {
    const ID: &'static str;
    type Scalar: Copy + Eq + Debug;
    type Element: Copy + Eq + Debug;

    fn random_secret<R: RngCore>(rng: &mut R) -> Self::Scalar;
    fn base_mul(k: &Self::Scalar) -> Self::Element;
    fn combine(a: &Self::Element, b: &Self::Element) -> Self::Element;
    fn scale(p: &Self::Element, k: &Self::Scalar) -> Self::Element;
    fn scalar_mul_add(a: &Self::Scalar, b: &Self::Scalar, c: &Self::Scalar) -> Self::Scalar;
    fn challenge(r: &Self::Element, pk: &Self::Element, msg: &Digest) -> Self::Scalar;
    fn nonce(sk: &Self::Scalar, msg: &Digest) -> Self::Scalar;

    fn sign(sk: &Self::Scalar, msg: &Digest) -> (Self::Element, Self::Scalar) {
        let pk = Self::base_mul(sk);
        let k = Self::nonce(sk, msg);
        let r = Self::base_mul(&k);
        let e = Self::challenge(&r, &pk, msg);
        (r, Self::scalar_mul_add(&e, sk, &k))
    }

    /// Checks `g^s = R * pk^e`.
    fn verify(pk: &Self::Element, msg: &Digest, r: &Self::Element, s: &Self::Scalar) -> bool {
        let e = Self::challenge(r, pk, msg);
        Self::base_mul(s) == Self::combine(r, &Self::scale(pk, &e))
    }
}

pub const TEST_GROUP_ORDER: u64 = 7;

#[derive(Clone, Copy, Debug)]
pub struct TestGroup;

impl TestGroup {
    pub fn generator() -> Fp61 {
        static G: OnceLock<Fp61> = OnceLock::new();
        *G.get_or_init(|| {
            let cofactor = (P61 - 1) / TEST_GROUP_ORDER;
            (2..)
                .map(|h| Fp61::from_u64(h).pow_u64(cofactor))
                .find(|g| *g != Fp61::one())
                .expect("subgroup of order 7 exists")
        })
    }

    /// `g^(2^i)` for the three exponent bits used in circuits.
    pub fn generator_powers() -> [Fp61; 3] {
        let g = Self::generator();
        [g, g.pow_u64(2), g.pow_u64(4)]
    }

    pub fn is_element(x: &Fp61) -> bool {
        !x.is_zero() && x.pow_u64(TEST_GROUP_ORDER) == Fp61::one()
    }

    /// Challenge before reduction mod 7; circuits reproduce this value.
    pub fn challenge_preimage(r: &Fp61, pk: &Fp61, msg: &Digest) -> Fp61 {
        Fp61::poseidon_params().hash(Domain::Schnorr, 0, &[*r, *pk, digest_to_field(msg)])
    }
}

impl SchnorrGroup for TestGroup {
    const ID: &'static str = "test-order7";
    type Scalar = u8;
    type Element = Fp61;

    fn random_secret<R: RngCore>(rng: &mut R) -> u8 {
        rng.gen_range(1..TEST_GROUP_ORDER as u8)
    }

    fn base_mul(k: &u8) -> Fp61 {
        Self::generator().pow_u64(*k as u64)
    }

    fn combine(a: &Fp61, b: &Fp61) -> Fp61 {
        *a * *b
    }

    fn scale(p: &Fp61, k: &u8) -> Fp61 {
        p.pow_u64(*k as u64)
    }

    fn scalar_mul_add(a: &u8, b: &u8, c: &u8) -> u8 {
        ((*a as u64 * *b as u64 + *c as u64) % TEST_GROUP_ORDER) as u8
    }

    fn challenge(r: &Fp61, pk: &Fp61, msg: &Digest) -> u8 {
        (Self::challenge_preimage(r, pk, msg).value() % TEST_GROUP_ORDER) as u8
    }

    fn nonce(sk: &u8, msg: &Digest) -> u8 {
        let h = sha256(&[b"pol/schnorr/nonce", &[*sk], msg]);
        (u64::from_be_bytes(h[..8].try_into().unwrap()) % TEST_GROUP_ORDER) as u8
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PallasGroup;

fn wide_scalar(parts: &[&[u8]]) -> pallas::Scalar {
    let mut h = Sha512::new();
    for p in parts {
        h.update(p);
    }
    let wide: [u8; 64] = h.finalize().into();
    pallas::Scalar::from_uniform_bytes(&wide)
}

impl SchnorrGroup for PallasGroup {
    const ID: &'static str = "pallas";
    type Scalar = pallas::Scalar;
    type Element = pallas::Point;

    fn random_secret<R: RngCore>(rng: &mut R) -> pallas::Scalar {
        loop {
            let s = pallas::Scalar::random(&mut *rng);
            if !bool::from(s.is_zero()) {
                return s;
            }
        }
    }

    fn base_mul(k: &pallas::Scalar) -> pallas::Point {
        pallas::Point::generator() * k
    }

    fn combine(a: &pallas::Point, b: &pallas::Point) -> pallas::Point {
        a + b
    }

    fn scale(p: &pallas::Point, k: &pallas::Scalar) -> pallas::Point {
        p * k
    }

    fn scalar_mul_add(a: &pallas::Scalar, b: &pallas::Scalar, c: &pallas::Scalar) -> pallas::Scalar {
        *a * b + c
    }

    fn challenge(r: &pallas::Point, pk: &pallas::Point, msg: &Digest) -> pallas::Scalar {
        wide_scalar(&[b"pol/schnorr/challenge", &r.to_bytes(), &pk.to_bytes(), msg])
    }

    fn nonce(sk: &pallas::Scalar, msg: &Digest) -> pallas::Scalar {
        wide_scalar(&[b"pol/schnorr/nonce", &sk.to_repr(), msg])
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupProfile {
    Test,
    #[default]
    Pallas,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SigningKey {
    Test(u8),
    Pallas(pallas::Scalar),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PublicKey {
    Test(Fp61),
    Pallas(pallas::Point),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Signature {
    Test { r: Fp61, s: u8 },
    Pallas { r: pallas::Point, s: pallas::Scalar },
}

/// Deterministic key from a seed.
pub fn keygen(seed: u64, profile: GroupProfile) -> SigningKey {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    match profile {
        GroupProfile::Test => SigningKey::Test(TestGroup::random_secret(&mut rng)),
        GroupProfile::Pallas => SigningKey::Pallas(PallasGroup::random_secret(&mut rng)),
    }
}

impl SigningKey {
    pub fn profile(&self) -> GroupProfile {
        match self {
            SigningKey::Test(_) => GroupProfile::Test,
            SigningKey::Pallas(_) => GroupProfile::Pallas,
        }
    }

    pub fn public(&self) -> PublicKey {
        match self {
            SigningKey::Test(sk) => PublicKey::Test(TestGroup::base_mul(sk)),
            SigningKey::Pallas(sk) => PublicKey::Pallas(PallasGroup::base_mul(sk)),
        }
    }

    pub fn sign(&self, msg: &Digest) -> Signature {
        match self {
            SigningKey::Test(sk) => {
                let (r, s) = TestGroup::sign(sk, msg);
                Signature::Test { r, s }
            }
            SigningKey::Pallas(sk) => {
                let (r, s) = PallasGroup::sign(sk, msg);
                Signature::Pallas { r, s }
            }
        }
    }

    /// One byte for the test group, the 32-byte scalar representation for
    /// Pallas.
    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            SigningKey::Test(k) => vec![*k],
            SigningKey::Pallas(k) => k.to_repr().to_vec(),
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AttestationError> {
        match bytes.len() {
            1 if bytes[0] != 0 && bytes[0] < TEST_GROUP_ORDER as u8 => Ok(SigningKey::Test(bytes[0])),
            32 => {
                let k: Option<pallas::Scalar> =
                    pallas::Scalar::from_repr(bytes.try_into().unwrap()).into();
                match k {
                    Some(k) if !bool::from(k.is_zero()) => Ok(SigningKey::Pallas(k)),
                    _ => Err(AttestationError::InvalidKey),
                }
            }
            _ => Err(AttestationError::InvalidKey),
        }
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(s: &str) -> Result<Self, AttestationError> {
        Self::from_bytes(&hex::decode(s.trim()).map_err(|_| AttestationError::InvalidKey)?)
    }
}

impl PublicKey {
    pub fn profile(&self) -> GroupProfile {
        match self {
            PublicKey::Test(_) => GroupProfile::Test,
            PublicKey::Pallas(_) => GroupProfile::Pallas,
        }
    }

    pub fn verify(&self, msg: &Digest, sig: &Signature) -> bool {
        match (self, sig) {
            (PublicKey::Test(pk), Signature::Test { r, s }) => {
                *s < TEST_GROUP_ORDER as u8 && TestGroup::verify(pk, msg, r, s)
            }
            (PublicKey::Pallas(pk), Signature::Pallas { r, s }) => {
                PallasGroup::verify(pk, msg, r, s)
            }
            _ => false,
        }
    }

    /// 8 bytes for the test group, 32 for a compressed Pallas point.
    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            PublicKey::Test(x) => x.value().to_be_bytes().to_vec(),
            PublicKey::Pallas(p) => p.to_bytes().to_vec(),
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AttestationError> {
        let pk = match bytes.len() {
            8 => {
                let v = u64::from_be_bytes(bytes.try_into().unwrap());
                let x = Fp61::new(v);
                if v >= P61 || !TestGroup::is_element(&x) || x == Fp61::one() {
                    return Err(AttestationError::InvalidKey);
                }
                PublicKey::Test(x)
            }
            32 => {
                let p: Option<pallas::Point> =
                    pallas::Point::from_bytes(bytes.try_into().unwrap()).into();
                match p {
                    Some(p) if !bool::from(p.is_identity()) => PublicKey::Pallas(p),
                    _ => return Err(AttestationError::InvalidKey),
                }
            }
            _ => return Err(AttestationError::InvalidKey),
        };
        Ok(pk)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(s: &str) -> Result<Self, AttestationError> {
        Self::from_bytes(&hex::decode(s).map_err(|_| AttestationError::InvalidKey)?)
    }
}

impl Signature {
    pub fn to_bytes(&self) -> Vec<u8> {
        match self {
            Signature::Test { r, s } => {
                let mut v = r.value().to_be_bytes().to_vec();
                v.push(*s);
                v
            }
            Signature::Pallas { r, s } => {
                let mut v = r.to_bytes().to_vec();
                v.extend_from_slice(&s.to_repr());
                v
            }
        }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AttestationError> {
        match bytes.len() {
            9 => {
                let v = u64::from_be_bytes(bytes[..8].try_into().unwrap());
                if v >= P61 || bytes[8] >= TEST_GROUP_ORDER as u8 {
                    return Err(AttestationError::InvalidSignatureEncoding);
                }
                Ok(Signature::Test {
                    r: Fp61::new(v),
                    s: bytes[8],
                })
            }
            64 => {
                let r: Option<pallas::Point> =
                    pallas::Point::from_bytes(bytes[..32].try_into().unwrap()).into();
                let s: Option<pallas::Scalar> =
                    pallas::Scalar::from_repr(bytes[32..].try_into().unwrap()).into();
                match (r, s) {
                    (Some(r), Some(s)) => Ok(Signature::Pallas { r, s }),
                    _ => Err(AttestationError::InvalidSignatureEncoding),
                }
            }
            _ => Err(AttestationError::InvalidSignatureEncoding),
        }
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(s: &str) -> Result<Self, AttestationError> {
        Self::from_bytes(&hex::decode(s).map_err(|_| AttestationError::InvalidSignatureEncoding)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(i: u64) -> Digest {
        sha256(&[&i.to_be_bytes()])
    }

    #[test]
    fn signing_key_hex_round_trips() {
        for profile in [GroupProfile::Test, GroupProfile::Pallas] {
            for seed in 0..5 {
                let k = keygen(seed, profile);
                assert_eq!(SigningKey::from_hex(&k.to_hex()).unwrap(), k);
            }
        }
        for bad in ["", "00", "07", "zz", &"00".repeat(32)] {
            assert!(SigningKey::from_hex(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn test_generator_has_order_seven() {
        let g = TestGroup::generator();
        assert_ne!(g, Fp61::one());
        assert_eq!(g.pow_u64(7), Fp61::one());
        let powers: std::collections::HashSet<u64> =
            (0..7).map(|k| g.pow_u64(k).value()).collect();
        assert_eq!(powers.len(), 7);
    }

    #[test]
    fn keygen_is_deterministic() {
        for profile in [GroupProfile::Test, GroupProfile::Pallas] {
            assert_eq!(keygen(42, profile), keygen(42, profile));
            assert_eq!(
                keygen(42, profile).public().to_hex(),
                keygen(42, profile).public().to_hex()
            );
        }
    }

    #[test]
    fn sign_verify_round_trip() {
        for profile in [GroupProfile::Test, GroupProfile::Pallas] {
            for seed in 0..20 {
                let sk = keygen(seed, profile);
                let m = msg(seed);
                let sig = sk.sign(&m);
                assert!(sk.public().verify(&m, &sig));
                let back = Signature::from_hex(&sig.to_hex()).unwrap();
                assert_eq!(back, sig);
                let pk = PublicKey::from_hex(&sk.public().to_hex()).unwrap();
                assert_eq!(pk, sk.public());
            }
        }
    }

    #[test]
    fn pallas_rejects_wrong_key_on_random_messages() {
        let a = keygen(1, GroupProfile::Pallas);
        let b = keygen(2, GroupProfile::Pallas);
        for i in 0..100 {
            let m = msg(1000 + i);
            assert!(!b.public().verify(&m, &a.sign(&m)));
        }
    }

    #[test]
    fn test_group_signature_checks_every_response() {
        // With only seven responses, exactly one must verify.
        let sk = SigningKey::Test(3);
        let m = msg(7);
        let Signature::Test { r, .. } = sk.sign(&m) else {
            unreachable!()
        };
        let valid = (0..7u8)
            .filter(|s| sk.public().verify(&m, &Signature::Test { r, s: *s }))
            .count();
        assert_eq!(valid, 1);
    }

    #[test]
    fn mixed_profiles_never_verify() {
        let t = keygen(5, GroupProfile::Test);
        let p = keygen(5, GroupProfile::Pallas);
        let m = msg(0);
        assert!(!t.public().verify(&m, &p.sign(&m)));
        assert!(!p.public().verify(&m, &t.sign(&m)));
    }

    #[test]
    fn bad_encodings_rejected() {
        assert!(PublicKey::from_bytes(&[0u8; 8]).is_err());
        assert!(PublicKey::from_bytes(&1u64.to_be_bytes()).is_err());
        assert!(PublicKey::from_bytes(&[1u8; 5]).is_err());
        assert!(Signature::from_bytes(&[0u8; 10]).is_err());
        let mut s = keygen(3, GroupProfile::Test).sign(&msg(1)).to_bytes();
        s[8] = 7;
        assert!(Signature::from_bytes(&s).is_err());
    }
}
