//! Constraint gadgets. Each takes a builder and emits constraints under the
//! builder's current label.

use super::builder::CircuitBuilder;
use super::r1cs::Lc;
use super::CircuitError;
use crate::attestation::{TestGroup, TEST_GROUP_ORDER};
use crate::field::{Fp61, PrimeField};
use crate::hash::{Domain, WIDTH};

pub fn bit_length(x: u64) -> u32 {
    64 - x.leading_zeros()
}

fn pow2<F: PrimeField>(i: u32) -> F {
    F::from_u64(2).pow_u64(i as u64)
}

pub fn boolean<F: PrimeField>(b: &mut CircuitBuilder<F>, value: bool) -> Lc<F> {
    let bit = b.alloc_lc(if value { F::one() } else { F::zero() });
    b.enforce(
        bit.clone(),
        Lc::constant(F::one()) - bit.clone(),
        Lc::zero(),
    );
    bit
}

/// Little-endian `n`-bit decomposition of `x`. Bit values are the low bits
/// of the assigned value, so an out-of-range value leaves the recomposition
/// constraint unsatisfied.
pub fn decompose<F: PrimeField>(b: &mut CircuitBuilder<F>, x: &Lc<F>, n: u32) -> Vec<Lc<F>> {
    let value = b.eval(x);
    let bits: Vec<Lc<F>> = (0..n).map(|i| boolean(b, value.bit(i))).collect();
    let sum = bits
        .iter()
        .enumerate()
        .fold(Lc::zero(), |acc, (i, bit)| acc + bit.scale(pow2(i as u32)));
    b.enforce_equal(sum, x.clone());
    bits
}

/// Forces `lo <= v <= hi` given `hi - lo < 2^bits`.
pub fn range<F: PrimeField>(
    b: &mut CircuitBuilder<F>,
    v: &Lc<F>,
    lo: &Lc<F>,
    hi: &Lc<F>,
    bits: u32,
) -> Result<(), CircuitError> {
    if bits + 2 > F::NUM_BITS {
        return Err(CircuitError::Capacity(format!(
            "{bits}-bit range exceeds the field"
        )));
    }
    let width = hi - lo;
    if width.is_constant() {
        let w = width.constant.to_biguint();
        if w >= num_bigint::BigUint::from(1u8) << bits {
            return Err(CircuitError::Capacity(format!(
                "range width {w} does not fit {bits} bits"
            )));
        }
    }
    decompose(b, &(v - lo), bits);
    decompose(b, &(hi - v), bits);
    Ok(())
}

pub fn range_const<F: PrimeField>(
    b: &mut CircuitBuilder<F>,
    v: &Lc<F>,
    lo: i64,
    hi: i64,
    bits: u32,
) -> Result<(), CircuitError> {
    range(
        b,
        v,
        &Lc::constant(F::from_i64(lo)),
        &Lc::constant(F::from_i64(hi)),
        bits,
    )
}

/// `x^alpha` by square-and-multiply.
pub fn sbox<F: PrimeField>(b: &mut CircuitBuilder<F>, x: &Lc<F>) -> Lc<F> {
    let alpha = F::SBOX_EXPONENT;
    let top = 63 - alpha.leading_zeros();
    let mut acc = x.clone();
    for i in (0..top).rev() {
        acc = b.mul(&acc, &acc);
        if (alpha >> i) & 1 == 1 {
            acc = b.mul(&acc, x);
        }
    }
    acc
}

pub fn permute<F: PrimeField>(b: &mut CircuitBuilder<F>, state: [Lc<F>; WIDTH]) -> [Lc<F>; WIDTH] {
    let params = F::poseidon_params();
    let mut state = state;
    for round in 0..params.total_rounds() {
        for (s, c) in state.iter_mut().zip(params.round_constants[round].iter()) {
            s.constant += *c;
        }
        if params.is_full_round(round) {
            for s in state.iter_mut() {
                *s = sbox(b, s);
            }
        } else {
            state[0] = sbox(b, &state[0]);
        }
        state = std::array::from_fn(|i| {
            (0..WIDTH).fold(Lc::zero(), |acc, j| acc + state[j].scale(params.mds[i][j]))
        });
    }
    state
}

/// In-circuit counterpart of [`crate::hash::PoseidonParams::hash`].
pub fn poseidon_hash<F: PrimeField>(
    b: &mut CircuitBuilder<F>,
    domain: Domain,
    param: u64,
    inputs: &[Lc<F>],
) -> Lc<F> {
    let mut state = [
        Lc::constant(domain.tag::<F>(param, inputs.len())),
        Lc::zero(),
        Lc::zero(),
    ];
    if inputs.is_empty() {
        state = permute(b, state);
    }
    for chunk in inputs.chunks(2) {
        state[1] = &state[1] + &chunk[0];
        if let Some(x) = chunk.get(1) {
            state[2] = &state[2] + x;
        }
        state = permute(b, state);
    }
    state[1].clone()
}

/// Squared-distance check `dx^2 + dy^2 <= db^2` on integer coordinates,
/// together with `0 <= db <= bound` (default bound `2^db_bits - 1`).
#[allow(clippy::too_many_arguments)]
pub fn proximity<F: PrimeField>(
    b: &mut CircuitBuilder<F>,
    xp: &Lc<F>,
    yp: &Lc<F>,
    xw: &Lc<F>,
    yw: &Lc<F>,
    db: &Lc<F>,
    db_bits: u32,
    bound: Option<u64>,
) -> Result<(), CircuitError> {
    if 2 * db_bits + 3 > F::NUM_BITS {
        return Err(CircuitError::Capacity(format!(
            "{db_bits}-bit distances would wrap the field when squared"
        )));
    }
    let max_db = (1u64 << db_bits) - 1;
    let bound = bound.unwrap_or(max_db);
    if bound > max_db {
        return Err(CircuitError::Capacity(format!(
            "proximity bound {bound} exceeds {db_bits} bits"
        )));
    }
    range_const(b, db, 0, bound as i64, db_bits)?;
    let dx = xp - xw;
    let dy = yp - yw;
    range(b, &dx, &-db.clone(), db, db_bits + 1)?;
    range(b, &dy, &-db.clone(), db, db_bits + 1)?;
    let dx2 = b.mul(&dx, &dx);
    let dy2 = b.mul(&dy, &dy);
    let db2 = b.mul(db, db);
    let slack = db2 - dx2 - dy2;
    decompose(b, &slack, 2 * db_bits + 1);
    Ok(())
}

/// Recomputes the leaf hash of `(q, r)` and walks `path` up to `root`.
pub fn merkle<F: PrimeField>(
    b: &mut CircuitBuilder<F>,
    q: &Lc<F>,
    r: &Lc<F>,
    resolution: u8,
    path: &[(bool, F)],
    depth: usize,
    root: &Lc<F>,
) -> Result<(), CircuitError> {
    if path.len() != depth {
        return Err(CircuitError::DepthMismatch {
            expected: depth,
            got: path.len(),
        });
    }
    let mut cur = poseidon_hash(b, Domain::Leaf, resolution as u64, &[q.clone(), r.clone()]);
    for (is_right, sibling) in path {
        let bit = boolean(b, *is_right);
        let sib = b.alloc_lc(*sibling);
        let t = b.mul(&bit, &(&sib - &cur));
        let left = &cur + &t;
        let right = &sib - &t;
        cur = poseidon_hash(b, Domain::Node, 0, &[left, right]);
    }
    b.enforce_equal(cur, root.clone());
    Ok(())
}

/// Binds sample fields to a commitment the verifier derives from natively
/// checked evidence.
pub fn signature_binding<F: PrimeField>(
    b: &mut CircuitBuilder<F>,
    fields: &[Lc<F>],
    commitment: F,
) {
    let h = poseidon_hash(b, Domain::Sample, 0, fields);
    b.enforce_equal(h, Lc::constant(commitment));
}

/// Native value matching [`signature_binding`].
pub fn sample_commitment<F: PrimeField>(fields: &[F]) -> F {
    F::poseidon_params().hash(Domain::Sample, 0, fields)
}

/// `s_{i+1} - s_i` in `[0, max_gap]` for consecutive slots.
pub fn continuity<F: PrimeField>(
    b: &mut CircuitBuilder<F>,
    slots: &[Lc<F>],
    max_gap: u64,
) -> Result<(), CircuitError> {
    let bits = bit_length(max_gap);
    for pair in slots.windows(2) {
        let hi = pair[0].clone() + F::from_u64(max_gap);
        range(b, &pair[1], &pair[0], &hi, bits)?;
    }
    Ok(())
}

pub const COVERAGE_BITS: u32 = 32;

pub fn coverage<F: PrimeField>(
    b: &mut CircuitBuilder<F>,
    count: &Lc<F>,
    m_min: u64,
) -> Result<(), CircuitError> {
    let hi = m_min + (1u64 << COVERAGE_BITS) - 1;
    range(
        b,
        count,
        &Lc::constant(F::from_u64(m_min)),
        &Lc::constant(F::from_u64(hi)),
        COVERAGE_BITS,
    )
}

/// Public values of a test-group Schnorr relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchnorrPublic {
    pub pk: Fp61,
    pub r: Fp61,
    pub s: u8,
}

fn group_power<F: PrimeField>(b: &mut CircuitBuilder<F>, bits: &[Lc<F>]) -> Lc<F> {
    let gens = TestGroup::generator_powers();
    let factors: Vec<Lc<F>> = bits
        .iter()
        .zip(gens)
        .map(|(bit, g)| bit.scale(F::from_u64(g.value()) - F::one()) + F::one())
        .collect();
    let first = b.mul(&factors[0], &factors[1]);
    b.mul(&first, &factors[2])
}

/// Knowledge of `sk` with `pk = g^sk`, nonce `k` with `R = g^k`, and
/// `s = k + e * sk mod 7` where `e` is the hash challenge on `stmt`.
/// Only the order-7 test group over `Fp61` is expressible.
pub fn schnorr<F: PrimeField>(
    b: &mut CircuitBuilder<F>,
    public: &SchnorrPublic,
    stmt: &Lc<F>,
    sk: u8,
    k: u8,
) -> Result<(), CircuitError> {
    if F::FIELD_ID != Fp61::FIELD_ID {
        return Err(CircuitError::GroupProfile(format!(
            "test-group relation needs the {} field, got {}",
            Fp61::FIELD_ID,
            F::FIELD_ID
        )));
    }
    let c = |x: u64| F::from_u64(x);
    let sk_bits: Vec<Lc<F>> = (0..3).map(|i| boolean(b, (sk >> i) & 1 == 1)).collect();
    let k_bits: Vec<Lc<F>> = (0..3).map(|i| boolean(b, (k >> i) & 1 == 1)).collect();
    let pk = group_power(b, &sk_bits);
    b.enforce_equal(pk.clone(), Lc::constant(c(public.pk.value())));
    let r = group_power(b, &k_bits);
    b.enforce_equal(r.clone(), Lc::constant(c(public.r.value())));

    let pre = poseidon_hash(b, Domain::Schnorr, 0, &[r, pk, stmt.clone()]);
    let pre_bits = decompose(b, &pre, F::NUM_BITS);
    let e_lin = pre_bits.iter().enumerate().fold(Lc::zero(), |acc, (i, bit)| {
        acc + bit.scale(c(2u64.pow((i % 3) as u32)))
    });
    let e_lin_value = b.eval(&e_lin).to_u64().unwrap_or(0);
    let e = b.alloc_lc(c(e_lin_value % TEST_GROUP_ORDER));
    let u_e = b.alloc_lc(c(e_lin_value / TEST_GROUP_ORDER));
    range_const(b, &e, 0, 6, 3)?;
    decompose(b, &u_e, 6);
    b.enforce_equal(e_lin, u_e.scale(c(TEST_GROUP_ORDER)) + e.clone());

    let sk_lc = sk_bits
        .iter()
        .enumerate()
        .fold(Lc::zero(), |acc, (i, bit)| acc + bit.scale(c(1 << i)));
    let k_lc = k_bits
        .iter()
        .enumerate()
        .fold(Lc::zero(), |acc, (i, bit)| acc + bit.scale(c(1 << i)));
    let esk = b.mul(&e, &sk_lc);
    let total = b.eval(&(&k_lc + &esk)).to_u64().unwrap_or(0);
    let u = b.alloc_lc(c(total / TEST_GROUP_ORDER));
    decompose(b, &u, 3);
    b.enforce_equal(
        k_lc + esk,
        u.scale(c(TEST_GROUP_ORDER)) + c(public.s as u64),
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attestation::{SchnorrGroup, TestGroup};
    use crate::field::PallasFp;
    use crate::grid::{CellId, FieldHasher, MerkleHasher, RegionCommitment};
    use crate::hash::{digest_to_field, sha256};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type F = Fp61;

    fn sat(b: CircuitBuilder<F>) -> bool {
        let (cs, w) = b.finish();
        cs.is_satisfied(&w).unwrap().satisfied
    }

    fn constant(v: i64) -> Lc<F> {
        Lc::constant(F::from_i64(v))
    }

    #[test]
    fn poseidon_gadget_matches_native() {
        fn check<G: PrimeField>() {
            let mut b = CircuitBuilder::<G>::new();
            let inputs: Vec<Lc<G>> = (0..5)
                .map(|i| b.alloc_lc(G::from_u64(i * 7 + 1)))
                .collect();
            let h = poseidon_hash(&mut b, Domain::Sample, 3, &inputs);
            let native = G::poseidon_params().hash(
                Domain::Sample,
                3,
                &(0..5).map(|i| G::from_u64(i * 7 + 1)).collect::<Vec<_>>(),
            );
            assert_eq!(b.eval(&h), native);
            let (cs, w) = b.finish();
            assert!(cs.is_satisfied(&w).unwrap().satisfied);
        }
        check::<Fp61>();
        check::<PallasFp>();
    }

    #[test]
    fn range_exhaustive() {
        for v in 0..64 {
            let mut b = CircuitBuilder::<F>::new();
            let x = b.alloc_lc(F::from_u64(v));
            range_const(&mut b, &x, 10, 20, 6).unwrap();
            assert_eq!(sat(b), (10..=20).contains(&v), "v={v}");
        }
    }

    #[test]
    fn range_point_and_boundary() {
        let mut b = CircuitBuilder::<F>::new();
        let x = b.alloc_lc(F::from_u64(7));
        range_const(&mut b, &x, 7, 7, 0).unwrap();
        assert!(sat(b));
        let mut b = CircuitBuilder::<F>::new();
        let x = b.alloc_lc(F::from_u64(21));
        range_const(&mut b, &x, 10, 20, 6).unwrap();
        assert!(!sat(b));
    }

    #[test]
    fn range_capacity_errors() {
        let mut b = CircuitBuilder::<F>::new();
        let x = b.alloc_lc(F::from_u64(1));
        assert!(matches!(
            range_const(&mut b, &x, 0, 64, 6),
            Err(CircuitError::Capacity(_))
        ));
        assert!(matches!(
            range_const(&mut b, &x, 0, 1, 60),
            Err(CircuitError::Capacity(_))
        ));
    }

    #[test]
    fn proximity_exhaustive() {
        for x in -10i64..=10 {
            for y in -10i64..=10 {
                for db in 0i64..16 {
                    let mut b = CircuitBuilder::<F>::new();
                    let xp = b.alloc_lc(F::from_i64(x));
                    let yp = b.alloc_lc(F::from_i64(y));
                    let d = b.alloc_lc(F::from_i64(db));
                    proximity(&mut b, &xp, &yp, &constant(0), &constant(0), &d, 4, None).unwrap();
                    assert_eq!(sat(b), x * x + y * y <= db * db, "({x},{y}) db={db}");
                }
            }
        }
    }

    #[test]
    fn proximity_three_four_five() {
        for (db, want) in [(5, true), (4, false)] {
            let mut b = CircuitBuilder::<F>::new();
            let xp = b.alloc_lc(F::from_i64(3));
            let yp = b.alloc_lc(F::from_i64(4));
            let d = b.alloc_lc(F::from_i64(db));
            proximity(&mut b, &xp, &yp, &constant(0), &constant(0), &d, 20, None).unwrap();
            assert_eq!(sat(b), want);
        }
    }

    #[test]
    fn proximity_bound_rejects_large_db() {
        let mut b = CircuitBuilder::<F>::new();
        let xp = b.alloc_lc(F::from_i64(1));
        let yp = b.alloc_lc(F::from_i64(1));
        let d = b.alloc_lc(F::from_i64(8));
        proximity(&mut b, &xp, &yp, &constant(0), &constant(0), &d, 4, Some(8)).unwrap();
        assert!(sat(b));
        for db in [9, 21] {
            let mut b = CircuitBuilder::<F>::new();
            let xp = b.alloc_lc(F::from_i64(1));
            let yp = b.alloc_lc(F::from_i64(1));
            let d = b.alloc_lc(F::from_i64(db));
            proximity(&mut b, &xp, &yp, &constant(0), &constant(0), &d, 4, Some(8)).unwrap();
            assert!(!sat(b));
        }
        let mut b = CircuitBuilder::<F>::new();
        let z = Lc::zero();
        assert!(matches!(
            proximity(&mut b, &z, &z, &z, &z, &z, 4, Some(16)),
            Err(CircuitError::Capacity(_))
        ));
    }

    #[test]
    fn proximity_capacity() {
        let mut b = CircuitBuilder::<F>::new();
        let z = Lc::zero();
        assert!(matches!(
            proximity(&mut b, &z, &z, &z, &z, &z, 30, None),
            Err(CircuitError::Capacity(_))
        ));
    }

    fn tree() -> RegionCommitment {
        let cells: Vec<CellId> = (0..8).map(|i| CellId::new(i, 2 * i, 9)).collect();
        RegionCommitment::build(cells, &FieldHasher::<F>::new()).unwrap()
    }

    fn merkle_sat(c: &RegionCommitment, cell: CellId, index: usize) -> bool {
        let path = c.path_at(index);
        let values: Vec<(bool, F)> = path
            .siblings
            .iter()
            .enumerate()
            .map(|(lvl, s)| ((index >> lvl) & 1 == 1, F::from_bytes(s).unwrap()))
            .collect();
        let mut b = CircuitBuilder::<F>::new();
        let root = b.alloc_lc(F::from_bytes(&c.root).unwrap());
        let q = b.alloc_lc(F::from_i64(cell.q as i64));
        let r = b.alloc_lc(F::from_i64(cell.r as i64));
        merkle(&mut b, &q, &r, cell.resolution, &values, c.depth, &root).unwrap();
        sat(b)
    }

    #[test]
    fn merkle_members_and_non_members() {
        let c = tree();
        assert_eq!(c.depth, 3);
        let h = FieldHasher::<F>::new();
        for (i, cell) in c.cells.iter().enumerate() {
            assert!(merkle_sat(&c, *cell, i));
            let outsider = CellId::new(cell.q + 100, cell.r, 9);
            let native = crate::grid::verify_membership(&h, &c.root, &outsider, &c.path_at(i));
            assert!(!native);
            assert!(!merkle_sat(&c, outsider, i));
        }
        assert_eq!(h.leaf(&c.cells[0]), FieldHasher::<F>::leaf_element(&c.cells[0]).to_bytes());
    }

    #[test]
    fn merkle_smallest_tree_and_depth_mismatch() {
        let cells = vec![CellId::new(0, 0, 9), CellId::new(0, 1, 9)];
        let c = RegionCommitment::build(cells.clone(), &FieldHasher::<F>::new()).unwrap();
        assert_eq!(c.depth, 1);
        assert!(merkle_sat(&c, cells[1], 1));
        let mut b = CircuitBuilder::<F>::new();
        let z = Lc::zero();
        assert!(matches!(
            merkle(&mut b, &z, &z, 9, &[], 1, &z),
            Err(CircuitError::DepthMismatch { expected: 1, got: 0 })
        ));
    }

    #[test]
    fn signature_binding_detects_any_mutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let fields: Vec<F> = (0..5).map(|_| F::from_u64(rng.gen_range(0..1_000_000))).collect();
            let commit = sample_commitment(&fields);
            let mut b = CircuitBuilder::<F>::new();
            let vars: Vec<_> = fields.iter().map(|f| b.alloc_lc(*f)).collect();
            signature_binding(&mut b, &vars, commit);
            assert!(sat(b));
            let mut mutated = fields.clone();
            let i = rng.gen_range(0..5);
            mutated[i] += F::from_u64(rng.gen_range(1..100));
            let mut b = CircuitBuilder::<F>::new();
            let vars: Vec<_> = mutated.iter().map(|f| b.alloc_lc(*f)).collect();
            signature_binding(&mut b, &vars, commit);
            assert!(!sat(b));
        }
    }

    #[test]
    fn continuity_matches_gap_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..400 {
            let n = rng.gen_range(0..=8);
            let gap = rng.gen_range(0..=4u64);
            let slots: Vec<u64> = (0..n).map(|_| rng.gen_range(0..12)).collect();
            let want = slots.windows(2).all(|p| p[1] >= p[0] && p[1] - p[0] <= gap);
            let mut b = CircuitBuilder::<F>::new();
            let vars: Vec<_> = slots.iter().map(|s| b.alloc_lc(F::from_u64(*s))).collect();
            continuity(&mut b, &vars, gap).unwrap();
            assert_eq!(sat(b), want, "{slots:?} gap={gap}");
        }
    }

    #[test]
    fn coverage_boundary() {
        for (m, m_min, want) in [(5, 5, true), (4, 5, false), (0, 1, false), (0, 0, true)] {
            let mut b = CircuitBuilder::<F>::new();
            let count = Lc::constant(F::from_u64(m));
            coverage(&mut b, &count, m_min).unwrap();
            assert_eq!(sat(b), want);
        }
    }

    fn schnorr_instance(sk: u8, sk_witness: u8) -> bool {
        let msg = sha256(&[b"statement"]);
        let (r, s) = TestGroup::sign(&sk, &msg);
        let k = TestGroup::nonce(&sk, &msg);
        let public = SchnorrPublic {
            pk: TestGroup::base_mul(&sk),
            r,
            s,
        };
        let mut b = CircuitBuilder::<F>::new();
        let stmt = b.alloc_lc(digest_to_field(&msg));
        schnorr(&mut b, &public, &stmt, sk_witness, k).unwrap();
        sat(b)
    }

    #[test]
    fn schnorr_exhaustive_over_secret() {
        for sk in 1..7u8 {
            for guess in 0..8u8 {
                assert_eq!(schnorr_instance(sk, guess), guess == sk, "sk={sk} guess={guess}");
            }
        }
    }

    #[test]
    fn schnorr_needs_test_field() {
        let mut b = CircuitBuilder::<PallasFp>::new();
        let public = SchnorrPublic {
            pk: TestGroup::generator(),
            r: TestGroup::generator(),
            s: 0,
        };
        assert!(matches!(
            schnorr(&mut b, &public, &Lc::zero(), 1, 1),
            Err(CircuitError::GroupProfile(_))
        ));
    }
}
