use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::CircuitError;
use crate::field::PrimeField;
use crate::hash::Digest;

/// Number of public inputs: root, s1, s2, statement hash.
pub const NUM_PUBLIC: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Variable(pub usize);

/// Gadget that emitted a constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gadget {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
    Aux,
}

impl Gadget {
    pub fn label(&self) -> &'static str {
        match self {
            Gadget::C1 => "C1",
            Gadget::C2 => "C2",
            Gadget::C3 => "C3",
            Gadget::C4 => "C4",
            Gadget::C5 => "C5",
            Gadget::C6 => "C6",
            Gadget::C7 => "C7",
            Gadget::Aux => "aux",
        }
    }

    fn code(&self) -> u8 {
        *self as u8
    }
}

impl fmt::Display for Gadget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Sparse `sum(coeff * var) + constant`, terms sorted by variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearCombination<F> {
    pub terms: Vec<(Variable, F)>,
    pub constant: F,
}

pub type Lc<F> = LinearCombination<F>;

impl<F: PrimeField> LinearCombination<F> {
    pub fn zero() -> Self {
        LinearCombination {
            terms: Vec::new(),
            constant: F::zero(),
        }
    }

    pub fn constant(c: F) -> Self {
        LinearCombination {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn from_var(v: Variable) -> Self {
        LinearCombination {
            terms: vec![(v, F::one())],
            constant: F::zero(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, k: F) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        LinearCombination {
            terms: self.terms.iter().map(|(v, c)| (*v, *c * k)).collect(),
            constant: self.constant * k,
        }
    }

    fn merge(&self, other: &Self, sign: F) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            let left = self.terms.get(i);
            let right = other.terms.get(j);
            match (left, right) {
                (Some(a), Some(b)) if a.0 == b.0 => {
                    let c = a.1 + b.1 * sign;
                    if !c.is_zero() {
                        terms.push((a.0, c));
                    }
                    i += 1;
                    j += 1;
                }
                (Some(a), Some(b)) if a.0 < b.0 => {
                    terms.push(*a);
                    i += 1;
                }
                (Some(a), None) => {
                    terms.push(*a);
                    i += 1;
                }
                (_, Some(b)) => {
                    terms.push((b.0, b.1 * sign));
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        LinearCombination {
            terms,
            constant: self.constant + other.constant * sign,
        }
    }

    pub fn evaluate(&self, values: &[F]) -> F {
        self.terms
            .iter()
            .fold(self.constant, |acc, (v, c)| acc + *c * values[v.0])
    }

    pub fn max_var(&self) -> Option<usize> {
        self.terms.last().map(|(v, _)| v.0)
    }
}

impl<F: PrimeField> From<Variable> for LinearCombination<F> {
    fn from(v: Variable) -> Self {
        Self::from_var(v)
    }
}

impl<F: PrimeField> Add for LinearCombination<F> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.merge(&rhs, F::one())
    }
}

impl<F: PrimeField> Add<&LinearCombination<F>> for &LinearCombination<F> {
    type Output = LinearCombination<F>;
    fn add(self, rhs: &LinearCombination<F>) -> LinearCombination<F> {
        self.merge(rhs, F::one())
    }
}

impl<F: PrimeField> Sub for LinearCombination<F> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.merge(&rhs, -F::one())
    }
}

impl<F: PrimeField> Sub<&LinearCombination<F>> for &LinearCombination<F> {
    type Output = LinearCombination<F>;
    fn sub(self, rhs: &LinearCombination<F>) -> LinearCombination<F> {
        self.merge(rhs, -F::one())
    }
}

impl<F: PrimeField> Add<F> for LinearCombination<F> {
    type Output = Self;
    fn add(mut self, rhs: F) -> Self {
        self.constant += rhs;
        self
    }
}

impl<F: PrimeField> Mul<F> for LinearCombination<F> {
    type Output = Self;
    fn mul(self, rhs: F) -> Self {
        self.scale(rhs)
    }
}

impl<F: PrimeField> Neg for LinearCombination<F> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-F::one())
    }
}

/// `<A, w> * <B, w> = <C, w>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint<F> {
    pub a: Lc<F>,
    pub b: Lc<F>,
    pub c: Lc<F>,
    pub label: Gadget,
}

impl<F: PrimeField> Constraint<F> {
    pub fn holds(&self, values: &[F]) -> bool {
        self.a.evaluate(values) * self.b.evaluate(values) == self.c.evaluate(values)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConstraintSystem<F> {
    pub num_vars: usize,
    pub num_public: usize,
    pub constraints: Vec<Constraint<F>>,
}

pub type Assignment<F> = Vec<F>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SatReport {
    pub satisfied: bool,
    pub first_failure: Option<(usize, Gadget)>,
}

impl<F: PrimeField> ConstraintSystem<F> {
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn is_satisfied(&self, assignment: &[F]) -> Result<SatReport, CircuitError> {
        if assignment.len() != self.num_vars {
            return Err(CircuitError::LengthMismatch {
                expected: self.num_vars,
                got: assignment.len(),
            });
        }
        let first_failure = self
            .constraints
            .iter()
            .position(|c| !c.holds(assignment))
            .map(|i| (i, self.constraints[i].label));
        Ok(SatReport {
            satisfied: first_failure.is_none(),
            first_failure,
        })
    }

    /// Count of constraints per gadget label.
    pub fn label_counts(&self) -> BTreeMap<Gadget, usize> {
        let mut m = BTreeMap::new();
        for c in &self.constraints {
            *m.entry(c.label).or_insert(0) += 1;
        }
        m
    }

    /// Stable digest of the system's shape and coefficients.
    pub fn digest(&self) -> Digest {
        use sha2::Digest as _;
        let mut h = sha2::Sha256::new();
        h.update(b"pol/cs/v1");
        h.update(F::FIELD_ID.as_bytes());
        h.update((self.num_vars as u64).to_be_bytes());
        h.update((self.num_public as u64).to_be_bytes());
        let put_lc = |buf: &mut Vec<u8>, lc: &Lc<F>| {
            buf.extend_from_slice(&(lc.terms.len() as u32).to_be_bytes());
            for (v, c) in &lc.terms {
                buf.extend_from_slice(&(v.0 as u64).to_be_bytes());
                c.append_compact(buf);
            }
            lc.constant.append_compact(buf);
        };
        let mut buf = Vec::with_capacity(1 << 16);
        for c in &self.constraints {
            buf.push(c.label.code());
            put_lc(&mut buf, &c.a);
            put_lc(&mut buf, &c.b);
            put_lc(&mut buf, &c.c);
            if buf.len() >= 1 << 15 {
                h.update(&buf);
                buf.clear();
            }
        }
        h.update(&buf);
        h.finalize().into()
    }

    /// JSON dump with decimal coefficients; the constant term is keyed `one`.
    pub fn to_json(&self) -> Value {
        let lc_json = |lc: &Lc<F>| {
            let mut m = serde_json::Map::new();
            for (v, c) in &lc.terms {
                m.insert(v.0.to_string(), Value::String(c.to_decimal()));
            }
            if !lc.constant.is_zero() {
                m.insert("one".into(), Value::String(lc.constant.to_decimal()));
            }
            Value::Object(m)
        };
        json!({
            "field_prime": F::modulus().to_string(),
            "num_vars": self.num_vars,
            "public": (0..self.num_public).collect::<Vec<_>>(),
            "constraints": self.constraints.iter().map(|c| json!({
                "A": lc_json(&c.a),
                "B": lc_json(&c.b),
                "C": lc_json(&c.c),
                "label": c.label.label(),
            })).collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Fp61;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type F = Fp61;

    #[test]
    fn empty_system_is_satisfied() {
        let cs = ConstraintSystem::<F>::default();
        assert!(cs.is_satisfied(&[]).unwrap().satisfied);
        assert!(matches!(
            cs.is_satisfied(&[F::one()]),
            Err(CircuitError::LengthMismatch { expected: 0, got: 1 })
        ));
    }

    #[test]
    fn non_boolean_fails_at_zero() {
        let x = Lc::<F>::from_var(Variable(0));
        let cs = ConstraintSystem {
            num_vars: 1,
            num_public: 0,
            constraints: vec![Constraint {
                a: x.clone(),
                b: x.clone(),
                c: x,
                label: Gadget::Aux,
            }],
        };
        let r = cs.is_satisfied(&[F::from_u64(2)]).unwrap();
        assert_eq!(r.first_failure, Some((0, Gadget::Aux)));
        assert!(cs.is_satisfied(&[F::one()]).unwrap().satisfied);
    }

    #[test]
    fn lc_arithmetic_merges_terms() {
        let a = Lc::<F>::from_var(Variable(1)) + Lc::from_var(Variable(3));
        let b = Lc::<F>::from_var(Variable(3)).scale(F::from_u64(2)) + F::from_u64(5);
        let s = &a - &b;
        assert_eq!(s.terms, vec![(Variable(1), F::one()), (Variable(3), -F::one())]);
        assert_eq!(s.constant, -F::from_u64(5));
        assert!((&a - &a).terms.is_empty());
    }

    fn naive(cs: &ConstraintSystem<F>, w: &[F]) -> Option<usize> {
        let ev = |lc: &Lc<F>| {
            let mut acc = lc.constant;
            for (v, c) in &lc.terms {
                acc += *c * w[v.0];
            }
            acc
        };
        for (i, c) in cs.constraints.iter().enumerate() {
            if ev(&c.a) * ev(&c.b) != ev(&c.c) {
                return Some(i);
            }
        }
        None
    }

    #[test]
    fn random_systems_match_naive_evaluator() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let n = 6;
            let rand_lc = |rng: &mut ChaCha8Rng| {
                let mut lc = Lc::<F>::constant(F::from_u64(rng.gen_range(0..3)));
                for v in 0..n {
                    if rng.gen_bool(0.4) {
                        lc = lc + Lc::from_var(Variable(v)).scale(F::from_u64(rng.gen_range(1..4)));
                    }
                }
                lc
            };
            let constraints = (0..50)
                .map(|_| Constraint {
                    a: rand_lc(&mut rng),
                    b: rand_lc(&mut rng),
                    c: rand_lc(&mut rng),
                    label: Gadget::Aux,
                })
                .collect();
            let cs = ConstraintSystem {
                num_vars: n,
                num_public: 0,
                constraints,
            };
            let w: Vec<F> = (0..n).map(|_| F::from_u64(rng.gen_range(0..3))).collect();
            let r = cs.is_satisfied(&w).unwrap();
            assert_eq!(r.first_failure.map(|f| f.0), naive(&cs, &w));
        }
    }

    #[test]
    fn dump_uses_one_for_constants() {
        let cs = ConstraintSystem::<F> {
            num_vars: 5,
            num_public: 4,
            constraints: vec![Constraint {
                a: Lc::from_var(Variable(4)) + F::from_u64(3),
                b: Lc::constant(F::one()),
                c: Lc::from_var(Variable(0)),
                label: Gadget::C6,
            }],
        };
        let j = cs.to_json();
        assert_eq!(j["constraints"][0]["A"]["one"], "3");
        assert_eq!(j["constraints"][0]["A"]["4"], "1");
        assert_eq!(j["constraints"][0]["label"], "C6");
        assert_eq!(j["public"], json!([0, 1, 2, 3]));
        assert_eq!(j["field_prime"], "2305843009213693951");
    }
}
