use super::r1cs::{Assignment, Constraint, ConstraintSystem, Gadget, Lc, Variable, NUM_PUBLIC};
use crate::field::PrimeField;

/// Emits constraints and tracks the matching assignment. In shape-only mode
/// every allocated value is zero; the constraint list is identical.
pub struct CircuitBuilder<F> {
    cs: ConstraintSystem<F>,
    values: Vec<F>,
    label: Gadget,
}

impl<F: PrimeField> Default for CircuitBuilder<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: PrimeField> CircuitBuilder<F> {
    pub fn new() -> Self {
        CircuitBuilder {
            cs: ConstraintSystem::default(),
            values: Vec::new(),
            label: Gadget::Aux,
        }
    }

    pub fn alloc_public(&mut self, value: F) -> Variable {
        assert_eq!(
            self.cs.num_public, self.cs.num_vars,
            "public inputs must be allocated first"
        );
        let v = self.alloc(value);
        self.cs.num_public += 1;
        v
    }

    pub fn alloc(&mut self, value: F) -> Variable {
        let v = Variable(self.cs.num_vars);
        self.cs.num_vars += 1;
        self.values.push(value);
        v
    }

    pub fn alloc_lc(&mut self, value: F) -> Lc<F> {
        Lc::from_var(self.alloc(value))
    }

    pub fn set_label(&mut self, label: Gadget) {
        self.label = label;
    }

    pub fn label(&self) -> Gadget {
        self.label
    }

    /// Runs `f` with `label` applied, restoring the previous label afterwards.
    pub fn labeled<T>(&mut self, label: Gadget, f: impl FnOnce(&mut Self) -> T) -> T {
        let prev = self.label;
        self.label = label;
        let out = f(self);
        self.label = prev;
        out
    }

    pub fn enforce(&mut self, a: Lc<F>, b: Lc<F>, c: Lc<F>) {
        self.cs.constraints.push(Constraint {
            a,
            b,
            c,
            label: self.label,
        });
    }

    pub fn enforce_equal(&mut self, x: Lc<F>, y: Lc<F>) {
        self.enforce(x - y, Lc::constant(F::one()), Lc::zero());
    }

    pub fn mul(&mut self, a: &Lc<F>, b: &Lc<F>) -> Lc<F> {
        let value = self.eval(a) * self.eval(b);
        let out = self.alloc_lc(value);
        self.enforce(a.clone(), b.clone(), out.clone());
        out
    }

    pub fn eval(&self, lc: &Lc<F>) -> F {
        lc.evaluate(&self.values)
    }

    pub fn num_constraints(&self) -> usize {
        self.cs.constraints.len()
    }

    pub fn finish(self) -> (ConstraintSystem<F>, Assignment<F>) {
        debug_assert!(self.cs.num_public <= NUM_PUBLIC);
        (self.cs, self.values)
    }
}
