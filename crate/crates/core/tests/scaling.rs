//! Constraint counts grow as `alpha*m*depth + beta*m + gamma`.

use pol_core::circuit::{build_circuit, CircuitParams, PublicInputs, SampleParams};
use pol_core::field::{Fp61, PrimeField};

fn count(m: usize, depth: usize) -> usize {
    let params = CircuitParams::<Fp61> {
        resolution: 9,
        depth,
        s1: 100,
        s2: 200,
        max_gap_slots: 5,
        min_samples: 1,
        proximity: None,
        schnorr: None,
        samples: vec![
            SampleParams {
                commitment: Fp61::zero(),
                witness_xy: None,
            };
            m
        ],
    };
    let (cs, _) = build_circuit(&params, &PublicInputs::new([0; 32], 100, 200), None).unwrap();
    cs.constraints.len()
}

#[test]
fn counts_fit_affine_model_exactly() {
    let ms = [1usize, 2, 4, 8, 16];
    let depths = [3usize, 4, 5, 6];
    let c = |m, d| count(m, d) as i64;
    let alpha = (c(2, 4) - c(1, 4)) - (c(2, 3) - c(1, 3));
    let beta = (c(2, 3) - c(1, 3)) - 3 * alpha;
    let gamma = c(1, 3) - 3 * alpha - beta;
    assert!(alpha > 0 && beta > 0);
    for &m in &ms {
        for &d in &depths {
            let model = alpha * (m * d) as i64 + beta * m as i64 + gamma;
            assert_eq!(c(m, d), model, "m={m} depth={d}");
        }
    }
}

#[test]
fn per_level_cost_is_one_hash_plus_selector() {
    let per_level = count(1, 5) - count(1, 4);
    let per_sample = count(2, 4) - count(1, 4);
    assert!(per_level > 0 && per_sample > 5 * per_level);
}
