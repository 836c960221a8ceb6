use std::sync::Arc;

use orlicz_core::closure::{as_extraction, mazur_min_norm, order_dominator, split_with_budget};
use orlicz_core::norms::{luxemburg_norm, modular};
use orlicz_core::{FiniteSpace, FunctionSpec, OrliczFunction, RandomVariable};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_space(rng: &mut ChaCha8Rng, n: usize) -> Arc<FiniteSpace> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    FiniteSpace::from_probabilities(w.iter().map(|v| v / total).collect()).unwrap()
}

fn phi_by_index(k: usize) -> OrliczFunction {
    [FunctionSpec::Power { p: 2.0 }, FunctionSpec::Exp, FunctionSpec::Sparse { bursts: 8, ratio: 2.0 }][k % 3]
        .build()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn split_is_exact_and_minimal(seed in any::<u64>(), n in 2usize..10, k in 0usize..3, budget in 1e-3f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = phi_by_index(k);
        let space = random_space(&mut rng, n);
        let x = RandomVariable::new(&space, (0..n).map(|_| rng.gen_range(-4.0..4.0)).collect()).unwrap();
        let r = split_with_budget(&x, &phi, budget).unwrap();
        for ((z, w), v) in r.z.values().iter().zip(r.w.values()).zip(x.values()) {
            prop_assert!(*z == 0.0 || *w == 0.0, "supports overlap");
            prop_assert_eq!(z + w, *v);
        }
        let tail: f64 = x
            .values()
            .iter()
            .zip(space.probabilities())
            .filter(|(v, _)| v.abs() > r.k)
            .map(|(v, p)| p * phi.eval(v.abs()))
            .sum();
        prop_assert_eq!(tail, r.tail_modular);
        prop_assert!(tail <= budget);
        if let Some(lower) = r.next_lower_tail {
            prop_assert!(lower > budget);
        } else {
            prop_assert_eq!(r.k, 0.0);
        }
    }

    #[test]
    fn mazur_finds_zero_in_a_spanning_hull(seed in any::<u64>(), n in 3usize..8, k in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = phi_by_index(k);
        let space = random_space(&mut rng, n);
        let mut cands: Vec<RandomVariable> = (0..5)
            .map(|_| RandomVariable::new(&space, (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap())
            .collect();
        let mut last = RandomVariable::zero(&space);
        for c in &cands {
            last = last.add(&c.scale(-rng.gen_range(0.1..1.0))).unwrap();
        }
        cands.push(last);
        let r = mazur_min_norm(&cands, &phi, 1e-6).unwrap();
        prop_assert!(r.hull_contains_zero);
        prop_assert!(r.found && r.value < 1e-6, "{:?}", r);
        prop_assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

/// Sign pattern of the `m`-th Walsh function on `2^k` atoms.
fn walsh(m: usize, atoms: usize) -> Vec<f64> {
    (0..atoms).map(|a| if (a & m).count_ones() % 2 == 0 { 1.0 } else { -1.0 }).collect()
}

#[test]
fn steps_one_to_three_on_constructed_inputs() {
    let atoms = 64;
    let space = FiniteSpace::uniform(atoms);
    let phi = OrliczFunction::power(2.0).unwrap();
    let levels = 3;
    let mut next_walsh = 1;
    let mut z_parts = Vec::new();
    let mut w_parts = Vec::new();
    for n in 1..=levels {
        let budget = 0.5f64.powi(n as i32);
        // Terms of the sequence: a spike on a fresh atom over an oscillating bounded part.
        let group = 2 * 4usize.pow(n as u32 - 1);
        let mut bounded = Vec::new();
        for g in 0..group {
            let mut v: Vec<f64> = walsh(next_walsh, atoms).iter().map(|s| 0.5 * s).collect();
            next_walsh += 1;
            if g == 0 {
                v[n] += 2.0;
            }
            let x = RandomVariable::new(&space, v).unwrap();
            // Step I: peel the large values under the modular budget.
            let split = split_with_budget(&x, &phi, budget).unwrap();
            assert!(split.tail_modular <= budget);
            if g == 0 {
                assert!(modular(&split.z, &phi, 1.0).unwrap() <= budget);
                z_parts.push(split.z.clone());
            }
            bounded.push(split.w);
        }
        // Step II: a convex combination of the bounded parts with small norm.
        let m = mazur_min_norm(&bounded, &phi, budget).unwrap();
        assert!(m.found, "level {n}: {m:?}");
        let mut w = RandomVariable::zero(&space);
        for (c, b) in m.weights.iter().zip(&bounded) {
            w = w.add(&b.scale(*c)).unwrap();
        }
        assert!(luxemburg_norm(&w, &phi).unwrap() <= budget * (1.0 + 1e-9));
        w_parts.push(w);
    }
    // Step III: one dominator for every piece.
    let d = order_dominator(&z_parts, &w_parts, &phi).unwrap();
    assert!(d.holds && d.dominates, "{d:?}");
    assert!(d.sup_z_modular <= d.modular_sum + 1e-15);
    assert!(d.modular_sum <= d.bound && d.bound <= 1.0);
    for row in &d.markov {
        assert!(row.lhs >= 0.0);
        assert!(row.lhs <= row.modular && row.modular <= 0.5f64.powi(row.n as i32), "{row:?}");
    }

    // Extraction: E|X_n − X| ≤ 2⁻ⁿ gives the capped-sup tail 2^{1−n}.
    let limit = RandomVariable::new(&space, (0..atoms).map(|a| (a as f64).sin()).collect()).unwrap();
    let seq: Vec<RandomVariable> = (1..=12)
        .map(|n| {
            let mut v = limit.values().to_vec();
            v[n % atoms] += 0.9 * 0.5f64.powi(n as i32) * atoms as f64;
            v[(3 * n) % atoms] -= 0.05 * 0.5f64.powi(n as i32);
            RandomVariable::new(&space, v).unwrap()
        })
        .collect();
    let e = as_extraction(&seq, &limit).unwrap();
    assert!(e.holds, "{e:?}");
    for row in &e.rows {
        assert!(row.capped_tail <= row.tail_bound);
    }
}
