use orlicz_core::orlicz::{
    conjugate_value, delta2_witnesses, numeric_conjugate_value, young_check, PiecewiseSlopeSchedule,
};
use orlicz_core::{FunctionSpec, LabError, OrliczFunction};

fn catalog() -> Vec<(String, OrliczFunction)> {
    let specs = [
        FunctionSpec::Power { p: 1.5 },
        FunctionSpec::Power { p: 2.0 },
        FunctionSpec::Power { p: 3.0 },
        FunctionSpec::Exp,
        FunctionSpec::Entropy,
        FunctionSpec::Sparse { bursts: 6, ratio: 2.0 },
    ];
    specs.iter().map(|s| (s.to_string(), s.build().unwrap())).collect()
}

fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let r = (hi / lo).powf(1.0 / (n - 1) as f64);
    (0..n).map(|k| lo * r.powi(k as i32)).collect()
}

#[test]
fn conjugate_is_convex_increasing_and_vanishes_at_zero() {
    for (name, phi) in catalog() {
        assert_eq!(conjugate_value(&phi, 0.0).unwrap(), 0.0, "{name}");
        let grid = geometric_grid(1e-3, 50.0, 120);
        let vals: Vec<f64> = grid.iter().map(|&s| conjugate_value(&phi, s).unwrap()).collect();
        for w in vals.windows(2) {
            assert!(w[1] >= w[0], "{name}: conjugate decreases");
        }
        for w in grid.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = conjugate_value(&phi, 0.5 * (a + b)).unwrap();
            let chord = 0.5 * (conjugate_value(&phi, a).unwrap() + conjugate_value(&phi, b).unwrap());
            assert!(mid <= chord + 1e-12 * (1.0 + chord), "{name}: convexity fails on [{a}, {b}]");
        }
    }
}

#[test]
fn smooth_biconjugation_reproduces_phi() {
    let smooth = [
        FunctionSpec::Power { p: 1.5 },
        FunctionSpec::Power { p: 2.0 },
        FunctionSpec::Power { p: 3.0 },
        FunctionSpec::Exp,
        FunctionSpec::Entropy,
    ];
    for spec in smooth {
        let phi = spec.build().unwrap();
        let psi = phi.analytic_conjugate().unwrap();
        for t in geometric_grid(1e-2, 20.0, 60) {
            let back = numeric_conjugate_value(&psi, t).unwrap();
            let want = phi.eval(t);
            assert!((back - want).abs() <= 1e-6 * want.max(1e-12), "{spec}: Φ**({t}) = {back}, Φ = {want}");
        }
    }
}

#[test]
fn piecewise_biconjugation_is_exact() {
    let phi = FunctionSpec::Sparse { bursts: 8, ratio: 2.0 }.build().unwrap();
    let back = phi.analytic_conjugate().unwrap().analytic_conjugate().unwrap();
    for t in geometric_grid(1e-3, 1e18, 400) {
        let (a, b) = (phi.eval(t), back.eval(t));
        assert!((a - b).abs() <= 1e-9 * (1.0 + a), "t = {t}: {a} vs {b}");
    }
    // The numeric route agrees with the closed form on the conjugate side.
    for s in geometric_grid(0.5, 1e6, 80) {
        let exact = conjugate_value(&phi, s).unwrap();
        let numeric = numeric_conjugate_value(&phi, s).unwrap();
        assert!((exact - numeric).abs() <= 1e-9 * (1.0 + exact), "s = {s}: {exact} vs {numeric}");
    }
}

#[test]
fn young_inequality_on_grid() {
    for (name, phi) in catalog() {
        let grid = geometric_grid(1e-3, 30.0, 50);
        let mut violations = 0;
        for &t in &grid {
            for &s in &grid {
                if !young_check(&phi, t, s).unwrap().holds {
                    violations += 1;
                }
            }
        }
        assert_eq!(violations, 0, "{name}");
    }
}

#[test]
fn witnesses_satisfy_defining_inequality() {
    let sparse = FunctionSpec::Sparse { bursts: 24, ratio: 2.0 }.build().unwrap();
    let cases = [(OrliczFunction::Exp, 30), (sparse.clone(), 10), (sparse.analytic_conjugate().unwrap(), 10)];
    for (phi, count) in cases {
        for w in delta2_witnesses(&phi, count, 1e300).unwrap() {
            let a = phi.eval(w.t);
            let b = phi.eval(2.0 * w.t);
            assert_eq!((a, b), (w.phi_t, w.phi_2t));
            assert!(a >= 3.0 && b > 2f64.powi(w.n as i32) * a, "{w:?}");
        }
    }
    let e = OrliczFunction::Exp;
    assert!(e.eval(6.0) > 16.0 * e.eval(3.0));
    for p in [1.5, 2.0, 3.0] {
        let phi = OrliczFunction::power(p).unwrap();
        assert!(matches!(delta2_witnesses(&phi, 3, 1e12), Err(LabError::WitnessNotFound { .. })));
    }
}

#[test]
fn sparse_schedule_rejects_overflow() {
    assert!(PiecewiseSlopeSchedule::sparse(40, 2.0).is_err());
    assert!(PiecewiseSlopeSchedule::sparse(3, 1.0).is_err());
}
