use std::sync::OnceLock;

use orlicz_core::counterexample::{
    build_instance, limit_certificate, membership, verify_certificate, CertEntry, Membership,
};
use orlicz_core::{CounterexampleInstance, FunctionSpec, MembershipCertificate, TImage, Truncation, Variant};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instances() -> &'static Vec<CounterexampleInstance> {
    static CELL: OnceLock<Vec<CounterexampleInstance>> = OnceLock::new();
    CELL.get_or_init(|| {
        let phi = FunctionSpec::DEFAULT_SPARSE.build().unwrap();
        let shapes = [(2, 2, 3), (3, 2, 4), (2, 3, 4), (3, 3, 5), (4, 4, 8)];
        let mut out = Vec::new();
        for variant in [Variant::L, Variant::H] {
            for &(i, j, n) in &shapes {
                out.push(build_instance(&phi, Truncation { i, j, n }, variant).unwrap());
            }
        }
        out
    })
}

/// Random `y ≥ 0` with `Σ_i 2^i ‖y_i‖₁ = 1`.
fn random_y(rng: &mut ChaCha8Rng, i_max: usize, j_max: usize) -> Vec<Vec<f64>> {
    let mut y: Vec<Vec<f64>> =
        (0..i_max).map(|_| (0..j_max).map(|_| if rng.gen_bool(0.6) { rng.gen_range(0.0..1.0) } else { 0.0 }).collect()).collect();
    y[0][0] += 0.1;
    let norm: f64 = y.iter().enumerate().map(|(i, r)| 2f64.powi(i as i32 + 1) * r.iter().sum::<f64>()).sum();
    y.iter_mut().for_each(|r| r.iter_mut().for_each(|v| *v /= norm));
    y
}

fn certificate(lambda: f64, y: &[Vec<f64>]) -> MembershipCertificate {
    let mut entries = Vec::new();
    let mut fin = 0.0;
    for (i, row) in y.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v > 0.0 {
                entries.push(CertEntry { i: i + 1, j: j + 1, value: v });
                fin += 4f64.powi(i as i32 + 1) * v;
            }
        }
    }
    MembershipCertificate { lambda, y: entries, finiteness: Some(fin) }
}

/// Smallest image the constraints allow for `(λ, y)`, written out directly
/// from the constraint rows.
fn minimal_image(inst: &CounterexampleInstance, lambda: f64, y: &[Vec<f64>]) -> TImage {
    let Truncation { i: i_max, j: j_max, n: n_max } = inst.truncation;
    let mut img = TImage::zero(inst);
    img.u_tail = None;
    img.a = -lambda;
    match inst.variant {
        Variant::L => {
            for (m, &(i, j)) in inst.cells.iter().enumerate() {
                img.v[m] = lambda * y[i - 1][j - 1];
            }
            for n in 1..=n_max {
                let mut s = 0.0;
                for i in 1..=i_max {
                    for j in 1..=n.min(j_max) {
                        s += 4f64.powi(i as i32) * y[i - 1][j - 1];
                    }
                }
                img.u[n - 1] = lambda * s;
            }
        }
        Variant::H => {
            for j in 1..=j_max {
                img.v[j - 1] = lambda * (1..=i_max).map(|i| 4f64.powi(i as i32) * y[i - 1][j - 1]).sum::<f64>();
            }
            for n in 1..=n_max {
                let mut s = 0.0;
                for i in 1..=i_max {
                    for j in n..=j_max {
                        s += y[i - 1][j - 1];
                    }
                }
                img.u[n - 1] = lambda * s;
            }
        }
    }
    img
}

fn random_slack(rng: &mut ChaCha8Rng, inst: &CounterexampleInstance, scale: f64) -> TImage {
    let mut s = TImage::zero(inst);
    s.u_tail = None;
    s.a = rng.gen_range(0.0..scale);
    s.u.iter_mut().for_each(|x| *x = rng.gen_range(0.0..scale));
    s.v.iter_mut().for_each(|x| *x = rng.gen_range(0.0..scale));
    s
}

fn random_member(rng: &mut ChaCha8Rng, inst: &CounterexampleInstance) -> (TImage, f64, Vec<Vec<f64>>) {
    let Truncation { i, j, .. } = inst.truncation;
    let lambda = rng.gen_range(0.0..3.0);
    let y = random_y(rng, i, j);
    let slack = random_slack(rng, inst, 0.5);
    (minimal_image(inst, lambda, &y).axpy(1.0, &slack), lambda, y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn members_form_an_upward_closed_cone(seed in any::<u64>(), which in 0usize..10, mu in 0.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = &instances()[which];
        let (a, la, ya) = random_member(&mut rng, inst);
        let (b, lb, yb) = random_member(&mut rng, inst);
        let ca = certificate(la, &ya);
        prop_assert!(verify_certificate(inst, &a, &ca).is_ok());
        prop_assert!(verify_certificate(inst, &b, &certificate(lb, &yb)).is_ok());
        prop_assert!(membership(inst, &a).unwrap().is_member());

        // Sum: (λ + λ′)y″ = λy + λ′y′.
        let sum = a.axpy(1.0, &b);
        let l = la + lb;
        let ysum: Vec<Vec<f64>> = ya
            .iter()
            .zip(&yb)
            .map(|(r, s)| r.iter().zip(s).map(|(p, q)| if l > 0.0 { (la * p + lb * q) / l } else { 0.5 * (p + q) }).collect())
            .collect();
        let cs = certificate(l, &ysum);
        prop_assert!(verify_certificate(inst, &sum, &cs).is_ok(), "{:?}", verify_certificate(inst, &sum, &cs));
        prop_assert!(membership(inst, &sum).unwrap().is_member());

        let scaled = TImage::zero(inst).axpy(mu, &a);
        prop_assert!(verify_certificate(inst, &scaled, &certificate(mu * la, &ya)).is_ok());
        prop_assert!(membership(inst, &scaled).unwrap().is_member());

        let above = a.axpy(1.0, &random_slack(&mut rng, inst, 2.0));
        prop_assert!(verify_certificate(inst, &above, &ca).is_ok());
        match membership(inst, &above).unwrap() {
            Membership::Member { certificate } => prop_assert!(verify_certificate(inst, &above, &certificate).is_ok()),
            other => prop_assert!(false, "upward closure failed: {:?}", other),
        }
    }

    #[test]
    fn strictly_negative_cash_is_never_accepted(seed in any::<u64>(), which in 0usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = &instances()[which];
        // a < 0 with nothing on u or v: λ must be positive, then u and v must carry mass.
        let mut img = TImage::zero(inst);
        img.a = -rng.gen_range(0.1..5.0);
        match membership(inst, &img).unwrap() {
            Membership::NotMember { verified, .. } => prop_assert!(verified),
            Membership::Member { .. } => prop_assert!(false, "−c·1 accepted"),
        }
    }
}

fn perturbed(y: &[Vec<f64>], p: usize, sign: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = y
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().map(|v| v * (1.0 + sign / (p as f64 + 1.0)).powi(i as i32 + 1)).collect())
        .collect();
    let norm: f64 = out.iter().enumerate().map(|(i, r)| 2f64.powi(i as i32 + 1) * r.iter().sum::<f64>()).sum();
    out.iter_mut().for_each(|r| r.iter_mut().for_each(|v| *v /= norm));
    out
}

#[test]
fn limit_certificates_for_crafted_families() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..20 {
        let inst = &instances()[rng.gen_range(0..10)];
        let Truncation { i, j, .. } = inst.truncation;
        let y_star = random_y(&mut rng, i, j);
        let slack = random_slack(&mut rng, inst, 0.3);
        let count = 24;
        let (members, limit): (Vec<(TImage, MembershipCertificate)>, TImage) = match trial % 3 {
            // Constant family.
            0 => {
                let lambda = rng.gen_range(0.5..2.0);
                let img = minimal_image(inst, lambda, &y_star).axpy(1.0, &slack);
                let cert = certificate(lambda, &y_star);
                (vec![(img.clone(), cert); count], img)
            }
            // λ_p → 0 on a nonnegative limit.
            1 => {
                let members = (1..=count)
                    .map(|p| {
                        let lambda = 2f64.powi(-(p as i32));
                        let y = perturbed(&y_star, p, 1.0);
                        (minimal_image(inst, lambda, &y).axpy(1.0, &slack), certificate(lambda, &y))
                    })
                    .collect();
                (members, slack.clone())
            }
            // y_p = y*(1 ± 1/p) renormalised, λ_p = 1 + (±1)^p/p.
            _ => {
                let members = (1..=count)
                    .map(|p| {
                        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                        let lambda = 1.0 + sign / (p as f64 + 1.0);
                        let y = perturbed(&y_star, p, sign);
                        (minimal_image(inst, lambda, &y).axpy(1.0, &slack), certificate(lambda, &y))
                    })
                    .collect();
                (members, minimal_image(inst, 1.0, &y_star).axpy(1.0, &slack))
            }
        };
        let report = limit_certificate(inst, &members, &limit)
            .unwrap_or_else(|e| panic!("trial {trial} ({:?}): {e}", inst.truncation));
        verify_certificate(inst, &limit, &report.certificate).unwrap();
        if trial % 3 == 1 {
            assert!(report.canonical, "trial {trial}");
        }
    }
}
