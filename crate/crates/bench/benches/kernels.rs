use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use orlicz_core::counterexample::{build_instance, membership, rho_c, t_operator, x_sr, BlockCombination};
use orlicz_core::norms::{luxemburg_norm, orlicz_norm_report};
use orlicz_core::orlicz::delta2_witnesses;
use orlicz_core::{FiniteSpace, FunctionSpec, OrliczFunction, OrliczPair, RandomVariable, Truncation, Variant};

fn position(n: usize) -> RandomVariable {
    let space = FiniteSpace::uniform(n);
    RandomVariable::new(&space, (0..n).map(|k| ((k as f64) * 0.7).sin() * 3.0).collect()).unwrap()
}

fn norms(c: &mut Criterion) {
    let x = position(256);
    let exp = OrliczFunction::Exp;
    let pair = OrliczPair::from_phi(exp.clone());
    c.bench_function("luxemburg_norm exp 256 atoms", |b| b.iter(|| luxemburg_norm(black_box(&x), &exp).unwrap()));
    c.bench_function("orlicz_norm exp 256 atoms", |b| b.iter(|| orlicz_norm_report(black_box(&x), &pair).unwrap()));
}

fn witnesses(c: &mut Criterion) {
    let exp = OrliczFunction::Exp;
    let sparse = FunctionSpec::DEFAULT_SPARSE.build().unwrap();
    c.bench_function("delta2_witnesses exp 30", |b| b.iter(|| delta2_witnesses(&exp, black_box(30), 1e300).unwrap()));
    c.bench_function("delta2_witnesses sparse 10", |b| {
        b.iter(|| delta2_witnesses(&sparse, black_box(10), 1e300).unwrap())
    });
}

fn counterexample(c: &mut Criterion) {
    let phi = FunctionSpec::DEFAULT_SPARSE.build().unwrap();
    let inst = build_instance(&phi, Truncation { i: 4, j: 4, n: 8 }, Variant::L).unwrap();
    let minus = t_operator(&inst, &BlockCombination::minus_w0()).unwrap();
    let member = t_operator(&inst, &x_sr(&inst, 3, 2).unwrap()).unwrap();
    c.bench_function("membership lp -W0", |b| b.iter(|| membership(&inst, black_box(&minus)).unwrap()));
    c.bench_function("membership lp X_32", |b| b.iter(|| membership(&inst, black_box(&member)).unwrap()));
    c.bench_function("rho_c -W0", |b| b.iter(|| rho_c(&inst, black_box(&BlockCombination::minus_w0())).unwrap()));
}

criterion_group!(benches, norms, witnesses, counterexample);
criterion_main!(benches);
