use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use fractvec_core::hilbert::real_vector;
use fractvec_core::mk_norm::{mk_lower_bound, mk_star_exact};
use fractvec_core::{AffineMap, Field, IFSystem, MatrixOperator, QuerySet, TestBall, VectorMeasure, C64};

/// Cantor maps with `R_i = P_i/10` and base `(λ/4, δ_0/4)` on `R²`.
fn cantor_pair() -> IFSystem {
    let [w1, w2] = AffineMap::cantor();
    let tenth = C64::new(0.1, 0.0);
    let p1 = MatrixOperator::from_real_rows(&[vec![1.0, 0.0], vec![2.0, 1.0]]).unwrap();
    let p2 = MatrixOperator::from_real_rows(&[vec![1.0, 0.0], vec![2.0, -1.0]]).unwrap();
    let base = VectorMeasure::lebesgue(0.0, 1.0, real_vector(&[0.25, 0.0]), Field::Real)
        .unwrap()
        .add(&VectorMeasure::dirac(0.0, real_vector(&[0.0, 0.25]), Field::Real).unwrap())
        .unwrap();
    IFSystem::new(Field::Real, vec![w1, w2], vec![p1.scale(tenth), p2.scale(tenth)], Some(base)).unwrap()
}

/// A zero-mass measure with `k` alternating atoms and pieces.
fn zero_mass(k: usize) -> VectorMeasure {
    let mut mu = VectorMeasure::zero(2, Field::Real);
    for i in 0..k {
        let t = (i as f64 + 0.5) / k as f64;
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        let atom = VectorMeasure::dirac(t, real_vector(&[s, 0.5 * s]), Field::Real).unwrap();
        let lo = i as f64 / k as f64;
        let piece = VectorMeasure::lebesgue(lo, lo + 0.5 / k as f64, real_vector(&[-s, 0.25]), Field::Real).unwrap();
        mu = mu.add(&atom).unwrap().add(&piece).unwrap();
    }
    let m = mu.total();
    mu.sub(&VectorMeasure::dirac(1.0, m, Field::Real).unwrap()).unwrap()
}

fn bench_fixed_point(c: &mut Criterion) {
    let sys = cantor_pair();
    let set = QuerySet::closed(0.1234, 0.789).unwrap();
    c.bench_function("eval_fixed_point interval tol 1e-10", |b| {
        b.iter(|| sys.eval_fixed_point(black_box(&set), 1e-10).unwrap())
    });
    let start = VectorMeasure::zero(2, Field::Real);
    c.bench_function("iterate_fixed_point tol 1e-6", |b| {
        b.iter(|| sys.iterate_fixed_point(black_box(&start), 1e-6, 100).unwrap())
    });
}

fn bench_norms(c: &mut Criterion) {
    let mu = zero_mass(32);
    c.bench_function("mk_star_exact 33 atoms 32 pieces", |b| b.iter(|| mk_star_exact(black_box(&mu)).unwrap()));
    let mut group = c.benchmark_group("mk_lower_bound");
    group.sample_size(10);
    group.bench_function("BL1 grid 100", |b| {
        b.iter(|| mk_lower_bound(black_box(&mu), TestBall::BL1, 100, 500).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_fixed_point, bench_norms);
criterion_main!(benches);
