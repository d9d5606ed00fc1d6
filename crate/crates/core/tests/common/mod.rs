//! Shared fixtures and random generators for the integration tests.
#![allow(dead_code)]

use fractvec_core::hilbert::{norm, real_vector};
use fractvec_core::integral::ContinuousFunction;
use fractvec_core::markov::IFSystem;
use fractvec_core::measure::{Atom, Piece};
use fractvec_core::{AffineMap, Field, Interval, MatrixOperator, Vector, VectorMeasure, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Cantor maps, `R_i = P_i/10` with `P_1 = [[1,0],[2,1]]`, `P_2 = [[1,0],[2,−1]]`,
/// and base `μ⁰ = (λ/4, δ_0/4)`.
pub fn cantor_pair_system() -> IFSystem {
    let [w1, w2] = AffineMap::cantor();
    let p1 = MatrixOperator::from_real_rows(&[vec![1.0, 0.0], vec![2.0, 1.0]]).unwrap();
    let p2 = MatrixOperator::from_real_rows(&[vec![1.0, 0.0], vec![2.0, -1.0]]).unwrap();
    let tenth = C64::new(0.1, 0.0);
    let base = VectorMeasure::lebesgue(0.0, 1.0, real_vector(&[0.25, 0.0]), Field::Real)
        .unwrap()
        .add(&VectorMeasure::dirac(0.0, real_vector(&[0.0, 0.25]), Field::Real).unwrap())
        .unwrap();
    IFSystem::new(Field::Real, vec![w1, w2], vec![p1.scale(tenth), p2.scale(tenth)], Some(base)).unwrap()
}

/// Cantor maps with `R_1 = αI`, `R_2 = (1−α)I` on `K²`, no base.
pub fn cantor_mixing(alpha: f64) -> IFSystem {
    let [w1, w2] = AffineMap::cantor();
    IFSystem::new(
        Field::Real,
        vec![w1, w2],
        vec![
            MatrixOperator::scalar(2, C64::new(alpha, 0.0)),
            MatrixOperator::scalar(2, C64::new(1.0 - alpha, 0.0)),
        ],
        None,
    )
    .unwrap()
}

pub fn scalar(rng: &mut ChaCha8Rng, field: Field, r: f64) -> C64 {
    match field {
        Field::Real => C64::new(rng.gen_range(-r..r), 0.0),
        Field::Complex => C64::new(rng.gen_range(-r..r), rng.gen_range(-r..r)),
    }
}

pub fn vector(rng: &mut ChaCha8Rng, n: usize, field: Field, r: f64) -> Vector {
    Vector::from_iterator(n, (0..n).map(|_| scalar(rng, field, r)))
}

pub fn field(rng: &mut ChaCha8Rng) -> Field {
    if rng.gen_bool(0.5) {
        Field::Real
    } else {
        Field::Complex
    }
}

/// A map of `[0,1]` into itself with slope in `(−1, 1)`.
pub fn affine_map(rng: &mut ChaCha8Rng) -> AffineMap {
    let s: f64 = rng.gen_range(-0.9..0.9);
    let o = if s >= 0.0 {
        rng.gen_range(0.0..=1.0 - s)
    } else {
        rng.gen_range(-s..=1.0)
    };
    AffineMap::new(s, o).unwrap()
}

pub fn operator(rng: &mut ChaCha8Rng, n: usize, field: Field, r: f64) -> MatrixOperator {
    let rows: Vec<Vec<C64>> = (0..n).map(|_| (0..n).map(|_| scalar(rng, field, r)).collect()).collect();
    MatrixOperator::from_rows(&rows).unwrap()
}

/// A measure with up to `atoms` atoms and up to `pieces` density pieces.
pub fn measure(rng: &mut ChaCha8Rng, n: usize, field: Field, atoms: usize, pieces: usize) -> VectorMeasure {
    let atoms: Vec<Atom> = (0..rng.gen_range(0..=atoms))
        .map(|_| Atom {
            point: rng.gen_range(0.0..=1.0),
            weight: vector(rng, n, field, 1.0),
        })
        .collect();
    let pieces: Vec<Piece> = (0..rng.gen_range(0..=pieces))
        .map(|_| {
            let a: f64 = rng.gen_range(0.0..1.0);
            let b: f64 = rng.gen_range(0.0..1.0);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            Piece {
                interval: Interval::new(lo, hi.max(lo + 1e-3).min(1.0)).unwrap(),
                density: vector(rng, n, field, 1.0),
            }
        })
        .collect();
    VectorMeasure::new(n, field, atoms, pieces).unwrap()
}

/// An atomic measure with `2..=max_atoms` atoms and total zero.
pub fn zero_mass_atomic(rng: &mut ChaCha8Rng, n: usize, field: Field, max_atoms: usize) -> VectorMeasure {
    let k = rng.gen_range(2..=max_atoms);
    let mut atoms: Vec<Atom> = (0..k - 1)
        .map(|_| Atom {
            point: rng.gen_range(0.0..=1.0),
            weight: vector(rng, n, field, 1.0),
        })
        .collect();
    let sum = atoms.iter().fold(Vector::zeros(n), |acc, a| acc + &a.weight);
    atoms.push(Atom {
        point: rng.gen_range(0.0..=1.0),
        weight: -sum,
    });
    VectorMeasure::new(n, field, atoms, vec![]).unwrap()
}

/// A measure with atoms and pieces, corrected by one atom to total zero.
pub fn zero_mass(rng: &mut ChaCha8Rng, n: usize, field: Field) -> VectorMeasure {
    let m = measure(rng, n, field, 6, 3);
    let fix = VectorMeasure::dirac(rng.gen_range(0.0..=1.0), -m.total(), field).unwrap();
    m.add(&fix).unwrap()
}

/// Polynomial of degree `≤ deg` with coefficients in the unit cube.
pub fn polynomial(rng: &mut ChaCha8Rng, n: usize, field: Field, deg: usize) -> ContinuousFunction {
    let coeffs: Vec<Vector> = (0..=rng.gen_range(0..=deg)).map(|_| vector(rng, n, field, 1.0)).collect();
    ContinuousFunction::polynomial(coeffs).unwrap()
}

/// A random system with `1..=max_maps` maps; operators rescaled so that
/// `Σ‖R_i‖ ≤ budget`.
pub fn system(rng: &mut ChaCha8Rng, n: usize, field: Field, max_maps: usize, budget: f64, with_base: bool) -> IFSystem {
    let m = rng.gen_range(1..=max_maps);
    let maps: Vec<AffineMap> = (0..m).map(|_| affine_map(rng)).collect();
    let mut ops: Vec<MatrixOperator> = (0..m).map(|_| operator(rng, n, field, 1.0)).collect();
    let total: f64 = ops.iter().map(|r| r.operator_norm()).sum();
    if total > budget {
        let s = C64::new(budget / total, 0.0);
        ops = ops.iter().map(|r| r.scale(s)).collect();
    }
    let base = with_base.then(|| measure(rng, n, field, 3, 2));
    IFSystem::new(field, maps, ops, base).unwrap()
}

pub fn dist(a: &Vector, b: &Vector) -> f64 {
    norm(&(a - b))
}
