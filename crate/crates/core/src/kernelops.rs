//! Separable polynomial kernels on `L²([0,1])` and the finite-rank reduction
//! of the invariance equation
//!
//! ```text
//! φ(x) = g(x) + Σ_j ∫₀¹ F_j(x, y) φ(y) dy
//! ```
//!
//! With `F_j(x,y) = s_j Σ_k u_{jk}(x) v_{jk}(y)` the solution is `g` plus a
//! combination of the `u_{jk}`, whose coefficients are the moments
//! `m_{jk} = ∫ v_{jk} φ`. Monomial moments are exact, so the reduction
//! carries no discretization error.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// A real polynomial in the monomial basis, `c[k]` multiplying `x^k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polynomial(pub Vec<f64>);

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Self(coeffs);
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Self(Vec::new())
    }

    pub fn monomial(k: usize, c: f64) -> Self {
        let mut v = vec![0.0; k + 1];
        v[k] = c;
        Self::new(v)
    }

    fn trim(&mut self) {
        while self.0.last() == Some(&0.0) {
            self.0.pop();
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    /// Coefficient of `x^k`, zero past the degree.
    pub fn coeff(&self, k: usize) -> f64 {
        self.0.get(k).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let n = self.0.len().max(other.0.len());
        Polynomial::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn scale(&self, a: f64) -> Polynomial {
        Polynomial::new(self.0.iter().map(|c| a * c).collect())
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        if self.0.is_empty() || other.0.is_empty() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }

    /// `∫₀¹ p`, using `∫₀¹ x^k = 1/(k+1)`.
    pub fn integral01(&self) -> f64 {
        self.0.iter().enumerate().map(|(k, c)| c / (k + 1) as f64).sum()
    }
}

/// `F(x, y) = scale · Σ_k u_k(x) v_k(y)`.
#[derive(Debug, Clone, Serialize)]
pub struct SeparableKernel {
    pub terms: Vec<(Polynomial, Polynomial)>,
    pub scale: f64,
}

impl SeparableKernel {
    pub fn new(terms: Vec<(Polynomial, Polynomial)>, scale: f64) -> Result<Self> {
        if !scale.is_finite() || terms.iter().any(|(u, v)| !all_finite(u) || !all_finite(v)) {
            return Err(Error::NonFinite("kernel coefficients"));
        }
        Ok(Self { terms, scale })
    }

    /// `scale · x^p y^q`.
    pub fn monomial(p: usize, q: usize, scale: f64) -> Result<Self> {
        Self::new(vec![(Polynomial::monomial(p, 1.0), Polynomial::monomial(q, 1.0))], scale)
    }

    pub fn zero() -> Self {
        Self {
            terms: Vec::new(),
            scale: 0.0,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.scale * self.terms.iter().map(|(u, v)| u.eval(x) * v.eval(y)).sum::<f64>()
    }

    pub fn rank(&self) -> usize {
        self.terms.len()
    }
}

fn all_finite(p: &Polynomial) -> bool {
    p.0.iter().all(|c| c.is_finite())
}

/// `sup |F|` over `[0,1]²`: maximum over a `grid × grid` lattice, then
/// coordinate-wise golden-section refinement from the best lattice point.
/// The result is never below the lattice maximum.
pub fn kernel_sup_bound(f: &SeparableKernel, grid: usize) -> Result<f64> {
    if grid < 2 {
        return Err(Error::Invalid(format!("grid must be at least 2, got {grid}")));
    }
    let h = 1.0 / (grid - 1) as f64;
    let abs = |x: f64, y: f64| f.eval(x, y).abs();
    let mut best = (0.0, 0.0, abs(0.0, 0.0));
    for i in 0..grid {
        for j in 0..grid {
            let (x, y) = (i as f64 * h, j as f64 * h);
            let v = abs(x, y);
            if v > best.2 {
                best = (x, y, v);
            }
        }
    }
    let (mut x, mut y, mut val) = best;
    for _ in 0..20 {
        let nx = golden_max(|s| abs(s, y), (x - h).max(0.0), (x + h).min(1.0));
        let ny = golden_max(|s| abs(nx, s), (y - h).max(0.0), (y + h).min(1.0));
        let v = abs(nx, ny);
        if v <= val {
            break;
        }
        (x, y, val) = (nx, ny, v);
    }
    Ok(val)
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    // the endpoints can beat the interior on monotone stretches
    let mut best = (0.5 * (a + b), f(0.5 * (a + b)));
    for t in [a, b] {
        let v = f(t);
        if v > best.1 {
            best = (t, v);
        }
    }
    best.0
}

/// The default inhomogeneous term `x/2`.
pub fn half_identity() -> Polynomial {
    Polynomial::new(vec![0.0, 0.5])
}

/// Flattened `(scale, u, v)` triples of all kernels.
fn rank_one_terms(kernels: &[SeparableKernel]) -> Vec<(f64, &Polynomial, &Polynomial)> {
    kernels
        .iter()
        .flat_map(|k| k.terms.iter().map(move |(u, v)| (k.scale, u, v)))
        .collect()
}

/// `(A, b)` of the moment system `m = b + A m`, where
/// `A_pq = s_q ∫ v_p u_q` and `b_p = ∫ v_p g`.
pub fn moment_system(kernels: &[SeparableKernel], g: &Polynomial) -> (DMatrix<f64>, DVector<f64>) {
    let terms = rank_one_terms(kernels);
    let r = terms.len();
    let a = DMatrix::from_fn(r, r, |p, q| terms[q].0 * terms[p].2.mul(terms[q].1).integral01());
    let b = DVector::from_fn(r, |p, _| terms[p].2.mul(g).integral01());
    (a, b)
}

fn assemble(kernels: &[SeparableKernel], g: &Polynomial, m: &DVector<f64>) -> Polynomial {
    rank_one_terms(kernels)
        .iter()
        .zip(m.iter())
        .fold(g.clone(), |acc, ((s, u, _), mq)| acc.add(&u.scale(s * mq)))
}

/// Solves `φ = g + Σ_j ∫F_j(·,y)φ(y)dy` by LU on the moment system.
pub fn solve_invariance(kernels: &[SeparableKernel], g: &Polynomial) -> Result<Polynomial> {
    let (a, b) = moment_system(kernels, g);
    let r = b.len();
    if r == 0 {
        return Ok(g.clone());
    }
    let lhs = DMatrix::<f64>::identity(r, r) - a;
    let m = lhs
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Singular("moment system".into()))?;
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Singular("moment system".into()));
    }
    Ok(assemble(kernels, g, &m))
}

/// Moments from `iters` steps of `m ← b + A m` starting at zero.
pub fn neumann_moments(kernels: &[SeparableKernel], g: &Polynomial, iters: usize) -> DVector<f64> {
    let (a, b) = moment_system(kernels, g);
    let mut m = DVector::zeros(b.len());
    for _ in 0..iters {
        m = &b + &a * &m;
    }
    m
}

/// Moments `∫ v_p φ` of a candidate solution.
pub fn moments_of(kernels: &[SeparableKernel], phi: &Polynomial) -> DVector<f64> {
    let terms = rank_one_terms(kernels);
    DVector::from_iterator(terms.len(), terms.iter().map(|(_, _, v)| v.mul(phi).integral01()))
}

/// `max |φ(x) − g(x) − Σ_j ∫F_j(x,y)φ(y)dy|` over `samples` equispaced `x`.
/// The inner integrals are recomputed from `φ` itself.
pub fn invariance_residual(kernels: &[SeparableKernel], g: &Polynomial, phi: &Polynomial, samples: usize) -> f64 {
    let rhs = assemble(kernels, g, &moments_of(kernels, phi));
    let n = samples.max(2);
    (0..n)
        .map(|i| {
            let x = i as f64 / (n - 1) as f64;
            (phi.eval(x) - rhs.eval(x)).abs()
        })
        .fold(0.0, f64::max)
}

/// `Σ_i ‖h_{B_i}‖₂` over the equipartition of `[0,1]` into `n` cells, where
/// `h_B(t) = λ(B ∩ [0,t])`. For `B = [α,β]`,
/// `‖h_B‖₂² = (β−α)³/3 + (β−α)²(1−β)`.
///
/// These sums are lower bounds of the variation of `B ↦ h_B` in `L²`,
/// which equals `2/3`.
pub fn partition_variation_estimate(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Invalid("partition needs at least one cell".into()));
    }
    let d = 1.0 / n as f64;
    Ok((0..n)
        .map(|i| {
            let beta = (i + 1) as f64 / n as f64;
            (d * d * d / 3.0 + d * d * (1.0 - beta)).sqrt()
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quarter_monomial_kernels() -> [SeparableKernel; 2] {
        [
            SeparableKernel::monomial(1, 1, 0.25).unwrap(),
            SeparableKernel::monomial(2, 2, 0.25).unwrap(),
        ]
    }

    #[test]
    fn polynomial_arithmetic() {
        let p = Polynomial::new(vec![1.0, 2.0, 0.0]);
        assert_eq!(p.degree(), Some(1));
        let q = p.mul(&p);
        assert_eq!(q.coeffs(), &[1.0, 4.0, 4.0]);
        assert!((q.integral01() - (1.0 + 2.0 + 4.0 / 3.0)).abs() < 1e-15);
        assert_eq!(q.eval(2.0), 25.0);
        assert_eq!(Polynomial::zero().degree(), None);
    }

    #[test]
    fn sup_bound_examples() {
        let [f1, f2] = quarter_monomial_kernels();
        assert!((kernel_sup_bound(&f1, 11).unwrap() - 0.25).abs() < 1e-15);
        assert!((kernel_sup_bound(&f2, 11).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(kernel_sup_bound(&SeparableKernel::zero(), 5).unwrap(), 0.0);
        let f = SeparableKernel::new(
            vec![(Polynomial::new(vec![-0.5, 1.0]), Polynomial::monomial(1, 1.0))],
            1.0,
        )
        .unwrap();
        for g in [2, 5, 17] {
            assert!((kernel_sup_bound(&f, g).unwrap() - 0.5).abs() <= 1.0 / g as f64);
        }
        assert!(kernel_sup_bound(&f, 1).is_err());
    }

    #[test]
    fn zero_kernels_give_inhomogeneity() {
        let phi = solve_invariance(&[SeparableKernel::zero()], &half_identity()).unwrap();
        assert_eq!(phi, half_identity());
        let phi = solve_invariance(&[], &half_identity()).unwrap();
        assert_eq!(phi, half_identity());
    }

    #[test]
    fn moment_system_has_expected_entries() {
        let (a, b) = moment_system(&quarter_monomial_kernels(), &half_identity());
        // a = 1/6 + a/12 + b/16, b = 1/8 + a/16 + b/20
        let want_a = [[1.0 / 12.0, 1.0 / 16.0], [1.0 / 16.0, 1.0 / 20.0]];
        for p in 0..2 {
            for q in 0..2 {
                assert!((a[(p, q)] - want_a[p][q]).abs() < 1e-16);
            }
        }
        assert!((b[0] - 1.0 / 6.0).abs() < 1e-16 && (b[1] - 1.0 / 8.0).abs() < 1e-16);
    }

    #[test]
    fn solution_and_cross_checks() {
        let ks = quarter_monomial_kernels();
        let phi = solve_invariance(&ks, &half_identity()).unwrap();
        assert!(phi.coeff(0).abs() < 1e-15);
        assert!((phi.coeff(1) - 1824.0 / 3329.0).abs() < 1e-12);
        assert!((phi.coeff(2) - 120.0 / 3329.0).abs() < 1e-12);
        assert!(invariance_residual(&ks, &half_identity(), &phi, 1000) < 1e-12);
        let direct = moments_of(&ks, &phi);
        let neumann = neumann_moments(&ks, &half_identity(), 200);
        assert!((direct - neumann).amax() < 1e-12);
    }

    #[test]
    fn partition_estimates() {
        assert!((partition_variation_estimate(1).unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let mut prev = 0.0;
        for k in 0..=12 {
            let v = partition_variation_estimate(1 << k).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        assert!((2.0 / 3.0 - 1e-3..=2.0 / 3.0).contains(&prev));
        assert!(partition_variation_estimate(0).is_err());
    }
}
