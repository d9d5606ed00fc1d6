//! The sesquilinear integral `∫ f dμ` of a vector function against a vector
//! measure.
//!
//! For a simple function `f = Σ 1_{A_i} x_i` the integral is
//! `Σ (x_i, μ(A_i))`; continuous functions are integrated exactly on atoms
//! and by adaptive Gauss-Legendre quadrature on density pieces. The function
//! value occupies the first (linear) slot of the scalar product, so the
//! integral is conjugate-linear in the measure.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::hilbert::{dot, norm, Vector, C64};
use crate::measure::VectorMeasure;
use crate::quadrature;
use crate::space::QuerySet;

/// A simple function over a finite partition of `[0,1]`.
#[derive(Debug, Clone)]
pub struct SimpleFunction {
    dim: usize,
    cells: Vec<(QuerySet, Vector)>,
}

impl SimpleFunction {
    /// Validates that the cells cover `[0,1]` pairwise disjointly.
    pub fn new(cells: Vec<(QuerySet, Vector)>) -> Result<Self> {
        let Some(dim) = cells.first().map(|c| c.1.len()) else {
            return Err(Error::BadPartition("no cells".into()));
        };
        let mut covered = QuerySet::empty();
        for (i, (set, value)) in cells.iter().enumerate() {
            check_dim(dim, value.len())?;
            if !covered.is_disjoint(set) {
                return Err(Error::BadPartition(format!("cell {i} overlaps an earlier cell")));
            }
            covered = covered.union(set);
        }
        if covered != QuerySet::full() {
            return Err(Error::BadPartition(format!(
                "cells miss {:?}",
                QuerySet::full().difference(&covered)
            )));
        }
        Ok(Self { dim, cells })
    }

    pub fn constant(x: Vector) -> Self {
        Self {
            dim: x.len(),
            cells: vec![(QuerySet::full(), x)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> &[(QuerySet, Vector)] {
        &self.cells
    }

    pub fn sup_norm(&self) -> f64 {
        self.cells.iter().map(|c| norm(&c.1)).fold(0.0, f64::max)
    }

    pub fn eval(&self, t: f64) -> Vector {
        self.cells
            .iter()
            .find(|c| c.0.contains(t))
            .map(|c| c.1.clone())
            .unwrap_or_else(|| Vector::zeros(self.dim))
    }
}

/// `Σ (x_i, μ(A_i))`.
pub fn integrate_simple(f: &SimpleFunction, mu: &VectorMeasure) -> Result<C64> {
    check_dim(f.dim, mu.dim())?;
    Ok(f.cells.iter().map(|(set, x)| dot(x, &mu.evaluate(set))).sum())
}

type Callable = dyn Fn(f64) -> Vector + Send + Sync;

/// A continuous function `[0,1] → K^n` with caller-declared bounds.
#[derive(Clone)]
pub struct ContinuousFunction {
    dim: usize,
    f: Arc<Callable>,
    sup_bound: f64,
    lipschitz: Option<f64>,
    breaks: Arc<[f64]>,
}

impl fmt::Debug for ContinuousFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuousFunction")
            .field("dim", &self.dim)
            .field("sup_bound", &self.sup_bound)
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

impl ContinuousFunction {
    pub fn new(
        dim: usize,
        sup_bound: f64,
        lipschitz: Option<f64>,
        f: impl Fn(f64) -> Vector + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            f: Arc::new(f),
            sup_bound,
            lipschitz,
            breaks: Arc::new([]),
        }
    }

    /// Declares points where the callable may jump. [`integrate`] splits
    /// density pieces there, so piecewise continuous callables integrate to
    /// full accuracy.
    pub fn with_breakpoints(mut self, mut points: Vec<f64>) -> Self {
        points.retain(|t| t.is_finite());
        points.sort_by(|a, b| a.total_cmp(b));
        points.dedup();
        self.breaks = points.into();
        self
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, 0.0, Some(0.0), move |_| Vector::zeros(dim))
    }

    pub fn constant(x: Vector) -> Self {
        let dim = x.len();
        let s = norm(&x);
        Self::new(dim, s, Some(0.0), move |_| x.clone())
    }

    /// `t ↦ Σ_k c_k t^k`; the declared bounds are `Σ‖c_k‖` and `Σ k‖c_k‖`.
    pub fn polynomial(coeffs: Vec<Vector>) -> Result<Self> {
        let dim = coeffs
            .first()
            .map(|c| c.len())
            .ok_or_else(|| Error::Invalid("polynomial needs at least one coefficient".into()))?;
        for c in &coeffs {
            check_dim(dim, c.len())?;
        }
        let sup: f64 = coeffs.iter().map(norm).sum();
        let lip: f64 = coeffs.iter().enumerate().map(|(k, c)| k as f64 * norm(c)).sum();
        Ok(Self::new(dim, sup, Some(lip), move |t| {
            let mut acc = Vector::zeros(dim);
            for c in coeffs.iter().rev() {
                acc = acc * C64::new(t, 0.0) + c;
            }
            acc
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    pub fn lipschitz_bound(&self) -> Option<f64> {
        self.lipschitz
    }

    #[inline]
    pub fn eval(&self, t: f64) -> Vector {
        (self.f)(t)
    }

    pub(crate) fn callable(&self) -> Arc<Callable> {
        Arc::clone(&self.f)
    }
}

/// `∫ f dμ` with total error at most `tol·(1 + ‖μ‖)`.
///
/// Atoms contribute `(f(t), x)` exactly; each density piece is integrated by
/// adaptive quadrature to absolute tolerance `tol / #pieces`.
pub fn integrate(f: &ContinuousFunction, mu: &VectorMeasure, tol: f64) -> Result<C64> {
    check_dim(f.dim, mu.dim())?;
    if !(tol > 0.0) {
        return Err(Error::Invalid("tolerance must be positive".into()));
    }
    let mut acc = C64::new(0.0, 0.0);
    for a in mu.atoms() {
        let v = f.eval(a.point);
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("function value"));
        }
        acc += dot(&v, &a.weight);
    }
    let pieces = mu.pieces();
    if !pieces.is_empty() {
        let piece_tol = tol / pieces.len() as f64;
        for p in pieces {
            let c = &p.density;
            let g = |t: f64| dot(&f.eval(t), c);
            let (lo, hi) = (p.interval.lo, p.interval.hi);
            let inner: Vec<f64> = f.breaks.iter().copied().filter(|&t| t > lo && t < hi).collect();
            let cuts: Vec<f64> = std::iter::once(lo).chain(inner).chain(std::iter::once(hi)).collect();
            let panel_tol = piece_tol / (cuts.len() - 1) as f64;
            for w in cuts.windows(2) {
                acc += quadrature::adaptive(&g, w[0], w[1], panel_tol)?;
            }
        }
    }
    Ok(acc)
}
