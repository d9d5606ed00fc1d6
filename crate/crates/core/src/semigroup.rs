//! Continuous index spaces: operator families `R_θ = exp(θA)` weighted by
//! Lebesgue measure on `[0, ∞)`, constant-map transfer, and the closed-form
//! fixed points built on constant maps.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::hilbert::{dot, norm, Field, MatrixOperator, Vector, C64};
use crate::integral::{integrate, ContinuousFunction};
use crate::measure::{Atom, VectorMeasure};
use crate::quadrature;

/// Grid on which a declared decay rate is checked: `θ_k = k·span/SAMPLES`.
const DECAY_SAMPLES: usize = 64;
const DECAY_SLACK: f64 = 1e-10;

/// `R_θ = exp(θA)` for a bounded generator with a declared decay rate
/// `‖exp(θA)‖ ≤ e^{−ρθ}`.
#[derive(Debug, Clone)]
pub struct ExponentialFamily {
    generator: MatrixOperator,
    rate: f64,
    /// `Some(N)` when `A = −N·I`; exponentials are then evaluated exactly.
    scalar: Option<f64>,
}

impl ExponentialFamily {
    /// Checks the declared rate by sampling `‖exp(θA)‖` on `[0, 20/ρ]`.
    pub fn new(generator: MatrixOperator, rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::Invalid(format!("decay rate must be positive, got {rate}")));
        }
        let span = 20.0 / rate;
        for k in 0..=DECAY_SAMPLES {
            let theta = span * k as f64 / DECAY_SAMPLES as f64;
            let n = generator.matrix_exp(theta).operator_norm();
            if n > (-rate * theta).exp() + DECAY_SLACK {
                return Err(Error::Precondition(format!(
                    "‖exp({theta}·A)‖ = {n} exceeds the declared decay e^(-{rate}·θ)"
                )));
            }
        }
        Ok(Self {
            generator,
            rate,
            scalar: None,
        })
    }

    /// `A = −N·I` on an `n`-dimensional space, with `ρ = N`.
    pub fn scalar_rate(n: usize, rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::Invalid(format!("decay rate must be positive, got {rate}")));
        }
        Ok(Self {
            generator: MatrixOperator::scalar(n, C64::new(-rate, 0.0)),
            rate,
            scalar: Some(rate),
        })
    }

    pub fn dim(&self) -> usize {
        self.generator.dim()
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn generator(&self) -> &MatrixOperator {
        &self.generator
    }

    /// `R_θ`.
    pub fn operator(&self, theta: f64) -> MatrixOperator {
        match self.scalar {
            Some(r) => MatrixOperator::scalar(self.dim(), C64::new((-r * theta).exp(), 0.0)),
            None => self.generator.matrix_exp(theta),
        }
    }

    /// `∫₀^∞ R_θ^* dθ`, column by column to absolute accuracy `tol`.
    pub fn integrated_adjoint(&self, tol: f64) -> Result<MatrixOperator> {
        let n = self.dim();
        if let Some(r) = self.scalar {
            return Ok(MatrixOperator::scalar(n, C64::new(1.0 / r, 0.0)));
        }
        let mut m = nalgebra::DMatrix::<C64>::zeros(n, n);
        for j in 0..n {
            let mut e = Vector::zeros(n);
            e[j] = C64::new(1.0, 0.0);
            let col_fn = |theta: f64| self.operator(theta).adjoint().mul_vec(&e);
            let (col, _) = quadrature::half_line(&col_fn, self.rate, 1.0, tol)?;
            m.set_column(j, &col);
        }
        MatrixOperator::from_matrix(m)
    }
}

type Map = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Maps `ω(t, θ) = a(θ)·u(t)` with `u: [0,1] → [0,1]` Lipschitz and
/// `a: [0,∞) → (0,1]`, `a(0) = 1`.
#[derive(Clone)]
pub struct ThetaMaps {
    u: Map,
    u_lip: f64,
    a: Map,
}

impl fmt::Debug for ThetaMaps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ThetaMaps").field("u_lip", &self.u_lip).finish_non_exhaustive()
    }
}

impl ThetaMaps {
    pub fn new(
        u: impl Fn(f64) -> f64 + Send + Sync + 'static,
        u_lip: f64,
        a: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(u_lip >= 0.0) || !u_lip.is_finite() {
            return Err(Error::Invalid(format!("Lipschitz bound must be finite and non-negative, got {u_lip}")));
        }
        if (a(0.0) - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!("a(0) must be 1, got {}", a(0.0))));
        }
        Ok(Self {
            u: Arc::new(u),
            u_lip,
            a: Arc::new(a),
        })
    }

    /// `u(t) = t`, `a(θ) = 1/(1+θ)`.
    pub fn reciprocal() -> Self {
        Self::new(|t| t, 1.0, |th| 1.0 / (1.0 + th)).expect("valid maps")
    }

    pub fn u(&self, t: f64) -> f64 {
        (self.u)(t)
    }

    pub fn a(&self, theta: f64) -> f64 {
        (self.a)(theta)
    }

    pub fn u_lipschitz(&self) -> f64 {
        self.u_lip
    }

    pub fn apply(&self, t: f64, theta: f64) -> f64 {
        self.a(theta) * self.u(t)
    }
}

/// `H(f)(t) = ∫₀^∞ R_θ^* f(a(θ)·u(t)) dθ` to absolute accuracy `tol`.
///
/// The integrand is bounded by `e^{−ρθ}·‖f‖_∞`; the half line is cut where
/// the remaining mass is below `tol/2`.
pub fn hc_quadrature(
    fam: &ExponentialFamily,
    maps: &ThetaMaps,
    f: &ContinuousFunction,
    t: f64,
    tol: f64,
) -> Result<Vector> {
    check_dim(fam.dim(), f.dim())?;
    let ut = maps.u(t);
    let integrand = |theta: f64| fam.operator(theta).adjoint().mul_vec(&f.eval(maps.a(theta) * ut));
    let (v, _) = quadrature::half_line(&integrand, fam.rate(), f.sup_bound(), tol)?;
    Ok(v)
}

/// `∫₀^∞ (f(φ(θ)), R_θ^* ν([0,1])) dθ`: the integral of `f` against the image
/// of `ν` under the Markov operator with maps constant in `t`.
pub fn constant_map_transfer(
    fam: &ExponentialFamily,
    phi: &dyn Fn(f64) -> f64,
    nu: &VectorMeasure,
    f: &ContinuousFunction,
    tol: f64,
) -> Result<C64> {
    check_dim(fam.dim(), nu.dim())?;
    check_dim(fam.dim(), f.dim())?;
    let total = nu.total();
    let bound = f.sup_bound() * norm(&total);
    if bound == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let integrand = |theta: f64| dot(&f.eval(phi(theta)), &fam.operator(theta).adjoint().mul_vec(&total));
    let (v, _) = quadrature::half_line(&integrand, fam.rate(), bound, tol)?;
    Ok(v)
}

/// The Markov operator with the single constant map `t₀`:
/// `H(ν) = δ_{t₀}·(∫₀^∞ R_θ^* dθ)(ν([0,1]))`.
pub fn constant_map_apply(fam: &ExponentialFamily, t0: f64, nu: &VectorMeasure, tol: f64) -> Result<VectorMeasure> {
    check_dim(fam.dim(), nu.dim())?;
    let op = fam.integrated_adjoint(tol)?;
    let field = if op.is_real() { nu.field() } else { Field::Complex };
    VectorMeasure::dirac(t0, op.mul_vec(&nu.total()), field)
}

/// Result of [`constant_map_fixed_point`].
#[derive(Debug, Clone)]
pub struct ConstantMapFixedPoint {
    pub measure: VectorMeasure,
    /// Largest `|∫f dH₂(μ*) − ∫f dμ*|` over the polynomial test family.
    pub residual: f64,
}

/// Closed-form fixed point of `μ ↦ H(μ) + μ⁰` for `R_θ = e^{−Nθ}I` and the
/// constant map `t₀`: `μ* = μ⁰ + δ_{t₀}·μ⁰([0,1])/(N−1)`.
///
/// Requires `‖μ⁰‖ ≤ a(1 − 1/N)` for the ball radius `a`, so the map sends the
/// ball of radius `a` into itself. The result is checked against the
/// fixed-point equation on the test functions `t^k e_j`, `k ≤ 3`, through
/// [`constant_map_transfer`]; a residual above `1e-10` is an error.
pub fn constant_map_fixed_point(n_rate: f64, t0: f64, mu0: &VectorMeasure, a: f64) -> Result<ConstantMapFixedPoint> {
    if !(n_rate > 1.0) || !n_rate.is_finite() {
        return Err(Error::Invalid(format!("rate N must exceed 1, got {n_rate}")));
    }
    if !(0.0..=1.0).contains(&t0) {
        return Err(Error::Invalid(format!("point {t0} outside [0,1]")));
    }
    let radius = a * (1.0 - 1.0 / n_rate);
    if mu0.variation_norm() > radius + 1e-12 {
        return Err(Error::Precondition(format!(
            "‖μ⁰‖ = {} exceeds a(1−1/N) = {radius}",
            mu0.variation_norm()
        )));
    }
    let total = mu0.total() * C64::new(1.0 / (n_rate - 1.0), 0.0);
    let spike = VectorMeasure::dirac(t0, total, mu0.field())?;
    let measure = mu0.add(&spike)?;

    let fam = ExponentialFamily::scalar_rate(mu0.dim(), n_rate)?;
    let phi = move |_theta: f64| t0;
    let tol = 1e-13;
    let mut residual: f64 = 0.0;
    for f in polynomial_test_family(mu0.dim(), 3) {
        let lhs = constant_map_transfer(&fam, &phi, &measure, &f, tol)? + integrate(&f, mu0, tol)?;
        let rhs = integrate(&f, &measure, tol)?;
        residual = residual.max((lhs - rhs).norm());
    }
    if residual > 1e-10 {
        return Err(Error::Precondition(format!("fixed-point residual {residual:e} above 1e-10")));
    }
    Ok(ConstantMapFixedPoint { measure, residual })
}

/// `t ↦ t^k e_j` for `k ≤ degree`, `j < dim`.
pub fn polynomial_test_family(dim: usize, degree: usize) -> Vec<ContinuousFunction> {
    let mut out = Vec::new();
    for k in 0..=degree {
        for j in 0..dim {
            let mut coeffs = vec![Vector::zeros(dim); k + 1];
            coeffs[k][j] = C64::new(1.0, 0.0);
            out.push(ContinuousFunction::polynomial(coeffs).expect("finite coefficients"));
        }
    }
    out
}

/// The countable system `R_i = −P^i/i!` at constant maps `t_i`, `i ≥ 1`, with
/// base `μ⁰`.
#[derive(Debug, Clone)]
pub struct SeriesFixedPoint {
    pub measure: VectorMeasure,
    /// Number of series terms kept.
    pub terms: usize,
    /// Bound on the residual contributed by the omitted terms.
    pub truncation_bound: f64,
}

/// `Σ_{i>K} x^i/i!`, summed directly.
fn exp_tail(x: f64, k: usize) -> f64 {
    let mut term = 1.0;
    for i in 1..=k {
        term *= x / i as f64;
    }
    let mut sum = 0.0;
    let mut i = k;
    loop {
        i += 1;
        term *= x / i as f64;
        sum += term;
        if term <= sum * 1e-17 || term == 0.0 {
            break;
        }
    }
    sum
}

/// `μ* = μ⁰ − Σ_{i=1}^{K} δ_{t_i}·(P^i e^{−P}/i!)(μ⁰([0,1]))`, the fixed point of
/// `μ ↦ −Σ_i δ_{t_i}(P^i/i!)(μ([0,1])) + μ⁰`.
///
/// With `w = e^{−P}μ⁰([0,1])` and `τ_K = Σ_{i>K}‖P‖^i/i!`, the residual of the
/// truncated measure is at most `τ_K·‖w‖·(e^{‖P‖} + τ_K)`. `K` is the
/// smallest depth with this bound `≤ tol`; `points[0..K]` are used as
/// `t_1, …, t_K` and must be distinct.
pub fn countable_series_fixed_point(
    p: &MatrixOperator,
    points: &[f64],
    mu0: &VectorMeasure,
    tol: f64,
) -> Result<SeriesFixedPoint> {
    check_dim(p.dim(), mu0.dim())?;
    if !(tol > 0.0) {
        return Err(Error::Invalid("tolerance must be positive".into()));
    }
    let field = if p.is_real() { mu0.field() } else { Field::Complex };
    let w = p.scale(C64::new(-1.0, 0.0)).matrix_exp(1.0).mul_vec(&mu0.total());
    let wn = norm(&w);
    let pn = p.operator_norm();
    let bound_at = |k: usize| {
        let tail = exp_tail(pn, k);
        tail * wn * (pn.exp() + tail)
    };
    let mut k = 0;
    while bound_at(k) > tol {
        k += 1;
        if k > 10_000 {
            return Err(Error::Precondition("series depth exceeds 10000 terms".into()));
        }
    }
    if points.len() < k {
        return Err(Error::Precondition(format!(
            "series needs {k} points, {} supplied",
            points.len()
        )));
    }
    let used = &points[..k];
    for (i, &t) in used.iter().enumerate() {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Invalid(format!("point {t} outside [0,1]")));
        }
        if used[..i].iter().any(|&s| (s - t).abs() <= crate::space::SNAP) {
            return Err(Error::Invalid(format!("series points must be distinct, {t} repeats")));
        }
    }
    let mut atoms = Vec::with_capacity(k);
    let mut term = w.clone();
    for (i, &t) in used.iter().enumerate() {
        term = p.mul_vec(&term) * C64::new(1.0 / (i + 1) as f64, 0.0);
        atoms.push(Atom {
            point: t,
            weight: -term.clone(),
        });
    }
    let spikes = VectorMeasure::new(mu0.dim(), field, atoms, vec![])?;
    Ok(SeriesFixedPoint {
        measure: mu0.add(&spikes)?,
        terms: k,
        truncation_bound: bound_at(k),
    })
}

/// `‖H₂(μ) − μ‖` for the series system, computed exactly over the first
/// `points.len()` terms, plus the bound `τ_L·‖μ([0,1])‖` for the rest.
/// Returns `(computed, tail_bound)`.
pub fn countable_series_residual(
    p: &MatrixOperator,
    points: &[f64],
    mu0: &VectorMeasure,
    mu: &VectorMeasure,
) -> Result<(f64, f64)> {
    check_dim(p.dim(), mu.dim())?;
    let total = mu.total();
    let mut atoms = Vec::with_capacity(points.len());
    let mut term = total.clone();
    for (i, &t) in points.iter().enumerate() {
        term = p.mul_vec(&term) * C64::new(1.0 / (i + 1) as f64, 0.0);
        atoms.push(Atom {
            point: t,
            weight: -term.clone(),
        });
    }
    let field = if p.is_real() { mu.field() } else { Field::Complex };
    let h = VectorMeasure::new(mu.dim(), field, atoms, vec![])?;
    let computed = h.add(mu0)?.sub(mu)?.variation_norm();
    let tail = exp_tail(p.operator_norm(), points.len()) * norm(&total);
    Ok((computed, tail))
}
