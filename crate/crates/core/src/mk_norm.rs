//! Monge-Kantorovich norms of vector measures on `[0,1]`.
//!
//! - `‖μ‖_MK  = sup { |∫f dμ| : ‖f‖_∞ + ‖f‖_L ≤ 1 }`
//! - `‖μ‖*_MK = sup { |∫f dμ| : ‖f‖_L ≤ 1 }`, for measures of total mass zero.
//!
//! On the line the modified norm has a closed form. Writing
//! `F(t) = μ([0,t])` (so `F(1) = 0`), integration by parts gives
//! `∫ f dμ = −∫₀¹ (f'(t), F(t)) dt`, and the supremum over `‖f'‖ ≤ 1` is
//! attained at `f' = −F/‖F‖`:
//!
//! ```text
//! ‖μ‖*_MK = ∫₀¹ ‖F(t)‖ dt
//! ```
//!
//! [`mk_star_exact`] evaluates this integral on the piecewise affine profile of
//! `F`. [`mk_lower_bound`] is an independent route: it searches over explicit
//! piecewise linear test functions and returns `|∫ f dμ|` for the best one
//! found, re-evaluated through [`crate::integral::integrate`]. Its value is a
//! certified lower bound of the corresponding norm and is used to check the
//! closed form.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{dot, norm, Vector, C64};
use crate::integral::{integrate, ContinuousFunction};
use crate::measure::VectorMeasure;
use crate::quadrature;

/// Relative tolerance on the total mass for measures passed to the MK* routines.
pub const MASS_TOL: f64 = 1e-12;

/// Test-function ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TestBall {
    /// `‖f‖_L ≤ 1`
    L1,
    /// `‖f‖_∞ + ‖f‖_L ≤ 1`
    BL1,
}

fn check_zero_mass(mu: &VectorMeasure) -> Result<()> {
    let m = norm(&mu.total());
    if m > MASS_TOL * mu.variation_norm().max(1.0) {
        return Err(Error::NonzeroMass(m));
    }
    Ok(())
}

/// `‖μ‖*_MK = ∫₀¹ ‖μ([0,t])‖ dt` for a measure of total mass zero.
pub fn mk_star_exact(mu: &VectorMeasure) -> Result<f64> {
    check_zero_mass(mu)?;
    profile_integral(mu)
}

/// `∫₀¹ ‖μ([0,t])‖ dt` without the mass check. For a measure with total `m`
/// this is the MK* norm of `μ − δ_1·m`, since the correction only changes
/// the profile at `t = 1`.
pub(crate) fn profile_integral(mu: &VectorMeasure) -> Result<f64> {
    let prof = mu.cumulative_profile();
    let mut acc = 0.0;
    for k in 0..prof.slopes.len() {
        let (a, b) = (prof.knots[k], prof.knots[k + 1]);
        acc += norm_of_affine(&prof.values[k], &prof.slopes[k], b - a)?;
    }
    Ok(acc)
}

/// `∫₀^h ‖v + s·u‖ du`.
fn norm_of_affine(v: &Vector, s: &Vector, h: f64) -> Result<f64> {
    if h <= 0.0 {
        return Ok(0.0);
    }
    let ss = s.iter().map(|z| z.norm_sqr()).sum::<f64>();
    if ss == 0.0 {
        return Ok(norm(v) * h);
    }
    if v.len() == 1 {
        // |p + q·u| with complex p, q: reduce to the real case when p, q are
        // parallel, otherwise fall through to quadrature
        let (p, q) = (v[0], s[0]);
        if (p * q.conj()).im == 0.0 {
            let (p, q) = if q.re != 0.0 || q.im != 0.0 {
                let phase = q / q.norm();
                ((p / phase).re, q.norm())
            } else {
                (p.norm(), 0.0)
            };
            return Ok(abs_affine_integral(p, q, h));
        }
    }
    // the minimizer of ‖v + s·u‖² splits the panel into two smooth halves
    let vs = dot(v, s).re;
    let u_min = (-vs / ss).clamp(0.0, h);
    let f = |u: f64| norm(&(v + s * C64::new(u, 0.0)));
    let scale = (norm(v) + ss.sqrt() * h) * h;
    let tol = 1e-15 * scale.max(f64::MIN_POSITIVE);
    let mut total = 0.0;
    if u_min > 0.0 {
        total += quadrature::adaptive(&f, 0.0, u_min, tol)?;
    }
    if u_min < h {
        total += quadrature::adaptive(&f, u_min, h, tol)?;
    }
    Ok(total)
}

/// `∫₀^h |p + q·u| du` for real `p`, `q`.
fn abs_affine_integral(p: f64, q: f64, h: f64) -> f64 {
    let end = p + q * h;
    if q == 0.0 {
        return p.abs() * h;
    }
    if p * end >= 0.0 {
        0.5 * (p.abs() + end.abs()) * h
    } else {
        (p * p + end * end) / (2.0 * q.abs())
    }
}

/// A piecewise linear test function given by its values at sorted nodes.
#[derive(Debug, Clone, Serialize)]
pub struct LipschitzWitness {
    pub nodes: Vec<f64>,
    #[serde(skip)]
    pub values: Vec<Vector>,
    pub ball: TestBall,
}

impl LipschitzWitness {
    /// Largest consecutive difference quotient; equals the Lipschitz
    /// constant of the linear interpolant.
    pub fn lipschitz(&self) -> f64 {
        self.nodes
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| norm(&(&v[1] - &v[0])) / (t[1] - t[0]))
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(norm).fold(0.0, f64::max)
    }

    /// Whether the interpolant lies in its ball, up to `slack`.
    pub fn is_feasible(&self, slack: f64) -> bool {
        match self.ball {
            TestBall::L1 => self.lipschitz() <= 1.0 + slack,
            TestBall::BL1 => self.sup_norm() + self.lipschitz() <= 1.0 + slack,
        }
    }

    pub fn eval(&self, t: f64) -> Vector {
        interpolate(&self.nodes, &self.values, t)
    }

    pub fn to_function(&self) -> ContinuousFunction {
        let nodes = self.nodes.clone();
        let values = self.values.clone();
        let dim = values.first().map(|v| v.len()).unwrap_or(1);
        ContinuousFunction::new(dim, self.sup_norm(), Some(self.lipschitz()), move |t| {
            interpolate(&nodes, &values, t)
        })
    }
}

fn interpolate(nodes: &[f64], values: &[Vector], t: f64) -> Vector {
    let n = nodes.len();
    if t <= nodes[0] {
        return values[0].clone();
    }
    if t >= nodes[n - 1] {
        return values[n - 1].clone();
    }
    let k = nodes.partition_point(|&x| x <= t) - 1;
    let w = (t - nodes[k]) / (nodes[k + 1] - nodes[k]);
    &values[k] * C64::new(1.0 - w, 0.0) + &values[k + 1] * C64::new(w, 0.0)
}

/// Result of [`mk_lower_bound`].
#[derive(Debug, Clone, Serialize)]
pub struct LowerBound {
    /// `|∫ f dμ|` for the returned witness, a lower bound of the norm.
    pub value: f64,
    pub witness: LipschitzWitness,
}

/// Nodes: the equispaced grid plus every atom and piece endpoint.
fn witness_nodes(mu: &VectorMeasure, grid: usize) -> Vec<f64> {
    let g = grid.max(2);
    let mut xs: Vec<f64> = (0..g).map(|i| i as f64 / (g - 1) as f64).collect();
    xs.extend(mu.breakpoints());
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    // near-coincident nodes only cost accuracy in the Lipschitz quotients;
    // the objective stays exact for any node set
    xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
    xs
}

/// `G_j` with `∫ f dμ = Σ_j (f_j, G_j)` for the interpolant of node values
/// `f_j`: the hat-function moments of `μ`.
fn hat_moments(mu: &VectorMeasure, nodes: &[f64]) -> Vec<Vector> {
    let n = mu.dim();
    let m = nodes.len();
    let mut g = vec![Vector::zeros(n); m];
    let locate = |t: f64| -> (usize, f64) {
        if t <= nodes[0] {
            return (0, 0.0);
        }
        if t >= nodes[m - 1] {
            return (m - 2, 1.0);
        }
        let k = nodes.partition_point(|&x| x <= t) - 1;
        (k, (t - nodes[k]) / (nodes[k + 1] - nodes[k]))
    };
    for a in mu.atoms() {
        let (k, w) = locate(a.point);
        g[k].axpy(C64::new(1.0 - w, 0.0), &a.weight, C64::new(1.0, 0.0));
        g[k + 1].axpy(C64::new(w, 0.0), &a.weight, C64::new(1.0, 0.0));
    }
    for p in mu.pieces() {
        let (lo, hi) = (p.interval.lo, p.interval.hi);
        let start = nodes.partition_point(|&x| x <= lo).saturating_sub(1);
        for k in start..m - 1 {
            let (x0, x1) = (nodes[k], nodes[k + 1]);
            if x0 >= hi {
                break;
            }
            let a = lo.max(x0);
            let b = hi.min(x1);
            if b <= a {
                continue;
            }
            // ∫_a^b of the two hat halves on [x0, x1]
            let h = x1 - x0;
            let right = ((b - x0).powi(2) - (a - x0).powi(2)) / (2.0 * h);
            let left = (b - a) - right;
            g[k].axpy(C64::new(left, 0.0), &p.density, C64::new(1.0, 0.0));
            g[k + 1].axpy(C64::new(right, 0.0), &p.density, C64::new(1.0, 0.0));
        }
    }
    g
}

fn objective(values: &[Vector], g: &[Vector]) -> C64 {
    values.iter().zip(g).map(|(f, gj)| dot(f, gj)).sum()
}

/// Certified lower bound of `‖μ‖*_MK` (ball `L1`, needs zero mass) or
/// `‖μ‖_MK` (ball `BL1`) by projected supergradient ascent over piecewise
/// linear witnesses on `grid` equispaced nodes plus the breakpoints of `μ`.
///
/// The returned value is `|∫ f dμ|` recomputed with the integral module for
/// the final, feasible witness.
pub fn mk_lower_bound(mu: &VectorMeasure, ball: TestBall, grid: usize, iters: usize) -> Result<LowerBound> {
    if ball == TestBall::L1 {
        check_zero_mass(mu)?;
    }
    let nodes = witness_nodes(mu, grid);
    let n = mu.dim();
    let m = nodes.len();
    if mu.is_zero() {
        let witness = LipschitzWitness {
            nodes,
            values: vec![Vector::zeros(n); m],
            ball,
        };
        return Ok(LowerBound { value: 0.0, witness });
    }
    let g = hat_moments(mu, &nodes);
    let candidates = match ball {
        TestBall::L1 => vec![ascend_l1(&nodes, &g, iters)],
        TestBall::BL1 => {
            let l1 = ascend_l1(&nodes, &g, iters);
            ascend_bl1(&nodes, &g, iters, &l1)
        }
    };
    let mut best: Option<LowerBound> = None;
    for values in candidates {
        let mut witness = LipschitzWitness {
            nodes: nodes.clone(),
            values,
            ball,
        };
        restore_feasibility(&mut witness);
        let value = certified_value(&witness, mu)?;
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(LowerBound { value, witness });
        }
    }
    Ok(best.expect("at least one candidate"))
}

/// Rescales a witness whose constraint rounding pushed it past its ball.
fn restore_feasibility(w: &mut LipschitzWitness) {
    let size = match w.ball {
        TestBall::L1 => w.lipschitz(),
        TestBall::BL1 => w.sup_norm() + w.lipschitz(),
    };
    if size > 1.0 {
        let s = C64::new((1.0 - f64::EPSILON) / size, 0.0);
        w.values.iter_mut().for_each(|v| *v *= s);
    }
}

/// `|∫ f dμ|` for the interpolant, shaved by the quadrature tolerance so it
/// stays a lower bound.
fn certified_value(w: &LipschitzWitness, mu: &VectorMeasure) -> Result<f64> {
    let tol = 1e-14;
    let v = integrate(&w.to_function(), mu, tol)?.norm();
    Ok((v - tol * (1.0 + mu.variation_norm())).max(0.0))
}

/// Ascent in difference coordinates `d_k = f_{k+1} − f_k`, where the ball
/// `‖d_k‖ ≤ h_k` is a product of Euclidean balls and the projection is exact.
fn ascend_l1(nodes: &[f64], g: &[Vector], iters: usize) -> Vec<Vector> {
    let n = g[0].len();
    let m = nodes.len();
    let h: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
    // ∂/∂d_k of Re Σ_j (f_j, G_j) is the tail sum Σ_{j>k} G_j
    let mut tail = vec![Vector::zeros(n); m - 1];
    let mut acc = Vector::zeros(n);
    for k in (0..m - 1).rev() {
        acc += &g[k + 1];
        tail[k] = acc.clone();
    }
    let scale = tail.iter().map(norm).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut d = vec![Vector::zeros(n); m - 1];
    let mut best = (f64::NEG_INFINITY, d.clone());
    for it in 1..=iters.max(1) {
        let step = 1.0 / (it as f64).sqrt() / scale;
        for k in 0..m - 1 {
            d[k].axpy(C64::new(step, 0.0), &tail[k], C64::new(1.0, 0.0));
            let len = norm(&d[k]);
            if len > h[k] {
                d[k] *= C64::new(h[k] / len, 0.0);
            }
        }
        let val: f64 = d.iter().zip(&tail).map(|(dk, tk)| dot(dk, tk).re).sum();
        if val > best.0 {
            best = (val, d.clone());
        }
    }
    let d = best.1;
    let mut values = Vec::with_capacity(m);
    let mut f = Vector::zeros(n);
    values.push(f.clone());
    for dk in &d {
        f += dk;
        values.push(f.clone());
    }
    // centre on the midpoint value so the sup norm is at most 1/2
    let mid = interpolate(nodes, &values, 0.5);
    values.iter_mut().for_each(|v| *v -= &mid);
    values
}

fn bl1_rescale(nodes: &[f64], values: &mut [Vector]) {
    for v in values.iter_mut() {
        let r = norm(v);
        if r > 1.0 {
            *v *= C64::new(1.0 / r, 0.0);
        }
    }
    let sup = values.iter().map(norm).fold(0.0, f64::max);
    let lip = nodes
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| norm(&(&v[1] - &v[0])) / (t[1] - t[0]))
        .fold(0.0, f64::max);
    if sup + lip > 1.0 {
        let s = C64::new(1.0 / (sup + lip), 0.0);
        values.iter_mut().for_each(|v| *v *= s);
    }
}

/// Candidates for the BL1 ball: the centred L1 optimum scaled into the
/// ball, the best constant, and a supergradient ascent started from the
/// better of the two.
fn ascend_bl1(nodes: &[f64], g: &[Vector], iters: usize, l1: &[Vector]) -> Vec<Vec<Vector>> {
    let n = g[0].len();
    let m = nodes.len();
    let mut scaled = l1.to_vec();
    bl1_rescale(nodes, &mut scaled);

    let mut total = Vector::zeros(n);
    for gj in g {
        total += gj;
    }
    let tn = norm(&total);
    let constant = if tn > 0.0 {
        vec![&total * C64::new(1.0 / tn, 0.0); m]
    } else {
        vec![Vector::zeros(n); m]
    };

    let value = |vals: &[Vector]| objective(vals, g).norm();
    let start = if value(&scaled) >= value(&constant) {
        scaled.clone()
    } else {
        constant.clone()
    };
    // ascend on Re of the objective rotated so the start is real-positive
    let z = objective(&start, g);
    let phase = if z.norm() > 0.0 { z.conj() / z.norm() } else { C64::new(1.0, 0.0) };
    let grad: Vec<Vector> = g.iter().map(|gj| gj * phase.conj()).collect();
    let gscale = grad.iter().map(norm).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut cur = start;
    let mut best = (value(&cur), cur.clone());
    for it in 1..=iters.max(1) {
        let step = 0.1 / (it as f64).sqrt() / gscale;
        for (v, gj) in cur.iter_mut().zip(&grad) {
            v.axpy(C64::new(step, 0.0), gj, C64::new(1.0, 0.0));
        }
        bl1_rescale(nodes, &mut cur);
        let v = value(&cur);
        if v > best.0 {
            best = (v, cur.clone());
        }
    }
    vec![scaled, constant, best.1]
}

/// Outcome of [`sandwich_check`].
#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub variation: f64,
    pub mk_star: f64,
    /// Certified lower bound of `‖μ‖*_MK` from the L1 estimator.
    pub mk_star_lower: f64,
    /// Certified lower bound of `‖μ‖_MK`.
    pub mk_lower: f64,
    /// `mk_star − mk_star_lower`: how far the estimator falls short of the
    /// closed form.
    pub estimator_gap: f64,
    /// `mk_lower ≤ mk_star`
    pub lower_le_star: bool,
    /// `mk_star ≤ 2·mk_lower + 2·gap` (diam [0,1] = 1)
    pub star_le_twice_mk: bool,
    /// `mk_lower ≤ ‖μ‖`
    pub mk_le_variation: bool,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.lower_le_star && self.star_le_twice_mk && self.mk_le_variation
    }
}

/// Checks `‖μ‖_MK ≤ ‖μ‖*_MK ≤ 2‖μ‖_MK` and `‖μ‖_MK ≤ ‖μ‖` using the closed
/// form for MK* and certified lower bounds for MK, with slack `1e-9`.
pub fn sandwich_check(mu: &VectorMeasure, grid: usize, iters: usize) -> Result<SandwichReport> {
    const SLACK: f64 = 1e-9;
    let mk_star = mk_star_exact(mu)?;
    let star_lower = mk_lower_bound(mu, TestBall::L1, grid, iters)?.value;
    let mk_lower = mk_lower_bound(mu, TestBall::BL1, grid, iters)?.value;
    let variation = mu.variation_norm();
    let gap = (mk_star - star_lower).max(0.0);
    Ok(SandwichReport {
        variation,
        mk_star,
        mk_star_lower: star_lower,
        mk_lower,
        estimator_gap: gap,
        lower_le_star: mk_lower <= mk_star + SLACK,
        star_le_twice_mk: mk_star <= 2.0 * mk_lower + 2.0 * gap + SLACK,
        mk_le_variation: mk_lower <= variation + SLACK,
    })
}
