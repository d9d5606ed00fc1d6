//! Adaptive Gauss-Legendre quadrature for scalar and vector integrands.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::hilbert::{Vector, C64};

/// Values that can be integrated: a vector space with a distance.
pub trait QuadValue: Clone {
    fn zero_like(&self) -> Self;
    fn add_scaled(&mut self, other: &Self, w: f64);
    fn dist(&self, other: &Self) -> f64;
    fn is_finite(&self) -> bool;
}

impl QuadValue for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, other: &Self, w: f64) {
        *self += w * other;
    }
    fn dist(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl QuadValue for C64 {
    fn zero_like(&self) -> Self {
        C64::new(0.0, 0.0)
    }
    fn add_scaled(&mut self, other: &Self, w: f64) {
        *self += other * w;
    }
    fn dist(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl QuadValue for Vector {
    fn zero_like(&self) -> Self {
        Vector::zeros(self.len())
    }
    fn add_scaled(&mut self, other: &Self, w: f64) {
        self.axpy(C64::new(w, 0.0), other, C64::new(1.0, 0.0));
    }
    fn dist(&self, other: &Self) -> f64 {
        self.iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from the Chebyshev-like initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// The shared 15-point rule, exact for polynomials of degree ≤ 29.
    pub fn fifteen() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(15))
    }

    pub fn integrate<V: QuadValue>(&self, f: &dyn Fn(f64) -> V, a: f64, b: f64) -> V {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc: Option<V> = None;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * x);
            match acc.as_mut() {
                Some(s) => s.add_scaled(&v, w * half),
                None => {
                    let mut s = v.zero_like();
                    s.add_scaled(&v, w * half);
                    acc = Some(s);
                }
            }
        }
        acc.expect("rule has at least one node")
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

const MAX_DEPTH: u32 = 48;

/// Adaptive 15-point Gauss-Legendre on `[a, b]` to absolute tolerance
/// `tol`: a panel is accepted when it agrees with the sum of its two halves.
pub fn adaptive<V: QuadValue>(f: &dyn Fn(f64) -> V, a: f64, b: f64, tol: f64) -> Result<V> {
    let rule = GaussLegendre::fifteen();
    let whole = rule.integrate(f, a, b);
    if !whole.is_finite() {
        return Err(Error::NonFinite("integrand"));
    }
    if a == b {
        return Ok(whole.zero_like());
    }
    refine(rule, f, a, b, whole, tol.max(f64::MIN_POSITIVE), 0)
}

fn refine<V: QuadValue>(
    rule: &GaussLegendre,
    f: &dyn Fn(f64) -> V,
    a: f64,
    b: f64,
    whole: V,
    tol: f64,
    depth: u32,
) -> Result<V> {
    let m = 0.5 * (a + b);
    let left = rule.integrate(f, a, m);
    let right = rule.integrate(f, m, b);
    if !left.is_finite() || !right.is_finite() {
        return Err(Error::NonFinite("integrand"));
    }
    let mut halves = left.clone();
    halves.add_scaled(&right, 1.0);
    if halves.dist(&whole) <= tol || depth >= MAX_DEPTH || m <= a || m >= b {
        return Ok(halves);
    }
    let mut l = refine(rule, f, a, m, left, 0.5 * tol, depth + 1)?;
    let r = refine(rule, f, m, b, right, 0.5 * tol, depth + 1)?;
    l.add_scaled(&r, 1.0);
    Ok(l)
}

/// `∫_0^∞ f` for an integrand with `‖f(θ)‖ ≤ bound·e^{-rate·θ}`.
///
/// Truncates at `Θ` with `bound·e^{-rate·Θ}/rate ≤ tol/2` and integrates
/// `[0, Θ]` panel by panel to `tol/2`. Returns the value and `Θ`.
pub fn half_line<V: QuadValue>(
    f: &dyn Fn(f64) -> V,
    rate: f64,
    bound: f64,
    tol: f64,
) -> Result<(V, f64)> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::Invalid(format!("decay rate must be positive, got {rate}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Invalid("tolerance must be positive".into()));
    }
    let cutoff = if bound <= 0.0 {
        1.0 / rate
    } else {
        ((2.0 * bound / (tol * rate)).ln() / rate).max(1.0 / rate)
    };
    let panels = ((cutoff * rate).ceil() as usize).clamp(1, 4096);
    let width = cutoff / panels as f64;
    let panel_tol = 0.5 * tol / panels as f64;
    let mut acc: Option<V> = None;
    for k in 0..panels {
        let a = k as f64 * width;
        let v = adaptive(f, a, a + width, panel_tol)?;
        match acc.as_mut() {
            Some(s) => s.add_scaled(&v, 1.0),
            None => acc = Some(v),
        }
    }
    Ok((acc.expect("at least one panel"), cutoff))
}
