//! Discrete Markov-type operators on vector measures and their fixed points.
//!
//! An [`IFSystem`] holds affine maps `ω_i`, matrix operators `R_i` and an
//! optional base measure `μ⁰`, and acts on measures by
//!
//! ```text
//! H(ν) = Σ_i R_i (ω_i)_# ν  (+ μ⁰)
//! ```
//!
//! **Operator convention.** The operators act on measure values exactly as
//! supplied. The dual action on functions is `f ↦ Σ_i R_i^* (f ∘ ω_i)`, so
//! `∫ f dH(ν) = ∫ H^*(f) dν (+ ∫ f dμ⁰)`. To get the form where the
//! measure side uses adjoints, pass the adjoint operators.
//!
//! Two solvers are provided. [`IFSystem::iterate_fixed_point`] runs the
//! contraction iteration in the variation norm, and
//! [`IFSystem::eval_fixed_point`] evaluates `μ*(B)` directly from the
//! self-referential set equation `v(B) = Σ_i R_i v(ω_i⁻¹ B) + μ⁰(B)`.

use std::collections::{HashMap, VecDeque};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::hilbert::{norm, Field, MatrixOperator, Vector, C64};
use crate::integral::ContinuousFunction;
use crate::measure::VectorMeasure;
use crate::mk_norm::profile_integral;
use crate::space::{AffineMap, QuerySet, SetKey};

/// Contraction indicators of a system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Factors {
    /// `Σ ‖R_i‖`: contraction factor in the variation norm.
    pub e: f64,
    /// `Σ ‖R_i‖(1 + r_i)`: bound for the MK norm.
    pub d: f64,
    /// `Σ ‖R_i‖ r_i`: contraction factor in the MK* norm.
    pub c: f64,
}

/// A finite system of affine maps and matrix operators, with optional base
/// measure and a declared bound on an omitted tail.
#[derive(Debug, Clone)]
pub struct IFSystem {
    dim: usize,
    field: Field,
    maps: Vec<AffineMap>,
    operators: Vec<MatrixOperator>,
    base: Option<VectorMeasure>,
    tail: f64,
}

/// Output of the iterative solvers.
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub measure: VectorMeasure,
    pub iterations: usize,
    /// Bound on the distance to the fixed point, in the norm of the solver.
    pub error_bound: f64,
}

/// Output of [`IFSystem::eval_fixed_point`].
#[derive(Debug, Clone)]
pub struct SetValue {
    pub value: Vector,
    pub error_bound: f64,
    /// Number of distinct sets explored.
    pub nodes: usize,
    /// True when the preimage graph closed up and was solved directly.
    pub exact: bool,
}

/// Explored sets beyond this count abort evaluation.
pub const MAX_NODES: usize = 200_000;
/// Iterates with more atoms plus pieces than this abort the iterative solvers.
pub const MAX_MEASURE_SIZE: usize = 2_000_000;
/// Largest `nodes × dim` handled by dense LU; larger graphs are iterated.
const DENSE_LIMIT: usize = 1200;

impl IFSystem {
    /// Validates lengths, dimensions and field of every component.
    pub fn new(
        field: Field,
        maps: Vec<AffineMap>,
        operators: Vec<MatrixOperator>,
        base: Option<VectorMeasure>,
    ) -> Result<Self> {
        if maps.len() != operators.len() {
            return Err(Error::Invalid(format!(
                "{} maps but {} operators",
                maps.len(),
                operators.len()
            )));
        }
        let dim = match (operators.first(), &base) {
            (Some(r), _) => r.dim(),
            (None, Some(b)) => b.dim(),
            (None, None) => {
                return Err(Error::Invalid("system needs at least one operator or a base measure".into()))
            }
        };
        for r in &operators {
            check_dim(dim, r.dim())?;
            if field == Field::Real && !r.is_real() {
                return Err(Error::FieldMismatch("complex operator in a real system".into()));
            }
        }
        if let Some(b) = &base {
            check_dim(dim, b.dim())?;
            field.check_same(b.field())?;
        }
        Ok(Self {
            dim,
            field,
            maps,
            operators,
            base,
            tail: 0.0,
        })
    }

    /// Declares a bound `Σ_{i>M} ‖R_i‖(1 + r_i)` on terms of a countable system
    /// that were left out. It is added to every factor and error bound.
    pub fn with_tail_bound(mut self, tail: f64) -> Result<Self> {
        if !(tail >= 0.0) || !tail.is_finite() {
            return Err(Error::Invalid(format!("tail bound must be finite and non-negative, got {tail}")));
        }
        self.tail = tail;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn operators(&self) -> &[MatrixOperator] {
        &self.operators
    }

    pub fn base(&self) -> Option<&VectorMeasure> {
        self.base.as_ref()
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail
    }

    pub fn factors(&self) -> Factors {
        let mut f = Factors {
            e: self.tail,
            d: self.tail,
            c: self.tail,
        };
        for (w, r) in self.maps.iter().zip(&self.operators) {
            let n = r.operator_norm();
            let lip = w.lipschitz();
            f.e += n;
            f.d += n * (1.0 + lip);
            f.c += n * lip;
        }
        f
    }

    /// `Σ_i R_i`.
    pub fn operator_sum(&self) -> MatrixOperator {
        self.operators
            .iter()
            .fold(MatrixOperator::zeros(self.dim), |acc, r| &acc + r)
    }

    /// Whether `Σ_i R_i = I` entrywise within `tol`; then the homogeneous
    /// part of the operator preserves total mass.
    pub fn conserves_mass(&self, tol: f64) -> bool {
        self.tail == 0.0 && self.operator_sum().max_abs_diff(&MatrixOperator::identity(self.dim)) <= tol
    }

    fn check_measure(&self, nu: &VectorMeasure) -> Result<()> {
        check_dim(self.dim, nu.dim())?;
        if self.field == Field::Real && nu.field() == Field::Complex {
            return Err(Error::FieldMismatch("complex measure in a real system".into()));
        }
        Ok(())
    }

    /// `Σ_i R_i (ω_i)_# ν`, without the base measure.
    pub fn apply_homogeneous(&self, nu: &VectorMeasure) -> Result<VectorMeasure> {
        self.check_measure(nu)?;
        Ok(self.homogeneous(nu))
    }

    fn homogeneous(&self, nu: &VectorMeasure) -> VectorMeasure {
        let terms: Vec<VectorMeasure> = self
            .maps
            .iter()
            .zip(&self.operators)
            .map(|(w, r)| nu.pushforward(w).apply_operator_unchecked(r))
            .collect();
        let one = C64::new(1.0, 0.0);
        let refs: Vec<(C64, &VectorMeasure)> = terms.iter().map(|m| (one, m)).collect();
        if refs.is_empty() {
            return VectorMeasure::zero(self.dim, self.field.max(nu.field()));
        }
        VectorMeasure::sum_scaled(&refs)
    }

    /// `Σ_i R_i (ω_i)_# ν + μ⁰`.
    pub fn apply_markov(&self, nu: &VectorMeasure) -> Result<VectorMeasure> {
        self.check_measure(nu)?;
        Ok(self.step(nu))
    }

    fn step(&self, nu: &VectorMeasure) -> VectorMeasure {
        let h = self.homogeneous(nu);
        match &self.base {
            Some(b) => VectorMeasure::sum_scaled(&[(C64::new(1.0, 0.0), &h), (C64::new(1.0, 0.0), b)]),
            None => h,
        }
    }

    /// `t ↦ Σ_i R_i^* f(ω_i(t))`, with sup bound `e·‖f‖_∞` and Lipschitz
    /// bound `c·‖f‖_L` (tail excluded, since the result is the truncated sum).
    pub fn dual_apply(&self, f: &ContinuousFunction) -> Result<ContinuousFunction> {
        check_dim(self.dim, f.dim())?;
        let mut e = 0.0;
        let mut c = 0.0;
        for (w, r) in self.maps.iter().zip(&self.operators) {
            let n = r.operator_norm();
            e += n;
            c += n * w.lipschitz();
        }
        let adj: Vec<(AffineMap, MatrixOperator)> = self
            .maps
            .iter()
            .zip(&self.operators)
            .map(|(w, r)| (*w, r.adjoint()))
            .collect();
        let g = f.callable();
        let dim = self.dim;
        Ok(ContinuousFunction::new(
            dim,
            e * f.sup_bound(),
            f.lipschitz_bound().map(|l| c * l),
            move |t| {
                let mut acc = Vector::zeros(dim);
                for (w, ra) in &adj {
                    acc += ra.mul_vec(&g(w.apply(t)));
                }
                acc
            },
        ))
    }

    /// `‖H(μ) − μ‖` in the variation norm.
    pub fn residual(&self, mu: &VectorMeasure) -> Result<f64> {
        Ok(self.apply_markov(mu)?.sub(mu)?.variation_norm())
    }

    /// The unpruned orbit `start, H(start), H²(start), …`.
    pub fn iterates(&self, start: &VectorMeasure) -> Result<Iterates<'_>> {
        self.check_measure(start)?;
        Ok(Iterates {
            sys: self,
            current: Some(start.clone()),
        })
    }

    /// Banach iteration in the variation norm.
    ///
    /// Each step is pruned with budget `η = tol(1−e)/4`. With `δ_k` the step
    /// size, the returned iterate satisfies
    /// `‖μ_k − μ*‖ ≤ (e·δ_k + η)/(1−e)`, and iteration stops once that bound
    /// (plus the contribution of a declared tail) is at most `tol`.
    pub fn iterate_fixed_point(&self, start: &VectorMeasure, tol: f64, max_iter: usize) -> Result<FixedPoint> {
        check_tol(tol)?;
        self.check_measure(start)?;
        let e = self.factors().e;
        if e >= 1.0 {
            return Err(Error::NotContraction { name: "e", value: e });
        }
        let eta = tol * (1.0 - e) / 4.0;
        let base_norm = self.base.as_ref().map_or(0.0, |b| b.variation_norm());
        let mut current = start.clone();
        let mut bound = f64::INFINITY;
        for k in 1..=max_iter {
            let next_raw = self.step(&current);
            let (next, _) = next_raw.prune_report(eta);
            if next.size() > MAX_MEASURE_SIZE {
                return Err(Error::MeasureTooLarge(next.size()));
            }
            let delta = next.sub(&current)?.variation_norm();
            // the truncated map is off by at most tail·‖μ‖ per step; with
            // ‖μ*‖ ≤ ‖μ⁰‖/(1−e) this adds tail·‖μ⁰‖/(1−e)² to the bound
            let tail_term = self.tail * base_norm / ((1.0 - e) * (1.0 - e));
            bound = (e * delta + eta) / (1.0 - e) + tail_term;
            current = next;
            if bound <= tol {
                return Ok(FixedPoint {
                    measure: current,
                    iterations: k,
                    error_bound: bound,
                });
            }
        }
        Err(Error::MaxIterations {
            iterations: max_iter,
            bound,
            tol,
        })
    }

    /// Iteration under the MK* stopping rule, for systems that are not
    /// variational contractions but satisfy `Σ R_i = I` and `c < 1`.
    ///
    /// Mass is conserved, so successive differences have total zero and
    /// `‖μ_k − μ*‖*_MK ≤ c/(1−c)·‖μ_k − μ_{k−1}‖*_MK`. The base measure, if
    /// any, must have total zero. No pruning is applied.
    pub fn iterate_mk_star(&self, start: &VectorMeasure, tol: f64, max_iter: usize) -> Result<FixedPoint> {
        check_tol(tol)?;
        self.check_measure(start)?;
        let c = self.factors().c;
        if c >= 1.0 {
            return Err(Error::NotContraction { name: "c", value: c });
        }
        if !self.conserves_mass(1e-12) {
            return Err(Error::Precondition("MK* iteration needs Σ R_i = I and no tail".into()));
        }
        if let Some(b) = &self.base {
            if norm(&b.total()) > 1e-12 {
                return Err(Error::Precondition("MK* iteration needs a base measure of total zero".into()));
            }
        }
        let mut current = start.clone();
        let mut bound = f64::INFINITY;
        for k in 1..=max_iter {
            let next = self.step(&current);
            if next.size() > MAX_MEASURE_SIZE {
                return Err(Error::MeasureTooLarge(next.size()));
            }
            let diff = next.sub(&current)?;
            // the exact difference has total zero; anything left is rounding
            let drift = norm(&diff.total());
            if drift > 1e-9 * next.variation_norm().max(1.0) {
                return Err(Error::NonzeroMass(drift));
            }
            bound = c / (1.0 - c) * profile_integral(&diff)?;
            current = next;
            if bound <= tol {
                return Ok(FixedPoint {
                    measure: current,
                    iterations: k,
                    error_bound: bound,
                });
            }
        }
        Err(Error::MaxIterations {
            iterations: max_iter,
            bound,
            tol,
        })
    }

    /// `μ*(B)` for the fixed point of a variational contraction.
    ///
    /// Explores the sets reachable from `B` under the preimages `ω_i⁻¹`,
    /// memoized on canonical keys. If the graph closes up, the linear system
    /// `v_j − Σ_i R_i v_{child(j,i)} = μ⁰(B_j)` is solved directly.
    /// Otherwise exploration stops at depth `D` with `e^D·‖μ⁰‖/(1−e) ≤ tol`
    /// and the unexplored sets are set to zero; since each of them is only
    /// reached through a path of length at least `D`, the resulting error
    /// is at most that bound.
    pub fn eval_fixed_point(&self, b: &QuerySet, tol: f64) -> Result<SetValue> {
        check_tol(tol)?;
        let e = self.factors().e;
        if e >= 1.0 {
            return Err(Error::NotContraction { name: "e", value: e });
        }
        let base_norm = self.base.as_ref().map_or(0.0, |m| m.variation_norm());
        if base_norm == 0.0 || b.is_empty() {
            return Ok(SetValue {
                value: Vector::zeros(self.dim),
                error_bound: 0.0,
                nodes: 0,
                exact: true,
            });
        }
        let tail_term = self.tail * base_norm / ((1.0 - e) * (1.0 - e));
        let budget = tol - tail_term;
        if budget <= 0.0 {
            return Err(Error::Precondition(format!(
                "declared tail alone contributes {tail_term:e}, above tol {tol:e}"
            )));
        }
        let e_fin = e - self.tail;
        let depth = if e_fin <= 0.0 {
            1
        } else {
            let need = (budget * (1.0 - e) / base_norm).ln() / e_fin.ln();
            need.ceil().max(1.0) as usize
        };
        let graph = self.explore(b, Some(depth), None)?;
        let value = self.solve_graph(&graph, None)?;
        let truncated = graph.truncated;
        let error_bound = if truncated {
            e_fin.powi(depth as i32) * base_norm / (1.0 - e) + tail_term
        } else {
            tail_term
        };
        Ok(SetValue {
            value,
            error_bound,
            nodes: graph.nodes.len(),
            exact: !truncated && self.tail == 0.0,
        })
    }

    /// `μ*(B)` for a mass-conserving system (`Σ R_i = I`) whose fixed point
    /// is pinned by its total `μ*([0,1]) = total`. Needs a finite preimage
    /// graph; the full interval is treated as a known node.
    ///
    /// This covers systems with `e = 1` where the set equation alone does not
    /// determine the solution.
    pub fn eval_fixed_point_with_total(&self, b: &QuerySet, total: &Vector) -> Result<SetValue> {
        check_dim(self.dim, total.len())?;
        if !self.conserves_mass(1e-12) {
            return Err(Error::Precondition("mass pinning needs Σ R_i = I".into()));
        }
        if let Some(base) = &self.base {
            if norm(&base.total()) > 1e-12 {
                return Err(Error::Precondition("mass pinning needs a base measure of total zero".into()));
            }
        }
        if b.is_empty() {
            return Ok(SetValue {
                value: Vector::zeros(self.dim),
                error_bound: 0.0,
                nodes: 0,
                exact: true,
            });
        }
        if b.approx_eq(&QuerySet::full()) {
            return Ok(SetValue {
                value: total.clone(),
                error_bound: 0.0,
                nodes: 0,
                exact: true,
            });
        }
        let graph = self.explore(b, None, Some(QuerySet::full().key()))?;
        let value = self.solve_graph(&graph, Some(total))?;
        Ok(SetValue {
            value,
            error_bound: 0.0,
            nodes: graph.nodes.len(),
            exact: true,
        })
    }

    fn explore(&self, root: &QuerySet, max_depth: Option<usize>, pinned: Option<SetKey>) -> Result<Graph> {
        let mut index: HashMap<SetKey, usize> = HashMap::new();
        let mut nodes: Vec<Node> = Vec::new();
        let mut queue: VecDeque<(usize, QuerySet, usize)> = VecDeque::new();
        let mut truncated = false;
        index.insert(root.key(), 0);
        nodes.push(Node::default());
        queue.push_back((0, root.clone(), 0));
        while let Some((id, set, depth)) = queue.pop_front() {
            let base = self
                .base
                .as_ref()
                .map_or_else(|| Vector::zeros(self.dim), |m| m.evaluate(&set));
            nodes[id].base = base;
            if max_depth.is_some_and(|d| depth >= d) {
                nodes[id].frontier = true;
                truncated = true;
                continue;
            }
            let mut children = Vec::with_capacity(self.maps.len());
            for w in &self.maps {
                let pre = w.preimage(&set);
                if pre.is_empty() {
                    children.push(Child::Empty);
                    continue;
                }
                let key = pre.key();
                if pinned.as_ref() == Some(&key) {
                    children.push(Child::Pinned);
                    continue;
                }
                let next = match index.get(&key) {
                    Some(&j) => j,
                    None => {
                        let j = nodes.len();
                        if j >= MAX_NODES {
                            return Err(Error::GraphTooLarge(j));
                        }
                        index.insert(key, j);
                        nodes.push(Node::default());
                        queue.push_back((j, pre, depth + 1));
                        j
                    }
                };
                children.push(Child::Node(next));
            }
            nodes[id].children = children;
        }
        Ok(Graph { nodes, truncated })
    }

    /// Solves `v_j = μ⁰(B_j) + Σ_i R_i v_{child}`, frontier nodes fixed at 0,
    /// pinned children fixed at `pinned`. Returns `v_0`.
    fn solve_graph(&self, g: &Graph, pinned: Option<&Vector>) -> Result<Vector> {
        let n = self.dim;
        let m = g.nodes.len();
        let mut rhs: Vec<Vector> = g.nodes.iter().map(|nd| nd.base.clone()).collect();
        if let Some(p) = pinned {
            for (j, nd) in g.nodes.iter().enumerate() {
                for (i, ch) in nd.children.iter().enumerate() {
                    if matches!(ch, Child::Pinned) {
                        rhs[j] += self.operators[i].mul_vec(p);
                    }
                }
            }
        }
        if m * n <= DENSE_LIMIT {
            let size = m * n;
            let mut a = DMatrix::<C64>::identity(size, size);
            let mut bvec = nalgebra::DVector::<C64>::zeros(size);
            for (j, nd) in g.nodes.iter().enumerate() {
                bvec.rows_mut(j * n, n).copy_from(&rhs[j]);
                if nd.frontier {
                    continue;
                }
                for (i, ch) in nd.children.iter().enumerate() {
                    if let Child::Node(k) = ch {
                        let mut blk = a.view_mut((j * n, k * n), (n, n));
                        blk -= self.operators[i].matrix();
                    }
                }
            }
            let sol = a
                .lu()
                .solve(&bvec)
                .ok_or_else(|| Error::Singular("set-equation system".into()))?;
            if sol.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Singular("set-equation system".into()));
            }
            return Ok(sol.rows(0, n).into_owned());
        }
        // Gauss-Seidel sweeps; converges since Σ‖R_i‖ < 1 in the
        // variational case
        let mut v: Vec<Vector> = vec![Vector::zeros(n); m];
        let scale = rhs.iter().map(norm).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        for _ in 0..100_000 {
            let mut change: f64 = 0.0;
            for j in 0..m {
                let nd = &g.nodes[j];
                if nd.frontier {
                    v[j] = Vector::zeros(n);
                    continue;
                }
                let mut acc = rhs[j].clone();
                for (i, ch) in nd.children.iter().enumerate() {
                    if let Child::Node(k) = ch {
                        acc += self.operators[i].mul_vec(&v[*k]);
                    }
                }
                change = change.max(norm(&(&acc - &v[j])));
                v[j] = acc;
            }
            if change <= 1e-16 * scale {
                return Ok(v.swap_remove(0));
            }
        }
        Err(Error::Singular("set-equation iteration did not settle".into()))
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::Invalid(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

#[derive(Debug, Clone)]
enum Child {
    Empty,
    Pinned,
    Node(usize),
}

#[derive(Debug, Clone, Default)]
struct Node {
    base: Vector,
    children: Vec<Child>,
    frontier: bool,
}

#[derive(Debug)]
struct Graph {
    nodes: Vec<Node>,
    truncated: bool,
}

/// Iterator over `H^k(start)`; see [`IFSystem::iterates`].
pub struct Iterates<'a> {
    sys: &'a IFSystem,
    current: Option<VectorMeasure>,
}

impl Iterator for Iterates<'_> {
    type Item = VectorMeasure;

    fn next(&mut self) -> Option<VectorMeasure> {
        let cur = self.current.take()?;
        self.current = Some(self.sys.step(&cur));
        Some(cur)
    }
}
