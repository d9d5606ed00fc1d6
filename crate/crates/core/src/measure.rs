//! Vector measures of bounded variation on `[0,1]`: finitely many Dirac
//! atoms plus finitely many constant-density Lebesgue pieces.
//!
//! For a set `B`,
//!
//! ```text
//! μ(B) = Σ_{atoms t ∈ B} weight + Σ_{pieces} density · λ(B ∩ I)
//! ```
//!
//! Pieces carry no point mass, so whether a piece endpoint belongs to `B` is
//! irrelevant to it; all point masses live in atoms.
//!
//! Every constructor and operation returns the canonical form: atoms sorted
//! at distinct points (coincidence up to a snap tolerance) with nonzero
//! weights, pieces sorted with disjoint interiors, nonzero densities, and no
//! two adjacent pieces of equal density.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::hilbert::{norm, Field, MatrixOperator, Vector, C64};
use crate::space::{AffineMap, Interval, QuerySet, SNAP};

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub point: f64,
    pub weight: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub interval: Interval,
    pub density: Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureDoc", into = "MeasureDoc")]
pub struct VectorMeasure {
    dim: usize,
    field: Field,
    atoms: Vec<Atom>,
    pieces: Vec<Piece>,
}

fn is_zero(v: &Vector) -> bool {
    v.iter().all(|z| z.re == 0.0 && z.im == 0.0)
}

fn finite(v: &Vector) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

impl VectorMeasure {
    pub fn zero(dim: usize, field: Field) -> Self {
        Self {
            dim,
            field,
            atoms: Vec::new(),
            pieces: Vec::new(),
        }
    }

    pub fn new(dim: usize, field: Field, atoms: Vec<Atom>, pieces: Vec<Piece>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("dimension must be at least 1".into()));
        }
        for a in &atoms {
            check_dim(dim, a.weight.len())?;
            field.check(&a.weight, "atom weight")?;
            if !a.point.is_finite() || !finite(&a.weight) {
                return Err(Error::NonFinite("atom"));
            }
            if a.point < -SNAP || a.point > 1.0 + SNAP {
                return Err(Error::Invalid(format!("atom at {} lies outside [0,1]", a.point)));
            }
        }
        for p in &pieces {
            check_dim(dim, p.density.len())?;
            field.check(&p.density, "piece density")?;
            if !finite(&p.density) {
                return Err(Error::NonFinite("piece density"));
            }
            Interval::new(p.interval.lo, p.interval.hi)?;
        }
        let atoms = atoms
            .into_iter()
            .map(|a| Atom {
                point: a.point.clamp(0.0, 1.0),
                weight: a.weight,
            })
            .collect();
        Ok(Self::canonical(dim, field, atoms, pieces, SNAP))
    }

    /// `δ_t · v`.
    pub fn dirac(t: f64, v: Vector, field: Field) -> Result<Self> {
        let dim = v.len();
        Self::new(dim, field, vec![Atom { point: t, weight: v }], Vec::new())
    }

    /// Constant density `c` times Lebesgue measure on `[lo, hi]`.
    pub fn lebesgue(lo: f64, hi: f64, density: Vector, field: Field) -> Result<Self> {
        let dim = density.len();
        Self::new(
            dim,
            field,
            Vec::new(),
            vec![Piece {
                interval: Interval::new(lo, hi)?,
                density,
            }],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.pieces.is_empty()
    }

    /// Number of atoms plus pieces.
    pub fn size(&self) -> usize {
        self.atoms.len() + self.pieces.len()
    }

    /// Re-canonicalize with a custom atom snap tolerance.
    pub fn canonicalize_with(&self, snap: f64) -> Self {
        Self::canonical(self.dim, self.field, self.atoms.clone(), self.pieces.clone(), snap)
    }

    fn canonical(dim: usize, field: Field, mut atoms: Vec<Atom>, pieces: Vec<Piece>, snap: f64) -> Self {
        atoms.sort_by(|a, b| a.point.partial_cmp(&b.point).unwrap_or(Ordering::Equal));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        let mut cluster_start = f64::NEG_INFINITY;
        for a in atoms {
            match merged.last_mut() {
                Some(last) if a.point - cluster_start <= snap => last.weight += &a.weight,
                _ => {
                    cluster_start = a.point;
                    merged.push(a);
                }
            }
        }
        merged.retain(|a| !is_zero(&a.weight));
        Self {
            dim,
            field,
            atoms: merged,
            pieces: canonical_pieces(dim, pieces),
        }
    }

    /// `μ(B)`.
    pub fn evaluate(&self, b: &QuerySet) -> Vector {
        let mut out = Vector::zeros(self.dim);
        for a in &self.atoms {
            if b.contains(a.point) {
                out += &a.weight;
            }
        }
        for p in &self.pieces {
            let len = b.overlap_length(p.interval.lo, p.interval.hi);
            if len > 0.0 {
                out.axpy(real(len), &p.density, real(1.0));
            }
        }
        out
    }

    /// `μ([0,1])`.
    pub fn total(&self) -> Vector {
        let mut out = Vector::zeros(self.dim);
        for a in &self.atoms {
            out += &a.weight;
        }
        for p in &self.pieces {
            out.axpy(real(p.interval.length()), &p.density, real(1.0));
        }
        out
    }

    /// Variational norm `|μ|([0,1])`.
    pub fn variation_norm(&self) -> f64 {
        let a: f64 = self.atoms.iter().map(|a| norm(&a.weight)).sum();
        let p: f64 = self
            .pieces
            .iter()
            .map(|p| norm(&p.density) * p.interval.length())
            .sum();
        a + p
    }

    /// Transported measure `ω(μ)(A) = μ(ω⁻¹(A))`.
    pub fn pushforward(&self, w: &AffineMap) -> VectorMeasure {
        let mut atoms: Vec<Atom> = self
            .atoms
            .iter()
            .map(|a| Atom {
                point: w.apply(a.point).clamp(0.0, 1.0),
                weight: a.weight.clone(),
            })
            .collect();
        let mut pieces = Vec::with_capacity(self.pieces.len());
        if w.is_constant() {
            for p in &self.pieces {
                atoms.push(Atom {
                    point: w.offset(),
                    weight: &p.density * real(p.interval.length()),
                });
            }
        } else {
            let inv = 1.0 / w.lipschitz();
            for p in &self.pieces {
                pieces.push(Piece {
                    interval: w.image(&p.interval),
                    density: &p.density * real(inv),
                });
            }
        }
        Self::canonical(self.dim, self.field, atoms, pieces, SNAP)
    }

    /// `R ∘ μ`: the operator applied to every coefficient.
    pub fn apply_operator(&self, r: &MatrixOperator) -> Result<VectorMeasure> {
        check_dim(self.dim, r.dim())?;
        if self.field == Field::Real && !r.is_real() {
            return Err(Error::FieldMismatch("complex operator applied to a real measure".into()));
        }
        Ok(self.apply_operator_unchecked(r))
    }

    pub(crate) fn apply_operator_unchecked(&self, r: &MatrixOperator) -> VectorMeasure {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                point: a.point,
                weight: r.mul_vec(&a.weight),
            })
            .collect();
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece {
                interval: p.interval,
                density: r.mul_vec(&p.density),
            })
            .collect();
        Self::canonical(self.dim, self.field, atoms, pieces, SNAP)
    }

    /// `a·μ + b·ν`.
    pub fn combine(a: C64, mu: &VectorMeasure, b: C64, nu: &VectorMeasure) -> Result<VectorMeasure> {
        check_dim(mu.dim, nu.dim)?;
        mu.field.check_same(nu.field)?;
        if mu.field == Field::Real && (a.im != 0.0 || b.im != 0.0) {
            return Err(Error::FieldMismatch("complex coefficient in a real context".into()));
        }
        Ok(Self::sum_scaled(&[(a, mu), (b, nu)]))
    }

    /// `Σ c_k μ_k` for operands already known to be compatible.
    pub(crate) fn sum_scaled(terms: &[(C64, &VectorMeasure)]) -> VectorMeasure {
        let first = terms[0].1;
        let mut atoms = Vec::new();
        let mut pieces = Vec::new();
        for (c, m) in terms {
            atoms.extend(m.atoms.iter().map(|at| Atom {
                point: at.point,
                weight: &at.weight * *c,
            }));
            pieces.extend(m.pieces.iter().map(|p| Piece {
                interval: p.interval,
                density: &p.density * *c,
            }));
        }
        Self::canonical(first.dim, first.field, atoms, pieces, SNAP)
    }

    pub fn add(&self, other: &VectorMeasure) -> Result<VectorMeasure> {
        Self::combine(real(1.0), self, real(1.0), other)
    }

    pub fn sub(&self, other: &VectorMeasure) -> Result<VectorMeasure> {
        Self::combine(real(1.0), self, real(-1.0), other)
    }

    pub fn scale(&self, a: C64) -> Result<VectorMeasure> {
        if self.field == Field::Real && a.im != 0.0 {
            return Err(Error::FieldMismatch("complex coefficient in a real context".into()));
        }
        Ok(Self::sum_scaled(&[(a, self)]))
    }

    /// Removes the smallest atoms and pieces while the removed variation
    /// stays within `tol`, so that `‖prune(μ) − μ‖ ≤ tol`.
    pub fn prune(&self, tol: f64) -> VectorMeasure {
        self.prune_report(tol).0
    }

    /// [`prune`](Self::prune) together with the variation actually removed.
    pub fn prune_report(&self, tol: f64) -> (VectorMeasure, f64) {
        if !(tol > 0.0) || self.is_zero() {
            return (self.clone(), 0.0);
        }
        // (contribution, is_atom, index)
        let mut parts: Vec<(f64, bool, usize)> = self
            .atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (norm(&a.weight), true, i))
            .chain(
                self.pieces
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (norm(&p.density) * p.interval.length(), false, i)),
            )
            .collect();
        parts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        let mut removed = 0.0;
        let mut drop_atom = vec![false; self.atoms.len()];
        let mut drop_piece = vec![false; self.pieces.len()];
        for (v, is_atom, i) in parts {
            if removed + v > tol {
                break;
            }
            removed += v;
            if is_atom {
                drop_atom[i] = true;
            } else {
                drop_piece[i] = true;
            }
        }
        if removed == 0.0 && !drop_atom.iter().chain(&drop_piece).any(|&d| d) {
            return (self.clone(), 0.0);
        }
        let atoms = self
            .atoms
            .iter()
            .zip(&drop_atom)
            .filter(|(_, d)| !**d)
            .map(|(a, _)| a.clone())
            .collect();
        let pieces = self
            .pieces
            .iter()
            .zip(&drop_piece)
            .filter(|(_, d)| !**d)
            .map(|(p, _)| p.clone())
            .collect();
        (Self::canonical(self.dim, self.field, atoms, pieces, SNAP), removed)
    }

    /// `μ([0, t])`.
    pub fn cumulative(&self, t: f64) -> Vector {
        match QuerySet::closed(0.0, t.clamp(0.0, 1.0)) {
            Ok(b) => self.evaluate(&b),
            Err(_) => Vector::zeros(self.dim),
        }
    }

    /// Points where the cumulative function changes slope or jumps, with 0
    /// and 1 included.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = vec![0.0, 1.0];
        xs.extend(self.atoms.iter().map(|a| a.point));
        for p in &self.pieces {
            xs.push(p.interval.lo);
            xs.push(p.interval.hi);
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        xs.dedup();
        xs
    }

    /// The cumulative function `t ↦ μ([0,t])` as an explicit piecewise
    /// affine profile.
    pub fn cumulative_profile(&self) -> CumulativeProfile {
        let knots = self.breakpoints();
        let n = self.dim;
        let mut values = Vec::with_capacity(knots.len());
        let mut slopes = Vec::with_capacity(knots.len().saturating_sub(1));
        let mut acc = Vector::zeros(n);
        let (mut ai, mut pi) = (0usize, 0usize);
        let mut active: Vec<usize> = Vec::new();
        for (k, &x) in knots.iter().enumerate() {
            while ai < self.atoms.len() && self.atoms[ai].point <= x {
                acc += &self.atoms[ai].weight;
                ai += 1;
            }
            values.push(acc.clone());
            if k + 1 == knots.len() {
                break;
            }
            let next = knots[k + 1];
            active.retain(|&i| self.pieces[i].interval.hi > x);
            while pi < self.pieces.len() && self.pieces[pi].interval.lo <= x {
                if self.pieces[pi].interval.hi > x {
                    active.push(pi);
                }
                pi += 1;
            }
            let mut slope = Vector::zeros(n);
            for &i in &active {
                slope += &self.pieces[i].density;
            }
            acc.axpy(real(next - x), &slope, real(1.0));
            slopes.push(slope);
        }
        CumulativeProfile {
            knots,
            values,
            slopes,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("measure serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Invalid(format!("measure JSON: {e}")))
    }
}

/// Splits pieces at every endpoint, sums overlapping densities, and merges
/// adjacent pieces of equal density.
fn canonical_pieces(dim: usize, mut pieces: Vec<Piece>) -> Vec<Piece> {
    pieces.retain(|p| p.interval.hi > p.interval.lo && !is_zero(&p.density));
    if pieces.is_empty() {
        return pieces;
    }
    pieces.sort_by(|a, b| {
        a.interval
            .lo
            .partial_cmp(&b.interval.lo)
            .unwrap_or(Ordering::Equal)
    });
    let disjoint = pieces
        .windows(2)
        .all(|w| w[0].interval.hi <= w[1].interval.lo);
    let elementary: Vec<Piece> = if disjoint {
        pieces
    } else {
        let mut xs: Vec<f64> = pieces
            .iter()
            .flat_map(|p| [p.interval.lo, p.interval.hi])
            .collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        xs.dedup();
        let mut out = Vec::with_capacity(xs.len());
        let mut active: Vec<usize> = Vec::new();
        let mut next = 0usize;
        for w in xs.windows(2) {
            let (x, y) = (w[0], w[1]);
            active.retain(|&i| pieces[i].interval.hi > x);
            while next < pieces.len() && pieces[next].interval.lo <= x {
                if pieces[next].interval.hi > x {
                    active.push(next);
                }
                next += 1;
            }
            if active.is_empty() {
                continue;
            }
            let mut d = Vector::zeros(dim);
            for &i in &active {
                d += &pieces[i].density;
            }
            out.push(Piece {
                interval: Interval { lo: x, hi: y },
                density: d,
            });
        }
        out
    };
    let mut merged: Vec<Piece> = Vec::with_capacity(elementary.len());
    for p in elementary {
        if is_zero(&p.density) {
            continue;
        }
        match merged.last_mut() {
            Some(last) if last.interval.hi == p.interval.lo && last.density == p.density => {
                last.interval.hi = p.interval.hi;
            }
            _ => merged.push(p),
        }
    }
    merged
}

/// Piecewise affine cumulative function: on `[knots[k], knots[k+1])` the
/// value is `values[k] + slopes[k]·(t − knots[k])`, where `values[k]`
/// already includes any atom at `knots[k]`.
#[derive(Debug, Clone)]
pub struct CumulativeProfile {
    pub knots: Vec<f64>,
    pub values: Vec<Vector>,
    pub slopes: Vec<Vector>,
}

impl CumulativeProfile {
    pub fn eval(&self, t: f64) -> Vector {
        let k = match self
            .knots
            .binary_search_by(|x| x.partial_cmp(&t).unwrap_or(Ordering::Equal))
        {
            Ok(k) => return self.values[k].clone(),
            Err(0) => return Vector::zeros(self.values[0].len()),
            Err(k) => k - 1,
        };
        if k >= self.slopes.len() {
            return self.values[self.values.len() - 1].clone();
        }
        &self.values[k] + &self.slopes[k] * real(t - self.knots[k])
    }
}

/// A coefficient in the JSON form: a bare number for real data, `[re, im]`
/// otherwise.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coeff {
    Real(f64),
    Complex([f64; 2]),
}

impl Coeff {
    pub fn to_c64(&self) -> C64 {
        match *self {
            Coeff::Real(x) => C64::new(x, 0.0),
            Coeff::Complex([re, im]) => C64::new(re, im),
        }
    }

    pub fn from_c64(z: C64, field: Field) -> Self {
        match field {
            Field::Real => Coeff::Real(z.re),
            Field::Complex => Coeff::Complex([z.re, z.im]),
        }
    }
}

pub fn coeffs_to_vector(cs: &[Coeff]) -> Vector {
    Vector::from_iterator(cs.len(), cs.iter().map(Coeff::to_c64))
}

pub fn vector_to_coeffs(v: &Vector, field: Field) -> Vec<Coeff> {
    v.iter().map(|z| Coeff::from_c64(*z, field)).collect()
}

/// JSON document of a measure: atoms as `[t, [coeffs]]`, pieces as
/// `[lo, hi, [coeffs]]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureDoc {
    pub dim: usize,
    #[serde(default)]
    pub field: Field,
    #[serde(default)]
    pub atoms: Vec<(f64, Vec<Coeff>)>,
    #[serde(default)]
    pub pieces: Vec<(f64, f64, Vec<Coeff>)>,
}

impl TryFrom<MeasureDoc> for VectorMeasure {
    type Error = Error;

    fn try_from(doc: MeasureDoc) -> Result<Self> {
        let atoms = doc
            .atoms
            .iter()
            .map(|(t, cs)| Atom {
                point: *t,
                weight: coeffs_to_vector(cs),
            })
            .collect();
        let pieces = doc
            .pieces
            .iter()
            .map(|(lo, hi, cs)| {
                Ok(Piece {
                    interval: Interval::new(*lo, *hi)?,
                    density: coeffs_to_vector(cs),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        VectorMeasure::new(doc.dim, doc.field, atoms, pieces)
    }
}

impl From<VectorMeasure> for MeasureDoc {
    fn from(m: VectorMeasure) -> Self {
        MeasureDoc {
            dim: m.dim,
            field: m.field,
            atoms: m
                .atoms
                .iter()
                .map(|a| (a.point, vector_to_coeffs(&a.weight, m.field)))
                .collect(),
            pieces: m
                .pieces
                .iter()
                .map(|p| (p.interval.lo, p.interval.hi, vector_to_coeffs(&p.density, m.field)))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::real_vector;
    use proptest::prelude::*;

    fn rv(xs: &[f64]) -> Vector {
        real_vector(xs)
    }

    fn close(a: &Vector, b: &Vector, tol: f64) -> bool {
        norm(&(a - b)) <= tol
    }

    /// `μ⁰ = ((1/4)λ, (1/4)δ₀)`
    fn base_6_3() -> VectorMeasure {
        let l = VectorMeasure::lebesgue(0.0, 1.0, rv(&[0.25, 0.0]), Field::Real).unwrap();
        let d = VectorMeasure::dirac(0.0, rv(&[0.0, 0.25]), Field::Real).unwrap();
        l.add(&d).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let v = rv(&[1.0, -2.0]);
        let m = VectorMeasure::dirac(0.0, v.clone(), Field::Real).unwrap();
        assert_eq!(m.evaluate(&QuerySet::point(0.0)), v);
        assert_eq!(
            m.evaluate(&QuerySet::segment(0.0, 1.0, false, true).unwrap()),
            Vector::zeros(2)
        );
        let l = VectorMeasure::lebesgue(0.0, 1.0, rv(&[0.25]), Field::Real).unwrap();
        assert!(close(&l.evaluate(&QuerySet::closed(0.0, 0.5).unwrap()), &rv(&[0.125]), 1e-16));
        assert!(close(&base_6_3().evaluate(&QuerySet::full()), &rv(&[0.25, 0.25]), 1e-16));
    }

    #[test]
    fn variation_examples() {
        let v = rv(&[3.0, 4.0]);
        assert_eq!(VectorMeasure::dirac(0.3, v, Field::Real).unwrap().variation_norm(), 5.0);
        assert!((base_6_3().variation_norm() - 0.5).abs() < 1e-16);
        let e = rv(&[1.0, 0.0]);
        let a = VectorMeasure::dirac(0.0, e.clone(), Field::Real).unwrap();
        let b = VectorMeasure::dirac(1.0, e, Field::Real).unwrap();
        assert_eq!(a.sub(&b).unwrap().variation_norm(), 2.0);
    }

    #[test]
    fn pushforward_examples() {
        let [w1, _] = AffineMap::cantor();
        let v = rv(&[1.0, 2.0]);
        let m = VectorMeasure::dirac(1.0, v.clone(), Field::Real).unwrap();
        let p = m.pushforward(&w1);
        assert_eq!(p.atoms().len(), 1);
        assert!((p.atoms()[0].point - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(p.atoms()[0].weight, v);

        let l = VectorMeasure::lebesgue(0.0, 1.0, rv(&[1.0]), Field::Real).unwrap();
        let pl = l.pushforward(&w1);
        assert_eq!(pl.pieces().len(), 1);
        assert!((pl.pieces()[0].density[0].re - 3.0).abs() < 1e-15);
        // λ(ω₁⁻¹(A)) = 3λ(A ∩ [0,1/3]) on a grid of intervals
        for i in 0..10 {
            for j in i..10 {
                let a = QuerySet::closed(i as f64 / 10.0, j as f64 / 10.0 + 0.05).unwrap();
                let lhs = pl.evaluate(&a)[0].re;
                let rhs = 3.0 * a.overlap_length(0.0, 1.0 / 3.0);
                assert!((lhs - rhs).abs() < 1e-14);
            }
        }
        let c = AffineMap::constant(0.25).unwrap();
        let pc = l.pushforward(&c);
        assert_eq!(pc.pieces().len(), 0);
        assert_eq!(pc.atoms()[0].point, 0.25);
        assert!(pl.variation_norm() <= l.variation_norm() + 1e-15);
    }

    #[test]
    fn operator_examples() {
        let m = base_6_3();
        assert_eq!(m.apply_operator(&MatrixOperator::identity(2)).unwrap(), m);
        let v = rv(&[1.0, -1.0]);
        let d = VectorMeasure::dirac(0.5, v.clone(), Field::Real).unwrap();
        let two = MatrixOperator::scalar(2, real(2.0));
        assert_eq!(
            d.apply_operator(&two).unwrap(),
            VectorMeasure::dirac(0.5, &v * real(2.0), Field::Real).unwrap()
        );
        assert!(matches!(
            d.apply_operator(&MatrixOperator::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
        let complex_op = MatrixOperator::scalar(2, C64::new(0.0, 1.0));
        assert!(matches!(d.apply_operator(&complex_op), Err(Error::FieldMismatch(_))));
    }

    #[test]
    fn combine_examples() {
        let m = base_6_3();
        assert!(m.sub(&m).unwrap().is_zero());
        let v = rv(&[1.0, 2.0]);
        let w = rv(&[-3.0, 0.5]);
        let s = VectorMeasure::dirac(0.0, v.clone(), Field::Real)
            .unwrap()
            .add(&VectorMeasure::dirac(0.0, w.clone(), Field::Real).unwrap())
            .unwrap();
        assert_eq!(s.atoms().len(), 1);
        assert_eq!(s.atoms()[0].weight, &v + &w);
        // overlapping pieces are split and summed
        let a = VectorMeasure::lebesgue(0.0, 0.6, rv(&[1.0]), Field::Real).unwrap();
        let b = VectorMeasure::lebesgue(0.4, 1.0, rv(&[1.0]), Field::Real).unwrap();
        let ab = a.add(&b).unwrap();
        assert_eq!(ab.pieces().len(), 3);
        assert_eq!(ab.pieces()[1].density, rv(&[2.0]));
        // adjacent equal densities merge
        let c = VectorMeasure::lebesgue(0.6, 1.0, rv(&[1.0]), Field::Real).unwrap();
        assert_eq!(a.add(&c).unwrap().pieces().len(), 1);
        let other_field = VectorMeasure::zero(1, Field::Complex);
        assert!(a.add(&other_field).is_err());
    }

    #[test]
    fn total_examples() {
        let v = rv(&[0.5, 0.25]);
        assert_eq!(VectorMeasure::dirac(0.7, v.clone(), Field::Real).unwrap().total(), v);
        assert!(close(&base_6_3().total(), &rv(&[0.25, 0.25]), 1e-16));
        assert_eq!(VectorMeasure::zero(3, Field::Real).total(), Vector::zeros(3));
    }

    #[test]
    fn prune_examples() {
        let m = base_6_3();
        assert_eq!(m.prune(0.0), m);
        let tiny = VectorMeasure::dirac(0.9, rv(&[1e-18, 0.0]), Field::Real).unwrap();
        let mt = m.add(&tiny).unwrap();
        let p = mt.prune(1e-12);
        assert_eq!(p, m);
        assert!(p.sub(&mt).unwrap().variation_norm() <= 1e-12);
    }

    #[test]
    fn cumulative_examples() {
        let v = rv(&[2.0]);
        let d = VectorMeasure::dirac(0.0, v.clone(), Field::Real).unwrap();
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(d.cumulative(t), v);
        }
        let l = VectorMeasure::lebesgue(0.0, 1.0, rv(&[1.0]), Field::Real).unwrap();
        assert!((l.cumulative(0.37)[0].re - 0.37).abs() < 1e-16);
        let e = rv(&[1.0, 1.0]);
        let m = VectorMeasure::dirac(0.0, e.clone(), Field::Real)
            .unwrap()
            .sub(&VectorMeasure::dirac(1.0, e.clone(), Field::Real).unwrap())
            .unwrap();
        assert_eq!(m.cumulative(0.0), e);
        assert_eq!(m.cumulative(0.999), e);
        assert_eq!(m.cumulative(1.0), Vector::zeros(2));
    }

    #[test]
    fn profile_matches_cumulative() {
        let m = base_6_3()
            .add(&VectorMeasure::dirac(0.5, rv(&[1.0, -1.0]), Field::Real).unwrap())
            .unwrap()
            .add(&VectorMeasure::lebesgue(0.2, 0.7, rv(&[0.0, 2.0]), Field::Real).unwrap())
            .unwrap();
        let prof = m.cumulative_profile();
        for i in 0..=200 {
            let t = i as f64 / 200.0;
            assert!(close(&prof.eval(t), &m.cumulative(t), 1e-14), "t = {t}");
        }
    }

    #[test]
    fn json_shape() {
        let m = base_6_3();
        let s = m.to_json();
        assert_eq!(
            s,
            r#"{"dim":2,"field":"real","atoms":[[0.0,[0.0,0.25]]],"pieces":[[0.0,1.0,[0.25,0.0]]]}"#
        );
        assert_eq!(VectorMeasure::from_json(&s).unwrap(), m);
        let c = VectorMeasure::dirac(0.5, Vector::from_vec(vec![C64::new(1.0, -2.0)]), Field::Complex).unwrap();
        let sc = c.to_json();
        assert!(sc.contains("[1.0,-2.0]"));
        assert_eq!(VectorMeasure::from_json(&sc).unwrap(), c);
        assert!(VectorMeasure::from_json(r#"{"dim":1,"atoms":[[2.0,[1.0]]]}"#).is_err());
    }

    // --- property tests -------------------------------------------------

    pub(crate) fn arb_measure(dim: usize) -> impl Strategy<Value = VectorMeasure> {
        let coeffs = move || prop::collection::vec(-2.0f64..2.0, dim);
        (
            prop::collection::vec((0.0f64..=1.0, coeffs()), 0..5),
            prop::collection::vec((0.0f64..1.0, 0.0f64..0.5, coeffs()), 0..4),
        )
            .prop_map(move |(atoms, pieces)| {
                let atoms = atoms
                    .into_iter()
                    .map(|(t, c)| Atom {
                        point: t,
                        weight: rv(&c),
                    })
                    .collect();
                let pieces = pieces
                    .into_iter()
                    .map(|(lo, len, c)| Piece {
                        interval: Interval::new(lo, (lo + len).min(1.0)).unwrap(),
                        density: rv(&c),
                    })
                    .collect();
                VectorMeasure::new(dim, Field::Real, atoms, pieces).unwrap()
            })
    }

    fn arb_set() -> impl Strategy<Value = QuerySet> {
        (
            prop::collection::vec((0.0f64..1.0, 0.0f64..0.4, any::<bool>(), any::<bool>()), 0..3),
            prop::collection::vec(0.0f64..=1.0, 0..3),
        )
            .prop_map(|(segs, atoms)| {
                let segs = segs
                    .into_iter()
                    .map(|(lo, len, a, b)| crate::space::Segment::new(lo, lo + len + 1e-3, a, b).unwrap())
                    .collect();
                QuerySet::from_parts(segs, atoms)
            })
    }

    fn arb_map() -> impl Strategy<Value = AffineMap> {
        (-1.0f64..1.0, 0.0f64..1.0).prop_map(|(s, u)| {
            let lo = if s < 0.0 { -s } else { 0.0 };
            let hi = if s < 0.0 { 1.0 } else { 1.0 - s };
            AffineMap::new(s, lo + u * (hi - lo)).unwrap()
        })
    }

    proptest! {
        #[test]
        fn finite_additivity(m in arb_measure(2), a in arb_set(), b in arb_set()) {
            let b = b.difference(&a);
            let lhs = m.evaluate(&a.union(&b));
            let rhs = m.evaluate(&a) + m.evaluate(&b);
            prop_assert!(close(&lhs, &rhs, 1e-12));
        }

        #[test]
        fn pushforward_is_transport(m in arb_measure(2), w in arb_map(), b in arb_set()) {
            let lhs = m.pushforward(&w).evaluate(&b);
            let rhs = m.evaluate(&w.preimage(&b));
            prop_assert!(close(&lhs, &rhs, 1e-10), "{} vs {}", lhs, rhs);
        }

        #[test]
        fn pushforward_does_not_increase_variation(m in arb_measure(2), w in arb_map()) {
            prop_assert!(m.pushforward(&w).variation_norm() <= m.variation_norm() + 1e-12);
        }

        #[test]
        fn operator_commutes_with_evaluation(
            m in arb_measure(2),
            entries in prop::collection::vec(-2.0f64..2.0, 4),
            b in arb_set(),
        ) {
            let r = MatrixOperator::from_real_rows(&[entries[0..2].to_vec(), entries[2..4].to_vec()]).unwrap();
            let rm = m.apply_operator(&r).unwrap();
            prop_assert!(close(&rm.evaluate(&b), &r.apply(&m.evaluate(&b)).unwrap(), 1e-12));
            prop_assert!(rm.variation_norm() <= r.operator_norm() * m.variation_norm() + 1e-12);
        }

        #[test]
        fn triangle_inequality(m in arb_measure(3), n in arb_measure(3), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let s = VectorMeasure::combine(real(a), &m, real(b), &n).unwrap();
            prop_assert!(s.variation_norm() <= a.abs() * m.variation_norm() + b.abs() * n.variation_norm() + 1e-12);
        }

        #[test]
        fn canonical_form_is_fixed(m in arb_measure(2)) {
            let again = VectorMeasure::new(2, Field::Real, m.atoms().to_vec(), m.pieces().to_vec()).unwrap();
            prop_assert_eq!(again, m);
        }

        #[test]
        fn prune_respects_budget(m in arb_measure(2), t in 0.0f64..1.0) {
            let p = m.prune(t);
            prop_assert!(p.sub(&m).unwrap().variation_norm() <= t + 1e-15);
        }

        #[test]
        fn json_round_trip(m in arb_measure(2)) {
            prop_assert_eq!(VectorMeasure::from_json(&m.to_json()).unwrap(), m);
        }
    }
}
