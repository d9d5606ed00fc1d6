//! The compact space `T = [0,1]`, its evaluable Borel sets, and the affine
//! maps of an iterated function system.
//!
//! A [`QuerySet`] is a finite union of intervals (with exact endpoint
//! inclusion) plus finitely many isolated points. Every constructor returns
//! the canonical form: maximal disjoint segments sorted by position, and atoms
//! that are not adjacent to or inside any segment. Two sets describing the
//! same points therefore compare equal.
//!
//! Coordinates closer than [`SNAP`] are treated as the same point. Without
//! this, `ω⁻¹` applied to a point produced by `ω` can land one ulp outside
//! `[0,1]` and silently drop it.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{norm, Vector};

/// Coordinates within this distance are the same point.
pub const SNAP: f64 = 1e-12;

/// Grid used to build memoization keys for sets.
pub const KEY_GRID: f64 = 1e-14;

#[inline]
fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= SNAP
}

/// A closed subinterval `[lo, hi]` of `[0,1]`, used for density pieces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::NonFinite("interval endpoint"));
        }
        if lo > hi || lo < -SNAP || hi > 1.0 + SNAP {
            return Err(Error::Invalid(format!("[{lo}, {hi}] is not a subinterval of [0,1]")));
        }
        Ok(Self {
            lo: lo.clamp(0.0, 1.0),
            hi: hi.clamp(0.0, 1.0),
        })
    }

    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// One interval component of a [`QuerySet`], `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Segment {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::NonFinite("segment endpoint"));
        }
        if lo >= hi {
            return Err(Error::Invalid(format!("segment needs lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Self {
            lo,
            hi,
            lo_closed,
            hi_closed,
        })
    }

    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, true, true)
    }

    fn contains(&self, p: f64) -> bool {
        if same(p, self.lo) {
            self.lo_closed
        } else if same(p, self.hi) {
            self.hi_closed
        } else {
            self.lo < p && p < self.hi
        }
    }

    fn contains_strict(&self, p: f64) -> bool {
        self.lo < p && p < self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// A Borel set of `[0,1]` in the evaluable family, in canonical form.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct QuerySet {
    segments: Vec<Segment>,
    atoms: Vec<f64>,
}

/// Hashable, rounding-tolerant identity of a canonical set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetKey(Vec<(i64, u8)>);

impl QuerySet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The whole space `[0,1]`.
    pub fn full() -> Self {
        Self {
            segments: vec![Segment {
                lo: 0.0,
                hi: 1.0,
                lo_closed: true,
                hi_closed: true,
            }],
            atoms: Vec::new(),
        }
    }

    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        Self::segment(lo, hi, true, true)
    }

    pub fn open(lo: f64, hi: f64) -> Result<Self> {
        Self::segment(lo, hi, false, false)
    }

    /// An interval with explicit endpoint inclusion. `[a,a]` becomes the atom
    /// `{a}`; `(a,a)` and friends are empty.
    pub fn segment(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::NonFinite("set endpoint"));
        }
        if lo > hi {
            return Err(Error::Invalid(format!("interval [{lo}, {hi}] has lo > hi")));
        }
        if lo == hi {
            return Ok(if lo_closed && hi_closed {
                Self::from_parts(Vec::new(), vec![lo])
            } else {
                Self::empty()
            });
        }
        Ok(Self::from_parts(
            vec![Segment {
                lo,
                hi,
                lo_closed,
                hi_closed,
            }],
            Vec::new(),
        ))
    }

    pub fn point(p: f64) -> Self {
        Self::from_parts(Vec::new(), vec![p])
    }

    pub fn points(ps: &[f64]) -> Self {
        Self::from_parts(Vec::new(), ps.to_vec())
    }

    /// Union of arbitrary (possibly overlapping, possibly out of range)
    /// parts, intersected with `[0,1]` and canonicalized.
    pub fn from_parts(segments: Vec<Segment>, atoms: Vec<f64>) -> Self {
        let raw = QuerySet { segments, atoms };
        let breaks = breakpoints(&[&raw]);
        build(&breaks, |p| raw.contains(p), |m| raw.contains_gap(m))
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty() && self.atoms.is_empty()
    }

    pub fn contains(&self, p: f64) -> bool {
        self.atoms.iter().any(|&a| same(a, p)) || self.segments.iter().any(|s| s.contains(p))
    }

    fn contains_gap(&self, m: f64) -> bool {
        self.segments.iter().any(|s| s.contains_strict(m))
    }

    /// Lebesgue measure of `self ∩ [lo, hi]`.
    pub fn overlap_length(&self, lo: f64, hi: f64) -> f64 {
        self.segments
            .iter()
            .map(|s| (s.hi.min(hi) - s.lo.max(lo)).max(0.0))
            .sum()
    }

    /// Lebesgue measure of the set.
    pub fn length(&self) -> f64 {
        self.segments.iter().map(Segment::length).sum()
    }

    fn combine(&self, other: &QuerySet, op: impl Fn(bool, bool) -> bool) -> QuerySet {
        let breaks = breakpoints(&[self, other]);
        build(
            &breaks,
            |p| op(self.contains(p), other.contains(p)),
            |m| op(self.contains_gap(m), other.contains_gap(m)),
        )
    }

    pub fn union(&self, other: &QuerySet) -> QuerySet {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &QuerySet) -> QuerySet {
        self.combine(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &QuerySet) -> QuerySet {
        self.combine(other, |a, b| a && !b)
    }

    /// `[0,1] \ self`.
    pub fn complement(&self) -> QuerySet {
        QuerySet::full().difference(self)
    }

    pub fn is_disjoint(&self, other: &QuerySet) -> bool {
        self.intersection(other).is_empty()
    }

    /// Same point set up to [`SNAP`].
    pub fn approx_eq(&self, other: &QuerySet) -> bool {
        self.segments.len() == other.segments.len()
            && self.atoms.len() == other.atoms.len()
            && self
                .segments
                .iter()
                .zip(&other.segments)
                .all(|(a, b)| {
                    same(a.lo, b.lo)
                        && same(a.hi, b.hi)
                        && a.lo_closed == b.lo_closed
                        && a.hi_closed == b.hi_closed
                })
            && self.atoms.iter().zip(&other.atoms).all(|(a, b)| same(*a, *b))
    }

    /// Memoization key with coordinates rounded to [`KEY_GRID`].
    pub fn key(&self) -> SetKey {
        let r = |x: f64| (x / KEY_GRID).round() as i64;
        let mut k = Vec::with_capacity(2 * self.segments.len() + self.atoms.len());
        for s in &self.segments {
            k.push((r(s.lo), 1 + s.lo_closed as u8));
            k.push((r(s.hi), 3 + s.hi_closed as u8));
        }
        for &a in &self.atoms {
            k.push((r(a), 0));
        }
        SetKey(k)
    }
}

/// All endpoints and atoms of the given sets, plus 0 and 1, clamped to
/// `[0,1]`, sorted and clustered within [`SNAP`].
fn breakpoints(sets: &[&QuerySet]) -> Vec<f64> {
    let mut xs: Vec<f64> = vec![0.0, 1.0];
    for s in sets {
        for seg in &s.segments {
            xs.push(seg.lo);
            xs.push(seg.hi);
        }
        xs.extend_from_slice(&s.atoms);
    }
    let mut xs: Vec<f64> = xs
        .into_iter()
        .filter(|x| *x >= -SNAP && *x <= 1.0 + SNAP)
        .map(|x| x.clamp(0.0, 1.0))
        .collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let mut out: Vec<f64> = Vec::with_capacity(xs.len());
    for x in xs {
        match out.last() {
            Some(&last) if x - last <= SNAP => {}
            _ => out.push(x),
        }
    }
    // keep the exact endpoint 1 as the representative of its cluster
    if let Some(last) = out.last_mut() {
        if same(*last, 1.0) {
            *last = 1.0;
        }
    }
    out
}

/// Rebuilds a canonical set from membership of the alternating sequence
/// `b_0, (b_0,b_1), b_1, …, b_{m-1}` of breakpoints and open gaps.
fn build(breaks: &[f64], point_in: impl Fn(f64) -> bool, gap_in: impl Fn(f64) -> bool) -> QuerySet {
    let mut segments = Vec::new();
    let mut atoms = Vec::new();
    // (start index, start included?)
    let mut run: Option<(usize, bool)> = None;

    let close = |start: usize, lo_closed: bool, end: usize, hi_closed: bool, segments: &mut Vec<Segment>, atoms: &mut Vec<f64>| {
        if start == end {
            if lo_closed && hi_closed {
                atoms.push(breaks[start]);
            }
        } else {
            segments.push(Segment {
                lo: breaks[start],
                hi: breaks[end],
                lo_closed,
                hi_closed,
            });
        }
    };

    for k in 0..breaks.len() {
        let p_in = point_in(breaks[k]);
        match (run, p_in) {
            (None, true) => run = Some((k, true)),
            (Some((s, lc)), false) => {
                close(s, lc, k, false, &mut segments, &mut atoms);
                run = None;
            }
            _ => {}
        }
        if k + 1 < breaks.len() {
            let mid = 0.5 * (breaks[k] + breaks[k + 1]);
            let g_in = gap_in(mid);
            match (run, g_in) {
                (None, true) => run = Some((k, false)),
                (Some((s, lc)), false) => {
                    // the run is open only if point k was included
                    close(s, lc, k, true, &mut segments, &mut atoms);
                    run = None;
                }
                _ => {}
            }
        }
    }
    if let Some((s, lc)) = run {
        close(s, lc, breaks.len() - 1, true, &mut segments, &mut atoms);
    }
    QuerySet { segments, atoms }
}

/// An affine self-map `t ↦ slope·t + offset` of `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    slope: f64,
    offset: f64,
}

impl AffineMap {
    pub fn new(slope: f64, offset: f64) -> Result<Self> {
        if !slope.is_finite() || !offset.is_finite() {
            return Err(Error::NonFinite("affine map"));
        }
        let end = offset + slope;
        let inside = |x: f64| (-SNAP..=1.0 + SNAP).contains(&x);
        if !inside(offset) || !inside(end) {
            return Err(Error::Invalid(format!(
                "map t ↦ {slope}·t + {offset} does not send [0,1] into [0,1]"
            )));
        }
        Ok(Self { slope, offset })
    }

    pub fn identity() -> Self {
        Self {
            slope: 1.0,
            offset: 0.0,
        }
    }

    /// The constant map `t ↦ t0`.
    pub fn constant(t0: f64) -> Result<Self> {
        Self::new(0.0, t0)
    }

    /// The two Cantor contractions `t/3` and `2/3 + t/3`.
    pub fn cantor() -> [AffineMap; 2] {
        [
            AffineMap {
                slope: 1.0 / 3.0,
                offset: 0.0,
            },
            AffineMap {
                slope: 1.0 / 3.0,
                offset: 2.0 / 3.0,
            },
        ]
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn is_constant(&self) -> bool {
        self.slope == 0.0
    }

    /// Lipschitz constant `|slope|`.
    pub fn lipschitz(&self) -> f64 {
        self.slope.abs()
    }

    #[inline]
    pub fn apply(&self, t: f64) -> f64 {
        self.slope * t + self.offset
    }

    #[inline]
    fn invert(&self, x: f64) -> f64 {
        (x - self.offset) / self.slope
    }

    /// `ω⁻¹(B)`, intersected with `[0,1]`.
    pub fn preimage(&self, b: &QuerySet) -> QuerySet {
        if self.is_constant() {
            return if b.contains(self.offset) {
                QuerySet::full()
            } else {
                QuerySet::empty()
            };
        }
        let segments = b
            .segments
            .iter()
            .map(|s| {
                let (x, y) = (self.invert(s.lo), self.invert(s.hi));
                if self.slope > 0.0 {
                    Segment {
                        lo: x,
                        hi: y,
                        lo_closed: s.lo_closed,
                        hi_closed: s.hi_closed,
                    }
                } else {
                    Segment {
                        lo: y,
                        hi: x,
                        lo_closed: s.hi_closed,
                        hi_closed: s.lo_closed,
                    }
                }
            })
            .collect();
        let atoms = b.atoms.iter().map(|&a| self.invert(a)).collect();
        QuerySet::from_parts(segments, atoms)
    }

    /// Image of a closed interval.
    pub fn image(&self, i: &Interval) -> Interval {
        let (a, b) = (self.apply(i.lo), self.apply(i.hi));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        Interval {
            lo: lo.clamp(0.0, 1.0),
            hi: hi.clamp(0.0, 1.0),
        }
    }

    /// `ω(B)`.
    pub fn image_set(&self, b: &QuerySet) -> QuerySet {
        if self.is_constant() {
            return if b.is_empty() {
                QuerySet::empty()
            } else {
                QuerySet::point(self.offset)
            };
        }
        let segments = b
            .segments
            .iter()
            .map(|s| {
                let (x, y) = (self.apply(s.lo), self.apply(s.hi));
                if self.slope > 0.0 {
                    Segment {
                        lo: x,
                        hi: y,
                        lo_closed: s.lo_closed,
                        hi_closed: s.hi_closed,
                    }
                } else {
                    Segment {
                        lo: y,
                        hi: x,
                        lo_closed: s.hi_closed,
                        hi_closed: s.lo_closed,
                    }
                }
            })
            .collect();
        let atoms = b.atoms.iter().map(|&a| self.apply(a)).collect();
        QuerySet::from_parts(segments, atoms)
    }
}

/// Lower estimate of the Lipschitz constant of `f` on `[0,1]`: the largest
/// difference quotient over all pairs of an equispaced grid of `grid` points.
pub fn estimate_lipschitz(f: impl Fn(f64) -> f64, grid: usize) -> f64 {
    let g = grid.max(2);
    let ts: Vec<f64> = (0..g).map(|i| i as f64 / (g - 1) as f64).collect();
    let vs: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    sup_quotient(&ts, |i, j| (vs[i] - vs[j]).abs())
}

/// Vector-valued variant of [`estimate_lipschitz`] with the Euclidean norm.
pub fn estimate_lipschitz_vector(f: impl Fn(f64) -> Vector, grid: usize) -> f64 {
    let g = grid.max(2);
    let ts: Vec<f64> = (0..g).map(|i| i as f64 / (g - 1) as f64).collect();
    let vs: Vec<Vector> = ts.iter().map(|&t| f(t)).collect();
    sup_quotient(&ts, |i, j| norm(&(&vs[i] - &vs[j])))
}

fn sup_quotient(ts: &[f64], dist: impl Fn(usize, usize) -> f64) -> f64 {
    let mut best = 0.0f64;
    for i in 0..ts.len() {
        for j in (i + 1)..ts.len() {
            best = best.max(dist(i, j) / (ts[j] - ts[i]));
        }
    }
    best
}
