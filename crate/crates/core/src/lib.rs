//! Vector-valued invariant (fractal) measures on `[0,1]`.
//!
//! An iterated function system of affine maps `ω_i` is paired with linear
//! operators `R_i` on `K^n`. The crate builds the induced Markov-type operator
//! `ν ↦ Σ R_i ∘ ω_i(ν)` on vector measures, finds its fixed points (by
//! contraction iteration and by exact evaluation on sets), and computes the
//! variational and Monge-Kantorovich norms used to measure contraction.
//!
//! Measures are finitely representable: Dirac atoms plus constant-density
//! Lebesgue pieces with coefficients in `K^n`. This class is closed under
//! affine pushforward, operator application and linear combination, so all
//! operations on it are exact up to floating point rounding.
//!
//! Modules:
//!
//! - [`space`]: the evaluable sets of `[0,1]` and the affine maps acting on them.
//! - [`hilbert`]: vectors and matrix operators on `K^n`.
//! - [`measure`]: [`VectorMeasure`] and its algebra.
//! - [`integral`]: the sesquilinear integral `∫ f dμ`.
//! - [`markov`]: the Markov-type operator and its fixed-point solvers.
//! - [`mk_norm`]: Monge-Kantorovich norms.
//! - [`semigroup`]: continuous index families `R_θ = exp(θA)`.
//! - [`kernelops`]: separable polynomial kernel operators on `L²`.

// `!(x > 0.0)` is used deliberately so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hilbert;
pub mod integral;
pub mod kernelops;
pub mod markov;
pub mod measure;
pub mod mk_norm;
pub mod quadrature;
pub mod semigroup;
pub mod space;

pub use error::{Error, Result};
pub use hilbert::{Field, MatrixOperator, Vector, C64};
pub use integral::{ContinuousFunction, SimpleFunction};
pub use markov::{Factors, IFSystem};
pub use measure::VectorMeasure;
pub use mk_norm::{LipschitzWitness, TestBall};
pub use space::{AffineMap, Interval, QuerySet, Segment};
