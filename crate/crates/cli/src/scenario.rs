//! Scenario documents and their validation.

use std::collections::BTreeMap;
use std::path::Path;

use fractvec_core::kernelops::{half_identity, Polynomial, SeparableKernel};
use fractvec_core::markov::IFSystem;
use fractvec_core::measure::{coeffs_to_vector, Coeff};
use fractvec_core::space::Segment;
use fractvec_core::{AffineMap, Field, MatrixOperator, QuerySet, Vector, VectorMeasure};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    #[default]
    Ifs,
    Kernel,
}

/// Which fixed-point iteration `solve` runs for an IFS scenario.
#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    /// Banach iteration in the variation norm; needs `e < 1`.
    #[default]
    Variation,
    /// Iteration with the MK* stopping rule; needs `Σ R_i = I` and `c < 1`.
    MkStar,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub mode: SolveMode,
    /// Equispaced samples in the cumulative CSV.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Cells of the equipartition for `norm var` on kernel scenarios.
    #[serde(default = "default_partitions")]
    pub partitions: usize,
    /// Grid and iteration count of the MK lower-bound estimator.
    #[serde(default = "default_grid")]
    pub mk_grid: usize,
    #[serde(default = "default_mk_iters")]
    pub mk_iters: usize,
}

fn default_tol() -> f64 {
    1e-8
}
fn default_max_iter() -> usize {
    200
}
fn default_samples() -> usize {
    101
}
fn default_partitions() -> usize {
    4096
}
fn default_grid() -> usize {
    200
}
fn default_mk_iters() -> usize {
    2000
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
            mode: SolveMode::default(),
            samples: default_samples(),
            partitions: default_partitions(),
            mk_grid: default_grid(),
            mk_iters: default_mk_iters(),
        }
    }
}

/// `intervals` as `[lo, hi, lo_closed, hi_closed]`, plus isolated points.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryDoc {
    #[serde(default)]
    pub intervals: Vec<(f64, f64, bool, bool)>,
    #[serde(default)]
    pub atoms: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelDoc {
    /// Pairs `[u, v]` of monomial coefficient lists.
    pub terms: Vec<(Vec<f64>, Vec<f64>)>,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

/// The raw JSON document.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub kind: Kind,
    #[serde(default)]
    pub field: Field,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub maps: Vec<(f64, f64)>,
    /// Row-major matrices.
    #[serde(default)]
    pub operators: Vec<Vec<Vec<Coeff>>>,
    #[serde(default)]
    pub base: Option<VectorMeasure>,
    /// Starting measure of the iteration; zero when absent.
    #[serde(default)]
    pub start: Option<VectorMeasure>,
    /// Known total mass of the fixed point, for mass-conserving systems.
    #[serde(default)]
    pub total: Option<Vec<Coeff>>,
    #[serde(default)]
    pub queries: BTreeMap<String, QueryDoc>,
    #[serde(default)]
    pub measures: BTreeMap<String, VectorMeasure>,
    #[serde(default)]
    pub kernels: Vec<KernelDoc>,
    /// Inhomogeneous term of the kernel equation; `x/2` when absent.
    #[serde(default)]
    pub inhomogeneous: Option<Vec<f64>>,
    #[serde(default)]
    pub settings: Settings,
    #[serde(default)]
    pub commands: Vec<String>,
}

/// A parsed command.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Factors,
    Solve,
    Eval(String),
    Norm { kind: NormKind, measure: Option<String> },
    Verify,
    Export,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    Variation,
    Mk,
    MkStar,
}

impl NormKind {
    pub fn label(self) -> &'static str {
        match self {
            NormKind::Variation => "var",
            NormKind::Mk => "mk",
            NormKind::MkStar => "mk_star",
        }
    }
}

impl Command {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let words: Vec<&str> = s.split_whitespace().collect();
        match words.as_slice() {
            ["factors"] => Ok(Command::Factors),
            ["solve"] => Ok(Command::Solve),
            ["verify"] => Ok(Command::Verify),
            ["export"] => Ok(Command::Export),
            ["eval", q] => Ok(Command::Eval(q.to_string())),
            ["norm", kind, rest @ ..] if rest.len() <= 1 => {
                let kind = match *kind {
                    "var" => NormKind::Variation,
                    "mk" => NormKind::Mk,
                    "mk_star" => NormKind::MkStar,
                    other => return Err(CliError::Parse(format!("unknown norm {other:?}"))),
                };
                Ok(Command::Norm {
                    kind,
                    measure: rest.first().map(|m| m.to_string()),
                })
            }
            _ => Err(CliError::Parse(format!("unknown command {s:?}"))),
        }
    }
}

/// The validated job of a scenario.
#[derive(Debug, Clone)]
pub enum Job {
    Ifs(Box<IfsJob>),
    Kernel(KernelJob),
}

#[derive(Debug, Clone)]
pub struct IfsJob {
    pub system: IFSystem,
    pub start: VectorMeasure,
    pub total: Option<Vector>,
    pub queries: BTreeMap<String, QuerySet>,
    pub measures: BTreeMap<String, VectorMeasure>,
}

#[derive(Debug, Clone)]
pub struct KernelJob {
    pub kernels: Vec<SeparableKernel>,
    pub inhomogeneous: Polynomial,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub settings: Settings,
    pub commands: Vec<Command>,
    pub job: Job,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let doc: ScenarioDoc = serde_json::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))?;
        let fallback = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::from_doc(doc, fallback)
    }

    pub fn from_doc(doc: ScenarioDoc, fallback_name: String) -> Result<Self, CliError> {
        let commands = doc
            .commands
            .iter()
            .map(|c| Command::parse(c))
            .collect::<Result<Vec<_>, _>>()?;
        let s = &doc.settings;
        if !(s.tol > 0.0) || !s.tol.is_finite() {
            return Err(CliError::Parse(format!("settings.tol must be positive, got {}", s.tol)));
        }
        if s.samples < 2 {
            return Err(CliError::Parse("settings.samples must be at least 2".into()));
        }
        let job = match doc.kind {
            Kind::Ifs => Job::Ifs(Box::new(ifs_job(&doc)?)),
            Kind::Kernel => Job::Kernel(kernel_job(&doc)?),
        };
        for c in &commands {
            check_command(c, &job)?;
        }
        Ok(Scenario {
            name: doc.name.clone().unwrap_or(fallback_name),
            settings: doc.settings,
            commands,
            job,
        })
    }
}

fn check_command(c: &Command, job: &Job) -> Result<(), CliError> {
    match (c, job) {
        (Command::Eval(q), Job::Ifs(j)) if !j.queries.contains_key(q) => {
            Err(CliError::Parse(format!("eval refers to unknown query {q:?}")))
        }
        (Command::Norm { measure: Some(m), .. }, Job::Ifs(j)) if !j.measures.contains_key(m) => {
            Err(CliError::Parse(format!("norm refers to unknown measure {m:?}")))
        }
        (Command::Eval(_) | Command::Export, Job::Kernel(_)) => {
            Err(CliError::Parse("eval and export apply to IFS scenarios only".into()))
        }
        (Command::Norm { kind, measure }, Job::Kernel(_)) if *kind != NormKind::Variation || measure.is_some() => {
            Err(CliError::Parse("kernel scenarios support only `norm var`".into()))
        }
        _ => Ok(()),
    }
}

fn ifs_job(doc: &ScenarioDoc) -> Result<IfsJob, CliError> {
    if doc.maps.len() != doc.operators.len() {
        return Err(CliError::Parse(format!(
            "{} maps but {} operators",
            doc.maps.len(),
            doc.operators.len()
        )));
    }
    let maps = doc
        .maps
        .iter()
        .map(|&(s, o)| AffineMap::new(s, o))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Parse(e.to_string()))?;
    let operators = doc
        .operators
        .iter()
        .map(|rows| {
            let rows: Vec<Vec<_>> = rows.iter().map(|r| r.iter().map(Coeff::to_c64).collect()).collect();
            MatrixOperator::from_rows(&rows)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Parse(e.to_string()))?;
    let dim = doc
        .dim
        .or_else(|| operators.first().map(|r| r.dim()))
        .or_else(|| doc.base.as_ref().map(|b| b.dim()))
        .ok_or_else(|| CliError::Parse("dimension is not given and cannot be inferred".into()))?;
    let measures_ok = |m: &VectorMeasure, what: &str| -> Result<(), CliError> {
        if m.dim() != dim {
            return Err(CliError::Parse(format!("{what} has dimension {}, expected {dim}", m.dim())));
        }
        if doc.field == Field::Real && m.field() == Field::Complex {
            return Err(CliError::Parse(format!("{what} is complex in a real scenario")));
        }
        Ok(())
    };
    if let Some(b) = &doc.base {
        measures_ok(b, "base")?;
    }
    if let Some(s) = &doc.start {
        measures_ok(s, "start")?;
    }
    for (name, m) in &doc.measures {
        measures_ok(m, &format!("measure {name:?}"))?;
    }
    if operators.iter().any(|r| r.dim() != dim) {
        return Err(CliError::Parse(format!("operators must be {dim}×{dim}")));
    }
    // a base of the other field is lifted so real data can sit in a complex scenario
    let lift = |m: &VectorMeasure| -> Result<VectorMeasure, CliError> {
        if m.field() == doc.field {
            return Ok(m.clone());
        }
        VectorMeasure::new(dim, doc.field, m.atoms().to_vec(), m.pieces().to_vec())
            .map_err(|e| CliError::Parse(e.to_string()))
    };
    let base = doc.base.as_ref().map(lift).transpose()?;
    let system = if operators.is_empty() && base.is_none() {
        return Err(CliError::Parse("an IFS scenario needs maps and operators or a base".into()));
    } else {
        IFSystem::new(doc.field, maps, operators, base).map_err(|e| CliError::Parse(e.to_string()))?
    };
    let start = match &doc.start {
        Some(s) => lift(s)?,
        None => VectorMeasure::zero(dim, doc.field),
    };
    let total = match &doc.total {
        Some(cs) if cs.len() != dim => {
            return Err(CliError::Parse(format!("total has {} entries, expected {dim}", cs.len())))
        }
        Some(cs) => Some(coeffs_to_vector(cs)),
        None => None,
    };
    let mut queries = BTreeMap::new();
    for (name, q) in &doc.queries {
        queries.insert(name.clone(), query_set(q).map_err(|e| CliError::Parse(format!("query {name:?}: {e}")))?);
    }
    let measures = doc
        .measures
        .iter()
        .map(|(k, m)| Ok((k.clone(), lift(m)?)))
        .collect::<Result<BTreeMap<_, _>, CliError>>()?;
    Ok(IfsJob {
        system,
        start,
        total,
        queries,
        measures,
    })
}

fn query_set(q: &QueryDoc) -> fractvec_core::Result<QuerySet> {
    let segments = q
        .intervals
        .iter()
        .map(|&(lo, hi, lc, hc)| Segment::new(lo, hi, lc, hc))
        .collect::<fractvec_core::Result<Vec<_>>>()?;
    for &t in &q.atoms {
        if !(0.0..=1.0).contains(&t) {
            return Err(fractvec_core::Error::Invalid(format!("point {t} outside [0,1]")));
        }
    }
    Ok(QuerySet::from_parts(segments, q.atoms.clone()))
}

fn kernel_job(doc: &ScenarioDoc) -> Result<KernelJob, CliError> {
    let kernels = doc
        .kernels
        .iter()
        .map(|k| {
            let terms = k
                .terms
                .iter()
                .map(|(u, v)| (Polynomial::new(u.clone()), Polynomial::new(v.clone())))
                .collect();
            SeparableKernel::new(terms, k.scale)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Parse(e.to_string()))?;
    let inhomogeneous = match &doc.inhomogeneous {
        Some(c) if c.iter().any(|x| !x.is_finite()) => {
            return Err(CliError::Parse("inhomogeneous coefficients must be finite".into()))
        }
        Some(c) => Polynomial::new(c.clone()),
        None => half_identity(),
    };
    Ok(KernelJob {
        kernels,
        inhomogeneous,
    })
}
