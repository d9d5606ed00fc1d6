//! Command execution.

use std::path::{Path, PathBuf};

use fractvec_core::hilbert::norm;
use fractvec_core::kernelops::{
    invariance_residual, kernel_sup_bound, partition_variation_estimate, solve_invariance, Polynomial,
};
use fractvec_core::markov::FixedPoint;
use fractvec_core::mk_norm::{mk_lower_bound, mk_star_exact};
use fractvec_core::{TestBall, VectorMeasure};

use crate::error::CliError;
use crate::export::{export_cumulative, export_measure};
use crate::report::{Accuracy, Format, Report, Value};
use crate::scenario::{Command, IfsJob, Job, KernelJob, NormKind, Scenario, Settings, SolveMode};

/// Lattice size for kernel sup bounds.
const KERNEL_GRID: usize = 200;
/// Sample count for the kernel invariance residual.
const KERNEL_SAMPLES: usize = 1001;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Directory for `export` artifacts; the working directory when absent.
    pub out: Option<PathBuf>,
    /// Overrides `settings.tol`.
    pub tol: Option<f64>,
    pub format: Format,
}

/// The report produced so far and the error that stopped the run, if any.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: Report,
    pub error: Option<CliError>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.error.as_ref().map_or(0, CliError::exit_code)
    }
}

/// Loads the scenario at `path` and executes its commands in order,
/// stopping at the first failing command.
pub fn run(path: &Path, opts: &RunOptions) -> RunOutcome {
    match Scenario::load(path) {
        Ok(s) => run_scenario(&s, opts),
        Err(e) => RunOutcome {
            report: Report::default(),
            error: Some(e),
        },
    }
}

pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> RunOutcome {
    let mut settings = scenario.settings.clone();
    if let Some(tol) = opts.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return RunOutcome {
                report: Report::default(),
                error: Some(CliError::Parse(format!("--tol must be positive, got {tol}"))),
            };
        }
        settings.tol = tol;
    }
    let out_dir = opts.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut report = Report::default();
    let result = match &scenario.job {
        Job::Ifs(job) => {
            let mut runner = IfsRunner {
                job,
                settings: &settings,
                out_dir: &out_dir,
                solved: None,
            };
            scenario.commands.iter().try_for_each(|c| runner.exec(c, &mut report))
        }
        Job::Kernel(job) => {
            let mut runner = KernelRunner {
                job,
                settings: &settings,
                phi: None,
            };
            scenario.commands.iter().try_for_each(|c| runner.exec(c, &mut report))
        }
    };
    RunOutcome {
        report,
        error: result.err(),
    }
}

struct IfsRunner<'a> {
    job: &'a IfsJob,
    settings: &'a Settings,
    out_dir: &'a Path,
    solved: Option<FixedPoint>,
}

impl IfsRunner<'_> {
    fn exec(&mut self, cmd: &Command, r: &mut Report) -> Result<(), CliError> {
        match cmd {
            Command::Factors => {
                let f = self.job.system.factors();
                r.number("factors.e", f.e, Accuracy::Exact);
                r.number("factors.d", f.d, Accuracy::Exact);
                r.number("factors.c", f.c, Accuracy::Exact);
                r.flag("factors.conserves_mass", self.job.system.conserves_mass(1e-12));
            }
            Command::Solve => {
                self.solve(r)?;
            }
            Command::Eval(name) => self.eval(name, r)?,
            Command::Norm { kind, measure } => self.norm(*kind, measure.as_deref(), r)?,
            Command::Verify => self.verify(r)?,
            Command::Export => {
                let (out_dir, samples) = (self.out_dir, self.settings.samples);
                let fp = self.fixed_point(r)?;
                std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
                let csv = out_dir.join("cumulative.csv");
                let json = out_dir.join("fixed_point.json");
                export_cumulative(&fp.measure, samples, &csv)?;
                export_measure(&fp.measure, &json)?;
                r.text("export.cumulative", csv.display().to_string());
                r.text("export.measure", json.display().to_string());
            }
        }
        Ok(())
    }

    /// The norm in which the solve error bound holds.
    fn error_norm(&self) -> &'static str {
        match self.settings.mode {
            SolveMode::Variation => "variation",
            SolveMode::MkStar => "mk_star",
        }
    }

    fn solve(&mut self, r: &mut Report) -> Result<&FixedPoint, CliError> {
        let sys = &self.job.system;
        let (tol, max_iter) = (self.settings.tol, self.settings.max_iter);
        let fp = match self.settings.mode {
            SolveMode::Variation => sys.iterate_fixed_point(&self.job.start, tol, max_iter)?,
            SolveMode::MkStar => sys.iterate_mk_star(&self.job.start, tol, max_iter)?,
        };
        r.text("solve.mode", self.error_norm());
        r.count("solve.iterations", fp.iterations);
        r.number("solve.error_bound", fp.error_bound, Accuracy::Exact);
        // a variation bound controls every set value; in MK* mode the
        // iterates keep the total of the starting measure exactly
        let total_accuracy = match self.settings.mode {
            SolveMode::Variation => Accuracy::Bound(fp.error_bound),
            SolveMode::MkStar => Accuracy::Exact,
        };
        r.vector("fixed_point.total", &fp.measure.total(), total_accuracy);
        r.count("fixed_point.atoms", fp.measure.atoms().len());
        r.count("fixed_point.pieces", fp.measure.pieces().len());
        Ok(self.solved.insert(fp))
    }

    fn fixed_point(&mut self, r: &mut Report) -> Result<&FixedPoint, CliError> {
        if self.solved.is_none() {
            self.solve(r)?;
        }
        Ok(self.solved.as_ref().expect("solved above"))
    }

    fn eval(&self, name: &str, r: &mut Report) -> Result<(), CliError> {
        let set = &self.job.queries[name];
        let sys = &self.job.system;
        let key = format!("eval.{name}");
        match &self.job.total {
            Some(total) if sys.factors().e >= 1.0 => {
                let v = sys.eval_fixed_point_with_total(set, total)?;
                r.vector(key, &v.value, Accuracy::Exact);
            }
            _ => {
                let v = sys.eval_fixed_point(set, self.settings.tol)?;
                let acc = if v.exact { Accuracy::Exact } else { Accuracy::Bound(v.error_bound) };
                r.vector(key, &v.value, acc);
            }
        }
        Ok(())
    }

    fn norm(&mut self, kind: NormKind, measure: Option<&str>, r: &mut Report) -> Result<(), CliError> {
        let settings = self.settings;
        let mode = settings.mode;
        let (label, mu, bound) = match measure {
            Some(name) => (name.to_string(), self.job.measures[name].clone(), None),
            None => {
                let fp = self.fixed_point(r)?;
                ("fixed_point".to_string(), fp.measure.clone(), Some(fp.error_bound))
            }
        };
        let key = format!("norm.{}.{label}", kind.label());
        match kind {
            NormKind::Variation => {
                // an MK* error bound says nothing about the variation
                let acc = match (bound, mode) {
                    (None, _) => Accuracy::Exact,
                    (Some(b), SolveMode::Variation) => Accuracy::Bound(b),
                    (Some(_), SolveMode::MkStar) => Accuracy::Estimate,
                };
                r.number(key, mu.variation_norm(), acc);
            }
            NormKind::Mk => {
                let lb = mk_lower_bound(&mu, TestBall::BL1, settings.mk_grid, settings.mk_iters)?;
                r.number(key, lb.value, Accuracy::Estimate);
            }
            NormKind::MkStar => {
                // MK* is dominated by the variation, so either bound applies
                let acc = bound.map_or(Accuracy::Exact, Accuracy::Bound);
                r.number(key, mk_star_exact(&mu)?, acc);
            }
        }
        Ok(())
    }

    fn verify(&mut self, r: &mut Report) -> Result<(), CliError> {
        let mode = self.settings.mode;
        let tol = self.settings.tol;
        let sys = self.job.system.clone();
        let factors = sys.factors();
        let fp = self.fixed_point(r)?.clone();
        let mu = &fp.measure;
        let slack = 1e-12 * (1.0 + mu.variation_norm());
        let mut pass = true;
        match mode {
            SolveMode::Variation => {
                // μ − Mμ = (μ − μ*) − H(μ − μ*) with ‖H‖ ≤ e
                let residual = sys.residual(mu)?;
                let allowed = (1.0 + factors.e) * fp.error_bound + slack;
                r.number("verify.residual", residual, Accuracy::Exact);
                r.number("verify.residual_allowed", allowed, Accuracy::Exact);
                pass &= residual <= allowed;
            }
            SolveMode::MkStar => {
                // the exact residual has total zero; rounding drift is moved
                // to t = 1 where it does not change the MK* profile
                let diff = mu.sub(&sys.apply_markov(mu)?)?;
                let drift = diff.total();
                let corrected = diff.sub(&VectorMeasure::dirac(1.0, drift.clone(), diff.field())?)?;
                let residual = mk_star_exact(&corrected)?;
                r.number("verify.mass_drift", norm(&drift), Accuracy::Exact);
                pass &= norm(&drift) <= 1e-9 * (1.0 + mu.variation_norm());
                let allowed = (1.0 + factors.c) * fp.error_bound + slack;
                r.number("verify.residual_mk_star", residual, Accuracy::Exact);
                r.number("verify.residual_allowed", allowed, Accuracy::Exact);
                pass &= residual <= allowed;
            }
        }
        if let Some(total) = &self.job.total {
            let gap = norm(&(mu.total() - total));
            let allowed = match mode {
                SolveMode::Variation => fp.error_bound + slack,
                SolveMode::MkStar => 1e-9 * (1.0 + norm(total)),
            };
            r.number("verify.total_gap", gap, Accuracy::Exact);
            pass &= gap <= allowed;
        }
        if mode == SolveMode::Variation && factors.e < 1.0 {
            for (name, set) in &self.job.queries {
                let direct = sys.eval_fixed_point(set, tol)?;
                let gap = norm(&(mu.evaluate(set) - &direct.value));
                r.number(format!("verify.query_gap.{name}"), gap, Accuracy::Exact);
                pass &= gap <= fp.error_bound + direct.error_bound + slack;
            }
        }
        r.flag("verify.pass", pass);
        if pass {
            Ok(())
        } else {
            Err(CliError::Tolerance("verification of the fixed point failed".into()))
        }
    }
}

struct KernelRunner<'a> {
    job: &'a KernelJob,
    settings: &'a Settings,
    phi: Option<Polynomial>,
}

impl KernelRunner<'_> {
    fn exec(&mut self, cmd: &Command, r: &mut Report) -> Result<(), CliError> {
        match cmd {
            Command::Factors => {
                let mut sum = 0.0;
                for (i, k) in self.job.kernels.iter().enumerate() {
                    let s = kernel_sup_bound(k, KERNEL_GRID)?;
                    r.number(format!("kernel.{i}.sup"), s, Accuracy::Estimate);
                    sum += s;
                }
                r.number("kernel.sup_sum", sum, Accuracy::Estimate);
            }
            Command::Solve => {
                self.solve(r)?;
            }
            Command::Norm { .. } => {
                let n = self.settings.partitions;
                r.number(
                    format!("norm.var.partition_{n}"),
                    partition_variation_estimate(n)?,
                    Accuracy::Estimate,
                );
            }
            Command::Verify => {
                let phi = self.phi(r)?.clone();
                let res = invariance_residual(&self.job.kernels, &self.job.inhomogeneous, &phi, KERNEL_SAMPLES);
                let scale = 1.0 + phi.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
                let pass = res <= 1e-9 * scale;
                r.number("verify.residual", res, Accuracy::Estimate);
                r.flag("verify.pass", pass);
                if !pass {
                    return Err(CliError::Tolerance(format!("invariance residual {res:e}")));
                }
            }
            Command::Eval(_) | Command::Export => {
                unreachable!("rejected when the scenario is validated")
            }
        }
        Ok(())
    }

    fn solve(&mut self, r: &mut Report) -> Result<&Polynomial, CliError> {
        let phi = solve_invariance(&self.job.kernels, &self.job.inhomogeneous)?;
        r.push("phi.coefficients", Value::Real(phi.coeffs().to_vec()), Accuracy::Exact);
        r.number("phi.integral", phi.integral01(), Accuracy::Exact);
        Ok(self.phi.insert(phi))
    }

    fn phi(&mut self, r: &mut Report) -> Result<&Polynomial, CliError> {
        if self.phi.is_none() {
            self.solve(r)?;
        }
        Ok(self.phi.as_ref().expect("solved above"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioDoc;

    fn scenario(json: &str) -> Scenario {
        let doc: ScenarioDoc = serde_json::from_str(json).unwrap();
        Scenario::from_doc(doc, "test".into()).unwrap()
    }

    #[test]
    fn empty_command_list_gives_empty_report() {
        let s = scenario(r#"{"maps": [[0.5, 0]], "operators": [[[0.5]]]}"#);
        let out = run_scenario(&s, &RunOptions::default());
        assert_eq!(out.exit_code(), 0);
        assert!(out.report.is_empty());
    }

    #[test]
    fn non_contraction_is_a_precondition_failure() {
        let s = scenario(r#"{"maps": [[0.5, 0], [0.5, 0.5]], "operators": [[[0.7]], [[0.7]]], "commands": ["factors", "solve"]}"#);
        let out = run_scenario(&s, &RunOptions::default());
        assert_eq!(out.exit_code(), 3);
        assert!(out.report.get("factors.e").is_some());
    }

    #[test]
    fn iteration_budget_is_a_tolerance_failure() {
        let s = scenario(
            r#"{"maps": [[0.5, 0], [0.5, 0.5]], "operators": [[[0.45]], [[0.45]]],
                "base": {"dim": 1, "atoms": [[0.3, [1.0]]]},
                "settings": {"tol": 1e-12, "max_iter": 3}, "commands": ["solve"]}"#,
        );
        assert_eq!(run_scenario(&s, &RunOptions::default()).exit_code(), 4);
    }
}
