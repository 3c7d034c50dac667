//! `invert` and its `darcy-demo` preset: build a Bayesian inverse problem,
//! train a GP surrogate, sample both posteriors with Metropolis-Hastings and
//! compare the grid densities.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::bayes::darcy::{Darcy1D, SourceTerm};
use crate::bayes::{BayesProblem, ForwardModel, NoiseModel, Prior, ScalarFormula};
use crate::config::{ConfigError, Resolver};
use crate::design::{sample_design, DesignMeasure, ReferenceDensity};
use crate::error::Error;
use crate::gp::{fit_hyperparameters, Design, GpPosterior, GpPrior, HyperparameterSearch};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::mcmc::{chain_diagnostics, metropolis_hastings, Chain, ProposalSpec};
use crate::metrics::hellinger_values;
use crate::quadrature::{BoxDomain, QuadratureGrid};
use crate::surrogate::{EmulatorTarget, SurrogateKind, SurrogatePosterior};

use super::{invalid, key_value_csv, numerical, read_kernel, read_mean, MeanSpec, OutputDir, RunError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    Phi,
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DesignChoice {
    Prior,
    Truncated,
}

/// Resolved settings of an `invert` run.
#[derive(Debug, Clone)]
pub struct InversionPlan {
    problem: Arc<BayesProblem>,
    true_u: Option<Vec<f64>>,
    kind: SurrogateKind,
    target: Target,
    n_train: usize,
    design: DesignChoice,
    threshold: f64,
    kernel: KernelSpec,
    fit: bool,
    mean: MeanSpec,
    steps: usize,
    step: Option<Vec<f64>>,
    burn_in: f64,
    nodes: usize,
}

/// Reads a list and broadcasts a single entry to `dim` entries.
fn broadcast(r: &mut Resolver<'_>, section: &str, key: &str, default: Vec<f64>, dim: usize) -> Result<Vec<f64>, ConfigError> {
    let v: Vec<f64> = r.list(section, key, default)?;
    match v.len() {
        1 => Ok(vec![v[0]; dim]),
        n if n == dim => Ok(v),
        n => Err(r.invalid(section, key, format!("expected 1 or {dim} entries, got {n}"))),
    }
}

fn read_forward(r: &mut Resolver<'_>, darcy_defaults: bool) -> Result<ForwardModel, ConfigError> {
    let default = if darcy_defaults { "darcy" } else { "identity" };
    let name: String = r.get("problem", "forward", default.to_string())?;
    match name.as_str() {
        "identity" => {
            let dim: usize = r.get("problem", "dim", 1)?;
            if dim == 0 {
                return Err(r.invalid("problem", "dim", "must be >= 1"));
            }
            Ok(ForwardModel::identity(dim))
        }
        "sin_shifted_square" => Ok(ForwardModel::scalar(ScalarFormula::SinShiftedSquare)),
        "darcy" => {
            let source: f64 = r.get("darcy", "source", if darcy_defaults { 1.0 } else { 0.0 })?;
            let left: f64 = r.get("darcy", "left", 0.0)?;
            let right: f64 = r.get("darcy", "right", 0.0)?;
            let breakpoints: Vec<f64> = r.list("darcy", "breakpoints", vec![0.5])?;
            let observations: Vec<f64> = r.list("darcy", "observations", vec![0.25, 0.5, 0.75])?;
            let cells: usize = r.get("darcy", "cells", 64)?;
            let model = Darcy1D::new(SourceTerm::Constant(source), left, right, breakpoints, observations, cells)
                .map_err(invalid(r, "darcy", "breakpoints"))?;
            Ok(ForwardModel::darcy(model))
        }
        other => Err(r.invalid(
            "problem",
            "forward",
            format!("unknown forward model `{other}` (expected identity, sin_shifted_square or darcy)"),
        )),
    }
}

fn read_prior(r: &mut Resolver<'_>, dim: usize, darcy_defaults: bool) -> Result<Prior, ConfigError> {
    let default = if darcy_defaults { "uniform" } else { "gaussian" };
    let kind: String = r.get("prior", "kind", default.to_string())?;
    let prior = match kind.as_str() {
        "gaussian" | "lognormal" => {
            let m = broadcast(r, "prior", "mean", vec![0.0], dim)?;
            let v = broadcast(r, "prior", "variance", vec![1.0], dim)?;
            if kind == "gaussian" {
                Prior::gaussian(m, v)
            } else {
                Prior::log_normal(m, v)
            }
        }
        "uniform" => {
            let lo = broadcast(r, "prior", "lower", vec![if darcy_defaults { 0.5 } else { -1.0 }], dim)?;
            let hi = broadcast(r, "prior", "upper", vec![if darcy_defaults { 2.5 } else { 1.0 }], dim)?;
            Prior::uniform(lo, hi)
        }
        other => {
            return Err(r.invalid(
                "prior",
                "kind",
                format!("unknown prior `{other}` (expected gaussian, uniform or lognormal)"),
            ))
        }
    };
    prior.map_err(invalid(r, "prior", "kind"))
}

fn read_noise(r: &mut Resolver<'_>, dim: usize, darcy_defaults: bool) -> Result<NoiseModel, ConfigError> {
    match r.optional_list::<f64>("problem", "noise_matrix")? {
        Some(entries) => {
            if r.optional_list::<f64>("problem", "noise_variance")?.is_some() {
                return Err(r.invalid(
                    "problem",
                    "noise_matrix",
                    "give either `noise_variance` or `noise_matrix`, not both",
                ));
            }
            if entries.len() != dim * dim {
                return Err(r.invalid(
                    "problem",
                    "noise_matrix",
                    format!("expected {} row-major entries, got {}", dim * dim, entries.len()),
                ));
            }
            NoiseModel::new(DMatrix::from_row_slice(dim, dim, &entries)).map_err(invalid(r, "problem", "noise_matrix"))
        }
        None => {
            let v = broadcast(r, "problem", "noise_variance", vec![if darcy_defaults { 1e-4 } else { 1.0 }], dim)?;
            NoiseModel::diagonal(&v).map_err(invalid(r, "problem", "noise_variance"))
        }
    }
}

impl InversionPlan {
    pub(crate) fn read(r: &mut Resolver<'_>, darcy_defaults: bool) -> Result<Self, ConfigError> {
        let forward = read_forward(r, darcy_defaults)?;
        let (din, dout) = (forward.input_dim(), forward.output_dim());
        let noise = read_noise(r, dout, darcy_defaults)?;
        let prior = read_prior(r, din, darcy_defaults)?;

        let true_u = match r.optional_list::<f64>("problem", "true_u")? {
            Some(u) => Some(u),
            None if darcy_defaults => {
                let u = vec![1.0, 2.0];
                r.list("problem", "true_u", u.clone())?;
                Some(u)
            }
            None => None,
        };
        if let Some(u) = &true_u {
            if u.len() != din {
                return Err(r.invalid("problem", "true_u", format!("expected {din} entries, got {}", u.len())));
            }
        }
        let data = match r.optional_list::<f64>("problem", "data")? {
            Some(y) => {
                r.optional::<u64>("problem", "noise_seed")?;
                y
            }
            None => {
                if let Some(u) = &true_u {
                    let seed: u64 = r.get("problem", "noise_seed", 1)?;
                    BayesProblem::synthesize_data(&forward, &noise, u, seed).map_err(invalid(r, "problem", "true_u"))?
                } else {
                    // Without a true parameter the data default to all ones.
                    r.optional::<u64>("problem", "noise_seed")?;
                    r.list("problem", "data", vec![1.0; dout])?
                }
            }
        };
        let mut problem = BayesProblem::new(forward, data, noise, prior).map_err(invalid(r, "problem", "data"))?;
        let lower = r.optional_list::<f64>("problem", "domain_lower")?;
        let upper = r.optional_list::<f64>("problem", "domain_upper")?;
        match (lower, upper) {
            (Some(lo), Some(hi)) => {
                let domain = BoxDomain::new(lo, hi).map_err(invalid(r, "problem", "domain_lower"))?;
                problem = problem.with_domain(domain).map_err(invalid(r, "problem", "domain_lower"))?;
            }
            (None, None) => {}
            _ => {
                return Err(r.invalid(
                    "problem",
                    "domain_lower",
                    "`domain_lower` and `domain_upper` go together",
                ))
            }
        }
        if din > 2 {
            return Err(r.invalid("problem", "forward", "grid densities need at most 2 parameters"));
        }

        let kind_name: String = r.get("surrogate", "kind", "mean".to_string())?;
        let target_name: String = r.get("surrogate", "target", if darcy_defaults { "g" } else { "phi" }.to_string())?;
        let target = match target_name.as_str() {
            "phi" => Target::Phi,
            "g" => Target::Forward,
            other => return Err(r.invalid("surrogate", "target", format!("unknown target `{other}` (expected phi or g)"))),
        };
        let kind = match kind_name.as_str() {
            "mean" => SurrogateKind::MeanBased,
            "marginal" => SurrogateKind::Marginal,
            "sample" => {
                if target == Target::Forward {
                    return Err(r.invalid("surrogate", "kind", "the sample-based surrogate needs target = phi"));
                }
                let seed: u64 = r.get("surrogate", "path_seed", 0)?;
                SurrogateKind::SampleBased { seed, axes: None }
            }
            other => {
                return Err(r.invalid(
                    "surrogate",
                    "kind",
                    format!("unknown surrogate `{other}` (expected mean, marginal or sample)"),
                ))
            }
        };
        let n_train: usize = r.get("surrogate", "n", if darcy_defaults { 20 } else { 8 })?;
        if n_train == 0 {
            return Err(r.invalid("surrogate", "n", "need at least one training point"));
        }
        let design_name: String =
            r.get("surrogate", "design", if darcy_defaults { "truncated" } else { "prior" }.to_string())?;
        let design = match design_name.as_str() {
            "prior" => DesignChoice::Prior,
            "truncated" => DesignChoice::Truncated,
            other => return Err(r.invalid("surrogate", "design", format!("unknown design `{other}` (expected prior or truncated)"))),
        };
        let threshold: f64 = r.get("surrogate", "threshold", 1e-3)?;
        if !(threshold >= 0.0 && threshold < 1.0) {
            return Err(r.invalid("surrogate", "threshold", "relative threshold must lie in [0, 1)"));
        }
        let kernel = read_kernel(r, "surrogate", KernelFamily::SquaredExponential, 1.0, 1.0)?;
        let fit: bool = r.get("surrogate", "fit_hyperparameters", false)?;
        let mean = read_mean(r, "surrogate", if darcy_defaults { "constant" } else { "zero" })?;

        let steps: usize = r.get("mcmc", "steps", 20_000)?;
        if steps < 10 {
            return Err(r.invalid("mcmc", "steps", "need at least 10 steps"));
        }
        let step = match r.optional_list::<f64>("mcmc", "step")? {
            None => None,
            Some(s) => {
                let s = match s.len() {
                    1 => vec![s[0]; din],
                    n if n == din => s,
                    n => return Err(r.invalid("mcmc", "step", format!("expected 1 or {din} entries, got {n}"))),
                };
                ProposalSpec::per_dimension(s.clone()).map_err(invalid(r, "mcmc", "step"))?;
                Some(s)
            }
        };
        let burn_in: f64 = r.get("mcmc", "burn_in", 0.2)?;
        if !(0.0..0.9).contains(&burn_in) {
            return Err(r.invalid("mcmc", "burn_in", "burn-in fraction must lie in [0, 0.9)"));
        }
        let nodes: usize = r.get("grid", "nodes", if din == 1 { 2049 } else { 201 })?;
        if nodes < 3 {
            return Err(r.invalid("grid", "nodes", "need at least 3 nodes"));
        }
        Ok(InversionPlan {
            problem: Arc::new(problem),
            true_u,
            kind,
            target,
            n_train,
            design,
            threshold,
            kernel,
            fit,
            mean,
            steps,
            step,
            burn_in,
            nodes,
        })
    }

    fn fit_gp(&self, design: &Design, values: &[f64]) -> Result<GpPosterior, Error> {
        let mean = self.mean.resolve(values);
        let kernel = if self.fit {
            let search = HyperparameterSearch {
                mean: mean.clone(),
                ..HyperparameterSearch::default()
            };
            fit_hyperparameters(self.kernel.family(), design, values, &search)?
        } else {
            self.kernel
        };
        GpPosterior::fit(GpPrior::new(mean, kernel), design.clone(), values, 0.0)
    }

    pub(crate) fn execute(&self, out: &mut OutputDir) -> Result<(), RunError> {
        let problem = &self.problem;
        let dim = problem.dim();
        let seed = out.seed();
        let grid = QuadratureGrid::trapezoid(problem.quadrature_box(), self.nodes).map_err(numerical("building the grid"))?;

        problem.forward().reset_count();
        let log_true: Vec<f64> = grid
            .points()
            .par_iter()
            .map(|u| problem.log_unnormalized_posterior(u))
            .collect::<crate::Result<Vec<f64>>>()
            .map_err(numerical("evaluating the posterior on the grid"))?;
        let log_z_true = grid.log_integrate_values(&log_true);
        if log_z_true == f64::NEG_INFINITY {
            return Err(RunError::Numerical {
                context: "normalizing the posterior".into(),
                source: Error::Underflow { log_value: log_z_true },
            });
        }
        let (argmax, lmax) = log_true
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &l)| if l > acc.1 { (i, l) } else { acc });
        let p_true: Vec<f64> = log_true.iter().map(|l| (l - log_z_true).exp()).collect();

        // Design.
        let measure = match self.design {
            DesignChoice::Prior => match problem.prior() {
                Prior::GaussianDiag { means, variances } => {
                    DesignMeasure::gaussian(means.clone(), variances.iter().map(|v| v.sqrt()).collect())
                        .map_err(numerical("building the design measure"))?
                }
                _ => DesignMeasure::uniform(problem.quadrature_box()),
            },
            DesignChoice::Truncated => {
                let p = Arc::clone(&self.problem);
                let reference: ReferenceDensity = Arc::new(move |u: &[f64]| {
                    p.log_unnormalized_posterior(u).map(|l| (l - lmax).exp()).unwrap_or(0.0)
                });
                DesignMeasure::truncated(reference, self.threshold, problem.quadrature_box())
                    .map_err(numerical("building the design measure"))?
            }
        };
        let design = sample_design(&measure, self.n_train, seed).map_err(numerical("sampling the design"))?;

        problem.forward().reset_count();
        let grid_evaluations = problem.forward().evaluation_count();
        let target = match self.target {
            Target::Phi => {
                let values = design
                    .points()
                    .iter()
                    .map(|u| problem.neg_log_likelihood(u))
                    .collect::<crate::Result<Vec<f64>>>()
                    .map_err(numerical("evaluating Φ on the design"))?;
                EmulatorTarget::Phi(self.fit_gp(&design, &values).map_err(numerical("training the Φ emulator"))?)
            }
            Target::Forward => {
                let outputs = design
                    .points()
                    .iter()
                    .map(|u| problem.forward().evaluate(u))
                    .collect::<crate::Result<Vec<Vec<f64>>>>()
                    .map_err(numerical("evaluating G on the design"))?;
                let gps = (0..problem.forward().output_dim())
                    .map(|j| {
                        let column: Vec<f64> = outputs.iter().map(|g| g[j]).collect();
                        self.fit_gp(&design, &column)
                    })
                    .collect::<crate::Result<Vec<_>>>()
                    .map_err(numerical("training the G emulators"))?;
                EmulatorTarget::Forward(gps)
            }
        };
        let training_evaluations = problem.forward().evaluation_count() - grid_evaluations;
        let surrogate = SurrogatePosterior::new(Arc::clone(&self.problem), self.kind.clone(), target)
            .map_err(numerical("building the surrogate posterior"))?;

        let sample_based = matches!(self.kind, SurrogateKind::SampleBased { .. });
        let surrogate_log = |u: &[f64]| match surrogate.unnormalized_log_density(u) {
            Err(Error::Extrapolation { .. }) if sample_based => Ok(f64::NEG_INFINITY),
            other => other,
        };
        let log_sur: Vec<f64> = grid
            .points()
            .par_iter()
            .map(|u| surrogate_log(u))
            .collect::<crate::Result<Vec<f64>>>()
            .map_err(numerical("evaluating the surrogate on the grid"))?;
        let log_z_sur = grid.log_integrate_values(&log_sur);
        if log_z_sur == f64::NEG_INFINITY {
            return Err(RunError::Numerical {
                context: "normalizing the surrogate posterior".into(),
                source: Error::Underflow { log_value: log_z_sur },
            });
        }
        let p_sur: Vec<f64> = log_sur.iter().map(|l| (l - log_z_sur).exp()).collect();
        let hell = hellinger_values(&p_true, &p_sur, &grid).map_err(numerical("computing the Hellinger distance"))?;

        // Posterior moments on the grid set the default proposal scale.
        let moments = |p: &[f64]| -> (Vec<f64>, Vec<f64>) {
            let mean: Vec<f64> = (0..dim).map(|j| weighted(&grid, p, |u| u[j])).collect();
            let var: Vec<f64> = (0..dim)
                .map(|j| weighted(&grid, p, |u| (u[j] - mean[j]).powi(2)).max(0.0))
                .collect();
            (mean, var)
        };
        let (true_mean, true_var) = moments(&p_true);
        let (sur_mean, sur_var) = moments(&p_sur);
        let steps = match &self.step {
            Some(s) => s.clone(),
            None => true_var
                .iter()
                .map(|v| 2.4 / (dim as f64).sqrt() * v.sqrt().max(1e-12))
                .collect(),
        };
        let proposal = ProposalSpec::per_dimension(steps.clone()).map_err(numerical("building the proposal"))?;
        let init = grid.points()[argmax].clone();
        let burn = ((self.burn_in * self.steps as f64) as usize).min(self.steps - 1);

        let before = problem.forward().evaluation_count();
        let chain_true = metropolis_hastings(|u| problem.log_unnormalized_posterior(u), &proposal, &init, self.steps, seed.wrapping_add(1))
            .map_err(numerical("sampling the true posterior"))?;
        let true_chain_evaluations = problem.forward().evaluation_count() - before;
        let before = problem.forward().evaluation_count();
        let chain_sur = metropolis_hastings(surrogate_log, &proposal, &init, self.steps, seed.wrapping_add(2))
            .map_err(numerical("sampling the surrogate posterior"))?;
        let surrogate_chain_evaluations = problem.forward().evaluation_count() - before;

        write_chain(out, "true", &chain_true, burn)?;
        write_chain(out, "surrogate", &chain_sur, burn)?;

        let mut design_csv = String::from(&header(dim, "u"));
        design_csv.push('\n');
        for u in design.points() {
            design_csv.push_str(&join(u));
            design_csv.push('\n');
        }
        out.csv("design", &design_csv)?;

        let mut dens = header(dim, "u");
        dens.push_str(",true_density,surrogate_density\n");
        for ((u, pt), ps) in grid.points().iter().zip(&p_true).zip(&p_sur) {
            dens.push_str(&format!("{},{pt:e},{ps:e}\n", join(u)));
        }
        out.csv("densities", &dens)?;

        let list = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(";");
        let mut rows = vec![
            ("hellinger", format!("{hell:e}")),
            ("surrogate_kind", self.kind.name().to_string()),
            ("surrogate_target", if self.target == Target::Phi { "phi" } else { "g" }.to_string()),
            ("training_points", self.n_train.to_string()),
            ("log_evidence_true", format!("{:e}", log_z_true + problem.log_likelihood_constant())),
            ("log_evidence_surrogate", format!("{:e}", log_z_sur + surrogate.likelihood_offset())),
            ("grid_mean_true", list(&true_mean)),
            ("grid_sd_true", list(&true_var.iter().map(|v| v.sqrt()).collect::<Vec<_>>())),
            ("grid_mean_surrogate", list(&sur_mean)),
            ("grid_sd_surrogate", list(&sur_var.iter().map(|v| v.sqrt()).collect::<Vec<_>>())),
            ("proposal_step", list(&steps)),
            ("forward_evaluations_training", training_evaluations.to_string()),
            ("forward_evaluations_true_chain", true_chain_evaluations.to_string()),
            ("forward_evaluations_surrogate_chain", surrogate_chain_evaluations.to_string()),
        ];
        if let Some(u) = &self.true_u {
            rows.push(("true_u", list(u)));
        }
        out.csv("summary", &key_value_csv(&rows))
    }
}

fn weighted(grid: &QuadratureGrid, p: &[f64], f: impl Fn(&[f64]) -> f64) -> f64 {
    grid.points().iter().zip(p).zip(grid.weights()).map(|((u, pi), w)| w * pi * f(u)).sum()
}

fn header(dim: usize, prefix: &str) -> String {
    (1..=dim).map(|j| format!("{prefix}{j}")).collect::<Vec<_>>().join(",")
}

fn join(u: &[f64]) -> String {
    u.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",")
}

fn write_chain(out: &mut OutputDir, label: &str, chain: &Chain, burn: usize) -> Result<(), RunError> {
    out.csv(&format!("chain_{label}"), &chain.to_csv())?;
    let diag = chain_diagnostics(chain, burn).map_err(numerical("summarizing a chain"))?;
    out.text(
        &format!("diagnostics_{label}.txt"),
        &format!("chain = {label}\nseed = {}\nburn_in = {burn}\n{}", chain.seed, diag.to_key_value()),
    )
}
