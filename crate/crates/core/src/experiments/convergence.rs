//! `hellinger-convergence`: Hellinger distance between the true and the
//! surrogate posterior next to the L² error of the emulator, for nested
//! designs of growing size.
//!
//! Two problems are tabulated. The first emulates Φ of the conjugate problem
//! (G = identity, prior N(0, 1), Γ = 1, y = 1). The second emulates the two
//! outputs of G(u) = (u, u²/2) with y = (1, 1/2), Γ = I and the same prior.
//! In both the weight of the L² norms is the true posterior.

use std::sync::Arc;

use rayon::prelude::*;

use crate::bayes::{BayesProblem, ForwardModel, NoiseModel, Prior};
use crate::config::{ConfigError, Resolver};
use crate::error::{Error, Result};
use crate::gp::{Design, GpPosterior, GpPrior};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::metrics::hellinger_values;
use crate::quadrature::QuadratureGrid;
use crate::surrogate::{train_forward_emulators, train_phi_emulator, EmulatorTarget, SurrogateKind, SurrogatePosterior};

use super::{numerical, read_kernel, OutputDir, RunError};

type StdResult<T, E> = std::result::Result<T, E>;

/// `lower + (upper − lower)·j/N` for `j = 0..N`; the design for N is
/// contained in the design for 2N.
pub fn nested_uniform_design(lower: f64, upper: f64, n: usize) -> Design {
    let xs: Vec<f64> = (0..n).map(|j| lower + (upper - lower) * j as f64 / n as f64).collect();
    Design::from_scalars(&xs)
}

/// Settings shared by both tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSettings {
    pub n_list: Vec<usize>,
    pub lower: f64,
    pub upper: f64,
    pub kernel: KernelSpec,
    pub quadrature_nodes: usize,
}

impl Default for ConvergenceSettings {
    fn default() -> Self {
        ConvergenceSettings {
            n_list: vec![4, 8, 16, 32, 64],
            lower: -8.0,
            upper: 8.0,
            kernel: KernelSpec::squared_exponential(1.0, 1.0).expect("valid constants"),
            quadrature_nodes: 4096,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiConvergenceRow {
    pub n: usize,
    pub hellinger_mean: f64,
    /// ‖Φ − m_N‖ in L² of the true posterior.
    pub phi_error: f64,
    pub ratio_mean: f64,
    pub hellinger_marginal: f64,
    /// ‖Φ − m_N‖ + ‖k_N^{1/2}‖, same norm.
    pub phi_error_plus_sd: f64,
    pub ratio_marginal: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardConvergenceRow {
    pub n: usize,
    pub hellinger_mean: f64,
    /// Σ_j ‖G_j − m_N^j‖ in L² of the true posterior.
    pub g_error: f64,
    pub ratio_mean: f64,
    pub hellinger_marginal: f64,
    /// Σ_j (‖G_j − m_N^j‖ + ‖(k_N^j)^{1/2}‖).
    pub g_error_plus_sd: f64,
    pub ratio_marginal: f64,
}

fn conjugate_problem() -> Result<BayesProblem> {
    BayesProblem::new(
        ForwardModel::identity(1),
        vec![1.0],
        NoiseModel::isotropic(1.0, 1)?,
        Prior::gaussian(vec![0.0], vec![1.0])?,
    )
}

fn quadratic_problem() -> Result<BayesProblem> {
    BayesProblem::new(
        ForwardModel::custom(1, 2, |u: &[f64]| Ok(vec![u[0], 0.5 * u[0] * u[0]])),
        vec![1.0, 0.5],
        NoiseModel::isotropic(1.0, 2)?,
        Prior::gaussian(vec![0.0], vec![1.0])?,
    )
}

/// Normalized density values from log-values on `grid`.
fn normalized(grid: &QuadratureGrid, logs: &[f64]) -> Result<Vec<f64>> {
    let z = grid.log_integrate_values(logs);
    if z == f64::NEG_INFINITY {
        return Err(Error::Underflow { log_value: z });
    }
    Ok(logs.iter().map(|l| (l - z).exp()).collect())
}

fn on_grid<F>(grid: &QuadratureGrid, f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    grid.points().par_iter().map(|u| f(u)).collect()
}

/// (∫ p f²)^{1/2} with trapezoid weights.
fn weighted_norm(grid: &QuadratureGrid, p: &[f64], f: &[f64]) -> f64 {
    grid.weights()
        .iter()
        .zip(p)
        .zip(f)
        .map(|((w, p), f)| w * p * f * f)
        .sum::<f64>()
        .sqrt()
}

fn surrogate_density(
    grid: &QuadratureGrid,
    problem: &Arc<BayesProblem>,
    kind: SurrogateKind,
    target: EmulatorTarget,
) -> Result<Vec<f64>> {
    let s = SurrogatePosterior::new(Arc::clone(problem), kind, target)?;
    normalized(grid, &on_grid(grid, |u| s.unnormalized_log_density(u))?)
}

fn check(settings: &ConvergenceSettings) -> Result<()> {
    if settings.n_list.is_empty() || settings.n_list.contains(&0) {
        return Err(Error::InvalidArgument("N list must hold positive sizes".into()));
    }
    if !(settings.lower < settings.upper) {
        return Err(Error::InvalidArgument("design span needs lower < upper".into()));
    }
    Ok(())
}

/// Φ-emulator table on the conjugate problem.
pub fn phi_convergence_table(settings: &ConvergenceSettings) -> Result<Vec<PhiConvergenceRow>> {
    check(settings)?;
    let problem = Arc::new(conjugate_problem()?);
    let grid = QuadratureGrid::trapezoid(problem.quadrature_box(), settings.quadrature_nodes)?;
    let truth = normalized(&grid, &on_grid(&grid, |u| problem.log_unnormalized_posterior(u))?)?;
    let phi = on_grid(&grid, |u| problem.neg_log_likelihood(u))?;
    let prior = GpPrior::zero_mean(settings.kernel);

    settings
        .n_list
        .iter()
        .map(|&n| {
            let design = nested_uniform_design(settings.lower, settings.upper, n);
            let gp = train_phi_emulator(&problem, prior.clone(), design)?;
            let (means, vars): (Vec<f64>, Vec<f64>) = on_grid_pairs(&grid, &gp)?;
            let resid: Vec<f64> = phi.iter().zip(&means).map(|(f, m)| f - m).collect();
            let sd: Vec<f64> = vars.iter().map(|v| v.sqrt()).collect();
            let phi_error = weighted_norm(&grid, &truth, &resid);
            let sd_norm = weighted_norm(&grid, &truth, &sd);

            let q = surrogate_density(&grid, &problem, SurrogateKind::MeanBased, EmulatorTarget::Phi(gp.clone()))?;
            let hellinger_mean = hellinger_values(&truth, &q, &grid)?;
            let q = surrogate_density(&grid, &problem, SurrogateKind::Marginal, EmulatorTarget::Phi(gp))?;
            let hellinger_marginal = hellinger_values(&truth, &q, &grid)?;
            Ok(PhiConvergenceRow {
                n,
                hellinger_mean,
                phi_error,
                ratio_mean: hellinger_mean / phi_error,
                hellinger_marginal,
                phi_error_plus_sd: phi_error + sd_norm,
                ratio_marginal: hellinger_marginal / (phi_error + sd_norm),
            })
        })
        .collect()
}

fn on_grid_pairs(grid: &QuadratureGrid, gp: &GpPosterior) -> Result<(Vec<f64>, Vec<f64>)> {
    let pairs: Vec<(f64, f64)> = grid.points().par_iter().map(|u| gp.predict(u)).collect::<Result<_>>()?;
    Ok(pairs.into_iter().unzip())
}

/// G-emulator table on the two-output quadratic problem.
pub fn forward_convergence_table(settings: &ConvergenceSettings) -> Result<Vec<ForwardConvergenceRow>> {
    check(settings)?;
    let problem = Arc::new(quadratic_problem()?);
    let grid = QuadratureGrid::trapezoid(problem.quadrature_box(), settings.quadrature_nodes)?;
    let truth = normalized(&grid, &on_grid(&grid, |u| problem.log_unnormalized_posterior(u))?)?;
    let outputs: Vec<Vec<f64>> = grid
        .points()
        .par_iter()
        .map(|u| problem.forward().evaluate(u))
        .collect::<Result<_>>()?;
    let prior = GpPrior::zero_mean(settings.kernel);

    settings
        .n_list
        .iter()
        .map(|&n| {
            let design = nested_uniform_design(settings.lower, settings.upper, n);
            let gps = train_forward_emulators(&problem, prior.clone(), design)?;
            let mut g_error = 0.0;
            let mut sd_norm = 0.0;
            for (j, gp) in gps.iter().enumerate() {
                let (means, vars) = on_grid_pairs(&grid, gp)?;
                let resid: Vec<f64> = outputs.iter().zip(&means).map(|(g, m)| g[j] - m).collect();
                let sd: Vec<f64> = vars.iter().map(|v| v.sqrt()).collect();
                g_error += weighted_norm(&grid, &truth, &resid);
                sd_norm += weighted_norm(&grid, &truth, &sd);
            }
            let q = surrogate_density(&grid, &problem, SurrogateKind::MeanBased, EmulatorTarget::Forward(gps.clone()))?;
            let hellinger_mean = hellinger_values(&truth, &q, &grid)?;
            let q = surrogate_density(&grid, &problem, SurrogateKind::Marginal, EmulatorTarget::Forward(gps))?;
            let hellinger_marginal = hellinger_values(&truth, &q, &grid)?;
            Ok(ForwardConvergenceRow {
                n,
                hellinger_mean,
                g_error,
                ratio_mean: hellinger_mean / g_error,
                hellinger_marginal,
                g_error_plus_sd: g_error + sd_norm,
                ratio_marginal: hellinger_marginal / (g_error + sd_norm),
            })
        })
        .collect()
}

/// Config-driven wrapper around both tables.
#[derive(Debug, Clone)]
pub struct ConvergencePlan {
    settings: ConvergenceSettings,
}

impl ConvergencePlan {
    pub(crate) fn read(r: &mut Resolver<'_>) -> StdResult<Self, ConfigError> {
        let d = ConvergenceSettings::default();
        let n_list: Vec<usize> = r.list("study", "n_list", d.n_list)?;
        if n_list.is_empty() || n_list.contains(&0) {
            return Err(r.invalid("study", "n_list", "need positive sizes"));
        }
        let lower: f64 = r.get("study", "lower", d.lower)?;
        let upper: f64 = r.get("study", "upper", d.upper)?;
        if !(lower < upper) {
            return Err(r.invalid("study", "upper", "need lower < upper"));
        }
        let quadrature_nodes: usize = r.get("study", "quadrature_nodes", d.quadrature_nodes)?;
        if quadrature_nodes < 3 {
            return Err(r.invalid("study", "quadrature_nodes", "need at least 3 nodes"));
        }
        let kernel = read_kernel(r, "kernel", KernelFamily::SquaredExponential, 1.0, 1.0)?;
        Ok(ConvergencePlan {
            settings: ConvergenceSettings {
                n_list,
                lower,
                upper,
                kernel,
                quadrature_nodes,
            },
        })
    }

    pub(crate) fn execute(&self, out: &mut OutputDir) -> StdResult<(), RunError> {
        let rows = phi_convergence_table(&self.settings).map_err(numerical("tabulating the Φ emulator"))?;
        let mut csv = String::from(
            "N,hellinger_mean,phi_error,ratio_mean,hellinger_marginal,phi_error_plus_sd,ratio_marginal\n",
        );
        for r in &rows {
            csv.push_str(&format!(
                "{},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                r.n, r.hellinger_mean, r.phi_error, r.ratio_mean, r.hellinger_marginal, r.phi_error_plus_sd, r.ratio_marginal
            ));
        }
        out.csv("phi_convergence", &csv)?;

        let rows = forward_convergence_table(&self.settings).map_err(numerical("tabulating the G emulators"))?;
        let mut csv =
            String::from("N,hellinger_mean,g_error,ratio_mean,hellinger_marginal,g_error_plus_sd,ratio_marginal\n");
        for r in &rows {
            csv.push_str(&format!(
                "{},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                r.n, r.hellinger_mean, r.g_error, r.ratio_mean, r.hellinger_marginal, r.g_error_plus_sd, r.ratio_marginal
            ));
        }
        out.csv("forward_convergence", &csv)
    }
}
