//! Approximate posteriors built from GP emulators.
//!
//! The emulator targets either the misfit Φ directly or each component of the
//! forward map G (independent GPs sharing one design). Three likelihood
//! approximations are available:
//!
//! * mean-based: plug the predictive mean into the likelihood;
//! * marginal: average the likelihood over the predictive distribution, which
//!   for Φ is the log-normal moment `E[exp(−X)] = exp(−m + k/2)` and for G
//!   inflates the noise covariance to `Γ + K_N(u, u)`;
//! * sample-based: one frozen draw of Φ_N, realized on a grid and interpolated.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bayes::{log_integral, BayesProblem, Evidence, EvidenceMethod};
use crate::error::{check_dim, Error, Result};
use crate::gp::{Design, GpPosterior, GpPrior, GridSampler};
use crate::quadrature::linspace;
use crate::rng;

const LN_2PI: f64 = 1.8378770664093453;

#[derive(Debug, Clone, PartialEq)]
pub enum SurrogateKind {
    MeanBased,
    Marginal,
    /// One frozen sample path of Φ_N. `axes` gives the tensor grid the path is
    /// realized on; `None` uses 257 nodes (1D) or 33 per axis (2D) spanning the
    /// problem's quadrature box.
    SampleBased { seed: u64, axes: Option<Vec<Vec<f64>>> },
}

impl SurrogateKind {
    pub fn name(&self) -> &'static str {
        match self {
            SurrogateKind::MeanBased => "mean",
            SurrogateKind::Marginal => "marginal",
            SurrogateKind::SampleBased { .. } => "sample",
        }
    }
}

/// What the GP emulates.
#[derive(Debug, Clone)]
pub enum EmulatorTarget {
    /// A single GP for Φ.
    Phi(GpPosterior),
    /// One GP per output of G, all on the same design.
    Forward(Vec<GpPosterior>),
}

/// Fits a GP to Φ evaluated on `design`.
pub fn train_phi_emulator(problem: &BayesProblem, prior: GpPrior, design: Design) -> Result<GpPosterior> {
    let values = design
        .points()
        .iter()
        .map(|u| problem.neg_log_likelihood(u))
        .collect::<Result<Vec<f64>>>()?;
    GpPosterior::fit(prior, design, &values, 0.0)
}

/// Fits one GP per output of G on `design`.
pub fn train_forward_emulators(
    problem: &BayesProblem,
    prior: GpPrior,
    design: Design,
) -> Result<Vec<GpPosterior>> {
    let outputs = design
        .points()
        .iter()
        .map(|u| problem.forward().evaluate(u))
        .collect::<Result<Vec<Vec<f64>>>>()?;
    (0..problem.forward().output_dim())
        .map(|j| {
            let column: Vec<f64> = outputs.iter().map(|g| g[j]).collect();
            GpPosterior::fit(prior.clone(), design.clone(), &column, 0.0)
        })
        .collect()
}

/// log E[exp(−X)] for X ~ N(mean, var).
pub fn marginal_phi_log_likelihood(mean: f64, var: f64) -> f64 {
    -mean + 0.5 * var
}

/// −½ log det(Γ + diag(var)) − ½ ‖residual‖²_{Γ + diag(var)}.
pub fn inflated_log_likelihood(gamma: &DMatrix<f64>, residual: &[f64], var: &[f64]) -> Result<f64> {
    let mut cov = gamma.clone();
    for (i, v) in var.iter().enumerate() {
        cov[(i, i)] += v;
    }
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::Solver("Γ + K_N(u,u) is not positive definite".into()))?;
    let l = chol.l();
    let w = l
        .solve_lower_triangular(&DVector::from_column_slice(residual))
        .ok_or_else(|| Error::Solver("singular inflated covariance".into()))?;
    let log_det: f64 = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Ok(-0.5 * log_det - 0.5 * w.norm_squared())
}

/// A sample path stored on a tensor grid (last axis fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenPath {
    axes: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl FrozenPath {
    fn tensor_points(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
        match axes.len() {
            1 => axes[0].iter().map(|&x| vec![x]).collect(),
            _ => axes[0]
                .iter()
                .flat_map(|&x| axes[1].iter().map(move |&y| vec![x, y]))
                .collect(),
        }
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Piecewise-(bi)linear interpolation.
    pub fn interpolate(&self, u: &[f64]) -> Result<f64> {
        check_dim(self.axes.len(), u.len())?;
        let mut cells = Vec::with_capacity(u.len());
        for (x, axis) in u.iter().zip(&self.axes) {
            let (lo, hi) = (axis[0], axis[axis.len() - 1]);
            if !(*x >= lo && *x <= hi) {
                return Err(Error::Extrapolation { point: u.to_vec() });
            }
            let i = axis.partition_point(|a| a <= x).clamp(1, axis.len() - 1) - 1;
            let t = (x - axis[i]) / (axis[i + 1] - axis[i]);
            cells.push((i, t));
        }
        Ok(match cells.as_slice() {
            [(i, t)] => (1.0 - t) * self.values[*i] + t * self.values[i + 1],
            [(i, s), (j, t)] => {
                let n1 = self.axes[1].len();
                let v = |a: usize, b: usize| self.values[a * n1 + b];
                (1.0 - s) * ((1.0 - t) * v(*i, *j) + t * v(*i, j + 1))
                    + s * ((1.0 - t) * v(i + 1, *j) + t * v(i + 1, j + 1))
            }
            _ => unreachable!("sample paths are limited to two dimensions"),
        })
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Monte Carlo estimate of E[exp(−X)], X ~ N(mean, var).
pub fn lognormal_expectation_mc(mean: f64, var: f64, draws: usize, seed: u64) -> McEstimate {
    let mut r = rng::seeded(seed);
    let sd = var.max(0.0).sqrt();
    let samples: Vec<f64> = (0..draws)
        .map(|_| (-(mean + sd * r.sample::<f64, _>(StandardNormal))).exp())
        .collect();
    let n = draws as f64;
    let m = samples.iter().sum::<f64>() / n;
    let v = samples.iter().map(|s| (s - m) * (s - m)).sum::<f64>() / (n - 1.0).max(1.0);
    McEstimate {
        mean: m,
        std_error: (v / n).sqrt(),
    }
}

/// A surrogate posterior, optionally normalized.
#[derive(Debug, Clone)]
pub struct SurrogatePosterior {
    kind: SurrogateKind,
    target: EmulatorTarget,
    problem: Arc<BayesProblem>,
    path: Option<FrozenPath>,
    evidence: Option<Evidence>,
}

impl SurrogatePosterior {
    pub fn new(problem: Arc<BayesProblem>, kind: SurrogateKind, target: EmulatorTarget) -> Result<Self> {
        match &target {
            EmulatorTarget::Phi(gp) => check_dim(problem.dim(), gp.design().dim())?,
            EmulatorTarget::Forward(gps) => {
                check_dim(problem.forward().output_dim(), gps.len())?;
                for gp in gps {
                    check_dim(problem.dim(), gp.design().dim())?;
                }
            }
        }
        let path = match (&kind, &target) {
            (SurrogateKind::SampleBased { seed, axes }, EmulatorTarget::Phi(gp)) => {
                let axes = match axes {
                    Some(a) => a.clone(),
                    None => {
                        let b = problem.quadrature_box();
                        let n = if b.dim() == 1 { 257 } else { 33 };
                        b.lower().iter().zip(b.upper()).map(|(&l, &h)| linspace(l, h, n)).collect()
                    }
                };
                if axes.is_empty() || axes.len() > 2 || axes.len() != problem.dim() {
                    return Err(Error::InvalidArgument(
                        "sample-based surrogates need a 1D or 2D grid matching the parameter dimension".into(),
                    ));
                }
                if axes.iter().any(|a| a.len() < 2 || a.windows(2).any(|w| w[0] >= w[1])) {
                    return Err(Error::InvalidArgument("sample grid axes must be strictly increasing".into()));
                }
                let points = FrozenPath::tensor_points(&axes);
                let sampler = GridSampler::new(gp, &points)?;
                let values = sampler.draw(&mut rng::seeded(*seed));
                Some(FrozenPath { axes, values })
            }
            (SurrogateKind::SampleBased { .. }, EmulatorTarget::Forward(_)) => {
                return Err(Error::InvalidArgument(
                    "the sample-based surrogate is defined for Φ emulators only".into(),
                ))
            }
            _ => None,
        };
        Ok(SurrogatePosterior {
            kind,
            target,
            problem,
            path,
            evidence: None,
        })
    }

    pub fn kind(&self) -> &SurrogateKind {
        &self.kind
    }

    pub fn target(&self) -> &EmulatorTarget {
        &self.target
    }

    pub fn problem(&self) -> &BayesProblem {
        &self.problem
    }

    pub fn frozen_path(&self) -> Option<&FrozenPath> {
        self.path.as_ref()
    }

    pub fn evidence(&self) -> Option<&Evidence> {
        self.evidence.as_ref()
    }

    /// Surrogate log-likelihood, without the prior.
    pub fn log_likelihood(&self, u: &[f64]) -> Result<f64> {
        match (&self.kind, &self.target) {
            (SurrogateKind::MeanBased, EmulatorTarget::Phi(gp)) => Ok(-gp.predict_mean(u)?),
            (SurrogateKind::Marginal, EmulatorTarget::Phi(gp)) => {
                let (m, k) = gp.predict(u)?;
                Ok(marginal_phi_log_likelihood(m, k))
            }
            (SurrogateKind::SampleBased { .. }, EmulatorTarget::Phi(_)) => {
                let path = self.path.as_ref().expect("sample path is built in new");
                Ok(-path.interpolate(u)?)
            }
            (SurrogateKind::MeanBased, EmulatorTarget::Forward(gps)) => {
                let g = gps.iter().map(|gp| gp.predict_mean(u)).collect::<Result<Vec<f64>>>()?;
                let misfit = self.problem.misfit(&g)?;
                Ok(-0.5 * self.problem.noise().log_det() - misfit)
            }
            (SurrogateKind::Marginal, EmulatorTarget::Forward(gps)) => {
                let (means, vars): (Vec<f64>, Vec<f64>) =
                    gps.iter().map(|gp| gp.predict(u)).collect::<Result<Vec<_>>>()?.into_iter().unzip();
                let residual: Vec<f64> = self.problem.data().iter().zip(&means).map(|(y, m)| y - m).collect();
                inflated_log_likelihood(self.problem.noise().covariance(), &residual, &vars)
            }
            (SurrogateKind::SampleBased { .. }, EmulatorTarget::Forward(_)) => {
                unreachable!("rejected in new")
            }
        }
    }

    /// Unnormalized log-density: log π₀(u) plus the surrogate log-likelihood;
    /// −∞ outside the prior support.
    pub fn unnormalized_log_density(&self, u: &[f64]) -> Result<f64> {
        let lp = self.problem.prior().log_density(u);
        if lp == f64::NEG_INFINITY {
            return Ok(lp);
        }
        Ok(lp + self.log_likelihood(u)?)
    }

    /// Constant that turns the surrogate likelihood into a density in y,
    /// so Z_N is comparable with [`BayesProblem::evidence`].
    pub fn likelihood_offset(&self) -> f64 {
        match self.target {
            EmulatorTarget::Phi(_) => self.problem.log_likelihood_constant(),
            EmulatorTarget::Forward(_) => -0.5 * self.problem.forward().output_dim() as f64 * LN_2PI,
        }
    }

    /// Computes Z_N with the given method.
    pub fn normalize(mut self, method: EvidenceMethod) -> Result<Self> {
        if matches!(method, EvidenceMethod::Quadrature { .. }) && self.problem.dim() > 2 {
            return Err(Error::InvalidArgument("quadrature is limited to d_u <= 2".into()));
        }
        let offset = self.likelihood_offset();
        let domain = self.problem.quadrature_box();
        let evidence = log_integral(self.problem.prior(), &domain, method, |u| {
            Ok(offset + self.log_likelihood(u)?)
        })?;
        self.evidence = Some(evidence);
        Ok(self)
    }

    /// Normalized log-density; requires [`SurrogatePosterior::normalize`].
    pub fn log_density(&self, u: &[f64]) -> Result<f64> {
        let z = self
            .evidence
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("surrogate posterior is not normalized".into()))?;
        Ok(self.unnormalized_log_density(u)? + self.likelihood_offset() - z.log_value)
    }

    /// Monte Carlo estimate of E[exp(−Φ_N(u))] by sampling the predictive
    /// distribution of the Φ emulator at `u`.
    pub fn monte_carlo_marginal_check(&self, u: &[f64], draws: usize, seed: u64) -> Result<McEstimate> {
        match (&self.kind, &self.target) {
            (SurrogateKind::Marginal, EmulatorTarget::Phi(gp)) => {
                let (m, k) = gp.predict(u)?;
                Ok(lognormal_expectation_mc(m, k, draws, seed))
            }
            _ => Err(Error::InvalidArgument(
                "the Monte Carlo marginal check applies to marginal Φ surrogates".into(),
            )),
        }
    }
}
