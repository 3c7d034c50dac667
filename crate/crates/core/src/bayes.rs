//! Bayesian inverse problems with additive Gaussian noise.
//!
//! Data are modelled as `y = G(u) + η`, `η ~ N(0, Γ)`, with a prior μ₀ on the
//! parameter `u` and misfit `Φ(u) = ½‖y − G(u)‖²_Γ`.
//!
//! The evidence `Z` is reported as the marginal density of the data,
//! `Z = E_{μ₀}[exp(−Φ)] / sqrt(det(2πΓ))`, so that the posterior density is
//! `π^y(u) = exp(−Φ(u)) π₀(u) / (sqrt(det(2πΓ)) Z)`.

pub mod darcy;

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::quadrature::{BoxDomain, QuadratureGrid};
use crate::rng;

pub use darcy::{Darcy1D, DarcySolution, SourceTerm};

const LN_2PI: f64 = 1.8378770664093453;

/// Smallest evidence treated as representable.
pub const EVIDENCE_FLOOR: f64 = 1e-300;

/// Closed-form scalar maps used as toy forward models and regression targets.
#[derive(Clone)]
pub enum ScalarFormula {
    /// sin((x − 2.5)²).
    SinShiftedSquare,
    /// a x + b.
    Linear { slope: f64, intercept: f64 },
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl ScalarFormula {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ScalarFormula::SinShiftedSquare => ((x - 2.5) * (x - 2.5)).sin(),
            ScalarFormula::Linear { slope, intercept } => slope * x + intercept,
            ScalarFormula::Function(f) => f(x),
        }
    }
}

impl fmt::Debug for ScalarFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarFormula::SinShiftedSquare => f.write_str("SinShiftedSquare"),
            ScalarFormula::Linear { slope, intercept } => {
                write!(f, "Linear {{ slope: {slope}, intercept: {intercept} }}")
            }
            ScalarFormula::Function(_) => f.write_str("Function(..)"),
        }
    }
}

type VectorMap = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;

#[derive(Clone)]
pub enum ForwardKind {
    /// G(u) = u.
    Identity { dim: usize },
    /// Scalar-to-scalar closed form.
    Scalar(ScalarFormula),
    Darcy(Darcy1D),
    Custom {
        input_dim: usize,
        output_dim: usize,
        map: VectorMap,
    },
}

impl fmt::Debug for ForwardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForwardKind::Identity { dim } => write!(f, "Identity {{ dim: {dim} }}"),
            ForwardKind::Scalar(s) => write!(f, "Scalar({s:?})"),
            ForwardKind::Darcy(d) => write!(f, "Darcy({d:?})"),
            ForwardKind::Custom {
                input_dim,
                output_dim,
                ..
            } => write!(f, "Custom {{ {input_dim} -> {output_dim} }}"),
        }
    }
}

/// Forward map G with an evaluation counter for cost accounting.
#[derive(Debug)]
pub struct ForwardModel {
    kind: ForwardKind,
    evaluations: AtomicU64,
}

impl Clone for ForwardModel {
    fn clone(&self) -> Self {
        ForwardModel {
            kind: self.kind.clone(),
            evaluations: AtomicU64::new(self.evaluation_count()),
        }
    }
}

impl ForwardModel {
    pub fn new(kind: ForwardKind) -> Self {
        ForwardModel {
            kind,
            evaluations: AtomicU64::new(0),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(ForwardKind::Identity { dim })
    }

    pub fn scalar(formula: ScalarFormula) -> Self {
        Self::new(ForwardKind::Scalar(formula))
    }

    pub fn darcy(model: Darcy1D) -> Self {
        Self::new(ForwardKind::Darcy(model))
    }

    pub fn custom<F>(input_dim: usize, output_dim: usize, map: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        Self::new(ForwardKind::Custom {
            input_dim,
            output_dim,
            map: Arc::new(map),
        })
    }

    pub fn kind(&self) -> &ForwardKind {
        &self.kind
    }

    pub fn input_dim(&self) -> usize {
        match &self.kind {
            ForwardKind::Identity { dim } => *dim,
            ForwardKind::Scalar(_) => 1,
            ForwardKind::Darcy(d) => d.layers(),
            ForwardKind::Custom { input_dim, .. } => *input_dim,
        }
    }

    pub fn output_dim(&self) -> usize {
        match &self.kind {
            ForwardKind::Identity { dim } => *dim,
            ForwardKind::Scalar(_) => 1,
            ForwardKind::Darcy(d) => d.observation_points().len(),
            ForwardKind::Custom { output_dim, .. } => *output_dim,
        }
    }

    pub fn evaluate(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), u.len())?;
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        let out = match &self.kind {
            ForwardKind::Identity { .. } => u.to_vec(),
            ForwardKind::Scalar(f) => vec![f.eval(u[0])],
            ForwardKind::Darcy(d) => d.solve(u)?.observations,
            ForwardKind::Custom { map, .. } => map(u)?,
        };
        check_dim(self.output_dim(), out.len())?;
        Ok(out)
    }

    pub fn evaluation_count(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn reset_count(&self) {
        self.evaluations.store(0, Ordering::Relaxed);
    }
}

/// Gaussian observation noise N(0, Γ) with a cached Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    covariance: DMatrix<f64>,
    factor: DMatrix<f64>,
    log_det: f64,
}

impl NoiseModel {
    pub fn new(covariance: DMatrix<f64>) -> Result<Self> {
        if !covariance.is_square() || covariance.nrows() == 0 {
            return Err(Error::InvalidArgument("noise covariance must be square and non-empty".into()));
        }
        let n = covariance.nrows();
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (covariance[(i, j)], covariance[(j, i)]);
                if (a - b).abs() > 1e-12 * (a.abs() + b.abs()).max(1.0) {
                    return Err(Error::InvalidArgument("noise covariance must be symmetric".into()));
                }
            }
        }
        let chol = covariance
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidArgument("noise covariance must be positive definite".into()))?;
        let factor = chol.unpack();
        let log_det = 2.0 * factor.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(NoiseModel {
            covariance,
            factor,
            log_det,
        })
    }

    pub fn diagonal(variances: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(variances)))
    }

    pub fn isotropic(variance: f64, dim: usize) -> Result<Self> {
        Self::diagonal(&vec![variance; dim])
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// ‖v‖²_Γ = vᵀ Γ⁻¹ v, by a triangular solve.
    pub fn weighted_norm_sq(&self, v: &[f64]) -> Result<f64> {
        check_dim(self.dim(), v.len())?;
        let w = self
            .factor
            .solve_lower_triangular(&DVector::from_column_slice(v))
            .ok_or_else(|| Error::Solver("singular noise factor".into()))?;
        Ok(w.norm_squared())
    }

    /// Γ^{1/2} ξ with the lower Cholesky factor as square root.
    pub fn correlate(&self, xi: &[f64]) -> Vec<f64> {
        (&self.factor * DVector::from_column_slice(xi)).iter().copied().collect()
    }
}

/// Prior measure μ₀ with independent coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Prior {
    GaussianDiag { means: Vec<f64>, variances: Vec<f64> },
    UniformBox { lower: Vec<f64>, upper: Vec<f64> },
    /// log u_j ~ N(log_means_j, log_variances_j).
    LogNormalDiag { log_means: Vec<f64>, log_variances: Vec<f64> },
}

impl Prior {
    pub fn gaussian(means: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        check_dim(means.len(), variances.len())?;
        if means.is_empty() || variances.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidArgument("Gaussian prior needs positive variances".into()));
        }
        Ok(Prior::GaussianDiag { means, variances })
    }

    pub fn uniform(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        BoxDomain::new(lower.clone(), upper.clone())?;
        Ok(Prior::UniformBox { lower, upper })
    }

    pub fn log_normal(log_means: Vec<f64>, log_variances: Vec<f64>) -> Result<Self> {
        check_dim(log_means.len(), log_variances.len())?;
        if log_means.is_empty() || log_variances.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidArgument("log-normal prior needs positive log-variances".into()));
        }
        Ok(Prior::LogNormalDiag {
            log_means,
            log_variances,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Prior::GaussianDiag { means, .. } => means.len(),
            Prior::UniformBox { lower, .. } => lower.len(),
            Prior::LogNormalDiag { log_means, .. } => log_means.len(),
        }
    }

    /// log π₀(u); −∞ outside the support.
    pub fn log_density(&self, u: &[f64]) -> f64 {
        if u.len() != self.dim() {
            return f64::NEG_INFINITY;
        }
        match self {
            Prior::GaussianDiag { means, variances } => u
                .iter()
                .zip(means.iter().zip(variances))
                .map(|(x, (m, v))| -0.5 * (LN_2PI + v.ln()) - 0.5 * (x - m) * (x - m) / v)
                .sum(),
            Prior::UniformBox { lower, upper } => {
                let inside = u
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .all(|(x, (l, h))| l <= x && x <= h);
                if inside {
                    -lower.iter().zip(upper).map(|(l, h)| (h - l).ln()).sum::<f64>()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Prior::LogNormalDiag {
                log_means,
                log_variances,
            } => {
                if u.iter().any(|x| !(*x > 0.0)) {
                    return f64::NEG_INFINITY;
                }
                u.iter()
                    .zip(log_means.iter().zip(log_variances))
                    .map(|(x, (m, v))| {
                        let l = x.ln();
                        -l - 0.5 * (LN_2PI + v.ln()) - 0.5 * (l - m) * (l - m) / v
                    })
                    .sum()
            }
        }
    }

    pub fn density(&self, u: &[f64]) -> f64 {
        self.log_density(u).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Prior::GaussianDiag { means, variances } => means
                .iter()
                .zip(variances)
                .map(|(m, v)| m + v.sqrt() * rng.sample::<f64, _>(StandardNormal))
                .collect(),
            Prior::UniformBox { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, h)| l + (h - l) * rng.random::<f64>())
                .collect(),
            Prior::LogNormalDiag {
                log_means,
                log_variances,
            } => log_means
                .iter()
                .zip(log_variances)
                .map(|(m, v)| (m + v.sqrt() * rng.sample::<f64, _>(StandardNormal)).exp())
                .collect(),
        }
    }

    /// Box carrying essentially all prior mass: mean ± 8 sd for Gaussians
    /// (in log space for the log-normal), the box itself for uniforms.
    pub fn effective_support(&self) -> BoxDomain {
        let (lower, upper) = match self {
            Prior::GaussianDiag { means, variances } => means
                .iter()
                .zip(variances)
                .map(|(m, v)| (m - 8.0 * v.sqrt(), m + 8.0 * v.sqrt()))
                .unzip(),
            Prior::UniformBox { lower, upper } => (lower.clone(), upper.clone()),
            Prior::LogNormalDiag {
                log_means,
                log_variances,
            } => log_means
                .iter()
                .zip(log_variances)
                .map(|(m, v)| ((m - 8.0 * v.sqrt()).exp(), (m + 8.0 * v.sqrt()).exp()))
                .unzip(),
        };
        BoxDomain::new(lower, upper).expect("prior parameters were validated")
    }
}

/// How the evidence was computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvidenceMethod {
    /// Tensor trapezoid rule with `nodes` per dimension (d ≤ 2).
    Quadrature { nodes: usize },
    /// Prior Monte Carlo with `samples` draws.
    MonteCarlo { samples: usize, seed: u64 },
}

impl EvidenceMethod {
    /// 4096 nodes in 1D, 512 per axis in 2D.
    pub fn default_quadrature(dim: usize) -> Self {
        EvidenceMethod::Quadrature {
            nodes: if dim == 1 { 4096 } else { 512 },
        }
    }
}

/// Normalizing constant together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evidence {
    pub value: f64,
    pub log_value: f64,
    pub method: EvidenceMethod,
    /// Monte Carlo standard error of `value`; zero for quadrature.
    pub std_error: f64,
}

/// ∫ exp(log_f) over `domain` with the trapezoid rule, or as a prior
/// expectation E_{μ₀}[exp(log_g)] by Monte Carlo. For quadrature `log_f`
/// must include the prior log-density; for Monte Carlo `log_g` must not.
pub(crate) fn log_integral<F>(
    prior: &Prior,
    domain: &BoxDomain,
    method: EvidenceMethod,
    log_likelihood: F,
) -> Result<Evidence>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let (log_value, std_error) = match method {
        EvidenceMethod::Quadrature { nodes } => {
            let grid = QuadratureGrid::trapezoid(domain.clone(), nodes)?;
            let logs = grid
                .points()
                .par_iter()
                .map(|p| {
                    let lp = prior.log_density(p);
                    if lp == f64::NEG_INFINITY {
                        Ok(lp)
                    } else {
                        Ok(lp + log_likelihood(p)?)
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
            (grid.log_integrate_values(&logs), 0.0)
        }
        EvidenceMethod::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::InvalidArgument("Monte Carlo evidence needs >= 2 samples".into()));
            }
            let mut r = rng::seeded(seed);
            let draws: Vec<Vec<f64>> = (0..samples).map(|_| prior.sample(&mut r)).collect();
            let logs = draws
                .par_iter()
                .map(|u| log_likelihood(u))
                .collect::<Result<Vec<f64>>>()?;
            let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                (f64::NEG_INFINITY, 0.0)
            } else {
                let scaled: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
                let n = samples as f64;
                let mean = scaled.iter().sum::<f64>() / n;
                let var = scaled.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
                (max + mean.ln(), (var / n).sqrt() * max.exp())
            }
        }
    };
    if !(log_value >= EVIDENCE_FLOOR.ln()) {
        return Err(Error::Underflow { log_value });
    }
    Ok(Evidence {
        value: log_value.exp(),
        log_value,
        method,
        std_error,
    })
}

/// Everything that defines the posterior: likelihood ingredients plus the prior.
#[derive(Debug, Clone)]
pub struct BayesProblem {
    forward: ForwardModel,
    data: Vec<f64>,
    noise: NoiseModel,
    prior: Prior,
    domain: Option<BoxDomain>,
}

impl BayesProblem {
    pub fn new(forward: ForwardModel, data: Vec<f64>, noise: NoiseModel, prior: Prior) -> Result<Self> {
        check_dim(forward.output_dim(), data.len())?;
        check_dim(forward.output_dim(), noise.dim())?;
        check_dim(forward.input_dim(), prior.dim())?;
        Ok(BayesProblem {
            forward,
            data,
            noise,
            prior,
            domain: None,
        })
    }

    /// Overrides the quadrature box (defaults to the prior's effective support).
    pub fn with_domain(mut self, domain: BoxDomain) -> Result<Self> {
        check_dim(self.prior.dim(), domain.dim())?;
        self.domain = Some(domain);
        Ok(self)
    }

    /// Synthetic data y = G(u†) + Γ^{1/2} ξ.
    pub fn synthesize_data(forward: &ForwardModel, noise: &NoiseModel, true_u: &[f64], seed: u64) -> Result<Vec<f64>> {
        let clean = forward.evaluate(true_u)?;
        check_dim(noise.dim(), clean.len())?;
        let mut r = rng::seeded(seed);
        let xi: Vec<f64> = (0..clean.len()).map(|_| r.sample(StandardNormal)).collect();
        Ok(clean.iter().zip(noise.correlate(&xi)).map(|(g, e)| g + e).collect())
    }

    pub fn forward(&self) -> &ForwardModel {
        &self.forward
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    pub fn dim(&self) -> usize {
        self.prior.dim()
    }

    pub fn quadrature_box(&self) -> BoxDomain {
        self.domain.clone().unwrap_or_else(|| self.prior.effective_support())
    }

    /// Φ(u) = ½ ‖y − G(u)‖²_Γ.
    pub fn neg_log_likelihood(&self, u: &[f64]) -> Result<f64> {
        let g = self.forward.evaluate(u)?;
        self.misfit(&g)
    }

    /// ½ ‖y − g‖²_Γ for a given model output `g`.
    pub fn misfit(&self, g: &[f64]) -> Result<f64> {
        let r: Vec<f64> = self.data.iter().zip(g).map(|(y, g)| y - g).collect();
        Ok(0.5 * self.noise.weighted_norm_sq(&r)?)
    }

    /// log π₀(u) − Φ(u); −∞ outside the prior support (G is not evaluated there).
    pub fn log_unnormalized_posterior(&self, u: &[f64]) -> Result<f64> {
        let lp = self.prior.log_density(u);
        if lp == f64::NEG_INFINITY {
            return Ok(lp);
        }
        Ok(lp - self.neg_log_likelihood(u)?)
    }

    pub fn evidence(&self, method: EvidenceMethod) -> Result<Evidence> {
        if matches!(method, EvidenceMethod::Quadrature { .. }) && self.dim() > 2 {
            return Err(Error::InvalidArgument(
                "quadrature evidence is limited to d_u <= 2; use Monte Carlo".into(),
            ));
        }
        let c = self.log_likelihood_constant();
        log_integral(&self.prior, &self.quadrature_box(), method, |u| {
            Ok(c - self.neg_log_likelihood(u)?)
        })
    }

    /// −½ log det(2πΓ), the normalizing constant of the Gaussian likelihood.
    pub fn log_likelihood_constant(&self) -> f64 {
        -0.5 * (self.noise.dim() as f64 * LN_2PI + self.noise.log_det())
    }

    /// log π^y(u) = log π₀(u) − Φ(u) − ½ log det(2πΓ) − log Z, with `evidence`
    /// the data density returned by [`BayesProblem::evidence`].
    pub fn posterior_log_density(&self, u: &[f64], evidence: f64) -> Result<f64> {
        if !(evidence > 0.0) {
            return Err(Error::InvalidArgument(format!("evidence must be positive, got {evidence}")));
        }
        Ok(self.log_unnormalized_posterior(u)? + self.log_likelihood_constant() - evidence.ln())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn conjugate() -> BayesProblem {
        BayesProblem::new(
            ForwardModel::identity(1),
            vec![1.0],
            NoiseModel::isotropic(1.0, 1).unwrap(),
            Prior::gaussian(vec![0.0], vec![1.0]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn misfit_values() {
        let p = BayesProblem::new(
            ForwardModel::identity(1),
            vec![0.0],
            NoiseModel::isotropic(1.0, 1).unwrap(),
            Prior::gaussian(vec![0.0], vec![1.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(p.neg_log_likelihood(&[0.0]).unwrap(), 0.0);
        assert_eq!(p.neg_log_likelihood(&[2.0]).unwrap(), 2.0);
        let p4 = BayesProblem::new(
            ForwardModel::identity(1),
            vec![0.0],
            NoiseModel::diagonal(&[4.0]).unwrap(),
            Prior::gaussian(vec![0.0], vec![1.0]).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(p4.neg_log_likelihood(&[2.0]).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn evidence_when_forward_matches_data_everywhere() {
        let p = BayesProblem::new(
            ForwardModel::custom(1, 1, |_| Ok(vec![3.0])),
            vec![3.0],
            NoiseModel::isotropic(1.0, 1).unwrap(),
            Prior::gaussian(vec![0.0], vec![1.0]).unwrap(),
        )
        .unwrap();
        let z = p.evidence(EvidenceMethod::default_quadrature(1)).unwrap();
        let c = (2.0 * std::f64::consts::PI).sqrt().recip();
        assert_abs_diff_eq!(z.value, c, epsilon = 1e-10);
        assert_abs_diff_eq!(z.log_value - p.log_likelihood_constant(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn conjugate_evidence_and_posterior() {
        let p = conjugate();
        let z = p.evidence(EvidenceMethod::default_quadrature(1)).unwrap();
        let exact = (-0.25f64).exp() / (4.0 * std::f64::consts::PI).sqrt();
        assert_abs_diff_eq!(z.value, exact, epsilon = 1e-10);
        assert_abs_diff_eq!(z.value, 0.219696, epsilon = 1e-6);
        let lp = p.posterior_log_density(&[0.5], z.value).unwrap();
        assert_abs_diff_eq!(lp, -0.5 * std::f64::consts::PI.ln(), epsilon = 1e-9);

        let mc = p
            .evidence(EvidenceMethod::MonteCarlo { samples: 20_000, seed: 4 })
            .unwrap();
        assert!((mc.value - z.value).abs() < 3.0 * mc.std_error, "{} ± {}", mc.value, mc.std_error);

        // posterior integrates to one and matches N(1/2, 1/2) moments
        let grid = QuadratureGrid::trapezoid(p.quadrature_box(), 4096).unwrap();
        let dens = |u: &[f64]| p.posterior_log_density(u, z.value).unwrap().exp();
        assert_abs_diff_eq!(grid.integrate(dens), 1.0, epsilon = 1e-6);
        let mean = grid.integrate(|u| u[0] * dens(u));
        let var = grid.integrate(|u| (u[0] - mean).powi(2) * dens(u));
        assert_abs_diff_eq!(mean, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(var, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn uniform_prior_support() {
        let p = BayesProblem::new(
            ForwardModel::identity(1),
            vec![0.2],
            NoiseModel::isotropic(0.1, 1).unwrap(),
            Prior::uniform(vec![-1.0], vec![1.0]).unwrap(),
        )
        .unwrap();
        let z = p.evidence(EvidenceMethod::default_quadrature(1)).unwrap();
        assert_eq!(p.posterior_log_density(&[1.5], z.value).unwrap(), f64::NEG_INFINITY);
        assert!(p.posterior_log_density(&[0.2], 0.0).is_err());
    }

    #[test]
    fn underflow_is_reported() {
        let p = BayesProblem::new(
            ForwardModel::identity(1),
            vec![1e4],
            NoiseModel::isotropic(1e-2, 1).unwrap(),
            Prior::uniform(vec![-1.0], vec![1.0]).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            p.evidence(EvidenceMethod::default_quadrature(1)),
            Err(Error::Underflow { .. })
        ));
    }

    #[test]
    fn prior_densities_integrate_and_samplers_match() {
        let priors = [
            Prior::gaussian(vec![1.0, -2.0], vec![0.5, 2.0]).unwrap(),
            Prior::uniform(vec![-1.0, 0.0], vec![2.0, 0.5]).unwrap(),
            Prior::log_normal(vec![0.0, 0.3], vec![0.04, 0.09]).unwrap(),
        ];
        for prior in priors {
            let grid = QuadratureGrid::trapezoid(prior.effective_support(), 512).unwrap();
            let mass = grid.integrate(|u| prior.density(u));
            assert!((mass - 1.0).abs() < 1e-3, "{prior:?}: {mass}");
            let mean0 = grid.integrate(|u| u[0] * prior.density(u));
            let mut r = rng::seeded(1);
            let n = 40_000;
            let s: f64 = (0..n).map(|_| prior.sample(&mut r)[0]).sum::<f64>() / n as f64;
            assert!((s - mean0).abs() < 0.03, "{prior:?}: {s} vs {mean0}");
        }
    }

    #[test]
    fn forward_counts_evaluations() {
        let f = ForwardModel::scalar(ScalarFormula::SinShiftedSquare);
        assert_abs_diff_eq!(f.evaluate(&[2.5]).unwrap()[0], 0.0, epsilon = 1e-15);
        f.evaluate(&[0.0]).unwrap();
        assert_eq!(f.evaluation_count(), 2);
        assert!(f.evaluate(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn synthesized_data_are_reproducible() {
        let f = ForwardModel::identity(2);
        let noise = NoiseModel::diagonal(&[0.01, 0.04]).unwrap();
        let a = BayesProblem::synthesize_data(&f, &noise, &[1.0, 2.0], 9).unwrap();
        let b = BayesProblem::synthesize_data(&f, &noise, &[1.0, 2.0], 9).unwrap();
        assert_eq!(a, b);
        assert!((a[0] - 1.0).abs() < 0.5 && (a[1] - 2.0).abs() < 1.0);
    }

    #[test]
    fn noise_validation() {
        assert!(NoiseModel::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
        assert!(NoiseModel::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0])).is_err());
        assert!(NoiseModel::diagonal(&[1.0, 0.0]).is_err());
    }

    proptest! {
        #[test]
        fn whitened_norm_matches_direct_inverse(
            entries in prop::collection::vec(-1.0f64..1.0, 64),
            v in prop::collection::vec(-3.0f64..3.0, 8),
            dim in 1usize..=8,
        ) {
            let a = DMatrix::from_fn(dim, dim, |i, j| entries[i * 8 + j]);
            let gamma = &a * a.transpose() + DMatrix::identity(dim, dim) * 0.5;
            let noise = NoiseModel::new(gamma.clone()).unwrap();
            let v = DVector::from_column_slice(&v[..dim]);
            let direct = v.dot(&(gamma.try_inverse().unwrap() * &v));
            let fast = noise.weighted_norm_sq(v.as_slice()).unwrap();
            prop_assert!((fast - direct).abs() <= 1e-10 * (1.0 + direct.abs()));
            prop_assert!(fast >= 0.0);
        }

        #[test]
        fn misfit_is_nonnegative_and_zero_only_at_data(u in -5.0f64..5.0, y in -5.0f64..5.0) {
            let p = BayesProblem::new(
                ForwardModel::identity(1),
                vec![y],
                NoiseModel::isotropic(0.3, 1).unwrap(),
                Prior::gaussian(vec![0.0], vec![1.0]).unwrap(),
            ).unwrap();
            let phi = p.neg_log_likelihood(&[u]).unwrap();
            prop_assert!(phi >= 0.0);
            prop_assert_eq!(phi == 0.0, u == y);
        }
    }
}
