//! Exact Gaussian process regression.
//!
//! [`GpPosterior::fit`] conditions a [`GpPrior`] on observations at a
//! [`Design`]. The kernel matrix is factorized once, with deterministic jitter
//! escalation when it is numerically singular; predictions then cost one
//! kernel vector and one triangular solve per point.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::rng;

/// Jitter ladder, in units of the kernel variance.
pub const JITTER_LADDER: [f64; 5] = [0.0, 1e-12, 1e-10, 1e-8, 1e-6];

/// Ordered set of training points sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl Design {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidArgument("design needs at least one point".into()))?;
        if dim == 0 {
            return Err(Error::InvalidArgument("points must have dimension >= 1".into()));
        }
        for p in &points {
            check_dim(dim, p.len())?;
        }
        Ok(Design { dim, points })
    }

    /// An empty design in `dim` dimensions.
    pub fn empty(dim: usize) -> Self {
        Design {
            dim,
            points: Vec::new(),
        }
    }

    /// One-dimensional design from scalar locations.
    pub fn from_scalars(xs: &[f64]) -> Self {
        Design {
            dim: 1,
            points: xs.iter().map(|&x| vec![x]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn push(&mut self, point: Vec<f64>) -> Result<()> {
        check_dim(self.dim, point.len())?;
        self.points.push(point);
        Ok(())
    }

    pub fn into_points(self) -> Vec<Vec<f64>> {
        self.points
    }
}

/// Prior mean function.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum MeanFunction {
    #[default]
    Zero,
    Constant(f64),
    /// Additive polynomial `c_0 + Σ_{k≥1} c_k Σ_j u_j^k`.
    Polynomial(Vec<f64>),
}

impl MeanFunction {
    pub fn eval(&self, u: &[f64]) -> f64 {
        match self {
            MeanFunction::Zero => 0.0,
            MeanFunction::Constant(c) => *c,
            MeanFunction::Polynomial(coeffs) => {
                let mut total = coeffs.first().copied().unwrap_or(0.0);
                for &x in u {
                    let mut pow = 1.0;
                    for &c in coeffs.iter().skip(1) {
                        pow *= x;
                        total += c * pow;
                    }
                }
                total
            }
        }
    }
}

/// Prior GP(m, k).
#[derive(Debug, Clone, PartialEq)]
pub struct GpPrior {
    pub mean: MeanFunction,
    pub kernel: KernelSpec,
}

impl GpPrior {
    pub fn new(mean: MeanFunction, kernel: KernelSpec) -> Self {
        GpPrior { mean, kernel }
    }

    pub fn zero_mean(kernel: KernelSpec) -> Self {
        GpPrior {
            mean: MeanFunction::Zero,
            kernel,
        }
    }
}

/// Cholesky factorization of `matrix + δ I` with δ taken from the jitter
/// ladder (scaled by `scale`). Returns the factor and the jitter used.
///
/// A factorization whose smallest squared pivot falls below round-off level
/// (`n ε scale`) counts as a failure and moves to the next rung.
pub(crate) fn factorize_with_jitter(
    matrix: &DMatrix<f64>,
    scale: f64,
) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = matrix.nrows();
    let floor = n.max(1) as f64 * f64::EPSILON * scale;
    for rung in JITTER_LADDER {
        let jitter = rung * scale;
        let mut m = matrix.clone();
        for i in 0..n {
            m[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(m) {
            let l = chol.l_dirty();
            let min_pivot = (0..n).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
            if n == 0 || min_pivot > floor {
                return Ok((chol, jitter));
            }
        }
    }
    let min_eigenvalue = matrix.clone().symmetric_eigenvalues().min();
    Err(Error::IllConditioned {
        min_eigenvalue,
        max_jitter: JITTER_LADDER[JITTER_LADDER.len() - 1] * scale,
    })
}

/// A GP conditioned on (possibly noisy) observations.
#[derive(Debug)]
pub struct GpPosterior {
    prior: GpPrior,
    design: Design,
    observations: Vec<f64>,
    noise_variance: f64,
    l: DMatrix<f64>,
    alpha: DVector<f64>,
    jitter: f64,
    clamped: AtomicUsize,
}

impl Clone for GpPosterior {
    fn clone(&self) -> Self {
        GpPosterior {
            prior: self.prior.clone(),
            design: self.design.clone(),
            observations: self.observations.clone(),
            noise_variance: self.noise_variance,
            l: self.l.clone(),
            alpha: self.alpha.clone(),
            jitter: self.jitter,
            clamped: AtomicUsize::new(self.clamped.load(Ordering::Relaxed)),
        }
    }
}

impl GpPosterior {
    /// Conditions `prior` on `observations` at `design`.
    ///
    /// With a non-zero `noise_variance` σ² the kernel matrix is replaced by
    /// K + σ² I. A non-zero prior mean is handled by regressing the residuals
    /// f(D) − m(D).
    pub fn fit(
        prior: GpPrior,
        design: Design,
        observations: &[f64],
        noise_variance: f64,
    ) -> Result<Self> {
        if observations.len() != design.len() {
            return Err(Error::InvalidArgument(format!(
                "{} observations for {} design points",
                observations.len(),
                design.len()
            )));
        }
        if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be non-negative, got {noise_variance}"
            )));
        }
        if observations.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("observations must be finite".into()));
        }
        let mut k = prior.kernel.matrix(design.points());
        for i in 0..design.len() {
            k[(i, i)] += noise_variance;
        }
        let (chol, jitter) = factorize_with_jitter(&k, prior.kernel.variance())?;
        let residuals = DVector::from_iterator(
            design.len(),
            design
                .points()
                .iter()
                .zip(observations)
                .map(|(p, &f)| f - prior.mean.eval(p)),
        );
        let alpha = chol.solve(&residuals);
        Ok(GpPosterior {
            l: chol.unpack(),
            prior,
            design,
            observations: observations.to_vec(),
            noise_variance,
            alpha,
            jitter,
            clamped: AtomicUsize::new(0),
        })
    }

    pub fn prior(&self) -> &GpPrior {
        &self.prior
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.prior.kernel
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// Coefficients α solving (K + σ²I + δI) α = f(D) − m(D).
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// Lower Cholesky factor of K + σ²I + δI.
    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Diagonal jitter δ that made the factorization succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Number of predictive variances clamped at zero so far.
    pub fn clamp_count(&self) -> usize {
        self.clamped.load(Ordering::Relaxed)
    }

    fn whitened_cross(&self, u: &[f64]) -> DVector<f64> {
        let k = DVector::from_iterator(
            self.design.len(),
            self.design.points().iter().map(|p| self.prior.kernel.eval_unchecked(u, p)),
        );
        self.l
            .solve_lower_triangular(&k)
            .expect("Cholesky factor has a positive diagonal")
    }

    /// Predictive mean m(u) + k(u, D)ᵀ α.
    pub fn predict_mean(&self, u: &[f64]) -> Result<f64> {
        check_dim(self.design.dim(), u.len())?;
        Ok(self.mean_unchecked(u))
    }

    fn mean_unchecked(&self, u: &[f64]) -> f64 {
        let cross: f64 = self
            .design
            .points()
            .iter()
            .zip(self.alpha.iter())
            .map(|(p, a)| a * self.prior.kernel.eval_unchecked(u, p))
            .sum();
        self.prior.mean.eval(u) + cross
    }

    /// Predictive covariance k(u, v) − k(u, D)ᵀ K⁻¹ k(v, D).
    pub fn predict_cov(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        check_dim(self.design.dim(), u.len())?;
        check_dim(self.design.dim(), v.len())?;
        if u == v {
            return Ok(self.var_unchecked(u));
        }
        let a = self.whitened_cross(u);
        let b = self.whitened_cross(v);
        Ok(self.prior.kernel.eval_unchecked(u, v) - a.dot(&b))
    }

    /// Predictive variance, clamped to [0, k(u, u)].
    pub fn predict_var(&self, u: &[f64]) -> Result<f64> {
        check_dim(self.design.dim(), u.len())?;
        Ok(self.var_unchecked(u))
    }

    fn var_unchecked(&self, u: &[f64]) -> f64 {
        let prior_var = self.prior.kernel.variance();
        let a = self.whitened_cross(u);
        let v = prior_var - a.norm_squared();
        if v < 0.0 {
            self.clamped.fetch_add(1, Ordering::Relaxed);
            0.0
        } else {
            v.min(prior_var)
        }
    }

    /// Predictive mean and variance at one point.
    pub fn predict(&self, u: &[f64]) -> Result<(f64, f64)> {
        check_dim(self.design.dim(), u.len())?;
        Ok((self.mean_unchecked(u), self.var_unchecked(u)))
    }

    /// Predictive means at many points.
    pub fn predict_means<P: AsRef<[f64]>>(&self, points: &[P]) -> Result<Vec<f64>> {
        points.iter().map(|p| self.predict_mean(p.as_ref())).collect()
    }

    /// Log density of the observations under the prior,
    /// log N(f(D); m(D), K + σ²I).
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.design.len() as f64;
        let residuals = self
            .design
            .points()
            .iter()
            .zip(&self.observations)
            .map(|(p, &f)| f - self.prior.mean.eval(p));
        let fit: f64 = residuals.zip(self.alpha.iter()).map(|(r, a)| r * a).sum();
        let log_det_half: f64 = self.l.diagonal().iter().map(|d| d.ln()).sum();
        -0.5 * fit - log_det_half - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }
}

/// Convenience wrapper around [`GpPosterior::log_marginal_likelihood`].
pub fn log_marginal_likelihood(
    prior: &GpPrior,
    design: &Design,
    observations: &[f64],
    noise_variance: f64,
) -> Result<f64> {
    Ok(GpPosterior::fit(prior.clone(), design.clone(), observations, noise_variance)?
        .log_marginal_likelihood())
}

/// Anything that yields a joint Gaussian on a finite point set.
pub trait GaussianProcess {
    fn dim(&self) -> Option<usize>;
    fn mean_vector(&self, points: &[Vec<f64>]) -> DVector<f64>;
    fn covariance_matrix(&self, points: &[Vec<f64>]) -> DMatrix<f64>;
    /// Scale for jitter (the kernel variance).
    fn scale(&self) -> f64;
}

impl GaussianProcess for GpPrior {
    fn dim(&self) -> Option<usize> {
        None
    }

    fn mean_vector(&self, points: &[Vec<f64>]) -> DVector<f64> {
        DVector::from_iterator(points.len(), points.iter().map(|p| self.mean.eval(p)))
    }

    fn covariance_matrix(&self, points: &[Vec<f64>]) -> DMatrix<f64> {
        self.kernel.matrix(points)
    }

    fn scale(&self) -> f64 {
        self.kernel.variance()
    }
}

impl GaussianProcess for GpPosterior {
    fn dim(&self) -> Option<usize> {
        Some(self.design.dim())
    }

    fn mean_vector(&self, points: &[Vec<f64>]) -> DVector<f64> {
        DVector::from_iterator(points.len(), points.iter().map(|p| self.mean_unchecked(p)))
    }

    fn covariance_matrix(&self, points: &[Vec<f64>]) -> DMatrix<f64> {
        let prior = self.prior.kernel.matrix(points);
        if self.design.is_empty() {
            return prior;
        }
        let cross = self.prior.kernel.cross_matrix(self.design.points(), points);
        let w = self
            .l
            .solve_lower_triangular(&cross)
            .expect("Cholesky factor has a positive diagonal");
        let mut cov = prior - w.transpose() * &w;
        // exact symmetry
        let n = cov.nrows();
        for i in 0..n {
            for j in 0..i {
                let s = 0.5 * (cov[(i, j)] + cov[(j, i)]);
                cov[(i, j)] = s;
                cov[(j, i)] = s;
            }
        }
        cov
    }

    fn scale(&self) -> f64 {
        self.prior.kernel.variance()
    }
}

/// Draws joint samples of a process on a fixed grid, reusing one factorization.
#[derive(Debug, Clone)]
pub struct GridSampler {
    mean: DVector<f64>,
    factor: DMatrix<f64>,
    jitter: f64,
}

impl GridSampler {
    pub fn new<G: GaussianProcess + ?Sized>(process: &G, grid: &[Vec<f64>]) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::InvalidArgument("sample grid is empty".into()));
        }
        let dim = process.dim().unwrap_or(grid[0].len());
        for p in grid {
            check_dim(dim, p.len())?;
        }
        let cov = process.covariance_matrix(grid);
        let (chol, jitter) = factorize_with_jitter(&cov, process.scale())?;
        Ok(GridSampler {
            mean: process.mean_vector(grid),
            factor: chol.unpack(),
            jitter,
        })
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// Pointwise standard deviations of the (jittered) grid covariance.
    pub fn std_devs(&self) -> Vec<f64> {
        self.factor.row_iter().map(|r| r.norm()).collect()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.mean.len();
        let z = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let path = &self.mean + &self.factor * z;
        path.iter().copied().collect()
    }
}

/// One sample path of `process` on `grid`, deterministic in `seed`.
pub fn sample_path_on_grid<G: GaussianProcess + ?Sized>(
    process: &G,
    grid: &[Vec<f64>],
    seed: u64,
) -> Result<Vec<f64>> {
    let sampler = GridSampler::new(process, grid)?;
    Ok(sampler.draw(&mut rng::seeded(seed)))
}

/// Search box and grid size for [`fit_hyperparameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct HyperparameterSearch {
    pub lengthscale: (f64, f64),
    pub variance: (f64, f64),
    pub grid_points: usize,
    pub noise_variance: f64,
    pub mean: MeanFunction,
}

impl Default for HyperparameterSearch {
    fn default() -> Self {
        HyperparameterSearch {
            lengthscale: (1e-2, 1e2),
            variance: (1e-3, 1e3),
            grid_points: 25,
            noise_variance: 0.0,
            mean: MeanFunction::Zero,
        }
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![(lo * hi).sqrt()];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Golden-section maximization of `f` on [lo, hi].
fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximizes the log marginal likelihood over (λ, σ_k²).
///
/// A `grid_points × grid_points` logarithmic grid is scanned first (ties go to
/// the larger lengthscale), then each coordinate gets one golden-section
/// refinement in log space between the neighbouring grid values.
pub fn fit_hyperparameters(
    family: KernelFamily,
    design: &Design,
    observations: &[f64],
    search: &HyperparameterSearch,
) -> Result<KernelSpec> {
    let (l_lo, l_hi) = search.lengthscale;
    let (v_lo, v_hi) = search.variance;
    if search.grid_points == 0 || !(l_lo > 0.0 && l_lo <= l_hi && v_lo > 0.0 && v_lo <= v_hi) {
        return Err(Error::InvalidArgument(format!(
            "bad hyperparameter search box: lengthscale {:?}, variance {:?}, {} grid points",
            search.lengthscale, search.variance, search.grid_points
        )));
    }
    let objective = |lengthscale: f64, variance: f64| -> f64 {
        KernelSpec::new(family, lengthscale, variance)
            .and_then(|k| {
                log_marginal_likelihood(
                    &GpPrior::new(search.mean.clone(), k),
                    design,
                    observations,
                    search.noise_variance,
                )
            })
            .ok()
            .filter(|v| v.is_finite())
            .unwrap_or(f64::NEG_INFINITY)
    };

    let lengthscales = log_grid(l_lo, l_hi, search.grid_points);
    let variances = log_grid(v_lo, v_hi, search.grid_points);
    let mut best: Option<(usize, usize, f64)> = None;
    for (i, &l) in lengthscales.iter().enumerate() {
        for (j, &v) in variances.iter().enumerate() {
            let value = objective(l, v);
            if value == f64::NEG_INFINITY {
                continue;
            }
            // lengthscales ascend, so `>=` resolves ties toward larger λ
            if best.is_none_or(|(_, _, b)| value >= b) {
                best = Some((i, j, value));
            }
        }
    }
    let (i, j, mut best_value) = best.ok_or(Error::IllConditioned {
        min_eigenvalue: f64::NAN,
        max_jitter: JITTER_LADDER[JITTER_LADDER.len() - 1] * v_hi,
    })?;
    let mut lengthscale = lengthscales[i];
    let mut variance = variances[j];

    let bracket = |grid: &[f64], k: usize| {
        let lo = grid[k.saturating_sub(1)];
        let hi = grid[(k + 1).min(grid.len() - 1)];
        (lo.ln(), hi.ln())
    };

    let (a, b) = bracket(&lengthscales, i);
    if b > a {
        let (x, fx) = golden_max(|t| objective(t.exp(), variance), a, b, 40);
        if fx > best_value {
            lengthscale = x.exp();
            best_value = fx;
        }
    }
    let (a, b) = bracket(&variances, j);
    if b > a {
        let (x, fx) = golden_max(|t| objective(lengthscale, t.exp()), a, b, 40);
        if fx > best_value {
            variance = x.exp();
        }
    }
    KernelSpec::new(family, lengthscale, variance)
}

/// RKHS norm of Σ c_i k(·, z_i), i.e. sqrt(cᵀ K c).
pub fn rkhs_norm<P: AsRef<[f64]>>(
    kernel: &KernelSpec,
    centers: &[P],
    coefficients: &[f64],
) -> Result<f64> {
    if centers.len() != coefficients.len() {
        return Err(Error::InvalidArgument(format!(
            "{} centers but {} coefficients",
            centers.len(),
            coefficients.len()
        )));
    }
    if let Some(first) = centers.first() {
        for c in centers {
            check_dim(first.as_ref().len(), c.as_ref().len())?;
        }
    }
    let k = kernel.matrix(centers);
    let c = DVector::from_column_slice(coefficients);
    Ok((c.dot(&(k * &c))).max(0.0).sqrt())
}
