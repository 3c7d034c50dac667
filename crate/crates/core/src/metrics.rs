//! Hellinger distances, posterior-weighted L² errors and the replicated
//! design-error functional `e(N, ν) = ∫ E_ν |m_N(u) − f(u)|² μ(du)`.

use rayon::prelude::*;

use crate::bayes::Prior;
use crate::design::DesignMeasure;
use crate::error::{Error, Result};
use crate::gp::{GpPosterior, GpPrior, MeanFunction};
use crate::kernels::KernelSpec;
use crate::quadrature::QuadratureGrid;
use crate::rng;

/// Mass mismatch beyond which densities are renormalized with a warning.
const MASS_TOLERANCE: f64 = 1e-3;

fn normalized_values(values: Vec<f64>, grid: &QuadratureGrid, label: &str) -> Result<Vec<f64>> {
    if let Some(bad) = values.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::InvalidArgument(format!("{label} density has a negative or NaN value {bad}")));
    }
    let mass = grid.integrate_values(&values);
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidArgument(format!("{label} density has zero mass on the grid")));
    }
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        log::warn!("{label} density integrates to {mass} on the grid; renormalizing");
        Ok(values.into_iter().map(|v| v / mass).collect())
    } else {
        Ok(values)
    }
}

/// Hellinger distance between two densities tabulated on `grid`.
pub fn hellinger_values(p: &[f64], q: &[f64], grid: &QuadratureGrid) -> Result<f64> {
    if p.len() != grid.len() || q.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: p.len().min(q.len()),
        });
    }
    let p = normalized_values(p.to_vec(), grid, "first")?;
    let q = normalized_values(q.to_vec(), grid, "second")?;
    let sq: Vec<f64> = p
        .iter()
        .zip(&q)
        .map(|(a, b)| {
            let d = a.sqrt() - b.sqrt();
            d * d
        })
        .collect();
    Ok((0.5 * grid.integrate_values(&sq)).max(0.0).sqrt())
}

/// Hellinger distance `(½ ∫ (√p − √q)²)^{1/2}` by the trapezoid rule.
pub fn hellinger<P, Q>(p: P, q: Q, grid: &QuadratureGrid) -> Result<f64>
where
    P: Fn(&[f64]) -> f64 + Sync,
    Q: Fn(&[f64]) -> f64 + Sync,
{
    let pv: Vec<f64> = grid.points().par_iter().map(|u| p(u)).collect();
    let qv: Vec<f64> = grid.points().par_iter().map(|u| q(u)).collect();
    hellinger_values(&pv, &qv, grid)
}

/// Closed-form Hellinger distance between N(m1, s1²) and N(m2, s2²).
pub fn gaussian_hellinger(m1: f64, s1: f64, m2: f64, s2: f64) -> f64 {
    let v = s1 * s1 + s2 * s2;
    let h2 = 1.0 - (2.0 * s1 * s2 / v).sqrt() * (-(m1 - m2).powi(2) / (4.0 * v)).exp();
    h2.max(0.0).sqrt()
}

/// `(∫ (f − approx)² w)^{1/2}` on `grid`, with `w` renormalized as in
/// [`hellinger`].
pub fn weighted_l2_error<F, A, W>(f: F, approx: A, weight: W, grid: &QuadratureGrid) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
    A: Fn(&[f64]) -> f64 + Sync,
    W: Fn(&[f64]) -> f64 + Sync,
{
    let w: Vec<f64> = grid.points().par_iter().map(|u| weight(u)).collect();
    let w = normalized_values(w, grid, "weight")?;
    let sq: Vec<f64> = grid
        .points()
        .par_iter()
        .zip(&w)
        .map(|(u, wi)| {
            let d = f(u) - approx(u);
            d * d * wi
        })
        .collect();
    Ok(grid.integrate_values(&sq).max(0.0).sqrt())
}

/// `∫ |m_N(u) − f(u)|² μ(du)` for one fitted GP; `weights` are the quadrature
/// weights already multiplied by μ.
fn squared_error(f: &(dyn Fn(&[f64]) -> f64 + Sync), gp: &GpPosterior, grid: &QuadratureGrid, weights: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (u, w) in grid.points().iter().zip(weights) {
        if *w == 0.0 {
            continue;
        }
        let d = gp.predict_mean(u)? - f(u);
        total += w * d * d;
    }
    Ok(total)
}

/// Settings of [`design_error_study`].
#[derive(Debug, Clone)]
pub struct ErrorStudySpec {
    pub kernel: KernelSpec,
    pub mean: MeanFunction,
    /// The weighting measure μ; its effective support is the integration box.
    pub weight: Prior,
    pub n_list: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    /// Trapezoid nodes per axis.
    pub quadrature_nodes: usize,
    /// Free-form label of the regression target, copied into the report.
    pub target: String,
}

/// One `(N, ν)` cell of an error study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorCell {
    pub n: usize,
    pub measure_param: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub replications: usize,
    pub resamples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub cells: Vec<ErrorCell>,
    pub kernel: KernelSpec,
    pub target: String,
    pub weight: String,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl ErrorReport {
    pub fn cell(&self, n: usize, measure_param: f64) -> Option<&ErrorCell> {
        self.cells.iter().find(|c| c.n == n && c.measure_param == measure_param)
    }

    /// `N,measure_param,e_estimate,std_error,resamples`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("N,measure_param,e_estimate,std_error,resamples\n");
        for c in &self.cells {
            s.push_str(&format!(
                "{},{:e},{:e},{:e},{}\n",
                c.n, c.measure_param, c.estimate, c.std_error, c.resamples
            ));
        }
        s
    }
}

/// Failed fits tolerated per replicate before giving up.
const MAX_RESAMPLES_PER_REPLICATE: usize = 100;

/// Monte Carlo estimate of `e(N, ν)` for every `(measure, N)` pair. Each
/// replicate samples a design, fits a noise-free GP to `f` and integrates
/// the squared error of its mean against μ. A design whose kernel matrix
/// cannot be factorized is redrawn and counted as a resample.
///
/// Replicate `r` of cell `c` (cells ordered measure-major) draws from RNG
/// stream `c·R + r`; replicate errors are summed in sorted order, so the
/// result does not depend on scheduling.
pub fn design_error_study(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    spec: &ErrorStudySpec,
    measures: &[(f64, DesignMeasure)],
) -> Result<ErrorReport> {
    if spec.replications == 0 {
        return Err(Error::InvalidArgument("error studies need >= 1 replication".into()));
    }
    if spec.n_list.is_empty() || spec.n_list.contains(&0) {
        return Err(Error::InvalidArgument("N list must be non-empty with positive sizes".into()));
    }
    for (_, m) in measures {
        crate::error::check_dim(spec.weight.dim(), m.dim())?;
    }
    let grid = QuadratureGrid::trapezoid(spec.weight.effective_support(), spec.quadrature_nodes)?;
    let weights: Vec<f64> = grid
        .points()
        .iter()
        .zip(grid.weights())
        .map(|(u, w)| w * spec.weight.density(u))
        .collect();
    let prior = GpPrior::new(spec.mean.clone(), spec.kernel);
    let r = spec.replications;

    let cells: Vec<(f64, &DesignMeasure, usize)> = measures
        .iter()
        .flat_map(|(p, m)| spec.n_list.iter().map(move |&n| (*p, m, n)))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..r).map(move |k| (c, k))).collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(c, k)| {
            let (_, measure, n) = cells[c];
            let mut g = rng::stream(spec.seed, (c * r + k) as u64);
            let mut resamples = 0;
            loop {
                let design = measure.sample_with(n, &mut g)?;
                let values: Vec<f64> = design.points().iter().map(|u| f(u)).collect();
                match GpPosterior::fit(prior.clone(), design, &values, 0.0) {
                    Ok(gp) => return Ok((squared_error(f, &gp, &grid, &weights)?, resamples)),
                    Err(Error::IllConditioned { .. }) if resamples < MAX_RESAMPLES_PER_REPLICATE => resamples += 1,
                    Err(e) => return Err(e),
                }
            }
        })
        .collect::<Result<Vec<(f64, usize)>>>()?;

    let mut warnings = Vec::new();
    let report_cells = cells
        .iter()
        .zip(outcomes.chunks(r))
        .map(|(&(param, _, n), chunk)| {
            let mut errs: Vec<f64> = chunk.iter().map(|(e, _)| *e).collect();
            errs.sort_by(f64::total_cmp);
            let resamples: usize = chunk.iter().map(|(_, s)| s).sum();
            let rf = r as f64;
            let mean = errs.iter().sum::<f64>() / rf;
            let var = if r > 1 {
                errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (rf - 1.0)
            } else {
                0.0
            };
            if resamples as f64 > 0.1 * rf {
                warnings.push(format!(
                    "N = {n}, measure parameter {param}: {resamples} resamples for {r} replications"
                ));
            }
            ErrorCell {
                n,
                measure_param: param,
                estimate: mean,
                std_error: (var / rf).sqrt(),
                replications: r,
                resamples,
            }
        })
        .collect();
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(ErrorReport {
        cells: report_cells,
        kernel: spec.kernel,
        target: spec.target.clone(),
        weight: format!("{:?}", spec.weight),
        seed: spec.seed,
        warnings,
    })
}

/// Integrated squared error of a fitted GP mean against μ, on the same grid a
/// [`design_error_study`] with these settings would use.
pub fn integrated_squared_error(
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    gp: &GpPosterior,
    weight: &Prior,
    quadrature_nodes: usize,
) -> Result<f64> {
    let grid = QuadratureGrid::trapezoid(weight.effective_support(), quadrature_nodes)?;
    let weights: Vec<f64> = grid
        .points()
        .iter()
        .zip(grid.weights())
        .map(|(u, w)| w * weight.density(u))
        .collect();
    squared_error(f, gp, &grid, &weights)
}
