//! Design studies: the posterior-weighted regression error e(N, ν) for
//! Gaussian and uniform design families, and fill-distance decay of i.i.d.
//! designs.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::bayes::{Prior, ScalarFormula};
use crate::config::{ConfigError, Resolver};
use crate::design::{fill_decay_study, truncation_region, DesignMeasure, FillRegion, FillStudyConfig, ReferenceDensity};
use crate::gp::MeanFunction;
use crate::kernels::{KernelFamily, KernelSpec};
use crate::metrics::{design_error_study, ErrorReport, ErrorStudySpec};
use crate::quadrature::BoxDomain;

use super::paths::read_formula;
use super::{invalid, key_value_csv, numerical, read_kernel, read_mean, MeanSpec, OutputDir, RunError};

fn read_n_list(r: &mut Resolver<'_>, default: Vec<usize>) -> Result<Vec<usize>, ConfigError> {
    let n: Vec<usize> = r.list("study", "n_list", default)?;
    if n.is_empty() || n.contains(&0) || n.windows(2).any(|w| w[0] >= w[1]) {
        return Err(r.invalid("study", "n_list", "need strictly increasing positive sizes"));
    }
    Ok(n)
}

fn read_replications(r: &mut Resolver<'_>, default: usize, min: usize) -> Result<usize, ConfigError> {
    let reps: usize = r.get("study", "replications", default)?;
    if reps < min {
        return Err(r.invalid("study", "replications", format!("need at least {min} replications")));
    }
    Ok(reps)
}

/// Settings shared by both e(N, ν) studies.
#[derive(Debug, Clone)]
struct ErrorSettings {
    target: ScalarFormula,
    target_name: String,
    kernel: KernelSpec,
    mean: MeanFunction,
    n_list: Vec<usize>,
    replications: usize,
    quadrature_nodes: usize,
}

fn read_error_settings(r: &mut Resolver<'_>) -> Result<ErrorSettings, ConfigError> {
    let target_name: String = r.get("study", "target", "identity".to_string())?;
    let file_target = read_formula(r, "study", "target", "identity")?;
    let kernel = read_kernel(r, "kernel", KernelFamily::SquaredExponential, 1.0, 1.0)?;
    let mean = match read_mean(r, "kernel", "zero")? {
        MeanSpec::Fixed(m) => m,
        MeanSpec::DataAverage => {
            return Err(r.invalid("kernel", "mean_value", "error studies need a fixed `mean_value`"));
        }
    };
    let n_list = read_n_list(r, vec![2, 4, 8, 16])?;
    let replications = read_replications(r, 1000, 2)?;
    let quadrature_nodes: usize = r.get("study", "quadrature_nodes", 1025)?;
    if quadrature_nodes < 3 {
        return Err(r.invalid("study", "quadrature_nodes", "need at least 3 nodes"));
    }
    Ok(ErrorSettings {
        target: file_target,
        target_name,
        kernel,
        mean,
        n_list,
        replications,
        quadrature_nodes,
    })
}

impl ErrorSettings {
    fn run(&self, weight: Prior, seed: u64, measures: &[(f64, DesignMeasure)]) -> Result<ErrorReport, RunError> {
        let spec = ErrorStudySpec {
            kernel: self.kernel,
            mean: self.mean.clone(),
            weight,
            n_list: self.n_list.clone(),
            replications: self.replications,
            seed,
            quadrature_nodes: self.quadrature_nodes,
            target: self.target_name.clone(),
        };
        let target = self.target.clone();
        let f = move |u: &[f64]| target.eval(u[0]);
        design_error_study(&f, &spec, measures).map_err(numerical("running the design study"))
    }
}

fn write_warnings(out: &mut OutputDir, report: &ErrorReport) -> Result<(), RunError> {
    if report.warnings.is_empty() {
        return Ok(());
    }
    out.text("warnings.txt", &(report.warnings.join("\n") + "\n"))
}

/// e(N, ν) for ν = N(c, σ²) over a log grid of σ, weighted by a Gaussian μ.
#[derive(Debug, Clone)]
pub struct GaussianStudyPlan {
    settings: ErrorSettings,
    sigmas: Vec<f64>,
    design_center: f64,
    posterior_mean: f64,
    posterior_variance: f64,
    ordering_n: usize,
    ordering_centers: Vec<f64>,
    ordering_sds: Vec<f64>,
}

impl GaussianStudyPlan {
    pub(crate) fn read(r: &mut Resolver<'_>) -> Result<Self, ConfigError> {
        let settings = read_error_settings(r)?;
        let lo = r.positive("study", "sigma_min", 0.1)?;
        let hi = r.positive("study", "sigma_max", 10.0)?;
        let points: usize = r.get("study", "sigma_points", 13)?;
        if !(lo < hi) || points < 2 {
            return Err(r.invalid("study", "sigma_points", "need sigma_min < sigma_max and at least 2 points"));
        }
        let sigmas = (0..points)
            .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (points - 1) as f64).exp())
            .collect();
        let design_center: f64 = r.get("study", "design_center", 1.0)?;
        let posterior_mean: f64 = r.get("study", "posterior_mean", 1.0)?;
        let posterior_variance = r.positive("study", "posterior_variance", 1.0)?;
        let ordering_n: usize = r.get("ordering", "n", 8)?;
        let ordering_centers: Vec<f64> = r.list("ordering", "centers", vec![1.0, 1.0, -3.0])?;
        let ordering_sds: Vec<f64> = r.list("ordering", "std_devs", vec![1.0, 0.1, 1.0])?;
        if ordering_centers.len() != ordering_sds.len() {
            return Err(r.invalid("ordering", "std_devs", "needs one entry per center"));
        }
        if ordering_sds.iter().any(|s| !(*s > 0.0)) {
            return Err(r.invalid("ordering", "std_devs", "must be positive"));
        }
        if ordering_n == 0 && !ordering_centers.is_empty() {
            return Err(r.invalid("ordering", "n", "must be positive"));
        }
        Ok(GaussianStudyPlan {
            settings,
            sigmas,
            design_center,
            posterior_mean,
            posterior_variance,
            ordering_n,
            ordering_centers,
            ordering_sds,
        })
    }

    pub(crate) fn execute(&self, out: &mut OutputDir) -> Result<(), RunError> {
        let weight =
            Prior::gaussian(vec![self.posterior_mean], vec![self.posterior_variance]).map_err(numerical("building μ"))?;
        let measures = self
            .sigmas
            .iter()
            .map(|&s| Ok((s, DesignMeasure::gaussian(vec![self.design_center], vec![s])?)))
            .collect::<crate::Result<Vec<_>>>()
            .map_err(numerical("building design measures"))?;
        let report = self.settings.run(weight.clone(), out.seed(), &measures)?;
        out.csv("errors", &report.to_csv())?;

        let mut argmin = String::from("N,argmin_sigma,e_min,std_error\n");
        for &n in &self.settings.n_list {
            let best = report
                .cells
                .iter()
                .filter(|c| c.n == n)
                .min_by(|a, b| a.estimate.total_cmp(&b.estimate))
                .expect("every N has cells");
            argmin.push_str(&format!("{n},{:e},{:e},{:e}\n", best.measure_param, best.estimate, best.std_error));
        }
        out.csv("argmin", &argmin)?;

        if !self.ordering_centers.is_empty() {
            let measures = self
                .ordering_centers
                .iter()
                .zip(&self.ordering_sds)
                .enumerate()
                .map(|(i, (&c, &s))| Ok((i as f64, DesignMeasure::gaussian(vec![c], vec![s])?)))
                .collect::<crate::Result<Vec<_>>>()
                .map_err(numerical("building design measures"))?;
            let settings = ErrorSettings {
                n_list: vec![self.ordering_n],
                ..self.settings.clone()
            };
            // A separate block of streams, so the ordering run does not reuse
            // the main study's designs.
            let ordering = settings.run(weight, out.seed().wrapping_add(1), &measures)?;
            let mut csv = String::from("center,std_dev,N,e_estimate,std_error\n");
            for (cell, (c, s)) in ordering.cells.iter().zip(self.ordering_centers.iter().zip(&self.ordering_sds)) {
                csv.push_str(&format!("{c:e},{s:e},{},{:e},{:e}\n", cell.n, cell.estimate, cell.std_error));
            }
            out.csv("ordering", &csv)?;
        }
        write_warnings(out, &report)
    }
}

/// e(N, ν) for ν = U[−ε, ε], weighted by a uniform μ.
#[derive(Debug, Clone)]
pub struct UniformStudyPlan {
    settings: ErrorSettings,
    epsilons: Vec<f64>,
    lower: f64,
    upper: f64,
}

impl UniformStudyPlan {
    pub(crate) fn read(r: &mut Resolver<'_>) -> Result<Self, ConfigError> {
        let settings = read_error_settings(r)?;
        let epsilons: Vec<f64> = r.list("study", "epsilons", vec![0.25, 0.5, 1.0, 2.0])?;
        if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0)) {
            return Err(r.invalid("study", "epsilons", "need positive half-widths"));
        }
        let lower: f64 = r.get("study", "posterior_lower", -1.0)?;
        let upper: f64 = r.get("study", "posterior_upper", 1.0)?;
        if !(lower < upper) {
            return Err(r.invalid("study", "posterior_upper", "need posterior_lower < posterior_upper"));
        }
        Ok(UniformStudyPlan {
            settings,
            epsilons,
            lower,
            upper,
        })
    }

    pub(crate) fn execute(&self, out: &mut OutputDir) -> Result<(), RunError> {
        let weight = Prior::uniform(vec![self.lower], vec![self.upper]).map_err(numerical("building μ"))?;
        let measures = self
            .epsilons
            .iter()
            .map(|&e| Ok((e, DesignMeasure::uniform(BoxDomain::interval(-e, e)?))))
            .collect::<crate::Result<Vec<_>>>()
            .map_err(numerical("building design measures"))?;
        let report = self.settings.run(weight, out.seed(), &measures)?;
        out.csv("errors", &report.to_csv())?;
        write_warnings(out, &report)
    }
}

#[derive(Debug, Clone)]
enum MeasureChoice {
    Uniform,
    Gaussian { center: Vec<f64>, std_devs: Vec<f64> },
    /// Uniform on the truncated region.
    Truncated,
}

/// Fill-distance decay of i.i.d. designs.
#[derive(Debug, Clone)]
pub struct FillPlan {
    domain: BoxDomain,
    measure: MeasureChoice,
    /// Gaussian reference density and absolute threshold of a truncated region.
    truncation: Option<(Vec<f64>, Vec<f64>, f64)>,
    config: FillStudyConfig,
}

fn gaussian_density(center: Vec<f64>, std_devs: Vec<f64>) -> ReferenceDensity {
    Arc::new(move |u: &[f64]| {
        u.iter()
            .zip(center.iter().zip(&std_devs))
            .map(|(x, (m, s))| (-0.5 * ((x - m) / s).powi(2)).exp() / (s * (2.0 * PI).sqrt()))
            .product()
    })
}

impl FillPlan {
    pub(crate) fn read(r: &mut Resolver<'_>) -> Result<Self, ConfigError> {
        let dim: usize = r.get("study", "dim", 1)?;
        if !(1..=2).contains(&dim) {
            return Err(r.invalid("study", "dim", "fill-distance studies support dim 1 or 2"));
        }
        let lower = per_dim_in(r, "study", "lower", 0.0, dim)?;
        let upper = per_dim_in(r, "study", "upper", 1.0, dim)?;
        let domain = BoxDomain::new(lower, upper).map_err(invalid(r, "study", "upper"))?;
        let default_n = vec![16, 32, 64, 128, 256, 512, 1024];
        let n_list = read_n_list(r, default_n)?;
        if n_list.len() < 2 {
            return Err(r.invalid("study", "n_list", "need at least two sizes for a slope"));
        }
        let replications = read_replications(r, 200, 30)?;
        let resolution: usize = r.get("study", "resolution", 256)?;
        if resolution < 2 {
            return Err(r.invalid("study", "resolution", "need at least 2 points per axis"));
        }
        let tail_threshold = r.optional::<f64>("study", "tail_threshold")?;

        let region: String = r.get("region", "kind", "box".to_string())?;
        let truncation = match region.as_str() {
            "box" => None,
            "truncated" => {
                let center = per_dim_in(r, "region", "center", 0.5, dim)?;
                let sds = per_dim_in(r, "region", "std_devs", 0.2, dim)?;
                if sds.iter().any(|s| !(*s > 0.0)) {
                    return Err(r.invalid("region", "std_devs", "must be positive"));
                }
                let t: f64 = r.require("region", "threshold")?;
                if !(t >= 0.0) {
                    return Err(r.invalid("region", "threshold", "must be >= 0"));
                }
                Some((center, sds, t))
            }
            other => return Err(r.invalid("region", "kind", format!("unknown region `{other}` (expected box or truncated)"))),
        };

        let kind: String = r.get("measure", "kind", "uniform".to_string())?;
        let measure = match kind.as_str() {
            "uniform" => MeasureChoice::Uniform,
            "gaussian" => {
                let center = per_dim_in(r, "measure", "center", 0.5, dim)?;
                let std_devs = per_dim_in(r, "measure", "std_devs", 0.25, dim)?;
                DesignMeasure::gaussian(center.clone(), std_devs.clone()).map_err(invalid(r, "measure", "std_devs"))?;
                MeasureChoice::Gaussian { center, std_devs }
            }
            "truncated" => {
                if truncation.is_none() {
                    return Err(r.invalid("measure", "kind", "a truncated measure needs [region] kind = truncated"));
                }
                MeasureChoice::Truncated
            }
            other => {
                return Err(r.invalid(
                    "measure",
                    "kind",
                    format!("unknown measure `{other}` (expected uniform, gaussian or truncated)"),
                ))
            }
        };
        Ok(FillPlan {
            domain,
            measure,
            truncation,
            config: FillStudyConfig {
                n_list,
                replications,
                seed: 0,
                resolution,
                tail_threshold,
            },
        })
    }

    pub(crate) fn execute(&self, out: &mut OutputDir) -> Result<(), RunError> {
        let region = match &self.truncation {
            None => FillRegion::Box(self.domain.clone()),
            Some((c, s, t)) => FillRegion::Truncated(
                truncation_region(gaussian_density(c.clone(), s.clone()), *t, self.domain.clone(), 4097)
                    .map_err(numerical("building the truncated region"))?,
            ),
        };
        let measure = match &self.measure {
            MeasureChoice::Uniform => DesignMeasure::uniform(self.domain.clone()),
            MeasureChoice::Gaussian { center, std_devs } => DesignMeasure::gaussian(center.clone(), std_devs.clone())
                .map_err(numerical("building the design measure"))?,
            MeasureChoice::Truncated => {
                let (c, s, t) = self.truncation.clone().expect("checked when reading");
                DesignMeasure::truncated(gaussian_density(c, s), t, self.domain.clone())
                    .map_err(numerical("building the design measure"))?
            }
        };
        let cfg = FillStudyConfig {
            seed: out.seed(),
            ..self.config.clone()
        };
        let study = fill_decay_study(&measure, &region, &cfg).map_err(numerical("running the fill-distance study"))?;
        out.csv("fill_samples", &study.samples_csv())?;
        out.csv("fill_summary", &study.summary_csv())?;
        let rows = [
            ("slope", format!("{:e}", study.slope)),
            ("tail_threshold", format!("{:e}", study.tail_threshold)),
            ("dim", self.domain.dim().to_string()),
            ("replications", cfg.replications.to_string()),
        ];
        out.csv("fill_fit", &key_value_csv(&rows))
    }
}

fn per_dim_in(r: &mut Resolver<'_>, section: &str, key: &str, default: f64, dim: usize) -> Result<Vec<f64>, ConfigError> {
    let v: Vec<f64> = r.list(section, key, vec![default])?;
    match v.len() {
        1 => Ok(vec![v[0]; dim]),
        n if n == dim => Ok(v),
        n => Err(r.invalid(section, key, format!("expected 1 or {dim} entries, got {n}"))),
    }
}
