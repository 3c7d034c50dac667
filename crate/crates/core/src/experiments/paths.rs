//! `sample-paths` and `regress`.

use crate::bayes::ScalarFormula;
use crate::config::{ConfigError, Resolver};
use crate::gp::{fit_hyperparameters, Design, GpPosterior, GpPrior, GridSampler, HyperparameterSearch};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::quadrature::linspace;
use crate::rng;

use super::{invalid, key_value_csv, lag1_autocorrelation, numerical, read_kernel, read_mean, MeanSpec, OutputDir, RunError};

pub(crate) fn read_formula(r: &mut Resolver<'_>, section: &str, key: &str, default: &str) -> Result<ScalarFormula, ConfigError> {
    let name: String = r.get(section, key, default.to_string())?;
    match name.as_str() {
        "sin_shifted_square" => Ok(ScalarFormula::SinShiftedSquare),
        "identity" => Ok(ScalarFormula::Linear {
            slope: 1.0,
            intercept: 0.0,
        }),
        other => Err(r.invalid(
            section,
            key,
            format!("unknown target `{other}` (expected sin_shifted_square or identity)"),
        )),
    }
}

pub(crate) fn read_grid(r: &mut Resolver<'_>, lower: f64, upper: f64, points: usize) -> Result<Vec<f64>, ConfigError> {
    let lo: f64 = r.get("grid", "lower", lower)?;
    let hi: f64 = r.get("grid", "upper", upper)?;
    let n: usize = r.get("grid", "points", points)?;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(r.invalid("grid", "upper", format!("grid needs lower < upper, got [{lo}, {hi}]")));
    }
    if n < 2 {
        return Err(r.invalid("grid", "points", "need at least 2 grid points"));
    }
    Ok(linspace(lo, hi, n))
}

fn panel_header(paths: usize) -> String {
    let mut s = String::from("panel,family,lengthscale,variance,x,mean,sd,lower,upper");
    for p in 1..=paths {
        s.push_str(&format!(",path_{p}"));
    }
    s.push('\n');
    s
}

struct Panel {
    kernel: KernelSpec,
    mean: Vec<f64>,
    sd: Vec<f64>,
    paths: Vec<Vec<f64>>,
}

fn write_panels(out: &mut String, grid: &[f64], panels: &[Panel]) {
    for (i, p) in panels.iter().enumerate() {
        for (j, x) in grid.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{x:e},{:e},{:e},{:e},{:e}",
                i + 1,
                p.kernel.family(),
                p.kernel.lengthscale(),
                p.kernel.variance(),
                p.mean[j],
                p.sd[j],
                p.mean[j] - p.sd[j],
                p.mean[j] + p.sd[j]
            ));
            for path in &p.paths {
                out.push_str(&format!(",{:e}", path[j]));
            }
            out.push('\n');
        }
    }
}

/// Prior sample paths for each (family, λ) pair, and posterior paths after
/// conditioning on a few evaluations of a target function.
#[derive(Debug, Clone)]
pub struct SamplePathsPlan {
    grid: Vec<f64>,
    prior_families: Vec<KernelFamily>,
    prior_lengthscales: Vec<f64>,
    prior_variance: f64,
    paths: usize,
    posterior_families: Vec<KernelFamily>,
    design: Vec<f64>,
    target: ScalarFormula,
    fit: bool,
    posterior_lengthscale: f64,
    posterior_variance: f64,
}

impl SamplePathsPlan {
    pub(crate) fn read(r: &mut Resolver<'_>) -> Result<Self, ConfigError> {
        let grid = read_grid(r, 0.0, 5.0, 201)?;
        let families = |r: &mut Resolver<'_>, section: &str| -> Result<Vec<KernelFamily>, ConfigError> {
            let names: Vec<String> = r.list(section, "families", vec!["matern12".into(), "sqexp".into()])?;
            names
                .iter()
                .map(|n| n.parse::<KernelFamily>().map_err(invalid(r, section, "families")))
                .collect()
        };
        let prior_families = families(r, "prior")?;
        let prior_lengthscales: Vec<f64> = r.list("prior", "lengthscales", vec![1.0, 0.1])?;
        if prior_lengthscales.is_empty() || prior_lengthscales.iter().any(|l| !(*l > 0.0)) {
            return Err(r.invalid("prior", "lengthscales", "lengthscales must be positive"));
        }
        let prior_variance = r.positive("prior", "variance", 1.0)?;
        let paths: usize = r.get("prior", "paths", 5)?;
        if paths == 0 {
            return Err(r.invalid("prior", "paths", "need at least one path"));
        }
        let posterior_families = families(r, "posterior")?;
        let design: Vec<f64> = r.list("posterior", "design", vec![1.0, 2.5, 4.0])?;
        if design.is_empty() {
            return Err(r.invalid("posterior", "design", "need at least one design point"));
        }
        let target = read_formula(r, "posterior", "target", "sin_shifted_square")?;
        let fit: bool = r.get("posterior", "fit_hyperparameters", true)?;
        let posterior_lengthscale = r.positive("posterior", "lengthscale", 0.1)?;
        let posterior_variance = r.positive("posterior", "variance", 0.3969)?;
        Ok(SamplePathsPlan {
            grid,
            prior_families,
            prior_lengthscales,
            prior_variance,
            paths,
            posterior_families,
            design,
            target,
            fit,
            posterior_lengthscale,
            posterior_variance,
        })
    }

    pub(crate) fn execute(&self, out: &mut OutputDir) -> Result<(), RunError> {
        let grid_pts: Vec<Vec<f64>> = self.grid.iter().map(|&x| vec![x]).collect();
        let mut summary = String::from("stage,panel,family,lengthscale,variance,lag1_autocorrelation,jitter\n");
        let mut stream = 0u64;

        let mut prior_panels = Vec::new();
        for &family in &self.prior_families {
            for &l in &self.prior_lengthscales {
                let kernel = KernelSpec::new(family, l, self.prior_variance).map_err(numerical("building a kernel"))?;
                let sampler =
                    GridSampler::new(&GpPrior::zero_mean(kernel), &grid_pts).map_err(numerical("factorizing the prior"))?;
                let mut g = rng::stream(out.seed(), stream);
                stream += 1;
                let paths: Vec<Vec<f64>> = (0..self.paths).map(|_| sampler.draw(&mut g)).collect();
                let ac = paths.iter().map(|p| lag1_autocorrelation(p)).sum::<f64>() / paths.len() as f64;
                summary.push_str(&format!(
                    "prior,{},{family},{l},{},{ac:e},{:e}\n",
                    prior_panels.len() + 1,
                    self.prior_variance,
                    sampler.jitter()
                ));
                prior_panels.push(Panel {
                    kernel,
                    mean: vec![0.0; self.grid.len()],
                    sd: vec![self.prior_variance.sqrt(); self.grid.len()],
                    paths,
                });
            }
        }
        let mut csv = panel_header(self.paths);
        write_panels(&mut csv, &self.grid, &prior_panels);
        out.csv("prior_paths", &csv)?;

        let design = Design::from_scalars(&self.design);
        let values: Vec<f64> = self.design.iter().map(|&x| self.target.eval(x)).collect();
        let mut post_panels = Vec::new();
        let mut hyper = String::from("family,lengthscale,variance,log_marginal_likelihood\n");
        for &family in &self.posterior_families {
            let kernel = if self.fit {
                fit_hyperparameters(family, &design, &values, &HyperparameterSearch::default())
                    .map_err(numerical("fitting hyperparameters"))?
            } else {
                KernelSpec::new(family, self.posterior_lengthscale, self.posterior_variance)
                    .map_err(numerical("building a kernel"))?
            };
            let gp = GpPosterior::fit(GpPrior::zero_mean(kernel), design.clone(), &values, 0.0)
                .map_err(numerical("conditioning on the design"))?;
            hyper.push_str(&format!(
                "{family},{:e},{:e},{:e}\n",
                kernel.lengthscale(),
                kernel.variance(),
                gp.log_marginal_likelihood()
            ));
            let (mean, var): (Vec<f64>, Vec<f64>) = grid_pts
                .iter()
                .map(|u| gp.predict(u))
                .collect::<crate::Result<Vec<_>>>()
                .map_err(numerical("predicting on the grid"))?
                .into_iter()
                .unzip();
            let sampler = GridSampler::new(&gp, &grid_pts).map_err(numerical("factorizing the posterior"))?;
            let mut g = rng::stream(out.seed(), stream);
            stream += 1;
            let paths: Vec<Vec<f64>> = (0..self.paths).map(|_| sampler.draw(&mut g)).collect();
            let ac = paths.iter().map(|p| lag1_autocorrelation(p)).sum::<f64>() / paths.len() as f64;
            summary.push_str(&format!(
                "posterior,{},{family},{:e},{:e},{ac:e},{:e}\n",
                post_panels.len() + 1,
                kernel.lengthscale(),
                kernel.variance(),
                sampler.jitter()
            ));
            post_panels.push(Panel {
                kernel,
                mean,
                sd: var.iter().map(|v| v.sqrt()).collect(),
                paths,
            });
        }
        let mut csv = panel_header(self.paths);
        write_panels(&mut csv, &self.grid, &post_panels);
        out.csv("posterior_paths", &csv)?;
        out.csv("hyperparameters", &hyper)?;
        out.csv("path_summary", &summary)
    }
}

/// GP regression of scalar data on a 1D grid.
#[derive(Debug, Clone)]
pub struct RegressPlan {
    points: Vec<f64>,
    values: Vec<f64>,
    kernel: KernelSpec,
    fit: bool,
    mean: MeanSpec,
    noise_variance: f64,
    grid: Vec<f64>,
}

impl RegressPlan {
    pub(crate) fn read(r: &mut Resolver<'_>) -> Result<Self, ConfigError> {
        let points: Vec<f64> = r.list("data", "points", vec![1.0, 2.5, 4.0])?;
        if points.is_empty() {
            return Err(r.invalid("data", "points", "need at least one point"));
        }
        let values = match r.optional_list::<f64>("data", "values")? {
            Some(v) => {
                if v.len() != points.len() {
                    return Err(r.invalid(
                        "data",
                        "values",
                        format!("{} values for {} points", v.len(), points.len()),
                    ));
                }
                if r.optional::<String>("data", "target")?.is_some() {
                    return Err(r.invalid("data", "target", "give either `values` or `target`, not both"));
                }
                v
            }
            None => {
                let f = read_formula(r, "data", "target", "sin_shifted_square")?;
                points.iter().map(|&x| f.eval(x)).collect()
            }
        };
        let kernel = read_kernel(r, "kernel", KernelFamily::SquaredExponential, 1.0, 1.0)?;
        let fit: bool = r.get("kernel", "fit_hyperparameters", false)?;
        let mean = read_mean(r, "kernel", "zero")?;
        let noise_variance: f64 = r.get("regress", "noise_variance", 0.0)?;
        if !(noise_variance >= 0.0) {
            return Err(r.invalid("regress", "noise_variance", "must be >= 0"));
        }
        let lo = points.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
        let hi = points.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 1.0;
        let grid = read_grid(r, lo, hi, 201)?;
        Ok(RegressPlan {
            points,
            values,
            kernel,
            fit,
            mean,
            noise_variance,
            grid,
        })
    }

    pub(crate) fn execute(&self, out: &mut OutputDir) -> Result<(), RunError> {
        let design = Design::from_scalars(&self.points);
        let mean = self.mean.resolve(&self.values);
        let kernel = if self.fit {
            let search = HyperparameterSearch {
                noise_variance: self.noise_variance,
                mean: mean.clone(),
                ..HyperparameterSearch::default()
            };
            fit_hyperparameters(self.kernel.family(), &design, &self.values, &search)
                .map_err(numerical("fitting hyperparameters"))?
        } else {
            self.kernel
        };
        let gp = GpPosterior::fit(GpPrior::new(mean, kernel), design, &self.values, self.noise_variance)
            .map_err(numerical("conditioning on the data"))?;
        let mut csv = String::from("x,mean,sd,lower,upper\n");
        for &x in &self.grid {
            let (m, v) = gp.predict(&[x]).map_err(numerical("predicting on the grid"))?;
            let s = v.sqrt();
            csv.push_str(&format!("{x:e},{m:e},{s:e},{:e},{:e}\n", m - s, m + s));
        }
        out.csv("predictions", &csv)?;
        let rows = [
            ("family", kernel.family().to_string()),
            ("lengthscale", format!("{:e}", kernel.lengthscale())),
            ("variance", format!("{:e}", kernel.variance())),
            ("noise_variance", format!("{:e}", self.noise_variance)),
            ("log_marginal_likelihood", format!("{:e}", gp.log_marginal_likelihood())),
            ("jitter", format!("{:e}", gp.jitter())),
            ("variance_clamps", gp.clamp_count().to_string()),
        ];
        out.csv("fit", &key_value_csv(&rows))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigFile;

    fn regress(text: &str) -> Result<RegressPlan, ConfigError> {
        let f = ConfigFile::parse(text).unwrap();
        RegressPlan::read(&mut Resolver::new(&f))
    }

    #[test]
    fn regress_takes_values_or_target_but_not_both() {
        assert!(regress("[data]\npoints = 0,1\nvalues = 2,3\n").is_ok());
        assert!(regress("[data]\npoints = 0,1\ntarget = identity\n").is_ok());
        let e = regress("[data]\npoints = 0,1\nvalues = 2,3\ntarget = identity\n").unwrap_err();
        assert_eq!(e.key.as_deref(), Some("target"));
        let e = regress("[data]\npoints = 0,1\nvalues = 2\n").unwrap_err();
        assert_eq!(e.key.as_deref(), Some("values"));
    }

    #[test]
    fn regress_grid_defaults_to_padded_data_range() {
        let plan = regress("[data]\npoints = 2,3\nvalues = 0,0\n").unwrap();
        assert_eq!(plan.grid.len(), 201);
        assert_eq!((plan.grid[0], plan.grid[200]), (1.0, 4.0));
    }

    #[test]
    fn unknown_formula_is_rejected() {
        let f = ConfigFile::parse("[posterior]\ntarget = cos\n").unwrap();
        assert!(SamplePathsPlan::read(&mut Resolver::new(&f)).is_err());
    }
}
