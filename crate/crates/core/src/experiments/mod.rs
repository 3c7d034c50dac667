//! Config-driven experiments behind the `gpinv` binary.
//!
//! A run parses a config file, validates it completely (unknown keys and bad
//! values are rejected before any work starts), writes the resolved config
//! to `resolved.cfg` and then executes one experiment. Every CSV output gets
//! a sibling `.meta` file with the seed, the library version and the SHA-256
//! of the resolved config. Outputs depend only on the config and the seed.
//!
//! Exit codes: 1 for configuration errors, 2 for numerical or I/O failures.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::config::{ConfigError, ConfigFile, Resolver};
use crate::error::Error;
use crate::gp::MeanFunction;
use crate::kernels::{KernelFamily, KernelSpec};

pub mod convergence;
pub mod design_studies;
pub mod inversion;
pub mod paths;

pub use convergence::{
    forward_convergence_table, nested_uniform_design, phi_convergence_table, ConvergenceSettings, ForwardConvergenceRow,
    PhiConvergenceRow,
};

/// Version string written into `.meta` files.
pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    SamplePaths,
    Regress,
    Invert,
    DarcyDemo,
    DesignStudyGaussian,
    DesignStudyUniform,
    DesignStudy,
    HellingerConvergence,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::SamplePaths,
        ExperimentKind::Regress,
        ExperimentKind::Invert,
        ExperimentKind::DarcyDemo,
        ExperimentKind::DesignStudyGaussian,
        ExperimentKind::DesignStudyUniform,
        ExperimentKind::DesignStudy,
        ExperimentKind::HellingerConvergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SamplePaths => "sample-paths",
            ExperimentKind::Regress => "regress",
            ExperimentKind::Invert => "invert",
            ExperimentKind::DarcyDemo => "darcy-demo",
            ExperimentKind::DesignStudyGaussian => "design-study-gaussian",
            ExperimentKind::DesignStudyUniform => "design-study-uniform",
            ExperimentKind::DesignStudy => "design-study",
            ExperimentKind::HellingerConvergence => "hellinger-convergence",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
                format!("unknown experiment kind `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// Why a run failed.
#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Numerical { context: String, source: Error },
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Numerical { .. } | RunError::Io { .. } => 2,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Numerical { context, source } => write!(f, "numerical failure while {context}: {source}"),
            RunError::Io { path, source } => write!(f, "cannot write {}: {source}", path.display()),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

/// Wraps a library error raised while executing an experiment.
pub(crate) fn numerical(context: impl Into<String>) -> impl FnOnce(Error) -> RunError {
    let context = context.into();
    move |source| RunError::Numerical { context, source }
}

/// Turns a library validation error into a config error on `[section] key`.
pub(crate) fn invalid<'r>(r: &'r Resolver<'_>, section: &str, key: &str) -> impl FnOnce(Error) -> ConfigError + 'r {
    let (section, key) = (section.to_string(), key.to_string());
    move |e| r.invalid(&section, &key, e.to_string())
}

/// Output directory bookkeeping.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    kind: ExperimentKind,
    seed: u64,
    config_hash: String,
    written: Vec<PathBuf>,
}

impl OutputDir {
    fn write(&mut self, name: &str, content: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, content).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        self.written.push(path);
        Ok(())
    }

    /// Writes `<stem>.csv` and its `<stem>.meta`.
    pub fn csv(&mut self, stem: &str, content: &str) -> Result<(), RunError> {
        self.write(&format!("{stem}.csv"), content)?;
        let meta = format!(
            "file = {stem}.csv\nexperiment = {}\nseed = {}\nversion = {VERSION}\nconfig_sha256 = {}\n",
            self.kind, self.seed, self.config_hash
        );
        self.write(&format!("{stem}.meta"), &meta)
    }

    /// Writes a plain text file.
    pub fn text(&mut self, name: &str, content: &str) -> Result<(), RunError> {
        self.write(name, content)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub config_sha256: String,
    pub files: Vec<PathBuf>,
}

enum Plan {
    SamplePaths(paths::SamplePathsPlan),
    Regress(paths::RegressPlan),
    Invert(Box<inversion::InversionPlan>),
    DesignGaussian(design_studies::GaussianStudyPlan),
    DesignUniform(design_studies::UniformStudyPlan),
    Fill(design_studies::FillPlan),
    Convergence(convergence::ConvergencePlan),
}

/// Reads the `[kernel]` section.
pub(crate) fn read_kernel(
    r: &mut Resolver<'_>,
    section: &str,
    family: KernelFamily,
    lengthscale: f64,
    variance: f64,
) -> Result<KernelSpec, ConfigError> {
    let fam: String = r.get(section, "family", family.name().to_string())?;
    let fam: KernelFamily = fam.parse().map_err(invalid(r, section, "family"))?;
    let l = r.positive(section, "lengthscale", lengthscale)?;
    let v = r.positive(section, "variance", variance)?;
    Ok(KernelSpec::new(fam, l, v).expect("validated above"))
}

/// Reads `mean` / `mean_value` / `mean_coefficients` of a section.
pub(crate) fn read_mean(r: &mut Resolver<'_>, section: &str, default: &str) -> Result<MeanSpec, ConfigError> {
    let kind: String = r.get(section, "mean", default.to_string())?;
    match kind.as_str() {
        "zero" => Ok(MeanSpec::Fixed(MeanFunction::Zero)),
        "constant" => Ok(match r.optional::<f64>(section, "mean_value")? {
            Some(c) => MeanSpec::Fixed(MeanFunction::Constant(c)),
            None => MeanSpec::DataAverage,
        }),
        "polynomial" => {
            let c: Vec<f64> = r.list(section, "mean_coefficients", vec![])?;
            if c.is_empty() {
                return Err(r.invalid(section, "mean_coefficients", "polynomial mean needs coefficients"));
            }
            Ok(MeanSpec::Fixed(MeanFunction::Polynomial(c)))
        }
        other => Err(r.invalid(
            section,
            "mean",
            format!("unknown mean `{other}` (expected zero, constant or polynomial)"),
        )),
    }
}

/// Prior mean of an emulator: fixed, or the average of the training values.
#[derive(Debug, Clone, PartialEq)]
pub enum MeanSpec {
    Fixed(MeanFunction),
    DataAverage,
}

impl MeanSpec {
    pub fn resolve(&self, values: &[f64]) -> MeanFunction {
        match self {
            MeanSpec::Fixed(m) => m.clone(),
            MeanSpec::DataAverage => MeanFunction::Constant(values.iter().sum::<f64>() / values.len().max(1) as f64),
        }
    }
}

/// Runs the experiment described by `config_text`, writing into `out_dir`.
pub fn run_config_text(config_text: &str, out_dir: &Path, seed_override: Option<u64>) -> Result<RunReport, RunError> {
    let mut file = ConfigFile::parse(config_text)?;
    if let Some(seed) = seed_override {
        file.set("experiment", "seed", &seed.to_string());
    }
    let mut r = Resolver::new(&file);
    let kind: String = r.require("experiment", "kind")?;
    let kind: ExperimentKind = kind.parse().map_err(|m: String| r.invalid("experiment", "kind", m))?;
    let seed: u64 = r.get("experiment", "seed", 0)?;
    let plan = match kind {
        ExperimentKind::SamplePaths => Plan::SamplePaths(paths::SamplePathsPlan::read(&mut r)?),
        ExperimentKind::Regress => Plan::Regress(paths::RegressPlan::read(&mut r)?),
        ExperimentKind::Invert => Plan::Invert(Box::new(inversion::InversionPlan::read(&mut r, false)?)),
        ExperimentKind::DarcyDemo => Plan::Invert(Box::new(inversion::InversionPlan::read(&mut r, true)?)),
        ExperimentKind::DesignStudyGaussian => Plan::DesignGaussian(design_studies::GaussianStudyPlan::read(&mut r)?),
        ExperimentKind::DesignStudyUniform => Plan::DesignUniform(design_studies::UniformStudyPlan::read(&mut r)?),
        ExperimentKind::DesignStudy => Plan::Fill(design_studies::FillPlan::read(&mut r)?),
        ExperimentKind::HellingerConvergence => Plan::Convergence(convergence::ConvergencePlan::read(&mut r)?),
    };
    let resolved = r.finish()?;
    let config_hash = hex::encode(Sha256::digest(resolved.as_bytes()));

    fs::create_dir_all(out_dir).map_err(|source| RunError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut out = OutputDir {
        dir: out_dir.to_path_buf(),
        kind,
        seed,
        config_hash: config_hash.clone(),
        written: Vec::new(),
    };
    out.text("resolved.cfg", &resolved)?;
    log::info!("running {kind} with seed {seed}");
    match plan {
        Plan::SamplePaths(p) => p.execute(&mut out)?,
        Plan::Regress(p) => p.execute(&mut out)?,
        Plan::Invert(p) => p.execute(&mut out)?,
        Plan::DesignGaussian(p) => p.execute(&mut out)?,
        Plan::DesignUniform(p) => p.execute(&mut out)?,
        Plan::Fill(p) => p.execute(&mut out)?,
        Plan::Convergence(p) => p.execute(&mut out)?,
    }
    Ok(RunReport {
        kind,
        seed,
        config_sha256: config_hash,
        files: out.written,
    })
}

/// Reads `config_path` and runs it.
pub fn run_config_file(config_path: &Path, out_dir: &Path, seed_override: Option<u64>) -> Result<RunReport, RunError> {
    let text = fs::read_to_string(config_path).map_err(|e| {
        RunError::Config(ConfigError {
            line: None,
            section: None,
            key: None,
            message: format!("cannot read {}: {e}", config_path.display()),
        })
    })?;
    run_config_text(&text, out_dir, seed_override)
}

/// `key,value` CSV.
pub(crate) fn key_value_csv(rows: &[(&str, String)]) -> String {
    let mut s = String::from("key,value\n");
    for (k, v) in rows {
        s.push_str(&format!("{k},{v}\n"));
    }
    s
}

/// Lag-1 sample autocorrelation.
pub fn lag1_autocorrelation(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let c0: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    let c1: f64 = xs.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    c1 / c0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
        assert!("plot".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn config_errors_exit_with_one() {
        let dir = tempfile::tempdir().unwrap();
        let e = run_config_text("[experiment]\nkind = sample-paths\n[prior]\nvariance = -1\n", dir.path(), None).unwrap_err();
        assert_eq!(e.exit_code(), 1);
        assert!(e.to_string().contains("variance"), "{e}");
        let e = run_config_text("[experiment]\nkind = regress\nbogus = 1\n", dir.path(), None).unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
        let e = run_config_text("[experiment]\nkind = nope\n", dir.path(), None).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn lag1_of_alternating_sequence() {
        assert!((lag1_autocorrelation(&[1.0, -1.0, 1.0, -1.0]) + 0.75).abs() < 1e-12);
    }
}
