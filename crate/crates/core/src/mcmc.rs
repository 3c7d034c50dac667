//! Random-walk Metropolis-Hastings.
//!
//! Every step makes one call to the target, including rejected steps. Chains
//! are reproducible from their seed; independent chains use disjoint ChaCha
//! streams of one master seed (see [`crate::rng::stream`]).

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::rng;

/// Gaussian random-walk proposal `u' = u + step ⊙ ξ`, ξ ~ N(0, I).
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalSpec {
    steps: Vec<f64>,
    isotropic: bool,
}

impl ProposalSpec {
    /// Same step in every coordinate.
    pub fn isotropic(step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidArgument(format!("proposal step must be positive, got {step}")));
        }
        Ok(ProposalSpec {
            steps: vec![step],
            isotropic: true,
        })
    }

    pub fn per_dimension(steps: Vec<f64>) -> Result<Self> {
        if steps.is_empty() || steps.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidArgument(format!("proposal steps must be positive, got {steps:?}")));
        }
        Ok(ProposalSpec { steps, isotropic: false })
    }

    /// 2.4 / √d.
    pub fn default_for_dim(dim: usize) -> Self {
        ProposalSpec::isotropic(2.4 / (dim.max(1) as f64).sqrt()).expect("positive step")
    }

    pub fn step(&self, coordinate: usize) -> f64 {
        if self.isotropic {
            self.steps[0]
        } else {
            self.steps[coordinate]
        }
    }

    fn check(&self, dim: usize) -> Result<()> {
        if self.isotropic {
            Ok(())
        } else {
            check_dim(dim, self.steps.len())
        }
    }

    fn propose<R: Rng + ?Sized>(&self, u: &[f64], rng: &mut R) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, x)| x + self.step(i) * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }
}

/// A Metropolis-Hastings chain. Entry `i` is the state after step `i + 1`;
/// the initial point is stored separately.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub init: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
    /// Log-density of the current state after each step.
    pub log_densities: Vec<f64>,
    /// Log-density of the point proposed at each step.
    pub proposed_log_densities: Vec<f64>,
    pub accepted: Vec<bool>,
    pub proposal: ProposalSpec,
    pub seed: u64,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.init.len()
    }

    /// Number of target evaluations, including the initial point.
    pub fn target_evaluations(&self) -> usize {
        self.samples.len() + 1
    }

    /// Writes `iteration,u1..ud,log_density,accepted`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration");
        for j in 0..self.dim() {
            out.push_str(&format!(",u{}", j + 1));
        }
        out.push_str(",log_density,accepted\n");
        for (i, ((s, l), a)) in self.samples.iter().zip(&self.log_densities).zip(&self.accepted).enumerate() {
            out.push_str(&(i + 1).to_string());
            for x in s {
                out.push_str(&format!(",{x:e}"));
            }
            out.push_str(&format!(",{l:e},{}\n", u8::from(*a)));
        }
        out
    }
}

/// Runs `n` random-walk Metropolis-Hastings steps from `init`.
pub fn metropolis_hastings<F>(log_target: F, proposal: &ProposalSpec, init: &[f64], n: usize, seed: u64) -> Result<Chain>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    proposal.check(init.len())?;
    mh_with_rng(&log_target, proposal, init, n, seed, rng::seeded(seed))
}

fn mh_with_rng<F, R>(log_target: &F, proposal: &ProposalSpec, init: &[f64], n: usize, seed: u64, mut rng: R) -> Result<Chain>
where
    F: Fn(&[f64]) -> Result<f64>,
    R: Rng,
{
    let checked = |u: &[f64]| -> Result<f64> {
        let l = log_target(u)?;
        if l.is_nan() {
            return Err(Error::NotANumber { point: u.to_vec() });
        }
        Ok(l)
    };
    let mut current = init.to_vec();
    let mut current_log = checked(&current)?;
    if current_log == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument(format!(
            "initial point {init:?} has zero target density"
        )));
    }
    let mut chain = Chain {
        init: init.to_vec(),
        samples: Vec::with_capacity(n),
        log_densities: Vec::with_capacity(n),
        proposed_log_densities: Vec::with_capacity(n),
        accepted: Vec::with_capacity(n),
        proposal: proposal.clone(),
        seed,
    };
    for _ in 0..n {
        let candidate = proposal.propose(&current, &mut rng);
        let cand_log = checked(&candidate)?;
        let u: f64 = rng.random();
        let accept = cand_log > f64::NEG_INFINITY && u.ln() < cand_log - current_log;
        if accept {
            current = candidate;
            current_log = cand_log;
        }
        chain.samples.push(current.clone());
        chain.log_densities.push(current_log);
        chain.proposed_log_densities.push(cand_log);
        chain.accepted.push(accept);
    }
    Ok(chain)
}

/// Runs one chain per initial point in parallel; chain `i` draws from stream
/// `i` of `master_seed`.
pub fn parallel_chains<F>(log_target: F, proposal: &ProposalSpec, inits: &[Vec<f64>], n: usize, master_seed: u64) -> Result<Vec<Chain>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    for init in inits {
        proposal.check(init.len())?;
    }
    inits
        .par_iter()
        .enumerate()
        .map(|(i, init)| mh_with_rng(&log_target, proposal, init, n, master_seed, rng::stream(master_seed, i as u64)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainDiagnostics {
    pub acceptance_rate: f64,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// NaN for a coordinate that never moves.
    pub iact: Vec<f64>,
    pub samples_used: usize,
}

impl ChainDiagnostics {
    /// `key = value` lines.
    pub fn to_key_value(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
        format!(
            "acceptance_rate = {:e}\nsamples_used = {}\nmean = {}\nvariance = {}\niact = {}\n",
            self.acceptance_rate,
            self.samples_used,
            join(&self.mean),
            join(&self.variance),
            join(&self.iact)
        )
    }
}

/// Summary statistics of the samples after `burn_in`.
pub fn chain_diagnostics(chain: &Chain, burn_in: usize) -> Result<ChainDiagnostics> {
    if burn_in >= chain.len() {
        return Err(Error::InvalidArgument(format!(
            "burn-in {burn_in} leaves no samples out of {}",
            chain.len()
        )));
    }
    let kept = &chain.samples[burn_in..];
    let n = kept.len() as f64;
    let acc = chain.accepted[burn_in..].iter().filter(|a| **a).count() as f64 / n;
    let mut mean = Vec::new();
    let mut variance = Vec::new();
    let mut iact = Vec::new();
    for j in 0..chain.dim() {
        let xs: Vec<f64> = kept.iter().map(|s| s[j]).collect();
        let m = xs.iter().sum::<f64>() / n;
        let v = if kept.len() > 1 {
            xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        mean.push(m);
        variance.push(v);
        iact.push(integrated_autocorrelation_time(&xs));
    }
    Ok(ChainDiagnostics {
        acceptance_rate: acc,
        mean,
        variance,
        iact,
        samples_used: kept.len(),
    })
}

/// IACT `1 + 2 Σ ρ_k`, truncated by Geyer's initial positive sequence.
pub fn integrated_autocorrelation_time(xs: &[f64]) -> f64 {
    let n = xs.len();
    let m = xs.iter().sum::<f64>() / n as f64;
    let autocov = |lag: usize| -> f64 {
        xs[..n - lag]
            .iter()
            .zip(&xs[lag..])
            .map(|(a, b)| (a - m) * (b - m))
            .sum::<f64>()
            / n as f64
    };
    let g0 = autocov(0);
    if !(g0 > 0.0) {
        return f64::NAN;
    }
    let mut sum = 0.0;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = autocov(2 * k) + autocov(2 * k + 1);
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        k += 1;
    }
    (2.0 * sum - g0) / g0
}
