//! Replacing an expensive likelihood by a GP emulator: the mean-based,
//! marginal and sample-based surrogate posteriors, compared with the true
//! posterior in Hellinger distance.
//!
//! The Φ emulator uses a constant prior mean at the average misfit. With a
//! zero mean it dips far below zero between and beyond the design points,
//! and exp(−m_N) then puts spurious mass there.
//!
//! cargo run --example surrogate

use std::sync::Arc;

use gp_inverse::bayes::{BayesProblem, EvidenceMethod, ForwardModel, NoiseModel, Prior};
use gp_inverse::design::{sample_design, DesignMeasure};
use gp_inverse::gp::{GpPrior, MeanFunction};
use gp_inverse::kernels::KernelSpec;
use gp_inverse::metrics::hellinger;
use gp_inverse::quadrature::QuadratureGrid;
use gp_inverse::surrogate::{
    train_forward_emulators, train_phi_emulator, EmulatorTarget, SurrogateKind, SurrogatePosterior,
};

fn main() -> gp_inverse::Result<()> {
    // G(u) = u + 0.3 sin(2u), one noisy observation y = 1.
    let problem = Arc::new(BayesProblem::new(
        ForwardModel::custom(1, 1, |u| Ok(vec![u[0] + 0.3 * (2.0 * u[0]).sin()])),
        vec![1.0],
        NoiseModel::isotropic(0.1, 1)?,
        Prior::gaussian(vec![0.0], vec![1.0])?,
    )?);
    let z = problem.evidence(EvidenceMethod::default_quadrature(1))?.value;
    let grid = QuadratureGrid::trapezoid(problem.quadrature_box(), 4097)?;
    let kernel = KernelSpec::squared_exponential(1.0, 1.0)?;
    let prior_measure = DesignMeasure::gaussian(vec![0.0], vec![1.0])?;

    println!("{:>4} {:>10} {:>10} {:>10} {:>10}", "N", "mean", "marginal", "sample", "G-mean");
    for n in [4, 8, 16, 32] {
        let design = sample_design(&prior_measure, n, 100 + n as u64)?;
        let misfits = design
            .points()
            .iter()
            .map(|u| problem.neg_log_likelihood(u))
            .collect::<gp_inverse::Result<Vec<f64>>>()?;
        let level = misfits.iter().sum::<f64>() / n as f64;
        let phi_prior = GpPrior::new(MeanFunction::Constant(level), kernel);
        let phi_gp = train_phi_emulator(&problem, phi_prior, design.clone())?;
        let g_gps = train_forward_emulators(&problem, GpPrior::zero_mean(kernel), design)?;
        let mut row = Vec::new();
        for (kind, target) in [
            (SurrogateKind::MeanBased, EmulatorTarget::Phi(phi_gp.clone())),
            (SurrogateKind::Marginal, EmulatorTarget::Phi(phi_gp.clone())),
            (SurrogateKind::SampleBased { seed: 5, axes: None }, EmulatorTarget::Phi(phi_gp.clone())),
            (SurrogateKind::MeanBased, EmulatorTarget::Forward(g_gps.clone())),
        ] {
            let s = SurrogatePosterior::new(problem.clone(), kind, target)?
                .normalize(EvidenceMethod::default_quadrature(1))?;
            let h = hellinger(
                |u| problem.posterior_log_density(u, z).unwrap().exp(),
                |u| s.log_density(u).map(f64::exp).unwrap_or(0.0),
                &grid,
            )?;
            row.push(format!("{h:>10.2e}"));
        }
        println!("{n:>4} {}", row.join(" "));
    }
    Ok(())
}
