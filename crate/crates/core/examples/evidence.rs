//! Evidence and posterior density of the conjugate problem y = u + noise.
//!
//! cargo run --example evidence

use std::f64::consts::PI;

use gp_inverse::bayes::{BayesProblem, EvidenceMethod, ForwardModel, NoiseModel, Prior};

fn main() -> gp_inverse::Result<()> {
    let problem = BayesProblem::new(
        ForwardModel::identity(1),
        vec![1.0],
        NoiseModel::isotropic(1.0, 1)?,
        Prior::gaussian(vec![0.0], vec![1.0])?,
    )?;

    let quad = problem.evidence(EvidenceMethod::default_quadrature(1))?;
    let mc = problem.evidence(EvidenceMethod::MonteCarlo { samples: 200_000, seed: 1 })?;
    let exact = (-0.25f64).exp() / (4.0 * PI).sqrt();
    println!("evidence: quadrature {:.8}, Monte Carlo {:.5} +- {:.5}, exact {exact:.8}", quad.value, mc.value, mc.std_error);

    // The posterior is N(1/2, 1/2).
    println!("\n{:>5} {:>10} {:>10}", "u", "density", "exact");
    for u in [-1.0, 0.0, 0.5, 1.0, 2.0] {
        let p = problem.posterior_log_density(&[u], quad.value)?.exp();
        let exact = (-(u - 0.5) * (u - 0.5)).exp() / PI.sqrt();
        println!("{u:>5} {p:>10.6} {exact:>10.6}");
    }
    println!("\nmisfit at u = 0: {}", problem.neg_log_likelihood(&[0.0])?);
    Ok(())
}
