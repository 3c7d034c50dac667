//! Random-walk Metropolis-Hastings with chain diagnostics.
//!
//! cargo run --example mcmc

use gp_inverse::mcmc::{chain_diagnostics, metropolis_hastings, parallel_chains, ProposalSpec};

fn main() -> gp_inverse::Result<()> {
    // A correlated 2D Gaussian target with a banana twist.
    let log_target = |u: &[f64]| -> gp_inverse::Result<f64> {
        let (x, y) = (u[0], u[1] - 0.5 * u[0] * u[0]);
        Ok(-0.5 * (x * x + 4.0 * y * y))
    };
    for step in [0.1, 0.8, 5.0] {
        let chain = metropolis_hastings(log_target, &ProposalSpec::isotropic(step)?, &[0.0, 0.0], 50_000, 1)?;
        let d = chain_diagnostics(&chain, 5_000)?;
        println!(
            "step {step:>4}: acceptance {:.3}, mean ({:+.3}, {:+.3}), IACT ({:.1}, {:.1})",
            d.acceptance_rate, d.mean[0], d.mean[1], d.iact[0], d.iact[1]
        );
    }

    // Independent chains from scattered starting points.
    let inits = vec![vec![-3.0, 0.0], vec![0.0, 3.0], vec![3.0, 5.0]];
    let chains = parallel_chains(log_target, &ProposalSpec::per_dimension(vec![1.0, 0.6])?, &inits, 20_000, 9)?;
    for (i, c) in chains.iter().enumerate() {
        let d = chain_diagnostics(c, 2_000)?;
        println!("chain {i}: E[u1] = {:+.3}, E[u2] = {:.3}", d.mean[0], d.mean[1]);
    }
    let csv = chains[0].to_csv();
    println!("\nchain CSV header: {}", csv.lines().next().unwrap());
    Ok(())
}
