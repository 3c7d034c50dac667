//! Choosing kernel hyperparameters by maximizing the log marginal
//! likelihood.
//!
//! cargo run --example hyperparameters

use gp_inverse::gp::{fit_hyperparameters, log_marginal_likelihood, Design, GpPrior, HyperparameterSearch};
use gp_inverse::kernels::{KernelFamily, KernelSpec};

fn main() -> gp_inverse::Result<()> {
    let xs = [0.4, 0.9, 1.5, 2.0, 2.4, 2.9, 3.3, 3.9, 4.6];
    let ys: Vec<f64> = xs.iter().map(|x: &f64| ((x - 2.5) * (x - 2.5)).sin()).collect();
    let design = Design::from_scalars(&xs);

    for family in KernelFamily::ALL {
        let k = fit_hyperparameters(family, &design, &ys, &HyperparameterSearch::default())?;
        let lml = log_marginal_likelihood(&GpPrior::zero_mean(k), &design, &ys, 0.0)?;
        println!(
            "{family:>9}: lengthscale {:.4}, variance {:.4}, log marginal likelihood {lml:.4}",
            k.lengthscale(),
            k.variance()
        );
    }

    // The objective surface along the lengthscale at unit variance.
    println!("\nsqexp, variance 1:");
    for l in [0.1, 0.3, 0.7, 1.0] {
        let k = KernelSpec::squared_exponential(l, 1.0)?;
        let lml = log_marginal_likelihood(&GpPrior::zero_mean(k), &design, &ys, 0.0)?;
        println!("  lengthscale {l:>4}: {lml:.4}");
    }
    Ok(())
}
