//! Exact GP regression: condition on a handful of observations and predict
//! with uncertainty.
//!
//! cargo run --example gp_regression

use gp_inverse::gp::{Design, GpPosterior, GpPrior, MeanFunction};
use gp_inverse::kernels::KernelSpec;

fn main() -> gp_inverse::Result<()> {
    let f = |x: f64| ((x - 2.5) * (x - 2.5)).sin();
    let xs = [0.5, 1.5, 2.5, 3.5, 4.5];
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();

    let kernel = KernelSpec::squared_exponential(0.8, 0.5)?;
    let gp = GpPosterior::fit(GpPrior::zero_mean(kernel), Design::from_scalars(&xs), &ys, 0.0)?;
    println!("interpolating fit, jitter used: {:e}", gp.jitter());
    println!("log marginal likelihood: {:.4}", gp.log_marginal_likelihood());
    println!("\n{:>5} {:>9} {:>9} {:>9}", "x", "truth", "mean", "sd");
    for i in 0..=10 {
        let x = 0.5 * i as f64;
        let (m, v) = gp.predict(&[x])?;
        println!("{x:>5.1} {:>9.4} {m:>9.4} {:>9.4}", f(x), v.sqrt());
    }

    // Noisy observations and a constant prior mean.
    let noisy = GpPosterior::fit(
        GpPrior::new(MeanFunction::Constant(0.2), kernel),
        Design::from_scalars(&xs),
        &ys,
        1e-2,
    )?;
    let (m, v) = noisy.predict(&[2.5])?;
    println!("\nwith noise variance 1e-2 and mean 0.2: m(2.5) = {m:.4}, sd = {:.4}", v.sqrt());
    Ok(())
}
