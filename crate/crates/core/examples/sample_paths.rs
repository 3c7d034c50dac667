//! Joint sample paths of prior and posterior GPs on a grid.
//!
//! cargo run --example sample_paths

use gp_inverse::gp::{Design, GpPosterior, GpPrior, GridSampler};
use gp_inverse::kernels::KernelSpec;
use gp_inverse::quadrature::linspace;
use gp_inverse::rng;

fn roughness(path: &[f64]) -> f64 {
    path.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

fn main() -> gp_inverse::Result<()> {
    let grid: Vec<Vec<f64>> = linspace(0.0, 5.0, 101).into_iter().map(|x| vec![x]).collect();

    // Total variation of prior paths: short lengthscales and rough kernels
    // give wigglier paths.
    for (name, k) in [
        ("matern12, l = 1  ", KernelSpec::matern12(1.0, 1.0)?),
        ("matern12, l = 0.1", KernelSpec::matern12(0.1, 1.0)?),
        ("sqexp,    l = 1  ", KernelSpec::squared_exponential(1.0, 1.0)?),
        ("sqexp,    l = 0.1", KernelSpec::squared_exponential(0.1, 1.0)?),
    ] {
        let sampler = GridSampler::new(&GpPrior::zero_mean(k), &grid)?;
        let mut g = rng::seeded(7);
        let tv: f64 = (0..5).map(|_| roughness(&sampler.draw(&mut g))).sum::<f64>() / 5.0;
        println!("{name}: mean total variation {tv:.2}, jitter {:e}", sampler.jitter());
    }

    // Posterior paths pass through the data.
    let xs = [1.0, 2.5, 4.0];
    let ys: Vec<f64> = xs.iter().map(|x: &f64| ((x - 2.5) * (x - 2.5)).sin()).collect();
    let k = KernelSpec::squared_exponential(1.0, 0.5)?;
    let gp = GpPosterior::fit(GpPrior::zero_mean(k), Design::from_scalars(&xs), &ys, 0.0)?;
    let sampler = GridSampler::new(&gp, &grid)?;
    let path = sampler.draw(&mut rng::seeded(8));
    println!("\nposterior path at the design points (data {ys:.3?}):");
    for x in xs {
        let i = (x / 0.05).round() as usize;
        println!("  x = {x}: {:.6}", path[i]);
    }
    Ok(())
}
