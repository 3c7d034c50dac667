//! The layered 1D Darcy flow problem as a forward model, and data
//! synthesized from it.
//!
//! cargo run --example darcy

use gp_inverse::bayes::darcy::{Darcy1D, SourceTerm};
use gp_inverse::bayes::{BayesProblem, ForwardModel, NoiseModel};

fn main() -> gp_inverse::Result<()> {
    // -(k p')' = 1 on (0, 1), p(0) = p(1) = 0, permeability 1 on (0, 0.5) and
    // 2 on (0.5, 1), pressure observed at three points.
    let model = Darcy1D::new(SourceTerm::Constant(1.0), 0.0, 0.0, vec![0.5], vec![0.25, 0.5, 0.75], 64)?;
    let sol = model.solve(&[1.0, 2.0])?;
    println!("pressure observations for k = (1, 2): {:.6?}", sol.observations);
    let peak = sol.pressure.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    println!("maximum pressure on the grid: {peak:.6}");

    // As a forward model of a Bayesian problem.
    let forward = ForwardModel::darcy(model);
    let noise = NoiseModel::isotropic(1e-4, 3)?;
    let data = BayesProblem::synthesize_data(&forward, &noise, &[1.0, 2.0], 1)?;
    println!("noisy data (sd 0.01): {data:.6?}");
    for u in [[1.0, 2.0], [2.0, 1.0], [0.5, 0.5]] {
        let g = forward.evaluate(&u)?;
        let misfit: f64 = g.iter().zip(&data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * 1e-4);
        println!("u = {u:?}: G(u) = {g:.5?}, misfit {misfit:.2}");
    }
    println!("forward evaluations so far: {}", forward.evaluation_count());
    Ok(())
}
