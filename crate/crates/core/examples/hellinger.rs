//! Hellinger distance between densities: closed form for Gaussians and
//! quadrature for anything else.
//!
//! cargo run --example hellinger

use std::f64::consts::PI;

use gp_inverse::metrics::{gaussian_hellinger, hellinger};
use gp_inverse::quadrature::{BoxDomain, QuadratureGrid};

fn normal(x: f64, m: f64, s: f64) -> f64 {
    (-0.5 * ((x - m) / s).powi(2)).exp() / (s * (2.0 * PI).sqrt())
}

fn main() -> gp_inverse::Result<()> {
    let grid = QuadratureGrid::trapezoid(BoxDomain::interval(-12.0, 12.0)?, 8193)?;
    for (m1, s1, m2, s2) in [(0.0, 1.0, 1.0, 1.0), (0.0, 1.0, 0.0, 2.0), (0.5, 0.7, -1.0, 1.3)] {
        let exact = gaussian_hellinger(m1, s1, m2, s2);
        let numeric = hellinger(|u| normal(u[0], m1, s1), |u| normal(u[0], m2, s2), &grid)?;
        println!("N({m1}, {s1}^2) vs N({m2}, {s2}^2): closed form {exact:.8}, quadrature {numeric:.8}");
    }

    // Laplace against Gaussian with the same variance.
    let laplace = |u: &[f64]| (-(2f64.sqrt()) * u[0].abs()).exp() / 2f64.sqrt();
    let h = hellinger(laplace, |u| normal(u[0], 0.0, 1.0), &grid)?;
    println!("Laplace(0, 1/sqrt 2) vs N(0, 1): {h:.6}");
    Ok(())
}
