//! Evaluating the four stationary kernels and building kernel matrices.
//!
//! cargo run --example kernels

use gp_inverse::gp::rkhs_norm;
use gp_inverse::kernels::{KernelFamily, KernelSpec};

fn main() -> gp_inverse::Result<()> {
    println!("{:>10} {:>10} {:>10} {:>10} {:>10}", "r", "matern12", "matern32", "matern52", "sqexp");
    for r in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0] {
        let row: Vec<String> = KernelFamily::ALL
            .iter()
            .map(|&f| format!("{:>10.6}", KernelSpec::new(f, 1.0, 1.0).unwrap().eval_distance(r)))
            .collect();
        println!("{r:>10} {}", row.join(" "));
    }

    // Kernels act on points of any dimension through the Euclidean distance.
    let k = KernelSpec::matern52(0.5, 2.0)?;
    let points = vec![vec![0.0, 0.0], vec![0.3, 0.4], vec![1.0, 1.0]];
    println!("\nMatern-5/2 (lengthscale 0.5, variance 2) Gram matrix:{}", k.matrix(&points));

    // RKHS norm of h = k(., z1) - 0.5 k(., z2).
    let norm = rkhs_norm(&k, &points[..2], &[1.0, -0.5])?;
    println!("RKHS norm of k(., z1) - 0.5 k(., z2): {norm:.6}");
    Ok(())
}
