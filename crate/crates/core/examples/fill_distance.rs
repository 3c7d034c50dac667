//! Space-filling properties of random designs: fill distance, its decay
//! with N, and designs restricted to a high-density region.
//!
//! cargo run --release --example fill_distance

use std::f64::consts::PI;
use std::sync::Arc;

use gp_inverse::design::{
    fill_decay_study, fill_distance, sample_design, threshold_rule, truncation_region, DesignMeasure, FillRegion,
    FillStudyConfig,
};
use gp_inverse::quadrature::BoxDomain;

fn main() -> gp_inverse::Result<()> {
    let square = BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0])?;
    let region = FillRegion::Box(square.clone());
    let uniform = DesignMeasure::uniform(square.clone());
    for n in [16, 64, 256] {
        let design = sample_design(&uniform, n, n as u64)?;
        let h = fill_distance(&design, &region, 256)?;
        println!("N = {n:>3} uniform points in the unit square: fill distance {:.4} ({:?})", h.value, h.method);
    }

    let study = fill_decay_study(
        &DesignMeasure::uniform(BoxDomain::interval(0.0, 1.0)?),
        &FillRegion::Box(BoxDomain::interval(0.0, 1.0)?),
        &FillStudyConfig {
            n_list: vec![16, 64, 256, 1024],
            replications: 100,
            seed: 3,
            resolution: 256,
            tail_threshold: None,
        },
    )?;
    println!("\n1D decay of the mean fill distance: slope {:.3} in log-log", study.slope);
    print!("{}", study.summary_csv());

    // Superlevel set {u : density(u) > t} of a narrow Gaussian, shrinking as
    // the threshold follows c N^(-2 tau / d).
    let density = Arc::new(|u: &[f64]| (-0.5 * ((u[0] - 0.5) / 0.1).powi(2)).exp() / (0.1 * (2.0 * PI).sqrt()));
    for n in [4, 16, 64] {
        let t = threshold_rule(1.0, 0.5, n, 1);
        let set = truncation_region(density.clone(), t, BoxDomain::interval(0.0, 1.0)?, 2049)?;
        println!("N = {n:>2}: threshold {t:.4}, region {:?}", set.intervals().unwrap());
    }
    Ok(())
}
