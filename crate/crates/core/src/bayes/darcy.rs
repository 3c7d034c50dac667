//! One-dimensional layered Darcy flow, −(k p')' = g on (0, 1) with Dirichlet
//! boundary values.
//!
//! The permeability is piecewise constant, `k(x; u) = u_j` on layer `D_j`.
//! The vertex-centred scheme uses, at each cell interface, the harmonic mean
//! of `k` over the cell `[x_i, x_{i+1}]`, i.e. `h / ∫ 1/k`. For piecewise
//! constant `k` this integral is exact wherever the breakpoints fall, so the
//! discrete flux is exact for g ≡ 0.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Source term g(x).
#[derive(Clone)]
pub enum SourceTerm {
    Constant(f64),
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl SourceTerm {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SourceTerm::Constant(c) => *c,
            SourceTerm::Function(f) => f(x),
        }
    }
}

impl fmt::Debug for SourceTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceTerm::Constant(c) => write!(f, "Constant({c})"),
            SourceTerm::Function(_) => f.write_str("Function(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Darcy1D {
    source: SourceTerm,
    left: f64,
    right: f64,
    /// Interior breakpoints, strictly increasing; `d_u = breakpoints.len() + 1`.
    breakpoints: Vec<f64>,
    observation_points: Vec<f64>,
    cells: usize,
}

/// Pressure on the finite-difference grid plus the observed values.
#[derive(Debug, Clone, PartialEq)]
pub struct DarcySolution {
    pub nodes: Vec<f64>,
    pub pressure: Vec<f64>,
    pub observations: Vec<f64>,
}

impl DarcySolution {
    /// Discrete flux −k (p_{i+1} − p_i)/h on each cell, given the interface
    /// permeabilities used by the solver.
    pub fn fluxes(&self, interface_k: &[f64]) -> Vec<f64> {
        self.nodes
            .windows(2)
            .zip(self.pressure.windows(2))
            .zip(interface_k)
            .map(|((x, p), k)| -k * (p[1] - p[0]) / (x[1] - x[0]))
            .collect()
    }
}

impl Darcy1D {
    pub fn new(
        source: SourceTerm,
        left: f64,
        right: f64,
        breakpoints: Vec<f64>,
        observation_points: Vec<f64>,
        cells: usize,
    ) -> Result<Self> {
        if cells < 8 {
            return Err(Error::InvalidArgument(format!(
                "Darcy grid needs at least 8 cells, got {cells}"
            )));
        }
        let increasing = breakpoints.windows(2).all(|w| w[0] < w[1]);
        let interior = |x: &f64| *x > 0.0 && *x < 1.0;
        if !increasing || !breakpoints.iter().all(interior) {
            return Err(Error::InvalidArgument(format!(
                "layer breakpoints must be strictly increasing inside (0, 1): {breakpoints:?}"
            )));
        }
        if observation_points.is_empty() || !observation_points.iter().all(interior) {
            return Err(Error::InvalidArgument(format!(
                "observation locations must be non-empty and interior to (0, 1): {observation_points:?}"
            )));
        }
        Ok(Darcy1D {
            source,
            left,
            right,
            breakpoints,
            observation_points,
            cells,
        })
    }

    /// Number of permeability layers.
    pub fn layers(&self) -> usize {
        self.breakpoints.len() + 1
    }

    pub fn observation_points(&self) -> &[f64] {
        &self.observation_points
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    fn check_permeability(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.layers() {
            return Err(Error::DimensionMismatch {
                expected: self.layers(),
                got: u.len(),
            });
        }
        if let Some(bad) = u.iter().find(|&&k| !(k > 0.0 && k.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "permeability must be positive, got {bad}"
            )));
        }
        Ok(())
    }

    /// Harmonic-mean permeability on every cell.
    pub fn interface_permeability(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_permeability(u)?;
        let h = 1.0 / self.cells as f64;
        Ok((0..self.cells)
            .map(|i| {
                let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
                h / self.resistance(u, a, b)
            })
            .collect())
    }

    /// ∫_a^b 1/k(x; u) dx.
    fn resistance(&self, u: &[f64], a: f64, b: f64) -> f64 {
        let mut total = 0.0;
        let mut lo = 0.0;
        for (j, &kj) in u.iter().enumerate() {
            let hi = self.breakpoints.get(j).copied().unwrap_or(1.0);
            let overlap = b.min(hi) - a.max(lo);
            if overlap > 0.0 {
                total += overlap / kj;
            }
            lo = hi;
        }
        total
    }

    pub fn solve(&self, u: &[f64]) -> Result<DarcySolution> {
        let kf = self.interface_permeability(u)?;
        let m = self.cells;
        let h = 1.0 / m as f64;
        let nodes: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();

        // tridiagonal system for interior nodes 1..m-1
        let n = m - 1;
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for r in 0..n {
            let i = r + 1;
            let (kw, ke) = (kf[i - 1], kf[i]);
            diag[r] = (kw + ke) / (h * h);
            lower[r] = -kw / (h * h);
            upper[r] = -ke / (h * h);
            rhs[r] = self.source.eval(nodes[i]);
        }
        rhs[0] -= lower[0] * self.left;
        rhs[n - 1] -= upper[n - 1] * self.right;
        let interior = thomas(&lower, &diag, &upper, &rhs)?;

        let mut pressure = Vec::with_capacity(m + 1);
        pressure.push(self.left);
        pressure.extend(interior);
        pressure.push(self.right);

        let observations = self
            .observation_points
            .iter()
            .map(|&x| {
                let i = ((x / h).floor() as usize).min(m - 1);
                let t = (x - nodes[i]) / h;
                (1.0 - t) * pressure[i] + t * pressure[i + 1]
            })
            .collect();
        Ok(DarcySolution {
            nodes,
            pressure,
            observations,
        })
    }
}

/// Thomas algorithm for a tridiagonal system (no pivoting).
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom.abs() < f64::MIN_POSITIVE {
        return Err(Error::Solver("zero pivot in tridiagonal solve".into()));
    }
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom.abs() < f64::MIN_POSITIVE || !denom.is_finite() {
            return Err(Error::Solver(format!("zero pivot in tridiagonal solve at row {i}")));
        }
        c[i] = upper[i] / denom;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(source: f64, left: f64, right: f64, breaks: Vec<f64>, cells: usize) -> Darcy1D {
        Darcy1D::new(SourceTerm::Constant(source), left, right, breaks, vec![0.25, 0.5, 0.75], cells).unwrap()
    }

    #[test]
    fn linear_solution_is_exact() {
        let sol = model(0.0, 0.0, 1.0, vec![], 64).solve(&[1.0]).unwrap();
        for (x, p) in sol.nodes.iter().zip(&sol.pressure) {
            assert!((x - p).abs() < 1e-13);
        }
        assert!((sol.observations[1] - 0.5).abs() < 1e-13);
    }

    #[test]
    fn constant_source_parabola() {
        // -2 p'' = 1, p(0) = p(1) = 0  =>  p = (x - x^2) / 4
        let sol = model(1.0, 0.0, 0.0, vec![], 1024).solve(&[2.0]).unwrap();
        let err = sol
            .nodes
            .iter()
            .zip(&sol.pressure)
            .map(|(x, p)| (p - (x - x * x) / 4.0).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn two_layer_interface_problem() {
        // flux continuity: q = 1 / (0.5/1 + 0.5/2) = 4/3, p(x) = q x on the first layer
        let sol = model(0.0, 0.0, 1.0, vec![0.5], 64).solve(&[1.0, 2.0]).unwrap();
        let q = 4.0 / 3.0;
        for (x, p) in sol.nodes.iter().zip(&sol.pressure) {
            let exact = if *x <= 0.5 { q * x } else { q * 0.5 + q / 2.0 * (x - 0.5) };
            assert!((p - exact).abs() < 1e-8, "x = {x}: {p} vs {exact}");
        }
    }

    #[test]
    fn flux_is_conserved_without_source() {
        let m = model(0.0, 1.0, -0.5, vec![0.21, 0.57, 0.8], 100);
        let u = [0.7, 3.0, 0.2, 1.4];
        let sol = m.solve(&u).unwrap();
        let fluxes = sol.fluxes(&m.interface_permeability(&u).unwrap());
        let q0 = fluxes[0];
        for q in fluxes {
            assert!(((q - q0) / q0).abs() < 1e-8);
        }
    }

    #[test]
    fn validation() {
        let m = model(0.0, 0.0, 1.0, vec![0.5], 16);
        assert!(m.solve(&[1.0, -1.0]).is_err());
        assert!(m.solve(&[1.0]).is_err());
        assert!(Darcy1D::new(SourceTerm::Constant(0.0), 0.0, 1.0, vec![0.6, 0.4], vec![0.5], 16).is_err());
        assert!(Darcy1D::new(SourceTerm::Constant(0.0), 0.0, 1.0, vec![], vec![1.0], 16).is_err());
        assert!(Darcy1D::new(SourceTerm::Constant(0.0), 0.0, 1.0, vec![], vec![0.5], 4).is_err());
    }
}
