//! Composite trapezoid rules on boxes in one and two dimensions.

use crate::error::{check_dim, Error, Result};

/// Axis-aligned box `[lower_i, upper_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::InvalidArgument("box needs at least one dimension".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "box bounds must be finite with lower < upper: {lower:?} / {upper:?}"
            )));
        }
        Ok(BoxDomain { lower, upper })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.dim()
            && u.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (l, h))| *l <= *x && *x <= *h)
    }
}

/// Evenly spaced nodes `lo, ..., hi`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Tensor-product trapezoid rule.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    domain: BoxDomain,
    axes: Vec<Vec<f64>>,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    /// `nodes` per dimension, endpoints included. Dimensions above two are
    /// rejected: a tensor grid is the wrong tool there.
    pub fn trapezoid(domain: BoxDomain, nodes: usize) -> Result<Self> {
        if domain.dim() > 2 {
            return Err(Error::InvalidArgument(format!(
                "tensor quadrature supports at most 2 dimensions, got {}",
                domain.dim()
            )));
        }
        if nodes < 2 {
            return Err(Error::InvalidArgument("need at least 2 quadrature nodes".into()));
        }
        let axes: Vec<Vec<f64>> = domain
            .lower
            .iter()
            .zip(&domain.upper)
            .map(|(&l, &u)| linspace(l, u, nodes))
            .collect();
        let axis_weights: Vec<Vec<f64>> = axes
            .iter()
            .map(|a| {
                let h = a[1] - a[0];
                (0..a.len())
                    .map(|i| if i == 0 || i + 1 == a.len() { 0.5 * h } else { h })
                    .collect()
            })
            .collect();
        let (points, weights) = if axes.len() == 1 {
            (
                axes[0].iter().map(|&x| vec![x]).collect(),
                axis_weights[0].clone(),
            )
        } else {
            let mut pts = Vec::with_capacity(nodes * nodes);
            let mut ws = Vec::with_capacity(nodes * nodes);
            for (x, wx) in axes[0].iter().zip(&axis_weights[0]) {
                for (y, wy) in axes[1].iter().zip(&axis_weights[1]) {
                    pts.push(vec![*x, *y]);
                    ws.push(wx * wy);
                }
            }
            (pts, ws)
        };
        Ok(QuadratureGrid {
            domain,
            axes,
            points,
            weights,
        })
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    /// Node coordinates per axis. Points are ordered with the last axis fastest.
    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Σ w_i v_i for values tabulated at the nodes.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p))
            .sum()
    }

    /// log Σ w_i exp(l_i), computed with max subtraction. Entries equal to
    /// −∞ contribute nothing; if all are −∞ the result is −∞.
    pub fn log_integrate_values(&self, log_values: &[f64]) -> f64 {
        let max = log_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let s: f64 = self
            .weights
            .iter()
            .zip(log_values)
            .map(|(w, l)| w * (l - max).exp())
            .sum();
        max + s.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn trapezoid_is_exact_for_linear_functions() {
        let g = QuadratureGrid::trapezoid(BoxDomain::interval(-1.0, 3.0).unwrap(), 5).unwrap();
        assert_abs_diff_eq!(g.integrate(|x| 2.0 * x[0] + 1.0), 12.0, epsilon = 1e-14);
        let g2 = QuadratureGrid::trapezoid(BoxDomain::new(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap(), 3).unwrap();
        assert_abs_diff_eq!(g2.integrate(|x| x[0] + x[1]), 3.0, epsilon = 1e-14);
        assert_eq!(g2.len(), 9);
    }

    #[test]
    fn gaussian_mass_on_eight_sigma_window() {
        let g = QuadratureGrid::trapezoid(BoxDomain::interval(-8.0, 8.0).unwrap(), 4096).unwrap();
        let mass = g.integrate(|x| (-0.5 * x[0] * x[0]).exp() / (2.0 * std::f64::consts::PI).sqrt());
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn log_integration_survives_underflow() {
        let g = QuadratureGrid::trapezoid(BoxDomain::interval(0.0, 1.0).unwrap(), 11).unwrap();
        let logs = vec![-2000.0; 11];
        assert_abs_diff_eq!(g.log_integrate_values(&logs), -2000.0, epsilon = 1e-12);
        assert_eq!(g.log_integrate_values(&[f64::NEG_INFINITY; 11]), f64::NEG_INFINITY);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(BoxDomain::interval(1.0, 1.0).is_err());
        assert!(BoxDomain::new(vec![0.0], vec![1.0, 2.0]).is_err());
        let b3 = BoxDomain::new(vec![0.0; 3], vec![1.0; 3]).unwrap();
        assert!(QuadratureGrid::trapezoid(b3, 4).is_err());
        assert!(QuadratureGrid::trapezoid(BoxDomain::interval(0.0, 1.0).unwrap(), 1).is_err());
    }
}
