//! Stationary isotropic covariance kernels.
//!
//! The Matérn family is restricted to the half-integer orders that have
//! elementary closed forms (ν = 1/2, 3/2, 5/2) plus the squared-exponential
//! limit ν → ∞.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// Distances below this multiple of the lengthscale are treated as zero.
const ZERO_DISTANCE_RTOL: f64 = 1e-14;

/// Covariance family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    /// Matérn ν = 1/2 (exponential / Laplace kernel).
    Matern12,
    /// Matérn ν = 3/2.
    Matern32,
    /// Matérn ν = 5/2.
    Matern52,
    /// Gaussian / RBF kernel, the ν → ∞ limit of the Matérn family.
    SquaredExponential,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 4] = [
        KernelFamily::Matern12,
        KernelFamily::Matern32,
        KernelFamily::Matern52,
        KernelFamily::SquaredExponential,
    ];

    /// Smoothness ν, `f64::INFINITY` for the squared exponential.
    pub fn smoothness(self) -> f64 {
        match self {
            KernelFamily::Matern12 => 0.5,
            KernelFamily::Matern32 => 1.5,
            KernelFamily::Matern52 => 2.5,
            KernelFamily::SquaredExponential => f64::INFINITY,
        }
    }

    /// Config-file name of the family.
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Matern12 => "matern12",
            KernelFamily::Matern32 => "matern32",
            KernelFamily::Matern52 => "matern52",
            KernelFamily::SquaredExponential => "sqexp",
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matern12" => Ok(KernelFamily::Matern12),
            "matern32" => Ok(KernelFamily::Matern32),
            "matern52" => Ok(KernelFamily::Matern52),
            "sqexp" => Ok(KernelFamily::SquaredExponential),
            other => Err(Error::InvalidArgument(format!(
                "unknown kernel family `{other}` (expected matern12, matern32, matern52 or sqexp)"
            ))),
        }
    }
}

/// A kernel family together with its lengthscale λ and marginal variance σ_k².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    lengthscale: f64,
    variance: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, lengthscale: f64, variance: f64) -> Result<Self> {
        if !(lengthscale > 0.0 && lengthscale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lengthscale must be positive and finite, got {lengthscale}"
            )));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "variance must be positive and finite, got {variance}"
            )));
        }
        Ok(KernelSpec {
            family,
            lengthscale,
            variance,
        })
    }

    pub fn matern12(lengthscale: f64, variance: f64) -> Result<Self> {
        Self::new(KernelFamily::Matern12, lengthscale, variance)
    }

    pub fn matern32(lengthscale: f64, variance: f64) -> Result<Self> {
        Self::new(KernelFamily::Matern32, lengthscale, variance)
    }

    pub fn matern52(lengthscale: f64, variance: f64) -> Result<Self> {
        Self::new(KernelFamily::Matern52, lengthscale, variance)
    }

    pub fn squared_exponential(lengthscale: f64, variance: f64) -> Result<Self> {
        Self::new(KernelFamily::SquaredExponential, lengthscale, variance)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Kernel value as a function of the Euclidean distance `r ≥ 0`.
    pub fn eval_distance(&self, r: f64) -> f64 {
        if r < ZERO_DISTANCE_RTOL * self.lengthscale {
            return self.variance;
        }
        let s = r / self.lengthscale;
        let shape = match self.family {
            KernelFamily::Matern12 => (-s).exp(),
            KernelFamily::Matern32 => {
                let a = 3f64.sqrt() * s;
                (1.0 + a) * (-a).exp()
            }
            KernelFamily::Matern52 => {
                let a = 5f64.sqrt() * s;
                (1.0 + a + a * a / 3.0) * (-a).exp()
            }
            KernelFamily::SquaredExponential => (-0.5 * s * s).exp(),
        };
        self.variance * shape
    }

    /// k(u, v).
    pub fn eval(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        check_dim(u.len(), v.len())?;
        Ok(self.eval_unchecked(u, v))
    }

    pub(crate) fn eval_unchecked(&self, u: &[f64], v: &[f64]) -> f64 {
        self.eval_distance(euclidean(u, v))
    }

    /// Kernel matrix K_ij = k(x_i, x_j); each unordered pair is evaluated once.
    ///
    /// Points must share one dimension; this is not re-checked here; use
    /// [`crate::gp::Design`] to get a validated point set.
    pub fn matrix<P: AsRef<[f64]>>(&self, points: &[P]) -> DMatrix<f64> {
        let n = points.len();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = self.variance;
            for j in 0..i {
                let v = self.eval_unchecked(points[i].as_ref(), points[j].as_ref());
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }

    /// Rectangular cross-covariance K_ij = k(a_i, b_j).
    pub fn cross_matrix<P: AsRef<[f64]>, Q: AsRef<[f64]>>(&self, a: &[P], b: &[Q]) -> DMatrix<f64> {
        DMatrix::from_fn(a.len(), b.len(), |i, j| {
            self.eval_unchecked(a[i].as_ref(), b[j].as_ref())
        })
    }

    /// Vector k(u, D) = [k(u, d_1), ..., k(u, d_N)].
    pub fn cross<P: AsRef<[f64]>>(&self, u: &[f64], design: &[P]) -> Result<DVector<f64>> {
        for p in design {
            check_dim(u.len(), p.as_ref().len())?;
        }
        Ok(DVector::from_iterator(
            design.len(),
            design.iter().map(|p| self.eval_unchecked(u, p.as_ref())),
        ))
    }
}

pub(crate) fn euclidean(u: &[f64], v: &[f64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn unit(family: KernelFamily) -> KernelSpec {
        KernelSpec::new(family, 1.0, 1.0).unwrap()
    }

    #[test]
    fn closed_form_values() {
        let k = unit(KernelFamily::Matern12);
        assert_eq!(k.eval(&[0.3], &[0.3]).unwrap(), 1.0);
        assert_abs_diff_eq!(k.eval(&[0.0], &[1.0]).unwrap(), 0.367879441171, epsilon = 1e-12);
        assert_abs_diff_eq!(
            unit(KernelFamily::SquaredExponential).eval(&[0.0, 0.0], &[0.6, 0.8]).unwrap(),
            0.606530659713,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            unit(KernelFamily::Matern32).eval(&[1.0], &[2.0]).unwrap(),
            (1.0 + 3f64.sqrt()) * (-(3f64.sqrt())).exp(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            unit(KernelFamily::Matern32).eval(&[1.0], &[2.0]).unwrap(),
            0.483357725,
            epsilon = 1e-9
        );
        let r: f64 = 1.0;
        let a = 5f64.sqrt() * r;
        assert_abs_diff_eq!(
            unit(KernelFamily::Matern52).eval_distance(r),
            (1.0 + a + 5.0 / 3.0) * (-a).exp(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn lengthscale_and_variance_scale() {
        let k = KernelSpec::matern12(2.0, 3.0).unwrap();
        assert_abs_diff_eq!(k.eval_distance(1.0), 3.0 * (-0.5f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_hyperparameters_and_dimensions() {
        assert!(KernelSpec::matern12(0.0, 1.0).is_err());
        assert!(KernelSpec::matern12(1.0, -1.0).is_err());
        assert!(KernelSpec::matern12(f64::NAN, 1.0).is_err());
        let k = unit(KernelFamily::Matern12);
        assert_eq!(
            k.eval(&[0.0], &[0.0, 1.0]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        );
        assert!(k.cross(&[0.0], &[vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn matrices_and_cross_vectors() {
        let k = unit(KernelFamily::Matern12);
        let one = k.matrix(&[vec![0.2]]);
        assert_eq!(one.nrows(), 1);
        assert_eq!(one[(0, 0)], 1.0);

        let twin = k.matrix(&[vec![0.5], vec![0.5]]);
        assert!(twin.iter().all(|&v| v == 1.0));

        let m = k.matrix(&[vec![0.0], vec![1.0]]);
        let e1 = (-1.0f64).exp();
        assert_abs_diff_eq!(m[(0, 1)], e1, epsilon = 1e-15);
        assert_eq!(m[(0, 1)], m[(1, 0)]);

        let c = k.cross(&[0.5], &[vec![0.0], vec![1.0]]).unwrap();
        assert_abs_diff_eq!(c[0], (-0.5f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(c[1], (-0.5f64).exp(), epsilon = 1e-15);
        let design = [vec![0.0], vec![1.0]];
        assert_eq!(k.cross(&[0.0], &design).unwrap()[0], 1.0);
        let empty: [Vec<f64>; 0] = [];
        assert_eq!(k.cross(&[0.0], &empty).unwrap().len(), 0);
    }

    #[test]
    fn parse_family_names() {
        for f in KernelFamily::ALL {
            assert_eq!(f.name().parse::<KernelFamily>().unwrap(), f);
        }
        assert!("matern72".parse::<KernelFamily>().is_err());
    }

    #[test]
    fn smoothness_ordering_on_grid() {
        // The ordering only holds up to the first crossing near r = 1.949 λ
        // (Matérn-5/2 vs squared exponential); beyond it the Gaussian tail is lighter.
        for i in 1..=194 {
            let r = i as f64 * 0.01;
            let v: Vec<f64> = KernelFamily::ALL.iter().map(|&f| unit(f).eval_distance(r)).collect();
            assert!(v[0] <= v[1] && v[1] <= v[2] && v[2] <= v[3], "r = {r}: {v:?}");
        }
    }

    #[test]
    fn monotone_decay() {
        for f in KernelFamily::ALL {
            let k = unit(f);
            let mut prev = k.eval_distance(0.0);
            for i in 1..=1000 {
                let cur = k.eval_distance(i as f64 * 0.01);
                assert!(cur <= prev, "{f} increases at r = {}", i as f64 * 0.01);
                prev = cur;
            }
        }
    }

    fn family_strategy() -> impl Strategy<Value = KernelFamily> {
        prop_oneof![
            Just(KernelFamily::Matern12),
            Just(KernelFamily::Matern32),
            Just(KernelFamily::Matern52),
            Just(KernelFamily::SquaredExponential),
        ]
    }

    proptest! {
        #[test]
        fn symmetric_with_exact_diagonal(
            family in family_strategy(),
            lengthscale in 0.05f64..5.0,
            variance in 0.1f64..10.0,
            u in prop::collection::vec(-3.0f64..3.0, 2),
            v in prop::collection::vec(-3.0f64..3.0, 2),
        ) {
            let k = KernelSpec::new(family, lengthscale, variance).unwrap();
            prop_assert_eq!(k.eval(&u, &v).unwrap(), k.eval(&v, &u).unwrap());
            prop_assert_eq!(k.eval(&u, &u).unwrap(), variance);
            let val = k.eval(&u, &v).unwrap();
            // may underflow to zero far out in the squared-exponential tail
            prop_assert!(val >= 0.0 && val <= variance);
        }

        #[test]
        fn kernel_matrix_is_numerically_psd(
            family in family_strategy(),
            lengthscale in 0.05f64..3.0,
            variance in 0.1f64..10.0,
            pts in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 1..20),
        ) {
            let k = KernelSpec::new(family, lengthscale, variance).unwrap();
            let m = k.matrix(&pts);
            let min = m.symmetric_eigenvalues().min();
            prop_assert!(min >= -1e-10 * variance, "min eigenvalue {}", min);
        }
    }
}
