//! Correlation and covariance kernels on bounded space crossed with the
//! circle: circular correlation families restricted to `[0, pi]`, exponential
//! spatial correlation, their separable product, and a nonseparable family
//! whose `gamma` parameter couples spatial decay to temporal lag (`gamma = 0`
//! recovers the separable product).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geomtime::circular_distance;

/// Spatial dimension; the nonseparable exponent term `gamma * d / 2` is
/// always evaluated with d = 2.
pub const SPATIAL_DIM: f64 = 2.0;

/// Relative jitter added to Gram diagonals before factorization.
pub const JITTER_REL: f64 = 1e-8;

/// Covariance parameters shared by all kernels.
///
/// `cauchy_shape` is the generalized-Cauchy exponent: the separable kernel
/// uses correlation `(1 + (phi_t u)^alpha)^(-cauchy_shape/alpha)`, while the
/// nonseparable kernel uses temporal exponent `cauchy_shape + gamma * d/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceParams {
    pub sigma2: f64,
    /// Spatial decay, 1/km.
    pub phi_s: f64,
    /// Temporal decay, 1/radian.
    pub phi_t: f64,
    /// Smoothness in (0, 1].
    pub alpha: f64,
    pub cauchy_shape: f64,
    /// Separability in [0, 1]; 0 = separable.
    pub gamma: f64,
}

impl CovarianceParams {
    pub fn new(sigma2: f64, phi_s: f64, phi_t: f64) -> CovarianceParams {
        CovarianceParams {
            sigma2,
            phi_s,
            phi_t,
            alpha: 1.0,
            cauchy_shape: 1.0,
            gamma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.gamma >= 0.0 && self.gamma <= 1.0) {
            return Err(Error::Parameter(format!(
                "gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        for (name, v) in [
            ("sigma2", self.sigma2),
            ("phi_s", self.phi_s),
            ("phi_t", self.phi_t),
            ("cauchy_shape", self.cauchy_shape),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Parameter(format!(
            "alpha must lie in (0, 1] (larger values are no longer positive definite), got {alpha}"
        )));
    }
    Ok(())
}

fn check_lag(u: f64) -> Result<()> {
    if !(0.0..=PI + 1e-12).contains(&u) {
        return Err(Error::Parameter(format!(
            "circular lag must lie in [0, pi], got {u}"
        )));
    }
    Ok(())
}

/// Powered exponential circular correlation `exp(-(phi_t u)^alpha)`.
pub fn ccf_powered_exponential(u: f64, phi_t: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_lag(u)?;
    Ok((-(phi_t * u).powf(alpha)).exp())
}

/// Generalized Cauchy circular correlation
/// `(1 + (phi_t u)^alpha)^(-shape/alpha)`.
pub fn ccf_generalized_cauchy(u: f64, phi_t: f64, alpha: f64, shape: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_lag(u)?;
    if !(shape > 0.0) {
        return Err(Error::Parameter(format!("shape must be > 0, got {shape}")));
    }
    Ok((1.0 + (phi_t * u).powf(alpha)).powf(-shape / alpha))
}

/// Exponential spatial correlation `exp(-phi_s h)`.
pub fn scf_exponential(h: f64, phi_s: f64) -> f64 {
    (-phi_s * h).exp()
}

/// Separable space-time covariance
/// `sigma2 * exp(-phi_s h) * (1 + (phi_t u)^alpha)^(-cauchy_shape/alpha)`.
pub fn cov_separable(h: f64, u: f64, p: &CovarianceParams) -> Result<f64> {
    let ct = ccf_generalized_cauchy(u, p.phi_t, p.alpha, p.cauchy_shape)?;
    Ok(p.sigma2 * scf_exponential(h, p.phi_s) * ct)
}

/// Nonseparable space-time covariance
///
/// `sigma2 / (1 + (phi_t u)^alpha)^(shape + gamma d/2)
///   * exp(-phi_s h / (1 + (phi_t u)^alpha)^(gamma/2))`
///
/// with d = 2. `gamma = 0` reduces to the separable kernel with
/// generalized-Cauchy shape `shape * alpha`.
pub fn cov_nonseparable(h: f64, u: f64, p: &CovarianceParams) -> Result<f64> {
    check_alpha(p.alpha)?;
    check_lag(u)?;
    if !(p.gamma >= 0.0 && p.gamma <= 1.0) {
        return Err(Error::Parameter(format!(
            "gamma must lie in [0, 1], got {}",
            p.gamma
        )));
    }
    let base = 1.0 + (p.phi_t * u).powf(p.alpha);
    let temporal = base.powf(-(p.cauchy_shape + p.gamma * SPATIAL_DIM / 2.0));
    let spatial = (-p.phi_s * h / base.powf(p.gamma / 2.0)).exp();
    Ok(p.sigma2 * temporal * spatial)
}

/// A space-time kernel evaluated on points `((x, y), t)`.
pub type KernelFn<'a> = dyn Fn(f64, f64) -> Result<f64> + 'a;

/// Gram matrix of a kernel over points `(s, t)`, with distances
/// `h = ||s_i - s_j||`, `u = circ(t_i, t_j)`.
pub fn gram_matrix(kernel: &KernelFn, points: &[([f64; 2], f64)]) -> Result<DMatrix<f64>> {
    let n = points.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let (si, ti) = points[i];
            let (sj, tj) = points[j];
            let h = ((si[0] - sj[0]).powi(2) + (si[1] - sj[1]).powi(2)).sqrt();
            let u = circular_distance(ti, tj);
            let v = kernel(h, u)?;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// Minimum eigenvalue of the kernel's Gram matrix over the given points.
///
/// Empirical positive-definiteness surrogate: a kernel passes when the
/// returned value is >= `-jitter_tol * sigma2`.
pub fn check_positive_definite(
    kernel: &KernelFn,
    points: &[([f64; 2], f64)],
) -> Result<f64> {
    if points.len() > 500 {
        return Err(Error::Input(format!(
            "positive-definiteness check limited to 500 points, got {}",
            points.len()
        )));
    }
    let g = gram_matrix(kernel, points)?;
    let eig = g.symmetric_eigenvalues();
    Ok(eig.iter().cloned().fold(f64::INFINITY, f64::min))
}
