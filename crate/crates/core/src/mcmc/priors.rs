//! Prior specification and log densities.
//!
//! Conventions (recorded in every config echo): Gamma(shape, rate) with
//! mean shape/rate, so G(2, 0.05) has mean 40; InverseGamma(shape, scale)
//! with density proportional to `x^-(shape+1) exp(-scale/x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperprior for one run. Defaults: `mu_w, delta_w ~ G(2, 0.05)`,
/// `beta ~ N(0, 100)`, `sigma2 ~ IG(2, 0.05)`, `phi_s ~ U[0, 0.3]`,
/// `phi_t ~ U[0, 6]`, `gamma ~ U[0, 1)`, `rho ~ U(-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorSpec {
    pub mu_shape: f64,
    pub mu_rate: f64,
    pub delta_shape: f64,
    pub delta_rate: f64,
    pub beta_var: f64,
    pub sigma2_shape: f64,
    pub sigma2_scale: f64,
    pub phi_s_max: f64,
    pub phi_t_max: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            mu_shape: 2.0,
            mu_rate: 0.05,
            delta_shape: 2.0,
            delta_rate: 0.05,
            beta_var: 100.0,
            sigma2_shape: 2.0,
            sigma2_scale: 0.05,
            phi_s_max: 0.3,
            phi_t_max: 6.0,
        }
    }
}

impl PriorSpec {
    /// Spatial-decay upper bound giving correlation `corr_at_max` at the
    /// region's maximum distance.
    pub fn phi_s_max_for_distance(h_max: f64, corr_at_max: f64) -> f64 {
        -corr_at_max.ln() / h_max
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mu_shape", self.mu_shape),
            ("mu_rate", self.mu_rate),
            ("delta_shape", self.delta_shape),
            ("delta_rate", self.delta_rate),
            ("beta_var", self.beta_var),
            ("sigma2_shape", self.sigma2_shape),
            ("sigma2_scale", self.sigma2_scale),
            ("phi_s_max", self.phi_s_max),
            ("phi_t_max", self.phi_t_max),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("prior {name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn log_mu(&self, x: f64) -> f64 {
        log_gamma_density(x, self.mu_shape, self.mu_rate)
    }

    pub fn log_delta(&self, x: f64) -> f64 {
        log_gamma_density(x, self.delta_shape, self.delta_rate)
    }

    pub fn log_beta(&self, x: f64) -> f64 {
        -0.5 * x * x / self.beta_var
    }

    pub fn log_sigma2(&self, x: f64) -> f64 {
        log_inverse_gamma_density(x, self.sigma2_shape, self.sigma2_scale)
    }

    pub fn log_phi_s(&self, x: f64) -> f64 {
        log_uniform_density(x, 0.0, self.phi_s_max)
    }

    pub fn log_phi_t(&self, x: f64) -> f64 {
        log_uniform_density(x, 0.0, self.phi_t_max)
    }

    pub fn log_gamma_sep(&self, x: f64) -> f64 {
        log_uniform_density(x, 0.0, 1.0)
    }

    pub fn log_rho(&self, x: f64) -> f64 {
        log_uniform_density(x, -1.0, 1.0)
    }
}

/// Unnormalized log Gamma(shape, rate) density; `-inf` outside support.
pub fn log_gamma_density(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 || !x.is_finite() {
        return f64::NEG_INFINITY;
    }
    (shape - 1.0) * x.ln() - rate * x
}

/// Unnormalized log InverseGamma(shape, scale) density.
pub fn log_inverse_gamma_density(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 || !x.is_finite() {
        return f64::NEG_INFINITY;
    }
    -(shape + 1.0) * x.ln() - scale / x
}

/// Log U(lo, hi) density up to a constant; `-inf` outside the open support.
pub fn log_uniform_density(x: f64, lo: f64, hi: f64) -> f64 {
    if x > lo && x < hi { 0.0 } else { f64::NEG_INFINITY }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_density_shape() {
        // G(2, 0.05): log density x e^{-0.05 x} up to constants
        let f = |x: f64| log_gamma_density(x, 2.0, 0.05);
        assert_relative_eq!(f(10.0) - f(20.0), (10.0f64 / 20.0).ln() + 0.05 * 10.0);
        assert_eq!(f(0.0), f64::NEG_INFINITY);
        assert_eq!(f(-1.0), f64::NEG_INFINITY);
        // mode at (shape-1)/rate = 20
        assert!(f(20.0) > f(19.0) && f(20.0) > f(21.0));
    }

    #[test]
    fn inverse_gamma_density_shape() {
        let f = |x: f64| log_inverse_gamma_density(x, 2.0, 0.05);
        // mode at scale/(shape+1)
        let mode = 0.05 / 3.0;
        assert!(f(mode) > f(mode * 0.9) && f(mode) > f(mode * 1.1));
        assert_eq!(f(0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn uniform_support() {
        assert_eq!(log_uniform_density(0.2, 0.0, 0.3), 0.0);
        assert_eq!(log_uniform_density(0.31, 0.0, 0.3), f64::NEG_INFINITY);
        assert_eq!(log_uniform_density(-0.01, 0.0, 0.3), f64::NEG_INFINITY);
    }

    #[test]
    fn phi_s_max_rationale() {
        let phi = PriorSpec::phi_s_max_for_distance(150.0, 0.05);
        assert_relative_eq!((-phi * 150.0f64).exp(), 0.05, max_relative = 1e-12);
    }
}
