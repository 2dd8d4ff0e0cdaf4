//! Intensity construction for the NHPP and LGCP variants, and the
//! grid-approximated Poisson log likelihood.
//!
//! The intensity at grid cell (js, jt) on weekday class w is
//!
//! `lambda = lambda0(s_js) * kappa(t_jt, w) * exp(-sigma2/2 + Z[js*M+jt])`
//!
//! where `log lambda0(s) = sum_k beta_k g_k(s)` over landmark kernels and
//! `kappa(t, w) = mu_w (1 + delta_w 1{t in evening})`. The NHPP drops the
//! field term entirely. The `-sigma2/2` correction makes the prior mean of
//! the random factor equal to one, so `lambda0 * kappa` is the prior mean
//! intensity. Intensities are kept in log space; exponentiation happens only
//! at likelihood and prediction boundaries.

use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceParams;
use crate::error::{Error, Result};
use crate::geomtime::{SpaceTimeGrid, EVENING_START};
use crate::gp::WhitenedField;

/// Directional Gaussian landmark kernel.
///
/// `sigma1`/`sigma2` are the easting/northing scales (fixed to adjacent-cell
/// centroid spacings), `rho` the kernel correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSpec {
    pub location: [f64; 2],
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
}

impl LandmarkSpec {
    /// Landmark with kernel scales taken from the grid cell spacing.
    pub fn from_grid(location: [f64; 2], rho: f64, grid: &SpaceTimeGrid) -> LandmarkSpec {
        let sigma1 = (grid.region.x_max - grid.region.x_min) / grid.nx as f64;
        let sigma2 = (grid.region.y_max - grid.region.y_min) / grid.ny as f64;
        LandmarkSpec {
            location,
            sigma1,
            sigma2,
            rho,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho.abs() >= 1.0 {
            return Err(Error::Parameter(format!(
                "landmark kernel correlation must satisfy |rho| < 1, got {}",
                self.rho
            )));
        }
        if !(self.sigma1 > 0.0 && self.sigma2 > 0.0) {
            return Err(Error::Parameter("landmark kernel scales must be > 0".into()));
        }
        Ok(())
    }
}

/// Two-level daily scale per weekday class: level `mu_w` outside the evening
/// window `[4*pi/3, 2*pi)` (18:00-02:00), `mu_w (1 + delta_w)` inside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalParams {
    pub mu: Vec<f64>,
    pub delta: Vec<f64>,
}

impl TemporalParams {
    pub fn constant(mu: f64, delta: f64, classes: usize) -> TemporalParams {
        TemporalParams {
            mu: vec![mu; classes],
            delta: vec![delta; classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu.len() != self.delta.len() || self.mu.is_empty() {
            return Err(Error::Parameter(
                "temporal parameter vectors must be nonempty and equal length".into(),
            ));
        }
        Ok(())
    }
}

/// Full parameter state for either model variant; `field == None` is the
/// NHPP.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelState {
    pub beta: Vec<f64>,
    pub landmarks: Vec<LandmarkSpec>,
    pub temporal: TemporalParams,
    pub cov: CovarianceParams,
    pub field: Option<WhitenedField>,
}

impl ModelState {
    pub fn validate(&self, grid: &SpaceTimeGrid) -> Result<()> {
        if self.beta.len() != self.landmarks.len() {
            return Err(Error::Parameter(format!(
                "{} beta coefficients for {} landmarks",
                self.beta.len(),
                self.landmarks.len()
            )));
        }
        for lm in &self.landmarks {
            lm.validate()?;
        }
        self.temporal.validate()?;
        if self.temporal.classes() != grid.weekday_classes {
            return Err(Error::Parameter(format!(
                "temporal parameters have {} classes, grid has {}",
                self.temporal.classes(),
                grid.weekday_classes
            )));
        }
        if let Some(f) = &self.field {
            if f.z.len() != grid.n_cells() {
                return Err(Error::Parameter(format!(
                    "field length {} does not match grid cells {}",
                    f.z.len(),
                    grid.n_cells()
                )));
            }
        }
        Ok(())
    }
}

/// Landmark covariate `g_k(s) = exp(-(s - s*)' Sigma^-1 (s - s*) / 2)`.
pub fn landmark_covariate(s: [f64; 2], lm: &LandmarkSpec) -> Result<f64> {
    lm.validate()?;
    let dx = s[0] - lm.location[0];
    let dy = s[1] - lm.location[1];
    let x = dx / lm.sigma1;
    let y = dy / lm.sigma2;
    let q = (x * x - 2.0 * lm.rho * x * y + y * y) / (1.0 - lm.rho * lm.rho);
    Ok((-0.5 * q).exp())
}

/// `log lambda0(s) = sum_k beta_k g_k(s)`.
pub fn log_lambda0(s: [f64; 2], landmarks: &[LandmarkSpec], beta: &[f64]) -> Result<f64> {
    if landmarks.len() != beta.len() {
        return Err(Error::Parameter(
            "beta and landmark lists must have equal length".into(),
        ));
    }
    let mut acc = 0.0;
    for (lm, b) in landmarks.iter().zip(beta) {
        acc += b * landmark_covariate(s, lm)?;
    }
    Ok(acc)
}

/// Covariate matrix G with `G[js][k] = g_k(centroid_js)`, row-major
/// `js * K + k`. Cached by the samplers.
pub fn covariate_matrix(grid: &SpaceTimeGrid, landmarks: &[LandmarkSpec]) -> Result<Vec<f64>> {
    let k = landmarks.len();
    let mut g = vec![0.0; grid.n_spatial() * k];
    for (js, cell) in grid.spatial.iter().enumerate() {
        for (j, lm) in landmarks.iter().enumerate() {
            g[js * k + j] = landmark_covariate(cell.centroid, lm)?;
        }
    }
    Ok(g)
}

/// Daily scale `kappa(t, w)`.
pub fn kappa(t: f64, w: usize, tp: &TemporalParams) -> f64 {
    if t >= EVENING_START {
        tp.mu[w] * (1.0 + tp.delta[w])
    } else {
        tp.mu[w]
    }
}

/// Log intensity at space-time cell (js, jt) for weekday class w.
pub fn log_intensity(grid: &SpaceTimeGrid, state: &ModelState, js: usize, jt: usize, w: usize) -> Result<f64> {
    let s = grid.spatial[js].centroid;
    let t = grid.time[jt].centroid;
    let mut ll = log_lambda0(s, &state.landmarks, &state.beta)? + kappa(t, w, &state.temporal).ln();
    if let Some(f) = &state.field {
        ll += -state.cov.sigma2 / 2.0 + f.z[js * grid.n_time() + jt];
    }
    Ok(ll)
}

/// Log intensity over all cells and weekday classes, flat `(js*M+jt)*W + w`.
pub fn log_intensity_all(grid: &SpaceTimeGrid, state: &ModelState) -> Result<Vec<f64>> {
    state.validate(grid)?;
    let loglam0: Vec<f64> = grid
        .spatial
        .iter()
        .map(|c| log_lambda0(c.centroid, &state.landmarks, &state.beta))
        .collect::<Result<_>>()?;
    let field = state.field.as_ref().map(|f| (f.z.as_slice(), state.cov.sigma2));
    Ok(log_intensity_inner(grid, &loglam0, &state.temporal, field))
}

fn log_intensity_inner(
    grid: &SpaceTimeGrid,
    loglam0: &[f64],
    tp: &TemporalParams,
    field: Option<(&[f64], f64)>,
) -> Vec<f64> {
    let m = grid.n_time();
    let w_classes = grid.weekday_classes;
    let ln_mu: Vec<f64> = tp.mu.iter().map(|v| v.ln()).collect();
    let ln_mu_ev: Vec<f64> = tp
        .mu
        .iter()
        .zip(&tp.delta)
        .map(|(mu, d)| (mu * (1.0 + d)).ln())
        .collect();
    let mut out = vec![0.0; grid.n_cells() * w_classes];
    for js in 0..grid.n_spatial() {
        for jt in 0..m {
            let j = js * m + jt;
            let base = loglam0[js]
                + match field {
                    Some((z, sigma2)) => z[j] - sigma2 / 2.0,
                    None => 0.0,
                };
            let lnk = if grid.time[jt].evening { &ln_mu_ev } else { &ln_mu };
            for w in 0..w_classes {
                out[j * w_classes + w] = base + lnk[w];
            }
        }
    }
    out
}

/// Grid-approximated log likelihood
/// `sum_w sum_j [ n_jw log lambda_jw - lambda_jw Delta_j ]`.
pub fn log_likelihood(grid: &SpaceTimeGrid, state: &ModelState) -> Result<f64> {
    state.validate(grid)?;
    let loglam0: Vec<f64> = grid
        .spatial
        .iter()
        .map(|c| log_lambda0(c.centroid, &state.landmarks, &state.beta))
        .collect::<Result<_>>()?;
    let field = state.field.as_ref().map(|f| (f.z.as_slice(), state.cov.sigma2));
    log_likelihood_inner(grid, &loglam0, &state.temporal, field)
}

/// Likelihood workhorse over precomputed spatial baselines; used by the
/// samplers to avoid re-evaluating landmark kernels.
pub(crate) fn log_likelihood_inner(
    grid: &SpaceTimeGrid,
    loglam0: &[f64],
    tp: &TemporalParams,
    field: Option<(&[f64], f64)>,
) -> Result<f64> {
    let m = grid.n_time();
    let w_classes = grid.weekday_classes;
    let ln_mu: Vec<f64> = tp.mu.iter().map(|v| v.ln()).collect();
    let ln_mu_ev: Vec<f64> = tp
        .mu
        .iter()
        .zip(&tp.delta)
        .map(|(mu, d)| (mu * (1.0 + d)).ln())
        .collect();
    let kap: Vec<f64> = tp.mu.clone();
    let kap_ev: Vec<f64> = tp
        .mu
        .iter()
        .zip(&tp.delta)
        .map(|(mu, d)| mu * (1.0 + d))
        .collect();

    let mut ll = 0.0;
    for js in 0..grid.n_spatial() {
        let base_s = loglam0[js];
        for jt in 0..m {
            let j = js * m + jt;
            let base = base_s
                + match field {
                    Some((z, sigma2)) => z[j] - sigma2 / 2.0,
                    None => 0.0,
                };
            let e = base.exp();
            let vol = grid.cell_volume(js, jt);
            let (lnk, kv) = if grid.time[jt].evening {
                (&ln_mu_ev, &kap_ev)
            } else {
                (&ln_mu, &kap)
            };
            for w in 0..w_classes {
                let n = grid.count(js, jt, w);
                let term = if n > 0 {
                    f64::from(n) * (base + lnk[w]) - e * kv[w] * vol
                } else {
                    -e * kv[w] * vol
                };
                ll += term;
            }
            if !ll.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite log likelihood at spatial cell {js}, time cell {jt}"
                )));
            }
        }
    }
    Ok(ll)
}

/// Posterior summary helper: expected count `sum_j lambda_jw Delta_j` per
/// weekday class.
pub fn expected_counts_per_class(grid: &SpaceTimeGrid, state: &ModelState) -> Result<Vec<f64>> {
    let log_lam = log_intensity_all(grid, state)?;
    let m = grid.n_time();
    let w_classes = grid.weekday_classes;
    let mut out = vec![0.0; w_classes];
    for js in 0..grid.n_spatial() {
        for jt in 0..m {
            let j = js * m + jt;
            let vol = grid.cell_volume(js, jt);
            for (w, acc) in out.iter_mut().enumerate() {
                *acc += log_lam[j * w_classes + w].exp() * vol;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomtime::{build_grid, wrap_time, EventRecord, Region, Weekday};
    use crate::gp::{assemble_factor, sample_prior_field};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, TAU};

    fn lm(x: f64, y: f64, rho: f64) -> LandmarkSpec {
        LandmarkSpec {
            location: [x, y],
            sigma1: 1.0,
            sigma2: 1.0,
            rho,
        }
    }

    #[test]
    fn landmark_kernel_values() {
        let l = lm(3.0, 4.0, 0.0);
        assert_eq!(landmark_covariate([3.0, 4.0], &l).unwrap(), 1.0);
        assert_relative_eq!(
            landmark_covariate([4.0, 4.0], &l).unwrap(),
            (-0.5f64).exp(),
            max_relative = 1e-15
        );
        // hand oracle: quadratic form (1 - 2*0.5 + 1)/(1 - 0.25) = 4/3
        let l = lm(0.0, 0.0, 0.5);
        assert_relative_eq!(
            landmark_covariate([1.0, 1.0], &l).unwrap(),
            (-2.0f64 / 3.0).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            landmark_covariate([1.0, 1.0], &l).unwrap(),
            0.513417119032592,
            max_relative = 1e-12
        );
        let bad = lm(0.0, 0.0, 1.0);
        assert!(landmark_covariate([1.0, 1.0], &bad).is_err());
    }

    #[test]
    fn log_lambda0_examples() {
        let lms = vec![lm(0.0, 0.0, 0.0), lm(5.0, 0.0, 0.0)];
        assert_eq!(log_lambda0([2.0, 2.0], &lms, &[0.0, 0.0]).unwrap(), 0.0);
        assert_relative_eq!(
            log_lambda0([0.0, 0.0], &lms[..1], &[3.0]).unwrap(),
            3.0,
            max_relative = 1e-12
        );
        // two landmarks each with g = 0.5 and beta = 3 give 3
        let s = [0.0, (2.0f64 * (2.0f64).ln()).sqrt()];
        let lms = vec![lm(0.0, 0.0, 0.0), lm(0.0, 2.0 * s[1], 0.0)];
        assert_relative_eq!(log_lambda0(s, &lms, &[3.0, 3.0]).unwrap(), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn kappa_two_levels() {
        let tp = TemporalParams::constant(2.0, 0.5, 1);
        assert_eq!(kappa(0.0, 0, &tp), 2.0);
        assert_eq!(kappa(4.0 * PI / 3.0, 0, &tp), 3.0);
        assert_eq!(kappa(wrap_time(18.0).unwrap(), 0, &tp), 3.0);
        let flat = TemporalParams::constant(2.0, 0.0, 1);
        for t in [0.0, 1.0, 4.0 * PI / 3.0, TAU - 1e-9] {
            assert_eq!(kappa(t, 0, &flat), 2.0);
        }
    }

    /// Grid with a single spatial cell of area 1/(2 pi) and one time cell,
    /// so the cell volume is exactly 1, holding `n` events.
    fn unit_volume_grid(n: usize) -> SpaceTimeGrid {
        let region = Region::rect(0.0, 1.0, 0.0, 1.0 / TAU).unwrap();
        let events: Vec<EventRecord> = (0..n)
            .map(|_| EventRecord {
                easting: 0.5,
                northing: 0.5 / TAU,
                clock_angle: 1.0,
                weekday: Weekday::Sun,
                type_label: "x".into(),
            })
            .collect();
        let (grid, rej) = build_grid(&region, 1, 1, 1, 1, &events).unwrap();
        assert!(rej.is_empty());
        grid
    }

    fn nhpp_state(mu: f64, delta: f64, classes: usize) -> ModelState {
        ModelState {
            beta: vec![],
            landmarks: vec![],
            temporal: TemporalParams::constant(mu, delta, classes),
            cov: CovarianceParams::new(1.0, 0.1, 0.1),
            field: None,
        }
    }

    #[test]
    fn one_cell_likelihood_value() {
        let grid = unit_volume_grid(3);
        assert_relative_eq!(grid.cell_volume(0, 0), 1.0, max_relative = 1e-12);
        let state = nhpp_state(2.0, 0.0, 1);
        let ll = log_likelihood(&grid, &state).unwrap();
        assert_relative_eq!(ll, 3.0 * (2.0f64).ln() - 2.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_counts_gives_negative_integral() {
        let region = Region::rect(0.0, 2.0, 0.0, 3.0).unwrap();
        let (grid, _) = build_grid(&region, 2, 3, 4, 1, &[]).unwrap();
        let state = nhpp_state(1.7, 0.0, 1);
        let ll = log_likelihood(&grid, &state).unwrap();
        let total_vol: f64 = (0..grid.n_spatial())
            .flat_map(|js| (0..grid.n_time()).map(move |jt| (js, jt)))
            .map(|(js, jt)| grid.cell_volume(js, jt))
            .sum();
        assert_relative_eq!(ll, -1.7 * total_vol, max_relative = 1e-12);
    }

    #[test]
    fn constant_rate_mle_is_count_over_volume() {
        // golden-section maximization of mu -> loglik
        let region = Region::rect(0.0, 2.0, 0.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let events: Vec<EventRecord> = (0..57)
            .map(|_| EventRecord {
                easting: rng.random_range(0.0..2.0),
                northing: rng.random_range(0.0..2.0),
                clock_angle: rng.random_range(0.0..TAU),
                weekday: Weekday::Sun,
                type_label: "x".into(),
            })
            .collect();
        let (grid, _) = build_grid(&region, 2, 2, 4, 1, &events).unwrap();
        let total_vol: f64 = (0..grid.n_spatial())
            .flat_map(|js| (0..grid.n_time()).map(move |jt| (js, jt)))
            .map(|(js, jt)| grid.cell_volume(js, jt))
            .sum();
        let expect = 57.0 / total_vol;

        let f = |mu: f64| log_likelihood(&grid, &nhpp_state(mu, 0.0, 1)).unwrap();
        let (mut a, mut b) = (1e-6, 100.0);
        let phi = (5.0f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if f(c) > f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let argmax = (a + b) / 2.0;
        assert_relative_eq!(argmax, expect, max_relative = 1e-6);
    }

    #[test]
    fn likelihood_additive_over_weekday_classes() {
        let region = Region::rect(0.0, 2.0, 0.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let events: Vec<EventRecord> = (0..80)
            .map(|i| EventRecord {
                easting: rng.random_range(0.0..2.0),
                northing: rng.random_range(0.0..2.0),
                clock_angle: rng.random_range(0.0..TAU),
                weekday: Weekday::from_index(i % 7),
                type_label: "x".into(),
            })
            .collect();
        let (grid, _) = build_grid(&region, 2, 2, 3, 7, &events).unwrap();
        let mut tp = TemporalParams::constant(1.0, 0.0, 7);
        for w in 0..7 {
            tp.mu[w] = 0.5 + 0.3 * w as f64;
            tp.delta[w] = 0.1 * w as f64;
        }
        let state = ModelState {
            temporal: tp.clone(),
            ..nhpp_state(1.0, 0.0, 7)
        };
        let joint = log_likelihood(&grid, &state).unwrap();

        // per-class evaluation: zero out the other classes' counts and
        // drop their integral term by rebuilding single-class grids
        let mut sum = 0.0;
        for w in 0..7 {
            let wgrid = {
                let mut g = grid.clone();
                let mut counts = vec![0u32; g.n_cells()];
                for js in 0..g.n_spatial() {
                    for jt in 0..g.n_time() {
                        counts[js * g.n_time() + jt] = g.count(js, jt, w);
                    }
                }
                g.counts = counts;
                g.weekday_classes = 1;
                g
            };
            let wstate = ModelState {
                temporal: TemporalParams {
                    mu: vec![tp.mu[w]],
                    delta: vec![tp.delta[w]],
                },
                ..nhpp_state(1.0, 0.0, 1)
            };
            sum += log_likelihood(&wgrid, &wstate).unwrap();
        }
        assert_relative_eq!(joint, sum, max_relative = 1e-12);
    }

    #[test]
    fn field_shared_across_weekday_classes() {
        let region = Region::rect(0.0, 2.0, 0.0, 2.0).unwrap();
        let (grid, _) = build_grid(&region, 2, 1, 2, 7, &[]).unwrap();
        let p = CovarianceParams::new(1.5, 0.1, 0.3);
        let factor = assemble_factor(&grid, &p, true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let field = sample_prior_field(&factor, &mut rng);
        let state = ModelState {
            beta: vec![],
            landmarks: vec![],
            temporal: TemporalParams::constant(1.0, 0.2, 7),
            cov: p,
            field: Some(field),
        };
        let before = log_intensity_all(&grid, &state).unwrap();
        let mut bumped = state.clone();
        bumped.field.as_mut().unwrap().z[1] += 0.7;
        let after = log_intensity_all(&grid, &bumped).unwrap();
        let w_classes = grid.weekday_classes;
        for w in 0..w_classes {
            let d = after[w_classes + w] - before[w_classes + w];
            assert_relative_eq!(d, 0.7, max_relative = 1e-12);
        }
        for (j, (&a, &b)) in after.iter().zip(before.iter()).enumerate() {
            if j / w_classes != 1 {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn lognormal_mean_identity() {
        // E[exp(-sigma2/2 + Z_j)] = 1 under the prior
        let region = Region::rect(0.0, 4.0, 0.0, 4.0).unwrap();
        let (grid, _) = build_grid(&region, 2, 2, 2, 1, &[]).unwrap();
        let p = CovarianceParams::new(1.2, 0.1, 0.4);
        let factor = assemble_factor(&grid, &p, true).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n_draws = 40_000;
        let mut acc = vec![0.0; grid.n_cells()];
        let mut acc2 = vec![0.0; grid.n_cells()];
        for _ in 0..n_draws {
            let f = sample_prior_field(&factor, &mut rng);
            for j in 0..grid.n_cells() {
                let v = (-p.sigma2 / 2.0 + f.z[j]).exp();
                acc[j] += v;
                acc2[j] += v * v;
            }
        }
        for j in 0..grid.n_cells() {
            let mean = acc[j] / n_draws as f64;
            let var = acc2[j] / n_draws as f64 - mean * mean;
            let se = (var / n_draws as f64).sqrt();
            assert!(
                (mean - 1.0).abs() < 3.5 * se,
                "cell {j}: mean {mean}, se {se}"
            );
        }
    }

    #[test]
    fn log_intensity_cancellation() {
        let region = Region::rect(0.0, 1.0, 0.0, 1.0).unwrap();
        let (grid, _) = build_grid(&region, 1, 1, 1, 1, &[]).unwrap();
        let p = CovarianceParams::new(2.0, 0.1, 0.1);
        let nu = nalgebra::DVector::zeros(1);
        let z = nalgebra::DVector::from_element(1, p.sigma2 / 2.0);
        let state = ModelState {
            beta: vec![],
            landmarks: vec![],
            temporal: TemporalParams::constant(3.0, 0.0, 1),
            cov: p,
            field: Some(WhitenedField { nu, z }),
        };
        assert_relative_eq!(
            log_intensity(&grid, &state, 0, 0, 0).unwrap(),
            (3.0f64).ln(),
            max_relative = 1e-12
        );
    }
}
