//! Gaussian-process machinery on the grid: covariance factor assembly
//! (Kronecker-structured for separable kernels, dense otherwise), the
//! whitened transform `Z = L nu`, and prior field sampling.
//!
//! Vectorization order is fixed project-wide: space-time cell
//! `(js, jt) -> js * M + jt` (time index fastest).

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::covariance::{
    ccf_generalized_cauchy, cov_nonseparable, CovarianceParams, JITTER_REL,
};
use crate::error::{Error, Result};
use crate::geomtime::{circular_distance, SpaceTimeGrid};

/// Lower-triangular covariance factor.
///
/// The Kronecker variant factors the separable covariance
/// `sigma2 * C_s (x) C_t` as `sigma * (L_s (x) L_t)` with `L_s L_s' = C_s`
/// and `L_t L_t' = C_t` correlation Choleskys; the dense variant holds the
/// full NM x NM Cholesky of the nonseparable Gram matrix.
#[derive(Debug, Clone)]
pub enum CovFactor {
    Kronecker {
        l_s: DMatrix<f64>,
        l_t: DMatrix<f64>,
        sigma: f64,
    },
    Dense {
        l: DMatrix<f64>,
        n: usize,
        m: usize,
    },
}

/// Whitened field: standard-normal coordinates and the induced field.
#[derive(Debug, Clone)]
pub struct WhitenedField {
    pub nu: DVector<f64>,
    pub z: DVector<f64>,
}

/// Cholesky with escalating diagonal jitter: starts at
/// `JITTER_REL * scale` and multiplies by 10 for up to 3 retries.
fn cholesky_with_jitter(mut g: DMatrix<f64>, scale: f64) -> Result<Cholesky<f64, Dyn>> {
    let n = g.nrows();
    let mut jitter = JITTER_REL * scale;
    for i in 0..n {
        g[(i, i)] += jitter;
    }
    for _ in 0..=3 {
        if let Some(chol) = Cholesky::new(g.clone()) {
            return Ok(chol);
        }
        let bump = 9.0 * jitter;
        for i in 0..n {
            g[(i, i)] += bump;
        }
        jitter *= 10.0;
    }
    Err(Error::Numerical(format!(
        "Cholesky factorization failed for {n}x{n} Gram matrix after jitter escalation"
    )))
}

/// Spatial correlation matrix over cell centroids.
fn spatial_corr(grid: &SpaceTimeGrid, phi_s: f64) -> DMatrix<f64> {
    let n = grid.n_spatial();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        c[(i, i)] = 1.0;
        for j in 0..i {
            let a = grid.spatial[i].centroid;
            let b = grid.spatial[j].centroid;
            let h = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            let v = (-phi_s * h).exp();
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    c
}

/// Temporal correlation matrix over time-cell centroids (generalized
/// Cauchy on circular distance).
fn temporal_corr(grid: &SpaceTimeGrid, p: &CovarianceParams) -> Result<DMatrix<f64>> {
    let m = grid.n_time();
    let mut c = DMatrix::zeros(m, m);
    for i in 0..m {
        c[(i, i)] = 1.0;
        for j in 0..i {
            let u = circular_distance(grid.time[i].centroid, grid.time[j].centroid);
            let v = ccf_generalized_cauchy(u, p.phi_t, p.alpha, p.cauchy_shape)?;
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(c)
}

/// Assemble the covariance factor for the grid.
///
/// `separable = true` factors the N x N and M x M correlation matrices
/// separately; otherwise the dense NM x NM nonseparable Gram matrix is
/// factored (costly: O((NM)^3)).
pub fn assemble_factor(
    grid: &SpaceTimeGrid,
    p: &CovarianceParams,
    separable: bool,
) -> Result<CovFactor> {
    p.validate()?;
    if grid.n_spatial() == 0 || grid.n_time() == 0 {
        return Err(Error::Input("empty grid".into()));
    }
    if separable {
        let l_s = cholesky_with_jitter(spatial_corr(grid, p.phi_s), 1.0)?;
        let l_t = cholesky_with_jitter(temporal_corr(grid, p)?, 1.0)?;
        Ok(CovFactor::Kronecker {
            l_s: l_s.unpack().l(),
            l_t: l_t.unpack().l(),
            sigma: p.sigma2.sqrt(),
        })
    } else {
        let n = grid.n_spatial();
        let m = grid.n_time();
        let mut g = DMatrix::zeros(n * m, n * m);
        for js in 0..n {
            for jt in 0..m {
                let row = js * m + jt;
                for ks in 0..=js {
                    let a = grid.spatial[js].centroid;
                    let b = grid.spatial[ks].centroid;
                    let h = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                    for kt in 0..m {
                        let col = ks * m + kt;
                        if col > row {
                            continue;
                        }
                        let u = circular_distance(grid.time[jt].centroid, grid.time[kt].centroid);
                        let v = cov_nonseparable(h, u, p)?;
                        g[(row, col)] = v;
                        g[(col, row)] = v;
                    }
                }
            }
        }
        let chol = cholesky_with_jitter(g, p.sigma2)?;
        Ok(CovFactor::Dense {
            l: chol.unpack().l(),
            n,
            m,
        })
    }
}

impl CovFactor {
    /// Latent dimension N * M.
    pub fn dim(&self) -> usize {
        match self {
            CovFactor::Kronecker { l_s, l_t, .. } => l_s.nrows() * l_t.nrows(),
            CovFactor::Dense { l, .. } => l.nrows(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            CovFactor::Kronecker { l_s, l_t, .. } => (l_s.nrows(), l_t.nrows()),
            CovFactor::Dense { n, m, .. } => (*n, *m),
        }
    }

    /// Log determinant of the full covariance matrix.
    pub fn logdet(&self) -> f64 {
        match self {
            CovFactor::Kronecker { l_s, l_t, sigma } => {
                let n = l_s.nrows() as f64;
                let m = l_t.nrows() as f64;
                let ld_s: f64 = (0..l_s.nrows()).map(|i| l_s[(i, i)].ln()).sum();
                let ld_t: f64 = (0..l_t.nrows()).map(|i| l_t[(i, i)].ln()).sum();
                2.0 * (m * ld_s + n * ld_t) + n * m * 2.0 * sigma.ln()
            }
            CovFactor::Dense { l, .. } => {
                2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>()
            }
        }
    }
}

/// Apply the factor: `Z = L nu`.
///
/// The Kronecker variant uses `(L_s (x) L_t) nu = vec(L_t V L_s')` where
/// `V` is `nu` reshaped M x N column-major, costing O(NM(N+M)) instead of
/// O(N^2 M^2).
pub fn transform(factor: &CovFactor, nu: &DVector<f64>) -> Result<DVector<f64>> {
    if nu.len() != factor.dim() {
        return Err(Error::Input(format!(
            "whitened vector length {} does not match factor dimension {}",
            nu.len(),
            factor.dim()
        )));
    }
    match factor {
        CovFactor::Kronecker { l_s, l_t, sigma } => {
            let n = l_s.nrows();
            let m = l_t.nrows();
            // column js of V is nu[js*M .. js*M+M]
            let v = DMatrix::from_column_slice(m, n, nu.as_slice());
            let w = l_t * v * l_s.transpose();
            let mut z = DVector::zeros(n * m);
            for js in 0..n {
                for jt in 0..m {
                    z[js * m + jt] = *sigma * w[(jt, js)];
                }
            }
            Ok(z)
        }
        CovFactor::Dense { l, .. } => Ok(l * nu),
    }
}

/// Draw `nu ~ N(0, I)` and the induced field.
pub fn sample_prior_field<R: Rng + ?Sized>(factor: &CovFactor, rng: &mut R) -> WhitenedField {
    let nu = DVector::from_iterator(
        factor.dim(),
        (0..factor.dim()).map(|_| StandardNormal.sample(rng)),
    );
    let z = transform(factor, &nu).expect("dimensions match by construction");
    WhitenedField { nu, z }
}
