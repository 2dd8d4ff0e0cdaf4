//! Point-process models for event data over bounded 2-D space crossed with
//! circular (24-hour) time.
//!
//! The crate provides:
//!
//! - [`geomtime`]: equirectangular projection, clock wrapping onto the unit
//!   circle with a 02:00 origin, day-of-week assignment, and construction of
//!   the space x circular-time grid used by all models.
//! - [`covariance`]: valid correlation kernels on the circle (powered
//!   exponential, generalized Cauchy), exponential spatial correlation, and
//!   separable / nonseparable space-time covariances.
//! - [`gp`]: covariance factorization (Kronecker-structured in the separable
//!   case), whitened-vector transforms, and prior field sampling.
//! - [`model`]: landmark covariates, two-level daily scale, intensity
//!   assembly, and the grid-approximated Poisson log likelihood.
//! - [`mcmc`]: elliptical slice sampling for the latent field plus adaptive
//!   random-walk Metropolis for hyperparameters and covariate parameters.
//! - [`simulate`]: forward simulation of count tensors and point patterns.
//! - [`validate`]: p-thinning splits, predictive residuals, predictive
//!   interval coverage (PIC), and rank probability scores (RPS).
//! - [`config`], [`ingest`], [`runner`], [`summary`]: batch front door used
//!   by the `circox` binary (ingest / simulate / fit / validate / summarize).

pub mod config;
pub mod covariance;
pub mod error;
pub mod geomtime;
pub mod gp;
pub mod ingest;
pub mod mcmc;
pub mod model;
pub mod runner;
pub mod simulate;
pub mod summary;
pub mod validate;

pub use error::{Error, Result};
