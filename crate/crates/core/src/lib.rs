//! Simulation and exact-variance laboratory for the excursion area of
//! isotropic stationary Gaussian random fields on the sphere cross time.
//!
//! The library is organized around a covariance model with per-multipole
//! temporal memory exponents. It provides:
//!
//! * deterministic special functions (Legendre, spherical harmonics,
//!   Hermite, Gaunt integrals) and spherical quadrature grids,
//! * a regime classifier predicting the variance growth rate and limit law
//!   of the time-integrated centered excursion area,
//! * a Karhunen-Loeve field simulator with circulant-embedding coefficient
//!   paths and reproducible per-stream RNG,
//! * excursion-area functionals and their Wiener-chaos projections,
//! * an exact finite-horizon variance engine (k-integrals, Gaunt sums),
//!   asymptotic rate constants and dominating-bound checks,
//! * Rosenblatt and composite-Rosenblatt reference samplers,
//! * a Monte Carlo harness for rate fits and distributional tests.
//!
//! Replication-level loops are data parallel via rayon when the default
//! `parallel` feature is enabled; disabling it yields a sequential build
//! with identical numeric output.

pub mod excursion;
pub mod harness;
pub mod manifest;
pub mod model;
pub mod par;
pub mod quad;
pub mod rosenblatt;
pub mod simulate;
pub mod special;
pub mod stats;
pub mod variance;

/// Library-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid model: {0}")]
    Model(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unsupported case: {0}")]
    Unsupported(String),
    #[error("integrity check failed: {0}")]
    Integrity(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
