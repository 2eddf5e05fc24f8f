//! Excursion-area functionals and their Wiener chaos projections.
//!
//! The excursion area `A_u(t) = int_{S^2} 1{Z(x,t) >= u} dx` is evaluated
//! as a weighted indicator sum on the sphere quadrature; the centered
//! time integral `M_T(u) = int_0^T (A_u(t) - 4 pi (1 - Phi(u))) dt` uses
//! the midpoint rule on the same grid that generated the field. The q-th
//! chaotic projection is `(J_q(u)/q!) int_0^T int_{S^2} H_q(Z) dx dt`.

use serde::Serialize;

use crate::model::CovarianceModel;
use crate::simulate::{CoefficientPaths, FieldSample, TimeGrid};
use crate::special::{
    gaussian_phi_upper, hermite, real_spherical_harmonic, SphereQuadrature, FOUR_PI,
};
use crate::{Error, Result};

/// Chaotic decomposition of one realization of M_T(u).
#[derive(Debug, Clone, Serialize)]
pub struct ChaosProjectionSet {
    pub u: f64,
    pub t_horizon: f64,
    /// `per_q[q - 1]` is M_T(u)[q], q = 1..=q_max.
    pub per_q: Vec<f64>,
    /// M_T(u) minus the partial chaos sum.
    pub residual: f64,
}

/// `A_u(t)` at one time index: weighted indicator sum, in `[0, 4 pi]`.
pub fn excursion_area(
    field: &FieldSample,
    sphere: &SphereQuadrature,
    t_index: usize,
    u: f64,
) -> Result<f64> {
    let row = field
        .values
        .get(t_index)
        .ok_or_else(|| Error::Precondition(format!("time index {t_index} out of range")))?;
    let pts = sphere.points();
    if pts.len() != row.len() {
        return Err(Error::Precondition("field/grid point count mismatch".into()));
    }
    Ok(pts
        .iter()
        .zip(row)
        .filter(|(_, &z)| z >= u)
        .map(|(&(_, _, w), _)| w)
        .sum())
}

/// `M_T(u)`: midpoint-rule integral of the centered excursion area.
pub fn m_functional(
    field: &FieldSample,
    sphere: &SphereQuadrature,
    grid: &TimeGrid,
    u: f64,
) -> Result<f64> {
    if field.values.len() != grid.n_steps {
        return Err(Error::Precondition("field/time grid mismatch".into()));
    }
    let expected = FOUR_PI * gaussian_phi_upper(u).1;
    let mut total = 0.0;
    for t in 0..grid.n_steps {
        total += excursion_area(field, sphere, t, u)? - expected;
    }
    Ok(total * grid.dt)
}

/// Normalized value `M / sqrt(Var)`.
pub fn m_tilde(value: f64, variance: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::Precondition(format!("variance {variance} must be positive")));
    }
    Ok(value / variance.sqrt())
}

/// All chaotic projections up to `q_max` plus the residual, in one pass
/// over the field with the Hermite recurrence per grid point.
pub fn chaos_projection_set(
    field: &FieldSample,
    sphere: &SphereQuadrature,
    grid: &TimeGrid,
    u: f64,
    q_max: usize,
) -> Result<ChaosProjectionSet> {
    if q_max == 0 {
        return Err(Error::Domain("q_max must be >= 1".into()));
    }
    if field.values.len() != grid.n_steps {
        return Err(Error::Precondition("field/time grid mismatch".into()));
    }
    let pts = sphere.points();
    let mut sums = vec![0.0f64; q_max]; // int int H_q(Z), q = 1..=q_max
    for row in &field.values {
        if row.len() != pts.len() {
            return Err(Error::Precondition("field/grid point count mismatch".into()));
        }
        for (&(_, _, w), &z) in pts.iter().zip(row) {
            let mut h_prev = 1.0; // H_0
            let mut h = z; // H_1
            sums[0] += w * h;
            for q in 2..=q_max {
                let h_next = z * h - (q as f64 - 1.0) * h_prev;
                h_prev = h;
                h = h_next;
                sums[q - 1] += w * h;
            }
        }
    }
    let (phi, _) = gaussian_phi_upper(u);
    let mut per_q = Vec::with_capacity(q_max);
    let mut fact = 1.0f64;
    for q in 1..=q_max {
        fact *= q as f64;
        let j = hermite(q - 1, u) * phi;
        per_q.push(j / fact * grid.dt * sums[q - 1]);
    }
    let m = m_functional(field, sphere, grid, u)?;
    let residual = m - per_q.iter().sum::<f64>();
    Ok(ChaosProjectionSet { u, t_horizon: grid.t_horizon, per_q, residual })
}

/// Single chaotic projection M_T(u)[q].
pub fn chaos_projection(
    field: &FieldSample,
    sphere: &SphereQuadrature,
    grid: &TimeGrid,
    u: f64,
    q: usize,
) -> Result<f64> {
    Ok(chaos_projection_set(field, sphere, grid, u, q)?.per_q[q - 1])
}

/// First chaos evaluated directly from the stored monopole path:
/// `phi(u) sqrt(4 pi) int_0^T a_00(t) dt`.
pub fn first_chaos_from_monopole(
    paths: &CoefficientPaths,
    grid: &TimeGrid,
    u: f64,
) -> Result<f64> {
    let a00 = paths
        .paths
        .iter()
        .find(|((l, m), _)| *l == 0 && *m == 0)
        .map(|(_, p)| p)
        .ok_or_else(|| Error::Precondition("no monopole path stored".into()))?;
    let (phi, _) = gaussian_phi_upper(u);
    Ok(phi * FOUR_PI.sqrt() * grid.dt * a00.iter().sum::<f64>())
}

/// Monochromatic second-chaos functional
/// `m_{T;l*}(u) = (u / 2 sigma) phi(u / sigma) int_0^T int_{S^2}
/// H_2(Z_{l*} / sigma)`, built from the l* coefficient paths only.
pub fn m_monochromatic(
    model: &CovarianceModel,
    paths: &CoefficientPaths,
    sphere: &SphereQuadrature,
    grid: &TimeGrid,
    ell_star: usize,
    u: f64,
) -> Result<f64> {
    let mp = model
        .multipole(ell_star)
        .ok_or_else(|| Error::Domain(format!("unknown multipole l = {ell_star}")))?;
    let sigma2 = (2 * ell_star + 1) as f64 * mp.c0 / FOUR_PI;
    if !(sigma2 > 0.0) {
        return Err(Error::Precondition(format!("sigma_{ell_star} must be positive")));
    }
    let sigma = sigma2.sqrt();
    let pts = sphere.points();
    let component: Vec<(&Vec<f64>, Vec<f64>)> = paths
        .paths
        .iter()
        .filter(|((l, _), _)| *l == ell_star)
        .map(|((l, m), p)| {
            let col = pts
                .iter()
                .map(|&(theta, phi_a, _)| real_spherical_harmonic(*l, *m, theta, phi_a).unwrap())
                .collect();
            (p, col)
        })
        .collect();
    if component.is_empty() {
        return Err(Error::Precondition(format!("no stored paths for l = {ell_star}")));
    }
    let mut total = 0.0;
    for t in 0..grid.n_steps {
        for (i, &(_, _, w)) in pts.iter().enumerate() {
            let z: f64 = component.iter().map(|(p, col)| p[t] * col[i]).sum();
            let zn = z / sigma;
            total += w * (zn * zn - 1.0);
        }
    }
    let (phi, _) = gaussian_phi_upper(u / sigma);
    Ok(u / (2.0 * sigma) * phi * grid.dt * total)
}
