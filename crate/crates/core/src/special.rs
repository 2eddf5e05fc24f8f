//! Deterministic special functions: Legendre polynomials, real spherical
//! harmonics, probabilists' Hermite polynomials, Gaussian density and tail,
//! Gaunt integrals and spherical quadrature grids.
//!
//! All routines are pure f64 and reentrant. The real harmonic basis is the
//! Condon-Shortley-free convention: `Y_{l,0} = sqrt((2l+1)/4pi) P_l(cos
//! theta)`, positive `m` carries `sqrt(2) cos(m phi)`, negative `m` carries
//! `sqrt(2) sin(|m| phi)`; any orthonormal real basis satisfies the
//! identities used downstream, this one is fixed here once.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::quad::gauss_legendre;
use crate::{Error, Result};

pub const FOUR_PI: f64 = 4.0 * PI;

/// Legendre polynomial `P_l(x)` by the three-term recurrence; `P_l(1) = 1`.
pub fn legendre_p(ell: usize, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("legendre_p: |x| > 1 (x = {x})")));
    }
    Ok(legendre_p_unchecked(ell, x))
}

pub(crate) fn legendre_p_unchecked(ell: usize, x: f64) -> f64 {
    let mut p0 = 1.0;
    if ell == 0 {
        return p0;
    }
    let mut p1 = x;
    for k in 1..ell {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Fully normalized associated Legendre `Pbar_{l,m}(x)`, `m >= 0`, such that
/// `2 pi * int_{-1}^{1} Pbar_{l,m}(x)^2 dx = 1` for `m = 0` and the real
/// harmonics built from it are orthonormal on the sphere.
fn normalized_assoc_legendre(ell: usize, m: usize, x: f64) -> f64 {
    debug_assert!(m <= ell);
    let s = (1.0 - x * x).max(0.0).sqrt();
    // Pbar_{m,m}
    let mut pmm = (1.0 / FOUR_PI).sqrt();
    for k in 1..=m {
        let kf = k as f64;
        pmm *= ((2.0 * kf + 1.0) / (2.0 * kf)).sqrt() * s;
    }
    if ell == m {
        return pmm;
    }
    // Pbar_{m+1,m}
    let mut p_prev = pmm;
    let mut p_curr = x * (2.0 * m as f64 + 3.0).sqrt() * pmm;
    if ell == m + 1 {
        return p_curr;
    }
    for l in (m + 2)..=ell {
        let lf = l as f64;
        let mf = m as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
            .sqrt();
        let p_next = a * (x * p_curr - b * p_prev);
        p_prev = p_curr;
        p_curr = p_next;
    }
    p_curr
}

/// Real orthonormal spherical harmonic `Y_{l,m}(theta, phi)`.
pub fn real_spherical_harmonic(ell: usize, m: i64, theta: f64, phi: f64) -> Result<f64> {
    if m.unsigned_abs() as usize > ell {
        return Err(Error::Domain(format!(
            "real_spherical_harmonic: |m| = {} > l = {ell}",
            m.unsigned_abs()
        )));
    }
    let x = theta.cos();
    let pbar = normalized_assoc_legendre(ell, m.unsigned_abs() as usize, x);
    Ok(match m.cmp(&0) {
        std::cmp::Ordering::Equal => pbar,
        std::cmp::Ordering::Greater => std::f64::consts::SQRT_2 * pbar * (m as f64 * phi).cos(),
        std::cmp::Ordering::Less => std::f64::consts::SQRT_2 * pbar * (-m as f64 * phi).sin(),
    })
}

/// Probabilists' Hermite polynomial `H_q(x)`: `H_0 = 1`, `H_1 = x`,
/// `H_{q+1} = x H_q - q H_{q-1}`.
pub fn hermite(q: usize, x: f64) -> f64 {
    let mut h0 = 1.0;
    if q == 0 {
        return h0;
    }
    let mut h1 = x;
    for k in 1..q {
        let h2 = x * h1 - k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Standard Gaussian density `phi(u)` and upper-tail probability
/// `Phi(u) = int_u^inf phi`.
pub fn gaussian_phi_upper(u: f64) -> (f64, f64) {
    let phi = (-0.5 * u * u).exp() / (2.0 * PI).sqrt();
    let tail = 0.5 * statrs::function::erf::erfc(u / std::f64::consts::SQRT_2);
    (phi, tail)
}

/// Chaos coefficient `J_q(u) = H_{q-1}(u) phi(u)`, `q >= 1`.
pub fn j_coefficient(q: usize, u: f64) -> Result<f64> {
    if q == 0 {
        return Err(Error::Domain("j_coefficient: q must be >= 1".into()));
    }
    let (phi, _) = gaussian_phi_upper(u);
    Ok(hermite(q - 1, u) * phi)
}

fn ln_factorial(n: u64) -> f64 {
    statrs::function::gamma::ln_gamma(n as f64 + 1.0)
}

/// Wigner 3j symbol with all magnetic numbers zero.
pub fn wigner_3j_000(l1: usize, l2: usize, l3: usize) -> f64 {
    let j = l1 + l2 + l3;
    if j % 2 != 0 {
        return 0.0;
    }
    if l1 + l2 < l3 || l2 + l3 < l1 || l3 + l1 < l2 {
        return 0.0;
    }
    let g = j / 2;
    let ln_delta = ln_factorial((j - 2 * l1) as u64) + ln_factorial((j - 2 * l2) as u64)
        + ln_factorial((j - 2 * l3) as u64)
        - ln_factorial(j as u64 + 1);
    let ln_num = ln_factorial(g as u64)
        - ln_factorial((g - l1) as u64)
        - ln_factorial((g - l2) as u64)
        - ln_factorial((g - l3) as u64);
    let sign = if g % 2 == 0 { 1.0 } else { -1.0 };
    sign * (0.5 * ln_delta + ln_num).exp()
}

/// Gaunt integral of three zonal harmonics `int Y_{l1,0} Y_{l2,0} Y_{l3,0}`
/// in closed form via the squared 3j coupling.
pub fn gaunt3(l1: usize, l2: usize, l3: usize) -> f64 {
    let w = wigner_3j_000(l1, l2, l3);
    if w == 0.0 {
        return 0.0;
    }
    (((2 * l1 + 1) * (2 * l2 + 1) * (2 * l3 + 1)) as f64 / FOUR_PI).sqrt() * w * w
}

/// Upper bound on the generalized zonal Gaunt integral
/// `G <= sqrt((2l1+1)...(2l_{q-1}+1) / ((4pi)^{q-2} (2l_q+1)))`.
pub fn gaunt_bound(ells: &[usize]) -> f64 {
    let q = ells.len();
    debug_assert!(q >= 2);
    let mut num = 1.0;
    for &l in &ells[..q - 1] {
        num *= (2 * l + 1) as f64;
    }
    (num / (FOUR_PI.powi(q as i32 - 2) * (2 * ells[q - 1] + 1) as f64)).sqrt()
}

/// Sphere quadrature grid: Gauss-Legendre in the colatitude cosine times a
/// uniform longitude rule. Exact for products of harmonics of total degree
/// up to `exactness`.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub colatitude_nodes: Vec<f64>,
    pub colatitude_weights: Vec<f64>,
    pub n_longitude: usize,
    pub exactness: usize,
}

impl SphereQuadrature {
    /// Grid exact for polynomial integrands of degree `exactness` in the
    /// Cartesian coordinates (harmonic products with total degree up to
    /// `exactness`).
    pub fn with_exactness(exactness: usize) -> Self {
        let n_theta = exactness / 2 + 1;
        let (x, w) = gauss_legendre(n_theta);
        let colatitude_nodes: Vec<f64> = x.iter().map(|&xi| xi.acos()).collect();
        // 2 pi factor folded into the longitude weight.
        SphereQuadrature {
            colatitude_nodes,
            colatitude_weights: w,
            n_longitude: exactness + 1,
            exactness,
        }
    }

    pub fn n_points(&self) -> usize {
        self.colatitude_nodes.len() * self.n_longitude
    }

    pub fn longitude_weight(&self) -> f64 {
        2.0 * PI / self.n_longitude as f64
    }

    /// All grid points as (theta, phi, weight), longitude-major within each
    /// colatitude ring.
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let wphi = self.longitude_weight();
        let mut pts = Vec::with_capacity(self.n_points());
        for (theta, wt) in self.colatitude_nodes.iter().zip(&self.colatitude_weights) {
            for j in 0..self.n_longitude {
                let phi = 2.0 * PI * j as f64 / self.n_longitude as f64;
                pts.push((*theta, phi, wt * wphi));
            }
        }
        pts
    }

    pub fn total_weight(&self) -> f64 {
        let wtheta: f64 = self.colatitude_weights.iter().sum();
        wtheta * 2.0 * PI
    }
}

/// Generalized Gaunt integral `int Y_{l1,0} ... Y_{lq,0} dx` for `q >= 3`
/// by one-dimensional Gauss-Legendre quadrature in cos(theta); the
/// integrand is zonal.
pub fn gaunt_general(ells: &[usize], grid: &SphereQuadrature) -> Result<f64> {
    let degree: usize = ells.iter().sum();
    if grid.exactness < degree {
        return Err(Error::Precondition(format!(
            "gaunt_general: grid exactness {} < total degree {degree}",
            grid.exactness
        )));
    }
    let mut total = 0.0;
    for (theta, w) in grid.colatitude_nodes.iter().zip(&grid.colatitude_weights) {
        let x = theta.cos();
        let mut prod = 1.0;
        for &l in ells {
            prod *= ((2 * l + 1) as f64 / FOUR_PI).sqrt() * legendre_p_unchecked(l, x);
        }
        total += w * prod;
    }
    Ok(total * 2.0 * PI)
}

/// Gaunt integral with an internally built exactness-sufficient rule.
pub fn gaunt_zonal(ells: &[usize]) -> f64 {
    let degree: usize = ells.iter().sum();
    if degree % 2 != 0 {
        return 0.0;
    }
    let grid = SphereQuadrature::with_exactness(degree + 2);
    gaunt_general(ells, &grid).expect("grid built with sufficient exactness")
}

/// Empirically calibrated constant `c` in the Hermite sup estimate
/// `|e^{-x^2/4} H_q(x)| <= c sqrt(q!) q^{-1/12}`, measured over q = 1..30
/// on a dense grid and stored with a safety factor of 2.
pub fn hermite_sup_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let mut worst: f64 = 0.0;
        for q in 1..=30usize {
            let ln_qfact = ln_factorial(q as u64);
            let scale = (-0.5 * ln_qfact).exp() * (q as f64).powf(1.0 / 12.0);
            let xmax = 2.5 * (q as f64).sqrt() + 5.0;
            let n = 40_000;
            for i in 0..=n {
                let x = -xmax + 2.0 * xmax * i as f64 / n as f64;
                let v = ((-x * x / 4.0).exp() * hermite(q, x)).abs() * scale;
                worst = worst.max(v);
            }
        }
        2.0 * worst
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_trivial_values() {
        assert_eq!(legendre_p(0, 0.3).unwrap(), 1.0);
        assert!((legendre_p(2, 0.5).unwrap() - (-0.125)).abs() < 1e-15);
        assert!((legendre_p(7, 1.0).unwrap() - 1.0).abs() < 1e-13);
        assert!(legendre_p(3, 1.5).is_err());
    }

    #[test]
    fn legendre_orthogonality_on_gl_nodes() {
        let (x, w) = gauss_legendre(25);
        for l1 in 0..=20usize {
            for l2 in l1..=20usize {
                let s: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&xi, &wi)| {
                        wi * legendre_p_unchecked(l1, xi) * legendre_p_unchecked(l2, xi)
                    })
                    .sum();
                let expect = if l1 == l2 { 2.0 / (2.0 * l1 as f64 + 1.0) } else { 0.0 };
                assert!((s - expect).abs() < 1e-12, "l1={l1} l2={l2} s={s}");
            }
        }
    }

    #[test]
    fn harmonic_trivial_values() {
        let y00 = real_spherical_harmonic(0, 0, 1.234, 5.6).unwrap();
        assert!((y00 - 1.0 / FOUR_PI.sqrt()).abs() < 1e-12);
        let y10 = real_spherical_harmonic(1, 0, 0.0, 0.3).unwrap();
        assert!((y10 - (3.0 / FOUR_PI).sqrt()).abs() < 1e-12);
        assert!(real_spherical_harmonic(2, 3, 0.1, 0.1).is_err());
    }

    #[test]
    fn harmonic_orthonormality_on_grid() {
        let grid = SphereQuadrature::with_exactness(12);
        assert!((grid.total_weight() - FOUR_PI).abs() < 1e-12);
        let pts = grid.points();
        for (l1, m1) in [(0usize, 0i64), (1, 0), (2, 1), (3, 2), (3, -2), (4, -4)] {
            for (l2, m2) in [(0usize, 0i64), (1, 0), (2, 1), (3, 2), (3, -2), (4, -4)] {
                let s: f64 = pts
                    .iter()
                    .map(|&(th, ph, w)| {
                        w * real_spherical_harmonic(l1, m1, th, ph).unwrap()
                            * real_spherical_harmonic(l2, m2, th, ph).unwrap()
                    })
                    .sum();
                let expect = if (l1, m1) == (l2, m2) { 1.0 } else { 0.0 };
                assert!(
                    (s - expect).abs() < 1e-10,
                    "({l1},{m1}) vs ({l2},{m2}): {s}"
                );
            }
        }
    }

    #[test]
    fn addition_formula() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let th1 = rng.gen::<f64>() * PI;
            let ph1 = rng.gen::<f64>() * 2.0 * PI;
            let th2 = rng.gen::<f64>() * PI;
            let ph2 = rng.gen::<f64>() * 2.0 * PI;
            let cosang = th1.cos() * th2.cos() + th1.sin() * th2.sin() * (ph1 - ph2).cos();
            for ell in 0..=10usize {
                let mut s = 0.0;
                for m in -(ell as i64)..=(ell as i64) {
                    s += real_spherical_harmonic(ell, m, th1, ph1).unwrap()
                        * real_spherical_harmonic(ell, m, th2, ph2).unwrap();
                }
                let rhs = (2.0 * ell as f64 + 1.0) / FOUR_PI
                    * legendre_p_unchecked(ell, cosang.clamp(-1.0, 1.0));
                assert!((s - rhs).abs() < 1e-10, "l={ell}: {s} vs {rhs}");
            }
        }
    }

    #[test]
    fn hermite_trivial_values() {
        assert_eq!(hermite(0, 5.3), 1.0);
        assert!((hermite(3, 2.0) - 2.0).abs() < 1e-14);
        assert!((hermite(4, 1.0) - (-2.0)).abs() < 1e-14);
    }

    #[test]
    fn hermite_orthogonality_gauss_hermite() {
        // Probabilists' orthogonality int H_q H_q' phi = q! delta via a
        // rescaled Gauss-Legendre composite rule over [-12, 12].
        let (x, w) = gauss_legendre(200);
        let a = -12.0;
        let b = 12.0;
        for q1 in 0..=8usize {
            for q2 in q1..=8usize {
                let s: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&xi, &wi)| {
                        let t = 0.5 * (b - a) * xi + 0.5 * (a + b);
                        let (phi, _) = gaussian_phi_upper(t);
                        0.5 * (b - a) * wi * hermite(q1, t) * hermite(q2, t) * phi
                    })
                    .sum();
                let expect = if q1 == q2 { ln_factorial(q1 as u64).exp() } else { 0.0 };
                let tol = 1e-8 * expect.max(1.0);
                assert!((s - expect).abs() < tol, "q1={q1} q2={q2}: {s} vs {expect}");
            }
        }
    }

    #[test]
    fn gaussian_values() {
        let (phi, tail) = gaussian_phi_upper(0.0);
        assert!((phi - 0.3989422804014327).abs() < 1e-12);
        assert!((tail - 0.5).abs() < 1e-14);
        let (_, tail) = gaussian_phi_upper(1.959964);
        assert!((tail - 0.025).abs() < 1e-7);
        let (phi, tail) = gaussian_phi_upper(40.0);
        assert!(phi < 1e-300 && tail < 1e-300);
    }

    #[test]
    fn j_coefficient_values() {
        assert!((j_coefficient(1, 0.0).unwrap() - 0.3989422804014327).abs() < 1e-12);
        assert_eq!(j_coefficient(2, 0.0).unwrap(), 0.0);
        assert!(j_coefficient(3, 1.0).unwrap().abs() < 1e-15);
        assert!(j_coefficient(0, 1.0).is_err());
    }

    #[test]
    fn gaunt3_trivial_values() {
        assert!((gaunt3(0, 0, 0) - 1.0 / FOUR_PI.sqrt()).abs() < 1e-12);
        assert_eq!(gaunt3(1, 1, 1), 0.0); // odd parity
        assert_eq!(gaunt3(1, 2, 5), 0.0); // triangle violated
        assert!(gaunt3(2, 2, 2) > 0.0);
        // G_{l,l,0} = (4pi)^{-1/2} for any l.
        for l in 0..=8 {
            assert!((gaunt3(l, l, 0) - 1.0 / FOUR_PI.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn gaunt_general_matches_gaunt3_and_bound() {
        let grid = SphereQuadrature::with_exactness(16);
        for (l1, l2, l3) in [(0, 0, 0), (1, 1, 2), (2, 2, 2), (2, 4, 6), (3, 3, 4)] {
            let q = gaunt_general(&[l1, l2, l3], &grid).unwrap();
            assert!(
                (q - gaunt3(l1, l2, l3)).abs() < 1e-10,
                "({l1},{l2},{l3}): {q} vs {}",
                gaunt3(l1, l2, l3)
            );
        }
        let g4 = gaunt_general(&[0, 0, 0, 0], &grid).unwrap();
        assert!((g4 - 1.0 / FOUR_PI).abs() < 1e-12);
        let g1111 = gaunt_general(&[1, 1, 1, 1], &grid).unwrap();
        assert!(g1111 > 0.0 && g1111 <= gaunt_bound(&[1, 1, 1, 1]) + 1e-12);
        assert!(gaunt_general(&[10, 10, 10], &grid).is_err());
    }

    #[test]
    fn hermite_sup_estimate_uniform_in_q() {
        let c = hermite_sup_constant();
        assert!(c.is_finite() && c > 0.0);
        // The calibration already maximized over q=1..30; spot-check the
        // bound at a few (q, x).
        for q in [1usize, 5, 12, 25, 30] {
            let ln_qfact = statrs::function::gamma::ln_gamma(q as f64 + 1.0);
            for x in [0.0, 1.0, (q as f64).sqrt(), 2.0 * (q as f64).sqrt()] {
                let lhs = ((-x * x / 4.0).exp() * hermite(q, x)).abs();
                let rhs = c * (0.5 * ln_qfact).exp() * (q as f64).powf(-1.0 / 12.0);
                assert!(lhs <= rhs, "q={q} x={x}");
            }
        }
    }
}
