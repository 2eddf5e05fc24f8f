//! Monte Carlo field realizations on a sphere-quadrature x time grid.
//!
//! Each multipole coefficient a_{lm} is an independent stationary Gaussian
//! path with autocovariance C_l, drawn exactly by circulant embedding
//! (dense Cholesky fallback when the minimal embedding is indefinite).
//! The field is then synthesized through the Karhunen-Loeve sum
//! `Z(x,t) = sum_{l,m} a_{lm}(t) Y_{lm}(x)`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{num_complex::Complex, Fft, FftPlanner};

use crate::model::CovarianceModel;
use crate::par::stream_seed;
use crate::special::{real_spherical_harmonic, SphereQuadrature};
use crate::{Error, Result};

/// Eigenvalues in `[-CLIP_TOL * lambda_max, 0)` are clipped to zero;
/// anything more negative triggers the Cholesky fallback.
const CLIP_TOL: f64 = 1e-8;

/// Uniform time grid on `[0, T]` with nodes at cell midpoints
/// `t_k = (k + 1/2) dt`, so that midpoint quadrature of time integrals is
/// first-class.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub t_horizon: f64,
    pub n_steps: usize,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(t_horizon: f64, n_steps: usize) -> Result<Self> {
        if !(t_horizon > 0.0) || n_steps == 0 {
            return Err(Error::Config(format!(
                "time grid needs T > 0 and n_steps > 0, got T = {t_horizon}, n = {n_steps}"
            )));
        }
        Ok(TimeGrid { t_horizon, n_steps, dt: t_horizon / n_steps as f64 })
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_steps).map(|k| (k as f64 + 0.5) * self.dt).collect()
    }
}

enum SamplerBackend {
    /// sqrt(lambda_j / m) spectrum scale plus a forward FFT plan.
    Circulant { scale: Vec<f64>, fft: Arc<dyn Fft<f64>>, m: usize },
    /// Packed lower-triangular Cholesky factor of the n x n Toeplitz
    /// covariance.
    Cholesky(Vec<f64>),
}

/// Exact sampler for a stationary Gaussian vector with a prescribed
/// autocovariance sequence.
pub struct CirculantSampler {
    n: usize,
    backend: SamplerBackend,
    pub clipped: bool,
    pub dense_fallback: bool,
}

fn dense_cholesky(n: usize, acov: &dyn Fn(usize) -> f64) -> Result<Vec<f64>> {
    // packed row-major lower triangle
    let mut l = vec![0.0f64; n * (n + 1) / 2];
    let idx = |i: usize, j: usize| i * (i + 1) / 2 + j;
    for i in 0..n {
        for j in 0..=i {
            let mut s = acov(i - j);
            for k in 0..j {
                s -= l[idx(i, k)] * l[idx(j, k)];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::Precondition(format!(
                        "covariance sequence not positive definite at pivot {i}"
                    )));
                }
                l[idx(i, i)] = s.sqrt();
            } else {
                l[idx(i, j)] = s / l[idx(j, j)];
            }
        }
    }
    Ok(l)
}

impl CirculantSampler {
    /// `acov(j)` is the autocovariance at lag `j` grid steps; it must be
    /// evaluable up to lag `m/2` where `m` is the embedding size (a power
    /// of two at least `2(n-1)`).
    pub fn new(n: usize, acov: &dyn Fn(usize) -> f64) -> Result<Self> {
        Self::with_policy(n, acov, false)
    }

    pub(crate) fn with_policy(
        n: usize,
        acov: &dyn Fn(usize) -> f64,
        force_dense: bool,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("sampler length must be positive".into()));
        }
        if !force_dense {
            let m = (2 * n.max(2) - 2).next_power_of_two().max(4);
            let mut buf: Vec<Complex<f64>> = (0..m)
                .map(|j| Complex::new(acov(j.min(m - j)), 0.0))
                .collect();
            let mut planner = FftPlanner::new();
            let fft = planner.plan_fft_forward(m);
            fft.process(&mut buf);
            let lambda_max = buf.iter().map(|c| c.re).fold(f64::MIN, f64::max);
            let lambda_min = buf.iter().map(|c| c.re).fold(f64::MAX, f64::min);
            if lambda_max <= 0.0 {
                return Err(Error::Precondition("embedding spectrum not positive".into()));
            }
            if lambda_min >= -CLIP_TOL * lambda_max {
                let clipped = lambda_min < 0.0;
                let scale =
                    buf.iter().map(|c| (c.re.max(0.0) / m as f64).sqrt()).collect();
                return Ok(CirculantSampler {
                    n,
                    backend: SamplerBackend::Circulant { scale, fft, m },
                    clipped,
                    dense_fallback: false,
                });
            }
        }
        let l = dense_cholesky(n, acov)?;
        Ok(CirculantSampler {
            n,
            backend: SamplerBackend::Cholesky(l),
            clipped: false,
            dense_fallback: true,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Two independent stationary paths from one spectral draw.
    pub fn sample_pair(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
        match &self.backend {
            SamplerBackend::Circulant { scale, fft, m } => {
                let mut buf: Vec<Complex<f64>> = (0..*m)
                    .map(|j| {
                        let a: f64 = rng.sample(StandardNormal);
                        let b: f64 = rng.sample(StandardNormal);
                        Complex::new(scale[j] * a, scale[j] * b)
                    })
                    .collect();
                fft.process(&mut buf);
                (
                    buf[..self.n].iter().map(|c| c.re).collect(),
                    buf[..self.n].iter().map(|c| c.im).collect(),
                )
            }
            SamplerBackend::Cholesky(l) => {
                let one = |rng: &mut ChaCha8Rng| {
                    let z: Vec<f64> =
                        (0..self.n).map(|_| rng.sample(StandardNormal)).collect();
                    let mut x = vec![0.0; self.n];
                    for i in 0..self.n {
                        let row = i * (i + 1) / 2;
                        x[i] = (0..=i).map(|j| l[row + j] * z[j]).sum();
                    }
                    x
                };
                (one(rng), one(rng))
            }
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.sample_pair(rng).0
    }
}

/// One stationary coefficient path per (l, m), keyed in (l, m) order.
#[derive(Debug, Clone)]
pub struct CoefficientPaths {
    pub seed: u64,
    pub replication: u64,
    pub paths: Vec<((usize, i64), Vec<f64>)>,
}

/// Field values on the product grid, `values[time][point]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub values: Vec<Vec<f64>>,
}

/// Draw one stationary path with autocovariance `c(tau)` on the grid.
/// A degenerate `c(0) = 0` yields the zero path.
pub fn sample_coefficient_path(
    c: &dyn Fn(f64) -> f64,
    grid: &TimeGrid,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let c0 = c(0.0);
    if c0 == 0.0 {
        return Ok(vec![0.0; grid.n_steps]);
    }
    if !(c0 > 0.0) {
        return Err(Error::Precondition(format!("autocovariance at lag 0 is {c0}")));
    }
    let dt = grid.dt;
    let sampler = CirculantSampler::new(grid.n_steps, &|j| c(j as f64 * dt))?;
    Ok(sampler.sample(rng))
}

/// Reusable per-model simulator: embeddings and harmonic tables are built
/// once and shared across replications.
pub struct FieldSimulator<'a> {
    pub model: &'a CovarianceModel,
    pub sphere: &'a SphereQuadrature,
    pub grid: TimeGrid,
    samplers: Vec<(usize, Option<CirculantSampler>)>,
    harmonics: Vec<((usize, i64), Vec<f64>)>,
}

const PATH_STREAM: u64 = 0x70617468; // "path"

impl<'a> FieldSimulator<'a> {
    pub fn new(
        model: &'a CovarianceModel,
        sphere: &'a SphereQuadrature,
        grid: TimeGrid,
    ) -> Result<Self> {
        let dt = grid.dt;
        let mut samplers = Vec::new();
        let mut harmonics = Vec::new();
        let pts = sphere.points();
        for mp in model.multipoles() {
            let ell = mp.ell;
            let sampler = if mp.c0 > 0.0 {
                Some(CirculantSampler::new(grid.n_steps, &|j| {
                    model.c_ell(ell, j as f64 * dt).unwrap()
                })?)
            } else {
                None
            };
            samplers.push((ell, sampler));
            for m in -(ell as i64)..=(ell as i64) {
                let col = pts
                    .iter()
                    .map(|&(theta, phi, _)| real_spherical_harmonic(ell, m, theta, phi).unwrap())
                    .collect();
                harmonics.push(((ell, m), col));
            }
        }
        Ok(FieldSimulator { model, sphere, grid, samplers, harmonics })
    }

    /// Stream-seeded coefficient paths for one replication. Identical
    /// (seed, replication) always yields identical paths regardless of
    /// scheduling.
    pub fn coefficient_paths(&self, seed: u64, replication: u64) -> CoefficientPaths {
        let mut paths = Vec::new();
        for (ell, sampler) in &self.samplers {
            for m in -(*ell as i64)..=(*ell as i64) {
                let path = match sampler {
                    Some(s) => {
                        let sd = stream_seed(&[
                            seed,
                            replication,
                            *ell as u64,
                            (m + *ell as i64) as u64,
                            PATH_STREAM,
                        ]);
                        let mut rng = ChaCha8Rng::seed_from_u64(sd);
                        s.sample(&mut rng)
                    }
                    None => vec![0.0; self.grid.n_steps],
                };
                paths.push(((*ell, m), path));
            }
        }
        CoefficientPaths { seed, replication, paths }
    }

    /// Karhunen-Loeve synthesis on the cached harmonic table.
    pub fn synthesize(&self, paths: &CoefficientPaths) -> Result<FieldSample> {
        let n_pts = self.sphere.n_points();
        let n_t = self.grid.n_steps;
        let mut values = vec![vec![0.0f64; n_pts]; n_t];
        for ((key, path), (hkey, col)) in paths.paths.iter().zip(&self.harmonics) {
            if key != hkey {
                return Err(Error::Precondition("path/harmonic key mismatch".into()));
            }
            if path.len() != n_t {
                return Err(Error::Precondition("path length does not match grid".into()));
            }
            for (t, &a) in path.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let row = &mut values[t];
                for (v, &y) in row.iter_mut().zip(col) {
                    *v += a * y;
                }
            }
        }
        Ok(FieldSample { values })
    }

    pub fn replicate(&self, seed: u64, replication: u64) -> FieldSample {
        self.synthesize(&self.coefficient_paths(seed, replication)).unwrap()
    }
}

/// Standalone synthesis from explicit paths (recomputes harmonics).
pub fn synthesize_field(
    paths: &CoefficientPaths,
    sphere: &SphereQuadrature,
    grid: &TimeGrid,
) -> Result<FieldSample> {
    let pts = sphere.points();
    let n_t = grid.n_steps;
    let mut values = vec![vec![0.0f64; pts.len()]; n_t];
    for ((ell, m), path) in &paths.paths {
        if path.len() != n_t {
            return Err(Error::Precondition("path length does not match grid".into()));
        }
        let col: Vec<f64> = pts
            .iter()
            .map(|&(theta, phi, _)| real_spherical_harmonic(*ell, *m, theta, phi).unwrap())
            .collect();
        for (t, &a) in path.iter().enumerate() {
            for (v, &y) in values[t].iter_mut().zip(&col) {
                *v += a * y;
            }
        }
    }
    Ok(FieldSample { values })
}

/// Monte Carlo estimate of `E[Z(x,t) Z(y,s)]` over grid point pairs at
/// angular separation `arccos(cos_theta)` and time lag `tau`.
pub fn empirical_space_time_cov(
    samples: &[FieldSample],
    sphere: &SphereQuadrature,
    grid: &TimeGrid,
    cos_theta: f64,
    tau: f64,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Precondition("no samples".into()));
    }
    let lag = (tau / grid.dt).round();
    if (lag * grid.dt - tau).abs() > 1e-9 * grid.dt.max(1.0) {
        return Err(Error::Precondition(format!("tau = {tau} is not a multiple of dt")));
    }
    let lag = lag.abs() as usize;
    if lag >= grid.n_steps {
        return Err(Error::Precondition("time lag exceeds the grid".into()));
    }
    let pts = sphere.points();
    let xyz: Vec<[f64; 3]> = pts
        .iter()
        .map(|&(theta, phi, _)| {
            [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
        })
        .collect();
    let mut pairs = Vec::new();
    'outer: for i in 0..xyz.len() {
        for j in 0..xyz.len() {
            let dot = xyz[i][0] * xyz[j][0] + xyz[i][1] * xyz[j][1] + xyz[i][2] * xyz[j][2];
            if (dot - cos_theta).abs() <= 1e-6 {
                pairs.push((i, j));
                if pairs.len() >= 200 {
                    break 'outer;
                }
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::Precondition(format!(
            "no grid point pair at cos(angle) = {cos_theta}"
        )));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for s in samples {
        for t in 0..grid.n_steps - lag {
            for &(i, j) in &pairs {
                total += s.values[t][i] * s.values[t + lag][j];
                count += 1;
            }
        }
    }
    Ok(total / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{two_multipole_model, CovarianceModel, Multipole};
    use crate::special::FOUR_PI;

    fn single_ell0(beta: f64) -> CovarianceModel {
        CovarianceModel::new(vec![Multipole::new(0, FOUR_PI, beta)], false).unwrap()
    }

    fn mean_se(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn zero_variance_gives_zero_path() {
        let grid = TimeGrid::new(4.0, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = sample_coefficient_path(&|_| 0.0, &grid, &mut rng).unwrap();
        assert!(p.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn path_autocovariance_matches_kernel() {
        let model = single_ell0(0.5);
        let grid = TimeGrid::new(8.0, 16).unwrap();
        let dt = grid.dt;
        let c = |tau: f64| model.c_ell(0, tau).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r = 8000;
        let mut lag0 = Vec::with_capacity(r);
        let mut lag1 = Vec::with_capacity(r);
        for _ in 0..r {
            let p = sample_coefficient_path(&c, &grid, &mut rng).unwrap();
            lag0.push(p[3] * p[3]);
            lag1.push(p[3] * p[4]);
        }
        let (m0, s0) = mean_se(&lag0);
        let (m1, s1) = mean_se(&lag1);
        assert!((m0 - c(0.0)).abs() < 4.0 * s0, "lag0 {m0} vs {}", c(0.0));
        assert!((m1 - c(dt)).abs() < 4.0 * s1, "lag1 {m1} vs {}", c(dt));
    }

    #[test]
    fn whole_path_gram_matches_toeplitz() {
        let model = single_ell0(0.3);
        let grid = TimeGrid::new(3.0, 6).unwrap();
        let c = |tau: f64| model.c_ell(0, tau).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r = 6000;
        let paths: Vec<Vec<f64>> = (0..r)
            .map(|_| sample_coefficient_path(&c, &grid, &mut rng).unwrap())
            .collect();
        for i in 0..grid.n_steps {
            for j in 0..grid.n_steps {
                let prods: Vec<f64> = paths.iter().map(|p| p[i] * p[j]).collect();
                let (m, s) = mean_se(&prods);
                let expect = c((i as f64 - j as f64).abs() * grid.dt);
                assert!(
                    (m - expect).abs() < 4.0 * s,
                    "entry ({i},{j}): {m} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn dense_fallback_matches_toeplitz() {
        let model = single_ell0(0.3);
        let grid = TimeGrid::new(3.0, 6).unwrap();
        let dt = grid.dt;
        let sampler = CirculantSampler::with_policy(
            grid.n_steps,
            &|j| model.c_ell(0, j as f64 * dt).unwrap(),
            true,
        )
        .unwrap();
        assert!(sampler.dense_fallback);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let r = 6000;
        let paths: Vec<Vec<f64>> = (0..r).map(|_| sampler.sample(&mut rng)).collect();
        for lag in 0..3usize {
            let prods: Vec<f64> = paths.iter().map(|p| p[0] * p[lag]).collect();
            let (m, s) = mean_se(&prods);
            let expect = model.c_ell(0, lag as f64 * dt).unwrap();
            assert!((m - expect).abs() < 4.0 * s, "lag {lag}: {m} vs {expect}");
        }
    }

    #[test]
    fn replication_is_deterministic() {
        let model = two_multipole_model(0.5, None, 1, 0.5, 0.5).unwrap();
        let sphere = SphereQuadrature::with_exactness(4);
        let grid = TimeGrid::new(4.0, 16).unwrap();
        let sim = FieldSimulator::new(&model, &sphere, grid).unwrap();
        let a = sim.replicate(42, 3);
        let b = sim.replicate(42, 3);
        assert_eq!(a, b);
        let c = sim.replicate(42, 4);
        assert_ne!(a, c);
    }

    #[test]
    fn monopole_field_is_spatially_constant() {
        let model = single_ell0(0.5);
        let sphere = SphereQuadrature::with_exactness(4);
        let grid = TimeGrid::new(2.0, 4).unwrap();
        let sim = FieldSimulator::new(&model, &sphere, grid).unwrap();
        let paths = sim.coefficient_paths(5, 0);
        let field = sim.synthesize(&paths).unwrap();
        for row in &field.values {
            for v in row {
                assert!((v - row[0]).abs() < 1e-12);
            }
        }
        // Z = a00 / sqrt(4 pi)
        let a00 = &paths.paths[0].1;
        for (t, row) in field.values.iter().enumerate() {
            assert!((row[0] - a00[t] / FOUR_PI.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn nonzero_multipoles_integrate_to_zero() {
        let mut paths = Vec::new();
        for m in -2i64..=2 {
            let p = vec![0.3 * (m as f64 + 2.5), -0.1 * m as f64];
            paths.push(((2usize, m), p));
        }
        let paths = CoefficientPaths { seed: 0, replication: 0, paths };
        let sphere = SphereQuadrature::with_exactness(6);
        let grid = TimeGrid::new(1.0, 2).unwrap();
        let field = synthesize_field(&paths, &sphere, &grid).unwrap();
        let pts = sphere.points();
        for row in &field.values {
            let integral: f64 = pts.iter().zip(row).map(|(&(_, _, w), &z)| w * z).sum();
            assert!(integral.abs() < 1e-10, "integral = {integral}");
        }
    }

    #[test]
    fn pointwise_variance_is_unit() {
        let model = two_multipole_model(0.5, None, 1, 0.5, 0.5).unwrap();
        let sphere = SphereQuadrature::with_exactness(2);
        let grid = TimeGrid::new(1.0, 2).unwrap();
        let sim = FieldSimulator::new(&model, &sphere, grid).unwrap();
        let r = 4000;
        let vals: Vec<f64> = (0..r)
            .map(|rep| {
                let f = sim.replicate(99, rep as u64);
                f.values[1][0] * f.values[1][0]
            })
            .collect();
        let (m, s) = mean_se(&vals);
        assert!((m - 1.0).abs() < 4.0 * s, "variance {m} +- {s}");
    }

    #[test]
    fn coefficient_streams_are_uncorrelated() {
        let model = two_multipole_model(0.5, None, 1, 0.5, 0.5).unwrap();
        let sphere = SphereQuadrature::with_exactness(2);
        let grid = TimeGrid::new(1.0, 2).unwrap();
        let sim = FieldSimulator::new(&model, &sphere, grid).unwrap();
        let r = 5000;
        let prods: Vec<f64> = (0..r)
            .map(|rep| {
                let p = sim.coefficient_paths(123, rep as u64);
                // a_{1,-1} and a_{1,0} at the same node
                p.paths[1].1[0] * p.paths[2].1[0]
            })
            .collect();
        let (m, s) = mean_se(&prods);
        assert!(m.abs() < 4.0 * s, "cross-cov {m} +- {s}");
    }

    #[test]
    fn empirical_covariance_tracks_gamma() {
        let model = two_multipole_model(0.5, None, 1, 0.5, 0.5).unwrap();
        let sphere = SphereQuadrature::with_exactness(4);
        let grid = TimeGrid::new(2.0, 8).unwrap();
        let sim = FieldSimulator::new(&model, &sphere, grid.clone()).unwrap();
        let samples: Vec<FieldSample> = (0..600).map(|r| sim.replicate(7, r)).collect();
        // same-point, zero-lag: the unit marginal variance
        let v = empirical_space_time_cov(&samples, &sphere, &grid, 1.0, 0.0).unwrap();
        assert!((v - 1.0).abs() < 0.06, "{v}");
        // pick an actual pair separation from the grid
        let pts = sphere.points();
        let a = &pts[0];
        let b = &pts[3];
        let dot = a.0.sin() * b.0.sin() * (a.1 - b.1).cos() + a.0.cos() * b.0.cos();
        let tau = grid.dt;
        let v = empirical_space_time_cov(&samples, &sphere, &grid, dot, tau).unwrap();
        let expect = model.gamma_cov(dot, tau, 1).unwrap();
        assert!((v - expect).abs() < 0.08, "{v} vs {expect}");
        // no pair at an angle absent from the grid
        assert!(empirical_space_time_cov(&samples, &sphere, &grid, 0.123456, 0.0).is_err());
    }
}
