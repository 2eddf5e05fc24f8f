//! Standard and composite Rosenblatt reference laws.
//!
//! The standard Rosenblatt variable X_beta (beta in (0, 1/2)) is sampled
//! through its Dobrushin-Major finite-sum approximation: a centered sum of
//! H_2(xi_k) over a stationary Gaussian sequence with autocovariance
//! (1+k)^{-beta}, normalized to unit variance with the exact finite-n
//! standard deviation. Cumulants come from the circular integrals
//! `a_j = int_{[0,1]^j} prod |x_i - x_{i+1}|^{-beta}` (cyclic) via
//! `kappa_j = (2 sigma)^j a_j (j-1)! / 2`, anchored by kappa_2 = 1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::beta::beta as beta_fn;
use statrs::function::gamma::gamma;

use crate::par::{map_indexed, stream_seed};
use crate::quad::gauss_legendre;
use crate::simulate::CirculantSampler;
use crate::special::gaussian_phi_upper;
use crate::{Error, Result};

const ROSE_STREAM: u64 = 0x726F7365; // "rose"
const COMP_STREAM: u64 = 0x636F6D70; // "comp"

/// Parameters of the (composite) Rosenblatt sampler.
#[derive(Debug, Clone)]
pub struct RosenblattParams {
    pub beta: f64,
    pub n_terms: usize,
    pub burn_in: usize,
    pub weights: Option<Vec<f64>>,
}

impl RosenblattParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 0.5) {
            return Err(Error::Domain(format!("beta = {beta} must lie in (0, 1/2)")));
        }
        Ok(RosenblattParams { beta, n_terms: 1 << 16, burn_in: 0, weights: None })
    }

    pub fn with_n_terms(mut self, n_terms: usize) -> Self {
        self.n_terms = n_terms;
        self
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty()
            || weights.iter().any(|w| !w.is_finite())
            || weights.iter().all(|&w| w == 0.0)
        {
            return Err(Error::Domain("weights must be finite and not all zero".into()));
        }
        self.weights = Some(weights);
        Ok(self)
    }
}

/// `sigma(beta) = sqrt((1-2 beta)(1-beta)/2)` and
/// `a(beta) = sigma / (2 Gamma(beta) sin((1-beta) pi / 2))`.
pub fn sigma_and_a(beta: f64) -> Result<(f64, f64)> {
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::Domain(format!("beta = {beta} must lie in (0, 1/2)")));
    }
    let sigma = (0.5 * (1.0 - 2.0 * beta) * (1.0 - beta)).sqrt();
    let a = sigma / (2.0 * gamma(beta) * ((1.0 - beta) * std::f64::consts::PI / 2.0).sin());
    Ok((sigma, a))
}

/// `int_0^limit t^{-beta} (t + d)^{-beta} dt` after the regularizing
/// substitution s = t^{1-beta}.
fn edge_integral(limit: f64, d: f64, beta: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    if limit <= 0.0 {
        return 0.0;
    }
    let s_max = limit.powf(1.0 - beta);
    let mut total = 0.0;
    for (&x, &w) in nodes.iter().zip(weights) {
        let s = 0.5 * s_max * (x + 1.0);
        let t = s.powf(1.0 / (1.0 - beta));
        total += w * (t + d).powf(-beta);
    }
    total * 0.5 * s_max / (1.0 - beta)
}

/// `int_0^1 |x-z|^{-beta} |z-y|^{-beta} dz`, the iterated kernel of the
/// trace representation a_j = tr(K^j).
fn iterated_kernel(x: f64, y: f64, beta: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    let d = hi - lo;
    let middle = if d > 0.0 { d.powf(1.0 - 2.0 * beta) * beta_fn(1.0 - beta, 1.0 - beta) } else { 0.0 };
    edge_integral(lo, d, beta, nodes, weights)
        + middle
        + edge_integral(1.0 - hi, d, beta, nodes, weights)
}

/// Monte Carlo estimate of a_j with its standard error; fixed internal
/// streams keep it deterministic per (j, beta).
pub fn a_j_monte_carlo(j: usize, beta: f64, n_draws: usize) -> Result<(f64, f64)> {
    if j < 2 {
        return Err(Error::Domain("a_j needs j >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(&[j as u64, beta.to_bits(), 0xA11]));
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut x = vec![0.0f64; j];
    for _ in 0..n_draws {
        for xi in x.iter_mut() {
            *xi = rng.gen::<f64>();
        }
        let mut v = 1.0;
        for i in 0..j {
            v *= (x[i] - x[(i + 1) % j]).abs().powf(-beta);
        }
        sum += v;
        sum_sq += v * v;
    }
    let n = n_draws as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok((mean, (var / n).sqrt()))
}

/// Circular integral `a_j(beta)`; closed form for j = 2, 3, trace
/// quadrature for j = 4, Monte Carlo (with standard error) for j >= 5.
pub fn a_j_coefficient(j: usize, beta: f64) -> Result<(f64, Option<f64>)> {
    if j < 2 {
        return Err(Error::Domain("a_j needs j >= 2".into()));
    }
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::Domain(format!("beta = {beta} must lie in (0, 1/2)")));
    }
    match j {
        2 => Ok((2.0 / ((1.0 - 2.0 * beta) * (2.0 - 2.0 * beta)), None)),
        3 => {
            // ordering + simplex substitution separates the integral:
            // a_3 = 6 (1/(2-3b) - 1/(3-3b)) B(1-b, 1-b)
            let v = 6.0 * (1.0 / (2.0 - 3.0 * beta) - 1.0 / (3.0 - 3.0 * beta))
                * beta_fn(1.0 - beta, 1.0 - beta);
            Ok((v, None))
        }
        4 => {
            // a_4 = tr(K^4) = int int K2(x,y)^2 with the continuous
            // iterated kernel K2
            let (en, ew) = gauss_legendre(32);
            let (xn, xw) = gauss_legendre(64);
            let mut total = 0.0;
            for (&xi, &wi) in xn.iter().zip(&xw) {
                let x = 0.5 * (xi + 1.0);
                for (&yj, &wj) in xn.iter().zip(&xw) {
                    let y = 0.5 * (yj + 1.0);
                    let g = iterated_kernel(x, y, beta, &en, &ew);
                    total += wi * wj * 0.25 * g * g;
                }
            }
            Ok((total, None))
        }
        _ => {
            let (v, se) = a_j_monte_carlo(j, beta, 400_000)?;
            Ok((v, Some(se)))
        }
    }
}

/// j-th cumulant of X_beta: `kappa_j = (2 sigma)^j a_j (j-1)! / 2`.
pub fn cumulant(j: usize, beta: f64) -> Result<f64> {
    let (sigma, _) = sigma_and_a(beta)?;
    let (a, _) = a_j_coefficient(j, beta)?;
    let fact: f64 = (1..j).product::<usize>() as f64;
    Ok(0.5 * (2.0 * sigma).powi(j as i32) * a * fact)
}

/// Exact standard deviation of `sum_{k<n} H_2(xi_k)` for autocovariance
/// `rho(d) = (1+d)^{-beta}`.
fn finite_sum_sd(n: usize, beta: f64) -> f64 {
    let mut var = n as f64; // d = 0 term of sum (n - |d|) rho^2, times 2 later
    for d in 1..n {
        let rho = (1.0 + d as f64).powf(-beta);
        var += 2.0 * (n - d) as f64 * rho * rho;
    }
    (2.0 * var).sqrt()
}

/// i.i.d. approximate draws of the standard Rosenblatt law. Deterministic
/// given (params, seed), independent of the worker count.
pub fn sample_rosenblatt(
    params: &RosenblattParams,
    n_samples: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<Vec<f64>> {
    let beta = params.beta;
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::Domain(format!("beta = {beta} must lie in (0, 1/2)")));
    }
    let n = params.n_terms;
    let total_len = n + params.burn_in;
    let sampler = CirculantSampler::new(total_len, &|k| (1.0 + k as f64).powf(-beta))?;
    let sd = finite_sum_sd(n, beta);
    let pairs = (n_samples + 1) / 2;
    let burn = params.burn_in;
    let blocks = map_indexed(pairs, threads, |p| {
        let s = stream_seed(&[seed, p as u64, ROSE_STREAM]);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let (a, b) = sampler.sample_pair(&mut rng);
        let reduce = |xs: &[f64]| xs[burn..].iter().map(|&x| x * x - 1.0).sum::<f64>() / sd;
        (reduce(&a), reduce(&b))
    });
    let mut out = Vec::with_capacity(n_samples);
    for (a, b) in blocks {
        out.push(a);
        if out.len() < n_samples {
            out.push(b);
        }
    }
    Ok(out)
}

/// Composite Rosenblatt draws `V = sum_k c_k X_{k;beta}` with independent
/// standard components.
pub fn sample_composite(
    params: &RosenblattParams,
    n_samples: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<Vec<f64>> {
    let weights = params
        .weights
        .as_ref()
        .ok_or_else(|| Error::Precondition("composite sampling needs weights".into()))?
        .clone();
    let mut out = vec![0.0; n_samples];
    for (k, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let comp_seed = stream_seed(&[seed, k as u64, COMP_STREAM]);
        let draws = sample_rosenblatt(params, n_samples, comp_seed, threads)?;
        for (o, d) in out.iter_mut().zip(draws) {
            *o += w * d;
        }
    }
    Ok(out)
}

/// Two-sample Kolmogorov distance (sup difference of empirical CDFs).
pub fn kolmogorov_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Precondition("empty sample".into()));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < sa.len() && j < sb.len() {
        // step both CDFs past every copy of the smaller value so that ties
        // across samples are counted on both sides before comparing
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] == x {
            i += 1;
        }
        while j < sb.len() && sb[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Kolmogorov distance between an empirical CDF and the standard normal.
pub fn kolmogorov_distance_normal(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Precondition("empty sample".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in s.iter().enumerate() {
        let cdf = 1.0 - gaussian_phi_upper(x).1;
        d = d.max((cdf - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - cdf).abs());
    }
    Ok(d)
}
