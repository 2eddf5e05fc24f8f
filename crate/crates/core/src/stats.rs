//! Statistical primitives for the Monte Carlo harness: normality and
//! two-sample tests, cumulant k-statistics and log-log exponent fits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::rosenblatt::kolmogorov_distance;
use crate::special::gaussian_phi_upper;
use crate::{Error, Result};

/// 1% critical value of the Anderson-Darling statistic with fully
/// specified N(0,1) reference (case 0).
pub const AD_CRITICAL_1PCT: f64 = 3.857;

/// Anderson-Darling statistic against the standard normal with known
/// parameters; pairs with [`AD_CRITICAL_1PCT`].
pub fn anderson_darling_normal(samples: &[f64]) -> Result<f64> {
    if samples.len() < 8 {
        return Err(Error::Precondition("need at least 8 samples".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let nf = n as f64;
    let mut a2 = -nf;
    for i in 0..n {
        let f_lo = (1.0 - gaussian_phi_upper(s[i]).1).clamp(1e-300, 1.0 - 1e-16);
        let f_hi = gaussian_phi_upper(s[n - 1 - i]).1.clamp(1e-300, 1.0 - 1e-16);
        a2 -= (2.0 * i as f64 + 1.0) / nf * (f_lo.ln() + f_hi.ln());
    }
    Ok(a2)
}

/// Two-sample Kolmogorov statistic (re-exported convenience).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    kolmogorov_distance(a, b)
}

/// Permutation-calibrated 1% threshold for the two-sample Kolmogorov
/// statistic at the given sample sizes: 99th percentile over `n_shuffles`
/// random splits of the pooled data. Deterministic for a fixed seed.
pub fn ks_permutation_threshold(
    a: &[f64],
    b: &[f64],
    n_shuffles: usize,
    seed: u64,
) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Precondition("empty sample".into()));
    }
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = Vec::with_capacity(n_shuffles);
    for _ in 0..n_shuffles {
        pooled.shuffle(&mut rng);
        stats.push(kolmogorov_distance(&pooled[..a.len()], &pooled[a.len()..])?);
    }
    stats.sort_by(f64::total_cmp);
    let idx = ((0.99 * n_shuffles as f64).ceil() as usize).min(n_shuffles) - 1;
    Ok(stats[idx])
}

/// A point estimate carrying its standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

fn central_moments(samples: &[f64]) -> (f64, f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let m2 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = samples.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    (mean, m2, m4)
}

fn k4_statistic(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let (_, m2, m4) = central_moments(samples);
    n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2)
        / ((n - 1.0) * (n - 2.0) * (n - 3.0))
}

/// Unbiased fourth-cumulant k-statistic with a 20-block jackknife
/// standard error.
pub fn fourth_cumulant(samples: &[f64]) -> Result<Estimate> {
    if samples.len() < 100 {
        return Err(Error::Precondition("need at least 100 samples".into()));
    }
    let value = k4_statistic(samples);
    let blocks = 20usize;
    let bsize = samples.len() / blocks;
    let mut leave_out = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let mut rest = Vec::with_capacity(samples.len() - bsize);
        rest.extend_from_slice(&samples[..b * bsize]);
        rest.extend_from_slice(&samples[(b + 1) * bsize..]);
        leave_out.push(k4_statistic(&rest));
    }
    let bm = leave_out.iter().sum::<f64>() / blocks as f64;
    let jvar = leave_out.iter().map(|x| (x - bm).powi(2)).sum::<f64>()
        * (blocks - 1) as f64
        / blocks as f64;
    Ok(Estimate { value, se: jvar.sqrt() })
}

/// Ordinary least squares fit of `log v` against `log t`, with a
/// leave-one-out jackknife standard error for the slope.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_se: f64,
}

fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    (slope, intercept, r2)
}

/// Fit `v ~ c t^slope`; with `log_corrected` the ordinate is
/// `v / log t` (for regimes with a `T log T` factor).
pub fn fit_log_log(t: &[f64], v: &[f64], log_corrected: bool) -> Result<ExponentFit> {
    if t.len() != v.len() || t.len() < 4 {
        return Err(Error::Precondition("need at least 4 ladder points".into()));
    }
    if t.iter().any(|&x| x <= 1.0 && log_corrected) || t.iter().any(|&x| x <= 0.0) {
        return Err(Error::Precondition("abscissae must be positive (> 1 with log)".into()));
    }
    if v.iter().any(|&x| x <= 0.0) {
        return Err(Error::Precondition("variance estimates must be positive".into()));
    }
    let x: Vec<f64> = t.iter().map(|&a| a.ln()).collect();
    let y: Vec<f64> = t
        .iter()
        .zip(v)
        .map(|(&a, &b)| if log_corrected { (b / a.ln()).ln() } else { b.ln() })
        .collect();
    let (slope, intercept, r_squared) = ols(&x, &y);
    let n = x.len();
    let mut jk = Vec::with_capacity(n);
    for i in 0..n {
        let xs: Vec<f64> = x.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, &a)| a).collect();
        let ys: Vec<f64> = y.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, &a)| a).collect();
        jk.push(ols(&xs, &ys).0);
    }
    let jm = jk.iter().sum::<f64>() / n as f64;
    let jvar =
        jk.iter().map(|s| (s - jm).powi(2)).sum::<f64>() * (n - 1) as f64 / n as f64;
    Ok(ExponentFit { slope, intercept, r_squared, slope_se: jvar.sqrt() })
}

/// Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 3 {
        return Err(Error::Precondition("need matched samples of length >= 3".into()));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    let mut sab = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
        sab += (x - ma) * (y - mb);
    }
    Ok(sab / (saa * sbb).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    for (rank, &i) in idx.iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

/// Spearman rank correlation.
pub fn rank_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    pearson(&ranks(a), &ranks(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect()
    }

    #[test]
    fn anderson_darling_separates_laws() {
        let z = normals(10_000, 1);
        assert!(anderson_darling_normal(&z).unwrap() < AD_CRITICAL_1PCT);
        let skewed: Vec<f64> = z.iter().map(|&x| (x * x - 1.0) / 2f64.sqrt()).collect();
        assert!(anderson_darling_normal(&skewed).unwrap() > AD_CRITICAL_1PCT);
        // mean shift is also detected
        let shifted: Vec<f64> = z.iter().map(|&x| x + 0.2).collect();
        assert!(anderson_darling_normal(&shifted).unwrap() > AD_CRITICAL_1PCT);
    }

    #[test]
    fn permutation_threshold_is_calibrated() {
        let a = normals(800, 2);
        let b = normals(800, 3);
        let thr = ks_permutation_threshold(&a, &b, 1000, 11).unwrap();
        // asymptotic 1% two-sample threshold: 1.628 sqrt(2/n)
        let asym = 1.628 * (2.0 / 800f64).sqrt();
        assert!((thr - asym).abs() < 0.35 * asym, "{thr} vs {asym}");
        assert!(ks_two_sample(&a, &b).unwrap() < thr);
        let shifted: Vec<f64> = b.iter().map(|&x| x + 0.4).collect();
        assert!(ks_two_sample(&a, &shifted).unwrap() > thr);
    }

    #[test]
    fn fourth_cumulant_estimates() {
        let z = normals(20_000, 5);
        let e = fourth_cumulant(&z).unwrap();
        assert!(e.value.abs() < 4.0 * e.se, "{e:?}");
        // chi-square-like input has cumulant 4th = 48 for 2 Z^2... use
        // (Z^2 - 1)/sqrt(2): kappa_4 = 12
        let c: Vec<f64> = z.iter().map(|&x| (x * x - 1.0) / 2f64.sqrt()).collect();
        let e = fourth_cumulant(&c).unwrap();
        assert!((e.value - 12.0).abs() < 4.0 * e.se, "{e:?}");
    }

    #[test]
    fn exact_power_law_recovery() {
        let t = [64.0, 128.0, 256.0, 512.0, 1024.0];
        let v: Vec<f64> = t.iter().map(|&x: &f64| 3.0 * x.powf(1.5)).collect();
        let fit = fit_log_log(&t, &v, false).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit.slope_se < 1e-10);
        // log-corrected variant recovers the T factor
        let v: Vec<f64> = t.iter().map(|&x: &f64| 2.0 * x * x.ln()).collect();
        let fit = fit_log_log(&t, &v, true).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_basics() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [2.0, 4.0, 6.0, 8.0, 10.0];
        assert!((pearson(&a, &b).unwrap() - 1.0).abs() < 1e-14);
        let c = [10.0, 8.0, 6.0, 4.0, 2.0];
        assert!((pearson(&a, &c).unwrap() + 1.0).abs() < 1e-14);
        let d = [1.0, 4.0, 9.0, 16.0, 25.0]; // monotone, nonlinear
        assert!((rank_correlation(&a, &d).unwrap() - 1.0).abs() < 1e-14);
    }
}
