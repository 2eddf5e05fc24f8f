//! Covariance model on the sphere cross time and the memory-regime
//! classifier.
//!
//! A model is a finite list of multipoles `(ell, C_ell(0), beta_ell)` with
//! temporal kernels `C_ell(tau) = C_ell(0) g(tau) (1+|tau|)^{-beta}`
//! (`beta < 1`, long memory) or `(1+|tau|)^{-alpha}`, `alpha >= 2`
//! (`beta = 1`, short memory). The full space-time covariance is
//! `Gamma(theta, tau) = sum_ell (2l+1)/(4pi) C_ell(tau) P_ell(theta)`,
//! normalized so `Gamma(1, 0) = 1`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::quad::integrate_half_line;
use crate::special::{
    gaunt_zonal, gaussian_phi_upper, hermite, legendre_p_unchecked, FOUR_PI,
};
use crate::{Error, Result};

/// Absolute tolerance for ties among the memory exponents.
pub const BETA_TIE_TOL: f64 = 1e-12;
/// Tolerance for the unit-variance normalization.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Slowly varying modulation of one temporal kernel, `g(0) = 1`,
/// `g(tau) -> 1`.
pub type ModulationFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One multipole entry of the covariance model.
#[derive(Clone)]
pub struct Multipole {
    pub ell: usize,
    /// Lag-zero autocovariance `C_ell(0)`.
    pub c0: f64,
    /// Memory exponent in (0, 1].
    pub beta: f64,
    /// Short-memory decay rate, required exactly when `beta = 1`.
    pub alpha: Option<f64>,
    /// Optional modulation; `None` means identically one.
    pub g_fn: Option<ModulationFn>,
}

impl Multipole {
    pub fn new(ell: usize, c0: f64, beta: f64) -> Self {
        Multipole { ell, c0, beta, alpha: None, g_fn: None }
    }

    pub fn short_memory(ell: usize, c0: f64, alpha: f64) -> Self {
        Multipole { ell, c0, beta: 1.0, alpha: Some(alpha), g_fn: None }
    }

    pub fn with_modulation(mut self, g: ModulationFn) -> Self {
        self.g_fn = Some(g);
        self
    }
}

impl fmt::Debug for Multipole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Multipole")
            .field("ell", &self.ell)
            .field("c0", &self.c0)
            .field("beta", &self.beta)
            .field("alpha", &self.alpha)
            .field("modulated", &self.g_fn.is_some())
            .finish()
    }
}

/// Memory kernel `(1+|tau|)^{-beta}` for `beta < 1`, `(1+|tau|)^{-alpha}`
/// for `beta = 1`.
pub fn g_beta(beta: f64, alpha: Option<f64>, tau: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Domain(format!("g_beta: beta = {beta} outside (0, 1]")));
    }
    let decay = if beta == 1.0 {
        match alpha {
            Some(a) if a >= 2.0 => a,
            Some(a) => {
                return Err(Error::Domain(format!("g_beta: alpha = {a} < 2")));
            }
            None => {
                return Err(Error::Domain("g_beta: beta = 1 requires alpha".into()));
            }
        }
    } else {
        beta
    };
    Ok((1.0 + tau.abs()).powf(-decay))
}

/// Validated, immutable covariance model.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    multipoles: Vec<Multipole>,
}

impl CovarianceModel {
    /// Validate a multipole list. With `autonormalize` the `C_ell(0)` are
    /// rescaled to satisfy the unit-variance constraint; otherwise a
    /// violation beyond 1e-10 is an error.
    pub fn new(mut multipoles: Vec<Multipole>, autonormalize: bool) -> Result<Self> {
        if multipoles.is_empty() {
            return Err(Error::Model("empty multipole list".into()));
        }
        multipoles.sort_by_key(|m| m.ell);
        for w in multipoles.windows(2) {
            if w[0].ell == w[1].ell {
                return Err(Error::Model(format!("duplicate multipole l = {}", w[0].ell)));
            }
        }
        for m in &multipoles {
            if !(m.beta > 0.0 && m.beta <= 1.0) {
                return Err(Error::Model(format!(
                    "l = {}: beta = {} outside (0, 1]",
                    m.ell, m.beta
                )));
            }
            if m.beta == 1.0 {
                match m.alpha {
                    Some(a) if a >= 2.0 => {}
                    Some(a) => {
                        return Err(Error::Model(format!("l = {}: alpha = {a} < 2", m.ell)));
                    }
                    None => {
                        return Err(Error::Model(format!(
                            "l = {}: beta = 1 requires alpha",
                            m.ell
                        )));
                    }
                }
            } else if m.alpha.is_some() {
                return Err(Error::Model(format!(
                    "l = {}: alpha given but beta = {} < 1",
                    m.ell, m.beta
                )));
            }
            if !(m.c0 >= 0.0) {
                return Err(Error::Model(format!("l = {}: C(0) = {} negative", m.ell, m.c0)));
            }
            if let Some(g) = &m.g_fn {
                if (g(0.0) - 1.0).abs() > 1e-8 {
                    return Err(Error::Model(format!("l = {}: g(0) != 1", m.ell)));
                }
                if (g(1e6) - 1.0).abs() > 1e-3 {
                    return Err(Error::Model(format!(
                        "l = {}: g(tau) does not approach 1 at large tau",
                        m.ell
                    )));
                }
            }
        }
        match multipoles.iter().find(|m| m.ell == 0) {
            Some(m) if m.c0 > 0.0 => {}
            Some(_) => return Err(Error::Model("C_0(0) must be positive".into())),
            None => return Err(Error::Model("multipole l = 0 is required".into())),
        }
        let total: f64 = multipoles
            .iter()
            .map(|m| (2 * m.ell + 1) as f64 / FOUR_PI * m.c0)
            .sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            if autonormalize {
                for m in &mut multipoles {
                    m.c0 /= total;
                }
            } else {
                return Err(Error::Model(format!(
                    "sum_l (2l+1) C_l(0) / 4pi = {total}, expected 1 (set autonormalize to rescale)"
                )));
            }
        }
        let model = CovarianceModel { multipoles };
        let m0 = model.multipole(0).unwrap();
        if m0.beta == 1.0 {
            let int = 2.0 * integrate_half_line(&|t| model.c_ell(0, t).unwrap(), 1e-10, 1e-14);
            if int <= 0.0 {
                return Err(Error::Model(format!(
                    "beta_0 = 1 requires a positive integral of C_0; got {int}"
                )));
            }
        }
        Ok(model)
    }

    pub fn multipoles(&self) -> &[Multipole] {
        &self.multipoles
    }

    pub fn multipole(&self, ell: usize) -> Option<&Multipole> {
        self.multipoles.iter().find(|m| m.ell == ell)
    }

    pub fn max_ell(&self) -> usize {
        self.multipoles.last().map(|m| m.ell).unwrap_or(0)
    }

    /// Variance share `sigma_ell^2 = (2l+1) C_ell(0) / 4pi` (zero for
    /// multipoles outside the model).
    pub fn sigma2(&self, ell: usize) -> f64 {
        self.multipole(ell)
            .map(|m| (2 * ell + 1) as f64 / FOUR_PI * m.c0)
            .unwrap_or(0.0)
    }

    /// Temporal autocovariance `C_ell(tau)`.
    pub fn c_ell(&self, ell: usize, tau: f64) -> Result<f64> {
        let m = self
            .multipole(ell)
            .ok_or_else(|| Error::Domain(format!("unknown multipole l = {ell}")))?;
        let g = m.g_fn.as_ref().map(|g| g(tau.abs())).unwrap_or(1.0);
        Ok(m.c0 * g * g_beta(m.beta, m.alpha, tau)?)
    }

    /// Space-time covariance `Gamma(theta, tau)` truncated at `l_max`;
    /// `theta` is the cosine of the angular distance.
    pub fn gamma_cov(&self, theta: f64, tau: f64, l_max: usize) -> Result<f64> {
        if l_max < self.max_ell() {
            return Err(Error::Precondition(format!(
                "gamma_cov: truncation {l_max} below model support {}",
                self.max_ell()
            )));
        }
        if !(-1.0..=1.0).contains(&theta) {
            return Err(Error::Domain(format!("gamma_cov: |theta| > 1 ({theta})")));
        }
        let mut total = 0.0;
        for m in &self.multipoles {
            total += (2 * m.ell + 1) as f64 / FOUR_PI
                * self.c_ell(m.ell, tau)?
                * legendre_p_unchecked(m.ell, theta);
        }
        Ok(total)
    }

    /// Memory exponent of the `l = 0` multipole (1 in the short-memory
    /// case).
    pub fn beta0(&self) -> f64 {
        self.multipole(0).unwrap().beta
    }

    /// Smallest exponent over `l >= 1`; `None` when the model is supported
    /// on `l = 0` only.
    pub fn beta_star(&self) -> Option<f64> {
        self.multipoles
            .iter()
            .filter(|m| m.ell >= 1)
            .map(|m| m.beta)
            .fold(None, |acc, b| Some(acc.map_or(b, |a: f64| a.min(b))))
    }

    /// Multipoles achieving the minimum exponent (including `l = 0` if its
    /// exponent ties), with absolute tolerance 1e-12.
    pub fn i_star(&self) -> Vec<usize> {
        match self.beta_star() {
            Some(bs) => self
                .multipoles
                .iter()
                .filter(|m| (m.beta - bs).abs() <= BETA_TIE_TOL)
                .map(|m| m.ell)
                .collect(),
            None => Vec::new(),
        }
    }

    /// Second smallest exponent over `l >= 1` outside the minimizing set.
    pub fn beta_starstar(&self) -> Option<f64> {
        let bs = self.beta_star()?;
        self.multipoles
            .iter()
            .filter(|m| m.ell >= 1 && (m.beta - bs).abs() > BETA_TIE_TOL)
            .map(|m| m.beta)
            .fold(None, |acc, b| Some(acc.map_or(b, |a: f64| a.min(b))))
    }
}

/// Dominating chaos of the variance growth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dominating {
    FirstChaos,
    SecondChaos,
    ThirdChaos,
    AllChaoses,
    Boundary,
}

/// Predicted limit law of the normalized functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitLaw {
    Gaussian,
    CompositeRosenblatt2,
    NonGaussianOrder3,
    DegenerateBoundary,
}

/// Output of the regime classifier.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeReport {
    pub u: f64,
    pub beta0: f64,
    pub beta_star: Option<f64>,
    pub i_star: Vec<usize>,
    pub beta_starstar: Option<f64>,
    pub dominating: Dominating,
    /// Variance growth power of `T` (1 when a `T log T` factor applies).
    pub exponent: f64,
    pub log_factor: bool,
    pub limit_law: LimitLaw,
    /// Limiting value of `Var / T^exponent` (or `Var / (T log T)`); absent
    /// in boundary cases.
    pub limit_constant: Option<f64>,
    pub note: Option<String>,
}

/// Gaunt-weighted sum over q-tuples from the minimizing set:
/// `sum G^{0..0} prod sqrt((2l_i+1)/4pi) C_{l_i}(0)`.
fn i_star_gaunt_sum(model: &CovarianceModel, q: usize) -> f64 {
    let ells = model.i_star();
    let mut idx = vec![0usize; q];
    let mut total = 0.0;
    loop {
        let tuple: Vec<usize> = idx.iter().map(|&i| ells[i]).collect();
        if tuple.iter().sum::<usize>() % 2 == 0 {
            let mut prod = 1.0;
            for &l in &tuple {
                prod *= ((2 * l + 1) as f64 / FOUR_PI).sqrt()
                    * model.multipole(l).unwrap().c0;
            }
            total += gaunt_zonal(&tuple) * prod;
        }
        // odometer over the q-fold product of I*
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < ells.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == q {
                return total;
            }
        }
    }
}

/// Limiting constant of the dominating chaos, derived from the general
/// chaos-variance identity `Var[q] = (4pi J_q^2 / q!) sum_tuples G
/// prod sqrt((2l+1)/4pi) k(T)` together with the k-integral limits
/// `k / T^{2-s} -> 2 prod C(0) / ((1-s)(2-s))` (s < 1) and
/// `k / (T log T) -> 2 prod C(0)` (s = 1).
fn dominating_chaos_constant(model: &CovarianceModel, u: f64, q: usize, log_case: bool) -> f64 {
    let (phi, _) = gaussian_phi_upper(u);
    let j = hermite(q - 1, u) * phi;
    let coef = FOUR_PI * j * j / (1..=q).product::<usize>() as f64;
    let s = if q == 1 {
        model.beta0()
    } else {
        q as f64 * model.beta_star().unwrap()
    };
    let tuple_sum = if q == 1 {
        model.multipole(0).unwrap().c0
    } else {
        i_star_gaunt_sum(model, q)
    };
    let time_factor = if log_case { 2.0 } else { 2.0 / ((1.0 - s) * (2.0 - s)) };
    coef * time_factor * tuple_sum
}

/// Regime classification per the interplay of `beta_0`, `q beta_star`
/// (q = 2 off the zero level, q = 3 at it) and the short-memory threshold 1.
pub fn classify_regime(model: &CovarianceModel, u: f64) -> Result<RegimeReport> {
    let beta0 = model.beta0();
    let beta_star = model.beta_star();
    let q = if u != 0.0 { 2usize } else { 3 };
    let qb = beta_star.map(|b| q as f64 * b).unwrap_or(f64::INFINITY);
    let short0 = beta0 == 1.0;
    let tol = BETA_TIE_TOL;

    let mut report = RegimeReport {
        u,
        beta0,
        beta_star,
        i_star: model.i_star(),
        beta_starstar: model.beta_starstar(),
        dominating: Dominating::Boundary,
        exponent: (2.0 - beta0).max(2.0 - qb).max(1.0),
        log_factor: false,
        limit_law: LimitLaw::DegenerateBoundary,
        limit_constant: None,
        note: None,
    };

    let qth_dominating = match q {
        2 => Dominating::SecondChaos,
        _ => Dominating::ThirdChaos,
    };
    let qth_law = match q {
        2 => LimitLaw::CompositeRosenblatt2,
        _ => LimitLaw::NonGaussianOrder3,
    };
    let even_ok = q != 3 || report.i_star.iter().any(|&l| l % 2 == 0);

    if short0 {
        if qb > 1.0 + tol {
            report.dominating = Dominating::AllChaoses;
            report.exponent = 1.0;
            report.limit_law = LimitLaw::Gaussian;
            report.limit_constant =
                Some(crate::variance::short_memory_limit(model, u, 12).0);
        } else if (qb - 1.0).abs() <= tol {
            if even_ok {
                report.dominating = qth_dominating;
                report.exponent = 1.0;
                report.log_factor = true;
                report.limit_law = qth_law;
                report.limit_constant = Some(dominating_chaos_constant(model, u, q, true));
            } else {
                report.note = Some(
                    "third-chaos regime but the minimizing set has no even multipole".into(),
                );
            }
        } else if even_ok {
            report.dominating = qth_dominating;
            report.exponent = 2.0 - qb;
            report.limit_law = qth_law;
            report.limit_constant = Some(dominating_chaos_constant(model, u, q, false));
        } else {
            report.note =
                Some("third-chaos regime but the minimizing set has no even multipole".into());
        }
    } else if (beta0 - qb).abs() <= tol {
        report.note = Some(format!("boundary case beta_0 = {q} beta_star"));
    } else if beta0 < qb {
        report.dominating = Dominating::FirstChaos;
        report.exponent = 2.0 - beta0;
        report.limit_law = LimitLaw::Gaussian;
        report.limit_constant = Some(dominating_chaos_constant(model, u, 1, false));
    } else if even_ok {
        // qb < beta0 < 1, hence qb < 1
        report.dominating = qth_dominating;
        report.exponent = 2.0 - qb;
        report.limit_law = qth_law;
        report.limit_constant = Some(dominating_chaos_constant(model, u, q, false));
    } else {
        report.note =
            Some("third-chaos regime but the minimizing set has no even multipole".into());
    }
    Ok(report)
}

/// Weights of the composite-Rosenblatt limit in the second-chaos regime.
#[derive(Debug, Clone, Serialize)]
pub struct Theorem2Weights {
    pub n_star: usize,
    /// Weights `C_ell(0) / sqrt(v_star)`, each repeated `2l+1` times.
    pub weights: Vec<f64>,
    pub v_star: f64,
    /// The same weight pattern normalized to unit total variance; this is
    /// what the reference sampler uses, sidestepping the `a(beta)` constant
    /// (see `rosenblatt`).
    pub sampling_weights: Vec<f64>,
}

/// Composite-limit weights `(N*, c_1..c_N*, v*)` for a second-chaos model.
pub fn theorem2_weights(model: &CovarianceModel) -> Result<Theorem2Weights> {
    // The classification must be second-chaos for any nonzero level; the
    // weights do not depend on u.
    let report = classify_regime(model, 1.0)?;
    if report.dominating != Dominating::SecondChaos {
        return Err(Error::Precondition(format!(
            "theorem2_weights: regime is {:?}, not SecondChaos",
            report.dominating
        )));
    }
    let beta_star = report.beta_star.unwrap();
    if 2.0 * beta_star >= 1.0 - BETA_TIE_TOL && !report.log_factor {
        return Err(Error::Precondition("theorem2_weights: 2 beta_star >= 1".into()));
    }
    let i_star = report.i_star;
    let sigma = crate::rosenblatt::sigma_and_a(beta_star)?.1;
    let v_star: f64 = sigma * sigma
        * i_star
            .iter()
            .map(|&l| {
                let c = model.multipole(l).unwrap().c0;
                2.0 * (2 * l + 1) as f64 * c * c / ((1.0 - beta_star) * (1.0 - 2.0 * beta_star))
            })
            .sum::<f64>();
    let total_sq: f64 = i_star
        .iter()
        .map(|&l| {
            let c = model.multipole(l).unwrap().c0;
            (2 * l + 1) as f64 * c * c
        })
        .sum();
    let mut weights = Vec::new();
    let mut sampling_weights = Vec::new();
    for &l in &i_star {
        let c = model.multipole(l).unwrap().c0;
        for _ in 0..(2 * l + 1) {
            weights.push(c / v_star.sqrt());
            sampling_weights.push(c / total_sq.sqrt());
        }
    }
    Ok(Theorem2Weights { n_star: weights.len(), weights, v_star, sampling_weights })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MultipoleFile {
    ell: usize,
    c0: f64,
    beta: f64,
    alpha: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[serde(default)]
    autonormalize: bool,
    multipole: Vec<MultipoleFile>,
}

impl CovarianceModel {
    /// Parse a model from its TOML representation; unknown keys are
    /// rejected.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ModelFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("model file: {e}")))?;
        let multipoles = file
            .multipole
            .into_iter()
            .map(|m| Multipole { ell: m.ell, c0: m.c0, beta: m.beta, alpha: m.alpha, g_fn: None })
            .collect();
        CovarianceModel::new(multipoles, file.autonormalize)
    }

    pub fn from_toml_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Canonical TOML rendering (used for hashing and JSON mirrors).
    pub fn to_toml_string(&self) -> String {
        let mut out = String::new();
        for m in &self.multipoles {
            out.push_str("[[multipole]]\n");
            out.push_str(&format!("ell = {}\n", m.ell));
            out.push_str(&format!("c0 = {:.17e}\n", m.c0));
            out.push_str(&format!("beta = {}\n", m.beta));
            if let Some(a) = m.alpha {
                out.push_str(&format!("alpha = {a}\n"));
            }
            out.push('\n');
        }
        out
    }
}

/// Convenience constructor used throughout the tests: a two-multipole model
/// `(0, ell)` with variance shares `share0` and `1 - share0`.
pub fn two_multipole_model(
    beta0: f64,
    alpha0: Option<f64>,
    ell: usize,
    beta_ell: f64,
    share0: f64,
) -> Result<CovarianceModel> {
    let c0 = share0 * FOUR_PI;
    let c1 = (1.0 - share0) * FOUR_PI / (2 * ell + 1) as f64;
    CovarianceModel::new(
        vec![
            Multipole { ell: 0, c0, beta: beta0, alpha: alpha0, g_fn: None },
            Multipole::new(ell, c1, beta_ell),
        ],
        false,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_model() -> CovarianceModel {
        two_multipole_model(0.3, None, 1, 0.8, 0.5).unwrap()
    }

    #[test]
    fn g_beta_values() {
        assert_eq!(g_beta(0.4, None, 0.0).unwrap(), 1.0);
        assert_eq!(g_beta(1.0, Some(2.0), 1.0).unwrap(), 0.25);
        assert!((g_beta(0.4, None, 3.0).unwrap() - 4f64.powf(-0.4)).abs() < 1e-12);
        assert!(g_beta(0.0, None, 1.0).is_err());
        assert!(g_beta(1.2, None, 1.0).is_err());
        assert!(g_beta(1.0, None, 1.0).is_err());
        assert!(g_beta(1.0, Some(1.5), 1.0).is_err());
    }

    #[test]
    fn c_ell_values() {
        let m = CovarianceModel::new(
            vec![Multipole::new(0, 0.5 * FOUR_PI, 0.5), Multipole::new(1, 0.5 * FOUR_PI / 3.0, 0.5)],
            false,
        )
        .unwrap();
        assert!((m.c_ell(0, 0.0).unwrap() - 0.5 * FOUR_PI).abs() < 1e-12);
        let c = m.c_ell(1, 3.0).unwrap();
        assert!((c - 0.5 * FOUR_PI / 3.0 * 0.5).abs() < 1e-12);
        assert!(m.c_ell(5, 0.0).is_err());
        for tau in [0.0, 0.5, 2.0, 100.0] {
            assert!(m.c_ell(0, tau).unwrap() <= m.c_ell(0, 0.0).unwrap() + 1e-15);
            assert!((m.c_ell(0, tau).unwrap() - m.c_ell(0, -tau).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn gamma_cov_normalization() {
        let m = simple_model();
        assert!((m.gamma_cov(1.0, 0.0, 5).unwrap() - 1.0).abs() < 1e-10);
        assert!(m.gamma_cov(0.5, 0.0, 0).is_err());
        for theta in [-1.0, -0.5, 0.0, 0.3, 0.9] {
            for tau in [0.0, 1.0, 10.0] {
                let g = m.gamma_cov(theta, tau, 2).unwrap();
                assert!(g.abs() <= 1.0 + 1e-12, "theta={theta} tau={tau}: {g}");
            }
        }
    }

    #[test]
    fn monochromatic_gamma_is_the_memory_kernel() {
        let m = CovarianceModel::new(vec![Multipole::new(0, FOUR_PI, 0.4)], false).unwrap();
        for tau in [0.0, 1.0, 7.0] {
            let g = m.gamma_cov(0.3, tau, 0).unwrap();
            assert!((g - g_beta(0.4, None, tau).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn validation_rejects_bad_models() {
        // missing l = 0
        assert!(CovarianceModel::new(vec![Multipole::new(1, FOUR_PI / 3.0, 0.5)], false).is_err());
        // broken normalization
        assert!(CovarianceModel::new(vec![Multipole::new(0, 2.0 * FOUR_PI, 0.5)], false).is_err());
        // rescaling all C(0) by a common factor is rejected
        let mut ms = simple_model().multipoles().to_vec();
        for m in &mut ms {
            m.c0 *= 1.5;
        }
        assert!(CovarianceModel::new(ms.clone(), false).is_err());
        assert!(CovarianceModel::new(ms, true).is_ok());
        // beta = 1 without alpha
        assert!(CovarianceModel::new(
            vec![Multipole { ell: 0, c0: FOUR_PI, beta: 1.0, alpha: None, g_fn: None }],
            false
        )
        .is_err());
    }

    #[test]
    fn autonormalize_restores_unit_variance() {
        let m = CovarianceModel::new(vec![Multipole::new(0, 1.0, 0.5)], true).unwrap();
        assert!((m.gamma_cov(1.0, 0.0, 0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn star_quantities() {
        let m = CovarianceModel::new(
            vec![
                Multipole::new(0, FOUR_PI * 0.25, 0.7),
                Multipole::new(1, FOUR_PI * 0.25 / 3.0, 0.3),
                Multipole::new(2, FOUR_PI * 0.25 / 5.0, 0.3),
                Multipole::new(3, FOUR_PI * 0.25 / 7.0, 0.9),
            ],
            false,
        )
        .unwrap();
        assert_eq!(m.beta_star(), Some(0.3));
        assert_eq!(m.i_star(), vec![1, 2]);
        assert_eq!(m.beta_starstar(), Some(0.9));
    }

    #[test]
    fn regime_first_chaos() {
        let m = two_multipole_model(0.3, None, 1, 0.8, 0.5).unwrap();
        let r = classify_regime(&m, 1.0).unwrap();
        assert_eq!(r.dominating, Dominating::FirstChaos);
        assert!((r.exponent - 1.7).abs() < 1e-12);
        assert_eq!(r.limit_law, LimitLaw::Gaussian);
        assert!(!r.log_factor);
        assert!(r.limit_constant.unwrap() > 0.0);
    }

    #[test]
    fn regime_second_chaos() {
        let m = two_multipole_model(1.0, Some(2.0), 1, 0.2, 0.5).unwrap();
        let r = classify_regime(&m, 1.0).unwrap();
        assert_eq!(r.dominating, Dominating::SecondChaos);
        assert!((r.exponent - 1.6).abs() < 1e-12);
        assert_eq!(r.limit_law, LimitLaw::CompositeRosenblatt2);
    }

    #[test]
    fn regime_third_chaos_needs_even_multipole() {
        let m = two_multipole_model(1.0, Some(2.0), 2, 0.2, 0.5).unwrap();
        let r = classify_regime(&m, 0.0).unwrap();
        assert_eq!(r.dominating, Dominating::ThirdChaos);
        assert!((r.exponent - 1.4).abs() < 1e-12);
        assert_eq!(r.limit_law, LimitLaw::NonGaussianOrder3);

        let m = two_multipole_model(1.0, Some(2.0), 1, 0.2, 0.5).unwrap();
        let r = classify_regime(&m, 0.0).unwrap();
        assert_eq!(r.dominating, Dominating::Boundary);
        assert!(r.note.is_some());
    }

    #[test]
    fn regime_all_chaoses() {
        let m = two_multipole_model(1.0, Some(2.0), 1, 0.8, 0.5).unwrap();
        let r = classify_regime(&m, 0.0).unwrap();
        assert_eq!(r.dominating, Dominating::AllChaoses);
        assert_eq!(r.exponent, 1.0);
        assert_eq!(r.limit_law, LimitLaw::Gaussian);
        assert!(r.limit_constant.unwrap() > 0.0);
    }

    #[test]
    fn regime_boundary_flag() {
        let m = two_multipole_model(0.8, None, 1, 0.4, 0.5).unwrap();
        let r = classify_regime(&m, 1.0).unwrap();
        assert_eq!(r.dominating, Dominating::Boundary);
        assert_eq!(r.limit_law, LimitLaw::DegenerateBoundary);
        assert!(r.limit_constant.is_none());
    }

    #[test]
    fn regime_log_factor() {
        let m = two_multipole_model(1.0, Some(2.0), 1, 0.5, 0.5).unwrap();
        let r = classify_regime(&m, 1.0).unwrap();
        assert_eq!(r.dominating, Dominating::SecondChaos);
        assert!(r.log_factor);
        assert_eq!(r.exponent, 1.0);
    }

    #[test]
    fn exponent_matches_max_formula() {
        for (b0, a0, b1) in [
            (0.3, None, 0.8),
            (0.9, None, 0.1),
            (1.0, Some(2.0), 0.7),
            (0.5, None, 0.55),
            (1.0, Some(3.0), 0.05),
        ] {
            let m = two_multipole_model(b0, a0, 1, b1, 0.5).unwrap();
            for u in [0.0, 1.0] {
                let q = if u != 0.0 { 2.0 } else { 3.0 };
                let r = classify_regime(&m, u).unwrap();
                let expect = (2.0 - b0).max(2.0 - q * b1).max(1.0);
                assert!(
                    (r.exponent - expect).abs() < 1e-12,
                    "b0={b0} b1={b1} u={u}: {} vs {expect}",
                    r.exponent
                );
                assert!(!r.log_factor || r.exponent == 1.0);
            }
        }
    }

    #[test]
    fn classification_ignores_multipole_order() {
        let mut ms = vec![
            Multipole::new(1, FOUR_PI * 0.3 / 3.0, 0.2),
            Multipole::new(0, FOUR_PI * 0.4, 0.9),
            Multipole::new(2, FOUR_PI * 0.3 / 5.0, 0.6),
        ];
        let a = classify_regime(&CovarianceModel::new(ms.clone(), false).unwrap(), 1.0).unwrap();
        ms.reverse();
        let b = classify_regime(&CovarianceModel::new(ms, false).unwrap(), 1.0).unwrap();
        assert_eq!(a.dominating, b.dominating);
        assert_eq!(a.exponent, b.exponent);
        assert_eq!(a.limit_constant, b.limit_constant);
    }

    #[test]
    fn theorem2_weight_structure() {
        let m = two_multipole_model(1.0, Some(2.0), 1, 0.2, 0.5).unwrap();
        let w = theorem2_weights(&m).unwrap();
        assert_eq!(w.n_star, 3);
        assert!(w.weights.windows(2).all(|p| (p[0] - p[1]).abs() < 1e-15));
        for s in &w.sampling_weights {
            assert!((s - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        }
        let total: f64 = w.sampling_weights.iter().map(|c| c * c).sum();
        assert!((total - 1.0).abs() < 1e-12);

        // multiplicities 3 and 5 for I* = {1, 2}
        let m = CovarianceModel::new(
            vec![
                Multipole::short_memory(0, FOUR_PI * 0.4, 2.0),
                Multipole::new(1, FOUR_PI * 0.3 / 3.0, 0.2),
                Multipole::new(2, FOUR_PI * 0.3 / 5.0, 0.2),
            ],
            false,
        )
        .unwrap();
        let w = theorem2_weights(&m).unwrap();
        assert_eq!(w.n_star, 8);

        // wrong regime
        let m = two_multipole_model(0.3, None, 1, 0.8, 0.5).unwrap();
        assert!(theorem2_weights(&m).is_err());
    }

    #[test]
    fn toml_round_trip_and_strictness() {
        let text = "
[[multipole]]
ell = 0
c0 = 6.283185307179586
beta = 0.3

[[multipole]]
ell = 1
c0 = 2.0943951023931953
beta = 0.8
";
        let m = CovarianceModel::from_toml_str(text).unwrap();
        assert_eq!(m.multipoles().len(), 2);
        let again = CovarianceModel::from_toml_str(&m.to_toml_string()).unwrap();
        assert!((again.c_ell(1, 2.0).unwrap() - m.c_ell(1, 2.0).unwrap()).abs() < 1e-12);

        let bad = text.replace("beta = 0.8", "beta = 0.8\ngamma = 1");
        assert!(CovarianceModel::from_toml_str(&bad).is_err());
    }
}
