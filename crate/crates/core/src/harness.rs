//! Monte Carlo experiment orchestration: replicated runs over a T ladder,
//! variance-exponent fits, distributional tests and the monochromatic
//! correlation experiment.
//!
//! Determinism contract: given (config, master_seed) the replicate table
//! is bit-identical for any worker count. Fields for different levels u
//! share the same realizations at fixed (T, replication), so level
//! comparisons (the exponent switch at u = 0) see paired noise.

use serde::{Deserialize, Serialize};

use crate::excursion::{chaos_projection_set, m_monochromatic};
use crate::model::{classify_regime, CovarianceModel, LimitLaw};
use crate::par::{map_indexed, stream_seed};
use crate::rosenblatt::{sample_composite, RosenblattParams};
use crate::simulate::{FieldSimulator, TimeGrid};
use crate::special::SphereQuadrature;
use crate::stats::{
    anderson_darling_normal, fit_log_log, fourth_cumulant, ks_permutation_threshold,
    ks_two_sample, pearson, Estimate, ExponentFit, AD_CRITICAL_1PCT,
};
use crate::variance;
use crate::{Error, Result};

/// Full description of one replicated experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub levels: Vec<f64>,
    pub t_ladder: Vec<f64>,
    pub replications: usize,
    pub master_seed: u64,
    pub dt: f64,
    pub sphere_exactness: usize,
    pub q_max: usize,
    /// Request the monochromatic functional for this multipole.
    pub ell_star: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::Config("at least one level u is required".into()));
        }
        if self.t_ladder.len() < 4 || self.t_ladder.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "T ladder must be strictly increasing with at least 4 points".into(),
            ));
        }
        if self.replications == 0 || self.q_max == 0 || !(self.dt > 0.0) {
            return Err(Error::Config("replications, q_max and dt must be positive".into()));
        }
        Ok(())
    }
}

/// One row of the replicate table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateRow {
    pub u: f64,
    pub t_horizon: f64,
    pub replication: usize,
    pub m: f64,
    pub chaos: Vec<f64>,
    pub m_mono: Option<f64>,
}

/// Replicate table ordered by (u, T, replication).
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentTable {
    pub rows: Vec<ReplicateRow>,
}

impl ExperimentTable {
    /// Values of one column for a given (u, T) cell, in replication order.
    pub fn cell<F: Fn(&ReplicateRow) -> f64>(&self, u: f64, t: f64, f: F) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.u == u && r.t_horizon == t)
            .map(f)
            .collect()
    }
}

const FIELD_STREAM: u64 = 0x6669656C; // "fiel"

/// Run the full replicated experiment. Replications fan out in parallel;
/// assembly order is (u, T, replication).
pub fn run_experiment(
    config: &ExperimentConfig,
    model: &CovarianceModel,
    threads: Option<usize>,
) -> Result<ExperimentTable> {
    config.validate()?;
    if let Some(l) = config.ell_star {
        if model.multipole(l).is_none() {
            return Err(Error::Config(format!("ell_star = {l} is not in the model")));
        }
    }
    let sphere = SphereQuadrature::with_exactness(config.sphere_exactness.max(2));
    // per (T, replication, u) results, later re-sorted to (u, T, r)
    let mut per_t: Vec<Vec<Vec<(f64, Vec<f64>, Option<f64>)>>> = Vec::new();
    for (j, &t) in config.t_ladder.iter().enumerate() {
        let n_steps = (t / config.dt).round() as usize;
        if n_steps == 0 || (n_steps as f64 * config.dt - t).abs() > 1e-9 {
            return Err(Error::Config(format!("T = {t} is not a multiple of dt = {}", config.dt)));
        }
        let grid = TimeGrid::new(t, n_steps)?;
        let sim = FieldSimulator::new(model, &sphere, grid.clone())?;
        let field_seed = stream_seed(&[config.master_seed, j as u64, FIELD_STREAM]);
        let sphere_ref = &sphere;
        let grid_ref = &grid;
        let sim_ref = &sim;
        let rows = map_indexed(config.replications, threads, |r| {
            let paths = sim_ref.coefficient_paths(field_seed, r as u64);
            let field = sim_ref.synthesize(&paths).unwrap();
            config
                .levels
                .iter()
                .map(|&u| {
                    let set =
                        chaos_projection_set(&field, sphere_ref, grid_ref, u, config.q_max)
                            .unwrap();
                    let mono = config.ell_star.map(|l| {
                        m_monochromatic(model, &paths, sphere_ref, grid_ref, l, u).unwrap()
                    });
                    (set.per_q.iter().sum::<f64>() + set.residual, set.per_q, mono)
                })
                .collect::<Vec<_>>()
        });
        per_t.push(rows);
    }
    let mut rows = Vec::with_capacity(
        config.levels.len() * config.t_ladder.len() * config.replications,
    );
    for (ui, &u) in config.levels.iter().enumerate() {
        for (j, &t) in config.t_ladder.iter().enumerate() {
            for r in 0..config.replications {
                let (m, chaos, mono) = per_t[j][r][ui].clone();
                rows.push(ReplicateRow {
                    u,
                    t_horizon: t,
                    replication: r,
                    m,
                    chaos,
                    m_mono: mono,
                });
            }
        }
    }
    Ok(ExperimentTable { rows })
}

/// Variance fit across the ladder for one level.
#[derive(Debug, Clone, Serialize)]
pub struct VarianceFit {
    pub u: f64,
    pub log_corrected: bool,
    pub fit: ExponentFit,
    /// (T, variance estimate, standard error) per ladder point.
    pub per_t: Vec<(f64, f64, f64)>,
}

fn variance_with_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let v = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = samples.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    (v, ((m4 - v * v).max(0.0) / n).sqrt())
}

/// OLS exponent of the empirical variance of `column` against T.
pub fn fit_variance_exponent<F: Fn(&ReplicateRow) -> f64>(
    table: &ExperimentTable,
    config: &ExperimentConfig,
    u: f64,
    log_corrected: bool,
    column: F,
) -> Result<VarianceFit> {
    let mut per_t = Vec::new();
    for &t in &config.t_ladder {
        let vals = table.cell(u, t, &column);
        if vals.len() < 8 {
            return Err(Error::Precondition(format!("too few replicates at T = {t}")));
        }
        let (v, se) = variance_with_se(&vals);
        per_t.push((t, v, se));
    }
    let ts: Vec<f64> = per_t.iter().map(|p| p.0).collect();
    let vs: Vec<f64> = per_t.iter().map(|p| p.1).collect();
    let fit = fit_log_log(&ts, &vs, log_corrected)?;
    Ok(VarianceFit { u, log_corrected, fit, per_t })
}

/// Reference law for a distributional test.
pub enum Reference {
    Normal,
    /// Composite Rosenblatt with the given parameters (weights included)
    /// and reference sample size.
    CompositeRosenblatt { params: RosenblattParams, n_reference: usize, seed: u64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct DistributionReport {
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Test standardized samples against a reference law at the 1% level.
pub fn test_distribution(
    samples: &[f64],
    reference: &Reference,
    threads: Option<usize>,
) -> Result<DistributionReport> {
    if samples.len() < 200 {
        return Err(Error::Precondition("need at least 200 replicates".into()));
    }
    match reference {
        Reference::Normal => {
            let statistic = anderson_darling_normal(samples)?;
            Ok(DistributionReport {
                statistic,
                threshold: AD_CRITICAL_1PCT,
                pass: statistic < AD_CRITICAL_1PCT,
            })
        }
        Reference::CompositeRosenblatt { params, n_reference, seed } => {
            let reference = sample_composite(params, *n_reference, *seed, threads)?;
            let statistic = ks_two_sample(samples, &reference)?;
            let threshold = ks_permutation_threshold(
                samples,
                &reference,
                1000,
                stream_seed(&[*seed, 0x7065726D]),
            )?;
            Ok(DistributionReport { statistic, threshold, pass: statistic < threshold })
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationPoint {
    pub t_horizon: f64,
    pub correlation: f64,
    pub se: f64,
}

/// Per-T Pearson correlation between M_T(u) and the monochromatic
/// functional; requires the composite-limit regime and stored m_mono.
pub fn correlation_experiment(
    table: &ExperimentTable,
    config: &ExperimentConfig,
    model: &CovarianceModel,
    u: f64,
) -> Result<Vec<CorrelationPoint>> {
    let report = classify_regime(model, u)?;
    if report.limit_law != LimitLaw::CompositeRosenblatt2 {
        return Err(Error::Precondition(format!(
            "correlation experiment needs the composite second-chaos regime, got {:?}",
            report.limit_law
        )));
    }
    if report.i_star.len() != 1 {
        return Err(Error::Precondition("ell_star must be unique".into()));
    }
    let mut out = Vec::new();
    for &t in &config.t_ladder {
        let m: Vec<f64> = table.cell(u, t, |r| r.m);
        let mono: Vec<f64> = table
            .rows
            .iter()
            .filter(|r| r.u == u && r.t_horizon == t)
            .map(|r| {
                r.m_mono
                    .ok_or_else(|| Error::Precondition("m_mono not recorded".into()))
            })
            .collect::<Result<_>>()?;
        let corr = pearson(&m, &mono)?;
        let se = (1.0 - corr * corr) / ((m.len() as f64 - 3.0).max(1.0)).sqrt();
        out.push(CorrelationPoint { t_horizon: t, correlation: corr, se });
    }
    Ok(out)
}

/// Fourth cumulant of the standardized q-th chaos projection per ladder
/// point (standardization by the exact engine variance).
pub fn fourth_cumulant_diagnostic(
    table: &ExperimentTable,
    config: &ExperimentConfig,
    model: &CovarianceModel,
    u: f64,
    q: usize,
) -> Result<Vec<(f64, Estimate)>> {
    if q < 2 {
        return Err(Error::Precondition("diagnostic needs q >= 2".into()));
    }
    if config.replications < 1000 {
        return Err(Error::Precondition("need at least 1000 replications".into()));
    }
    if q > config.q_max {
        return Err(Error::Precondition("q exceeds the recorded projections".into()));
    }
    let mut out = Vec::new();
    for &t in &config.t_ladder {
        let exact = variance::var_chaos(model, u, q, t)?;
        if !(exact > 0.0) {
            return Err(Error::Precondition(format!("degenerate chaos variance at T = {t}")));
        }
        let vals: Vec<f64> =
            table.cell(u, t, |r| r.chaos[q - 1] / exact.sqrt());
        out.push((t, fourth_cumulant(&vals)?));
    }
    Ok(out)
}
