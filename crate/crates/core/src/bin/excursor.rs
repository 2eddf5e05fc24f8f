//! Command-line front end: regime classification, field simulation,
//! variance tables, Monte Carlo campaigns, Rosenblatt sampling and the
//! monochromatic-correlation experiment.
//!
//! Exit codes: 0 pass, 1 predicted-vs-observed failure, 2 usage/config
//! error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use excursor::harness::{
    fit_variance_exponent, run_experiment, test_distribution, ExperimentConfig, Reference,
};
use excursor::manifest::{write_csv, write_json_report, RunManifest};
use excursor::model::{classify_regime, theorem2_weights, CovarianceModel, Dominating, LimitLaw};
use excursor::rosenblatt::{sample_composite, sample_rosenblatt, RosenblattParams};
use excursor::simulate::{FieldSimulator, TimeGrid};
use excursor::special::SphereQuadrature;
use excursor::stats::rank_correlation;
use excursor::variance::var_total;
use excursor::{Error, Result};

#[derive(Parser)]
#[command(name = "excursor", version, about = "Excursion-area functionals of sphere-cross-time Gaussian fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Directory for delimited-text tables, JSON mirrors and the run manifest
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the limiting regime of a model at a level u
    Regime {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        u: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Simulate one field replication and dump the time-by-point matrix
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "T")]
        t_horizon: f64,
        #[arg(long, default_value_t = 0.25)]
        dt: f64,
        /// Spherical quadrature exactness degree
        #[arg(long, default_value_t = 8)]
        exactness: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exact per-chaos variance breakdown at a finite horizon
    Variance {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        u: f64,
        #[arg(long = "T")]
        t_horizon: f64,
        #[arg(long, default_value_t = 7)]
        qmax: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo campaign: replicate table, exponent fits, law tests
    Mc {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Override the master seed from the config
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        /// Verify an existing out-dir against its manifest instead of running
        #[arg(long, default_value_t = false)]
        verify: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Draw standard or composite Rosenblatt samples
    Rosenblatt {
        #[arg(long)]
        beta: f64,
        /// Number of samples
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        /// Comma-separated composite weights; omitted = standard law
        #[arg(long)]
        weights: Option<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Correlation between M_T and the dominating monochromatic functional
    Corr {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        u: f64,
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(pass) => {
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Ok(true) = pass, Ok(false) = predicted-vs-observed failure, Err = usage
/// or configuration problem.
fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Regime { model, u, output } => cmd_regime(&model, u, output.out_dir.as_deref()),
        Command::Simulate { model, t_horizon, dt, exactness, seed, output } => {
            cmd_simulate(&model, t_horizon, dt, exactness, seed, output.out_dir.as_deref())
        }
        Command::Variance { model, u, t_horizon, qmax, output } => {
            cmd_variance(&model, u, t_horizon, qmax, output.out_dir.as_deref())
        }
        Command::Mc { model, config, seed, threads, verify, output } => {
            if verify {
                let dir = output
                    .out_dir
                    .as_deref()
                    .ok_or_else(|| Error::Config("--verify needs --out-dir".into()))?;
                RunManifest::load(dir)?.verify(dir)?;
                println!("manifest OK: all recorded outputs match");
                return Ok(true);
            }
            cmd_mc(&model, &config, seed, threads, output.out_dir.as_deref())
        }
        Command::Rosenblatt { beta, n, weights, seed, threads, output } => {
            cmd_rosenblatt(beta, n, weights.as_deref(), seed, threads, output.out_dir.as_deref())
        }
        Command::Corr { model, config, u, threads, output } => {
            cmd_corr(&model, &config, u, threads, output.out_dir.as_deref())
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn load_model(path: &Path) -> Result<(CovarianceModel, String)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let model = CovarianceModel::from_toml_str(&text)?;
    Ok((model, text))
}

fn load_config(path: &Path) -> Result<(ExperimentConfig, String)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let config: ExperimentConfig =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    config.validate()?;
    Ok((config, text))
}

fn cmd_regime(model_path: &Path, u: f64, out_dir: Option<&Path>) -> Result<bool> {
    let (model, text) = load_model(model_path)?;
    let report = classify_regime(&model, u)?;
    println!("u                = {u}");
    println!("beta0            = {}", report.beta0);
    println!("beta_star        = {:?}", report.beta_star);
    println!("I_star           = {:?}", report.i_star);
    println!("dominating       = {:?}", report.dominating);
    if report.log_factor {
        println!("variance growth  = T^{} log T", report.exponent);
    } else {
        println!("variance growth  = T^{}", report.exponent);
    }
    println!("limit law        = {:?}", report.limit_law);
    if let Some(c) = report.limit_constant {
        println!("limit constant   = {c:.9}");
    }
    if let Some(n) = &report.note {
        println!("note             = {n}");
    }
    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        let mut manifest = RunManifest::new(&text, 0);
        let json = dir.join("regime.json");
        write_json_report(&json, &manifest.config_hash.clone(), &report)?;
        manifest.record_file(&json)?;
        manifest.write(dir)?;
    }
    // boundary regimes carry no usable prediction: report and signal
    Ok(report.dominating != Dominating::Boundary)
}

fn cmd_simulate(
    model_path: &Path,
    t_horizon: f64,
    dt: f64,
    exactness: usize,
    seed: u64,
    out_dir: Option<&Path>,
) -> Result<bool> {
    let (model, text) = load_model(model_path)?;
    let n_steps = (t_horizon / dt).round() as usize;
    if n_steps == 0 || (n_steps as f64 * dt - t_horizon).abs() > 1e-9 {
        return Err(Error::Config(format!("T = {t_horizon} is not a multiple of dt = {dt}")));
    }
    let sphere = SphereQuadrature::with_exactness(exactness.max(2));
    let grid = TimeGrid::new(t_horizon, n_steps)?;
    let nodes = grid.nodes();
    let sim = FieldSimulator::new(&model, &sphere, grid)?;
    let field = sim.replicate(seed, 0);
    let points = sphere.points();
    println!(
        "simulated {} time steps x {} sphere points (seed {seed})",
        field.values.len(),
        points.len()
    );
    let dir = out_dir.ok_or_else(|| Error::Config("simulate needs --out-dir".into()))?;
    ensure_dir(dir)?;
    let mut manifest = RunManifest::new(&text, seed);
    let hash = manifest.config_hash.clone();

    let mut header: Vec<String> = vec!["t".into()];
    header.extend((0..points.len()).map(|i| format!("point_{i}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = field
        .values
        .iter()
        .zip(&nodes)
        .map(|(slice, &t)| {
            let mut row = vec![format!("{t:.6}")];
            row.extend(slice.iter().map(|v| format!("{v:.17e}")));
            row
        })
        .collect();
    let field_csv = dir.join("field.csv");
    write_csv(&field_csv, &hash, &header_refs, &rows)?;

    let grid_rows: Vec<Vec<String>> = points
        .iter()
        .enumerate()
        .map(|(i, &(theta, phi, w))| {
            vec![i.to_string(), format!("{theta:.17e}"), format!("{phi:.17e}"), format!("{w:.17e}")]
        })
        .collect();
    let grid_csv = dir.join("grid.csv");
    write_csv(&grid_csv, &hash, &["index", "theta", "phi", "weight"], &grid_rows)?;

    let meta = dir.join("meta.json");
    write_json_report(
        &meta,
        &hash,
        &serde_json::json!({
            "t_horizon": t_horizon,
            "dt": dt,
            "n_steps": n_steps,
            "sphere_exactness": exactness,
            "n_points": points.len(),
            "seed": seed,
        }),
    )?;
    for f in [&field_csv, &grid_csv, &meta] {
        manifest.record_file(f)?;
    }
    manifest.write(dir)?;
    Ok(true)
}

fn cmd_variance(
    model_path: &Path,
    u: f64,
    t_horizon: f64,
    qmax: usize,
    out_dir: Option<&Path>,
) -> Result<bool> {
    let (model, text) = load_model(model_path)?;
    let bd = var_total(&model, u, t_horizon, qmax)?;
    println!("q,variance,share_of_total");
    let mut rows = Vec::new();
    for (i, &v) in bd.per_q.iter().enumerate() {
        if v == 0.0 {
            continue; // even orders vanish at u = 0
        }
        let share = v / bd.total;
        println!("{},{v:.12e},{share:.6}", i + 1);
        rows.push(vec![(i + 1).to_string(), format!("{v:.17e}"), format!("{share:.17e}")]);
    }
    println!("# tail_bound = {:.6e} (share {:.6})", bd.tail_bound, bd.tail_bound / bd.total);
    println!("# total      = {:.12e}", bd.total);
    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        let mut manifest = RunManifest::new(&text, 0);
        let hash = manifest.config_hash.clone();
        let csv = dir.join("variance.csv");
        write_csv(&csv, &hash, &["q", "variance", "share_of_total"], &rows)?;
        let json = dir.join("variance.json");
        write_json_report(&json, &hash, &bd)?;
        manifest.record_file(&csv)?;
        manifest.record_file(&json)?;
        manifest.write(dir)?;
    }
    Ok(true)
}

/// Slope agreement tolerance shared by the campaign commands.
const SLOPE_TOL: f64 = 0.15;

fn replicate_rows(table: &excursor::harness::ExperimentTable, q_max: usize) -> Vec<Vec<String>> {
    table
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![
                format!("{}", r.u),
                format!("{}", r.t_horizon),
                r.replication.to_string(),
                format!("{:.17e}", r.m),
            ];
            for q in 0..q_max {
                row.push(format!("{:.17e}", r.chaos.get(q).copied().unwrap_or(0.0)));
            }
            row.push(r.m_mono.map_or(String::new(), |v| format!("{v:.17e}")));
            row
        })
        .collect()
}

fn cmd_mc(
    model_path: &Path,
    config_path: &Path,
    seed_override: Option<u64>,
    threads: Option<usize>,
    out_dir: Option<&Path>,
) -> Result<bool> {
    let (model, model_text) = load_model(model_path)?;
    let (mut config, config_text) = load_config(config_path)?;
    if let Some(s) = seed_override {
        config.master_seed = s;
    }
    let table = run_experiment(&config, &model, threads)?;
    let t_last = *config.t_ladder.last().unwrap();

    let mut summaries = Vec::new();
    let mut all_pass = true;
    for &u in &config.levels {
        let regime = classify_regime(&model, u)?;
        let fit = fit_variance_exponent(&table, &config, u, regime.log_factor, |r| r.m)?;
        let slope_ok = (fit.fit.slope - regime.exponent).abs() <= SLOPE_TOL;
        // distribution test on the standardized functional at the top of
        // the ladder, against the law the regime predicts
        let exact = var_total(&model, u, t_last, config.q_max.max(3))?;
        let samples: Vec<f64> =
            table.cell(u, t_last, |r| r.m / exact.total.sqrt());
        // distributional tests need R >= 200; smoke runs skip them
        let dist = if samples.len() < 200 {
            None
        } else {
            match regime.limit_law {
            LimitLaw::Gaussian => {
                Some(("normal", test_distribution(&samples, &Reference::Normal, threads)?))
            }
            LimitLaw::CompositeRosenblatt2 => {
                let w = theorem2_weights(&model)?;
                let params = RosenblattParams::new(regime.beta_star.unwrap())?
                    .with_weights(w.sampling_weights)?;
                let reference = Reference::CompositeRosenblatt {
                    params,
                    n_reference: samples.len().max(4000),
                    seed: config.master_seed ^ 0x7265666572656e63,
                };
                Some(("composite-rosenblatt", test_distribution(&samples, &reference, threads)?))
            }
            _ => None,
            }
        };
        let dist_ok = dist.as_ref().map_or(true, |(_, d)| d.pass);
        all_pass &= slope_ok && dist_ok;
        let growth = if regime.log_factor {
            format!("T^{} log T", regime.exponent)
        } else {
            format!("T^{}", regime.exponent)
        };
        println!(
            "u={u}: predicted {growth}, fitted slope {:.4} +- {:.4} ({}), r^2 {:.5}",
            fit.fit.slope,
            fit.fit.slope_se,
            if slope_ok { "PASS" } else { "FAIL" },
            fit.fit.r_squared,
        );
        if let Some((name, d)) = &dist {
            println!(
                "u={u}: {name} test statistic {:.4} vs threshold {:.4} ({})",
                d.statistic,
                d.threshold,
                if d.pass { "PASS" } else { "FAIL" },
            );
        }
        summaries.push(serde_json::json!({
            "u": u,
            "regime": regime,
            "fit": fit,
            "slope_pass": slope_ok,
            "distribution_test": dist.as_ref().map(|(name, d)| serde_json::json!({
                "reference": name,
                "report": d,
            })),
        }));
    }

    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        let combined = format!("{model_text}\n{config_text}");
        let mut manifest = RunManifest::new(&combined, config.master_seed);
        let hash = manifest.config_hash.clone();
        let mut header: Vec<String> =
            vec!["u".into(), "T".into(), "replication".into(), "m".into()];
        header.extend((1..=config.q_max).map(|q| format!("chaos_{q}")));
        header.push("m_mono".into());
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let csv = dir.join("replicates.csv");
        write_csv(&csv, &hash, &header_refs, &replicate_rows(&table, config.q_max))?;
        let json = dir.join("summary.json");
        write_json_report(&json, &hash, &serde_json::json!({ "pass": all_pass, "levels": summaries }))?;
        manifest.record_file(&csv)?;
        manifest.record_file(&json)?;
        manifest.write(dir)?;
    }
    println!("overall: {}", if all_pass { "PASS" } else { "FAIL" });
    Ok(all_pass)
}

fn cmd_rosenblatt(
    beta: f64,
    n: usize,
    weights: Option<&str>,
    seed: u64,
    threads: Option<usize>,
    out_dir: Option<&Path>,
) -> Result<bool> {
    let mut params = RosenblattParams::new(beta)?;
    let composite = if let Some(spec) = weights {
        let w: Vec<f64> = spec
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("weight '{s}': {e}")))
            })
            .collect::<Result<_>>()?;
        params = params.with_weights(w)?;
        true
    } else {
        false
    };
    let samples = if composite {
        sample_composite(&params, n, seed, threads)?
    } else {
        sample_rosenblatt(&params, n, seed, threads)?
    };
    let nf = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let m3 = samples.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / nf;
    println!("n        = {n}");
    println!("mean     = {mean:.6}");
    println!("variance = {var:.6}");
    println!("skew m3  = {m3:.6}");
    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        let config = format!("beta = {beta}\nn = {n}\nweights = {weights:?}\nseed = {seed}\n");
        let mut manifest = RunManifest::new(&config, seed);
        let hash = manifest.config_hash.clone();
        let rows: Vec<Vec<String>> =
            samples.iter().map(|v| vec![format!("{v:.17e}")]).collect();
        let csv = dir.join("samples.csv");
        write_csv(&csv, &hash, &["value"], &rows)?;
        let json = dir.join("moments.json");
        write_json_report(
            &json,
            &hash,
            &serde_json::json!({
                "beta": beta, "n": n, "composite": composite,
                "mean": mean, "variance": var, "third_moment": m3,
            }),
        )?;
        manifest.record_file(&csv)?;
        manifest.record_file(&json)?;
        manifest.write(dir)?;
    }
    Ok(true)
}

fn cmd_corr(
    model_path: &Path,
    config_path: &Path,
    u: f64,
    threads: Option<usize>,
    out_dir: Option<&Path>,
) -> Result<bool> {
    let (model, model_text) = load_model(model_path)?;
    let (mut config, config_text) = load_config(config_path)?;
    // the experiment needs the monochromatic column
    if config.ell_star.is_none() {
        let report = classify_regime(&model, u)?;
        if report.i_star.len() == 1 {
            config.ell_star = Some(report.i_star[0]);
        }
    }
    let table = run_experiment(&config, &model, threads)?;
    let points = excursor::harness::correlation_experiment(&table, &config, &model, u)?;
    let mut rows = Vec::new();
    for p in &points {
        println!("T={:>8}: corr = {:.4} +- {:.4}", p.t_horizon, p.correlation, p.se);
        rows.push(vec![
            format!("{}", p.t_horizon),
            format!("{:.17e}", p.correlation),
            format!("{:.17e}", p.se),
        ]);
    }
    let ts: Vec<f64> = points.iter().map(|p| p.t_horizon).collect();
    let cs: Vec<f64> = points.iter().map(|p| p.correlation).collect();
    let trend = rank_correlation(&ts, &cs)?;
    let last = *cs.last().unwrap();
    let pass = last >= 0.9 && trend > 0.0;
    println!("final corr {last:.4}, rank trend {trend:.4}: {}", if pass { "PASS" } else { "FAIL" });
    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        let combined = format!("{model_text}\n{config_text}");
        let mut manifest = RunManifest::new(&combined, config.master_seed);
        let hash = manifest.config_hash.clone();
        let csv = dir.join("correlation.csv");
        write_csv(&csv, &hash, &["T", "correlation", "se"], &rows)?;
        let json = dir.join("correlation.json");
        write_json_report(
            &json,
            &hash,
            &serde_json::json!({ "points": points, "final": last, "rank_trend": trend, "pass": pass }),
        )?;
        manifest.record_file(&csv)?;
        manifest.record_file(&json)?;
        manifest.write(dir)?;
    }
    Ok(pass)
}
