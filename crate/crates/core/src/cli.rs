//! The `divrate` command line.

use std::path::{Path, PathBuf};

use clap::Parser;
use serde_json::json;

use crate::compare::rank_models;
use crate::error::{Error, Result};
use crate::estim::{estimate_lambda_from_divisions, run_estimator};
use crate::io::{
    ingest_lineage_csv, write_eigen, write_estimation, write_grid_density2_csv, write_grid_density_csv, write_json,
    write_lineage_csv, Command, EigenBlock, RunConfig,
};
use crate::model::{SampleSet, Scheme, Trigger};
use crate::numerics::trapezoid;
use crate::sim::simulate_replicates;
use crate::solver::{gf_eigen, lattice_steady, renewal_eigen, GridKind, GrowthFragProblem, LatticeProblem, SolverGrid};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "DIVRATE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "divrate", version, about = "Simulate, solve and estimate division-rate models")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed of the configuration file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; overrides the configuration file, defaults to `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Lineage CSV for `estimate` and `compare`; overrides the configuration file.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

/// Size the worker pool from `DIVRATE_THREADS` when set.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Validation(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Validation(format!("{THREADS_ENV}: {e}")))?;
    }
    Ok(())
}

/// Load the configuration, apply command-line overrides and run the command.
pub fn run(cli: &Cli) -> Result<()> {
    let mut config = RunConfig::load(&cli.config)?;
    if let Some(c) = config.command {
        if c != cli.command {
            return Err(Error::Validation(format!(
                "config declares command {c:?} but {:?} was requested",
                cli.command
            )));
        }
    }
    config.command = Some(cli.command);
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out = Some(out.clone());
    }
    if let Some(data) = &cli.data {
        match cli.command {
            Command::Estimate => {
                if let Some(e) = config.estimate.as_mut() {
                    e.data = Some(data.clone());
                }
            }
            Command::Compare => {
                if let Some(c) = config.compare.as_mut() {
                    c.data = Some(data.clone());
                }
            }
            _ => return Err(Error::Validation("--data only applies to estimate and compare".into())),
        }
    }
    let out = config.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    config.out = Some(out.clone());
    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("resolved_config.toml"), config.to_toml()?)?;
    match cli.command {
        Command::Simulate => simulate(&config, &out),
        Command::Eigen => eigen(&config, &out),
        Command::Estimate => estimate(&config, &out),
        Command::Compare => compare(&config, &out),
    }
}

fn lambda_from_counts(s: &SampleSet) -> Option<f64> {
    match s.scheme {
        Scheme::U2 { horizon } if s.records.len() >= 3 => {
            let first = s.records.iter().map(|r| r.division_time()).fold(f64::INFINITY, f64::min);
            estimate_lambda_from_divisions(s, first.max(0.5 * horizon), horizon, 16).ok().map(|l| l.lambda)
        }
        _ => None,
    }
}

fn simulate(config: &RunConfig, out: &Path) -> Result<()> {
    let spec = RunConfig::require(&config.model, "model")?.spec()?;
    let block = RunConfig::require(&config.scheme, "scheme")?;
    let scheme = block.scheme()?;
    let samples = simulate_replicates(&spec, scheme, &block.root(), config.seed, block.replicates, block.cap)?;
    let mut files = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        let name = format!("sample_{i:03}.csv");
        write_lineage_csv(s, &out.join(&name))?;
        files.push(name);
    }
    let merged = SampleSet::merge(samples.clone())?;
    let summary = json!({
        "scheme": scheme.tag(),
        "seed": config.seed,
        "replicates": samples.iter().zip(&files).map(|(s, f)| json!({
            "file": f,
            "divided": s.records.len(),
            "alive": s.snapshot.len(),
            "censored": s.censored,
            "lambda_from_counts": lambda_from_counts(s),
        })).collect::<Vec<_>>(),
        "merged": {
            "divided": merged.records.len(),
            "alive": merged.snapshot.len(),
            "censored": merged.censored,
        },
    });
    write_json(&summary, &out.join("summary.json"))?;
    println!("simulated {} replicate(s) of {} into {}", samples.len(), scheme.tag(), out.display());
    Ok(())
}

fn default_size_grid() -> GridKind {
    GridKind::Geometric {
        x_min: 1.0 / 64.0,
        x_max: 64.0,
        per_doubling: 32,
    }
}

fn eigen(config: &RunConfig, out: &Path) -> Result<()> {
    let model = RunConfig::require(&config.model, "model")?;
    let spec = model.spec()?;
    let block = config.eigen.clone().unwrap_or_default();
    let k = block.multiplicity;
    match spec.trigger {
        Trigger::Age => {
            let e = renewal_eigen(&spec.rate, k)?;
            write_eigen(&e, &out.join("eigen.csv"), &out.join("eigen.json"))?;
            println!("lambda = {:.17e}", e.lambda);
        }
        Trigger::Size => {
            let grid = SolverGrid::new(block.grid.unwrap_or_else(default_size_grid))?;
            let e = gf_eigen(&GrowthFragProblem::from_spec(&spec, k)?, &grid)?;
            write_eigen(&e, &out.join("eigen.csv"), &out.join("eigen.json"))?;
            if e.oscillatory {
                eprintln!("warning: equal mitosis with exponential growth, the profile oscillates");
            }
            println!("lambda = {:.17e}", e.lambda);
        }
        Trigger::Increment => {
            let EigenBlock { grid, .. } = block;
            let kappa = spec.growth.exponential_rate().ok_or_else(|| {
                Error::Validation("the adder eigenproblem needs exponential growth".to_string())
            })?;
            let grid = SolverGrid::new(grid.unwrap_or(GridKind::Geometric {
                x_min: 1.0 / 16.0,
                x_max: 16.0,
                per_doubling: 16,
            }))?;
            let steady = lattice_steady(&LatticeProblem::new(Trigger::Increment, spec.rate.clone(), kappa, k)?, &grid, 256)?;
            write_grid_density2_csv(&steady.eigen.direct, ["z", "x"], &out.join("eigen2.csv"))?;
            write_grid_density_csv(&steady.size_marginal, &out.join("size_marginal.csv"))?;
            write_json(
                &json!({
                    "lambda": steady.eigen.lambda,
                    "multiplicity": k,
                    "iterations": steady.eigen.iterations,
                    "residual": steady.eigen.residual,
                    "edge_mass": steady.edge_mass,
                    "grid": { "points": grid.len(), "min": grid.nodes.first(), "max": grid.nodes.last() },
                }),
                &out.join("eigen.json"),
            )?;
            println!("lambda = {:.17e}", steady.eigen.lambda);
        }
    }
    Ok(())
}

fn load_data(path: &Option<PathBuf>, section: &str) -> Result<SampleSet> {
    let path = path
        .as_ref()
        .ok_or_else(|| Error::Validation(format!("no data file: set {section}.data or pass --data")))?;
    ingest_lineage_csv(path)
}

fn estimate(config: &RunConfig, out: &Path) -> Result<()> {
    let block = RunConfig::require(&config.estimate, "estimate")?;
    let data = load_data(&block.data, "estimate")?;
    let result = run_estimator(block.estimator, &data, &block.settings)?;
    write_estimation(&result, &out.join("estimate.csv"), &out.join("estimate.json"))?;
    let truth = config.model.as_ref().filter(|m| m.trigger == block.estimator.trigger());
    if let Some(model) = truth {
        let x = result.grid();
        let mut w = csv::Writer::from_path(out.join("overlay.csv"))?;
        w.write_record(["x", "estimate", "truth"])?;
        let mut sup = 0.0f64;
        let (mut diff, mut norm) = (Vec::new(), Vec::new());
        let mut kept = Vec::new();
        for (i, (&xi, &v)) in x.iter().zip(result.values()).enumerate() {
            let t = model.rate.eval(xi);
            w.write_record([crate::io::fmt17(xi), crate::io::fmt17(v), crate::io::fmt17(t)])?;
            if !result.flags[i] {
                sup = sup.max((v - t).abs());
                kept.push(xi);
                diff.push((v - t).powi(2));
                norm.push(t * t);
            }
        }
        w.flush()?;
        let rel = (trapezoid(&kept, &diff) / trapezoid(&kept, &norm)).sqrt();
        println!("error against the configured model: sup {sup:.4e}, relative L2 {rel:.4e}");
    }
    println!("{} on {} cells written to {}", block.estimator.name(), data.len(), out.display());
    Ok(())
}

fn compare(config: &RunConfig, out: &Path) -> Result<()> {
    let block = RunConfig::require(&config.compare, "compare")?;
    let data = load_data(&block.data, "compare")?;
    let mut opts = block.options.clone();
    opts.seed = config.seed;
    let report = rank_models(&data, &block.candidates, &opts)?;
    write_json(&report, &out.join("report.json"))?;
    std::fs::write(out.join("correlations.csv"), report.correlation_csv())?;
    let names: Vec<&str> = report.ranking.iter().map(|t| crate::compare::model_name(*t)).collect();
    println!("ranking: {}", names.join(" > "));
    Ok(())
}
