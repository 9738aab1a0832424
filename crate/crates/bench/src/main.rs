// Copyright 2026 The ARMC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use armc_bench::experiments::{run_phase, run_runtime, run_stability};
use armc_bench::solve::{run_generate, run_solve, SolveRequest};
use armc_bench::{BenchError, Config, ExperimentKind, ExperimentSpec, Result};

/// Robust matrix completion experiments and solves.
#[derive(Debug, Parser)]
#[command(name = "armc", version)]
struct Cli {
    /// Flat key=value settings file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Use the full-size experiment grids.
    #[arg(long, global = true)]
    paper_scale: bool,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Solver variant: armc, rmc or rrmc (comma list for experiments).
    #[arg(long, global = true)]
    variant: Option<String>,
    /// Override a setting, e.g. --set threshold.kind=scad. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// List every setting and exit.
    #[arg(long)]
    list_settings: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic instance directory.
    Generate {
        /// Also write the fully observed matrix as matrix.bin.
        #[arg(long)]
        dense: bool,
    },
    /// Solve an instance directory, dense matrix file or COO file.
    Solve {
        input: Option<PathBuf>,
        /// Truth factor file to evaluate against.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Keep each observed entry with this probability.
        #[arg(long)]
        subsample: Option<f64>,
        /// Target rank (defaults to the truth's rank).
        #[arg(long)]
        rank: Option<usize>,
    },
    /// Success rate over a sampling-rate or outlier-rate grid.
    Phase,
    /// Wall time and iteration counts against the dimension.
    Runtime,
    /// Recovery error against the signal-to-noise ratio.
    Stability,
}

/// Defaults < config file < --set < dedicated flags.
fn build_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::new(),
    };
    for pair in &cli.overrides {
        cfg.set_pair(pair)?;
    }
    let path_str = |p: &PathBuf| p.to_string_lossy().into_owned();
    if let Some(s) = cli.seed {
        cfg.set("experiment.seed", s.to_string())?;
    }
    if let Some(j) = cli.jobs {
        cfg.set("experiment.jobs", j.to_string())?;
    }
    if let Some(o) = &cli.out {
        cfg.set("io.out", path_str(o))?;
    }
    if let Some(v) = &cli.variant {
        cfg.set("solver.variant", v.clone())?;
    }
    match &cli.command {
        Some(Command::Generate { dense: true }) => cfg.set("io.dense", "true")?,
        Some(Command::Solve { input, truth, subsample, rank }) => {
            if let Some(p) = input {
                cfg.set("io.input", path_str(p))?;
            }
            if let Some(p) = truth {
                cfg.set("io.truth", path_str(p))?;
            }
            if let Some(q) = subsample {
                cfg.set("io.subsample", q.to_string())?;
            }
            if let Some(r) = rank {
                cfg.set("solver.rank", r.to_string())?;
            }
        }
        _ => {}
    }
    Ok(cfg)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:?}"))
}

fn run(cli: Cli) -> Result<()> {
    if cli.list_settings {
        for (k, doc) in armc_bench::config::KEYS {
            println!("{k:<28} {doc}");
        }
        return Ok(());
    }
    let cfg = build_config(&cli)?;
    let Some(command) = &cli.command else {
        return Err(BenchError::usage("no subcommand given; see --help"));
    };
    let grid = |kind| ExperimentSpec::from_config(kind, &cfg, cli.paper_scale);
    match command {
        Command::Generate { .. } => {
            let (dir, inst) = run_generate(&cfg)?;
            println!("instance={}", dir.display());
            println!("observed={} outliers={} line_cap_ok={}", inst.obs.len(), inst.outlier_count(), inst.line_cap_satisfied);
        }
        Command::Solve { .. } => {
            let req = SolveRequest::from_config(&cfg)?;
            let s = run_solve(&req)?;
            println!("n={} rank={} p={:?} observed={}", s.n, s.rank, s.p, s.observed);
            println!("beta1={:?} beta2={:?}", s.beta1, s.beta2);
            println!("iters={} converged={} total_seconds={:.3}", s.iters, s.converged, s.total_seconds);
            println!("rel_inf={} rel_fro={}", opt(s.rel_inf_error), opt(s.rel_fro_error));
            if let Some(ok) = s.success {
                println!("success={ok}");
            }
            println!("out={}", req.out.display());
        }
        Command::Phase => report(run_phase(&grid(ExperimentKind::Phase)?)?.1),
        Command::Runtime => report(run_runtime(&grid(ExperimentKind::Runtime)?)?.1),
        Command::Stability => report(run_stability(&grid(ExperimentKind::Stability)?)?.1),
    }
    Ok(())
}

fn report(w: armc_bench::experiments::Written) {
    println!("trials={}", w.trials.display());
    println!("summary={}", w.summary.display());
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("armc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
