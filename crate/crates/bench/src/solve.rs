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


//! `solve` and `generate` on files.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use armc::formats::{
    read_coo, read_dense, read_factors, read_instance, write_coo, write_dense, write_factors, write_instance,
    DENSE_MAGIC,
};
use armc::metrics::{relative_fro_error, relative_inf_error, SupportStats};
use armc::prelude::*;
use armc::seeds::{mix_seed, splitmix64};
use armc::solvers::IterRecord;
use armc::synthgen::sample_instance;

use crate::config::Config;
use crate::error::{BenchError, Result};
use crate::spec::{parse_variants, Level, SolverTemplate};

pub const L_FACTORS_FILE: &str = "l_factors.bin";
pub const S_TRIPLETS_FILE: &str = "s_triplets.coo";
pub const TRACE_FILE: &str = "trace.csv";
pub const DENSE_FILE: &str = "matrix.bin";

/// What `solve` was pointed at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputSource {
    /// A directory written by `generate`.
    Instance(PathBuf),
    /// A dense matrix file, recognised by its magic bytes.
    Dense(PathBuf),
    /// A COO observation file.
    Coo(PathBuf),
}

impl InputSource {
    pub fn detect(path: &Path) -> Result<Self> {
        if path.is_dir() {
            return Ok(InputSource::Instance(path.to_path_buf()));
        }
        let mut head = [0u8; 6];
        let mut f = File::open(path)?;
        let got = f.read(&mut head)?;
        if got == head.len() && &head == DENSE_MAGIC {
            Ok(InputSource::Dense(path.to_path_buf()))
        } else {
            Ok(InputSource::Coo(path.to_path_buf()))
        }
    }
}

/// Keeps entry `(i, j)` with probability `q`, independently of read order.
fn keep(seed: u64, q: f64, i: usize, j: usize) -> bool {
    let h = splitmix64(mix_seed(&[seed, i as u64, j as u64]));
    ((h >> 11) as f64) * (1.0 / (1u64 << 53) as f64) < q
}

fn check_rate(q: f64) -> Result<()> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(BenchError::usage(format!("io.subsample = {q} is outside (0, 1]")));
    }
    Ok(())
}

/// Observations plus whatever ground truth travelled with them.
struct Loaded {
    obs: ObservationSet,
    instance: Option<ProblemInstance>,
    truth: Option<LowRankFactors>,
}

fn load(source: &InputSource, subsample: Option<f64>, seed: u64) -> Result<Loaded> {
    let q = subsample.unwrap_or(1.0);
    check_rate(q)?;
    let sub_seed = mix_seed(&[seed, 0x7375_6273]);
    match source {
        InputSource::Instance(dir) => {
            let inst = read_instance(dir)?;
            if subsample.is_none() {
                return Ok(Loaded { obs: inst.obs.clone(), truth: None, instance: Some(inst) });
            }
            let kept = inst.obs.iter().filter(|&(i, j, _)| keep(sub_seed, q, i, j));
            let obs = ObservationSet::from_triplets(inst.obs.n(), inst.obs.p() * q, kept)?;
            let outliers: Vec<_> = inst.outliers().into_iter().filter(|&(i, j, _)| obs.position(i, j).is_some()).collect();
            let mut params = inst.params;
            params.p = obs.p();
            let inst = ProblemInstance::from_parts(inst.truth, obs.clone(), &outliers, params)?;
            Ok(Loaded { obs, truth: None, instance: Some(inst) })
        }
        InputSource::Dense(path) => {
            let m = read_dense(BufReader::new(File::open(path)?))?;
            if m.nrows() != m.ncols() {
                return Err(BenchError::Data(Error::DimensionMismatch(format!(
                    "only square matrices are supported, got {} x {}",
                    m.nrows(),
                    m.ncols()
                ))));
            }
            let obs = ObservationSet::from_dense(m.view(), q, |i, j| keep(sub_seed, q, i, j))?;
            Ok(Loaded { obs, instance: None, truth: None })
        }
        InputSource::Coo(path) => {
            let coo = read_coo(BufReader::new(File::open(path)?))?;
            let kept = coo.triplets.into_iter().filter(|&(i, j, _)| keep(sub_seed, q, i, j));
            let obs = ObservationSet::from_triplets(coo.n, coo.p * q, kept)?;
            Ok(Loaded { obs, instance: None, truth: None })
        }
    }
}

/// Inputs of a `solve` run.
#[derive(Debug, Clone)]
pub struct SolveRequest {
    pub input: PathBuf,
    pub truth: Option<PathBuf>,
    pub subsample: Option<f64>,
    pub rank: Option<usize>,
    pub variant: Variant,
    pub template: SolverTemplate,
    pub seed: u64,
    pub out: PathBuf,
}

impl SolveRequest {
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let input = cfg.raw("io.input").ok_or_else(|| BenchError::usage("solve needs an input (io.input)"))?;
        let variants = parse_variants(cfg.raw("solver.variant").unwrap_or("armc"))?;
        if variants.len() != 1 {
            return Err(BenchError::usage("solve runs a single variant"));
        }
        Ok(SolveRequest {
            input: PathBuf::from(input),
            truth: cfg.raw("io.truth").map(PathBuf::from),
            subsample: cfg.get("io.subsample")?,
            rank: cfg.get("solver.rank")?,
            variant: variants[0],
            template: SolverTemplate::from_config(cfg, "armc", 500, false)?,
            seed: cfg.get_or("experiment.seed", 0u64)?,
            out: PathBuf::from(cfg.raw("io.out").unwrap_or("solve_out")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveSummary {
    pub n: usize,
    pub rank: usize,
    pub p: f64,
    pub observed: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub iters: usize,
    pub converged: bool,
    pub total_seconds: f64,
    pub rel_inf_error: Option<f64>,
    pub rel_fro_error: Option<f64>,
    pub success: Option<bool>,
    pub support: Option<SupportStats>,
}

fn write_trace(path: &Path, trace: &[IterRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iteration", "threshold", "rel_change", "step_seconds", "rel_inf"])?;
    for rec in trace {
        w.write_record([
            rec.iteration.to_string(),
            format!("{:?}", rec.threshold),
            format!("{:?}", rec.rel_change),
            format!("{:?}", rec.step_seconds),
            rec.rel_inf_error.map_or_else(String::new, |e| format!("{e:?}")),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Loads, solves and writes `l_factors.bin`, `s_triplets.coo` and
/// `trace.csv` under `req.out`. A failed solve still leaves its partial
/// trace behind.
pub fn run_solve(req: &SolveRequest) -> Result<SolveSummary> {
    let source = InputSource::detect(&req.input)?;
    let mut loaded = load(&source, req.subsample, req.seed)?;
    if let Some(path) = &req.truth {
        loaded.truth = Some(read_factors(BufReader::new(File::open(path)?))?);
    }
    let obs = &loaded.obs;
    let n = obs.n();
    let truth_factors = loaded.instance.as_ref().map(|i| &i.truth).or(loaded.truth.as_ref());
    let rank = req
        .rank
        .or(truth_factors.map(LowRankFactors::rank))
        .ok_or_else(|| BenchError::usage("solve needs solver.rank when no truth is available"))?;

    let beta1 = match (req.template.beta1, &loaded.instance) {
        (Level::Fixed(x), _) => x,
        (Level::Auto, Some(inst)) => req.template.auto_beta1(inst),
        (Level::Auto, None) => obs.observed_values().max_abs(),
    };
    let beta2 = match (req.template.beta2, &loaded.instance) {
        (Level::Fixed(x), _) => x,
        (Level::Auto, Some(inst)) => req.template.auto_beta2(inst.sigma_noise, n),
        (Level::Auto, None) => 0.0,
    };

    let mut cfg = SolverConfig::new(rank, req.template.rule(beta1, beta2)?, req.variant);
    cfg.max_iters = req.template.max_iters;
    cfg.tol_rel_change = req.template.tol_rel_change;
    cfg.oversample = req.template.oversample;
    cfg.power_iters = req.template.power_iters;
    cfg.seed = req.seed;
    cfg.track_truth = match (&loaded.instance, &loaded.truth) {
        (Some(inst), _) => Some(Arc::new(inst.truth_reference())),
        (None, Some(t)) => Some(Arc::new(TruthReference { factors: t.clone(), outlier_mask: None })),
        (None, None) => None,
    };
    if cfg.track_truth.is_some() && req.template.stop_at_truth {
        cfg.stop_at_truth_error = Some(req.template.success_tol);
    }
    cfg.validate(n).map_err(|e| match e {
        Error::InvalidArgument(msg) => BenchError::usage(msg),
        other => other.into(),
    })?;
    log::info!("solving n = {n}, |Omega| = {}, p = {}, rank {rank}, {}", obs.len(), obs.p(), req.variant);

    fs::create_dir_all(&req.out)?;
    let res = match solve(obs, &cfg) {
        Ok(res) => res,
        Err(fail) => {
            write_trace(&req.out.join(TRACE_FILE), &fail.trace)?;
            return Err(fail.error.into());
        }
    };
    write_trace(&req.out.join(TRACE_FILE), &res.trace)?;
    write_factors(BufWriter::new(File::create(req.out.join(L_FACTORS_FILE))?), &res.l_out)?;
    let s_nonzero = obs.iter().zip(&res.s_out.0).filter(|(_, &s)| s != 0.0).map(|((i, j, _), &s)| (i, j, s));
    write_coo(BufWriter::new(File::create(req.out.join(S_TRIPLETS_FILE))?), n, obs.p(), s_nonzero)?;

    let (rel_inf_error, rel_fro_error) = match truth_factors {
        Some(t) => (
            Some(relative_inf_error(&res.l_out, t, req.seed)?.0),
            Some(relative_fro_error(&res.l_out, t)?),
        ),
        None => (None, None),
    };
    let support = match &loaded.instance {
        Some(inst) => Some(SupportStats::compute(&res.s_out, &inst.outlier_mask)?),
        None => None,
    };
    Ok(SolveSummary {
        n,
        rank,
        p: obs.p(),
        observed: obs.len(),
        beta1,
        beta2,
        iters: res.iters,
        converged: res.converged,
        total_seconds: res.total_seconds(),
        rel_inf_error,
        rel_fro_error,
        success: rel_inf_error.map(|e| e <= req.template.success_tol),
        support,
    })
}

/// Writes an instance directory; with `io.dense`, also `matrix.bin`, the
/// fully observed matrix (truth plus outliers and noise) of the same truth.
pub fn run_generate(cfg: &Config) -> Result<(PathBuf, ProblemInstance)> {
    let params = InstanceParams {
        n: cfg.get_or("experiment.n", 500)?,
        r: cfg.get_or("experiment.r", 5)?,
        kappa: cfg.get_or("experiment.kappa", 2.0)?,
        p: cfg.get_or("experiment.p", 0.2)?,
        alpha: cfg.get_or("experiment.alpha", 0.1)?,
        sigma: cfg.get_or("experiment.sigma", 0.0)?,
        seed: cfg.get_or("experiment.seed", 0)?,
    };
    let out = PathBuf::from(cfg.raw("io.out").unwrap_or("instance"));
    let inst = ProblemInstance::generate(params).map_err(|e| match e {
        Error::InvalidArgument(msg) => BenchError::usage(msg),
        other => other.into(),
    })?;
    write_instance(&out, &inst)?;
    if cfg.get_bool("io.dense", false)? {
        let full = sample_instance(inst.truth.clone(), 1.0, params.alpha, params.sigma, mix_seed(&[params.seed, 3]))?;
        let m = full.obs.to_dense(&full.obs.observed_values())?;
        write_dense(BufWriter::new(File::create(out.join(DENSE_FILE))?), &m)?;
    }
    log::info!("wrote {} observations ({} outliers) to {}", inst.obs.len(), inst.outlier_count(), out.display());
    Ok((out, inst))
}
