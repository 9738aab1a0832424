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


//! Grid runners for the phase-transition, runtime and noise-stability
//! suites.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use armc::metrics::{evaluate, max_incoherence, sigma_for_snr, EvalReport};
use armc::prelude::*;
use armc::seeds::mix_seed;
use armc::synthgen::{generate_truth, sample_instance};

use crate::error::{BenchError, Result};
use crate::spec::{Cell, ExperimentKind, ExperimentSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialStatus {
    Ok,
    RankCollapse,
    Error,
}

impl TrialStatus {
    pub fn name(&self) -> &'static str {
        match self {
            TrialStatus::Ok => "ok",
            TrialStatus::RankCollapse => "rank_collapse",
            TrialStatus::Error => "error",
        }
    }
}

/// Everything measured for one (cell, trial, variant).
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub cell_index: usize,
    pub cell: Cell,
    pub trial: usize,
    pub variant: Variant,
    pub seed: u64,
    pub sigma: f64,
    pub mu: f64,
    pub line_cap_satisfied: bool,
    pub status: TrialStatus,
    pub success: bool,
    pub report: Option<EvalReport>,
    pub result: Option<SolveResult>,
    /// Iterations completed, including those before a failure.
    pub iters: usize,
    pub message: Option<String>,
}

impl TrialOutcome {
    pub fn total_seconds(&self) -> Option<f64> {
        self.result.as_ref().map(SolveResult::total_seconds)
    }

    pub fn mean_step_seconds(&self) -> Option<f64> {
        self.result.as_ref().map(SolveResult::mean_step_seconds)
    }
}

impl Cell {
    /// The truth depends only on the axes that shape it, so every sampling
    /// rate, outlier rate and noise level of a trial sees the same matrix.
    pub fn truth_seed(&self, master: u64, kind: ExperimentKind, trial: usize) -> u64 {
        mix_seed(&[master, kind.tag(), 1, self.n as u64, self.r as u64, self.kappa.to_bits(), trial as u64])
    }

    pub fn sample_seed(&self, master: u64, kind: ExperimentKind, trial: usize) -> u64 {
        mix_seed(&[
            master,
            kind.tag(),
            2,
            self.n as u64,
            self.r as u64,
            self.kappa.to_bits(),
            self.p.to_bits(),
            self.alpha.to_bits(),
            self.snr_db.map_or(u64::MAX, f64::to_bits),
            trial as u64,
        ])
    }

    pub fn instance(&self, master: u64, kind: ExperimentKind, trial: usize) -> Result<ProblemInstance> {
        let truth = generate_truth(self.n, self.r, self.kappa, self.truth_seed(master, kind, trial))?;
        let sigma = self.snr_db.map_or(0.0, |db| sigma_for_snr(&truth, db));
        Ok(sample_instance(truth, self.p, self.alpha, sigma, self.sample_seed(master, kind, trial))?)
    }
}

fn run_unit(spec: &ExperimentSpec, cell_index: usize, trial: usize) -> Result<Vec<TrialOutcome>> {
    let cell = spec.cells[cell_index];
    let inst = cell.instance(spec.seed, spec.kind, trial)?;
    let seed = inst.params.seed;
    let mu = max_incoherence(&inst.truth);
    let mut out = Vec::with_capacity(spec.base.variants.len());
    for &variant in &spec.base.variants {
        let cfg = spec.base.config(&inst, variant, seed)?;
        let mut o = TrialOutcome {
            cell_index,
            cell,
            trial,
            variant,
            seed,
            sigma: inst.sigma_noise,
            mu,
            line_cap_satisfied: inst.line_cap_satisfied,
            status: TrialStatus::Ok,
            success: false,
            report: None,
            result: None,
            iters: 0,
            message: None,
        };
        match solve(&inst.obs, &cfg) {
            Ok(res) => {
                let report = evaluate(&res, &inst)?;
                o.success = report.rel_inf_error <= spec.base.success_tol;
                o.iters = res.iters;
                o.report = Some(report);
                o.result = Some(res);
            }
            Err(fail) => {
                o.status = match fail.error {
                    Error::RankCollapse { .. } => TrialStatus::RankCollapse,
                    _ => TrialStatus::Error,
                };
                o.iters = fail.trace.len();
                o.message = Some(fail.error.to_string());
                log::warn!("{} cell {cell_index} trial {trial} {variant}: {}", spec.kind.name(), fail);
            }
        }
        log::debug!(
            "{} cell {cell_index} trial {trial} {variant}: {} iters, success {}",
            spec.kind.name(),
            o.iters,
            o.success
        );
        out.push(o);
    }
    Ok(out)
}

/// Runs every (cell, trial) unit on up to `spec.jobs` threads. Outcomes
/// come back ordered by cell, trial and variant regardless of scheduling.
pub fn run_trials(spec: &ExperimentSpec) -> Result<Vec<TrialOutcome>> {
    spec.validate()?;
    let units: Vec<(usize, usize)> =
        (0..spec.cells.len()).flat_map(|c| (0..spec.trials).map(move |t| (c, t))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| BenchError::usage(format!("cannot start {} workers: {e}", spec.jobs)))?;
    log::info!("{}: {} cells x {} trials on {} threads", spec.kind.name(), spec.cells.len(), spec.trials, spec.jobs);
    let nested: Vec<Result<Vec<TrialOutcome>>> =
        pool.install(|| units.par_iter().map(|&(c, t)| run_unit(spec, c, t)).collect());
    let mut all = Vec::with_capacity(units.len() * spec.base.variants.len());
    for r in nested {
        all.extend(r?);
    }
    let order = |v: Variant| Variant::ALL.iter().position(|&x| x == v);
    all.sort_by_key(|o| (o.cell_index, o.trial, order(o.variant)));
    Ok(all)
}

/// Outcomes of one cell and variant, in trial order.
pub fn group(outcomes: &[TrialOutcome], cell_index: usize, variant: Variant) -> Vec<&TrialOutcome> {
    outcomes.iter().filter(|o| o.cell_index == cell_index && o.variant == variant).collect()
}

/// Median of the finite values, `NaN` when there are none.
pub fn median(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn success_rate(group: &[&TrialOutcome]) -> f64 {
    if group.is_empty() {
        return f64::NAN;
    }
    group.iter().filter(|o| o.success).count() as f64 / group.len() as f64
}

/// Shortest round-trip decimal; blank for missing values.
fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:?}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Paths of the CSV files an experiment wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct Written {
    pub trials: PathBuf,
    pub summary: PathBuf,
}

fn write_tables(spec: &ExperimentSpec, trials: Table, summary: Table) -> Result<Written> {
    fs::create_dir_all(&spec.out_path)?;
    let name = spec.kind.name();
    let written = Written {
        trials: spec.out_path.join(format!("{name}_trials.csv")),
        summary: spec.out_path.join(format!("{name}_summary.csv")),
    };
    trials.write(&written.trials)?;
    summary.write(&written.summary)?;
    Ok(written)
}

fn rel_inf(o: &TrialOutcome) -> Option<f64> {
    o.report.as_ref().map(|r| r.rel_inf_error)
}

fn rel_fro(o: &TrialOutcome) -> Option<f64> {
    o.report.as_ref().map(|r| r.rel_fro_error)
}

fn common(o: &TrialOutcome) -> Vec<String> {
    vec![
        o.cell.n.to_string(),
        o.cell.r.to_string(),
        num(o.cell.kappa),
        num(o.cell.p),
        num(o.cell.alpha),
        o.variant.to_string(),
        o.trial.to_string(),
        o.seed.to_string(),
        o.status.name().to_string(),
    ]
}

const COMMON: [&str; 9] = ["n", "r", "kappa", "p", "alpha", "variant", "trial", "seed", "status"];

fn header(extra: &[&'static str]) -> Vec<&'static str> {
    COMMON.iter().chain(extra).copied().collect()
}

fn phase_tables(spec: &ExperimentSpec, outcomes: &[TrialOutcome]) -> (Table, Table) {
    let mut trials = Table::new(&header(&[
        "success",
        "rel_inf",
        "rel_fro",
        "iters",
        "converged",
        "support_precision",
        "support_recall",
        "mu",
        "line_cap_ok",
    ]));
    for o in outcomes {
        let mut row = common(o);
        row.extend([
            o.success.to_string(),
            opt(rel_inf(o)),
            opt(rel_fro(o)),
            o.iters.to_string(),
            o.result.as_ref().is_some_and(|r| r.converged).to_string(),
            opt(o.report.as_ref().map(|r| r.support_precision)),
            opt(o.report.as_ref().map(|r| r.support_recall)),
            num(o.mu),
            o.line_cap_satisfied.to_string(),
        ]);
        trials.push(row);
    }
    let mut summary =
        Table::new(&["n", "r", "kappa", "p", "alpha", "variant", "trials", "successes", "success_rate", "median_iters"]);
    for (ci, c) in spec.cells.iter().enumerate() {
        for &v in &spec.base.variants {
            let g = group(outcomes, ci, v);
            summary.push(vec![
                c.n.to_string(),
                c.r.to_string(),
                num(c.kappa),
                num(c.p),
                num(c.alpha),
                v.to_string(),
                g.len().to_string(),
                g.iter().filter(|o| o.success).count().to_string(),
                num(success_rate(&g)),
                num(median(g.iter().map(|o| o.iters as f64))),
            ]);
        }
    }
    (trials, summary)
}

fn runtime_tables(spec: &ExperimentSpec, outcomes: &[TrialOutcome]) -> (Table, Table) {
    let mut trials =
        Table::new(&header(&["iters", "total_seconds", "mean_iter_seconds", "init_seconds", "rel_inf", "success"]));
    for o in outcomes {
        let mut row = common(o);
        row.extend([
            o.iters.to_string(),
            opt(o.total_seconds()),
            opt(o.mean_step_seconds()),
            opt(o.result.as_ref().map(|r| r.init_seconds)),
            opt(rel_inf(o)),
            o.success.to_string(),
        ]);
        trials.push(row);
    }
    let mut summary = Table::new(&[
        "n",
        "r",
        "p",
        "alpha",
        "variant",
        "trials",
        "median_total_seconds",
        "median_iter_seconds",
        "median_iters",
        "success_rate",
    ]);
    for (ci, c) in spec.cells.iter().enumerate() {
        for &v in &spec.base.variants {
            let g = group(outcomes, ci, v);
            summary.push(vec![
                c.n.to_string(),
                c.r.to_string(),
                num(c.p),
                num(c.alpha),
                v.to_string(),
                g.len().to_string(),
                num(median(g.iter().filter_map(|o| o.total_seconds()))),
                num(median(g.iter().filter_map(|o| o.mean_step_seconds()))),
                num(median(g.iter().filter(|o| o.result.is_some()).map(|o| o.iters as f64))),
                num(success_rate(&g)),
            ]);
        }
    }
    (trials, summary)
}

fn stability_tables(spec: &ExperimentSpec, outcomes: &[TrialOutcome]) -> (Table, Table) {
    let mut trials = Table::new(&[
        "snr_db", "alpha", "r", "rel_inf", "rel_fro", "trial", "n", "p", "kappa", "sigma", "variant", "seed", "status",
        "iters",
    ]);
    for o in outcomes {
        let c = &o.cell;
        trials.push(vec![
            opt(c.snr_db),
            num(c.alpha),
            c.r.to_string(),
            opt(rel_inf(o)),
            opt(rel_fro(o)),
            o.trial.to_string(),
            c.n.to_string(),
            num(c.p),
            num(c.kappa),
            num(o.sigma),
            o.variant.to_string(),
            o.seed.to_string(),
            o.status.name().to_string(),
            o.iters.to_string(),
        ]);
    }
    let mut summary =
        Table::new(&["snr_db", "alpha", "r", "variant", "trials", "median_rel_inf", "median_rel_fro", "median_iters"]);
    for (ci, c) in spec.cells.iter().enumerate() {
        for &v in &spec.base.variants {
            let g = group(outcomes, ci, v);
            summary.push(vec![
                opt(c.snr_db),
                num(c.alpha),
                c.r.to_string(),
                v.to_string(),
                g.len().to_string(),
                num(median(g.iter().filter_map(|o| rel_inf(o)))),
                num(median(g.iter().filter_map(|o| rel_fro(o)))),
                num(median(g.iter().filter(|o| o.result.is_some()).map(|o| o.iters as f64))),
            ]);
        }
    }
    (trials, summary)
}

fn run_kind(spec: &ExperimentSpec, kind: ExperimentKind) -> Result<(Vec<TrialOutcome>, Written)> {
    if spec.kind != kind {
        return Err(BenchError::usage(format!("expected a {} spec, got {}", kind.name(), spec.kind.name())));
    }
    let outcomes = run_trials(spec)?;
    let (trials, summary) = match kind {
        ExperimentKind::Phase => phase_tables(spec, &outcomes),
        ExperimentKind::Runtime => runtime_tables(spec, &outcomes),
        _ => stability_tables(spec, &outcomes),
    };
    let written = write_tables(spec, trials, summary)?;
    Ok((outcomes, written))
}

/// Success rate per (cell, variant) plus one row per trial.
pub fn run_phase(spec: &ExperimentSpec) -> Result<(Vec<TrialOutcome>, Written)> {
    run_kind(spec, ExperimentKind::Phase)
}

/// Wall time, per-iteration time and iteration count per trial, with
/// medians per (n, alpha, variant).
pub fn run_runtime(spec: &ExperimentSpec) -> Result<(Vec<TrialOutcome>, Written)> {
    run_kind(spec, ExperimentKind::Runtime)
}

/// Entrywise and Frobenius errors against the SNR.
pub fn run_stability(spec: &ExperimentSpec) -> Result<(Vec<TrialOutcome>, Written)> {
    run_kind(spec, ExperimentKind::Stability)
}
