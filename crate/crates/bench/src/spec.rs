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


//! Experiment descriptions built from a [`Config`].

use std::path::PathBuf;
use std::sync::Arc;

use armc::metrics::{max_incoherence, SUCCESS_TOL};
use armc::prelude::*;
use armc::thresholding::DEFAULT_SCAD_A;

use crate::config::{range_inclusive, Config};
use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Phase,
    Runtime,
    Stability,
    Solve,
    Generate,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Phase => "phase",
            ExperimentKind::Runtime => "runtime",
            ExperimentKind::Stability => "stability",
            ExperimentKind::Solve => "solve",
            ExperimentKind::Generate => "generate",
        }
    }

    /// Mixed into every seed so the suites draw independent instances.
    pub(crate) fn tag(&self) -> u64 {
        match self {
            ExperimentKind::Phase => 0x7068,
            ExperimentKind::Runtime => 0x7274,
            ExperimentKind::Stability => 0x7374,
            ExperimentKind::Solve => 0x736f,
            ExperimentKind::Generate => 0x6765,
        }
    }
}

/// One point of a parameter grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub n: usize,
    pub r: usize,
    pub kappa: f64,
    pub p: f64,
    pub alpha: f64,
    /// Target SNR; the cell is noiseless when absent.
    pub snr_db: Option<f64>,
}

/// A threshold parameter either fixed or derived from the instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Level {
    Auto,
    Fixed(f64),
}

impl Level {
    fn parse(cfg: &Config, key: &str) -> Result<Self> {
        match cfg.raw(key) {
            None | Some("auto") => Ok(Level::Auto),
            Some(_) => Ok(Level::Fixed(cfg.get(key)?.expect("present"))),
        }
    }
}

pub fn parse_kind(s: &str) -> Result<ThresholdKind> {
    match s.to_ascii_lowercase().as_str() {
        "hard" => Ok(ThresholdKind::Hard),
        "soft" => Ok(ThresholdKind::Soft),
        "scad" => Ok(ThresholdKind::Scad { a: DEFAULT_SCAD_A }),
        other => Err(BenchError::usage(format!("unknown threshold kind '{other}'"))),
    }
}

pub fn parse_variants(s: &str) -> Result<Vec<Variant>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let v: Variant = part.parse().map_err(|e: Error| BenchError::usage(e.to_string()))?;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(BenchError::usage("no solver variant given"));
    }
    Ok(out)
}

/// Solver settings shared by every trial of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverTemplate {
    pub variants: Vec<Variant>,
    pub kind: ThresholdKind,
    pub beta1: Level,
    pub beta1_factor: f64,
    pub beta2: Level,
    pub gamma: f64,
    pub c_noise: f64,
    pub max_iters: usize,
    pub tol_rel_change: f64,
    pub oversample: usize,
    pub power_iters: usize,
    pub stop_at_truth: bool,
    pub success_tol: f64,
}

impl SolverTemplate {
    pub fn from_config(cfg: &Config, variants: &str, max_iters: usize, stop_at_truth: bool) -> Result<Self> {
        let mut kind = parse_kind(cfg.raw("threshold.kind").unwrap_or("soft"))?;
        if let Some(a) = cfg.get::<f64>("threshold.scad_a")? {
            match &mut kind {
                ThresholdKind::Scad { a: slot } => *slot = a,
                _ => return Err(BenchError::usage("threshold.scad_a needs threshold.kind=scad")),
            }
        }
        let defaults = SolverConfig::new(1, ThresholdRule::new(kind, 1.0, 0.0, 0.9)?, Variant::Armc);
        let t = SolverTemplate {
            variants: parse_variants(cfg.raw("solver.variant").unwrap_or(variants))?,
            kind,
            beta1: Level::parse(cfg, "threshold.beta1")?,
            beta1_factor: cfg.get_or("threshold.beta1_factor", 1.1)?,
            beta2: Level::parse(cfg, "threshold.beta2")?,
            gamma: cfg.get_or("threshold.gamma", 0.9)?,
            c_noise: cfg.get_or("threshold.c_noise", 1.0)?,
            max_iters: cfg.get_or("solver.max_iters", max_iters)?,
            tol_rel_change: cfg.get_or("solver.tol_rel_change", defaults.tol_rel_change)?,
            oversample: cfg.get_or("solver.oversample", defaults.oversample)?,
            power_iters: cfg.get_or("solver.power_iters", defaults.power_iters)?,
            stop_at_truth: cfg.get_bool("solver.stop_at_truth", stop_at_truth)?,
            success_tol: cfg.get_or("experiment.success_tol", SUCCESS_TOL)?,
        };
        if !(t.success_tol > 0.0) {
            return Err(BenchError::usage("experiment.success_tol must be positive"));
        }
        // surface bad threshold settings before any work is scheduled
        ThresholdRule::new(t.kind, 1.0, 0.0, t.gamma).map_err(|e| BenchError::usage(e.to_string()))?;
        Ok(t)
    }

    /// `beta1_factor * mu r sigma_1 / n` from the planted truth.
    pub fn auto_beta1(&self, inst: &ProblemInstance) -> f64 {
        let t = &inst.truth;
        self.beta1_factor * max_incoherence(t) * t.rank() as f64 * t.sigma()[0] / t.n() as f64
    }

    /// `1.1 (1 + gamma) c_noise sigma sqrt(ln n)`, zero without noise.
    pub fn auto_beta2(&self, sigma: f64, n: usize) -> f64 {
        1.1 * (1.0 + self.gamma) * self.c_noise * sigma * (n as f64).ln().sqrt()
    }

    pub fn rule(&self, beta1: f64, beta2: f64) -> Result<ThresholdRule> {
        ThresholdRule::new(self.kind, beta1, beta2, self.gamma).map_err(|e| BenchError::usage(e.to_string()))
    }

    /// Solver configuration for one trial, tracking the instance's truth.
    pub fn config(&self, inst: &ProblemInstance, variant: Variant, seed: u64) -> Result<SolverConfig> {
        let beta1 = match self.beta1 {
            Level::Auto => self.auto_beta1(inst),
            Level::Fixed(x) => x,
        };
        let beta2 = match self.beta2 {
            Level::Auto => self.auto_beta2(inst.sigma_noise, inst.truth.n()),
            Level::Fixed(x) => x,
        };
        let mut cfg = SolverConfig::new(inst.truth.rank(), self.rule(beta1, beta2)?, variant);
        cfg.max_iters = self.max_iters;
        cfg.tol_rel_change = self.tol_rel_change;
        cfg.oversample = self.oversample;
        cfg.power_iters = self.power_iters;
        cfg.seed = seed;
        cfg.track_truth = Some(Arc::new(inst.truth_reference()));
        cfg.stop_at_truth_error = self.stop_at_truth.then_some(self.success_tol);
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub cells: Vec<Cell>,
    pub trials: usize,
    pub base: SolverTemplate,
    pub out_path: PathBuf,
    pub seed: u64,
    pub jobs: usize,
}

fn list_or(cfg: &Config, key: &str, default: Vec<f64>) -> Result<Vec<f64>> {
    Ok(cfg.get_list(key)?.unwrap_or(default))
}

fn counts(key: &str, xs: Vec<f64>) -> Result<Vec<usize>> {
    xs.into_iter()
        .map(|x| {
            if x >= 1.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(BenchError::usage(format!("{key}: {x} is not a positive integer")))
            }
        })
        .collect()
}

fn scenarios(cfg: &Config) -> Result<Vec<(usize, f64)>> {
    let text = cfg.raw("experiment.scenarios").unwrap_or("5:0.1,5:0.2,10:0.1");
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let bad = || BenchError::usage(format!("experiment.scenarios: expected r:alpha, got '{item}'"));
        let (r, a) = item.split_once(':').ok_or_else(bad)?;
        out.push((r.trim().parse().map_err(|_| bad())?, a.trim().parse().map_err(|_| bad())?));
    }
    if out.is_empty() {
        return Err(BenchError::usage("experiment.scenarios is empty"));
    }
    Ok(out)
}

impl ExperimentSpec {
    /// Builds the grid for `kind` from built-in defaults overridden by
    /// `cfg`. `paper_scale` swaps in the full-size defaults.
    pub fn from_config(kind: ExperimentKind, cfg: &Config, paper_scale: bool) -> Result<Self> {
        let seed = cfg.get_or("experiment.seed", 0u64)?;
        let jobs = cfg.get_or("experiment.jobs", 1usize)?;
        let out_path = PathBuf::from(cfg.raw("io.out").unwrap_or("results"));
        let (cells, trials, base) = match kind {
            ExperimentKind::Phase => Self::phase_grid(cfg, paper_scale)?,
            ExperimentKind::Runtime => Self::runtime_grid(cfg, paper_scale)?,
            ExperimentKind::Stability => Self::stability_grid(cfg, paper_scale)?,
            _ => return Err(BenchError::usage(format!("'{}' is not a grid experiment", kind.name()))),
        };
        let trials = cfg.get_or("experiment.trials", trials)?;
        let spec = ExperimentSpec { kind, cells, trials, base, out_path, seed, jobs };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() {
            return Err(BenchError::usage("the parameter grid is empty"));
        }
        if self.trials == 0 {
            return Err(BenchError::usage("experiment.trials must be at least 1"));
        }
        if self.jobs == 0 {
            return Err(BenchError::usage("experiment.jobs must be at least 1"));
        }
        for c in &self.cells {
            if c.r == 0 || c.r > c.n {
                return Err(BenchError::usage(format!("rank {} for dimension {}", c.r, c.n)));
            }
            if !(c.p > 0.0 && c.p <= 1.0) || !(c.alpha >= 0.0 && c.alpha < 1.0) || !(c.kappa >= 1.0) {
                return Err(BenchError::usage(format!("invalid grid point {c:?}")));
            }
        }
        Ok(())
    }

    fn phase_grid(cfg: &Config, paper: bool) -> Result<(Vec<Cell>, usize, SolverTemplate)> {
        let n = cfg.get_or("experiment.n", if paper { 1000 } else { 500 })?;
        let r = cfg.get_or("experiment.r", 5usize)?;
        let cells = match cfg.raw("experiment.sweep").unwrap_or("p") {
            "p" => {
                let ps = list_or(cfg, "experiment.p_list", range_inclusive(0.02, 0.02, 0.26))?;
                let kappas = list_or(cfg, "experiment.kappa_list", vec![1.0, 5.0])?;
                let alpha = cfg.get_or("experiment.alpha", 0.15)?;
                let mut cells = Vec::new();
                for &kappa in &kappas {
                    for &p in &ps {
                        cells.push(Cell { n, r, kappa, p, alpha, snr_db: None });
                    }
                }
                cells
            }
            "alpha" => {
                let alphas = list_or(cfg, "experiment.alpha_list", range_inclusive(0.2, 0.05, 0.55))?;
                let kappas = list_or(cfg, "experiment.kappa_list", vec![2.0])?;
                let p = cfg.get_or("experiment.p", 0.2)?;
                let mut cells = Vec::new();
                for &kappa in &kappas {
                    for &alpha in &alphas {
                        cells.push(Cell { n, r, kappa, p, alpha, snr_db: None });
                    }
                }
                cells
            }
            other => return Err(BenchError::usage(format!("experiment.sweep must be p or alpha, got '{other}'"))),
        };
        Ok((cells, 25, SolverTemplate::from_config(cfg, "armc", 300, true)?))
    }

    fn runtime_grid(cfg: &Config, paper: bool) -> Result<(Vec<Cell>, usize, SolverTemplate)> {
        let default_n = if paper { range_inclusive(2000.0, 2000.0, 16000.0) } else { vec![2000.0, 4000.0, 8000.0] };
        let ns = counts("experiment.n_list", list_or(cfg, "experiment.n_list", default_n)?)?;
        let alphas = list_or(cfg, "experiment.alpha_list", vec![0.1, 0.2])?;
        let r = cfg.get_or("experiment.r", 10usize)?;
        let kappa = cfg.get_or("experiment.kappa", 2.0)?;
        let ratio = cfg.get_or("experiment.samples_per_rank", 40.0)?;
        let mut cells = Vec::new();
        for &n in &ns {
            for &alpha in &alphas {
                let p = (ratio * r as f64 / n as f64).min(1.0);
                cells.push(Cell { n, r, kappa, p, alpha, snr_db: None });
            }
        }
        let trials = if paper { 10 } else { 5 };
        Ok((cells, trials, SolverTemplate::from_config(cfg, "armc,rmc", 500, true)?))
    }

    fn stability_grid(cfg: &Config, _paper: bool) -> Result<(Vec<Cell>, usize, SolverTemplate)> {
        let n = cfg.get_or("experiment.n", 1000usize)?;
        let p = cfg.get_or("experiment.p", 0.3)?;
        let kappa = cfg.get_or("experiment.kappa", 2.0)?;
        let snrs = list_or(cfg, "experiment.snr_list", range_inclusive(20.0, 10.0, 60.0))?;
        let mut cells = Vec::new();
        for (r, alpha) in scenarios(cfg)? {
            for &db in &snrs {
                cells.push(Cell { n, r, kappa, p, alpha, snr_db: Some(db) });
            }
        }
        Ok((cells, 5, SolverTemplate::from_config(cfg, "armc", 500, false)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_defaults() {
        let spec = ExperimentSpec::from_config(ExperimentKind::Phase, &Config::new(), false).unwrap();
        assert_eq!(spec.cells.len(), 26);
        assert_eq!(spec.trials, 25);
        assert!(spec.cells.iter().all(|c| c.n == 500 && c.alpha == 0.15));
        assert_eq!(spec.base.variants, vec![Variant::Armc]);
        assert!(spec.base.stop_at_truth);
        let paper = ExperimentSpec::from_config(ExperimentKind::Phase, &Config::new(), true).unwrap();
        assert!(paper.cells.iter().all(|c| c.n == 1000));
    }

    #[test]
    fn runtime_keeps_oversampling_fixed() {
        let spec = ExperimentSpec::from_config(ExperimentKind::Runtime, &Config::new(), true).unwrap();
        assert_eq!(spec.cells.len(), 16);
        for c in &spec.cells {
            assert!((c.p * c.n as f64 - 400.0).abs() < 1e-9);
        }
        assert_eq!(spec.base.variants, vec![Variant::Armc, Variant::Rmc]);
    }

    #[test]
    fn stability_scenarios_and_overrides() {
        let mut cfg = Config::new();
        cfg.set("experiment.scenarios", "5:0.1").unwrap();
        cfg.set("experiment.snr_list", "20,60").unwrap();
        cfg.set("experiment.trials", "2").unwrap();
        let spec = ExperimentSpec::from_config(ExperimentKind::Stability, &cfg, false).unwrap();
        assert_eq!(spec.cells.len(), 2);
        assert_eq!(spec.trials, 2);
        assert_eq!(spec.cells[1].snr_db, Some(60.0));
        assert!(!spec.base.stop_at_truth);
    }

    #[test]
    fn invalid_settings_are_usage_errors() {
        for (k, v) in [
            ("experiment.trials", "0"),
            ("threshold.kind", "median"),
            ("threshold.gamma", "1.5"),
            ("solver.variant", "pca"),
            ("experiment.sweep", "kappa"),
            ("threshold.scad_a", "3"),
        ] {
            let mut cfg = Config::new();
            cfg.set(k, v).unwrap();
            let err = ExperimentSpec::from_config(ExperimentKind::Phase, &cfg, false).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{k}={v}");
        }
    }

    #[test]
    fn auto_levels() {
        let inst = ProblemInstance::generate(InstanceParams {
            n: 200, r: 4, kappa: 2.0, p: 0.3, alpha: 0.1, sigma: 0.01, seed: 3,
        })
        .unwrap();
        let t = SolverTemplate::from_config(&Config::new(), "armc", 100, false).unwrap();
        let cfg = t.config(&inst, Variant::Armc, 0).unwrap();
        let want1 = 1.1 * max_incoherence(&inst.truth) * 4.0 / 200.0;
        assert!((cfg.rule.beta1 - want1).abs() < 1e-15);
        let want2 = 1.1 * 1.9 * 0.01 * (200f64).ln().sqrt();
        assert!((cfg.rule.beta2 - want2).abs() < 1e-15);
        assert_eq!(cfg.rank, 4);
    }
}
