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


//! Flat `key=value` settings. A file supplies the base values and
//! command-line flags are applied on top, so flags win.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{BenchError, Result};

/// Every recognised key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("solver.variant", "armc | rmc | rrmc, or a comma list for experiments"),
    ("solver.rank", "target rank r (solve only; experiments use experiment.r)"),
    ("solver.max_iters", "iteration cap"),
    ("solver.tol_rel_change", "stop when ||L+ - L||_F / ||L||_F falls to this"),
    ("solver.oversample", "extra sketch columns in the randomized SVD"),
    ("solver.power_iters", "power passes in the randomized SVD"),
    ("solver.stop_at_truth", "experiments: stop once the entrywise error reaches experiment.success_tol"),
    ("threshold.kind", "hard | soft | scad"),
    ("threshold.scad_a", "SCAD shape a > 2"),
    ("threshold.beta1", "auto or a number; auto = beta1_factor * mu r sigma_1 / n, or max |M| for solve"),
    ("threshold.beta1_factor", "multiplier in the automatic beta1"),
    ("threshold.beta2", "auto or a number; auto = 1.1 (1 + gamma) c_noise sigma sqrt(ln n)"),
    ("threshold.gamma", "threshold decay rate in (0, 1)"),
    ("threshold.c_noise", "noise calibration constant in the automatic beta2"),
    ("experiment.seed", "master seed"),
    ("experiment.trials", "repetitions per grid cell"),
    ("experiment.jobs", "worker threads"),
    ("experiment.sweep", "phase preset: p (vary p at alpha 0.15) or alpha (vary alpha at p 0.2)"),
    ("experiment.n", "dimension"),
    ("experiment.n_list", "dimensions (runtime)"),
    ("experiment.r", "rank"),
    ("experiment.kappa", "condition number"),
    ("experiment.kappa_list", "condition numbers (phase)"),
    ("experiment.p", "sampling rate"),
    ("experiment.p_list", "sampling rates (phase)"),
    ("experiment.samples_per_rank", "runtime: p = samples_per_rank * r / n"),
    ("experiment.alpha", "outlier rate"),
    ("experiment.alpha_list", "outlier rates (phase, runtime)"),
    ("experiment.sigma", "noise level (generate)"),
    ("experiment.snr_list", "target SNRs in dB (stability)"),
    ("experiment.scenarios", "stability (r:alpha) pairs, e.g. 5:0.1,10:0.1"),
    ("experiment.success_tol", "relative entrywise error counted as success"),
    ("io.out", "output directory"),
    ("io.input", "solve input: instance directory, dense matrix file or COO file"),
    ("io.truth", "solve: truth factor file for evaluation"),
    ("io.subsample", "solve: keep each entry with this probability"),
    ("io.dense", "generate: also write the fully observed matrix"),
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn new() -> Self {
        Config::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| BenchError::usage(format!("config line {}: expected key=value", idx + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| BenchError::usage(format!("config line {}: {e}", idx + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    /// Sets a known key, replacing any earlier value.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(BenchError::usage(format!("unknown setting '{key}'")));
        }
        self.values.insert(key.to_string(), value.into());
        Ok(())
    }

    /// Applies an `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair.split_once('=').ok_or_else(|| BenchError::usage(format!("expected key=value, got '{pair}'")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| BenchError::usage(format!("setting {key} = '{v}': {e}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list; `lo:step:hi` expands to an inclusive range.
    pub fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        let bad = |item: &str| BenchError::usage(format!("setting {key}: bad list item '{item}'"));
        let mut out = Vec::new();
        for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let parts: Vec<&str> = item.split(':').collect();
            match parts.as_slice() {
                [x] => out.push(x.parse().map_err(|_| bad(item))?),
                [lo, step, hi] => {
                    let (lo, step, hi): (f64, f64, f64) = (
                        lo.parse().map_err(|_| bad(item))?,
                        step.parse().map_err(|_| bad(item))?,
                        hi.parse().map_err(|_| bad(item))?,
                    );
                    if !(step > 0.0) || hi < lo {
                        return Err(bad(item));
                    }
                    out.extend(range_inclusive(lo, step, hi));
                }
                _ => return Err(bad(item)),
            }
        }
        if out.is_empty() {
            return Err(BenchError::usage(format!("setting {key} is an empty list")));
        }
        Ok(Some(out))
    }

    pub fn get_bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(v) => Err(BenchError::usage(format!("setting {key} = '{v}' is not a boolean"))),
        }
    }
}

/// `lo, lo + step, ..., hi`, computed by index and rounded to 12 decimals
/// so that `0.02:0.02:0.26` yields exactly the 13 intended values.
pub fn range_inclusive(lo: f64, step: f64, hi: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=count).map(|k| ((lo + step * k as f64) * 1e12).round() / 1e12).collect()
}
