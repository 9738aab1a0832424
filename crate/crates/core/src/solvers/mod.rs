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

//! Iterative robust matrix completion solvers.
//!
//! All three variants share the spectral initialization and the sparse
//! update `S^t = T_{xi_t}(P_Omega(M - L^t))`; they differ in the low-rank
//! update:
//!
//! * [`Variant::Armc`] projects the gradient step onto the tangent space at
//!   `L^t` first, so the truncation only needs a `2r x 2r` SVD.
//! * [`Variant::Rmc`] truncates the full step with a randomized SVD and a
//!   continuous threshold.
//! * [`Variant::Rrmc`] is the same as `Rmc` with hard thresholding.

mod steps;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use steps::{armc_step, initialize, rmc_step, rrmc_step, step};

use crate::error::{Error, Result};
use crate::linalg::LowRankFactors;
use crate::metrics::SupportStats;
use crate::observations::{ObservationSet, SparseValues};
use crate::seeds::mix_seed;
use crate::thresholding::{ThresholdKind, ThresholdRule};

/// Largest dimension for which truth errors are computed over all entries.
pub const EXACT_ERROR_MAX_N: usize = 2000;
/// Probe count used for truth errors above [`EXACT_ERROR_MAX_N`].
pub const ERROR_PROBE_COUNT: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Armc,
    Rmc,
    Rrmc,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Armc, Variant::Rmc, Variant::Rrmc];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Armc => "armc",
            Variant::Rmc => "rmc",
            Variant::Rrmc => "rrmc",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "armc" => Ok(Variant::Armc),
            "rmc" => Ok(Variant::Rmc),
            "rrmc" | "r-rmc" => Ok(Variant::Rrmc),
            other => Err(Error::invalid(format!("unknown solver variant '{other}'"))),
        }
    }
}

/// Ground truth attached to a solve for diagnostics and truth-based stopping.
#[derive(Debug, Clone)]
pub struct TruthReference {
    pub factors: LowRankFactors,
    /// Aligned with the observation triplets: `true` where an outlier was
    /// planted.
    pub outlier_mask: Option<Vec<bool>>,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub rank: usize,
    pub rule: ThresholdRule,
    pub max_iters: usize,
    /// Stop once `||L^{t+1} - L^t||_F / ||L^t||_F` falls to this level.
    pub tol_rel_change: f64,
    pub variant: Variant,
    pub seed: u64,
    pub oversample: usize,
    pub power_iters: usize,
    pub track_truth: Option<Arc<TruthReference>>,
    /// With `track_truth`, also stop once the relative entrywise error
    /// falls to this level.
    pub stop_at_truth_error: Option<f64>,
}

impl SolverConfig {
    pub fn new(rank: usize, rule: ThresholdRule, variant: Variant) -> Self {
        SolverConfig {
            rank,
            rule,
            max_iters: 500,
            tol_rel_change: 1e-7,
            variant,
            seed: 0,
            oversample: 10,
            power_iters: 4,
            track_truth: None,
            stop_at_truth_error: None,
        }
    }

    /// The rule as applied by this variant (hard thresholding for `Rrmc`).
    pub fn effective_rule(&self) -> ThresholdRule {
        match self.variant {
            Variant::Rrmc => self.rule.with_kind(ThresholdKind::Hard),
            _ => self.rule,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.rule.validate()?;
        if self.rank == 0 || self.rank > n {
            return Err(Error::invalid(format!("rank {} for dimension {n}", self.rank)));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.tol_rel_change >= 0.0) {
            return Err(Error::invalid("tol_rel_change must be non-negative"));
        }
        if self.variant == Variant::Rmc && !self.rule.kind.is_continuous() {
            return Err(Error::invalid("the rmc variant needs soft or SCAD thresholding"));
        }
        if let Some(truth) = &self.track_truth {
            if truth.factors.n() != n {
                return Err(Error::dims(format!("truth is {}-dimensional, data {n}", truth.factors.n())));
            }
        }
        Ok(())
    }
}

/// How truth errors in the trace were measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorProbe {
    Exact,
    /// Maximum over this many seeded random entries.
    Sampled(usize),
}

/// One solver iteration `t`: threshold `xi_t`, sparse estimate `S^t`, and
/// the produced iterate `L^{t+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub iteration: usize,
    pub threshold: f64,
    pub step_seconds: f64,
    pub rel_change: f64,
    /// `||L^{t+1} - L*||_inf / ||L*||_inf` when tracking truth.
    pub rel_inf_error: Option<f64>,
    /// Support of `S^t` against the planted outliers.
    pub support: Option<SupportStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    RelativeChange,
    TruthTolerance,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub l_out: LowRankFactors,
    pub s_out: SparseValues,
    pub iters: usize,
    pub converged: bool,
    pub stop: StopReason,
    pub trace: Vec<IterRecord>,
    pub init_seconds: f64,
    /// Truth error of the initial iterate `L^1`.
    pub init_rel_inf_error: Option<f64>,
    pub error_probe: ErrorProbe,
}

impl SolveResult {
    /// Initialization plus every step, excluding diagnostics.
    pub fn total_seconds(&self) -> f64 {
        self.init_seconds + self.trace.iter().map(|r| r.step_seconds).sum::<f64>()
    }

    pub fn mean_step_seconds(&self) -> f64 {
        if self.trace.is_empty() {
            return 0.0;
        }
        self.trace.iter().map(|r| r.step_seconds).sum::<f64>() / self.trace.len() as f64
    }

    /// Truth errors indexed by iterate: element `k` is the error of `L^{k+1}`.
    pub fn error_path(&self) -> Option<Vec<f64>> {
        let mut path = vec![self.init_rel_inf_error?];
        for rec in &self.trace {
            path.push(rec.rel_inf_error?);
        }
        Some(path)
    }
}

/// A failed solve with the iterations completed before the failure.
#[derive(Debug)]
pub struct SolveFailure {
    pub error: Error,
    pub trace: Vec<IterRecord>,
}

impl fmt::Display for SolveFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} iterations)", self.error, self.trace.len())
    }
}

impl std::error::Error for SolveFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<SolveFailure> for Error {
    fn from(f: SolveFailure) -> Self {
        f.error
    }
}

/// Relative entrywise error against a fixed truth, exact or probed.
struct TruthMonitor<'a> {
    truth: &'a TruthReference,
    scale: f64,
    probes: Option<Vec<(u32, u32, f64)>>,
}

impl<'a> TruthMonitor<'a> {
    fn new(truth: &'a TruthReference, seed: u64) -> Self {
        let f = &truth.factors;
        let n = f.n();
        let scale = f.max_abs_entry();
        let probes = (n > EXACT_ERROR_MAX_N).then(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, 0x0070_726f_6265]));
            (0..ERROR_PROBE_COUNT)
                .map(|_| {
                    let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
                    (i as u32, j as u32, f.entry(i, j))
                })
                .collect()
        });
        TruthMonitor { truth, scale, probes }
    }

    fn probe_kind(&self) -> ErrorProbe {
        match &self.probes {
            Some(p) => ErrorProbe::Sampled(p.len()),
            None => ErrorProbe::Exact,
        }
    }

    fn rel_inf_error(&self, l: &LowRankFactors) -> Result<f64> {
        let err = match &self.probes {
            None => l.max_abs_difference(&self.truth.factors)?,
            Some(p) => p
                .iter()
                .fold(0.0f64, |m, &(i, j, want)| m.max((l.entry(i as usize, j as usize) - want).abs())),
        };
        Ok(err / self.scale)
    }

    fn support(&self, s: &SparseValues) -> Option<SupportStats> {
        let mask = self.truth.outlier_mask.as_ref()?;
        SupportStats::compute(s, mask).ok()
    }
}

/// Runs initialization and the variant's iteration until a stopping rule
/// fires or `max_iters` is reached.
pub fn solve(obs: &ObservationSet, cfg: &SolverConfig) -> Result<SolveResult, SolveFailure> {
    let fail = |error: Error, trace: Vec<IterRecord>| SolveFailure { error, trace };
    if obs.is_empty() {
        return Err(fail(Error::EmptyObservations, Vec::new()));
    }
    cfg.validate(obs.n()).map_err(|e| fail(e, Vec::new()))?;

    let monitor = cfg.track_truth.as_deref().map(|t| TruthMonitor::new(t, cfg.seed));
    if let Some(m) = &monitor {
        if let Some(mask) = &m.truth.outlier_mask {
            if mask.len() != obs.len() {
                return Err(fail(Error::dims("outlier mask not aligned with observations"), Vec::new()));
            }
        }
    }

    let start = Instant::now();
    let (mut s, mut l) = initialize(obs, cfg).map_err(|e| fail(e, Vec::new()))?;
    let init_seconds = start.elapsed().as_secs_f64();
    let init_rel_inf_error = match &monitor {
        Some(m) => Some(m.rel_inf_error(&l).map_err(|e| fail(e, Vec::new()))?),
        None => None,
    };

    let mut trace: Vec<IterRecord> = Vec::new();
    let mut stop = StopReason::MaxIterations;
    for t in 1..=cfg.max_iters {
        let start = Instant::now();
        let (s_t, next) = match step(&l, obs, cfg, t as u32) {
            Ok(out) => out,
            Err(e) => return Err(fail(e, trace)),
        };
        let step_seconds = start.elapsed().as_secs_f64();

        let rel_change = match next.frobenius_distance(&l) {
            Ok(d) => d / l.frobenius_norm(),
            Err(e) => return Err(fail(e, trace)),
        };
        let (rel_inf_error, support) = match &monitor {
            Some(m) => {
                let err = match m.rel_inf_error(&next) {
                    Ok(e) => e,
                    Err(e) => return Err(fail(e, trace)),
                };
                (Some(err), m.support(&s_t))
            }
            None => (None, None),
        };
        trace.push(IterRecord {
            iteration: t,
            threshold: cfg.effective_rule().schedule(t as u32),
            step_seconds,
            rel_change,
            rel_inf_error,
            support,
        });
        s = s_t;
        l = next;

        if let (Some(tol), Some(err)) = (cfg.stop_at_truth_error, rel_inf_error) {
            if err <= tol {
                stop = StopReason::TruthTolerance;
                break;
            }
        }
        if rel_change <= cfg.tol_rel_change {
            stop = StopReason::RelativeChange;
            break;
        }
    }

    Ok(SolveResult {
        iters: trace.len(),
        converged: stop != StopReason::MaxIterations,
        stop,
        l_out: l,
        s_out: s,
        trace,
        init_seconds,
        init_rel_inf_error,
        error_probe: monitor.as_ref().map_or(ErrorProbe::Exact, |m| m.probe_kind()),
    })
}
