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

//! Evaluation of a solve against a known ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::LowRankFactors;
use crate::observations::SparseValues;
use crate::seeds::mix_seed;
use crate::solvers::{ErrorProbe, SolveResult, ERROR_PROBE_COUNT, EXACT_ERROR_MAX_N};
use crate::synthgen::ProblemInstance;

/// A recovery counts as successful when `||L_out - L*||_inf / ||L*||_inf`
/// is at most this.
pub const SUCCESS_TOL: f64 = 1e-3;

/// Nonzeros of an estimated sparse part against the planted outliers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupportStats {
    pub nnz: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub outliers: usize,
}

impl SupportStats {
    pub fn compute(s: &SparseValues, outlier_mask: &[bool]) -> Result<Self> {
        if s.len() != outlier_mask.len() {
            return Err(Error::dims(format!(
                "{} sparse values against a mask of {}",
                s.len(),
                outlier_mask.len()
            )));
        }
        let mut stats = SupportStats { nnz: 0, true_positives: 0, false_positives: 0, outliers: 0 };
        for (&x, &o) in s.0.iter().zip(outlier_mask) {
            stats.outliers += o as usize;
            if x != 0.0 {
                stats.nnz += 1;
                if o {
                    stats.true_positives += 1;
                } else {
                    stats.false_positives += 1;
                }
            }
        }
        Ok(stats)
    }

    /// Fraction of detected entries that are true outliers (1 when none detected).
    pub fn precision(&self) -> f64 {
        if self.nnz == 0 {
            1.0
        } else {
            self.true_positives as f64 / self.nnz as f64
        }
    }

    /// Fraction of planted outliers that were detected (1 when none planted).
    pub fn recall(&self) -> f64 {
        if self.outliers == 0 {
            1.0
        } else {
            self.true_positives as f64 / self.outliers as f64
        }
    }

    /// Every detected entry is a planted outlier.
    pub fn contained(&self) -> bool {
        self.false_positives == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rel_inf_error: f64,
    pub rel_fro_error: f64,
    pub success: bool,
    pub support_precision: f64,
    pub support_recall: f64,
    pub contained: bool,
    pub error_probe: ErrorProbe,
}

/// `||est - truth||_inf / ||truth||_inf`, exact up to
/// [`EXACT_ERROR_MAX_N`] and over seeded random probes above it.
pub fn relative_inf_error(est: &LowRankFactors, truth: &LowRankFactors, seed: u64) -> Result<(f64, ErrorProbe)> {
    let n = truth.n();
    if est.n() != n {
        return Err(Error::dims(format!("estimate is {}-dimensional, truth {n}", est.n())));
    }
    let scale = truth.max_abs_entry();
    if n <= EXACT_ERROR_MAX_N {
        return Ok((est.max_abs_difference(truth)? / scale, ErrorProbe::Exact));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, 0x6576_616c]));
    let mut worst = 0.0f64;
    for _ in 0..ERROR_PROBE_COUNT {
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        worst = worst.max((est.entry(i, j) - truth.entry(i, j)).abs());
    }
    Ok((worst / scale, ErrorProbe::Sampled(ERROR_PROBE_COUNT)))
}

pub fn relative_fro_error(est: &LowRankFactors, truth: &LowRankFactors) -> Result<f64> {
    Ok(est.frobenius_distance(truth)? / truth.frobenius_norm())
}

pub fn evaluate(result: &SolveResult, instance: &ProblemInstance) -> Result<EvalReport> {
    let (rel_inf_error, error_probe) = relative_inf_error(&result.l_out, &instance.truth, instance.params.seed)?;
    let rel_fro_error = relative_fro_error(&result.l_out, &instance.truth)?;
    let support = SupportStats::compute(&result.s_out, &instance.outlier_mask)?;
    Ok(EvalReport {
        rel_inf_error,
        rel_fro_error,
        success: rel_inf_error <= SUCCESS_TOL,
        support_precision: support.precision(),
        support_recall: support.recall(),
        contained: support.contained(),
        error_probe,
    })
}

/// `(n / r) * ||U||_{2,inf}^2` for both factors.
pub fn incoherence(f: &LowRankFactors) -> (f64, f64) {
    let scale = f.n() as f64 / f.rank() as f64;
    let row_max = |m: ndarray::ArrayView2<f64>| m.rows().into_iter().map(|r| r.dot(&r)).fold(0.0f64, f64::max);
    (scale * row_max(f.u()), scale * row_max(f.v()))
}

/// Larger of the two incoherence parameters.
pub fn max_incoherence(f: &LowRankFactors) -> f64 {
    let (mu_u, mu_v) = incoherence(f);
    mu_u.max(mu_v)
}

/// Average signal power over noise power, in decibels:
/// `10 log10(||L*||_F^2 / (n^2 sigma^2))`.
pub fn snr_db_for(truth: &LowRankFactors, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("SNR is undefined without noise"));
    }
    let n = truth.n() as f64;
    let fro = truth.frobenius_norm();
    Ok(10.0 * (fro * fro / (n * n * sigma * sigma)).log10())
}

pub fn snr_db(instance: &ProblemInstance) -> Result<f64> {
    snr_db_for(&instance.truth, instance.sigma_noise)
}

/// Noise level that puts `truth` at `db` decibels.
pub fn sigma_for_snr(truth: &LowRankFactors, db: f64) -> f64 {
    truth.frobenius_norm() / (truth.n() as f64 * 10f64.powf(db / 20.0))
}
