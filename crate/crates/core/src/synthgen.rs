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

//! Synthetic robust matrix completion problems: an incoherent rank-r ground
//! truth with a uniform spectrum of prescribed condition number, Bernoulli
//! sampling, uniformly bounded outliers and Gaussian noise.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{qr_thin, LowRankFactors};
use crate::observations::{ObservationSet, SparseValues};
use crate::seeds::mix_seed;
use crate::solvers::TruthReference;

/// Redraws allowed when a sample exceeds the per-line outlier cap.
pub const MAX_RESAMPLES: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceParams {
    pub n: usize,
    pub r: usize,
    pub kappa: f64,
    pub p: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub truth: LowRankFactors,
    /// Observed `M = L* + S* + N` on the sampled support.
    pub obs: ObservationSet,
    /// Aligned with `obs`: where an outlier was planted.
    pub outlier_mask: Vec<bool>,
    /// Aligned with `obs`: planted outlier values, zero elsewhere.
    pub outlier_values: SparseValues,
    pub sigma_noise: f64,
    pub params: InstanceParams,
    /// Draws rejected for exceeding the `2 alpha p n` per-line cap.
    pub resamples: u32,
    pub line_cap_satisfied: bool,
}

/// Gaussian `n x r`, orthonormalized, rows rescaled to norm at most
/// `sqrt(r / n)`, orthonormalized again.
fn incoherent_basis(rng: &mut ChaCha8Rng, n: usize, r: usize) -> Result<Array2<f64>> {
    let g = Array2::from_shape_simple_fn((n, r), || StandardNormal.sample(rng));
    let mut q = qr_thin(g.view())?.q;
    let cap = (r as f64 / n as f64).sqrt();
    for mut row in q.rows_mut() {
        let nrm = row.dot(&row).sqrt();
        if nrm > cap {
            row.mapv_inplace(|x| x * cap / nrm);
        }
    }
    Ok(qr_thin(q.view())?.q)
}

/// Rank-`r` ground truth with `sigma_1 = 1` and `sigma_r = 1 / kappa`; the
/// interior singular values are uniform on `[1/kappa, 1]`.
pub fn generate_truth(n: usize, r: usize, kappa: f64, seed: u64) -> Result<LowRankFactors> {
    if r == 0 || r > n {
        return Err(Error::invalid(format!("rank {r} for dimension {n}")));
    }
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::invalid(format!("condition number {kappa} must be at least 1")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = incoherent_basis(&mut rng, n, r)?;
    let v = incoherent_basis(&mut rng, n, r)?;

    let lo = 1.0 / kappa;
    let mut sigma: Vec<f64> = (0..r).map(|_| lo + (1.0 - lo) * rng.random::<f64>()).collect();
    sigma.sort_by(|a, b| b.total_cmp(a));
    sigma[0] = 1.0;
    if r > 1 {
        sigma[r - 1] = lo;
    }
    LowRankFactors::new(u, Array1::from(sigma), v)
}

/// Samples the observation support, outliers and noise for a fixed truth.
///
/// Each entry is observed with probability `p`; each observed entry is
/// corrupted with probability `alpha` by a value uniform on
/// `[-||L*||_inf, ||L*||_inf]`; Gaussian noise of level `sigma_noise` is
/// added everywhere on the support. Draws where some row or column carries
/// more than `2 alpha p n` outliers are redrawn with a fresh sub-seed, up to
/// [`MAX_RESAMPLES`] times; after that the last draw is kept and flagged.
pub fn sample_instance(
    truth: LowRankFactors,
    p: f64,
    alpha: f64,
    sigma_noise: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("sampling rate {p} outside (0, 1]")));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::invalid(format!("outlier rate {alpha} outside [0, 1)")));
    }
    if !(sigma_noise >= 0.0) || !sigma_noise.is_finite() {
        return Err(Error::invalid(format!("noise level {sigma_noise} must be non-negative")));
    }
    let n = truth.n();
    let linf = truth.max_abs_entry();
    let cap = 2.0 * alpha * p * n as f64;

    let mut attempt = 0;
    loop {
        let draw = draw_support(&truth, p, alpha, sigma_noise, linf, mix_seed(&[seed, attempt as u64]))?;
        let (rmax, cmax) = line_counts(n, &draw.0, &draw.1, &draw.3);
        let ok = (rmax.max(cmax) as f64) <= cap;
        if ok || attempt >= MAX_RESAMPLES {
            if !ok {
                log::warn!(
                    "keeping draw over the outlier cap after {attempt} resamples (max line count {} > {cap:.2})",
                    rmax.max(cmax)
                );
            } else if attempt > 0 {
                log::info!("outlier cap met after {attempt} resamples");
            }
            let (rows, cols, vals, mask, outliers) = draw;
            let params = InstanceParams {
                n,
                r: truth.rank(),
                kappa: truth.condition_number(),
                p,
                alpha,
                sigma: sigma_noise,
                seed,
            };
            return Ok(ProblemInstance {
                obs: ObservationSet::from_sorted_parts(n, p, rows, cols, vals),
                truth,
                outlier_mask: mask,
                outlier_values: SparseValues(outliers),
                sigma_noise,
                params,
                resamples: attempt,
                line_cap_satisfied: ok,
            });
        }
        attempt += 1;
    }
}

type Draw = (Vec<u32>, Vec<u32>, Vec<f64>, Vec<bool>, Vec<f64>);

fn draw_support(truth: &LowRankFactors, p: f64, alpha: f64, sigma: f64, linf: f64, seed: u64) -> Result<Draw> {
    let n = truth.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let cap = (p * (n * n) as f64 * 1.05) as usize + 16;
    let (mut rows, mut cols, mut vals) = (Vec::with_capacity(cap), Vec::with_capacity(cap), Vec::with_capacity(cap));
    let (mut mask, mut outliers) = (Vec::with_capacity(cap), Vec::with_capacity(cap));
    for i in 0..n {
        for j in 0..n {
            if rng.random::<f64>() >= p {
                continue;
            }
            let mut m = truth.entry(i, j);
            let corrupted = alpha > 0.0 && rng.random::<f64>() < alpha;
            let s = if corrupted { linf * (2.0 * rng.random::<f64>() - 1.0) } else { 0.0 };
            m += s;
            if sigma > 0.0 {
                m += noise.sample(&mut rng);
            }
            rows.push(i as u32);
            cols.push(j as u32);
            vals.push(m);
            mask.push(corrupted);
            outliers.push(s);
        }
    }
    if vals.is_empty() {
        return Err(Error::EmptyObservations);
    }
    Ok((rows, cols, vals, mask, outliers))
}

fn line_counts(n: usize, rows: &[u32], cols: &[u32], mask: &[bool]) -> (usize, usize) {
    let mut rc = vec![0usize; n];
    let mut cc = vec![0usize; n];
    for ((&i, &j), &o) in rows.iter().zip(cols).zip(mask) {
        if o {
            rc[i as usize] += 1;
            cc[j as usize] += 1;
        }
    }
    (rc.into_iter().max().unwrap_or(0), cc.into_iter().max().unwrap_or(0))
}

impl ProblemInstance {
    /// Truth and sample from one master seed.
    pub fn generate(params: InstanceParams) -> Result<Self> {
        let truth = generate_truth(params.n, params.r, params.kappa, mix_seed(&[params.seed, 1]))?;
        let mut inst = sample_instance(truth, params.p, params.alpha, params.sigma, mix_seed(&[params.seed, 2]))?;
        inst.params = params;
        Ok(inst)
    }

    /// Reassembles an instance from stored parts; outlier triplets must lie
    /// on the observed support.
    pub fn from_parts(
        truth: LowRankFactors,
        obs: ObservationSet,
        outliers: &[(usize, usize, f64)],
        params: InstanceParams,
    ) -> Result<Self> {
        if truth.n() != obs.n() {
            return Err(Error::dims(format!("truth is {}-dimensional, observations {}", truth.n(), obs.n())));
        }
        let mut mask = vec![false; obs.len()];
        let mut values = vec![0.0; obs.len()];
        for &(i, j, s) in outliers {
            let pos = obs
                .position(i, j)
                .ok_or_else(|| Error::invalid(format!("outlier ({i}, {j}) is not observed")))?;
            mask[pos] = true;
            values[pos] = s;
        }
        let (rmax, cmax) = line_counts(obs.n(), obs.rows(), obs.cols(), &mask);
        let cap = 2.0 * params.alpha * params.p * obs.n() as f64;
        Ok(ProblemInstance {
            truth,
            obs,
            outlier_mask: mask,
            outlier_values: SparseValues(values),
            sigma_noise: params.sigma,
            params,
            resamples: 0,
            line_cap_satisfied: (rmax.max(cmax) as f64) <= cap,
        })
    }

    pub fn outlier_count(&self) -> usize {
        self.outlier_mask.iter().filter(|&&o| o).count()
    }

    /// Outliers as `(i, j, value)` triplets in support order.
    pub fn outliers(&self) -> Vec<(usize, usize, f64)> {
        self.obs
            .iter()
            .zip(&self.outlier_mask)
            .zip(&self.outlier_values.0)
            .filter(|((_, &o), _)| o)
            .map(|(((i, j, _), _), &s)| (i, j, s))
            .collect()
    }

    /// Largest per-row and per-column outlier counts.
    pub fn max_line_outliers(&self) -> (usize, usize) {
        line_counts(self.obs.n(), self.obs.rows(), self.obs.cols(), &self.outlier_mask)
    }

    /// `2 alpha p n`.
    pub fn line_cap(&self) -> f64 {
        2.0 * self.params.alpha * self.params.p * self.params.n as f64
    }

    pub fn truth_reference(&self) -> TruthReference {
        TruthReference { factors: self.truth.clone(), outlier_mask: Some(self.outlier_mask.clone()) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observations::eval_on_support;

    #[test]
    fn unit_condition_number_gives_flat_spectrum() {
        let t = generate_truth(50, 4, 1.0, 3).unwrap();
        assert!(t.sigma().iter().all(|&s| s == 1.0));
    }

    #[test]
    fn condition_number_is_pinned() {
        for seed in 0..5 {
            let t = generate_truth(400, 5, 5.0, seed).unwrap();
            assert_eq!(t.sigma()[0] / t.sigma()[4], 5.0);
            assert!(t.orthonormality_defect() < 1e-12);
        }
    }

    #[test]
    fn clean_full_observation() {
        let t = generate_truth(12, 2, 2.0, 4).unwrap();
        let inst = sample_instance(t.clone(), 1.0, 0.0, 0.0, 9).unwrap();
        assert_eq!(inst.obs.len(), 144);
        let dense = t.to_dense();
        for (i, j, m) in inst.obs.iter() {
            assert_eq!(m, t.entry(i, j));
            assert!((m - dense[(i, j)]).abs() < 1e-15);
        }
        assert_eq!(inst.outlier_count(), 0);
    }

    #[test]
    fn noiseless_values_match_evaluation() {
        let t = generate_truth(30, 3, 2.0, 5).unwrap();
        let inst = sample_instance(t.clone(), 0.4, 0.0, 0.0, 6).unwrap();
        assert_eq!(eval_on_support(&t, &inst.obs).unwrap().0, inst.obs.values());
    }

    #[test]
    fn same_seed_same_instance() {
        let params = InstanceParams { n: 40, r: 2, kappa: 3.0, p: 0.3, alpha: 0.1, sigma: 0.01, seed: 77 };
        let a = ProblemInstance::generate(params).unwrap();
        let b = ProblemInstance::generate(params).unwrap();
        assert_eq!(a.obs, b.obs);
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.outlier_values, b.outlier_values);
    }

    #[test]
    fn outliers_are_bounded_and_on_support() {
        let params = InstanceParams { n: 60, r: 3, kappa: 2.0, p: 0.5, alpha: 0.2, sigma: 0.0, seed: 1 };
        let inst = ProblemInstance::generate(params).unwrap();
        let linf = inst.truth.max_abs_entry();
        assert!(inst.outlier_values.0.iter().all(|s| s.abs() <= linf));
        for (i, j, _) in inst.outliers() {
            assert!(inst.obs.position(i, j).is_some());
        }
        let rebuilt =
            ProblemInstance::from_parts(inst.truth.clone(), inst.obs.clone(), &inst.outliers(), params).unwrap();
        assert_eq!(rebuilt.outlier_mask, inst.outlier_mask);
    }

    #[test]
    fn bad_arguments() {
        let t = generate_truth(10, 2, 2.0, 0).unwrap();
        assert!(sample_instance(t.clone(), 0.0, 0.1, 0.0, 0).is_err());
        assert!(sample_instance(t.clone(), 0.5, 1.0, 0.0, 0).is_err());
        assert!(sample_instance(t, 0.5, 0.1, -1.0, 0).is_err());
        assert!(generate_truth(10, 11, 2.0, 0).is_err());
        assert!(generate_truth(10, 2, 0.5, 0).is_err());
    }
}
