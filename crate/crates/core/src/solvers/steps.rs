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

//! One iteration of each solver, plus the shared spectral initialization.

use ndarray::{Array2, ArrayView2};

use super::{SolverConfig, Variant};
use crate::error::{Error, Result};
use crate::linalg::{
    truncate_structured, truncated_svd_operator, LinearOperator, LowRankFactors, RsvdParams,
    StructuredTangentForm,
};
use crate::observations::{fused_residual_pair, residual, sparse_times_dense, ObservationSet, SparseValues};
use crate::seeds::mix_seed;
use crate::thresholding::{ThresholdKind, ThresholdRule};

/// `p^{-1} G` for the sparse matrix `G` supported on the observations.
struct ScaledSparse<'a> {
    obs: &'a ObservationSet,
    vals: SparseValues,
}

impl LinearOperator for ScaledSparse<'_> {
    fn dim(&self) -> usize {
        self.obs.n()
    }

    fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        sparse_times_dense(self.obs, &self.vals, x, false).expect("aligned by construction")
    }

    fn apply_adjoint(&self, x: ArrayView2<f64>) -> Array2<f64> {
        sparse_times_dense(self.obs, &self.vals, x, true).expect("aligned by construction")
    }
}

/// `U S V^T + G` with `G` sparse.
struct LowRankPlusSparse<'a> {
    us: Array2<f64>,
    v: ArrayView2<'a, f64>,
    sparse: ScaledSparse<'a>,
}

impl LinearOperator for LowRankPlusSparse<'_> {
    fn dim(&self) -> usize {
        self.sparse.dim()
    }

    fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut y = self.sparse.apply(x);
        y += &self.us.dot(&self.v.t().dot(&x));
        y
    }

    fn apply_adjoint(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut y = self.sparse.apply_adjoint(x);
        y += &self.v.dot(&self.us.t().dot(&x));
        y
    }
}

fn rsvd_params(cfg: &SolverConfig, t: u32) -> RsvdParams {
    RsvdParams {
        oversample: cfg.oversample,
        power_iters: cfg.power_iters,
        seed: mix_seed(&[cfg.seed, t as u64]),
    }
}

fn check_rank(l: &LowRankFactors, obs: &ObservationSet, cfg: &SolverConfig) -> Result<()> {
    if l.n() != obs.n() {
        return Err(Error::dims(format!("iterate is {}-dimensional, observations {}", l.n(), obs.n())));
    }
    if l.rank() != cfg.rank {
        return Err(Error::dims(format!("iterate has rank {}, expected {}", l.rank(), cfg.rank)));
    }
    Ok(())
}

/// `S^0 = T_{xi_0}(P_Omega(M))` and `L^1 = P_r(p^{-1} P_Omega(M - S^0))`.
pub fn initialize(obs: &ObservationSet, cfg: &SolverConfig) -> Result<(SparseValues, LowRankFactors)> {
    if obs.is_empty() {
        return Err(Error::EmptyObservations);
    }
    cfg.validate(obs.n())?;
    let rule = cfg.effective_rule();
    let s0 = rule.apply_sparse(&obs.observed_values(), rule.schedule(0))?;
    let inv_p = 1.0 / obs.p();
    let vals = obs.values().iter().zip(&s0.0).map(|(m, s)| (m - s) * inv_p).collect();
    let op = ScaledSparse { obs, vals: SparseValues(vals) };
    let l1 = truncated_svd_operator(&op, cfg.rank, rsvd_params(cfg, 0))?;
    Ok((s0, l1))
}

/// Sparse update at threshold `xi_t` and the rescaled sparse residual
/// `p^{-1} P_Omega(M - L - S)` it leaves behind.
fn sparse_update(
    l: &LowRankFactors,
    obs: &ObservationSet,
    rule: &ThresholdRule,
    t: u32,
) -> Result<(SparseValues, SparseValues)> {
    let res = residual(obs, l, None)?;
    let s = rule.apply_sparse(&res, rule.schedule(t))?;
    let inv_p = 1.0 / obs.p();
    let g = res.0.iter().zip(&s.0).map(|(r, s)| (r - s) * inv_p).collect();
    Ok((s, SparseValues(g)))
}

/// Tangent-space accelerated step: `L^{t+1} = P_r P_T (L^t + p^{-1} P_Omega(M - L^t - S^t))`.
///
/// With `W = L + G`, the projection `P_T(W) = U y1^T + y2 V^T` where
/// `y2 = W V = U S + G V`, `A = W^T U = V S + G^T U`, `C = U^T W V` and
/// `y1 = A - V C^T`; only `G V` and `G^T U` touch the support.
pub fn armc_step(
    l: &LowRankFactors,
    obs: &ObservationSet,
    cfg: &SolverConfig,
    t: u32,
) -> Result<(SparseValues, LowRankFactors)> {
    check_rank(l, obs, cfg)?;
    let lam = cfg.rule.checked_level(cfg.rule.schedule(t))?;
    let (kind, inv_p) = (cfg.rule.kind, 1.0 / obs.p());
    let (s, gv, gtu) = fused_residual_pair(obs, l, |r| {
        let s = kind.eval(r, lam);
        (s, (r - s) * inv_p)
    })?;
    let (u, v, sigma) = (l.u(), l.v(), l.sigma());

    let y2 = l.u_sigma() + &gv;
    let a = &v * &sigma + &gtu;
    let mut c = u.t().dot(&gv);
    for k in 0..l.rank() {
        c[(k, k)] += sigma[k];
    }
    let y1 = a - v.dot(&c.t());

    let form = StructuredTangentForm::new(u.to_owned(), v.to_owned(), y1, y2)?;
    let next = truncate_structured(&form, cfg.rank)?;
    Ok((s, next))
}

/// Full truncated SVD of `L^t + p^{-1} P_Omega(M - L^t - S^t)`, no projection.
fn projection_free_step(
    l: &LowRankFactors,
    obs: &ObservationSet,
    cfg: &SolverConfig,
    rule: &ThresholdRule,
    t: u32,
) -> Result<(SparseValues, LowRankFactors)> {
    check_rank(l, obs, cfg)?;
    let (s, g) = sparse_update(l, obs, rule, t)?;
    let op = LowRankPlusSparse { us: l.u_sigma(), v: l.v(), sparse: ScaledSparse { obs, vals: g } };
    let next = truncated_svd_operator(&op, cfg.rank, rsvd_params(cfg, t))?;
    Ok((s, next))
}

/// Projection-free step with a continuous (soft or SCAD) threshold.
pub fn rmc_step(
    l: &LowRankFactors,
    obs: &ObservationSet,
    cfg: &SolverConfig,
    t: u32,
) -> Result<(SparseValues, LowRankFactors)> {
    if !cfg.rule.kind.is_continuous() {
        return Err(Error::invalid("the projection-free continuous solver needs soft or SCAD thresholding"));
    }
    projection_free_step(l, obs, cfg, &cfg.rule, t)
}

/// Singular value projection with a hard-thresholded sparse part.
pub fn rrmc_step(
    l: &LowRankFactors,
    obs: &ObservationSet,
    cfg: &SolverConfig,
    t: u32,
) -> Result<(SparseValues, LowRankFactors)> {
    projection_free_step(l, obs, cfg, &cfg.rule.with_kind(ThresholdKind::Hard), t)
}

pub fn step(
    l: &LowRankFactors,
    obs: &ObservationSet,
    cfg: &SolverConfig,
    t: u32,
) -> Result<(SparseValues, LowRankFactors)> {
    match cfg.variant {
        Variant::Armc => armc_step(l, obs, cfg, t),
        Variant::Rmc => rmc_step(l, obs, cfg, t),
        Variant::Rrmc => rrmc_step(l, obs, cfg, t),
    }
}
