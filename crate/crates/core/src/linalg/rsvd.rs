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

//! Randomized truncated SVD (range finder plus subspace iteration) over
//! operators that are only available through block products.

use ndarray::{s, Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::jacobi::svd_small;
use super::lowrank::{normalize_signs, LowRankFactors};
use super::qr::qr_thin;
use crate::error::{Error, Result};

/// Relative floor on `sigma_r / sigma_1` below which a truncation is
/// reported as a rank collapse.
pub const RANK_COLLAPSE_RATIO: f64 = 1e-14;

/// A square linear map known only through its action on blocks of vectors.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// `A * x` for an `n x k` block `x`.
    fn apply(&self, x: ArrayView2<f64>) -> Array2<f64>;
    /// `A^T * x` for an `n x k` block `x`.
    fn apply_adjoint(&self, x: ArrayView2<f64>) -> Array2<f64>;
}

/// Adapts a pair of closures into a [`LinearOperator`].
pub struct FnOperator<F, G> {
    pub n: usize,
    pub apply: F,
    pub apply_adjoint: G,
}

impl<F, G> LinearOperator for FnOperator<F, G>
where
    F: Fn(ArrayView2<f64>) -> Array2<f64>,
    G: Fn(ArrayView2<f64>) -> Array2<f64>,
{
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        (self.apply)(x)
    }

    fn apply_adjoint(&self, x: ArrayView2<f64>) -> Array2<f64> {
        (self.apply_adjoint)(x)
    }
}

impl LinearOperator for Array2<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.dot(&x)
    }

    fn apply_adjoint(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.t().dot(&x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsvdParams {
    pub oversample: usize,
    pub power_iters: usize,
    pub seed: u64,
}

impl Default for RsvdParams {
    fn default() -> Self {
        RsvdParams { oversample: 10, power_iters: 4, seed: 0 }
    }
}

/// Best rank-`rank` approximation of `op` by randomized subspace iteration.
///
/// The sketch width is `rank + oversample`, clamped to `n`.
pub fn truncated_svd_operator<Op>(op: &Op, rank: usize, params: RsvdParams) -> Result<LowRankFactors>
where
    Op: LinearOperator + ?Sized,
{
    let n = op.dim();
    if rank == 0 || rank > n {
        return Err(Error::invalid(format!("target rank {rank} for dimension {n}")));
    }
    let width = (rank + params.oversample).min(n);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let omega = Array2::from_shape_simple_fn((n, width), || StandardNormal.sample(&mut rng));

    let mut q = qr_thin(op.apply(omega.view()).view())?.q;
    for _ in 0..params.power_iters {
        let z = qr_thin(op.apply_adjoint(q.view()).view())?.q;
        q = qr_thin(op.apply(z.view()).view())?.q;
    }

    // B = Q^T A, handled through B^T = A^T Q = Q2 R2 so only a square core
    // needs an SVD: B = R2^T Q2^T.
    let bt = qr_thin(op.apply_adjoint(q.view()).view())?;
    let core = svd_small(bt.r.t());

    let sigma = core.s.slice(s![..rank]).to_owned();
    check_rank(sigma[0], sigma[rank - 1])?;
    let mut u = q.dot(&core.u.slice(s![.., ..rank]));
    let mut v = bt.q.dot(&core.v.slice(s![.., ..rank]));
    normalize_signs(&mut u, &mut v);
    LowRankFactors::new(u, sigma, v)
}

pub(crate) fn check_rank(sigma_1: f64, sigma_r: f64) -> Result<()> {
    if !(sigma_1 > 0.0) || !(sigma_r > RANK_COLLAPSE_RATIO * sigma_1) {
        return Err(Error::RankCollapse { sigma_r, sigma_1 });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_flat_spectrum() {
        let n = 12;
        let a = Array2::<f64>::eye(n);
        let l = truncated_svd_operator(&a, 2, RsvdParams::default()).unwrap();
        assert!((l.sigma()[0] - 1.0).abs() < 1e-12 && (l.sigma()[1] - 1.0).abs() < 1e-12);
        let err = (&a - &l.to_dense()).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((err - ((n - 2) as f64).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn zero_operator_collapses() {
        let a = Array2::<f64>::zeros((6, 6));
        let err = truncated_svd_operator(&a, 2, RsvdParams::default()).unwrap_err();
        assert!(matches!(err, Error::RankCollapse { .. }));
    }

    #[test]
    fn rank_above_dimension_is_rejected() {
        let a = Array2::<f64>::eye(3);
        assert!(matches!(
            truncated_svd_operator(&a, 4, RsvdParams::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn closure_operator() {
        let a = ndarray::array![[2.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 5.0]];
        let at = a.t().to_owned();
        let op = FnOperator {
            n: 3,
            apply: |x: ArrayView2<f64>| a.dot(&x),
            apply_adjoint: |x: ArrayView2<f64>| at.dot(&x),
        };
        let l = truncated_svd_operator(&op, 2, RsvdParams::default()).unwrap();
        assert!((l.sigma()[0] - 5.0).abs() < 1e-13 && (l.sigma()[1] - 2.0).abs() < 1e-13);
    }
}
