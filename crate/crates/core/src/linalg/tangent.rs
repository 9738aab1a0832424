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

//! Elements of the tangent space at a rank-r point and their best rank-r
//! truncation in `O(n r^2)`.

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};

use super::jacobi::svd_small;
use super::lowrank::{normalize_signs, LowRankFactors};
use super::qr::qr_thin_excluding;
use super::rsvd::check_rank;
use crate::error::{Error, Result};

/// The matrix `U * y1^T + y2 * V^T`, rank at most `2r`.
#[derive(Debug, Clone)]
pub struct StructuredTangentForm {
    pub u: Array2<f64>,
    pub v: Array2<f64>,
    pub y1: Array2<f64>,
    pub y2: Array2<f64>,
}

impl StructuredTangentForm {
    pub fn new(u: Array2<f64>, v: Array2<f64>, y1: Array2<f64>, y2: Array2<f64>) -> Result<Self> {
        let shape = u.dim();
        if v.dim() != shape || y1.dim() != shape || y2.dim() != shape {
            return Err(Error::dims(format!(
                "tangent form shapes u={:?} v={:?} y1={:?} y2={:?}",
                u.dim(),
                v.dim(),
                y1.dim(),
                y2.dim()
            )));
        }
        Ok(StructuredTangentForm { u, v, y1, y2 })
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        self.u.dot(&self.y1.t()) + self.y2.dot(&self.v.t())
    }
}

/// Splits `y = basis * coef + q * r` with `q` orthonormal and orthogonal to
/// `basis`.
fn split_against(basis: ArrayView2<f64>, y: ArrayView2<f64>) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let mut coef = basis.t().dot(&y);
    let mut rest = &y - &basis.dot(&coef);
    let again = basis.t().dot(&rest);
    rest -= &basis.dot(&again);
    coef += &again;
    let qr = qr_thin_excluding(rest.view(), Some(basis));
    (coef, qr.q, qr.r)
}

/// Best rank-`rank` approximation of a tangent-space element.
///
/// With `y2 = U (U^T y2) + Qu Ru` and `y1 = V (V^T y1) + Qv Rv`,
///
/// ```text
/// U y1^T + y2 V^T = [U Qu] [ (V^T y1)^T + U^T y2   Rv^T ] [V Qv]^T
///                          [ Ru                    0    ]
/// ```
///
/// so only the `2r x 2r` core needs an SVD.
pub fn truncate_structured(form: &StructuredTangentForm, rank: usize) -> Result<LowRankFactors> {
    let r0 = form.u.ncols();
    if rank == 0 || rank > 2 * r0 {
        return Err(Error::invalid(format!("target rank {rank} for a rank-{r0} tangent form")));
    }
    let (cu, qu, ru) = split_against(form.u.view(), form.y2.view());
    let (cv, qv, rv) = split_against(form.v.view(), form.y1.view());

    let mut core = Array2::<f64>::zeros((2 * r0, 2 * r0));
    core.slice_mut(s![..r0, ..r0]).assign(&(&cv.t() + &cu));
    core.slice_mut(s![..r0, r0..]).assign(&rv.t());
    core.slice_mut(s![r0.., ..r0]).assign(&ru);

    let svd = svd_small(core.view());
    let sigma = svd.s.slice(s![..rank]).to_owned();
    check_rank(sigma[0], sigma[rank - 1])?;

    let left = concatenate(Axis(1), &[form.u.view(), qu.view()]).expect("same rows");
    let right = concatenate(Axis(1), &[form.v.view(), qv.view()]).expect("same rows");
    let mut u = left.dot(&svd.u.slice(s![.., ..rank]));
    let mut v = right.dot(&svd.v.slice(s![.., ..rank]));
    normalize_signs(&mut u, &mut v);
    LowRankFactors::new(u, sigma, v)
}
