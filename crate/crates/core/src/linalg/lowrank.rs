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

use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::qr::qr_thin;
use crate::error::{Error, Result};

const ROW_BLOCK: usize = 256;

/// Compact SVD `U * diag(sigma) * V^T` of a square rank-`r` matrix.
///
/// `sigma` is non-increasing and strictly positive. Orthonormality of `u`
/// and `v` is the producer's responsibility; [`LowRankFactors::orthonormality_defect`]
/// reports how far off it is.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactors {
    u: Array2<f64>,
    sigma: Array1<f64>,
    v: Array2<f64>,
}

impl LowRankFactors {
    pub fn new(u: Array2<f64>, sigma: Array1<f64>, v: Array2<f64>) -> Result<Self> {
        let (n, r) = u.dim();
        if v.dim() != (n, r) || sigma.len() != r {
            return Err(Error::dims(format!(
                "factor shapes u={:?} sigma={} v={:?}",
                u.dim(),
                sigma.len(),
                v.dim()
            )));
        }
        if r == 0 {
            return Err(Error::invalid("rank must be at least 1"));
        }
        if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::invalid("singular values must be finite and positive"));
        }
        if sigma.windows(2).into_iter().any(|w| w[1] > w[0]) {
            return Err(Error::invalid("singular values must be non-increasing"));
        }
        Ok(LowRankFactors {
            u: u.as_standard_layout().into_owned(),
            sigma,
            v: v.as_standard_layout().into_owned(),
        })
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn u(&self) -> ArrayView2<'_, f64> {
        self.u.view()
    }

    pub fn v(&self) -> ArrayView2<'_, f64> {
        self.v.view()
    }

    pub fn sigma(&self) -> ArrayView1<'_, f64> {
        self.sigma.view()
    }

    pub fn into_parts(self) -> (Array2<f64>, Array1<f64>, Array2<f64>) {
        (self.u, self.sigma, self.v)
    }

    /// `U * diag(sigma)`.
    pub fn u_sigma(&self) -> Array2<f64> {
        &self.u * &self.sigma
    }

    pub fn condition_number(&self) -> f64 {
        self.sigma[0] / self.sigma[self.rank() - 1]
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (ui, vj) = (self.u.row(i), self.v.row(j));
        let mut acc = 0.0;
        for k in 0..self.rank() {
            acc += ui[k] * self.sigma[k] * vj[k];
        }
        acc
    }

    pub fn to_dense(&self) -> Array2<f64> {
        self.u_sigma().dot(&self.v.t())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.sigma.dot(&self.sigma).sqrt()
    }

    /// Largest absolute entry, streamed over row blocks.
    pub fn max_abs_entry(&self) -> f64 {
        max_abs_product(self.u_sigma().view(), self.v.view())
    }

    /// Exact `max |self - other|` over all n^2 entries, without holding the
    /// full difference in memory.
    pub fn max_abs_difference(&self, other: &LowRankFactors) -> Result<f64> {
        let (a, b) = self.difference_factors(other)?;
        if self == other {
            return Ok(0.0);
        }
        Ok(max_abs_product(a.view(), b.view()))
    }

    /// `||self - other||_F` from the factors alone: the difference is
    /// `A B^T` with `A = [U1 S1, -U2 S2]` and `B = [V1, V2]`, and with thin
    /// QRs `A = Qa Ra`, `B = Qb Rb` its norm equals `||Ra Rb^T||_F`.
    pub fn frobenius_distance(&self, other: &LowRankFactors) -> Result<f64> {
        let (a, b) = self.difference_factors(other)?;
        if self == other {
            return Ok(0.0);
        }
        if a.ncols() > a.nrows() {
            let d = a.dot(&b.t());
            return Ok(d.iter().map(|x| x * x).sum::<f64>().sqrt());
        }
        let ra = qr_thin(a.view())?.r;
        let rb = qr_thin(b.view())?.r;
        let core = ra.dot(&rb.t());
        Ok(core.iter().map(|x| x * x).sum::<f64>().sqrt())
    }

    /// `max(|U^T U - I|, |V^T V - I|)` entrywise.
    pub fn orthonormality_defect(&self) -> f64 {
        let eye = Array2::<f64>::eye(self.rank());
        let du = (&self.u.t().dot(&self.u) - &eye).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let dv = (&self.v.t().dot(&self.v) - &eye).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        du.max(dv)
    }

    fn difference_factors(&self, other: &LowRankFactors) -> Result<(Array2<f64>, Array2<f64>)> {
        if self.n() != other.n() {
            return Err(Error::dims(format!("n = {} vs {}", self.n(), other.n())));
        }
        let a = concatenate(Axis(1), &[self.u_sigma().view(), (-other.u_sigma()).view()])
            .expect("equal row counts");
        let b = concatenate(Axis(1), &[self.v.view(), other.v.view()]).expect("equal row counts");
        Ok((a, b))
    }
}

fn max_abs_product(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    let n = a.nrows();
    let bt = b.t();
    let mut best = 0.0f64;
    let mut start = 0;
    while start < n {
        let end = (start + ROW_BLOCK).min(n);
        let block = a.slice(s![start..end, ..]).dot(&bt);
        best = block.iter().fold(best, |m, x| m.max(x.abs()));
        start = end;
    }
    best
}

/// Flip each singular pair so the largest-magnitude entry of the left vector
/// is positive. Ties resolve to the lowest row index.
pub(crate) fn normalize_signs(u: &mut Array2<f64>, v: &mut Array2<f64>) {
    for k in 0..u.ncols() {
        let col = u.column(k);
        let mut arg = 0;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > col[arg].abs() {
                arg = i;
            }
        }
        if !col.is_empty() && col[arg] < 0.0 {
            u.column_mut(k).mapv_inplace(|x| -x);
            v.column_mut(k).mapv_inplace(|x| -x);
        }
    }
}
