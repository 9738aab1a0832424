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

//! Thin QR factorization by classical Gram-Schmidt with one full
//! reorthogonalization pass (CGS2), which keeps `Q^T Q = I` to working
//! precision even for ill-conditioned inputs.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Relative size below which a column remainder is treated as zero.
const DEFICIENT_TOL: f64 = 64.0 * f64::EPSILON;

/// `a = q * r` with `q` having orthonormal columns and `r` upper triangular
/// with a non-negative diagonal.
#[derive(Debug, Clone)]
pub struct ThinQr {
    pub q: Array2<f64>,
    pub r: Array2<f64>,
    /// Columns of `a` that were (numerically) in the span of the preceding
    /// ones. For these `r[(j, j)] == 0` and `q` holds a completion direction.
    pub deficient: Vec<usize>,
}

impl ThinQr {
    pub fn is_full_rank(&self) -> bool {
        self.deficient.is_empty()
    }
}

/// Thin QR of an `n x k` matrix with `k <= n`.
pub fn qr_thin(a: ArrayView2<f64>) -> Result<ThinQr> {
    let (n, k) = a.dim();
    if k > n {
        return Err(Error::dims(format!("qr_thin needs k <= n, got {n}x{k}")));
    }
    Ok(qr_thin_excluding(a, None))
}

/// Thin QR whose `q` columns are additionally orthogonal to the columns of
/// `exclude` (assumed orthonormal). The components of `a` along `exclude`
/// are discarded, so callers pass an `a` already projected away from it.
pub(crate) fn qr_thin_excluding(a: ArrayView2<f64>, exclude: Option<ArrayView2<f64>>) -> ThinQr {
    let (n, k) = a.dim();
    let basis: Vec<Vec<f64>> = match exclude {
        Some(e) => e.columns().into_iter().map(|c| c.to_vec()).collect(),
        None => Vec::new(),
    };

    let mut qcols: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut r = Array2::<f64>::zeros((k, k));
    let mut deficient = Vec::new();

    for j in 0..k {
        let mut v = a.column(j).to_vec();
        let orig = norm(&v);
        for _ in 0..2 {
            for e in &basis {
                let c = dot(e, &v);
                axpy(-c, e, &mut v);
            }
            for (i, q) in qcols.iter().enumerate() {
                let c = dot(q, &v);
                r[(i, j)] += c;
                axpy(-c, q, &mut v);
            }
        }
        let nrm = norm(&v);
        if !(nrm > DEFICIENT_TOL * orig) || !nrm.is_finite() {
            deficient.push(j);
            qcols.push(completion(n, &basis, &qcols));
        } else {
            r[(j, j)] = nrm;
            v.iter_mut().for_each(|x| *x /= nrm);
            qcols.push(v);
        }
    }

    let mut q = Array2::<f64>::zeros((n, k));
    for (j, col) in qcols.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            q[(i, j)] = x;
        }
    }
    ThinQr { q, r, deficient }
}

/// A unit vector orthogonal to every vector in `basis` and `qs`, built from
/// the first standard basis vector with a large enough remainder. Returns
/// the zero vector when the span is already all of R^n.
fn completion(n: usize, basis: &[Vec<f64>], qs: &[Vec<f64>]) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for idx in 0..n {
        let mut v = vec![0.0; n];
        v[idx] = 1.0;
        for _ in 0..2 {
            for e in basis.iter().chain(qs.iter()) {
                let c = dot(e, &v);
                axpy(-c, e, &mut v);
            }
        }
        let nrm = norm(&v);
        let better = best.as_ref().is_none_or(|(b, _)| nrm > *b);
        if better {
            best = Some((nrm, v));
        }
        if nrm > 0.7 {
            break;
        }
    }
    match best {
        Some((nrm, mut v)) if nrm > 1e-8 => {
            v.iter_mut().for_each(|x| *x /= nrm);
            v
        }
        _ => vec![0.0; n],
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}
