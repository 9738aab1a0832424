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

//! One-sided (Hestenes) Jacobi SVD for the small square cores that show up
//! after projecting onto a tangent space or a randomized range.

use ndarray::{Array1, Array2, ArrayView2};

use super::qr::dot;

const MAX_SWEEPS: usize = 80;

/// `k = u * diag(s) * v^T` with `s` non-increasing.
#[derive(Debug, Clone)]
pub struct SmallSvd {
    pub u: Array2<f64>,
    pub s: Array1<f64>,
    pub v: Array2<f64>,
    pub sweeps: usize,
    /// False when the sweep cap was hit before every column pair was
    /// orthogonal to working precision.
    pub converged: bool,
}

/// SVD of a square matrix. Singular vectors for (numerically) zero singular
/// values are completed to an orthonormal basis.
pub fn svd_small(k: ArrayView2<f64>) -> SmallSvd {
    let (m, mc) = k.dim();
    assert_eq!(m, mc, "svd_small expects a square matrix");

    // columns of the working matrix and of the accumulated rotation
    let mut w: Vec<Vec<f64>> = k.columns().into_iter().map(|c| c.to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            e
        })
        .collect();

    let tol = f64::EPSILON * m.max(1) as f64;
    let mut sweeps = 0;
    let mut converged = m < 2;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..m {
            for q in (p + 1)..m {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        converged = !rotated;
    }

    let norms: Vec<f64> = w.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));

    let smax = order.first().map_or(0.0, |&i| norms[i]);
    let negligible = smax * tol;

    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut s = Array1::<f64>::zeros(m);
    let mut vmat = Array2::<f64>::zeros((m, m));
    let mut pending = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        s[dst] = norms[src];
        for i in 0..m {
            vmat[(i, dst)] = v[src][i];
        }
        if norms[src] > negligible && norms[src] > 0.0 {
            u_cols.push(w[src].iter().map(|x| x / norms[src]).collect());
        } else {
            u_cols.push(Vec::new());
            pending.push(dst);
        }
    }
    for dst in pending {
        let filled: Vec<Vec<f64>> = u_cols.iter().filter(|c| !c.is_empty()).cloned().collect();
        u_cols[dst] = complete(m, &filled);
    }

    let mut u = Array2::<f64>::zeros((m, m));
    for (j, col) in u_cols.iter().enumerate() {
        for i in 0..m {
            u[(i, j)] = col[i];
        }
    }
    SmallSvd { u, s, v: vmat, sweeps, converged }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (a, b) = (&mut lo[p], &mut hi[0]);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

fn complete(m: usize, basis: &[Vec<f64>]) -> Vec<f64> {
    let mut best = (0.0, vec![0.0; m]);
    for idx in 0..m {
        let mut e = vec![0.0; m];
        e[idx] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let c = dot(b, &e);
                e.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nrm = dot(&e, &e).sqrt();
        if nrm > best.0 {
            best = (nrm, e);
        }
        if nrm > 0.7 {
            break;
        }
    }
    let (nrm, mut e) = best;
    if nrm > 0.0 {
        e.iter_mut().for_each(|x| *x /= nrm);
    }
    e
}
