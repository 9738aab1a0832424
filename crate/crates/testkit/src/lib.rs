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


//! Dense reference computations for testing the solvers. Everything here is
//! written directly from the defining formulas, using `nalgebra` for QR and
//! SVD, and shares no numerical code with `armc` itself.

use armc::linalg::LowRankFactors;
use armc::observations::ObservationSet;
use armc::thresholding::ThresholdKind;
use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

pub fn to_na(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

pub fn from_na(a: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((a.nrows(), a.ncols()), |(i, j)| a[(i, j)])
}

pub fn fro(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn rel_fro(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    fro(&(a - b)) / fro(b)
}

/// Orthonormal `n x k` basis from a Gaussian draw.
pub fn random_orthonormal(rng: &mut impl Rng, n: usize, k: usize) -> Array2<f64> {
    let qr = to_na(&gaussian(rng, n, k)).qr();
    from_na(&qr.q())
}

/// Random factors with singular values uniform on `[lo, hi]`.
pub fn random_factors(rng: &mut impl Rng, n: usize, r: usize, lo: f64, hi: f64) -> LowRankFactors {
    let u = random_orthonormal(rng, n, r);
    let v = random_orthonormal(rng, n, r);
    let mut s: Vec<f64> = (0..r).map(|_| rng.random_range(lo..=hi)).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    LowRankFactors::new(u, Array1::from(s), v).unwrap()
}

/// Eigenpairs of `a^T a`, eigenvalues descending. The symmetric
/// eigensolver is used because `nalgebra`'s SVD returns inaccurate vectors
/// on some rank-deficient inputs.
fn gram_eigen(a: &Array2<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let m = to_na(a);
    let eig = (m.transpose() * &m).symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&x, &y| eig.eigenvalues[y].partial_cmp(&eig.eigenvalues[x]).unwrap());
    let vals = idx.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = DMatrix::from_fn(a.ncols(), idx.len(), |i, c| eig.eigenvectors[(i, idx[c])]);
    (vals, vecs)
}

/// Singular values in descending order.
pub fn singular_values(a: &Array2<f64>) -> Vec<f64> {
    gram_eigen(a).0.into_iter().map(|l| l.max(0.0).sqrt()).collect()
}

/// Best rank-`r` approximation `A V_r V_r^T`, with `V_r` the leading right
/// singular vectors.
pub fn dense_truncate(a: &Array2<f64>, r: usize) -> Array2<f64> {
    let (_, vecs) = gram_eigen(a);
    let vr = from_na(&vecs.columns(0, r).into_owned());
    a.dot(&vr).dot(&vr.t())
}

/// The thresholding operators, from their textbook definitions.
pub fn threshold(kind: ThresholdKind, x: f64, lam: f64) -> f64 {
    let ax = x.abs();
    match kind {
        ThresholdKind::Hard => {
            if ax > lam {
                x
            } else {
                0.0
            }
        }
        ThresholdKind::Soft => {
            if ax > lam {
                x - lam * x.signum()
            } else {
                0.0
            }
        }
        ThresholdKind::Scad { a } => {
            if ax <= lam {
                0.0
            } else if ax <= 2.0 * lam {
                x - lam * x.signum()
            } else if ax <= a * lam {
                ((a - 1.0) * x - a * lam * x.signum()) / (a - 2.0)
            } else {
                x
            }
        }
    }
}

/// A dense problem: data `m` on `mask`, sampling rate `p`.
pub struct DenseProblem {
    pub m: Array2<f64>,
    pub mask: Array2<bool>,
    pub p: f64,
}

impl DenseProblem {
    /// `truth + outliers` sampled at rate `p`, outliers of size up to `amp`
    /// with probability `alpha`.
    pub fn random(rng: &mut impl Rng, truth: &Array2<f64>, p: f64, alpha: f64, amp: f64) -> Self {
        let n = truth.nrows();
        let mut m = truth.clone();
        let mut mask = Array2::from_elem((n, n), false);
        for i in 0..n {
            for j in 0..n {
                if rng.random_bool(p) {
                    mask[(i, j)] = true;
                    if rng.random_bool(alpha) {
                        m[(i, j)] += rng.random_range(-amp..=amp);
                    }
                }
            }
        }
        DenseProblem { m, mask, p }
    }

    pub fn observations(&self) -> ObservationSet {
        ObservationSet::from_dense(self.m.view(), self.p, |i, j| self.mask[(i, j)]).unwrap()
    }

    /// `S = T_lam(P_Omega(M - L))` and `G = p^{-1} P_Omega(M - L - S)`.
    pub fn sparse_and_gradient(&self, l: &Array2<f64>, kind: ThresholdKind, lam: f64) -> (Array2<f64>, Array2<f64>) {
        let n = self.m.nrows();
        let mut s = Array2::zeros((n, n));
        let mut g = Array2::zeros((n, n));
        for ((i, j), &seen) in self.mask.indexed_iter() {
            if seen {
                let r = self.m[(i, j)] - l[(i, j)];
                s[(i, j)] = threshold(kind, r, lam);
                g[(i, j)] = (r - s[(i, j)]) / self.p;
            }
        }
        (s, g)
    }

    /// Dense tangent-space step from `l`: form `W = L + G`, project onto the
    /// tangent space at `(U, V)` as `UU^T W + W VV^T - UU^T W VV^T`, then
    /// truncate to rank `r` by full SVD.
    pub fn tangent_step(&self, l: &LowRankFactors, kind: ThresholdKind, lam: f64) -> (Array2<f64>, Array2<f64>) {
        let ld = l.to_dense();
        let (s, g) = self.sparse_and_gradient(&ld, kind, lam);
        let w = &ld + &g;
        let pu = l.u().dot(&l.u().t());
        let pv = l.v().dot(&l.v().t());
        let pt = pu.dot(&w) + w.dot(&pv) - pu.dot(&w).dot(&pv);
        (s, dense_truncate(&pt, l.rank()))
    }

    /// Dense projection-free step: truncate `L + G` directly.
    pub fn full_step(&self, l: &LowRankFactors, kind: ThresholdKind, lam: f64) -> (Array2<f64>, Array2<f64>) {
        let ld = l.to_dense();
        let (s, g) = self.sparse_and_gradient(&ld, kind, lam);
        (s, dense_truncate(&(&ld + &g), l.rank()))
    }
}

/// Scatters support-aligned values back into a dense matrix.
pub fn densify(obs: &ObservationSet, vals: &[f64]) -> Array2<f64> {
    let mut out = Array2::zeros((obs.n(), obs.n()));
    for ((i, j, _), &v) in obs.iter().zip(vals) {
        out[(i, j)] = v;
    }
    out
}

/// `f` with both bases moved by `eps`-sized Gaussian noise and
/// re-orthonormalized, and singular values scaled by up to `1 +- eps`.
pub fn perturbed(g: &mut impl Rng, f: &LowRankFactors, eps: f64) -> LowRankFactors {
    let (n, r) = (f.n(), f.rank());
    let mut basis = |b: ndarray::ArrayView2<f64>| {
        let moved = &b + &(gaussian(g, n, r) * (eps / (n as f64).sqrt()));
        from_na(&to_na(&moved).qr().q())
    };
    let (u, v) = (basis(f.u()), basis(f.v()));
    let mut s: Vec<f64> = f.sigma().iter().map(|&x| x * (1.0 + eps * g.random_range(-1.0..1.0))).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    LowRankFactors::new(u, Array1::from(s), v).unwrap()
}

/// One solver step's inputs: a sampled corrupted truth and an iterate near
/// it, with a threshold level that catches the larger outliers.
pub struct StepCase {
    pub truth: LowRankFactors,
    pub problem: DenseProblem,
    pub obs: ObservationSet,
    pub iterate: LowRankFactors,
    pub lam: f64,
}

impl StepCase {
    pub fn random(seed: u64, n: usize, r: usize, p: f64) -> Self {
        let mut g = rng(seed);
        let truth = random_factors(&mut g, n, r, 1.0, 2.0);
        let amp = truth.max_abs_entry();
        let problem = DenseProblem::random(&mut g, &truth.to_dense(), p, 0.1, amp);
        let obs = problem.observations();
        let iterate = perturbed(&mut g, &truth, 0.02);
        StepCase { truth, problem, obs, iterate, lam: 0.1 * amp }
    }
}
