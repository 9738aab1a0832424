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

//! The observation operator: sorted COO storage of the revealed entries and
//! the kernels that stream over them.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::LowRankFactors;

/// Revealed entries `(i, j, M_ij)` of an `n x n` matrix, sorted by
/// `(row, col)` without duplicates, together with the sampling rate `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    n: usize,
    p: f64,
    rows: Vec<u32>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl ObservationSet {
    /// Builds an observation set from triplets in any order.
    pub fn from_triplets<I>(n: usize, p: f64, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        check_rate(p)?;
        if n > u32::MAX as usize {
            return Err(Error::invalid(format!("dimension {n} exceeds index range")));
        }
        let mut items: Vec<(u32, u32, f64)> = Vec::new();
        for (i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::invalid(format!("index ({i}, {j}) out of range for n = {n}")));
            }
            if !v.is_finite() {
                return Err(Error::invalid(format!("non-finite value at ({i}, {j})")));
            }
            items.push((i as u32, j as u32, v));
        }
        items.sort_by_key(|&(i, j, _)| (i, j));
        if let Some(w) = items.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::invalid(format!("duplicate entry ({}, {})", w[0].0, w[0].1)));
        }
        let mut obs = ObservationSet {
            n,
            p,
            rows: Vec::with_capacity(items.len()),
            cols: Vec::with_capacity(items.len()),
            vals: Vec::with_capacity(items.len()),
        };
        for (i, j, v) in items {
            obs.rows.push(i);
            obs.cols.push(j);
            obs.vals.push(v);
        }
        Ok(obs)
    }

    /// All entries where `mask` is set, in row-major order.
    pub fn from_dense(m: ArrayView2<f64>, p: f64, mask: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let (nr, nc) = m.dim();
        if nr != nc {
            return Err(Error::dims(format!("observation matrix must be square, got {nr}x{nc}")));
        }
        check_rate(p)?;
        let mut obs = ObservationSet { n: nr, p, rows: Vec::new(), cols: Vec::new(), vals: Vec::new() };
        for ((i, j), &v) in m.indexed_iter() {
            if mask(i, j) {
                if !v.is_finite() {
                    return Err(Error::invalid(format!("non-finite value at ({i}, {j})")));
                }
                obs.rows.push(i as u32);
                obs.cols.push(j as u32);
                obs.vals.push(v);
            }
        }
        Ok(obs)
    }

    /// Caller guarantees sorted, in-range, duplicate-free triplets.
    pub(crate) fn from_sorted_parts(n: usize, p: f64, rows: Vec<u32>, cols: Vec<u32>, vals: Vec<f64>) -> Self {
        debug_assert!(rows.len() == cols.len() && cols.len() == vals.len());
        debug_assert!(rows
            .iter()
            .zip(&cols)
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[0] < w[1]));
        ObservationSet { n, p, rows, cols, vals }
    }

    /// Same support with the sampling rate replaced.
    pub fn with_rate(mut self, p: f64) -> Result<Self> {
        check_rate(p)?;
        self.p = p;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn cols(&self) -> &[u32] {
        &self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    /// `|Omega| / n^2`.
    pub fn empirical_rate(&self) -> f64 {
        self.len() as f64 / (self.n as f64 * self.n as f64)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .zip(&self.cols)
            .zip(&self.vals)
            .map(|((&i, &j), &v)| (i as usize, j as usize, v))
    }

    /// Position of `(i, j)` in the triplet order, if observed.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.rows.partition_point(|&r| (r as usize) < i);
        let hi = self.rows.partition_point(|&r| (r as usize) <= i);
        self.cols[lo..hi].binary_search(&(j as u32)).ok().map(|k| lo + k)
    }

    pub fn observed_values(&self) -> SparseValues {
        SparseValues(self.vals.clone())
    }

    /// Densified matrix with zeros off the support.
    pub fn to_dense(&self, vals: &SparseValues) -> Result<Array2<f64>> {
        self.check_aligned(vals)?;
        let mut d = Array2::zeros((self.n, self.n));
        for (t, (i, j, _)) in self.iter().enumerate() {
            d[(i, j)] = vals.0[t];
        }
        Ok(d)
    }

    fn check_aligned(&self, vals: &SparseValues) -> Result<()> {
        if vals.len() != self.len() {
            return Err(Error::dims(format!(
                "{} sparse values for {} observations",
                vals.len(),
                self.len()
            )));
        }
        Ok(())
    }
}

fn check_rate(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("sampling rate {p} outside (0, 1]")));
    }
    Ok(())
}

/// Values aligned index-for-index with an [`ObservationSet`]'s triplets.
/// Zeros are stored explicitly.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseValues(pub Vec<f64>);

impl SparseValues {
    pub fn zeros(len: usize) -> Self {
        SparseValues(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Number of entries that are not exactly zero.
    pub fn nnz(&self) -> usize {
        self.0.iter().filter(|&&x| x != 0.0).count()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// `L_ij` for every observed `(i, j)`, in `O(|Omega| r)`.
pub fn eval_on_support(l: &LowRankFactors, obs: &ObservationSet) -> Result<SparseValues> {
    check_dims(l, obs)?;
    let us = l.u_sigma();
    let (us, v) = (slice_of(&us), l.v());
    let v = v.as_slice().expect("standard layout");
    let r = l.rank();
    let out = obs
        .rows
        .iter()
        .zip(&obs.cols)
        .map(|(&i, &j)| row_dot(&us[i as usize * r..][..r], &v[j as usize * r..][..r]))
        .collect();
    Ok(SparseValues(out))
}

/// `P_Omega(M - L - S)`, with `S = 0` when absent.
pub fn residual(obs: &ObservationSet, l: &LowRankFactors, s: Option<&SparseValues>) -> Result<SparseValues> {
    let mut out = eval_on_support(l, obs)?;
    for (x, m) in out.0.iter_mut().zip(&obs.vals) {
        *x = m - *x;
    }
    if let Some(s) = s {
        obs.check_aligned(s)?;
        for (x, sv) in out.0.iter_mut().zip(&s.0) {
            *x -= sv;
        }
    }
    Ok(out)
}

/// `G x` (or `G^T x` when `transpose`) for the sparse matrix `G` with
/// values `vals` on the support of `obs`; `x` is `n x k`.
pub fn sparse_times_dense(
    obs: &ObservationSet,
    vals: &SparseValues,
    x: ArrayView2<f64>,
    transpose: bool,
) -> Result<Array2<f64>> {
    obs.check_aligned(vals)?;
    if x.nrows() != obs.n {
        return Err(Error::dims(format!("block has {} rows, expected {}", x.nrows(), obs.n)));
    }
    let x = x.as_standard_layout();
    let k = x.ncols();
    let xs = x.as_slice().expect("standard layout");
    let mut out = Array2::<f64>::zeros((obs.n, k));
    let os = out.as_slice_mut().expect("fresh array");
    for ((&i, &j), &c) in obs.rows.iter().zip(&obs.cols).zip(&vals.0) {
        let (dst, src) = if transpose { (j, i) } else { (i, j) };
        let src = &xs[src as usize * k..][..k];
        let dst = &mut os[dst as usize * k..][..k];
        for (d, s) in dst.iter_mut().zip(src) {
            *d += c * s;
        }
    }
    Ok(out)
}

/// One pass over the support: `r_ij = M_ij - L_ij`, `(s_ij, g_ij) = split(r_ij)`,
/// then `(G V, G^T U)` accumulated from the `g` values.
pub(crate) fn fused_residual_pair(
    obs: &ObservationSet,
    l: &LowRankFactors,
    split: impl Fn(f64) -> (f64, f64),
) -> Result<(SparseValues, Array2<f64>, Array2<f64>)> {
    check_dims(l, obs)?;
    let r = l.rank();
    let us = l.u_sigma();
    let us = slice_of(&us);
    let (u, v) = (l.u(), l.v());
    let (u, v) = (u.as_slice().expect("standard layout"), v.as_slice().expect("standard layout"));
    let mut s = Vec::with_capacity(obs.len());
    let mut gv = Array2::<f64>::zeros((obs.n, r));
    let mut gtu = Array2::<f64>::zeros((obs.n, r));
    {
        let gvs = gv.as_slice_mut().expect("fresh array");
        let gts = gtu.as_slice_mut().expect("fresh array");
        for ((&i, &j), &m) in obs.rows.iter().zip(&obs.cols).zip(&obs.vals) {
            let (i, j) = (i as usize * r, j as usize * r);
            let vj = &v[j..][..r];
            let (sv, g) = split(m - row_dot(&us[i..][..r], vj));
            s.push(sv);
            if g == 0.0 {
                continue;
            }
            for (d, x) in gvs[i..][..r].iter_mut().zip(vj) {
                *d += g * x;
            }
            for (d, x) in gts[j..][..r].iter_mut().zip(&u[i..][..r]) {
                *d += g * x;
            }
        }
    }
    Ok((SparseValues(s), gv, gtu))
}

fn check_dims(l: &LowRankFactors, obs: &ObservationSet) -> Result<()> {
    if l.n() != obs.n {
        return Err(Error::dims(format!("factors are {}-dimensional, observations {}", l.n(), obs.n)));
    }
    Ok(())
}

fn slice_of(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("standard layout")
}

#[inline]
fn row_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};

    fn e1_rank_one(n: usize, s: f64) -> LowRankFactors {
        let mut u = Array2::zeros((n, 1));
        u[(0, 0)] = 1.0;
        LowRankFactors::new(u.clone(), Array1::from(vec![s]), u).unwrap()
    }

    #[test]
    fn construction_sorts_and_rejects_duplicates() {
        let obs = ObservationSet::from_triplets(3, 0.5, vec![(2, 0, 1.0), (0, 2, 2.0), (0, 1, 3.0)]).unwrap();
        assert_eq!(obs.rows(), &[0, 0, 2]);
        assert_eq!(obs.cols(), &[1, 2, 0]);
        assert_eq!(obs.values(), &[3.0, 2.0, 1.0]);
        assert_eq!(obs.position(0, 2), Some(1));
        assert_eq!(obs.position(1, 1), None);

        let dup = ObservationSet::from_triplets(3, 0.5, vec![(1, 1, 1.0), (1, 1, 2.0)]);
        assert!(matches!(dup, Err(Error::InvalidArgument(_))));
        assert!(ObservationSet::from_triplets(3, 0.5, vec![(3, 0, 1.0)]).is_err());
        assert!(ObservationSet::from_triplets(3, 0.0, Vec::new()).is_err());
        assert!(ObservationSet::from_triplets(3, 1.5, Vec::new()).is_err());
    }

    #[test]
    fn eval_single_outer_product() {
        let l = e1_rank_one(3, 2.0);
        let obs = ObservationSet::from_triplets(3, 1.0, vec![(0, 0, 0.0), (1, 1, 0.0)]).unwrap();
        assert_eq!(eval_on_support(&l, &obs).unwrap().0, vec![2.0, 0.0]);
    }

    #[test]
    fn eval_on_empty_support() {
        let l = e1_rank_one(3, 2.0);
        let obs = ObservationSet::from_triplets(3, 1.0, Vec::new()).unwrap();
        assert!(eval_on_support(&l, &obs).unwrap().is_empty());
    }

    #[test]
    fn residual_identities() {
        let l = e1_rank_one(2, 2.0);
        let obs = ObservationSet::from_triplets(2, 1.0, vec![(0, 0, 5.0)]).unwrap();
        let s = SparseValues(vec![3.0]);
        assert_eq!(residual(&obs, &l, Some(&s)).unwrap().0, vec![0.0]);

        let exact = ObservationSet::from_triplets(2, 1.0, vec![(0, 0, 2.0), (1, 0, 0.0)]).unwrap();
        assert_eq!(residual(&exact, &l, None).unwrap().0, vec![0.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let l = e1_rank_one(3, 1.0);
        let obs = ObservationSet::from_triplets(4, 1.0, vec![(0, 0, 1.0)]).unwrap();
        assert!(matches!(eval_on_support(&l, &obs), Err(Error::DimensionMismatch(_))));
        assert!(sparse_times_dense(&obs, &SparseValues(vec![]), Array2::zeros((4, 1)).view(), false).is_err());
        assert!(sparse_times_dense(&obs, &SparseValues(vec![1.0]), Array2::zeros((3, 1)).view(), false).is_err());
    }

    #[test]
    fn single_nonzero_action() {
        let obs = ObservationSet::from_triplets(3, 1.0, vec![(2, 1, 0.0)]).unwrap();
        let vals = SparseValues(vec![4.0]);
        let x = array![[0.0], [1.0], [0.0]];
        assert_eq!(sparse_times_dense(&obs, &vals, x.view(), false).unwrap(), array![[0.0], [0.0], [4.0]]);
        let zero = sparse_times_dense(&obs, &SparseValues(vec![0.0]), x.view(), false).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fused_pass_matches_separate_kernels() {
        let u = array![[0.6, 0.0], [0.8, 0.0], [0.0, 1.0]];
        let v = array![[0.0, 1.0], [1.0, 0.0], [0.0, 0.0]];
        let l = LowRankFactors::new(u, Array1::from(vec![2.0, 0.5]), v).unwrap();
        let trip = vec![(0, 1, 1.5), (2, 0, -2.0), (1, 1, 0.5), (1, 2, 3.0)];
        let obs = ObservationSet::from_triplets(3, 0.5, trip).unwrap();
        let (s, gv, gtu) = fused_residual_pair(&obs, &l, |r| (r.max(0.0), 2.0 * r.min(0.0))).unwrap();

        let res = residual(&obs, &l, None).unwrap();
        assert_eq!(s.0, res.0.iter().map(|r| r.max(0.0)).collect::<Vec<_>>());
        let g = SparseValues(res.0.iter().map(|r| 2.0 * r.min(0.0)).collect());
        let want_gv = sparse_times_dense(&obs, &g, l.v(), false).unwrap();
        let want_gtu = sparse_times_dense(&obs, &g, l.u(), true).unwrap();
        assert!((&gv - &want_gv).iter().all(|d| d.abs() < 1e-15));
        assert!((&gtu - &want_gtu).iter().all(|d| d.abs() < 1e-15));
    }

}
