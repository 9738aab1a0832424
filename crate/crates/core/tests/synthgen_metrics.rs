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


//! Generator contracts and evaluation metrics.

use armc::linalg::LowRankFactors;
use armc::metrics::{
    evaluate, incoherence, max_incoherence, relative_fro_error, relative_inf_error, sigma_for_snr, snr_db,
    snr_db_for, SupportStats,
};
use armc::observations::{eval_on_support, SparseValues};
use armc::prelude::*;
use armc::solvers::{ErrorProbe, StopReason};
use armc::synthgen::{generate_truth, sample_instance};
use armc_testkit::{fro, random_factors, random_orthonormal, rng};
use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn truth_contracts_over_100_seeds() {
    for seed in 0..100 {
        let t = generate_truth(400, 5, 5.0, seed).unwrap();
        let mu = max_incoherence(&t);
        assert!(mu <= 2.0, "seed {seed}: mu = {mu}");
        assert_eq!(t.sigma()[0], 1.0);
        assert_eq!(t.sigma()[0] / t.sigma()[4], 5.0);
        assert!(t.orthonormality_defect() <= 1e-10);
        // ||L*||_inf <= mu r sigma_1 / n.
        assert!(t.max_abs_entry() <= mu * 5.0 * t.sigma()[0] / 400.0 * (1.0 + 1e-12));
    }
}

#[test]
fn outlier_counts_concentrate() {
    let truth = generate_truth(1000, 5, 2.0, 12).unwrap();
    let inst = sample_instance(truth, 0.1, 0.15, 0.0, 12).unwrap();
    let m = inst.obs.len() as f64;
    let (mean, var) = (0.15 * m, m * 0.15 * 0.85);
    assert!((inst.outlier_count() as f64 - mean).abs() <= 4.0 * var.sqrt());
    let (rmax, cmax) = inst.max_line_outliers();
    assert!(rmax.max(cmax) as f64 <= 2.0 * 0.15 * 0.1 * 1000.0);
    assert!(inst.line_cap_satisfied);

    let n2 = 1e6;
    assert!((m - 0.1 * n2).abs() <= 5.0 * (n2 * 0.1 * 0.9f64).sqrt());
}

#[test]
fn outliers_lie_in_range_and_on_support() {
    let inst = ProblemInstance::generate(InstanceParams {
        n: 200, r: 3, kappa: 3.0, p: 0.3, alpha: 0.2, sigma: 0.0, seed: 4,
    })
    .unwrap();
    let bound = inst.truth.max_abs_entry();
    let clean = eval_on_support(&inst.truth, &inst.obs).unwrap();
    for (k, &o) in inst.outlier_mask.iter().enumerate() {
        let s = inst.outlier_values.0[k];
        assert!(s.abs() <= bound);
        if !o {
            assert_eq!(s, 0.0);
        }
        assert_eq!(inst.obs.values()[k], clean.0[k] + s);
    }
}

#[test]
fn noise_has_the_requested_level() {
    let truth = generate_truth(300, 3, 2.0, 6).unwrap();
    let inst = sample_instance(truth, 0.5, 0.0, 1e-3, 6).unwrap();
    let clean = eval_on_support(&inst.truth, &inst.obs).unwrap();
    let resid: Vec<f64> = inst.obs.values().iter().zip(&clean.0).map(|(m, l)| m - l).collect();
    let mean = resid.iter().sum::<f64>() / resid.len() as f64;
    let sd = (resid.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / resid.len() as f64).sqrt();
    assert!(mean.abs() < 5.0 * 1e-3 / (resid.len() as f64).sqrt());
    assert!((sd / 1e-3 - 1.0).abs() < 0.02);
}

#[test]
fn same_seed_same_instance() {
    let params = InstanceParams { n: 150, r: 3, kappa: 2.0, p: 0.2, alpha: 0.1, sigma: 1e-4, seed: 77 };
    let (a, b) = (ProblemInstance::generate(params).unwrap(), ProblemInstance::generate(params).unwrap());
    assert_eq!(a.truth, b.truth);
    assert_eq!(a.obs, b.obs);
    assert_eq!(a.outlier_mask, b.outlier_mask);
    let c = ProblemInstance::generate(InstanceParams { seed: 78, ..params }).unwrap();
    assert_ne!(a.obs, c.obs);
}

fn result_with(l_out: LowRankFactors, s_out: SparseValues) -> SolveResult {
    SolveResult {
        l_out,
        s_out,
        iters: 0,
        converged: true,
        stop: StopReason::RelativeChange,
        trace: Vec::new(),
        init_seconds: 0.0,
        init_rel_inf_error: None,
        error_probe: ErrorProbe::Exact,
    }
}

fn small_instance() -> ProblemInstance {
    ProblemInstance::generate(InstanceParams { n: 60, r: 2, kappa: 2.0, p: 0.5, alpha: 0.1, sigma: 0.0, seed: 3 })
        .unwrap()
}

#[test]
fn perfect_recovery_report() {
    let inst = small_instance();
    let report = evaluate(&result_with(inst.truth.clone(), inst.outlier_values.clone()), &inst).unwrap();
    assert_eq!(report.rel_inf_error, 0.0);
    assert_eq!(report.rel_fro_error, 0.0);
    assert!(report.success && report.contained);
    assert_eq!((report.support_precision, report.support_recall), (1.0, 1.0));
}

#[test]
fn scaled_truth_sits_on_the_success_boundary() {
    let inst = small_instance();
    let scaled = inst.truth.sigma().to_owned() * (1.0 + 1e-3);
    let est = LowRankFactors::new(inst.truth.u().to_owned(), scaled, inst.truth.v().to_owned()).unwrap();
    let report = evaluate(&result_with(est, SparseValues::zeros(inst.obs.len())), &inst).unwrap();
    assert!((report.rel_inf_error - 1e-3).abs() <= 1e-15);
    assert!((report.rel_fro_error - 1e-3).abs() <= 1e-12);
    // An empty support is trivially contained but recalls nothing.
    assert!(report.contained);
    assert_eq!(report.support_recall, 0.0);
}

#[test]
fn frobenius_error_n30_seed_8_matches_dense() {
    let mut g = rng(8);
    let (a, b) = (random_factors(&mut g, 30, 3, 0.5, 2.0), random_factors(&mut g, 30, 3, 0.5, 2.0));
    let want = fro(&(&a.to_dense() - &b.to_dense())) / fro(&b.to_dense());
    assert!((relative_fro_error(&a, &b).unwrap() - want).abs() <= 1e-12);
}

#[test]
fn rotated_factors_represent_the_same_matrix() {
    // R rotates within the block of equal singular values, so it commutes
    // with Sigma and (UR, Sigma, VR) is the same matrix.
    let mut g = rng(10);
    let (u, v) = (random_orthonormal(&mut g, 40, 3), random_orthonormal(&mut g, 40, 3));
    let sigma = array![2.0, 2.0, 1.0];
    let th: f64 = g.random_range(0.0..std::f64::consts::TAU);
    let rot = array![[th.cos(), -th.sin(), 0.0], [th.sin(), th.cos(), 0.0], [0.0, 0.0, 1.0]];
    let a = LowRankFactors::new(u.clone(), sigma.clone(), v.clone()).unwrap();
    let b = LowRankFactors::new(u.dot(&rot), sigma, v.dot(&rot)).unwrap();
    assert!(relative_inf_error(&b, &a, 0).unwrap().0 <= 1e-14);
    assert!(relative_fro_error(&b, &a).unwrap() <= 1e-14);
    assert_eq!(relative_inf_error(&a, &a, 0).unwrap().0, 0.0);
}

#[test]
fn incoherence_extremes() {
    let n = 8;
    let e = Array2::<f64>::eye(n).slice(ndarray::s![.., ..2]).to_owned();
    let coherent = LowRankFactors::new(e.clone(), array![1.0, 1.0], e).unwrap();
    assert_eq!(incoherence(&coherent), (4.0, 4.0));

    // Columns of a normalized Hadamard matrix: every row has norm sqrt(r/n).
    let h = array![[1.0, 1.0], [1.0, -1.0], [1.0, 1.0], [1.0, -1.0]] * 0.5;
    let flat = LowRankFactors::new(h.clone(), array![1.0, 0.5], h).unwrap();
    let (mu_u, mu_v) = incoherence(&flat);
    assert!((mu_u - 1.0).abs() < 1e-15 && (mu_v - 1.0).abs() < 1e-15);

    let t = generate_truth(400, 5, 5.0, 1).unwrap();
    assert!(max_incoherence(&t) <= 2.0);
}

#[test]
fn snr_reference_points() {
    let t = generate_truth(50, 2, 1.0, 1).unwrap();
    let unit = t.frobenius_norm() / 50.0;
    assert!(snr_db_for(&t, unit).unwrap().abs() < 1e-12);
    assert!((snr_db_for(&t, unit / 2.0).unwrap() - 20.0 * 2f64.log10()).abs() < 1e-12);
    assert!((snr_db_for(&t, 0.1 * unit).unwrap() - snr_db_for(&t, unit).unwrap() - 20.0).abs() < 1e-12);
    assert!(snr_db_for(&t, 0.0).is_err());
}

#[test]
fn snr_round_trip_n1000() {
    let t = generate_truth(1000, 5, 2.0, 40).unwrap();
    let sigma = sigma_for_snr(&t, 40.0);
    assert!((sigma - t.frobenius_norm() / (1000.0 * 100.0)).abs() <= 1e-18);
    let inst = sample_instance(t, 0.05, 0.0, sigma, 1).unwrap();
    assert!((snr_db(&inst).unwrap() - 40.0).abs() < 1e-10);
}

proptest! {
    #[test]
    fn dropping_entries_keeps_containment(seed in any::<u64>(), len in 1usize..200) {
        let mut g = rng(seed);
        let mask: Vec<bool> = (0..len).map(|_| g.random_bool(0.3)).collect();
        let vals: Vec<f64> = mask.iter().map(|&o| if o && g.random_bool(0.7) { 1.0 } else { 0.0 }).collect();
        let full = SupportStats::compute(&SparseValues(vals.clone()), &mask).unwrap();
        prop_assert!(full.contained());
        let dropped: Vec<f64> = vals.iter().map(|&v| if g.random_bool(0.5) { 0.0 } else { v }).collect();
        let sub = SupportStats::compute(&SparseValues(dropped), &mask).unwrap();
        prop_assert!(sub.contained());
        prop_assert!(sub.precision() >= 0.0 && sub.precision() <= 1.0);
        prop_assert!(sub.recall() <= full.recall());
    }

    #[test]
    fn observed_fraction_is_binomial(seed in 0u64..1000, p in 0.05f64..0.9) {
        let truth = generate_truth(120, 2, 2.0, seed).unwrap();
        let inst = sample_instance(truth, p, 0.0, 0.0, seed).unwrap();
        let n2 = 120.0 * 120.0;
        prop_assert!((inst.obs.len() as f64 - p * n2).abs() <= 5.0 * (n2 * p * (1.0 - p)).sqrt());
    }
}
