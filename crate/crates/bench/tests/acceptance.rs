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


//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use armc::metrics::max_incoherence;
use armc::prelude::*;
use armc::solvers::armc_step;
use armc::thresholding::DEFAULT_SCAD_A;
use armc_bench::experiments::{group, median, run_trials, success_rate};
use armc_bench::{Config, ExperimentKind, ExperimentSpec, TrialOutcome};
use armc_testkit::{rel_fro, rng, StepCase};
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn jobs() -> String {
    std::thread::available_parallelism().map_or(1, |n| n.get()).to_string()
}

fn spec(kind: ExperimentKind, settings: &[(&str, &str)]) -> ExperimentSpec {
    let mut cfg = Config::new();
    for (k, v) in settings {
        cfg.set(k, *v).expect("known key");
    }
    ExperimentSpec::from_config(kind, &cfg, false).expect("valid spec")
}

fn by_variant(outcomes: &[TrialOutcome], cell: usize, v: Variant) -> Vec<&TrialOutcome> {
    group(outcomes, cell, v)
}

// 1 -----------------------------------------------------------------------

fn step_oracle() -> Verdict {
    let start = Instant::now();
    let mut g = rng(0x0c1);
    let kinds = [ThresholdKind::Soft, ThresholdKind::Scad { a: DEFAULT_SCAD_A }, ThresholdKind::Hard];
    let mut worst = 0.0f64;
    for k in 0..50 {
        let (n, r, p) = (g.random_range(12..=60), g.random_range(1..=4), g.random_range(0.3..0.9));
        let case = StepCase::random(g.random(), n, r, p);
        let kind = kinds[k % kinds.len()];
        let gamma = 0.9;
        let rule = ThresholdRule::new(kind, case.lam / gamma, 0.0, gamma).unwrap();
        let cfg = SolverConfig::new(r, rule, Variant::Armc);
        let (_, next) = armc_step(&case.iterate, &case.obs, &cfg, 1).unwrap();
        let (_, want) = case.problem.tangent_step(&case.iterate, kind, case.lam);
        worst = worst.max(rel_fro(&next.to_dense(), &want));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(worst <= 1e-9 && secs < 10.0, format!("worst relative error {worst:.2e}, {secs:.2}s"))
}

// 2, 4, 5 -----------------------------------------------------------------

fn interior_trials() -> (Vec<TrialOutcome>, f64) {
    let start = Instant::now();
    let s = spec(
        ExperimentKind::Phase,
        &[
            ("experiment.n", "500"),
            ("experiment.r", "5"),
            ("experiment.kappa_list", "2"),
            ("experiment.p_list", "0.2"),
            ("experiment.alpha", "0.1"),
            ("experiment.trials", "25"),
            ("threshold.kind", "soft"),
            ("threshold.gamma", "0.9"),
            ("solver.max_iters", "150"),
            ("experiment.jobs", &jobs()),
        ],
    );
    let out = run_trials(&s).unwrap();
    (out, start.elapsed().as_secs_f64())
}

fn recovery(trials: &[TrialOutcome], secs: f64) -> Verdict {
    let g = by_variant(trials, 0, Variant::Armc);
    let rate = success_rate(&g);
    let max_iters = g.iter().map(|o| o.iters).max().unwrap_or(0);
    verdict(
        rate >= 0.92 && max_iters <= 150 && secs < 120.0,
        format!("success rate {rate:.2}, max iterations {max_iters}, {secs:.1}s"),
    )
}

fn containment(trials: &[TrialOutcome]) -> Verdict {
    let (mut checked, mut violations, mut first) = (0, 0usize, None);
    for o in trials.iter().filter(|o| o.success) {
        let res = o.result.as_ref().unwrap();
        for rec in &res.trace {
            let st = rec.support.expect("support tracked");
            checked += 1;
            if st.false_positives > 0 {
                violations += 1;
                first.get_or_insert((o.trial, rec.iteration, st.false_positives));
            }
        }
    }
    let detail = match first {
        None => format!("{checked} iterations checked, no entries outside the outlier support"),
        Some((trial, t, fp)) => {
            format!("{violations} of {checked} iterations violate; first: trial {trial} t={t} with {fp} entries")
        }
    };
    verdict(checked > 0 && violations == 0, detail)
}

fn envelope(trials: &[TrialOutcome]) -> Verdict {
    let (mut rises, mut worst_ratio, mut first_rise, mut used) = (0usize, 0.0f64, None, 0);
    for o in trials.iter().filter(|o| o.success) {
        // path[k] is the error of L^{k+1}
        let path = o.result.as_ref().unwrap().error_path().expect("truth tracked");
        let err = |t: usize| path[t - 1];
        let last = path.len();
        for t in 3..last {
            if err(t + 1) >= err(t) {
                rises += 1;
                first_rise.get_or_insert((o.trial, t));
            }
        }
        if last > 5 {
            let ratio = (err(last) / err(5)).powf(1.0 / (last - 5) as f64);
            worst_ratio = worst_ratio.max(ratio);
            used += 1;
        }
    }
    let mut detail = format!("worst geometric-mean contraction {worst_ratio:.3} over {used} trials, {rises} non-decreasing steps");
    if let Some((trial, t)) = first_rise {
        detail.push_str(&format!(" (first: trial {trial} at t={t})"));
    }
    verdict(used > 0 && rises == 0 && worst_ratio <= 0.95, detail)
}

// 3 -----------------------------------------------------------------------

fn phase_edges() -> Verdict {
    let start = Instant::now();
    let s = spec(
        ExperimentKind::Phase,
        &[
            ("experiment.n", "500"),
            ("experiment.kappa_list", "5"),
            ("experiment.alpha", "0.15"),
            ("experiment.p_list", "0.02:0.02:0.26"),
            ("experiment.trials", "25"),
            ("experiment.jobs", &jobs()),
        ],
    );
    let out = run_trials(&s).unwrap();
    let rates: Vec<f64> = (0..s.cells.len()).map(|c| success_rate(&group(&out, c, Variant::Armc))).collect();
    let smooth: Vec<f64> = (0..rates.len())
        .map(|k| median(rates[k.saturating_sub(1)..(k + 2).min(rates.len())].iter().copied()))
        .collect();
    let monotone = smooth.windows(2).all(|w| w[1] >= w[0]);
    let (lo, hi) = (rates[0], *rates.last().unwrap());
    let listing: Vec<String> = rates.iter().map(|r| format!("{r:.2}")).collect();
    verdict(
        lo == 0.0 && hi >= 0.9 && monotone,
        format!("rates [{}], smoothed monotone {monotone}, {:.1}s", listing.join(" "), start.elapsed().as_secs_f64()),
    )
}

// 6, 7 --------------------------------------------------------------------

fn runtime_spec(n_list: &str, variants: &str) -> ExperimentSpec {
    // one worker so that wall times are not contaminated by neighbours
    spec(
        ExperimentKind::Runtime,
        &[
            ("experiment.n_list", n_list),
            ("experiment.alpha_list", "0.1"),
            ("experiment.r", "10"),
            ("experiment.kappa", "2"),
            ("experiment.trials", "5"),
            ("solver.variant", variants),
            ("experiment.jobs", "1"),
        ],
    )
}

fn parity(out: &[TrialOutcome]) -> Verdict {
    let a = by_variant(out, 0, Variant::Armc);
    let r = by_variant(out, 0, Variant::Rmc);
    let iters = |g: &[&TrialOutcome]| median(g.iter().map(|o| o.iters as f64));
    let total = |g: &[&TrialOutcome]| median(g.iter().filter_map(|o| o.total_seconds()));
    let (ia, ir) = (iters(&a), iters(&r));
    let (ta, tr) = (total(&a), total(&r));
    let gap = (ia - ir).abs() / ir;
    let ok = a.iter().chain(&r).all(|o| o.result.is_some());
    verdict(
        ok && gap <= 0.10 && ta < tr,
        format!("median iterations armc {ia} rmc {ir} (gap {gap:.3}); median total armc {ta:.2}s rmc {tr:.2}s"),
    )
}

fn scaling(small: &[TrialOutcome], large: &[TrialOutcome]) -> Verdict {
    let per_iter = |g: Vec<&TrialOutcome>| median(g.iter().filter_map(|o| o.mean_step_seconds()));
    let (s, l) = (per_iter(by_variant(small, 0, Variant::Armc)), per_iter(by_variant(large, 0, Variant::Armc)));
    let ratio = l / s;
    verdict(ratio <= 6.0, format!("per-iteration n=2000 {s:.4}s, n=8000 {l:.4}s, ratio {ratio:.2}"))
}

// 8 -----------------------------------------------------------------------

fn stability() -> Verdict {
    let start = Instant::now();
    let s = spec(
        ExperimentKind::Stability,
        &[
            ("experiment.n", "1000"),
            ("experiment.p", "0.3"),
            ("experiment.scenarios", "5:0.1,5:0.2"),
            ("experiment.snr_list", "20:10:60"),
            ("experiment.trials", "5"),
            ("experiment.jobs", &jobs()),
        ],
    );
    let out = run_trials(&s).unwrap();
    let med = |alpha: f64| -> Vec<(f64, f64)> {
        s.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.alpha == alpha)
            .map(|(ci, c)| {
                let g = group(&out, ci, Variant::Armc);
                (c.snr_db.unwrap(), median(g.iter().filter_map(|o| o.report.as_ref().map(|r| r.rel_fro_error))))
            })
            .collect()
    };
    let (low, high) = (med(0.1), med(0.2));
    let xs: Vec<f64> = low.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = low.iter().map(|p| p.1.log10()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = sxy * sxy / (sxx * syy);
    let ordered = low.iter().zip(&high).all(|(a, b)| b.1 > a.1);
    verdict(
        (-0.055..=-0.045).contains(&slope) && r2 >= 0.95 && ordered,
        format!(
            "slope {slope:.4}, R^2 {r2:.4}, alpha 0.2 above 0.1 at every SNR: {ordered}, {:.1}s",
            start.elapsed().as_secs_f64()
        ),
    )
}

// 9 -----------------------------------------------------------------------

fn threshold_axioms() -> Verdict {
    let scad = ThresholdKind::Scad { a: DEFAULT_SCAD_A };
    let kinds = [ThresholdKind::Hard, ThresholdKind::Soft, scad];
    let t = |kind: ThresholdKind, x: f64, lam: f64| {
        ThresholdRule::new(kind, 1.0, 0.0, 0.9).unwrap().apply_scalar(x, lam).unwrap()
    };
    let grid = |lo: f64, hi: f64, m: usize| (0..=m).map(move |k| lo + (hi - lo) * k as f64 / m as f64);
    let lambdas = [1e-3, 0.25, 1.0, 7.5];
    let mut failures = Vec::new();
    for kind in kinds {
        for lam in lambdas {
            if grid(-lam, lam, 2000).any(|x| t(kind, x, lam) != 0.0) {
                failures.push(format!("{kind} dead zone at lam {lam}"));
            }
            if grid(-10.0 * lam, 10.0 * lam, 20000).any(|x| (t(kind, x, lam) - x).abs() > lam * (1.0 + 1e-12)) {
                failures.push(format!("{kind} deviation at lam {lam}"));
            }
        }
    }
    let a = DEFAULT_SCAD_A;
    for (kind, k) in [(ThresholdKind::Soft, 1.0), (scad, (a - 1.0) / (a - 2.0))] {
        for lam in lambdas {
            let xs: Vec<f64> = grid(-6.0 * lam, 6.0 * lam, 400).collect();
            let bad = xs.iter().any(|&x| {
                xs.iter().any(|&y| (t(kind, x, lam) - t(kind, y, lam)).abs() > k * (x - y).abs() * (1.0 + 1e-12) + 1e-15)
            });
            if bad {
                failures.push(format!("{kind} Lipschitz {k} at lam {lam}"));
            }
        }
    }
    let hard_jump = (t(ThresholdKind::Hard, 1.0 + 1e-9, 1.0) - t(ThresholdKind::Hard, 1.0, 1.0)).abs() / 1e-9;
    if hard_jump <= 1e6 {
        failures.push("hard thresholding shows no Lipschitz violation".into());
    }
    if failures.is_empty() {
        verdict(true, format!("dead zone, deviation and Lipschitz grids hold; hard slope {hard_jump:.1e}"))
    } else {
        verdict(false, failures.join("; "))
    }
}

// 10 ----------------------------------------------------------------------

fn generator_contracts() -> Verdict {
    let (mut worst_mu, mut kappa_misses, mut cap_misses) = (0.0f64, 0, 0);
    for seed in 0..100 {
        let inst = ProblemInstance::generate(InstanceParams {
            n: 400, r: 5, kappa: 5.0, p: 0.3, alpha: 0.1, sigma: 0.0, seed,
        })
        .unwrap();
        worst_mu = worst_mu.max(max_incoherence(&inst.truth));
        let s = inst.truth.sigma();
        if s[0] / s[4] != 5.0 {
            kappa_misses += 1;
        }
        let (rmax, cmax) = inst.max_line_outliers();
        if rmax.max(cmax) as f64 > inst.line_cap() {
            cap_misses += 1;
        }
    }
    verdict(
        worst_mu <= 2.0 && kappa_misses == 0 && cap_misses == 0,
        format!("max incoherence {worst_mu:.3}, condition misses {kappa_misses}, line-cap misses {cap_misses}"),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut record = |id: u32, name: &'static str, v: Verdict| {
        println!("{} criterion {id}: {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((id, name, v));
    };

    record(1, "tangent step matches the dense reference", step_oracle());
    let (interior, secs) = interior_trials();
    record(2, "noiseless recovery at n=500, p=0.2, alpha=0.1", recovery(&interior, secs));
    record(3, "phase-transition edges and monotonicity", phase_edges());
    record(4, "sparse estimates stay inside the outlier support", containment(&interior));
    record(5, "geometric convergence envelope", envelope(&interior));
    let small = run_trials(&runtime_spec("2000", "armc,rmc")).unwrap();
    record(6, "iteration parity and speed against rmc at n=2000", parity(&small));
    let large = run_trials(&runtime_spec("8000", "armc")).unwrap();
    record(7, "per-iteration scaling from n=2000 to n=8000", scaling(&small, &large));
    record(8, "noise-stability slope", stability());
    record(9, "threshold axioms", threshold_axioms());
    record(10, "synthetic generator contracts", generator_contracts());

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {failed:?}");
        ExitCode::FAILURE
    }
}
