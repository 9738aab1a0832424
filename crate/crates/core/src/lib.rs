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

//! Robust matrix completion: recover a rank-`r` matrix from a random subset
//! of its entries when some of the observed entries carry arbitrary outliers
//! and all of them carry small noise.
//!
//! The main solver alternates a thresholded sparse update with a low-rank
//! update that is projected onto the tangent space of the rank-`r` manifold
//! before truncation, so each iteration costs `O(|Omega| r + n r^2)`.
//!
//! ```no_run
//! use armc::prelude::*;
//!
//! let inst = ProblemInstance::generate(InstanceParams {
//!     n: 300, r: 3, kappa: 2.0, p: 0.3, alpha: 0.1, sigma: 0.0, seed: 7,
//! }).unwrap();
//! let beta1 = 1.1 * max_incoherence(&inst.truth) * 3.0 / 300.0;
//! let rule = ThresholdRule::new(ThresholdKind::Soft, beta1, 0.0, 0.9).unwrap();
//! let result = solve(&inst.obs, &SolverConfig::new(3, rule, Variant::Armc)).unwrap();
//! println!("{:?}", evaluate(&result, &inst).unwrap());
//! ```

// `!(x > 0.0)` is how NaN gets rejected alongside the bound.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod formats;
pub mod linalg;
pub mod metrics;
pub mod observations;
pub mod seeds;
pub mod solvers;
pub mod synthgen;
pub mod thresholding;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::linalg::{LowRankFactors, RsvdParams};
    pub use crate::metrics::{evaluate, max_incoherence, EvalReport, SUCCESS_TOL};
    pub use crate::observations::{ObservationSet, SparseValues};
    pub use crate::solvers::{solve, SolveResult, SolverConfig, TruthReference, Variant};
    pub use crate::synthgen::{InstanceParams, ProblemInstance};
    pub use crate::thresholding::{ThresholdKind, ThresholdRule};
}
