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


//! Experiment harness for the `armc` solvers: configuration, grid runners
//! writing CSV results, and the file-based `solve` and `generate` commands
//! behind the `armc` binary.

// `!(x > 0.0)` is how NaN gets rejected alongside the bound.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod solve;
pub mod spec;

pub use config::Config;
pub use error::{BenchError, Result};
pub use experiments::{run_phase, run_runtime, run_stability, run_trials, TrialOutcome, TrialStatus};
pub use spec::{Cell, ExperimentKind, ExperimentSpec, SolverTemplate};
