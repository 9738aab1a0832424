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

//! Dense and structured linear-algebra kernels.

mod jacobi;
mod lowrank;
mod qr;
mod rsvd;
mod tangent;

pub use jacobi::{svd_small, SmallSvd};
pub use lowrank::LowRankFactors;
pub use qr::{qr_thin, ThinQr};
pub use rsvd::{truncated_svd_operator, FnOperator, LinearOperator, RsvdParams, RANK_COLLAPSE_RATIO};
pub use tangent::{truncate_structured, StructuredTangentForm};
