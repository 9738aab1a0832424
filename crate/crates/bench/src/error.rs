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


use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    /// Bad flags, unknown config keys or unparsable settings.
    #[error("usage: {0}")]
    Usage(String),
    /// Malformed or inconsistent input data.
    #[error("data: {0}")]
    Data(armc::Error),
    /// The solver degenerated (rank collapse).
    #[error("numerical: {0}")]
    Numerical(armc::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl BenchError {
    pub fn usage(msg: impl Into<String>) -> Self {
        BenchError::Usage(msg.into())
    }

    /// Process exit status: 2 usage, 3 data, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Usage(_) => 2,
            BenchError::Data(_) | BenchError::Io(_) | BenchError::Csv(_) => 3,
            BenchError::Numerical(_) => 4,
        }
    }
}

impl From<armc::Error> for BenchError {
    fn from(e: armc::Error) -> Self {
        match e {
            armc::Error::RankCollapse { .. } => BenchError::Numerical(e),
            armc::Error::Io(io) => BenchError::Io(io),
            other => BenchError::Data(other),
        }
    }
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
