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

//! Scalar thresholding operators and the geometric threshold schedule.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::observations::SparseValues;

pub const DEFAULT_SCAD_A: f64 = 3.7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdKind {
    Hard,
    Soft,
    /// Smoothly clipped absolute deviation with shape `a > 2`.
    Scad { a: f64 },
}

impl ThresholdKind {
    /// Lipschitz constant `K` of the operator, `None` for the discontinuous
    /// hard threshold.
    pub fn lipschitz(&self) -> Option<f64> {
        match *self {
            ThresholdKind::Hard => None,
            ThresholdKind::Soft => Some(1.0),
            ThresholdKind::Scad { a } => Some((a - 1.0) / (a - 2.0)),
        }
    }

    /// Constant `B` in `|T(x) - x| <= B * lambda`.
    pub fn deviation_bound(&self) -> f64 {
        1.0
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, ThresholdKind::Hard)
    }

    fn validate(&self) -> Result<()> {
        if let ThresholdKind::Scad { a } = *self {
            if !(a > 2.0) || !a.is_finite() {
                return Err(Error::invalid(format!("SCAD shape a = {a} must exceed 2")));
            }
        }
        Ok(())
    }

    /// `T_lam(x)`; `lam` must already be validated as positive.
    #[inline]
    pub(crate) fn eval(&self, x: f64, lam: f64) -> f64 {
        let ax = x.abs();
        match *self {
            ThresholdKind::Hard => {
                if ax <= lam {
                    0.0
                } else {
                    x
                }
            }
            ThresholdKind::Soft => x.signum() * (ax - lam).max(0.0),
            ThresholdKind::Scad { a } => {
                if ax <= 2.0 * lam {
                    x.signum() * (ax - lam).max(0.0)
                } else if ax < a * lam {
                    ((a - 1.0) * x - x.signum() * a * lam) / (a - 2.0)
                } else {
                    x
                }
            }
        }
    }
}

impl fmt::Display for ThresholdKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdKind::Hard => f.write_str("hard"),
            ThresholdKind::Soft => f.write_str("soft"),
            ThresholdKind::Scad { .. } => f.write_str("scad"),
        }
    }
}

impl FromStr for ThresholdKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hard" => Ok(ThresholdKind::Hard),
            "soft" => Ok(ThresholdKind::Soft),
            "scad" => Ok(ThresholdKind::Scad { a: DEFAULT_SCAD_A }),
            other => Err(Error::invalid(format!("unknown threshold kind '{other}'"))),
        }
    }
}

/// Operator family plus the schedule `xi_t = beta1 * gamma^t + beta2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRule {
    pub kind: ThresholdKind,
    pub beta1: f64,
    pub beta2: f64,
    pub gamma: f64,
}

impl ThresholdRule {
    pub fn new(kind: ThresholdKind, beta1: f64, beta2: f64, gamma: f64) -> Result<Self> {
        let rule = ThresholdRule { kind, beta1, beta2, gamma };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        self.kind.validate()?;
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid(format!("decay rate gamma = {} outside (0, 1)", self.gamma)));
        }
        if !(self.beta1 >= 0.0 && self.beta1.is_finite()) || !(self.beta2 >= 0.0 && self.beta2.is_finite()) {
            return Err(Error::invalid(format!(
                "threshold levels beta1 = {}, beta2 = {} must be finite and non-negative",
                self.beta1, self.beta2
            )));
        }
        Ok(())
    }

    pub fn with_kind(mut self, kind: ThresholdKind) -> Self {
        self.kind = kind;
        self
    }

    /// `beta1 * gamma^t + beta2`; `t = 0` gives the initial level.
    pub fn schedule(&self, t: u32) -> f64 {
        self.beta1 * self.gamma.powi(t as i32) + self.beta2
    }

    pub fn apply_scalar(&self, x: f64, lam: f64) -> Result<f64> {
        check_lambda(lam)?;
        self.kind.validate()?;
        Ok(self.kind.eval(x, lam))
    }

    /// Validates the rule at level `lam` for callers that then use `kind.eval`.
    pub(crate) fn checked_level(&self, lam: f64) -> Result<f64> {
        check_lambda(lam)?;
        self.kind.validate()?;
        Ok(lam)
    }

    /// Entrywise threshold; entries with `|x| <= lam` become exact zeros.
    pub fn apply_sparse(&self, vals: &SparseValues, lam: f64) -> Result<SparseValues> {
        check_lambda(lam)?;
        self.kind.validate()?;
        let kind = self.kind;
        Ok(SparseValues(vals.0.iter().map(|&x| kind.eval(x, lam)).collect()))
    }
}

fn check_lambda(lam: f64) -> Result<()> {
    if !(lam > 0.0) || !lam.is_finite() {
        return Err(Error::invalid(format!("threshold level {lam} must be positive")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(kind: ThresholdKind) -> ThresholdRule {
        ThresholdRule::new(kind, 1.0, 0.0, 0.9).unwrap()
    }

    const SCAD: ThresholdKind = ThresholdKind::Scad { a: 3.7 };

    #[test]
    fn schedule_values() {
        assert_eq!(ThresholdRule::new(ThresholdKind::Soft, 1.0, 0.0, 0.9).unwrap().schedule(0), 1.0);
        assert_eq!(ThresholdRule::new(ThresholdKind::Soft, 1.0, 0.5, 0.5).unwrap().schedule(2), 0.75);
        let t10 = ThresholdRule::new(ThresholdKind::Soft, 2.0, 0.0, 0.9).unwrap().schedule(10);
        assert!((t10 - 0.6973568802).abs() < 1e-10);
    }

    #[test]
    fn scalar_examples() {
        assert_eq!(rule(ThresholdKind::Soft).apply_scalar(0.5, 1.0).unwrap(), 0.0);
        assert_eq!(rule(ThresholdKind::Soft).apply_scalar(2.0, 1.0).unwrap(), 1.0);
        let mid = rule(SCAD).apply_scalar(3.0, 1.0).unwrap();
        assert!((mid - 4.4 / 1.7).abs() < 1e-12);
        assert!((mid - 2.5882352941).abs() < 1e-10);
        assert_eq!(rule(SCAD).apply_scalar(4.0, 1.0).unwrap(), 4.0);
    }

    #[test]
    fn hard_tie_maps_to_zero() {
        assert_eq!(rule(ThresholdKind::Hard).apply_scalar(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(rule(ThresholdKind::Hard).apply_scalar(-1.5, 1.0).unwrap(), -1.5);
    }

    #[test]
    fn invalid_inputs() {
        let soft = rule(ThresholdKind::Soft);
        assert!(soft.apply_scalar(1.0, 0.0).is_err());
        assert!(soft.apply_scalar(1.0, -1.0).is_err());
        assert!(soft.apply_sparse(&SparseValues(vec![1.0]), 0.0).is_err());
        assert!(ThresholdRule::new(ThresholdKind::Scad { a: 2.0 }, 1.0, 0.0, 0.9).is_err());
        assert!(ThresholdRule::new(ThresholdKind::Soft, 1.0, 0.0, 1.0).is_err());
        assert!(ThresholdRule::new(ThresholdKind::Soft, -1.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn sparse_examples() {
        let soft = rule(ThresholdKind::Soft);
        assert_eq!(soft.apply_sparse(&SparseValues(vec![0.1, -0.9]), 1.0).unwrap().0, vec![0.0, 0.0]);
        assert_eq!(soft.apply_sparse(&SparseValues(vec![3.0, -3.0]), 1.0).unwrap().0, vec![2.0, -2.0]);
    }

    #[test]
    fn parse_kinds() {
        assert_eq!("SOFT".parse::<ThresholdKind>().unwrap(), ThresholdKind::Soft);
        assert_eq!("scad".parse::<ThresholdKind>().unwrap(), SCAD);
        assert!("median".parse::<ThresholdKind>().is_err());
    }
}
