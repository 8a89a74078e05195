//! JSON instance descriptions.
//!
//! ```json
//! {"kind": "game", "n": 10, "alpha": 0.05, "L": 1.0, "seed": 7}
//! ```
//!
//! Explicit data (`payoff`, `valuations`, `budgets`, box bounds, ...) takes
//! precedence over the seeded generators.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::fisher::{FisherData, FisherMarketInstance};
use super::game::{generate_payoff, MatrixGameInstance};
use super::quadbox::QuadBoxToy;
use crate::oracle::ProblemOracles;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Game,
    Fisher,
    Quadbox,
}

impl InstanceKind {
    pub fn default_alpha(self) -> f64 {
        match self {
            InstanceKind::Game => 0.05,
            InstanceKind::Fisher => 0.1,
            InstanceKind::Quadbox => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub kind: InstanceKind,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, rename = "L", skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoff: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valuations: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budgets: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_lo: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_hi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_ref: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_lo: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_hi: Option<Vec<f64>>,
    /// Starting point; defaults to the instance's own choice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y0: Option<Vec<f64>>,
}

/// A constructed instance and its starting point.
#[derive(Clone, Debug)]
pub struct BuiltInstance {
    pub oracles: ProblemOracles,
    pub y0: Vec<f64>,
}

impl InstanceSpec {
    pub fn new(kind: InstanceKind, n: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            m: None,
            alpha: None,
            lipschitz: None,
            delta: None,
            seed,
            payoff: None,
            valuations: None,
            budgets: None,
            mu_lo: None,
            mu_hi: None,
            mu_ref: None,
            box_lo: None,
            box_hi: None,
            y0: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Fills in every generated field so the file is self-contained.
    pub fn materialize(mut self) -> Result<Self> {
        self.check_sizes()?;
        match self.kind {
            InstanceKind::Game => {
                if self.payoff.is_none() {
                    self.payoff = Some(generate_payoff(self.n, self.seed));
                }
            }
            InstanceKind::Fisher => {
                let gen = FisherData::generate(self.buyers(), self.n, self.seed);
                self.valuations.get_or_insert(gen.valuations);
                self.budgets.get_or_insert(gen.budgets);
                self.delta.get_or_insert(gen.delta);
                self.mu_lo.get_or_insert(gen.mu_lo);
                self.mu_hi.get_or_insert(gen.mu_hi);
                self.mu_ref.get_or_insert(gen.mu_ref);
            }
            InstanceKind::Quadbox => {
                self.box_lo.get_or_insert(vec![-1.0; self.n]);
                self.box_hi.get_or_insert(vec![1.0; self.n]);
            }
        }
        Ok(self)
    }

    fn buyers(&self) -> usize {
        self.m.unwrap_or(self.n)
    }

    fn check_sizes(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        if self.m == Some(0) {
            return Err(Error::invalid("m", "must be at least 1"));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<BuiltInstance> {
        self.check_sizes()?;
        let full = self.clone().materialize()?;
        let alpha = self.alpha.unwrap_or(self.kind.default_alpha());
        let oracles = match self.kind {
            InstanceKind::Game => {
                let payoff = full.payoff.expect("materialized");
                if payoff.len() != self.n {
                    return Err(Error::invalid(
                        "payoff",
                        format!("expected {} rows, found {}", self.n, payoff.len()),
                    ));
                }
                MatrixGameInstance::from_payoff(payoff, alpha, self.lipschitz.unwrap_or(1.0))?
                    .oracles()?
            }
            InstanceKind::Fisher => {
                let data = FisherData {
                    valuations: full.valuations.expect("materialized"),
                    budgets: full.budgets.expect("materialized"),
                    delta: full.delta.expect("materialized"),
                    mu_lo: full.mu_lo.expect("materialized"),
                    mu_hi: full.mu_hi.expect("materialized"),
                    mu_ref: full.mu_ref.expect("materialized"),
                };
                if data.mu_ref.len() != self.n {
                    return Err(Error::invalid(
                        "mu_ref",
                        format!("expected {} entries, found {}", self.n, data.mu_ref.len()),
                    ));
                }
                FisherMarketInstance::new(data, alpha, self.lipschitz)?.oracles()?
            }
            InstanceKind::Quadbox => {
                let lo = full.box_lo.expect("materialized");
                let hi = full.box_hi.expect("materialized");
                if lo.len() != self.n {
                    return Err(Error::invalid(
                        "box_lo",
                        format!("expected {} entries, found {}", self.n, lo.len()),
                    ));
                }
                QuadBoxToy::with_bounds(alpha, self.lipschitz.unwrap_or(1.0), lo, hi)?.oracles()?
            }
        };
        let y0 = match &self.y0 {
            Some(y0) => {
                oracles.domain().check(y0).map_err(|e| {
                    Error::invalid("y0", format!("not a feasible starting point: {e}"))
                })?;
                y0.clone()
            }
            None => oracles.default_start(),
        };
        Ok(BuiltInstance { oracles, y0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_game() {
        let s =
            InstanceSpec::from_json(r#"{"kind": "game", "n": 3, "L": 2.0, "seed": 5}"#).unwrap();
        let b = s.build().unwrap();
        assert_eq!(b.oracles.dim(), 3);
        assert_eq!(b.oracles.lipschitz(), 2.0);
        assert_eq!(b.oracles.alpha(), 0.05);
        assert_eq!(b.y0, vec![1.0 / 3.0; 3]);
    }

    #[test]
    fn rejects_unknown_fields() {
        let err = InstanceSpec::from_json(r#"{"kind": "game", "n": 3, "sed": 5}"#).unwrap_err();
        assert!(err.to_string().contains("sed"));
    }

    #[test]
    fn explicit_data_overrides_generator() {
        let mut s = InstanceSpec::new(InstanceKind::Game, 2, 9);
        s.payoff = Some(vec![vec![2.0, 0.0], vec![0.0, 2.0]]);
        s.alpha = Some(1.0);
        let b = s.build().unwrap();
        assert_eq!(b.oracles.grad_f(&[0.5, 0.5]), vec![0.5, 0.5]);
    }

    #[test]
    fn materialized_spec_builds_identically() {
        let s = InstanceSpec {
            m: Some(3),
            ..InstanceSpec::new(InstanceKind::Fisher, 4, 7)
        };
        let full = s.clone().materialize().unwrap();
        let text = full.to_json().unwrap();
        let back = InstanceSpec::from_json(&text).unwrap();
        let x = [0.3, -0.2, 0.1, 0.0];
        assert_eq!(
            s.build().unwrap().oracles.eval_f(&x),
            back.build().unwrap().oracles.eval_f(&x)
        );
    }

    #[test]
    fn infeasible_start_names_field() {
        let mut s = InstanceSpec::new(InstanceKind::Quadbox, 1, 0);
        s.y0 = Some(vec![3.0]);
        let err = s.build().unwrap_err().to_string();
        assert!(err.contains("y0"), "{err}");
    }
}
