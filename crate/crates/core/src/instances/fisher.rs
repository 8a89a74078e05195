//! Smoothed Fisher market in log-prices
//!
//! ```text
//! f(mu) = sum_j exp(mu_j) + delta sum_i B_i logsumexp_j((log b_ij - mu_j) / delta)
//! h     = indicator of [mu_lo, mu_hi],   w(mu) = ||mu - mu_ref||^2 / 2
//! ```
//!
//! No closed form for `f^*` is available, so only primal-side methods apply.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numerics::{dot, logsumexp, softmax};
use crate::oracle::{
    CompositeOracle, ConjugateOracle, Domain, Glmo, Problem, ProblemOracles, SmoothOracle,
};
use crate::{Error, Result};

pub const DEFAULT_MU_LO: f64 = -2.0;
pub const DEFAULT_MU_HI: f64 = 2.0;
pub const DEFAULT_DELTA: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub struct FisherMarketInstance {
    valuations: Vec<Vec<f64>>,
    log_valuations: Vec<Vec<f64>>,
    budgets: Vec<f64>,
    delta: f64,
    mu_ref: Vec<f64>,
    alpha: f64,
    lipschitz: f64,
    domain: Domain,
}

/// Raw market data; see [`FisherMarketInstance::new`].
#[derive(Clone, Debug, PartialEq)]
pub struct FisherData {
    pub valuations: Vec<Vec<f64>>,
    pub budgets: Vec<f64>,
    pub delta: f64,
    pub mu_lo: Vec<f64>,
    pub mu_hi: Vec<f64>,
    pub mu_ref: Vec<f64>,
}

impl FisherData {
    /// Seeded market: valuations log-uniform on `[0.1, 10]`, budgets uniform
    /// on `[0.5, 2]`, box `[-2, 2]^n`, reference `0`, `delta = 1`.
    pub fn generate(m: usize, n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let span = 10f64.ln();
        let valuations = (0..m)
            .map(|_| (0..n).map(|_| rng.gen_range(-span..span).exp()).collect())
            .collect();
        let budgets = (0..m).map(|_| rng.gen_range(0.5..2.0)).collect();
        Self {
            valuations,
            budgets,
            delta: DEFAULT_DELTA,
            mu_lo: vec![DEFAULT_MU_LO; n],
            mu_hi: vec![DEFAULT_MU_HI; n],
            mu_ref: vec![0.0; n],
        }
    }
}

/// Conservative smoothness bound `n exp(max mu_hi) + (sum_i B_i) / delta`
/// on the Hessian norm of `f` over the box.
pub fn fisher_smoothness(data: &FisherData) -> f64 {
    let n = data.mu_hi.len() as f64;
    let top = data.mu_hi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    n * top.exp() + data.budgets.iter().sum::<f64>() / data.delta
}

impl FisherMarketInstance {
    /// Validates the data; `lipschitz` defaults to [`fisher_smoothness`].
    pub fn new(data: FisherData, alpha: f64, lipschitz: Option<f64>) -> Result<Self> {
        let m = data.valuations.len();
        let n = data.mu_ref.len();
        if m == 0 || n == 0 {
            return Err(Error::invalid(
                "valuations",
                "need at least one buyer and one good",
            ));
        }
        if let Some(row) = data.valuations.iter().find(|r| r.len() != n) {
            return Err(Error::invalid(
                "valuations",
                format!("each row must have {n} entries, found {}", row.len()),
            ));
        }
        if data
            .valuations
            .iter()
            .flatten()
            .any(|&b| !(b > 0.0 && b.is_finite()))
        {
            return Err(Error::invalid(
                "valuations",
                "entries must be positive and finite",
            ));
        }
        if data.budgets.len() != m {
            return Err(Error::invalid(
                "budgets",
                format!("expected {m} entries, found {}", data.budgets.len()),
            ));
        }
        if data.budgets.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
            return Err(Error::invalid(
                "budgets",
                "entries must be positive and finite",
            ));
        }
        if !(data.delta > 0.0 && data.delta.is_finite()) {
            return Err(Error::invalid(
                "delta",
                format!("must be positive, got {}", data.delta),
            ));
        }
        if data.mu_lo.len() != n || data.mu_hi.len() != n {
            return Err(Error::invalid(
                "mu_lo",
                format!("box bounds must have {n} entries"),
            ));
        }
        let ordered = (0..n).all(|j| {
            data.mu_lo[j].is_finite()
                && data.mu_hi[j].is_finite()
                && data.mu_lo[j] <= data.mu_ref[j]
                && data.mu_ref[j] <= data.mu_hi[j]
        });
        if !ordered {
            return Err(Error::invalid(
                "mu_ref",
                "need finite mu_lo <= mu_ref <= mu_hi",
            ));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(
                "alpha",
                format!("must be positive, got {alpha}"),
            ));
        }
        let lipschitz = lipschitz.unwrap_or_else(|| fisher_smoothness(&data));
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::invalid(
                "L",
                format!("must be positive, got {lipschitz}"),
            ));
        }
        let log_valuations = data
            .valuations
            .iter()
            .map(|r| r.iter().map(|b| b.ln()).collect())
            .collect();
        Ok(Self {
            valuations: data.valuations,
            log_valuations,
            budgets: data.budgets,
            delta: data.delta,
            mu_ref: data.mu_ref,
            alpha,
            lipschitz,
            domain: Domain::Box {
                lo: data.mu_lo,
                hi: data.mu_hi,
            },
        })
    }

    pub fn generate(m: usize, n: usize, seed: u64, alpha: f64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::invalid("n", "market sizes must be at least 1"));
        }
        Self::new(FisherData::generate(m, n, seed), alpha, None)
    }

    pub fn oracles(self) -> Result<ProblemOracles> {
        ProblemOracles::new(self)
    }

    fn bounds(&self) -> (&[f64], &[f64]) {
        match &self.domain {
            Domain::Box { lo, hi } => (lo, hi),
            Domain::Simplex { .. } => unreachable!("fisher domain is a box"),
        }
    }

    pub fn data(&self) -> FisherData {
        let (lo, hi) = self.bounds();
        FisherData {
            valuations: self.valuations.clone(),
            budgets: self.budgets.clone(),
            delta: self.delta,
            mu_lo: lo.to_vec(),
            mu_hi: hi.to_vec(),
            mu_ref: self.mu_ref.clone(),
        }
    }

    /// Buyer `i`'s smoothed demand shares `softmax_j((log b_ij - mu_j) / delta)`.
    pub fn demand_shares(&self, i: usize, mu: &[f64]) -> Vec<f64> {
        softmax(&self.utilities(i, mu))
    }

    fn utilities(&self, i: usize, mu: &[f64]) -> Vec<f64> {
        self.log_valuations[i]
            .iter()
            .zip(mu)
            .map(|(lb, m)| (lb - m) / self.delta)
            .collect()
    }
}

impl SmoothOracle for FisherMarketInstance {
    fn dim(&self) -> usize {
        self.mu_ref.len()
    }

    fn eval_f(&self, mu: &[f64]) -> f64 {
        let supply: f64 = mu.iter().map(|m| m.exp()).sum();
        let demand: f64 = self
            .budgets
            .iter()
            .enumerate()
            .map(|(i, b)| b * logsumexp(&self.utilities(i, mu)))
            .sum();
        supply + self.delta * demand
    }

    fn grad_f(&self, mu: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = mu.iter().map(|m| m.exp()).collect();
        for (i, b) in self.budgets.iter().enumerate() {
            for (gj, q) in g.iter_mut().zip(self.demand_shares(i, mu)) {
                *gj -= b * q;
            }
        }
        g
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

impl CompositeOracle for FisherMarketInstance {
    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    /// `clip(mu_ref - v / alpha, [mu_lo, mu_hi])`.
    fn glmo(&self, v: &[f64]) -> Glmo {
        let (lo, hi) = self.bounds();
        let argmin: Vec<f64> = (0..v.len())
            .map(|j| (self.mu_ref[j] - v[j] / self.alpha).clamp(lo[j], hi[j]))
            .collect();
        let min_value = dot(v, &argmin) + self.alpha * self.eval_w(&argmin);
        Glmo { argmin, min_value }
    }

    fn eval_w(&self, mu: &[f64]) -> f64 {
        0.5 * mu
            .iter()
            .zip(&self.mu_ref)
            .map(|(m, r)| (m - r) * (m - r))
            .sum::<f64>()
    }

    fn w_bound(&self) -> f64 {
        let (lo, hi) = self.bounds();
        0.5 * (0..lo.len())
            .map(|j| {
                (self.mu_ref[j] - lo[j])
                    .powi(2)
                    .max((hi[j] - self.mu_ref[j]).powi(2))
            })
            .sum::<f64>()
    }
}

impl ConjugateOracle for FisherMarketInstance {
    fn grad_h_alpha_conj(&self, z: &[f64]) -> Vec<f64> {
        self.glmo(z).argmin
    }

    fn eval_h_alpha_conj(&self, z: &[f64]) -> f64 {
        -self.glmo(z).min_value
    }
}

impl Problem for FisherMarketInstance {
    fn name(&self) -> &str {
        "fisher"
    }

    fn default_start(&self) -> Vec<f64> {
        self.mu_ref.clone()
    }

    fn with_alpha(&self, alpha: f64) -> Result<Arc<dyn Problem>> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(
                "alpha",
                format!("must be positive, got {alpha}"),
            ));
        }
        Ok(Arc::new(Self {
            alpha,
            ..self.clone()
        }))
    }
}
