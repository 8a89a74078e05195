//! Entropically smoothed zero-sum matrix game
//!
//! ```text
//! min_{x in simplex}  L^{-1} logsumexp(L A^T x) + alpha (H(x) + log n)
//! ```
//!
//! with `H(x) = sum x_i log x_i`. Dual variables live in the range of `∇f`,
//! `y = A p` with `p` in the simplex, where `f^*(y) = L^{-1} H(A^{-1} y)`.
//! The conjugate therefore needs `A` to be invertible; for a singular payoff
//! the instance reports `f*` as unsupported.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, LU};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::numerics::{logsumexp, neg_entropy, softmax};
use crate::oracle::{
    CompositeOracle, ConjugateOracle, Domain, Extended, Glmo, NormKind, Problem, ProblemOracles,
    ProxRequest, ProxStep, SmoothOracle, DOMAIN_TOL,
};
use crate::{Error, Result};

/// Smallest probability used when a simplex vertex divergence is evaluated.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Pivot threshold, relative to the largest pivot, below which `A` is
/// treated as singular.
const SINGULAR_RTOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct MatrixGameInstance {
    a: DMatrix<f64>,
    lu: Option<LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    lipschitz: f64,
    alpha: f64,
    domain: Domain,
}

/// Standard normal `n x n` payoff from a seeded generator (not normalized).
pub fn generate_payoff(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect()
}

impl MatrixGameInstance {
    /// Builds the game from a square payoff, rescaled to unit spectral norm.
    pub fn from_payoff(rows: Vec<Vec<f64>>, alpha: f64, lipschitz: f64) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::invalid("payoff", "must be non-empty"));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::invalid(
                "payoff",
                format!(
                    "must be square {n}x{n}, found a row of length {}",
                    bad.len()
                ),
            ));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("payoff", "entries must be finite"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(
                "alpha",
                format!("must be positive, got {alpha}"),
            ));
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::invalid(
                "L",
                format!("must be positive, got {lipschitz}"),
            ));
        }
        let mut a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let norm = a.singular_values().max();
        if norm.is_nan() || norm <= 0.0 {
            return Err(Error::invalid("payoff", "must be nonzero"));
        }
        a /= norm;
        Ok(Self::assemble(a, alpha, lipschitz))
    }

    pub fn generate(n: usize, seed: u64, alpha: f64, lipschitz: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        Self::from_payoff(generate_payoff(n, seed), alpha, lipschitz)
    }

    fn assemble(a: DMatrix<f64>, alpha: f64, lipschitz: f64) -> Self {
        let n = a.nrows();
        let lu = a.clone().lu();
        let pivots = lu.u().diagonal().map(f64::abs);
        let invertible = pivots.min() > SINGULAR_RTOL * pivots.max();
        Self {
            a,
            lu: invertible.then_some(lu),
            lipschitz,
            alpha,
            domain: Domain::Simplex { n },
        }
    }

    pub fn oracles(self) -> Result<ProblemOracles> {
        ProblemOracles::new(self)
    }

    /// Normalized payoff, row-major.
    pub fn payoff(&self) -> Vec<Vec<f64>> {
        self.a
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    fn n(&self) -> usize {
        self.a.nrows()
    }

    /// `L A^T x`.
    fn scores(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| self.lipschitz * (0..n).map(|j| self.a[(j, i)] * x[j]).sum::<f64>())
            .collect()
    }

    fn apply(&self, p: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|j| (0..n).map(|i| self.a[(j, i)] * p[i]).sum())
            .collect()
    }

    /// Mixed strategy `A^{-1} y` behind a dual point, if `A` is invertible.
    pub fn strategy_of(&self, y: &[f64]) -> Option<Vec<f64>> {
        let lu = self.lu.as_ref()?;
        let p = lu.solve(&DVector::from_column_slice(y))?;
        Some(p.iter().copied().collect())
    }
}

impl SmoothOracle for MatrixGameInstance {
    fn dim(&self) -> usize {
        self.n()
    }

    fn eval_f(&self, x: &[f64]) -> f64 {
        logsumexp(&self.scores(x)) / self.lipschitz
    }

    fn grad_f(&self, x: &[f64]) -> Vec<f64> {
        self.apply(&softmax(&self.scores(x)))
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

impl CompositeOracle for MatrixGameInstance {
    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    /// `softmax(-v / alpha)`, value `-alpha logsumexp(-v / alpha) + alpha log n`.
    fn glmo(&self, v: &[f64]) -> Glmo {
        let scaled: Vec<f64> = v.iter().map(|vi| -vi / self.alpha).collect();
        Glmo {
            argmin: softmax(&scaled),
            min_value: -self.alpha * logsumexp(&scaled) + self.alpha * (self.n() as f64).ln(),
        }
    }

    fn eval_w(&self, x: &[f64]) -> f64 {
        neg_entropy(x) + (self.n() as f64).ln()
    }

    fn w_bound(&self) -> f64 {
        (self.n() as f64).ln()
    }
}

impl ConjugateOracle for MatrixGameInstance {
    fn grad_h_alpha_conj(&self, z: &[f64]) -> Vec<f64> {
        self.glmo(z).argmin
    }

    fn eval_h_alpha_conj(&self, z: &[f64]) -> f64 {
        -self.glmo(z).min_value
    }

    fn eval_f_conj(&self, y: &[f64]) -> Result<Extended> {
        let p = self.strategy_of(y).ok_or(Error::Unsupported("f*"))?;
        if self.domain.violation(&p) > DOMAIN_TOL {
            return Ok(Extended::INFINITY);
        }
        let p: Vec<f64> = p.into_iter().map(|v| v.max(0.0)).collect();
        Ok(Extended::finite(neg_entropy(&p) / self.lipschitz))
    }

    fn supports_f_conj(&self) -> bool {
        self.lu.is_some()
    }

    /// Entropic mirror step for `L f^* = H(A^{-1} .)`. In strategy space it
    /// is the multiplicative update `p+ ∝ p^theta exp((1 - theta) L A^T c)`;
    /// it is evaluated in log space as `g+ = ∇f(xi+)` with the threaded
    /// subgradient `xi+ = theta xi + (1 - theta) c`.
    fn bregman_prox(&self, req: &ProxRequest<'_>) -> Result<ProxStep> {
        if self.lu.is_none() {
            return Err(Error::Unsupported("Bregman prox"));
        }
        let w = req.prox_weight * self.lipschitz;
        let theta = w / (req.step + w);
        let subgrad: Vec<f64> = req
            .anchor_subgrad
            .iter()
            .zip(req.center)
            .map(|(xi, c)| theta * xi + (1.0 - theta) * c)
            .collect();
        Ok(ProxStep {
            point: self.grad_f(&subgrad),
            subgrad,
        })
    }

    fn supports_bregman_prox(&self) -> bool {
        self.lu.is_some()
    }

    /// `max_i -log p0_i`: the largest KL divergence from the strategy behind
    /// `g0` is attained at a vertex.
    fn bregman_radius(&self, _g0: &[f64], subgrad0: &[f64]) -> Option<f64> {
        self.lu.as_ref()?;
        let p0 = softmax(&self.scores(subgrad0));
        let pmin = p0.iter().copied().fold(f64::INFINITY, f64::min);
        Some(-pmin.max(PROBABILITY_FLOOR).ln())
    }
}

impl Problem for MatrixGameInstance {
    fn name(&self) -> &str {
        "game"
    }

    fn norm_kind(&self) -> NormKind {
        NormKind::Ell1WithDualEllInf
    }

    fn default_start(&self) -> Vec<f64> {
        vec![1.0 / self.n() as f64; self.n()]
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

#[cfg(test)]
mod tests {
    use super::*;

    fn i2(alpha: f64) -> MatrixGameInstance {
        MatrixGameInstance::from_payoff(vec![vec![1.0, 0.0], vec![0.0, 1.0]], alpha, 1.0).unwrap()
    }

    #[test]
    fn symmetric_point_values() {
        let g = i2(1.0);
        let x = [0.5, 0.5];
        assert!((g.eval_f(&x) - (0.5 + 2f64.ln())).abs() < 1e-15);
        assert_eq!(g.grad_f(&x), vec![0.5, 0.5]);
        let p = g.oracles().unwrap();
        assert!((p.phi_alpha(&x).unwrap() - (0.5 + 2f64.ln())).abs() < 1e-15);
        assert!((p.psi_alpha(&x).unwrap() + 0.5 + 2f64.ln()).abs() < 1e-15);
        assert!(p.pd_gap(&x, &x).unwrap().abs() < 1e-15);
    }

    #[test]
    fn glmo_examples() {
        let g = i2(1.0);
        let out = g.glmo(&[0.0, 3f64.ln()]);
        assert!((out.argmin[0] - 0.75).abs() < 1e-15 && (out.argmin[1] - 0.25).abs() < 1e-15);
        let c = g.glmo(&[2.5, 2.5]);
        assert_eq!(c.argmin, vec![0.5, 0.5]);
    }

    #[test]
    fn payoff_is_normalized() {
        let g = MatrixGameInstance::generate(6, 3, 0.1, 1.0).unwrap();
        let a = DMatrix::from_fn(6, 6, |i, j| g.payoff()[i][j]);
        assert!((a.singular_values().max() - 1.0).abs() < 1e-12);
        assert!(g.supports_f_conj());
        let h = MatrixGameInstance::generate(6, 3, 0.1, 1.0).unwrap();
        assert_eq!(g.payoff(), h.payoff());
    }

    #[test]
    fn singular_payoff_has_no_conjugate() {
        let g = MatrixGameInstance::from_payoff(vec![vec![1.0, 1.0], vec![1.0, 1.0]], 1.0, 1.0)
            .unwrap();
        assert!(!g.supports_f_conj());
        let p = g.oracles().unwrap();
        assert!(matches!(
            p.psi_alpha(&[0.5, 0.5]),
            Err(Error::Unsupported("f*"))
        ));
        assert!(p.phi_alpha(&[0.5, 0.5]).is_ok());
    }

    #[test]
    fn outside_range_is_infinite() {
        let g = i2(1.0);
        assert!(!g.eval_f_conj(&[0.9, 0.9]).unwrap().is_finite());
    }

    #[test]
    fn rejects_bad_payoffs() {
        assert!(MatrixGameInstance::from_payoff(vec![], 1.0, 1.0).is_err());
        assert!(MatrixGameInstance::from_payoff(vec![vec![1.0, 2.0]], 1.0, 1.0).is_err());
        assert!(MatrixGameInstance::from_payoff(vec![vec![0.0]], 1.0, 1.0).is_err());
        assert!(MatrixGameInstance::from_payoff(vec![vec![1.0]], -1.0, 1.0).is_err());
    }

    #[test]
    fn radius_at_uniform_is_log_n() {
        let g = i2(1.0);
        let r = g.bregman_radius(&[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert!((r - 2f64.ln()).abs() < 1e-15);
    }
}
