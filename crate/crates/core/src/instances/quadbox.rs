//! `f = (L/2)||x||^2` over a box with `w = ||x||^2 / 2`. Every oracle is
//! closed form, which makes this the reference testbed for hand-computed
//! iterates.

use std::sync::Arc;

use crate::numerics::{dot, norm2_sq};
use crate::oracle::{
    CompositeOracle, ConjugateOracle, Domain, Extended, Glmo, Problem, ProblemOracles, ProxRequest,
    ProxStep, SmoothOracle,
};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct QuadBoxToy {
    alpha: f64,
    lipschitz: f64,
    domain: Domain,
}

impl QuadBoxToy {
    /// Box `[-1, 1]^n`.
    pub fn new(n: usize, alpha: f64, lipschitz: f64) -> Result<Self> {
        Self::with_box(n, alpha, lipschitz, -1.0, 1.0)
    }

    pub fn with_box(n: usize, alpha: f64, lipschitz: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::with_bounds(alpha, lipschitz, vec![lo; n], vec![hi; n])
    }

    pub fn with_bounds(alpha: f64, lipschitz: f64, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(l, h)| l > h || !l.is_finite() || !h.is_finite())
        {
            return Err(Error::invalid("box", "need finite lo <= hi"));
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
        Ok(Self {
            alpha,
            lipschitz,
            domain: Domain::Box { lo, hi },
        })
    }

    pub fn oracles(self) -> Result<ProblemOracles> {
        ProblemOracles::new(self)
    }

    fn bounds(&self) -> (&[f64], &[f64]) {
        match &self.domain {
            Domain::Box { lo, hi } => (lo, hi),
            Domain::Simplex { .. } => unreachable!("quadbox domain is a box"),
        }
    }

    /// Minimizer of `phi^alpha`: the origin clipped to the box.
    pub fn minimizer(&self) -> Vec<f64> {
        let (lo, hi) = self.bounds();
        lo.iter()
            .zip(hi)
            .map(|(&l, &h)| 0.0_f64.clamp(l, h))
            .collect()
    }
}

impl SmoothOracle for QuadBoxToy {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn eval_f(&self, x: &[f64]) -> f64 {
        0.5 * self.lipschitz * norm2_sq(x)
    }

    fn grad_f(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| self.lipschitz * v).collect()
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

impl CompositeOracle for QuadBoxToy {
    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn glmo(&self, v: &[f64]) -> Glmo {
        let (lo, hi) = self.bounds();
        let argmin: Vec<f64> = v
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(&vi, (&l, &h))| (-vi / self.alpha).clamp(l, h))
            .collect();
        let min_value = dot(v, &argmin) + 0.5 * self.alpha * norm2_sq(&argmin);
        Glmo { argmin, min_value }
    }

    fn eval_w(&self, x: &[f64]) -> f64 {
        0.5 * norm2_sq(x)
    }

    fn w_bound(&self) -> f64 {
        let (lo, hi) = self.bounds();
        0.5 * lo
            .iter()
            .zip(hi)
            .map(|(l, h)| (l * l).max(h * h))
            .sum::<f64>()
    }
}

impl ConjugateOracle for QuadBoxToy {
    fn grad_h_alpha_conj(&self, z: &[f64]) -> Vec<f64> {
        self.glmo(z).argmin
    }

    fn eval_h_alpha_conj(&self, z: &[f64]) -> f64 {
        -self.glmo(z).min_value
    }

    fn eval_f_conj(&self, z: &[f64]) -> Result<Extended> {
        Ok(Extended::finite(norm2_sq(z) / (2.0 * self.lipschitz)))
    }

    fn supports_f_conj(&self) -> bool {
        true
    }

    /// With `L f^* = ||.||^2 / 2` the subproblem is an unconstrained quadratic.
    fn bregman_prox(&self, req: &ProxRequest<'_>) -> Result<ProxStep> {
        let denom = req.step / self.lipschitz + req.prox_weight;
        let point: Vec<f64> = req
            .center
            .iter()
            .zip(req.anchor)
            .map(|(c, g)| (req.step * c + req.prox_weight * g) / denom)
            .collect();
        let subgrad = point.iter().map(|g| g / self.lipschitz).collect();
        Ok(ProxStep { point, subgrad })
    }

    fn supports_bregman_prox(&self) -> bool {
        true
    }
}

impl Problem for QuadBoxToy {
    fn name(&self) -> &str {
        "quadbox"
    }

    fn default_start(&self) -> Vec<f64> {
        self.bounds().1.to_vec()
    }

    fn with_alpha(&self, alpha: f64) -> Result<Arc<dyn Problem>> {
        let (lo, hi) = self.bounds();
        Ok(Arc::new(Self::with_bounds(
            alpha,
            self.lipschitz,
            lo.to_vec(),
            hi.to_vec(),
        )?))
    }
}
