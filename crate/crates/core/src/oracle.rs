//! Oracle interfaces for the regularized problem
//!
//! ```text
//! phi_alpha(x) = f(x) + h(x) + alpha * w(x)
//! psi_alpha(z) = (h^alpha)^*(-z) + f^*(z)
//! ```
//!
//! An instance implements [`SmoothOracle`] for `f`, [`CompositeOracle`] for
//! `h^alpha = h + alpha * w` (through its generalized linear minimization
//! oracle) and [`ConjugateOracle`] for whatever conjugate quantities it can
//! evaluate. [`ProblemOracles`] bundles them behind a cheap, shareable handle.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use crate::numerics::dot;
use crate::{Error, Result};

/// Tolerance for domain membership tests.
pub const DOMAIN_TOL: f64 = 1e-9;

/// Finite stand-in for `+inf` in serialized or printed values.
pub const INFINITY_SENTINEL: f64 = 1e300;

/// Extended real value: finite, or `+inf` carried as a flag next to a large
/// sentinel instead of an overflowing float.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extended {
    value: f64,
    finite: bool,
}

impl Extended {
    pub const INFINITY: Extended = Extended {
        value: INFINITY_SENTINEL,
        finite: false,
    };

    pub fn finite(value: f64) -> Self {
        Self {
            value,
            finite: true,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.finite
    }

    /// The value, or [`INFINITY_SENTINEL`] when infinite.
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn into_option(self) -> Option<f64> {
        self.finite.then_some(self.value)
    }
}

/// Pairing used for `||.||` / `||.||_*` in smoothness and strong convexity
/// constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    Euclidean,
    Ell1WithDualEllInf,
}

/// `dom h` for the shipped instance families.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Simplex { n: usize },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Simplex { n } => *n,
            Domain::Box { lo, .. } => lo.len(),
        }
    }

    /// Largest constraint violation of `x`, 0 when feasible.
    pub fn violation(&self, x: &[f64]) -> f64 {
        match self {
            Domain::Simplex { .. } => {
                let sum: f64 = x.iter().sum();
                let neg = x.iter().fold(0.0_f64, |m, &v| m.max(-v));
                neg.max((sum - 1.0).abs())
            }
            Domain::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .fold(0.0_f64, |m, (&v, (&l, &h))| m.max(l - v).max(v - h)),
        }
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let violation = self.violation(x);
        if violation > DOMAIN_TOL || violation.is_nan() {
            return Err(Error::DomainViolation {
                domain: self.name(),
                violation,
            });
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Domain::Simplex { .. } => "simplex",
            Domain::Box { .. } => "box",
        }
    }
}

/// Output of the generalized linear minimization oracle
/// `min_x <v, x> + h(x) + alpha * w(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Glmo {
    pub argmin: Vec<f64>,
    pub min_value: f64,
}

/// Bregman proximal subproblem of the gradient extrapolation method with
/// distance generating function `nu^* = L f^*`:
///
/// ```text
/// argmin_g  step * (<-center, g> + f^*(g)) + prox_weight * D_{L f^*}(g || anchor)
/// ```
///
/// where the divergence is linearized with `anchor_subgrad` in `∂f^*(anchor)`.
#[derive(Clone, Copy, Debug)]
pub struct ProxRequest<'a> {
    pub center: &'a [f64],
    pub anchor: &'a [f64],
    pub anchor_subgrad: &'a [f64],
    pub step: f64,
    pub prox_weight: f64,
}

/// Minimizer of a [`ProxRequest`] with the subgradient of `f^*` at it that
/// its optimality condition produces.
#[derive(Clone, Debug, PartialEq)]
pub struct ProxStep {
    pub point: Vec<f64>,
    pub subgrad: Vec<f64>,
}

/// The smooth part `f`.
pub trait SmoothOracle {
    fn dim(&self) -> usize;
    fn eval_f(&self, x: &[f64]) -> f64;
    fn grad_f(&self, x: &[f64]) -> Vec<f64>;
    /// Smoothness constant `L` w.r.t. the instance norm.
    fn lipschitz(&self) -> f64;
}

/// The composite part `h + alpha * w`.
pub trait CompositeOracle {
    fn alpha(&self) -> f64;
    fn domain(&self) -> &Domain;
    fn glmo(&self, v: &[f64]) -> Glmo;
    /// `w(x)` for `x` in `dom h`.
    fn eval_w(&self, x: &[f64]) -> f64;
    /// `M = max_{dom h} w`.
    fn w_bound(&self) -> f64;

    /// `h(x)`: zero on the domain for the indicator-type `h` shipped here.
    fn eval_h(&self, x: &[f64]) -> Extended {
        if self.domain().violation(x) <= DOMAIN_TOL {
            Extended::finite(0.0)
        } else {
            Extended::INFINITY
        }
    }

    fn eval_h_alpha(&self, x: &[f64]) -> Extended {
        let h = self.eval_h(x);
        if h.is_finite() {
            Extended::finite(h.value() + self.alpha() * self.eval_w(x))
        } else {
            h
        }
    }
}

/// Conjugate-side quantities. Only the gradient and value of `(h^alpha)^*`
/// are mandatory; everything involving `f^*` is optional.
pub trait ConjugateOracle {
    /// `∇(h^alpha)^*(-z)`.
    fn grad_h_alpha_conj(&self, z: &[f64]) -> Vec<f64>;

    /// `(h^alpha)^*(-z)`.
    fn eval_h_alpha_conj(&self, z: &[f64]) -> f64;

    /// `f^*(z)`; `+inf` outside `dom f^*`.
    fn eval_f_conj(&self, _z: &[f64]) -> Result<Extended> {
        Err(Error::Unsupported("f*"))
    }

    fn supports_f_conj(&self) -> bool {
        false
    }

    fn bregman_prox(&self, _req: &ProxRequest<'_>) -> Result<ProxStep> {
        Err(Error::Unsupported("Bregman prox"))
    }

    fn supports_bregman_prox(&self) -> bool {
        false
    }

    /// `max_{g in dom f^*} D_{L f^*}(g || g0)` with the divergence linearized
    /// at `subgrad0`, when finite and computable.
    fn bregman_radius(&self, _g0: &[f64], _subgrad0: &[f64]) -> Option<f64> {
        None
    }
}

/// A complete regularized problem instance.
pub trait Problem:
    SmoothOracle + CompositeOracle + ConjugateOracle + Send + Sync + fmt::Debug
{
    fn name(&self) -> &str;

    fn norm_kind(&self) -> NormKind {
        NormKind::Euclidean
    }

    /// Default starting point `y0` in `dom h`.
    fn default_start(&self) -> Vec<f64>;

    /// The same instance with a different regularization weight.
    fn with_alpha(&self, alpha: f64) -> Result<Arc<dyn Problem>>;
}

/// Shared, immutable handle to a [`Problem`].
#[derive(Clone, Debug)]
pub struct ProblemOracles(Arc<dyn Problem>);

impl Deref for ProblemOracles {
    type Target = dyn Problem;

    fn deref(&self) -> &Self::Target {
        &*self.0
    }
}

impl ProblemOracles {
    pub fn new<P: Problem + 'static>(problem: P) -> Result<Self> {
        Self::from_arc(Arc::new(problem))
    }

    pub fn from_arc(problem: Arc<dyn Problem>) -> Result<Self> {
        if !(problem.lipschitz() > 0.0 && problem.lipschitz().is_finite()) {
            return Err(Error::invalid(
                "L",
                format!("must be positive, got {}", problem.lipschitz()),
            ));
        }
        if !(problem.alpha() > 0.0 && problem.alpha().is_finite()) {
            return Err(Error::invalid(
                "alpha",
                format!("must be positive, got {}", problem.alpha()),
            ));
        }
        Ok(Self(problem))
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(
                "alpha",
                format!("must be positive, got {alpha}"),
            ));
        }
        Self::from_arc(self.0.with_alpha(alpha)?)
    }

    /// `phi^alpha(x) = f(x) + h(x) + alpha w(x)`.
    pub fn phi_alpha(&self, x: &[f64]) -> Result<f64> {
        phi_alpha(self, x)
    }

    /// Unregularized `phi(x) = f(x) + h(x)`.
    pub fn phi(&self, x: &[f64]) -> Result<f64> {
        self.domain().check(x)?;
        Ok(self.eval_f(x) + self.eval_h(x).value())
    }

    pub fn psi_alpha(&self, z: &[f64]) -> Result<f64> {
        psi_alpha(self, z)
    }

    pub fn pd_gap(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        pd_gap(self, x, z)
    }
}

pub fn phi_alpha(problem: &ProblemOracles, x: &[f64]) -> Result<f64> {
    problem.domain().check(x)?;
    Ok(problem.eval_f(x) + problem.eval_h_alpha(x).value())
}

/// `psi^alpha(z) = (h^alpha)^*(-z) + f^*(z)`, with the composite conjugate
/// taken from the GLMO optimum.
pub fn psi_alpha(problem: &ProblemOracles, z: &[f64]) -> Result<f64> {
    if z.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: z.len(),
        });
    }
    let f_conj = problem.eval_f_conj(z)?;
    if !f_conj.is_finite() {
        return Err(Error::DomainViolation {
            domain: "dom f*",
            violation: f64::INFINITY,
        });
    }
    Ok(-problem.glmo(z).min_value + f_conj.value())
}

/// `phi^alpha(x) + psi^alpha(z)`, nonnegative by weak duality.
pub fn pd_gap(problem: &ProblemOracles, x: &[f64], z: &[f64]) -> Result<f64> {
    Ok(phi_alpha(problem, x)? + psi_alpha(problem, z)?)
}

/// `f(x) + f^*(∇f(x)) - <x, ∇f(x)>`, zero for a consistent conjugate pair.
pub fn fenchel_young_residual(problem: &ProblemOracles, x: &[f64]) -> Result<f64> {
    let g = problem.grad_f(x);
    let conj = problem.eval_f_conj(&g)?;
    Ok(problem.eval_f(x) + conj.value() - dot(x, &g))
}
