//! Pure step functions for the averaging methods.
//!
//! | name             | averages | certificate                              |
//! |------------------|----------|------------------------------------------|
//! | `mda`            | one      | primal model at `y_k`                     |
//! | `gcg`            | one      | single-cut dual model at `z_k`            |
//! | `agg_gcg_primal` | two      | none (primal-dual gap only)               |
//! | `agg_gcg_dual`   | two      | none (primal-dual gap only)               |
//! | `taa`            | three    | primal model at `y_k`                     |
//! | `gem`            | three    | aggregated dual model at `z_k`            |
//!
//! Every state is a value: `step` borrows the old state and returns a new one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::acp::AcpAggregator;
use crate::numerics::lerp;
use crate::oracle::ProblemOracles;
use crate::{Error, Result};

/// Above this magnitude the GEM scalars are rescaled.
const GEM_RESCALE_AT: f64 = 1e100;

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            name,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

/// `eta = alpha / (L + alpha)`.
pub fn schedule_eta(alpha: f64, lipschitz: f64) -> Result<f64> {
    check_positive("alpha", alpha)?;
    check_positive("L", lipschitz)?;
    Ok(alpha / (lipschitz + alpha))
}

/// `lambda = 2 alpha / (alpha + sqrt(alpha^2 + 4 L alpha))`, the root in
/// `(0, 1]` of `L lambda^2 = alpha (1 - lambda)`.
pub fn schedule_lambda(alpha: f64, lipschitz: f64) -> Result<f64> {
    check_positive("alpha", alpha)?;
    check_positive("L", lipschitz)?;
    Ok(2.0 * alpha / (alpha + (alpha * alpha + 4.0 * lipschitz * alpha).sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Mda,
    Gcg,
    AggGcgPrimal,
    AggGcgDual,
    Taa,
    Gem,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Mda,
        Algorithm::Gcg,
        Algorithm::AggGcgPrimal,
        Algorithm::AggGcgDual,
        Algorithm::Taa,
        Algorithm::Gem,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Mda => "mda",
            Algorithm::Gcg => "gcg",
            Algorithm::AggGcgPrimal => "agg_gcg_primal",
            Algorithm::AggGcgDual => "agg_gcg_dual",
            Algorithm::Taa => "taa",
            Algorithm::Gem => "gem",
        }
    }

    /// Whether the method works with `f^*` directly.
    pub fn needs_conjugate(self) -> bool {
        matches!(
            self,
            Algorithm::Gcg | Algorithm::AggGcgDual | Algorithm::Gem
        )
    }

    /// Whether the method stops on a model gap rather than the pd gap.
    pub fn has_certificate(self) -> bool {
        !matches!(self, Algorithm::AggGcgPrimal | Algorithm::AggGcgDual)
    }

    /// Fails with the missing capability when `problem` cannot run `self`.
    pub fn check_compatible(self, problem: &ProblemOracles) -> Result<()> {
        if self.needs_conjugate() && !problem.supports_f_conj() {
            return Err(Error::Unsupported("f*"));
        }
        if self == Algorithm::Gem && !problem.supports_bregman_prox() {
            return Err(Error::Unsupported("Bregman prox"));
        }
        Ok(())
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| {
                Error::invalid(
                    "algorithm",
                    format!("unknown algorithm {s:?}; expected one of mda, gcg, agg_gcg_primal, agg_gcg_dual, taa, gem"),
                )
            })
    }
}

fn primal_cut(problem: &ProblemOracles, x: &[f64]) -> (f64, Vec<f64>) {
    (problem.eval_f(x), problem.grad_f(x))
}

/// One-average primal method.
#[derive(Clone, Debug, PartialEq)]
pub struct MdaState {
    pub k: usize,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub y: Vec<f64>,
    pub eta: f64,
    pub acp: AcpAggregator,
}

impl MdaState {
    /// `s_0 = ∇f(y_0)`, `x_0 = glmo(s_0)`, model with the single cut at `y_0`.
    pub fn init(problem: &ProblemOracles, y0: &[f64]) -> Result<Self> {
        problem.domain().check(y0)?;
        let eta = schedule_eta(problem.alpha(), problem.lipschitz())?;
        let (f0, s) = primal_cut(problem, y0);
        Ok(Self {
            k: 0,
            x: problem.glmo(&s).argmin,
            acp: AcpAggregator::init(y0, f0, &s),
            s,
            y: y0.to_vec(),
            eta,
        })
    }

    pub fn step(&self, problem: &ProblemOracles) -> Result<Self> {
        let (fx, gx) = primal_cut(problem, &self.x);
        let s = lerp(&self.s, &gx, self.eta);
        let acp = self.acp.update(self.eta, &self.x, fx, &gx)?;
        let x = problem.glmo(&s).argmin;
        let y = lerp(&self.y, &x, self.eta);
        Ok(Self {
            k: self.k + 1,
            x,
            s,
            y,
            eta: self.eta,
            acp,
        })
    }
}

/// One-average dual method (generalized conditional gradient on the dual).
#[derive(Clone, Debug, PartialEq)]
pub struct GcgState {
    pub k: usize,
    pub z: Vec<f64>,
    /// `x_k = ∇(h^alpha)^*(-z_k)`.
    pub x: Vec<f64>,
    /// `zbar_k = ∇f(x_k)`.
    pub zbar: Vec<f64>,
    pub ytilde: Vec<f64>,
    pub eta: f64,
}

impl GcgState {
    /// `ytilde_0 = x_0 = ∇(h^alpha)^*(-z_0)`.
    pub fn init(problem: &ProblemOracles, z0: &[f64]) -> Result<Self> {
        Algorithm::Gcg.check_compatible(problem)?;
        let eta = schedule_eta(problem.alpha(), problem.lipschitz())?;
        let x = problem.grad_h_alpha_conj(z0);
        Ok(Self {
            k: 0,
            z: z0.to_vec(),
            zbar: problem.grad_f(&x),
            ytilde: x.clone(),
            x,
            eta,
        })
    }

    pub fn step(&self, problem: &ProblemOracles) -> Result<Self> {
        let ytilde = lerp(&self.ytilde, &self.x, self.eta);
        let z = lerp(&self.z, &self.zbar, self.eta);
        let x = problem.grad_h_alpha_conj(&z);
        Ok(Self {
            k: self.k + 1,
            zbar: problem.grad_f(&x),
            z,
            x,
            ytilde,
            eta: self.eta,
        })
    }

    /// The single-cut dual model at `z_k`.
    pub fn model(&self, problem: &ProblemOracles) -> AcpAggregator {
        AcpAggregator::init_dual(problem, &self.z)
    }
}

/// Two-average primal method. The gradient enters `s` one step late.
#[derive(Clone, Debug, PartialEq)]
pub struct AggGcgPrimalState {
    pub k: usize,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    /// Latest GLMO output `x_k`; `x_0` is set to `y_0`.
    pub x: Vec<f64>,
    pub eta: f64,
    /// Diagnostic model, kept when `s_0 = ∇f(y_0)`.
    pub acp: Option<AcpAggregator>,
}

impl AggGcgPrimalState {
    /// `s0 = None` selects `s_0 = ∇f(y_0)`.
    pub fn init(problem: &ProblemOracles, y0: &[f64], s0: Option<&[f64]>) -> Result<Self> {
        problem.domain().check(y0)?;
        let eta = schedule_eta(problem.alpha(), problem.lipschitz())?;
        let (f0, g0) = primal_cut(problem, y0);
        let (s, acp) = match s0 {
            Some(s0) if s0 != g0.as_slice() => (s0.to_vec(), None),
            _ => (g0.clone(), Some(AcpAggregator::init(y0, f0, &g0))),
        };
        Ok(Self {
            k: 0,
            y: y0.to_vec(),
            s,
            x: y0.to_vec(),
            eta,
            acp,
        })
    }

    pub fn step(&self, problem: &ProblemOracles) -> Result<Self> {
        let x = problem.glmo(&self.s).argmin;
        let (fy, gy) = primal_cut(problem, &self.y);
        let acp = match &self.acp {
            Some(m) => Some(m.update(self.eta, &self.y, fy, &gy)?),
            None => None,
        };
        Ok(Self {
            k: self.k + 1,
            y: lerp(&self.y, &x, self.eta),
            s: lerp(&self.s, &gy, self.eta),
            x,
            eta: self.eta,
            acp,
        })
    }
}

/// Two-average dual method, the mirror image of [`AggGcgPrimalState`].
#[derive(Clone, Debug, PartialEq)]
pub struct AggGcgDualState {
    pub k: usize,
    pub z: Vec<f64>,
    pub v: Vec<f64>,
    /// Latest response `zbar_k = ∇f(v_{k-1})`; `zbar_0` is set to `z_0`.
    pub zbar: Vec<f64>,
    pub eta: f64,
    /// Diagnostic dual model, kept when `v_0 = ∇(h^alpha)^*(-z_0)`.
    pub acp: Option<AcpAggregator>,
}

impl AggGcgDualState {
    /// `v0 = None` selects `v_0 = ∇(h^alpha)^*(-z_0)`.
    pub fn init(problem: &ProblemOracles, z0: &[f64], v0: Option<&[f64]>) -> Result<Self> {
        Algorithm::AggGcgDual.check_compatible(problem)?;
        let eta = schedule_eta(problem.alpha(), problem.lipschitz())?;
        let x0 = problem.grad_h_alpha_conj(z0);
        let (v, acp) = match v0 {
            Some(v0) if v0 != x0.as_slice() => (v0.to_vec(), None),
            _ => (x0, Some(AcpAggregator::init_dual(problem, z0))),
        };
        Ok(Self {
            k: 0,
            z: z0.to_vec(),
            v,
            zbar: z0.to_vec(),
            eta,
            acp,
        })
    }

    pub fn step(&self, problem: &ProblemOracles) -> Result<Self> {
        let zbar = problem.grad_f(&self.v);
        let x = problem.grad_h_alpha_conj(&self.z);
        let acp = match &self.acp {
            Some(m) => Some(m.update_dual(problem, self.eta, &self.z)?),
            None => None,
        };
        Ok(Self {
            k: self.k + 1,
            z: lerp(&self.z, &zbar, self.eta),
            v: lerp(&self.v, &x, self.eta),
            zbar,
            eta: self.eta,
            acp,
        })
    }
}

/// Three-average primal method.
#[derive(Clone, Debug, PartialEq)]
pub struct TaaState {
    pub k: usize,
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    /// Latest linearization point; `xtilde_0 = y_0`.
    pub xtilde: Vec<f64>,
    pub s: Vec<f64>,
    pub lambda: f64,
    pub acp: AcpAggregator,
}

impl TaaState {
    pub fn init(problem: &ProblemOracles, y0: &[f64]) -> Result<Self> {
        let lambda = schedule_lambda(problem.alpha(), problem.lipschitz())?;
        Self::init_with_lambda(problem, y0, lambda)
    }

    /// Runs with an arbitrary weight in `(0, 1]`; only the default weight
    /// carries the convergence guarantee.
    pub fn init_with_lambda(problem: &ProblemOracles, y0: &[f64], lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::invalid(
                "lambda",
                format!("must lie in (0, 1], got {lambda}"),
            ));
        }
        problem.domain().check(y0)?;
        let (f0, s) = primal_cut(problem, y0);
        Ok(Self {
            k: 0,
            y: y0.to_vec(),
            x: problem.glmo(&s).argmin,
            xtilde: y0.to_vec(),
            acp: AcpAggregator::init(y0, f0, &s),
            s,
            lambda,
        })
    }

    pub fn step(&self, problem: &ProblemOracles) -> Result<Self> {
        let l = self.lambda;
        let xtilde = lerp(&self.y, &self.x, l);
        let (fx, gx) = primal_cut(problem, &xtilde);
        let s = lerp(&self.s, &gx, l);
        let acp = self.acp.update(l, &xtilde, fx, &gx)?;
        let x = problem.glmo(&s).argmin;
        Ok(Self {
            k: self.k + 1,
            y: lerp(&self.y, &x, l),
            x,
            xtilde,
            s,
            lambda: l,
            acp,
        })
    }
}

/// Gradient extrapolation method on the dual with `nu^* = L f^*`.
///
/// The scalar recursion is homogeneous of degree one in `(tau, a, A)` and
/// the method only uses their ratios, so the stored values are divided by
/// `exp(log_scale)` whenever `A` grows past [`GEM_RESCALE_AT`].
#[derive(Clone, Debug, PartialEq)]
pub struct GemState {
    pub k: usize,
    pub g: Vec<f64>,
    /// Subgradient of `f^*` at `g` used to linearize the divergence.
    pub subgrad: Vec<f64>,
    pub z: Vec<f64>,
    pub v: Vec<f64>,
    pub v_prev: Vec<f64>,
    pub vhat: Vec<f64>,
    pub tau: f64,
    pub a_prev: f64,
    pub big_a: f64,
    pub log_scale: f64,
    pub dual_acp: AcpAggregator,
}

/// Scalars `(a_k, tau_{k+1}, A_{k+1})` from `(tau_k, A_k)`.
pub fn gem_scalars(tau: f64, big_a: f64, alpha: f64, lipschitz: f64) -> (f64, f64, f64) {
    let a = 0.5 * (tau + (tau * tau + 4.0 * tau * big_a).sqrt());
    (a, tau + alpha * a / lipschitz, big_a + a)
}

impl GemState {
    /// Starts from `g_0` with a known subgradient `subgrad0` of `f^*` at it.
    pub fn init(problem: &ProblemOracles, g0: &[f64], subgrad0: &[f64]) -> Result<Self> {
        Algorithm::Gem.check_compatible(problem)?;
        if !problem.eval_f_conj(g0)?.is_finite() {
            return Err(Error::DomainViolation {
                domain: "dom f*",
                violation: f64::INFINITY,
            });
        }
        let v = problem.grad_h_alpha_conj(g0);
        Ok(Self {
            k: 0,
            g: g0.to_vec(),
            subgrad: subgrad0.to_vec(),
            z: g0.to_vec(),
            v_prev: v.clone(),
            vhat: v.clone(),
            v,
            tau: problem.alpha() / problem.lipschitz(),
            a_prev: 0.0,
            big_a: 1.0,
            log_scale: 0.0,
            dual_acp: AcpAggregator::init_dual(problem, g0),
        })
    }

    /// `g_0 = ∇f(y_0)` with subgradient `y_0`.
    pub fn init_from_primal(problem: &ProblemOracles, y0: &[f64]) -> Result<Self> {
        problem.domain().check(y0)?;
        Self::init(problem, &problem.grad_f(y0), y0)
    }

    pub fn step(&self, problem: &ProblemOracles) -> Result<Self> {
        let (alpha, lipschitz) = (problem.alpha(), problem.lipschitz());
        let (a, tau_next, a_next) = gem_scalars(self.tau, self.big_a, alpha, lipschitz);
        let ratio = self.a_prev / a;
        let vhat: Vec<f64> = self
            .v
            .iter()
            .zip(&self.v_prev)
            .map(|(v, vp)| v + ratio * (v - vp))
            .collect();
        let prox = problem.bregman_prox(&crate::oracle::ProxRequest {
            center: &vhat,
            anchor: &self.g,
            anchor_subgrad: &self.subgrad,
            step: a,
            prox_weight: self.tau / alpha,
        })?;
        let weight = a / a_next;
        let z = lerp(&self.z, &prox.point, weight);
        let v = problem.grad_h_alpha_conj(&z);
        let dual_acp = self.dual_acp.update_dual(problem, weight, &z)?;
        let mut next = Self {
            k: self.k + 1,
            g: prox.point,
            subgrad: prox.subgrad,
            z,
            v_prev: self.v.clone(),
            v,
            vhat,
            tau: tau_next,
            a_prev: a,
            big_a: a_next,
            log_scale: self.log_scale,
            dual_acp,
        };
        if next.big_a > GEM_RESCALE_AT {
            let c = next.big_a;
            next.tau /= c;
            next.a_prev /= c;
            next.big_a = 1.0;
            next.log_scale += c.ln();
        }
        Ok(next)
    }

    /// `log A_k`.
    pub fn log_big_a(&self) -> f64 {
        self.big_a.ln() + self.log_scale
    }
}

/// Any of the six methods, for drivers that dispatch at run time.
#[derive(Clone, Debug, PartialEq)]
pub enum AlgorithmState {
    Mda(MdaState),
    Gcg(GcgState),
    AggGcgPrimal(AggGcgPrimalState),
    AggGcgDual(AggGcgDualState),
    Taa(TaaState),
    Gem(GemState),
}

impl AlgorithmState {
    /// Standard initialization from a primal start `y0`; dual methods start
    /// at `z_0 = ∇f(y_0)` (and `v_0 = y_0` for the two-average dual).
    pub fn init(algorithm: Algorithm, problem: &ProblemOracles, y0: &[f64]) -> Result<Self> {
        algorithm.check_compatible(problem)?;
        problem.domain().check(y0)?;
        Ok(match algorithm {
            Algorithm::Mda => Self::Mda(MdaState::init(problem, y0)?),
            Algorithm::Gcg => Self::Gcg(GcgState::init(problem, &problem.grad_f(y0))?),
            Algorithm::AggGcgPrimal => {
                Self::AggGcgPrimal(AggGcgPrimalState::init(problem, y0, None)?)
            }
            Algorithm::AggGcgDual => Self::AggGcgDual(AggGcgDualState::init(
                problem,
                &problem.grad_f(y0),
                Some(y0),
            )?),
            Algorithm::Taa => Self::Taa(TaaState::init(problem, y0)?),
            Algorithm::Gem => Self::Gem(GemState::init_from_primal(problem, y0)?),
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            Self::Mda(_) => Algorithm::Mda,
            Self::Gcg(_) => Algorithm::Gcg,
            Self::AggGcgPrimal(_) => Algorithm::AggGcgPrimal,
            Self::AggGcgDual(_) => Algorithm::AggGcgDual,
            Self::Taa(_) => Algorithm::Taa,
            Self::Gem(_) => Algorithm::Gem,
        }
    }

    pub fn iteration(&self) -> usize {
        match self {
            Self::Mda(s) => s.k,
            Self::Gcg(s) => s.k,
            Self::AggGcgPrimal(s) => s.k,
            Self::AggGcgDual(s) => s.k,
            Self::Taa(s) => s.k,
            Self::Gem(s) => s.k,
        }
    }

    pub fn step(&self, problem: &ProblemOracles) -> Result<Self> {
        Ok(match self {
            Self::Mda(s) => Self::Mda(s.step(problem)?),
            Self::Gcg(s) => Self::Gcg(s.step(problem)?),
            Self::AggGcgPrimal(s) => Self::AggGcgPrimal(s.step(problem)?),
            Self::AggGcgDual(s) => Self::AggGcgDual(s.step(problem)?),
            Self::Taa(s) => Self::Taa(s.step(problem)?),
            Self::Gem(s) => Self::Gem(s.step(problem)?),
        })
    }
}
