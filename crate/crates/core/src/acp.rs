//! Aggregated cutting-plane (ACP) models.
//!
//! A primal model is `Gamma(x) = chi + <s, x> + h^alpha(x)`, a convex
//! combination of linearizations of `f` plus the composite part. A dual model
//! is `Gamma*(g) = chi + <s, g> + f^*(g)`, built from linearizations of
//! `(h^alpha)^*(-.)`. Both keep only `(s, chi)`; the cut history is never
//! needed to minimize them.

use serde::Serialize;

use crate::numerics::{dot, lerp, neg, CompensatedSum};
use crate::oracle::ProblemOracles;
use crate::{Error, Result};

/// Which function the model linearizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSide {
    /// Cuts of `f`, minimized with the GLMO of `h^alpha`.
    Primal,
    /// Cuts of `(h^alpha)^*(-.)`, minimized through `f`.
    Dual,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AcpAggregator {
    side: ModelSide,
    s_agg: Vec<f64>,
    chi: CompensatedSum,
    num_cuts: usize,
}

/// Linearization data `(value, gradient)` of the dual cut at `z`:
/// value `(h^alpha)^*(-z)` and gradient `-∇(h^alpha)^*(-z)`.
pub fn dual_cut(problem: &ProblemOracles, z: &[f64]) -> (f64, Vec<f64>) {
    let glmo = problem.glmo(z);
    (-glmo.min_value, neg(&glmo.argmin))
}

impl AcpAggregator {
    /// Primal model `Gamma_0 = h^alpha + l_f(.; y0)`.
    pub fn init(y0: &[f64], f_y0: f64, grad_y0: &[f64]) -> Self {
        Self::from_cut(ModelSide::Primal, y0, f_y0, grad_y0)
    }

    /// Dual model `Gamma*_0 = f^* + l(.; z0)` where `l` linearizes
    /// `(h^alpha)^*(-.)` at `z0`.
    pub fn init_dual(problem: &ProblemOracles, z0: &[f64]) -> Self {
        let (value, grad) = dual_cut(problem, z0);
        Self::from_cut(ModelSide::Dual, z0, value, &grad)
    }

    fn from_cut(side: ModelSide, point: &[f64], value: f64, grad: &[f64]) -> Self {
        Self {
            side,
            s_agg: grad.to_vec(),
            chi: CompensatedSum::new(value - dot(grad, point)),
            num_cuts: 1,
        }
    }

    /// Blends in the cut `(value, grad)` taken at `point` with weight `zeta`.
    pub fn update(&self, zeta: f64, point: &[f64], value: f64, grad: &[f64]) -> Result<Self> {
        if !(0.0..=1.0).contains(&zeta) {
            return Err(Error::invalid(
                "zeta",
                format!("must lie in [0, 1], got {zeta}"),
            ));
        }
        if grad.len() != self.s_agg.len() || point.len() != self.s_agg.len() {
            return Err(Error::DimensionMismatch {
                expected: self.s_agg.len(),
                got: grad.len().min(point.len()),
            });
        }
        Ok(Self {
            side: self.side,
            s_agg: lerp(&self.s_agg, grad, zeta),
            chi: self.chi.blend(zeta, value - dot(grad, point)),
            num_cuts: self.num_cuts + 1,
        })
    }

    /// Dual-model update with the cut at `z`.
    pub fn update_dual(&self, problem: &ProblemOracles, zeta: f64, z: &[f64]) -> Result<Self> {
        let (value, grad) = dual_cut(problem, z);
        self.update(zeta, z, value, &grad)
    }

    pub fn side(&self) -> ModelSide {
        self.side
    }

    pub fn s_agg(&self) -> &[f64] {
        &self.s_agg
    }

    pub fn chi(&self) -> f64 {
        self.chi.value()
    }

    pub fn num_cuts(&self) -> usize {
        self.num_cuts
    }

    /// `(argmin, min)` of the model.
    ///
    /// Primal: `(glmo(s).argmin, chi + glmo(s).min)`.
    /// Dual: `(∇f(-s), chi - f(-s))`.
    pub fn minimize(&self, problem: &ProblemOracles) -> (Vec<f64>, f64) {
        match self.side {
            ModelSide::Primal => {
                let g = problem.glmo(&self.s_agg);
                (g.argmin, self.chi.value() + g.min_value)
            }
            ModelSide::Dual => {
                let p = neg(&self.s_agg);
                (problem.grad_f(&p), self.chi.value() - problem.eval_f(&p))
            }
        }
    }

    /// Primal point associated with the model: the minimizer for a primal
    /// model, `-s` for a dual one.
    pub fn primal_point(&self, problem: &ProblemOracles) -> Vec<f64> {
        match self.side {
            ModelSide::Primal => problem.glmo(&self.s_agg).argmin,
            ModelSide::Dual => neg(&self.s_agg),
        }
    }

    /// Model value at `x`.
    pub fn eval(&self, problem: &ProblemOracles, x: &[f64]) -> Result<f64> {
        let base = self.chi.value() + dot(&self.s_agg, x);
        match self.side {
            ModelSide::Primal => {
                problem.domain().check(x)?;
                Ok(base + problem.eval_h_alpha(x).value())
            }
            ModelSide::Dual => Ok(base + problem.eval_f_conj(x)?.value()),
        }
    }
}

/// A test point together with the model certifying it.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub test_point: Vec<f64>,
    pub model: AcpAggregator,
    /// Objective at the test point minus the model minimum.
    pub gap: f64,
    pub epsilon_target: f64,
}

impl Certificate {
    /// Whether the gap meets the `epsilon / 2` stopping rule.
    pub fn is_certified(&self) -> bool {
        self.gap <= 0.5 * self.epsilon_target
    }
}

/// Primal: `phi^alpha(u) - min Gamma`. Dual: `psi^alpha(u) - min Gamma*`.
pub fn certificate_gap(
    model: &AcpAggregator,
    problem: &ProblemOracles,
    u: &[f64],
    epsilon_target: f64,
) -> Result<Certificate> {
    let objective = match model.side {
        ModelSide::Primal => problem.phi_alpha(u)?,
        ModelSide::Dual => problem.psi_alpha(u)?,
    };
    let (_, m) = model.minimize(problem);
    Ok(Certificate {
        test_point: u.to_vec(),
        model: model.clone(),
        gap: objective - m,
        epsilon_target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::game::MatrixGameInstance;
    use crate::instances::quadbox::QuadBoxToy;
    use proptest::prelude::*;

    fn toy() -> ProblemOracles {
        QuadBoxToy::new(1, 1.0, 1.0).unwrap().oracles().unwrap()
    }

    fn game_i2() -> ProblemOracles {
        MatrixGameInstance::from_payoff(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1.0, 1.0)
            .unwrap()
            .oracles()
            .unwrap()
    }

    #[test]
    fn init_on_toy_and_origin() {
        let m = AcpAggregator::init(&[1.0], 0.5, &[1.0]);
        assert_eq!(m.s_agg(), &[1.0]);
        assert_eq!(m.chi(), -0.5);
        assert_eq!(m.num_cuts(), 1);
        let z = AcpAggregator::init(&[0.0], 0.0, &[0.0]);
        assert_eq!((z.s_agg()[0], z.chi()), (0.0, 0.0));
    }

    #[test]
    fn init_on_game_at_uniform() {
        let p = game_i2();
        let y0 = [0.5, 0.5];
        let g = p.grad_f(&y0);
        let m = AcpAggregator::init(&y0, p.eval_f(&y0), &g);
        assert!((m.s_agg()[0] - 0.5).abs() < 1e-15 && (m.s_agg()[1] - 0.5).abs() < 1e-15);
        assert!((m.chi() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn degenerate_weights() {
        let m = AcpAggregator::init(&[1.0], 0.5, &[1.0]);
        let same = m.update(0.0, &[-1.0], 0.5, &[-1.0]).unwrap();
        assert_eq!(same.s_agg(), m.s_agg());
        assert_eq!(same.chi(), m.chi());
        let single = m.update(1.0, &[-1.0], 0.5, &[-1.0]).unwrap();
        let fresh = AcpAggregator::init(&[-1.0], 0.5, &[-1.0]);
        assert_eq!(single.s_agg(), fresh.s_agg());
        assert_eq!(single.chi(), fresh.chi());
        assert!(m.update(1.5, &[0.0], 0.0, &[0.0]).is_err());
        assert!(m.update(-0.1, &[0.0], 0.0, &[0.0]).is_err());
    }

    #[test]
    fn half_update_on_toy() {
        let m = AcpAggregator::init(&[1.0], 0.5, &[1.0])
            .update(0.5, &[-1.0], 0.5, &[-1.0])
            .unwrap();
        assert_eq!(m.s_agg(), &[0.0]);
        assert_eq!(m.chi(), -0.5);
        assert_eq!(m.num_cuts(), 2);
        let (v, min) = m.minimize(&toy());
        assert_eq!(v, vec![0.0]);
        assert_eq!(min, -0.5);
    }

    #[test]
    fn single_cut_at_optimum_is_tight() {
        let p = game_i2();
        let u = [0.5, 0.5];
        let m = AcpAggregator::init(&u, p.eval_f(&u), &p.grad_f(&u));
        let (v, min) = m.minimize(&p);
        assert!((v[0] - 0.5).abs() < 1e-15);
        assert!((min - (0.5 + 2f64.ln())).abs() < 1e-14);
        let cert = certificate_gap(&m, &p, &u, 1e-3).unwrap();
        assert!(cert.gap.abs() < 1e-14);
        assert!(cert.is_certified());

        let t = toy();
        let m = AcpAggregator::init(&[0.0], 0.0, &[0.0]);
        assert_eq!(certificate_gap(&m, &t, &[0.0], 1.0).unwrap().gap, 0.0);
    }

    #[test]
    fn certificate_rejects_infeasible_test_point() {
        let m = AcpAggregator::init(&[0.0], 0.0, &[0.0]);
        assert!(certificate_gap(&m, &toy(), &[2.0], 1.0).is_err());
    }

    #[test]
    fn dual_model_minorizes_psi_and_bounds_phi() {
        let p = game_i2();
        let z0 = [0.9, 0.1];
        let z1 = [0.3, 0.7];
        let m = AcpAggregator::init_dual(&p, &z0)
            .update_dual(&p, 0.4, &z1)
            .unwrap();
        let (g, min) = m.minimize(&p);
        assert!((m.eval(&p, &g).unwrap() - min).abs() < 1e-12);
        for t in 0..=20 {
            let a = t as f64 / 20.0;
            let u = [a, 1.0 - a];
            assert!(m.eval(&p, &u).unwrap() <= p.psi_alpha(&u).unwrap() + 1e-12);
            assert!(min <= m.eval(&p, &u).unwrap() + 1e-12);
            // psi(u) - min Gamma* >= phi(-s) + psi(u)
            let cert = certificate_gap(&m, &p, &u, 1.0).unwrap();
            let pd = p.pd_gap(&m.primal_point(&p), &u).unwrap();
            assert!(cert.gap >= pd - 1e-12);
        }
    }

    fn toy3() -> ProblemOracles {
        QuadBoxToy::with_box(3, 0.7, 2.0, -1.0, 1.0)
            .unwrap()
            .oracles()
            .unwrap()
    }

    proptest! {
        #[test]
        fn primal_model_minorizes_and_is_strongly_convex(
            pts in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..6),
            zetas in prop::collection::vec(0.0f64..=1.0, 6),
            x in prop::collection::vec(-1.0f64..1.0, 3),
        ) {
            let p = toy3();
            let mut m = AcpAggregator::init(&pts[0], p.eval_f(&pts[0]), &p.grad_f(&pts[0]));
            for (q, &zeta) in pts.iter().zip(&zetas).skip(1) {
                m = m.update(zeta, q, p.eval_f(q), &p.grad_f(q)).unwrap();
            }
            let gx = m.eval(&p, &x).unwrap();
            prop_assert!(gx <= p.phi_alpha(&x).unwrap() + 1e-9);
            let (v, min) = m.minimize(&p);
            let d2: f64 = x.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum();
            prop_assert!(gx >= min + 0.5 * p.alpha() * d2 - 1e-9);
            let cert = certificate_gap(&m, &p, &x, 1.0).unwrap();
            prop_assert!(cert.gap >= p.pd_gap(&x, m.s_agg()).unwrap() - 1e-9);
        }
    }
}
