use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use super::report::{worst, VerificationReport};
use super::run::{run_from, AlphaPolicy, RunConfig, RunStatus};
use crate::acp::{certificate_gap, AcpAggregator};
use crate::algorithms::{
    gem_scalars, schedule_eta, schedule_lambda, AggGcgDualState, AggGcgPrimalState, Algorithm,
    GcgState, GemState, MdaState, TaaState,
};
use crate::instances::brute::{brute_force_min, GridObjective};
use crate::numerics::{dist_inf, dot, norm2_sq, norm_inf, sub};
use crate::oracle::{fenchel_young_residual, Domain, ProblemOracles, ProxRequest};
use crate::{Error, Result};

/// Tolerance for iterate identities between paired primal and dual methods.
pub const CORRESPONDENCE_TOL: f64 = 1e-8;
/// Relative slack of rate envelopes: `lhs <= bound + RATE_SLACK (1 + |bound|)`.
pub const RATE_SLACK: f64 = 1e-9;
/// Absolute tolerance of exact algebraic identities along runs.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Argmin agreement reachable by ternary search on objective values.
pub const TERNARY_ARGMIN_TOL: f64 = 1e-6;
/// Relative tolerance of the GEM scalar identities.
pub const SCALAR_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrespondenceOptions {
    pub k_max: usize,
    pub tol: f64,
    /// Added to the first coordinate of the dual start (negative control).
    pub dual_shift: f64,
    /// Multiplies the three-average weight (negative control).
    pub lambda_scale: f64,
}

impl Default for CorrespondenceOptions {
    fn default() -> Self {
        Self {
            k_max: 200,
            tol: CORRESPONDENCE_TOL,
            dual_shift: 0.0,
            lambda_scale: 1.0,
        }
    }
}

fn shifted(z: &[f64], shift: f64) -> Vec<f64> {
    let mut z = z.to_vec();
    z[0] += shift;
    z
}

fn require_conjugate(problem: &ProblemOracles) -> Result<()> {
    if problem.supports_f_conj() {
        Ok(())
    } else {
        Err(Error::Unsupported("f*"))
    }
}

/// Primal one-average method against the dual one started at
/// `z_0 = ∇f(y_0)`: `s_k = z_k`, `x_k = ∇(h^alpha)^*(-z_k)`, `∇f(x_k) = zbar_k`.
pub fn check_correspondence_one_avg(
    problem: &ProblemOracles,
    y0: &[f64],
    opts: &CorrespondenceOptions,
) -> Result<VerificationReport> {
    require_conjugate(problem)?;
    let mut primal = MdaState::init(problem, y0)?;
    let mut dual = GcgState::init(problem, &shifted(&problem.grad_f(y0), opts.dual_shift))?;
    let (mut vs, mut vx, mut vg) = (0.0_f64, 0.0_f64, 0.0_f64);
    for k in 0..=opts.k_max {
        if k > 0 {
            primal = primal.step(problem)?;
            dual = dual.step(problem)?;
        }
        vs = worst(vs, dist_inf(&primal.s, &dual.z));
        vx = worst(vx, dist_inf(&primal.x, &problem.grad_h_alpha_conj(&dual.z)));
        vg = worst(vg, dist_inf(&problem.grad_f(&primal.x), &dual.zbar));
    }
    let mut r = VerificationReport::new("correspondence_one_avg");
    r.check(format!("s_k = z_k for k <= {}", opts.k_max), vs, opts.tol);
    r.check(
        format!("x_k = grad (h^alpha)*(-z_k) for k <= {}", opts.k_max),
        vx,
        opts.tol,
    );
    r.check(
        format!("grad f(x_k) = zbar_k for k <= {}", opts.k_max),
        vg,
        opts.tol,
    );
    Ok(r)
}

/// Two-average primal and dual methods with `s_0 = z_0 = ∇f(y_0)`,
/// `v_0 = y_0`.
pub fn check_correspondence_two_avg(
    problem: &ProblemOracles,
    y0: &[f64],
    opts: &CorrespondenceOptions,
) -> Result<VerificationReport> {
    require_conjugate(problem)?;
    let s0 = problem.grad_f(y0);
    let mut primal = AggGcgPrimalState::init(problem, y0, Some(&s0))?;
    let mut dual = AggGcgDualState::init(problem, &shifted(&s0, opts.dual_shift), Some(y0))?;
    let (mut vy, mut vs, mut vx, mut vg) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for k in 0..=opts.k_max {
        vy = worst(vy, dist_inf(&primal.y, &dual.v));
        vs = worst(vs, dist_inf(&primal.s, &dual.z));
        let conj = problem.grad_h_alpha_conj(&dual.z);
        let grad_y = problem.grad_f(&primal.y);
        if k == opts.k_max {
            break;
        }
        primal = primal.step(problem)?;
        dual = dual.step(problem)?;
        vx = worst(vx, dist_inf(&primal.x, &conj));
        vg = worst(vg, dist_inf(&grad_y, &dual.zbar));
    }
    let mut r = VerificationReport::new("correspondence_two_avg");
    r.check(format!("y_k = v_k for k <= {}", opts.k_max), vy, opts.tol);
    r.check(format!("s_k = z_k for k <= {}", opts.k_max), vs, opts.tol);
    r.check("x_{k+1} = grad (h^alpha)*(-z_k)", vx, opts.tol);
    r.check("grad f(y_k) = zbar_{k+1}", vg, opts.tol);
    Ok(r)
}

/// Three-average primal method against the gradient extrapolation method
/// with `g_0 = ∇f(y_0)`: `∇f(xtilde_k) = g_k`, `s_k = z_k`, `x_k = v_k`.
pub fn check_correspondence_three_avg(
    problem: &ProblemOracles,
    y0: &[f64],
    opts: &CorrespondenceOptions,
) -> Result<VerificationReport> {
    Algorithm::Gem.check_compatible(problem)?;
    let lambda = schedule_lambda(problem.alpha(), problem.lipschitz())? * opts.lambda_scale;
    let mut primal = TaaState::init_with_lambda(problem, y0, lambda)?;
    let g0 = shifted(&problem.grad_f(y0), opts.dual_shift);
    let mut dual = GemState::init(problem, &g0, y0)?;
    let (mut vg, mut vs, mut vx) = (0.0_f64, 0.0_f64, 0.0_f64);
    for k in 0..=opts.k_max {
        if k > 0 {
            primal = primal.step(problem)?;
            dual = dual.step(problem)?;
        }
        vg = worst(vg, dist_inf(&problem.grad_f(&primal.xtilde), &dual.g));
        vs = worst(vs, dist_inf(&primal.s, &dual.z));
        vx = worst(vx, dist_inf(&primal.x, &dual.v));
    }
    let mut r = VerificationReport::new("correspondence_three_avg");
    r.check(
        format!("grad f(xtilde_k) = g_k for k <= {}", opts.k_max),
        vg,
        opts.tol,
    );
    r.check(format!("s_k = z_k for k <= {}", opts.k_max), vs, opts.tol);
    r.check(format!("x_k = v_k for k <= {}", opts.k_max), vx, opts.tol);
    Ok(r)
}

/// All three correspondence suites the instance supports.
pub fn check_correspondence(
    problem: &ProblemOracles,
    y0: &[f64],
    opts: &CorrespondenceOptions,
) -> Result<VerificationReport> {
    let mut r = VerificationReport::new("correspondence");
    r.merge("one_avg", check_correspondence_one_avg(problem, y0, opts)?);
    r.merge("two_avg", check_correspondence_two_avg(problem, y0, opts)?);
    if problem.supports_bregman_prox() {
        r.merge(
            "three_avg",
            check_correspondence_three_avg(problem, y0, opts)?,
        );
    }
    Ok(r)
}

/// Tracks the worst relative excess of `lhs` over `bound`.
#[derive(Default)]
struct Envelope {
    excess: f64,
}

impl Envelope {
    fn observe(&mut self, lhs: f64, bound: f64) {
        self.excess = worst(self.excess, (lhs - bound) / (1.0 + bound.abs()));
    }
}

/// Wolfe gap `S(z)` three ways: by its definition, as the primal-dual gap at
/// `∇(h^alpha)^*(-z)`, and as the gap of the single-cut dual model at `z`.
pub fn wolfe_gaps(problem: &ProblemOracles, z: &[f64]) -> Result<[f64; 3]> {
    let x = problem.grad_h_alpha_conj(z);
    let zbar = problem.grad_f(&x);
    let by_definition = -dot(&x, &sub(z, &zbar)) + problem.eval_f_conj(z)?.value()
        - problem.eval_f_conj(&zbar)?.value();
    let by_pd_gap = problem.psi_alpha(z)? + problem.phi_alpha(&x)?;
    let model = AcpAggregator::init_dual(problem, z);
    let by_model = certificate_gap(&model, problem, z, 0.0)?.gap;
    Ok([by_definition, by_pd_gap, by_model])
}

fn mda_rates(problem: &ProblemOracles, y0: &[f64], k_max: usize) -> Result<VerificationReport> {
    let mut s = MdaState::init(problem, y0)?;
    let eta = s.eta;
    let gap =
        |s: &MdaState| -> Result<f64> { Ok(certificate_gap(&s.acp, problem, &s.y, 0.0)?.gap) };
    let t0 = gap(&s)?;
    let mut env = Envelope::default();
    let mut recursion = 0.0_f64;
    for k in 1..=k_max {
        let m_prev = s.acp.minimize(problem).1;
        s = s.step(problem)?;
        let m = s.acp.minimize(problem).1;
        recursion = worst(
            recursion,
            (1.0 - eta) * m_prev + eta * problem.phi_alpha(&s.x)? - m,
        );
        env.observe(gap(&s)?, t0 * (1.0 - eta).powi(k as i32));
    }
    let mut r = VerificationReport::new("rates_mda");
    r.check("t_k <= t_0 (1 + alpha/L)^-k", env.excess, RATE_SLACK);
    r.check(
        "m_{k+1} >= (1-eta) m_k + eta phi(x_{k+1})",
        recursion,
        IDENTITY_TOL,
    );
    Ok(r)
}

fn taa_rates(problem: &ProblemOracles, y0: &[f64], k_max: usize) -> Result<VerificationReport> {
    let mut s = TaaState::init(problem, y0)?;
    let lambda = s.lambda;
    let gap =
        |s: &TaaState| -> Result<f64> { Ok(certificate_gap(&s.acp, problem, &s.y, 0.0)?.gap) };
    let delta = problem.phi_alpha(y0)? - s.acp.eval(problem, &s.x)?;
    let mut env = Envelope::default();
    env.observe(gap(&s)?, delta);
    let mut triangles = 0.0_f64;
    for k in 1..=k_max {
        let next = s.step(problem)?;
        let lhs: Vec<f64> = next
            .x
            .iter()
            .zip(&s.x)
            .map(|(a, b)| lambda * (a - b))
            .collect();
        triangles = worst(triangles, dist_inf(&lhs, &sub(&next.y, &next.xtilde)));
        s = next;
        env.observe(gap(&s)?, delta * (1.0 - lambda).powi(k as i32));
    }
    let mut r = VerificationReport::new("rates_taa");
    r.check(
        "phi(y_k) - min Gamma_k <= Delta (1 - lambda)^k",
        env.excess,
        RATE_SLACK,
    );
    r.check(
        "lambda (x_{k+1} - x_k) = y_{k+1} - xtilde_{k+1}",
        triangles,
        IDENTITY_TOL,
    );
    Ok(r)
}

fn gcg_rates(problem: &ProblemOracles, y0: &[f64], k_max: usize) -> Result<VerificationReport> {
    let mut s = GcgState::init(problem, &problem.grad_f(y0))?;
    let eta = s.eta;
    let pd = |s: &GcgState| -> Result<f64> {
        Ok(problem.psi_alpha(&s.z)? + problem.phi_alpha(&s.ytilde)?)
    };
    let pd0 = pd(&s)?;
    let mut env = Envelope::default();
    let (mut descent, mut wolfe) = (0.0_f64, 0.0_f64);
    for k in 1..=k_max {
        let [sd, s1, s2] = wolfe_gaps(problem, &s.z)?;
        wolfe = worst(wolfe, (sd - s1).abs().max((sd - s2).abs()));
        let psi_prev = problem.psi_alpha(&s.z)?;
        s = s.step(problem)?;
        descent = worst(descent, problem.psi_alpha(&s.z)? - (psi_prev - eta * sd));
        env.observe(pd(&s)?, pd0 * (1.0 - eta).powi(k as i32));
    }
    let mut r = VerificationReport::new("rates_gcg");
    r.check(
        "psi(z_{k+1}) <= psi(z_k) - eta S(z_k)",
        descent,
        IDENTITY_TOL,
    );
    r.check(
        "psi(z_k) + phi(ytilde_k) <= (1 + alpha/L)^-k (psi + phi)_0",
        env.excess,
        RATE_SLACK,
    );
    r.check(
        "Wolfe gap = pd gap at x = single-cut model gap",
        wolfe,
        IDENTITY_TOL,
    );
    Ok(r)
}

fn agg_gcg_rates(
    problem: &ProblemOracles,
    y0: &[f64],
    k_max: usize,
    dual: bool,
) -> Result<VerificationReport> {
    require_conjugate(problem)?;
    let eta = schedule_eta(problem.alpha(), problem.lipschitz())?;
    let z0 = problem.grad_f(y0);
    let mut primal = AggGcgPrimalState::init(problem, y0, Some(&z0))?;
    let mut mirror = AggGcgDualState::init(problem, &z0, Some(y0))?;
    let gap = |p: &AggGcgPrimalState, d: &AggGcgDualState| -> Result<f64> {
        if dual {
            Ok(problem.phi_alpha(&d.v)? + problem.psi_alpha(&d.z)?)
        } else {
            Ok(problem.phi_alpha(&p.y)? + problem.psi_alpha(&p.s)?)
        }
    };
    let g0 = gap(&primal, &mirror)?;
    let mut prev = g0;
    let mut env = Envelope::default();
    let mut step_env = Envelope::default();
    for k in 1..=k_max {
        if dual {
            mirror = mirror.step(problem)?;
        } else {
            primal = primal.step(problem)?;
        }
        let g = gap(&primal, &mirror)?;
        env.observe(g, g0 * (1.0 - eta).powi(k as i32));
        step_env.observe(g, (1.0 - eta) * prev);
        prev = g;
    }
    let name = if dual {
        "rates_agg_gcg_dual"
    } else {
        "rates_agg_gcg_primal"
    };
    let mut r = VerificationReport::new(name);
    r.check(
        "(phi + psi)_k <= (1 - eta)^k (phi + psi)_0",
        env.excess,
        RATE_SLACK,
    );
    r.check(
        "(phi + psi)_{k+1} <= (1 - eta)(phi + psi)_k",
        step_env.excess,
        RATE_SLACK,
    );
    Ok(r)
}

fn gem_rates(problem: &ProblemOracles, y0: &[f64], k_max: usize) -> Result<VerificationReport> {
    let (alpha, lipschitz) = (problem.alpha(), problem.lipschitz());
    let mut s = GemState::init_from_primal(problem, y0)?;
    let radius = problem.bregman_radius(&s.g, &s.subgrad);
    let c0 = problem.phi_alpha(&s.v)?
        + problem.psi_alpha(&s.z)?
        + radius.unwrap_or(f64::NAN) / lipschitz;
    let growth = 2.0 * (1.0 + alpha.sqrt() / (2.0 * lipschitz.sqrt())).ln();
    let mut env = Envelope::default();
    let (mut ident_a, mut ident_b, mut growth_excess) = (0.0_f64, 0.0_f64, 0.0_f64);
    let cert = |s: &GemState, k: usize, env: &mut Envelope| -> Result<()> {
        if radius.is_some() {
            let gap = certificate_gap(&s.dual_acp, problem, &s.z, 0.0)?.gap;
            env.observe(gap, c0 * (-growth * k as f64).exp());
        }
        Ok(())
    };
    cert(&s, 0, &mut env)?;
    for k in 1..=k_max {
        let (a, _, a_next) = gem_scalars(s.tau, s.big_a, alpha, lipschitz);
        ident_b = worst(ident_b, (a * a - s.tau * a_next).abs() / (s.tau * a_next));
        s = s.step(problem)?;
        ident_a = worst(
            ident_a,
            (s.big_a * alpha - s.tau * lipschitz).abs() / (s.tau * lipschitz),
        );
        growth_excess = worst(growth_excess, growth * k as f64 - s.log_big_a());
        cert(&s, k, &mut env)?;
    }
    let mut r = VerificationReport::new("rates_gem");
    r.check("A_k alpha = tau_k L (relative)", ident_a, SCALAR_TOL);
    r.check("a_k^2 = tau_k A_{k+1} (relative)", ident_b, SCALAR_TOL);
    r.check(
        "log A_k >= 2k log(1 + sqrt(alpha)/(2 sqrt(L)))",
        growth_excess,
        SCALAR_TOL * growth * k_max as f64,
    );
    if radius.is_some() {
        r.check(
            "psi(z_k) - min Gamma*_k <= (phi(v_0) + psi(z_0) + D/L)(1 + sqrt(alpha)/(2 sqrt(L)))^-2k",
            env.excess,
            RATE_SLACK,
        );
    }
    Ok(r)
}

/// Rate envelope and per-step inequalities of one method over `k_max` steps.
pub fn check_rates(
    problem: &ProblemOracles,
    y0: &[f64],
    algorithm: Algorithm,
    k_max: usize,
) -> Result<VerificationReport> {
    algorithm.check_compatible(problem)?;
    match algorithm {
        Algorithm::Mda => mda_rates(problem, y0, k_max),
        Algorithm::Gcg => gcg_rates(problem, y0, k_max),
        Algorithm::AggGcgPrimal => agg_gcg_rates(problem, y0, k_max, false),
        Algorithm::AggGcgDual => agg_gcg_rates(problem, y0, k_max, true),
        Algorithm::Taa => taa_rates(problem, y0, k_max),
        Algorithm::Gem => gem_rates(problem, y0, k_max),
    }
}

/// Rates of every method the instance supports. The two-average envelope
/// needs `f^*` to evaluate the dual objective.
pub fn check_all_rates(
    problem: &ProblemOracles,
    y0: &[f64],
    k_max: usize,
) -> Result<VerificationReport> {
    let mut r = VerificationReport::new("rates");
    for alg in Algorithm::ALL {
        let needs_psi = matches!(alg, Algorithm::AggGcgPrimal);
        if alg.check_compatible(problem).is_err() || (needs_psi && !problem.supports_f_conj()) {
            continue;
        }
        r.merge(alg.as_str(), check_rates(problem, y0, alg, k_max)?);
    }
    Ok(r)
}

/// Runs the primal certificate methods with `alpha = epsilon / (2M)` and
/// compares the unregularized objective at the certified point with a grid
/// minimum: `phi(y_k) - phi_grid <= epsilon + grid error`.
pub fn check_soundness(
    problem: &ProblemOracles,
    y0: &[f64],
    epsilon: f64,
    resolution: f64,
    max_iters: usize,
) -> Result<VerificationReport> {
    let grid = brute_force_min(problem, GridObjective::Unregularized, resolution)?;
    let mut r = VerificationReport::new("soundness");
    for alg in [Algorithm::Mda, Algorithm::Taa] {
        let mut cfg = RunConfig::new(alg, epsilon);
        cfg.alpha_policy = AlphaPolicy::FromEpsilon;
        cfg.max_iters = max_iters;
        cfg.record_every = usize::MAX;
        let out = run_from(problem, y0, &cfg)?;
        let certified = out.status == RunStatus::Certified;
        r.check(
            format!("{alg} reaches an epsilon-certificate within {max_iters} iterations"),
            if certified { 0.0 } else { 1.0 },
            0.0,
        );
        let regularized = problem.with_alpha(out.alpha)?;
        let point = super::run::metrics(&out.final_state, &regularized)?.test_point;
        let excess = problem.phi(&point)? - grid.value - epsilon;
        r.check(
            format!("{alg}: phi(y_k) - phi_grid <= epsilon + grid error"),
            excess,
            grid.error_bound,
        );
    }
    Ok(r)
}

/// Random feasible point: Dirichlet(1) on the simplex, uniform on a box.
pub fn sample_domain(domain: &Domain, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match domain {
        Domain::Simplex { n } => {
            let e: Vec<f64> = (0..*n).map(|_| Exp1.sample(rng)).collect();
            let s: f64 = e.iter().sum();
            e.into_iter().map(|v| v / s).collect()
        }
        Domain::Box { lo, hi } => lo
            .iter()
            .zip(hi)
            .map(|(&l, &h)| if l < h { rng.gen_range(l..=h) } else { l })
            .collect(),
    }
}

fn sample_normal(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n)
        .map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
        .collect::<Vec<f64>>()
}

/// `RHS - LHS` of the three-points inequality for one prox step with
/// `Phi = a (-<center, g> + f^*(g))`, `omega = L f^*`, `beta = prox_weight`
/// and `mu = a / L`; nonnegative when the inequality holds.
pub fn three_points_slack(
    problem: &ProblemOracles,
    req: &ProxRequest<'_>,
    u: &[f64],
) -> Result<f64> {
    let l = problem.lipschitz();
    let fc = |g: &[f64]| -> Result<f64> { Ok(problem.eval_f_conj(g)?.value()) };
    let div = |u: &[f64], g: &[f64], xi: &[f64]| -> Result<f64> {
        Ok(l * (fc(u)? - fc(g)? - dot(xi, &sub(u, g))))
    };
    let phi = |g: &[f64]| -> Result<f64> { Ok(req.step * (-dot(req.center, g) + fc(g)?)) };
    let out = problem.bregman_prox(req)?;
    let beta = req.prox_weight;
    let mu = req.step / l;
    let lhs = phi(&out.point)?
        + beta * div(&out.point, req.anchor, req.anchor_subgrad)?
        + (beta + mu) * div(u, &out.point, &out.subgrad)?;
    let rhs = phi(u)? + beta * div(u, req.anchor, req.anchor_subgrad)?;
    Ok(rhs - lhs)
}

/// Three-points inequality of the Bregman prox on `triples` random
/// `(anchor, center, u)` triples with random step and prox weight.
pub fn check_three_points(
    problem: &ProblemOracles,
    triples: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = problem.dim();
    let mut three = 0.0_f64;
    for _ in 0..triples {
        let xi = sample_normal(n, 1.0, &mut rng);
        let anchor = problem.grad_f(&xi);
        let center = sample_normal(n, 1.0, &mut rng);
        let u = problem.grad_f(&sample_normal(n, 1.0, &mut rng));
        let req = ProxRequest {
            center: &center,
            anchor: &anchor,
            anchor_subgrad: &xi,
            step: rng.gen_range(0.01..10.0),
            prox_weight: rng.gen_range(0.01..10.0),
        };
        three = worst(three, -three_points_slack(problem, &req, &u)?);
    }
    let mut r = VerificationReport::new("three_points");
    r.check(
        format!("three-points inequality slack >= 0 over {triples} triples"),
        three,
        1e-9,
    );
    Ok(r)
}

/// Oracle-level identities on `samples` random points:
/// Fenchel-Young, GLMO consistency, gradient and smoothness checks, weak
/// duality, model minorization and, where available, the three-points
/// inequality of the Bregman prox.
pub fn check_identities(
    problem: &ProblemOracles,
    samples: usize,
    seed: u64,
) -> Result<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = problem.dim();
    let domain = problem.domain().clone();
    let (alpha, l) = (problem.alpha(), problem.lipschitz());
    let mut r = VerificationReport::new("identities");

    let dual_scale = 1.0 + l;
    let mut fy = 0.0_f64;
    let mut conj_grad = 0.0_f64;
    let mut conj_val = 0.0_f64;
    let mut glmo_val = 0.0_f64;
    let mut glmo_dom = 0.0_f64;
    let mut strong = 0.0_f64;
    let mut bregman_lo = 0.0_f64;
    let mut bregman_hi = 0.0_f64;
    let mut weak = 0.0_f64;
    let mut minorize = 0.0_f64;
    for _ in 0..samples {
        let x = sample_domain(&domain, &mut rng);
        let y = sample_domain(&domain, &mut rng);
        let v = sample_normal(n, dual_scale, &mut rng);

        if problem.supports_f_conj() {
            fy = worst(fy, fenchel_young_residual(problem, &x)?.abs());
            let z = problem.grad_f(&y);
            weak = worst(weak, -problem.pd_gap(&x, &z)?);
        }

        let g = problem.glmo(&v);
        conj_grad = worst(
            conj_grad,
            dist_inf(&problem.grad_h_alpha_conj(&v), &g.argmin),
        );
        conj_val = worst(
            conj_val,
            (problem.eval_h_alpha_conj(&v) + g.min_value).abs(),
        );
        let h_at = problem.eval_h_alpha(&g.argmin);
        glmo_val = worst(
            glmo_val,
            (g.min_value - dot(&v, &g.argmin) - h_at.value()).abs(),
        );
        glmo_dom = worst(glmo_dom, domain.violation(&g.argmin));
        let d = sub(&y, &g.argmin);
        let lower = h_at.value() - dot(&v, &d) + 0.5 * alpha * norm2_sq(&d);
        strong = worst(strong, lower - problem.eval_h_alpha(&y).value());

        let gap = problem.eval_f(&y) - problem.eval_f(&x) - dot(&problem.grad_f(&x), &sub(&y, &x));
        bregman_lo = worst(bregman_lo, -gap);
        bregman_hi = worst(bregman_hi, gap - 0.5 * l * norm2_sq(&sub(&y, &x)));

        let cuts = rng.gen_range(1..5);
        let p0 = sample_domain(&domain, &mut rng);
        let mut model = AcpAggregator::init(&p0, problem.eval_f(&p0), &problem.grad_f(&p0));
        for _ in 1..cuts {
            let q = sample_domain(&domain, &mut rng);
            model = model.update(
                rng.gen_range(0.0..=1.0),
                &q,
                problem.eval_f(&q),
                &problem.grad_f(&q),
            )?;
        }
        minorize = worst(minorize, model.eval(problem, &x)? - problem.phi_alpha(&x)?);
    }
    if problem.supports_f_conj() {
        r.check("|f(x) + f*(grad f(x)) - <x, grad f(x)>|", fy, 1e-9);
        r.check("weak duality: -(phi(x) + psi(z))", weak, 1e-9);
    }
    r.check(
        "grad (h^alpha)*(-z) = glmo(z).argmin (inf-norm)",
        conj_grad,
        1e-10,
    );
    r.check("(h^alpha)*(-z) = -glmo(z).min", conj_val, 1e-10);
    r.check("glmo min = <v, x> + h^alpha(x)", glmo_val, 1e-10);
    r.check("glmo argmin in dom h", glmo_dom, crate::oracle::DOMAIN_TOL);
    r.check("h^alpha strong convexity at the glmo point", strong, 1e-9);
    r.check("f(y) - f(x) - <grad f(x), y - x> >= 0", bregman_lo, 1e-9);
    r.check(
        "f(y) - f(x) - <grad f(x), y - x> <= (L/2)||y - x||^2",
        bregman_hi,
        1e-9,
    );
    r.check("model minorizes phi^alpha", minorize, 1e-9);

    let fd_points = samples.div_ceil(2);
    let mut fd = 0.0_f64;
    let h = 1e-5;
    for _ in 0..fd_points {
        let x = sample_domain(&domain, &mut rng);
        let g = problem.grad_f(&x);
        let numeric: Vec<f64> = (0..n)
            .map(|i| {
                let mut a = x.clone();
                let mut b = x.clone();
                a[i] += h;
                b[i] -= h;
                (problem.eval_f(&a) - problem.eval_f(&b)) / (2.0 * h)
            })
            .collect();
        fd = worst(fd, dist_inf(&numeric, &g) / norm_inf(&g).max(1.0));
    }
    r.check("gradient vs central differences (relative)", fd, 1e-6);

    let mut curvature = 0.0_f64;
    for _ in 0..samples * 10 {
        let x = sample_domain(&domain, &mut rng);
        let d = sample_normal(n, 1.0, &mut rng);
        let nd = norm2_sq(&d).sqrt();
        let t = 1e-4 / nd;
        let plus: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
        let minus: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a - t * b).collect();
        let c = (problem.eval_f(&plus) - 2.0 * problem.eval_f(&x) + problem.eval_f(&minus)) / 1e-8;
        curvature = worst(curvature, c);
    }
    r.check("sampled curvature <= L", curvature - l, 1e-4 * (1.0 + l));

    if let Domain::Box { lo, hi } = &domain {
        let (mut value_gap, mut ternary) = (0.0_f64, 0.0_f64);
        for _ in 0..samples {
            let v = sample_normal(n, dual_scale, &mut rng);
            let g = problem.glmo(&v);
            for j in 0..n {
                let along = |t: f64| {
                    let mut x = g.argmin.clone();
                    x[j] = t;
                    dot(&v, &x) + alpha * problem.eval_w(&x)
                };
                let (mut a, mut b) = (lo[j], hi[j]);
                for _ in 0..200 {
                    let m1 = a + (b - a) / 3.0;
                    let m2 = b - (b - a) / 3.0;
                    if along(m1) <= along(m2) {
                        b = m2;
                    } else {
                        a = m1;
                    }
                }
                let t = 0.5 * (a + b);
                value_gap = worst(value_gap, (along(g.argmin[j]) - along(t)).abs());
                ternary = worst(ternary, (t - g.argmin[j]).abs());
            }
        }
        r.check(
            "box glmo objective = per-coordinate ternary search objective",
            value_gap,
            1e-10,
        );
        // A value-comparing search resolves the argmin only to about
        // sqrt(machine epsilon * |objective| / alpha).
        r.check(
            "box glmo argmin = per-coordinate ternary search argmin",
            ternary,
            TERNARY_ARGMIN_TOL,
        );
    }
    if let Domain::Simplex { .. } = &domain {
        let mut kkt = 0.0_f64;
        for _ in 0..samples {
            let v = sample_normal(n, dual_scale, &mut rng);
            let x = problem.glmo(&v).argmin;
            let stationary: Vec<f64> = v
                .iter()
                .zip(&x)
                .filter(|(_, &xi)| xi > 0.0)
                .map(|(vi, xi)| vi + alpha * (xi.ln() + 1.0))
                .collect();
            let hi = stationary.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = stationary.iter().copied().fold(f64::INFINITY, f64::min);
            kkt = worst(kkt, hi - lo);
        }
        r.check(
            "simplex glmo KKT: v + alpha (log x + 1) constant",
            kkt,
            1e-8,
        );
    }

    if problem.supports_bregman_prox() {
        let samples = samples.clamp(1, 50);
        for c in check_three_points(problem, samples, rng.gen())?.checks {
            r.push(c);
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::fisher::FisherMarketInstance;
    use crate::instances::game::MatrixGameInstance;
    use crate::instances::quadbox::QuadBoxToy;

    fn toy() -> ProblemOracles {
        QuadBoxToy::new(1, 1.0, 1.0).unwrap().oracles().unwrap()
    }

    #[test]
    fn toy_correspondences_hold() {
        let p = toy();
        let opts = CorrespondenceOptions {
            k_max: 100,
            ..Default::default()
        };
        let r = check_correspondence(&p, &[1.0], &opts).unwrap();
        assert!(r.overall, "{r:#?}");
    }

    #[test]
    fn negative_controls_fail() {
        let p = MatrixGameInstance::from_payoff(vec![vec![2.0, 1.0], vec![0.5, 1.5]], 0.5, 1.0)
            .unwrap()
            .oracles()
            .unwrap();
        let y0 = [0.8, 0.2];
        let shifted = CorrespondenceOptions {
            k_max: 20,
            dual_shift: 1e-3,
            ..Default::default()
        };
        let r = check_correspondence_one_avg(&p, &y0, &shifted).unwrap();
        assert!(!r.overall);
        assert!(r.checks[0].violation >= 1e-4);
        assert!(
            !check_correspondence_two_avg(&p, &y0, &shifted)
                .unwrap()
                .overall
        );
        let skewed = CorrespondenceOptions {
            k_max: 20,
            lambda_scale: 0.9,
            ..Default::default()
        };
        assert!(
            !check_correspondence_three_avg(&p, &y0, &skewed)
                .unwrap()
                .overall
        );
    }

    #[test]
    fn toy_rates_hold() {
        let p = toy();
        for alg in Algorithm::ALL {
            let r = check_rates(&p, &[1.0], alg, 60).unwrap();
            assert!(r.overall, "{alg}: {r:#?}");
        }
    }

    #[test]
    fn toy_mda_envelope_is_half() {
        let p = toy();
        let mut s = MdaState::init(&p, &[1.0]).unwrap();
        let gap = |s: &MdaState| certificate_gap(&s.acp, &p, &s.y, 0.0).unwrap().gap;
        let t0 = gap(&s);
        for k in 1..=20 {
            s = s.step(&p).unwrap();
            assert!(gap(&s) <= t0 * 0.5f64.powi(k) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn fisher_soundness_and_identities() {
        let p = FisherMarketInstance::generate(2, 2, 5, 0.1)
            .unwrap()
            .oracles()
            .unwrap();
        let r = check_identities(&p, 30, 1).unwrap();
        assert!(r.overall, "{r:#?}");
        let r = check_rates(&p, &p.default_start(), Algorithm::Mda, 50).unwrap();
        assert!(r.overall, "{r:#?}");
    }

    #[test]
    fn three_points_on_toy() {
        let p = QuadBoxToy::new(2, 0.5, 3.0).unwrap().oracles().unwrap();
        let req = ProxRequest {
            center: &[0.3, -0.4],
            anchor: &[1.0, 2.0],
            anchor_subgrad: &[1.0 / 3.0, 2.0 / 3.0],
            step: 2.0,
            prox_weight: 0.7,
        };
        assert!(three_points_slack(&p, &req, &[-1.0, 0.5]).unwrap() >= -1e-12);
    }
}
