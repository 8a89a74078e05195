//! Library oracles against naive reimplementations, grid searches and
//! hand-computed values.

use certopt::algorithms::{schedule_lambda, Algorithm, GcgState, GemState, MdaState, TaaState};
use certopt::harness::{
    check_correspondence_three_avg, check_soundness, run_from, AlphaPolicy, CorrespondenceOptions,
    RunConfig, RunStatus,
};
use certopt::instances::game::generate_payoff;
use certopt::instances::{
    brute_force_min, fisher_smoothness, FisherData, FisherMarketInstance, GridObjective,
    MatrixGameInstance, QuadBoxToy,
};
use certopt::ProblemOracles;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_simplex(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -rng.gen_range(1e-12f64..1.0).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn transpose_apply(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    (0..a[0].len())
        .map(|i| (0..a.len()).map(|j| a[j][i] * x[j]).sum())
        .collect()
}

fn matvec(a: &[Vec<f64>], p: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(p).map(|(r, q)| r * q).sum())
        .collect()
}

/// Largest singular value by power iteration on `A^T A`.
fn spectral_norm(a: &[Vec<f64>]) -> f64 {
    let mut v = vec![1.0; a[0].len()];
    let mut sigma = 0.0;
    for _ in 0..2000 {
        let w = transpose_apply(a, &matvec(a, &v));
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        sigma = norm.sqrt();
        v = w.into_iter().map(|x| x / norm).collect();
    }
    sigma
}

fn naive_game_f(a: &[Vec<f64>], l: f64, x: &[f64]) -> f64 {
    transpose_apply(a, x)
        .iter()
        .map(|s| (l * s).exp())
        .sum::<f64>()
        .ln()
        / l
}

fn naive_game_grad(a: &[Vec<f64>], l: f64, x: &[f64]) -> Vec<f64> {
    let e: Vec<f64> = transpose_apply(a, x)
        .iter()
        .map(|s| (l * s).exp())
        .collect();
    let total: f64 = e.iter().sum();
    let p: Vec<f64> = e.iter().map(|v| v / total).collect();
    matvec(a, &p)
}

#[test]
fn game_normalization_and_oracles_match_naive_formulas() {
    let raw = generate_payoff(8, 21);
    let inst = MatrixGameInstance::from_payoff(raw.clone(), 0.2, 1.5).unwrap();
    let a = inst.payoff().to_vec();
    assert!((spectral_norm(&a) - 1.0).abs() < 1e-10);
    let scale = spectral_norm(&raw);
    for (ra, na) in raw.iter().flatten().zip(a.iter().flatten()) {
        assert!((ra / scale - na).abs() < 1e-10);
    }
    let p = inst.oracles().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let x = random_simplex(8, &mut rng);
        assert!((p.eval_f(&x) - naive_game_f(&a, 1.5, &x)).abs() < 1e-12);
        let g = p.grad_f(&x);
        for (u, v) in g.iter().zip(naive_game_grad(&a, 1.5, &x)) {
            assert!((u - v).abs() < 1e-12);
        }
        // f*(A q) = H(q) / L for a mixed strategy q.
        let q = random_simplex(8, &mut rng);
        let h: f64 = q.iter().map(|v| v * v.ln()).sum();
        let fc = p.eval_f_conj(&matvec(&a, &q)).unwrap();
        assert!(fc.is_finite());
        assert!((fc.value() - h / 1.5).abs() < 1e-9);
    }
}

#[test]
fn game_glmo_matches_dense_grid() {
    let p = MatrixGameInstance::from_payoff(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1.0, 1.0)
        .unwrap()
        .oracles()
        .unwrap();
    let v = [0.0, 3f64.ln()];
    let obj = |t: f64| {
        let x = [t, 1.0 - t];
        let ent: f64 = x
            .iter()
            .filter(|&&xi| xi > 0.0)
            .map(|xi| xi * xi.ln())
            .sum();
        v[0] * x[0] + v[1] * x[1] + ent + 2f64.ln()
    };
    let (best_t, best) = (0..=10_000)
        .map(|i| i as f64 * 1e-4)
        .map(|t| (t, obj(t)))
        .fold(
            (0.0, f64::INFINITY),
            |acc, c| if c.1 < acc.1 { c } else { acc },
        );
    let g = p.glmo(&v);
    assert!((g.argmin[0] - 0.75).abs() < 1e-12 && (best_t - 0.75).abs() <= 1e-4);
    assert!(g.min_value <= best + 1e-12 && best - g.min_value < 1e-7);
}

#[test]
fn fisher_matches_naive_formula_and_finite_differences() {
    let data = FisherData::generate(2, 2, 9);
    let inst = FisherMarketInstance::new(data.clone(), 0.1, None).unwrap();
    let p = inst.oracles().unwrap();
    let naive = |mu: &[f64]| -> f64 {
        let supply: f64 = mu.iter().map(|m| m.exp()).sum();
        let demand: f64 = data
            .budgets
            .iter()
            .zip(&data.valuations)
            .map(|(b, row)| {
                b * row
                    .iter()
                    .zip(mu)
                    .map(|(v, m)| ((v.ln() - m) / data.delta).exp())
                    .sum::<f64>()
                    .ln()
            })
            .sum();
        supply + data.delta * demand
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let mu: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
        assert!((p.eval_f(&mu) - naive(&mu)).abs() < 1e-12 * (1.0 + naive(&mu).abs()));
    }
    let mu = data.mu_ref.clone();
    let g = p.grad_f(&mu);
    for j in 0..2 {
        let h = 1e-5;
        let mut a = mu.clone();
        let mut b = mu.clone();
        a[j] += h;
        b[j] -= h;
        let fd = (naive(&a) - naive(&b)) / (2.0 * h);
        assert!((fd - g[j]).abs() <= 1e-6 * g[j].abs().max(1.0));
    }
}

#[test]
fn fisher_smoothness_bounds_sampled_curvature() {
    let one = FisherData {
        valuations: vec![vec![1.0]],
        budgets: vec![1.0],
        delta: 1.0,
        mu_lo: vec![-1.0],
        mu_hi: vec![0.0],
        mu_ref: vec![0.0],
    };
    assert!((fisher_smoothness(&one) - 2.0).abs() < 1e-15);
    let two = FisherData { delta: 2.0, ..one };
    assert!((fisher_smoothness(&two) - 1.5).abs() < 1e-15);

    let data = FisherData::generate(3, 4, 11);
    let l_hat = fisher_smoothness(&data);
    let p = FisherMarketInstance::new(data.clone(), 0.1, None)
        .unwrap()
        .oracles()
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let mu: Vec<f64> = (0..4)
            .map(|j| rng.gen_range(data.mu_lo[j]..data.mu_hi[j]))
            .collect();
        let d: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nd = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        let t = 1e-4 / nd;
        let plus: Vec<f64> = mu.iter().zip(&d).map(|(m, di)| m + t * di).collect();
        let minus: Vec<f64> = mu.iter().zip(&d).map(|(m, di)| m - t * di).collect();
        let gp = p.grad_f(&plus);
        let gm = p.grad_f(&minus);
        let curv: f64 = gp
            .iter()
            .zip(&gm)
            .zip(&d)
            .map(|((a, b), di)| (a - b) * di)
            .sum::<f64>()
            / (2.0 * t * nd * nd);
        worst = worst.max(curv);
    }
    assert!(worst <= l_hat, "{worst} > {l_hat}");
}

#[test]
fn fisher_single_buyer_minimizer() {
    let one = FisherData {
        valuations: vec![vec![1.0]],
        budgets: vec![1.0],
        delta: 1.0,
        mu_lo: vec![-2.0],
        mu_hi: vec![2.0],
        mu_ref: vec![0.0],
    };
    let p = FisherMarketInstance::new(one, 0.1, None)
        .unwrap()
        .oracles()
        .unwrap();
    for mu in [-1.0f64, 0.0, 0.7] {
        assert!((p.eval_f(&[mu]) - (mu.exp() - mu)).abs() < 1e-14);
    }
    assert!(p.grad_f(&[0.0])[0].abs() < 1e-15);
}

#[test]
fn toy_iterates_by_hand() {
    let p = QuadBoxToy::new(1, 1.0, 1.0).unwrap().oracles().unwrap();
    let m1 = MdaState::init(&p, &[1.0]).unwrap().step(&p).unwrap();
    assert_eq!((m1.s[0], m1.x[0], m1.y[0]), (0.0, 0.0, 0.5));

    let g1 = GcgState::init(&p, &[1.0]).unwrap().step(&p).unwrap();
    assert_eq!(g1.z[0], 0.0);

    let lambda = 2.0 / (1.0 + 5f64.sqrt());
    assert!((schedule_lambda(1.0, 1.0).unwrap() - lambda).abs() < 1e-15);
    let t1 = TaaState::init(&p, &[1.0]).unwrap().step(&p).unwrap();
    assert!((t1.xtilde[0] - (1.0 - 2.0 * lambda)).abs() < 1e-15);
    assert!((t1.s[0] - (1.0 - 2.0 * lambda * lambda)).abs() < 1e-15);
    assert!((t1.x[0] + 0.236068).abs() < 1e-6);
    assert!((t1.y[0] - 0.236068).abs() < 1e-6);
}

#[test]
fn symmetric_saddle_is_fixed_for_every_method() {
    let p = MatrixGameInstance::from_payoff(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1.0, 1.0)
        .unwrap()
        .oracles()
        .unwrap();
    let u = [0.5, 0.5];
    let mut gem = GemState::init_from_primal(&p, &u).unwrap();
    let mut taa = TaaState::init(&p, &u).unwrap();
    for _ in 0..20 {
        gem = gem.step(&p).unwrap();
        taa = taa.step(&p).unwrap();
        for v in [&gem.g, &gem.z, &gem.v, &taa.y, &taa.x, &taa.xtilde] {
            assert!((v[0] - 0.5).abs() < 1e-15 && (v[1] - 0.5).abs() < 1e-15);
        }
    }
    let opts = CorrespondenceOptions {
        k_max: 50,
        ..Default::default()
    };
    assert!(
        check_correspondence_three_avg(&p, &u, &opts)
            .unwrap()
            .overall
    );
}

fn tiny_instances() -> Vec<(&'static str, ProblemOracles)> {
    vec![
        (
            "game2",
            MatrixGameInstance::generate(2, 7, 0.05, 1.0)
                .unwrap()
                .oracles()
                .unwrap(),
        ),
        (
            "game3",
            MatrixGameInstance::generate(3, 4, 0.1, 1.0)
                .unwrap()
                .oracles()
                .unwrap(),
        ),
        (
            "fisher2x2",
            FisherMarketInstance::generate(2, 2, 7, 0.1)
                .unwrap()
                .oracles()
                .unwrap(),
        ),
        (
            "quadbox2",
            QuadBoxToy::with_bounds(0.5, 2.0, vec![0.2, -1.0], vec![1.0, 1.0])
                .unwrap()
                .oracles()
                .unwrap(),
        ),
    ]
}

#[test]
fn grid_minimum_brackets_converged_values() {
    for (name, p) in tiny_instances() {
        let grid = brute_force_min(&p, GridObjective::Regularized, 1e-4).unwrap();
        for alg in [Algorithm::Mda, Algorithm::Taa] {
            let mut cfg = RunConfig::new(alg, 1e-10);
            cfg.alpha_policy = AlphaPolicy::Explicit(p.alpha());
            cfg.record_every = usize::MAX;
            let out = run_from(&p, &p.default_start(), &cfg).unwrap();
            assert_eq!(out.status, RunStatus::Certified, "{name} {alg}");
            let value = out.last.phi_at_test;
            let gap = out.last.cert_gap.unwrap();
            // The grid value is attained, so it cannot beat the true minimum.
            assert!(
                grid.value >= value - gap - 1e-12,
                "{name} {alg}: {} < {value} - {gap}",
                grid.value
            );
            assert!(
                grid.value - value <= grid.error_bound,
                "{name} {alg}: {} > {}",
                grid.value - value,
                grid.error_bound
            );
        }
    }
}

#[test]
fn quadbox_soundness_with_known_optimum() {
    let p = QuadBoxToy::new(2, 1.0, 1.0).unwrap().oracles().unwrap();
    let r = check_soundness(&p, &[1.0, -1.0], 1e-3, 1e-4, 1_000_000).unwrap();
    assert!(r.overall, "{r:#?}");
    let grid = brute_force_min(&p, GridObjective::Unregularized, 1e-4).unwrap();
    assert!(grid.value.abs() < 1e-15);
}

#[test]
fn soundness_on_tiny_game_and_market() {
    for (name, p) in tiny_instances().into_iter().take(3) {
        let r = check_soundness(&p, &p.default_start(), 1e-2, 1e-4, 1_000_000).unwrap();
        assert!(r.overall, "{name}: {r:#?}");
    }
}
