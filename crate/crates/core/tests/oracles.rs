//! Optimizers and stability predictions checked against independent recurrences.

use hbsge_core::harness::{instantiate, RunConfig};
use hbsge_core::numerics::SeededRng;
use hbsge_core::optimizers::{step, OptimizerState};
use hbsge_core::problems::{finite_diff_gradient, gradient_rel_error, BenchProblem, FD_STEP};
use hbsge_core::stability::{mode_matrix, mode_radius, predict, Prediction};
use hbsge_core::{run, DenseVector, Method, OptimizerConfig, Problem, ProblemKind, RunStatus};

fn quad(kappa: f64, dim: usize, seed: u64) -> (hbsge_core::QuadraticProblem, DenseVector) {
    let inst = instantiate(&ProblemKind::Quadratic { kappa, dim }, seed).unwrap();
    match inst.problem {
        BenchProblem::Quadratic(q) => (q, inst.x0),
        _ => unreachable!(),
    }
}

fn config_for(method: Method, eta: f64, beta: f64, alpha: f64) -> OptimizerConfig {
    match method {
        Method::Sgd => OptimizerConfig::sgd(eta),
        Method::Momentum => OptimizerConfig::momentum(eta, beta),
        Method::Nag => OptimizerConfig::nag(eta, beta),
        Method::HbSge => OptimizerConfig::hbsge(eta, beta).with_fixed_alpha(alpha),
        Method::Adam => OptimizerConfig::adam(eta),
    }
}

#[test]
fn nag_matches_look_ahead_recurrence() {
    // x_{t+1} = y_t - eta grad f(y_t), y_t = x_t + beta (x_t - x_{t-1})
    for seed in 0..10 {
        let (q, x0) = quad(30.0, 8, seed);
        let (eta, beta) = (0.02, 0.9);
        let cfg = OptimizerConfig::nag(eta, beta);
        let mut state = OptimizerState::new(8);
        let (mut x, mut prev) = (x0.clone(), x0.clone());
        let mut ours = x0;
        for t in 0..20 {
            let y = x.add_scaled(beta, &x.sub(&prev));
            let grad = q.matrix().matvec(&y).unwrap().sub(q.rhs());
            let next = y.add_scaled(-eta, &grad);
            prev = std::mem::replace(&mut x, next);
            ours = step(&cfg, &mut state, &ours, &q).unwrap();
            let err = ours.distance(&x) / x.norm().max(1.0);
            assert!(err <= 1e-12, "seed {seed} step {t}: {err:e}");
        }
    }
}

#[test]
fn nag_scalar_closed_form() {
    // centered scalar mode: x_{t+1} = (1+beta)(1-s) x_t - beta(1-s) x_{t-1}
    let (lambda, eta, beta) = (40.0, 0.02, 0.85);
    let s = eta * lambda;
    let m = mode_matrix(Method::Nag, lambda, eta, beta, 0.0).unwrap();
    assert!((m[(0, 0)] - (1.0 + beta) * (1.0 - s)).abs() < 1e-15);
    assert!((m[(0, 1)] + beta * (1.0 - s)).abs() < 1e-15);
    let p = Scalar(lambda);
    let cfg = OptimizerConfig::nag(eta, beta);
    let mut state = OptimizerState::new(1);
    let mut x = DenseVector::new(vec![1.0]);
    let (mut a, mut b) = (1.0, 1.0);
    for _ in 0..20 {
        x = step(&cfg, &mut state, &x, &p).unwrap();
        (a, b) = ((1.0 + beta) * (1.0 - s) * a - beta * (1.0 - s) * b, a);
        assert!((x[0] - a).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

/// `f(x) = lambda x^2 / 2`.
struct Scalar(f64);

impl Problem for Scalar {
    fn name(&self) -> String {
        "scalar".into()
    }
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, x: &DenseVector) -> f64 {
        0.5 * self.0 * x[0] * x[0]
    }
    fn gradient(&self, x: &DenseVector) -> DenseVector {
        DenseVector::new(vec![self.0 * x[0]])
    }
}

#[test]
fn mode_matrices_match_one_dimensional_runs() {
    let mut rng = SeededRng::new(31);
    for method in [Method::Sgd, Method::Momentum, Method::Nag, Method::HbSge] {
        for _ in 0..50 {
            let lambda = rng.uniform(1.0, 500.0);
            let eta = rng.uniform(0.0, 3.0) / lambda;
            let beta = rng.uniform(0.0, 0.99);
            let alpha = rng.uniform(0.0, 2.0);
            let m = mode_matrix(method, lambda, eta, beta, alpha).unwrap();
            let rho = mode_radius(method, lambda, eta, beta, alpha).unwrap();

            // the matrix applied to the state must reproduce the optimizer step exactly
            let p = Scalar(lambda);
            let cfg = config_for(method, eta, beta, alpha);
            let mut state = OptimizerState::new(1);
            let mut x = DenseVector::new(vec![1.0]);
            // linearized state (x_t, x_{t-1}, m_t) with zero initial momentum
            let n = m.rows();
            let mut lin = [1.0, 1.0, 0.0];
            let start = lin[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut norm = start;
            for _ in 0..200 {
                x = step(&cfg, &mut state, &x, &p).unwrap();
                let prev = lin;
                for (i, v) in lin.iter_mut().enumerate().take(n) {
                    *v = (0..n).map(|j| m[(i, j)] * prev[j]).sum();
                }
                let tol = 1e-9 * lin[0].abs().max(1.0);
                assert!((x[0] - lin[0]).abs() <= tol, "{method}: {} vs {}", x[0], lin[0]);
                norm = lin[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
            }
            let ratio = norm / start;
            if rho < 0.99 {
                assert!(ratio <= 0.1, "{method} rho {rho} ratio {ratio}");
            } else if rho > 1.01 {
                assert!(ratio >= 10.0, "{method} rho {rho} ratio {ratio}");
            }
        }
    }
}

#[test]
fn zero_alpha_is_ema_momentum() {
    let kinds = [
        ProblemKind::Quadratic { kappa: 100.0, dim: 10 },
        ProblemKind::Rosenbrock,
        ProblemKind::Beale,
    ];
    for kind in kinds {
        let inst = instantiate(&kind, 3).unwrap();
        let (eta, beta) = (0.004, 0.9);
        let cfg = OptimizerConfig::hbsge(eta, beta).with_alpha_max(0.0);
        let mut state = OptimizerState::new(kind.dim());
        let mut x = inst.x0.clone();
        let mut r = inst.x0.to_vec();
        let mut m = vec![0.0; r.len()];
        for t in 0..100 {
            let g = inst.problem.gradient(&DenseVector::from_slice(&r));
            for i in 0..r.len() {
                m[i] = beta * m[i] + (1.0 - beta) * g[i];
                r[i] -= eta * m[i];
            }
            x = step(&cfg, &mut state, &x, &inst.problem).unwrap();
            for (a, b) in x.iter().zip(&r) {
                assert_eq!(a.to_bits(), b.to_bits(), "{kind} step {t}");
            }
        }
    }
}

#[test]
fn fixed_alpha_meets_iteration_bound() {
    let mut rng = SeededRng::new(55);
    let (alpha, beta, eps) = (0.5, 0.9, 1e-6);
    for seed in 0..50 {
        let (q, x0) = quad(rng.uniform(1.0, 20.0), 10, seed);
        let eta = 1.0 / (q.lipschitz().unwrap() * (1.0 + alpha));
        let d0 = x0.distance(q.optimum().unwrap()).powi(2);
        let bound = 2.0 / (eta * q.strong_convexity().unwrap() * (1.0 - beta)) * (d0 / eps).ln();
        let cfg = OptimizerConfig::hbsge(eta, beta).with_fixed_alpha(alpha);
        let r = run(&q, &cfg, &RunConfig::default().with_max_iters(bound.ceil() as u64), &x0).unwrap();
        let hit = r.trace.iter().position(|row| row.dist_to_opt.unwrap().powi(2) <= eps);
        assert!(
            hit.is_some_and(|t| t as f64 <= bound),
            "seed {seed}: {hit:?} vs {bound}"
        );
    }
}

#[test]
fn predictions_match_runs() {
    let budget = RunConfig::default().with_max_iters(50_000);
    let mut rng = SeededRng::new(12);
    let grid = [0.1, 0.05, 0.01, 0.005, 0.001];
    for seed in 0..40 {
        let kappa = rng.uniform(2.0, 500.0);
        let eta = grid[seed as usize % grid.len()];
        let (q, x0) = quad(kappa, 10, 500 + seed);
        for method in [Method::Sgd, Method::Momentum, Method::Nag] {
            let cfg = config_for(method, eta, 0.9, 0.0);
            let status = run(&q, &cfg, &budget, &x0).unwrap().status;
            match predict(&q, &cfg, 0.0).unwrap().predicted {
                Prediction::Converge => assert_eq!(status, RunStatus::Converged, "{method} kappa {kappa} eta {eta}"),
                Prediction::Diverge => assert_eq!(status, RunStatus::Diverged, "{method} kappa {kappa} eta {eta}"),
                Prediction::Marginal => {}
            }
        }
    }
}

#[test]
fn analytic_gradients_match_finite_differences() {
    let mut rng = SeededRng::new(99);
    for kind in [
        ProblemKind::Quadratic { kappa: 500.0, dim: 10 },
        ProblemKind::Rosenbrock,
        ProblemKind::Beale,
    ] {
        let p = instantiate(&kind, 1).unwrap().problem;
        for _ in 0..100 {
            let x: DenseVector = (0..kind.dim())
                .map(|_| rng.uniform(-3.0, 3.0))
                .collect::<Vec<_>>()
                .into();
            let err = gradient_rel_error(&p.gradient(&x), &finite_diff_gradient(&p, &x, FD_STEP));
            assert!(err <= 1e-5, "{kind} at {:?}: {err:e}", x.as_slice());
        }
    }
}
