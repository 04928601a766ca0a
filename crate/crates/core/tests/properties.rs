use hbsge_core::harness::{instantiate, TraceRow};
use hbsge_core::numerics::{solve_spd, DenseMatrix, DenseVector, SeededRng};
use hbsge_core::optimizers::{adaptive_alpha, step, OptimizerState};
use hbsge_core::report::{read_runs_csv, read_trace_csv, write_runs_csv, write_trace_csv, RunRecord};
use hbsge_core::{OptimizerConfig, ProblemKind, RunStatus};
use proptest::prelude::*;

fn finite_or_special() -> impl Strategy<Value = f64> {
    prop_oneof![
        8 => any::<f64>().prop_filter("finite", |v| v.is_finite()),
        1 => Just(f64::INFINITY),
        1 => Just(f64::NEG_INFINITY),
        1 => Just(f64::NAN),
    ]
}

fn same(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
}

proptest! {
    #[test]
    fn alpha_is_bounded_and_decays(t in 0u64..100_000, gn in 0.0..1e3f64, pn in 0.0..1e3f64,
                                   amax in 0.0..5.0f64, tau in 1.0..1e4f64) {
        let a = adaptive_alpha(t, gn, pn, amax, tau);
        prop_assert!(a >= 0.0 && a <= amax);
        prop_assert!(adaptive_alpha(t + 1, gn, pn, amax, tau) <= a);
        let full = adaptive_alpha(t, 0.0, 1.0, amax, tau);
        if gn > pn {
            prop_assert_eq!(a, 0.5 * full);
        } else {
            prop_assert_eq!(a, full);
        }
    }

    #[test]
    fn steps_are_deterministic(kappa in 1.0..200.0f64, seed in any::<u64>(), method in 0usize..5) {
        let inst = instantiate(&ProblemKind::Quadratic { kappa, dim: 6 }, seed).unwrap();
        let cfg = [
            OptimizerConfig::sgd(0.005),
            OptimizerConfig::momentum(0.005, 0.9),
            OptimizerConfig::nag(0.005, 0.9),
            OptimizerConfig::adam(0.005),
            OptimizerConfig::hbsge(0.005, 0.9),
        ][method].clone();
        let trajectory = || {
            let mut state = OptimizerState::new(6);
            let mut x = inst.x0.clone();
            for _ in 0..20 {
                x = step(&cfg, &mut state, &x, &inst.problem).unwrap();
            }
            // Debug output, since the unset previous-norm is NaN
            format!("{x:?} {state:?}")
        };
        prop_assert_eq!(trajectory(), trajectory());
    }

    #[test]
    fn spd_solve_residual(d in 1usize..16, seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let b = DenseMatrix::from_row_major(d, d, (0..d * d).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap();
        let mut a = b.transpose().matmul(&b).unwrap();
        let shifted: Vec<f64> = (0..d * d).map(|k| a.as_slice()[k] + if k % (d + 1) == 0 { 0.5 } else { 0.0 }).collect();
        a = DenseMatrix::from_row_major(d, d, shifted).unwrap();
        let rhs = DenseVector::new((0..d).map(|_| rng.uniform(-5.0, 5.0)).collect());
        let x = solve_spd(&a, &rhs).unwrap();
        let residual = a.matvec(&x).unwrap().sub(&rhs).norm();
        prop_assert!(residual <= 1e-10 * (1.0 + rhs.norm()), "residual {}", residual);
    }

    #[test]
    fn trace_csv_round_trip(rows in prop::collection::vec(
        (finite_or_special(), finite_or_special(), prop::option::of(finite_or_special()), prop::option::of(finite_or_special())),
        0..30,
    )) {
        let trace: Vec<TraceRow> = rows
            .iter()
            .enumerate()
            .map(|(t, &(f, grad_norm, dist_to_opt, alpha_t))| TraceRow { t: t as u64, f, grad_norm, dist_to_opt, alpha_t })
            .collect();
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &trace).unwrap();
        let back = read_trace_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), trace.len());
        for (a, b) in trace.iter().zip(&back) {
            prop_assert_eq!(a.t, b.t);
            prop_assert!(same(a.f, b.f) && same(a.grad_norm, b.grad_norm));
            prop_assert_eq!(a.dist_to_opt.is_some(), b.dist_to_opt.is_some());
            prop_assert!(same(a.dist_to_opt.unwrap_or(0.0), b.dist_to_opt.unwrap_or(0.0)));
            prop_assert!(same(a.alpha_t.unwrap_or(0.0), b.alpha_t.unwrap_or(0.0)));
        }
    }

    #[test]
    fn runs_csv_round_trip(seed in any::<u64>(), its in prop::option::of(0u64..5000), f in finite_or_special(),
                           g in 0.0..1e12f64, status in 0usize..3, name in "[ -~]{0,20}") {
        let rec = RunRecord {
            problem: name.clone(),
            optimizer: format!("{name},\"x\""),
            seed,
            status: [RunStatus::Converged, RunStatus::Stagnated, RunStatus::Diverged][status],
            divergence_iter: its,
            iters_to_primary: its,
            iters_to_high: None,
            total_iters: 5000,
            final_f: f,
            final_grad_norm: g,
            final_dist: Some(g),
        };
        let mut buf = Vec::new();
        write_runs_csv(&mut buf, std::slice::from_ref(&rec)).unwrap();
        let back = read_runs_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), 1);
        let b = &back[0];
        prop_assert!(same(b.final_f, rec.final_f));
        prop_assert_eq!(
            RunRecord { final_f: 0.0, ..b.clone() },
            RunRecord { final_f: 0.0, ..rec }
        );
    }
}
