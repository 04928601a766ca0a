//! Deterministic run loop, learning-rate tuning and suite execution.

use crate::error::Result;
use crate::numerics::{derive_seed, DenseVector, SeededRng};
use crate::optimizers::{step, Method, OptimizerConfig, OptimizerState};
use crate::problems::{make_quadratic_with, Beale, BenchProblem, Problem, ProblemKind, Rosenbrock};

pub const QUADRATIC_BUDGET: u64 = 1000;
pub const NONCONVEX_BUDGET: u64 = 5000;

/// Budget, tolerances and divergence thresholds for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub max_iters: u64,
    pub tol_primary: f64,
    pub tol_high: f64,
    pub x_explode: f64,
    pub f_explode: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            max_iters: QUADRATIC_BUDGET,
            tol_primary: 1e-3,
            tol_high: 1e-6,
            x_explode: 1e10,
            f_explode: 1e10,
        }
    }
}

impl RunConfig {
    pub fn with_max_iters(mut self, max_iters: u64) -> Self {
        self.max_iters = max_iters;
        self
    }

    /// Standard budget for the problem family: 1000 for quadratics, 5000 otherwise.
    pub fn for_kind(kind: &ProblemKind) -> Self {
        let max_iters = if kind.is_quadratic() {
            QUADRATIC_BUDGET
        } else {
            NONCONVEX_BUDGET
        };
        Self::default().with_max_iters(max_iters)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    pub f: f64,
    pub grad_norm: f64,
    pub dist_to_opt: Option<f64>,
    /// Extrapolation coefficient of the step taken from this iterate (HB-SGE only).
    pub alpha_t: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Converged,
    Stagnated,
    Diverged,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::Stagnated => "stagnated",
            RunStatus::Diverged => "diverged",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "converged" => Some(RunStatus::Converged),
            "stagnated" => Some(RunStatus::Stagnated),
            "diverged" => Some(RunStatus::Diverged),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub status: RunStatus,
    pub iters_to_primary: Option<u64>,
    pub iters_to_high: Option<u64>,
    pub divergence_iter: Option<u64>,
    /// Steps actually taken (the budget, or the divergence step).
    pub total_iters: u64,
    pub final_f: f64,
    pub final_grad_norm: f64,
    pub final_dist: Option<f64>,
    pub trace: Vec<TraceRow>,
}

/// True when the iterate or objective exploded or went non-finite.
pub fn detect_divergence(x: &DenseVector, f: f64, cfg: &RunConfig) -> bool {
    !x.is_finite() || !f.is_finite() || x.norm() > cfg.x_explode || f > cfg.f_explode
}

/// Runs `opt` from `x0` until divergence or the budget is spent.
///
/// Reaching a tolerance does not stop the loop, so the trace always covers
/// the full budget unless the run diverges.
pub fn run(problem: &dyn Problem, opt: &OptimizerConfig, cfg: &RunConfig, x0: &DenseVector) -> Result<RunResult> {
    opt.validate()?;
    x0.check_dim(problem.dim())?;
    let optimum = problem.optimum().cloned();

    let mut state = OptimizerState::new(problem.dim());
    let mut trace = Vec::with_capacity(cfg.max_iters.min(1 << 16) as usize + 1);
    let mut iters_to_primary = None;
    let mut iters_to_high = None;
    let mut divergence_iter = None;

    let mut x = x0.clone();
    let mut t = 0u64;
    let (mut f, mut g) = problem.value_grad(&x);
    loop {
        let grad_norm = g.norm();
        trace.push(TraceRow {
            t,
            f,
            grad_norm,
            dist_to_opt: optimum.as_ref().map(|o| x.distance(o)),
            alpha_t: None,
        });
        if divergence_iter.is_some() {
            break;
        }
        if iters_to_primary.is_none() && grad_norm < cfg.tol_primary {
            iters_to_primary = Some(t);
        }
        if iters_to_high.is_none() && grad_norm < cfg.tol_high {
            iters_to_high = Some(t);
        }
        if t == cfg.max_iters {
            break;
        }

        x = step(opt, &mut state, &x, problem)?;
        if opt.method == Method::HbSge {
            trace.last_mut().expect("row pushed above").alpha_t = state.last_alpha;
        }
        t += 1;
        (f, g) = problem.value_grad(&x);
        if detect_divergence(&x, f, cfg) {
            divergence_iter = Some(t);
        }
    }

    let last = trace.last().expect("trace has the initial row");
    let status = if divergence_iter.is_some() {
        RunStatus::Diverged
    } else if iters_to_primary.is_some() {
        RunStatus::Converged
    } else {
        RunStatus::Stagnated
    };
    Ok(RunResult {
        status,
        iters_to_primary,
        iters_to_high,
        divergence_iter,
        total_iters: last.t,
        final_f: last.f,
        final_grad_norm: last.grad_norm,
        final_dist: last.dist_to_opt,
        trace,
    })
}

/// Starting point for a problem family. Quadratics draw `N(0, 4I)` (standard
/// deviation 2) from `rng`; the two-dimensional problems use fixed points.
pub fn initial_point(kind: &ProblemKind, rng: &mut SeededRng) -> DenseVector {
    match kind {
        ProblemKind::Quadratic { dim, .. } => rng.standard_normal(*dim).scaled(2.0),
        ProblemKind::Rosenbrock => DenseVector::new(vec![-1.2, 1.0]),
        ProblemKind::Beale => DenseVector::new(vec![1.0, 1.0]),
    }
}

/// A problem instance with its starting point, built from one seed stream:
/// Q, then b, then x0.
#[derive(Clone, Debug)]
pub struct Instance {
    pub problem: BenchProblem,
    pub x0: DenseVector,
}

pub fn instantiate(kind: &ProblemKind, seed: u64) -> Result<Instance> {
    let mut rng = SeededRng::new(seed);
    let problem = match kind {
        ProblemKind::Quadratic { kappa, dim } => BenchProblem::Quadratic(make_quadratic_with(*kappa, *dim, &mut rng)?),
        ProblemKind::Rosenbrock => BenchProblem::Rosenbrock(Rosenbrock),
        ProblemKind::Beale => BenchProblem::Beale(Beale),
    };
    let x0 = initial_point(kind, &mut rng);
    Ok(Instance { problem, x0 })
}

/// The learning-rate grid searched by [`tune_learning_rate`].
pub const ETA_GRID: [f64; 5] = [0.1, 0.05, 0.01, 0.005, 0.001];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TunedRate {
    pub eta: f64,
    /// False when no grid value let SGD converge; `eta` is then the smallest value.
    pub converged: bool,
}

/// Largest grid value for which plain gradient descent reaches the primary tolerance.
pub fn tune_learning_rate(problem: &dyn Problem, x0: &DenseVector, grid: &[f64], cfg: &RunConfig) -> Result<TunedRate> {
    assert!(!grid.is_empty(), "learning-rate grid must be non-empty");
    let mut sorted = grid.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    for &eta in &sorted {
        let r = run(problem, &OptimizerConfig::sgd(eta), cfg, x0)?;
        if r.status == RunStatus::Converged {
            return Ok(TunedRate { eta, converged: true });
        }
    }
    Ok(TunedRate {
        eta: *sorted.last().expect("non-empty"),
        converged: false,
    })
}

/// A problem family with the learning rate all its optimizers share.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub eta: f64,
}

/// One optimizer configuration in a suite. The learning rate comes from the
/// problem, multiplied by `eta_scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerSpec {
    pub label: String,
    pub slug: String,
    pub method: Method,
    pub beta: f64,
    pub alpha_max: f64,
    pub tau: f64,
    pub eta_scale: f64,
}

impl OptimizerSpec {
    pub fn new(method: Method, beta: f64) -> Self {
        let (label, slug, eta_scale) = match method {
            Method::Sgd => ("SGD".to_string(), "sgd".to_string(), 1.0),
            Method::Momentum => (format!("Momentum(beta={beta})"), "momentum".into(), 1.0),
            Method::Nag => (format!("NAG(beta={beta})"), "nag".into(), 1.0),
            Method::Adam => ("Adam".into(), "adam".into(), 0.5),
            Method::HbSge => (format!("HB-SGE(beta={beta})"), "hbsge".into(), 1.0),
        };
        Self {
            label,
            slug,
            method,
            beta,
            alpha_max: crate::optimizers::DEFAULT_ALPHA_MAX,
            tau: crate::optimizers::DEFAULT_TAU,
            eta_scale,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>, slug: impl Into<String>) -> Self {
        self.label = label.into();
        self.slug = slug.into();
        self
    }

    pub fn config(&self, problem_eta: f64) -> OptimizerConfig {
        let eta = problem_eta * self.eta_scale;
        let base = match self.method {
            Method::Sgd => OptimizerConfig::sgd(eta),
            Method::Momentum => OptimizerConfig::momentum(eta, self.beta),
            Method::Nag => OptimizerConfig::nag(eta, self.beta),
            Method::Adam => OptimizerConfig::adam(eta),
            Method::HbSge => OptimizerConfig::hbsge(eta, self.beta),
        };
        base.with_alpha_max(self.alpha_max).with_tau(self.tau)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Suite {
    pub problems: Vec<ProblemSpec>,
    pub optimizers: Vec<OptimizerSpec>,
    pub seeds: Vec<u64>,
    pub quadratic_budget: u64,
    pub nonconvex_budget: u64,
    pub tol_primary: f64,
    pub tol_high: f64,
}

impl Suite {
    pub fn run_config(&self, kind: &ProblemKind) -> RunConfig {
        RunConfig {
            max_iters: if kind.is_quadratic() {
                self.quadratic_budget
            } else {
                self.nonconvex_budget
            },
            tol_primary: self.tol_primary,
            tol_high: self.tol_high,
            ..RunConfig::default()
        }
    }

    pub fn cell_count(&self) -> usize {
        self.problems.len() * self.optimizers.len() * self.seeds.len()
    }
}

/// The six optimizer configurations compared throughout.
pub fn paper_optimizers() -> Vec<OptimizerSpec> {
    vec![
        OptimizerSpec::new(Method::Sgd, 0.0),
        OptimizerSpec::new(Method::Momentum, 0.9),
        OptimizerSpec::new(Method::Nag, 0.9),
        OptimizerSpec::new(Method::Adam, 0.0),
        OptimizerSpec::new(Method::HbSge, 0.9),
        OptimizerSpec::new(Method::HbSge, 0.95).with_label("HB-SGE-Safe(beta=0.95)", "hbsge-safe"),
    ]
}

/// The published per-problem learning rates.
pub fn paper_problems() -> Vec<ProblemSpec> {
    let quad = |kappa: f64, eta| ProblemSpec {
        kind: ProblemKind::Quadratic { kappa, dim: 10 },
        eta,
    };
    vec![
        quad(10.0, 0.1),
        quad(50.0, 0.05),
        quad(100.0, 0.01),
        quad(500.0, 0.005),
        ProblemSpec {
            kind: ProblemKind::Rosenbrock,
            eta: 0.005,
        },
        ProblemSpec {
            kind: ProblemKind::Beale,
            eta: 0.01,
        },
    ]
}

/// Learning rate used for a problem family when none is given explicitly.
pub fn paper_eta(kind: &ProblemKind) -> Option<f64> {
    paper_problems()
        .into_iter()
        .find(|p| match (&p.kind, kind) {
            (ProblemKind::Quadratic { kappa: a, dim: da }, ProblemKind::Quadratic { kappa: b, dim: db }) => {
                a == b && da == db
            }
            (a, b) => a == b,
        })
        .map(|p| p.eta)
}

pub fn paper_suite(seeds: Vec<u64>) -> Suite {
    Suite {
        problems: paper_problems(),
        optimizers: paper_optimizers(),
        seeds,
        quadratic_budget: QUADRATIC_BUDGET,
        nonconvex_budget: NONCONVEX_BUDGET,
        tol_primary: 1e-3,
        tol_high: 1e-6,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub problem_index: usize,
    pub optimizer_index: usize,
    pub seed: u64,
    pub problem: ProblemKind,
    pub optimizer: String,
    pub optimizer_slug: String,
    pub result: RunResult,
}

/// Runs every (problem, optimizer, seed) cell. Each problem's instance and
/// start point come from a stream derived from `(seed, problem index)`, so all
/// optimizers see the same instance for a given seed. Output order is suite
/// order: problems, then seeds, then optimizers.
pub fn run_suite(suite: &Suite) -> Result<Vec<CellResult>> {
    let mut jobs = Vec::with_capacity(suite.cell_count());
    for (pi, p) in suite.problems.iter().enumerate() {
        for &seed in &suite.seeds {
            for oi in 0..suite.optimizers.len() {
                jobs.push((pi, oi, seed, p));
            }
        }
    }

    let exec = |&(pi, oi, seed, p): &(usize, usize, u64, &ProblemSpec)| -> Result<CellResult> {
        let inst = instantiate(&p.kind, derive_seed(seed, pi as u64))?;
        let spec = &suite.optimizers[oi];
        let result = run(&inst.problem, &spec.config(p.eta), &suite.run_config(&p.kind), &inst.x0)?;
        Ok(CellResult {
            problem_index: pi,
            optimizer_index: oi,
            seed,
            problem: p.kind,
            optimizer: spec.label.clone(),
            optimizer_slug: spec.slug.clone(),
            result,
        })
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        jobs.par_iter().map(exec).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        jobs.iter().map(exec).collect()
    }
}
