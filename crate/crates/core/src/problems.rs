//! Benchmark objectives: prescribed-spectrum quadratics, Rosenbrock and Beale.

use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::{random_orthogonal, solve_spd, DenseMatrix, DenseVector, SeededRng};

/// An objective with an analytic gradient.
///
/// Non-finite values are returned as computed; callers that care (the run
/// loop) detect them.
pub trait Problem: Send + Sync {
    fn name(&self) -> String;
    fn dim(&self) -> usize;
    fn value(&self, x: &DenseVector) -> f64;
    fn gradient(&self, x: &DenseVector) -> DenseVector;

    fn value_grad(&self, x: &DenseVector) -> (f64, DenseVector) {
        (self.value(x), self.gradient(x))
    }

    fn optimum(&self) -> Option<&DenseVector> {
        None
    }

    fn lipschitz(&self) -> Option<f64> {
        None
    }

    fn strong_convexity(&self) -> Option<f64> {
        None
    }
}

/// `f(x) = 1/2 x^T A x - b^T x` with `A = Q diag(eigenvalues) Q^T`.
#[derive(Clone, Debug)]
pub struct QuadraticProblem {
    a: DenseMatrix,
    b: DenseVector,
    q: DenseMatrix,
    eigenvalues: Vec<f64>,
    kappa: f64,
    optimum: DenseVector,
}

impl QuadraticProblem {
    /// Builds the quadratic from an explicit eigenbasis and spectrum.
    pub fn from_parts(q: DenseMatrix, eigenvalues: Vec<f64>, b: DenseVector) -> Result<Self> {
        let d = eigenvalues.len();
        if q.rows() != d || q.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: q.rows(),
            });
        }
        b.check_dim(d)?;
        let scaled = {
            let mut s = q.clone();
            for i in 0..d {
                for (j, lam) in eigenvalues.iter().enumerate() {
                    s[(i, j)] *= lam;
                }
            }
            s
        };
        let mut a = scaled.matmul(&q.transpose())?;
        a.symmetrize_from_upper();
        let optimum = solve_spd(&a, &b)?;
        let (lo, hi) = eigenvalues
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &l| {
                (lo.min(l), hi.max(l))
            });
        Ok(Self {
            a,
            b,
            q,
            eigenvalues,
            kappa: hi / lo,
            optimum,
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn rhs(&self) -> &DenseVector {
        &self.b
    }

    /// The orthogonal eigenbasis used in construction (column i pairs with eigenvalue i).
    pub fn eigenbasis(&self) -> &DenseMatrix {
        &self.q
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

/// Uniformly spaced spectrum `1, ..., kappa` of length `d`.
pub fn uniform_spectrum(kappa: f64, d: usize) -> Vec<f64> {
    if d == 1 {
        return vec![1.0];
    }
    (0..d)
        .map(|i| 1.0 + i as f64 * (kappa - 1.0) / (d - 1) as f64)
        .collect()
}

/// Random quadratic with eigenvalues uniformly spaced on `[1, kappa]`.
///
/// Draw order from the seed's stream: the Gaussian matrix for Q, then b.
pub fn make_quadratic(kappa: f64, d: usize, seed: u64) -> Result<QuadraticProblem> {
    make_quadratic_with(kappa, d, &mut SeededRng::new(seed))
}

/// [`make_quadratic`] drawing from a caller-owned stream, which is left
/// positioned after b (ready for the initial point).
pub fn make_quadratic_with(kappa: f64, d: usize, rng: &mut SeededRng) -> Result<QuadraticProblem> {
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::InvalidKappa(kappa));
    }
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let q = random_orthogonal(rng, d);
    let b = rng.standard_normal(d);
    QuadraticProblem::from_parts(q, uniform_spectrum(kappa, d), b)
}

/// Value and gradient of a quadratic at `x`.
pub fn quadratic_value_grad(p: &QuadraticProblem, x: &DenseVector) -> Result<(f64, DenseVector)> {
    let ax = p.a.matvec(x)?;
    let value = 0.5 * x.dot(&ax) - p.b.dot(x);
    Ok((value, ax.sub(&p.b)))
}

impl Problem for QuadraticProblem {
    fn name(&self) -> String {
        format!("Quadratic (kappa={})", self.kappa)
    }

    fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    fn value(&self, x: &DenseVector) -> f64 {
        let ax = self.a.matvec(x).expect("dimension checked by caller");
        0.5 * x.dot(&ax) - self.b.dot(x)
    }

    fn gradient(&self, x: &DenseVector) -> DenseVector {
        self.a.matvec(x).expect("dimension checked by caller").sub(&self.b)
    }

    fn value_grad(&self, x: &DenseVector) -> (f64, DenseVector) {
        quadratic_value_grad(self, x).expect("dimension checked by caller")
    }

    fn optimum(&self) -> Option<&DenseVector> {
        Some(&self.optimum)
    }

    fn lipschitz(&self) -> Option<f64> {
        self.eigenvalues.iter().copied().reduce(f64::max)
    }

    fn strong_convexity(&self) -> Option<f64> {
        self.eigenvalues.iter().copied().reduce(f64::min)
    }
}

fn check_two(x: &[f64]) -> Result<(f64, f64)> {
    match *x {
        [a, b] => Ok((a, b)),
        _ => Err(Error::DimensionMismatch {
            expected: 2,
            actual: x.len(),
        }),
    }
}

/// `(1 - x)^2 + 100 (y - x^2)^2`.
pub fn rosenbrock_value_grad(x: &[f64]) -> Result<(f64, DenseVector)> {
    let (x, y) = check_two(x)?;
    let r = 1.0 - x;
    let s = y - x * x;
    let value = r * r + 100.0 * s * s;
    let grad = DenseVector::new(vec![-2.0 * r - 400.0 * x * s, 200.0 * s]);
    Ok((value, grad))
}

const BEALE_C: [f64; 3] = [1.5, 2.25, 2.625];

/// `sum_k (c_k - x + x y^k)^2` for `k = 1, 2, 3`.
pub fn beale_value_grad(x: &[f64]) -> Result<(f64, DenseVector)> {
    let (x, y) = check_two(x)?;
    let mut value = 0.0;
    let mut gx = 0.0;
    let mut gy = 0.0;
    let mut y_pow = 1.0; // y^(k-1)
    for (k, c) in BEALE_C.iter().enumerate() {
        let k = (k + 1) as f64;
        let y_k = y_pow * y;
        let r = c - x + x * y_k;
        value += r * r;
        gx += 2.0 * r * (y_k - 1.0);
        gy += 2.0 * r * k * x * y_pow;
        y_pow = y_k;
    }
    Ok((value, DenseVector::new(vec![gx, gy])))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Rosenbrock;

#[derive(Clone, Copy, Debug, Default)]
pub struct Beale;

static ROSENBROCK_OPT: [f64; 2] = [1.0, 1.0];
static BEALE_OPT: [f64; 2] = [3.0, 0.5];

macro_rules! two_d_problem {
    ($ty:ty, $label:expr, $f:ident, $opt:ident) => {
        impl Problem for $ty {
            fn name(&self) -> String {
                $label.to_string()
            }
            fn dim(&self) -> usize {
                2
            }
            fn value(&self, x: &DenseVector) -> f64 {
                $f(x).expect("two-dimensional input").0
            }
            fn gradient(&self, x: &DenseVector) -> DenseVector {
                $f(x).expect("two-dimensional input").1
            }
            fn value_grad(&self, x: &DenseVector) -> (f64, DenseVector) {
                $f(x).expect("two-dimensional input")
            }
            fn optimum(&self) -> Option<&DenseVector> {
                use std::sync::OnceLock;
                static CELL: OnceLock<DenseVector> = OnceLock::new();
                Some(CELL.get_or_init(|| DenseVector::from_slice(&$opt)))
            }
        }
    };
}

two_d_problem!(Rosenbrock, "Rosenbrock", rosenbrock_value_grad, ROSENBROCK_OPT);
two_d_problem!(Beale, "Beale", beale_value_grad, BEALE_OPT);

/// Which objective family to build; carries the family's shape parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProblemKind {
    Quadratic { kappa: f64, dim: usize },
    Rosenbrock,
    Beale,
}

impl ProblemKind {
    /// Human-readable label used in tables.
    pub fn label(&self) -> String {
        match self {
            ProblemKind::Quadratic { kappa, .. } => format!("Quadratic (kappa={})", fmt_short(*kappa)),
            ProblemKind::Rosenbrock => "Rosenbrock".into(),
            ProblemKind::Beale => "Beale".into(),
        }
    }

    /// File-name friendly label.
    pub fn slug(&self) -> String {
        match self {
            ProblemKind::Quadratic { kappa, dim } if *dim == 10 => format!("quad-k{}", fmt_short(*kappa)),
            ProblemKind::Quadratic { kappa, dim } => format!("quad-k{}-d{dim}", fmt_short(*kappa)),
            ProblemKind::Rosenbrock => "rosenbrock".into(),
            ProblemKind::Beale => "beale".into(),
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self, ProblemKind::Quadratic { .. })
    }

    pub fn dim(&self) -> usize {
        match self {
            ProblemKind::Quadratic { dim, .. } => *dim,
            _ => 2,
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn fmt_short(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// A constructed objective of any family.
#[derive(Clone, Debug)]
pub enum BenchProblem {
    Quadratic(QuadraticProblem),
    Rosenbrock(Rosenbrock),
    Beale(Beale),
}

impl BenchProblem {
    pub fn as_quadratic(&self) -> Option<&QuadraticProblem> {
        match self {
            BenchProblem::Quadratic(q) => Some(q),
            _ => None,
        }
    }

    fn inner(&self) -> &dyn Problem {
        match self {
            BenchProblem::Quadratic(p) => p,
            BenchProblem::Rosenbrock(p) => p,
            BenchProblem::Beale(p) => p,
        }
    }
}

impl Problem for BenchProblem {
    fn name(&self) -> String {
        self.inner().name()
    }
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn value(&self, x: &DenseVector) -> f64 {
        self.inner().value(x)
    }
    fn gradient(&self, x: &DenseVector) -> DenseVector {
        self.inner().gradient(x)
    }
    fn value_grad(&self, x: &DenseVector) -> (f64, DenseVector) {
        self.inner().value_grad(x)
    }
    fn optimum(&self) -> Option<&DenseVector> {
        self.inner().optimum()
    }
    fn lipschitz(&self) -> Option<f64> {
        self.inner().lipschitz()
    }
    fn strong_convexity(&self) -> Option<f64> {
        self.inner().strong_convexity()
    }
}

/// Central-difference gradient with per-coordinate step `h * max(1, |x_i|)`.
pub fn finite_diff_gradient(p: &dyn Problem, x: &DenseVector, h: f64) -> DenseVector {
    let mut probe = x.clone();
    let mut out = Vec::with_capacity(x.dim());
    for i in 0..x.dim() {
        let step = h * x[i].abs().max(1.0);
        let orig = probe[i];
        probe[i] = orig + step;
        let hi = p.value(&probe);
        probe[i] = orig - step;
        let lo = p.value(&probe);
        probe[i] = orig;
        // use the realized step to cancel representation error in orig +- step
        out.push((hi - lo) / ((orig + step) - (orig - step)));
    }
    out.into()
}

/// Default relative step for [`finite_diff_gradient`].
pub const FD_STEP: f64 = 1e-6;

/// Relative error between two gradients, `|a - b| / max(|a|, |b|, floor)`.
pub fn gradient_rel_error(analytic: &DenseVector, numeric: &DenseVector) -> f64 {
    let scale = analytic.norm().max(numeric.norm()).max(1e-8);
    analytic.sub(numeric).norm() / scale
}
