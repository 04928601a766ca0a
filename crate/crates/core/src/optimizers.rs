//! First-order update rules behind one stepping contract.
//!
//! Every method performs exactly one gradient evaluation per step. The step
//! takes the objective itself rather than a precomputed gradient because
//! Nesterov's method evaluates at a look-ahead point.

use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::DenseVector;
use crate::problems::Problem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Sgd,
    Momentum,
    Nag,
    Adam,
    HbSge,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Sgd => "sgd",
            Method::Momentum => "momentum",
            Method::Nag => "nag",
            Method::Adam => "adam",
            Method::HbSge => "hbsge",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "sgd" | "gd" => Some(Method::Sgd),
            "momentum" | "heavyball" => Some(Method::Momentum),
            "nag" | "nesterov" => Some(Method::Nag),
            "adam" => Some(Method::Adam),
            "hbsge" => Some(Method::HbSge),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const DEFAULT_ALPHA_MAX: f64 = 1.2;
pub const DEFAULT_TAU: f64 = 1000.0;

/// Hyperparameters for one optimizer configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub method: Method,
    pub eta: f64,
    /// Momentum coefficient (Momentum, NAG, HB-SGE). Ignored by SGD and Adam.
    pub beta: f64,
    pub alpha_max: f64,
    pub tau: f64,
    /// Replaces the adaptive extrapolation schedule with a constant coefficient.
    pub fixed_alpha: Option<f64>,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl OptimizerConfig {
    fn base(method: Method, eta: f64, beta: f64) -> Self {
        Self {
            method,
            eta,
            beta,
            alpha_max: DEFAULT_ALPHA_MAX,
            tau: DEFAULT_TAU,
            fixed_alpha: None,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }

    pub fn sgd(eta: f64) -> Self {
        Self::base(Method::Sgd, eta, 0.0)
    }

    pub fn momentum(eta: f64, beta: f64) -> Self {
        Self::base(Method::Momentum, eta, beta)
    }

    pub fn nag(eta: f64, beta: f64) -> Self {
        Self::base(Method::Nag, eta, beta)
    }

    pub fn adam(eta: f64) -> Self {
        Self::base(Method::Adam, eta, 0.0)
    }

    pub fn hbsge(eta: f64, beta: f64) -> Self {
        Self::base(Method::HbSge, eta, beta)
    }

    pub fn with_alpha_max(mut self, alpha_max: f64) -> Self {
        self.alpha_max = alpha_max;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_fixed_alpha(mut self, alpha: f64) -> Self {
        self.fixed_alpha = Some(alpha);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return bad(format!("beta must lie in [0, 1), got {}", self.beta));
        }
        if !(self.alpha_max >= 0.0) {
            return bad(format!("alpha_max must be >= 0, got {}", self.alpha_max));
        }
        if !(self.tau > 0.0) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if let Some(a) = self.fixed_alpha {
            if !(a >= 0.0) {
                return bad(format!("fixed alpha must be >= 0, got {a}"));
            }
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("adam moment coefficients must lie in [0, 1)".into());
        }
        Ok(())
    }
}

/// Mutable per-run buffers.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    /// Steps taken so far.
    pub t: u64,
    /// `v` for Momentum/NAG, `m` for HB-SGE.
    pub momentum: DenseVector,
    /// HB-SGE's previous gradient; `None` until the first step, which treats
    /// it as equal to the current gradient.
    pub prev_gradient: Option<DenseVector>,
    pub prev_grad_norm: f64,
    pub adam_m: DenseVector,
    pub adam_v: DenseVector,
    /// Extrapolation coefficient used by the most recent HB-SGE step.
    pub last_alpha: Option<f64>,
}

impl OptimizerState {
    pub fn new(dim: usize) -> Self {
        Self {
            t: 0,
            momentum: DenseVector::zeros(dim),
            prev_gradient: None,
            prev_grad_norm: f64::NAN,
            adam_m: DenseVector::zeros(dim),
            adam_v: DenseVector::zeros(dim),
            last_alpha: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.momentum.dim()
    }
}

/// Extrapolation coefficient: `alpha_max * exp(-t / tau)`, halved when the
/// gradient norm grew. Equal norms count as non-increasing.
pub fn adaptive_alpha(t: u64, grad_norm: f64, prev_grad_norm: f64, alpha_max: f64, tau: f64) -> f64 {
    let alpha = alpha_max * (-(t as f64) / tau).exp();
    if grad_norm > prev_grad_norm {
        0.5 * alpha
    } else {
        alpha
    }
}

/// `g + alpha * (g - g_prev)`.
pub fn synthetic_gradient(g: &DenseVector, g_prev: &DenseVector, alpha: f64) -> Result<DenseVector> {
    g_prev.check_dim(g.dim())?;
    Ok(g.iter()
        .zip(g_prev.iter())
        .map(|(gi, pi)| gi + alpha * (gi - pi))
        .collect::<Vec<_>>()
        .into())
}

/// Advances one iteration from `x`, returning the next iterate.
pub fn step(
    config: &OptimizerConfig,
    state: &mut OptimizerState,
    x: &DenseVector,
    problem: &dyn Problem,
) -> Result<DenseVector> {
    let dim = problem.dim();
    x.check_dim(dim)?;
    state.momentum.check_dim(dim)?;
    let eta = config.eta;
    let beta = config.beta;

    let next = match config.method {
        Method::Sgd => {
            let g = problem.gradient(x);
            x.add_scaled(-eta, &g)
        }
        Method::Momentum => {
            let g = problem.gradient(x);
            let v = state.momentum.scaled(beta).add_scaled(1.0, &g);
            let next = x.add_scaled(-eta, &v);
            state.momentum = v;
            next
        }
        Method::Nag => {
            let look_ahead = x.add_scaled(-eta * beta, &state.momentum);
            let g = problem.gradient(&look_ahead);
            let v = state.momentum.scaled(beta).add_scaled(1.0, &g);
            let next = x.add_scaled(-eta, &v);
            state.momentum = v;
            next
        }
        Method::Adam => {
            let g = problem.gradient(x);
            let (b1, b2) = (config.adam_beta1, config.adam_beta2);
            let k = (state.t + 1) as i32;
            let bias1 = 1.0 - b1.powi(k);
            let bias2 = 1.0 - b2.powi(k);
            let mut next = x.clone();
            for i in 0..dim {
                let m = b1 * state.adam_m[i] + (1.0 - b1) * g[i];
                let v = b2 * state.adam_v[i] + (1.0 - b2) * g[i] * g[i];
                state.adam_m[i] = m;
                state.adam_v[i] = v;
                let m_hat = m / bias1;
                let v_hat = v / bias2;
                next[i] -= eta * m_hat / (v_hat.sqrt() + config.adam_eps);
            }
            next
        }
        Method::HbSge => {
            let g = problem.gradient(x);
            let g_norm = g.norm();
            let (g_prev, prev_norm) = match state.prev_gradient.take() {
                Some(p) => (p, state.prev_grad_norm),
                None => (g.clone(), g_norm),
            };
            let alpha = match config.fixed_alpha {
                Some(a) => a,
                None => adaptive_alpha(state.t, g_norm, prev_norm, config.alpha_max, config.tau),
            };
            let synthetic = synthetic_gradient(&g, &g_prev, alpha)?;
            let m = state.momentum.scaled(beta).add_scaled(1.0 - beta, &synthetic);
            let next = x.add_scaled(-eta, &m);
            state.momentum = m;
            state.prev_gradient = Some(g);
            state.prev_grad_norm = g_norm;
            state.last_alpha = Some(alpha);
            next
        }
    };
    state.t += 1;
    Ok(next)
}
