//! Per-eigenmode linear stability of the update rules on quadratics.
//!
//! On `f(x) = 1/2 x^T A x - b^T x` every linear method decouples along the
//! eigenvectors of A, so each mode evolves by a small fixed matrix. The state
//! layouts (centered at the optimum) are
//!
//! * SGD: `(x_t)`
//! * Momentum, NAG: `(x_t, x_{t-1})`, using `v_t = (x_{t-1} - x_t) / eta`
//! * HB-SGE with a constant coefficient: `(x_t, x_{t-1}, m_t)`, using
//!   `g_{t-1} = lambda x_{t-1}`
//!
//! Alongside the exact radius the report carries the scalar eigenvalue
//! expression `1 - eta*lambda*(1 + alpha*eta*lambda) + beta` and the
//! coefficient bound `2 / (eta L) - 1`, both evaluated as written. Neither is
//! used for the prediction.

use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::{small_spectral_radius, DenseMatrix};
use crate::optimizers::{Method, OptimizerConfig};
use crate::problems::QuadraticProblem;

/// Half-width of the band around `rho = 1` where no outcome is asserted.
pub const MARGINAL_BAND: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Prediction {
    Converge,
    Diverge,
    Marginal,
}

impl Prediction {
    pub fn from_radius(rho: f64) -> Self {
        if rho < 1.0 - MARGINAL_BAND {
            Prediction::Converge
        } else if rho > 1.0 + MARGINAL_BAND {
            Prediction::Diverge
        } else {
            Prediction::Marginal
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Prediction::Converge => "converge",
            Prediction::Diverge => "diverge",
            Prediction::Marginal => "marginal",
        }
    }
}

impl fmt::Display for Prediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One-step update matrix of a single eigenmode with curvature `lambda`.
///
/// `alpha` is only read for HB-SGE; Adam has no linear update and is rejected.
pub fn mode_matrix(method: Method, lambda: f64, eta: f64, beta: f64, alpha: f64) -> Result<DenseMatrix> {
    let s = eta * lambda;
    Ok(match method {
        Method::Sgd => DenseMatrix::from_rows(&[[1.0 - s]]),
        Method::Momentum => DenseMatrix::from_rows(&[[1.0 + beta - s, -beta], [1.0, 0.0]]),
        Method::Nag => DenseMatrix::from_rows(&[[(1.0 + beta) * (1.0 - s), -beta * (1.0 - s)], [1.0, 0.0]]),
        Method::HbSge => {
            let w = 1.0 - beta;
            DenseMatrix::from_rows(&[
                [
                    1.0 - eta * w * lambda * (1.0 + alpha),
                    eta * w * alpha * lambda,
                    -eta * beta,
                ],
                [1.0, 0.0, 0.0],
                [w * lambda * (1.0 + alpha), -w * alpha * lambda, beta],
            ])
        }
        Method::Adam => return Err(Error::UnknownMethod(method.to_string())),
    })
}

/// Spectral radius of [`mode_matrix`].
pub fn mode_radius(method: Method, lambda: f64, eta: f64, beta: f64, alpha: f64) -> Result<f64> {
    small_spectral_radius(&mode_matrix(method, lambda, eta, beta, alpha)?)
}

/// `1 - eta*lambda*(1 + alpha*eta*lambda) + beta`, evaluated as written.
pub fn hbsge_closed_form_eigen(lambda: f64, eta: f64, beta: f64, alpha: f64) -> f64 {
    1.0 - eta * lambda * (1.0 + alpha * eta * lambda) + beta
}

/// `2 / (eta L) - 1`.
pub fn theorem_alpha_bound(eta: f64, lipschitz: f64) -> f64 {
    2.0 / (eta * lipschitz) - 1.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeRadius {
    pub lambda: f64,
    pub rho: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub method: Method,
    pub per_mode: Vec<ModeRadius>,
    pub max_rho: f64,
    pub predicted: Prediction,
    /// HB-SGE only: the scalar closed-form value per mode.
    pub closed_form_hbsge: Option<Vec<f64>>,
    /// HB-SGE only: `2 / (eta L) - 1`.
    pub alpha_bound: Option<f64>,
    /// Coefficient the HB-SGE modes were linearized at.
    pub alpha: Option<f64>,
}

/// Stability report for `opt` on a quadratic; HB-SGE is analysed with the
/// extrapolation coefficient frozen at `alpha_fixed`.
pub fn predict(problem: &QuadraticProblem, opt: &OptimizerConfig, alpha_fixed: f64) -> Result<StabilityReport> {
    predict_spectrum(problem.eigenvalues(), opt, alpha_fixed)
}

/// [`predict`] from an explicit Hessian spectrum.
pub fn predict_spectrum(eigenvalues: &[f64], opt: &OptimizerConfig, alpha_fixed: f64) -> Result<StabilityReport> {
    let per_mode = eigenvalues
        .iter()
        .map(|&lambda| {
            mode_radius(opt.method, lambda, opt.eta, opt.beta, alpha_fixed).map(|rho| ModeRadius { lambda, rho })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_rho = per_mode.iter().map(|m| m.rho).fold(0.0, f64::max);
    let is_hbsge = opt.method == Method::HbSge;
    let lipschitz = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(StabilityReport {
        method: opt.method,
        max_rho,
        predicted: Prediction::from_radius(max_rho),
        closed_form_hbsge: is_hbsge.then(|| {
            eigenvalues
                .iter()
                .map(|&l| hbsge_closed_form_eigen(l, opt.eta, opt.beta, alpha_fixed))
                .collect()
        }),
        alpha_bound: is_hbsge.then(|| theorem_alpha_bound(opt.eta, lipschitz)),
        alpha: is_hbsge.then_some(alpha_fixed),
        per_mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_top_mode_at_kappa_50() {
        let m = mode_matrix(Method::Sgd, 50.0, 0.05, 0.0, 0.0).unwrap();
        assert_eq!(m.as_slice(), &[-1.5]);
        assert_eq!(
            Prediction::from_radius(small_spectral_radius(&m).unwrap()),
            Prediction::Diverge
        );
    }

    #[test]
    fn momentum_top_mode_at_kappa_50() {
        let m = mode_matrix(Method::Momentum, 50.0, 0.05, 0.9, 0.0).unwrap();
        let expect = DenseMatrix::from_rows(&[[-0.6, -0.9], [1.0, 0.0]]);
        assert!(m.max_abs_diff(&expect) < 1e-15);
        assert!((small_spectral_radius(&m).unwrap() - 0.9f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn nag_matches_printed_form() {
        let (l, eta, beta) = (37.0, 0.05, 0.9);
        let m = mode_matrix(Method::Nag, l, eta, beta, 0.0).unwrap();
        let printed = DenseMatrix::from_rows(&[
            [1.0 + beta - eta * l * (1.0 + beta), -beta + eta * l * beta],
            [1.0, 0.0],
        ]);
        assert!(m.max_abs_diff(&printed) < 1e-13);
    }

    #[test]
    fn hbsge_alpha_zero_matches_ema_recurrence() {
        // EMA momentum in (x_t, x_{t-1}) form: x+ = (1 + beta - eta(1-beta)lambda) x - beta x-
        let mut rng = crate::numerics::SeededRng::new(4);
        for _ in 0..50 {
            let lambda = rng.uniform(0.5, 500.0);
            let eta = rng.uniform(0.001, 0.1);
            let beta = rng.uniform(0.0, 0.99);
            let three = mode_radius(Method::HbSge, lambda, eta, beta, 0.0).unwrap();
            let two = small_spectral_radius(&DenseMatrix::from_rows(&[
                [1.0 + beta - eta * (1.0 - beta) * lambda, -beta],
                [1.0, 0.0],
            ]))
            .unwrap();
            assert!((three - two).abs() < 1e-9, "{three} vs {two}");
        }
    }

    #[test]
    fn closed_form_examples() {
        assert!((hbsge_closed_form_eigen(50.0, 0.05, 0.9, 1.2) + 8.1).abs() < 1e-12);
        assert!((hbsge_closed_form_eigen(1.0, 0.1, 0.0, 0.0) - 0.9).abs() < 1e-15);
        assert_eq!(hbsge_closed_form_eigen(123.0, 0.0, 0.9, 1.2), 1.9);
    }

    #[test]
    fn alpha_bound_examples() {
        assert!((theorem_alpha_bound(0.05, 50.0) + 0.2).abs() < 1e-12);
        assert!((theorem_alpha_bound(0.01, 100.0) - 1.0).abs() < 1e-12);
        assert!((theorem_alpha_bound(1.0 / 7.0, 7.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn adam_has_no_mode_matrix() {
        assert!(matches!(
            mode_matrix(Method::Adam, 1.0, 0.1, 0.9, 0.0),
            Err(Error::UnknownMethod(_))
        ));
    }

    #[test]
    fn predictions_on_grid_settings() {
        let spec = |k| crate::problems::uniform_spectrum(k, 10);
        let r = predict_spectrum(&spec(50.0), &OptimizerConfig::sgd(0.05), 0.0).unwrap();
        assert_eq!(r.predicted, Prediction::Diverge);
        assert!((r.max_rho - 1.5).abs() < 1e-12);
        let r = predict_spectrum(&spec(50.0), &OptimizerConfig::momentum(0.05, 0.9), 0.0).unwrap();
        assert_eq!(r.predicted, Prediction::Converge);
        let r = predict_spectrum(&spec(10.0), &OptimizerConfig::sgd(0.1), 0.0).unwrap();
        assert_eq!(r.predicted, Prediction::Converge);
        assert!((r.max_rho - 0.9).abs() < 1e-12);
        let r = predict_spectrum(&spec(50.0), &OptimizerConfig::hbsge(0.05, 0.9), 1.2).unwrap();
        assert_eq!(r.closed_form_hbsge.as_ref().unwrap().len(), 10);
        assert!((r.alpha_bound.unwrap() + 0.2).abs() < 1e-12);
        assert!(r.closed_form_hbsge.as_ref().unwrap()[9] < -8.0);
    }

    #[test]
    fn marginal_band() {
        assert_eq!(Prediction::from_radius(0.9985), Prediction::Converge);
        assert_eq!(Prediction::from_radius(1.0005), Prediction::Marginal);
        assert_eq!(Prediction::from_radius(0.9995), Prediction::Marginal);
        assert_eq!(Prediction::from_radius(1.0015), Prediction::Diverge);
    }
}
