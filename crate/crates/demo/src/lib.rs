//! WebAssembly bindings behind `www/index.html`.
//!
//! Each export returns a JSON string; the page draws it on a canvas. The
//! plain-Rust functions underneath are what the tests exercise.

use hbsge_core::harness::{detect_divergence, instantiate, paper_optimizers, RunConfig};
use hbsge_core::optimizers::{step, OptimizerState};
use hbsge_core::problems::{Beale, Rosenbrock};
use hbsge_core::stability::{hbsge_closed_form_eigen, mode_radius};
use hbsge_core::{run, DenseVector, Method, OptimizerConfig, Problem, ProblemKind};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct Trajectory {
    pub points: Vec<[f64; 2]>,
    pub f: Vec<f64>,
    pub iters_to_primary: Option<usize>,
    pub diverged_at: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct Landscape {
    pub n: usize,
    pub bounds: [f64; 4],
    /// `log10(f - f_min + 1e-12)` on an n x n grid, row-major from the bottom row.
    pub log_f: Vec<f64>,
    pub minimum: [f64; 2],
}

#[derive(Debug, Serialize)]
pub struct Curve {
    pub label: String,
    pub grad_norm: Vec<f64>,
    pub status: String,
    pub iters_to_primary: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct StabilityCurves {
    pub lambda: Vec<f64>,
    pub sgd: Vec<f64>,
    pub momentum: Vec<f64>,
    pub nag: Vec<f64>,
    pub hbsge: Vec<f64>,
    /// Absolute value of the scalar closed-form HB-SGE factor.
    pub hbsge_closed_form: Vec<f64>,
}

fn surface(name: &str) -> Result<Box<dyn Problem>, String> {
    match name {
        "rosenbrock" => Ok(Box::new(Rosenbrock)),
        "beale" => Ok(Box::new(Beale)),
        other => Err(format!("unknown surface {other:?}")),
    }
}

fn optimizer(method: &str, eta: f64, beta: f64, alpha_max: f64) -> Result<OptimizerConfig, String> {
    let method = Method::parse(method).ok_or_else(|| format!("unknown optimizer {method:?}"))?;
    let cfg = match method {
        Method::Sgd => OptimizerConfig::sgd(eta),
        Method::Momentum => OptimizerConfig::momentum(eta, beta),
        Method::Nag => OptimizerConfig::nag(eta, beta),
        Method::Adam => OptimizerConfig::adam(eta),
        Method::HbSge => OptimizerConfig::hbsge(eta, beta).with_alpha_max(alpha_max),
    };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

/// Iterates of one optimizer on a 2-D surface, stopping at divergence.
#[allow(clippy::too_many_arguments)]
pub fn trajectory_on(
    name: &str,
    method: &str,
    eta: f64,
    beta: f64,
    alpha_max: f64,
    steps: usize,
    x0: f64,
    y0: f64,
) -> Result<Trajectory, String> {
    let p = surface(name)?;
    let cfg = optimizer(method, eta, beta, alpha_max)?;
    let limits = RunConfig::default();
    let mut state = OptimizerState::new(2);
    let mut x = DenseVector::new(vec![x0, y0]);
    let mut out = Trajectory {
        points: vec![[x0, y0]],
        f: vec![p.value(&x)],
        iters_to_primary: None,
        diverged_at: None,
    };
    for t in 0..=steps {
        if out.iters_to_primary.is_none() && p.gradient(&x).norm() < limits.tol_primary {
            out.iters_to_primary = Some(t);
        }
        if t == steps {
            break;
        }
        x = step(&cfg, &mut state, &x, p.as_ref()).map_err(|e| e.to_string())?;
        let f = p.value(&x);
        if detect_divergence(&x, f, &limits) {
            out.diverged_at = Some(t + 1);
            break;
        }
        out.points.push([x[0], x[1]]);
        out.f.push(f);
    }
    Ok(out)
}

pub fn landscape_of(name: &str, bounds: [f64; 4], n: usize) -> Result<Landscape, String> {
    let p = surface(name)?;
    let n = n.clamp(2, 400);
    let [x_lo, x_hi, y_lo, y_hi] = bounds;
    let optimum = p.optimum().ok_or("surface has no known minimum")?;
    let f_min = p.value(optimum);
    let mut log_f = Vec::with_capacity(n * n);
    for j in 0..n {
        let y = y_lo + (y_hi - y_lo) * j as f64 / (n - 1) as f64;
        for i in 0..n {
            let x = x_lo + (x_hi - x_lo) * i as f64 / (n - 1) as f64;
            let f = p.value(&DenseVector::new(vec![x, y]));
            log_f.push((f - f_min + 1e-12).log10());
        }
    }
    Ok(Landscape {
        n,
        bounds,
        log_f,
        minimum: [optimum[0], optimum[1]],
    })
}

/// Gradient-norm curves of the six grid configurations on one quadratic.
pub fn race_on(kappa: f64, dim: usize, seed: u64, eta: f64, steps: u64) -> Result<Vec<Curve>, String> {
    if !(kappa >= 1.0) || dim < 2 || !(eta > 0.0) {
        return Err("need kappa >= 1, dim >= 2 and eta > 0".into());
    }
    let inst = instantiate(&ProblemKind::Quadratic { kappa, dim }, seed).map_err(|e| e.to_string())?;
    let limits = RunConfig::default().with_max_iters(steps.clamp(1, 20_000));
    paper_optimizers()
        .iter()
        .map(|spec| {
            let r = run(&inst.problem, &spec.config(eta), &limits, &inst.x0).map_err(|e| e.to_string())?;
            Ok(Curve {
                label: spec.label.clone(),
                grad_norm: r.trace.iter().map(|row| row.grad_norm).collect(),
                status: r.status.as_str().into(),
                iters_to_primary: r.iters_to_primary,
            })
        })
        .collect()
}

/// Spectral radius of each method's per-mode update across `lambda` in (0, lambda_max].
pub fn curves_for(eta: f64, beta: f64, alpha: f64, lambda_max: f64, samples: usize) -> Result<StabilityCurves, String> {
    if !(eta > 0.0) || !(lambda_max > 0.0) || !(0.0..1.0).contains(&beta) || !(alpha >= 0.0) {
        return Err("need eta > 0, lambda_max > 0, 0 <= beta < 1, alpha >= 0".into());
    }
    let samples = samples.clamp(2, 2000);
    let lambda: Vec<f64> = (1..=samples).map(|k| lambda_max * k as f64 / samples as f64).collect();
    let radius = |method| -> Result<Vec<f64>, String> {
        lambda
            .iter()
            .map(|&l| mode_radius(method, l, eta, beta, alpha).map_err(|e| e.to_string()))
            .collect()
    };
    Ok(StabilityCurves {
        sgd: radius(Method::Sgd)?,
        momentum: radius(Method::Momentum)?,
        nag: radius(Method::Nag)?,
        hbsge: radius(Method::HbSge)?,
        hbsge_closed_form: lambda
            .iter()
            .map(|&l| hbsge_closed_form_eigen(l, eta, beta, alpha).abs())
            .collect(),
        lambda,
    })
}

fn to_js<T: Serialize>(v: Result<T, String>) -> Result<String, JsError> {
    let v = v.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn trajectory(
    surface: &str,
    method: &str,
    eta: f64,
    beta: f64,
    alpha_max: f64,
    steps: u32,
    x0: f64,
    y0: f64,
) -> Result<String, JsError> {
    to_js(trajectory_on(
        surface,
        method,
        eta,
        beta,
        alpha_max,
        steps as usize,
        x0,
        y0,
    ))
}

#[wasm_bindgen]
pub fn landscape(surface: &str, x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64, n: u32) -> Result<String, JsError> {
    to_js(landscape_of(surface, [x_lo, x_hi, y_lo, y_hi], n as usize))
}

#[wasm_bindgen]
pub fn race(kappa: f64, dim: u32, seed: u32, eta: f64, steps: u32) -> Result<String, JsError> {
    to_js(race_on(kappa, dim as usize, seed as u64, eta, steps as u64))
}

#[wasm_bindgen]
pub fn stability_curves(eta: f64, beta: f64, alpha: f64, lambda_max: f64, samples: u32) -> Result<String, JsError> {
    to_js(curves_for(eta, beta, alpha, lambda_max, samples as usize))
}
