//! Flat `key = value` suite files.
//!
//! ```text
//! # five seeds over the full grid
//! seeds = 41, 42, 43, 44, 45
//! problems = quad kappa=10 eta=0.1; quad kappa=50; rosenbrock; beale
//! optimizers = sgd; momentum beta=0.9; adam; hbsge beta=0.95 label=HB-SGE-Safe(beta=0.95) slug=hbsge-safe
//! quadratic_budget = 1000
//! out = results
//! ```
//!
//! List entries are separated by `;`, each a kind followed by `name=value`
//! overrides. Omitted keys take the defaults of the published grid; an
//! omitted problem learning rate takes the published value for that problem.

use std::collections::BTreeSet;
use std::path::PathBuf;

use hbsge_core::harness::{paper_eta, paper_suite, OptimizerSpec, ProblemSpec, Suite};
use hbsge_core::{Method, ProblemKind};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteFile {
    pub suite: Suite,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

const KEYS: [&str; 9] = [
    "seeds",
    "problems",
    "optimizers",
    "quadratic_budget",
    "nonconvex_budget",
    "tol_primary",
    "tol_high",
    "out",
    "jobs",
];

pub fn parse_suite_file(text: &str) -> Result<SuiteFile, String> {
    let mut suite = paper_suite(vec![42]);
    let mut out = None;
    let mut jobs = None;
    let mut seen = BTreeSet::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| format!("line {}: expected `key = value`", lineno + 1))?;
        if !KEYS.contains(&key) {
            return Err(format!("line {}: unknown key `{key}`", lineno + 1));
        }
        if !seen.insert(key.to_string()) {
            return Err(format!("line {}: duplicate key `{key}`", lineno + 1));
        }
        if value.is_empty() {
            return Err(format!("key `{key}` has an empty value"));
        }
        match key {
            "seeds" => suite.seeds = parse_seeds(value).map_err(|e| format!("seeds: {e}"))?,
            "problems" => suite.problems = parse_list(value, parse_problem).map_err(|e| format!("problems: {e}"))?,
            "optimizers" => {
                suite.optimizers = parse_list(value, parse_optimizer).map_err(|e| format!("optimizers: {e}"))?
            }
            "quadratic_budget" => suite.quadratic_budget = parse_num(key, value)?,
            "nonconvex_budget" => suite.nonconvex_budget = parse_num(key, value)?,
            "tol_primary" => suite.tol_primary = parse_num(key, value)?,
            "tol_high" => suite.tol_high = parse_num(key, value)?,
            "out" => out = Some(PathBuf::from(value)),
            "jobs" => jobs = Some(parse_num(key, value)?),
            _ => unreachable!(),
        }
    }

    if suite.quadratic_budget == 0 || suite.nonconvex_budget == 0 {
        return Err("budgets must be at least 1".into());
    }
    if !(suite.tol_high < suite.tol_primary) {
        return Err("tol_high must be smaller than tol_primary".into());
    }
    Ok(SuiteFile { suite, out, jobs })
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("key `{key}`: cannot parse {value:?}"))
}

pub fn parse_seeds(value: &str) -> Result<Vec<u64>, String> {
    let seeds = value
        .split(',')
        .map(|s| s.trim().parse::<u64>().map_err(|_| format!("bad seed {s:?}")))
        .collect::<Result<Vec<_>, _>>()?;
    if seeds.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(seeds)
}

fn parse_list<T>(value: &str, item: fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    let items = value
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect::<Result<Vec<_>, _>>()?;
    if items.is_empty() {
        return Err("list is empty".into());
    }
    Ok(items)
}

type Entry<'a> = (&'a str, Vec<(&'a str, &'a str)>);

/// Splits `kind a=1 b=2` into the kind and its overrides.
fn split_entry(entry: &str) -> Result<Entry<'_>, String> {
    let mut parts = entry.split_whitespace();
    let kind = parts.next().ok_or("empty entry")?;
    let opts = parts
        .map(|p| {
            p.split_once('=')
                .ok_or_else(|| format!("expected name=value, got {p:?}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((kind, opts))
}

fn num(name: &str, v: &str) -> Result<f64, String> {
    v.parse().map_err(|_| format!("{name}: cannot parse {v:?}"))
}

pub fn parse_problem_kind(kind: &str, kappa: Option<f64>, dim: usize) -> Result<ProblemKind, String> {
    match kind {
        "quad" | "quadratic" => {
            let kappa = kappa.ok_or("quadratic problems need kappa")?;
            if !(kappa >= 1.0) {
                return Err(format!("kappa must be >= 1, got {kappa}"));
            }
            if dim < 2 {
                return Err(format!("quadratic dimension must be >= 2, got {dim}"));
            }
            Ok(ProblemKind::Quadratic { kappa, dim })
        }
        "rosenbrock" => Ok(ProblemKind::Rosenbrock),
        "beale" => Ok(ProblemKind::Beale),
        other => Err(format!("unknown problem {other:?}")),
    }
}

fn parse_problem(entry: &str) -> Result<ProblemSpec, String> {
    let (kind, opts) = split_entry(entry)?;
    let (mut kappa, mut dim, mut eta) = (None, 10usize, None);
    for (k, v) in opts {
        match k {
            "kappa" => kappa = Some(num(k, v)?),
            "dim" => dim = v.parse().map_err(|_| format!("dim: cannot parse {v:?}"))?,
            "eta" => eta = Some(num(k, v)?),
            other => return Err(format!("unknown problem option `{other}`")),
        }
    }
    let kind = parse_problem_kind(kind, kappa, dim)?;
    let eta = match eta.or_else(|| paper_eta(&kind)) {
        Some(e) if e > 0.0 => e,
        Some(e) => return Err(format!("eta must be positive, got {e}")),
        None => return Err(format!("{kind}: no published learning rate, give eta=...")),
    };
    Ok(ProblemSpec { kind, eta })
}

fn parse_optimizer(entry: &str) -> Result<OptimizerSpec, String> {
    let (kind, opts) = split_entry(entry)?;
    let method = Method::parse(kind).ok_or_else(|| format!("unknown optimizer {kind:?}"))?;
    let default_beta = match method {
        Method::Momentum | Method::Nag | Method::HbSge => 0.9,
        Method::Sgd | Method::Adam => 0.0,
    };
    let beta = opts
        .iter()
        .find(|(k, _)| *k == "beta")
        .map(|(k, v)| num(k, v))
        .transpose()?
        .unwrap_or(default_beta);
    let mut spec = OptimizerSpec::new(method, beta);
    for (k, v) in opts {
        match k {
            "beta" => {}
            "alpha_max" => spec.alpha_max = num(k, v)?,
            "tau" => spec.tau = num(k, v)?,
            "eta_scale" => spec.eta_scale = num(k, v)?,
            "label" => spec.label = v.to_string(),
            "slug" => spec.slug = v.to_string(),
            other => return Err(format!("unknown optimizer option `{other}`")),
        }
    }
    spec.config(1.0).validate().map_err(|e| e.to_string())?;
    Ok(spec)
}
