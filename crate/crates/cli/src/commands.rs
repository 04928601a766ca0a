use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::Context;
use hbsge_core::harness::{
    instantiate, paper_eta, paper_optimizers, paper_suite, run_suite, tune_learning_rate, OptimizerSpec, RunConfig,
    ETA_GRID,
};
use hbsge_core::problems::{finite_diff_gradient, gradient_rel_error, uniform_spectrum, FD_STEP};
use hbsge_core::report::{
    self, stability_writer, summarize, write_runs_csv, write_stability_rows, write_stability_unavailable,
    write_summary_csv, write_summary_markdown, write_trace_csv, RunRecord,
};
use hbsge_core::stability::predict_spectrum;
use hbsge_core::{run as run_once, DenseVector, Method, OptimizerConfig, Problem, ProblemKind, SeededRng};

use crate::config::{parse_problem_kind, parse_seeds, parse_suite_file};
use crate::{BenchArgs, GradcheckArgs, ProblemArgs, RunArgs, StabilityArgs, TuneArgs};

pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

type Outcome = Result<ExitCode, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Maximum relative gradient error accepted by `gradcheck`.
pub const GRADCHECK_TOL: f64 = 1e-5;

pub fn bench(args: BenchArgs) -> Outcome {
    let (mut suite, file_out, file_jobs) = match (&args.config, args.paper_grid) {
        (Some(_), true) => return Err(usage("give either a suite file or --paper-grid, not both")),
        (None, false) => return Err(usage("give a suite file or --paper-grid")),
        (None, true) => (paper_suite(vec![42]), None, None),
        (Some(path), false) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let parsed = parse_suite_file(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            (parsed.suite, parsed.out, parsed.jobs)
        }
    };
    if let Some(s) = &args.seeds {
        suite.seeds = parse_seeds(s).map_err(|e| usage(format!("--seeds: {e}")))?;
    }
    let out = args.out.or(file_out).unwrap_or_else(|| "results".into());
    let jobs = args.jobs.or(file_jobs);
    if jobs == Some(0) {
        return Err(usage("--jobs must be at least 1"));
    }

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        pool = pool.num_threads(n);
    }
    let cells = pool.build()?.install(|| run_suite(&suite))?;

    let traces = out.join("traces");
    fs::create_dir_all(&traces).with_context(|| format!("creating {}", traces.display()))?;
    for c in &cells {
        let name = format!("{}_{}_{}.csv", c.problem.slug(), c.optimizer_slug, c.seed);
        write_trace_csv(create(&traces.join(name))?, &c.result.trace)?;
    }
    let rows = summarize(&cells);
    write_summary_csv(create(&out.join("summary.csv"))?, &rows)?;
    let mut md = create(&out.join("summary.md"))?;
    write_summary_markdown(&mut md, &rows)?;
    md.flush()?;
    let records: Vec<RunRecord> = cells.iter().map(RunRecord::from).collect();
    write_runs_csv(create(&out.join("runs.csv"))?, &records)?;

    let mut st = stability_writer(create(&out.join("stability.csv"))?)?;
    for p in &suite.problems {
        if let ProblemKind::Quadratic { kappa, dim } = p.kind {
            let eig = uniform_spectrum(kappa, dim);
            write_stability_block(&mut st, &format!("{}/", p.kind.slug()), &eig, &suite.optimizers, p.eta)?;
        }
    }
    st.flush()?;

    eprintln!(
        "{} runs ({} problems x {} optimizers x {} seeds) written to {}",
        cells.len(),
        suite.problems.len(),
        suite.optimizers.len(),
        suite.seeds.len(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

/// Stability rows for each optimizer; HB-SGE appears twice, linearized at
/// its largest coefficient and at zero (the two ends of the decay schedule).
fn write_stability_block<W: Write>(
    out: &mut hbsge_core::report::CsvWriter<W>,
    prefix: &str,
    eigenvalues: &[f64],
    optimizers: &[OptimizerSpec],
    eta: f64,
) -> Result<(), Failure> {
    for spec in optimizers {
        let cfg = spec.config(eta);
        let label = format!("{prefix}{}", spec.slug);
        match spec.method {
            Method::Adam => write_stability_unavailable(out, &label, eigenvalues)?,
            Method::HbSge => {
                for alpha in [cfg.alpha_max, 0.0] {
                    let r = predict_spectrum(eigenvalues, &cfg, alpha)?;
                    write_stability_rows(out, &format!("{label}(alpha={alpha})"), &r)?;
                }
            }
            _ => write_stability_rows(out, &label, &predict_spectrum(eigenvalues, &cfg, 0.0)?)?,
        }
    }
    Ok(())
}

pub fn stability(args: StabilityArgs) -> Outcome {
    if !(args.kappa >= 1.0) {
        return Err(usage(format!("--kappa must be >= 1, got {}", args.kappa)));
    }
    if args.dim < 1 {
        return Err(usage("--dim must be >= 1"));
    }
    if !(args.eta > 0.0) {
        return Err(usage(format!("--eta must be positive, got {}", args.eta)));
    }
    if !(0.0..1.0).contains(&args.beta) {
        return Err(usage(format!("--beta must lie in [0, 1), got {}", args.beta)));
    }
    if !(args.alpha >= 0.0) {
        return Err(usage(format!("--alpha must be >= 0, got {}", args.alpha)));
    }
    let eig = uniform_spectrum(args.kappa, args.dim);
    let optimizers: Vec<OptimizerSpec> = paper_optimizers()
        .into_iter()
        .map(|mut s| {
            if s.slug != "hbsge-safe" && s.beta != 0.0 {
                s.beta = args.beta;
            }
            s.alpha_max = args.alpha;
            s.eta_scale = 1.0;
            s
        })
        .collect();

    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = stability_writer(sink)?;
    write_stability_block(&mut w, "", &eig, &optimizers, args.eta)?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn problem_kind(p: &ProblemArgs) -> Result<ProblemKind, Failure> {
    parse_problem_kind(&p.problem, p.kappa, p.dim).map_err(usage)
}

pub fn run(args: RunArgs) -> Outcome {
    let kind = problem_kind(&args.problem)?;
    let method = Method::parse(&args.opt).ok_or_else(|| usage(format!("unknown optimizer {:?}", args.opt)))?;
    let eta = args
        .eta
        .or_else(|| paper_eta(&kind))
        .ok_or_else(|| usage(format!("{kind}: no published learning rate, pass --eta")))?;
    let default_beta = match method {
        Method::Momentum | Method::Nag | Method::HbSge => 0.9,
        _ => 0.0,
    };
    let mut spec = OptimizerSpec::new(method, args.beta.unwrap_or(default_beta));
    spec.eta_scale = 1.0;
    spec.alpha_max = args.alpha_max;
    spec.tau = args.tau;
    let cfg: OptimizerConfig = spec.config(eta);
    cfg.validate().map_err(|e| usage(e.to_string()))?;

    let mut run_cfg = RunConfig::for_kind(&kind);
    if let Some(n) = args.max_iters {
        if n == 0 {
            return Err(usage("--max-iters must be at least 1"));
        }
        run_cfg.max_iters = n;
    }
    let inst = instantiate(&kind, args.problem.seed)?;
    let result = run_once(&inst.problem, &cfg, &run_cfg, &inst.x0)?;

    match &args.trace {
        Some(path) => write_trace_csv(create(path)?, &result.trace)?,
        None => write_trace_csv(io::stdout().lock(), &result.trace)?,
    }
    eprintln!(
        "{} {} eta={}: {} iters_to_1e-3={} iters_to_1e-6={} total_iters={} final_f={} final_grad_norm={}",
        kind,
        spec.label,
        cfg.eta,
        result.status.as_str(),
        opt_str(result.iters_to_primary),
        opt_str(result.iters_to_high),
        result.total_iters,
        report::fmt_table(result.final_f),
        report::fmt_table(result.final_grad_norm),
    );
    Ok(ExitCode::SUCCESS)
}

fn opt_str(v: Option<u64>) -> String {
    v.map_or_else(|| "-".into(), |v| v.to_string())
}

pub fn gradcheck(args: GradcheckArgs) -> Outcome {
    if args.points == 0 {
        return Err(usage("--points must be at least 1"));
    }
    let kind = problem_kind(&args.problem)?;
    let inst = instantiate(&kind, args.problem.seed)?;
    let mut rng = SeededRng::new(args.problem.seed ^ 0x6772_6164);
    let mut worst = (0.0f64, DenseVector::zeros(kind.dim()));
    for _ in 0..args.points {
        let x: DenseVector = (0..kind.dim())
            .map(|_| rng.uniform(-3.0, 3.0))
            .collect::<Vec<_>>()
            .into();
        let err = gradient_rel_error(
            &inst.problem.gradient(&x),
            &finite_diff_gradient(&inst.problem, &x, FD_STEP),
        );
        if !(err <= worst.0) {
            worst = (err, x);
        }
    }
    let ok = worst.0 <= GRADCHECK_TOL;
    println!(
        "{kind}: {} points, max relative error {:.3e} at {:?} ({})",
        args.points,
        worst.0,
        worst.1.as_slice(),
        if ok { "ok" } else { "FAILED" }
    );
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

pub fn tune(args: TuneArgs) -> Outcome {
    let kind = problem_kind(&args.problem)?;
    let grid = match &args.grid {
        Some(g) => g
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| usage(format!("--grid: cannot parse {g:?}")))?,
        None => ETA_GRID.to_vec(),
    };
    if grid.is_empty() || grid.iter().any(|&e| !(e > 0.0)) {
        return Err(usage("--grid must hold positive learning rates"));
    }
    let inst = instantiate(&kind, args.problem.seed)?;
    let tuned = tune_learning_rate(&inst.problem, &inst.x0, &grid, &RunConfig::for_kind(&kind))?;
    if tuned.converged {
        println!("{kind}: eta = {}", tuned.eta);
    } else {
        println!("{kind}: eta = {} (no grid value converged)", tuned.eta);
    }
    Ok(ExitCode::SUCCESS)
}
