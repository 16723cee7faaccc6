use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use lrr::io::{apply_topcoding, emit_report, ingest_csv, parse_grid, GridSpec, RegressorAtom, Report, RunConfig, RunInfo};
use lrr::lrr::{confidence_set, sensitivity_oracle, CounterfactualContext, DiscretizedSelectionRule, EtaMeasure, Method, ShockRule};
use lrr::models::entry::EntryStructure;
use lrr::models::interval::{IntervalAtom, IntervalLrr, IntervalMoments, IntervalObservation, IntervalStructure};
use lrr::sim::{default_grid, interior, run_coverage, McSpec};
use lrr::{Axis, ParameterGrid, ParameterPoint};

/// Moment-inequality confidence regions with locally robust refinement.
#[derive(Debug, Parser)]
#[command(name = "lrr", version)]
struct Cli {
    /// JSON run configuration; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Coverage study for simulation design 1 or 2.
    Mc(McArgs),
    /// Confidence regions for a wage sample with artificial top-coding.
    Infer(InferArgs),
    /// Brute-force check of the sensitivity bound at one parameter value.
    LrrCheck(CheckArgs),
}

#[derive(Debug, Args, Default)]
struct Common {
    /// Bootstrap replications.
    #[arg(long)]
    boot: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    alpha1: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Grid as `lo:hi:steps,lo:hi:steps` for (beta, gamma).
    #[arg(long)]
    grid: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// conservative or bonferroni.
    #[arg(long)]
    method: Option<String>,
}

#[derive(Debug, Args, Default)]
struct McArgs {
    /// Design 1 or 2.
    #[arg(long)]
    spec: Option<u8>,
    #[arg(long)]
    n: Option<usize>,
    /// Number of simulated datasets.
    #[arg(long)]
    reps: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Default)]
struct InferArgs {
    /// CSV file with header `wage,gender`.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Share of the largest wages to top-code.
    #[arg(long)]
    topcode_frac: Option<f64>,
    /// Upper bound for top-coded wages, on the wage scale.
    #[arg(long)]
    z2: Option<f64>,
    /// Standard deviation of the log-wage shock used by the criterion.
    #[arg(long)]
    shock_scale: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Default)]
struct CheckArgs {
    /// interval or entry.
    #[arg(long)]
    model: Option<String>,
    /// Comma-separated parameter: `beta,gamma` for the interval model,
    /// `beta1,beta2,gamma1...,gamma2...` for the entry game.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    #[arg(long)]
    eta_bins: Option<usize>,
    #[arg(long)]
    perturbations: Option<usize>,
    #[arg(long)]
    scale_k: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for `summary.json`; the report is always printed.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_method(text: &str) -> anyhow::Result<Method> {
    Ok(text.parse::<Method>()?)
}

/// Applies the shared flags on top of `cfg`.
fn apply_common(cfg: &mut RunConfig, c: &Common) -> anyhow::Result<()> {
    let plan = &mut cfg.plan;
    if let Some(b) = c.boot {
        plan.replications = b;
    }
    if let Some(a) = c.alpha {
        plan.alpha = a;
    }
    if let Some(a) = c.alpha1 {
        plan.alpha1 = a;
    }
    if let Some(k) = c.kappa {
        plan.kappa = k;
    }
    if let Some(s) = c.seed {
        plan.seed = s;
    }
    if let Some(g) = &c.grid {
        cfg.grid = Some(GridSpec::from(&parse_grid(g)?));
    }
    if let Some(m) = &c.method {
        cfg.method = parse_method(m)?;
    }
    if let Some(o) = &c.out {
        cfg.output = Some(o.clone());
    }
    Ok(())
}

fn resolve(cli: &Cli) -> anyhow::Result<RunConfig> {
    let base = match &cli.config {
        Some(path) => Some(RunConfig::load(path)?),
        None => None,
    };
    let name = match (&cli.command, &base) {
        (Some(Command::Mc(_)), _) => "mc",
        (Some(Command::Infer(_)), _) => "infer",
        (Some(Command::LrrCheck(_)), _) => "lrr-check",
        (None, Some(cfg)) => return Ok(cfg.clone()),
        (None, None) => bail!("no subcommand given (expected mc, infer or lrr-check)"),
    };
    let mut cfg = match base {
        Some(cfg) if cfg.command == name => cfg,
        Some(cfg) => bail!("config is for `{}` but `{name}` was requested", cfg.command),
        None => RunConfig::new(name),
    };
    match cli.command.as_ref().expect("checked above") {
        Command::Mc(a) => {
            cfg.spec = a.spec.or(cfg.spec);
            cfg.n = a.n.or(cfg.n);
            cfg.replications = a.reps.or(cfg.replications);
            apply_common(&mut cfg, &a.common)?;
        }
        Command::Infer(a) => {
            cfg.data = a.data.clone().or(cfg.data);
            cfg.topcode_fraction = a.topcode_frac.or(cfg.topcode_fraction);
            cfg.z2 = a.z2.or(cfg.z2);
            cfg.shock_scale = a.shock_scale.or(cfg.shock_scale);
            apply_common(&mut cfg, &a.common)?;
        }
        Command::LrrCheck(a) => {
            if let Some(m) = &a.model {
                cfg.model = m.clone();
            }
            if let Some(t) = &a.theta {
                cfg.theta = Some(
                    t.split(',')
                        .map(|v| v.trim().parse::<f64>().map_err(|_| anyhow!("theta entry `{v}` is not a number")))
                        .collect::<anyhow::Result<_>>()?,
                );
            }
            cfg.eta_bins = a.eta_bins.or(cfg.eta_bins);
            cfg.perturbations = a.perturbations.or(cfg.perturbations);
            cfg.scale_k = a.scale_k.or(cfg.scale_k);
            if let Some(s) = a.seed {
                cfg.plan.seed = s;
            }
            if let Some(o) = &a.out {
                cfg.output = Some(o.clone());
            }
        }
    }
    Ok(cfg)
}

fn finalize(cfg: &mut RunConfig) -> anyhow::Result<()> {
    match cfg.command.as_str() {
        "mc" => {
            cfg.spec.get_or_insert(1);
            cfg.n.get_or_insert(200);
            cfg.replications.get_or_insert(200);
            if cfg.grid.is_none() {
                cfg.grid = Some(GridSpec::from(&default_grid(cfg.spec.unwrap())?));
            }
            cfg.output.get_or_insert_with(|| PathBuf::from("out"));
        }
        "infer" => {
            if cfg.data.is_none() {
                bail!("infer needs --data");
            }
            cfg.topcode_fraction.get_or_insert(0.10);
            cfg.z2.get_or_insert(1e8);
            cfg.output.get_or_insert_with(|| PathBuf::from("out"));
        }
        _ => {
            cfg.eta_bins.get_or_insert(101);
            cfg.perturbations.get_or_insert(200);
            cfg.scale_k.get_or_insert(1.0);
            if cfg.theta.is_none() {
                bail!("lrr-check needs --theta");
            }
        }
    }
    cfg.validate()?;
    Ok(())
}

fn run_mc(cfg: &RunConfig) -> anyhow::Result<()> {
    let start = Instant::now();
    let spec = McSpec::standard(cfg.spec.unwrap(), cfg.n.unwrap(), cfg.replications.unwrap(), cfg.plan.clone())?;
    let grid = cfg.grid.as_ref().expect("grid resolved").build()?;
    let cov = run_coverage(&spec, &grid)?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let info = RunInfo { config: Some(cfg.clone()), seeds: vec![cfg.plan.seed], timings_ms: vec![("coverage".into(), elapsed)] };
    let out = cfg.output.as_ref().expect("output resolved");
    emit_report(Report::Coverage(&cov), &info, out)?;
    let region = match cfg.method {
        Method::Conservative => 0,
        Method::Bonferroni => 1,
    };
    let inner = interior(&cov.population_identified);
    let freqs: Vec<f64> = inner.flagged().map(|i| cov.frequency(region, i)).collect();
    let min = freqs.iter().copied().fold(f64::INFINITY, f64::min);
    println!(
        "{}",
        json!({
            "output": out,
            "method": cfg.method,
            "interior_points": freqs.len(),
            "min_interior_coverage": if freqs.is_empty() { None } else { Some(min) },
            "mean_cardinality": cov.mean_cardinality,
        })
    );
    Ok(())
}

/// Pooled within-group standard deviation of the uncensored outcomes.
fn residual_scale(data: &[IntervalObservation]) -> anyhow::Result<f64> {
    let mut ss = 0.0;
    let mut count = 0usize;
    for x in 0..2u8 {
        let ys: Vec<f64> = data.iter().filter(|o| o.x == x && !o.censored).map(|o| o.z1_tilde).collect();
        if ys.len() < 2 {
            continue;
        }
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        ss += ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>();
        count += ys.len() - 1;
    }
    let scale = (ss / count.max(1) as f64).sqrt();
    if !(scale > 0.0) {
        bail!("cannot infer the shock scale from the data; pass --shock-scale");
    }
    Ok(scale)
}

fn empirical_grid(data: &[IntervalObservation]) -> anyhow::Result<ParameterGrid> {
    let base: Vec<f64> = data.iter().filter(|o| o.x == 0).map(|o| o.z1_tilde).collect();
    let center = if base.is_empty() { 0.0 } else { base.iter().sum::<f64>() / base.len() as f64 };
    Ok(ParameterGrid::plane(Axis::new(center - 1.0, center + 1.5, 51)?, Axis::new(-1.5, 1.5, 61)?)?)
}

fn run_infer(cfg: &mut RunConfig) -> anyhow::Result<()> {
    let start = Instant::now();
    let path = cfg.data.clone().expect("data resolved");
    let records = ingest_csv(&path)?;
    let coded = apply_topcoding(&records, cfg.topcode_fraction.unwrap(), cfg.z2.unwrap())?;
    let data = coded.observations.as_slice();
    let scale = match cfg.shock_scale {
        Some(s) => s,
        None => residual_scale(data)?,
    };
    cfg.shock_scale = Some(scale);
    let grid = match &cfg.grid {
        Some(g) => g.build()?,
        None => {
            let g = empirical_grid(data)?;
            cfg.grid = Some(GridSpec::from(&g));
            g
        }
    };
    let criterion = match &cfg.atoms {
        Some(atoms) => IntervalLrr {
            context: CounterfactualContext::new(
                atoms
                    .iter()
                    .map(|a: &RegressorAtom| lrr::lrr::WeightedAtom {
                        value: IntervalAtom { x1: vec![1.0, a.x], z1: coded.z1, z2: coded.z2 },
                        weight: a.weight,
                    })
                    .collect(),
                scale,
            )?,
        },
        None => IntervalLrr::from_sample(data, coded.z1, coded.z2, scale)?,
    };
    let report = confidence_set(data, &IntervalMoments, &criterion, &grid, &cfg.plan, cfg.method)?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    let info = RunInfo { config: Some(cfg.clone()), seeds: vec![cfg.plan.seed], timings_ms: vec![("inference".into(), elapsed)] };
    let out = cfg.output.as_ref().expect("output resolved");
    emit_report(Report::Confidence(&report), &info, out)?;
    println!(
        "{}",
        json!({
            "output": out,
            "observations": data.len(),
            "censored": coded.censored(),
            "z1": coded.z1,
            "z2": coded.z2,
            "shock_scale": scale,
            "identified_points": report.identified.count(),
            "lrr_points": report.lrr.count(),
            "empty": report.empty,
        })
    );
    Ok(())
}

fn run_check(cfg: &RunConfig) -> anyhow::Result<()> {
    let theta = cfg.theta.as_ref().expect("theta resolved");
    let eta = EtaMeasure::uniform_bins(cfg.eta_bins.unwrap())?;
    let g = DiscretizedSelectionRule::uniform(eta);
    let shocks = ShockRule::QuantileMidpoints { nodes: 64 };
    let (k, draws, seed) = (cfg.scale_k.unwrap(), cfg.perturbations.unwrap(), cfg.plan.seed);
    let report = match cfg.model.as_str() {
        "interval" => {
            if theta.len() != 2 {
                bail!("the interval model takes theta = beta,gamma");
            }
            let point = ParameterPoint::new(vec![theta[0]], vec![theta[1]])?;
            let ctx = CounterfactualContext::uniform(
                [0.0, 1.0].iter().map(|&x| IntervalAtom { x1: vec![1.0, x], z1: 2.3, z2: 4.5 }).collect(),
                1.0,
            )?;
            sensitivity_oracle(&IntervalStructure, &point, &g, &ctx, &ShockRule::QuantileMidpoints { nodes: 256 }, k, draws, seed)?
        }
        "entry" => {
            if theta.len() < 4 || !theta.len().is_multiple_of(2) {
                bail!("the entry game takes theta = beta1,beta2,gamma1...,gamma2... with equal-length gammas");
            }
            let point = ParameterPoint::new(theta[..2].to_vec(), theta[2..].to_vec())?;
            let d = (theta.len() - 2) / 2;
            let ctx = CounterfactualContext::uniform(vec![vec![1.0; d]], 1.0)?;
            sensitivity_oracle(&EntryStructure, &point, &g, &ctx, &shocks, k, draws, seed)?
        }
        other => bail!("unknown model `{other}`"),
    };
    if let Some(out) = &cfg.output {
        let info = RunInfo { config: Some(cfg.clone()), seeds: vec![seed], timings_ms: vec![] };
        emit_report(Report::Sensitivity(&report), &info, out)?;
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    match err.downcast_ref::<lrr::Error>() {
        Some(e) => e.kind(),
        None => "usage",
    }
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    let mut cfg = resolve(cli)?;
    finalize(&mut cfg)?;
    match cfg.command.as_str() {
        "mc" => run_mc(&cfg),
        "infer" => run_infer(&mut cfg),
        _ => run_check(&cfg),
    }
    .with_context(|| format!("`{}` failed", cfg.command))
}

fn fail(kind: &str, message: String) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message }));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim().to_string()),
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(error_kind(&e), format!("{e:#}")),
    }
}
