use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use interp_core::couples::{j_functional, k_exact, k_surrogate};
use interp_core::harness::{self, parse_couple, parse_vector_csv, Experiment, RunConfig};
use interp_core::nuclear::nuclearity_equivalence_test;
use interp_core::repr::{calderon, jk_gap, GapMethod, GapOptions};
use interp_core::retract::partition;
use interp_core::WeightedCouple;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "interp-kit",
    version,
    about = "Real interpolation verification runs and calculators"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// ρ-weighted norm of random operators against the diagonal-sum bound
    VerifyOvch(RunArgs),
    /// J/K gap, batch or one-shot (`--source --target --x --y`)
    JkGap(PairArgs),
    /// Nuclear norm vs J/K gap, batch or one-shot
    NuclearCheck(PairArgs),
    /// Sparse τ sequence table and covering check
    SparseSeq(RunArgs),
    /// Diagonal sums of scaled random matrices against their ∞→1 norm
    DiagSums(RunArgs),
    /// Rearrangement invariance and Hardy–Littlewood on random step functions
    RearrangeNorms(RunArgs),
    /// Block representation constants on random ℓ¹ vectors
    Fundlemma(RunArgs),
    /// π∘ι identity and side norms on random couples
    RetractCheck(RunArgs),
    /// K(t, x) for one or more t
    Kfun(FunArgs),
    /// J(t, x) for one or more t
    Jfun(FunArgs),
    /// Discrete Calderón transform of a labelled sequence
    Calderon(CalderonArgs),
    /// Block partition of a couple, as JSON {k: [labels]}
    Partition(PartitionArgs),
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report path (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Greedy,
    Lp,
}

#[derive(Args)]
struct PairArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, requires_all = ["target", "x", "y"])]
    source: Option<PathBuf>,
    #[arg(long)]
    target: Option<PathBuf>,
    /// Source vector CSV
    #[arg(long)]
    x: Option<PathBuf>,
    /// Target vector CSV
    #[arg(long)]
    y: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    lambda: f64,
    #[arg(long, value_enum, default_value_t = Method::Lp)]
    method: Method,
    /// Use K̃ in the gap denominators
    #[arg(long)]
    surrogate: bool,
    /// Where to write the witness representation (jk-gap)
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Args)]
struct FunArgs {
    #[arg(long)]
    couple: PathBuf,
    #[arg(long)]
    x: PathBuf,
    /// Comma-separated parameters
    #[arg(long, value_delimiter = ',', required = true)]
    t: Vec<f64>,
    /// Use K̃ = sup min(w⁰, t w¹)|x| (kfun only)
    #[arg(long)]
    surrogate: bool,
}

#[derive(Args)]
struct CalderonArgs {
    /// CSV of `k,value` rows; missing labels are 0
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    lambda: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PartitionArgs {
    #[arg(long)]
    couple: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    lambda: f64,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn couple(path: &Path) -> Result<WeightedCouple> {
    parse_couple(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn vector(path: &Path, c: &WeightedCouple) -> Result<Vec<f64>> {
    parse_vector_csv(&read(path)?, c).with_context(|| format!("in {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_experiment(experiment: Experiment, args: &RunArgs) -> Result<ExitCode> {
    let mut cfg = match &args.config {
        Some(p) => {
            let cfg =
                RunConfig::from_json(&read(p)?).with_context(|| format!("in {}", p.display()))?;
            if cfg.experiment != experiment {
                bail!(
                    "{} configures `{}`, not `{}`",
                    p.display(),
                    cfg.experiment.name(),
                    experiment.name()
                );
            }
            cfg
        }
        None => RunConfig::new(experiment),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    let report = harness::run(&cfg)?;
    let text = match args.format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    };
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(PathBuf::from));
    emit(out.as_deref(), &text)?;
    for n in &report.summary.notes {
        eprintln!("note: {n}");
    }
    for c in report.summary.checks.iter().filter(|c| !c.pass) {
        eprintln!("check {} failed: {} > {}", c.name, c.value, c.bound);
    }
    eprintln!(
        "{}: {} trials, {} failures, max margin {}",
        report.experiment,
        report.summary.trials,
        report.summary.failures,
        report.summary.max_margin
    );
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

struct Pair {
    source: WeightedCouple,
    target: WeightedCouple,
    x: Vec<f64>,
    y: Vec<f64>,
}

fn one_shot(args: &PairArgs) -> Result<Option<Pair>> {
    let Some(s) = &args.source else {
        return Ok(None);
    };
    let (t, xp, yp) = (
        args.target.as_ref().context("--target is required")?,
        args.x.as_ref().context("--x is required")?,
        args.y.as_ref().context("--y is required")?,
    );
    let (source, target) = (couple(s)?, couple(t)?);
    let x = vector(xp, &source)?;
    let y = vector(yp, &target)?;
    Ok(Some(Pair {
        source,
        target,
        x,
        y,
    }))
}

fn jk_gap_cmd(args: &PairArgs) -> Result<ExitCode> {
    let Some(p) = one_shot(args)? else {
        return run_experiment(Experiment::JkGap, &args.run);
    };
    let opts = GapOptions {
        method: match args.method {
            Method::Greedy => GapMethod::Greedy,
            Method::Lp => GapMethod::Lp,
        },
        surrogate: args.surrogate,
        ..Default::default()
    };
    let cert = jk_gap(&p.source, &p.x, &p.target, &p.y, args.lambda, &opts)?;
    let witness = args.witness.clone().unwrap_or_else(|| match &args.run.out {
        Some(o) => o.with_extension("witness.csv"),
        None => PathBuf::from("witness.csv"),
    });
    emit(Some(&witness), &cert.witness.to_csv(p.target.labels()))?;
    let doc = json!({
        "value": if cert.infinite { json!("inf") } else { json!(cert.value) },
        "method": cert.method,
        "fell_back": cert.fell_back,
        "surrogate": cert.surrogate,
        "k_range": [cert.k_range.0, cert.k_range.1],
        "witness_csv_path": witness.display().to_string(),
    });
    emit(
        args.run.out.as_deref(),
        &format!("{}\n", serde_json::to_string_pretty(&doc)?),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn nuclear_cmd(args: &PairArgs) -> Result<ExitCode> {
    let Some(p) = one_shot(args)? else {
        return run_experiment(Experiment::NuclearCheck, &args.run);
    };
    let r = nuclearity_equivalence_test(&p.source, &p.target, &p.x, &p.y, args.lambda)?;
    emit(
        args.run.out.as_deref(),
        &format!("{}\n", serde_json::to_string_pretty(&r)?),
    )?;
    Ok(if r.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn fun_cmd(args: &FunArgs, j: bool) -> Result<ExitCode> {
    let c = couple(&args.couple)?;
    let x = vector(&args.x, &c)?;
    let mut rows = Vec::with_capacity(args.t.len());
    for &t in &args.t {
        let v = if j {
            j_functional(&c, t, &x)?
        } else if args.surrogate {
            k_surrogate(&c, t, &x)?
        } else {
            k_exact(&c, t, &x)?
        };
        rows.push(json!({ "t": t, "value": v }));
    }
    println!("{}", serde_json::to_string_pretty(&rows)?);
    Ok(ExitCode::SUCCESS)
}

fn calderon_cmd(args: &CalderonArgs) -> Result<ExitCode> {
    let mut entries = Vec::new();
    for (i, line) in read(&args.input)?.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed = line.split_once(',').and_then(|(k, v)| {
            Some((k.trim().parse::<i64>().ok()?, v.trim().parse::<f64>().ok()?))
        });
        match parsed {
            Some(e) => entries.push(e),
            None if i == 0 => continue,
            None => bail!(
                "{} line {}: expected `k,value`",
                args.input.display(),
                i + 1
            ),
        }
    }
    let (Some(lo), Some(hi)) = (
        entries.iter().map(|e| e.0).min(),
        entries.iter().map(|e| e.0).max(),
    ) else {
        bail!("{}: no rows", args.input.display());
    };
    let mut c = vec![0.0; (hi - lo + 1) as usize];
    for (k, v) in entries {
        c[(k - lo) as usize] += v;
    }
    let omega = calderon(lo, &c, args.lambda)?;
    let mut out = String::from("j,omega\n");
    for (i, v) in omega.iter().enumerate() {
        out.push_str(&format!("{},{v}\n", lo + i as i64));
    }
    emit(args.out.as_deref(), &out)?;
    Ok(ExitCode::SUCCESS)
}

fn partition_cmd(args: &PartitionArgs) -> Result<ExitCode> {
    let c = couple(&args.couple)?;
    let part = partition(&c, args.lambda)?;
    let blocks: serde_json::Map<String, serde_json::Value> = part
        .labelled_blocks(&c)
        .into_iter()
        .map(|(k, labels)| (k.to_string(), json!(labels)))
        .collect();
    println!("{}", serde_json::to_string_pretty(&blocks)?);
    Ok(ExitCode::SUCCESS)
}

fn dispatch(cmd: &Cmd) -> Result<ExitCode> {
    match cmd {
        Cmd::VerifyOvch(a) => run_experiment(Experiment::VerifyOvch, a),
        Cmd::JkGap(a) => jk_gap_cmd(a),
        Cmd::NuclearCheck(a) => nuclear_cmd(a),
        Cmd::SparseSeq(a) => run_experiment(Experiment::SparseSeq, a),
        Cmd::DiagSums(a) => run_experiment(Experiment::DiagSums, a),
        Cmd::RearrangeNorms(a) => run_experiment(Experiment::RearrangeNorms, a),
        Cmd::Fundlemma(a) => run_experiment(Experiment::Fundlemma, a),
        Cmd::RetractCheck(a) => run_experiment(Experiment::RetractCheck, a),
        Cmd::Kfun(a) => fun_cmd(a, false),
        Cmd::Jfun(a) => fun_cmd(a, true),
        Cmd::Calderon(a) => calderon_cmd(a),
        Cmd::Partition(a) => partition_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
