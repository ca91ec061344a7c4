//! The `rqip` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 domain error, 3 runtime or
//! capacity error. Artifacts go to `--out` when given, stdout otherwise.

use crate::concentration::{
    combined_bound, truncation_threshold, CombinedBound, ConcentrationParams, DEFAULT_C0, DEFAULT_C_CON,
    DEFAULT_C_PRIME,
};
use crate::error::{Error, Result};
use crate::experiments::{run_study_with_workers, worker_count, Study, StudyConfig, StudyGrid};
use crate::geometry::{build_net, covering_bound, verify_net, EpsilonNet, NetTarget};
use crate::rqip::{
    generate_matrix, rqip_check, sample_complexity, ComplexityInputs, ComplexityMode, RqipConfig, RqipReport,
    Strategy, DEFAULT_DIRECTION_COUNT, DEFAULT_NET_BUDGET,
};
use crate::stable::{
    draw_stable, empirical_abs_moment, stable_abs_moment_constant, stable_tail_constant, StableLaw,
};
use crate::stream::Stream;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "rqip",
    version,
    about = "Sampling, bounds, nets and RQIP checks for SαS matrices with α ∈ (0, 1)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw SαS(γ) variates
    Sample(SampleArgs),
    /// Closed-form fractional moment and tail constants, optionally checked by sampling
    Moments(MomentsArgs),
    /// Truncation threshold and concentration bound terms
    Bounds(BoundsArgs),
    /// Build an ε-separated net of k-sparse vectors and measure its coverage
    Net(NetArgs),
    /// Draw an M × N matrix and check the RQIP deviation over test vectors
    #[command(name = "rqip-check")]
    RqipCheck(CheckArgs),
    /// Rows required by the sample-complexity bound
    Complexity(ComplexityArgs),
    /// Run a seeded study and write CSV, JSON manifest and SVG plots
    Study(StudyArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output directory, created if absent [default: stdout]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Serialization of the artifact
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// Stability index α ∈ [0.05, 0.99]
    #[arg(long)]
    alpha: f64,
    /// Scale γ > 0
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Number of variates, ≥ 1
    #[arg(long = "M", value_name = "M")]
    m: usize,
    /// Master seed (u64)
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct MomentsArgs {
    /// Stability index α ∈ (0, 1) ([0.05, 0.99] when sampling)
    #[arg(long)]
    alpha: f64,
    /// Moment order p ∈ (0, α)
    #[arg(long)]
    p: f64,
    /// Scale γ > 0
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Draw M variates and compare the empirical moment, ≥ 1 (needs --seed)
    #[arg(long = "M", value_name = "M")]
    m: Option<usize>,
    /// Master seed (u64), required with --M
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Show {
    All,
    #[value(name = "T")]
    T,
    Hoeffding,
    Tail,
    Total,
    Envelope,
    Crossover,
}

#[derive(Args, Debug)]
struct ConstantArgs {
    /// Truncation exponent c0 ∈ (0, 1/2)
    #[arg(long, default_value_t = DEFAULT_C0)]
    c0: f64,
    /// Threshold constant C′ > 0
    #[arg(long = "Cprime", value_name = "CPRIME", default_value_t = DEFAULT_C_PRIME)]
    c_prime: f64,
    /// Envelope constant C_con > 0 (a convention, not identified by the bound)
    #[arg(long = "Ccon", value_name = "CCON", default_value_t = DEFAULT_C_CON)]
    c_con: f64,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    /// Stability index α ∈ [0.05, 0.99]
    #[arg(long)]
    alpha: f64,
    /// Moment order p ∈ (0, α)
    #[arg(long)]
    p: f64,
    /// Scale γ > 0
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[command(flatten)]
    constants: ConstantArgs,
    /// Deviation ε > 0
    #[arg(long)]
    eps: f64,
    /// Sample sizes, comma separated, each ≥ 1
    #[arg(long = "M", value_name = "M", value_delimiter = ',', required = true)]
    m: Vec<usize>,
    /// Print one quantity instead of the full table
    #[arg(long, value_enum, default_value = "all")]
    show: Show,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum TargetArg {
    Ball,
    Sphere,
}

#[derive(Args, Debug)]
struct NetArgs {
    /// Stability index α ∈ (0, 1)
    #[arg(long)]
    alpha: f64,
    /// Net radius ε ∈ (0, 1]
    #[arg(long)]
    eps: f64,
    /// Sparsity 1 ≤ k ≤ N
    #[arg(long)]
    k: usize,
    /// Ambient dimension N ≥ 1
    #[arg(long = "N", value_name = "N")]
    n: usize,
    /// Set to cover
    #[arg(long, value_enum, default_value = "ball")]
    target: TargetArg,
    /// Consecutive rejections that end a support, ≥ 1
    #[arg(long, default_value_t = 5000)]
    budget: usize,
    /// Coverage samples, 0 to skip
    #[arg(long, default_value_t = 10_000)]
    verify: usize,
    /// Master seed (u64)
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum StrategyArg {
    Auto,
    Net,
    Random,
    Brute,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Stability index α ∈ [0.05, 0.99]
    #[arg(long)]
    alpha: f64,
    /// Scale γ > 0
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Moment order p ∈ (0, α)
    #[arg(long)]
    p: f64,
    /// Allowed relative deviation δ ∈ (0, 1)
    #[arg(long)]
    delta: f64,
    /// Sparsity 1 ≤ k ≤ N
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Columns N ≥ 1
    #[arg(long = "N", value_name = "N")]
    n: usize,
    /// Rows M ≥ 1
    #[arg(long = "M", value_name = "M")]
    m: usize,
    /// Test vectors: auto picks a net when it is small, random directions otherwise
    #[arg(long, value_enum, default_value = "auto")]
    strategy: StrategyArg,
    /// Random directions tested, ≥ 1
    #[arg(long, default_value_t = DEFAULT_DIRECTION_COUNT)]
    directions: usize,
    /// Net rejection budget, ≥ 1
    #[arg(long, default_value_t = DEFAULT_NET_BUDGET)]
    budget: usize,
    /// Master seed (u64)
    #[arg(long)]
    seed: u64,
    /// Directory for report.json [default: stdout]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ModeArg {
    /// (eN/k)^k in place of C(N, k)
    EnOverK,
    /// exact C(N, k)
    Binomial,
}

#[derive(Args, Debug)]
struct ComplexityArgs {
    /// Stability index α ∈ (0, 1)
    #[arg(long)]
    alpha: f64,
    /// Moment order p ∈ (0, α)
    #[arg(long)]
    p: f64,
    /// Allowed relative deviation δ ∈ (0, 1)
    #[arg(long)]
    delta: f64,
    /// Failure probability η ∈ (0, 1)
    #[arg(long)]
    eta: f64,
    /// Dimension N ≥ k
    #[arg(long = "N", value_name = "N")]
    n: usize,
    /// Sparsity k ≥ 1
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    constants: ConstantArgs,
    /// How C(N, k) enters
    #[arg(long, value_enum, default_value = "en-over-k")]
    mode: ModeArg,
    /// Output format
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args, Debug)]
struct StudyArgs {
    /// Study: moments, concentration, nets or rqip
    #[arg(long)]
    name: String,
    /// Master seed (u64)
    #[arg(long)]
    seed: u64,
    /// Output directory, created if absent
    #[arg(long, value_name = "DIR", default_value = "rqip-study")]
    out: PathBuf,
    /// JSON grid replacing the default one ({"kind": ..., "cells": [...]})
    #[arg(long, value_name = "FILE")]
    grid: Option<PathBuf>,
}

/// Maps an error to its exit code.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_domain() {
        EXIT_DOMAIN
    } else {
        EXIT_RUNTIME
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Sample(a) => sample(a, stdout),
        Command::Moments(a) => moments(a, stdout),
        Command::Bounds(a) => bounds(a, stdout),
        Command::Net(a) => net(a, stdout),
        Command::RqipCheck(a) => check(a, stdout),
        Command::Complexity(a) => complexity(a, stdout),
        Command::Study(a) => study(a, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Run(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

enum CliError {
    Usage(String),
    Run(Error),
}

impl<E: Into<Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Run(e.into())
    }
}

type CliResult = std::result::Result<(), CliError>;

/// Writes `content` to `dir/file` (announcing it) or to stdout.
fn emit(out: Option<&Path>, file: &str, content: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(file);
            std::fs::write(&path, content)?;
            writeln!(stdout, "wrote {}", path.display())?;
        }
        None => write!(stdout, "{content}")?,
    }
    Ok(())
}

fn key_value_csv(pairs: &[(&str, String)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["quantity", "value"])?;
    for (k, v) in pairs {
        w.write_record([*k, v.as_str()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

fn sample(a: SampleArgs, stdout: &mut dyn Write) -> CliResult {
    let law = StableLaw::new(a.alpha, a.gamma)?;
    let batch = draw_stable(law, a.m, &Stream::new(a.seed, "sample"))?;
    let (file, content) = match a.output.format {
        Format::Csv => {
            let mut buf = Vec::new();
            batch.write_csv(&mut buf)?;
            ("samples.csv", String::from_utf8(buf).expect("utf-8"))
        }
        Format::Json => (
            "samples.json",
            serde_json::to_string_pretty(&json!({
                "alpha": law.alpha(),
                "gamma": law.gamma(),
                "master_seed": a.seed,
                "stream": batch.stream_label(),
                "values": batch.values,
            }))? + "\n",
        ),
    };
    emit(a.output.out.as_deref(), file, &content, stdout)?;
    Ok(())
}

fn moments(a: MomentsArgs, stdout: &mut dyn Write) -> CliResult {
    if a.m.is_some() && a.seed.is_none() {
        return Err(CliError::Usage("--seed is required when --M is given".into()));
    }
    let constant = stable_abs_moment_constant(a.alpha, a.p)?;
    let tail = stable_tail_constant(a.alpha)?;
    if !(a.gamma > 0.0 && a.gamma.is_finite()) {
        return Err(Error::domain(format!("gamma = {} violates the constraint γ > 0", a.gamma)).into());
    }
    let mut pairs = vec![
        ("alpha", a.alpha.to_string()),
        ("p", a.p.to_string()),
        ("gamma", a.gamma.to_string()),
        ("moment_constant", constant.to_string()),
        ("abs_moment", (constant * a.gamma.powf(a.p)).to_string()),
        ("tail_constant", tail.to_string()),
    ];
    if let (Some(m), Some(seed)) = (a.m, a.seed) {
        let law = StableLaw::new(a.alpha, a.gamma)?;
        let batch = draw_stable(law, m, &Stream::new(seed, "moments"))?;
        let empirical = empirical_abs_moment(&batch, a.p)?;
        let expected = law.abs_moment(a.p)?;
        pairs.push(("M", m.to_string()));
        pairs.push(("empirical", empirical.to_string()));
        pairs.push(("rel_err", (empirical / expected - 1.0).abs().to_string()));
    }
    let (file, content) = match a.output.format {
        Format::Csv => ("moments.csv", key_value_csv(&pairs)?),
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> = pairs
                .iter()
                .map(|(k, v)| {
                    let val = v.parse::<f64>().map(|x| json!(x)).unwrap_or_else(|_| json!(v));
                    (k.to_string(), val)
                })
                .collect();
            ("moments.json", serde_json::to_string_pretty(&map)? + "\n")
        }
    };
    emit(a.output.out.as_deref(), file, &content, stdout)?;
    Ok(())
}

fn concentration_params(alpha: f64, p: f64, gamma: f64, c: &ConstantArgs) -> Result<ConcentrationParams> {
    ConcentrationParams::new(StableLaw::new(alpha, gamma)?, p)?
        .with_c0(c.c0)?
        .with_c_prime(c.c_prime)?
        .with_c_con(c.c_con)
}

fn bounds(a: BoundsArgs, stdout: &mut dyn Write) -> CliResult {
    let params = concentration_params(a.alpha, a.p, a.gamma, &a.constants)?;
    let rows: Vec<(usize, CombinedBound)> = a
        .m
        .iter()
        .map(|&m| Ok((m, combined_bound(&params, a.eps, m)?)))
        .collect::<Result<_>>()?;
    if a.show == Show::Crossover {
        writeln!(stdout, "crossover = {}", params.envelope_crossover(a.eps)).map_err(Error::from)?;
        return Ok(());
    }
    if a.show != Show::All {
        for (m, b) in &rows {
            let (name, v) = match a.show {
                Show::T => ("T", truncation_threshold(&params, a.eps, *m)?),
                Show::Hoeffding => ("hoeffding", b.hoeffding),
                Show::Tail => ("tail", b.tail),
                Show::Total => ("total", b.total),
                Show::Envelope => ("envelope", b.envelope),
                Show::All | Show::Crossover => unreachable!(),
            };
            if rows.len() == 1 {
                writeln!(stdout, "{name} = {v}").map_err(Error::from)?;
            } else {
                writeln!(stdout, "M = {m}: {name} = {v}").map_err(Error::from)?;
            }
        }
        return Ok(());
    }
    let (file, content) = match a.output.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["M", "T", "hoeffding", "tail", "total", "envelope"])?;
            for (m, b) in &rows {
                w.write_record([
                    m.to_string(),
                    b.threshold.to_string(),
                    b.hoeffding.to_string(),
                    b.tail.to_string(),
                    b.total.to_string(),
                    b.envelope.to_string(),
                ])?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            ("bounds.csv", String::from_utf8(bytes).expect("utf-8"))
        }
        Format::Json => {
            let doc: Vec<_> = rows
                .iter()
                .map(|(m, b)| {
                    json!({"M": m, "T": b.threshold, "hoeffding": b.hoeffding, "tail": b.tail,
                           "total": b.total, "envelope": b.envelope})
                })
                .collect();
            ("bounds.json", serde_json::to_string_pretty(&doc)? + "\n")
        }
    };
    emit(a.output.out.as_deref(), file, &content, stdout)?;
    Ok(())
}

fn net_csv(net: &EpsilonNet) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["point".to_string()];
    header.extend((0..net.dim).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for (i, p) in net.dense_points().iter().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(p.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

fn net(a: NetArgs, stdout: &mut dyn Write) -> CliResult {
    let target = match a.target {
        TargetArg::Ball => NetTarget::UnitBall,
        TargetArg::Sphere => NetTarget::UnitSphere,
    };
    let bound = if a.eps < 1.0 {
        Some(covering_bound(a.alpha, a.eps, a.k, a.n)?)
    } else {
        None
    };
    let stream = Stream::new(a.seed, "net");
    let net = build_net(a.alpha, a.eps, a.k, a.n, target, a.budget, &stream)?;
    let (file, content) = match a.output.format {
        Format::Json => ("net.json", net.to_json()? + "\n"),
        Format::Csv => ("net.csv", net_csv(&net)?),
    };
    emit(a.output.out.as_deref(), file, &content, stdout)?;
    if let Some(dir) = &a.output.out {
        let mut summary = json!({
            "size": net.len(),
            "cover_bound": bound.map(|b| b.value),
            "master_seed": a.seed,
            "stream": stream.label(),
        });
        if a.verify > 0 {
            let cov = verify_net(&net, a.verify, &Stream::new(a.seed, "verify"))?;
            summary["coverage"] = json!(cov.coverage_rate);
            summary["worst_gap"] = json!(cov.worst_gap);
            summary["verify_trials"] = json!(cov.trials);
        }
        writeln!(stdout, "{}", serde_json::to_string(&summary)?).map_err(Error::from)?;
        std::fs::write(dir.join("net_summary.json"), serde_json::to_string_pretty(&summary)?)?;
    }
    Ok(())
}

fn check(a: CheckArgs, stdout: &mut dyn Write) -> CliResult {
    let law = StableLaw::new(a.alpha, a.gamma)?;
    let mut cfg = RqipConfig::new(&law, a.k, a.delta, a.p, a.n)?;
    cfg.strategy = match a.strategy {
        StrategyArg::Auto => cfg.strategy,
        StrategyArg::Net => Strategy::Net,
        StrategyArg::Random => Strategy::RandomDirections,
        StrategyArg::Brute => Strategy::BruteForceK1,
    };
    cfg.direction_count = a.directions;
    cfg.net_budget = a.budget;
    cfg.validate(&law)?;
    if a.k > a.n {
        return Err(Error::domain(format!("k = {} must not exceed N = {}", a.k, a.n)).into());
    }
    let matrix = generate_matrix(law, a.m, a.n, &Stream::new(a.seed, "matrix"))?;
    let report: RqipReport = rqip_check(&matrix, &cfg)?;
    emit(a.out.as_deref(), "report.json", &(report.to_json()? + "\n"), stdout)?;
    if a.out.is_some() {
        writeln!(
            stdout,
            "passed = {}, max_deviation = {}, vectors_tested = {}",
            report.passed, report.max_deviation, report.vectors_tested
        )
        .map_err(Error::from)?;
    }
    Ok(())
}

fn complexity(a: ComplexityArgs, stdout: &mut dyn Write) -> CliResult {
    let inputs = ComplexityInputs {
        dim: a.n,
        k: a.k,
        delta: a.delta,
        eta: a.eta,
        p: a.p,
        alpha: a.alpha,
        c0: a.constants.c0,
        c_con: a.constants.c_con,
    };
    let mode = match a.mode {
        ModeArg::EnOverK => ComplexityMode::EnOverK,
        ModeArg::Binomial => ComplexityMode::BinomialExact,
    };
    let sc = sample_complexity(&inputs, mode)?;
    match a.format {
        Format::Csv => {
            writeln!(stdout, "log10_M = {}", sc.log10_m).map_err(Error::from)?;
            writeln!(stdout, "M ≈ {:.6e}", 10f64.powf(sc.log10_m)).map_err(Error::from)?;
            writeln!(
                stdout,
                "note: C_con = {} is a convention; the value scales as C_con^(1/c_con)",
                inputs.c_con
            )
            .map_err(Error::from)?;
        }
        Format::Json => {
            let doc = json!({
                "inputs": inputs,
                "mode": mode,
                "log10_M": sc.log10_m,
                "M": 10f64.powf(sc.log10_m),
                "convention_dependent": true,
            });
            writeln!(stdout, "{}", serde_json::to_string_pretty(&doc)?).map_err(Error::from)?;
        }
    }
    Ok(())
}

fn study(a: StudyArgs, stdout: &mut dyn Write) -> CliResult {
    let kind: Study = a.name.parse()?;
    let mut cfg = StudyConfig::default_for(kind, a.seed, a.out.clone());
    if let Some(path) = &a.grid {
        let text = std::fs::read_to_string(path)?;
        let grid: StudyGrid = serde_json::from_str(&text)
            .map_err(|e| Error::domain(format!("invalid grid file {}: {e}", path.display())))?;
        cfg.grid = grid;
    }
    cfg.validate()?;
    let workers = worker_count()?;
    let result = run_study_with_workers(&cfg, workers)?;
    for path in result.write_artifacts(&cfg.output_dir)? {
        writeln!(stdout, "wrote {}", path.display()).map_err(Error::from)?;
    }
    Ok(())
}
