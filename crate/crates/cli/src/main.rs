//! `ising` — build coupling matrices, classify parameter regimes,
//! compute exact magnetization laws, sample, analyze, and reproduce
//! the canonical experiments.
//!
//! Exit codes: 0 success/PASS, 1 usage error, 2 validation error,
//! 3 experiment FAIL.

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ising_core::analysis::{
    center_samples, ks_distance, ks_rate_rhs, AnalysisReport, Law, LimitLaw, Statistic,
};
use ising_core::coupling::{diagnostics, rate_terms, read_matrix, write_matrix};
use ising_core::exact::{
    magnetization_law_blocked, magnetization_law_bruteforce, magnetization_law_cw, write_law_csv,
    LawSidecar, MagnetizationLaw, BRUTEFORCE_CAP,
};
use ising_core::meanfield::{classify, ModelParams};
use ising_core::sampler::{sample_cw_auxiliary, sample_ising, write_samples_csv, SamplesSidecar};

use config::{CouplingSpec, ExperimentConfig, SamplerSpec};
use output::OutputDir;

#[derive(Parser)]
#[command(name = "ising", version, about = "Mean-field Ising simulation and verification toolkit")]
struct Cli {
    /// Seed for builders that draw randomness (overridden by explicit
    /// config seeds).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for samplers (0 = automatic).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output directory for emitted files.
    #[arg(long, global = true, default_value = "out")]
    output: PathBuf,
    /// Output format for reports printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a coupling matrix and write it in the text format.
    Build(BuildArgs),
    /// Row-sum and spectral diagnostics of a matrix file.
    Diagnose(DiagnoseArgs),
    /// Solve the fixed point and classify the regime.
    FixedPoint(FixedPointArgs),
    /// Exact magnetization law (enumeration or sufficient statistics).
    Exact(ExactArgs),
    /// Draw magnetization samples (Glauber chains or the auxiliary
    /// Curie-Weiss sampler).
    Sample(SampleArgs),
    /// Compare a law or sample file against a limit law.
    Analyze(AnalyzeArgs),
    /// Run an experiment described by a JSON config.
    Run { config: PathBuf },
    /// Run a canonical experiment with pinned seeds.
    Reproduce { name: String },
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    ensemble: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    /// Within-half coupling (block-spin).
    #[arg(long)]
    a: Option<f64>,
    /// Across-half coupling (block-spin).
    #[arg(long)]
    b: Option<f64>,
    /// Entry mean (Wigner ensembles).
    #[arg(long)]
    mean: Option<f64>,
    /// Comma-separated block sizes (sbm).
    #[arg(long)]
    block_sizes: Option<String>,
    /// Semicolon-separated rows of comma-separated probabilities (sbm).
    #[arg(long)]
    prob: Option<String>,
    /// Output file name inside the output directory.
    #[arg(long, default_value = "coupling.txt")]
    out_file: String,
}

#[derive(Args)]
struct DiagnoseArgs {
    matrix: PathBuf,
    /// Include rate terms evaluated at the fixed point of (beta, b).
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    b: f64,
}

#[derive(Args)]
struct FixedPointArgs {
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    b: f64,
}

#[derive(Args)]
struct ExactArgs {
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    b: f64,
    /// Matrix file for full enumeration (n <= 24).
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Curie-Weiss law of this size via the sufficient statistic.
    #[arg(long)]
    cw: Option<usize>,
    /// Comma-separated block sizes for the blocked enumerator.
    #[arg(long)]
    blocked: Option<String>,
    /// Within-block coupling (blocked enumerator).
    #[arg(long)]
    within: Option<f64>,
    /// Across-block coupling (blocked enumerator).
    #[arg(long, default_value_t = 0.0)]
    between: f64,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    b: f64,
    /// Matrix file for Glauber sampling.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Use the exact auxiliary Curie-Weiss sampler of this size.
    #[arg(long)]
    aux_cw: Option<usize>,
    #[arg(long, default_value_t = 200)]
    burn_in: usize,
    #[arg(long, default_value_t = 1)]
    thin: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 4)]
    chains: usize,
    #[arg(long, default_value = "random")]
    init: String,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Exact law CSV (as written by `exact`).
    #[arg(long)]
    law: Option<PathBuf>,
    /// Samples CSV (as written by `sample`).
    #[arg(long)]
    samples: Option<PathBuf>,
    /// System size (required for sample files).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    b: f64,
    #[arg(long)]
    statistic: String,
    /// gaussian | quartic-w | modified-w-tilde
    #[arg(long)]
    limit: String,
    /// Override the Gaussian variance (default: the regime's tau).
    #[arg(long)]
    tau: Option<f64>,
    /// Shift the limit law by mu.
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    /// Matrix file to evaluate the theorem right-hand side.
    #[arg(long)]
    matrix: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode> {
    match &cli.cmd {
        Cmd::Build(args) => cmd_build(cli, args),
        Cmd::Diagnose(args) => cmd_diagnose(cli, args),
        Cmd::FixedPoint(args) => cmd_fixed_point(cli, args),
        Cmd::Exact(args) => cmd_exact(cli, args),
        Cmd::Sample(args) => cmd_sample(cli, args),
        Cmd::Analyze(args) => cmd_analyze(cli, args),
        Cmd::Run { config } => cmd_run_config(cli, config),
        Cmd::Reproduce { name } => cmd_reproduce(cli, name),
    }
}

fn parse_usize_list(text: &str, field: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .map_err(|_| anyhow!("{field}: `{tok}` is not a positive integer"))
        })
        .collect()
}

fn coupling_spec_from_build(args: &BuildArgs) -> Result<CouplingSpec> {
    let block_sizes = match &args.block_sizes {
        Some(text) => Some(parse_usize_list(text, "--block-sizes")?),
        None => None,
    };
    let prob = match &args.prob {
        Some(text) => {
            let mut rows = Vec::new();
            for row in text.split(';') {
                let mut vals = Vec::new();
                for tok in row.split(',') {
                    vals.push(
                        tok.trim()
                            .parse::<f64>()
                            .map_err(|_| anyhow!("--prob: `{tok}` is not a number"))?,
                    );
                }
                rows.push(vals);
            }
            Some(rows)
        }
        None => None,
    };
    Ok(CouplingSpec {
        ensemble: Some(args.ensemble.clone()),
        file: None,
        n: args.n,
        d: args.d,
        p: args.p,
        m: args.m,
        block_sizes,
        prob,
        a: args.a,
        b: args.b,
        mean: args.mean,
        seed: None,
    })
}

fn cmd_build(cli: &Cli, args: &BuildArgs) -> Result<ExitCode> {
    let spec = coupling_spec_from_build(args)?;
    let matrix = spec.build(cli.seed).map_err(anyhow::Error::from)?;
    std::fs::create_dir_all(&cli.output)?;
    let path = cli.output.join(&args.out_file);
    write_matrix(&matrix, &path)?;
    println!(
        "wrote {} (n = {}, label: {})",
        path.display(),
        matrix.n(),
        matrix.label()
    );
    Ok(ExitCode::SUCCESS)
}

fn print_report<T: serde::Serialize>(format: Format, value: &T) -> Result<()> {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(value)?),
        Format::Csv => {
            let v = serde_json::to_value(value)?;
            let obj = v
                .as_object()
                .ok_or_else(|| anyhow!("csv format needs a flat report"))?;
            println!("key,value");
            for (k, val) in obj {
                println!("{k},{val}");
            }
        }
    }
    Ok(())
}

fn cmd_diagnose(cli: &Cli, args: &DiagnoseArgs) -> Result<ExitCode> {
    let matrix = read_matrix(&args.matrix)?;
    let diag = diagnostics(&matrix)?;
    let mut report = serde_json::to_value(&diag)?;
    // the full row-sum vector is bulky; keep the summary fields
    report.as_object_mut().unwrap().remove("row_sums");
    report["n"] = serde_json::json!(matrix.n());
    report["label"] = serde_json::json!(matrix.label());
    if let Some(beta) = args.beta {
        let params = ModelParams::new(beta, args.b)?;
        let regime = classify(params);
        let rt = rate_terms(&diag, regime.t.abs(), matrix.n());
        report["regime"] = serde_json::to_value(&regime)?;
        report["rate_terms"] = serde_json::to_value(rt)?;
    }
    print_report(cli.format, &report)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_fixed_point(cli: &Cli, args: &FixedPointArgs) -> Result<ExitCode> {
    let params = ModelParams::new(args.beta, args.b)?;
    let regime = classify(params);
    print_report(cli.format, &regime)?;
    Ok(ExitCode::SUCCESS)
}

fn law_from_exact_args(args: &ExactArgs, params: ModelParams) -> Result<(MagnetizationLaw, String)> {
    let sources =
        args.matrix.is_some() as u8 + args.cw.is_some() as u8 + args.blocked.is_some() as u8;
    if sources != 1 {
        bail!("give exactly one of --matrix, --cw, --blocked");
    }
    if let Some(path) = &args.matrix {
        let matrix = read_matrix(path)?;
        if matrix.n() > BRUTEFORCE_CAP {
            bail!("--matrix: full enumeration needs n <= {BRUTEFORCE_CAP}");
        }
        let law = magnetization_law_bruteforce(&matrix, params)?;
        return Ok((law, matrix.label().to_string()));
    }
    if let Some(n) = args.cw {
        let law = magnetization_law_cw(n, params)?;
        return Ok((law, format!("curie-weiss n={n}")));
    }
    let sizes = parse_usize_list(args.blocked.as_ref().unwrap(), "--blocked")?;
    let within = args
        .within
        .ok_or_else(|| anyhow!("--within: required with --blocked"))?;
    let law = magnetization_law_blocked(&sizes, within, args.between, params)?;
    Ok((
        law,
        format!(
            "blocked sizes={sizes:?} within={within} between={}",
            args.between
        ),
    ))
}

fn cmd_exact(cli: &Cli, args: &ExactArgs) -> Result<ExitCode> {
    let params = ModelParams::new(args.beta, args.b)?;
    let (law, label) = law_from_exact_args(args, params)?;
    std::fs::create_dir_all(&cli.output)?;
    let csv_path = cli.output.join("law.csv");
    let mut buf = Vec::new();
    write_law_csv(&law, &mut buf)?;
    std::fs::write(&csv_path, buf)?;
    let sidecar = LawSidecar {
        n: law.n(),
        beta: params.beta,
        b: params.b_field,
        log_z: law.log_z(),
        label: &label,
    };
    std::fs::write(
        cli.output.join("law.json"),
        serde_json::to_string_pretty(&sidecar)? + "\n",
    )?;
    println!(
        "wrote {} (n = {}, log Z = {:.6}, mean sigma_bar = {:.6})",
        csv_path.display(),
        law.n(),
        law.log_z(),
        law.mean_sigma_bar()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_sample(cli: &Cli, args: &SampleArgs) -> Result<ExitCode> {
    let params = ModelParams::new(args.beta, args.b)?;
    let spec = SamplerSpec {
        burn_in_sweeps: args.burn_in,
        thin_sweeps: args.thin,
        n_samples: args.samples,
        n_chains: args.chains,
        master_seed: cli.seed,
        init: args.init.clone(),
    };
    let cfg = spec.to_config().map_err(anyhow::Error::from)?;
    std::fs::create_dir_all(&cli.output)?;
    let (samples, label) = match (&args.matrix, args.aux_cw) {
        (Some(path), None) => {
            let matrix = read_matrix(path)?;
            (
                sample_ising(&matrix, params, &cfg)?,
                matrix.label().to_string(),
            )
        }
        (None, Some(n)) => {
            let draws = sample_cw_auxiliary(n, params, &cfg)?;
            let per_chain = cfg.n_samples;
            let samples = draws
                .iter()
                .enumerate()
                .map(|(k, &sigma_bar)| ising_core::sampler::MagnetizationSample {
                    chain: k / per_chain,
                    draw: k % per_chain,
                    sigma_bar,
                    m_sign: if sigma_bar >= 0.0 { 1 } else { -1 },
                })
                .collect();
            (samples, format!("auxiliary curie-weiss n={n}"))
        }
        _ => bail!("give exactly one of --matrix or --aux-cw"),
    };
    let path = cli.output.join("samples.csv");
    let mut buf = Vec::new();
    write_samples_csv(&samples, &mut buf)?;
    std::fs::write(&path, buf)?;
    std::fs::write(
        cli.output.join("samples.json"),
        serde_json::to_string_pretty(&SamplesSidecar {
            config: &cfg,
            coupling_label: &label,
            beta: params.beta,
            b: params.b_field,
        })? + "\n",
    )?;
    println!("wrote {} ({} draws)", path.display(), samples.len());
    Ok(ExitCode::SUCCESS)
}

fn read_law_csv(path: &PathBuf) -> Result<(Vec<i64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header.trim() != "support,prob" {
        bail!("{}: expected header `support,prob`", path.display());
    }
    let mut support = Vec::new();
    let mut probs = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (s, p) = line
            .split_once(',')
            .ok_or_else(|| anyhow!("{}: bad row {}", path.display(), idx + 2))?;
        support.push(s.trim().parse::<i64>()?);
        probs.push(p.trim().parse::<f64>()?);
    }
    Ok((support, probs))
}

fn read_samples_csv(path: &PathBuf) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header.trim() != "chain,draw,sigma_bar,m_sign" {
        bail!("{}: expected header `chain,draw,sigma_bar,m_sign`", path.display());
    }
    let mut out = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            bail!("{}: expected 4 fields per row", path.display());
        }
        out.push(fields[2].parse::<f64>()?);
    }
    Ok(out)
}

fn cmd_analyze(cli: &Cli, args: &AnalyzeArgs) -> Result<ExitCode> {
    let start = std::time::Instant::now();
    let params = ModelParams::new(args.beta, args.b)?;
    let regime = classify(params);
    let stat: Statistic = args.statistic.parse()?;
    let base = match args.limit.as_str() {
        "gaussian" => {
            let tau = args
                .tau
                .or(regime.tau)
                .ok_or_else(|| anyhow!("--tau: required at the critical point"))?;
            LimitLaw::gaussian(tau)?
        }
        "quartic-w" => LimitLaw::QuarticW,
        "modified-w-tilde" => LimitLaw::ModifiedWTilde,
        other => bail!("--limit: unknown limit law `{other}`"),
    };
    let limit = match args.mu {
        Some(mu) if mu != 0.0 => LimitLaw::shifted(base, mu),
        _ => base,
    };

    let (lhs, n) = match (&args.law, &args.samples) {
        (Some(path), None) => {
            let (support, probs) = read_law_csv(path)?;
            let n = support.iter().map(|s| s.unsigned_abs() as usize).max()
                .ok_or_else(|| anyhow!("--law: empty law"))?;
            let nf = n as f64;
            let mut pairs: Vec<(f64, f64)> = support
                .iter()
                .zip(&probs)
                .map(|(&s, &p)| {
                    let sb = s as f64 / nf;
                    let x = match stat {
                        Statistic::SqrtNMinusT => nf.sqrt() * (sb - regime.t),
                        Statistic::SqrtNMinusM => {
                            nf.sqrt() * (sb - if sb >= 0.0 { regime.t } else { -regime.t })
                        }
                        Statistic::QuarterN => nf.powf(0.25) * sb,
                    };
                    (x, p)
                })
                .collect();
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let ps: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            (Law::Atomic { xs, ps }, n)
        }
        (None, Some(path)) => {
            let bars = read_samples_csv(path)?;
            let n = args
                .n
                .ok_or_else(|| anyhow!("--n: required with --samples"))?;
            let cs = center_samples(&bars, stat, n, regime.t)?;
            (Law::from(cs), n)
        }
        _ => bail!("give exactly one of --law or --samples"),
    };
    if stat == Statistic::QuarterN && regime.t != 0.0 {
        bail!("--statistic quarterN requires t = 0");
    }

    let ks = ks_distance(&lhs, &Law::Limit(limit))?;
    let rate_rhs = match &args.matrix {
        Some(path) => {
            let matrix = read_matrix(path)?;
            let diag = diagnostics(&matrix)?;
            Some(ks_rate_rhs(&diag, &regime, matrix.n()))
        }
        None => None,
    };
    let report = AnalysisReport {
        statistic: stat,
        n,
        regime: regime.label,
        ks,
        rate_rhs,
        fitted_constant: None,
        runtime_ms: start.elapsed().as_millis(),
    };
    print_report(cli.format, &report)?;
    Ok(ExitCode::SUCCESS)
}

fn execute_config(cli: &Cli, cfg: &ExperimentConfig) -> Result<ExitCode> {
    let out_dir = cfg
        .output_dir
        .clone()
        .map(PathBuf::from)
        .unwrap_or_else(|| cli.output.clone());
    let mut out = OutputDir::create(&out_dir)?;
    let outcome = experiments::run_experiment(cfg, &mut out, cli.seed)?;
    out.finish(cfg)?;
    outcome.print();
    if outcome.failed() {
        Ok(ExitCode::from(3))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn cmd_run_config(cli: &Cli, path: &PathBuf) -> Result<ExitCode> {
    let cfg = match ExperimentConfig::load(path) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(2));
        }
    };
    execute_config(cli, &cfg)
}

fn cmd_reproduce(cli: &Cli, name: &str) -> Result<ExitCode> {
    let Some(text) = experiments::canonical_config(name) else {
        eprintln!(
            "error: unknown experiment `{name}` (expected one of {})",
            experiments::canonical_names().join(", ")
        );
        return Ok(ExitCode::from(1));
    };
    let cfg = ExperimentConfig::parse(text).map_err(anyhow::Error::from)?;
    execute_config(cli, &cfg)
}
