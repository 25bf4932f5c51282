use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use relmode::analysis::{self, AnalysisConfig, AnalysisReport, AutoTag, Nu0};
use relmode::models;

#[derive(Parser)]
#[command(name = "relmode", version, about = "Relative periodic orbits near stable symmetric equilibria")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write a JSON report.
    Analyze(ConfigArgs),
    /// Compute the orbit-count estimates only.
    Estimate(ConfigArgs),
    /// Certify one candidate relative periodic orbit by shooting.
    Verify(VerifyArgs),
    /// Print the built-in models with their default parameters.
    ListModels,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    /// Model parameters as a JSON object.
    #[arg(long)]
    params: Option<String>,
    /// `auto` or a positive base frequency.
    #[arg(long)]
    nu0: Option<String>,
    #[arg(long)]
    energy: Option<f64>,
    /// JSON list of momentum values, e.g. `[[0.1],[0.2]]`.
    #[arg(long)]
    momentum_grid: Option<String>,
    #[arg(long)]
    weight_window: Option<i64>,
    /// Random seed; the RELMODE_SEED environment variable takes precedence.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the momentum grid and multistart solves.
    #[arg(long)]
    jobs: Option<usize>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Certificate table path.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    tol_residual: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    params: Option<String>,
    /// Initial state as a JSON list.
    #[arg(long)]
    state: String,
    #[arg(long)]
    tau: f64,
    /// Drift velocity as a JSON list in generator coordinates.
    #[arg(long, default_value = "[]")]
    xi: String,
    #[arg(long, default_value_t = 1e-8)]
    tol_residual: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_json<T: serde::de::DeserializeOwned>(what: &str, text: &str) -> Result<T> {
    serde_json::from_str(text).with_context(|| format!("invalid JSON for {what}"))
}

fn load_config(args: &ConfigArgs) -> Result<AnalysisConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<AnalysisConfig>(&text).with_context(|| format!("in config {}", path.display()))?
        }
        None => AnalysisConfig::default(),
    };
    if let Some(m) = &args.model {
        config.model = m.clone();
    }
    if let Some(p) = &args.params {
        config.params = parse_json("--params", p)?;
    }
    if let Some(n) = &args.nu0 {
        config.nu0 = if n == "auto" {
            Nu0::Named(AutoTag::Auto)
        } else {
            Nu0::Value(n.parse().with_context(|| format!("--nu0 expects `auto` or a number, got `{n}`"))?)
        };
    }
    if let Some(e) = args.energy {
        config.energy = e;
    }
    if let Some(g) = &args.momentum_grid {
        config.momentum_grid = Some(parse_json("--momentum-grid", g)?);
    }
    if let Some(w) = args.weight_window {
        config.weight_window = w;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Ok(s) = std::env::var("RELMODE_SEED") {
        config.seed = s.parse().with_context(|| format!("RELMODE_SEED must be an unsigned integer, got `{s}`"))?;
    }
    if let Some(t) = args.tol_residual {
        config.tolerances.residual = t;
    }
    config.validate()?;
    Ok(config)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn write_csv(path: &Path, report: &AnalysisReport) -> Result<()> {
    let (header, rows) = analysis::certificate_table(report);
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(&header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn run_pipeline(args: &ConfigArgs, search: bool) -> Result<AnalysisReport> {
    let mut config = load_config(args)?;
    config.search = search;
    let run = || analysis::analyze(&config).map_err(anyhow::Error::from);
    match args.jobs {
        Some(0) => bail!("--jobs must be at least 1"),
        Some(j) => rayon::ThreadPoolBuilder::new().num_threads(j).build()?.install(run),
        None => run(),
    }
}

fn summarize(report: &AnalysisReport) {
    for c in &report.cells {
        log::info!(
            "{} lambda {:?}: bound {}, {} distinct certified orbits{}",
            c.isotropy,
            c.lambda,
            c.estimate.bound(),
            c.distinct.len(),
            if c.searched { "" } else { " (not searched)" }
        );
    }
    for w in &report.warnings {
        log::warn!("{w}");
    }
}

fn analyze(args: &ConfigArgs) -> Result<ExitCode> {
    let report = run_pipeline(args, true)?;
    summarize(&report);
    write_output(args.out.as_deref(), &report.to_json())?;
    if let Some(path) = &args.csv {
        write_csv(path, &report)?;
    }
    Ok(if report.bound_violated() { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn estimate(args: &ConfigArgs) -> Result<ExitCode> {
    let report = run_pipeline(args, false)?;
    summarize(&report);
    let out = json!({
        "model": report.model.name,
        "estimates": report.estimates(),
        "resonance": report.resonance,
        "taylor": report.taylor.iter().map(|t| json!({
            "isotropy": t.isotropy,
            "status": t.status,
            "first_nonradial_order": t.first_nonradial_order,
        })).collect::<Vec<_>>(),
        "warnings": report.warnings,
    });
    write_output(args.out.as_deref(), &serde_json::to_string_pretty(&out)?)?;
    Ok(ExitCode::SUCCESS)
}

fn verify(args: &VerifyArgs) -> Result<ExitCode> {
    let params: Value = match &args.params {
        Some(p) => parse_json("--params", p)?,
        None => Value::Null,
    };
    let model = models::build(&args.model, &params)?;
    let state: Vec<f64> = parse_json("--state", &args.state)?;
    let xi: Vec<f64> = parse_json("--xi", &args.xi)?;
    if state.len() != model.dim() {
        bail!("--state has {} components, the model has dimension {}", state.len(), model.dim());
    }
    let cert = analysis::verify(&model, &state, args.tau, &xi, args.tol_residual)?;
    let text = serde_json::to_string_pretty(&serde_json::to_value(&cert)?)?;
    write_output(args.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn list_models() -> Result<ExitCode> {
    let text = serde_json::to_string_pretty(&serde_json::to_value(models::registry())?)?;
    write_output(None, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Estimate(a) => estimate(a),
        Command::Verify(v) => verify(v),
        Command::ListModels => list_models(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
