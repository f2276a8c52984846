//! Argument parsing, config-file merging, and the `fit` and `simulate`
//! subcommands. Every flag can instead be supplied through a JSON config
//! file with identical keys; explicit flags win.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use ssci_core::bootstrap::run_ensemble;
use ssci_core::data::{load_csv, standardize};
use ssci_core::par::with_workers;
use ssci_core::select::{two_stage, Method, SelectorSpec};
use ssci_core::sim::{builtin_example, run_oracle_study, run_study, DEFAULT_B, DEFAULT_MC};
use ssci_core::ssci::{build_ssci, mcb_from_ssci, sweep_alpha};

use crate::output::atomic_write;
use crate::plot::{render_mcb_progression_svg, render_ssci_svg, PlotSpec};

const DEFAULT_ALPHA: f64 = 0.05;
const DEFAULT_LEVELS: &str = "0.8,0.9,0.95,0.99";

#[derive(Parser)]
#[command(
    name = "ssci",
    version,
    about = "Simultaneous confidence intervals and model confidence bounds \
             for sparse linear regression"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Fit intervals on a CSV dataset and write a JSON report
    Fit(FitArgs),
    /// Run a Monte-Carlo study on a builtin example design
    Simulate(SimArgs),
}

#[derive(Args, Debug, Default)]
pub struct FitArgs {
    /// CSV data file with a header row
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Name of the response column
    #[arg(long)]
    pub response: Option<String>,
    /// Selection method: spsp-{lasso,adalasso,scad,mcp} or cv-{lasso,adalasso,scad,mcp}
    #[arg(long)]
    pub selector: Option<String>,
    /// Miscoverage level in (0,1); intervals hold jointly at level 1-alpha
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of bootstrap replicates
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Random seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path for the JSON report
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fixed control ratio for SPSP selectors (default: estimated)
    #[arg(long = "R")]
    pub control_ratio: Option<f64>,
    /// Worker threads; 0 uses all cores (SSCI_WORKERS supplies the default)
    #[arg(long)]
    pub workers: Option<usize>,
    /// Optional SVG interval plot path
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Optional SVG model-bound progression path
    #[arg(long)]
    pub mcb_plot: Option<PathBuf>,
    /// Comma-separated confidence levels for the progression plot
    #[arg(long)]
    pub levels: Option<String>,
    /// JSON config file supplying any of these keys; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct SimArgs {
    /// Builtin example design, 1 through 10
    #[arg(long)]
    pub example: Option<usize>,
    /// Selection method (as in fit), or "oracle" for the reference study
    #[arg(long)]
    pub selector: Option<String>,
    /// Number of Monte-Carlo replicates
    #[arg(long)]
    pub mc: Option<usize>,
    /// Number of bootstrap replicates per Monte-Carlo replicate
    #[arg(long = "B")]
    pub bootstrap: Option<usize>,
    /// Miscoverage level in (0,1)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Random seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses all cores (SSCI_WORKERS supplies the default)
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output path for the metrics CSV; provenance JSON lands next to it
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fixed control ratio for SPSP selectors (default: estimated)
    #[arg(long = "R")]
    pub control_ratio: Option<f64>,
    /// JSON config file supplying any of these keys; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug)]
pub enum AppError {
    /// Bad flags or config: exit 2.
    Usage(String),
    /// Pipeline failure: exit 1.
    Runtime(String),
}

impl From<ssci_core::Error> for AppError {
    fn from(e: ssci_core::Error) -> Self {
        AppError::Runtime(error_chain(&e))
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Runtime(e.to_string())
    }
}

fn error_chain(e: &dyn std::error::Error) -> String {
    let mut out = e.to_string();
    let mut cur = e.source();
    while let Some(s) = cur {
        out.push_str(": ");
        out.push_str(&s.to_string());
        cur = s.source();
    }
    out
}

fn usage(msg: impl Into<String>) -> AppError {
    AppError::Usage(msg.into())
}

pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fit(args) => run_fit(args),
        Command::Simulate(args) => run_simulate(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(AppError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            2
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FitFileConfig {
    data: Option<PathBuf>,
    response: Option<String>,
    selector: Option<String>,
    alpha: Option<f64>,
    bootstrap: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    #[serde(rename = "R")]
    control_ratio: Option<f64>,
    workers: Option<usize>,
    plot: Option<PathBuf>,
    mcb_plot: Option<PathBuf>,
    levels: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SimFileConfig {
    example: Option<usize>,
    selector: Option<String>,
    mc: Option<usize>,
    #[serde(rename = "B")]
    bootstrap: Option<usize>,
    alpha: Option<f64>,
    seed: Option<u64>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    #[serde(rename = "R")]
    control_ratio: Option<f64>,
}

fn load_config<T: serde::de::DeserializeOwned + Default>(
    path: Option<&Path>,
) -> Result<T, AppError> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| usage(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| usage(format!("bad config {}: {e}", p.display())))
        }
    }
}

fn require<T>(v: Option<T>, key: &str) -> Result<T, AppError> {
    v.ok_or_else(|| usage(format!("missing required --{key} (flag or config key)")))
}

fn check_alpha(alpha: f64) -> Result<f64, AppError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(alpha)
    } else {
        Err(usage(format!("--alpha must lie strictly in (0,1), got {alpha}")))
    }
}

fn env_workers() -> Result<Option<usize>, AppError> {
    match std::env::var("SSCI_WORKERS") {
        Err(_) => Ok(None),
        Ok(v) => v
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("SSCI_WORKERS must be an integer, got {v:?}"))),
    }
}

enum SelectorChoice {
    Oracle,
    Selector(SelectorSpec),
}

fn parse_selector(
    text: &str,
    control_ratio: Option<f64>,
    allow_oracle: bool,
) -> Result<SelectorChoice, AppError> {
    if text == "oracle" {
        if !allow_oracle {
            return Err(usage(
                "the oracle reference needs the true model and is only available in simulate",
            ));
        }
        return Ok(SelectorChoice::Oracle);
    }
    let method = Method::from_str(text).map_err(|e| usage(e.to_string()))?;
    let mut spec = SelectorSpec::new(method);
    if let Some(r) = control_ratio {
        if !(r > 0.0) {
            return Err(usage(format!("--R must be positive, got {r}")));
        }
        spec = spec.with_control_ratio(r);
    }
    Ok(SelectorChoice::Selector(spec))
}

fn parse_levels(text: &str) -> Result<Vec<f64>, AppError> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let t = part.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t
            .parse()
            .map_err(|_| usage(format!("bad confidence level {t:?} in --levels")))?;
        if !(v > 0.0 && v < 1.0) {
            return Err(usage(format!(
                "confidence levels must lie strictly in (0,1), got {v}"
            )));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(usage("--levels needs at least one confidence level"));
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

fn unix_millis() -> u128 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn run_fit(args: FitArgs) -> Result<(), AppError> {
    let file: FitFileConfig = load_config(args.config.as_deref())?;

    let data = require(args.data.or(file.data), "data")?;
    let response = require(args.response.or(file.response), "response")?;
    let selector_text = require(args.selector.or(file.selector), "selector")?;
    let alpha = check_alpha(args.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA))?;
    let bootstrap = args.bootstrap.or(file.bootstrap).unwrap_or(DEFAULT_B);
    if bootstrap < 2 {
        return Err(usage(format!(
            "--bootstrap needs at least 2 replicates, got {bootstrap}"
        )));
    }
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let out = require(args.out.or(file.out), "out")?;
    let workers = match args.workers.or(file.workers) {
        Some(w) => w,
        None => env_workers()?.unwrap_or(0),
    };
    let control_ratio = args.control_ratio.or(file.control_ratio);
    let plot_path = args.plot.or(file.plot);
    let mcb_plot_path = args.mcb_plot.or(file.mcb_plot);
    let levels = parse_levels(
        args.levels
            .or(file.levels)
            .unwrap_or_else(|| DEFAULT_LEVELS.to_string())
            .as_str(),
    )?;

    let selector = match parse_selector(&selector_text, control_ratio, false)? {
        SelectorChoice::Selector(s) => s,
        SelectorChoice::Oracle => unreachable!("rejected above"),
    };

    let raw = load_csv(&data, &response)?;
    let (d, info) = standardize(&raw, true);
    let base = two_stage(&d, &selector)?;
    let ens = with_workers(workers, || run_ensemble(&d, &base, &selector, bootstrap, seed))?;
    let ssci = build_ssci(&ens, alpha)?.to_original_scale(&info.column_scales);
    let mcb = mcb_from_ssci(&ssci);

    let report = ssci.to_report_json(&raw.names, &mcb)?;
    atomic_write(&out, report.as_bytes())?;

    if plot_path.is_some() || mcb_plot_path.is_some() {
        let plot_spec = PlotSpec {
            names: Some(raw.names.clone()),
            ..Default::default()
        };
        if let Some(path) = plot_path {
            let svg = render_ssci_svg(&ssci, &plot_spec);
            atomic_write(&path, svg.as_bytes())?;
        }
        if let Some(path) = mcb_plot_path {
            let alphas: Vec<f64> = levels.iter().map(|l| 1.0 - l).collect();
            let sweep = sweep_alpha(&ens, &alphas)?;
            let sweep: Vec<_> = sweep
                .into_iter()
                .map(|(a, s, _)| {
                    let original = s.to_original_scale(&info.column_scales);
                    let m = mcb_from_ssci(&original);
                    (a, original, m)
                })
                .collect();
            let svg = render_mcb_progression_svg(&sweep, &plot_spec);
            atomic_write(&path, svg.as_bytes())?;
        }
    }
    Ok(())
}

fn run_simulate(args: SimArgs) -> Result<(), AppError> {
    let file: SimFileConfig = load_config(args.config.as_deref())?;

    let example = require(args.example.or(file.example), "example")?;
    if !(1..=10).contains(&example) {
        return Err(usage(format!("--example must be 1 through 10, got {example}")));
    }
    let selector_text = require(args.selector.or(file.selector), "selector")?;
    let mc = args.mc.or(file.mc).unwrap_or(DEFAULT_MC);
    if mc < 1 {
        return Err(usage("--mc needs at least 1 replicate"));
    }
    let bootstrap = args.bootstrap.or(file.bootstrap).unwrap_or(DEFAULT_B);
    let alpha = check_alpha(args.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA))?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let workers = match args.workers.or(file.workers) {
        Some(w) => w,
        None => env_workers()?.unwrap_or(0),
    };
    let out = require(args.out.or(file.out), "out")?;
    let control_ratio = args.control_ratio.or(file.control_ratio);

    let choice = parse_selector(&selector_text, control_ratio, true)?;
    if matches!(choice, SelectorChoice::Selector(_)) && bootstrap < 2 {
        return Err(usage(format!(
            "--B needs at least 2 replicates, got {bootstrap}"
        )));
    }

    let spec = builtin_example(example)?;
    let metrics = match &choice {
        SelectorChoice::Oracle => run_oracle_study(&spec, mc, alpha, seed, workers)?,
        SelectorChoice::Selector(sel) => {
            run_study(&spec, sel, mc, bootstrap, alpha, seed, workers)?
        }
    };

    let csv = metrics.csv_rows(&example.to_string(), &selector_text);
    atomic_write(&out, csv.as_bytes())?;

    let provenance = serde_json::json!({
        "example": example,
        "selector": selector_text,
        "R": match &choice {
            SelectorChoice::Oracle => serde_json::Value::Null,
            SelectorChoice::Selector(s) => serde_json::to_value(s.control_ratio)
                .unwrap_or(serde_json::Value::Null),
        },
        "MC": mc,
        "B": match &choice {
            SelectorChoice::Oracle => serde_json::Value::Null,
            SelectorChoice::Selector(_) => serde_json::json!(bootstrap),
        },
        "alpha": alpha,
        "seed": seed,
        "workers": workers,
        "version": env!("CARGO_PKG_VERSION"),
        "generated_unix_ms": unix_millis() as u64,
    });
    let prov_path = out.with_extension("provenance.json");
    atomic_write(
        &prov_path,
        serde_json::to_string_pretty(&provenance)
            .map_err(|e| AppError::Runtime(e.to_string()))?
            .as_bytes(),
    )?;
    Ok(())
}
