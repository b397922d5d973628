//! `slidc` command-line driver.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use slidc::driver::{self, RunConfig};
use slidc::idc_pde::IdcPdeConfig;
use slidc::reconstruct::ReconKind;
use slidc::scenario::ScenarioTag;
use slidc::stability::{self, CflScan};

/// Worker threads for the rayon pool. Unset means one per core.
const THREADS_ENV: &str = "SLIDC_THREADS";

#[derive(Parser)]
#[command(
    name = "slidc",
    version,
    about = "Split semi-Lagrangian transport with deferred correction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Advance one scenario to its final time.
    Run(RunArgs),
    /// Error and order table over a list of CFL numbers.
    Converge(ConvergeArgs),
    /// Largest stable CFL number of each scheme and reconstruction.
    Stability(StabilityArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Precision {
    F64,
    F32,
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    tfinal: Option<f64>,
    /// Sub-intervals per IDC interval (M).
    #[arg(long)]
    nodes: Option<usize>,
    /// Correction sweeps (K).
    #[arg(long)]
    corrections: Option<usize>,
    /// lie or strang.
    #[arg(long)]
    split: Option<String>,
    /// symmetric or literal.
    #[arg(long)]
    strang_correction: Option<String>,
    /// linear3, linear5 or weno5.
    #[arg(long)]
    recon: Option<String>,
    /// Reconstruction of residual flux differences (default weno5).
    #[arg(long)]
    residual_recon: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated snapshot times.
    #[arg(long)]
    snap: Option<String>,
    /// txt or bin.
    #[arg(long)]
    snapshot_format: Option<String>,
    /// Re-evaluate wave speeds every interval.
    #[arg(long)]
    recompute_speeds: bool,
    /// Diagnostics every this many intervals.
    #[arg(long)]
    diag_every: Option<usize>,
    #[arg(long, value_enum, default_value = "f64")]
    precision: Precision,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated CFL numbers. Defaults to the scenario's table.
    #[arg(long)]
    cfls: Option<String>,
    /// Comma-separated scheme names such as IDC3J2 or IDC-Strang3J1.
    /// Defaults to J0 up to the configured number of corrections.
    #[arg(long)]
    schemes: Option<String>,
    /// Run the scheme columns concurrently.
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct StabilityArgs {
    /// Comma-separated reconstructions (linear3, linear5).
    #[arg(long, default_value = "linear3,linear5")]
    recons: String,
    /// Comma-separated scheme names. Defaults to IDC2J0 through IDC3J2.
    #[arg(long)]
    schemes: Option<String>,
    /// CSV output file; the table is also printed.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = CflScan::default().lambda_max)]
    lambda_max: f64,
    #[arg(long, default_value_t = CflScan::default().xi_samples)]
    xi_samples: usize,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    init_threads()?;
    match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Converge(args) => cmd_converge(&args),
        Command::Stability(args) => cmd_stability(&args),
    }
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .with_context(|| format!("{THREADS_ENV} must be a thread count, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

/// Scenario defaults (or `study` defaults), then the config file, then flags.
fn resolve(args: &RunArgs, study: fn(ScenarioTag) -> RunConfig) -> Result<RunConfig> {
    let tag: Option<ScenarioTag> = args.scenario.as_deref().map(str::parse).transpose()?;
    let mut cfg = match (&args.config, tag) {
        (Some(path), _) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let base = study(tag.unwrap_or(ScenarioTag::LandauStrong));
            let cfg = RunConfig::from_config_text(&text, base)?;
            if let Some(tag) = tag.filter(|t| *t != cfg.scenario) {
                bail!(
                    "--scenario {tag} conflicts with scenario {} in {}",
                    cfg.scenario,
                    path.display()
                );
            }
            cfg
        }
        (None, Some(tag)) => study(tag),
        (None, None) => bail!("give --scenario or --config"),
    };
    let flags: [(&str, Option<String>); 14] = [
        ("n1", args.n1.map(|v| v.to_string())),
        ("n2", args.n2.map(|v| v.to_string())),
        ("cfl", args.cfl.map(|v| v.to_string())),
        ("tfinal", args.tfinal.map(|v| v.to_string())),
        ("nodes", args.nodes.map(|v| v.to_string())),
        ("corrections", args.corrections.map(|v| v.to_string())),
        ("split", args.split.clone()),
        ("strang_correction", args.strang_correction.clone()),
        ("recon", args.recon.clone()),
        ("residual_recon", args.residual_recon.clone()),
        ("out", args.out.as_ref().map(|p| p.display().to_string())),
        ("snap", args.snap.clone()),
        ("snapshot_format", args.snapshot_format.clone()),
        ("diag_every", args.diag_every.map(|v| v.to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, &v)
                .with_context(|| format!("--{}", key.replace('_', "-")))?;
        }
    }
    if args.recompute_speeds {
        cfg.recompute_speeds = true;
    }
    Ok(cfg)
}

fn default_out(cfg: &RunConfig, suffix: &str) -> PathBuf {
    cfg.out_dir
        .clone()
        .unwrap_or_else(|| Path::new("slidc-out").join(format!("{}{suffix}", cfg.scenario)))
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let mut cfg = resolve(args, RunConfig::new)?;
    cfg.out_dir = Some(default_out(&cfg, ""));
    cfg.validate()?;
    let summary = match args.precision {
        Precision::F64 => summarize(driver::run::<f64>(&cfg)?),
        Precision::F32 => summarize(driver::run::<f32>(&cfg)?),
    };
    println!(
        "{}: {} with {}",
        cfg.scenario,
        cfg.scheme().name(),
        cfg.recon
    );
    println!("{summary}");
    Ok(())
}

fn summarize<T>(out: driver::RunOutcome<T>) -> String {
    let mut s = format!(
        "t = {} after {} intervals (dtau = {:.6e}), max mass deviation {:.3e}",
        out.time,
        out.intervals,
        out.dtau,
        out.max_mass_deviation()
    );
    for f in &out.files {
        s.push_str(&format!("\nwrote {}", f.display()));
    }
    s
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|e| anyhow::anyhow!("bad {what} {t:?}: {e}"))
        })
        .collect()
}

fn cmd_converge(args: &ConvergeArgs) -> Result<()> {
    let cfg = resolve(&args.run, RunConfig::convergence)?;
    cfg.validate()?;
    let cfls: Vec<f64> = match &args.cfls {
        Some(s) => parse_list(s, "cfl")?,
        None => RunConfig::convergence_cfls(cfg.scenario),
    };
    if cfls.is_empty() {
        bail!("--cfls is empty");
    }
    let schemes: Vec<IdcPdeConfig> = match &args.schemes {
        Some(s) => parse_list(s, "scheme")?,
        None => (0..=cfg.k)
            .map(|k| IdcPdeConfig { k, ..cfg.scheme() })
            .collect(),
    };
    let out_dir = default_out(&cfg, "-convergence");
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut echo = cfg.clone();
    echo.out_dir = Some(out_dir.clone());
    let mut text = echo.to_config_text();
    text.push_str(&format!("# cfls = {}\n", join(&cfls)));
    text.push_str(&format!(
        "# schemes = {}\n",
        schemes
            .iter()
            .map(IdcPdeConfig::name)
            .collect::<Vec<_>>()
            .join(",")
    ));
    fs::write(out_dir.join("config.txt"), text)?;

    let table = match args.run.precision {
        Precision::F64 => study::<f64>(&cfg, &schemes, &cfls, args.parallel)?,
        Precision::F32 => study::<f32>(&cfg, &schemes, &cfls, args.parallel)?,
    };
    let csv = table.to_csv();
    let path = out_dir.join("convergence.csv");
    fs::write(&path, &csv).with_context(|| format!("writing {}", path.display()))?;
    print!("{csv}");
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn study<T: slidc::real::Real>(
    cfg: &RunConfig,
    schemes: &[IdcPdeConfig],
    cfls: &[f64],
    parallel: bool,
) -> Result<driver::ConvergenceTable> {
    let reference = driver::reference_solution::<T>(cfg)?;
    Ok(driver::convergence_study_with(
        cfg, schemes, cfls, &reference, parallel,
    )?)
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn cmd_stability(args: &StabilityArgs) -> Result<()> {
    let recons: Vec<ReconKind> = parse_list(&args.recons, "reconstruction")?;
    let schemes = match &args.schemes {
        Some(s) => parse_list(s, "scheme")?,
        None => stability::standard_schemes(),
    };
    let scan = CflScan {
        lambda_max: args.lambda_max,
        xi_samples: args.xi_samples,
        ..CflScan::default()
    };
    let csv = stability::stability_table(&recons, &schemes, &scan)?.to_csv();
    if let Some(path) = &args.out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
    }
    print!("{csv}");
    Ok(())
}
