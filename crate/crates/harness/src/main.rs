use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gdnls_lab::output::{format_number, Table, SERIES_FILE};
use gdnls_lab::sweep::{sweep, INDEX_FILE};
use gdnls_lab::{mu, run_experiment, HarnessError, HarnessResult, RunConfig};

#[derive(Parser)]
#[command(
    name = "gdnls-lab",
    version,
    about = "Pseudospectral experiments for the generalized derivative NLS"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration; missing keys take the experiment defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Concurrent runs in a sweep
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Overrides the configured seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Soliton propagation against the exact translate
    Simulate(Common),
    /// Picard iteration, contraction factors and local smoothing
    Picard(Common),
    /// Smoothing ratio of the frozen-coefficient flow on random data
    ProbeSmoothing(Common),
    /// Interpolation inequality ratios on random fields
    CheckInequalities(Common),
    /// Small-time continuity of the frozen-coefficient group
    ProbeContinuity(Common),
    /// Self-convergence orders of the time steppers
    Converge(Common),
    /// Continuous-dependence ratios
    Dependence(Common),
    /// Cross-product sweep of the configured experiment
    Sweep(Common),
    /// Residual probe fixing the sign of mu
    DetermineMu(Common),
    /// Runs the experiment named in the configuration
    Run(Common),
}

fn load(common: &Common, experiment: Option<&str>) -> HarnessResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let cfg = RunConfig::load(path, experiment)?;
            if let Some(name) = experiment {
                if cfg.experiment != name {
                    return Err(HarnessError::Usage(format!(
                        "config names '{}' but this subcommand runs '{name}'",
                        cfg.experiment
                    )));
                }
            }
            cfg
        }
        None => match experiment {
            Some(name) => RunConfig::defaults_for(name)?,
            None => return Err(HarnessError::Usage("--config is required".into())),
        },
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(common: &Common, name: &str) -> PathBuf {
    common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs").join(name))
}

fn single(common: &Common, experiment: Option<&str>) -> HarnessResult<()> {
    let cfg = load(common, experiment)?;
    let dir = out_dir(common, &cfg.experiment);
    std::fs::create_dir_all(&dir)?;
    let mu_record = mu::cached(&dir)?;
    let result = run_experiment(&cfg, &dir, &mu_record);
    let manifest = match &result {
        Ok(m) => m,
        Err(f) => &f.manifest,
    };
    for c in &manifest.checks {
        println!("{}", c.line());
    }
    println!(
        "{}: {} ({})",
        cfg.experiment,
        manifest.status,
        dir.display()
    );
    result.map(|_| ()).map_err(|f| f.error)
}

fn run_sweep(common: &Common) -> HarnessResult<()> {
    let cfg = load(common, None)?;
    let dir = out_dir(common, &format!("{}_sweep", cfg.experiment));
    std::fs::create_dir_all(&dir)?;
    let mu_record = mu::cached(&dir)?;
    let index = sweep(&cfg, &dir, &mu_record, common.workers)?;
    print!("{}", index.to_csv());
    println!("index: {}", dir.join(INDEX_FILE).display());
    Ok(())
}

fn determine_mu(common: &Common) -> HarnessResult<()> {
    let dir = out_dir(common, "determine_mu");
    std::fs::create_dir_all(&dir)?;
    let _ = std::fs::remove_file(dir.join(mu::CACHE_FILE));
    let record = mu::cached(&dir)?;
    let mut table = Table::new(&["mu_re", "mu_im", "residual"]);
    for (mu, r) in gdnls_core::evolution::MU_CANDIDATES
        .iter()
        .zip(&record.residuals)
    {
        table.push(vec![mu.re.into(), mu.im.into(), (*r).into()]);
    }
    table.write(&dir.join(SERIES_FILE))?;
    println!(
        "mu* = {} {:+}i (residual {}, runner-up {})",
        record.re,
        record.im,
        format_number(record.best_residual),
        format_number(record.runner_up)
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(c) => single(c, Some("soliton_propagation")),
        Command::Picard(c) => single(c, Some("picard_study")),
        Command::ProbeSmoothing(c) => single(c, Some("smoothing_probe")),
        Command::CheckInequalities(c) => single(c, Some("inequality_sweep")),
        Command::ProbeContinuity(c) => single(c, Some("small_time_probe")),
        Command::Converge(c) => single(c, Some("convergence_study")),
        Command::Dependence(c) => single(c, Some("dependence_study")),
        Command::Sweep(c) => run_sweep(c),
        Command::DetermineMu(c) => determine_mu(c),
        Command::Run(c) => single(c, None),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
