use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fptfilter::Execution;
use fptfilter_cli::commands::{self, Output, Tolerances};
use fptfilter_cli::{CliError, Experiment, ExperimentConfig};

/// First-passage-time densities between two absorbing boundaries.
#[derive(Parser)]
#[command(name = "fptfilter", version)]
struct Cli {
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the density curve t,value,method,trunc_order.
    Density(RunArgs),
    /// Write the signed filtration terms f0..f{N-1}.
    Terms(RunArgs),
    /// Compare two experiments on a shared grid.
    Compare(CompareArgs),
    /// Simulate trajectories and write their hit times.
    Mc(RunArgs),
    /// Write the Ornstein-Uhlenbeck spectrum table.
    Spectrum(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment file (TOML).
    config: PathBuf,
    /// Override a config value, e.g. --set method.order=12.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output path; overrides `output` in the file. Stdout if neither is given.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
    #[arg(long = "set-a", value_name = "KEY=VALUE")]
    set_a: Vec<String>,
    #[arg(long = "set-b", value_name = "KEY=VALUE")]
    set_b: Vec<String>,
    /// Largest acceptable sup-norm between deterministic curves.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Largest acceptable |z| per histogram bin.
    #[arg(long, default_value_t = 3.0)]
    z_max: f64,
    /// Bins with fewer counts are not scored.
    #[arg(long, default_value_t = 50)]
    min_count: usize,
    /// Per-point report CSV.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn load(path: &Path, set: &[String], output: &Option<PathBuf>) -> Result<Experiment, CliError> {
    let mut e = ExperimentConfig::load(path, set)?.validate()?;
    if output.is_some() {
        e.output = output.clone();
    }
    Ok(e)
}

fn emit(out: &Output, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
            }
            fs::write(p, &out.csv).map_err(|source| CliError::Io { path: p.to_path_buf(), source })?;
            eprintln!("{}", out.summary);
            eprintln!("wrote {}", p.display());
        }
        None => {
            print!("{}", out.csv);
            eprintln!("{}", out.summary);
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match cli.command {
        Command::Density(a) => {
            let e = load(&a.config, &a.set, &a.output)?;
            emit(&commands::density(&e, exec)?, e.output.as_deref())
        }
        Command::Terms(a) => {
            let e = load(&a.config, &a.set, &a.output)?;
            emit(&commands::terms(&e, exec)?, e.output.as_deref())
        }
        Command::Mc(a) => {
            let e = load(&a.config, &a.set, &a.output)?;
            emit(&commands::mc(&e, exec)?, e.output.as_deref())
        }
        Command::Spectrum(a) => {
            let e = load(&a.config, &a.set, &a.output)?;
            emit(&commands::spectrum(&e)?, e.output.as_deref())
        }
        Command::Compare(c) => {
            let ea = load(&c.a, &c.set_a, &None)?;
            let eb = load(&c.b, &c.set_b, &None)?;
            let tol = Tolerances { sup: c.tol, z_max: c.z_max, min_count: c.min_count };
            let cmp = commands::compare(&ea, &eb, tol, exec)?;
            match &c.output {
                Some(p) => emit(&cmp.output, Some(p))?,
                None => eprintln!("{}", cmp.output.summary),
            }
            if cmp.passed {
                Ok(())
            } else {
                Err(CliError::Tolerance(cmp.output.summary))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
