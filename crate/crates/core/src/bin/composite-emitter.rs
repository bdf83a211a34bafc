use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use composite_emitter::experiments::{
    population_comparison_csv, run_named_experiment, run_sweep, with_tolerance, Config, ReproSettings, Scenario,
    DEFAULT_SWEEP_POINTS, NAMED_EXPERIMENTS,
};
use composite_emitter::pipeline::weighted_paths;
use composite_emitter::spectrum::{build_hamiltonian, classify_levels, diagonalize};
use composite_emitter::{cascade, Error, Result};

#[derive(Parser)]
#[command(name = "composite-emitter", version, about = "Cascade emission from coupled two-level emitters")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "COMPOSITE_EMITTER_OUT_DIR", default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the grid-doubling convergence tolerance.
    #[arg(long, global = true)]
    tol_grid: Option<f64>,
    /// Accepted for forward compatibility; nothing is random.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the level diagram of a configuration.
    Diagram { config: PathBuf },
    /// Write the weighted decay-path table.
    Paths { config: PathBuf },
    /// Run the `[sweep]` section of a configuration.
    Sweep {
        config: PathBuf,
        /// Append a wall-time column (makes the output non-reproducible).
        #[arg(long)]
        wall_time: bool,
    },
    /// Run a named reproduction experiment, or `all`.
    Repro {
        name: String,
        #[arg(long, default_value_t = DEFAULT_SWEEP_POINTS)]
        points: usize,
        #[arg(long)]
        wall_time: bool,
    },
    /// Write master-equation and rate-equation populations side by side.
    Populations { config: PathBuf },
}

fn scenario(path: &Path, tol: Option<f64>) -> Result<(Config, Scenario)> {
    let cfg = Config::load(path)?;
    let s = with_tolerance(cfg.scenario()?, tol);
    Ok((cfg, s))
}

fn write(out: &Path, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(out)?;
    let path = out.join(name);
    std::fs::write(&path, text)?;
    Ok(path)
}

fn run(cli: Cli) -> Result<bool> {
    let chunk = cli.threads.unwrap_or_else(rayon::current_num_threads).max(1);
    match cli.command {
        Command::Diagram { config } => {
            let (_, s) = scenario(&config, cli.tol_grid)?;
            let d = diagonalize(&build_hamiltonian(&s.model)?, &s.model)?;
            let d = classify_levels(d, s.options.threshold);
            println!("{}", write(&cli.out, "diagram.txt", &d.to_text())?.display());
        }
        Command::Paths { config } => {
            let (_, s) = scenario(&config, cli.tol_grid)?;
            let d = diagonalize(&build_hamiltonian(&s.model)?, &s.model)?;
            let d = classify_levels(d, s.options.threshold);
            let (paths, _) = weighted_paths(&d, d.top(), &s.options)?;
            println!("{}", write(&cli.out, "paths.csv", &cascade::paths_csv(&paths))?.display());
        }
        Command::Sweep { config, wall_time } => {
            let (cfg, s) = scenario(&config, cli.tol_grid)?;
            let sweep = cfg.sweep.ok_or_else(|| Error::Usage("configuration has no [sweep] section".into()))?;
            let values = sweep.grid()?;
            std::fs::create_dir_all(&cli.out)?;
            let path = cli.out.join(sweep.output.clone().unwrap_or_else(|| "sweep.csv".into()));
            let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
            let rows = run_sweep(&s, sweep.parameter, sweep.emitter, &values, &mut file, wall_time, chunk)?;
            println!("{}", path.display());
            let failed = rows.iter().filter(|r| !r.ok()).count();
            if failed > 0 {
                eprintln!("{failed} of {} grid points failed", rows.len());
                return Ok(false);
            }
        }
        Command::Repro { name, points, wall_time } => {
            if points == 0 {
                return Err(Error::Usage("--points must be positive".into()));
            }
            let settings = ReproSettings { points, grid_tolerance: cli.tol_grid, wall_time, chunk };
            let names: Vec<&str> = if name == "all" { NAMED_EXPERIMENTS.to_vec() } else { vec![name.as_str()] };
            let mut all_ok = true;
            for n in names {
                let (path, ok) = run_named_experiment(n, &cli.out, &settings)?;
                println!("{}", path.display());
                all_ok &= ok;
            }
            return Ok(all_ok);
        }
        Command::Populations { config } => {
            let (cfg, s) = scenario(&config, cli.tol_grid)?;
            let text = population_comparison_csv(&s, cfg.populations.t_max, cfg.populations.points)?;
            println!("{}", write(&cli.out, "populations.csv", &text)?.display());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ Error::Usage(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
