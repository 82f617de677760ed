use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use optoradar::config::{ConfigFile, Experiment};
use optoradar::dynamics::{noise_condition_eigenvalue, PdNoise};
use optoradar::output::{emit_csv, emit_plot, Table};
use optoradar::pipeline::check_physical;
use optoradar::presets::{self, PRESETS};
use optoradar::selfcheck::{
    finite_difference_jacobian, jacobian_deviation, lyapunov_deviation, stable_draws,
};
use optoradar::sweep::run_sweep;
use optoradar::Error;

#[derive(Parser)]
#[command(
    name = "optoradar",
    version,
    about = "Entanglement sweeps for an optoelectronic quantum radar transmitter"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::CsvSvg)]
    format: Format,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for the randomized checks of `selfcheck`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    #[value(name = "csv")]
    Csv,
    #[value(name = "csv+svg")]
    CsvSvg,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a TOML file.
    Run { config: PathBuf },
    /// Run a built-in figure preset.
    Preset { name: String },
    /// List built-in presets.
    ListPresets,
    /// Check a TOML file without running it.
    Validate { config: PathBuf },
    /// Randomized physicality, Jacobian and Lyapunov checks.
    Selfcheck {
        /// Number of stable random draws.
        #[arg(long, default_value_t = 200)]
        draws: usize,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_FAILED_POINTS: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result =
        match &cli.command {
            Command::Run { config } => ConfigFile::load(config).and_then(|c| {
                let stem = config
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("sweep");
                execute(&cli, &c, stem)
            }),
            Command::Preset { name } => {
                presets::find(name).and_then(|p| execute(&cli, &p.config(), p.name))
            }
            Command::ListPresets => {
                for p in &PRESETS {
                    println!("{:<6}  {}", p.name, p.description);
                }
                Ok(ExitCode::SUCCESS)
            }
            Command::Validate { config } => ConfigFile::load(config)
                .and_then(|c| c.experiment())
                .map(|e| {
                    println!("{}: ok, {} points", config.display(), e.spec.points().len());
                    ExitCode::SUCCESS
                }),
            Command::Selfcheck { draws } => selfcheck(cli.seed, *draws, cli.jobs),
        };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })
}

fn execute(cli: &Cli, config: &ConfigFile, stem: &str) -> Result<ExitCode, Error> {
    let Experiment { spec, stages } = config.experiment()?;
    std::fs::create_dir_all(&cli.out).map_err(|e| Error::Io {
        path: cli.out.clone(),
        message: e.to_string(),
    })?;
    let start = Instant::now();
    let rows = run_sweep(&spec, cli.jobs)?;
    let table = Table {
        primary: spec.primary.var,
        secondary: spec.secondary.as_ref().map(|s| s.var),
        rows,
    };
    let csv_path = cli.out.join(format!("{stem}.csv"));
    emit_csv(&table, &csv_path)?;
    let mut written = vec![csv_path];
    if cli.format == Format::CsvSvg {
        let svg_path = cli.out.join(format!("{stem}.svg"));
        emit_plot(&table, &stages, stem, &svg_path)?;
        written.push(svg_path);
    }
    let toml_path = cli.out.join(format!("{stem}.toml"));
    write_text(&toml_path, &config.to_toml())?;
    written.push(toml_path);

    let failed = table.rows.iter().filter(|r| r.status.is_failure()).count();
    let unstable = table
        .rows
        .iter()
        .filter(|r| r.stable == Some(false))
        .count();
    eprintln!(
        "{stem}: {} points in {:.2} s, {unstable} unstable, {failed} failed",
        table.rows.len(),
        start.elapsed().as_secs_f64()
    );
    for p in written {
        println!("{}", p.display());
    }
    Ok(if failed > 0 {
        ExitCode::from(EXIT_FAILED_POINTS)
    } else {
        ExitCode::SUCCESS
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.into(),
        message: e.to_string(),
    })
}

fn selfcheck(seed: u64, draws: usize, jobs: Option<usize>) -> Result<ExitCode, Error> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let (points, used) = stable_draws(seed, draws, PdNoise::Lindblad);
    let mut nonphysical = 0;
    let mut noise_violations = 0;
    let mut worst_uncertainty = f64::INFINITY;
    let mut worst_jacobian = 0.0f64;
    let mut worst_lyapunov = 0.0f64;
    for (_, r) in &points {
        let v = r
            .covariance
            .as_ref()
            .expect("stable points carry a covariance");
        if check_physical(v, &r.drift, &r.diffusion).is_err() {
            nonphysical += 1;
        }
        if noise_condition_eigenvalue(&r.drift, &r.diffusion) < -1e-9 * r.diffusion.0.amax() {
            noise_violations += 1;
        }
        worst_uncertainty = worst_uncertainty.min(v.min_uncertainty_eigenvalue());
        let fd = finite_difference_jacobian(&r.rates, &r.fixed_point.state);
        worst_jacobian = worst_jacobian.max(jacobian_deviation(&r.drift, &fd));
        let (_, rel) = lyapunov_deviation(&r.drift, &r.diffusion, &v.0)?;
        worst_lyapunov = worst_lyapunov.max(rel);
    }
    println!("seed {seed}: {} stable draws out of {used}", points.len());
    println!("non-physical covariances: {nonphysical}");
    println!("min uncertainty eigenvalue (f64 estimate): {worst_uncertainty:.3e}");
    println!("draws violating the noise condition: {noise_violations}");
    println!("max Jacobian deviation: {worst_jacobian:.3e}");
    println!("max relative Lyapunov deviation: {worst_lyapunov:.3e}");
    let ok = nonphysical == 0 && worst_jacobian <= 1e-6 && worst_lyapunov <= 1e-8;
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILED_POINTS)
    })
}
