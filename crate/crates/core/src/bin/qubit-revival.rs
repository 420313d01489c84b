use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qubit_revival::measures::basin_scan;
use qubit_revival::output::{read_csv, render_plot, write_basin_csv, write_csv, OutputError};
use qubit_revival::scenario::{
    preset_text, run_scenario_detailed, ScenarioConfig, ScenarioError, PRESET_NAMES,
};

/// Worker thread count; unset means one per core.
const THREADS_ENV: &str = "QUBIT_REVIVAL_THREADS";

#[derive(Parser)]
#[command(version, about = "Two-qubit entanglement collapse and revival simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config; writes the CSV to `out_path` and an SVG of the
    /// `outputs` columns next to it.
    Run {
        config: PathBuf,
        /// Overrides the config's `out_path`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plot columns of a diagnostics CSV.
    Plot {
        csv: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        columns: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tangle over the basin-of-attraction parameter `a = r e^{i chi}`.
    Basin {
        /// `r:<steps>,chi:<steps>`.
        #[arg(long, default_value = "r:75,chi:144")]
        grid: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a bundled preset (`--list` names them, `--print` shows the config).
    Preset {
        name: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        list: bool,
        #[arg(long)]
        print: bool,
    },
}

enum Failure {
    Config(String),
    Numerical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Config(_) => Failure::Config(e.to_string()),
            ScenarioError::Numerical { .. } => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<OutputError> for Failure {
    fn from(e: OutputError) -> Self {
        if e.is_validation() {
            Failure::Config(e.to_string())
        } else {
            Failure::Io(e.to_string())
        }
    }
}

fn parse_grid(spec: &str) -> Result<(usize, usize), Failure> {
    let bad = || Failure::Config(format!("--grid: expected `r:<n>,chi:<m>`, got `{spec}`"));
    let (mut r, mut chi) = (None, None);
    for part in spec.split(',') {
        let (key, value) = part.split_once(':').ok_or_else(bad)?;
        let value: usize = value.trim().parse().map_err(|_| bad())?;
        match key.trim() {
            "r" => r = Some(value),
            "chi" => chi = Some(value),
            _ => return Err(bad()),
        }
    }
    match (r, chi) {
        (Some(r), Some(chi)) if r > 0 && chi > 0 => Ok((r, chi)),
        _ => Err(bad()),
    }
}

fn run_config(config: &ScenarioConfig, out: Option<PathBuf>) -> Result<(), Failure> {
    let csv_path = out
        .or_else(|| config.out_path.clone())
        .ok_or_else(|| Failure::Config("key `out_path`: not set and no --out given".into()))?;
    let run = run_scenario_detailed(config)?;
    write_csv(&run.series, &csv_path)?;
    let svg_path = csv_path.with_extension("svg");
    let columns: Vec<&str> = config.outputs.iter().map(String::as_str).collect();
    render_plot(&run.series, &columns, &svg_path)?;
    println!(
        "{} records (t_r = {:.6}, {} mismatch samples) -> {}, {}",
        run.series.len(),
        run.estimate.t_revival,
        run.sample_count,
        csv_path.display(),
        svg_path.display()
    );
    Ok(())
}

fn load_config(path: &Path) -> Result<ScenarioConfig, Failure> {
    ScenarioConfig::from_file(path)
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, out } => run_config(&load_config(&config)?, out),
        Command::Plot { csv, columns, out } => {
            let series = read_csv(&csv)?;
            let columns: Vec<&str> = columns.iter().map(String::as_str).collect();
            render_plot(&series, &columns, &out)?;
            Ok(())
        }
        Command::Basin { grid, out } => {
            let (r, chi) = parse_grid(&grid)?;
            let points = basin_scan(r, chi).map_err(|e| Failure::Numerical(e.to_string()))?;
            write_basin_csv(&points, &out)?;
            println!("{} points -> {}", points.len(), out.display());
            Ok(())
        }
        Command::Preset {
            name,
            out,
            list,
            print,
        } => {
            if list {
                println!("{}", PRESET_NAMES.join("\n"));
                return Ok(());
            }
            let name = name.ok_or_else(|| Failure::Config("preset name required".into()))?;
            let text = preset_text(&name).ok_or_else(|| {
                Failure::Config(format!(
                    "unknown preset `{name}`; available: {}",
                    PRESET_NAMES.join(", ")
                ))
            })?;
            if print {
                print!("{text}");
                return Ok(());
            }
            let config = ScenarioConfig::parse(text)
                .map_err(|e| Failure::Config(format!("preset {name}: {e}")))?;
            run_config(&config, out)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::Config(format!("{THREADS_ENV}: expected a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Config(format!("{THREADS_ENV}: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| execute(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
