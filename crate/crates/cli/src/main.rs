use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ecm_core::scenario::PRESETS;
use ecm_core::{load_config, preset, EcmError, RunSummary, ScenarioConfig};
use rayon::prelude::*;

/// Exit status for invalid input.
const EXIT_CONFIG: u8 = 1;
/// Exit status for a failed simulation.
const EXIT_SOLVER: u8 = 2;

#[derive(Parser)]
#[command(name = "ecm", version, about = "Electro-thermal simulation of anodic dissolution in ECM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run {
        #[command(flatten)]
        source: Source,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run every combination of a parameter grid.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// `key=v1,v2,...`; repeat for more axes.
        #[arg(long = "grid", value_name = "KEY=VALUES", required = true)]
        grid: Vec<String>,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
        /// Concurrent runs; defaults to the number of cores.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// List the built-in presets or print one as TOML.
    Presets {
        #[arg(long, value_name = "NAME")]
        show: Option<String>,
    },
}

#[derive(Args)]
struct Source {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// `key=value` assignment with a dotted key, e.g. `mesh.divisions=20`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Source {
    fn load(&self) -> Result<ScenarioConfig, EcmError> {
        let base = match (&self.config, &self.preset) {
            (Some(path), _) => load_config(path)?,
            (None, Some(name)) => preset(name)?,
            (None, None) => return Err(EcmError::Config("either --config or --preset is required".into())),
        };
        base.with_overrides(&self.overrides)
    }
}

fn config_error(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_CONFIG)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Presets { show: None } => {
            for name in PRESETS {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::Presets { show: Some(name) } => match preset(&name).and_then(|c| c.to_toml_string()) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => config_error(e),
        },
        Command::Run { source, out } => {
            let cfg = match source.load() {
                Ok(c) => c,
                Err(e) => return config_error(e),
            };
            match ecm_core::run(&cfg, &out) {
                Ok(s) => {
                    print_summary(&s);
                    ExitCode::SUCCESS
                }
                Err(f) if f.error.is_config() => config_error(f),
                Err(f) => {
                    eprintln!("error: {f}");
                    ExitCode::from(EXIT_SOLVER)
                }
            }
        }
        Command::Sweep { source, grid, out, jobs } => {
            let base = match source.load() {
                Ok(c) => c,
                Err(e) => return config_error(e),
            };
            let combos = match expand_grid(&grid) {
                Ok(c) => c,
                Err(e) => return config_error(e),
            };
            let mut cases = Vec::new();
            for (i, assignment) in combos.iter().enumerate() {
                match base.with_overrides(assignment) {
                    Ok(mut cfg) => {
                        cfg.name = format!("{}_{i:03}", base.name);
                        cases.push((cfg, assignment.join(" ")));
                    }
                    Err(e) => return config_error(format!("{}: {e}", assignment.join(" "))),
                }
            }
            sweep(cases, &out, jobs)
        }
    }
}

fn print_summary(s: &RunSummary) {
    println!(
        "{}: {} steps to t = {} s, V_dis = {:.6e} m³, V_co/V_dis = {:.3}%, Q/A = {:.6e} A s/m², Rz = {:.4e} m, Ra = {:.4e} m, {:.1} s",
        s.name,
        s.steps,
        s.t_final,
        s.v_dis,
        100.0 * s.cutoff_ratio,
        s.q_per_a,
        s.rz,
        s.ra,
        s.wall_time_s
    );
}

/// Cartesian product of `key=v1,v2` axes, as lists of `key=value`.
fn expand_grid(grid: &[String]) -> Result<Vec<Vec<String>>, EcmError> {
    let mut combos: Vec<Vec<String>> = vec![Vec::new()];
    for axis in grid {
        let (key, values) = axis
            .split_once('=')
            .ok_or_else(|| EcmError::Config(format!("grid axis '{axis}' is not of the form key=v1,v2")))?;
        let values: Vec<&str> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
        if values.is_empty() {
            return Err(EcmError::Config(format!("grid axis '{key}' has no values")));
        }
        combos = combos
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut c = c.clone();
                    c.push(format!("{}={v}", key.trim()));
                    c
                })
            })
            .collect();
    }
    Ok(combos)
}

fn sweep(cases: Vec<(ScenarioConfig, String)>, out: &std::path::Path, jobs: Option<usize>) -> ExitCode {
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => return config_error(e),
    };
    let results: Vec<_> = pool.install(|| {
        cases.par_iter().map(|(cfg, label)| (label.clone(), ecm_core::run(cfg, &out.join(&cfg.name)))).collect()
    });
    let path = out.join("sweep.csv");
    let mut failed = false;
    let write = || -> Result<(), Box<dyn std::error::Error>> {
        std::fs::create_dir_all(out)?;
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["case", "overrides", "steps", "t_final", "V_dis", "V_co", "cutoff_ratio", "Q_per_A", "Rz", "Ra", "status"])?;
        for (label, r) in &results {
            match r {
                Ok(s) => {
                    print_summary(s);
                    w.write_record([
                        s.name.clone(),
                        label.clone(),
                        s.steps.to_string(),
                        s.t_final.to_string(),
                        s.v_dis.to_string(),
                        s.v_co.to_string(),
                        s.cutoff_ratio.to_string(),
                        s.q_per_a.to_string(),
                        s.rz.to_string(),
                        s.ra.to_string(),
                        "ok".into(),
                    ])?;
                }
                Err(f) => {
                    eprintln!("error: {label}: {f}");
                    let mut row = vec![String::new(), label.clone()];
                    row.extend(std::iter::repeat_n(String::new(), 8));
                    row.push(format!("failed: {}", f.error));
                    w.write_record(row)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    };
    if let Err(e) = write() {
        eprintln!("error: {}: {e}", path.display());
        return ExitCode::from(EXIT_SOLVER);
    }
    for (_, r) in &results {
        failed |= r.is_err();
    }
    if failed {
        ExitCode::from(EXIT_SOLVER)
    } else {
        ExitCode::SUCCESS
    }
}
