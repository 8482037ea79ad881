use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cohort::harness::config::apply_config;
use cohort::harness::io::{read_trajectory, write_json, write_trajectory};
use cohort::harness::render::{render_snapshot, RenderOptions};
use cohort::harness::sim::{run_simulation, with_workers, workers_from_env, Simulation};
use cohort::harness::sweep::{run_sweep, GridSpec, SweepOptions};
use cohort::metrics::{compute_metrics, MetricsConfig};
use cohort::sensitivity::{run_sobol_study, StudyConfig};
use cohort::{Error, Result, SimParams};

#[derive(Parser)]
#[command(name = "cohort", version, about = "Sensorimotor collective-motion simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Key-value config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set psi=pi/2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<SimParams> {
        let mut params = SimParams::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            apply_config(&mut params, &text)?;
        }
        for item in &self.overrides {
            let Some((k, v)) = item.split_once('=') else {
                return Err(Error::InvalidParam {
                    key: item.clone(),
                    reason: "expected KEY=VALUE".into(),
                });
            };
            params.set(k.trim(), v.trim())?;
        }
        params.validate()?;
        Ok(params)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its trajectory and record.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory.
        #[arg(long, short, default_value = "run")]
        out: PathBuf,
        /// Skip writing the trajectory CSV.
        #[arg(long)]
        no_trajectory: bool,
    },
    /// Full-factorial sweep over the standard parameter grid.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, short, default_value = "sweep")]
        out: PathBuf,
        /// Restrict axes, e.g. `psi=pi/2,memory=false`.
        #[arg(long)]
        filter: Option<String>,
        /// Print the number of configurations and exit.
        #[arg(long)]
        dry_run: bool,
        #[arg(long)]
        trajectories: bool,
    },
    /// Sobol sensitivity study for one memory condition.
    Sobol {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 64)]
        n_base: usize,
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        memory: bool,
        #[arg(long, default_value_t = 0)]
        study_seed: u64,
        #[arg(long, default_value_t = 200)]
        bootstrap: usize,
        #[arg(long, short, default_value = "sobol.json")]
        out: PathBuf,
    },
    /// Recompute metrics from a trajectory CSV.
    Metrics {
        trajectory: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Simulate up to a step and render an SVG snapshot.
    Snapshot {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Step to render; defaults to the final step.
        #[arg(long)]
        step: Option<usize>,
        /// Agent whose beliefs and field of view are drawn.
        #[arg(long)]
        focus: Option<usize>,
        #[arg(long, short, default_value = "snapshot.svg")]
        out: PathBuf,
    },
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    let workers = workers_from_env();
    match command {
        Command::Run {
            cfg,
            out,
            no_trajectory,
        } => {
            let params = cfg.load()?;
            let (mut record, traj) = run_simulation(&params, workers)?;
            create_dir(&out)?;
            if !no_trajectory {
                write_trajectory(&traj, &out.join("trajectory.csv"))?;
                record.trajectory_path = Some("trajectory.csv".into());
            }
            write_json(&record, &out.join("record.json"))?;
            print_json(&record.metrics)
        }
        Command::Sweep {
            cfg,
            out,
            filter,
            dry_run,
            trajectories,
        } => {
            let base = cfg.load()?;
            let mut grid = GridSpec::default();
            if let Some(f) = filter {
                grid = grid.filter(&f)?;
            }
            let points = grid.points(&base);
            if dry_run {
                println!("{}", points.len());
                return Ok(());
            }
            let opts = SweepOptions {
                out_dir: out,
                write_trajectories: trajectories,
            };
            let summary = with_workers(workers, || run_sweep(&points, &opts))?;
            print_json(&summary)
        }
        Command::Sobol {
            cfg,
            n_base,
            memory,
            study_seed,
            bootstrap,
            out,
        } => {
            let base = cfg.load()?;
            let study = StudyConfig {
                bootstrap,
                ..StudyConfig::new(base, n_base, memory, study_seed)
            };
            let report = with_workers(workers, || run_sobol_study(&study))?;
            write_json(&report, &out)?;
            print_json(&report)
        }
        Command::Metrics { trajectory, cfg } => {
            let params = cfg.load()?;
            let traj = read_trajectory(&trajectory)?;
            print_json(&compute_metrics(&traj, &MetricsConfig::from(&params)))
        }
        Command::Snapshot { cfg, step, focus, out } => {
            let params = cfg.load()?;
            let target = step.unwrap_or(params.steps).min(params.steps);
            let sim = with_workers(workers, || -> Result<Simulation> {
                let mut sim = Simulation::new(&params)?;
                for _ in 0..target {
                    sim.step()?;
                }
                Ok(sim)
            })?;
            let opts = RenderOptions {
                r_body: params.r_body,
                focus,
                psi: params.psi,
                ..RenderOptions::default()
            };
            let beliefs = focus.filter(|&i| i < params.n_agents).map(|i| sim.bank(i));
            render_snapshot(&sim.world().poses, beliefs, &opts, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.category().exit_code() as u8)
        }
    }
}
