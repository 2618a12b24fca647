use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lvs_core::harness::{self, output, RewardModel, RunOptions};
use lvs_core::{Error, ScenarioConfig};

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

#[derive(Parser)]
#[command(name = "lvs-sim", version, about = "Location validation system simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write metrics.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the configuration.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write events.csv.
        #[arg(long)]
        events: bool,
        /// Also write reputation.csv.
        #[arg(long)]
        reputation: bool,
        /// Also write trajectory.csv.
        #[arg(long)]
        trajectory: bool,
    },
    /// Vary one parameter, with replicates, and write per-run and combined tables.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 30)]
        replicates: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Revenue captured by attackers under proportional rewards.
    Reward {
        #[arg(long)]
        users: u32,
        /// Fraction of users that are attackers.
        #[arg(long)]
        attackers: f64,
        #[arg(long)]
        reward: f64,
        #[arg(long)]
        ta: f64,
        #[arg(long)]
        tu: f64,
        #[arg(long = "interval-s")]
        interval_s: f64,
        #[arg(long = "horizon-s")]
        horizon_s: f64,
    },
}

/// A failed command and whether its input was at fault.
struct Failure {
    error: Error,
    config: bool,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let config = error.is_config_error();
        Failure { error, config }
    }
}

/// An unreadable config file counts as a config error.
fn load(path: &Path) -> Result<ScenarioConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        error: Error::Io {
            path: path.to_path_buf(),
            source: e,
        },
        config: true,
    })?;
    Ok(ScenarioConfig::load(&text)?)
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run {
            config,
            seed,
            out,
            events,
            reputation,
            trajectory,
        } => {
            let mut config = load(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let options = RunOptions {
                record_events: events,
                record_reputation: reputation,
                record_trajectory: trajectory,
            };
            let run = harness::run_scenario_with(&config, options)?;
            output::write_run(&out, &run)?;
            println!(
                "{} epochs -> {}",
                run.series.records.len(),
                out.join(output::METRICS_FILE).display()
            );
        }
        Command::Sweep {
            config,
            axis,
            values,
            replicates,
            out,
        } => {
            let config = load(&config)?;
            let runs = harness::sweep(&config, &axis, &values, replicates)?;
            let summary = harness::summarize(&runs);
            output::write_sweep(&out, &axis, &runs, &summary)?;
            println!(
                "{} runs -> {}",
                runs.len(),
                out.join(output::SWEEP_SUMMARY_FILE).display()
            );
        }
        Command::Reward {
            users,
            attackers,
            reward,
            ta,
            tu,
            interval_s,
            horizon_s,
        } => {
            let model = RewardModel {
                reward,
                t_u: tu,
                t_a: ta,
                n_users: users,
                attacker_fraction: attackers,
                request_interval: interval_s,
            };
            model.validate().map_err(Error::InvalidConfig)?;
            if !(horizon_s >= 0.0 && horizon_s.is_finite()) {
                return Err(Error::InvalidConfig(vec![lvs_core::Violation::new(
                    "horizon_s",
                    "must be a non-negative number",
                )])
                .into());
            }
            let loss = harness::revenue_loss(&model, horizon_s);
            println!("per_request {:.2}", loss.per_request);
            println!("total {:.2}", loss.total);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { error, config }) => {
            eprintln!("lvs-sim: {error}");
            if config {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
