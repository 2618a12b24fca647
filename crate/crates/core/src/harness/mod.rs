//! Scenario driver, metrics, parameter sweeps and the revenue-loss model.

mod epoch;
mod metrics;
pub mod output;
mod reward;
mod scenario;
pub mod scripted;
mod sweep;

pub use epoch::{close_epoch, EpochClose, UserVerdict};
pub use metrics::{config_hash, MetricsRecord, MetricsSeries, ScenarioDigest, Summary};
pub use reward::{revenue_loss, RevenueLoss, RewardModel};
pub use scenario::{run_scenario, run_scenario_with, ReputationRow, RunOptions, RunOutput, TrajectoryRow};
pub use sweep::{
    apply_axis, mean_and_half_width, replicate_seed, summarize, sweep, with_attacker_fraction, with_density,
    SummaryRow, SweepRun, AXES,
};
