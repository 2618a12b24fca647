use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cos::Flag;
use crate::model::ScenarioConfig;

/// One completed epoch. Averages over an empty population are `None`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub epoch: u64,
    pub avg_rho_honest: Option<f64>,
    pub avg_rho_attackers: Option<f64>,
    pub epoch_duration_rounds: u32,
    /// Mean over the epoch's rounds of selected MHSs per declared user, in percent.
    pub pct_users_selected_mhs: Option<f64>,
    pub detector_flags: u32,
    pub reports_accepted: u32,
    pub reports_rejected: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScenarioDigest {
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsSeries {
    pub digest: ScenarioDigest,
    pub records: Vec<MetricsRecord>,
    /// Every flag raised, tagged with its epoch.
    pub flags: Vec<(u64, Flag)>,
}

/// SHA-256 of the canonical JSON form of the configuration.
pub fn config_hash(config: &ScenarioConfig) -> String {
    let json = serde_json::to_vec(config).expect("config serializes");
    hex::encode(Sha256::digest(json))
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl MetricsSeries {
    pub fn mean_epoch_duration(&self) -> Option<f64> {
        mean(self.records.iter().map(|r| r.epoch_duration_rounds as f64))
    }

    pub fn mean_pct_mhs(&self) -> Option<f64> {
        mean(self.records.iter().filter_map(|r| r.pct_users_selected_mhs))
    }

    /// Index of the first epoch whose honest mean ρ exceeds `theta`.
    pub fn first_epoch_honest_above(&self, theta: f64) -> Option<u64> {
        self.records
            .iter()
            .find(|r| r.avg_rho_honest.is_some_and(|v| v > theta))
            .map(|r| r.epoch)
    }

    pub fn summary(&self) -> Summary {
        let last = self.records.last();
        Summary {
            digest: self.digest.clone(),
            epochs_completed: self.records.len() as u64,
            final_avg_rho_honest: last.and_then(|r| r.avg_rho_honest),
            final_avg_rho_attackers: last.and_then(|r| r.avg_rho_attackers),
            mean_epoch_duration_rounds: self.mean_epoch_duration(),
            mean_pct_users_selected_mhs: self.mean_pct_mhs(),
            detector_flags: self
                .flags
                .iter()
                .map(|(epoch, f)| FlagSummary {
                    epoch: *epoch,
                    detector: f.detector.clone(),
                    area: f.area.0,
                    users: f.candidate.users().iter().map(|u| u.to_string()).collect(),
                    streak: f.streak,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlagSummary {
    pub epoch: u64,
    pub detector: String,
    pub area: u32,
    pub users: Vec<String>,
    pub streak: u32,
}

/// Content of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub digest: ScenarioDigest,
    pub epochs_completed: u64,
    pub final_avg_rho_honest: Option<f64>,
    pub final_avg_rho_attackers: Option<f64>,
    pub mean_epoch_duration_rounds: Option<f64>,
    pub mean_pct_users_selected_mhs: Option<f64>,
    pub detector_flags: Vec<FlagSummary>,
}
