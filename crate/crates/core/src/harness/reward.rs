use serde::{Deserialize, Serialize};

use crate::model::Violation;

/// Platform-centric reward: each request pays `reward` in total, split in
/// proportion to the time units every user declares.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardModel {
    /// Currency paid per sensing request.
    pub reward: f64,
    /// Time declared by an honest user.
    pub t_u: f64,
    /// Time declared by an attacker.
    pub t_a: f64,
    pub n_users: u32,
    pub attacker_fraction: f64,
    /// Seconds between requests.
    pub request_interval: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RevenueLoss {
    pub per_request: f64,
    pub total: f64,
}

impl RewardModel {
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        let mut check = |field: &str, ok: bool, reason: &str| {
            if !ok {
                out.push(Violation {
                    field: field.to_string(),
                    reason: reason.to_string(),
                });
            }
        };
        let positive = |v: f64| v > 0.0 && v.is_finite();
        check("reward", positive(self.reward), "must be positive");
        check("t_u", positive(self.t_u), "must be positive");
        check("t_a", positive(self.t_a), "must be positive");
        check("n_users", self.n_users > 0, "must be positive");
        check(
            "attacker_fraction",
            (0.0..=1.0).contains(&self.attacker_fraction),
            "must lie in [0, 1]",
        );
        check("request_interval", positive(self.request_interval), "must be positive");
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}

/// Revenue captured by attackers per request and over `horizon` seconds.
pub fn revenue_loss(m: &RewardModel, horizon: f64) -> RevenueLoss {
    let attackers = (m.attacker_fraction * m.n_users as f64).round();
    let honest = m.n_users as f64 - attackers;
    let claimed = attackers * m.t_a;
    let denominator = claimed + honest * m.t_u;
    let per_request = if denominator > 0.0 {
        m.reward * claimed / denominator
    } else {
        0.0
    };
    RevenueLoss {
        per_request,
        total: per_request * (horizon / m.request_interval),
    }
}
