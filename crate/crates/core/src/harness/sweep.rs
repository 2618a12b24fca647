use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::adversary::AttackerSpec;
use crate::error::{Error, Result};
use crate::model::{AreaId, ScenarioConfig, UserId};

use super::metrics::MetricsSeries;
use super::scenario::run_scenario;

/// Parameters a sweep can vary.
pub const AXES: &[&str] = &[
    "density",
    "attacker_fraction",
    "n_users",
    "wifi_range",
    "M",
    "q",
    "e_max",
    "T_r",
    "n_epochs",
    "delta_b",
    "delta_d",
    "delta_u",
    "theta",
    "psi_max",
    "theta_c",
    "theta_f",
    "speed",
];

fn lsa_count(config: &ScenarioConfig) -> usize {
    config
        .attacker_spec
        .iter()
        .filter(|s| matches!(s, AttackerSpec::Lsa { .. }))
        .count()
}

/// Replaces the LSA attackers with `round(fraction * n_users)` users, all
/// targeting the first honest area. Other attacker kinds are kept, and the LSA
/// attackers are the highest ids they leave free.
pub fn with_attacker_fraction(config: &ScenarioConfig, fraction: f64) -> ScenarioConfig {
    let mut out = config.clone();
    let n = out.n_users;
    let k = (fraction.clamp(0.0, 1.0) * n as f64).round() as usize;
    let fake_area = out.honest_area_list().first().copied().unwrap_or(AreaId(0));
    out.attacker_spec.retain(|s| !matches!(s, AttackerSpec::Lsa { .. }));
    let taken = out.attackers();
    let mut ids: Vec<UserId> = (0..n)
        .rev()
        .map(UserId)
        .filter(|u| !taken.contains(u))
        .take(k)
        .collect();
    ids.reverse();
    out.attacker_spec
        .extend(ids.into_iter().map(|id| AttackerSpec::lsa(id, fake_area)));
    out
}

/// Sets the population from a density in users per square kilometer of the
/// honest region, keeping the LSA attacker fraction.
pub fn with_density(config: &ScenarioConfig, density: f64) -> ScenarioConfig {
    let km2 = config.honest_area_list().len() as f64 * config.grid.area_km2();
    let n_users = (density * km2).round().max(0.0) as u32;
    resize(config, n_users)
}

fn resize(config: &ScenarioConfig, n_users: u32) -> ScenarioConfig {
    let fraction = if config.n_users == 0 {
        0.0
    } else {
        lsa_count(config) as f64 / config.n_users as f64
    };
    let mut out = config.clone();
    out.n_users = n_users;
    with_attacker_fraction(&out, fraction)
}

/// Returns `base` with `axis` set to `value`.
pub fn apply_axis(base: &ScenarioConfig, axis: &str, value: f64) -> Result<ScenarioConfig> {
    let mut c = base.clone();
    let count = |v: f64| v.round().max(0.0) as u32;
    match axis {
        "density" => return Ok(with_density(base, value)),
        "attacker_fraction" => return Ok(with_attacker_fraction(base, value)),
        "n_users" => return Ok(resize(base, count(value))),
        "wifi_range" => c.wifi_range = value,
        "M" => c.schedule.m = value,
        "q" => c.schedule.q = count(value),
        "e_max" => c.schedule.e_max = count(value),
        "T_r" => c.schedule.t_r = value,
        "n_epochs" => c.n_epochs = count(value),
        "delta_b" => c.reputation_params.delta_b = value,
        "delta_d" => c.reputation_params.delta_d = value,
        "delta_u" => c.reputation_params.delta_u = value,
        "theta" => c.reputation_params.theta = value,
        "psi_max" => c.detector_params.psi_max = count(value) as usize,
        "theta_c" => c.detector_params.theta_c = count(value),
        "theta_f" => c.detector_params.theta_f = count(value),
        "speed" => c.mobility_params.speed = value,
        other => {
            return Err(Error::UnknownName {
                kind: "sweep axis",
                name: other.to_string(),
                valid: AXES.iter().map(|s| s.to_string()).collect(),
            })
        }
    }
    Ok(c)
}

#[derive(Clone, Debug)]
pub struct SweepRun {
    pub value: f64,
    pub replicate: u32,
    pub seed: u64,
    pub series: MetricsSeries,
}

/// Seed of one sweep point, a function of its coordinates only.
pub fn replicate_seed(base_seed: u64, value_index: usize, replicates: u32, replicate: u32) -> u64 {
    base_seed ^ (value_index as u64 * replicates as u64 + replicate as u64)
}

/// Runs every value of `axis` `replicates` times.
pub fn sweep(base: &ScenarioConfig, axis: &str, values: &[f64], replicates: u32) -> Result<Vec<SweepRun>> {
    if !AXES.contains(&axis) {
        apply_axis(base, axis, 0.0)?;
    }
    let mut runs = Vec::with_capacity(values.len() * replicates as usize);
    for (i, &value) in values.iter().enumerate() {
        let mut config = apply_axis(base, axis, value)?;
        for replicate in 0..replicates {
            config.seed = replicate_seed(base.seed, i, replicates, replicate);
            runs.push(SweepRun {
                value,
                replicate,
                seed: config.seed,
                series: run_scenario(&config)?,
            });
        }
    }
    Ok(runs)
}

/// Aggregate of one metric at one sweep value.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub value: f64,
    pub metric: String,
    /// Replicates with a defined value.
    pub n: usize,
    pub mean: Option<f64>,
    /// Student-t 95% half-width; needs two or more replicates.
    pub ci95_half_width: Option<f64>,
    pub replicates: Vec<Option<f64>>,
}

type MetricFn = fn(&MetricsSeries) -> Option<f64>;

const METRICS: &[(&str, MetricFn)] = &[
    ("mean_epoch_duration_rounds", |s| s.mean_epoch_duration()),
    ("mean_pct_users_selected_mhs", |s| s.mean_pct_mhs()),
    ("final_avg_rho_honest", |s| {
        s.records.last().and_then(|r| r.avg_rho_honest)
    }),
    ("final_avg_rho_attackers", |s| {
        s.records.last().and_then(|r| r.avg_rho_attackers)
    }),
    ("max_avg_rho_attackers", |s| {
        s.records.iter().filter_map(|r| r.avg_rho_attackers).reduce(f64::max)
    }),
    ("detector_flags", |s| Some(s.flags.len() as f64)),
];

pub fn mean_and_half_width(values: &[f64]) -> (Option<f64>, Option<f64>) {
    let n = values.len();
    if n == 0 {
        return (None, None);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (Some(mean), None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    (Some(mean), Some(t * (var / n as f64).sqrt()))
}

/// Groups runs by value, in order of first appearance, and aggregates each metric.
pub fn summarize(runs: &[SweepRun]) -> Vec<SummaryRow> {
    let mut values: Vec<f64> = Vec::new();
    for r in runs {
        if !values.iter().any(|v| v.to_bits() == r.value.to_bits()) {
            values.push(r.value);
        }
    }
    let mut rows = Vec::new();
    for value in values {
        let group: Vec<&SweepRun> = runs.iter().filter(|r| r.value.to_bits() == value.to_bits()).collect();
        for (name, f) in METRICS {
            let replicates: Vec<Option<f64>> = group.iter().map(|r| f(&r.series)).collect();
            let defined: Vec<f64> = replicates.iter().flatten().copied().collect();
            let (mean, ci95_half_width) = mean_and_half_width(&defined);
            rows.push(SummaryRow {
                value,
                metric: name.to_string(),
                n: defined.len(),
                mean,
                ci95_half_width,
                replicates,
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AreaGrid;

    fn lsa_base() -> ScenarioConfig {
        ScenarioConfig {
            grid: AreaGrid {
                columns: 2,
                ..AreaGrid::default()
            },
            honest_areas: Some(vec![AreaId(0)]),
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn density_counts_the_honest_region() {
        let c = with_attacker_fraction(&with_density(&lsa_base(), 125.0), 0.4);
        assert_eq!(c.n_users, 500);
        assert_eq!(c.attackers().len(), 200);
        let d = with_density(&c, 50.0);
        assert_eq!(d.n_users, 200);
        assert_eq!(d.attackers().len(), 80);
        assert!(d.attackers().iter().all(|u| u.0 >= 120));
    }

    #[test]
    fn unknown_axis_lists_valid_names() {
        let err = apply_axis(&ScenarioConfig::default(), "colour", 1.0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("colour") && msg.contains("density") && msg.contains("theta_f"));
        assert!(sweep(&ScenarioConfig::default(), "colour", &[], 1).is_err());
    }

    #[test]
    fn empty_values_give_empty_sweep() {
        assert!(sweep(&ScenarioConfig::default(), "density", &[], 30)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn half_width_matches_t_table() {
        // t(0.975, 4) = 2.776445
        let (mean, hw) = mean_and_half_width(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(mean, Some(3.0));
        let expected = 2.776_445 * (2.5f64 / 5.0).sqrt();
        assert!((hw.unwrap() - expected).abs() < 1e-5);
        assert_eq!(mean_and_half_width(&[7.0]), (Some(7.0), None));
        assert_eq!(mean_and_half_width(&[]), (None, None));
    }
}
