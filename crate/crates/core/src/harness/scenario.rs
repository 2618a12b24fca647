use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::adversary::{uniform_point, PolicySet};
use crate::cos::{Detector, DetectorHistory, DetectorRegistry, KnowledgeBase};
use crate::error::{Error, Result};
use crate::mobility::MobilityState;
use crate::model::{derived_rng, validate_config, AreaId, Bounds, Position, ScenarioConfig, UserId};
use crate::protocol::{collect_declarations, epoch_finished, run_round, EpochState, SpotEvent};
use crate::reputation::{OpinionTriple, Verdict};
use crate::topology::{neighbor_graph, MhsSelector, SelectorRegistry};

use super::epoch::close_epoch;
use super::metrics::{config_hash, MetricsRecord, MetricsSeries, ScenarioDigest};

const PLACEMENT_STREAM: u64 = 1;
const MOBILITY_STREAM: u64 = 2;

/// Optional detail recorded next to the metrics.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub record_events: bool,
    pub record_reputation: bool,
    pub record_trajectory: bool,
}

impl RunOptions {
    pub fn everything() -> Self {
        RunOptions {
            record_events: true,
            record_reputation: true,
            record_trajectory: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReputationRow {
    pub epoch: u64,
    pub user_id: UserId,
    pub b: f64,
    pub d: f64,
    pub u: f64,
    pub rho: f64,
    pub verdict: Verdict,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub time_s: f64,
    pub user_id: UserId,
    pub x_m: f64,
    pub y_m: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub series: MetricsSeries,
    pub events: Vec<SpotEvent>,
    pub reputation: Vec<ReputationRow>,
    pub trajectory: Vec<TrajectoryRow>,
}

/// Runs a scenario and returns its per-epoch metrics.
pub fn run_scenario(config: &ScenarioConfig) -> Result<MetricsSeries> {
    Ok(run_scenario_with(config, RunOptions::default())?.series)
}

pub fn run_scenario_with(config: &ScenarioConfig, options: RunOptions) -> Result<RunOutput> {
    validate_config(config).map_err(Error::InvalidConfig)?;
    let mut sim = Simulation::new(config)?;
    let mut out = RunOutput {
        series: MetricsSeries {
            digest: ScenarioDigest {
                config_hash: config_hash(config),
                seed: config.seed,
            },
            records: Vec::with_capacity(config.n_epochs as usize),
            flags: Vec::new(),
        },
        events: Vec::new(),
        reputation: Vec::new(),
        trajectory: Vec::new(),
    };
    if options.record_trajectory {
        sim.record_positions(&mut out.trajectory);
    }
    for epoch in 0..config.n_epochs as u64 {
        sim.run_epoch(epoch, options, &mut out)?;
    }
    Ok(out)
}

struct Walker {
    state: MobilityState,
    rng: ChaCha8Rng,
    bounds: Bounds,
    residence: Option<AreaId>,
}

struct Simulation<'a> {
    config: &'a ScenarioConfig,
    policies: PolicySet,
    selector: Arc<dyn MhsSelector>,
    detectors: Vec<Arc<dyn Detector>>,
    walkers: Vec<Walker>,
    opinions: BTreeMap<UserId, OpinionTriple>,
    history: DetectorHistory,
    attackers: BTreeSet<UserId>,
    round: u64,
}

impl<'a> Simulation<'a> {
    fn new(config: &'a ScenarioConfig) -> Result<Self> {
        let grid = &config.grid;
        let policies = PolicySet::from_specs(&config.attacker_spec);
        let selector = SelectorRegistry::builtin().get(&config.mhs_selector)?;
        let registry = DetectorRegistry::builtin();
        let detectors = config
            .detectors
            .iter()
            .map(|name| registry.get(name))
            .collect::<Result<Vec<_>>>()?;

        let honest_areas = config.honest_area_list();
        let spoofed: BTreeMap<UserId, AreaId> = config.attacker_spec.iter().flat_map(|s| s.spoofers()).collect();

        let mut walkers = Vec::with_capacity(config.n_users as usize);
        for id in (0..config.n_users).map(UserId) {
            let mut rng = derived_rng(config.seed, PLACEMENT_STREAM, id.0 as u64);
            let residence = policies.policy_of(id).and_then(|p| p.residence(id));
            let area = if let Some(area) = residence {
                area
            } else if let Some(&fake) = spoofed.get(&id) {
                // Spoofers live away from their fake area, outside the honest
                // region when there is room for it.
                let away: Vec<AreaId> = (0..grid.area_count()).map(AreaId).filter(|&a| a != fake).collect();
                let outside: Vec<AreaId> = away.iter().copied().filter(|a| !honest_areas.contains(a)).collect();
                let pool = if outside.is_empty() { &away } else { &outside };
                *pool
                    .get(rng.gen_range(0..pool.len().max(1)))
                    .ok_or(Error::NoAlternativeArea)?
            } else {
                honest_areas[rng.gen_range(0..honest_areas.len())]
            };
            let start = uniform_point(grid, area, &mut rng)?;
            let mut mobility_rng = derived_rng(config.seed, MOBILITY_STREAM, id.0 as u64);
            let state = MobilityState::start(start, &config.mobility_params, &mut mobility_rng);
            walkers.push(Walker {
                state,
                rng: mobility_rng,
                bounds: grid.bounds(),
                residence,
            });
        }

        Ok(Simulation {
            config,
            attackers: config.attackers(),
            policies,
            selector,
            detectors,
            walkers,
            opinions: BTreeMap::new(),
            history: DetectorHistory::default(),
            round: 0,
        })
    }

    fn positions(&self) -> BTreeMap<UserId, Position> {
        self.walkers
            .iter()
            .enumerate()
            .map(|(i, w)| (UserId(i as u32), w.state.position))
            .collect()
    }

    fn record_positions(&self, rows: &mut Vec<TrajectoryRow>) {
        let time_s = self.round as f64 * self.config.schedule.t_r;
        for (i, w) in self.walkers.iter().enumerate() {
            rows.push(TrajectoryRow {
                time_s,
                user_id: UserId(i as u32),
                x_m: w.state.position.x,
                y_m: w.state.position.y,
            });
        }
    }

    fn confine(&mut self) -> Result<()> {
        let grid = &self.config.grid;
        let confine = self.config.mobility_params.confine_per_epoch;
        for w in &mut self.walkers {
            w.bounds = match w.residence {
                Some(area) => grid.cell_bounds(area)?,
                None if confine => grid.cell_bounds(grid.area_of(&w.state.position)?)?,
                None => grid.bounds(),
            };
        }
        Ok(())
    }

    fn advance(&mut self) {
        let dt = self.config.schedule.t_r;
        let params = &self.config.mobility_params;
        for w in &mut self.walkers {
            let state = std::mem::replace(
                &mut w.state,
                MobilityState {
                    position: Position::new(0.0, 0.0),
                    remaining_flight: 0.0,
                    heading: 0.0,
                    remaining_pause: 0.0,
                    queued_pause: 0.0,
                },
            );
            w.state = state.advance(dt, params, &w.bounds, &mut w.rng);
        }
    }

    fn run_epoch(&mut self, epoch: u64, options: RunOptions, out: &mut RunOutput) -> Result<()> {
        let config = self.config;
        let grid = &config.grid;
        let psi_max = config.detector_params.psi_max;
        self.confine()?;

        let mut areas: BTreeMap<AreaId, (EpochState, KnowledgeBase)> = BTreeMap::new();
        let latest: BTreeMap<UserId, AreaId>;
        let mut pct_sum = 0.0;
        let mut pct_rounds = 0u32;
        let mut rounds = 0u32;

        loop {
            if self.round > 0 {
                self.advance();
                if options.record_trajectory {
                    self.record_positions(&mut out.trajectory);
                }
            }
            let positions = self.positions();
            let declarations = collect_declarations(&positions, &self.policies, grid, config.seed, self.round)?;
            let graph = neighbor_graph(&positions, config.wifi_range);
            let outcome = run_round(
                self.round,
                &declarations,
                &positions,
                &graph,
                grid,
                self.selector.as_ref(),
            )?;
            let forged = self.policies.fabricate(self.round, &declarations, &positions, grid)?;

            let mut declarers: BTreeMap<AreaId, Vec<UserId>> = BTreeMap::new();
            for (&u, d) in &declarations {
                declarers.entry(d.area).or_default().push(u);
            }
            let mut by_area: BTreeMap<AreaId, Vec<SpotEvent>> = BTreeMap::new();
            for e in outcome.events.iter().chain(&forged) {
                by_area.entry(e.area).or_default().push(*e);
            }
            for &area in declarers.keys().chain(by_area.keys()) {
                areas
                    .entry(area)
                    .or_insert_with(|| (EpochState::new(area, self.round), KnowledgeBase::new(epoch)));
            }
            for (area, (state, kb)) in areas.iter_mut() {
                if let Some(events) = by_area.get(area) {
                    kb.exchange_round(events, psi_max);
                }
                state.record_round(declarers.get(area).into_iter().flatten().copied(), kb);
            }

            if !declarations.is_empty() {
                pct_sum += 100.0 * outcome.selected_count() as f64 / declarations.len() as f64;
                pct_rounds += 1;
            }
            if options.record_events {
                out.events.extend(outcome.events.iter().chain(&forged).copied());
            }
            self.round += 1;
            rounds += 1;
            if areas.values().all(|(s, _)| epoch_finished(s, &config.schedule)) {
                // Everyone declares every round, so the last round holds each
                // user's latest declaration.
                latest = declarations.iter().map(|(&u, d)| (u, d.area)).collect();
                break;
            }
        }

        let closed = close_epoch(
            &areas,
            grid.area_count(),
            &latest,
            &self.detectors,
            &mut self.history,
            &mut self.opinions,
            &config.schedule,
            &config.detector_params,
            &config.reputation_params,
        );

        let mut honest = (0.0, 0u32);
        let mut attackers = (0.0, 0u32);
        let (mut accepted, mut rejected) = (0u32, 0u32);
        for v in &closed.verdicts {
            let bucket = if self.attackers.contains(&v.user) {
                &mut attackers
            } else {
                &mut honest
            };
            bucket.0 += v.opinion.rho();
            bucket.1 += 1;
            if v.accepted {
                accepted += 1;
            } else {
                rejected += 1;
            }
            if options.record_reputation {
                out.reputation.push(ReputationRow {
                    epoch,
                    user_id: v.user,
                    b: v.opinion.b,
                    d: v.opinion.d,
                    u: v.opinion.u,
                    rho: v.opinion.rho(),
                    verdict: v.verdict,
                    accepted: v.accepted,
                });
            }
        }
        let avg = |(sum, n): (f64, u32)| (n > 0).then(|| sum / n as f64);

        out.series.records.push(MetricsRecord {
            epoch,
            avg_rho_honest: avg(honest),
            avg_rho_attackers: avg(attackers),
            epoch_duration_rounds: rounds,
            pct_users_selected_mhs: (pct_rounds > 0).then(|| pct_sum / pct_rounds as f64),
            detector_flags: closed.flags.len() as u32,
            reports_accepted: accepted,
            reports_rejected: rejected,
        });
        out.series.flags.extend(closed.flags.into_iter().map(|f| (epoch, f)));
        Ok(())
    }
}
