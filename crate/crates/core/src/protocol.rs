//! Validation rounds and epochs.
//!
//! Each round every user declares a position, the platform selects MHSs per
//! declared area from the users that appear to be there, and each MHS mutually
//! validates the users in its WiFi range. An epoch closes once a fraction `M`
//! of the area's declared users has `q` distinct validators, or after `e_max`
//! rounds.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::adversary::PolicySet;
use crate::cos::KnowledgeBase;
use crate::error::Result;
use crate::model::{AreaGrid, AreaId, Position, RoundSchedule, UserId};
use crate::topology::{MhsSelector, NeighborGraph};

/// One mutual validation between an MHS and a neighbor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SpotEvent {
    pub round: u64,
    pub mhs: UserId,
    pub neighbor: UserId,
    /// Declared area in which the validation is claimed.
    pub area: AreaId,
    /// Ground truth only; the platform cannot tell forged events apart.
    pub fabricated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Declaration {
    pub position: Position,
    pub area: AreaId,
}

/// Step S1: honest users report their true position, attackers whatever their
/// policy dictates.
pub fn collect_declarations(
    true_positions: &BTreeMap<UserId, Position>,
    policies: &PolicySet,
    grid: &AreaGrid,
    seed: u64,
    round: u64,
) -> Result<BTreeMap<UserId, Declaration>> {
    true_positions
        .iter()
        .map(|(&user, &position)| {
            let declared = match policies.policy_of(user) {
                Some(policy) => policy.declare(user, position, grid, seed, round)?,
                None => None,
            };
            let declaration = match declared {
                Some(d) => d,
                None => Declaration {
                    position,
                    area: grid.area_of(&position)?,
                },
            };
            Ok((user, declaration))
        })
        .collect()
}

#[derive(Clone, Debug, Default)]
pub struct RoundOutcome {
    /// Genuine events, ascending by (area, mhs, neighbor).
    pub events: Vec<SpotEvent>,
    pub selected: BTreeMap<AreaId, BTreeSet<UserId>>,
}

impl RoundOutcome {
    pub fn selected_count(&self) -> usize {
        self.selected.values().map(BTreeSet::len).sum()
    }
}

/// Steps S2 and S3 for one round.
///
/// Selection in area `a` runs on the true-position graph restricted to users
/// declaring `a`. A spotting handshake only succeeds between users that are
/// also physically inside `a`, so a spoofer never takes part in a genuine event
/// in its fake area.
pub fn run_round(
    round: u64,
    declarations: &BTreeMap<UserId, Declaration>,
    true_positions: &BTreeMap<UserId, Position>,
    graph: &NeighborGraph,
    grid: &AreaGrid,
    selector: &dyn MhsSelector,
) -> Result<RoundOutcome> {
    // Ascending ids per area, since declarations iterate in id order. Both
    // maps are sorted, so true positions are found by a merge walk.
    let mut by_area: BTreeMap<AreaId, Vec<UserId>> = BTreeMap::new();
    let mut positions = true_positions.iter().peekable();
    for (&user, d) in declarations {
        while positions.next_if(|(&u, _)| u < user).is_some() {}
        let present = match positions.next_if(|(&u, _)| u == user) {
            Some((_, p)) => grid.area_of(p)? == d.area,
            None => false,
        };
        let users = by_area.entry(d.area).or_default();
        if present {
            users.push(user);
        }
    }

    let mut outcome = RoundOutcome::default();
    for (area, present) in by_area {
        let sub = graph.induced(|u| present.binary_search(&u).is_ok());
        let selected = selector.select(&sub)?;
        let nodes = sub.nodes();
        let is_mhs: Vec<bool> = nodes.iter().map(|u| selected.contains(u)).collect();
        for (i, j) in sub.index_edges() {
            let (mhs, neighbor) = if is_mhs[i] {
                (nodes[i], nodes[j])
            } else if is_mhs[j] {
                (nodes[j], nodes[i])
            } else {
                continue;
            };
            outcome.events.push(SpotEvent {
                round,
                mhs,
                neighbor,
                area,
                fabricated: false,
            });
        }
        outcome.selected.insert(area, selected);
    }
    Ok(outcome)
}

/// Per-area progress within the current epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochState {
    pub area: AreaId,
    pub round_in_epoch: u32,
    /// Everyone who declared this area during the epoch.
    pub declared_users: BTreeSet<UserId>,
    /// Distinct validators per declared user, counting relayed sightings.
    pub validator_count: BTreeMap<UserId, u32>,
    pub started_at: u64,
}

impl EpochState {
    pub fn new(area: AreaId, started_at: u64) -> Self {
        EpochState {
            area,
            round_in_epoch: 0,
            declared_users: BTreeSet::new(),
            validator_count: BTreeMap::new(),
            started_at,
        }
    }

    /// Closes a round: adds this round's declarers and refreshes the counts
    /// from the area's knowledge.
    pub fn record_round(&mut self, declarers: impl IntoIterator<Item = UserId>, knowledge: &KnowledgeBase) {
        self.round_in_epoch += 1;
        for u in declarers {
            if self.declared_users.insert(u) {
                self.validator_count.insert(u, 0);
            }
        }
        for (&u, slot) in self.validator_count.iter_mut() {
            *slot = (*slot).max(knowledge.validators_of(u) as u32);
        }
    }

    pub fn validated(&self, q: u32) -> usize {
        self.validator_count.values().filter(|&&c| c >= q).count()
    }
}

/// Users that must reach `q` validators: `ceil(M * |D|)`.
pub fn required_validated(m: f64, declared: usize) -> usize {
    // Guard against products like 0.9 * 30 = 27.000000000000004.
    ((m * declared as f64) - 1e-9).ceil().max(0.0) as usize
}

pub fn epoch_finished(e: &EpochState, schedule: &RoundSchedule) -> bool {
    e.round_in_epoch >= schedule.e_max
        || e.validated(schedule.q) >= required_validated(schedule.m, e.declared_users.len())
}
