//! Hand-written event traces replayed through the epoch machinery, bypassing
//! mobility and selection. Used to exercise the detectors on known attacks.

use std::collections::BTreeMap;

use crate::cos::{DetectorHistory, DetectorRegistry, KnowledgeBase};
use crate::error::Result;
use crate::model::{AreaId, ScenarioConfig, UserId};
use crate::protocol::{EpochState, SpotEvent};

use super::epoch::{close_epoch, EpochClose};

/// A fixed sequence of rounds in one area, replayed identically every epoch.
#[derive(Clone, Debug)]
pub struct Script {
    pub area: AreaId,
    /// Users declaring the area each round.
    pub users: Vec<UserId>,
    /// Events per round; `round` fields are overwritten on replay.
    pub rounds: Vec<Vec<SpotEvent>>,
}

pub const A: UserId = UserId(0);
pub const B: UserId = UserId(1);
pub const C: UserId = UserId(2);
pub const D: UserId = UserId(3);
pub const E: UserId = UserId(4);
pub const F: UserId = UserId(5);

fn event(mhs: UserId, neighbor: UserId, fabricated: bool) -> SpotEvent {
    SpotEvent {
        round: 0,
        mhs,
        neighbor,
        area: AreaId(0),
        fabricated,
    }
}

/// Six users A..F (ids 0..5) where B covers the spoofer C.
///
/// Round 1: B spots D and, falsely, C; E spots F. Round 2: F spots B and D;
/// A spots E. Round 3: C claims to spot B; A spots B, E and F. Round 4: B
/// spots D; D spots F.
pub fn covering_trace() -> Script {
    Script {
        area: AreaId(0),
        users: vec![A, B, C, D, E, F],
        rounds: vec![
            vec![event(B, D, false), event(B, C, true), event(E, F, false)],
            vec![event(F, B, false), event(F, D, false), event(A, E, false)],
            vec![
                event(C, B, true),
                event(A, B, false),
                event(A, E, false),
                event(A, F, false),
            ],
            vec![event(B, D, false), event(D, F, false)],
        ],
    }
}

/// `colluders` validate one another every round while `honest` users spot
/// their neighbors on a ring, so each honest user has two validators. The round is repeated
/// `rounds` times per epoch.
pub fn collusion(colluders: &[UserId], honest: &[UserId], rounds: usize) -> Script {
    let mut round = Vec::new();
    for (i, &x) in colluders.iter().enumerate() {
        for &y in &colluders[i + 1..] {
            round.push(event(x, y, true));
        }
    }
    for pair in honest.windows(2) {
        round.push(event(pair[0], pair[1], false));
    }
    if let [first, .., last] = honest {
        if honest.len() > 2 {
            round.push(event(*last, *first, false));
        }
    }
    Script {
        area: AreaId(0),
        users: colluders.iter().chain(honest).copied().collect(),
        rounds: vec![round; rounds],
    }
}

/// Epoch-end state of one replayed epoch.
#[derive(Clone, Debug)]
pub struct ScriptedEpoch {
    pub close: EpochClose,
    pub knowledge: KnowledgeBase,
}

/// Replays `script` for `epochs` epochs using the thresholds, reputation
/// parameters and detectors of `config`.
pub fn run_script(script: &Script, epochs: u64, config: &ScenarioConfig) -> Result<Vec<ScriptedEpoch>> {
    let registry = DetectorRegistry::builtin();
    let detectors = config
        .detectors
        .iter()
        .map(|n| registry.get(n))
        .collect::<Result<Vec<_>>>()?;
    let psi_max = config.detector_params.psi_max;
    let mut history = DetectorHistory::default();
    let mut opinions = BTreeMap::new();
    let declared: BTreeMap<UserId, AreaId> = script.users.iter().map(|&u| (u, script.area)).collect();
    let area_count = config.grid.area_count().max(script.area.0 + 1);

    let mut out = Vec::new();
    let mut round = 0u64;
    for epoch in 0..epochs {
        let mut state = EpochState::new(script.area, round);
        let mut kb = KnowledgeBase::new(epoch);
        for template in &script.rounds {
            let events: Vec<SpotEvent> = template
                .iter()
                .map(|e| SpotEvent {
                    round,
                    area: script.area,
                    ..*e
                })
                .collect();
            kb.exchange_round(&events, psi_max);
            state.record_round(script.users.iter().copied(), &kb);
            round += 1;
        }
        let areas = BTreeMap::from([(script.area, (state, kb))]);
        let close = close_epoch(
            &areas,
            area_count,
            &declared,
            &detectors,
            &mut history,
            &mut opinions,
            &config.schedule,
            &config.detector_params,
            &config.reputation_params,
        );
        let knowledge = areas.into_values().next().map(|(_, kb)| kb).unwrap_or_default();
        out.push(ScriptedEpoch { close, knowledge });
    }
    Ok(out)
}
