use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::cos::{Detector, DetectorHistory, DetectorParams, Flag, KnowledgeBase};
use crate::model::{AreaId, RoundSchedule, UserId};
use crate::protocol::EpochState;
use crate::reputation::{accept_report, classify, update_opinion, OpinionTriple, ReputationParams, Verdict};

#[derive(Clone, Debug, PartialEq)]
pub struct UserVerdict {
    pub user: UserId,
    pub declared_area: AreaId,
    pub verdict: Verdict,
    pub opinion: OpinionTriple,
    pub accepted: bool,
}

#[derive(Clone, Debug, Default)]
pub struct EpochClose {
    pub flags: Vec<Flag>,
    pub verdicts: Vec<UserVerdict>,
}

impl EpochClose {
    pub fn flagged_users(&self) -> BTreeSet<UserId> {
        self.flags.iter().flat_map(|f| f.candidate.users()).collect()
    }

    pub fn verdict_of(&self, user: UserId) -> Option<&UserVerdict> {
        self.verdicts.iter().find(|v| v.user == user)
    }
}

/// Epoch-end processing shared by simulated and scripted runs: run every
/// detector on every area, classify each user that declared during the epoch,
/// then update and threshold their opinions.
///
/// `declared_area` holds each user's latest declaration of the epoch.
#[allow(clippy::too_many_arguments)]
pub fn close_epoch(
    areas: &BTreeMap<AreaId, (EpochState, KnowledgeBase)>,
    area_count: u32,
    declared_area: &BTreeMap<UserId, AreaId>,
    detectors: &[Arc<dyn Detector>],
    history: &mut DetectorHistory,
    opinions: &mut BTreeMap<UserId, OpinionTriple>,
    schedule: &RoundSchedule,
    detector_params: &DetectorParams,
    reputation_params: &ReputationParams,
) -> EpochClose {
    let empty_kb = KnowledgeBase::default();
    let empty_declared = BTreeSet::new();
    let mut flags = Vec::new();
    for area in (0..area_count).map(AreaId) {
        let (kb, declared) = match areas.get(&area) {
            Some((state, kb)) => (kb, &state.declared_users),
            None => (&empty_kb, &empty_declared),
        };
        for d in detectors {
            flags.extend(d.detect(area, kb, declared, history, detector_params));
        }
    }
    let flagged: BTreeSet<UserId> = flags.iter().flat_map(|f| f.candidate.users()).collect();

    let mut verdicts = Vec::with_capacity(declared_area.len());
    for (&user, &area) in declared_area {
        let counts: BTreeMap<AreaId, u32> = areas
            .iter()
            .map(|(&a, (_, kb))| (a, kb.validators_of(user) as u32))
            .filter(|(_, c)| *c > 0)
            .collect();
        let verdict = classify(area, &counts, schedule.q, flagged.contains(&user));
        let slot = opinions.entry(user).or_default();
        *slot = update_opinion(*slot, verdict, reputation_params);
        verdicts.push(UserVerdict {
            user,
            declared_area: area,
            verdict,
            opinion: *slot,
            accepted: accept_report(slot, reputation_params.theta),
        });
    }
    EpochClose { flags, verdicts }
}
