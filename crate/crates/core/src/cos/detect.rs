use std::collections::{BTreeMap, BTreeSet};

use rustc_hash::FxHashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AreaId, UserId};

use super::knowledge::KnowledgeBase;

pub const COLLUSION: &str = "collusion";
pub const FRAUD_COVERING: &str = "fraud_covering";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    /// Longest admissible chain, counted in users.
    pub psi_max: usize,
    /// Consecutive epochs an isolated group must persist to be flagged.
    pub theta_c: u32,
    /// A fraud-covering pair is flagged once it recurs for more than this many
    /// consecutive epochs.
    pub theta_f: u32,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            psi_max: 5,
            theta_c: 2,
            theta_f: 2,
        }
    }
}

impl DetectorParams {
    pub(crate) fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if self.psi_max < 2 {
            out.push((
                "psi_max",
                format!("must be >= 2 to hold a direct sighting, got {}", self.psi_max),
            ));
        }
        if self.theta_c == 0 {
            out.push(("theta_c", "must be >= 1".to_string()));
        }
        if self.theta_f == 0 {
            out.push(("theta_f", "must be >= 1".to_string()));
        }
        out
    }
}

/// Suspicious structure found in one epoch's knowledge.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Candidate {
    /// A group nobody outside it has seen, and which has seen nobody outside.
    Collusion { members: BTreeSet<UserId> },
    /// Every chain reaching `spoofer` passes through `coverer` last.
    FraudCovering { spoofer: UserId, coverer: UserId },
}

impl Candidate {
    pub fn users(&self) -> Vec<UserId> {
        match self {
            Candidate::Collusion { members } => members.iter().copied().collect(),
            Candidate::FraudCovering { spoofer, coverer } => vec![*spoofer, *coverer],
        }
    }
}

/// A candidate that persisted long enough to be deemed malicious.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Flag {
    pub detector: String,
    pub area: AreaId,
    pub candidate: Candidate,
    pub streak: u32,
}

/// Consecutive-epoch streaks per (detector, area, candidate).
#[derive(Clone, Debug, Default)]
pub struct DetectorHistory {
    streaks: BTreeMap<(String, AreaId), BTreeMap<Candidate, u32>>,
}

impl DetectorHistory {
    /// Records this epoch's candidates and returns each with its streak length.
    /// Candidates absent this epoch lose their streak.
    pub fn observe(&mut self, detector: &str, area: AreaId, candidates: Vec<Candidate>) -> Vec<(Candidate, u32)> {
        let previous = self.streaks.remove(&(detector.to_string(), area)).unwrap_or_default();
        let mut current = BTreeMap::new();
        for c in candidates {
            let streak = previous.get(&c).copied().unwrap_or(0) + 1;
            current.insert(c, streak);
        }
        let out = current.iter().map(|(c, s)| (c.clone(), *s)).collect();
        self.streaks.insert((detector.to_string(), area), current);
        out
    }
}

/// A chain-of-sight detector, looked up by name at runtime.
pub trait Detector: Send + Sync {
    fn name(&self) -> &'static str;

    /// Suspicious structures in one area's epoch-end knowledge.
    fn candidates(&self, knowledge: &KnowledgeBase, declared: &BTreeSet<UserId>) -> Vec<Candidate>;

    /// Whether a candidate seen for `streak` consecutive epochs is flagged.
    fn is_flagged(&self, streak: u32, params: &DetectorParams) -> bool;

    /// Runs the detector for one area at epoch end, updating `history`.
    fn detect(
        &self,
        area: AreaId,
        knowledge: &KnowledgeBase,
        declared: &BTreeSet<UserId>,
        history: &mut DetectorHistory,
        params: &DetectorParams,
    ) -> Vec<Flag> {
        let found = self.candidates(knowledge, declared);
        history
            .observe(self.name(), area, found)
            .into_iter()
            .filter(|(_, streak)| self.is_flagged(*streak, params))
            .map(|(candidate, streak)| Flag {
                detector: self.name().to_string(),
                area,
                candidate,
                streak,
            })
            .collect()
    }
}

pub struct CollusionDetector;

impl Detector for CollusionDetector {
    fn name(&self) -> &'static str {
        COLLUSION
    }

    fn candidates(&self, knowledge: &KnowledgeBase, declared: &BTreeSet<UserId>) -> Vec<Candidate> {
        collusion_candidates(knowledge, declared)
            .into_iter()
            .map(|members| Candidate::Collusion { members })
            .collect()
    }

    fn is_flagged(&self, streak: u32, params: &DetectorParams) -> bool {
        streak >= params.theta_c
    }
}

pub struct FraudCoveringDetector;

impl Detector for FraudCoveringDetector {
    fn name(&self) -> &'static str {
        FRAUD_COVERING
    }

    fn candidates(&self, knowledge: &KnowledgeBase, _declared: &BTreeSet<UserId>) -> Vec<Candidate> {
        fraud_covering_candidates(knowledge)
            .into_iter()
            .map(|(spoofer, coverer)| Candidate::FraudCovering { spoofer, coverer })
            .collect()
    }

    fn is_flagged(&self, streak: u32, params: &DetectorParams) -> bool {
        streak > params.theta_f
    }
}

#[derive(Clone, Default)]
pub struct DetectorRegistry {
    entries: BTreeMap<&'static str, Arc<dyn Detector>>,
}

impl DetectorRegistry {
    pub fn builtin() -> Self {
        let mut r = DetectorRegistry::default();
        r.register(Arc::new(CollusionDetector));
        r.register(Arc::new(FraudCoveringDetector));
        r
    }

    pub fn register(&mut self, detector: Arc<dyn Detector>) {
        self.entries.insert(detector.name(), detector);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Detector>> {
        self.entries.get(name).cloned().ok_or_else(|| Error::UnknownName {
            kind: "detector",
            name: name.to_string(),
            valid: self.names(),
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.keys().map(|k| k.to_string()).collect()
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Groups of at least two users that are closed under sighting: no outsider
/// holds a chain mentioning a member and no member holds a chain mentioning an
/// outsider. Only groups smaller than the area's mean chain length qualify.
pub fn collusion_candidates(knowledge: &KnowledgeBase, declared: &BTreeSet<UserId>) -> Vec<BTreeSet<UserId>> {
    let mut ids: Vec<UserId> = declared.iter().copied().collect();
    let mut index: FxHashMap<UserId, usize> = ids.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let mut sets = DisjointSets::new(ids.len());
    let mut slot = |u: UserId, ids: &mut Vec<UserId>, sets: &mut DisjointSets| {
        *index.entry(u).or_insert_with(|| {
            ids.push(u);
            sets.parent.push(ids.len() - 1);
            ids.len() - 1
        })
    };
    // A relayed chain always extends a direct sighting held by its owner, so
    // direct chains alone determine the groups.
    let (mut total, mut count) = (0usize, 0usize);
    for c in knowledge.chains() {
        total += c.len();
        count += 1;
        if c.via.is_empty() {
            let owner = slot(c.owner, &mut ids, &mut sets);
            let other = slot(c.spotted, &mut ids, &mut sets);
            sets.union(owner, other);
        }
    }
    if count == 0 {
        return Vec::new();
    }
    let mean_len = total as f64 / count as f64;

    let mut groups: BTreeMap<usize, BTreeSet<UserId>> = BTreeMap::new();
    for (i, &u) in ids.iter().enumerate() {
        let root = sets.find(i);
        groups.entry(root).or_default().insert(u);
    }
    let mut out: Vec<BTreeSet<UserId>> = groups
        .into_values()
        .filter(|g| g.len() >= 2 && (g.len() as f64) < mean_len)
        .collect();
    out.sort();
    out
}

/// Pairs `(u_m, u_f)` where at least one chain reaches `u_m` and every such
/// chain has `u_f` immediately before `u_m`.
pub fn fraud_covering_candidates(knowledge: &KnowledgeBase) -> Vec<(UserId, UserId)> {
    let mut predecessors: FxHashMap<UserId, Option<UserId>> = FxHashMap::default();
    for c in knowledge.chains() {
        let p = c.predecessor();
        predecessors
            .entry(c.spotted)
            .and_modify(|seen| {
                if *seen != Some(p) {
                    *seen = None;
                }
            })
            .or_insert(Some(p));
    }
    let mut out: Vec<(UserId, UserId)> = predecessors
        .into_iter()
        .filter_map(|(m, f)| f.map(|f| (m, f)))
        .collect();
    out.sort_unstable();
    out
}

/// Flags isolated groups that persisted for at least `theta_c` epochs.
pub fn detect_collusion(
    area: AreaId,
    knowledge: &KnowledgeBase,
    declared: &BTreeSet<UserId>,
    history: &mut DetectorHistory,
    params: &DetectorParams,
) -> Vec<BTreeSet<UserId>> {
    CollusionDetector
        .detect(area, knowledge, declared, history, params)
        .into_iter()
        .filter_map(|f| match f.candidate {
            Candidate::Collusion { members } => Some(members),
            _ => None,
        })
        .collect()
}

/// Flags `(u_m, u_f)` pairs that recurred for more than `theta_f` epochs.
pub fn detect_fraud_covering(
    area: AreaId,
    knowledge: &KnowledgeBase,
    history: &mut DetectorHistory,
    params: &DetectorParams,
) -> Vec<(UserId, UserId)> {
    FraudCoveringDetector
        .detect(area, knowledge, &BTreeSet::new(), history, params)
        .into_iter()
        .filter_map(|f| match f.candidate {
            Candidate::FraudCovering { spoofer, coverer } => Some((spoofer, coverer)),
            _ => None,
        })
        .collect()
}
