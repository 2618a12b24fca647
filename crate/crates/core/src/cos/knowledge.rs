use std::collections::hash_map::Entry;
use std::collections::BTreeSet;

use rustc_hash::{FxHashMap, FxHashSet};

use crate::model::UserId;
use crate::protocol::SpotEvent;

use super::chain::{direct_chain, Chain};

/// Ω of one user for the current epoch: distinct chains in insertion order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AreaKnowledge {
    pub owner: UserId,
    pub chains: Vec<Chain>,
    pub epoch: u64,
}

impl AreaKnowledge {
    pub fn new(owner: UserId, epoch: u64) -> Self {
        AreaKnowledge {
            owner,
            chains: Vec::new(),
            epoch,
        }
    }

    /// Chains `self.owner` would gain from spotting `from.owner`: the direct
    /// sighting plus every chain of `from` re-rooted at `self.owner`. Chains
    /// that break the length bound or repeat a user are dropped, as are chains
    /// already known.
    pub fn gains_from(&self, from: &AreaKnowledge, psi_max: usize) -> Vec<Chain> {
        let known: FxHashSet<&Chain> = self.chains.iter().collect();
        let mut out = Vec::new();
        let Ok(direct) = direct_chain(self.owner, from.owner) else {
            return out;
        };
        if direct.len() <= psi_max && !known.contains(&direct) {
            out.push(direct);
        }
        for c in &from.chains {
            if let Some(r) = c.rerooted(self.owner, psi_max) {
                if !known.contains(&r) {
                    out.push(r);
                }
            }
        }
        out
    }
}

/// Ω_l after `l` spotted `r`.
pub fn merge_knowledge(l: &AreaKnowledge, r: &AreaKnowledge, psi_max: usize) -> AreaKnowledge {
    let mut out = l.clone();
    let gained = l.gains_from(r, psi_max);
    out.chains.extend(gained);
    out
}

/// Every user's Ω within one location area, plus an index of who holds a
/// chain ending at whom.
#[derive(Clone, Debug, Default)]
pub struct KnowledgeBase {
    epoch: u64,
    /// Knowledge in order of each user's first exchange.
    slots: Vec<AreaKnowledge>,
    slot_of: FxHashMap<UserId, usize>,
    validators: FxHashMap<UserId, FxHashSet<UserId>>,
    /// For `(l, r)`: how many of `r`'s chains `l` has already merged.
    merged: FxHashMap<(UserId, UserId), usize>,
    /// Chain counts at the start of the current round, reused across rounds.
    round_start: Vec<usize>,
}

impl KnowledgeBase {
    pub fn new(epoch: u64) -> Self {
        KnowledgeBase {
            epoch,
            ..Default::default()
        }
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn knowledge(&self, user: UserId) -> Option<&AreaKnowledge> {
        self.slot_of.get(&user).map(|&i| &self.slots[i])
    }

    /// Every user holding knowledge, in order of their first exchange.
    pub fn users(&self) -> impl Iterator<Item = &AreaKnowledge> {
        self.slots.iter()
    }

    pub fn chains(&self) -> impl Iterator<Item = &Chain> {
        self.slots.iter().flat_map(|k| k.chains.iter())
    }

    pub fn chain_count(&self) -> usize {
        self.slots.iter().map(|k| k.chains.len()).sum()
    }

    /// Distinct users holding at least one chain that ends at `user`.
    pub fn validators_of(&self, user: UserId) -> usize {
        self.validators.get(&user).map_or(0, FxHashSet::len)
    }

    /// The users counted by [`Self::validators_of`], ascending.
    pub fn validators(&self, user: UserId) -> BTreeSet<UserId> {
        self.validators
            .get(&user)
            .map(|set| set.iter().copied().collect())
            .unwrap_or_default()
    }

    fn slot(&mut self, user: UserId) -> usize {
        let (slots, epoch) = (&mut self.slots, self.epoch);
        *self.slot_of.entry(user).or_insert_with(|| {
            slots.push(AreaKnowledge::new(user, epoch));
            slots.len() - 1
        })
    }

    /// One round of simultaneous exchange: for each event both parties merge
    /// the other's pre-round knowledge.
    ///
    /// Knowledge only grows within an epoch and re-rooting is deterministic,
    /// so a repeated pairing only needs the chains `r` added since the pair
    /// last met. A relayed chain `l->r/..` can only come from merging `r`, and
    /// the direct chain `l->r` only from the pair's first meeting, so every
    /// gained chain is new.
    pub fn exchange_round(&mut self, events: &[SpotEvent], psi_max: usize) {
        let pairs: Vec<(usize, usize)> = events
            .iter()
            .filter(|e| e.mhs != e.neighbor)
            .map(|e| (self.slot(e.mhs), self.slot(e.neighbor)))
            .collect();
        let mut start = std::mem::take(&mut self.round_start);
        start.clear();
        start.extend(self.slots.iter().map(|k| k.chains.len()));

        for (a, b) in pairs {
            for (li, ri) in [(b, a), (a, b)] {
                let [lk, rk] = self.slots.get_disjoint_mut([li, ri]).expect("distinct slots");
                let (l, r) = (lk.owner, rk.owner);
                let done = match self.merged.entry((l, r)) {
                    Entry::Occupied(o) => o.into_mut(),
                    Entry::Vacant(v) => {
                        if let Ok(direct) = direct_chain(l, r) {
                            if direct.len() <= psi_max {
                                self.validators.entry(r).or_default().insert(l);
                                lk.chains.push(direct);
                            }
                        }
                        v.insert(0)
                    }
                };
                let end = start[ri];
                for c in &rk.chains[(*done).min(end)..end] {
                    if let Some(chain) = c.rerooted(l, psi_max) {
                        self.validators.entry(chain.spotted).or_default().insert(l);
                        lk.chains.push(chain);
                    }
                }
                *done = end;
            }
        }
        self.round_start = start;
    }
}
