use std::fmt;
use std::str::FromStr;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::model::UserId;

/// `owner` sees `spotted` through the users in `via`, in relay order.
///
/// Printed as `owner->via1/via2/spotted`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Chain {
    pub owner: UserId,
    pub via: SmallVec<[UserId; 4]>,
    pub spotted: UserId,
}

pub fn direct_chain(owner: UserId, spotted: UserId) -> Result<Chain> {
    if owner == spotted {
        return Err(Error::SelfSighting(owner));
    }
    Ok(Chain {
        owner,
        via: SmallVec::new(),
        spotted,
    })
}

impl Chain {
    /// Number of users in the chain, owner and spotted node included. Never
    /// below 2.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.via.len() + 2
    }

    /// The user that handed `spotted` to this chain: the last relay, or the
    /// owner for a direct sighting.
    pub fn predecessor(&self) -> UserId {
        self.via.last().copied().unwrap_or(self.owner)
    }

    pub fn members(&self) -> impl Iterator<Item = UserId> + '_ {
        std::iter::once(self.owner)
            .chain(self.via.iter().copied())
            .chain(std::iter::once(self.spotted))
    }

    /// Length bound and no repeated users (which also rules out self-sighting).
    pub fn is_valid(&self, psi_max: usize) -> bool {
        if self.len() > psi_max {
            return false;
        }
        let mut seen: SmallVec<[UserId; 6]> = SmallVec::new();
        for m in self.members() {
            if seen.contains(&m) {
                return false;
            }
            seen.push(m);
        }
        true
    }

    /// The chain `new_owner->self.owner/self.via/self.spotted`, if it stays valid.
    pub fn rerooted(&self, new_owner: UserId, psi_max: usize) -> Option<Chain> {
        if self.len() + 1 > psi_max
            || new_owner == self.spotted
            || self.via.contains(&new_owner)
            || new_owner == self.owner
        {
            return None;
        }
        let mut via = SmallVec::with_capacity(self.via.len() + 1);
        via.push(self.owner);
        via.extend_from_slice(&self.via);
        Some(Chain {
            owner: new_owner,
            via,
            spotted: self.spotted,
        })
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->", self.owner)?;
        for v in &self.via {
            write!(f, "{v}/")?;
        }
        write!(f, "{}", self.spotted)
    }
}

impl FromStr for Chain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (owner, rest) = s.split_once("->").ok_or_else(|| Error::MalformedChain(s.to_string()))?;
        let mut path: Vec<UserId> = rest.split('/').map(str::parse).collect::<Result<_>>()?;
        let spotted = path.pop().ok_or_else(|| Error::MalformedChain(s.to_string()))?;
        let chain = Chain {
            owner: owner.parse()?,
            via: path.into_iter().collect(),
            spotted,
        };
        if !chain.is_valid(usize::MAX) {
            return Err(Error::MalformedChain(s.to_string()));
        }
        Ok(chain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const B: UserId = UserId(1);
    const D: UserId = UserId(3);

    #[test]
    fn direct_chain_has_length_two() {
        let c = direct_chain(B, D).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.to_string(), "u00001->u00003");
        assert_eq!(c.predecessor(), B);
        assert!(matches!(direct_chain(B, B), Err(Error::SelfSighting(_))));
    }

    #[test]
    fn text_form_round_trips() {
        let c: Chain = "u00005->u00001/u00002".parse().unwrap();
        assert_eq!(c.owner, UserId(5));
        assert_eq!(c.via.as_slice(), &[B]);
        assert_eq!(c.spotted, UserId(2));
        assert_eq!(c.to_string().parse::<Chain>().unwrap(), c);
        assert!("u00001->u00001".parse::<Chain>().is_err());
        assert!("u00001".parse::<Chain>().is_err());
    }

    #[test]
    fn rerooting_respects_invariants() {
        let c = direct_chain(B, D).unwrap();
        assert_eq!(c.rerooted(UserId(5), 5).unwrap().to_string(), "u00005->u00001/u00003");
        assert!(c.rerooted(D, 5).is_none());
        assert!(c.rerooted(UserId(5), 2).is_none());
    }
}
