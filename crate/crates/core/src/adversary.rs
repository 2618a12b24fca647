//! Location-spoofing attacker policies.
//!
//! * LSA: a spoofer continuously declares a position in an area it is not in.
//! * Collusion: a group of spoofers declares one fake area and every member
//!   validates every other member there each round.
//! * Fraud covering: a genuine resident of an area validates one spoofer each
//!   round while otherwise behaving honestly.
//!
//! Policies are stateless per round. Randomness comes from generators derived
//! from the scenario seed, the round and the user.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{derived_rng, AreaGrid, AreaId, Position, UserId};
use crate::protocol::{Declaration, SpotEvent};

const DECLARE_STREAM: u64 = 0x6465_636c;
const FIXED_DECLARE_STREAM: u64 = 0x6669_7864;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum AttackerSpec {
    Lsa {
        member: UserId,
        fake_area: AreaId,
        /// Reuse one declared point for the whole run instead of a fresh one per round.
        #[serde(default)]
        fixed_declaration: bool,
    },
    Collusion {
        members: Vec<UserId>,
        fake_area: AreaId,
    },
    FraudCovering {
        spoofer: UserId,
        coverer: UserId,
        covered_area: AreaId,
    },
}

impl AttackerSpec {
    pub fn lsa(member: UserId, fake_area: AreaId) -> Self {
        AttackerSpec::Lsa {
            member,
            fake_area,
            fixed_declaration: false,
        }
    }

    /// Every user taking part, coverers included.
    pub fn members(&self) -> Vec<UserId> {
        match self {
            AttackerSpec::Lsa { member, .. } => vec![*member],
            AttackerSpec::Collusion { members, .. } => members.clone(),
            AttackerSpec::FraudCovering { spoofer, coverer, .. } => vec![*spoofer, *coverer],
        }
    }

    /// Members that declare a position outside their true area, with that area.
    pub fn spoofers(&self) -> Vec<(UserId, AreaId)> {
        match self {
            AttackerSpec::Lsa { member, fake_area, .. } => vec![(*member, *fake_area)],
            AttackerSpec::Collusion { members, fake_area } => members.iter().map(|m| (*m, *fake_area)).collect(),
            AttackerSpec::FraudCovering {
                spoofer, covered_area, ..
            } => vec![(*spoofer, *covered_area)],
        }
    }

    pub(crate) fn violations(&self, area_count: u32) -> Vec<String> {
        let mut out = Vec::new();
        let area = match self {
            AttackerSpec::Lsa { fake_area, .. } | AttackerSpec::Collusion { fake_area, .. } => *fake_area,
            AttackerSpec::FraudCovering { covered_area, .. } => *covered_area,
        };
        if area.0 >= area_count {
            out.push(format!("area {area} is outside the grid"));
        }
        if area_count < 2 {
            out.push("a single-area grid leaves no area to spoof from".to_string());
        }
        match self {
            AttackerSpec::Collusion { members, .. } => {
                if members.len() < 2 {
                    out.push("collusion needs at least two members".to_string());
                }
                if members.iter().collect::<BTreeSet<_>>().len() != members.len() {
                    out.push("collusion members must be pairwise distinct".to_string());
                }
            }
            AttackerSpec::FraudCovering { spoofer, coverer, .. } if spoofer == coverer => {
                out.push("spoofer and coverer must differ".to_string());
            }
            _ => {}
        }
        out
    }
}

/// Declared position for a spoofer targeting `fake_area`: a uniform point in
/// the fake area, or in the lowest-id adjacent area whenever the spoofer is
/// physically inside the fake area, so that declared and true areas never match.
pub fn lsa_declaration<R: Rng + ?Sized>(
    fake_area: AreaId,
    true_position: Position,
    grid: &AreaGrid,
    rng: &mut R,
) -> Result<(Position, AreaId)> {
    let true_area = grid.area_of(&true_position)?;
    let target = if true_area == fake_area {
        *grid.adjacent(fake_area).first().ok_or(Error::NoAlternativeArea)?
    } else {
        fake_area
    };
    Ok((uniform_point(grid, target, rng)?, target))
}

pub(crate) fn uniform_point<R: Rng + ?Sized>(grid: &AreaGrid, area: AreaId, rng: &mut R) -> Result<Position> {
    let b = grid.cell_bounds(area)?;
    Ok(Position::new(
        rng.gen_range(b.min_x..b.max_x),
        rng.gen_range(b.min_y..b.max_y),
    ))
}

/// One fabricated mutual validation per unordered pair of colluders, so each
/// member validates every other member and is validated back.
pub fn collusion_fabrications(members: &[UserId], fake_area: AreaId, round: u64) -> Vec<SpotEvent> {
    let sorted: BTreeSet<UserId> = members.iter().copied().collect();
    let sorted: Vec<UserId> = sorted.into_iter().collect();
    let mut out = Vec::new();
    for (i, &a) in sorted.iter().enumerate() {
        for &b in &sorted[i + 1..] {
            out.push(SpotEvent {
                round,
                mhs: a,
                neighbor: b,
                area: fake_area,
                fabricated: true,
            });
        }
    }
    out
}

/// The coverer's forged mutual validation of the spoofer. The coverer must
/// genuinely be inside the covered area.
pub fn fraud_covering_fabrications(
    spoofer: UserId,
    coverer: UserId,
    covered_area: AreaId,
    coverer_true_area: AreaId,
    round: u64,
) -> Result<Vec<SpotEvent>> {
    if coverer_true_area != covered_area {
        return Err(Error::CovererOutsideArea {
            coverer,
            area: covered_area,
        });
    }
    Ok(vec![SpotEvent {
        round,
        mhs: coverer,
        neighbor: spoofer,
        area: covered_area,
        fabricated: true,
    }])
}

/// Runtime behavior of one attacker spec.
pub trait AttackPolicy: Send + Sync {
    fn spec(&self) -> &AttackerSpec;

    /// The declaration `user` makes this round, or `None` to declare truthfully.
    fn declare(
        &self,
        user: UserId,
        true_position: Position,
        grid: &AreaGrid,
        seed: u64,
        round: u64,
    ) -> Result<Option<Declaration>>;

    /// Forged events appended after the genuine ones.
    fn fabricate(
        &self,
        round: u64,
        declarations: &BTreeMap<UserId, Declaration>,
        true_positions: &BTreeMap<UserId, Position>,
        grid: &AreaGrid,
    ) -> Result<Vec<SpotEvent>>;

    /// Area a member must physically stay in, if the attack requires one.
    fn residence(&self, _user: UserId) -> Option<AreaId> {
        None
    }
}

fn spoofed_declaration(
    user: UserId,
    fake_area: AreaId,
    fixed: bool,
    true_position: Position,
    grid: &AreaGrid,
    seed: u64,
    round: u64,
) -> Result<Declaration> {
    let mut rng = if fixed {
        derived_rng(seed, FIXED_DECLARE_STREAM, user.0 as u64)
    } else {
        derived_rng(seed, DECLARE_STREAM, (round << 32) | user.0 as u64)
    };
    let (position, area) = lsa_declaration(fake_area, true_position, grid, &mut rng)?;
    Ok(Declaration { position, area })
}

struct LsaPolicy(AttackerSpec);

impl AttackPolicy for LsaPolicy {
    fn spec(&self) -> &AttackerSpec {
        &self.0
    }

    fn declare(
        &self,
        user: UserId,
        pos: Position,
        grid: &AreaGrid,
        seed: u64,
        round: u64,
    ) -> Result<Option<Declaration>> {
        let AttackerSpec::Lsa {
            member,
            fake_area,
            fixed_declaration,
        } = &self.0
        else {
            return Ok(None);
        };
        if user != *member {
            return Ok(None);
        }
        spoofed_declaration(user, *fake_area, *fixed_declaration, pos, grid, seed, round).map(Some)
    }

    fn fabricate(
        &self,
        _: u64,
        _: &BTreeMap<UserId, Declaration>,
        _: &BTreeMap<UserId, Position>,
        _: &AreaGrid,
    ) -> Result<Vec<SpotEvent>> {
        Ok(Vec::new())
    }
}

struct CollusionPolicy(AttackerSpec);

impl AttackPolicy for CollusionPolicy {
    fn spec(&self) -> &AttackerSpec {
        &self.0
    }

    fn declare(
        &self,
        user: UserId,
        pos: Position,
        grid: &AreaGrid,
        seed: u64,
        round: u64,
    ) -> Result<Option<Declaration>> {
        let AttackerSpec::Collusion { members, fake_area } = &self.0 else {
            return Ok(None);
        };
        if !members.contains(&user) {
            return Ok(None);
        }
        spoofed_declaration(user, *fake_area, false, pos, grid, seed, round).map(Some)
    }

    fn fabricate(
        &self,
        round: u64,
        declarations: &BTreeMap<UserId, Declaration>,
        _: &BTreeMap<UserId, Position>,
        _: &AreaGrid,
    ) -> Result<Vec<SpotEvent>> {
        let AttackerSpec::Collusion { members, fake_area } = &self.0 else {
            return Ok(Vec::new());
        };
        // A member that wandered into the fake area declared elsewhere this round.
        let active: Vec<UserId> = members
            .iter()
            .copied()
            .filter(|m| declarations.get(m).is_some_and(|d| d.area == *fake_area))
            .collect();
        Ok(collusion_fabrications(&active, *fake_area, round))
    }
}

struct FraudCoveringPolicy(AttackerSpec);

impl AttackPolicy for FraudCoveringPolicy {
    fn spec(&self) -> &AttackerSpec {
        &self.0
    }

    fn declare(
        &self,
        user: UserId,
        pos: Position,
        grid: &AreaGrid,
        seed: u64,
        round: u64,
    ) -> Result<Option<Declaration>> {
        let AttackerSpec::FraudCovering {
            spoofer, covered_area, ..
        } = &self.0
        else {
            return Ok(None);
        };
        if user != *spoofer {
            return Ok(None);
        }
        spoofed_declaration(user, *covered_area, false, pos, grid, seed, round).map(Some)
    }

    fn fabricate(
        &self,
        round: u64,
        declarations: &BTreeMap<UserId, Declaration>,
        true_positions: &BTreeMap<UserId, Position>,
        grid: &AreaGrid,
    ) -> Result<Vec<SpotEvent>> {
        let AttackerSpec::FraudCovering {
            spoofer,
            coverer,
            covered_area,
        } = &self.0
        else {
            return Ok(Vec::new());
        };
        if declarations.get(spoofer).map(|d| d.area) != Some(*covered_area) {
            return Ok(Vec::new());
        }
        let position = true_positions.get(coverer).ok_or(Error::CovererOutsideArea {
            coverer: *coverer,
            area: *covered_area,
        })?;
        let coverer_area = grid.area_of(position)?;
        fraud_covering_fabrications(*spoofer, *coverer, *covered_area, coverer_area, round)
    }

    fn residence(&self, user: UserId) -> Option<AreaId> {
        match &self.0 {
            AttackerSpec::FraudCovering {
                coverer, covered_area, ..
            } if *coverer == user => Some(*covered_area),
            _ => None,
        }
    }
}

/// Builds the policy object for a spec.
pub fn policy_for(spec: &AttackerSpec) -> Box<dyn AttackPolicy> {
    match spec {
        AttackerSpec::Lsa { .. } => Box::new(LsaPolicy(spec.clone())),
        AttackerSpec::Collusion { .. } => Box::new(CollusionPolicy(spec.clone())),
        AttackerSpec::FraudCovering { .. } => Box::new(FraudCoveringPolicy(spec.clone())),
    }
}

/// All policies of a scenario, indexed by member.
#[derive(Default)]
pub struct PolicySet {
    policies: Vec<Box<dyn AttackPolicy>>,
    by_user: BTreeMap<UserId, usize>,
}

impl PolicySet {
    pub fn from_specs(specs: &[AttackerSpec]) -> Self {
        let mut set = PolicySet::default();
        for spec in specs {
            let idx = set.policies.len();
            for m in spec.members() {
                set.by_user.insert(m, idx);
            }
            set.policies.push(policy_for(spec));
        }
        set
    }

    pub fn policy_of(&self, user: UserId) -> Option<&dyn AttackPolicy> {
        self.by_user.get(&user).map(|&i| self.policies[i].as_ref())
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn AttackPolicy> {
        self.policies.iter().map(|p| p.as_ref())
    }

    pub fn is_attacker(&self, user: UserId) -> bool {
        self.by_user.contains_key(&user)
    }

    /// All forged events of the round, in policy order.
    pub fn fabricate(
        &self,
        round: u64,
        declarations: &BTreeMap<UserId, Declaration>,
        true_positions: &BTreeMap<UserId, Position>,
        grid: &AreaGrid,
    ) -> Result<Vec<SpotEvent>> {
        let mut out = Vec::new();
        for p in &self.policies {
            out.extend(p.fabricate(round, declarations, true_positions, grid)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid3() -> AreaGrid {
        AreaGrid {
            cell_size: 100.0,
            columns: 3,
            rows: 3,
            origin: Position::new(0.0, 0.0),
        }
    }

    #[test]
    fn lsa_declares_the_fake_area() {
        let g = grid3();
        let mut rng = derived_rng(1, 0, 0);
        // true area 3 = (col 0, row 1); fake area 7 = (col 1, row 2)
        let (p, a) = lsa_declaration(AreaId(7), Position::new(50.0, 150.0), &g, &mut rng).unwrap();
        assert_eq!(a, AreaId(7));
        assert_eq!(g.area_of(&p).unwrap(), AreaId(7));
    }

    #[test]
    fn lsa_switches_away_when_inside_fake_area() {
        let g = grid3();
        let mut rng = derived_rng(2, 0, 0);
        for _ in 0..100 {
            let (p, a) = lsa_declaration(AreaId(7), Position::new(150.0, 250.0), &g, &mut rng).unwrap();
            assert_ne!(a, AreaId(7));
            assert_eq!(g.area_of(&p).unwrap(), a);
        }
    }

    #[test]
    fn single_area_grid_is_unsatisfiable() {
        let g = AreaGrid::default();
        let mut rng = derived_rng(3, 0, 0);
        assert!(matches!(
            lsa_declaration(AreaId(0), Position::new(1.0, 1.0), &g, &mut rng),
            Err(Error::NoAlternativeArea)
        ));
        assert!(!AttackerSpec::lsa(UserId(0), AreaId(0)).violations(1).is_empty());
    }

    #[test]
    fn collusion_pairs() {
        let two = collusion_fabrications(&[UserId(4), UserId(2)], AreaId(0), 3);
        assert_eq!(two.len(), 1);
        assert_eq!((two[0].mhs, two[0].neighbor), (UserId(2), UserId(4)));
        assert!(two[0].fabricated);

        let members = [UserId(1), UserId(2), UserId(3)];
        let three = collusion_fabrications(&members, AreaId(0), 0);
        assert_eq!(three.len(), 3);
        assert!(three
            .iter()
            .all(|e| members.contains(&e.mhs) && members.contains(&e.neighbor) && e.fabricated));
    }

    #[test]
    fn coverer_must_reside_in_covered_area() {
        let ok = fraud_covering_fabrications(UserId(2), UserId(1), AreaId(0), AreaId(0), 5).unwrap();
        assert_eq!(ok.len(), 1);
        assert_eq!((ok[0].mhs, ok[0].neighbor, ok[0].round), (UserId(1), UserId(2), 5));
        assert!(matches!(
            fraud_covering_fabrications(UserId(2), UserId(1), AreaId(0), AreaId(1), 5),
            Err(Error::CovererOutsideArea { .. })
        ));
    }

    #[test]
    fn fixed_declarations_repeat() {
        let g = grid3();
        let spec = AttackerSpec::Lsa {
            member: UserId(0),
            fake_area: AreaId(4),
            fixed_declaration: true,
        };
        let p = policy_for(&spec);
        let a = p
            .declare(UserId(0), Position::new(10.0, 10.0), &g, 9, 1)
            .unwrap()
            .unwrap();
        let b = p
            .declare(UserId(0), Position::new(20.0, 10.0), &g, 9, 2)
            .unwrap()
            .unwrap();
        assert_eq!(a, b);
        assert!(p
            .declare(UserId(1), Position::new(10.0, 10.0), &g, 9, 1)
            .unwrap()
            .is_none());
    }

    #[test]
    fn spec_json_shape() {
        let spec: AttackerSpec =
            serde_json::from_str(r#"{"type":"FraudCovering","spoofer":2,"coverer":1,"covered_area":0}"#).unwrap();
        assert_eq!(spec.members(), vec![UserId(2), UserId(1)]);
        assert!(serde_json::from_str::<AttackerSpec>(r#"{"type":"Lsa","member":1,"fake_area":0,"x":1}"#).is_err());
    }
}
