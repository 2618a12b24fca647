//! Subjective-logic reputation: one opinion triple per user, updated once per
//! epoch from the user's verdict. Reports are accepted while `b - d - u >= θ`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::AreaId;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReputationParams {
    pub delta_b: f64,
    pub delta_d: f64,
    pub delta_u: f64,
    /// Acceptance threshold on ρ.
    pub theta: f64,
}

impl Default for ReputationParams {
    fn default() -> Self {
        ReputationParams {
            delta_b: 0.25,
            delta_d: 0.6,
            delta_u: 0.15,
            theta: 0.8,
        }
    }
}

impl ReputationParams {
    pub(crate) fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        for (name, v) in [
            ("delta_b", self.delta_b),
            ("delta_d", self.delta_d),
            ("delta_u", self.delta_u),
        ] {
            if !(v > 0.0 && v < 1.0) {
                out.push((name, format!("must lie in (0, 1), got {v}")));
            }
        }
        if !(self.theta > -1.0 && self.theta < 1.0) {
            out.push(("theta", format!("must lie in (-1, 1), got {}", self.theta)));
        }
        out
    }
}

/// Belief, disbelief and uncertainty, summing to one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpinionTriple {
    pub b: f64,
    pub d: f64,
    pub u: f64,
}

impl Default for OpinionTriple {
    /// Full uncertainty.
    fn default() -> Self {
        OpinionTriple { b: 0.0, d: 0.0, u: 1.0 }
    }
}

impl OpinionTriple {
    pub fn new(b: f64, d: f64, u: f64) -> Self {
        OpinionTriple { b, d, u }
    }

    pub fn rho(&self) -> f64 {
        self.b - self.d - self.u
    }

    pub fn is_valid(&self) -> bool {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        in_unit(self.b) && in_unit(self.d) && in_unit(self.u) && (self.b + self.d + self.u - 1.0).abs() <= 1e-9
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Verified,
    NotVerified,
    Fake,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Verified => "verified",
            Verdict::NotVerified => "not_verified",
            Verdict::Fake => "fake",
        })
    }
}

/// Epoch-end verdict for one user.
///
/// `validators` maps each area to the number of distinct users that validated
/// this user there during the epoch. A detector flag or more than `q`
/// validators in a foreign area makes the location fake, overriding any
/// verification in the declared area.
pub fn classify(declared_area: AreaId, validators: &BTreeMap<AreaId, u32>, q: u32, flagged: bool) -> Verdict {
    let foreign = validators
        .iter()
        .any(|(&area, &count)| area != declared_area && count > q);
    if flagged || foreign {
        Verdict::Fake
    } else if validators.get(&declared_area).copied().unwrap_or(0) >= q {
        Verdict::Verified
    } else {
        Verdict::NotVerified
    }
}

/// Applies one verdict, clamps each component to `[0, 1]`, then renormalizes.
pub fn update_opinion(o: OpinionTriple, verdict: Verdict, p: &ReputationParams) -> OpinionTriple {
    let OpinionTriple { mut b, mut d, mut u } = o;
    match verdict {
        Verdict::Verified => {
            b += p.delta_b;
            u -= p.delta_b / 2.0;
            d -= p.delta_b / 2.0;
        }
        Verdict::NotVerified => {
            u += p.delta_u;
            b -= p.delta_u;
        }
        Verdict::Fake => {
            d += p.delta_d;
            b -= p.delta_d / 2.0;
            u -= p.delta_d / 2.0;
        }
    }
    let (b, d, u) = (b.clamp(0.0, 1.0), d.clamp(0.0, 1.0), u.clamp(0.0, 1.0));
    let sum = b + d + u;
    if sum <= 0.0 {
        return OpinionTriple::default();
    }
    OpinionTriple::new(b / sum, d / sum, u / sum)
}

/// Boundary inclusive: `ρ == θ` is accepted.
pub fn accept_report(o: &OpinionTriple, theta: f64) -> bool {
    o.rho() >= theta
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(pairs: &[(u32, u32)]) -> BTreeMap<AreaId, u32> {
        pairs.iter().map(|&(a, c)| (AreaId(a), c)).collect()
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(AreaId(0), &counts(&[(0, 3)]), 2, false), Verdict::Verified);
        assert_eq!(classify(AreaId(0), &counts(&[(0, 0), (1, 3)]), 2, false), Verdict::Fake);
        assert_eq!(classify(AreaId(0), &counts(&[(0, 1)]), 2, false), Verdict::NotVerified);
    }

    #[test]
    fn foreign_count_must_exceed_q() {
        assert_eq!(classify(AreaId(0), &counts(&[(1, 2)]), 2, false), Verdict::NotVerified);
    }

    #[test]
    fn fake_overrides_verified() {
        assert_eq!(classify(AreaId(0), &counts(&[(0, 5)]), 2, true), Verdict::Fake);
        assert_eq!(classify(AreaId(0), &counts(&[(0, 5), (2, 4)]), 2, false), Verdict::Fake);
    }

    #[test]
    fn acceptance_boundary() {
        assert!(accept_report(&OpinionTriple::new(0.925, 0.0, 0.075), 0.8)); // ρ = 0.85
        let at = OpinionTriple::new(0.9, 0.0, 0.1);
        assert!(accept_report(&at, at.rho()));
        assert!(!accept_report(&OpinionTriple::default(), 0.8));
    }

    #[test]
    fn not_verified_keeps_disbelief_before_normalizing() {
        let o = update_opinion(
            OpinionTriple::new(0.5, 0.2, 0.3),
            Verdict::NotVerified,
            &ReputationParams::default(),
        );
        // raw (0.35, 0.2, 0.45) already sums to one
        assert!((o.b - 0.35).abs() < 1e-12 && (o.d - 0.2).abs() < 1e-12 && (o.u - 0.45).abs() < 1e-12);
    }

    #[test]
    fn zero_increments_are_identity() {
        let p = ReputationParams {
            delta_b: 0.0,
            delta_d: 0.0,
            delta_u: 0.0,
            theta: 0.8,
        };
        let o = OpinionTriple::new(0.3, 0.5, 0.2);
        for v in [Verdict::Verified, Verdict::NotVerified, Verdict::Fake] {
            let n = update_opinion(o, v, &p);
            assert!((n.b - o.b).abs() < 1e-15 && (n.d - o.d).abs() < 1e-15 && (n.u - o.u).abs() < 1e-15);
        }
    }
}
