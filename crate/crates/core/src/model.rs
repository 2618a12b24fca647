//! Domain primitives: identities, geometry, the area grid, round timing and the
//! scenario configuration.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::AttackerSpec;
use crate::cos::DetectorParams;
use crate::error::{Error, Result};
use crate::mobility::TlwParams;
use crate::reputation::ReputationParams;

/// Opaque, unspoofable user identity.
///
/// Stands in for the digest of the device IMEI. Tokens are assigned
/// sequentially when a scenario is built and never reused.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub u32);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u{:05}", self.0)
    }
}

impl FromStr for UserId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.strip_prefix('u')
            .and_then(|digits| digits.parse().ok())
            .map(UserId)
            .ok_or_else(|| Error::MalformedChain(format!("bad user token `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AreaId(pub u32);

impl fmt::Display for AreaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Cartesian position in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Half-open axis-aligned rectangle `[min_x, max_x) x [min_y, max_y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bounds {
    pub fn contains(&self, p: &Position) -> bool {
        p.x >= self.min_x && p.x < self.max_x && p.y >= self.min_y && p.y < self.max_y
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }
}

/// The sensing region split into `columns x rows` square location areas of
/// side `cell_size`. Area ids run row-major from the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaGrid {
    pub cell_size: f64,
    pub columns: u32,
    pub rows: u32,
    pub origin: Position,
}

impl Default for AreaGrid {
    fn default() -> Self {
        AreaGrid {
            cell_size: 2000.0,
            columns: 1,
            rows: 1,
            origin: Position::new(0.0, 0.0),
        }
    }
}

impl AreaGrid {
    pub fn area_count(&self) -> u32 {
        self.columns * self.rows
    }

    pub fn bounds(&self) -> Bounds {
        Bounds {
            min_x: self.origin.x,
            min_y: self.origin.y,
            max_x: self.origin.x + self.cell_size * self.columns as f64,
            max_y: self.origin.y + self.cell_size * self.rows as f64,
        }
    }

    /// Surface of one location area in square kilometers.
    pub fn area_km2(&self) -> f64 {
        self.cell_size * self.cell_size / 1.0e6
    }

    pub fn area_of(&self, p: &Position) -> Result<AreaId> {
        if !p.is_finite() || !self.bounds().contains(p) {
            return Err(Error::OutOfBounds(*p));
        }
        let col = ((p.x - self.origin.x) / self.cell_size).floor() as u32;
        let row = ((p.y - self.origin.y) / self.cell_size).floor() as u32;
        // Rounding can push a point just below the upper edge onto it.
        let col = col.min(self.columns - 1);
        let row = row.min(self.rows - 1);
        Ok(AreaId(row * self.columns + col))
    }

    pub fn cell_bounds(&self, area: AreaId) -> Result<Bounds> {
        if area.0 >= self.area_count() {
            return Err(Error::UnknownArea(area));
        }
        let col = (area.0 % self.columns) as f64;
        let row = (area.0 / self.columns) as f64;
        let min_x = self.origin.x + col * self.cell_size;
        let min_y = self.origin.y + row * self.cell_size;
        Ok(Bounds {
            min_x,
            min_y,
            max_x: min_x + self.cell_size,
            max_y: min_y + self.cell_size,
        })
    }

    /// Edge-adjacent areas in ascending id order.
    pub fn adjacent(&self, area: AreaId) -> Vec<AreaId> {
        if area.0 >= self.area_count() {
            return Vec::new();
        }
        let (col, row) = (area.0 % self.columns, area.0 / self.columns);
        let mut out = Vec::with_capacity(4);
        if row > 0 {
            out.push(AreaId(area.0 - self.columns));
        }
        if col > 0 {
            out.push(AreaId(area.0 - 1));
        }
        if col + 1 < self.columns {
            out.push(AreaId(area.0 + 1));
        }
        if row + 1 < self.rows {
            out.push(AreaId(area.0 + self.columns));
        }
        out
    }
}

/// Timing of validation rounds and the epoch termination rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundSchedule {
    /// Round period, seconds.
    #[serde(rename = "T_r")]
    pub t_r: f64,
    /// Hotspot setup time, seconds.
    #[serde(rename = "T_sw")]
    pub t_sw: f64,
    /// Validation window, seconds.
    #[serde(rename = "T_vt")]
    pub t_vt: f64,
    /// Cap on rounds per epoch.
    pub e_max: u32,
    /// Fraction of declared users that must be validated to close an epoch.
    #[serde(rename = "M")]
    pub m: f64,
    /// Distinct validators required per user.
    pub q: u32,
}

impl Default for RoundSchedule {
    fn default() -> Self {
        RoundSchedule {
            t_r: 15.0,
            t_sw: 7.0,
            t_vt: 8.0,
            e_max: 50,
            m: 0.9,
            q: 2,
        }
    }
}

fn default_selector() -> String {
    crate::topology::GREEDY.to_string()
}

fn default_detectors() -> Vec<String> {
    vec![
        crate::cos::COLLUSION.to_string(),
        crate::cos::FRAUD_COVERING.to_string(),
    ]
}

/// Complete input of one simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: AreaGrid,
    pub n_users: u32,
    #[serde(default)]
    pub attacker_spec: Vec<AttackerSpec>,
    pub wifi_range: f64,
    pub schedule: RoundSchedule,
    pub reputation_params: ReputationParams,
    pub detector_params: DetectorParams,
    pub mobility_params: TlwParams,
    pub n_epochs: u32,
    pub seed: u64,
    /// Areas honest users are placed in. `None` spreads them over the whole grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub honest_areas: Option<Vec<AreaId>>,
    /// Registered name of the MHS selection strategy.
    #[serde(default = "default_selector")]
    pub mhs_selector: String,
    /// Registered names of the chain-of-sight detectors to run at epoch end.
    #[serde(default = "default_detectors")]
    pub detectors: Vec<String>,
}

impl Default for ScenarioConfig {
    /// Single 2 km x 2 km area at 50 users per square kilometer, no attackers.
    fn default() -> Self {
        ScenarioConfig {
            grid: AreaGrid::default(),
            n_users: 200,
            attacker_spec: Vec::new(),
            wifi_range: 50.0,
            schedule: RoundSchedule::default(),
            reputation_params: ReputationParams::default(),
            detector_params: DetectorParams::default(),
            mobility_params: TlwParams::default(),
            n_epochs: 50,
            seed: 1,
            honest_areas: None,
            mhs_selector: default_selector(),
            detectors: default_detectors(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Parses and validates in one step.
    pub fn load(text: &str) -> Result<Self> {
        let config = Self::from_json(text)?;
        validate_config(&config).map_err(Error::InvalidConfig)?;
        Ok(config)
    }

    pub fn attackers(&self) -> BTreeSet<UserId> {
        self.attacker_spec.iter().flat_map(|s| s.members()).collect()
    }

    /// Areas honest users may be placed in, ascending.
    pub fn honest_area_list(&self) -> Vec<AreaId> {
        match &self.honest_areas {
            Some(list) => {
                let set: BTreeSet<_> = list.iter().copied().collect();
                set.into_iter().collect()
            }
            None => (0..self.grid.area_count()).map(AreaId).collect(),
        }
    }
}

/// One violated configuration invariant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub reason: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

/// Checks every invariant of `config` and reports all violations at once.
pub fn validate_config(config: &ScenarioConfig) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let mut bad = |field: &str, reason: String| out.push(Violation::new(field, reason));

    let g = &config.grid;
    if !positive(g.cell_size) {
        bad("grid.cell_size", format!("S must be > 0, got {}", g.cell_size));
    }
    if g.columns == 0 || g.rows == 0 {
        bad("grid", "W = columns x rows must be >= 1".into());
    }
    if !g.origin.is_finite() {
        bad("grid.origin", "origin must be finite".into());
    }
    let areas = g.area_count();

    if config.n_users == 0 {
        bad("n_users", "N must be >= 1".into());
    }
    if !positive(config.wifi_range) {
        bad("wifi_range", format!("must be > 0, got {}", config.wifi_range));
    }
    if config.n_epochs == 0 {
        bad("n_epochs", "must be >= 1".into());
    }

    let s = &config.schedule;
    if !positive(s.t_r) {
        bad("schedule.T_r", "must be > 0".into());
    }
    if !(s.t_sw.is_finite() && s.t_sw >= 0.0) {
        bad("schedule.T_sw", "must be >= 0".into());
    }
    if !positive(s.t_vt) {
        bad("schedule.T_vt", "must be > 0".into());
    }
    if s.t_sw + s.t_vt > s.t_r {
        bad(
            "schedule",
            format!("T_sw+T_vt > T_r ({} + {} > {})", s.t_sw, s.t_vt, s.t_r),
        );
    }
    if s.e_max == 0 {
        bad("schedule.e_max", "must be >= 1".into());
    }
    if !(s.m > 0.0 && s.m <= 1.0) {
        bad("schedule.M", format!("must lie in (0, 1], got {}", s.m));
    }
    if s.q == 0 {
        bad("schedule.q", "must be >= 1".into());
    }

    for (field, reason) in config.reputation_params.violations() {
        bad(&format!("reputation_params.{field}"), reason);
    }
    for (field, reason) in config.detector_params.violations() {
        bad(&format!("detector_params.{field}"), reason);
    }
    for (field, reason) in config.mobility_params.violations() {
        bad(&format!("mobility_params.{field}"), reason);
    }

    if let Some(list) = &config.honest_areas {
        if list.is_empty() {
            bad("honest_areas", "must name at least one area".into());
        }
        for a in list {
            if a.0 >= areas {
                bad("honest_areas", format!("area {a} is outside the grid"));
            }
        }
    }

    let mut seen = BTreeSet::new();
    let mut attacker_count = 0u64;
    for (i, spec) in config.attacker_spec.iter().enumerate() {
        let field = format!("attacker_spec[{i}]");
        for reason in spec.violations(areas) {
            bad(&field, reason);
        }
        for m in spec.members() {
            attacker_count += 1;
            if m.0 >= config.n_users {
                bad(&field, format!("user {m} does not exist (N = {})", config.n_users));
            }
            if !seen.insert(m) {
                bad(&field, format!("user {m} appears in more than one attacker spec"));
            }
        }
    }
    if attacker_count > config.n_users as u64 {
        bad("attacker_spec", "more attackers than users".into());
    }

    let selectors = crate::topology::SelectorRegistry::builtin();
    if selectors.get(&config.mhs_selector).is_err() {
        bad(
            "mhs_selector",
            format!(
                "unknown selector `{}` (valid: {})",
                config.mhs_selector,
                selectors.names().join(", ")
            ),
        );
    }
    let detectors = crate::cos::DetectorRegistry::builtin();
    for name in &config.detectors {
        if detectors.get(name).is_err() {
            bad(
                "detectors",
                format!("unknown detector `{name}` (valid: {})", detectors.names().join(", ")),
            );
        }
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Derives an independent generator for `(stream, index)` from a scenario seed.
pub fn derived_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(mix(seed ^ stream.rotate_left(32)) ^ index))
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
