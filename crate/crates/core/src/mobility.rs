//! Truncated Lévy walk mobility.
//!
//! A user alternates flights and pauses. Flight lengths and pause times follow
//! power laws with density proportional to `x^(-1-exponent)`, truncated to a
//! finite interval and sampled by inverse CDF. Headings are uniform.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Bounds, Position};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TlwParams {
    pub flight_exponent: f64,
    pub pause_exponent: f64,
    /// meters
    pub min_flight: f64,
    pub max_flight: f64,
    /// seconds
    pub min_pause: f64,
    pub max_pause: f64,
    /// meters per second
    pub speed: f64,
    /// Keep each user inside the location area it occupies at epoch start.
    #[serde(default = "yes")]
    pub confine_per_epoch: bool,
}

fn yes() -> bool {
    true
}

impl Default for TlwParams {
    fn default() -> Self {
        TlwParams {
            flight_exponent: 1.5,
            pause_exponent: 1.38,
            min_flight: 10.0,
            max_flight: 1000.0,
            min_pause: 10.0,
            max_pause: 300.0,
            speed: 1.5,
            confine_per_epoch: true,
        }
    }
}

impl TlwParams {
    pub(crate) fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if !(self.min_flight > 0.0 && self.min_flight < self.max_flight && self.max_flight.is_finite()) {
            out.push(("min_flight", "need 0 < min_flight < max_flight".to_string()));
        }
        if !(self.min_pause > 0.0 && self.min_pause < self.max_pause && self.max_pause.is_finite()) {
            out.push(("min_pause", "need 0 < min_pause < max_pause".to_string()));
        }
        if !(self.flight_exponent > 0.0 && self.flight_exponent.is_finite()) {
            out.push(("flight_exponent", "must be > 0".to_string()));
        }
        if !(self.pause_exponent > 0.0 && self.pause_exponent.is_finite()) {
            out.push(("pause_exponent", "must be > 0".to_string()));
        }
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            out.push(("speed", "must be > 0".to_string()));
        }
        out
    }
}

/// CDF of the power law truncated to `[lo, hi]`.
pub fn truncated_power_law_cdf(x: f64, lo: f64, hi: f64, exponent: f64) -> f64 {
    if x <= lo {
        return 0.0;
    }
    if x >= hi {
        return 1.0;
    }
    let (a, b) = (lo.powf(-exponent), hi.powf(-exponent));
    (a - x.powf(-exponent)) / (a - b)
}

/// Inverse CDF of the truncated power law at `u` in `[0, 1)`.
pub fn truncated_power_law_quantile(u: f64, lo: f64, hi: f64, exponent: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    let (a, b) = (lo.powf(-exponent), hi.powf(-exponent));
    (a - u * (a - b)).powf(-1.0 / exponent).clamp(lo, hi)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Leg {
    pub flight_length: f64,
    pub heading: f64,
    pub pause: f64,
}

pub fn sample_leg<R: Rng + ?Sized>(params: &TlwParams, rng: &mut R) -> Leg {
    let flight_length = truncated_power_law_quantile(
        rng.gen::<f64>(),
        params.min_flight,
        params.max_flight,
        params.flight_exponent,
    );
    let heading = rng.gen_range(0.0..TAU);
    let pause = truncated_power_law_quantile(
        rng.gen::<f64>(),
        params.min_pause,
        params.max_pause,
        params.pause_exponent,
    );
    Leg {
        flight_length,
        heading,
        pause,
    }
}

/// Walker state between rounds. Exactly one of `remaining_flight` and
/// `remaining_pause` is positive; `queued_pause` holds the pause that follows
/// the current flight.
#[derive(Clone, Debug, PartialEq)]
pub struct MobilityState {
    pub position: Position,
    pub remaining_flight: f64,
    pub heading: f64,
    pub remaining_pause: f64,
    pub queued_pause: f64,
}

impl MobilityState {
    pub fn start<R: Rng + ?Sized>(position: Position, params: &TlwParams, rng: &mut R) -> Self {
        let mut state = MobilityState {
            position,
            remaining_flight: 0.0,
            heading: 0.0,
            remaining_pause: 0.0,
            queued_pause: 0.0,
        };
        state.begin_leg(params, rng);
        state
    }

    fn begin_leg<R: Rng + ?Sized>(&mut self, params: &TlwParams, rng: &mut R) {
        let leg = sample_leg(params, rng);
        self.remaining_flight = leg.flight_length;
        self.heading = leg.heading;
        self.remaining_pause = 0.0;
        self.queued_pause = leg.pause;
    }

    /// Integrates the walk over `dt` seconds, reflecting off the edges of `bounds`.
    pub fn advance<R: Rng + ?Sized>(
        mut self,
        mut dt: f64,
        params: &TlwParams,
        bounds: &Bounds,
        rng: &mut R,
    ) -> MobilityState {
        while dt > 0.0 {
            if self.remaining_flight > 0.0 {
                let time_left = self.remaining_flight / params.speed;
                if time_left <= dt {
                    let d = self.remaining_flight;
                    self.travel(d, bounds);
                    dt -= time_left;
                    self.remaining_flight = 0.0;
                    self.remaining_pause = self.queued_pause;
                    self.queued_pause = 0.0;
                } else {
                    let d = params.speed * dt;
                    self.travel(d, bounds);
                    self.remaining_flight -= d;
                    dt = 0.0;
                }
            } else if self.remaining_pause > 0.0 {
                if self.remaining_pause <= dt {
                    dt -= self.remaining_pause;
                    self.remaining_pause = 0.0;
                    self.begin_leg(params, rng);
                } else {
                    self.remaining_pause -= dt;
                    dt = 0.0;
                }
            } else {
                self.begin_leg(params, rng);
            }
        }
        self
    }

    fn travel(&mut self, distance: f64, bounds: &Bounds) {
        let (sin, cos) = self.heading.sin_cos();
        let (x, flip_x) = reflect(self.position.x + distance * cos, bounds.min_x, bounds.max_x);
        let (y, flip_y) = reflect(self.position.y + distance * sin, bounds.min_y, bounds.max_y);
        self.position = Position::new(x, y);
        let mut heading = self.heading;
        if flip_x {
            heading = std::f64::consts::PI - heading;
        }
        if flip_y {
            heading = -heading;
        }
        self.heading = heading.rem_euclid(TAU);
    }
}

/// Folds `v` back into `[lo, hi)`; the flag reports an odd number of bounces.
fn reflect(v: f64, lo: f64, hi: f64) -> (f64, bool) {
    let w = hi - lo;
    if w <= 0.0 {
        return (lo, false);
    }
    let t = (v - lo).rem_euclid(2.0 * w);
    let (offset, flipped) = if t >= w { (2.0 * w - t, true) } else { (t, false) };
    let mut out = lo + offset;
    if out >= hi {
        out = hi.next_down();
    }
    (out.max(lo), flipped)
}
