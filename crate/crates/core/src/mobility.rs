//! Random-direction motion inside a rectangular region.
//!
//! Each node travels along a heading for an exponentially distributed leg,
//! then draws a fresh heading. Walls reflect the velocity component normal
//! to them and the node travels the rest of its step in the reflected
//! direction.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::Vec2;

#[derive(Debug, Error, PartialEq)]
pub enum MobilityError {
    #[error("region dimensions must be positive, got {0} x {1}")]
    Region(f64, f64),
    #[error("invalid speed range [{0}, {1}]")]
    SpeedRange(f64, f64),
    #[error("mean leg length must be positive, got {0}")]
    MeanLeg(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilityConfig {
    pub region_width: f64,
    pub region_height: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub mean_leg: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        Self { region_width: 1000.0, region_height: 1000.0, speed_min: 2.0, speed_max: 40.0, mean_leg: 25.0 }
    }
}

impl MobilityConfig {
    /// All nodes move at exactly `speed`.
    pub fn with_fixed_speed(mut self, speed: f64) -> Self {
        self.speed_min = speed;
        self.speed_max = speed;
        self
    }

    pub fn validate(&self) -> Result<(), MobilityError> {
        if !(self.region_width > 0.0 && self.region_height > 0.0) {
            return Err(MobilityError::Region(self.region_width, self.region_height));
        }
        // a fixed speed of zero is allowed (parked vehicles)
        if !(self.speed_min >= 0.0 && self.speed_min <= self.speed_max && self.speed_max.is_finite()) {
            return Err(MobilityError::SpeedRange(self.speed_min, self.speed_max));
        }
        if self.mean_leg.is_nan() || self.mean_leg <= 0.0 {
            return Err(MobilityError::MeanLeg(self.mean_leg));
        }
        Ok(())
    }

    fn leg_distribution(&self) -> Exp<f64> {
        Exp::new(1.0 / self.mean_leg).expect("mean leg validated positive")
    }

    pub fn draw_leg<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.leg_distribution().sample(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kinematics {
    pub pos: Vec2,
    /// Radians in `[0, 2π)`, measured counter-clockwise from east.
    pub heading: f64,
    pub speed: f64,
    pub leg_remaining: f64,
}

pub fn sample_initial<R: Rng + ?Sized>(config: &MobilityConfig, rng: &mut R) -> Kinematics {
    let pos = Vec2::new(rng.random_range(0.0..=config.region_width), rng.random_range(0.0..=config.region_height));
    let speed = if config.speed_min == config.speed_max {
        config.speed_min
    } else {
        rng.random_range(config.speed_min..=config.speed_max)
    };
    let heading = rng.random_range(0.0..TAU);
    let leg_remaining = config.draw_leg(rng);
    Kinematics { pos, heading, speed, leg_remaining }
}

/// Moves the node for `dt` seconds. Randomness is drawn only when a leg
/// runs out, so splitting a step at any point consumes the same draws.
pub fn advance<R: Rng + ?Sized>(k: Kinematics, dt: f64, config: &MobilityConfig, rng: &mut R) -> Kinematics {
    debug_assert!(dt >= 0.0);
    let mut k = k;
    let mut remaining = k.speed * dt;
    while remaining > 0.0 {
        let step = remaining.min(k.leg_remaining);
        travel(&mut k, step, config);
        remaining -= step;
        k.leg_remaining -= step;
        if k.leg_remaining <= 0.0 {
            k.heading = rng.random_range(0.0..TAU);
            k.leg_remaining = config.draw_leg(rng);
        }
    }
    k
}

/// Straight-line move of `dist` with specular reflection at the walls.
fn travel(k: &mut Kinematics, dist: f64, config: &MobilityConfig) {
    let w = config.region_width;
    let h = config.region_height;
    let (sin, cos) = k.heading.sin_cos();
    let mut x = k.pos.x + dist * cos;
    let mut y = k.pos.y + dist * sin;
    let mut flip_x = false;
    let mut flip_y = false;
    // folding loop handles steps longer than the region itself
    loop {
        if x > w {
            x = 2.0 * w - x;
            flip_x = !flip_x;
        } else if x < 0.0 {
            x = -x;
            flip_x = !flip_x;
        } else {
            break;
        }
    }
    loop {
        if y > h {
            y = 2.0 * h - y;
            flip_y = !flip_y;
        } else if y < 0.0 {
            y = -y;
            flip_y = !flip_y;
        } else {
            break;
        }
    }
    let mut heading = k.heading;
    if flip_x {
        heading = std::f64::consts::PI - heading;
    }
    if flip_y {
        heading = -heading;
    }
    k.pos = Vec2::new(x.clamp(0.0, w), y.clamp(0.0, h));
    k.heading = heading.rem_euclid(TAU);
}
