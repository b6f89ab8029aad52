//! Planar geometry for location-aided routing: expected zones, request zones
//! and membership tests.
//!
//! Coordinates are abstract units. Rectangles are axis-aligned and closed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::fmt::Display for Vec2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GeoError {
    #[error("request time {t1} precedes the location timestamp {t0}")]
    TimeReversed { t0: f64, t1: f64 },
    #[error("average speed must be non-negative, got {0}")]
    NegativeSpeed(f64),
}

/// Disc in which the destination is predicted to be found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedZone {
    pub center: Vec2,
    pub radius: f64,
}

/// Closed axis-aligned rectangle. Only nodes inside it take part in a
/// request-zone route discovery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RequestZone {
    pub min_corner: Vec2,
    pub max_corner: Vec2,
}

impl RequestZone {
    pub fn width(&self) -> f64 {
        self.max_corner.x - self.min_corner.x
    }

    pub fn height(&self) -> f64 {
        self.max_corner.y - self.min_corner.y
    }

    pub fn contains(&self, p: Vec2) -> bool {
        contains(self, p)
    }
}

pub fn distance(a: Vec2, b: Vec2) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Zone of radius `avg_speed * (t1 - t0)` around the last known destination
/// position.
pub fn expected_zone(dest_pos: Vec2, avg_speed: f64, t0: f64, t1: f64) -> Result<ExpectedZone, GeoError> {
    if t1 < t0 {
        return Err(GeoError::TimeReversed { t0, t1 });
    }
    if avg_speed < 0.0 {
        return Err(GeoError::NegativeSpeed(avg_speed));
    }
    Ok(ExpectedZone { center: dest_pos, radius: avg_speed * (t1 - t0) })
}

/// Smallest axis-aligned rectangle holding the source and the whole disc.
///
/// When the source lies inside the disc this is the disc's bounding box,
/// otherwise the box is stretched to reach the source, in whichever
/// quadrant it lies.
pub fn request_zone(src_pos: Vec2, ez: ExpectedZone) -> RequestZone {
    let r = ez.radius;
    let c = ez.center;
    RequestZone {
        min_corner: Vec2::new(src_pos.x.min(c.x - r), src_pos.y.min(c.y - r)),
        max_corner: Vec2::new(src_pos.x.max(c.x + r), src_pos.y.max(c.y + r)),
    }
}

pub fn contains(zone: &RequestZone, p: Vec2) -> bool {
    zone.min_corner.x <= p.x && p.x <= zone.max_corner.x && zone.min_corner.y <= p.y && p.y <= zone.max_corner.y
}
