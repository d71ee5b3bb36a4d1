//! Points and rectangles in normalized plot coordinates.
//!
//! `(0, 0)` is the top-left corner of the image and `y` grows downward.

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        libm::hypot(other.x - self.x, other.y - self.y)
    }

    /// Clamps both coordinates into the unit square.
    pub fn clamp_unit(self) -> Self {
        Self {
            x: self.x.clamp(0.0, 1.0),
            y: self.y.clamp(0.0, 1.0),
        }
    }
}

/// Axis-aligned rectangle, inclusive of its bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        x_min: 0.0,
        y_min: 0.0,
        x_max: 1.0,
        y_max: 1.0,
    };

    pub const fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    /// Checks that the rectangle is well formed and lies inside `[0, 1]²`.
    pub fn validate_in_unit_square(&self, name: &'static str) -> Result<()> {
        let coords = [self.x_min, self.y_min, self.x_max, self.y_max];
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid(name, "bounds must be finite"));
        }
        if self.x_min > self.x_max || self.y_min > self.y_max {
            return Err(invalid(name, "minimum exceeds maximum"));
        }
        if coords.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(invalid(name, "bounds must lie inside the unit square"));
        }
        Ok(())
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// Smallest rectangle containing `self` and the disc of `radius` around `p`.
    pub fn include_disc(self, p: Point, radius: f64) -> Self {
        Self {
            x_min: self.x_min.min(p.x - radius),
            y_min: self.y_min.min(p.y - radius),
            x_max: self.x_max.max(p.x + radius),
            y_max: self.y_max.max(p.y + radius),
        }
    }

    pub fn around_disc(p: Point, radius: f64) -> Self {
        Self::new(p.x - radius, p.y - radius, p.x + radius, p.y + radius)
    }
}
