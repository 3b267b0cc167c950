use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

/// A position in the continuous plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Bearing of `other` seen from `self`, in degrees in (-180, 180],
    /// counterclockwise from +x.
    pub fn bearing_deg(&self, other: &Point) -> f64 {
        (other.y - self.y).atan2(other.x - self.x).to_degrees()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Heading in degrees, always a multiple of 10 in `0..360`, counterclockwise from +x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Heading(u16);

impl Heading {
    pub const STEP_DEG: u16 = 10;
    pub const COUNT: u16 = 36;

    pub fn new(deg: u32) -> Option<Self> {
        (deg < 360 && deg % Self::STEP_DEG as u32 == 0).then_some(Self(deg as u16))
    }

    /// Heading with index `k` in `0..36`.
    pub fn from_index(k: u16) -> Self {
        Self((k % Self::COUNT) * Self::STEP_DEG)
    }

    pub fn degrees(self) -> u32 {
        self.0 as u32
    }

    pub fn radians(self) -> f64 {
        self.0 as f64 * PI / 180.0
    }

    pub fn turned_left(self) -> Self {
        Self((self.0 + Self::STEP_DEG) % 360)
    }

    pub fn turned_right(self) -> Self {
        Self((self.0 + 360 - Self::STEP_DEG) % 360)
    }

    /// Unit vector along the heading. Exact for the four cardinal headings so
    /// that axis-aligned moves stay on cell centers. Other headings use the
    /// signed angle in (-180, 180), so headings `h` and `360 - h` give vectors
    /// that are exact mirror images.
    pub fn unit_vector(self) -> (f64, f64) {
        match self.0 {
            0 => (1.0, 0.0),
            90 => (0.0, 1.0),
            180 => (-1.0, 0.0),
            270 => (0.0, -1.0),
            h => {
                let signed = if h > 180 { h as f64 - 360.0 } else { h as f64 };
                let r = signed * PI / 180.0;
                (r.cos(), r.sin())
            }
        }
    }
}

impl TryFrom<u32> for Heading {
    type Error = String;

    fn try_from(value: u32) -> Result<Self, Self::Error> {
        Heading::new(value).ok_or_else(|| format!("heading {value} is not a multiple of 10 in [0, 360)"))
    }
}

impl From<Heading> for u32 {
    fn from(h: Heading) -> u32 {
        h.degrees()
    }
}

/// Agent position and heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Point,
    pub heading: Heading,
}

impl Pose {
    pub fn new(position: Point, heading: Heading) -> Self {
        Self { position, heading }
    }

    /// Bearing of `target` relative to the heading, in [-180, 180),
    /// counterclockwise positive. Computed in the agent frame so that
    /// mirroring the scene negates it exactly.
    pub fn relative_bearing_deg(&self, target: &Point) -> f64 {
        let (c, s) = self.heading.unit_vector();
        let (dx, dy) = (target.x - self.position.x, target.y - self.position.y);
        let ahead = dx * c + dy * s;
        let left = dy * c - dx * s;
        let b = left.atan2(ahead).to_degrees();
        if b >= 180.0 || b <= -180.0 {
            -180.0
        } else {
            b
        }
    }
}

/// Wraps an angle in degrees to [-180, 180). Inputs already in range are
/// returned unchanged, which keeps the wrap odd-symmetric.
pub fn wrap_degrees(deg: f64) -> f64 {
    let mut w = deg;
    while w >= 180.0 {
        w -= 360.0;
    }
    while w < -180.0 {
        w += 360.0;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn turns_wrap() {
        assert_eq!(Heading::new(350).unwrap().turned_left().degrees(), 0);
        assert_eq!(Heading::new(0).unwrap().turned_right().degrees(), 350);
        assert!(Heading::new(355).is_none());
        assert!(Heading::new(360).is_none());
    }

    #[test]
    fn cardinal_vectors_are_exact() {
        assert_eq!(Heading::new(90).unwrap().unit_vector(), (0.0, 1.0));
        assert_eq!(Heading::new(180).unwrap().unit_vector(), (-1.0, 0.0));
    }

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_degrees(180.0), -180.0);
        assert_eq!(wrap_degrees(-180.0), -180.0);
        assert_eq!(wrap_degrees(370.0), 10.0);
        assert_eq!(wrap_degrees(-190.0), 170.0);
        assert!(wrap_degrees(-1e-18) < 180.0);
    }

    #[test]
    fn relative_bearing_is_counterclockwise() {
        let pose = Pose::new(Point::new(0.0, 0.0), Heading::new(90).unwrap());
        // Source on -x is to the left of an agent facing +y.
        assert!((pose.relative_bearing_deg(&Point::new(-1.0, 0.0)) - 90.0).abs() < 1e-12);
    }
}
