//! Poses, bearing conventions, and the rectangular search area.
//!
//! Headings and bearings are compass-like: 0 points along +y ("north") and
//! angles grow clockwise, towards +x. Stored angles are radians in
//! `[0, 2*pi)`. Positions are metres; x-y is the horizontal plane and z is
//! up.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::{Error, Result};

/// Receiver pose: position in metres plus antenna boresight heading.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UavState<F> {
    pub position: [F; 3],
    /// Boresight heading, radians clockwise from +y.
    pub heading: F,
}

impl<F: Real> UavState<F> {
    pub fn new(position: [F; 3], heading: F) -> Self {
        Self {
            position,
            heading: wrap_angle(heading),
        }
    }

    pub fn xy(&self) -> [F; 2] {
        [self.position[0], self.position[1]]
    }
}

/// Emitter state: position in metres. z rides on the terrain surface when a
/// terrain grid is present.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceState<F> {
    pub position: [F; 3],
}

impl<F: Real> SourceState<F> {
    pub fn new(position: [F; 3]) -> Self {
        Self { position }
    }

    pub fn xy(&self) -> [F; 2] {
        [self.position[0], self.position[1]]
    }
}

/// Wrap an angle to `[0, 2*pi)`.
pub fn wrap_angle<F: Real>(a: F) -> F {
    let tau = F::TAU();
    let mut w = a % tau;
    if w < F::zero() {
        w += tau;
    }
    // A tiny negative remainder can round w + tau back up to tau itself.
    if w >= tau {
        w = F::zero();
    }
    w
}

/// Wrap an angle to `(-pi, pi]`, the natural range for residuals.
pub fn wrap_to_pi<F: Real>(a: F) -> F {
    let w = wrap_angle(a);
    if w > F::PI() {
        w - F::TAU()
    } else {
        w
    }
}

/// Horizontal (x-y) distance between two positions.
pub fn horizontal_distance<F: Real>(a: [F; 2], b: [F; 2]) -> F {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (dx * dx + dy * dy).sqrt()
}

/// Full 3-D distance between two positions.
pub fn distance_3d<F: Real>(a: [F; 3], b: [F; 3]) -> F {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// World-frame bearing from `from` to `to`: radians clockwise from +y, in
/// `[0, 2*pi)`. Horizontal only; errors if the points coincide in x-y.
pub fn world_bearing<F: Real>(from: [F; 2], to: [F; 2]) -> Result<F> {
    let dx = to[0] - from[0];
    let dy = to[1] - from[1];
    if dx == F::zero() && dy == F::zero() {
        return Err(Error::DegenerateGeometry(
            "bearing between horizontally coincident points",
        ));
    }
    Ok(wrap_angle(dx.atan2(dy)))
}

/// Bearing of the source relative to the receiver's boresight, in
/// `[0, 2*pi)`.
///
/// This is the world bearing receiver -> source minus the heading. The z
/// components play no role; a source directly overhead has no defined
/// bearing and is rejected as degenerate.
pub fn relative_bearing<F: Real>(source: &SourceState<F>, uav: &UavState<F>) -> Result<F> {
    let world = world_bearing(uav.xy(), source.xy())?;
    Ok(wrap_angle(world - uav.heading))
}

/// Axis-aligned rectangular search area.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds<F> {
    pub min: [F; 2],
    pub max: [F; 2],
}

impl<F: Real> Bounds<F> {
    pub fn new(min: [F; 2], max: [F; 2]) -> Result<Self> {
        if !(min[0] < max[0] && min[1] < max[1]) {
            return Err(Error::InvalidParameter {
                what: "bounds",
                why: format!(
                    "min ({}, {}) must be strictly below max ({}, {}) on both axes",
                    min[0], min[1], max[0], max[1]
                ),
            });
        }
        Ok(Self { min, max })
    }

    pub fn width(&self) -> F {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> F {
        self.max[1] - self.min[1]
    }

    pub fn center(&self) -> [F; 2] {
        let two = F::of(2.0);
        [
            (self.min[0] + self.max[0]) / two,
            (self.min[1] + self.max[1]) / two,
        ]
    }

    pub fn contains(&self, p: [F; 2]) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }

    /// Project a point onto the rectangle (componentwise clamp).
    pub fn clamp(&self, p: [F; 2]) -> [F; 2] {
        [
            p[0].max(self.min[0]).min(self.max[0]),
            p[1].max(self.min[1]).min(self.max[1]),
        ]
    }

    /// Shrink the rectangle by `margin` on every side.
    pub fn shrunk(&self, margin: F) -> Result<Self> {
        Self::new(
            [self.min[0] + margin, self.min[1] + margin],
            [self.max[0] - margin, self.max[1] - margin],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn uav(x: f64, y: f64, heading: f64) -> UavState<f64> {
        UavState::new([x, y, 0.0], heading)
    }

    fn src(x: f64, y: f64) -> SourceState<f64> {
        SourceState::new([x, y, 0.0])
    }

    #[test]
    fn bearing_due_east_with_north_heading() {
        let phi = relative_bearing(&src(10.0, 0.0), &uav(0.0, 0.0, 0.0)).unwrap();
        assert!((phi - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn bearing_wraps_behind_the_boresight() {
        // Source due north, boresight east: the source sits 90 degrees to the
        // left, which wraps to 3*pi/2.
        let phi = relative_bearing(&src(0.0, 10.0), &uav(0.0, 0.0, FRAC_PI_2)).unwrap();
        assert!((phi - 3.0 * FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn bearing_offset_case() {
        let phi = relative_bearing(&src(3.0, 4.0), &uav(0.0, 0.0, 0.2)).unwrap();
        let expected = 3.0f64.atan2(4.0) - 0.2; // 0.4435011...
        assert!((phi - expected).abs() < 1e-15);
        assert!((phi - 0.4435).abs() < 1e-4);
    }

    #[test]
    fn coincident_horizontal_positions_are_degenerate() {
        // Same x-y, different z: still undefined.
        let s = SourceState::new([5.0, 5.0, 40.0]);
        let u = UavState::new([5.0, 5.0, 10.0], 1.0);
        assert!(matches!(
            relative_bearing(&s, &u),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn wrap_angle_range_and_identity() {
        assert_eq!(wrap_angle(0.0), 0.0);
        assert!((wrap_angle(-0.1) - (TAU - 0.1)).abs() < 1e-15);
        assert!((wrap_angle(TAU + 0.25) - 0.25).abs() < 1e-15);
        assert_eq!(wrap_angle(TAU), 0.0);
        // The near-tau rounding guard.
        assert!(wrap_angle(-1e-18) < TAU);
    }

    #[test]
    fn wrap_to_pi_signs() {
        assert!((wrap_to_pi(3.0f64 * FRAC_PI_2) + FRAC_PI_2).abs() < 1e-15);
        assert!((wrap_to_pi(PI) - PI).abs() < 1e-15);
        assert!((wrap_to_pi(-0.3f64) + 0.3).abs() < 1e-15);
    }

    #[test]
    fn bounds_reject_inverted_corners() {
        assert!(Bounds::new([0.0, 0.0], [0.0, 10.0]).is_err());
        assert!(Bounds::new([5.0, 0.0], [1.0, 10.0]).is_err());
    }

    #[test]
    fn bounds_clamp_projects() {
        let b = Bounds::new([0.0, 0.0], [10.0, 20.0]).unwrap();
        assert_eq!(b.clamp([-5.0, 25.0]), [0.0, 20.0]);
        assert_eq!(b.clamp([3.0, 4.0]), [3.0, 4.0]);
        assert!(b.contains([10.0, 0.0]));
        assert!(!b.contains([10.1, 0.0]));
    }

    #[test]
    fn works_in_f32_too() {
        let s = SourceState::new([10.0f32, 0.0, 0.0]);
        let u = UavState::new([0.0f32, 0.0, 0.0], 0.0);
        let phi = relative_bearing(&s, &u).unwrap();
        assert!((phi - std::f32::consts::FRAC_PI_2).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn wrap_angle_is_in_range(a in -1e6f64..1e6) {
            let w = wrap_angle(a);
            prop_assert!((0.0..TAU).contains(&w));
        }

        #[test]
        fn bearing_is_translation_invariant(
            sx in -500.0f64..500.0, sy in -500.0f64..500.0,
            ux in -500.0f64..500.0, uy in -500.0f64..500.0,
            heading in 0.0f64..TAU,
            tx in -2000.0f64..2000.0, ty in -2000.0f64..2000.0,
        ) {
            prop_assume!((sx - ux).abs() > 1e-3 || (sy - uy).abs() > 1e-3);
            let a = relative_bearing(&src(sx, sy), &uav(ux, uy, heading)).unwrap();
            let b = relative_bearing(
                &src(sx + tx, sy + ty),
                &uav(ux + tx, uy + ty, heading),
            ).unwrap();
            // Translation shifts both endpoints; the difference of wrapped
            // angles can only move by float noise around 0 or 2*pi.
            let d = wrap_to_pi(a - b).abs();
            prop_assert!(d < 1e-6, "bearing moved by {d}");
        }

        #[test]
        fn heading_shift_subtracts_from_bearing(
            sx in -500.0f64..500.0, sy in -500.0f64..500.0,
            heading in 0.0f64..TAU,
            delta in -10.0f64..10.0,
        ) {
            prop_assume!(sx.abs() > 1e-3 || sy.abs() > 1e-3);
            let base = relative_bearing(&src(sx, sy), &uav(0.0, 0.0, heading)).unwrap();
            let shifted = relative_bearing(&src(sx, sy), &uav(0.0, 0.0, heading + delta)).unwrap();
            let d = wrap_to_pi(shifted - (base - delta)).abs();
            prop_assert!(d < 1e-9, "heading shift broke bearing by {d}");
        }
    }
}
