//! Trajectory planning for the receiver platform.
//!
//! The planner steers the vehicle toward whichever source is still
//! unlocalized and currently closest, using one of two modes:
//!
//! * [`PlannerMode::Discrete`] — pick one of a small set of fixed compass
//!   headings, commit to it for a full action interval, and score each
//!   candidate by where it would leave the vehicle relative to the target
//!   estimate (candidate endpoints are clipped to the survey bounds before
//!   scoring, so a heading that would exit the area is judged by the point
//!   where it hits the fence).
//! * [`PlannerMode::Continuous`] — re-aim straight at the target estimate
//!   every replan period, hovering once within a small capture radius.
//!
//! Antenna gyration is independent of translation: [`propagate_uav`]
//! advances position from the commanded velocity and heading from the spin
//! rate, with no coupling between the two.

use serde::{Deserialize, Serialize};

use crate::filter::ParticleBelief;
use crate::geometry::{wrap_angle, Bounds, UavState};
use crate::scalar::Real;
use crate::{Error, Result};

/// Steering law selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerMode {
    Discrete,
    Continuous,
}

/// Planner parameters shared by both modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig<F: Real> {
    pub mode: PlannerMode,
    /// Commanded ground speed, m/s.
    pub uav_speed_m_s: F,
    /// Antenna spin rate, rad/s.
    pub gyration_rate_rad_s: F,
    /// Number of evenly spaced candidate headings in discrete mode.
    pub heading_count: usize,
    /// How long a discrete action is held, seconds.
    pub action_duration_s: F,
    /// Replan cadence in continuous mode, seconds.
    pub replan_period_s: F,
    /// Continuous mode hovers once within this distance of the target, m.
    pub hover_radius_m: F,
    /// Survey area; discrete candidates are scored after clipping to it.
    pub bounds: Bounds<F>,
}

impl<F: Real> PlannerConfig<F> {
    /// Standard tuning: 10 m/s, 40 deg/s spin, 8 headings held 8 s,
    /// 1 s replans with a 1 m hover radius.
    pub fn standard(mode: PlannerMode, bounds: Bounds<F>) -> Self {
        Self {
            mode,
            uav_speed_m_s: F::of(10.0),
            gyration_rate_rad_s: F::of(40.0).to_radians(),
            heading_count: 8,
            action_duration_s: F::of(8.0),
            replan_period_s: F::of(1.0),
            hover_radius_m: F::of(1.0),
            bounds,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.uav_speed_m_s > F::zero()) || !self.uav_speed_m_s.is_finite() {
            return Err(Error::InvalidParameter {
                what: "uav speed",
                why: format!("{} m/s is not positive and finite", self.uav_speed_m_s),
            });
        }
        if !self.gyration_rate_rad_s.is_finite() {
            return Err(Error::InvalidParameter {
                what: "gyration rate",
                why: "must be finite".into(),
            });
        }
        if self.heading_count < 2 {
            return Err(Error::InvalidParameter {
                what: "heading count",
                why: format!("{} candidate headings cannot bracket a direction", self.heading_count),
            });
        }
        if !(self.action_duration_s > F::zero()) || !(self.replan_period_s > F::zero()) {
            return Err(Error::InvalidParameter {
                what: "planner timing",
                why: "action duration and replan period must be positive".into(),
            });
        }
        if !(self.hover_radius_m >= F::zero()) {
            return Err(Error::InvalidParameter {
                what: "hover radius",
                why: "must be non-negative".into(),
            });
        }
        Ok(())
    }
}

/// A commanded velocity held for a fixed duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Action<F: Real> {
    pub velocity_m_s: [F; 2],
    pub duration_s: F,
}

/// Choose which source to pursue: the unlocalized belief whose mean estimate
/// is horizontally closest to the vehicle. Ties break toward the lower
/// source id; returns `None` once every belief is localized.
pub fn select_nearest_source<F: Real>(
    beliefs: &[ParticleBelief<F>],
    uav: &UavState<F>,
) -> Option<u32> {
    let [ux, uy] = uav.xy();
    let mut best: Option<(F, u32)> = None;
    for belief in beliefs {
        if belief.localized() {
            continue;
        }
        let [mx, my] = belief.estimate_mean();
        let d2 = (mx - ux) * (mx - ux) + (my - uy) * (my - uy);
        let better = match best {
            None => true,
            Some((bd, bid)) => d2 < bd || (d2 == bd && belief.source_id() < bid),
        };
        if better {
            best = Some((d2, belief.source_id()));
        }
    }
    best.map(|(_, id)| id)
}

/// Discrete-heading action selection. Candidate heading `k` points along
/// `(sin phi, cos phi)` with `phi = 2*pi*k / heading_count`; the endpoint after
/// one action interval is clipped to the survey bounds and the candidate
/// closest to `target_xy` wins, with ties going to the smallest heading angle.
pub fn plan_discrete<F: Real>(
    uav: &UavState<F>,
    target_xy: [F; 2],
    cfg: &PlannerConfig<F>,
) -> Result<Action<F>> {
    cfg.validate()?;
    let [ux, uy] = uav.xy();
    let step = cfg.uav_speed_m_s * cfg.action_duration_s;
    let mut best_d2 = F::infinity();
    let mut best_dir = [F::zero(), F::one()];
    for k in 0..cfg.heading_count {
        let phi = F::of(2.0) * F::PI() * F::from_usize(k).unwrap()
            / F::from_usize(cfg.heading_count).unwrap();
        let dir = [phi.sin(), phi.cos()];
        let endpoint = cfg
            .bounds
            .clamp([ux + step * dir[0], uy + step * dir[1]]);
        let d2 = (endpoint[0] - target_xy[0]) * (endpoint[0] - target_xy[0])
            + (endpoint[1] - target_xy[1]) * (endpoint[1] - target_xy[1]);
        // Strict < keeps the first (smallest-angle) heading on exact ties.
        if d2 < best_d2 {
            best_d2 = d2;
            best_dir = dir;
        }
    }
    Ok(Action {
        velocity_m_s: [
            cfg.uav_speed_m_s * best_dir[0],
            cfg.uav_speed_m_s * best_dir[1],
        ],
        duration_s: cfg.action_duration_s,
    })
}

/// Continuous steering: head straight for the target at full speed, or hover
/// (zero velocity) once within the hover radius.
pub fn plan_continuous<F: Real>(
    uav: &UavState<F>,
    target_xy: [F; 2],
    cfg: &PlannerConfig<F>,
) -> Result<Action<F>> {
    cfg.validate()?;
    let [ux, uy] = uav.xy();
    let dx = target_xy[0] - ux;
    let dy = target_xy[1] - uy;
    let dist = (dx * dx + dy * dy).sqrt();
    let velocity = if dist < cfg.hover_radius_m || dist == F::zero() {
        [F::zero(), F::zero()]
    } else {
        [cfg.uav_speed_m_s * dx / dist, cfg.uav_speed_m_s * dy / dist]
    };
    Ok(Action {
        velocity_m_s: velocity,
        duration_s: cfg.replan_period_s,
    })
}

/// Plan one action for the configured mode.
pub fn plan<F: Real>(
    uav: &UavState<F>,
    target_xy: [F; 2],
    cfg: &PlannerConfig<F>,
) -> Result<Action<F>> {
    match cfg.mode {
        PlannerMode::Discrete => plan_discrete(uav, target_xy, cfg),
        PlannerMode::Continuous => plan_continuous(uav, target_xy, cfg),
    }
}

/// Advance the vehicle state by `dt`: position moves with the commanded
/// velocity, heading advances with the gyration rate, and the two never
/// couple. Altitude is held. The caller is responsible for keeping the
/// vehicle inside any survey bounds.
pub fn propagate_uav<F: Real>(
    uav: &UavState<F>,
    action: &Action<F>,
    gyration_rate_rad_s: F,
    dt: F,
) -> Result<UavState<F>> {
    if !(dt >= F::zero()) || !dt.is_finite() {
        return Err(Error::InvalidParameter {
            what: "propagation step",
            why: format!("dt = {dt} s must be finite and non-negative"),
        });
    }
    Ok(UavState {
        position: [
            uav.position[0] + action.velocity_m_s[0] * dt,
            uav.position[1] + action.velocity_m_s[1] * dt,
            uav.position[2],
        ],
        heading: wrap_angle(uav.heading + gyration_rate_rad_s * dt),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Bounds;

    fn cfg(mode: PlannerMode) -> PlannerConfig<f64> {
        PlannerConfig::standard(
            mode,
            Bounds::new([0.0, 0.0], [1000.0, 1000.0]).unwrap(),
        )
    }

    fn uav_at(x: f64, y: f64) -> UavState<f64> {
        UavState::new([x, y, 30.0], 0.0)
    }

    #[test]
    fn continuous_heads_straight_at_target() {
        let mut c = cfg(PlannerMode::Continuous);
        c.uav_speed_m_s = 5.0;
        let a = plan_continuous(&uav_at(0.0, 0.0), [30.0, 40.0], &c).unwrap();
        assert!((a.velocity_m_s[0] - 3.0).abs() < 1e-12);
        assert!((a.velocity_m_s[1] - 4.0).abs() < 1e-12);
        assert_eq!(a.duration_s, 1.0);
    }

    #[test]
    fn continuous_hovers_inside_capture_radius() {
        let c = cfg(PlannerMode::Continuous);
        let a = plan_continuous(&uav_at(500.0, 500.0), [500.0, 500.0], &c).unwrap();
        assert_eq!(a.velocity_m_s, [0.0, 0.0]);
        let a = plan_continuous(&uav_at(500.0, 500.0), [500.3, 500.4], &c).unwrap();
        assert_eq!(a.velocity_m_s, [0.0, 0.0]);
        // Just outside the radius it moves again.
        let a = plan_continuous(&uav_at(500.0, 500.0), [503.0, 504.0], &c).unwrap();
        assert!(a.velocity_m_s[1] > 0.0);
    }

    #[test]
    fn discrete_picks_heading_toward_target() {
        let c = cfg(PlannerMode::Discrete);
        let a = plan_discrete(&uav_at(500.0, 500.0), [500.0, 900.0], &c).unwrap();
        assert!((a.velocity_m_s[0]).abs() < 1e-9);
        assert!((a.velocity_m_s[1] - 10.0).abs() < 1e-9);
        assert_eq!(a.duration_s, 8.0);

        let a = plan_discrete(&uav_at(500.0, 500.0), [100.0, 500.0], &c).unwrap();
        assert!((a.velocity_m_s[0] + 10.0).abs() < 1e-9);
        assert!((a.velocity_m_s[1]).abs() < 1e-9);
    }

    #[test]
    fn discrete_tie_breaks_to_smallest_heading_angle() {
        // Four cardinal headings and a target exactly north-east: north and
        // east candidates end equidistant from it, so north (angle 0) wins.
        let mut c = cfg(PlannerMode::Discrete);
        c.heading_count = 4;
        let a = plan_discrete(&uav_at(500.0, 500.0), [700.0, 700.0], &c).unwrap();
        assert!((a.velocity_m_s[0]).abs() < 1e-12);
        assert!((a.velocity_m_s[1] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn discrete_scores_candidates_after_boundary_clipping() {
        // Near the north-east corner with the target outside the fence: the
        // raw east endpoint would be closest, but clipped endpoints put the
        // north-east candidate (clipped to the corner) nearest the target.
        let c = cfg(PlannerMode::Discrete);
        let a = plan_discrete(&uav_at(990.0, 990.0), [1080.0, 1005.0], &c).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2 * 10.0;
        assert!((a.velocity_m_s[0] - s).abs() < 1e-9);
        assert!((a.velocity_m_s[1] - s).abs() < 1e-9);
    }

    #[test]
    fn propagation_translates_and_spins_independently() {
        let u = UavState::new([100.0f64, 200.0, 30.0], 1.0);
        let a = Action {
            velocity_m_s: [5.0, 0.0],
            duration_s: 8.0,
        };
        let next = propagate_uav(&u, &a, 0.0, 8.0).unwrap();
        assert!((next.position[0] - 140.0).abs() < 1e-12);
        assert!((next.position[1] - 200.0).abs() < 1e-12);
        assert_eq!(next.position[2], 30.0);
        assert!((next.heading - 1.0).abs() < 1e-12);
    }

    #[test]
    fn propagation_wraps_heading_after_full_turn() {
        // 40 deg/s for 9 s is one full revolution: heading returns to start.
        let u = UavState::new([0.0, 0.0, 30.0], 0.5);
        let a = Action {
            velocity_m_s: [0.0, 0.0],
            duration_s: 9.0,
        };
        let next = propagate_uav(&u, &a, 40.0f64.to_radians(), 9.0).unwrap();
        assert_eq!(next.position, u.position);
        assert!((next.heading - 0.5).abs() < 1e-9);
    }

    #[test]
    fn propagation_rejects_negative_dt() {
        let u = uav_at(0.0, 0.0);
        let a = Action {
            velocity_m_s: [1.0, 0.0],
            duration_s: 1.0,
        };
        assert!(propagate_uav(&u, &a, 0.0, -1.0).is_err());
    }

    fn point_belief(id: u32, x: f64, y: f64) -> ParticleBelief<f64> {
        ParticleBelief::from_particles(id, vec![[x, y]], vec![1.0]).unwrap()
    }

    #[test]
    fn selects_nearest_unlocalized_source() {
        let uav = uav_at(0.0, 0.0);
        let beliefs = vec![
            point_belief(1, 800.0, 0.0),
            point_belief(2, 100.0, 0.0),
            point_belief(3, 400.0, 0.0),
        ];
        assert_eq!(select_nearest_source(&beliefs, &uav), Some(2));
    }

    #[test]
    fn selection_skips_localized_and_breaks_ties_low() {
        let uav = uav_at(0.0, 0.0);
        let mut near = point_belief(5, 100.0, 0.0);
        near.check_localized(1e30).unwrap();
        let beliefs = vec![
            near,
            point_belief(7, 0.0, 300.0),
            point_belief(4, 300.0, 0.0),
        ];
        // Source 5 is localized; 4 and 7 tie at 300 m, so 4 wins.
        assert_eq!(select_nearest_source(&beliefs, &uav), Some(4));
    }

    #[test]
    fn selection_returns_none_when_all_localized() {
        let uav = uav_at(0.0, 0.0);
        let mut b = point_belief(1, 10.0, 10.0);
        b.check_localized(1e30).unwrap();
        assert_eq!(select_nearest_source(&[b], &uav), None);
    }

    #[test]
    fn config_validation_rejects_nonsense() {
        let mut c = cfg(PlannerMode::Discrete);
        c.uav_speed_m_s = 0.0;
        assert!(c.validate().is_err());
        let mut c = cfg(PlannerMode::Discrete);
        c.heading_count = 1;
        assert!(c.validate().is_err());
        let mut c = cfg(PlannerMode::Continuous);
        c.replan_period_s = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let c = PlannerConfig::<f32>::standard(
            PlannerMode::Continuous,
            Bounds::new([0.0f32, 0.0], [1000.0, 1000.0]).unwrap(),
        );
        let u = UavState::new([0.0f32, 0.0, 30.0], 0.0);
        let a = plan_continuous(&u, [30.0, 40.0], &c).unwrap();
        assert!((a.velocity_m_s[0] - 6.0).abs() < 1e-4);
        assert!((a.velocity_m_s[1] - 8.0).abs() < 1e-4);
    }
}
