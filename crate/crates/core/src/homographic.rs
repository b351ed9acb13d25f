//! Homographic motions: the invariant plane `theta = 0`, `w = 0`.
//!
//! On the homographic plane the configuration stays an exact double
//! pyramid and only its scale `r` evolves. The energy relation collapses
//! to `v^2 = 2 h r^2 + 2 r V(0) + 2 u_max - c^2`, so the qualitative
//! picture is read off a quadratic in `r`: for `h < 0` the admissible
//! momenta form the band `|c| < sqrt(2 u_max + V(0)^2 / (2(-h)))`, inside
//! which motion is periodic once `|c| > sqrt(2 u_max)` and reaches the
//! triple collision otherwise.

use serde::Serialize;
use thiserror::Error;

use crate::dynamics;
use crate::params::{IntegrationSettings, PhysicalParams};
use crate::potentials;
use crate::rk;

/// Relative tolerance for recognizing the circular rest point of the
/// scale equation.
const EQUILIBRIUM_TOL: f64 = 1e-10;
/// A detected turning point is clamped to `v = 0` exactly below this
/// relative threshold so the crossing cannot refire on restart.
const TURNING_CLAMP: f64 = 1e-9;
const MAX_PERIOD_SIGMA: f64 = 1e5;

/// Qualitative class of the homographic motion at `(h, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HomographicClass {
    /// Bounded oscillation of the scale between two positive radii.
    Periodic,
    /// The scale reaches the triple collision in finite time.
    EjectionCollision,
    /// The scale grows without bound.
    Unbounded,
    /// The circular rest point: the scale never moves.
    Equilibrium,
}

/// Summary of the homographic plane at one `(h, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomographicReport {
    pub classification: HomographicClass,
    /// Rest radius `V(0) / (2(-h))` of the scale equation; `None` for
    /// `h >= 0`.
    pub rest_radius: Option<f64>,
    /// Momentum band `(sqrt(2 u_max), sqrt(2 u_max + V(0)^2/(2(-h))))` on
    /// which the motion is periodic; `None` for `h >= 0`.
    pub periodic_window: Option<(f64, f64)>,
    /// Scale oscillation range `(r_min, r_max)` for periodic motion.
    pub radial_range: Option<(f64, f64)>,
    /// Period in the slow time of the regularized flow.
    pub period_sigma: Option<f64>,
    /// Period in physical time.
    pub period_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HomographicError {
    #[error("no homographic motion at |c| = {c_abs}: the admissible band ends at {bound}")]
    MotionImpossible { c_abs: f64, bound: f64 },
    #[error("the motion is not periodic: {reason}")]
    NotPeriodic { reason: &'static str },
}

/// Outcome of a period search started from a turning radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PeriodFinding {
    /// The start sits at the circular rest point.
    Equilibrium,
    Periodic { period_sigma: f64, period_t: f64 },
}

/// Scale velocity squared on the homographic plane,
/// `v^2 = 2 h r^2 + 2 r V(0) + 2 u_max - c^2`.
pub fn scale_velocity_squared(params: &PhysicalParams, r: f64, h: f64, c: f64) -> f64 {
    let cp = potentials::critical_points(params);
    let v0 = potentials::eval(params, 0.0).v;
    2.0 * h * r * r + 2.0 * r * v0 + 2.0 * cp.u_max - c * c
}

/// Classifies the homographic motion at `(h, c)` and, when it is
/// periodic, measures both periods by integration.
pub fn analyze(
    params: &PhysicalParams,
    h: f64,
    c: f64,
) -> Result<HomographicReport, HomographicError> {
    let cp = potentials::critical_points(params);
    let t2 = (2.0 * cp.u_max).sqrt();
    if h >= 0.0 {
        return Ok(HomographicReport {
            classification: HomographicClass::Unbounded,
            rest_radius: None,
            periodic_window: None,
            radial_range: None,
            period_sigma: None,
            period_t: None,
        });
    }
    let v_plane = potentials::eval(params, 0.0).v;
    let rest_radius = v_plane / (2.0 * -h);
    let bound = (2.0 * cp.u_max + v_plane * v_plane / (2.0 * -h)).sqrt();
    let window = (t2, bound);
    if c.abs() >= bound {
        return Err(HomographicError::MotionImpossible {
            c_abs: c.abs(),
            bound,
        });
    }
    if c.abs() <= t2 {
        return Ok(HomographicReport {
            classification: HomographicClass::EjectionCollision,
            rest_radius: Some(rest_radius),
            periodic_window: Some(window),
            radial_range: None,
            period_sigma: None,
            period_t: None,
        });
    }
    let disc = rest_radius * rest_radius + (2.0 * cp.u_max - c * c) / (2.0 * -h);
    let half_width = disc.max(0.0).sqrt();
    let r_min = rest_radius - half_width;
    let r_max = rest_radius + half_width;
    match find_period(params, h, c, r_min)? {
        PeriodFinding::Equilibrium => Ok(HomographicReport {
            classification: HomographicClass::Equilibrium,
            rest_radius: Some(rest_radius),
            periodic_window: Some(window),
            radial_range: Some((r_min, r_max)),
            period_sigma: None,
            period_t: None,
        }),
        PeriodFinding::Periodic {
            period_sigma,
            period_t,
        } => Ok(HomographicReport {
            classification: HomographicClass::Periodic,
            rest_radius: Some(rest_radius),
            periodic_window: Some(window),
            radial_range: Some((r_min, r_max)),
            period_sigma: Some(period_sigma),
            period_t: Some(period_t),
        }),
    }
}

/// Measures the oscillation period of the scale starting at a turning
/// radius `r_start` (where the scale velocity vanishes), by integrating
/// the regularized flow restricted to the homographic plane between two
/// consecutive upward turning points.
pub fn find_period(
    params: &PhysicalParams,
    h: f64,
    c: f64,
    r_start: f64,
) -> Result<PeriodFinding, HomographicError> {
    assert!(
        r_start.is_finite() && r_start > 0.0,
        "the period search needs a positive start radius"
    );
    let cp = potentials::critical_points(params);
    if h >= 0.0 {
        return Err(HomographicError::NotPeriodic {
            reason: "non-negative energy lets the scale grow without bound",
        });
    }
    if c.abs() <= (2.0 * cp.u_max).sqrt() {
        return Err(HomographicError::NotPeriodic {
            reason: "below the momentum threshold the scale reaches the triple collision",
        });
    }
    let v_plane = potentials::eval(params, 0.0).v;
    let v_sq = scale_velocity_squared(params, r_start, h, c);
    let radial_force = 2.0 * h * r_start + v_plane;
    // The circular rest point sits exactly where the admissible momentum
    // band closes, so it is recognized before the band gate.
    if v_sq.abs() <= EQUILIBRIUM_TOL * (1.0 + c * c)
        && radial_force.abs() <= EQUILIBRIUM_TOL * (1.0 + v_plane)
    {
        return Ok(PeriodFinding::Equilibrium);
    }
    let bound = (2.0 * cp.u_max + v_plane * v_plane / (2.0 * -h)).sqrt();
    if c.abs() >= bound {
        return Err(HomographicError::MotionImpossible {
            c_abs: c.abs(),
            bound,
        });
    }
    if v_sq < -EQUILIBRIUM_TOL * (1.0 + c * c) {
        return Err(HomographicError::NotPeriodic {
            reason: "the start radius lies outside the admissible scale range",
        });
    }
    let v_start = v_sq.max(0.0).sqrt();

    let settings = IntegrationSettings::default();
    let rhs = dynamics::regularized_rhs6(params, h, c);
    let controls = rk::Controls {
        rel_tol: settings.rel_tol,
        abs_tol: settings.abs_tol,
        max_step: settings.max_step,
        max_steps: 50_000_000,
    };
    let upward_turning = |_x: f64, y: &[f64; 6]| y[1];
    let mut y = [r_start, v_start, 0.0, 0.0, 0.0, 0.0];
    let mut sigma = 0.0;
    let mut marks = Vec::with_capacity(2);
    // The oscillation period is the gap between two consecutive upward
    // crossings of v = 0; an exact zero at a restart point does not
    // retrigger the crossing, so this is phase independent.
    while marks.len() < 2 {
        let events = [rk::EventSpec {
            g: Box::new(upward_turning),
            direction: rk::Crossing::Rising,
        }];
        let result = rk::run(
            &rhs,
            sigma,
            y,
            sigma + MAX_PERIOD_SIGMA,
            &controls,
            &events,
            |_, _| {},
        );
        match result.status {
            rk::RunStatus::EventStop { .. } => {
                sigma = result.x;
                y = result.y;
                if y[1].abs() < TURNING_CLAMP * (1.0 + c.abs()) {
                    y[1] = 0.0;
                }
                marks.push((sigma, y[4]));
            }
            _ => {
                return Err(HomographicError::NotPeriodic {
                    reason: "no upward turning point within the search horizon",
                });
            }
        }
    }
    Ok(PeriodFinding::Periodic {
        period_sigma: marks[1].0 - marks[0].0,
        period_t: marks[1].1 - marks[0].1,
    })
}
