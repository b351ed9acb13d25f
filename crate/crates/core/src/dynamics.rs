//! The reduced flow in four equivalent formulations and its integration.
//!
//! The same orbit can be followed in cylindrical variables (physical time
//! `t`), in unregularized McGehee variables (rescaled time `tau`), in the
//! fully regularized McGehee variables (time `sigma`, smooth up to the
//! double-collision angles), or restricted to the collision manifold
//! `r = 0`. All integrations sample on the `sigma` clock so trajectories
//! from different formulations can be compared point by point.

use serde::Serialize;
use thiserror::Error;

use crate::coords::{self, CoordsError, CylState, McGeheeState};
use crate::params::{IntegrationSettings, PhysicalParams};
use crate::potentials;
use crate::rk::{self, Controls, Crossing, EventSpec, RunStatus};

const MAX_STEPS: usize = 5_000_000;
/// Start states for the regularized field must satisfy the energy relation
/// to `|residual| <= INCONSISTENT_START_TOL * max(1, |h| r^2)`.
const INCONSISTENT_START_TOL: f64 = 1e-8;

/// Formulation in which an orbit is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    /// `(r, v, theta, w)` in the fully regularized time `sigma`.
    Regularized,
    /// `(r, v, theta, u)` in the rescaled time `tau`.
    Unregularized,
    /// `(R, Z, P_R, P_Z)` in physical time `t`.
    Cylindrical,
    /// `(v, theta, w)` on the invariant boundary `r = 0`.
    CollisionManifold,
}

/// Initial condition matching the chosen [`Field`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StartState {
    /// For [`Field::Regularized`] and [`Field::Unregularized`].
    McGehee(McGeheeState),
    /// For [`Field::Cylindrical`].
    Cylindrical(CylState),
    /// For [`Field::CollisionManifold`].
    Manifold { v: f64, theta: f64, w: f64 },
}

/// Why an integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    /// The requested `sigma` span was covered.
    MaxTime,
    /// The angle reached the guard band before `theta = +-pi/2`.
    DoubleCollisionEvent,
    /// `r` fell to the configured floor.
    TripleCollisionEvent,
    /// `r` exceeded the escape radius.
    Escape,
    /// The step size underflowed or the step budget ran out.
    StepFailure,
}

/// An integrated orbit, sampled at every accepted step.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `(sigma, state)` pairs in strictly increasing `sigma`.
    pub samples: Vec<(f64, McGeheeState)>,
    pub h: f64,
    pub c: f64,
    pub termination: Termination,
    /// Largest `|energy_residual|` over the samples.
    pub max_residual: f64,
}

impl Trajectory {
    /// Final sampled state.
    pub fn last(&self) -> &McGeheeState {
        &self.samples.last().expect("trajectory has at least one sample").1
    }
}

/// Rejected or inconsistent initial data.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("field {field} requires a {expected} start state")]
    MismatchedStart {
        field: &'static str,
        expected: &'static str,
    },
    #[error(
        "start state lies off the energy level: |residual| = {residual:.3e} exceeds {bound:.3e}"
    )]
    InconsistentStart { residual: f64, bound: f64 },
    #[error(
        "angular momentum argument {arg} differs from the start state's value {state}"
    )]
    AngularMomentumMismatch { arg: f64, state: f64 },
    #[error(transparent)]
    Coords(#[from] CoordsError),
}

/// Regularized field: `sigma`-derivatives of `(r, v, theta, w)`.
///
/// Smooth across the double-collision angles; orbits on `r = 0` keep `v`
/// exactly constant because the `v` equation carries an overall factor `r`.
pub fn rhs_regularized(params: &PhysicalParams, y: &[f64; 4], h: f64, c: f64) -> [f64; 4] {
    let [r, v, theta, w] = *y;
    let u = potentials::u_only(params, theta);
    let du = potentials::du_only(params, theta);
    let vc2 = potentials::v_times_cos2(params, theta);
    let dvc3 = potentials::dv_times_cos3(params, theta);
    let (st, ct) = theta.sin_cos();
    let sqrt_u = u.sqrt();
    let g = ct * ct / sqrt_u;
    [
        g * r * v,
        r * (2.0 * h * r * g + vc2 / sqrt_u),
        w,
        (ct / u) * (r * dvc3 + du * ct - (c * c - 2.0 * u) * st)
            - (2.0 * st / ct + du / (2.0 * u)) * w * w,
    ]
}

/// Unregularized McGehee field: `tau`-derivatives of `(r, v, theta, u)`.
///
/// Valid only away from the double-collision angles; independent of the
/// energy level.
pub fn rhs_unregularized(params: &PhysicalParams, y: &[f64; 4], c: f64) -> [f64; 4] {
    let [r, v, theta, u_ang] = *y;
    let (pot_v, pot_w, pot_dv, pot_dw) = potentials::quotient_eval_raw(params, theta);
    let (st, ct) = theta.sin_cos();
    [
        r * v,
        v * v + u_ang * u_ang + c * c / (ct * ct) - r * pot_v - 2.0 * pot_w,
        u_ang,
        -c * c * st / (ct * ct * ct) + r * pot_dv + pot_dw,
    ]
}

/// Cylindrical field: `t`-derivatives of `(R, Z, P_R, P_Z)`.
pub fn rhs_cylindrical(params: &PhysicalParams, y: &[f64; 4], c: f64) -> [f64; 4] {
    let [big_r, z, p_r, p_z] = *y;
    let mo = params.m_outer;
    let mm = params.m_middle;
    let (du_r, du_z) = coords::u_cyl_gradient(params, big_r, z);
    [
        2.0 * p_r / mo,
        (2.0 * mo + mm) * p_z / (2.0 * mo * mm),
        2.0 * c * c / (mo * big_r * big_r * big_r) - du_r,
        -du_z,
    ]
}

/// Flow on the collision manifold: `sigma`-derivatives of `(v, theta, w)`.
///
/// `v` is a first integral of this restricted flow; its derivative is
/// exactly zero.
pub fn rhs_collision_manifold(params: &PhysicalParams, y: &[f64; 3], c: f64) -> [f64; 3] {
    let [_v, theta, w] = *y;
    let u = potentials::u_only(params, theta);
    let du = potentials::du_only(params, theta);
    let (st, ct) = theta.sin_cos();
    [
        0.0,
        w,
        (ct / u) * (du * ct - (c * c - 2.0 * u) * st)
            - (2.0 * st / ct + du / (2.0 * u)) * w * w,
    ]
}

/// Regularized field with the `t` and `tau` clocks appended:
/// `y = [r, v, theta, w, t, tau]`, independent variable `sigma`.
pub(crate) fn regularized_rhs6<'a>(
    params: &'a PhysicalParams,
    h: f64,
    c: f64,
) -> impl Fn(f64, &[f64; 6]) -> [f64; 6] + 'a {
    move |_x, y| {
        let core = rhs_regularized(params, &[y[0], y[1], y[2], y[3]], h, c);
        let ct = y[2].cos();
        let g = ct * ct / potentials::u_only(params, y[2]).sqrt();
        [core[0], core[1], core[2], core[3], y[0] * y[0] * g, g]
    }
}

pub(crate) fn controls_from(settings: &IntegrationSettings) -> Controls {
    Controls {
        rel_tol: settings.rel_tol,
        abs_tol: settings.abs_tol,
        max_step: settings.max_step,
        max_steps: MAX_STEPS,
    }
}

fn termination_for(status: RunStatus, event_kinds: &[Termination]) -> Termination {
    match status {
        RunStatus::ReachedEnd => Termination::MaxTime,
        RunStatus::EventStop { event } => event_kinds[event],
        RunStatus::StepSizeUnderflow | RunStatus::MaxStepsExceeded => Termination::StepFailure,
    }
}

/// Integrates the chosen formulation until the `sigma` clock has advanced
/// by `sigma_span` or a stopping event fires.
///
/// `h` is the energy level and `c` the angular momentum; both are dynamical
/// constants of the orbit. Samples are recorded at every accepted step,
/// converted to McGehee variables, and keyed by the absolute `sigma` clock.
pub fn integrate(
    params: &PhysicalParams,
    field: Field,
    start: &StartState,
    h: f64,
    c: f64,
    settings: &IntegrationSettings,
    sigma_span: f64,
) -> Result<Trajectory, DynamicsError> {
    settings.assert_valid();
    assert!(
        sigma_span > 0.0 && sigma_span.is_finite(),
        "sigma_span must be positive and finite"
    );
    match field {
        Field::Regularized => integrate_regularized(params, start, h, c, settings, sigma_span),
        Field::Unregularized => integrate_unregularized(params, start, h, c, settings, sigma_span),
        Field::Cylindrical => integrate_cylindrical(params, start, h, c, settings, sigma_span),
        Field::CollisionManifold => integrate_manifold(params, start, h, c, settings, sigma_span),
    }
}

fn guard_band(settings: &IntegrationSettings) -> f64 {
    std::f64::consts::FRAC_PI_2 - settings.theta_guard
}

/// Events on the angle guard band, the escape radius, and the optional
/// `r` floor, for state vectors that expose `r` and `theta` through the
/// given projections.
fn standard_events<'a, const N: usize>(
    settings: &IntegrationSettings,
    theta_of: impl Fn(&[f64; N]) -> f64 + Copy + 'a,
    r_of: impl Fn(&[f64; N]) -> f64 + Copy + 'a,
) -> (Vec<EventSpec<'a, N>>, Vec<Termination>) {
    let band = guard_band(settings);
    let mut events: Vec<EventSpec<'a, N>> = Vec::new();
    let mut kinds = Vec::new();
    events.push(EventSpec {
        g: Box::new(move |_x, y: &[f64; N]| theta_of(y) - band),
        direction: Crossing::Rising,
    });
    kinds.push(Termination::DoubleCollisionEvent);
    events.push(EventSpec {
        g: Box::new(move |_x, y: &[f64; N]| -theta_of(y) - band),
        direction: Crossing::Rising,
    });
    kinds.push(Termination::DoubleCollisionEvent);
    let escape = settings.escape_radius;
    events.push(EventSpec {
        g: Box::new(move |_x, y: &[f64; N]| r_of(y) - escape),
        direction: Crossing::Rising,
    });
    kinds.push(Termination::Escape);
    if settings.r_floor > 0.0 {
        let floor = settings.r_floor;
        events.push(EventSpec {
            g: Box::new(move |_x, y: &[f64; N]| r_of(y) - floor),
            direction: Crossing::Falling,
        });
        kinds.push(Termination::TripleCollisionEvent);
    }
    (events, kinds)
}

fn integrate_regularized(
    params: &PhysicalParams,
    start: &StartState,
    h: f64,
    c: f64,
    settings: &IntegrationSettings,
    sigma_span: f64,
) -> Result<Trajectory, DynamicsError> {
    let StartState::McGehee(s0) = start else {
        return Err(DynamicsError::MismatchedStart {
            field: "regularized",
            expected: "McGehee",
        });
    };
    let residual = coords::energy_residual(params, s0, h, c);
    let bound = INCONSISTENT_START_TOL * (h.abs() * s0.r * s0.r).max(1.0);
    if residual.abs() > bound {
        return Err(DynamicsError::InconsistentStart {
            residual: residual.abs(),
            bound,
        });
    }
    let mut samples = vec![(s0.sigma, *s0)];
    let mut max_residual = residual.abs();
    if s0.theta.abs() >= guard_band(settings) {
        return Ok(Trajectory {
            samples,
            h,
            c,
            termination: Termination::DoubleCollisionEvent,
            max_residual,
        });
    }
    let rhs = regularized_rhs6(params, h, c);
    let y0 = [s0.r, s0.v, s0.theta, s0.w, s0.t_phys, s0.tau];
    let (events, kinds) = standard_events(settings, |y: &[f64; 6]| y[2], |y: &[f64; 6]| y[0]);
    let sigma0 = s0.sigma;
    let result = rk::run(
        &rhs,
        0.0,
        y0,
        sigma_span,
        &controls_from(settings),
        &events,
        |x, y| {
            let state = McGeheeState {
                r: y[0],
                v: y[1],
                theta: y[2],
                w: y[3],
                t_phys: y[4],
                tau: y[5],
                sigma: sigma0 + x,
            };
            max_residual = max_residual.max(coords::energy_residual(params, &state, h, c).abs());
            samples.push((state.sigma, state));
        },
    );
    Ok(Trajectory {
        samples,
        h,
        c,
        termination: termination_for(result.status, &kinds),
        max_residual,
    })
}

fn integrate_unregularized(
    params: &PhysicalParams,
    start: &StartState,
    h: f64,
    c: f64,
    settings: &IntegrationSettings,
    sigma_span: f64,
) -> Result<Trajectory, DynamicsError> {
    let StartState::McGehee(s0) = start else {
        return Err(DynamicsError::MismatchedStart {
            field: "unregularized",
            expected: "McGehee",
        });
    };
    let mut samples = vec![(s0.sigma, *s0)];
    let mut max_residual = coords::energy_residual(params, s0, h, c).abs();
    if s0.theta.abs() >= guard_band(settings) {
        return Ok(Trajectory {
            samples,
            h,
            c,
            termination: Termination::DoubleCollisionEvent,
            max_residual,
        });
    }
    let ct0 = s0.theta.cos();
    let u_ang0 = potentials::u_only(params, s0.theta).sqrt() * s0.w / (ct0 * ct0);
    // y = [r, v, theta, u, t, sigma]; independent variable tau.
    let rhs = move |_x: f64, y: &[f64; 6]| {
        let core = rhs_unregularized(params, &[y[0], y[1], y[2], y[3]], c);
        let ct = y[2].cos();
        let dsigma = potentials::u_only(params, y[2]).sqrt() / (ct * ct);
        [core[0], core[1], core[2], core[3], y[0] * y[0], dsigma]
    };
    let y0 = [s0.r, s0.v, s0.theta, u_ang0, s0.t_phys, s0.sigma];
    let (mut events, mut kinds) =
        standard_events(settings, |y: &[f64; 6]| y[2], |y: &[f64; 6]| y[0]);
    let sigma_target = s0.sigma + sigma_span;
    events.push(EventSpec {
        g: Box::new(move |_x, y: &[f64; 6]| y[5] - sigma_target),
        direction: Crossing::Rising,
    });
    kinds.push(Termination::MaxTime);
    // The sigma clock advances at rate sqrt(U)/cos^2 >= sqrt(u_min), so
    // this tau horizon always lets the sigma target event fire first.
    let u_min = potentials::critical_points(params).u_min;
    let tau_end = 1.01 * sigma_span / u_min.sqrt();
    let result = rk::run(
        &rhs,
        0.0,
        y0,
        tau_end,
        &controls_from(settings),
        &events,
        |x, y| {
            let theta = y[2];
            let ct = theta.cos();
            let state = McGeheeState {
                r: y[0],
                v: y[1],
                theta,
                w: ct * ct * y[3] / potentials::u_only(params, theta).sqrt(),
                t_phys: y[4],
                tau: s0.tau + x,
                sigma: y[5],
            };
            max_residual = max_residual.max(coords::energy_residual(params, &state, h, c).abs());
            samples.push((state.sigma, state));
        },
    );
    Ok(Trajectory {
        samples,
        h,
        c,
        termination: termination_for(result.status, &kinds),
        max_residual,
    })
}

fn integrate_cylindrical(
    params: &PhysicalParams,
    start: &StartState,
    h: f64,
    c: f64,
    settings: &IntegrationSettings,
    sigma_span: f64,
) -> Result<Trajectory, DynamicsError> {
    let StartState::Cylindrical(cyl0) = start else {
        return Err(DynamicsError::MismatchedStart {
            field: "cylindrical",
            expected: "cylindrical",
        });
    };
    if cyl0.c != c {
        return Err(DynamicsError::AngularMomentumMismatch {
            arg: c,
            state: cyl0.c,
        });
    }
    let mc0 = coords::to_mcgehee(params, cyl0)?;
    let (k1, k2) = params.metric_weights();
    // y = [R, Z, P_R, P_Z, tau, sigma]; independent variable t.
    let rhs = move |_x: f64, y: &[f64; 6]| {
        let core = rhs_cylindrical(params, &[y[0], y[1], y[2], y[3]], c);
        let r2 = k1 * y[0] * y[0] + k2 * y[1] * y[1];
        let theta = (k2.sqrt() * y[1]).atan2(k1.sqrt() * y[0]);
        let ct = theta.cos();
        let dsigma = potentials::u_only(params, theta).sqrt() / (r2 * ct * ct);
        [core[0], core[1], core[2], core[3], 1.0 / r2, dsigma]
    };
    let y0 = [cyl0.r, cyl0.z, cyl0.p_r, cyl0.p_z, 0.0, 0.0];
    let r_of = move |y: &[f64; 6]| (k1 * y[0] * y[0] + k2 * y[1] * y[1]).sqrt();
    let escape = settings.escape_radius;
    let mut events: Vec<EventSpec<'_, 6>> = Vec::new();
    let mut kinds = Vec::new();
    events.push(EventSpec {
        g: Box::new(move |_x, y: &[f64; 6]| r_of(y) - escape),
        direction: Crossing::Rising,
    });
    kinds.push(Termination::Escape);
    if settings.r_floor > 0.0 {
        let floor = settings.r_floor;
        events.push(EventSpec {
            g: Box::new(move |_x, y: &[f64; 6]| r_of(y) - floor),
            direction: Crossing::Falling,
        });
        kinds.push(Termination::TripleCollisionEvent);
    }
    events.push(EventSpec {
        g: Box::new(move |_x, y: &[f64; 6]| y[5] - sigma_span),
        direction: Crossing::Rising,
    });
    kinds.push(Termination::MaxTime);
    let mut samples = vec![(0.0, mc0)];
    let mut max_residual = coords::energy_residual(params, &mc0, h, c).abs();
    let result = rk::run(
        &rhs,
        0.0,
        y0,
        1e9,
        &controls_from(settings),
        &events,
        |x, y| {
            if y[0] <= 0.0 {
                return;
            }
            let cyl = CylState {
                r: y[0],
                z: y[1],
                p_r: y[2],
                p_z: y[3],
                c,
            };
            if let Ok(mut state) = coords::to_mcgehee(params, &cyl) {
                state.t_phys = x;
                state.tau = y[4];
                state.sigma = y[5];
                max_residual =
                    max_residual.max(coords::energy_residual(params, &state, h, c).abs());
                samples.push((state.sigma, state));
            }
        },
    );
    Ok(Trajectory {
        samples,
        h,
        c,
        termination: termination_for(result.status, &kinds),
        max_residual,
    })
}

fn integrate_manifold(
    params: &PhysicalParams,
    start: &StartState,
    h: f64,
    c: f64,
    settings: &IntegrationSettings,
    sigma_span: f64,
) -> Result<Trajectory, DynamicsError> {
    let StartState::Manifold { v, theta, w } = *start else {
        return Err(DynamicsError::MismatchedStart {
            field: "collision_manifold",
            expected: "manifold",
        });
    };
    let s0 = McGeheeState::new(0.0, v, theta, w);
    let mut samples = vec![(0.0, s0)];
    let mut max_residual = coords::energy_residual(params, &s0, h, c).abs();
    if theta.abs() >= guard_band(settings) {
        return Ok(Trajectory {
            samples,
            h,
            c,
            termination: Termination::DoubleCollisionEvent,
            max_residual,
        });
    }
    // y = [v, theta, w, tau]; independent variable sigma.
    let rhs = move |_x: f64, y: &[f64; 4]| {
        let core = rhs_collision_manifold(params, &[y[0], y[1], y[2]], c);
        let ct = y[1].cos();
        let g = ct * ct / potentials::u_only(params, y[1]).sqrt();
        [core[0], core[1], core[2], g]
    };
    let (events, kinds) = standard_events(settings, |y: &[f64; 4]| y[1], |_y: &[f64; 4]| 0.0);
    let result = rk::run(
        &rhs,
        0.0,
        [v, theta, w, 0.0],
        sigma_span,
        &controls_from(settings),
        &events,
        |x, y| {
            let state = McGeheeState {
                r: 0.0,
                v: y[0],
                theta: y[1],
                w: y[2],
                t_phys: 0.0,
                tau: y[3],
                sigma: x,
            };
            max_residual = max_residual.max(coords::energy_residual(params, &state, h, c).abs());
            samples.push((x, state));
        },
    );
    Ok(Trajectory {
        samples,
        h,
        c,
        termination: termination_for(result.status, &kinds),
        max_residual,
    })
}

/// Solves the energy relation for `w^2` at `(r, v, theta)` on level `h`
/// with angular momentum `c`; negative values mean the point is outside
/// the level set's angular range.
pub fn w_squared_on_level(
    params: &PhysicalParams,
    r: f64,
    v: f64,
    theta: f64,
    h: f64,
    c: f64,
) -> f64 {
    let ct = theta.cos();
    let c2 = ct * ct;
    let c4 = c2 * c2;
    let u = potentials::u_only(params, theta);
    let vc2 = potentials::v_times_cos2(params, theta);
    (2.0 * h * r * r * c4 + 2.0 * r * vc2 * c2 + 2.0 * u * c2 - c * c * c2 - v * v * c4) / u
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p0() -> PhysicalParams {
        PhysicalParams::default()
    }

    fn settings() -> IntegrationSettings {
        IntegrationSettings::default()
    }

    fn on_level_start(r: f64, v: f64, theta: f64, h: f64, c: f64) -> McGeheeState {
        let p = p0();
        let w2 = w_squared_on_level(&p, r, v, theta, h, c);
        assert!(w2 >= 0.0, "chosen start is outside the level set");
        McGeheeState::new(r, v, theta, w2.sqrt())
    }

    #[test]
    fn unregularized_field_matches_the_frozen_value_at_the_reference_point() {
        let p = p0();
        let dy = rhs_unregularized(&p, &[1.0, 0.0, 0.0, 0.0], 0.0);
        assert_eq!(dy[0], 0.0);
        assert_relative_eq!(dy[1], -3713.0495168499705, max_relative = 1e-13);
        assert_eq!(dy[2], 0.0);
        assert_eq!(dy[3], 0.0);
    }

    #[test]
    fn regularized_field_vanishes_at_the_upright_equilibrium() {
        let p = p0();
        let v0 = (2.0 * 1700.0f64).sqrt();
        let dy = rhs_regularized(&p, &[0.0, v0, 0.0, 0.0], -1.0, 0.0);
        for component in dy {
            assert_eq!(component, 0.0);
        }
    }

    #[test]
    fn energy_residual_stays_small_along_a_regularized_orbit() {
        let p = p0();
        let h = -1.0;
        let c = 2.0;
        let start = on_level_start(1.0, 0.0, 0.3, h, c);
        let traj = integrate(
            &p,
            Field::Regularized,
            &StartState::McGehee(start),
            h,
            c,
            &settings(),
            5.0,
        )
        .unwrap();
        let r_max = traj
            .samples
            .iter()
            .map(|(_, s)| s.r)
            .fold(0.0f64, f64::max);
        assert!(traj.max_residual <= 1e-8 * (h.abs() * r_max * r_max).max(1.0));
        assert!(traj.samples.len() > 10);
    }

    #[test]
    fn off_level_start_is_rejected() {
        let p = p0();
        let start = McGeheeState::new(1.0, 0.0, 0.3, 10.0);
        let err = integrate(
            &p,
            Field::Regularized,
            &StartState::McGehee(start),
            -1.0,
            0.0,
            &settings(),
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, DynamicsError::InconsistentStart { .. }));
    }

    #[test]
    fn mismatched_start_state_is_rejected() {
        let p = p0();
        let err = integrate(
            &p,
            Field::Regularized,
            &StartState::Manifold {
                v: 0.0,
                theta: 0.0,
                w: 0.0,
            },
            -1.0,
            0.0,
            &settings(),
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, DynamicsError::MismatchedStart { .. }));
    }

    #[test]
    fn v_is_constant_along_collision_manifold_orbits() {
        let p = p0();
        let c = 40.0;
        let w2 = w_squared_on_level(&p, 0.0, 0.0, 0.3, -1.0, c);
        let traj = integrate(
            &p,
            Field::CollisionManifold,
            &StartState::Manifold {
                v: 0.0,
                theta: 0.3,
                w: w2.sqrt(),
            },
            -1.0,
            c,
            &settings(),
            5.0,
        )
        .unwrap();
        let v_drift = traj
            .samples
            .iter()
            .map(|(_, s)| s.v.abs())
            .fold(0.0f64, f64::max);
        assert!(v_drift <= 1e-12);
        assert_eq!(traj.termination, Termination::MaxTime);
    }

    #[test]
    fn start_inside_the_guard_band_terminates_immediately() {
        let p = p0();
        let traj = integrate(
            &p,
            Field::CollisionManifold,
            &StartState::Manifold {
                v: 0.0,
                theta: std::f64::consts::FRAC_PI_2 - 1e-9,
                w: 0.0,
            },
            -1.0,
            0.0,
            &settings(),
            1.0,
        )
        .unwrap();
        assert_eq!(traj.termination, Termination::DoubleCollisionEvent);
        assert_eq!(traj.samples.len(), 1);
    }

    #[test]
    fn unregularized_orbit_matches_the_regularized_one_on_the_sigma_clock() {
        let p = p0();
        let h = -1.0;
        let c = 2.0;
        let start = on_level_start(1.0, 0.0, 0.3, h, c);
        let span = 1.0;
        let reg = integrate(
            &p,
            Field::Regularized,
            &StartState::McGehee(start),
            h,
            c,
            &settings(),
            span,
        )
        .unwrap();
        let unreg = integrate(
            &p,
            Field::Unregularized,
            &StartState::McGehee(start),
            h,
            c,
            &settings(),
            span,
        )
        .unwrap();
        assert_eq!(unreg.termination, Termination::MaxTime);
        let a = reg.last();
        let b = unreg.last();
        assert!((a.sigma - b.sigma).abs() <= 1e-9);
        assert!((a.r - b.r).abs() <= 1e-7);
        assert!((a.v - b.v).abs() <= 1e-7);
        assert!((a.theta - b.theta).abs() <= 1e-7);
        assert!((a.w - b.w).abs() <= 1e-7);
    }

    #[test]
    fn cylindrical_orbit_matches_the_regularized_one_on_the_sigma_clock() {
        let p = p0();
        let cyl = CylState {
            r: 1.2,
            z: 0.1,
            p_r: 0.0,
            p_z: 0.0,
            c: 35.0,
        };
        let h = coords::reduced_energy(&p, &cyl).unwrap();
        let start = coords::to_mcgehee(&p, &cyl).unwrap();
        let span = 2.0;
        let reg = integrate(
            &p,
            Field::Regularized,
            &StartState::McGehee(start),
            h,
            cyl.c,
            &settings(),
            span,
        )
        .unwrap();
        let cyl_traj = integrate(
            &p,
            Field::Cylindrical,
            &StartState::Cylindrical(cyl),
            h,
            cyl.c,
            &settings(),
            span,
        )
        .unwrap();
        assert_eq!(cyl_traj.termination, Termination::MaxTime);
        let a = reg.last();
        let b = cyl_traj.last();
        assert!((a.sigma - b.sigma).abs() <= 1e-8);
        assert!((a.r - b.r).abs() <= 1e-6);
        assert!((a.v - b.v).abs() <= 1e-6);
        assert!((a.theta - b.theta).abs() <= 1e-6);
        assert!((a.w - b.w).abs() <= 1e-6);
    }

    #[test]
    fn the_flow_is_reversible_under_negating_v_and_w() {
        let p = p0();
        let h = -1.0;
        let c = 2.0;
        let start = on_level_start(1.0, 0.4, 0.2, h, c);
        let span = 2.0;
        let forward = integrate(
            &p,
            Field::Regularized,
            &StartState::McGehee(start),
            h,
            c,
            &settings(),
            span,
        )
        .unwrap();
        let mid = *forward.last();
        let reflected = McGeheeState::new(mid.r, -mid.v, mid.theta, -mid.w);
        let back = integrate(
            &p,
            Field::Regularized,
            &StartState::McGehee(reflected),
            h,
            c,
            &settings(),
            span,
        )
        .unwrap();
        let end = back.last();
        assert!((end.r - start.r).abs() <= 1e-7);
        assert!((end.v + start.v).abs() <= 1e-7);
        assert!((end.theta - start.theta).abs() <= 1e-7);
        assert!((end.w + start.w).abs() <= 1e-7);
    }

    #[test]
    fn orbits_started_in_the_invariant_plane_stay_in_it() {
        let p = p0();
        let c = 10.0;
        let r0 = 2.0;
        let h = (c * c - 2.0 * 1700.0 - 2.0 * r0 * 140.0 * 5f64.sqrt()) / (2.0 * r0 * r0);
        let start = McGeheeState::new(r0, 0.0, 0.0, 0.0);
        let traj = integrate(
            &p,
            Field::Regularized,
            &StartState::McGehee(start),
            h,
            c,
            &settings(),
            10.0,
        )
        .unwrap();
        let worst = traj
            .samples
            .iter()
            .map(|(_, s)| s.theta.abs() + s.w.abs())
            .fold(0.0f64, f64::max);
        assert!(worst <= 1e-9);
    }

    #[test]
    fn positive_energy_orbit_escapes() {
        let p = p0();
        let h = 1.0;
        let c = 0.0;
        let r0 = 1.0;
        let v0 = (2.0 * h * r0 * r0 + 2.0 * r0 * 140.0 * 5f64.sqrt() + 2.0 * 1700.0).sqrt();
        let start = McGeheeState::new(r0, v0, 0.0, 0.0);
        let traj = integrate(
            &p,
            Field::Regularized,
            &StartState::McGehee(start),
            h,
            c,
            &settings(),
            2000.0,
        )
        .unwrap();
        assert_eq!(traj.termination, Termination::Escape);
        assert!(traj.last().r >= 1e6 * (1.0 - 1e-9));
    }
}
