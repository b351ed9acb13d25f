//! Angular potentials of the blown-up problem and their critical points.
//!
//! On the collision manifold the configuration is parametrized by an angle
//! `theta` with `|theta| <= pi/2`; `theta = 0` is the planar (homographic)
//! configuration and `theta = +-pi/2` are the double collisions of the outer
//! pair. Three potentials drive the flow: `V` collects the Newtonian terms,
//! `W` the inverse-square Manev corrections, and `U = W cos^2(theta)` is the
//! bounded form that regularizes the double collisions.

use serde::Serialize;

use crate::params::PhysicalParams;

/// `V`, `W`, `U` and their first derivatives at one angle.
///
/// At `theta = +-pi/2` the unbounded quantities are reported as infinities:
/// `v` and `w` are positive-infinite, `dv` and `dw` carry the sign of the
/// approach (`+` at `+pi/2`, `-` at `-pi/2`), while `u` and `du` stay finite
/// with `du = 0` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialEval {
    pub theta: f64,
    pub v: f64,
    pub w: f64,
    pub u: f64,
    pub dv: f64,
    pub dw: f64,
    pub du: f64,
}

/// Critical angles of `V` and `W` on `(0, pi/2)` and the range of `U`.
///
/// `u_min = U(+-pi/2)` and `u_max = U(0)`; `U` decreases monotonically from
/// `u_max` to `u_min` on `[0, pi/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoints {
    /// Unique zero of `dV` in `(0, pi/2)`: `cos^2 = mu/(mu+3)`.
    pub theta_v: f64,
    /// Unique zero of `dW` in `(0, pi/2)`:
    /// `cos^2 = mu/(mu + 4 sqrt(gamma/gamma0) - 1)`.
    pub theta_w: f64,
    /// `U(+-pi/2) = G M^3 gamma0 / 2`.
    pub u_min: f64,
    /// `U(0) = (G M^2 / 2)(M gamma0 + 8 m gamma)`.
    pub u_max: f64,
}

/// Shared trigonometric pieces at one angle: `(sin, cos, sin 2theta,
/// cos 2theta, D)` with `D = cos^2 + mu sin^2`.
fn angle_pieces(params: &PhysicalParams, theta: f64) -> (f64, f64, f64, f64, f64) {
    let (s, c) = theta.sin_cos();
    let d = c * c + params.mu() * s * s;
    (s, c, (2.0 * theta).sin(), (2.0 * theta).cos(), d)
}

/// Evaluates `V`, `W`, `U`, `dV`, `dW`, `dU` at `theta`.
///
/// `theta` must be finite with `|theta| <= pi/2`.
pub fn eval(params: &PhysicalParams, theta: f64) -> PotentialEval {
    assert!(theta.is_finite(), "theta must be finite");
    assert!(
        theta.abs() <= std::f64::consts::FRAC_PI_2,
        "theta must satisfy |theta| <= pi/2, got {theta}"
    );
    if theta.abs() >= std::f64::consts::FRAC_PI_2 {
        let sign = theta.signum();
        return PotentialEval {
            theta,
            v: f64::INFINITY,
            w: f64::INFINITY,
            u: 0.5 * params.g * params.m_outer.powi(3) * params.gamma0,
            dv: sign * f64::INFINITY,
            dw: sign * f64::INFINITY,
            du: 0.0,
        };
    }

    let (v, w, dv, dw) = quotient_eval_raw(params, theta);
    PotentialEval {
        theta,
        v,
        w,
        u: u_only(params, theta),
        dv,
        dw,
        du: du_only(params, theta),
    }
}

fn du_closed(params: &PhysicalParams, s2: f64, d: f64) -> f64 {
    let k = 4.0 * params.g * params.m_outer * params.m_outer * params.m_middle * params.gamma * params.mu();
    -k * s2 / (d * d)
}

/// Second derivative of `U`, finite on all of `[-pi/2, pi/2]`.
pub fn u_second_derivative(params: &PhysicalParams, theta: f64) -> f64 {
    let (_s, _c, s2, c2, d) = angle_pieces(params, theta);
    let k = 4.0 * params.g * params.m_outer * params.m_outer * params.m_middle * params.gamma * params.mu();
    -(2.0 * k / (d * d * d)) * (c2 * d - (params.mu() - 1.0) * s2 * s2)
}

/// Quotient forms `(V, W, dV, dW)` without domain checks, for integrator
/// trial stages that may land on or slightly beyond the angle endpoints.
pub(crate) fn quotient_eval_raw(params: &PhysicalParams, theta: f64) -> (f64, f64, f64, f64) {
    let g = params.g;
    let mo = params.m_outer;
    let mm = params.m_middle;
    let mu = params.mu();
    let (s, c, s2, _c2, d) = angle_pieces(params, theta);
    let newton_scale = g * mo * (mo / 2.0).sqrt();
    let manev_scale = 0.5 * g * mo * mo;
    let v = newton_scale * (mo / c + 4.0 * mm / d.sqrt());
    let w = manev_scale * (mo * params.gamma0 / (c * c) + 8.0 * mm * params.gamma / d);
    let dv = newton_scale * (mo * s / (c * c) - 2.0 * mm * (mu - 1.0) * s2 / d.powf(1.5));
    let dw = manev_scale
        * (2.0 * mo * params.gamma0 * s / (c * c * c)
            - 8.0 * mm * params.gamma * (mu - 1.0) * s2 / (d * d));
    (v, w, dv, dw)
}

/// `V(theta) cos^2(theta)`, finite on all of the closed angle range and
/// analytic across the endpoints, so trial integration steps that overshoot
/// `|theta| = pi/2` stay well defined.
pub(crate) fn v_times_cos2(params: &PhysicalParams, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let d = c * c + params.mu() * s * s;
    let newton_scale = params.g * params.m_outer * (params.m_outer / 2.0).sqrt();
    newton_scale * (params.m_outer * c + 4.0 * params.m_middle * c * c / d.sqrt())
}

/// `dV(theta) cos^3(theta)`, finite on all of the closed angle range.
pub(crate) fn dv_times_cos3(params: &PhysicalParams, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let s2 = (2.0 * theta).sin();
    let d = c * c + params.mu() * s * s;
    let newton_scale = params.g * params.m_outer * (params.m_outer / 2.0).sqrt();
    newton_scale
        * (params.m_outer * s * c
            - 2.0 * params.m_middle * (params.mu() - 1.0) * s2 * c * c * c / d.powf(1.5))
}

/// `U(theta)` alone, valid on the closed range and analytic across the
/// endpoints.
pub(crate) fn u_only(params: &PhysicalParams, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let d = c * c + params.mu() * s * s;
    0.5 * params.g
        * params.m_outer
        * params.m_outer
        * (params.m_outer * params.gamma0 + 8.0 * params.m_middle * params.gamma * c * c / d)
}

/// `dU(theta)` alone, valid on the closed range and analytic across the
/// endpoints.
pub(crate) fn du_only(params: &PhysicalParams, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    let d = c * c + params.mu() * s * s;
    du_closed(params, (2.0 * theta).sin(), d)
}

/// Closed-form critical angles and the extremes of `U`.
pub fn critical_points(params: &PhysicalParams) -> CriticalPoints {
    let mu = params.mu();
    let theta_v = (mu / (mu + 3.0)).sqrt().acos();
    let q = 4.0 * (params.gamma / params.gamma0).sqrt() - 1.0;
    let theta_w = (mu / (mu + q)).sqrt().acos();
    let u_min = 0.5 * params.g * params.m_outer.powi(3) * params.gamma0;
    let u_max = 0.5
        * params.g
        * params.m_outer
        * params.m_outer
        * (params.m_outer * params.gamma0 + 8.0 * params.m_middle * params.gamma);
    CriticalPoints {
        theta_v,
        theta_w,
        u_min,
        u_max,
    }
}
