//! Transforms between reduced cylindrical coordinates and McGehee variables.
//!
//! The reduced configuration is `(R, Z)`: `R > 0` is the separation of the
//! outer pair and `Z` the height of the middle body above their plane. The
//! McGehee variables `(r, v, theta, w)` blow up the triple collision `r = 0`
//! into an invariant manifold; `v` is the scaled radial velocity, `theta`
//! the configuration angle, and `w` the regularized angular momentum
//! conjugate to `theta`.

use serde::Serialize;
use thiserror::Error;

use crate::params::PhysicalParams;
use crate::potentials;

/// Reduced cylindrical state together with the angular momentum `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CylState {
    /// Separation of the outer pair, `R >= 0`.
    pub r: f64,
    /// Height of the middle body.
    pub z: f64,
    /// Momentum conjugate to `R`.
    pub p_r: f64,
    /// Momentum conjugate to `Z`.
    pub p_z: f64,
    /// Conserved angular momentum.
    pub c: f64,
}

/// McGehee state with the three time clocks carried along an orbit.
///
/// `t_phys` is physical time, `tau` the first rescaled time
/// (`dt = r^2 dtau`), and `sigma` the fully regularized time
/// (`dtau = (cos^2(theta)/sqrt(U)) dsigma`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McGeheeState {
    /// Configuration size, `r >= 0`; `r = 0` is the collision manifold.
    pub r: f64,
    /// Scaled radial velocity.
    pub v: f64,
    /// Configuration angle, `|theta| <= pi/2`.
    pub theta: f64,
    /// Regularized angular velocity.
    pub w: f64,
    /// Physical time along the orbit.
    pub t_phys: f64,
    /// First rescaled time.
    pub tau: f64,
    /// Fully regularized time.
    pub sigma: f64,
}

impl McGeheeState {
    /// State with all clocks at zero.
    pub fn new(r: f64, v: f64, theta: f64, w: f64) -> Self {
        Self {
            r,
            v,
            theta,
            w,
            t_phys: 0.0,
            tau: 0.0,
            sigma: 0.0,
        }
    }
}

/// Failure of a coordinate transform on a degenerate configuration.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum CoordsError {
    /// `R = Z = 0`: total collapse, no McGehee image.
    #[error("triple collision configuration (R = Z = 0) has no McGehee image")]
    TripleCollisionInput,
    /// `r = 0`: points of the collision manifold have no cylindrical
    /// preimage.
    #[error("collision manifold point (r = 0) has no cylindrical preimage")]
    CollisionManifoldPoint,
    /// `R = 0` (equivalently `|theta| = pi/2`): the outer pair collides and
    /// the cylindrical momenta are undefined.
    #[error("double collision configuration (R = 0) is outside the transform domain")]
    DoubleCollisionInput,
}

/// Maps a cylindrical state to McGehee variables with all clocks zeroed.
pub fn to_mcgehee(params: &PhysicalParams, cyl: &CylState) -> Result<McGeheeState, CoordsError> {
    assert!(
        cyl.r.is_finite() && cyl.z.is_finite() && cyl.p_r.is_finite() && cyl.p_z.is_finite(),
        "cylindrical state must be finite"
    );
    assert!(cyl.r >= 0.0, "outer separation R must be non-negative");
    let (k1, k2) = params.metric_weights();
    let r2 = k1 * cyl.r * cyl.r + k2 * cyl.z * cyl.z;
    if r2 == 0.0 {
        return Err(CoordsError::TripleCollisionInput);
    }
    let r = r2.sqrt();
    let theta = (k2.sqrt() * cyl.z).atan2(k1.sqrt() * cyl.r);
    let v = cyl.r * cyl.p_r + cyl.z * cyl.p_z;
    let u = (k1 / k2).sqrt() * cyl.r * cyl.p_z - (k2 / k1).sqrt() * cyl.z * cyl.p_r;
    let c = theta.cos();
    let w = c * c * u / potentials::u_only(params, theta).sqrt();
    Ok(McGeheeState::new(r, v, theta, w))
}

/// Maps a McGehee state with angular momentum `c` back to cylindrical
/// coordinates.
pub fn from_mcgehee(
    params: &PhysicalParams,
    state: &McGeheeState,
    c: f64,
) -> Result<CylState, CoordsError> {
    assert!(state.r >= 0.0, "configuration size r must be non-negative");
    if state.r == 0.0 {
        return Err(CoordsError::CollisionManifoldPoint);
    }
    if state.theta.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(CoordsError::DoubleCollisionInput);
    }
    let (k1, k2) = params.metric_weights();
    let (s_t, c_t) = state.theta.sin_cos();
    let big_r = state.r * c_t / k1.sqrt();
    let z = state.r * s_t / k2.sqrt();
    let u = potentials::u_only(params, state.theta).sqrt() * state.w / (c_t * c_t);
    let p_r = k1.sqrt() * (state.v * c_t - u * s_t) / state.r;
    let p_z = k2.sqrt() * (state.v * s_t + u * c_t) / state.r;
    Ok(CylState {
        r: big_r,
        z,
        p_r,
        p_z,
        c,
    })
}

/// Energy relation residual in McGehee variables.
///
/// For a state on the energy level `h` with angular momentum `c` the
/// quantity
/// `2 h r^2 cos^4 - w^2 U - v^2 cos^4 - c^2 cos^2 + 2 r V cos^4 + 2 U cos^2`
/// vanishes identically; its value measures how far the state is from the
/// level set. Finite for all `|theta| <= pi/2`, including the endpoints.
pub fn energy_residual(params: &PhysicalParams, state: &McGeheeState, h: f64, c: f64) -> f64 {
    let ct = state.theta.cos();
    let c2 = ct * ct;
    let c4 = c2 * c2;
    let u = potentials::u_only(params, state.theta);
    let v_c2 = potentials::v_times_cos2(params, state.theta);
    2.0 * h * state.r * state.r * c4 - state.w * state.w * u - state.v * state.v * c4
        - c * c * c2
        + 2.0 * state.r * v_c2 * c2
        + 2.0 * u * c2
}

/// Sum of the absolute magnitudes of the residual's terms, for relative
/// comparisons of [`energy_residual`].
pub fn energy_residual_scale(params: &PhysicalParams, state: &McGeheeState, h: f64, c: f64) -> f64 {
    let ct = state.theta.cos();
    let c2 = ct * ct;
    let c4 = c2 * c2;
    let u = potentials::u_only(params, state.theta);
    let v_c2 = potentials::v_times_cos2(params, state.theta);
    (2.0 * h * state.r * state.r * c4).abs()
        + (state.w * state.w * u).abs()
        + (state.v * state.v * c4).abs()
        + (c * c * c2).abs()
        + (2.0 * state.r * v_c2 * c2).abs()
        + (2.0 * u * c2).abs()
}

/// Reduced Hamiltonian on a cylindrical state; requires `R > 0`.
pub fn reduced_energy(params: &PhysicalParams, cyl: &CylState) -> Result<f64, CoordsError> {
    if cyl.r <= 0.0 {
        return Err(CoordsError::DoubleCollisionInput);
    }
    let mo = params.m_outer;
    let mm = params.m_middle;
    let kinetic = cyl.p_r * cyl.p_r / mo
        + (2.0 * mo + mm) * cyl.p_z * cyl.p_z / (4.0 * mo * mm);
    let centrifugal = cyl.c * cyl.c / (mo * cyl.r * cyl.r);
    Ok(kinetic + centrifugal + u_cyl(params, cyl.r, cyl.z))
}

/// Interaction potential in cylindrical coordinates.
fn u_cyl(params: &PhysicalParams, big_r: f64, z: f64) -> f64 {
    let g = params.g;
    let mo = params.m_outer;
    let mm = params.m_middle;
    let rho = (big_r * big_r + 4.0 * z * z).sqrt();
    -g * mo * mo / big_r - g * mo * mo * params.gamma0 / (big_r * big_r)
        - 4.0 * g * mo * mm / rho
        - 8.0 * g * mo * mm * params.gamma / (rho * rho)
}

/// Gradient `(d/dR, d/dZ)` of [`u_cyl`].
pub(crate) fn u_cyl_gradient(params: &PhysicalParams, big_r: f64, z: f64) -> (f64, f64) {
    let g = params.g;
    let mo = params.m_outer;
    let mm = params.m_middle;
    let rho = (big_r * big_r + 4.0 * z * z).sqrt();
    let rho3 = rho * rho * rho;
    let rho4 = rho3 * rho;
    let d_r = g * mo * mo / (big_r * big_r)
        + 2.0 * g * mo * mo * params.gamma0 / (big_r * big_r * big_r)
        + 4.0 * g * mo * mm * big_r / rho3
        + 16.0 * g * mo * mm * params.gamma * big_r / rho4;
    let d_z = 16.0 * g * mo * mm * z / rho3 + 64.0 * g * mo * mm * params.gamma * z / rho4;
    (d_r, d_z)
}
