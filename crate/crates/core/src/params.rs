//! Physical parameters of the isosceles configuration and integrator settings.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Parameter validation failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    /// A mass, the gravitational constant, or a Manev coefficient is not
    /// strictly positive.
    #[error("parameter {name} must be strictly positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    /// The Manev coefficients violate the working regime 16*gamma > gamma0,
    /// under which the collision manifold has its full equilibrium structure.
    #[error("coefficient regime violated: 16*gamma > gamma0 required, got gamma0 = {gamma0}, gamma = {gamma}")]
    RegimeViolation { gamma0: f64, gamma: f64 },
    /// Equal Manev coefficients collapse terms that the closed forms for the
    /// tilted equilibria keep distinct.
    #[error("degenerate coefficients: gamma0 and gamma must differ, both are {value}")]
    DegenerateCoefficients { value: f64 },
}

/// Masses, gravitational constant, and Manev coefficients.
///
/// `m_outer` is the mass of each of the two symmetric bodies, `m_middle` the
/// mass of the body on the vertical axis. `gamma0` weights the inverse-square
/// correction between the outer pair, `gamma` the correction between each
/// outer body and the middle one. Construct through [`PhysicalParams::validate`]
/// so the positivity and regime invariants hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Gravitational constant.
    #[serde(rename = "G")]
    pub g: f64,
    /// Mass of each outer body.
    #[serde(rename = "M")]
    pub m_outer: f64,
    /// Mass of the middle body.
    #[serde(rename = "m")]
    pub m_middle: f64,
    /// Manev coefficient of the outer pair.
    pub gamma0: f64,
    /// Manev coefficient of each outer-middle pair.
    pub gamma: f64,
}

impl PhysicalParams {
    /// Checks positivity of all five parameters, the regime
    /// `16*gamma > gamma0`, and `gamma != gamma0`.
    pub fn validate(
        g: f64,
        m_outer: f64,
        m_middle: f64,
        gamma0: f64,
        gamma: f64,
    ) -> Result<Self, ParamsError> {
        let named = [
            ("G", g),
            ("M", m_outer),
            ("m", m_middle),
            ("gamma0", gamma0),
            ("gamma", gamma),
        ];
        for (name, value) in named {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ParamsError::NonPositiveParameter { name, value });
            }
        }
        if 16.0 * gamma <= gamma0 {
            return Err(ParamsError::RegimeViolation { gamma0, gamma });
        }
        if gamma == gamma0 {
            return Err(ParamsError::DegenerateCoefficients { value: gamma });
        }
        Ok(Self {
            g,
            m_outer,
            m_middle,
            gamma0,
            gamma,
        })
    }

    /// Revalidates an already-constructed value, e.g. after deserialization.
    pub fn revalidate(&self) -> Result<Self, ParamsError> {
        Self::validate(self.g, self.m_outer, self.m_middle, self.gamma0, self.gamma)
    }

    /// Mass ratio `mu = (2M + m) / m`, always derived, never stored.
    pub fn mu(&self) -> f64 {
        (2.0 * self.m_outer + self.m_middle) / self.m_middle
    }

    /// Kinetic-metric weights `(k1, k2) = (M/2, 2Mm/(2M+m))`.
    pub(crate) fn metric_weights(&self) -> (f64, f64) {
        let k1 = self.m_outer / 2.0;
        let k2 = 2.0 * self.m_outer * self.m_middle / (2.0 * self.m_outer + self.m_middle);
        (k1, k2)
    }
}

impl Default for PhysicalParams {
    /// Reference parameter set: `G = 1`, `M = 10`, `m = 1`, `gamma0 = 1`,
    /// `gamma = 3`.
    fn default() -> Self {
        Self::validate(1.0, 10.0, 1.0, 1.0, 3.0).expect("reference parameters are valid")
    }
}

/// Adaptive-integrator controls shared by all vector fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationSettings {
    /// Relative tolerance of the embedded error estimate.
    pub rel_tol: f64,
    /// Absolute tolerance of the embedded error estimate.
    pub abs_tol: f64,
    /// Largest step in the independent variable.
    pub max_step: f64,
    /// Stop this far (radians) before the double-collision angles
    /// `theta = +-pi/2`. Must lie in `(0, pi/4)`.
    pub theta_guard: f64,
    /// Stop when `r` falls to this value; `0` disables the stop.
    pub r_floor: f64,
    /// Stop when `r` exceeds this value; classified as escape.
    pub escape_radius: f64,
}

impl Default for IntegrationSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            max_step: 0.1,
            theta_guard: 1e-6,
            r_floor: 0.0,
            escape_radius: 1e6,
        }
    }
}

impl IntegrationSettings {
    pub(crate) fn assert_valid(&self) {
        assert!(
            self.rel_tol > 0.0 && self.abs_tol > 0.0,
            "integration tolerances must be strictly positive"
        );
        assert!(self.max_step > 0.0, "max_step must be strictly positive");
        assert!(
            self.theta_guard > 0.0 && self.theta_guard < std::f64::consts::FRAC_PI_4,
            "theta_guard must lie in (0, pi/4)"
        );
        assert!(self.r_floor >= 0.0, "r_floor must be non-negative");
        assert!(
            self.escape_radius > self.r_floor,
            "escape_radius must exceed r_floor"
        );
    }
}
