//! Collision-manifold topology, equilibria, and restricted spectra.
//!
//! For each angular momentum `c` the collision manifold is the set
//! `r = 0` intersected with the energy relation; its topology changes at
//! `|c| = sqrt(2 u_min)` and `|c| = sqrt(2 u_max)`. Equilibria of the
//! restricted flow sit at zeros of the angular force: the upright pair
//! `P+-` at `theta = 0` and, for small `|c|`, two tilted pairs `E+-` at
//! `theta = -+theta_0`. The boundary lines `theta = +-pi/2` form a
//! degenerate invariant family of their own.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics;
use crate::params::PhysicalParams;
use crate::potentials;

/// Eigenvalues with real part within this tolerance of zero count as
/// center directions.
const CENTER_TOL: f64 = 1e-9;
const FD_STEP_SCALE: f64 = 1e-6;

/// Topology of the collision manifold as a function of `|c|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CollisionTopology {
    /// `|c| <= sqrt(2 u_min)`: a sphere minus four points, plus the two
    /// boundary lines.
    SphereMinusFourPoints,
    /// `sqrt(2 u_min) < |c| < sqrt(2 u_max)`: a sphere plus the two lines.
    SpherePlusTwoLines,
    /// `|c| = sqrt(2 u_max)`: the sphere degenerates to a point.
    PointPlusTwoLines,
    /// `|c| > sqrt(2 u_max)`: only the two lines remain.
    TwoLinesOnly,
}

/// Classification result with the two momentum thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TopologyClass {
    pub class: CollisionTopology,
    /// `(sqrt(2 u_min), sqrt(2 u_max))`.
    pub thresholds: (f64, f64),
}

/// Which member of the equilibrium census a location belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EquilibriumKind {
    #[serde(rename = "P_plus")]
    PPlus,
    #[serde(rename = "P_minus")]
    PMinus,
    #[serde(rename = "E1_plus")]
    E1Plus,
    #[serde(rename = "E1_minus")]
    E1Minus,
    #[serde(rename = "E2_plus")]
    E2Plus,
    #[serde(rename = "E2_minus")]
    E2Minus,
    #[serde(rename = "BoundaryLine")]
    BoundaryLine,
}

impl EquilibriumKind {
    /// Interior equilibria are isolated points; the boundary entry marks
    /// the two degenerate lines `theta = +-pi/2`.
    pub fn is_interior(&self) -> bool {
        !matches!(self, EquilibriumKind::BoundaryLine)
    }

    fn v_sign(&self) -> f64 {
        match self {
            EquilibriumKind::PPlus | EquilibriumKind::E1Plus | EquilibriumKind::E2Plus => 1.0,
            EquilibriumKind::PMinus | EquilibriumKind::E1Minus | EquilibriumKind::E2Minus => -1.0,
            EquilibriumKind::BoundaryLine => 0.0,
        }
    }
}

/// Counts of eigenvalue real-part signs of the restricted linearization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Dims {
    pub unstable: usize,
    pub stable: usize,
    pub center: usize,
}

/// The two printed closed forms of the leading eigenvalue at `P+-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Lambda1Form {
    /// `+-sqrt(2 - c^2/u_max)`, read off the Jacobian entry `g(0) v`.
    JacobianForm,
    /// `+-sqrt((G M^3 gamma0 - c^2)/(G M^3 gamma0))`.
    RatioForm,
}

/// Both closed forms of the leading eigenvalue next to its measured value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lambda1Comparison {
    pub jacobian_form: Complex64,
    /// Imaginary for `c^2 > G M^3 gamma0`.
    pub ratio_form: Complex64,
    /// Real eigenvalue of the finite-difference linearization.
    pub numeric: f64,
    /// Which closed form the numeric value matches.
    pub matching: Lambda1Form,
}

/// Restricted spectrum at one equilibrium: three eigenvalues after the
/// structurally zero `v` direction is split off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    /// Closed-form eigenvalues, canonically sorted.
    pub closed: [Complex64; 3],
    /// Finite-difference eigenvalues, canonically sorted.
    pub numeric: [Complex64; 3],
    /// Sign counts of the closed eigenvalues' real parts.
    pub dims: Dims,
    /// Present at `P+-` only.
    pub lambda1: Option<Lambda1Comparison>,
}

/// One census entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub kind: EquilibriumKind,
    /// `(r, v, theta, w)`; for [`EquilibriumKind::BoundaryLine`] a
    /// representative point on the right line.
    pub location: [f64; 4],
    pub spectrum: Option<Spectrum>,
}

/// Spectrum requests outside an equilibrium's existence window.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ManifoldError {
    #[error("equilibrium family {kind} does not exist at |c| = {c_abs} (window limit {limit})")]
    OutsideWindow {
        kind: &'static str,
        c_abs: f64,
        limit: f64,
    },
    #[error("the boundary lines are a degenerate family without a restricted spectrum")]
    BoundaryFamily,
}

/// Momentum thresholds `(sqrt(2 u_min), sqrt(2 u_max))`.
pub fn momentum_thresholds(params: &PhysicalParams) -> (f64, f64) {
    let cp = potentials::critical_points(params);
    ((2.0 * cp.u_min).sqrt(), (2.0 * cp.u_max).sqrt())
}

/// Classifies the collision-manifold topology at angular momentum `c`.
pub fn classify(params: &PhysicalParams, c: f64) -> TopologyClass {
    let (t1, t2) = momentum_thresholds(params);
    let a = c.abs();
    let class = if a <= t1 {
        CollisionTopology::SphereMinusFourPoints
    } else if a < t2 {
        CollisionTopology::SpherePlusTwoLines
    } else if a == t2 {
        CollisionTopology::PointPlusTwoLines
    } else {
        CollisionTopology::TwoLinesOnly
    };
    TopologyClass {
        class,
        thresholds: (t1, t2),
    }
}

/// Level curve of the manifold flow on the section `v = v_section`:
/// `(theta, +-w)` pairs on an `n`-point closed angle grid wherever the
/// squared ordinate is non-negative.
pub fn section_curve(
    params: &PhysicalParams,
    v_section: f64,
    c: f64,
    n: usize,
) -> Vec<(f64, f64)> {
    assert!(n >= 2, "section grid needs at least two points");
    let half = std::f64::consts::FRAC_PI_2;
    let mut out = Vec::new();
    for i in 0..n {
        let theta = -half + std::f64::consts::PI * (i as f64) / ((n - 1) as f64);
        let ct = theta.cos();
        let c2 = ct * ct;
        let u = potentials::u_only(params, theta);
        let w2 = ((2.0 * u - c * c) * c2 - v_section * v_section * c2 * c2) / u;
        if w2 >= 0.0 {
            let w = w2.sqrt();
            out.push((theta, w));
            out.push((theta, if w == 0.0 { 0.0 } else { -w }));
        }
    }
    out
}

/// `v`-coordinate of the tilted equilibria; requires `c^2 < G M^3 gamma0`.
pub fn e_point_v0(params: &PhysicalParams, c: f64) -> f64 {
    let g = params.g;
    let mo = params.m_outer;
    let mm = params.m_middle;
    let inner = g * mo.powi(3) * params.gamma0 - c * c;
    assert!(inner > 0.0, "tilted equilibria require c^2 < G M^3 gamma0");
    ((8.0 * g * mo * mo * mm * params.gamma).sqrt() + (2.0 * mo / mm * inner).sqrt()) / params.mu()
}

/// Tilt angle of the tilted equilibria; requires `c^2 < G M^3 gamma0`.
pub fn e_point_theta0(params: &PhysicalParams, c: f64) -> f64 {
    let g = params.g;
    let mo = params.m_outer;
    let denom = g * mo.powi(3) * params.gamma0 - c * c;
    assert!(denom > 0.0, "tilted equilibria require c^2 < G M^3 gamma0");
    let tan_sq = ((16.0 * g * mo.powi(3) * params.gamma / denom).sqrt() - 1.0) / params.mu();
    tan_sq.sqrt().atan()
}

/// Census of collision-manifold equilibria at angular momentum `c`, in the
/// fixed order `P+`, `P-`, `E1+`, `E1-`, `E2+`, `E2-`, boundary marker.
/// Spectra are not attached; see [`equilibria_with_spectra`].
pub fn equilibria(params: &PhysicalParams, c: f64) -> Vec<Equilibrium> {
    let (t1, t2) = momentum_thresholds(params);
    let cp = potentials::critical_points(params);
    let mut out = Vec::new();
    if c.abs() <= t2 {
        let v_p = (2.0 * cp.u_max - c * c).max(0.0).sqrt();
        for kind in [EquilibriumKind::PPlus, EquilibriumKind::PMinus] {
            out.push(Equilibrium {
                kind,
                location: [0.0, kind.v_sign() * v_p, 0.0, 0.0],
                spectrum: None,
            });
        }
    }
    if c.abs() < t1 {
        let v0 = e_point_v0(params, c);
        let theta0 = e_point_theta0(params, c);
        for (kind, theta) in [
            (EquilibriumKind::E1Plus, -theta0),
            (EquilibriumKind::E1Minus, -theta0),
            (EquilibriumKind::E2Plus, theta0),
            (EquilibriumKind::E2Minus, theta0),
        ] {
            out.push(Equilibrium {
                kind,
                location: [0.0, kind.v_sign() * v0, theta, 0.0],
                spectrum: None,
            });
        }
    }
    out.push(Equilibrium {
        kind: EquilibriumKind::BoundaryLine,
        location: [0.0, 0.0, std::f64::consts::FRAC_PI_2, 0.0],
        spectrum: None,
    });
    out
}

fn sort_canonical(eigs: &mut [Complex64; 3]) {
    eigs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

fn dims_of(eigs: &[Complex64; 3]) -> Dims {
    let mut dims = Dims {
        unstable: 0,
        stable: 0,
        center: 0,
    };
    for e in eigs {
        if e.re > CENTER_TOL {
            dims.unstable += 1;
        } else if e.re < -CENTER_TOL {
            dims.stable += 1;
        } else {
            dims.center += 1;
        }
    }
    dims
}

/// Eigenvalues of the finite-difference linearization of the regularized
/// field at a point of `r = 0`, after splitting off the structurally zero
/// `v` direction.
///
/// At any equilibrium on `r = 0` the Jacobian's `v` column vanishes
/// identically (every `v` dependence of the field carries a factor `r`),
/// so the characteristic polynomial factors into `-lambda` times that of
/// the 3x3 minor in `(r, theta, w)`; the minor's eigenvalues are returned.
fn numeric_restricted(
    params: &PhysicalParams,
    location: &[f64; 4],
    h: f64,
    c: f64,
) -> [Complex64; 3] {
    let mut jac = [[0.0f64; 4]; 4];
    for col in 0..4 {
        let step = FD_STEP_SCALE * (1.0 + location[col].abs());
        let mut plus = *location;
        plus[col] += step;
        let mut minus = *location;
        minus[col] -= step;
        let f_plus = dynamics::rhs_regularized(params, &plus, h, c);
        let f_minus = dynamics::rhs_regularized(params, &minus, h, c);
        for row in 0..4 {
            jac[row][col] = (f_plus[row] - f_minus[row]) / (2.0 * step);
        }
    }
    let keep = [0usize, 2, 3];
    let minor = DMatrix::from_fn(3, 3, |i, j| jac[keep[i]][keep[j]]);
    let eig = minor.complex_eigenvalues();
    let mut out = [
        Complex64::new(eig[0].re, eig[0].im),
        Complex64::new(eig[1].re, eig[1].im),
        Complex64::new(eig[2].re, eig[2].im),
    ];
    sort_canonical(&mut out);
    out
}

/// Oscillatory pair at `P+-` and at the degenerate point `|c| = sqrt(2 u_max)`:
/// `+-sqrt((c^2 - G M^3 (gamma0 - 16 gamma))/u_max)` as a complex number.
fn p_pair_eigenvalue(params: &PhysicalParams, c: f64) -> Complex64 {
    let cp = potentials::critical_points(params);
    let arg = (c * c
        - params.g * params.m_outer.powi(3) * (params.gamma0 - 16.0 * params.gamma))
        / cp.u_max;
    Complex64::new(-arg, 0.0).sqrt()
}

fn lambda1_of(numeric: &[Complex64; 3]) -> f64 {
    numeric
        .iter()
        .max_by(|a, b| a.re.abs().total_cmp(&b.re.abs()))
        .map(|e| e.re)
        .unwrap_or(0.0)
}

/// Restricted spectrum of one census equilibrium.
///
/// The linearization at `r = 0` does not depend on the energy level; `h`
/// only parametrizes the field handed to the finite-difference check.
pub fn restricted_spectrum(
    params: &PhysicalParams,
    eq: &Equilibrium,
    h: f64,
    c: f64,
) -> Result<Spectrum, ManifoldError> {
    let (t1, t2) = momentum_thresholds(params);
    let cp = potentials::critical_points(params);
    match eq.kind {
        EquilibriumKind::BoundaryLine => Err(ManifoldError::BoundaryFamily),
        EquilibriumKind::PPlus | EquilibriumKind::PMinus => {
            if c.abs() > t2 {
                return Err(ManifoldError::OutsideWindow {
                    kind: "P",
                    c_abs: c.abs(),
                    limit: t2,
                });
            }
            let s = eq.kind.v_sign();
            let lambda1_jac = Complex64::new(2.0 - c * c / cp.u_max, 0.0).sqrt() * s;
            let gm3g0 = params.g * params.m_outer.powi(3) * params.gamma0;
            let lambda1_ratio = Complex64::new((gm3g0 - c * c) / gm3g0, 0.0).sqrt() * s;
            let pair = p_pair_eigenvalue(params, c);
            let mut closed = [lambda1_jac, pair, -pair];
            sort_canonical(&mut closed);
            let numeric = numeric_restricted(params, &eq.location, h, c);
            let lambda1_numeric = lambda1_of(&numeric);
            let matching = if (lambda1_numeric - lambda1_jac.re).abs()
                <= (lambda1_numeric - lambda1_ratio.re).abs()
            {
                Lambda1Form::JacobianForm
            } else {
                Lambda1Form::RatioForm
            };
            Ok(Spectrum {
                closed,
                numeric,
                dims: dims_of(&closed),
                lambda1: Some(Lambda1Comparison {
                    jacobian_form: lambda1_jac,
                    ratio_form: lambda1_ratio,
                    numeric: lambda1_numeric,
                    matching,
                }),
            })
        }
        _ => {
            if c.abs() >= t1 {
                return Err(ManifoldError::OutsideWindow {
                    kind: "E",
                    c_abs: c.abs(),
                    limit: t1,
                });
            }
            let s = eq.kind.v_sign();
            let theta0 = eq.location[2];
            let u0 = potentials::u_only(params, theta0);
            let ct = theta0.cos();
            let lambda1 = Complex64::new(s * e_point_v0(params, c) * ct * ct / u0.sqrt(), 0.0);
            let a = e_point_a(params, c);
            let pair = Complex64::new(a, 0.0).sqrt();
            let mut closed = [lambda1, pair, -pair];
            sort_canonical(&mut closed);
            let numeric = numeric_restricted(params, &eq.location, h, c);
            Ok(Spectrum {
                closed,
                numeric,
                dims: dims_of(&closed),
                lambda1: None,
            })
        }
    }
}

/// Census with spectra attached to every interior equilibrium.
pub fn equilibria_with_spectra(
    params: &PhysicalParams,
    h: f64,
    c: f64,
) -> Vec<Equilibrium> {
    let mut census = equilibria(params, c);
    for eq in &mut census {
        if eq.kind.is_interior() {
            eq.spectrum = restricted_spectrum(params, eq, h, c).ok();
        }
    }
    census
}

/// Spectrum at the degenerate point where the manifold sphere shrinks away,
/// `|c| = sqrt(2 u_max)`: the leading eigenvalue vanishes and the
/// oscillatory pair of the `P` family survives continuously.
pub fn special_point_spectrum(params: &PhysicalParams) -> Spectrum {
    let cp = potentials::critical_points(params);
    let c_star = (2.0 * cp.u_max).sqrt();
    let pair = p_pair_eigenvalue(params, c_star);
    let mut closed = [Complex64::new(0.0, 0.0), pair, -pair];
    sort_canonical(&mut closed);
    let location = [0.0, 0.0, 0.0, 0.0];
    let numeric = numeric_restricted(params, &location, -1.0, c_star);
    let gm3g0 = params.g * params.m_outer.powi(3) * params.gamma0;
    let ratio = Complex64::new((gm3g0 - c_star * c_star) / gm3g0, 0.0).sqrt();
    Spectrum {
        closed,
        numeric,
        dims: dims_of(&closed),
        lambda1: Some(Lambda1Comparison {
            jacobian_form: Complex64::new(0.0, 0.0),
            ratio_form: ratio,
            numeric: lambda1_of(&numeric),
            matching: Lambda1Form::JacobianForm,
        }),
    }
}

/// Angular linearization entry at the tilted equilibria:
/// `a = (U''(theta_0) cos^2(theta_0) - (c^2 - 2 U(theta_0)) cos(2 theta_0)) / U(theta_0)`.
///
/// Positive throughout the existence window, which makes the tilted
/// equilibria saddle points of the restricted flow.
pub fn e_point_a(params: &PhysicalParams, c: f64) -> f64 {
    let theta0 = e_point_theta0(params, c);
    let u0 = potentials::u_only(params, theta0);
    let ct = theta0.cos();
    let upp = potentials::u_second_derivative(params, theta0);
    (upp * ct * ct - (c * c - 2.0 * u0) * (2.0 * theta0).cos()) / u0
}

/// Alternative closed form of the angular linearization entry at the
/// tilted equilibria, written as a mass-weighted quotient over
/// [`e_point_denominator`]. Agrees with [`e_point_a`] in magnitude and
/// carries the opposite sign.
pub fn e_point_a_alternate(params: &PhysicalParams, c: f64) -> f64 {
    let mo = params.m_outer;
    let mm = params.m_middle;
    let theta0 = e_point_theta0(params, c);
    let (s, ct) = theta0.sin_cos();
    let c2 = ct * ct;
    let numerator = 16.0 * mo * mm * mm * (2.0 * mo + mm) * params.gamma * s * s * c2 * c2
        / (mo * c2 - mo - mm / 2.0).powi(2);
    numerator / e_point_denominator(params, c)
}

/// Sign certificate for the tilted equilibria, direct form:
/// `(M^2 gamma0 - 4 m^2 gamma) cos^2(theta_0) - M (M + m/2) gamma0`.
pub fn e_point_denominator(params: &PhysicalParams, c: f64) -> f64 {
    let mo = params.m_outer;
    let mm = params.m_middle;
    let ct = e_point_theta0(params, c).cos();
    (mo * mo * params.gamma0 - 4.0 * mm * mm * params.gamma) * ct * ct
        - mo * (mo + mm / 2.0) * params.gamma0
}

/// Sign certificate for the tilted equilibria with the tilt angle
/// substituted away; equals [`e_point_denominator`] and is negative on the
/// whole existence window.
pub fn e_point_denominator_closed(params: &PhysicalParams, c: f64) -> f64 {
    let g = params.g;
    let mo = params.m_outer;
    let mm = params.m_middle;
    let q = (16.0 * g * mo.powi(3) * params.gamma
        / (g * mo.powi(3) * params.gamma0 - c * c))
        .sqrt();
    -mm * (2.0 * mo + mm) * (8.0 * mm * params.gamma + mo * params.gamma0 * q)
        / (2.0 * (2.0 * mo + mm * q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p0() -> PhysicalParams {
        PhysicalParams::default()
    }

    #[test]
    fn thresholds_match_their_frozen_values() {
        let (t1, t2) = momentum_thresholds(&p0());
        assert_relative_eq!(t1, 31.6227766016838, max_relative = 1e-13);
        assert_relative_eq!(t2, 58.309518948453, max_relative = 1e-13);
    }

    #[test]
    fn census_momenta_classify_as_expected() {
        let p = p0();
        use CollisionTopology::*;
        for (c, expect) in [
            (0.0, SphereMinusFourPoints),
            (20.0, SphereMinusFourPoints),
            (31.0, SphereMinusFourPoints),
            (40.0, SpherePlusTwoLines),
            (58.0, SpherePlusTwoLines),
            (60.0, TwoLinesOnly),
        ] {
            assert_eq!(classify(&p, c).class, expect, "at c = {c}");
        }
    }

    #[test]
    fn classification_boundaries_are_honored() {
        let p = p0();
        let (t1, t2) = momentum_thresholds(&p);
        assert_eq!(classify(&p, t1).class, CollisionTopology::SphereMinusFourPoints);
        assert_eq!(
            classify(&p, t1 + 1e-9).class,
            CollisionTopology::SpherePlusTwoLines
        );
        assert_eq!(classify(&p, t2).class, CollisionTopology::PointPlusTwoLines);
        assert_eq!(
            classify(&p, t2 + 1e-9).class,
            CollisionTopology::TwoLinesOnly
        );
        assert_eq!(classify(&p, -20.0).class, CollisionTopology::SphereMinusFourPoints);
    }

    #[test]
    fn tilted_equilibrium_coordinates_match_their_frozen_values() {
        let p = p0();
        assert_relative_eq!(e_point_v0(&p, 0.0), 9.06719767109396, max_relative = 1e-13);
        assert_relative_eq!(
            e_point_theta0(&p, 0.0),
            0.4883844686036154,
            max_relative = 1e-13
        );
    }

    #[test]
    fn tilt_angle_coincides_with_the_w_critical_angle_at_zero_momentum() {
        let p = p0();
        let cp = potentials::critical_points(&p);
        assert_relative_eq!(e_point_theta0(&p, 0.0), cp.theta_w, max_relative = 1e-12);
    }

    #[test]
    fn census_counts_follow_the_momentum_windows() {
        let p = p0();
        for (c, interior) in [
            (0.0, 6),
            (20.0, 6),
            (31.0, 6),
            (40.0, 2),
            (58.0, 2),
            (60.0, 0),
        ] {
            let census = equilibria(&p, c);
            let n_interior = census.iter().filter(|e| e.kind.is_interior()).count();
            assert_eq!(n_interior, interior, "at c = {c}");
            assert_eq!(
                census.last().unwrap().kind,
                EquilibriumKind::BoundaryLine,
                "boundary marker is always last"
            );
        }
    }

    #[test]
    fn census_order_is_fixed() {
        let kinds: Vec<_> = equilibria(&p0(), 0.0).iter().map(|e| e.kind).collect();
        use EquilibriumKind::*;
        assert_eq!(
            kinds,
            vec![PPlus, PMinus, E1Plus, E1Minus, E2Plus, E2Minus, BoundaryLine]
        );
    }

    #[test]
    fn tilted_pairs_sit_at_opposite_angles() {
        let census = equilibria(&p0(), 10.0);
        let theta_of = |kind: EquilibriumKind| {
            census
                .iter()
                .find(|e| e.kind == kind)
                .map(|e| e.location[2])
                .unwrap()
        };
        assert!(theta_of(EquilibriumKind::E1Plus) < 0.0);
        assert!(theta_of(EquilibriumKind::E2Plus) > 0.0);
        assert_eq!(
            theta_of(EquilibriumKind::E1Plus),
            -theta_of(EquilibriumKind::E2Plus)
        );
    }

    #[test]
    fn the_field_vanishes_at_every_interior_equilibrium() {
        let p = p0();
        for c in [0.0, 20.0, 31.0, 40.0, 58.0] {
            for eq in equilibria(&p, c) {
                if !eq.kind.is_interior() {
                    continue;
                }
                let dy = dynamics::rhs_regularized(&p, &eq.location, -1.0, c);
                for component in dy {
                    assert!(
                        component.abs() <= 1e-9,
                        "field residual {component:.3e} at {:?}, c = {c}",
                        eq.kind
                    );
                }
            }
        }
    }

    #[test]
    fn upright_spectrum_matches_closed_forms_and_frozen_values() {
        let p = p0();
        let census = equilibria(&p, 0.0);
        let spec = restricted_spectrum(&p, &census[0], -1.0, 0.0).unwrap();
        let cmp = spec.lambda1.unwrap();
        assert_relative_eq!(cmp.jacobian_form.re, 2f64.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(cmp.ratio_form.re, 1.0, max_relative = 1e-13);
        assert_eq!(cmp.matching, Lambda1Form::JacobianForm);
        assert!((cmp.numeric - 2f64.sqrt()).abs() <= 1e-7);
        let pair_im = spec
            .closed
            .iter()
            .map(|e| e.im.abs())
            .fold(0.0f64, f64::max);
        assert_relative_eq!(pair_im, 5.25804705413801, max_relative = 1e-12);
        for (a, b) in spec.closed.iter().zip(spec.numeric.iter()) {
            assert!((a.re - b.re).abs() <= 1e-6);
            assert!((a.im - b.im).abs() <= 1e-6);
        }
        assert_eq!(
            spec.dims,
            Dims {
                unstable: 1,
                stable: 0,
                center: 2
            }
        );
    }

    #[test]
    fn downward_upright_equilibrium_mirrors_the_dims() {
        let p = p0();
        let census = equilibria(&p, 40.0);
        let spec = restricted_spectrum(&p, &census[1], -1.0, 40.0).unwrap();
        assert_eq!(
            spec.dims,
            Dims {
                unstable: 0,
                stable: 1,
                center: 2
            }
        );
    }

    #[test]
    fn tilted_spectrum_matches_closed_forms_and_frozen_values() {
        let p = p0();
        let census = equilibria(&p, 0.0);
        let e1_plus = census
            .iter()
            .find(|e| e.kind == EquilibriumKind::E1Plus)
            .unwrap();
        let spec = restricted_spectrum(&p, e1_plus, -1.0, 0.0).unwrap();
        let real_parts: Vec<f64> = spec.closed.iter().map(|e| e.re).collect();
        assert!(real_parts.iter().any(|&x| (x - 0.27252811333008).abs() <= 1e-9));
        assert!(real_parts
            .iter()
            .any(|&x| (x - 2.25479745348933).abs() <= 1e-9));
        assert!(real_parts
            .iter()
            .any(|&x| (x + 2.25479745348933).abs() <= 1e-9));
        assert!(spec.closed.iter().all(|e| e.im == 0.0));
        for (a, b) in spec.closed.iter().zip(spec.numeric.iter()) {
            assert!((a.re - b.re).abs() <= 1e-6);
            assert!((a.im - b.im).abs() <= 1e-6);
        }
        assert_eq!(
            spec.dims,
            Dims {
                unstable: 2,
                stable: 1,
                center: 0
            }
        );
    }

    #[test]
    fn all_four_tilted_equilibria_share_the_pair_and_flip_lambda1() {
        let p = p0();
        let c = 10.0;
        let census = equilibria(&p, c);
        let spec_of = |kind| {
            let eq = census.iter().find(|e| e.kind == kind).unwrap();
            restricted_spectrum(&p, eq, -1.0, c).unwrap()
        };
        let plus = spec_of(EquilibriumKind::E1Plus);
        let minus = spec_of(EquilibriumKind::E1Minus);
        assert_eq!(
            plus.dims,
            Dims {
                unstable: 2,
                stable: 1,
                center: 0
            }
        );
        assert_eq!(
            minus.dims,
            Dims {
                unstable: 1,
                stable: 2,
                center: 0
            }
        );
        let mirrored = spec_of(EquilibriumKind::E2Plus);
        for (a, b) in plus.closed.iter().zip(mirrored.closed.iter()) {
            assert_relative_eq!(a.re, b.re, epsilon = 1e-12);
            assert_relative_eq!(a.im, b.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn linearization_entry_matches_a_finite_difference_of_the_field() {
        let p = p0();
        for c in [0.0, 10.0, 25.0] {
            let theta0 = e_point_theta0(&p, c);
            let step = 1e-6;
            let f = |theta: f64| {
                dynamics::rhs_collision_manifold(&p, &[0.0, theta, 0.0], c)[2]
            };
            let fd = (f(theta0 + step) - f(theta0 - step)) / (2.0 * step);
            let a = e_point_a(&p, c);
            assert!(
                (a - fd).abs() <= 1e-5 * (1.0 + a.abs()),
                "c = {c}: closed {a} vs finite difference {fd}"
            );
            assert!(a > 0.0);
        }
    }

    #[test]
    fn alternate_linearization_entry_has_equal_magnitude_and_opposite_sign() {
        let p = p0();
        for c in [0.0, 5.0, 15.0, 28.0] {
            let a = e_point_a(&p, c);
            let alt = e_point_a_alternate(&p, c);
            assert!(
                (a + alt).abs() <= 1e-8 * a.abs(),
                "c = {c}: {a} vs {alt}"
            );
        }
        assert_relative_eq!(
            e_point_a_alternate(&p0(), 0.0),
            -5.08411155626198,
            max_relative = 1e-11
        );
    }

    #[test]
    fn sign_certificate_forms_agree_and_stay_negative_on_the_window() {
        let p = p0();
        let (t1, _) = momentum_thresholds(&p);
        for i in 0..50 {
            let c = 0.999 * t1 * (i as f64) / 49.0;
            let direct = e_point_denominator(&p, c);
            let closed = e_point_denominator_closed(&p, c);
            assert!(
                (direct - closed).abs() <= 1e-8 * direct.abs(),
                "c = {c}: {direct} vs {closed}"
            );
            assert!(direct < 0.0, "certificate must be negative, c = {c}");
        }
        assert_relative_eq!(
            e_point_denominator(&p0(), 0.0),
            -36.3730669589464,
            max_relative = 1e-12
        );
    }

    #[test]
    fn degenerate_point_spectrum_has_a_vanishing_lead_and_the_continued_pair() {
        let p = p0();
        let spec = special_point_spectrum(&p);
        let lead = spec.lambda1.unwrap();
        assert_eq!(lead.jacobian_form.re, 0.0);
        assert!(lead.numeric.abs() <= 1e-6);
        let pair_im = spec
            .closed
            .iter()
            .map(|e| e.im.abs())
            .fold(0.0f64, f64::max);
        assert_relative_eq!(pair_im, 5.44491127783818, max_relative = 1e-12);
        for (a, b) in spec.closed.iter().zip(spec.numeric.iter()) {
            assert!((a.re - b.re).abs() <= 1e-6);
            assert!((a.im - b.im).abs() <= 1e-6);
        }
        assert_eq!(
            spec.dims,
            Dims {
                unstable: 0,
                stable: 0,
                center: 3
            }
        );
    }

    #[test]
    fn spectrum_requests_outside_the_windows_error() {
        let p = p0();
        let census_inside = equilibria(&p, 0.0);
        let e_eq = census_inside
            .iter()
            .find(|e| e.kind == EquilibriumKind::E1Plus)
            .unwrap();
        let err = restricted_spectrum(&p, e_eq, -1.0, 40.0).unwrap_err();
        assert!(matches!(err, ManifoldError::OutsideWindow { kind: "E", .. }));
        let p_eq = &census_inside[0];
        let err = restricted_spectrum(&p, p_eq, -1.0, 70.0).unwrap_err();
        assert!(matches!(err, ManifoldError::OutsideWindow { kind: "P", .. }));
        let boundary = census_inside.last().unwrap();
        let err = restricted_spectrum(&p, boundary, -1.0, 0.0).unwrap_err();
        assert_eq!(err, ManifoldError::BoundaryFamily);
    }

    #[test]
    fn section_curve_matches_the_level_relation_and_turning_angle() {
        let p = p0();
        let c = 40.0;
        let curve = section_curve(&p, 0.0, c, 2001);
        assert!(!curve.is_empty());
        for &(theta, w) in &curve {
            let expected = dynamics::w_squared_on_level(&p, 0.0, 0.0, theta, -1.0, c);
            assert!((w * w - expected).abs() <= 1e-10 * (1.0 + expected.abs()));
            assert!(theta.abs() <= 0.36136712390670783 + 2e-3);
        }
        let w_at = |target: f64| {
            curve
                .iter()
                .filter(|(t, w)| (t - target).abs() < 8e-4 && *w > 0.0)
                .map(|&(_, w)| w)
                .next()
        };
        if let Some(w) = w_at(0.3) {
            assert!((w - 0.447820703626467).abs() <= 5e-3);
        }
    }

    #[test]
    fn equilibria_with_spectra_attaches_only_interior_spectra() {
        let p = p0();
        let census = equilibria_with_spectra(&p, -1.0, 20.0);
        for eq in &census {
            assert_eq!(eq.spectrum.is_some(), eq.kind.is_interior());
        }
    }
}
