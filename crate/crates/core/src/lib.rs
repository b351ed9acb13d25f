//! Spatial isosceles three-body problem under a Manev-type potential.
//!
//! Two equal masses move symmetrically in a horizontal plane while a third
//! mass oscillates on the vertical axis through their midpoint. After
//! reduction by the rotational symmetry the system has two degrees of
//! freedom; a McGehee-style change of variables blows up the triple
//! collision into an invariant boundary (the collision manifold) on which
//! the flow extends smoothly.
//!
//! The crate provides:
//! - validated physical parameters ([`params`]),
//! - the angular potentials `V`, `W`, `U` and their critical points
//!   ([`potentials`]),
//! - transforms between cylindrical and McGehee coordinates plus energy
//!   diagnostics ([`coords`]),
//! - adaptive integration of the flow in four equivalent formulations
//!   ([`dynamics`]),
//! - collision-manifold topology, equilibria, and restricted spectra
//!   ([`manifold`]),
//! - homographic (planar, `Z = 0`) motions and their periods
//!   ([`homographic`]),
//! - deterministic parameter sweeps ([`sweep`]),
//! - fixed-precision output formatting ([`outfmt`]).

pub mod coords;
pub mod dynamics;
pub mod homographic;
pub mod manifold;
pub mod outfmt;
pub mod params;
pub mod potentials;
pub mod sweep;

mod rk;
