//! Mesoscale description of vortex nucleation in a pinned superconductor.
//!
//! The crate solves the limiting variational problem attached to a
//! two-phase pinning landscape: a domain Ω with an inclusion S₁ where the
//! pinning coefficient is 1, surrounded by S₂ where it is `a`. For an applied
//! field ratio λ it computes
//!
//! * the limit field h₀ of the vortex-free state and the field h_μ induced by
//!   a vorticity density μ (London-type equation −div((1/p)∇h) + h = μ);
//! * the obstacle-problem minimizer h★ with lower obstacle 1 − p/(2λ), the
//!   limiting vorticity μ★ = −div((1/p)∇h★) + h★, its coincidence sets
//!   w¹, w² per region, and the critical thresholds λ₁, λ₂, λ₀;
//! * the equivalent box-constrained dual problem (|v| ≤ p/(2λ)) used as a
//!   cross-check — discretizations are arranged so that finite-dimensional
//!   duality is exact and the two solvers agree to solver tolerance;
//! * the explicit radial solution on the unit disc (power series + shooting);
//! * a finite-width verification track: the positive boundary-layer
//!   minimizer u_ε of the scalar Ginzburg-Landau energy, its decay rate, the
//!   1/ε energy scaling, and the homogenization of the weighted Green
//!   function toward the pinned one.
//!
//! Modules mirror that split: [`geometry`], [`elliptic`], [`fields`],
//! [`obstacle`], [`radial`], [`finite_eps`], with [`io`] for CSV/JSON
//! artifacts and [`acceptance`] for the end-to-end verification suite.

pub mod acceptance;
pub mod elliptic;
pub mod error;
pub mod fields;
pub mod finite_eps;
pub mod geometry;
pub mod io;
pub mod obstacle;
pub mod radial;
pub mod util;

pub use error::{Error, Result};
pub use geometry::{build_grid, pinning_field, DomainSpec, Grid2D, PinningField, Region, ScalarField};
