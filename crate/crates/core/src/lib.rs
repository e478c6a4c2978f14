//! Transport-type BGN parametric finite elements for closed planar curves.
//!
//! A closed curve is discretized by isoparametric elements of degree `k`
//! over frozen flat reference segments. Each time step solves one linear
//! system for the new node positions and a curvature multiplier: the normal
//! velocity follows the prescribed field exactly at the nodes while the
//! tangential motion is chosen implicitly, which keeps nodes well spread.
//!
//! Besides the solver, the crate carries the closed-form flow of a radial
//! test field and the diagnostics needed to measure convergence against it.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod flows;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod output;
pub mod point;
pub mod quadrature;
pub mod selftest;
pub mod solver;
pub mod stiffness;

pub use error::{Error, Result};
pub use flows::{EllipseRadialFlow, VelocityField};
pub use mesh::{Circle, ClosedCurve, CurveMesh, Ellipse};
pub use point::Vec2;
pub use solver::{bgn_step, lagrangian_step, Stepper};
