//! Default tolerances and iteration caps.

pub const TOL_ROOT: f64 = 1e-12;
pub const EIGEN_TOL: f64 = 1e-10;
pub const EIGEN_CAP: usize = 10_000;
pub const MONOTONE_TOL: f64 = 1e-10;
pub const MONOTONE_CAP: usize = 100_000;
pub const DESCENT_CAP: usize = 2_000_000;
/// BVP residual accepted for an equilibrium handed to the stability solver.
pub const TOL_EQ: f64 = 1e-6;
pub const TOL_CONV: f64 = 1e-8;
/// Max-principle slack.
pub const TOL_MP: f64 = 1e-8;
pub const TOL_DIV: f64 = 1e-10;
/// Pointwise slack for the ordering chain of the monotone iteration.
pub const ORDER_SLACK: f64 = 1e-12;
