//! Critical thickness, least-energy equilibria and hydrodynamic relaxation
//! of a nematic film with a strong field, planar anchoring on one wall and
//! weak homeotropic (Rapini–Papoular) anchoring on the other.

// NaN-rejecting `!(x > 0.0)` tests and index loops over stencils are intended.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod calculus;
pub mod eigen;
pub mod equilibrium;
pub mod error;
pub mod field;
pub mod flow;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod params;
pub mod spectral;
pub mod tol;

pub use error::{PhanError, Result};
pub use field::{AngleField, PressureField, Profile, VelocityField};
pub use grid::{make_grid, Grid};
pub use params::{validate_params, PhysParams};
