//! Numerical geometry of fractional Sobolev seminorms.
//!
//! The crate evaluates star bodies and their dual mixed volumes, symmetric
//! decreasing rearrangements of grid functions, anisotropic fractional L_p
//! seminorms, and fractional L_p polar projection bodies. The [`verify`]
//! module strings these together into the affine Pólya–Szegő chains and
//! reports each inequality with an uncertainty derived from grid refinement.

pub mod affine;
pub mod error;
pub mod grid;
pub mod params;
pub mod projbody;
pub mod quadrature;
pub mod rearrange;
pub mod reduce;
pub mod seminorm;
pub mod spec;
pub mod verify;
pub mod starbody;

pub use affine::AffineMap;
pub use error::{Error, Result};
pub use grid::GridFunction;
pub use params::{validate_params, Params};
pub use quadrature::SphereQuadrature;
pub use spec::FunctionSpec;
pub use starbody::StarBody;
