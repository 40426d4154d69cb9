//! Numerical laboratory for the 3D axisymmetric model with the convection
//! term dropped:
//!
//! ```text
//! u_t = 2 u psi_z,    -Delta psi_t = (u^2)_z
//! ```
//!
//! on `(0,a)^2 x (0,b)` or a truncated half-slab, with Robin, Neumann,
//! Dirichlet or periodic conditions on the z-faces and homogeneous Dirichlet
//! data on the side walls. Variants cover partial viscosity, a sign-flipped
//! Laplacian and a small-box regularity regime. The [`diagnostics`] module
//! measures the weighted identities and blowup bounds on running solutions.

pub mod diagnostics;
pub mod dynamics;
pub mod elliptic;
pub mod error;
pub mod grid;
pub mod harness;
pub mod transform;

pub use error::{Error, Result};
