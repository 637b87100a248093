//! Numerical toolkit for quadrature domains in one and several complex
//! variables.

pub mod error;
pub mod expr;
pub mod gauss;
pub mod geometry;
pub mod homotopy;
pub mod jets;
pub mod kernels;
pub mod maps;
pub mod par;
pub mod qmc;
pub mod span;
pub mod transport;
pub mod verify;

pub use error::{QdError, Result};
pub use num_complex::Complex64 as C64;
