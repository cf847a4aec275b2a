//! Numerical toolkit for the Sturm–Liouville operator with frozen argument
//!
//! ```text
//! -y''(x) + q(x) y(a) = λ y(x),   x ∈ (0, π),
//! y^(α)(0) = y^(β)(π) = 0,        α, β ∈ {0, 1}.
//! ```
//!
//! The crate computes spectra from potentials ([`forward`]), recovers potentials
//! from spectra plus the coefficients the spectrum cannot see ([`inverse`]), and
//! runs randomized experiments that measure the Lipschitz constant of the inverse
//! map ([`stability`]). [`oracle`] is an independent finite-difference eigenvalue
//! solver used for cross-checks only.

pub mod charfn;
pub mod cli;
pub mod error;
pub mod forward;
pub mod inverse;
pub mod io;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod stability;

pub use error::{Error, Result};
pub use model::{
    Bc, BvpConfig, IndexClassification, Potential, SpectralInput, Spectrum, SplitPoint,
};

pub use num_complex::Complex64;
