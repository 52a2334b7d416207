//! Solvers for the time-fractional subdiffusion equation
//! `∂_t^ρ u + A u = f` with a Riemann-Liouville derivative of order `ρ ∈ (0, 1)`,
//! posed in the eigenbasis of a positive self-adjoint operator `A`.

pub mod backward;
pub mod dd;
pub mod error;
pub mod forward;
pub mod fracops;
pub mod gamma;
pub mod mlf;
pub mod spectral;
pub mod timefn;

pub use error::{Error, GammaError, Result};
pub use mlf::{kernel, kernel_dm, mlf, FractionalOrder, MittagLeffler, MlfConfig};
pub use spectral::{CoefVector, Spectrum};

/// Decimal with 17 significant digits, the CSV number format used throughout.
pub fn fmt_sig17(x: f64) -> String {
    format!("{x:.16e}")
}
