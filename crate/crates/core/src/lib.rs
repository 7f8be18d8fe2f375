//! Numerical toolkit for a cavity mode coupled quadratically to a mechanical
//! resonator, `H = ω_c a†a + Ω b†b + g (a†a + ½)(b + b†)²`.
//!
//! Frequencies are measured in units of the bare mechanical frequency `Ω`
//! (so `Ω = 1` in every scenario shipped with the crate) and times in `1/Ω`.
//! The driven-cavity module is the exception: there everything is in units of
//! the cavity linewidth `κ`.
//!
//! Module map:
//!
//! * [`fock`]: truncated Fock-space states, operators, tensor products and
//!   matrix functions.
//! * [`closed`]: exact photon-sector diagonalisation, collapse/revival
//!   observables.
//! * [`phase_space`]: Husimi Q snapshots of the mechanical state.
//! * [`zpe`]: multimode zero-point-energy frequency shift.
//! * [`driven`]: steady-state transmission of the weakly driven cavity,
//!   phonon-statistics extraction and transmission thermometry.

pub mod closed;
pub mod driven;
pub mod error;
pub mod fock;
pub mod phase_space;
pub mod sum;
pub mod zpe;

pub use error::{Error, Result};
pub use fock::{
    DenseOperator, QuantumState, StateSpec, SystemParams, Tensor,
};
pub use num_complex::Complex64;

/// Version string stamped into every emitted file header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
