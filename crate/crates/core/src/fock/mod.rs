//! Truncated Fock-space foundation shared by every other module.
//!
//! Product spaces are always ordered photon ⊗ phonon, and a joint basis
//! index is `n * phonon_cutoff + k`.

mod expm;
mod operator;
mod state;

pub use expm::expm;
pub use operator::{
    annihilation, creation, hermitian_exponential, identity, make_annihilation,
    matrix_exponential, momentum, number, position, DenseOperator, Tensor,
};
pub use state::{
    coherent_amplitudes, make_state, minimal_cutoff, number_distribution, recommended_cutoff,
    QuantumState, Representation, StateSpec, MASS_CAPTURE,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the closed system in units of `Ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub mech_freq: f64,
    pub cav_freq: f64,
    pub coupling: f64,
    pub photon_cutoff: usize,
    pub phonon_cutoff: usize,
}

impl SystemParams {
    pub fn new(
        mech_freq: f64,
        cav_freq: f64,
        coupling: f64,
        photon_cutoff: usize,
        phonon_cutoff: usize,
    ) -> Result<Self> {
        let p = SystemParams {
            mech_freq,
            cav_freq,
            coupling,
            photon_cutoff,
            phonon_cutoff,
        };
        p.validate()?;
        Ok(p)
    }

    /// `Ω = 1`, `ω_c = 0` (the photon phase is a global factor in every
    /// observable computed here).
    pub fn with_coupling(coupling: f64, photon_cutoff: usize, phonon_cutoff: usize) -> Result<Self> {
        Self::new(1.0, 0.0, coupling, photon_cutoff, phonon_cutoff)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mech_freq.is_finite() && self.mech_freq > 0.0) {
            return Err(Error::param("mech_freq", "must be finite and > 0"));
        }
        if !(self.cav_freq.is_finite() && self.cav_freq >= 0.0) {
            return Err(Error::param("cav_freq", "must be finite and >= 0"));
        }
        if !(self.coupling.is_finite() && self.coupling >= 0.0) {
            return Err(Error::param("coupling", "must be finite and >= 0"));
        }
        if self.photon_cutoff == 0 {
            return Err(Error::InvalidDimension("photon cutoff must be >= 1".into()));
        }
        if self.phonon_cutoff == 0 {
            return Err(Error::InvalidDimension("phonon cutoff must be >= 1".into()));
        }
        Ok(())
    }

    /// Upper bound `Ω/g` on the intracavity photon number for which the
    /// number-conserving (RWA) interaction is a good approximation.
    pub fn weak_drive_limit(&self) -> f64 {
        if self.coupling == 0.0 {
            f64::INFINITY
        } else {
            self.mech_freq / self.coupling
        }
    }

    /// `true` when `|α|² ≪ Ω/g` holds with margin 0.1.
    pub fn is_weak_drive(&self, photon_number: f64) -> bool {
        photon_number * self.coupling / self.mech_freq <= 0.1
    }
}
