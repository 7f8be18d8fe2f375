//! Mechanical frequency shift from the zero-point energy of many optical
//! modes.
//!
//! With `g(a†a + ½) → Σ_j g_j (a_j†a_j + ½)` the dressed mechanical
//! frequency becomes `√(Ω² + 4Ω Σ_j g_j (n_j + ½))`. Moving the membrane from
//! the cavity centre (even modes coupled) to the end mirror (couplings
//! vanish) changes the frequency by `G = 2 Σ_{j even} g_j` to first order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeCoupling {
    pub index: usize,
    pub coupling: f64,
    pub parity: Parity,
    #[serde(default)]
    pub occupancy: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultimodeConfig {
    pub modes: Vec<ModeCoupling>,
    /// Mechanical linewidth `Γ`.
    pub mech_linewidth: f64,
    /// Couplings left at the end-mirror position; empty means none.
    #[serde(default)]
    pub residual: Vec<f64>,
}

impl MultimodeConfig {
    pub fn new(modes: Vec<ModeCoupling>, mech_linewidth: f64) -> Result<Self> {
        let c = MultimodeConfig {
            modes,
            mech_linewidth,
            residual: Vec::new(),
        };
        c.validate()?;
        Ok(c)
    }

    /// `count` even modes of equal coupling in their vacuum.
    pub fn uniform_even(count: usize, coupling: f64, mech_linewidth: f64) -> Result<Self> {
        Self::new(
            (0..count)
                .map(|j| ModeCoupling {
                    index: 2 * j,
                    coupling,
                    parity: Parity::Even,
                    occupancy: 0,
                })
                .collect(),
            mech_linewidth,
        )
    }

    pub fn validate(&self) -> Result<()> {
        for m in &self.modes {
            if !(m.coupling.is_finite() && m.coupling >= 0.0) {
                return Err(Error::param("coupling", format!("mode {}: must be finite and >= 0", m.index)));
            }
        }
        if self.residual.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::param("residual", "couplings must be finite and >= 0"));
        }
        if !(self.mech_linewidth.is_finite() && self.mech_linewidth > 0.0) {
            return Err(Error::param("mech_linewidth", "must be finite and > 0"));
        }
        Ok(())
    }

    fn even_sum(&self) -> f64 {
        self.modes
            .iter()
            .filter(|m| m.parity == Parity::Even)
            .map(|m| m.coupling)
            .sum()
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::param("omega", "must be finite and > 0"));
    }
    Ok(())
}

fn root(radicand: f64) -> Result<f64> {
    if radicand > 0.0 {
        Ok(radicand.sqrt())
    } else {
        Err(Error::UnphysicalConfiguration(radicand))
    }
}

/// `√(Ω² + 4Ω Σ_j g_j (n_j + ½))` over every mode, regardless of parity.
pub fn dressed_mech_freq_multimode(omega: f64, config: &MultimodeConfig) -> Result<f64> {
    check_omega(omega)?;
    config.validate()?;
    let s: f64 = config
        .modes
        .iter()
        .map(|m| m.coupling * (m.occupancy as f64 + 0.5))
        .sum();
    root(omega * omega + 4.0 * omega * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyDifference {
    /// `G = 2 Σ_{even} g_j`.
    pub first_order: f64,
    /// `√(Ω² + 4Ω Σ_{even} g_j) − √(Ω² + 4Ω Σ residual)`; agrees with `G` to
    /// within `(2 Σ g_j)²/(2Ω)`.
    pub exact: f64,
    /// Shift of the dressed frequency with the even modes in their vacuum,
    /// `√(Ω² + 2Ω Σ_{even} g_j) − √(Ω² + 2Ω Σ residual)`, i.e. `≈ G/2`.
    pub vacuum_dressed: f64,
}

pub fn zpe_frequency_difference(omega: f64, config: &MultimodeConfig) -> Result<FrequencyDifference> {
    check_omega(omega)?;
    config.validate()?;
    let s = config.even_sum();
    let r: f64 = config.residual.iter().sum();
    let w2 = omega * omega;
    Ok(FrequencyDifference {
        first_order: 2.0 * s,
        exact: root(w2 + 4.0 * omega * s)? - root(w2 + 4.0 * omega * r)?,
        vacuum_dressed: root(w2 + 2.0 * omega * s)? - root(w2 + 2.0 * omega * r)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub mech_freq: f64,
    pub even_modes: usize,
    pub g_total: f64,
    pub exact_shift: f64,
    pub vacuum_dressed_shift: f64,
    pub linewidth: f64,
    pub ratio: f64,
    pub feasible: bool,
    /// Couplings scale as `x_zpm² ∝ 1/Ω`.
    pub scaling_note: String,
}

impl FeasibilityReport {
    pub fn to_text(&self) -> String {
        format!(
            "mechanical frequency   {:.6e}\n\
             even modes             {}\n\
             G (first order)        {:.6e}\n\
             exact difference       {:.6e}\n\
             vacuum dressed shift   {:.6e}\n\
             linewidth              {:.6e}\n\
             G / linewidth          {:.6e}\n\
             verdict                {}\n\
             note                   {}\n",
            self.mech_freq,
            self.even_modes,
            self.g_total,
            self.exact_shift,
            self.vacuum_dressed_shift,
            self.linewidth,
            self.ratio,
            if self.feasible { "feasible" } else { "not feasible" },
            self.scaling_note,
        )
    }
}

pub fn feasibility_report(omega: f64, config: &MultimodeConfig) -> Result<FeasibilityReport> {
    let d = zpe_frequency_difference(omega, config)?;
    let ratio = d.first_order / config.mech_linewidth;
    Ok(FeasibilityReport {
        mech_freq: omega,
        even_modes: config.modes.iter().filter(|m| m.parity == Parity::Even).count(),
        g_total: d.first_order,
        exact_shift: d.exact,
        vacuum_dressed_shift: d.vacuum_dressed,
        linewidth: config.mech_linewidth,
        ratio,
        feasible: ratio > 1.0,
        scaling_note: "g_j ∝ x_zpm² ∝ 1/Ω: lowering Ω raises G; see rescale_couplings".into(),
    })
}

/// Couplings rescaled for a resonator of frequency `new_omega`, assuming
/// `g ∝ 1/Ω`.
pub fn rescale_couplings(config: &MultimodeConfig, omega: f64, new_omega: f64) -> Result<MultimodeConfig> {
    check_omega(omega)?;
    check_omega(new_omega)?;
    let f = omega / new_omega;
    let mut out = config.clone();
    out.modes.iter_mut().for_each(|m| m.coupling *= f);
    out.residual.iter_mut().for_each(|g| *g *= f);
    out.validate()?;
    Ok(out)
}

/// Feasibility along a sweep of membrane positions with user-supplied
/// couplings `g_j(position)`.
pub fn sweep_positions<F>(omega: f64, positions: &[f64], couplings: F) -> Result<Vec<(f64, FeasibilityReport)>>
where
    F: Fn(f64) -> Result<MultimodeConfig>,
{
    positions
        .iter()
        .map(|&x| Ok((x, feasibility_report(omega, &couplings(x)?)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed::dressed_sector;
    use crate::fock::SystemParams;

    fn mode(index: usize, coupling: f64, parity: Parity, occupancy: u64) -> ModeCoupling {
        ModeCoupling {
            index,
            coupling,
            parity,
            occupancy,
        }
    }

    #[test]
    fn no_modes() {
        let c = MultimodeConfig::new(vec![], 1.0).unwrap();
        assert_eq!(dressed_mech_freq_multimode(2.5, &c).unwrap(), 2.5);
        let d = zpe_frequency_difference(2.5, &c).unwrap();
        assert_eq!(d.first_order, 0.0);
        assert_eq!(d.exact, 0.0);
    }

    #[test]
    fn single_mode_reduces_to_sector_frequency() {
        for (g, n) in [(0.01, 0), (0.01, 7), (0.3, 40)] {
            let c = MultimodeConfig::new(vec![mode(0, g, Parity::Even, n)], 1.0).unwrap();
            let w = dressed_mech_freq_multimode(1.0, &c).unwrap();
            let p = SystemParams::with_coupling(g, 1, 1).unwrap();
            let s = dressed_sector(&p, n as usize).unwrap();
            assert!((w / s.dressed_freq - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn two_vacuum_modes_first_order() {
        let c = MultimodeConfig::new(
            vec![mode(0, 1e-3, Parity::Even, 0), mode(1, 1e-3, Parity::Odd, 0)],
            1.0,
        )
        .unwrap();
        let w = dressed_mech_freq_multimode(1.0, &c).unwrap();
        let s = 2e-3;
        assert!(((w - 1.0) - s).abs() < s * s / 2.0 * 1.01);
    }

    #[test]
    fn uniform_even_modes() {
        let g = 1e-5;
        let c = MultimodeConfig::uniform_even(100, g, 1.0).unwrap();
        let d = zpe_frequency_difference(1.0, &c).unwrap();
        assert!((d.first_order - 200.0 * g).abs() < 1e-15);
        let bound = (2.0 * 100.0 * g).powi(2) / 2.0;
        assert!((d.exact - d.first_order).abs() <= bound * (1.0 + 1e-6));
        assert!((d.vacuum_dressed - 0.5 * d.first_order).abs() < bound);
    }

    #[test]
    fn odd_modes_do_not_count() {
        let c = MultimodeConfig::new(vec![mode(1, 0.1, Parity::Odd, 0)], 1.0).unwrap();
        assert_eq!(zpe_frequency_difference(1.0, &c).unwrap().first_order, 0.0);
    }

    #[test]
    fn feasibility_rule() {
        let c = MultimodeConfig::new(vec![mode(0, 5e-6, Parity::Even, 0)], 1e-6).unwrap();
        let r = feasibility_report(1.0, &c).unwrap();
        assert!((r.ratio - 10.0).abs() < 1e-9);
        assert!(r.feasible);
        let c = MultimodeConfig::new(vec![mode(0, 0.25, Parity::Even, 0)], 1.0).unwrap();
        assert!(!feasibility_report(1.0, &c).unwrap().feasible);
        let c = MultimodeConfig::new(vec![mode(0, 1.0, Parity::Even, 0)], 1.0).unwrap();
        assert!(feasibility_report(1.0, &c).unwrap().feasible);
    }

    #[test]
    fn rescaling_scales_inversely() {
        let c = MultimodeConfig::uniform_even(3, 1e-4, 1e-3).unwrap();
        let r = rescale_couplings(&c, 1.0, 0.5).unwrap();
        assert!(r.modes.iter().all(|m| (m.coupling - 2e-4).abs() < 1e-18));
    }

    #[test]
    fn unphysical_radicand() {
        // negative couplings are rejected up front
        let c = MultimodeConfig {
            modes: vec![mode(0, -1.0, Parity::Even, 0)],
            mech_linewidth: 1.0,
            residual: vec![],
        };
        assert!(dressed_mech_freq_multimode(1.0, &c).is_err());
    }

    #[test]
    fn sweep_uses_closure() {
        let out = sweep_positions(1.0, &[0.0, 0.5], |x| MultimodeConfig::uniform_even(1, x, 0.1)).unwrap();
        assert!(!out[0].1.feasible);
        assert!(out[1].1.feasible);
    }
}
