//! Phonon statistics from a resolved transmission spectrum.

use num_complex::Complex64;
use serde::Serialize;

use super::{DriveParams, PhononDistribution, TransmissionTrace};
use crate::error::{Error, Result};

/// Minimum prominence of a peak relative to the trace maximum.
pub const MIN_PROMINENCE: f64 = 1e-4;
const REFINE_SWEEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    /// Interpolated position of the maximum.
    pub position: f64,
    pub height: f64,
    pub prominence: f64,
    /// Nearest sector `n = round(Δ/2g)`.
    pub sector: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extraction {
    pub distribution: PhononDistribution,
    pub peaks: Vec<Peak>,
    /// `|t|²` sampled at `Δ = 2gn` for every sector considered.
    pub sector_heights: Vec<f64>,
    /// Estimate from `√height` alone, before the overlap correction.
    pub raw: Vec<f64>,
    pub sweeps: usize,
}

fn find_peaks(trace: &TransmissionTrace) -> Vec<(usize, f64, f64, f64)> {
    let y = &trace.values;
    let x = &trace.detunings;
    let top = trace.max();
    let mut out = Vec::new();
    for k in 1..y.len().saturating_sub(1) {
        if !(y[k] > y[k - 1] && y[k] >= y[k + 1]) {
            continue;
        }
        // prominence: height above the higher of the two flanking minima,
        // each taken up to the next higher sample
        let mut left = y[k];
        for j in (0..k).rev() {
            if y[j] > y[k] {
                break;
            }
            left = left.min(y[j]);
        }
        let mut right = y[k];
        for v in &y[k + 1..] {
            if *v > y[k] {
                break;
            }
            right = right.min(*v);
        }
        let prominence = y[k] - left.max(right);
        if prominence < MIN_PROMINENCE * top {
            continue;
        }
        let denom = y[k - 1] - 2.0 * y[k] + y[k + 1];
        let shift = if denom < 0.0 {
            0.5 * (y[k - 1] - y[k + 1]) / denom
        } else {
            0.0
        };
        let pos = x[k] + shift * (x[k + 1] - x[k]);
        let height = y[k] - 0.25 * (y[k - 1] - y[k + 1]) * shift;
        out.push((k, pos, height, prominence));
    }
    out
}

/// Recovers `p_n` from the peak heights of a resolved spectrum.
///
/// The height at `Δ = 2gn` is `(κ_e/κ)²|p_n + c_n|²`, where `c_n` collects the
/// Lorentzian tails of the other sectors. Starting from `p_n = √height`, the
/// estimate is refined by solving that relation for `p_n` with `c_n`
/// evaluated from the current estimates, then renormalised.
pub fn extract_statistics(trace: &TransmissionTrace, drive: &DriveParams, g: f64) -> Result<Extraction> {
    drive.validate()?;
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::param("g", "must be finite and > 0"));
    }
    if trace.len() < 3 {
        return Err(Error::param("trace", "needs at least 3 samples"));
    }
    let kappa = drive.kappa;
    if 4.0 * g < 2.0 * kappa {
        return Err(Error::Regime(format!(
            "peaks unresolved (4g = {:.3e} < 2κ = {:.3e}); fit the lineshape instead (fit_temperature)",
            4.0 * g,
            2.0 * kappa
        )));
    }
    if 4.0 * g < 10.0 * kappa {
        log::warn!("4g/κ = {:.2}: peaks overlap, extracted statistics are approximate", 4.0 * g / kappa);
    }
    let step = trace
        .detunings
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    if step > 0.5 * g {
        log::warn!("grid step {step:.3e} coarse relative to peak spacing 2g = {:.3e}", 2.0 * g);
    }

    let peaks: Vec<Peak> = find_peaks(trace)
        .into_iter()
        .filter(|p| p.1 > -g)
        .map(|(_, position, height, prominence)| Peak {
            position,
            height,
            prominence,
            sector: (position / (2.0 * g)).round().max(0.0) as usize,
        })
        .collect();
    if peaks.is_empty() {
        return Err(Error::Regime("no transmission peaks found".into()));
    }
    let last = peaks.iter().map(|p| p.sector).max().unwrap_or(0);
    let hi = *trace.detunings.last().unwrap();
    let sectors = (0..=last + 2).take_while(|n| 2.0 * g * *n as f64 <= hi).count().max(1);

    let scale = (kappa / drive.kappa_e).powi(2);
    let heights: Vec<f64> = (0..sectors)
        .map(|n| trace.interpolate(2.0 * g * n as f64).unwrap_or(0.0).max(0.0))
        .collect();
    let h: Vec<f64> = heights.iter().map(|v| v * scale).collect();
    let raw: Vec<f64> = h.iter().map(|v| v.sqrt()).collect();

    // L_m(2gn) = (κ/2)/(κ/2 − i·2g(n − m))
    let lorentz = |n: usize, m: usize| {
        let half = 0.5 * kappa;
        Complex64::new(half, 0.0) / Complex64::new(half, -2.0 * g * (n as f64 - m as f64))
    };
    let mut p = raw.clone();
    let mut sweeps = 0;
    for _ in 0..REFINE_SWEEPS {
        sweeps += 1;
        let prev = p.clone();
        for n in 0..sectors {
            let c: Complex64 = (0..sectors)
                .filter(|&m| m != n)
                .map(|m| prev[m] * lorentz(n, m))
                .sum();
            let inner = (h[n] - c.im * c.im).max(0.0).sqrt();
            p[n] = (inner - c.re).max(0.0);
        }
        let change = p.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if change < 1e-14 {
            break;
        }
    }
    let total: f64 = p.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Regime("extracted distribution vanishes".into()));
    }
    let probs: Vec<f64> = p.iter().map(|v| v / total).collect();
    Ok(Extraction {
        distribution: PhononDistribution::custom(probs)?,
        peaks,
        sector_heights: heights,
        raw,
        sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driven::{linear_grid, transmission};

    fn tv(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len().max(b.len());
        0.5 * (0..n)
            .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
            .sum::<f64>()
    }

    #[test]
    fn single_fock_peak() {
        let g = 4.0;
        let grid = linear_grid(-2.0, 40.0, 4201);
        let t = transmission(&PhononDistribution::fock(3), &DriveParams::unit(), g, &grid).unwrap();
        let e = extract_statistics(&t, &DriveParams::unit(), g).unwrap();
        assert!((e.distribution.probs()[3] - 1.0).abs() < 1e-3);
        assert_eq!(e.peaks.len(), 1);
        assert_eq!(e.peaks[0].sector, 3);
    }

    #[test]
    fn poisson_recovered() {
        let g = 4.0;
        let d = DriveParams::unit();
        let truth = PhononDistribution::coherent(10.0).unwrap();
        let grid = linear_grid(-2.0, 2.0 + 2.0 * g * 30.0, 24_001);
        let t = transmission(&truth, &d, g, &grid).unwrap();
        let e = extract_statistics(&t, &d, g).unwrap();
        assert!(tv(e.distribution.probs(), truth.probs()) < 0.02);
        // the naive √height estimate is visibly worse
        let s: f64 = e.raw.iter().sum();
        let naive: Vec<f64> = e.raw.iter().map(|v| v / s).collect();
        assert!(tv(&naive, truth.probs()) > tv(e.distribution.probs(), truth.probs()));
    }

    #[test]
    fn unresolved_regime_rejected() {
        let g = 0.2;
        let grid = linear_grid(-2.0, 4.0, 101);
        let t = transmission(&PhononDistribution::fock(0), &DriveParams::unit(), g, &grid).unwrap();
        assert!(matches!(
            extract_statistics(&t, &DriveParams::unit(), g),
            Err(Error::Regime(_))
        ));
    }
}
