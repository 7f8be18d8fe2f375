//! Steady state of the weakly driven cavity in the rotating-wave regime.
//!
//! Everything here is in units of the cavity linewidth `κ` (pass `κ = 1`) or
//! in any consistent unit system; `Δ = ω_L − ω_c − g` absorbs the constant
//! `g` shift of the cavity frequency. Under the RWA the interaction is
//! `2g a†a b†b`, so each phonon number `n` shifts the cavity resonance to
//! `Δ = 2gn` and the intracavity field is a `p_n`-weighted sum of shifted
//! Lorentzian amplitudes.

mod extract;
pub mod hyp2f1;
mod thermometry;

pub use extract::{extract_statistics, Extraction, Peak};
pub use hyp2f1::{hyp2f1, Hyp2f1, Method};
pub use thermometry::{fit_temperature, FitOptions, FitReport};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::{pairwise_sum, pairwise_sum_complex};

/// Photon-number bound `|α|²·g/Ω` above which the RWA is flagged.
pub const RWA_MARGIN: f64 = 0.1;
/// Relative accuracy of the direct Lorentzian sum for thermal states.
pub const DIRECT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    /// `Δ = ω_L − ω_c − g`.
    pub detuning: f64,
    /// Drive strength `𝓔`.
    pub drive: f64,
    pub kappa: f64,
    /// Output coupling `κ_e ≤ κ`.
    pub kappa_e: f64,
}

impl DriveParams {
    pub fn new(detuning: f64, drive: f64, kappa: f64, kappa_e: f64) -> Result<Self> {
        let d = DriveParams {
            detuning,
            drive,
            kappa,
            kappa_e,
        };
        d.validate()?;
        Ok(d)
    }

    /// `κ = κ_e = 1`, `𝓔 = 1e-3`, `Δ = 0`.
    pub fn unit() -> Self {
        DriveParams {
            detuning: 0.0,
            drive: 1e-3,
            kappa: 1.0,
            kappa_e: 1.0,
        }
    }

    pub fn with_detuning(&self, detuning: f64) -> Self {
        DriveParams { detuning, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.detuning.is_finite() {
            return Err(Error::param("detuning", "must be finite"));
        }
        if !(self.drive.is_finite() && self.drive > 0.0) {
            return Err(Error::param("drive", "must be finite and > 0"));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::param("kappa", "must be finite and > 0"));
        }
        if !(self.kappa_e.is_finite() && self.kappa_e > 0.0 && self.kappa_e <= self.kappa) {
            return Err(Error::param("kappa_e", "must satisfy 0 < kappa_e <= kappa"));
        }
        Ok(())
    }

    /// Empty-cavity photon number `|𝓔/(κ/2 − iΔ)|²`.
    pub fn intracavity_photons(&self) -> f64 {
        (self.drive / Complex64::new(0.5 * self.kappa, -self.detuning)).norm_sqr()
    }

    /// `false` (and a warning) when `|α|²·g/Ω` exceeds [`RWA_MARGIN`].
    pub fn check_weak_drive(&self, g_over_omega: f64) -> bool {
        let ratio = self.intracavity_photons() * g_over_omega;
        if ratio > RWA_MARGIN {
            log::warn!("intracavity |α|²·g/Ω = {ratio:.3e} exceeds {RWA_MARGIN}: RWA questionable");
            false
        } else {
            true
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Coherent { mean: f64 },
    Thermal { mean: f64 },
    Fock { n: usize },
    Custom,
}

/// Phonon-number probabilities `p_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhononDistribution {
    probs: Vec<f64>,
    provenance: Provenance,
}

/// Tail mass dropped from truncated coherent and thermal distributions.
const DIST_TAIL: f64 = 1e-16;

impl PhononDistribution {
    pub fn fock(n: usize) -> Self {
        let mut probs = vec![0.0; n + 1];
        probs[n] = 1.0;
        PhononDistribution {
            probs,
            provenance: Provenance::Fock { n },
        }
    }

    /// Poisson with mean `|β|²`.
    pub fn coherent(mean: f64) -> Result<Self> {
        if !(mean.is_finite() && mean >= 0.0) {
            return Err(Error::param("mean", "must be finite and >= 0"));
        }
        let mut probs = Vec::new();
        let mut n = 0usize;
        loop {
            let ln_p = if mean == 0.0 {
                if n == 0 { 0.0 } else { f64::NEG_INFINITY }
            } else {
                -mean + n as f64 * mean.ln() - ln_factorial(n)
            };
            let p = ln_p.exp();
            probs.push(p);
            if (n as f64 > mean && p < DIST_TAIL * 1e-2) || mean == 0.0 {
                break;
            }
            n += 1;
        }
        Ok(Self::normalized(probs, Provenance::Coherent { mean }))
    }

    /// `p_n = n̄ⁿ/(n̄+1)^{n+1}`.
    pub fn thermal(mean: f64) -> Result<Self> {
        if !(mean.is_finite() && mean >= 0.0) {
            return Err(Error::param("mean", "must be finite and >= 0"));
        }
        let z = mean / (mean + 1.0);
        let len = if mean == 0.0 {
            1
        } else {
            (DIST_TAIL.ln() / z.ln()).ceil() as usize + 1
        };
        let probs = (0..len).map(|n| (1.0 - z) * z.powi(n as i32)).collect();
        Ok(Self::normalized(probs, Provenance::Thermal { mean }))
    }

    /// Any non-negative vector summing to 1 within 1e-10.
    pub fn custom(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::param("probs", "empty distribution"));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::param("probs", "entries must be finite and >= 0"));
        }
        let total = pairwise_sum(&probs);
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::param("probs", format!("sum is {total}, expected 1")));
        }
        Ok(PhononDistribution {
            probs,
            provenance: Provenance::Custom,
        })
    }

    fn normalized(mut probs: Vec<f64>, provenance: Provenance) -> Self {
        let total = pairwise_sum(&probs);
        probs.iter_mut().for_each(|p| *p /= total);
        PhononDistribution { probs, provenance }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.probs.iter().enumerate().map(|(n, p)| n as f64 * p).collect::<Vec<_>>())
    }

    /// `½(p + q)` padded to the longer support.
    pub fn mixture(&self, other: &Self, weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::param("weight", "must lie in [0, 1]"));
        }
        let len = self.probs.len().max(other.probs.len());
        let at = |d: &Self, n: usize| d.probs.get(n).copied().unwrap_or(0.0);
        let probs = (0..len)
            .map(|n| weight * at(self, n) + (1.0 - weight) * at(other, n))
            .collect();
        Ok(PhononDistribution {
            probs,
            provenance: Provenance::Custom,
        })
    }
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

fn sector_denominator(n: usize, drive: &DriveParams, g: f64) -> Complex64 {
    Complex64::new(0.5 * drive.kappa, -(drive.detuning - 2.0 * g * n as f64))
}

fn check_g(g: f64) -> Result<()> {
    if !(g.is_finite() && g >= 0.0) {
        return Err(Error::param("g", "must be finite and >= 0"));
    }
    Ok(())
}

/// Centre `α_n = 𝓔/(κ/2 − i(Δ − 2gn))` of the steady-state Q function of
/// phonon sector `n`; the Q function itself is `e^{−|α−α_n|²}/π`.
pub fn steady_q(n: usize, drive: &DriveParams, g: f64) -> Result<Complex64> {
    drive.validate()?;
    check_g(g)?;
    Ok(drive.drive / sector_denominator(n, drive, g))
}

/// Drift of the sector-`n` Fokker–Planck equation, `α̇ = 𝓔 − (κ/2 − i(Δ − 2gn))α`.
pub fn drift(alpha: Complex64, n: usize, drive: &DriveParams, g: f64) -> Complex64 {
    drive.drive - sector_denominator(n, drive, g) * alpha
}

/// `⟨a⟩_ss = Σ_n 𝓔 p_n/(κ/2 − i(Δ − 2gn))`.
pub fn intracavity_amplitude(dist: &PhononDistribution, drive: &DriveParams, g: f64) -> Result<Complex64> {
    drive.validate()?;
    check_g(g)?;
    Ok(amplitude_unchecked(dist.probs(), drive, g))
}

fn amplitude_unchecked(probs: &[f64], drive: &DriveParams, g: f64) -> Complex64 {
    let terms: Vec<Complex64> = probs
        .iter()
        .enumerate()
        .map(|(n, p)| drive.drive * p / sector_denominator(n, drive, g))
        .collect();
    pairwise_sum_complex(&terms)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransmissionTrace {
    pub detunings: Vec<f64>,
    /// `|t|²` at each detuning.
    pub values: Vec<f64>,
}

impl TransmissionTrace {
    pub fn new(detunings: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if detunings.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} detunings, {} values",
                detunings.len(),
                values.len()
            )));
        }
        if detunings.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::param("trace", "non-finite entry"));
        }
        if detunings.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("detunings", "must be strictly increasing"));
        }
        Ok(TransmissionTrace { detunings, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Value at `x` by a parabola through the three nearest samples.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        let d = &self.detunings;
        if d.len() < 3 || x < d[0] || x > d[d.len() - 1] {
            return None;
        }
        let k = d.partition_point(|v| *v < x);
        let i = k.clamp(1, d.len() - 2);
        let (x0, x1, x2) = (d[i - 1], d[i], d[i + 1]);
        let (y0, y1, y2) = (self.values[i - 1], self.values[i], self.values[i + 1]);
        let l0 = (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2));
        let l1 = (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2));
        let l2 = (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1));
        Some(y0 * l0 + y1 * l1 + y2 * l2)
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param("detunings", "empty grid"));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::param("detunings", "must be finite"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("detunings", "must be strictly increasing"));
    }
    Ok(())
}

/// `|t|² = |κ_e⟨a⟩/(2𝓔)|²` over the detuning grid (`drive.detuning` is
/// ignored).
pub fn transmission(dist: &PhononDistribution, drive: &DriveParams, g: f64, grid: &[f64]) -> Result<TransmissionTrace> {
    drive.validate()?;
    check_g(g)?;
    check_grid(grid)?;
    let values = grid
        .par_iter()
        .map(|&d| {
            let dp = drive.with_detuning(d);
            (drive.kappa_e * amplitude_unchecked(dist.probs(), &dp, g) / (2.0 * drive.drive)).norm_sqr()
        })
        .collect();
    Ok(TransmissionTrace {
        detunings: grid.to_vec(),
        values,
    })
}

/// `Σ_n p_n |t_n|²`: the phonon-averaged intensity transmission, whose area
/// is `(κ_e/κ)² πκ/2` for every distribution. Diagnostic only; the coherent
/// transmission is [`transmission`].
pub fn intensity_transmission(dist: &PhononDistribution, drive: &DriveParams, g: f64, grid: &[f64]) -> Result<TransmissionTrace> {
    drive.validate()?;
    check_g(g)?;
    check_grid(grid)?;
    let values = grid
        .par_iter()
        .map(|&d| {
            let dp = drive.with_detuning(d);
            let terms: Vec<f64> = dist
                .probs()
                .iter()
                .enumerate()
                .map(|(n, p)| p * (0.5 * drive.kappa_e / sector_denominator(n, &dp, g)).norm_sqr())
                .collect();
            pairwise_sum(&terms)
        })
        .collect();
    Ok(TransmissionTrace {
        detunings: grid.to_vec(),
        values,
    })
}

/// Result of the direct thermal Lorentzian sum at one detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectSum {
    pub transmission: f64,
    pub amplitude: Complex64,
    pub terms: usize,
    /// Bound on `|⟨a⟩ − partial sum|` from the geometric thermal tail.
    pub tail_bound: f64,
}

/// `⟨a⟩` for a thermal phonon state summed term by term until the geometric
/// tail `z^{N+1}·𝓔·2/κ` falls below `tol·|⟨a⟩|`.
pub fn thermal_direct_sum(n_th: f64, drive: &DriveParams, g: f64, tol: f64) -> Result<DirectSum> {
    drive.validate()?;
    check_g(g)?;
    if !(n_th.is_finite() && n_th >= 0.0) {
        return Err(Error::param("n_th", "must be finite and >= 0"));
    }
    let z = n_th / (n_th + 1.0);
    let bound_per_mass = 2.0 * drive.drive / drive.kappa;
    let mut terms = Vec::new();
    let mut zn = 1.0;
    let mut n = 0usize;
    let (amplitude, tail) = loop {
        terms.push(drive.drive * (1.0 - z) * zn / sector_denominator(n, drive, g));
        zn *= z;
        n += 1;
        // Σ_{m ≥ n} p_m = zⁿ
        let tail = zn * bound_per_mass;
        if n % 64 == 0 || tail == 0.0 {
            let partial = pairwise_sum_complex(&terms);
            if tail <= tol * partial.norm() {
                break (partial, tail);
            }
        }
        if n > 50_000_000 {
            return Err(Error::Convergence {
                terms: n,
                partial: format!("{}", pairwise_sum_complex(&terms)),
                last_term: tail,
            });
        }
    };
    Ok(DirectSum {
        transmission: (drive.kappa_e * amplitude / (2.0 * drive.drive)).norm_sqr(),
        amplitude,
        terms: n,
        tail_bound: tail,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormTrace {
    pub trace: TransmissionTrace,
    /// Evaluation route used at each detuning.
    pub methods: Vec<Method>,
}

/// `|t|²` for a thermal phonon state from the hypergeometric closed form
///
/// `|t|² = κ_e²(1−z)²/(κ² + 4Δ²) · |₂F₁(1, b; 1+b; z)|²`,
/// `b = −(iκ + 2Δ)/(4g)`, `z = n̄/(n̄+1)`,
///
/// which is `Σ_n (1−z)zⁿ` over the sector Lorentzians summed exactly. Points
/// where the series does not converge fall back to [`thermal_direct_sum`].
pub fn thermal_transmission_closed_form(n_th: f64, drive: &DriveParams, g: f64, grid: &[f64]) -> Result<ClosedFormTrace> {
    drive.validate()?;
    check_g(g)?;
    check_grid(grid)?;
    if !(n_th.is_finite() && n_th >= 0.0) {
        return Err(Error::param("n_th", "must be finite and >= 0"));
    }
    let z = n_th / (n_th + 1.0);
    let kappa = drive.kappa;
    let rows = grid
        .par_iter()
        .map(|&d| -> Result<(f64, Method)> {
            let lorentz = drive.kappa_e * drive.kappa_e / (kappa * kappa + 4.0 * d * d);
            if g == 0.0 || z == 0.0 {
                return Ok((lorentz, Method::GaussSeries));
            }
            let b = -Complex64::new(2.0 * d, kappa) / (4.0 * g);
            let one = Complex64::new(1.0, 0.0);
            match hyp2f1(one, b, one + b, z) {
                Ok(f) => Ok((lorentz * (1.0 - z).powi(2) * f.value.norm_sqr(), f.method)),
                Err(Error::Convergence { .. }) => {
                    let s = thermal_direct_sum(n_th, &drive.with_detuning(d), g, DIRECT_SUM_TOL)?;
                    Ok((s.transmission, Method::DirectSum))
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClosedFormTrace {
        trace: TransmissionTrace {
            detunings: grid.to_vec(),
            values: rows.iter().map(|r| r.0).collect(),
        },
        methods: rows.iter().map(|r| r.1).collect(),
    })
}

/// `n` points on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|k| lo + step * k as f64).collect()
}

/// `[−2κ, 2κ + 2g(n̄ + 5√n̄)]`, wide enough for the phonon-shifted peaks.
pub fn default_grid(kappa: f64, g: f64, mean: f64, points: usize) -> Vec<f64> {
    linear_grid(-2.0 * kappa, 2.0 * kappa + 2.0 * g * (mean + 5.0 * mean.sqrt()), points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreaReport {
    pub area: f64,
    pub left_value: f64,
    pub right_value: f64,
    /// A boundary value exceeds `1e-6·max`: the area is underestimated.
    pub truncated: bool,
}

/// Trapezoidal `∫|t|² dΔ`.
pub fn lineshape_area(trace: &TransmissionTrace) -> AreaReport {
    let d = &trace.detunings;
    let v = &trace.values;
    let parts: Vec<f64> = d
        .windows(2)
        .zip(v.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .collect();
    let left = v.first().copied().unwrap_or(0.0);
    let right = v.last().copied().unwrap_or(0.0);
    let truncated = left.max(right) > 1e-6 * trace.max();
    if truncated {
        log::warn!("lineshape not contained in the grid: boundary values {left:.3e}, {right:.3e}");
    }
    AreaReport {
        area: pairwise_sum(&parts),
        left_value: left,
        right_value: right,
        truncated,
    }
}

/// `(πκ/2)·(κ_e/κ)²·Σ_{n,m} p_n p_m κ²/(κ² + 4g²(n−m)²)`: exact area of the
/// coherent transmission on an infinite grid.
pub fn analytic_area(dist: &PhononDistribution, drive: &DriveParams, g: f64) -> f64 {
    let p = dist.probs();
    let k = drive.kappa;
    let rows: Vec<f64> = (0..p.len())
        .map(|n| {
            let cols: Vec<f64> = (0..p.len())
                .map(|m| {
                    let s = 2.0 * g * (n as f64 - m as f64);
                    p[n] * p[m] * k * k / (k * k + s * s)
                })
                .collect();
            pairwise_sum(&cols)
        })
        .collect();
    std::f64::consts::PI * k / 2.0 * (drive.kappa_e / k).powi(2) * pairwise_sum(&rows)
}

/// Shape statistics of a lineshape over its support `|t|² ≥ 10%·max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeStats {
    pub centre: f64,
    pub width: f64,
    /// Standardised third moment of the `|t|²`-weighted detuning.
    pub skewness: f64,
    /// `∫|y(c+u) − y(c−u)| / ∫(y(c+u) + y(c−u))` about the weighted centre.
    pub asymmetry: f64,
}

pub fn shape_stats(trace: &TransmissionTrace) -> Result<ShapeStats> {
    let top = trace.max();
    if !(top > 0.0) {
        return Err(Error::param("trace", "identically zero"));
    }
    let cut = 0.1 * top;
    let support: Vec<(f64, f64)> = trace
        .detunings
        .iter()
        .zip(&trace.values)
        .filter(|(_, y)| **y >= cut)
        .map(|(x, y)| (*x, *y))
        .collect();
    let w: f64 = pairwise_sum(&support.iter().map(|s| s.1).collect::<Vec<_>>());
    let moment = |k: i32, c: f64| {
        pairwise_sum(&support.iter().map(|(x, y)| y * (x - c).powi(k)).collect::<Vec<_>>()) / w
    };
    let centre = moment(1, 0.0);
    let var = moment(2, centre);
    let skewness = moment(3, centre) / var.powf(1.5);

    let lo = support.first().map(|s| s.0).unwrap_or(centre);
    let hi = support.last().map(|s| s.0).unwrap_or(centre);
    let reach = (centre - lo).max(hi - centre);
    let steps = 400;
    let (mut diff, mut total) = (0.0, 0.0);
    for k in 0..=steps {
        let u = reach * k as f64 / steps as f64;
        let a = trace.interpolate(centre + u).unwrap_or(0.0).max(0.0);
        let b = trace.interpolate(centre - u).unwrap_or(0.0).max(0.0);
        diff += (a - b).abs();
        total += a + b;
    }
    Ok(ShapeStats {
        centre,
        width: var.sqrt(),
        skewness,
        asymmetry: diff / total,
    })
}
