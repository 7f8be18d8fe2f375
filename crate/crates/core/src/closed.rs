//! Closed-system dynamics, solved exactly sector by sector.
//!
//! The Hamiltonian conserves the photon number `n`, and inside each photon
//! sector it is the quadratic phonon form `Ω b†b + χ_n (b + b†)²` with
//! `χ_n = g(n + ½)`. A squeeze `S(r_n) = exp(½ r_n (b†² − b²))` with
//! `r_n = −¼ ln(1 + 4χ_n/Ω)` maps it onto an oscillator of frequency
//! `ϖ_n = √(Ω² + 4Ω χ_n)`, so `exp(−iH_n t) = S(r_n) e^{−iϖ_n(b†b+½)t} S†(r_n)`
//! up to the constant `−Ω/2` dropped from the diagonal form.
//!
//! Squeeze matrices are exponentiated in a padded phonon space and the
//! propagator is compressed back onto the requested cutoff, so matrix
//! elements between levels below the cutoff are those of the untruncated
//! oscillator. Norm flowing past the cutoff is reported as leakage.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{
    self, expm, make_annihilation, number_distribution, position, DenseOperator, QuantumState,
    Representation, StateSpec, SystemParams,
};
use crate::sum::pairwise_sum;

/// Photon-number tail dropped from closed-form expectation sums.
pub const PHOTON_TAIL: f64 = 1e-10;
/// Leakage past the phonon cutoff that aborts a joint evolution.
pub const MAX_LEAKAGE: f64 = 1e-6;
/// Sectors with a smaller population are not propagated.
const SECTOR_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DressedSector {
    pub photons: usize,
    /// `r_n`, non-positive for `g ≥ 0`.
    pub squeeze: f64,
    /// `ϖ_n` in units of `Ω`.
    pub dressed_freq: f64,
    /// `χ_n = g(n + ½)`.
    pub chi: f64,
    /// `2gn ≥ Ω`: the number-conserving approximation no longer holds.
    pub rwa_violated: bool,
}

pub fn dressed_sector(params: &SystemParams, n: usize) -> Result<DressedSector> {
    let omega = params.mech_freq;
    let g = params.coupling;
    let chi = g * (n as f64 + 0.5);
    let radicand = 1.0 + 4.0 * chi / omega;
    if !(radicand > 0.0) {
        return Err(Error::UnphysicalCoupling {
            sector: n,
            radicand,
        });
    }
    Ok(DressedSector {
        photons: n,
        squeeze: -0.25 * radicand.ln(),
        dressed_freq: (omega * omega + 4.0 * g * omega * (n as f64 + 0.5)).sqrt(),
        chi,
        rwa_violated: 2.0 * g * n as f64 >= omega,
    })
}

/// Collapse and revival time scales of `⟨x(t)⟩` for a coherent cavity state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RevivalTimes {
    pub collapse: f64,
    pub revival: f64,
    /// `ϖ_α = √(Ω² + 4g|α|²Ω)`.
    pub carrier_freq: f64,
}

pub fn revival_times(params: &SystemParams, alpha: Complex64) -> Result<RevivalTimes> {
    let a = alpha.norm();
    if a == 0.0 {
        return Err(Error::UndefinedRevival);
    }
    let omega = params.mech_freq;
    let g = params.coupling;
    let carrier = (omega * omega + 4.0 * g * a * a * omega).sqrt();
    let revival = PI * carrier / (g * omega);
    Ok(RevivalTimes {
        collapse: revival / (2.0 * PI * a),
        revival,
        carrier_freq: carrier,
    })
}

/// `Ω b†b + χ_n (b + b†)²` on `dim` phonon levels (the `ω_c n` offset is
/// left out).
pub fn sector_hamiltonian(params: &SystemParams, n: usize, dim: usize) -> Result<DenseOperator> {
    let sector = dressed_sector(params, n)?;
    let b = make_annihilation(dim)?;
    let num = b.adjoint().compose(&b)?;
    let x = position(dim)?;
    num.scale(Complex64::new(params.mech_freq, 0.0))
        .add(&x.compose(&x)?.scale(Complex64::new(sector.chi, 0.0)))
}

/// Size of the padded phonon space used to build `S(r)` for a given cutoff.
pub fn working_dimension(cutoff: usize, squeeze: f64) -> usize {
    (1.5 * (cutoff + 20) as f64 * (2.0 * squeeze.abs()).exp()).ceil() as usize + 20
}

fn squeeze_matrix(r: f64, dim: usize) -> Result<DMatrix<f64>> {
    if r == 0.0 {
        return Ok(DMatrix::identity(dim, dim));
    }
    // ½ r (b†² − b²) is real and antisymmetric.
    let mut gen = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..dim.saturating_sub(2) {
        let amp = 0.5 * r * (((k + 1) * (k + 2)) as f64).sqrt();
        gen[(k + 2, k)] = amp;
        gen[(k, k + 2)] = -amp;
    }
    expm(&gen)
}

/// Exact propagator of one photon sector.
#[derive(Debug, Clone)]
pub struct SectorPropagator {
    sector: DressedSector,
    mech_freq: f64,
    cav_freq: f64,
    cutoff: usize,
    squeeze: DMatrix<f64>,
}

impl SectorPropagator {
    pub fn new(params: &SystemParams, n: usize) -> Result<Self> {
        params.validate()?;
        let sector = dressed_sector(params, n)?;
        let dim = working_dimension(params.phonon_cutoff, sector.squeeze);
        Ok(SectorPropagator {
            sector,
            mech_freq: params.mech_freq,
            cav_freq: params.cav_freq,
            cutoff: params.phonon_cutoff,
            squeeze: squeeze_matrix(sector.squeeze, dim)?,
        })
    }

    pub fn sector(&self) -> &DressedSector {
        &self.sector
    }

    pub fn working_dim(&self) -> usize {
        self.squeeze.nrows()
    }

    /// `e^{−iω_c n t}`.
    pub fn photon_phase(&self, t: f64) -> Complex64 {
        Complex64::from_polar(1.0, -self.cav_freq * self.sector.photons as f64 * t)
    }

    fn dressed_phases(&self, t: f64) -> DVector<Complex64> {
        let w = self.sector.dressed_freq;
        let shift = 0.5 * self.mech_freq * t;
        DVector::from_fn(self.working_dim(), |k, _| {
            Complex64::from_polar(1.0, -w * (k as f64 + 0.5) * t + shift)
        })
    }

    /// Phonon-space propagator compressed onto the cutoff.
    pub fn operator(&self, t: f64) -> DenseOperator {
        let top = self.squeeze.rows(0, self.cutoff).map(|x| Complex64::new(x, 0.0));
        let phases = self.dressed_phases(t);
        let mut left = top.clone();
        for (j, mut col) in left.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        DenseOperator::from_parts(left * top.transpose(), vec![self.cutoff])
    }

    /// `U_n(t) φ` and the fraction of `‖φ‖²` that left the cutoff.
    pub fn apply(&self, phi: &DVector<Complex64>, t: f64) -> Result<(DVector<Complex64>, f64)> {
        if phi.len() != self.cutoff {
            return Err(Error::DimensionMismatch(format!(
                "phonon vector of length {} for cutoff {}",
                phi.len(),
                self.cutoff
            )));
        }
        let top = self.squeeze.rows(0, self.cutoff);
        let mut w: DVector<Complex64> =
            DVector::from_fn(self.working_dim(), |m, _| {
                (0..self.cutoff).map(|k| phi[k] * top[(k, m)]).sum()
            });
        w.component_mul_assign(&self.dressed_phases(t));
        let full = DVector::from_fn(self.working_dim(), |j, _| {
            self.squeeze
                .row(j)
                .iter()
                .zip(w.iter())
                .map(|(s, c)| c * *s)
                .sum::<Complex64>()
        });
        let total = phi.norm_squared();
        let kept = full.rows(0, self.cutoff).into_owned();
        let leaked = if total > 0.0 {
            (total - kept.norm_squared()).max(0.0) / total
        } else {
            0.0
        };
        Ok((kept, leaked))
    }
}

/// Propagator of sector `n` at time `t` with its photon phase.
#[derive(Debug, Clone)]
pub struct SectorEvolution {
    pub operator: DenseOperator,
    pub photon_phase: Complex64,
}

pub fn sector_propagator(params: &SystemParams, n: usize, t: f64) -> Result<SectorEvolution> {
    if !t.is_finite() {
        return Err(Error::param("t", "time must be finite"));
    }
    let p = SectorPropagator::new(params, n)?;
    Ok(SectorEvolution {
        operator: p.operator(t),
        photon_phase: p.photon_phase(t),
    })
}

/// Joint state after evolution together with the worst sector leakage.
#[derive(Debug, Clone)]
pub struct EvolvedState {
    pub state: QuantumState,
    pub worst_leak: Option<(usize, f64)>,
}

/// Sector propagators for every populated photon sector of a cavity state,
/// built once and reused across time samples.
#[derive(Debug, Clone)]
pub struct JointEvolver {
    params: SystemParams,
    propagators: Vec<Option<SectorPropagator>>,
}

impl JointEvolver {
    pub fn new(params: &SystemParams, photon: &QuantumState) -> Result<Self> {
        params.validate()?;
        if photon.dims() != [params.photon_cutoff] {
            return Err(Error::DimensionMismatch(format!(
                "photon state on {:?}, photon cutoff {}",
                photon.dims(),
                params.photon_cutoff
            )));
        }
        let pops = photon.populations();
        let propagators = pops
            .par_iter()
            .enumerate()
            .map(|(n, &p)| {
                if p > SECTOR_FLOOR {
                    SectorPropagator::new(params, n).map(Some)
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(JointEvolver {
            params: *params,
            propagators,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn sectors(&self) -> impl Iterator<Item = &SectorPropagator> {
        self.propagators.iter().flatten()
    }

    /// `Σ_n c_n e^{−iω_c n t} |n⟩ ⊗ U_n(t)|φ⟩` or its density-matrix form.
    pub fn evolve(
        &self,
        photon: &QuantumState,
        phonon: &QuantumState,
        t: f64,
    ) -> Result<EvolvedState> {
        if !t.is_finite() {
            return Err(Error::param("t", "time must be finite"));
        }
        let nb = self.params.phonon_cutoff;
        if phonon.dims() != [nb] {
            return Err(Error::DimensionMismatch(format!(
                "phonon state on {:?}, phonon cutoff {nb}",
                phonon.dims()
            )));
        }
        if photon.dims() != [self.params.photon_cutoff] {
            return Err(Error::DimensionMismatch("photon state dims".into()));
        }
        let na = self.params.photon_cutoff;
        let pops = photon.populations();

        let (state, leaks) = match (photon.representation(), phonon.representation()) {
            (Representation::Pure(c), Representation::Pure(phi)) => {
                let blocks = self
                    .propagators
                    .par_iter()
                    .enumerate()
                    .map(|(n, p)| match p {
                        Some(p) => {
                            let (v, leak) = p.apply(phi, t)?;
                            Ok(Some((v * (c[n] * p.photon_phase(t)), leak)))
                        }
                        None => Ok(None),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let mut joint = DVector::<Complex64>::zeros(na * nb);
                let mut leaks = Vec::new();
                for (n, block) in blocks.into_iter().enumerate() {
                    if let Some((v, leak)) = block {
                        joint.rows_mut(n * nb, nb).copy_from(&v);
                        leaks.push((n, leak));
                    }
                }
                (
                    QuantumState::pure_unchecked(joint, vec![na, nb]),
                    leaks,
                )
            }
            _ => {
                let rho_a = photon.density_matrix();
                let rho_b = phonon.density_matrix();
                let evolved = self
                    .propagators
                    .par_iter()
                    .map(|p| {
                        p.as_ref().map(|p| {
                            let u = p.operator(t).into_matrix() * p.photon_phase(t);
                            let left = &u * &rho_b;
                            let leak = 1.0 - (&left * u.adjoint()).trace().re / rho_b.trace().re;
                            (u, left, leak.max(0.0))
                        })
                    })
                    .collect::<Vec<_>>();
                let active: Vec<usize> = (0..na).filter(|&n| evolved[n].is_some()).collect();
                let block_list = active
                    .par_iter()
                    .flat_map_iter(|&n| active.iter().map(move |&m| (n, m)))
                    .map(|(n, m)| {
                        let coeff = rho_a[(n, m)];
                        if coeff.norm() == 0.0 {
                            return None;
                        }
                        let (_, left, _) = evolved[n].as_ref().unwrap();
                        let (um, _, _) = evolved[m].as_ref().unwrap();
                        Some(((n, m), (left * um.adjoint()) * coeff))
                    })
                    .collect::<Vec<_>>();
                let mut joint = DMatrix::<Complex64>::zeros(na * nb, na * nb);
                for ((n, m), block) in block_list.into_iter().flatten() {
                    joint.view_mut((n * nb, m * nb), (nb, nb)).copy_from(&block);
                }
                let leaks = active
                    .iter()
                    .map(|&n| (n, evolved[n].as_ref().unwrap().2))
                    .collect();
                (QuantumState::mixed_unchecked(joint, vec![na, nb]), leaks)
            }
        };

        let mut worst: Option<(usize, f64)> = None;
        for (n, leak) in leaks {
            if pops[n] < 1e-10 {
                continue;
            }
            if worst.map_or(true, |(_, w)| leak > w) {
                worst = Some((n, leak));
            }
        }
        if let Some((sector, leaked)) = worst {
            if leaked > MAX_LEAKAGE {
                return Err(Error::SectorLeakage { sector, leaked });
            }
            if leaked > 1e-9 {
                log::debug!("photon sector {sector} leaks {leaked:.2e} past the phonon cutoff");
            }
        }
        Ok(EvolvedState {
            state,
            worst_leak: worst,
        })
    }
}

pub fn evolve_joint(
    params: &SystemParams,
    photon: &QuantumState,
    phonon: &QuantumState,
    t: f64,
) -> Result<QuantumState> {
    Ok(JointEvolver::new(params, photon)?
        .evolve(photon, phonon, t)?
        .state)
}

fn photon_weights(params: &SystemParams, spec: &StateSpec) -> Result<Vec<f64>> {
    let mut p = number_distribution(spec, PHOTON_TAIL)?;
    let total: f64 = pairwise_sum(&p);
    p.iter_mut().for_each(|x| *x /= total);
    if p.len() > params.photon_cutoff {
        log::warn!(
            "cavity state {spec:?} needs {} photon levels, cutoff is {}",
            p.len(),
            params.photon_cutoff
        );
    }
    Ok(p)
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::param("times", "must be finite"));
    }
    Ok(())
}

/// `⟨x(t)⟩` as the exact Poisson-weighted sum over photon sectors for the
/// initial product of coherent states `|α⟩|β⟩`.
pub fn mean_displacement_exact(
    params: &SystemParams,
    alpha: Complex64,
    beta: Complex64,
    times: &[f64],
) -> Result<Vec<f64>> {
    params.validate()?;
    check_times(times)?;
    let weights = photon_weights(params, &StateSpec::Coherent { alpha })?;
    let sectors = (0..weights.len())
        .map(|n| dressed_sector(params, n))
        .collect::<Result<Vec<_>>>()?;
    let x0 = 2.0 * beta.re;
    let p0 = 2.0 * beta.im;
    let omega = params.mech_freq;
    Ok(times
        .par_iter()
        .map(|&t| {
            let terms: Vec<f64> = weights
                .iter()
                .zip(&sectors)
                .map(|(p, s)| {
                    let (sin, cos) = (s.dressed_freq * t).sin_cos();
                    p * (cos * x0 + omega / s.dressed_freq * sin * p0)
                })
                .collect();
            pairwise_sum(&terms)
        })
        .collect())
}

/// Revival indices `m` whose Gaussian envelope (±8 `T_coll`) overlaps
/// `[start, end]`.
pub fn envelope_terms(times: &RevivalTimes, start: f64, end: f64) -> RangeInclusive<i64> {
    let reach = 8.0 * times.collapse;
    let lo = ((start - reach) / times.revival).ceil() as i64;
    let hi = ((end + reach) / times.revival).floor() as i64;
    lo..=hi
}

fn envelope_sum(
    params: &SystemParams,
    alpha: Complex64,
    beta: Complex64,
    times: &[f64],
    phase: impl Fn(i64, f64) -> f64 + Sync,
) -> Result<Vec<f64>> {
    params.validate()?;
    check_times(times)?;
    let amp = 2.0 * beta.norm();
    let offset = beta.arg();
    if params.coupling == 0.0 {
        let w = params.mech_freq;
        return Ok(times.iter().map(|&t| amp * (w * t - offset).cos()).collect());
    }
    let n_mean = alpha.norm_sqr();
    if n_mean < 10.0 {
        log::warn!("Gaussian envelope assumes |α|² ≫ 1, got {n_mean}");
    }
    if params.coupling > 0.1 * params.mech_freq {
        log::warn!("Gaussian envelope assumes g ≪ Ω, got g = {}", params.coupling);
    }
    let rt = revival_times(params, alpha)?;
    let (start, end) = times
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
    let terms: Vec<i64> = envelope_terms(&rt, start, end).collect();
    Ok(times
        .par_iter()
        .map(|&t| {
            let parts: Vec<f64> = terms
                .iter()
                .map(|&m| {
                    let u = (t - m as f64 * rt.revival) / rt.collapse;
                    (rt.carrier_freq * t - offset + phase(m, n_mean)).cos() * (-0.5 * u * u).exp()
                })
                .collect();
            amp * pairwise_sum(&parts)
        })
        .collect())
}

/// Gaussian-envelope approximation of `⟨x(t)⟩`.
///
/// The carrier `ϖ_α` is evaluated at `|α|²`, while the photon average of
/// `ϖ_n` sits at `|α|² + ½`; over one revival period that offset accumulates
/// a phase `π`, so revival `m` carries `2πm(½ − |α|²)`. Checked against
/// [`mean_displacement_exact`].
pub fn mean_displacement_envelope(
    params: &SystemParams,
    alpha: Complex64,
    beta: Complex64,
    times: &[f64],
) -> Result<Vec<f64>> {
    envelope_sum(params, alpha, beta, times, |m, n| {
        2.0 * PI * m as f64 * (0.5 - n)
    })
}

/// The envelope with the revival phase `+2π|α|²m` as commonly printed. Only
/// kept for comparison with [`mean_displacement_envelope`].
pub fn mean_displacement_envelope_printed(
    params: &SystemParams,
    alpha: Complex64,
    beta: Complex64,
    times: &[f64],
) -> Result<Vec<f64>> {
    envelope_sum(params, alpha, beta, times, |m, n| 2.0 * PI * m as f64 * n)
}

/// Exact and printed-form displacement variance traces.
#[derive(Debug, Clone, Serialize)]
pub struct VarianceTrace {
    pub times: Vec<f64>,
    /// `(2n̄+1) Σ p_n [cos²(ϖ_n t) + (Ω/ϖ_n)² sin²(ϖ_n t)]`.
    pub exact: Vec<f64>,
    /// `(2n̄+1) [(Ω+2gμ)/(Ω+4gμ) − Σ p_n 2gn/(Ω+4gn) cos(2ϖ_n t)]`, `μ` the
    /// mean photon number. Disagrees with `exact` (already at `t = 0`) and is
    /// only emitted for comparison.
    pub printed: Vec<f64>,
}

/// `⟨x²(t)⟩` for a thermal phonon state of occupancy `n_th` and the given
/// cavity state.
pub fn displacement_variance(
    params: &SystemParams,
    cavity: &StateSpec,
    n_th: f64,
    times: &[f64],
) -> Result<VarianceTrace> {
    params.validate()?;
    check_times(times)?;
    if !(n_th.is_finite() && n_th >= 0.0) {
        return Err(Error::param("n_th", "must be finite and >= 0"));
    }
    let weights = photon_weights(params, cavity)?;
    let sectors = (0..weights.len())
        .map(|n| dressed_sector(params, n))
        .collect::<Result<Vec<_>>>()?;
    let omega = params.mech_freq;
    let g = params.coupling;
    let thermal = 2.0 * n_th + 1.0;
    let mu = cavity.mean_occupancy();
    let static_part = (omega + 2.0 * g * mu) / (omega + 4.0 * g * mu);

    let rows: Vec<(f64, f64)> = times
        .par_iter()
        .map(|&t| {
            let exact: Vec<f64> = weights
                .iter()
                .zip(&sectors)
                .map(|(p, s)| {
                    let (sin, cos) = (s.dressed_freq * t).sin_cos();
                    let ratio = omega / s.dressed_freq;
                    p * (cos * cos + ratio * ratio * sin * sin)
                })
                .collect();
            let printed: Vec<f64> = weights
                .iter()
                .zip(&sectors)
                .enumerate()
                .map(|(n, (p, s))| {
                    let n = n as f64;
                    p * 2.0 * g * n / (omega + 4.0 * g * n) * (2.0 * s.dressed_freq * t).cos()
                })
                .collect();
            (
                thermal * pairwise_sum(&exact),
                thermal * (static_part - pairwise_sum(&printed)),
            )
        })
        .collect();
    Ok(VarianceTrace {
        times: times.to_vec(),
        exact: rows.iter().map(|r| r.0).collect(),
        printed: rows.iter().map(|r| r.1).collect(),
    })
}

/// Running maximum of `|values|` over a window of width `window` centred on
/// each sample.
pub fn oscillation_envelope(times: &[f64], values: &[f64], window: f64) -> Vec<f64> {
    let half = 0.5 * window;
    let mut out = Vec::with_capacity(times.len());
    let mut lo = 0;
    let mut hi = 0;
    for &t in times {
        while lo < times.len() && times[lo] < t - half {
            lo += 1;
        }
        while hi < times.len() && times[hi] <= t + half {
            hi += 1;
        }
        out.push(values[lo..hi].iter().fold(0.0_f64, |a, v| a.max(v.abs())));
    }
    out
}

/// Phonon-mode observables `x`, `x²` and `p` lifted to photon ⊗ phonon.
pub fn joint_phonon_operator(params: &SystemParams, op: &DenseOperator) -> Result<DenseOperator> {
    use crate::fock::Tensor;
    Ok(fock::identity(&[params.photon_cutoff])?.tensor(op))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{hermitian_exponential, make_state, matrix_exponential, Tensor};

    fn params(g: f64, na: usize, nb: usize) -> SystemParams {
        SystemParams::with_coupling(g, na, nb).unwrap()
    }

    #[test]
    fn decoupled_sector() {
        let p = params(0.0, 4, 4);
        for n in [0, 3, 100] {
            let s = dressed_sector(&p, n).unwrap();
            assert_eq!(s.squeeze, 0.0);
            assert_eq!(s.dressed_freq, 1.0);
        }
    }

    #[test]
    fn sector_zero_values() {
        let s = dressed_sector(&params(0.01, 4, 4), 0).unwrap();
        assert!((s.dressed_freq - 1.02_f64.sqrt()).abs() < 1e-15);
        assert!((s.squeeze + 0.25 * 1.02_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn diagonal_form_consistency() {
        // ϖ_n = Ω cosh 2r + 2χ e^{2r}
        for g in [1e-3, 0.01, 0.3, 2.0] {
            let p = params(g, 4, 4);
            for n in [0, 1, 7, 50] {
                let s = dressed_sector(&p, n).unwrap();
                let alt = (2.0 * s.squeeze).cosh() + 2.0 * s.chi * (2.0 * s.squeeze).exp();
                assert!((alt - s.dressed_freq).abs() < 1e-12 * s.dressed_freq);
                assert!(s.squeeze < 0.0);
                assert!(s.dressed_freq > 1.0);
                // (Ω+2χ) sinh 2r + 2χ cosh 2r = 0
                let off = (1.0 + 2.0 * s.chi) * (2.0 * s.squeeze).sinh()
                    + 2.0 * s.chi * (2.0 * s.squeeze).cosh();
                assert!(off.abs() < 1e-12 * (1.0 + s.chi));
            }
        }
    }

    #[test]
    fn rwa_flag_threshold() {
        let p = params(0.01, 4, 4);
        assert!(!dressed_sector(&p, 49).unwrap().rwa_violated);
        assert!(dressed_sector(&p, 50).unwrap().rwa_violated);
    }

    #[test]
    fn unphysical_coupling_rejected() {
        let p = SystemParams {
            mech_freq: 1.0,
            cav_freq: 0.0,
            coupling: -1.0,
            photon_cutoff: 2,
            phonon_cutoff: 2,
        };
        assert!(matches!(
            dressed_sector(&p, 0),
            Err(Error::UnphysicalCoupling { .. })
        ));
    }

    #[test]
    fn sector_zero_level_spacing_matches_dressed_frequency() {
        // eigenvalues of the n = 0 sector Hamiltonian at phonon cutoff 200
        let p = params(0.01, 1, 200);
        let h = sector_hamiltonian(&p, 0, 200).unwrap();
        let mut ev: Vec<f64> = h.matrix().symmetric_eigenvalues().iter().cloned().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let w = 1.02_f64.sqrt();
        for k in 0..20 {
            assert!((ev[k + 1] - ev[k] - w).abs() < 1e-6);
        }
        // ground energy ϖ/2 − Ω/2
        assert!((ev[0] - (w - 1.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn propagator_at_zero_is_identity() {
        let p = params(0.01, 4, 30);
        let u = sector_propagator(&p, 3, 0.0).unwrap();
        assert!(u
            .operator
            .sub(&fock::identity(&[30]).unwrap())
            .unwrap()
            .operator_norm()
            < 1e-12);
        assert_eq!(u.photon_phase, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn propagator_matches_dense_exponential() {
        // n = 3, t = 7.3/Ω, cutoff 60; oracle is exp(-iHt) of the padded
        // sector Hamiltonian restricted to the same levels.
        let p = params(0.01, 4, 60);
        let prop = SectorPropagator::new(&p, 3).unwrap();
        let big = prop.working_dim();
        let h = sector_hamiltonian(&p, 3, big).unwrap();
        let t = 7.3;
        let oracle = matrix_exponential(&h, Complex64::new(0.0, -t)).unwrap();
        let oracle = oracle.matrix().view((0, 0), (60, 60)).into_owned();
        let diff = prop.operator(t).matrix() - oracle;
        assert!(fock::DenseOperator::new(diff, vec![60]).unwrap().operator_norm() < 1e-7);
    }

    #[test]
    fn propagator_preserves_norm_of_low_lying_states() {
        let p = params(0.01, 4, 40);
        let prop = SectorPropagator::new(&p, 3).unwrap();
        let phi = make_state(&StateSpec::coherent(1.5, -0.5), 40).unwrap();
        let (v, leak) = prop.apply(phi.amplitudes().unwrap(), 123.4).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-9);
        assert!(leak < 1e-12);
        let via_matrix = prop.operator(123.4).apply(phi.amplitudes().unwrap()).unwrap();
        assert!((via_matrix - v).norm() < 1e-10);
    }

    #[test]
    fn padding_is_converged() {
        let p = params(0.05, 4, 30);
        let prop = SectorPropagator::new(&p, 10).unwrap();
        let s = prop.sector().squeeze;
        let bigger = squeeze_matrix(s, 2 * prop.working_dim()).unwrap();
        let d = (prop.squeeze.view((0, 0), (30, 30)) - bigger.view((0, 0), (30, 30))).camax();
        assert!(d < 1e-12);
    }

    #[test]
    fn evolve_identity_at_t_zero() {
        let p = params(0.01, 12, 12);
        let a = make_state(&StateSpec::coherent(1.0, 0.5), 12).unwrap();
        let b = make_state(&StateSpec::coherent(0.3, 0.0), 12).unwrap();
        let out = evolve_joint(&p, &a, &b, 0.0).unwrap();
        let joint = a.tensor(&b);
        assert!((out.amplitudes().unwrap() - joint.amplitudes().unwrap()).norm() < 1e-12);
    }

    #[test]
    fn fock_photon_keeps_phonon_pure() {
        let p = params(0.01, 6, 30);
        let a = make_state(&StateSpec::Fock { n: 5 }, 6).unwrap();
        let b = make_state(&StateSpec::Fock { n: 1 }, 30).unwrap();
        for t in [1.0, 17.0, 333.0] {
            let s = evolve_joint(&p, &a, &b, t).unwrap();
            assert!((s.trace() - 1.0).abs() < 1e-9);
            assert!((s.partial_trace(1).unwrap().purity() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn mixed_and_pure_routes_agree() {
        let p = params(0.02, 14, 20);
        let a = make_state(&StateSpec::coherent(1.2, 0.0), 14).unwrap();
        let b = make_state(&StateSpec::coherent(0.0, 0.7), 20).unwrap();
        let t = 21.0;
        let pure = evolve_joint(&p, &a, &b, t).unwrap();
        let b_mixed = QuantumState::mixed(b.density_matrix(), vec![20]).unwrap();
        let mixed = evolve_joint(&p, &a, &b_mixed, t).unwrap();
        assert!((pure.density_matrix() - mixed.density_matrix()).camax() < 1e-10);
    }

    #[test]
    fn leakage_is_reported() {
        let p = params(0.5, 4, 6);
        let a = make_state(&StateSpec::Fock { n: 3 }, 4).unwrap();
        let b = make_state(&StateSpec::Fock { n: 4 }, 6).unwrap();
        match evolve_joint(&p, &a, &b, 1.0) {
            Err(Error::SectorLeakage { sector, leaked }) => {
                assert_eq!(sector, 3);
                assert!(leaked > 1e-6);
            }
            other => panic!("expected leakage error, got {other:?}"),
        }
    }

    #[test]
    fn exact_displacement_decoupled_is_cosine() {
        let p = params(0.0, 10, 10);
        let beta = Complex64::new(2.0, 0.0);
        let times: Vec<f64> = (0..50).map(|k| 0.37 * k as f64).collect();
        let x = mean_displacement_exact(&p, Complex64::new(3.0, 0.0), beta, &times).unwrap();
        for (t, v) in times.iter().zip(&x) {
            assert!((v - 4.0 * t.cos()).abs() < 1e-9);
        }
        let env = mean_displacement_envelope(&p, Complex64::new(3.0, 0.0), beta, &times).unwrap();
        for (a, b) in env.iter().zip(&x) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_displacement_matches_joint_evolution() {
        let g = 0.03;
        let p = params(g, 30, 48);
        let alpha = Complex64::new(2.0, 0.0);
        let beta = Complex64::new(1.0, 0.4);
        let a = make_state(&StateSpec::Coherent { alpha }, 30).unwrap();
        let b = make_state(&StateSpec::Coherent { alpha: beta }, 48).unwrap();
        let times = [0.0, 3.3, 47.0, 250.0];
        let exact = mean_displacement_exact(&p, alpha, beta, &times).unwrap();
        let ev = JointEvolver::new(&p, &a).unwrap();
        let x = joint_phonon_operator(&p, &position(48).unwrap()).unwrap();
        for (t, e) in times.iter().zip(&exact) {
            let s = ev.evolve(&a, &b, *t).unwrap().state;
            let v = s.expect(&x).unwrap().re;
            assert!((v - e).abs() < 1e-6, "t = {t}: {v} vs {e}");
        }
    }

    #[test]
    fn revival_time_identities() {
        let p = params(0.01, 4, 4);
        let rt = revival_times(&p, Complex64::new(6.0, 0.0)).unwrap();
        assert!((rt.revival - PI * 2.44_f64.sqrt() / 0.01).abs() < 1e-9);
        assert!((rt.revival / (2.0 * PI) - 78.1).abs() < 0.1);
        assert!((rt.revival / rt.collapse - 2.0 * PI * 6.0).abs() < 1e-12);
        assert!(matches!(
            revival_times(&p, Complex64::new(0.0, 0.0)),
            Err(Error::UndefinedRevival)
        ));
    }

    #[test]
    fn collapse_time_asymptote() {
        // g|α|² = 100Ω
        let g = 0.01;
        let p = params(g, 4, 4);
        let alpha = Complex64::new((100.0 / g).sqrt(), 0.0);
        let rt = revival_times(&p, alpha).unwrap();
        let asymptote = 1.0 / g.sqrt();
        assert!((rt.collapse / asymptote - 1.0).abs() < 0.01);
    }

    #[test]
    fn envelope_term_window() {
        let p = params(0.01, 4, 4);
        let rt = revival_times(&p, Complex64::new(6.0, 0.0)).unwrap();
        let terms: Vec<i64> = envelope_terms(&rt, 0.0, 3.5 * rt.revival).collect();
        assert_eq!(terms, vec![0, 1, 2, 3]);
    }

    #[test]
    fn envelope_peaks_at_revivals() {
        let p = params(0.01, 4, 4);
        let alpha = Complex64::new(6.0, 0.0);
        let rt = revival_times(&p, alpha).unwrap();
        let beta = Complex64::new(2.0, 0.0);
        // phase-free check: amplitude at t = m T_rev equals 2β when the
        // carrier phase vanishes, so compare |envelope| with the cosine
        for m in 0..3 {
            let t = m as f64 * rt.revival;
            let v = mean_displacement_envelope(&p, alpha, beta, &[t]).unwrap()[0];
            let carrier = (rt.carrier_freq * t + 2.0 * PI * m as f64 * (0.5 - 36.0)).cos();
            assert!((v - 4.0 * carrier).abs() < 1e-6);
        }
    }

    #[test]
    fn revival_phase_sign_validated_for_non_integer_photon_number() {
        // |α|² = 30.3: the phase sign matters; the chosen form must track the
        // exact sum better than the opposite sign.
        let p = params(0.01, 4, 4);
        let alpha = Complex64::new(30.3_f64.sqrt(), 0.0);
        let beta = Complex64::new(2.0, 0.0);
        let rt = revival_times(&p, alpha).unwrap();
        let times: Vec<f64> = (0..4000)
            .map(|k| rt.revival * (0.8 + 0.4 * k as f64 / 4000.0))
            .collect();
        let exact = mean_displacement_exact(&p, alpha, beta, &times).unwrap();
        let ours = mean_displacement_envelope(&p, alpha, beta, &times).unwrap();
        let flipped = envelope_sum(&p, alpha, beta, &times, |m, n| {
            -2.0 * PI * m as f64 * (0.5 - n)
        })
        .unwrap();
        let rms = |a: &[f64]| {
            (a.iter().zip(&exact).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64)
                .sqrt()
        };
        assert!(rms(&ours) < 0.5 * rms(&flipped));
        assert!(rms(&ours) < 0.2 * 4.0);
    }

    #[test]
    fn variance_initial_value_and_decoupled_limit() {
        let p = params(0.01, 4, 4);
        let cav = StateSpec::coherent(2.0, 0.0);
        let v = displacement_variance(&p, &cav, 1.0, &[0.0]).unwrap();
        assert!((v.exact[0] - 3.0).abs() < 1e-10);
        // the printed form misses the initial thermal variance
        assert!((v.printed[0] - 3.0).abs() > 0.01);

        let p0 = params(0.0, 4, 4);
        let times: Vec<f64> = (0..20).map(|k| k as f64 * 1.7).collect();
        let v = displacement_variance(&p0, &cav, 2.5, &times).unwrap();
        assert!(v.exact.iter().all(|x| (x - 6.0).abs() < 1e-10));
    }

    #[test]
    fn oscillation_envelope_tracks_amplitude() {
        let times: Vec<f64> = (0..1000).map(|k| k as f64 * 0.05).collect();
        let values: Vec<f64> = times.iter().map(|t| 3.0 * (2.0 * t).cos()).collect();
        let env = oscillation_envelope(&times, &values, PI);
        assert!(env.iter().all(|e| (e - 3.0).abs() < 0.02));
    }

    #[test]
    fn eigen_and_pade_exponentials_agree_on_small_joint_hamiltonian() {
        use crate::fock::{identity, number, Tensor};
        let (na, nb) = (3, 5);
        let g = 0.2;
        let x = position(nb).unwrap();
        let h = number(na)
            .unwrap()
            .scale(Complex64::new(0.7, 0.0))
            .tensor(&identity(&[nb]).unwrap())
            .add(&identity(&[na]).unwrap().tensor(&number(nb).unwrap()))
            .unwrap()
            .add(
                &number(na)
                    .unwrap()
                    .add(&identity(&[na]).unwrap().scale(Complex64::new(0.5, 0.0)))
                    .unwrap()
                    .tensor(&x.compose(&x).unwrap())
                    .scale(Complex64::new(g, 0.0)),
            )
            .unwrap();
        let s = Complex64::new(0.0, -4.2);
        let a = matrix_exponential(&h, s).unwrap();
        let b = hermitian_exponential(&h, s).unwrap();
        assert!(a.sub(&b).unwrap().operator_norm() < 1e-9);
    }
}
