//! Husimi Q snapshots of the mechanical mode.
//!
//! `Q(α) = ⟨α|ρ|α⟩/π` is sampled on a rectangular grid in the complex `α`
//! plane. Grids are stored row-major with rows running over `Im α`.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed::{dressed_sector, JointEvolver};
use crate::error::{Error, Result};
use crate::fock::{make_state, momentum, position, QuantumState, Representation, StateSpec, SystemParams};

/// Riemann-sum mass below which a warning is logged.
pub const WINDOW_MASS_WARN: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re_range: (f64, f64),
    pub im_range: (f64, f64),
    pub re_points: usize,
    pub im_points: usize,
    /// Grow the window until it covers the state's phase-space support.
    pub auto_widen: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            re_range: (-6.0, 6.0),
            im_range: (-6.0, 6.0),
            re_points: 201,
            im_points: 201,
            auto_widen: true,
        }
    }
}

impl GridSpec {
    pub fn square(half_width: f64, points: usize) -> Self {
        GridSpec {
            re_range: (-half_width, half_width),
            im_range: (-half_width, half_width),
            re_points: points,
            im_points: points,
            auto_widen: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("re_range", self.re_range), ("im_range", self.im_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::param(name, "need finite lo < hi"));
            }
        }
        if self.re_points < 2 || self.im_points < 2 {
            return Err(Error::InvalidDimension("grid needs at least 2 points per axis".into()));
        }
        Ok(())
    }

    fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
        let step = (range.1 - range.0) / (n - 1) as f64;
        (0..n).map(|k| range.0 + step * k as f64).collect()
    }

    pub fn re_axis(&self) -> Vec<f64> {
        Self::axis(self.re_range, self.re_points)
    }

    pub fn im_axis(&self) -> Vec<f64> {
        Self::axis(self.im_range, self.im_points)
    }

    fn cell_area(&self) -> f64 {
        (self.re_range.1 - self.re_range.0) / (self.re_points - 1) as f64
            * (self.im_range.1 - self.im_range.0)
            / (self.im_points - 1) as f64
    }

    /// Window grown (never shrunk) to contain the disc of radius `radius`,
    /// keeping the sample spacing.
    pub fn widened_to(&self, radius: f64) -> GridSpec {
        let mut out = *self;
        for (range, points) in [
            (&mut out.re_range, &mut out.re_points),
            (&mut out.im_range, &mut out.im_points),
        ] {
            let step = (range.1 - range.0) / (*points - 1) as f64;
            if range.0 > -radius || range.1 < radius {
                let lo = range.0.min(-radius);
                let hi = range.1.max(radius);
                let n = ((hi - lo) / step).ceil() as usize;
                *range = (lo, lo + step * n as f64);
                *points = n + 1;
            }
        }
        out
    }
}

/// Radius in the `α` plane holding essentially all of the Q mass of `state`.
pub fn support_radius(state: &QuantumState) -> f64 {
    let pops = state.populations();
    let mut cumulative = 0.0;
    let mut n_max = 0;
    for (n, p) in pops.iter().enumerate() {
        cumulative += p;
        n_max = n;
        if cumulative >= 1.0 - 1e-4 {
            break;
        }
    }
    let mean = match state.representation() {
        Representation::Pure(v) => {
            let b = crate::fock::make_annihilation(state.dim()).ok();
            b.map(|b| (b.matrix() * v).dotc(v).norm()).unwrap_or(0.0)
        }
        Representation::Mixed(rho) => {
            let b = crate::fock::make_annihilation(state.dim()).ok();
            b.map(|b| (b.matrix() * rho).trace().norm()).unwrap_or(0.0)
        }
    };
    mean.max((n_max as f64).sqrt()) + 3.5
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QGrid {
    pub re_range: (f64, f64),
    pub im_range: (f64, f64),
    pub re_points: usize,
    pub im_points: usize,
    /// Row-major, `values[i * re_points + j]` at `(re_j, im_i)`.
    pub values: Vec<f64>,
    /// Riemann sum `Σ Q ΔRe ΔIm`.
    pub normalization: f64,
}

impl QGrid {
    fn from_fn(spec: &GridSpec, f: impl Fn(Complex64) -> f64 + Sync) -> QGrid {
        let re = spec.re_axis();
        let im = spec.im_axis();
        let values: Vec<f64> = im
            .par_iter()
            .flat_map_iter(|&y| re.iter().map(move |&x| (x, y)).collect::<Vec<_>>())
            .map(|(x, y)| f(Complex64::new(x, y)))
            .collect();
        let normalization = crate::sum::pairwise_sum(&values) * spec.cell_area();
        QGrid {
            re_range: spec.re_range,
            im_range: spec.im_range,
            re_points: spec.re_points,
            im_points: spec.im_points,
            values,
            normalization,
        }
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            re_range: self.re_range,
            im_range: self.im_range,
            re_points: self.re_points,
            im_points: self.im_points,
            auto_widen: false,
        }
    }

    pub fn re_axis(&self) -> Vec<f64> {
        self.spec().re_axis()
    }

    pub fn im_axis(&self) -> Vec<f64> {
        self.spec().im_axis()
    }

    pub fn at(&self, im_index: usize, re_index: usize) -> f64 {
        self.values[im_index * self.re_points + re_index]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Location and value of the largest sample.
    pub fn max(&self) -> (Complex64, f64) {
        let (k, v) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
        let re = self.re_axis()[k % self.re_points];
        let im = self.im_axis()[k / self.re_points];
        (Complex64::new(re, im), v)
    }

    /// Means and variances of `Re α` and `Im α` under the sampled Q.
    pub fn moments(&self) -> QMoments {
        let re = self.re_axis();
        let im = self.im_axis();
        let mut acc = [0.0; 6];
        for (i, y) in im.iter().enumerate() {
            for (j, x) in re.iter().enumerate() {
                let q = self.at(i, j);
                acc[0] += q;
                acc[1] += q * x;
                acc[2] += q * y;
                acc[3] += q * x * x;
                acc[4] += q * y * y;
                acc[5] += q * x * y;
            }
        }
        let m = acc[0];
        let (mx, my) = (acc[1] / m, acc[2] / m);
        QMoments {
            mean: Complex64::new(mx, my),
            var_re: acc[3] / m - mx * mx,
            var_im: acc[4] / m - my * my,
            cov: acc[5] / m - mx * my,
        }
    }

    /// Q along `Im α = 0`, linearly interpolated between rows if needed.
    pub fn real_axis_profile(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let (lo, hi) = self.im_range;
        if !(lo <= 0.0 && hi >= 0.0) {
            return Err(Error::param("im_range", "does not contain Im α = 0"));
        }
        let step = (hi - lo) / (self.im_points - 1) as f64;
        let pos = -lo / step;
        let i0 = (pos.floor() as usize).min(self.im_points - 2);
        let w = pos - i0 as f64;
        let profile = (0..self.re_points)
            .map(|j| {
                if w.abs() < 1e-9 {
                    self.at(i0, j)
                } else {
                    (1.0 - w) * self.at(i0, j) + w * self.at(i0 + 1, j)
                }
            })
            .collect();
        Ok((self.re_axis(), profile))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QMoments {
    pub mean: Complex64,
    pub var_re: f64,
    pub var_im: f64,
    pub cov: f64,
}

fn conj_coherent(alpha: Complex64, len: usize) -> DVector<Complex64> {
    // ⟨α|n⟩ = e^{−|α|²/2} ᾱⁿ/√n!
    let ac = alpha.conj();
    let mut v = DVector::zeros(len);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..len {
        if n > 0 {
            c = c * ac / (n as f64).sqrt();
        }
        v[n] = c;
    }
    v
}

/// `⟨α|ρ|α⟩/π` at a single point.
pub fn husimi_at(state: &QuantumState, alpha: Complex64) -> f64 {
    let bra = conj_coherent(alpha, state.dim());
    match state.representation() {
        Representation::Pure(psi) => bra.iter().zip(psi.iter()).map(|(b, p)| b * p).sum::<Complex64>().norm_sqr() / PI,
        Representation::Mixed(rho) => {
            let ket = bra.map(|x| x.conj());
            (bra.transpose() * rho * ket)[(0, 0)].re / PI
        }
    }
}

fn single_mode(state: &QuantumState) -> Result<()> {
    if state.dims().len() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "Husimi Q needs a single-mode state, got dims {:?}",
            state.dims()
        )));
    }
    Ok(())
}

pub fn husimi_q(state: &QuantumState, grid: &GridSpec) -> Result<QGrid> {
    single_mode(state)?;
    grid.validate()?;
    let spec = if grid.auto_widen {
        grid.widened_to(support_radius(state))
    } else {
        *grid
    };
    let q = QGrid::from_fn(&spec, |a| husimi_at(state, a));
    if q.normalization < WINDOW_MASS_WARN {
        log::warn!(
            "Q window captures only {:.3} of the state's mass",
            q.normalization
        );
    }
    Ok(q)
}

/// `(e^{−|α−iβ|²} + e^{−|α+iβ|²})/(2π)`: equal mixture of `|iβ⟩` and `|−iβ⟩`.
pub fn mixture_q(beta: Complex64, grid: &GridSpec) -> Result<QGrid> {
    grid.validate()?;
    if !(beta.re.is_finite() && beta.im.is_finite()) {
        return Err(Error::param("beta", "must be finite"));
    }
    let ib = Complex64::i() * beta;
    let spec = if grid.auto_widen {
        grid.widened_to(beta.norm() + 3.5)
    } else {
        *grid
    };
    Ok(QGrid::from_fn(&spec, |a| {
        ((-(a - ib).norm_sqr()).exp() + (-(a + ib).norm_sqr()).exp()) / (2.0 * PI)
    }))
}

/// Interior local maxima of a sampled profile, refined by a parabola through
/// the three samples around each.
fn local_maxima(x: &[f64], y: &[f64], floor: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for k in 1..y.len().saturating_sub(1) {
        if y[k] > y[k - 1] && y[k] >= y[k + 1] && y[k] >= floor {
            let denom = y[k - 1] - 2.0 * y[k] + y[k + 1];
            let shift = if denom < 0.0 {
                0.5 * (y[k - 1] - y[k + 1]) / denom
            } else {
                0.0
            };
            let h = x[k + 1] - x[k];
            let value = y[k] - 0.25 * (y[k - 1] - y[k + 1]) * shift;
            out.push((x[k] + shift * h, value));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoPeakReport {
    /// `(Re α, Q)` of every local maximum above 5% of the slice maximum.
    pub maxima: Vec<(f64, f64)>,
    pub dip_position: f64,
    pub dip_value: f64,
    /// `1 − dip / min(peak₁, peak₂)` for the two largest maxima.
    pub dip_depth: f64,
    pub detected: bool,
}

/// Minimum relative dip between two maxima for the structure to count.
pub const MIN_DIP_DEPTH: f64 = 0.05;

/// Two maxima along a profile with a local minimum between them at least
/// [`MIN_DIP_DEPTH`] deep.
pub fn two_peak_structure(x: &[f64], y: &[f64]) -> TwoPeakReport {
    let top = y.iter().cloned().fold(0.0, f64::max);
    let maxima = local_maxima(x, y, 0.05 * top);
    let mut ranked = maxima.clone();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    if ranked.len() < 2 {
        return TwoPeakReport {
            maxima,
            dip_position: f64::NAN,
            dip_value: f64::NAN,
            dip_depth: 0.0,
            detected: false,
        };
    }
    let (a, b) = if ranked[0].0 < ranked[1].0 {
        (ranked[0], ranked[1])
    } else {
        (ranked[1], ranked[0])
    };
    let (mut dip_position, mut dip_value) = (f64::NAN, f64::INFINITY);
    for (xi, yi) in x.iter().zip(y) {
        if *xi > a.0 && *xi < b.0 && *yi < dip_value {
            dip_value = *yi;
            dip_position = *xi;
        }
    }
    let dip_depth = 1.0 - dip_value / a.1.min(b.1);
    TwoPeakReport {
        maxima,
        dip_position,
        dip_value,
        dip_depth,
        detected: dip_depth >= MIN_DIP_DEPTH,
    }
}

/// How snapshot times are converted from effective periods to `1/Ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PeriodReference {
    /// `2π/ϖ` evaluated at the mean photon number of the cavity state.
    MeanPhotonNumber,
    /// `2π/ϖ` evaluated at a given photon number.
    PhotonNumber { n: f64 },
    /// A fixed period in units of `1/Ω`.
    Fixed { period: f64 },
}

impl PeriodReference {
    pub fn period(&self, params: &SystemParams, cavity: &StateSpec) -> Result<f64> {
        let w = |n: f64| {
            let r = params.mech_freq * params.mech_freq
                + 4.0 * params.coupling * params.mech_freq * (n + 0.5);
            if r > 0.0 {
                Ok(2.0 * PI / r.sqrt())
            } else {
                Err(Error::UnphysicalConfiguration(r))
            }
        };
        match *self {
            PeriodReference::MeanPhotonNumber => w(cavity.mean_occupancy()),
            PeriodReference::PhotonNumber { n } => w(n),
            PeriodReference::Fixed { period } if period.is_finite() && period > 0.0 => Ok(period),
            PeriodReference::Fixed { .. } => Err(Error::param("period", "must be finite and > 0")),
        }
    }
}

/// `2π/ϖ_n` for an integer sector.
pub fn sector_period(params: &SystemParams, n: usize) -> Result<f64> {
    Ok(2.0 * PI / dressed_sector(params, n)?.dressed_freq)
}

#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    /// In effective periods.
    pub periods: f64,
    /// In `1/Ω`.
    pub time: f64,
    pub q: QGrid,
    pub phonon_purity: f64,
    /// `⟨(Δx)²⟩` and `⟨(Δp)²⟩` of the reduced phonon state, `x = b + b†`.
    pub var_x: f64,
    pub var_p: f64,
    /// Photon-number marginal of the joint state.
    #[serde(skip)]
    pub photon_marginal: Vec<f64>,
    pub worst_leak: Option<(usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotOptions {
    pub grid: GridSpec,
    pub period: PeriodReference,
}

impl Default for SnapshotOptions {
    fn default() -> Self {
        SnapshotOptions {
            grid: GridSpec::default(),
            period: PeriodReference::MeanPhotonNumber,
        }
    }
}

pub(crate) fn quadrature_variances(state: &QuantumState) -> Result<(f64, f64)> {
    let n = state.dim();
    let x = position(n)?;
    let p = momentum(n)?;
    let var = |op: &crate::fock::DenseOperator| -> Result<f64> {
        let m = state.expect(op)?.re;
        let m2 = state.expect(&op.compose(op)?)?.re;
        Ok(m2 - m * m)
    };
    Ok((var(&x)?, var(&p)?))
}

/// Reduced phonon Q functions at the given times (in effective periods) for
/// the product initial state `photon ⊗ phonon`.
///
/// All snapshots share one grid, widened to cover every snapshot when
/// `options.grid.auto_widen` is set.
pub fn snapshot_series(
    params: &SystemParams,
    photon: &StateSpec,
    phonon: &StateSpec,
    periods: &[f64],
    options: &SnapshotOptions,
) -> Result<Vec<Snapshot>> {
    params.validate()?;
    options.grid.validate()?;
    if periods.iter().any(|t| !t.is_finite()) {
        return Err(Error::param("times", "must be finite"));
    }
    let period = options.period.period(params, photon)?;
    let a = make_state(photon, params.photon_cutoff)?;
    let b = make_state(phonon, params.phonon_cutoff)?;
    let evolver = JointEvolver::new(params, &a)?;

    let evolved = periods
        .par_iter()
        .map(|&k| {
            let t = k * period;
            let out = evolver.evolve(&a, &b, t)?;
            let reduced = out.state.partial_trace(1)?;
            let marginal = out.state.partial_trace(0)?.populations();
            Ok((k, t, reduced, marginal, out.worst_leak))
        })
        .collect::<Result<Vec<_>>>()?;

    warn_worst_leak(evolved.iter().map(|e| e.4));

    let mut grid = options.grid;
    if grid.auto_widen {
        let radius = evolved
            .iter()
            .map(|e| support_radius(&e.2))
            .fold(0.0, f64::max);
        grid = grid.widened_to(radius);
        grid.auto_widen = false;
    }

    evolved
        .into_iter()
        .map(|(k, t, reduced, marginal, worst_leak)| {
            let q = husimi_q(&reduced, &grid)?;
            let (var_x, var_p) = quadrature_variances(&reduced)?;
            Ok(Snapshot {
                periods: k,
                time: t,
                q,
                phonon_purity: reduced.purity(),
                var_x,
                var_p,
                photon_marginal: marginal,
                worst_leak,
            })
        })
        .collect()
}

/// Reduced-phonon quadrature variances at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureSample {
    pub periods: f64,
    pub time: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub phonon_purity: f64,
}

/// [`snapshot_series`] without the Q grids, for dense time sampling.
pub fn quadrature_series(
    params: &SystemParams,
    photon: &StateSpec,
    phonon: &StateSpec,
    periods: &[f64],
    reference: &PeriodReference,
) -> Result<Vec<QuadratureSample>> {
    params.validate()?;
    if periods.iter().any(|t| !t.is_finite()) {
        return Err(Error::param("times", "must be finite"));
    }
    let period = reference.period(params, photon)?;
    let a = make_state(photon, params.photon_cutoff)?;
    let b = make_state(phonon, params.phonon_cutoff)?;
    let evolver = JointEvolver::new(params, &a)?;
    let samples = periods
        .par_iter()
        .map(|&k| {
            let t = k * period;
            let out = evolver.evolve(&a, &b, t)?;
            let reduced = out.state.partial_trace(1)?;
            let (var_x, var_p) = quadrature_variances(&reduced)?;
            Ok((
                QuadratureSample {
                    periods: k,
                    time: t,
                    var_x,
                    var_p,
                    phonon_purity: reduced.purity(),
                },
                out.worst_leak,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    warn_worst_leak(samples.iter().map(|s| s.1));
    Ok(samples.into_iter().map(|s| s.0).collect())
}

/// One warning for a whole series instead of one per time step.
fn warn_worst_leak(leaks: impl Iterator<Item = Option<(usize, f64)>>) {
    let worst = leaks.flatten().fold(None, |w: Option<(usize, f64)>, l| match w {
        Some(w) if w.1 >= l.1 => Some(w),
        _ => Some(l),
    });
    if let Some((sector, leaked)) = worst.filter(|w| w.1 > 1e-9) {
        log::warn!("photon sector {sector} leaks up to {leaked:.2e} past the phonon cutoff");
    }
}
