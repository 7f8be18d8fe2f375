use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::operator::{DenseOperator, Tensor};
use crate::error::{Error, Result};

/// Minimum fraction of the norm a truncated constructor must capture.
pub const MASS_CAPTURE: f64 = 1.0 - 1e-6;

const PURE_NORM_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const EIGEN_FLOOR: f64 = -1e-10;

/// Declarative single-mode state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    Fock { n: usize },
    Coherent { alpha: Complex64 },
    Thermal { mean: f64 },
    /// `exp(½ r (a†² − a²)) |0⟩`.
    SqueezedVacuum { r: f64 },
}

impl StateSpec {
    pub fn coherent(re: f64, im: f64) -> Self {
        StateSpec::Coherent {
            alpha: Complex64::new(re, im),
        }
    }

    pub fn mean_occupancy(&self) -> f64 {
        match *self {
            StateSpec::Fock { n } => n as f64,
            StateSpec::Coherent { alpha } => alpha.norm_sqr(),
            StateSpec::Thermal { mean } => mean,
            StateSpec::SqueezedVacuum { r } => r.sinh().powi(2),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            StateSpec::Coherent { alpha } if !(alpha.re.is_finite() && alpha.im.is_finite()) => {
                Err(Error::param("alpha", "must be finite"))
            }
            StateSpec::Thermal { mean } if !(mean.is_finite() && mean >= 0.0) => {
                Err(Error::param("mean", "thermal occupancy must be finite and >= 0"))
            }
            StateSpec::SqueezedVacuum { r } if !r.is_finite() => {
                Err(Error::param("r", "squeeze parameter must be finite"))
            }
            _ => Ok(()),
        }
    }

    /// Fock amplitudes `c_0 .. c_{len-1}` of a pure spec, exact (not
    /// renormalised).
    fn amplitudes(&self, len: usize) -> Option<Vec<Complex64>> {
        match *self {
            StateSpec::Fock { n } => {
                let mut v = vec![Complex64::new(0.0, 0.0); len];
                if n < len {
                    v[n] = Complex64::new(1.0, 0.0);
                }
                Some(v)
            }
            StateSpec::Coherent { alpha } => Some(coherent_amplitudes(alpha, len)),
            StateSpec::SqueezedVacuum { r } => Some(squeezed_vacuum_amplitudes(r, len)),
            StateSpec::Thermal { .. } => None,
        }
    }

    /// Exact populations `p_0 .. p_{len-1}`.
    fn populations(&self, len: usize) -> Vec<f64> {
        match *self {
            StateSpec::Thermal { mean } => thermal_populations(mean, len),
            _ => self
                .amplitudes(len)
                .unwrap()
                .into_iter()
                .map(|c| c.norm_sqr())
                .collect(),
        }
    }
}

/// `⌈μ + 8√μ + 10⌉`, the cutoff recommended for mean occupancy `μ`.
pub fn recommended_cutoff(mean: f64) -> usize {
    (mean + 8.0 * mean.sqrt() + 10.0).ceil() as usize
}

fn ln_factorials(len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut acc = 0.0;
    for k in 0..len {
        if k > 0 {
            acc += (k as f64).ln();
        }
        out.push(acc);
    }
    out
}

/// `e^{-|α|²/2} αⁿ / √(n!)`, evaluated in log space so large `|α|` does not
/// underflow the leading factor.
pub fn coherent_amplitudes(alpha: Complex64, len: usize) -> Vec<Complex64> {
    let r = alpha.norm();
    if r == 0.0 {
        let mut v = vec![Complex64::new(0.0, 0.0); len];
        if len > 0 {
            v[0] = Complex64::new(1.0, 0.0);
        }
        return v;
    }
    let phase = alpha.arg();
    let ln_r = r.ln();
    ln_factorials(len)
        .into_iter()
        .enumerate()
        .map(|(n, lf)| {
            let magnitude = (-0.5 * r * r + n as f64 * ln_r - 0.5 * lf).exp();
            Complex64::from_polar(magnitude, n as f64 * phase)
        })
        .collect()
}

/// Even-only series `c_{2m} = (tanh r)^m √((2m)!) / (2^m m! √cosh r)`.
fn squeezed_vacuum_amplitudes(r: f64, len: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); len];
    if len == 0 {
        return v;
    }
    let t = r.tanh();
    let mut c = 1.0 / r.cosh().sqrt();
    let mut m = 0usize;
    while 2 * m < len {
        v[2 * m] = Complex64::new(c, 0.0);
        // c_{2m+2} / c_{2m} = tanh r · √((2m+1)/(2m+2))
        c *= t * (((2 * m + 1) as f64) / ((2 * m + 2) as f64)).sqrt();
        m += 1;
    }
    v
}

fn thermal_populations(mean: f64, len: usize) -> Vec<f64> {
    if mean == 0.0 {
        let mut v = vec![0.0; len];
        if len > 0 {
            v[0] = 1.0;
        }
        return v;
    }
    let z = mean / (mean + 1.0);
    let mut p = 1.0 / (mean + 1.0);
    (0..len)
        .map(|_| {
            let out = p;
            p *= z;
            out
        })
        .collect()
}

/// Smallest cutoff capturing at least [`MASS_CAPTURE`] of the norm.
pub fn minimal_cutoff(spec: &StateSpec) -> usize {
    match *spec {
        StateSpec::Fock { n } => n + 1,
        StateSpec::Thermal { mean } => {
            if mean == 0.0 {
                1
            } else {
                let z = mean / (mean + 1.0);
                ((1.0 - MASS_CAPTURE).ln() / z.ln()).ceil().max(1.0) as usize
            }
        }
        _ => {
            let mut len = recommended_cutoff(spec.mean_occupancy()).max(8);
            loop {
                let pops = spec.populations(len);
                let mut acc = 0.0;
                for (k, p) in pops.iter().enumerate() {
                    acc += p;
                    if acc >= MASS_CAPTURE {
                        return k + 1;
                    }
                }
                len *= 2;
            }
        }
    }
}

/// Analytic number distribution, truncated once the cumulative mass reaches
/// `1 − tail`. Not renormalised.
pub fn number_distribution(spec: &StateSpec, tail: f64) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut len = recommended_cutoff(spec.mean_occupancy()).max(16);
    loop {
        let pops = spec.populations(len);
        let mut acc = 0.0;
        for (k, p) in pops.iter().enumerate() {
            acc += p;
            if acc >= 1.0 - tail {
                return Ok(pops[..=k].to_vec());
            }
        }
        if len > 50_000_000 {
            return Err(Error::NumericDomain(format!(
                "number distribution of {spec:?} does not reach 1 - {tail:e}"
            )));
        }
        len *= 2;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Pure(DVector<Complex64>),
    Mixed(DMatrix<Complex64>),
}

/// A normalised state over one mode or a product of modes.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    repr: Representation,
    dims: Vec<usize>,
}

fn check_dims(dims: &[usize], len: usize) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidDimension(format!("mode dims {dims:?}")));
    }
    let total: usize = dims.iter().product();
    if total != len {
        return Err(Error::DimensionMismatch(format!(
            "dims {dims:?} for representation of size {len}"
        )));
    }
    Ok(())
}

impl QuantumState {
    pub fn pure(amplitudes: DVector<Complex64>, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, amplitudes.len())?;
        let s = QuantumState {
            repr: Representation::Pure(amplitudes),
            dims,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn mixed(rho: DMatrix<Complex64>, dims: Vec<usize>) -> Result<Self> {
        if rho.nrows() != rho.ncols() {
            return Err(Error::DimensionMismatch("density matrix must be square".into()));
        }
        check_dims(&dims, rho.nrows())?;
        let s = QuantumState {
            repr: Representation::Mixed(rho),
            dims,
        };
        s.validate()?;
        Ok(s)
    }

    pub(crate) fn pure_unchecked(amplitudes: DVector<Complex64>, dims: Vec<usize>) -> Self {
        QuantumState {
            repr: Representation::Pure(amplitudes),
            dims,
        }
    }

    pub(crate) fn mixed_unchecked(rho: DMatrix<Complex64>, dims: Vec<usize>) -> Self {
        QuantumState {
            repr: Representation::Mixed(rho),
            dims,
        }
    }

    /// Checks the normalisation, hermiticity and positivity invariants.
    pub fn validate(&self) -> Result<()> {
        match &self.repr {
            Representation::Pure(v) => {
                let norm = v.norm_squared();
                if (norm - 1.0).abs() > PURE_NORM_TOL {
                    return Err(Error::NumericDomain(format!(
                        "pure state norm² {norm} deviates from 1"
                    )));
                }
            }
            Representation::Mixed(rho) => {
                let herm = (rho - rho.adjoint()).camax();
                if herm > HERMITIAN_TOL {
                    return Err(Error::NumericDomain(format!(
                        "density matrix not Hermitian (defect {herm:e})"
                    )));
                }
                let tr = rho.trace();
                if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
                    return Err(Error::NumericDomain(format!(
                        "density matrix trace {tr} deviates from 1"
                    )));
                }
                let min_eig = hermitian_part(rho)
                    .symmetric_eigenvalues()
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min);
                if min_eig < EIGEN_FLOOR {
                    return Err(Error::NumericDomain(format!(
                        "density matrix has negative eigenvalue {min_eig:e}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, Representation::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&DVector<Complex64>> {
        match &self.repr {
            Representation::Pure(v) => Some(v),
            Representation::Mixed(_) => None,
        }
    }

    pub fn density_matrix(&self) -> DMatrix<Complex64> {
        match &self.repr {
            Representation::Pure(v) => v * v.adjoint(),
            Representation::Mixed(rho) => rho.clone(),
        }
    }

    pub fn trace(&self) -> f64 {
        match &self.repr {
            Representation::Pure(v) => v.norm_squared(),
            Representation::Mixed(rho) => rho.trace().re,
        }
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        match &self.repr {
            Representation::Pure(v) => v.norm_squared().powi(2),
            Representation::Mixed(rho) => rho.iter().map(|x| x.norm_sqr()).sum(),
        }
    }

    /// Diagonal of the density matrix in the product Fock basis.
    pub fn populations(&self) -> Vec<f64> {
        match &self.repr {
            Representation::Pure(v) => v.iter().map(|c| c.norm_sqr()).collect(),
            Representation::Mixed(rho) => rho.diagonal().iter().map(|c| c.re).collect(),
        }
    }

    /// `⟨O⟩ = Tr(ρ O)`.
    pub fn expect(&self, op: &DenseOperator) -> Result<Complex64> {
        if op.dims() != self.dims.as_slice() {
            return Err(Error::DimensionMismatch(format!(
                "operator on {:?}, state on {:?}",
                op.dims(),
                self.dims
            )));
        }
        Ok(match &self.repr {
            Representation::Pure(v) => v.dotc(&(op.matrix() * v)),
            Representation::Mixed(rho) => (rho * op.matrix()).trace(),
        })
    }

    /// Reduced state of mode `keep`.
    pub fn partial_trace(&self, keep: usize) -> Result<QuantumState> {
        if keep >= self.dims.len() {
            return Err(Error::ModeIndex {
                index: keep,
                modes: self.dims.len(),
            });
        }
        let d = self.dims[keep];
        let left: usize = self.dims[..keep].iter().product();
        let right: usize = self.dims[keep + 1..].iter().product();
        let idx = |l: usize, a: usize, r: usize| (l * d + a) * right + r;
        let mut out = DMatrix::<Complex64>::zeros(d, d);
        match &self.repr {
            Representation::Pure(v) => {
                for a in 0..d {
                    for b in 0..d {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for l in 0..left {
                            for r in 0..right {
                                acc += v[idx(l, a, r)] * v[idx(l, b, r)].conj();
                            }
                        }
                        out[(a, b)] = acc;
                    }
                }
            }
            Representation::Mixed(rho) => {
                for a in 0..d {
                    for b in 0..d {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for l in 0..left {
                            for r in 0..right {
                                acc += rho[(idx(l, a, r), idx(l, b, r))];
                            }
                        }
                        out[(a, b)] = acc;
                    }
                }
            }
        }
        Ok(QuantumState::mixed_unchecked(out, vec![d]))
    }

    /// `½ ‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &QuantumState) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!(
                "states on {:?} and {:?}",
                self.dims, other.dims
            )));
        }
        let diff = hermitian_part(&(self.density_matrix() - other.density_matrix()));
        Ok(0.5 * diff.symmetric_eigenvalues().iter().map(|x| x.abs()).sum::<f64>())
    }

    /// Fidelity `⟨ψ|σ|ψ⟩` against a pure reference.
    pub fn overlap_with_pure(&self, reference: &DVector<Complex64>) -> Result<f64> {
        if reference.len() != self.dim() {
            return Err(Error::DimensionMismatch("reference vector length".into()));
        }
        Ok(match &self.repr {
            Representation::Pure(v) => reference.dotc(v).norm_sqr(),
            Representation::Mixed(rho) => reference.dotc(&(rho * reference)).re,
        })
    }
}

fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

impl Tensor for QuantumState {
    fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        match (&self.repr, &other.repr) {
            (Representation::Pure(a), Representation::Pure(b)) => {
                QuantumState::pure_unchecked(a.kronecker(b), dims)
            }
            _ => QuantumState::mixed_unchecked(
                self.density_matrix().kronecker(&other.density_matrix()),
                dims,
            ),
        }
    }
}

/// Builds the truncated, renormalised representation of `spec`.
///
/// Thermal states come back as density matrices, everything else as pure
/// amplitude vectors.
pub fn make_state(spec: &StateSpec, cutoff: usize) -> Result<QuantumState> {
    if cutoff == 0 {
        return Err(Error::InvalidDimension("cutoff must be >= 1".into()));
    }
    spec.validate()?;
    let pops = spec.populations(cutoff);
    let captured: f64 = pops.iter().sum();
    if captured < MASS_CAPTURE {
        return Err(Error::TruncationInsufficient {
            cutoff,
            captured,
            required: minimal_cutoff(spec),
        });
    }
    let state = match spec.amplitudes(cutoff) {
        Some(amps) => {
            let scale = 1.0 / captured.sqrt();
            let v = DVector::from_iterator(cutoff, amps.into_iter().map(|c| c * scale));
            QuantumState::pure_unchecked(v, vec![cutoff])
        }
        None => {
            let diag = DVector::from_iterator(
                cutoff,
                pops.iter().map(|p| Complex64::new(p / captured, 0.0)),
            );
            QuantumState::mixed_unchecked(DMatrix::from_diagonal(&diag), vec![cutoff])
        }
    };
    Ok(state)
}
