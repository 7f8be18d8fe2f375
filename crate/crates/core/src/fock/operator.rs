use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::expm::expm;
use crate::error::{Error, Result};

/// Complex matrix acting on a (possibly composite) truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    matrix: DMatrix<Complex64>,
    dims: Vec<usize>,
}

/// Kronecker composition of two objects living on disjoint modes.
pub trait Tensor {
    fn tensor(&self, other: &Self) -> Self;
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<Complex64>, dims: Vec<usize>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidDimension(format!("mode dims {dims:?}")));
        }
        if matrix.nrows() != total || matrix.ncols() != total {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for dims {dims:?}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(DenseOperator { matrix, dims })
    }

    pub(crate) fn from_parts(matrix: DMatrix<Complex64>, dims: Vec<usize>) -> Self {
        debug_assert_eq!(matrix.nrows(), dims.iter().product::<usize>());
        DenseOperator { matrix, dims }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        DenseOperator::from_parts(self.matrix.adjoint(), self.dims.clone())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        DenseOperator::from_parts(&self.matrix * factor, self.dims.clone())
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!(
                "operators on {:?} and {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }

    /// `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        Ok(DenseOperator::from_parts(
            &self.matrix * &other.matrix,
            self.dims.clone(),
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        Ok(DenseOperator::from_parts(
            &self.matrix + &other.matrix,
            self.dims.clone(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        Ok(DenseOperator::from_parts(
            &self.matrix - &other.matrix,
            self.dims.clone(),
        ))
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.compose(other)?.sub(&other.compose(self)?)
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for operator of dim {}",
                v.len(),
                self.dim()
            )));
        }
        Ok(&self.matrix * v)
    }

    /// Spectral norm (largest singular value).
    pub fn operator_norm(&self) -> f64 {
        operator_norm(&self.matrix)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (&self.matrix - self.matrix.adjoint()).camax() <= tol
    }

    /// `‖U†U − 1‖` in the spectral norm.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        operator_norm(&(self.matrix.adjoint() * &self.matrix - DMatrix::identity(n, n)))
    }
}

pub(crate) fn operator_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

impl Tensor for DenseOperator {
    fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        DenseOperator::from_parts(self.matrix.kronecker(&other.matrix), dims)
    }
}

fn single_mode(cutoff: usize) -> Result<()> {
    if cutoff == 0 {
        return Err(Error::InvalidDimension("cutoff must be >= 1".into()));
    }
    Ok(())
}

/// Ladder operator `b` with `√n` on the first superdiagonal.
pub fn make_annihilation(cutoff: usize) -> Result<DenseOperator> {
    single_mode(cutoff)?;
    let mut m = DMatrix::zeros(cutoff, cutoff);
    for n in 1..cutoff {
        m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    Ok(DenseOperator::from_parts(m, vec![cutoff]))
}

pub fn annihilation(cutoff: usize) -> Result<DenseOperator> {
    make_annihilation(cutoff)
}

pub fn creation(cutoff: usize) -> Result<DenseOperator> {
    Ok(make_annihilation(cutoff)?.adjoint())
}

pub fn number(cutoff: usize) -> Result<DenseOperator> {
    single_mode(cutoff)?;
    let diag = DVector::from_fn(cutoff, |n, _| Complex64::new(n as f64, 0.0));
    Ok(DenseOperator::from_parts(
        DMatrix::from_diagonal(&diag),
        vec![cutoff],
    ))
}

/// `x = b + b†`.
pub fn position(cutoff: usize) -> Result<DenseOperator> {
    let b = make_annihilation(cutoff)?;
    b.add(&b.adjoint())
}

/// `p = i(b† − b)`.
pub fn momentum(cutoff: usize) -> Result<DenseOperator> {
    let b = make_annihilation(cutoff)?;
    Ok(b.adjoint().sub(&b)?.scale(Complex64::i()))
}

pub fn identity(dims: &[usize]) -> Result<DenseOperator> {
    let n: usize = dims.iter().product();
    DenseOperator::new(DMatrix::identity(n, n), dims.to_vec())
}

/// `exp(scale · H)` by scaling and squaring.
pub fn matrix_exponential(h: &DenseOperator, scale: Complex64) -> Result<DenseOperator> {
    if !(scale.re.is_finite() && scale.im.is_finite()) {
        return Err(Error::NumericDomain(format!("scale factor {scale}")));
    }
    let m = expm(&(h.matrix() * scale))?;
    Ok(DenseOperator::from_parts(m, h.dims.clone()))
}

/// `exp(scale · H)` for Hermitian `H` through its eigendecomposition.
///
/// Independent of [`matrix_exponential`]; the two are used to cross-check
/// each other.
pub fn hermitian_exponential(h: &DenseOperator, scale: Complex64) -> Result<DenseOperator> {
    if h.matrix.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
        return Err(Error::NumericDomain("non-finite operator entries".into()));
    }
    let tol = 1e-12 * h.matrix.camax().max(1.0);
    if !h.is_hermitian(tol) {
        return Err(Error::NumericDomain(
            "eigendecomposition route needs a Hermitian operator".into(),
        ));
    }
    let eig = h.matrix.clone().symmetric_eigen();
    let phases = eig.eigenvalues.map(|l| (scale * l).exp());
    let v = &eig.eigenvectors;
    let m = v * DMatrix::from_diagonal(&phases) * v.adjoint();
    Ok(DenseOperator::from_parts(m, h.dims.clone()))
}
