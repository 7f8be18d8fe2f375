//! Dense matrix exponential by scaling and squaring with diagonal Padé
//! approximants (Higham 2005, degrees 3, 5, 7, 9 and 13).
//!
//! Generic over the scalar so the squeeze matrices, which are real, can be
//! built without paying for complex arithmetic.

use nalgebra::{ComplexField, DMatrix};

use crate::error::{Error, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_230e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
];
const THETA_13: f64 = 5.371_920_351_148_152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

fn norm1<T: ComplexField<RealField = f64> + Copy>(a: &DMatrix<T>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled<T: ComplexField<RealField = f64> + Copy>(m: &DMatrix<T>, s: f64) -> DMatrix<T> {
    m.map(|x| x * T::from_real(s))
}

/// `exp(a)` for a square matrix with finite entries.
pub fn expm<T: ComplexField<RealField = f64> + Copy>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericDomain(
            "matrix exponential of a matrix with non-finite entries".into(),
        ));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }

    let eye = DMatrix::<T>::identity(n, n);
    let norm = norm1(a);

    for &(m, theta) in &THETA {
        if norm <= theta {
            let (u, v) = pade_low(a, &eye, m);
            return solve_pade(u, v);
        }
    }

    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = scaled(a, 0.5_f64.powi(squarings));
    let (u, v) = pade13(&a, &eye);
    let mut r = solve_pade(u, v)?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

fn pade_low<T: ComplexField<RealField = f64> + Copy>(
    a: &DMatrix<T>,
    eye: &DMatrix<T>,
    m: usize,
) -> (DMatrix<T>, DMatrix<T>) {
    let b: &[f64] = match m {
        3 => &B3,
        5 => &B5,
        7 => &B7,
        _ => &B9,
    };
    let a2 = a * a;
    // powers[k] = A^(2k)
    let mut powers = vec![eye.clone(), a2.clone()];
    while powers.len() <= m / 2 {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let mut odd = DMatrix::<T>::zeros(a.nrows(), a.ncols());
    let mut even = DMatrix::<T>::zeros(a.nrows(), a.ncols());
    for k in 0..=m / 2 {
        odd += scaled(&powers[k], b[2 * k + 1]);
        even += scaled(&powers[k], b[2 * k]);
    }
    (a * odd, even)
}

fn pade13<T: ComplexField<RealField = f64> + Copy>(
    a: &DMatrix<T>,
    eye: &DMatrix<T>,
) -> (DMatrix<T>, DMatrix<T>) {
    let b = &B13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let u_inner = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    let u_outer = &a6 * u_inner
        + scaled(&a6, b[7])
        + scaled(&a4, b[5])
        + scaled(&a2, b[3])
        + scaled(eye, b[1]);
    let u = a * u_outer;

    let v_inner = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    let v = &a6 * v_inner
        + scaled(&a6, b[6])
        + scaled(&a4, b[4])
        + scaled(&a2, b[2])
        + scaled(eye, b[0]);
    (u, v)
}

fn solve_pade<T: ComplexField<RealField = f64> + Copy>(
    u: DMatrix<T>,
    v: DMatrix<T>,
) -> Result<DMatrix<T>> {
    let numerator = &v + &u;
    let denominator = v - u;
    denominator
        .lu()
        .solve(&numerator)
        .ok_or_else(|| Error::NumericDomain("singular Padé denominator".into()))
}
