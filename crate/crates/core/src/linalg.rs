//! Small dense complex linear-algebra helpers shared by the detectors,
//! precoders and the gain-correction step of mNOMP.

use crate::{CMatrix, CVector, Complex64, Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

/// Draws one circularly-symmetric complex Gaussian sample with the given variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

pub fn complex_normal_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    variance: f64,
) -> CMatrix {
    // Column-major fill keeps the draw order stable across nalgebra versions.
    let mut m = CMatrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = complex_normal(rng, variance);
        }
    }
    m
}

pub fn complex_normal_vector<R: Rng + ?Sized>(rng: &mut R, len: usize, variance: f64) -> CVector {
    CVector::from_iterator(len, (0..len).map(|_| complex_normal(rng, variance)))
}

/// Solves `a x = b` for square `a`, failing on (numerically) singular input.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(Error::config(format!(
            "solve: incompatible shapes {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let lu = a.clone().lu();
    let x = lu
        .solve(b)
        .ok_or_else(|| Error::numerical("singular matrix in linear solve"))?;
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::numerical("non-finite solution in linear solve"));
    }
    Ok(x)
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    solve(a, &CMatrix::identity(a.nrows(), a.ncols()))
}

/// Reciprocal condition estimate of a Gram matrix from its diagonal LU pivots.
///
/// Cheap rank guard: ratio of smallest to largest `|U_ii|`.
pub fn pivot_ratio(a: &CMatrix) -> f64 {
    let lu = a.clone().lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..u.nrows().min(u.ncols())).map(|i| u[(i, i)].norm()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

/// Left pseudo-inverse `(AᴴA)⁻¹Aᴴ` of a tall, full-column-rank matrix.
pub fn left_pinv(a: &CMatrix) -> Result<CMatrix> {
    let gram = a.adjoint() * a;
    if pivot_ratio(&gram) < 1e-13 {
        return Err(Error::numerical("matrix is rank deficient"));
    }
    solve(&gram, &a.adjoint())
}

/// Right pseudo-inverse `Aᴴ(AAᴴ)⁻¹` of a wide, full-row-rank matrix.
pub fn right_pinv(a: &CMatrix) -> Result<CMatrix> {
    let gram = a * a.adjoint();
    if pivot_ratio(&gram) < 1e-13 {
        return Err(Error::numerical("matrix is rank deficient"));
    }
    let inv = inverse(&gram)?;
    Ok(a.adjoint() * inv)
}

pub fn norm_sqr(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}
