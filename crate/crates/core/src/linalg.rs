//! Dense complex linear algebra helpers on top of nalgebra.

use crate::error::{Error, Result};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Solves A x = b by LU with partial pivoting.
pub fn lu_solve(a: &CMatrix, b: &CVector, op: &'static str) -> Result<CVector> {
    let lu = a.clone().lu();
    let x = lu.solve(b).ok_or_else(|| Error::linalg(op, "singular linear system"))?;
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::linalg(op, "linear solve produced non-finite values"));
    }
    Ok(x)
}

/// Cholesky factor of a Hermitian positive-definite matrix.
pub fn cholesky(g: &CMatrix, op: &'static str) -> Result<Cholesky<Complex64, Dyn>> {
    g.clone().cholesky().ok_or_else(|| Error::linalg(op, "matrix is not positive definite (Cholesky failed)"))
}

/// L⁻¹ M L⁻ᴴ for the Cholesky factor L.
pub fn congruence_inverse(l: &CMatrix, m: &CMatrix, op: &'static str) -> Result<CMatrix> {
    let y = l.solve_lower_triangular(m).ok_or_else(|| Error::linalg(op, "triangular solve failed"))?;
    let z = l.solve_lower_triangular(&y.adjoint()).ok_or_else(|| Error::linalg(op, "triangular solve failed"))?;
    Ok(z.adjoint())
}

/// L M Lᴴ, the inverse of [`congruence_inverse`].
pub fn congruence(l: &CMatrix, m: &CMatrix) -> CMatrix {
    l * m * l.adjoint()
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Hermitian part (M + Mᴴ)/2.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// xᴴ M x.
pub fn quadratic_form(m: &CMatrix, x: &CVector) -> Complex64 {
    x.dotc(&(m * x))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn congruence_inverse_round_trip() {
        let g = CMatrix::from_fn(3, 3, |i, j| {
            Complex64::new(
                if i == j { 4.0 } else { 1.0 },
                if i < j {
                    0.5
                } else if i > j {
                    -0.5
                } else {
                    0.0
                },
            )
        });
        let ch = cholesky(&g, "test").unwrap();
        let l = ch.l();
        let m = CMatrix::from_fn(3, 3, |i, j| Complex64::new((i + 2 * j) as f64, (i * j) as f64));
        let back = congruence(&l, &congruence_inverse(&l, &m, "test").unwrap());
        assert!(max_abs(&(back - &m)) < 1e-12);
    }

    #[test]
    fn singular_system_reported() {
        let a = CMatrix::zeros(2, 2);
        let b = CVector::from_element(2, Complex64::new(1.0, 0.0));
        assert!(lu_solve(&a, &b, "test").unwrap_err().is_numerical());
    }
}
