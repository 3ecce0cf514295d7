use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative tolerance below which a negative pivot is treated as roundoff.
pub const NEGATIVE_PIVOT_TOL: f64 = 1e-8;
/// Relative size under which a nonnegative pivot counts as an exact zero.
const ZERO_PIVOT_TOL: f64 = 1e-13;
/// Maximum allowed asymmetry.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Lower-triangular factor `L` with `L·Lᵀ = sigma`, tolerant of
/// positive semidefinite input.
///
/// Zero-variance coordinates produce zero rows; pivots in
/// `[-1e-8·max_diag, 0]` are clamped to zero, anything more negative is an
/// error naming the pivot index.
pub fn cholesky(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = sigma.nrows();
    if sigma.ncols() != k {
        return Err(Error::Argument(format!(
            "covariance must be square, got {}x{}",
            k,
            sigma.ncols()
        )));
    }
    for i in 0..k {
        for j in 0..i {
            if (sigma[(i, j)] - sigma[(j, i)]).abs() > SYMMETRY_TOL {
                return Err(Error::Argument(format!(
                    "covariance is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let max_diag = (0..k).map(|i| sigma[(i, i)].abs()).fold(0.0, f64::max);
    let mut l = DMatrix::<f64>::zeros(k, k);
    for j in 0..k {
        let mut pivot = sigma[(j, j)];
        for p in 0..j {
            pivot -= l[(j, p)] * l[(j, p)];
        }
        if pivot < -NEGATIVE_PIVOT_TOL * max_diag {
            return Err(Error::Factorization { pivot: j, value: pivot });
        }
        if pivot <= ZERO_PIVOT_TOL * max_diag {
            continue;
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..k {
            let mut s = sigma[(i, j)];
            for p in 0..j {
                s -= l[(i, p)] * l[(j, p)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct_err(sigma: &DMatrix<f64>, l: &DMatrix<f64>) -> f64 {
        (l * l.transpose() - sigma).abs().max()
    }

    #[test]
    fn identity_is_fixed_point() {
        let i = DMatrix::<f64>::identity(4, 4);
        assert_eq!(cholesky(&i).unwrap(), i);
    }

    #[test]
    fn two_by_two_example() {
        let s = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        let l = cholesky(&s).unwrap();
        assert_eq!(l[(0, 0)], 2.0);
        assert_eq!(l[(1, 0)], 1.0);
        assert_eq!(l[(0, 1)], 0.0);
        assert!((l[(1, 1)] - 2f64.sqrt()).abs() < 1e-15);
        assert!(reconstruct_err(&s, &l) < 1e-10);
    }

    #[test]
    fn zero_variance_coordinate() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let l = cholesky(&s).unwrap();
        assert_eq!(l, s);
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(cholesky(&z).unwrap(), z);
    }

    #[test]
    fn indefinite_is_rejected_with_pivot() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match cholesky(&s) {
            Err(Error::Factorization { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("expected factorization error, got {other:?}"),
        }
    }

    #[test]
    fn asymmetric_is_rejected() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(cholesky(&s), Err(Error::Argument(_))));
    }
}
