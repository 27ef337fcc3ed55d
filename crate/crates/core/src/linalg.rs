//! Symmetric and Hermitian eigendecompositions backed by `faer`.
//!
//! Results are returned as `nalgebra` matrices with eigenvalues in ascending order.

use faer::{c64, Mat, Side};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::qmat::{c, ComplexMatrix};

pub(crate) fn eigh_complex(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let n = h.nrows();
    let m = Mat::<c64>::from_fn(n, n, |i, j| {
        let z = h[(i, j)];
        c64::new(z.re, z.im)
    });
    let e = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|err| Error::Consistency(format!("eigendecomposition failed: {err:?}")))?;
    let (s, u) = (e.S().column_vector(), e.U());
    let values: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| {
        let z = u[(i, j)];
        c(z.re, z.im)
    });
    Ok((values, vectors))
}

pub(crate) fn eigh_real(h: &DMatrix<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let n = h.nrows();
    let m = Mat::<f64>::from_fn(n, n, |i, j| h[(i, j)]);
    let e = m.self_adjoint_eigen(Side::Lower).ok()?;
    let (s, u) = (e.S().column_vector(), e.U());
    let values = DVector::from_fn(n, |i, _| s[i]);
    if values.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((values, DMatrix::from_fn(n, n, |i, j| u[(i, j)])))
}
