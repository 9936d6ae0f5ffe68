//! Thin wrappers around the LAPACK-backed decompositions used elsewhere,
//! so the backend choice lives in one place.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, EighInto, UPLO};
use num_complex::Complex64;

use crate::{Error, Result};

/// Eigenvalues and eigenvectors of a Hermitian matrix (columns are vectors).
pub fn eigh(matrix: &Array2<Complex64>) -> Result<(Array1<f64>, Array2<Complex64>)> {
    let (vals, vecs) = matrix
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Domain(format!("hermitian eigendecomposition failed: {e}")))?;
    let vecs = orient_eigenvectors(matrix, &vals, vecs);
    Ok((vals, vecs))
}

/// Some backend/layout combinations hand back the eigenvectors of the
/// transposed matrix — for Hermitian input, the complex conjugates of the
/// true ones (eigenvalues are unaffected). Detect which orientation
/// satisfies M·V = V·diag(w) and conjugate if needed, so callers can rely
/// on the column convention.
fn orient_eigenvectors(
    matrix: &Array2<Complex64>,
    vals: &Array1<f64>,
    vecs: Array2<Complex64>,
) -> Array2<Complex64> {
    let scaled_by_vals = |v: &Array2<Complex64>| {
        let mut out = v.clone();
        for (j, &w) in vals.iter().enumerate() {
            out.column_mut(j).mapv_inplace(|x| x * w);
        }
        out
    };
    let residual = |v: &Array2<Complex64>| -> f64 {
        let diff = matrix.dot(v) - scaled_by_vals(v);
        diff.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    };
    let plain = residual(&vecs);
    let conjugated = vecs.mapv(|v| v.conj());
    if residual(&conjugated) < plain {
        conjugated
    } else {
        vecs
    }
}

/// Eigenvalues only.
pub fn eigvalsh(matrix: &Array2<Complex64>) -> Result<Array1<f64>> {
    matrix
        .clone()
        .eigh_into(UPLO::Lower)
        .map(|(vals, _)| vals)
        .map_err(|e| Error::Domain(format!("hermitian eigendecomposition failed: {e}")))
}

/// Kronecker product, row-major convention: `(a ⊗ b)[(i,k),(j,l)] = a[i,j] b[k,l]`.
pub fn kron(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[(i, j)];
            if aij == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}
