//! Small dense linear-algebra helpers shared by the analysis code.
//!
//! Everything here operates on `nalgebra` dynamic matrices over
//! `Complex<f64>`. Sizes are tiny (MK x MK with MK of order tens), so
//! clarity wins over sparsity tricks.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Kronecker product `a (x) b`.
pub fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            for p in 0..br {
                for q in 0..bc {
                    out[(i * br + p, j * bc + q)] = aij * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Expand a K x K matrix of scalars into the MK x MK block matrix with
/// `m x m` scalar blocks, i.e. `a (x) I_m`.
pub fn expand_blocks(a: &DMatrix<Complex64>, m: usize) -> DMatrix<Complex64> {
    let k = a.nrows();
    let mut out = DMatrix::zeros(k * m, a.ncols() * m);
    for i in 0..k {
        for j in 0..a.ncols() {
            let s = a[(i, j)];
            for p in 0..m {
                out[(i * m + p, j * m + p)] = s;
            }
        }
    }
    out
}

/// Column-major vectorization of a matrix.
pub fn vec_of(mat: &DMatrix<Complex64>) -> DVector<Complex64> {
    DVector::from_column_slice(mat.as_slice())
}

/// Inverse of [`vec_of`]: reshape a length `r*c` vector into an `r x c`
/// matrix, column-major.
pub fn unvec(v: &DVector<Complex64>, rows: usize, cols: usize) -> DMatrix<Complex64> {
    assert_eq!(v.len(), rows * cols, "unvec: length mismatch");
    DMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// Spectral radius of a general complex square matrix: the largest
/// eigenvalue modulus, computed through a Schur decomposition.
pub fn spectral_radius(mat: &DMatrix<Complex64>) -> f64 {
    assert_eq!(mat.nrows(), mat.ncols(), "spectral_radius: square input");
    if mat.nrows() == 0 {
        return 0.0;
    }
    // Schur iteration can stall on matrices with pathological eigenvalue
    // clusters; fall back to power iteration only if it ever fails. The
    // Schur factor of a complex matrix is upper triangular, so the
    // eigenvalues are its diagonal.
    match mat.clone().try_schur(f64::EPSILON, 10_000) {
        Some(schur) => {
            let (_, t) = schur.unpack();
            t.diagonal().iter().map(|l| l.norm()).fold(0.0, f64::max)
        }
        None => power_iteration_radius(mat),
    }
}

/// Dominant eigenvalue modulus by power iteration with a fixed seed start.
/// Used only as a fallback; accurate when the dominant modulus is simple.
fn power_iteration_radius(mat: &DMatrix<Complex64>) -> f64 {
    let n = mat.nrows();
    let mut v = DVector::from_fn(n, |i, _| {
        Complex64::new(1.0 + (i as f64 * 0.7).sin(), (i as f64 * 0.3).cos())
    });
    v /= Complex64::new(v.norm(), 0.0);
    let mut radius = 0.0;
    for _ in 0..20_000 {
        let w = mat * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        radius = norm;
        v = w / Complex64::new(norm, 0.0);
    }
    radius
}

/// Largest eigenvalue of a Hermitian positive semidefinite matrix.
pub fn hermitian_lambda_max(mat: &DMatrix<Complex64>) -> f64 {
    assert_eq!(mat.nrows(), mat.ncols(), "lambda_max: square input");
    mat.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Spectral (largest singular value) norm of a complex matrix.
pub fn spectral_norm(mat: &DMatrix<Complex64>) -> f64 {
    if mat.is_empty() {
        return 0.0;
    }
    let gram = mat.adjoint() * mat;
    hermitian_lambda_max(&gram).max(0.0).sqrt()
}

/// Block maximum norm with square blocks of side `block`: the maximum over
/// block rows of the sum of spectral norms of the blocks in that row.
///
/// For a left-stochastic scalar weight matrix expanded by blocks this
/// evaluates to exactly one, which is what makes it the right norm for
/// step-size stability statements.
pub fn block_max_norm(mat: &DMatrix<Complex64>, block: usize) -> f64 {
    assert!(block > 0, "block_max_norm: zero block size");
    assert_eq!(mat.nrows(), mat.ncols(), "block_max_norm: square input");
    assert_eq!(
        mat.nrows() % block,
        0,
        "block_max_norm: size must be a multiple of the block side"
    );
    let nb = mat.nrows() / block;
    let mut worst = 0.0f64;
    for i in 0..nb {
        let mut row_sum = 0.0;
        for j in 0..nb {
            let sub = mat.view((i * block, j * block), (block, block)).into_owned();
            row_sum += spectral_norm(&sub);
        }
        worst = worst.max(row_sum);
    }
    worst
}

/// Factor `S` with `S S^* = mat` for a Hermitian positive semidefinite
/// matrix, via the eigendecomposition. Eigenvalues within `tol` of zero
/// (relative to the largest entry magnitude) are clamped to zero;
/// anything more negative, or a non-Hermitian input, is rejected.
pub fn psd_sqrt_factor(mat: &DMatrix<Complex64>, tol: f64) -> crate::Result<DMatrix<Complex64>> {
    use crate::error::Error;
    if mat.nrows() != mat.ncols() {
        return Err(Error::Dimension(format!(
            "square-root factor needs a square matrix, got {}x{}",
            mat.nrows(),
            mat.ncols()
        )));
    }
    let scale = mat
        .iter()
        .map(|c| c.norm())
        .fold(0.0f64, f64::max)
        .max(1.0);
    let hermitian_defect = (mat - mat.adjoint())
        .iter()
        .map(|c| c.norm())
        .fold(0.0f64, f64::max);
    if hermitian_defect > tol * scale {
        return Err(Error::Contract(format!(
            "matrix is not Hermitian (defect {hermitian_defect:.3e})"
        )));
    }
    let eig = mat.clone().symmetric_eigen();
    let mut root = DMatrix::zeros(mat.nrows(), mat.nrows());
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < -tol * scale {
            return Err(Error::Contract(format!(
                "matrix is not positive semidefinite (eigenvalue {lambda:.3e})"
            )));
        }
        root[(idx, idx)] = Complex64::new(lambda.max(0.0).sqrt(), 0.0);
    }
    Ok(&eig.eigenvectors * root)
}
