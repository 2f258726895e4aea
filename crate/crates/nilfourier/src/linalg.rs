//! Small dense linear-algebra helpers on top of nalgebra: SVD ranks, null
//! spaces, orthonormal spans and the Pfaffian of a skew matrix.

use nalgebra::{DMatrix, DVector};

/// Singular values at or below this are treated as exact zeros, whatever the
/// relative threshold says.
pub const SINGULAR_FLOOR: f64 = 1e-30;

fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DVector::zeros(0);
    }
    a.clone().svd(false, false).singular_values
}

fn threshold(largest: f64, rel_tol: f64) -> f64 {
    if largest <= SINGULAR_FLOOR {
        f64::INFINITY
    } else {
        (rel_tol * largest).max(SINGULAR_FLOOR)
    }
}

/// Number of singular values above `rel_tol` times the largest one.
pub fn numerical_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let s = singular_values(a);
    let thr = threshold(s.max(), rel_tol);
    s.iter().filter(|&&v| v > thr).count()
}

/// Orthonormal basis (as columns) of the right null space of `a`.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let cols = a.ncols();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    if a.nrows() == 0 {
        return DMatrix::identity(cols, cols);
    }
    // Pad to at least square so that the SVD returns a full set of right
    // singular vectors.
    let rows = a.nrows().max(cols);
    let mut padded = DMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (a.nrows(), cols)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let thr = threshold(svd.singular_values.max(), rel_tol);
    let null: Vec<DVector<f64>> =
        svd.singular_values.iter().enumerate().filter(|(_, &s)| s <= thr).map(|(i, _)| v_t.row(i).transpose()).collect();
    if null.is_empty() {
        DMatrix::zeros(cols, 0)
    } else {
        DMatrix::from_columns(&null)
    }
}

/// Orthonormal basis (as columns) of the column span of `a`.
pub fn orthonormal_span(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let rows = a.nrows();
    if a.ncols() == 0 || rows == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let thr = threshold(svd.singular_values.max(), rel_tol);
    let keep: Vec<DVector<f64>> =
        svd.singular_values.iter().enumerate().filter(|(_, &s)| s > thr).map(|(i, _)| u.column(i).into_owned()).collect();
    if keep.is_empty() {
        DMatrix::zeros(rows, 0)
    } else {
        DMatrix::from_columns(&keep)
    }
}

/// Norm of the component of `v` orthogonal to the span of the orthonormal
/// columns of `q`.
pub fn residual_outside(q: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    if q.ncols() == 0 {
        return v.norm();
    }
    let proj = q * (q.transpose() * v);
    (v - proj).norm()
}

/// Pfaffian of a skew-symmetric matrix by Parlett-Reid style
/// tridiagonalization with partial pivoting.
pub fn pfaffian(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "pfaffian of a non-square matrix");
    if n == 0 {
        return 1.0;
    }
    if n % 2 == 1 {
        return 0.0;
    }
    let mut a = a.clone();
    let mut pf = 1.0;
    for k in (0..n - 1).step_by(2) {
        let mut kp = k + 1;
        let mut best = a[(k + 1, k)].abs();
        for i in k + 2..n {
            if a[(i, k)].abs() > best {
                best = a[(i, k)].abs();
                kp = i;
            }
        }
        if kp != k + 1 {
            a.swap_rows(k + 1, kp);
            a.swap_columns(k + 1, kp);
            pf = -pf;
        }
        if a[(k + 1, k)] == 0.0 {
            return 0.0;
        }
        let pivot = a[(k, k + 1)];
        pf *= pivot;
        if k + 2 < n {
            let tau: Vec<f64> = (k + 2..n).map(|j| a[(k, j)] / pivot).collect();
            let col: Vec<f64> = (k + 2..n).map(|i| a[(i, k + 1)]).collect();
            for (ii, i) in (k + 2..n).enumerate() {
                for (jj, j) in (k + 2..n).enumerate() {
                    a[(i, j)] += tau[ii] * col[jj] - col[ii] * tau[jj];
                }
            }
        }
    }
    pf
}
