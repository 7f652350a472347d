//! Dense helpers for the 1x1 to 3x3 systems of the likelihood fits.

use alloc::vec::Vec;

pub(crate) type Matrix = Vec<Vec<f64>>;

pub(crate) fn zeros(n: usize) -> Matrix {
    alloc::vec![alloc::vec![0.0; n]; n]
}

pub(crate) fn identity(n: usize) -> Matrix {
    let mut m = zeros(n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub(crate) fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut c = zeros(n);
    for i in 0..n {
        for j in 0..n {
            c[i][j] = (0..n).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub(crate) fn transpose(a: &Matrix) -> Matrix {
    let n = a.len();
    let mut t = zeros(n);
    for i in 0..n {
        for j in 0..n {
            t[j][i] = a[i][j];
        }
    }
    t
}

/// Gauss-Jordan inverse with partial pivoting. On failure returns the
/// column whose pivot fell below `rel_tol` times the largest entry.
pub(crate) fn inverse(a: &Matrix, rel_tol: f64) -> Result<Matrix, usize> {
    let n = a.len();
    let scale = a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Err(0);
    }
    let mut m = a.clone();
    let mut inv = identity(n);
    let mut order: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap_or(col);
        if m[pivot][col].abs() <= rel_tol * scale {
            return Err(order[col]);
        }
        m.swap(pivot, col);
        inv.swap(pivot, col);
        order.swap(pivot, col);
        let p = m[col][col];
        for k in 0..n {
            m[col][k] /= p;
            inv[col][k] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for k in 0..n {
                        m[r][k] -= f * m[col][k];
                        inv[r][k] -= f * inv[col][k];
                    }
                }
            }
        }
    }
    Ok(inv)
}

/// Solves `a x = b` when `a` is symmetric positive definite.
pub(crate) fn cholesky_solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let mut l = zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d > 0.0) {
                    return None;
                }
                l[i][i] = libm::sqrt(d);
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut z = alloc::vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * z[k]).sum();
        z[i] = (b[i] - s) / l[i][i];
    }
    let mut x = alloc::vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (z[i] - s) / l[i][i];
    }
    Some(x)
}
