//! Small dense linear algebra: a cyclic Jacobi eigensolver for symmetric
//! matrices and Cholesky solves for SPD systems.

use crate::error::{Error, Result};
use crate::tensor::DenseMatrix;

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a symmetric matrix.
///
/// Eigenvalues are sorted descending and `vectors` holds the matching unit
/// eigenvectors as columns. Each column is sign-canonicalized so that its
/// largest-magnitude entry is positive (the first one on exact magnitude ties).
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

pub fn symmetric_eigen(a: &DenseMatrix) -> Result<SymmetricEigen> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::mismatch(format!(
            "eigensolver needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if a.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite entry in symmetric matrix".into()));
    }

    // symmetrize: callers accumulate scatter in floating point
    let mut m = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (a.get(i, j) + a.get(j, i)));
    let mut v = DenseMatrix::identity(n);

    let total: f64 = m.data().iter().map(|x| x * x).sum();
    let threshold = f64::EPSILON * f64::EPSILON * total * n as f64;
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j) * m.get(i, j))
            .sum();
        if off <= threshold || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));

    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = DenseMatrix::from_fn(n, n, |r, c| v.get(r, order[c]));
    canonicalize_signs(&mut vectors);
    Ok(SymmetricEigen { values, vectors })
}

/// One Jacobi rotation zeroing `m[p][q]`, accumulated into `v`.
fn rotate(m: &mut DenseMatrix, v: &mut DenseMatrix, p: usize, q: usize) {
    let apq = m.get(p, q);
    if apq == 0.0 {
        return;
    }
    let app = m.get(p, p);
    let aqq = m.get(q, q);
    // negligible against both pivots: drop it instead of rotating
    let g = 100.0 * apq.abs();
    if app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
        m.set(p, q, 0.0);
        m.set(q, p, 0.0);
        return;
    }
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let n = m.rows();
    for k in 0..n {
        let mkp = m.get(k, p);
        let mkq = m.get(k, q);
        m.set(k, p, c * mkp - s * mkq);
        m.set(k, q, s * mkp + c * mkq);
    }
    for k in 0..n {
        let mpk = m.get(p, k);
        let mqk = m.get(q, k);
        m.set(p, k, c * mpk - s * mqk);
        m.set(q, k, s * mpk + c * mqk);
    }
    m.set(p, q, 0.0);
    m.set(q, p, 0.0);
    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, c * vkp - s * vkq);
        v.set(k, q, s * vkp + c * vkq);
    }
}

/// Flips each column so its largest-magnitude entry is positive.
pub fn canonicalize_signs(vectors: &mut DenseMatrix) {
    for c in 0..vectors.cols() {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for r in 0..vectors.rows() {
            let a = vectors.get(r, c).abs();
            if a > best_abs {
                best_abs = a;
                best = r;
            }
        }
        if vectors.get(best, c) < 0.0 {
            for r in 0..vectors.rows() {
                let x = vectors.get(r, c);
                vectors.set(r, c, -x);
            }
        }
    }
}

/// Lower-triangular Cholesky factor `L` with `a = L Lᵀ`.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::mismatch("cholesky needs a square matrix"));
    }
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Numeric(format!(
                "matrix is not positive definite (pivot {j} = {d:e})"
            )));
        }
        let djj = d.sqrt();
        l.set(j, j, djj);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / djj);
        }
    }
    Ok(l)
}

/// Solves `L x = b` in place for lower-triangular `L`.
pub fn forward_substitute(l: &DenseMatrix, b: &mut [f64]) {
    let n = l.rows();
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l.get(i, k) * b[k];
        }
        b[i] = s / l.get(i, i);
    }
}

/// Solves `Lᵀ x = b` in place for lower-triangular `L`.
pub fn backward_substitute_transposed(l: &DenseMatrix, b: &mut [f64]) {
    let n = l.rows();
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l.get(k, i) * b[k];
        }
        b[i] = s / l.get(i, i);
    }
}

/// Solves `a x = b` for SPD `a`, one right-hand side per column of `b`.
pub fn solve_spd(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if b.rows() != a.rows() {
        return Err(Error::mismatch("right-hand side row count"));
    }
    let l = cholesky(a)?;
    let mut out = DenseMatrix::zeros(b.rows(), b.cols());
    for c in 0..b.cols() {
        let mut col = b.column(c);
        forward_substitute(&l, &mut col);
        backward_substitute_transposed(&l, &mut col);
        for (r, v) in col.into_iter().enumerate() {
            out.set(r, c, v);
        }
    }
    Ok(out)
}

/// `aᵀ a` for a row-major matrix `a`.
pub fn gram_of_columns(a: &DenseMatrix) -> DenseMatrix {
    let (n, d) = (a.rows(), a.cols());
    let mut g = DenseMatrix::zeros(d, d);
    for r in 0..n {
        let row = a.row(r);
        for i in 0..d {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            for j in i..d {
                let v = g.get(i, j) + ri * row[j];
                g.set(i, j, v);
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            let v = g.get(j, i);
            g.set(i, j, v);
        }
    }
    g
}

/// `a aᵀ` for a row-major matrix `a`.
pub fn gram_of_rows(a: &DenseMatrix) -> DenseMatrix {
    let n = a.rows();
    let mut g = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = dot(a.row(i), a.row(j));
            g.set(i, j, v);
            g.set(j, i, v);
        }
    }
    g
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormalizes the columns of `a` by modified Gram-Schmidt.
pub fn orthonormalize_columns(a: &DenseMatrix) -> Result<DenseMatrix> {
    let (rows, cols) = (a.rows(), a.cols());
    if cols > rows {
        return Err(Error::arg(format!(
            "cannot orthonormalize {cols} columns in dimension {rows}"
        )));
    }
    let mut q: Vec<Vec<f64>> = (0..cols).map(|c| a.column(c)).collect();
    for j in 0..cols {
        for k in 0..j {
            let (done, rest) = q.split_at_mut(j);
            let proj = dot(&done[k], &rest[0]);
            for (x, y) in rest[0].iter_mut().zip(&done[k]) {
                *x -= proj * y;
            }
        }
        let norm = dot(&q[j], &q[j]).sqrt();
        if norm < 1e-12 {
            return Err(Error::Numeric("linearly dependent columns".into()));
        }
        q[j].iter_mut().for_each(|x| *x /= norm);
    }
    Ok(DenseMatrix::from_fn(rows, cols, |r, c| q[c][r]))
}
