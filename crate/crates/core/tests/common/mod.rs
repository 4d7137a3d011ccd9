//! Independent reference implementations shared by the integration tests.
//! Everything here uses plain nested `Vec`s and explicit index arithmetic.
#![allow(dead_code)]

use mpcanet_core::{DenseMatrix, DenseTensor, SeededRng};

pub type Mat = Vec<Vec<f64>>;

pub fn random_tensor(rng: &mut SeededRng, dims: &[usize]) -> DenseTensor {
    DenseTensor::from_fn(dims, |_| rng.normal()).unwrap()
}

pub fn random_mat(rng: &mut SeededRng, r: usize, c: usize) -> Mat {
    (0..r).map(|_| (0..c).map(|_| rng.normal()).collect()).collect()
}

pub fn to_dense(m: &Mat) -> DenseMatrix {
    let rows: Vec<&[f64]> = m.iter().map(Vec::as_slice).collect();
    DenseMatrix::from_rows(&rows).unwrap()
}

pub fn from_dense(m: &DenseMatrix) -> Mat {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Multi-index of linear position `k` in a row-major layout.
pub fn multi_index(mut k: usize, dims: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; dims.len()];
    for n in (0..dims.len()).rev() {
        idx[n] = k % dims[n];
        k /= dims[n];
    }
    idx
}

/// Mode-`n` unfolding: row `i_n`, column enumerates the other modes in
/// increasing mode order with the last mode fastest.
pub fn naive_unfold(t: &DenseTensor, n: usize) -> Mat {
    let dims = t.dims();
    let cols: usize = dims.iter().enumerate().filter(|&(k, _)| k != n).map(|(_, &d)| d).product();
    let mut out = vec![vec![0.0; cols]; dims[n]];
    for k in 0..t.len() {
        let idx = multi_index(k, dims);
        let mut col = 0;
        for m in 0..dims.len() {
            if m != n {
                col = col * dims[m] + idx[m];
            }
        }
        out[idx[n]][col] = t.data()[k];
    }
    out
}

/// `Y[.., j, ..] = Σ_i U[j][i] X[.., i, ..]` along mode `n`.
pub fn naive_mode_product(t: &DenseTensor, u: &Mat, n: usize) -> DenseTensor {
    let mut dims = t.dims().to_vec();
    dims[n] = u.len();
    DenseTensor::from_fn(&dims, |idx| {
        let mut src = idx.to_vec();
        (0..t.dims()[n])
            .map(|i| {
                src[n] = i;
                u[idx[n]][i] * t.get(&src)
            })
            .sum()
    })
    .unwrap()
}

pub fn naive_kron(a: &Mat, b: &Mat) -> Mat {
    let (rb, cb) = (b.len(), b[0].len());
    let mut out = vec![vec![0.0; a[0].len() * cb]; a.len() * rb];
    for (i, ar) in a.iter().enumerate() {
        for (j, &av) in ar.iter().enumerate() {
            for (k, br) in b.iter().enumerate() {
                for (l, &bv) in br.iter().enumerate() {
                    out[i * rb + k][j * cb + l] = av * bv;
                }
            }
        }
    }
    out
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let inner = b.len();
    a.iter()
        .map(|row| {
            (0..b[0].len())
                .map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub fn transpose(a: &Mat) -> Mat {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| {
            assert_eq!(x.len(), y.len());
            x.iter().zip(y).map(|(p, q)| (p - q).abs())
        })
        .fold(0.0, f64::max)
}

pub fn identity(n: usize) -> Mat {
    (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect()
}

/// Gram–Schmidt QR of a square matrix; returns (Q, R).
fn qr(a: &Mat) -> (Mat, Mat) {
    let n = a.len();
    let mut q = vec![vec![0.0; n]; n]; // columns stored as rows
    let mut r = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut v: Vec<f64> = (0..n).map(|i| a[i][j]).collect();
        for _ in 0..2 {
            for k in 0..j {
                let d: f64 = (0..n).map(|i| q[k][i] * v[i]).sum();
                r[k][j] += d;
                for i in 0..n {
                    v[i] -= d * q[k][i];
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        r[j][j] = norm;
        q[j] = if norm > 1e-300 { v.iter().map(|x| x / norm).collect() } else { vec![0.0; n] };
    }
    (transpose(&q), r)
}

/// Eigen-decomposition of a symmetric positive semidefinite matrix by
/// unshifted QR iteration. Returns eigenvalues in descending order and the
/// matching unit eigenvectors as columns.
pub fn qr_eigen(a: &Mat, iterations: usize) -> (Vec<f64>, Mat) {
    let n = a.len();
    let mut ak = a.clone();
    let mut v = identity(n);
    for _ in 0..iterations {
        let (q, r) = qr(&ak);
        ak = matmul(&r, &q);
        v = matmul(&v, &q);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| ak[j][j].partial_cmp(&ak[i][i]).unwrap());
    let values = order.iter().map(|&i| ak[i][i]).collect();
    let vectors = (0..n).map(|r| order.iter().map(|&c| v[r][c]).collect()).collect();
    (values, vectors)
}

/// `‖(I − B Bᵀ) A‖_F` for column-orthonormal `A`, `B` with the same number of
/// columns: an upper bound on the sine of the largest principal angle.
pub fn subspace_gap(a: &Mat, b: &Mat) -> f64 {
    let proj = matmul(b, &matmul(&transpose(b), a));
    let mut s = 0.0;
    for (ra, rp) in a.iter().zip(&proj) {
        for (x, y) in ra.iter().zip(rp) {
            s += (x - y) * (x - y);
        }
    }
    s.sqrt()
}

pub fn leading_columns(a: &Mat, k: usize) -> Mat {
    a.iter().map(|r| r[..k].to_vec()).collect()
}

/// `Σ (x − x̄)(x − x̄)ᵀ` over row vectors.
pub fn scatter_matrix(rows: &[Vec<f64>]) -> Mat {
    let d = rows[0].len();
    let m = rows.len() as f64;
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / m).collect();
    let mut s = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                s[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    s
}
