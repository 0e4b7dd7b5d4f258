//! Dense symmetric linear algebra for Gaussian feature statistics.
//!
//! Matrices are square, row-major `Vec<f64>` of length `n * n`. The
//! eigensolver is Householder tridiagonalisation followed by the implicit QL
//! algorithm (the EISPACK `tred2` / `tql2` pair).

#![allow(clippy::needless_range_loop)]

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Eigenvalues in ascending order and, optionally, the matching unit
/// eigenvectors stored as the columns of a row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub n: usize,
    pub values: Vec<f64>,
    pub vectors: Option<Vec<f64>>,
}

const MAX_QL_ITERATIONS: usize = 60;

/// Returns `(a + a^T) / 2`.
pub fn symmetrize(a: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = 0.5 * (a[i * n + j] + a[j * n + i]);
        }
    }
    out
}

pub fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        let row = &mut out[i * n..(i + 1) * n];
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b[k * n..(k + 1) * n];
            for (o, &bkj) in row.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
    out
}

pub fn trace(a: &[f64], n: usize) -> f64 {
    (0..n).map(|i| a[i * n + i]).sum()
}

pub fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn frobenius(a: &[f64]) -> f64 {
    libm::sqrt(a.iter().map(|v| v * v).sum())
}

/// Eigendecomposition of a symmetric matrix. Only the lower triangle's
/// mirror image is assumed; pass a symmetrised matrix.
pub fn symmetric_eigen(a: &[f64], n: usize, want_vectors: bool) -> Result<SymmetricEigen> {
    if a.len() != n * n {
        return Err(Error::BufferLength {
            expected: n * n,
            found: a.len(),
        });
    }
    if let Some(i) = a.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    if n == 0 {
        return Ok(SymmetricEigen {
            n,
            values: Vec::new(),
            vectors: want_vectors.then(Vec::new),
        });
    }
    let mut v = a.to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut v, &mut d, &mut e);
    // Column-major copy so QL rotations touch contiguous memory.
    let mut vt = if want_vectors { Some(transpose(&v, n)) } else { None };
    tql2(n, &mut d, &mut e, vt.as_deref_mut())?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = vt.map(|vt| {
        let mut out = vec![0.0; n * n];
        for (col, &src) in order.iter().enumerate() {
            for k in 0..n {
                out[k * n + col] = vt[src * n + k];
            }
        }
        out
    });
    Ok(SymmetricEigen { n, values, vectors })
}

fn transpose(a: &[f64], n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = a[i * n + j];
        }
    }
    t
}

fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += libm::fabs(d[k]);
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
                v[j * n + i] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = libm::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j * n + i] = f;
                g = e[j] + v[j * n + j] * f;
                for k in j + 1..i {
                    g += v[k * n + j] * d[k];
                    e[k] += v[k * n + j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k * n + j] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k * n + i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k * n + i + 1] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = 0.0;
    }
    v[(n - 1) * n + n - 1] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal `(d, e)`. `vt` holds eigenvector columns
/// as contiguous rows.
fn tql2(n: usize, d: &mut [f64], e: &mut [f64], mut vt: Option<&mut [f64]>) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(libm::fabs(d[l]) + libm::fabs(e[l]));
        let mut m = l;
        while m < n {
            if libm::fabs(e[m]) <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::NotConverged);
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(vt) = vt.as_deref_mut() {
                        let (lo, hi) = vt.split_at_mut((i + 1) * n);
                        let col_i = &mut lo[i * n..];
                        let col_i1 = &mut hi[..n];
                        for (a, b) in col_i.iter_mut().zip(col_i1.iter_mut()) {
                            let hk = *b;
                            *b = s * *a + c * hk;
                            *a = c * *a - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if libm::fabs(e[l]) <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Principal square root of a symmetric positive semidefinite matrix via
/// eigendecomposition. Eigenvalues down to `-rel_tol * max_eigenvalue` are
/// treated as zero; anything more negative is rejected.
pub fn sqrt_psd(a: &[f64], n: usize, rel_tol: f64) -> Result<Vec<f64>> {
    let eig = symmetric_eigen(&symmetrize(a, n), n, true)?;
    let roots = clamped_roots(&eig.values, rel_tol)?;
    let v = eig.vectors.unwrap_or_default();
    let mut out = vec![0.0; n * n];
    for (k, &r) in roots.iter().enumerate() {
        if r == 0.0 {
            continue;
        }
        for i in 0..n {
            let vik = v[i * n + k] * r;
            if vik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += vik * v[j * n + k];
            }
        }
    }
    Ok(symmetrize(&out, n))
}

pub(crate) fn clamped_roots(values: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
    let max = values.iter().copied().fold(0.0f64, f64::max);
    values
        .iter()
        .map(|&l| {
            if l >= 0.0 {
                Ok(libm::sqrt(l))
            } else if l >= -rel_tol * max {
                Ok(0.0)
            } else {
                Err(Error::NotPositiveSemidefinite(l))
            }
        })
        .collect()
}

/// Coupled Newton–Schulz iteration for the square root of a symmetric
/// positive semidefinite matrix.
pub fn newton_schulz_sqrt(a: &[f64], n: usize, max_iter: usize, tol: f64) -> Result<Vec<f64>> {
    let norm = frobenius(a);
    if norm == 0.0 {
        return Ok(vec![0.0; n * n]);
    }
    let mut y: Vec<f64> = a.iter().map(|v| v / norm).collect();
    let target = y.clone();
    let mut z = identity(n);
    for _ in 0..max_iter {
        let zy = matmul(&z, &y, n);
        let mut t = zy;
        for (i, ti) in t.iter_mut().enumerate() {
            let id = if i % (n + 1) == 0 { 3.0 } else { 0.0 };
            *ti = 0.5 * (id - *ti);
        }
        y = matmul(&y, &t, n);
        z = matmul(&t, &z, n);
        let yy = matmul(&y, &y, n);
        let resid: Vec<f64> = yy.iter().zip(&target).map(|(p, q)| p - q).collect();
        if frobenius(&resid) <= tol {
            let s = libm::sqrt(norm);
            return Ok(y.iter().map(|v| v * s).collect());
        }
    }
    Err(Error::NotConverged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(e: &SymmetricEigen) -> Vec<f64> {
        let n = e.n;
        let v = e.vectors.as_ref().unwrap();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|k| v[i * n + k] * e.values[k] * v[j * n + k]).sum();
            }
        }
        out
    }

    #[test]
    fn eigen_of_known_matrix() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let a = [2.0, 1.0, 1.0, 2.0];
        let e = symmetric_eigen(&a, 2, true).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
        let r = reconstruct(&e);
        for (x, y) in r.iter().zip(&a) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn eigen_reconstructs_random_symmetric() {
        let n = 7;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = ((i * 31 + j * 17) as f64).sin();
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        let e = symmetric_eigen(&a, n, true).unwrap();
        for (x, y) in reconstruct(&e).iter().zip(&a) {
            assert!((x - y).abs() < 1e-12);
        }
        let only = symmetric_eigen(&a, n, false).unwrap();
        for (x, y) in only.values.iter().zip(&e.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_and_one_by_one() {
        let e = symmetric_eigen(&[4.0], 1, true).unwrap();
        assert_eq!(e.values, vec![4.0]);
        let s = sqrt_psd(&[4.0, 0.0, 0.0, 9.0], 2, 1e-6).unwrap();
        assert!((s[0] - 2.0).abs() < 1e-14 && (s[3] - 3.0).abs() < 1e-14);
        assert!(s[1].abs() < 1e-14);
    }

    #[test]
    fn newton_schulz_agrees_with_eigen() {
        let a = [5.0, 2.0, 0.5, 2.0, 4.0, 1.0, 0.5, 1.0, 3.0];
        let e = sqrt_psd(&a, 3, 1e-6).unwrap();
        let ns = newton_schulz_sqrt(&a, 3, 100, 1e-13).unwrap();
        for (x, y) in e.iter().zip(&ns) {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn rejects_indefinite() {
        let a = [1.0, 0.0, 0.0, -1.0];
        assert!(matches!(sqrt_psd(&a, 2, 1e-6), Err(Error::NotPositiveSemidefinite(_))));
        assert!(symmetric_eigen(&[f64::NAN], 1, false).is_err());
    }
}
