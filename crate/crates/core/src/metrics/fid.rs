use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{self, clamped_roots, matmul, sqrt_psd, symmetric_eigen, symmetrize};
use crate::{Error, Result};

/// `n` feature rows of dimension `d`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    n: usize,
    d: usize,
    rows: Vec<f32>,
}

impl FeatureSet {
    pub fn new(n: usize, d: usize, rows: Vec<f32>) -> Result<Self> {
        if rows.len() != n * d {
            return Err(Error::BufferLength {
                expected: n * d,
                found: rows.len(),
            });
        }
        if let Some(i) = rows.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { n, d, rows })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn rows(&self) -> &[f32] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.rows[i * self.d..(i + 1) * self.d]
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut rows = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            if i >= self.n {
                return Err(Error::InvalidArgument(alloc::format!("row {i} out of {} rows", self.n)));
            }
            rows.extend_from_slice(self.row(i));
        }
        Ok(Self {
            n: indices.len(),
            d: self.d,
            rows,
        })
    }
}

/// Mean vector and covariance matrix (row-major `d x d`) of a feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub dim: usize,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl GaussianStats {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        let dim = mu.len();
        if sigma.len() != dim * dim {
            return Err(Error::BufferLength {
                expected: dim * dim,
                found: sigma.len(),
            });
        }
        for i in 0..dim {
            if sigma[i * dim + i] < -1e-10 {
                return Err(Error::NotPositiveSemidefinite(sigma[i * dim + i]));
            }
            for j in 0..i {
                if libm::fabs(sigma[i * dim + j] - sigma[j * dim + i]) > 1e-8 {
                    return Err(Error::InvalidArgument(alloc::format!(
                        "covariance not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { dim, mu, sigma })
    }
}

/// Column means and unbiased (`n - 1`) sample covariance.
pub fn gaussian_stats(f: &FeatureSet) -> Result<GaussianStats> {
    if f.n < 2 {
        return Err(Error::InvalidArgument(alloc::format!(
            "gaussian statistics need at least 2 feature rows, got {}",
            f.n
        )));
    }
    let d = f.d;
    let mut mu = vec![0.0; d];
    for r in 0..f.n {
        for (m, &v) in mu.iter_mut().zip(f.row(r)) {
            *m += v as f64;
        }
    }
    for m in &mut mu {
        *m /= f.n as f64;
    }
    let mut sigma = vec![0.0; d * d];
    let mut centered = vec![0.0; d];
    for r in 0..f.n {
        for ((c, &v), &m) in centered.iter_mut().zip(f.row(r)).zip(&mu) {
            *c = v as f64 - m;
        }
        for i in 0..d {
            let ci = centered[i];
            if ci == 0.0 {
                continue;
            }
            let row = &mut sigma[i * d..i * d + i + 1];
            for (s, &cj) in row.iter_mut().zip(&centered[..=i]) {
                *s += ci * cj;
            }
        }
    }
    let denom = (f.n - 1) as f64;
    for i in 0..d {
        for j in 0..=i {
            let v = sigma[i * d + j] / denom;
            sigma[i * d + j] = v;
            sigma[j * d + i] = v;
        }
    }
    GaussianStats::new(mu, sigma)
}

/// Route used for `tr sqrt(sigma1 sigma2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SqrtMethod {
    /// Eigendecomposition, falling back to Newton–Schulz if QL stalls.
    #[default]
    Eigen,
    NewtonSchulz,
}

/// Relative threshold below which negative eigenvalues count as rounding.
const EIGEN_CLAMP: f64 = 1e-6;
const NS_MAX_ITER: usize = 200;
const NS_TOL: f64 = 1e-12;

/// Fréchet distance between two Gaussians:
/// `|mu1 - mu2|^2 + tr(sigma1 + sigma2 - 2 (sigma1 sigma2)^{1/2})`.
///
/// The product square root is taken on the symmetric congruent form
/// `sigma1^{1/2} sigma2 sigma1^{1/2}`, which shares its spectrum with
/// `sigma1 sigma2`.
pub fn frechet_distance(s1: &GaussianStats, s2: &GaussianStats, method: SqrtMethod) -> Result<f64> {
    if s1.dim != s2.dim {
        return Err(Error::LengthMismatch {
            left: s1.dim,
            right: s2.dim,
        });
    }
    let n = s1.dim;
    let mean_term: f64 = s1.mu.iter().zip(&s2.mu).map(|(a, b)| (a - b) * (a - b)).sum();
    let root1 = sqrt_psd(&s1.sigma, n, EIGEN_CLAMP)?;
    let inner = symmetrize(&matmul(&matmul(&root1, &s2.sigma, n), &root1, n), n);
    let tr_sqrt = match method {
        SqrtMethod::Eigen => match symmetric_eigen(&inner, n, false) {
            Ok(eig) => clamped_roots(&eig.values, EIGEN_CLAMP)?.iter().sum(),
            Err(Error::NotConverged) => newton_schulz_trace(&inner, n)?,
            Err(e) => return Err(e),
        },
        SqrtMethod::NewtonSchulz => newton_schulz_trace(&inner, n)?,
    };
    let fid = mean_term + linalg::trace(&s1.sigma, n) + linalg::trace(&s2.sigma, n) - 2.0 * tr_sqrt;
    Ok(if (-1e-6..0.0).contains(&fid) { 0.0 } else { fid })
}

fn newton_schulz_trace(a: &[f64], n: usize) -> Result<f64> {
    let root = linalg::newton_schulz_sqrt(a, n, NS_MAX_ITER, NS_TOL)?;
    Ok(linalg::trace(&root, n))
}
