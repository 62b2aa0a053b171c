//! Linear algebra on the identifiable block of role-space quantities.
//!
//! Membership vectors are parameterized by `K`-dimensional Gaussian vectors
//! whose last coordinate is pinned to zero, so every covariance-like matrix
//! in the crate is stored at full `K x K` size with a zero final row and
//! column.  Factorizations, solves, determinants and sampling therefore
//! operate on the leading `(K-1) x (K-1)` *active block* and re-embed
//! results into full-size containers.  `K = 1` degenerates to an empty
//! active block: every operation below treats that case as exactly zero
//! work rather than an error.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Error;
use crate::Result;

/// Default diagonal jitter used when factorizing covariance blocks that
/// should be positive definite but may have drifted to the boundary.
pub const DEFAULT_JITTER: f64 = 1e-8;

/// Natural log of 2*pi, used by Gaussian densities and entropies.
pub const LN_2PI: f64 = 1.8378770664093453;

/// Number of active (unpinned) coordinates for `k` roles.
#[inline]
pub fn active_dim(k: usize) -> usize {
    k.saturating_sub(1)
}

/// Symmetric part `(m + m^T) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Copy of the leading `d x d` block of `m`.
pub fn active_block(m: &DMatrix<f64>, d: usize) -> DMatrix<f64> {
    m.view((0, 0), (d, d)).into_owned()
}

/// Embed a `d x d` block into a `k x k` matrix whose trailing row/column
/// are zero.
pub fn embed_active(block: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let d = block.nrows();
    debug_assert!(d < k || (k == 0 && d == 0) || d <= k);
    let mut out = DMatrix::zeros(k, k);
    out.view_mut((0, 0), (d, d)).copy_from(block);
    out
}

/// Embed a length-`d` vector into a length-`k` vector with trailing zeros.
pub fn embed_active_vec(v: &DVector<f64>, k: usize) -> DVector<f64> {
    let d = v.len();
    let mut out = DVector::zeros(k);
    out.rows_mut(0, d).copy_from(v);
    out
}

/// Cholesky factorization of the active block of a `k x k` covariance.
///
/// Construction symmetrizes the block and retries with escalating diagonal
/// jitter (`jitter`, `10 * jitter`, ... up to four escalations) before
/// giving up with a numerical error.  All query methods accept and return
/// full-size (`k`) containers; the pinned coordinate maps to zero.
pub struct ActiveChol {
    chol: Option<Cholesky<f64, Dyn>>,
    k: usize,
    d: usize,
}

impl ActiveChol {
    /// Factor the active block of `m` (a `k x k` matrix).
    pub fn new(m: &DMatrix<f64>, k: usize, jitter: f64) -> Result<Self> {
        if m.nrows() != k || m.ncols() != k {
            return Err(Error::Data(format!(
                "expected a {k} x {k} matrix, got {} x {}",
                m.nrows(),
                m.ncols()
            )));
        }
        let d = active_dim(k);
        if d == 0 {
            return Ok(ActiveChol { chol: None, k, d });
        }
        let block = symmetrize(&active_block(m, d));
        let mut bump = 0.0;
        for attempt in 0..=4 {
            let mut trial = block.clone();
            if bump > 0.0 {
                for i in 0..d {
                    trial[(i, i)] += bump;
                }
            }
            if let Some(chol) = Cholesky::new(trial) {
                return Ok(ActiveChol {
                    chol: Some(chol),
                    k,
                    d,
                });
            }
            bump = if attempt == 0 { jitter } else { bump * 10.0 };
        }
        Err(Error::Numerical(format!(
            "cholesky failed on {d} x {d} block after jitter retries up to {bump:e}"
        )))
    }

    /// Number of roles `k` this factor was built for.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Solve `M x = v` on the active block; `v` and the result are
    /// full-size `k` vectors and the pinned coordinate of the result is 0.
    pub fn solve_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        let Some(chol) = &self.chol else {
            return DVector::zeros(self.k);
        };
        let x = chol.solve(&v.rows(0, self.d).into_owned());
        embed_active_vec(&x, self.k)
    }

    /// Full-size inverse with zero trailing row/column.
    pub fn inverse_embedded(&self) -> DMatrix<f64> {
        match &self.chol {
            Some(chol) => embed_active(&chol.inverse(), self.k),
            None => DMatrix::zeros(self.k, self.k),
        }
    }

    /// Log-determinant of the active block (0 for an empty block).
    pub fn logdet(&self) -> f64 {
        match &self.chol {
            Some(chol) => chol.l_dirty().diagonal().rows(0, self.d).map(f64::ln).sum() * 2.0,
            None => 0.0,
        }
    }

    /// Quadratic form `x^T M^{-1} x` on the active coordinates of a
    /// full-size `x`.
    pub fn quad_form(&self, x: &DVector<f64>) -> f64 {
        let Some(chol) = &self.chol else {
            return 0.0;
        };
        // Solve L y = x_active, then the form is |y|^2.
        let mut y = x.rows(0, self.d).into_owned();
        chol.l_dirty().solve_lower_triangular_mut(&mut y);
        y.norm_squared()
    }

    /// Log-density of `N(mean, M)` on the active block, evaluated at `x`.
    /// `x` and `mean` are full-size `k` vectors.
    pub fn mvn_logpdf(&self, x: &DVector<f64>, mean: &DVector<f64>) -> f64 {
        let diff = x - mean;
        -0.5 * (self.quad_form(&diff) + self.logdet() + self.d as f64 * LN_2PI)
    }

    /// Draw from `N(mean, M)` using this factor (`mean + L z`); the
    /// pinned coordinate of the result is zero.  Consumes exactly
    /// `k - 1` standard normals.
    pub fn sample<R: Rng>(&self, mean: &DVector<f64>, rng: &mut R) -> DVector<f64> {
        let mut out = mean.clone();
        if let Some(chol) = &self.chol {
            let z: Vec<f64> = (0..self.d).map(|_| rng.sample(StandardNormal)).collect();
            let l = chol.l_dirty();
            // Only the lower triangle of l_dirty is meaningful.
            for r in 0..self.d {
                let mut acc = 0.0;
                for (c, zc) in z.iter().enumerate().take(r + 1) {
                    acc += l[(r, c)] * zc;
                }
                out[r] += acc;
            }
        }
        out[self.k - 1] = 0.0;
        out
    }
}

/// Smallest eigenvalue of the (symmetrized) active block; `+inf` when the
/// block is empty.  Used for validation and tests.
pub fn min_eig_active(m: &DMatrix<f64>, k: usize) -> f64 {
    let d = active_dim(k);
    if d == 0 {
        return f64::INFINITY;
    }
    let block = symmetrize(&active_block(m, d));
    block
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Clamp the active block's eigenvalues from below at `floor` and re-embed,
/// returning an exactly symmetric matrix.  Used to keep estimated
/// covariances safely positive definite.
pub fn spd_floor_active(m: &DMatrix<f64>, k: usize, floor: f64) -> DMatrix<f64> {
    let d = active_dim(k);
    if d == 0 {
        return DMatrix::zeros(k, k);
    }
    let block = symmetrize(&active_block(m, d));
    let eig = block.symmetric_eigen();
    let mut rebuilt = DMatrix::zeros(d, d);
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        let lam = lambda.max(floor);
        let v = eig.eigenvectors.column(idx);
        rebuilt += v * v.transpose() * lam;
    }
    embed_active(&symmetrize(&rebuilt), k)
}

/// Draw from `N(mean, cov)` where `cov` is a `k x k` matrix that is
/// positive *semi*-definite on its active block (exact zeros allowed, so
/// point masses and degenerate walks sample correctly).  Always consumes
/// exactly `k - 1` standard normals from `rng`, keeping RNG streams
/// reproducible regardless of rank.
pub fn sample_mvn_psd<R: Rng>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    k: usize,
    rng: &mut R,
) -> DVector<f64> {
    let d = active_dim(k);
    let mut out = mean.clone();
    if d == 0 {
        return out;
    }
    let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let block = symmetrize(&active_block(cov, d));
    let eig = block.symmetric_eigen();
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        // Tiny negative eigenvalues are roundoff from a PSD matrix.
        let scale = lambda.max(0.0).sqrt();
        if scale > 0.0 {
            let v = eig.eigenvectors.column(idx);
            for r in 0..d {
                out[r] += scale * z[idx] * v[r];
            }
        }
    }
    out[k - 1] = 0.0;
    out
}
