//! The logistic (softmax) map from Gaussian membership parameters to the
//! simplex, its log-partition function and that function's derivatives.
//!
//! For a length-`K` vector `gamma`, the log-partition is
//! `C(gamma) = log sum_k exp(gamma_k)`; the membership vector is
//! `pi_k = exp(gamma_k - C)`.  The gradient of `C` is the softmax itself
//! and the Hessian is `diag(g) - g g^T`; both are the workhorses of the
//! quadratic (Laplace) membership update.

use nalgebra::{DMatrix, DVector};

use crate::types::{Gamma, MembershipVector};

/// Numerically stable `log sum_k exp(v_k)` via max-shifting.
pub(crate) fn log_sum_exp(v: &DVector<f64>) -> f64 {
    let m = v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    // All inputs are finite (validated upstream), so m is finite.
    let s: f64 = v.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Softmax of an arbitrary real vector, normalized to sum to one at
/// machine precision.
pub(crate) fn softmax(v: &DVector<f64>) -> DVector<f64> {
    let m = v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut out = v.map(|x| (x - m).exp());
    let s: f64 = out.iter().sum();
    out /= s;
    out
}

/// Softmax gradient pair for the log-partition: `(g, diag(g) - g g^T)`.
pub(crate) fn softmax_grad_hess(v: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let g = softmax(v);
    let mut h = -&g * g.transpose();
    for i in 0..g.len() {
        h[(i, i)] += g[i];
    }
    (g, h)
}

/// Log-partition `C(gamma) = log sum_k exp(gamma_k)`.
pub fn log_partition(gamma: &Gamma) -> f64 {
    log_sum_exp(gamma.values())
}

/// Map membership parameters to the simplex: `pi_k` proportional to
/// `exp(gamma_k)`.
pub fn logistic_transform(gamma: &Gamma) -> MembershipVector {
    MembershipVector::new(softmax(gamma.values()))
        .expect("softmax output is a valid probability vector")
}

/// Gradient and Hessian of the log-partition at `gamma`: the gradient is
/// the softmax `g` and the Hessian is `diag(g) - g g^T` (symmetric PSD
/// with rows summing to zero).
pub fn grad_hess_log_partition(gamma: &Gamma) -> (DVector<f64>, DMatrix<f64>) {
    softmax_grad_hess(gamma.values())
}
