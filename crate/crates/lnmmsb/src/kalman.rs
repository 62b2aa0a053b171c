//! Kalman filtering and Rauch-Tung-Striebel smoothing for the dynamic
//! prior mean.
//!
//! The dynamic model treats the per-snapshot average of membership
//! posterior means as a pseudo-observation of the latent prior mean:
//! `y_t ~ N(mu_t, sigma_t / n)` with `mu_t` following a Gaussian random
//! walk `mu_t = A mu_{t-1} + w`, `w ~ N(0, phi)` started from
//! `mu_1 ~ N(nu, phi)`.  All recursions run on the active block (the
//! pinned coordinate stays identically zero).

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::linalg::{symmetrize, ActiveChol};
use crate::static_infer::MembershipPosterior;
use crate::Result;

/// Per-snapshot pseudo-observations of the latent prior mean: the average
/// of membership posterior means.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoObs {
    y: Vec<DVector<f64>>,
}

impl PseudoObs {
    /// Validate a sequence of observation vectors (pinned coordinate zero).
    pub fn new(y: Vec<DVector<f64>>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::Data("pseudo-observation sequence is empty".into()));
        }
        let k = y[0].len();
        for (t, v) in y.iter().enumerate() {
            if v.len() != k {
                return Err(Error::Data(format!(
                    "pseudo-observation {t} has length {}, expected {k}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Numerical(format!(
                    "pseudo-observation {t} has non-finite entries"
                )));
            }
            if v[k - 1].abs() > 1e-12 {
                return Err(Error::Data(format!(
                    "pseudo-observation {t} must be zero in the pinned coordinate"
                )));
            }
        }
        Ok(PseudoObs { y })
    }

    /// Average the membership posterior means of each snapshot.
    pub fn from_posteriors(posteriors: &[Vec<MembershipPosterior>]) -> Result<Self> {
        if posteriors.is_empty() {
            return Err(Error::Data("no posteriors to average".into()));
        }
        let mut y = Vec::with_capacity(posteriors.len());
        for (t, snap) in posteriors.iter().enumerate() {
            if snap.is_empty() {
                return Err(Error::Data(format!("snapshot {t} has no posteriors")));
            }
            let k = snap[0].k();
            let mut mean = DVector::zeros(k);
            for p in snap {
                mean += p.gamma_tilde();
            }
            mean /= snap.len() as f64;
            mean[k - 1] = 0.0;
            y.push(mean);
        }
        PseudoObs::new(y)
    }

    pub fn n_times(&self) -> usize {
        self.y.len()
    }

    pub fn k(&self) -> usize {
        self.y[0].len()
    }

    pub fn y(&self, t: usize) -> &DVector<f64> {
        &self.y[t]
    }
}

/// State of the forward filter and (once [`rts_smooth`] has run) the
/// backward smoother.  All quantities are full-size with a pinned zero
/// coordinate; indices are snapshot positions `0..T`.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanTrace {
    pub(crate) x_pred: Vec<DVector<f64>>,
    pub(crate) p_pred: Vec<DMatrix<f64>>,
    pub(crate) x_filt: Vec<DVector<f64>>,
    pub(crate) p_filt: Vec<DMatrix<f64>>,
    pub(crate) gains: Vec<DMatrix<f64>>,
    pub(crate) x_smooth: Vec<DVector<f64>>,
    pub(crate) p_smooth: Vec<DMatrix<f64>>,
    /// Backward gain `L_t` for `t = 0..T-1` (empty until smoothing).
    pub(crate) smoother_gains: Vec<DMatrix<f64>>,
}

impl KalmanTrace {
    pub fn n_times(&self) -> usize {
        self.x_filt.len()
    }

    /// Whether [`rts_smooth`] has filled in the smoothed quantities.
    pub fn is_smoothed(&self) -> bool {
        !self.x_smooth.is_empty()
    }

    pub fn predicted_mean(&self, t: usize) -> &DVector<f64> {
        &self.x_pred[t]
    }

    pub fn predicted_cov(&self, t: usize) -> &DMatrix<f64> {
        &self.p_pred[t]
    }

    pub fn filtered_mean(&self, t: usize) -> &DVector<f64> {
        &self.x_filt[t]
    }

    pub fn filtered_cov(&self, t: usize) -> &DMatrix<f64> {
        &self.p_filt[t]
    }

    pub fn gain(&self, t: usize) -> &DMatrix<f64> {
        &self.gains[t]
    }

    pub fn smoothed_mean(&self, t: usize) -> &DVector<f64> {
        &self.x_smooth[t]
    }

    pub fn smoothed_cov(&self, t: usize) -> &DMatrix<f64> {
        &self.p_smooth[t]
    }

    /// Backward smoother gain `L_t` (defined for `t < T - 1`).
    pub fn smoother_gain(&self, t: usize) -> &DMatrix<f64> {
        &self.smoother_gains[t]
    }

    /// Smoothed means in snapshot order.
    pub fn smoothed_means(&self) -> &[DVector<f64>] {
        &self.x_smooth
    }
}

fn pin_last(mut v: DVector<f64>) -> DVector<f64> {
    let k = v.len();
    v[k - 1] = 0.0;
    v
}

/// Forward Kalman filter for the prior-mean random walk.
///
/// Observation noise at snapshot `t` is `sigmas[t] / n_nodes`.  The
/// filter starts from prediction `(nu, phi)` and alternates measurement
/// updates with one-step predictions through `a` (identity in the model;
/// an explicit argument so pooling limits can be probed).  Returns a
/// trace with empty smoothed fields — run [`rts_smooth`] to fill them.
pub fn kalman_filter(
    y: &PseudoObs,
    nu: &DVector<f64>,
    phi: &DMatrix<f64>,
    sigmas: &[DMatrix<f64>],
    n_nodes: usize,
    a: &DMatrix<f64>,
    jitter: f64,
) -> Result<KalmanTrace> {
    let t_len = y.n_times();
    let k = y.k();
    if n_nodes == 0 {
        return Err(Error::InvalidArgument("n_nodes must be positive".into()));
    }
    if sigmas.len() != t_len {
        return Err(Error::Data(format!(
            "dimension mismatch: {} observation covariances for {} snapshots",
            sigmas.len(),
            t_len
        )));
    }
    if nu.len() != k || phi.nrows() != k || a.nrows() != k {
        return Err(Error::Data(
            "dimension mismatch between state parameters and observations".into(),
        ));
    }
    let n = n_nodes as f64;
    let mut x_pred = Vec::with_capacity(t_len);
    let mut p_pred = Vec::with_capacity(t_len);
    let mut x_filt = Vec::with_capacity(t_len);
    let mut p_filt = Vec::with_capacity(t_len);
    let mut gains = Vec::with_capacity(t_len);

    let mut xp = nu.clone();
    let mut pp = symmetrize(phi);
    for t in 0..t_len {
        if sigmas[t].nrows() != k || sigmas[t].ncols() != k {
            return Err(Error::Data(format!(
                "observation covariance {t} has the wrong shape"
            )));
        }
        // Innovation covariance S = P_pred + Sigma_t / n.
        let s = &pp + &sigmas[t] / n;
        let s_chol = ActiveChol::new(&s, k, jitter).map_err(|_| {
            Error::Numerical(format!(
                "singular innovation covariance at snapshot {t}"
            ))
        })?;
        // Gain K = P_pred S^{-1} (embedded; pinned row/column zero).
        let gain = &pp * s_chol.inverse_embedded();
        let xf = pin_last(&xp + &gain * (y.y(t) - &xp));
        let pf = symmetrize(&(&pp - &gain * &pp));
        x_pred.push(xp.clone());
        p_pred.push(pp.clone());
        x_filt.push(xf.clone());
        p_filt.push(pf.clone());
        gains.push(gain);
        if t + 1 < t_len {
            xp = pin_last(a * &xf);
            pp = symmetrize(&(a * &pf * a.transpose() + phi));
        }
    }
    Ok(KalmanTrace {
        x_pred,
        p_pred,
        x_filt,
        p_filt,
        gains,
        x_smooth: Vec::new(),
        p_smooth: Vec::new(),
        smoother_gains: Vec::new(),
    })
}

/// Backward Rauch-Tung-Striebel pass: fills the smoothed means and
/// covariances of a filtered trace.  With a single snapshot the smoothed
/// quantities equal the filtered ones.
pub fn rts_smooth(mut trace: KalmanTrace, a: &DMatrix<f64>, jitter: f64) -> Result<KalmanTrace> {
    let t_len = trace.n_times();
    if t_len == 0 {
        return Err(Error::Data("cannot smooth an empty trace".into()));
    }
    let k = trace.x_filt[0].len();
    if a.nrows() != k || a.ncols() != k {
        return Err(Error::Data("state transition has the wrong shape".into()));
    }
    let mut x_smooth = vec![DVector::zeros(k); t_len];
    let mut p_smooth = vec![DMatrix::zeros(k, k); t_len];
    let mut smoother_gains = vec![DMatrix::zeros(k, k); t_len.saturating_sub(1)];
    x_smooth[t_len - 1] = trace.x_filt[t_len - 1].clone();
    p_smooth[t_len - 1] = trace.p_filt[t_len - 1].clone();
    for t in (0..t_len.saturating_sub(1)).rev() {
        let pred_chol = ActiveChol::new(&trace.p_pred[t + 1], k, jitter).map_err(|_| {
            Error::Numerical(format!(
                "singular one-step prediction covariance at snapshot {}",
                t + 1
            ))
        })?;
        // L_t = P_filt A^T P_pred^{-1}.
        let l = &trace.p_filt[t] * a.transpose() * pred_chol.inverse_embedded();
        x_smooth[t] = pin_last(
            &trace.x_filt[t] + &l * (&x_smooth[t + 1] - &trace.x_pred[t + 1]),
        );
        p_smooth[t] = symmetrize(
            &(&trace.p_filt[t] + &l * (&p_smooth[t + 1] - &trace.p_pred[t + 1]) * l.transpose()),
        );
        smoother_gains[t] = l;
    }
    trace.x_smooth = x_smooth;
    trace.p_smooth = p_smooth;
    trace.smoother_gains = smoother_gains;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::embed_active;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn scalar_cov(v: f64) -> DMatrix<f64> {
        embed_active(&DMatrix::from_element(1, 1, v), 2)
    }

    fn eye_a() -> DMatrix<f64> {
        embed_active(&DMatrix::identity(1, 1), 2)
    }

    fn obs(vals: &[f64]) -> PseudoObs {
        PseudoObs::new(
            vals.iter()
                .map(|&v| DVector::from_vec(vec![v, 0.0]))
                .collect(),
        )
        .unwrap()
    }

    /// Hand-worked scalar chain: nu = 0, phi = 1, per-snapshot observation
    /// noise 1, observations (2, 2).
    #[test]
    fn filter_matches_hand_worked_scalar_chain() {
        let y = obs(&[2.0, 2.0]);
        let trace = kalman_filter(
            &y,
            &DVector::zeros(2),
            &scalar_cov(1.0),
            &[scalar_cov(1.0), scalar_cov(1.0)],
            1,
            &eye_a(),
            0.0,
        )
        .unwrap();
        assert_relative_eq!(trace.gain(0)[(0, 0)], 0.5, max_relative = 1e-12);
        assert_relative_eq!(trace.filtered_mean(0)[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(trace.filtered_cov(0)[(0, 0)], 0.5, max_relative = 1e-12);
        assert_relative_eq!(trace.predicted_mean(1)[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(trace.predicted_cov(1)[(0, 0)], 1.5, max_relative = 1e-12);
        assert_relative_eq!(trace.gain(1)[(0, 0)], 0.6, max_relative = 1e-12);
        assert_relative_eq!(trace.filtered_mean(1)[0], 1.6, max_relative = 1e-12);
        assert_relative_eq!(trace.filtered_cov(1)[(0, 0)], 0.6, max_relative = 1e-12);
        assert!(!trace.is_smoothed());
    }

    #[test]
    fn smoother_matches_hand_worked_scalar_chain() {
        let y = obs(&[2.0, 2.0]);
        let trace = kalman_filter(
            &y,
            &DVector::zeros(2),
            &scalar_cov(1.0),
            &[scalar_cov(1.0), scalar_cov(1.0)],
            1,
            &eye_a(),
            0.0,
        )
        .unwrap();
        let trace = rts_smooth(trace, &eye_a(), 0.0).unwrap();
        assert!(trace.is_smoothed());
        assert_relative_eq!(
            trace.smoother_gain(0)[(0, 0)],
            1.0 / 3.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(trace.smoothed_mean(0)[0], 1.2, max_relative = 1e-12);
        assert_relative_eq!(trace.smoothed_cov(0)[(0, 0)], 0.4, max_relative = 1e-12);
        // Final snapshot: smoothed equals filtered.
        assert_relative_eq!(trace.smoothed_mean(1)[0], 1.6, max_relative = 1e-12);
        assert_relative_eq!(trace.smoothed_cov(1)[(0, 0)], 0.6, max_relative = 1e-12);
        // Smoothing never inflates uncertainty.
        for t in 0..2 {
            assert!(
                trace.smoothed_cov(t)[(0, 0)] <= trace.filtered_cov(t)[(0, 0)] + 1e-12
            );
        }
    }

    #[test]
    fn single_snapshot_smoothed_equals_filtered() {
        let y = obs(&[1.5]);
        let trace = kalman_filter(
            &y,
            &DVector::zeros(2),
            &scalar_cov(2.0),
            &[scalar_cov(4.0)],
            2,
            &eye_a(),
            0.0,
        )
        .unwrap();
        // Gain = 2 / (2 + 4/2) = 0.5.
        assert_relative_eq!(trace.gain(0)[(0, 0)], 0.5, max_relative = 1e-12);
        let trace = rts_smooth(trace, &eye_a(), 0.0).unwrap();
        assert_eq!(trace.smoothed_mean(0), trace.filtered_mean(0));
        assert_eq!(trace.smoothed_cov(0), trace.filtered_cov(0));
    }

    #[test]
    fn noiseless_observation_pins_state() {
        // Zero observation covariance: the filter must reproduce y exactly.
        let y = obs(&[0.7, -0.3, 1.1]);
        let trace = kalman_filter(
            &y,
            &DVector::zeros(2),
            &scalar_cov(1.0),
            &[scalar_cov(0.0), scalar_cov(0.0), scalar_cov(0.0)],
            5,
            &eye_a(),
            0.0,
        )
        .unwrap();
        for t in 0..3 {
            assert_abs_diff_eq!(trace.filtered_mean(t)[0], y.y(t)[0], epsilon = 1e-12);
            assert_abs_diff_eq!(trace.filtered_cov(t)[(0, 0)], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn pseudo_obs_from_posteriors_averages_means() {
        let k = 3;
        let sig = embed_active(&DMatrix::identity(2, 2), k);
        let mk = |a: f64, b: f64| {
            MembershipPosterior::new(DVector::from_vec(vec![a, b, 0.0]), sig.clone()).unwrap()
        };
        let y = PseudoObs::from_posteriors(&[
            vec![mk(1.0, 0.0), mk(3.0, 2.0)],
            vec![mk(-1.0, 1.0), mk(1.0, 1.0)],
        ])
        .unwrap();
        assert_eq!(y.n_times(), 2);
        assert_relative_eq!(y.y(0)[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(y.y(0)[1], 1.0, max_relative = 1e-12);
        assert_relative_eq!(y.y(1)[0], 0.0, max_relative = 1e-12);
        assert_eq!(y.y(1)[2], 0.0);
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let y = obs(&[1.0, 2.0]);
        let err = kalman_filter(
            &y,
            &DVector::zeros(2),
            &scalar_cov(1.0),
            &[scalar_cov(1.0)],
            1,
            &eye_a(),
            0.0,
        );
        assert!(err.is_err());
        let err = kalman_filter(
            &y,
            &DVector::zeros(3),
            &scalar_cov(1.0),
            &[scalar_cov(1.0), scalar_cov(1.0)],
            1,
            &eye_a(),
            0.0,
        );
        assert!(err.is_err());
    }
}
