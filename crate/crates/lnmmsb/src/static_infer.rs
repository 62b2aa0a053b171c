//! Variational inference and parameter learning for the static model.
//!
//! The posterior over latent state factorizes as a product of per-dyad
//! role posteriors (`delta` tables) and per-node Gaussian membership
//! posteriors.  Coordinate updates alternate between:
//!
//! * closed-form `delta` tables given membership means,
//! * a quadratic (Laplace) update of each membership posterior around the
//!   previous mean, using expected role counts gathered from the `delta`
//!   tables,
//! * closed-form compatibility-matrix and prior re-estimation.
//!
//! Progress is tracked by a surrogate objective: the expected
//! complete-data log-likelihood under the factored posterior (with the
//! membership log-partition evaluated at the posterior mean) plus the
//! Gaussian entropy/cross-entropy terms.  The same number drives
//! convergence checks and best-of-restarts selection.

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::config::{FitCfg, InferCfg};
use crate::error::Error;
use crate::linalg::{
    active_block, active_dim, embed_active, symmetrize, ActiveChol, DEFAULT_JITTER,
};
use crate::logistic::{log_sum_exp, softmax_grad_hess};
use crate::types::{CompatMatrix, NetSeq, StaticParams};
use crate::Result;

/// Edge probabilities are clamped into `[BETA_FLOOR, 1 - BETA_FLOOR]`
/// inside logs so structurally extreme compatibility values cannot
/// produce infinities.
pub const BETA_FLOOR: f64 = 1e-6;

/// Posterior over the role pair of one dyad: entry `(u, v)` is the joint
/// probability that the sender drew role `u` and the receiver role `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgePosterior {
    delta: DMatrix<f64>,
}

impl EdgePosterior {
    fn uniform(k: usize) -> Self {
        EdgePosterior {
            delta: DMatrix::from_element(k, k, 1.0 / (k * k) as f64),
        }
    }

    pub fn k(&self) -> usize {
        self.delta.nrows()
    }

    pub fn delta(&self) -> &DMatrix<f64> {
        &self.delta
    }
}

/// Gaussian posterior over one node's membership parameters.  The mean
/// keeps the pinned coordinate at zero and the covariance is zero on the
/// pinned row/column, positive definite on the active block.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipPosterior {
    gamma_tilde: DVector<f64>,
    sigma_tilde: DMatrix<f64>,
}

impl MembershipPosterior {
    pub fn new(gamma_tilde: DVector<f64>, sigma_tilde: DMatrix<f64>) -> Result<Self> {
        let k = gamma_tilde.len();
        if k == 0 {
            return Err(Error::Data("membership posterior has zero roles".into()));
        }
        if gamma_tilde.iter().any(|v| !v.is_finite())
            || sigma_tilde.iter().any(|v| !v.is_finite())
        {
            return Err(Error::Numerical(
                "membership posterior has non-finite entries".into(),
            ));
        }
        if gamma_tilde[k - 1] != 0.0 {
            return Err(Error::Data(
                "membership posterior mean must keep the pinned coordinate at zero".into(),
            ));
        }
        if sigma_tilde.nrows() != k || sigma_tilde.ncols() != k {
            return Err(Error::Data("membership posterior covariance shape mismatch".into()));
        }
        Ok(MembershipPosterior {
            gamma_tilde,
            sigma_tilde,
        })
    }

    pub fn k(&self) -> usize {
        self.gamma_tilde.len()
    }

    pub fn gamma_tilde(&self) -> &DVector<f64> {
        &self.gamma_tilde
    }

    pub fn sigma_tilde(&self) -> &DMatrix<f64> {
        &self.sigma_tilde
    }

    /// Posterior-mean membership vector (softmax of the mean).
    pub fn mean_membership(&self) -> crate::types::MembershipVector {
        crate::types::MembershipVector::new(crate::logistic::softmax(&self.gamma_tilde))
            .expect("softmax output is a valid probability vector")
    }
}

/// Expected role-draw counts per node, accumulated from dyad posteriors.
/// Component `m(i)[u]` is the expected number of times node `i` drew role
/// `u` across all of its dyads.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedCounts {
    m: Vec<DVector<f64>>,
}

impl ExpectedCounts {
    pub fn n_nodes(&self) -> usize {
        self.m.len()
    }

    pub fn m(&self, i: usize) -> &DVector<f64> {
        &self.m[i]
    }
}

/// What happened during an inference or fitting run.
///
/// For plain posterior inference (`infer_*` with fixed parameters)
/// `n_outer` is zero and `n_inner` counts coordinate sweeps; for full
/// fits `n_outer` counts prior re-estimation cycles and `n_inner` the
/// cumulative inner sweeps.  `objective_trace` holds every surrogate
/// objective evaluation of the winning restart, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub converged: bool,
    pub n_outer: usize,
    pub n_inner: usize,
    pub objective_trace: Vec<f64>,
    /// Index of the restart that won on final objective.
    pub restart: usize,
}

impl FitReport {
    /// Final surrogate objective of the winning restart.
    pub fn final_objective(&self) -> f64 {
        *self
            .objective_trace
            .last()
            .expect("objective trace is never empty")
    }
}

/// Posterior state produced by [`infer_lnmmsb`].
#[derive(Debug, Clone)]
pub struct StaticInference {
    pub posteriors: Vec<MembershipPosterior>,
    /// One entry per modeled dyad, aligned with `NetSeq::pairs`.
    pub deltas: Vec<EdgePosterior>,
    pub report: FitReport,
}

/// Parameters and posterior state produced by [`fit_lnmmsb`].
#[derive(Debug, Clone)]
pub struct StaticFit {
    pub params: StaticParams,
    pub posteriors: Vec<MembershipPosterior>,
    /// One entry per modeled dyad, aligned with `NetSeq::pairs`.
    pub deltas: Vec<EdgePosterior>,
    pub report: FitReport,
}

/// Clamped log-probability tables for a compatibility matrix, plus the
/// structural-degeneracy flags (an all-zero matrix makes every present
/// edge impossible, an all-one matrix every absent edge).
pub(crate) struct LogCompat {
    log_on: DMatrix<f64>,
    log_off: DMatrix<f64>,
    degenerate_on: bool,
    degenerate_off: bool,
}

impl LogCompat {
    pub(crate) fn new(b: &CompatMatrix) -> Self {
        let m = b.as_matrix();
        LogCompat {
            log_on: m.map(|p| p.clamp(BETA_FLOOR, 1.0 - BETA_FLOOR).ln()),
            log_off: m.map(|p| (1.0 - p.clamp(BETA_FLOOR, 1.0 - BETA_FLOOR)).ln()),
            degenerate_on: m.iter().all(|&p| p == 0.0),
            degenerate_off: m.iter().all(|&p| p == 1.0),
        }
    }

    fn log_edge(&self, edge: bool) -> (&DMatrix<f64>, bool) {
        if edge {
            (&self.log_on, self.degenerate_on)
        } else {
            (&self.log_off, self.degenerate_off)
        }
    }
}

/// Role-pair posterior table for one dyad; the second component flags the
/// structurally degenerate case (every role pair has zero probability
/// under the unclamped compatibility matrix), where the table falls back
/// to uniform.
pub(crate) fn delta_update(
    edge: bool,
    gamma_i: &DVector<f64>,
    gamma_j: &DVector<f64>,
    logb: &LogCompat,
) -> (EdgePosterior, bool) {
    let k = gamma_i.len();
    let (lb, degenerate) = logb.log_edge(edge);
    if degenerate {
        return (EdgePosterior::uniform(k), true);
    }
    let mut logw = DMatrix::zeros(k, k);
    let mut max = f64::NEG_INFINITY;
    for u in 0..k {
        for v in 0..k {
            let w = gamma_i[u] + gamma_j[v] + lb[(u, v)];
            logw[(u, v)] = w;
            max = max.max(w);
        }
    }
    let mut delta = logw.map(|w| (w - max).exp());
    let sum: f64 = delta.iter().sum();
    delta /= sum;
    (EdgePosterior { delta }, false)
}

/// Posterior over the role pair of one dyad given the edge indicator, the
/// two endpoint membership means and the compatibility matrix: entry
/// `(u, v)` is proportional to
/// `exp(gamma_i[u] + gamma_j[v]) * b[u,v]^e * (1 - b[u,v])^(1-e)`.
///
/// Probabilities are clamped away from 0/1 inside logs.  If the unclamped
/// matrix makes every role pair impossible (all-zero matrix with an edge
/// present, all-one with an edge absent), the table falls back to uniform
/// and the returned flag is `true`.
pub fn update_edge_posterior(
    edge: bool,
    gamma_i: &DVector<f64>,
    gamma_j: &DVector<f64>,
    b: &CompatMatrix,
) -> Result<(EdgePosterior, bool)> {
    let k = b.k();
    if gamma_i.len() != k || gamma_j.len() != k {
        return Err(Error::Data(format!(
            "dimension mismatch: membership means of length {} and {}, compatibility matrix of size {k}",
            gamma_i.len(),
            gamma_j.len()
        )));
    }
    Ok(delta_update(edge, gamma_i, gamma_j, &LogCompat::new(b)))
}

/// Marginal role expectations of a dyad posterior: row sums give the
/// sender's role distribution, column sums the receiver's.
pub fn edge_role_expectations(delta: &EdgePosterior) -> (DVector<f64>, DVector<f64>) {
    let k = delta.k();
    let mut sender = DVector::zeros(k);
    let mut receiver = DVector::zeros(k);
    for u in 0..k {
        for v in 0..k {
            let d = delta.delta()[(u, v)];
            sender[u] += d;
            receiver[v] += d;
        }
    }
    (sender, receiver)
}

/// Accumulate expected role-draw counts per node over all dyads.
/// `pairs[p]` names the (sender, receiver) slots of `deltas[p]`.
pub(crate) fn accumulate_counts(
    n_nodes: usize,
    pairs: &[(usize, usize)],
    deltas: &[EdgePosterior],
) -> ExpectedCounts {
    debug_assert_eq!(pairs.len(), deltas.len());
    let k = deltas.first().map(|d| d.k()).unwrap_or(1);
    let mut m = vec![DVector::zeros(k); n_nodes];
    for (&(i, j), delta) in pairs.iter().zip(deltas) {
        let (s, r) = edge_role_expectations(delta);
        m[i] += s;
        m[j] += r;
    }
    ExpectedCounts { m }
}

/// Expected number of role draws per node: one per dyad slot the node
/// occupies (`2 (N - 1)` for directed networks, `N - 1` for undirected).
pub fn role_draws_per_node(n_nodes: usize, directed: bool) -> f64 {
    if directed {
        (2 * (n_nodes - 1)) as f64
    } else {
        (n_nodes - 1) as f64
    }
}

/// Quadratic (Laplace) update of one node's membership posterior.
///
/// The expected role-draw log-likelihood is expanded to second order
/// around `gamma_hat` using the softmax gradient/Hessian of the
/// log-partition, giving a Gaussian with precision
/// `sigma^{-1} + role_draws * H` on the active block and mean
/// `mu + sigma_tilde * (m - role_draws * (g - H gamma_hat + H mu))`.
pub(crate) fn laplace_update(
    m: &DVector<f64>,
    mu: &DVector<f64>,
    sigma_chol: &ActiveChol,
    gamma_hat: &DVector<f64>,
    role_draws: f64,
    jitter: f64,
) -> Result<MembershipPosterior> {
    let k = mu.len();
    let d = active_dim(k);
    let (g, h) = softmax_grad_hess(gamma_hat);
    let prec_active = active_block(&sigma_chol.inverse_embedded(), d)
        + active_block(&h, d) * role_draws;
    let prec_chol = ActiveChol::new(&embed_active(&prec_active, k), k, jitter)?;
    let sigma_tilde = symmetrize(&prec_chol.inverse_embedded());
    let r = m - (&g - &h * gamma_hat + &h * mu) * role_draws;
    let mut gamma_tilde = mu + &sigma_tilde * r;
    gamma_tilde[k - 1] = 0.0;
    MembershipPosterior::new(gamma_tilde, sigma_tilde)
}

/// Public entry point for the Laplace membership update with a raw prior
/// covariance; see [`laplace_update`] for the formula.  `role_draws` is
/// the node's expected number of role draws (see [`role_draws_per_node`]).
pub fn update_membership_posterior(
    m: &DVector<f64>,
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
    gamma_hat: &DVector<f64>,
    role_draws: f64,
) -> Result<MembershipPosterior> {
    let k = mu.len();
    if m.len() != k || sigma.nrows() != k || sigma.ncols() != k || gamma_hat.len() != k {
        return Err(Error::Data(
            "dimension mismatch in membership posterior update".into(),
        ));
    }
    if role_draws <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "role_draws must be positive, got {role_draws}"
        )));
    }
    let chol = ActiveChol::new(sigma, k, DEFAULT_JITTER)?;
    laplace_update(m, mu, &chol, gamma_hat, role_draws, DEFAULT_JITTER)
}

/// Surrogate objective for one snapshot: expected complete-data
/// log-likelihood under the factored posterior (log-partition evaluated
/// at posterior means) minus posterior entropies' negation — the number
/// coordinate updates drive upward.
pub(crate) fn surrogate_objective(
    pairs: &[(usize, usize)],
    edges: &[bool],
    deltas: &[EdgePosterior],
    posteriors: &[MembershipPosterior],
    mu: &DVector<f64>,
    sigma_chol: &ActiveChol,
    logb: &LogCompat,
    role_draws: f64,
    jitter: f64,
) -> Result<f64> {
    let k = mu.len();
    let d = active_dim(k) as f64;
    let sigma_inv = sigma_chol.inverse_embedded();
    let sigma_logdet = sigma_chol.logdet();
    let mut obj = 0.0;

    // Dyad terms: expected role-pair score minus dyad-posterior entropy.
    for (p, &(i, j)) in pairs.iter().enumerate() {
        let (lb, degenerate) = logb.log_edge(edges[p]);
        let gi = posteriors[i].gamma_tilde();
        let gj = posteriors[j].gamma_tilde();
        let delta = deltas[p].delta();
        if degenerate {
            // Uniform fallback table: score it with clamped logs.
            for u in 0..k {
                for v in 0..k {
                    let dp = delta[(u, v)];
                    obj += dp * (gi[u] + gj[v] + lb[(u, v)] - dp.ln());
                }
            }
            continue;
        }
        for u in 0..k {
            for v in 0..k {
                let dp = delta[(u, v)];
                if dp > 0.0 {
                    obj += dp * (gi[u] + gj[v] + lb[(u, v)] - dp.ln());
                }
            }
        }
    }

    // Node terms: log-partition penalty, Gaussian cross-entropy to the
    // prior and posterior entropy.
    for post in posteriors {
        obj -= role_draws * log_sum_exp(post.gamma_tilde());
        let diff = post.gamma_tilde() - mu;
        let quad = sigma_chol.quad_form(&diff);
        let trace = (&sigma_inv * post.sigma_tilde()).trace();
        let post_chol = ActiveChol::new(post.sigma_tilde(), k, jitter)?;
        obj += -0.5 * (quad + trace + sigma_logdet) + 0.5 * post_chol.logdet() + 0.5 * d;
    }
    if !obj.is_finite() {
        return Err(Error::Numerical(
            "surrogate objective is not finite".into(),
        ));
    }
    Ok(obj)
}

/// Relative-change convergence measure.
pub(crate) fn rel_change(prev: f64, cur: f64) -> f64 {
    (cur - prev).abs() / prev.abs().max(1.0)
}

/// Random membership-posterior initialization: standard-normal active
/// means and identity active covariances.
pub(crate) fn init_posteriors<R: Rng>(
    n_nodes: usize,
    k: usize,
    rng: &mut R,
) -> Vec<MembershipPosterior> {
    let d = active_dim(k);
    let eye = embed_active(&DMatrix::identity(d, d), k);
    (0..n_nodes)
        .map(|_| {
            let mut g = DVector::zeros(k);
            for c in 0..d {
                g[c] = rng.sample::<f64, _>(StandardNormal);
            }
            MembershipPosterior::new(g, eye.clone()).expect("valid random initialization")
        })
        .collect()
}

/// One full coordinate sweep: refresh every dyad posterior from current
/// membership means, gather counts, then refresh every membership
/// posterior (expansion point = previous mean).  Returns the number of
/// structurally degenerate dyads.
pub(crate) fn coordinate_sweep(
    pairs: &[(usize, usize)],
    edges: &[bool],
    logb: &LogCompat,
    mu: &DVector<f64>,
    sigma_chol: &ActiveChol,
    role_draws: f64,
    jitter: f64,
    posteriors: &mut [MembershipPosterior],
    deltas: &mut Vec<EdgePosterior>,
) -> Result<usize> {
    let mut degenerate = 0;
    deltas.clear();
    for (p, &(i, j)) in pairs.iter().enumerate() {
        let (delta, flag) = delta_update(
            edges[p],
            posteriors[i].gamma_tilde(),
            posteriors[j].gamma_tilde(),
            logb,
        );
        if flag {
            degenerate += 1;
        }
        deltas.push(delta);
    }
    let counts = accumulate_counts(posteriors.len(), pairs, deltas);
    for (i, post) in posteriors.iter_mut().enumerate() {
        *post = laplace_update(
            counts.m(i),
            mu,
            sigma_chol,
            post.gamma_tilde(),
            role_draws,
            jitter,
        )?;
    }
    Ok(degenerate)
}

/// Edge indicators of snapshot `t` in `pairs` order.
pub(crate) fn edge_flags(net: &NetSeq, t: usize, pairs: &[(usize, usize)]) -> Vec<bool> {
    pairs.iter().map(|&(i, j)| net.edge(t, i, j)).collect()
}

struct RestartOutcome {
    posteriors: Vec<MembershipPosterior>,
    deltas: Vec<EdgePosterior>,
    report: FitReport,
}

/// Pick the best restart by final objective (ties go to the lowest
/// restart index) and surface skipped-restart diagnostics.
fn select_best(outcomes: Vec<Result<RestartOutcome>>) -> Result<RestartOutcome> {
    let mut best: Option<RestartOutcome> = None;
    let mut last_err = None;
    for outcome in outcomes {
        match outcome {
            Ok(o) => {
                let better = match &best {
                    None => true,
                    Some(b) => o.report.final_objective() > b.report.final_objective(),
                };
                if better {
                    best = Some(o);
                }
            }
            Err(e) => {
                warn!("restart failed and was skipped: {e}");
                last_err = Some(e);
            }
        }
    }
    best.ok_or_else(|| {
        last_err.unwrap_or_else(|| Error::Numerical("no restart produced a result".into()))
    })
}

/// Infer membership and dyad posteriors for one snapshot under fixed
/// static parameters.
///
/// Runs `cfg.n_restarts` independently initialized coordinate-update
/// passes (restart `r` uses RNG stream `r` of `seed`) and returns the one
/// with the best final surrogate objective.
pub fn infer_lnmmsb(
    net: &NetSeq,
    params: &StaticParams,
    cfg: &InferCfg,
    seed: u64,
) -> Result<StaticInference> {
    cfg.validate()?;
    if net.n_times() != 1 {
        return Err(Error::Data(format!(
            "static inference needs exactly 1 snapshot, got {}",
            net.n_times()
        )));
    }
    let k = params.k();
    let n = net.n_nodes();
    let pairs = net.pairs();
    let edges = edge_flags(net, 0, &pairs);
    let role_draws = role_draws_per_node(n, net.directed());
    let logb = LogCompat::new(params.b());
    let sigma_chol = params.sigma_chol(cfg.jitter)?;

    let outcomes: Vec<Result<RestartOutcome>> = (0..cfg.n_restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut posteriors = init_posteriors(n, k, &mut rng);
            let mut deltas = Vec::with_capacity(pairs.len());
            let mut trace = Vec::new();
            let mut converged = false;
            let mut sweeps = 0;
            let mut degenerate_total = 0;
            for _ in 0..cfg.max_iter {
                degenerate_total += coordinate_sweep(
                    &pairs,
                    &edges,
                    &logb,
                    params.mu(),
                    &sigma_chol,
                    role_draws,
                    cfg.jitter,
                    &mut posteriors,
                    &mut deltas,
                )?;
                sweeps += 1;
                let obj = surrogate_objective(
                    &pairs,
                    &edges,
                    &deltas,
                    &posteriors,
                    params.mu(),
                    &sigma_chol,
                    &logb,
                    role_draws,
                    cfg.jitter,
                )?;
                trace.push(obj);
                let len = trace.len();
                if len >= 2 && rel_change(trace[len - 2], obj) < cfg.tol {
                    converged = true;
                    break;
                }
            }
            if degenerate_total > 0 {
                warn!(
                    "{degenerate_total} dyad updates hit structurally impossible \
                     configurations; their posteriors fell back to uniform"
                );
            }
            Ok(RestartOutcome {
                posteriors,
                deltas,
                report: FitReport {
                    converged,
                    n_outer: 0,
                    n_inner: sweeps,
                    objective_trace: trace,
                    restart: r,
                },
            })
        })
        .collect();

    let best = select_best(outcomes)?;
    debug!(
        "inference picked restart {} (objective {:.6})",
        best.report.restart,
        best.report.final_objective()
    );
    Ok(StaticInference {
        posteriors: best.posteriors,
        deltas: best.deltas,
        report: best.report,
    })
}

/// Re-estimate the compatibility matrix from dyad posteriors: entry
/// `(u, v)` is the posterior-expected edge rate among dyads assigned to
/// that role pair.  Role pairs with no posterior mass keep their previous
/// value.
pub fn mstep_b_static(
    edges: &[bool],
    deltas: &[EdgePosterior],
    prev: &CompatMatrix,
) -> Result<CompatMatrix> {
    if edges.len() != deltas.len() {
        return Err(Error::Data(format!(
            "dimension mismatch: {} edge indicators vs {} dyad posteriors",
            edges.len(),
            deltas.len()
        )));
    }
    let k = prev.k();
    let mut num = DMatrix::zeros(k, k);
    let mut den = DMatrix::zeros(k, k);
    for (&e, delta) in edges.iter().zip(deltas) {
        if delta.k() != k {
            return Err(Error::Data(
                "dyad posterior role count does not match compatibility matrix".into(),
            ));
        }
        den += delta.delta();
        if e {
            num += delta.delta();
        }
    }
    let b = DMatrix::from_fn(k, k, |u, v| {
        if den[(u, v)] > 0.0 {
            (num[(u, v)] / den[(u, v)]).clamp(0.0, 1.0)
        } else {
            prev.get(u, v)
        }
    });
    CompatMatrix::new(b)
}

/// Re-estimate the membership prior from node posteriors: the mean of
/// posterior means and the average posterior covariance plus the
/// (population) covariance of posterior means.
pub fn mstep_mu_sigma_static(
    posteriors: &[MembershipPosterior],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if posteriors.is_empty() {
        return Err(Error::Data("no membership posteriors to average".into()));
    }
    let k = posteriors[0].k();
    let n = posteriors.len() as f64;
    let mut mu = DVector::zeros(k);
    for p in posteriors {
        if p.k() != k {
            return Err(Error::Data("membership posteriors disagree on role count".into()));
        }
        mu += p.gamma_tilde();
    }
    mu /= n;
    mu[k - 1] = 0.0;
    let mut sigma = DMatrix::zeros(k, k);
    for p in posteriors {
        let diff = p.gamma_tilde() - &mu;
        sigma += p.sigma_tilde() + &diff * diff.transpose();
    }
    sigma /= n;
    let sigma = embed_active(&symmetrize(&active_block(&sigma, active_dim(k))), k);
    Ok((mu, sigma))
}

/// Random initial compatibility matrix with independent uniform entries.
pub(crate) fn random_compat<R: Rng>(k: usize, rng: &mut R) -> CompatMatrix {
    CompatMatrix::new(DMatrix::from_fn(k, k, |_, _| rng.random::<f64>()))
        .expect("uniform draws are valid probabilities")
}

/// Random initial prior: standard-normal active mean, `10 I` active
/// covariance (broad enough to let early posteriors move freely).
pub(crate) fn random_prior<R: Rng>(k: usize, rng: &mut R) -> (DVector<f64>, DMatrix<f64>) {
    let d = active_dim(k);
    let mut mu = DVector::zeros(k);
    for c in 0..d {
        mu[c] = rng.sample::<f64, _>(StandardNormal);
    }
    let sigma = embed_active(&(DMatrix::identity(d, d) * 10.0), k);
    (mu, sigma)
}

/// Learn static-model parameters by variational EM.
///
/// Each restart initializes the compatibility matrix uniformly at random,
/// the prior mean standard-normal and the prior covariance broad, then
/// alternates inner sweeps (dyad posteriors, membership posteriors,
/// compatibility re-estimation) with outer prior re-estimation until the
/// surrogate objective stabilizes.  The restart with the best final
/// objective wins.
pub fn fit_lnmmsb(net: &NetSeq, k: usize, cfg: &FitCfg, seed: u64) -> Result<StaticFit> {
    cfg.validate()?;
    if k == 0 {
        return Err(Error::InvalidArgument("need at least 1 role".into()));
    }
    if net.n_times() != 1 {
        return Err(Error::Data(format!(
            "static fitting needs exactly 1 snapshot, got {}",
            net.n_times()
        )));
    }
    let n = net.n_nodes();
    let pairs = net.pairs();
    let edges = edge_flags(net, 0, &pairs);
    let role_draws = role_draws_per_node(n, net.directed());

    struct FitOutcome {
        params: StaticParams,
        posteriors: Vec<MembershipPosterior>,
        deltas: Vec<EdgePosterior>,
        report: FitReport,
    }

    let outcomes: Vec<Result<FitOutcome>> = (0..cfg.n_restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut b = random_compat(k, &mut rng);
            let (mut mu, mut sigma) = random_prior(k, &mut rng);
            let mut posteriors = init_posteriors(n, k, &mut rng);
            let mut deltas = Vec::with_capacity(pairs.len());
            let mut trace: Vec<f64> = Vec::new();
            let mut converged = false;
            let mut total_inner = 0;
            let mut n_outer = 0;
            let mut outer_obj_prev: Option<f64> = None;
            for _ in 0..cfg.max_outer {
                n_outer += 1;
                let mut logb = LogCompat::new(&b);
                let mut sigma_chol = ActiveChol::new(&sigma, k, cfg.jitter)?;
                // Inner sweeps: posteriors and compatibility matrix.
                let mut inner_prev: Option<f64> = None;
                for _ in 0..cfg.max_inner {
                    coordinate_sweep(
                        &pairs,
                        &edges,
                        &logb,
                        &mu,
                        &sigma_chol,
                        role_draws,
                        cfg.jitter,
                        &mut posteriors,
                        &mut deltas,
                    )?;
                    b = mstep_b_static(&edges, &deltas, &b)?;
                    logb = LogCompat::new(&b);
                    total_inner += 1;
                    let obj = surrogate_objective(
                        &pairs,
                        &edges,
                        &deltas,
                        &posteriors,
                        &mu,
                        &sigma_chol,
                        &logb,
                        role_draws,
                        cfg.jitter,
                    )?;
                    trace.push(obj);
                    if let Some(prev) = inner_prev {
                        if rel_change(prev, obj) < cfg.tol {
                            break;
                        }
                    }
                    inner_prev = Some(obj);
                }
                // Outer step: prior re-estimation.
                let (new_mu, new_sigma) = mstep_mu_sigma_static(&posteriors)?;
                mu = new_mu;
                sigma = new_sigma;
                sigma_chol = ActiveChol::new(&sigma, k, cfg.jitter)?;
                let obj = surrogate_objective(
                    &pairs,
                    &edges,
                    &deltas,
                    &posteriors,
                    &mu,
                    &sigma_chol,
                    &logb,
                    role_draws,
                    cfg.jitter,
                )?;
                trace.push(obj);
                if let Some(prev) = outer_obj_prev {
                    if rel_change(prev, obj) < cfg.tol {
                        converged = true;
                        break;
                    }
                }
                outer_obj_prev = Some(obj);
            }
            let params = StaticParams::new(mu, sigma, b)?;
            Ok(FitOutcome {
                params,
                posteriors,
                deltas,
                report: FitReport {
                    converged,
                    n_outer,
                    n_inner: total_inner,
                    objective_trace: trace,
                    restart: r,
                },
            })
        })
        .collect();

    let mut best: Option<FitOutcome> = None;
    let mut last_err = None;
    for outcome in outcomes {
        match outcome {
            Ok(o) => {
                let better = match &best {
                    None => true,
                    Some(cur) => o.report.final_objective() > cur.report.final_objective(),
                };
                if better {
                    best = Some(o);
                }
            }
            Err(e) => {
                warn!("restart failed and was skipped: {e}");
                last_err = Some(e);
            }
        }
    }
    let best = best.ok_or_else(|| {
        last_err.unwrap_or_else(|| Error::Numerical("no restart produced a result".into()))
    })?;
    debug!(
        "fit picked restart {} (objective {:.6}, {} outer cycles)",
        best.report.restart,
        best.report.final_objective(),
        best.report.n_outer
    );
    Ok(StaticFit {
        params: best.params,
        posteriors: best.posteriors,
        deltas: best.deltas,
        report: best.report,
    })
}
