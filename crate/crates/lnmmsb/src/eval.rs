//! Evaluation: role alignment, membership recovery error,
//! importance-sampled log-likelihood, BIC and role-count selection.

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ModelKind, RunConfig};
use crate::dynamic_infer::fit_dmmsb;
use crate::error::Error;
use crate::linalg::ActiveChol;
use crate::logistic::softmax;
use crate::static_infer::{fit_lnmmsb, MembershipPosterior};
use crate::types::{CompatMatrix, Dims, MembershipVector, NetSeq, StaticParams};
use crate::Result;

/// Largest role count the exact exhaustive alignment search handles; above
/// it a subset-DP assignment on squared distances takes over.
const EXHAUSTIVE_K: usize = 8;
/// Largest role count alignment supports at all (subset DP is `2^K * K`).
const MAX_ALIGN_K: usize = 20;

/// A role relabeling: aligned estimate `k` takes estimated component
/// `perm[k]`, chosen to best match a reference set of memberships.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    perm: Vec<usize>,
    cost: f64,
}

impl Alignment {
    /// The relabeling map: slot `k` of the aligned estimate reads
    /// component `perm()[k]` of the raw estimate.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Total alignment cost: sum over nodes of the Euclidean distance
    /// between reference and relabeled estimated memberships.
    pub fn cost(&self) -> f64 {
        self.cost
    }

    /// Relabel one membership vector.
    pub fn apply(&self, m: &MembershipVector) -> MembershipVector {
        let pi = m.pi();
        let out = DVector::from_fn(pi.len(), |k, _| pi[self.perm[k]]);
        MembershipVector::new(out).expect("permutation preserves the simplex")
    }

    /// Relabel a compatibility matrix consistently on both axes.
    pub fn apply_compat(&self, b: &CompatMatrix) -> CompatMatrix {
        let k = b.k();
        CompatMatrix::new(DMatrix::from_fn(k, k, |u, v| {
            b.get(self.perm[u], self.perm[v])
        }))
        .expect("permutation preserves probabilities")
    }
}

/// Visit all permutations of `0..k` in lexicographic order.
fn for_each_permutation(k: usize, mut f: impl FnMut(&[usize])) {
    let mut perm = Vec::with_capacity(k);
    let mut used = vec![false; k];
    fn rec(k: usize, perm: &mut Vec<usize>, used: &mut [bool], f: &mut impl FnMut(&[usize])) {
        if perm.len() == k {
            f(perm);
            return;
        }
        for c in 0..k {
            if !used[c] {
                used[c] = true;
                perm.push(c);
                rec(k, perm, used, f);
                perm.pop();
                used[c] = false;
            }
        }
    }
    rec(k, &mut perm, &mut used, &mut f);
}

fn alignment_cost(
    truth: &[MembershipVector],
    est: &[MembershipVector],
    perm: &[usize],
) -> f64 {
    let mut total = 0.0;
    for (t, e) in truth.iter().zip(est) {
        let mut sq = 0.0;
        for (slot, &src) in perm.iter().enumerate() {
            let d = t.pi()[slot] - e.pi()[src];
            sq += d * d;
        }
        total += sq.sqrt();
    }
    total
}

/// Optimal assignment by subset DP on a `k x k` cost matrix
/// (`cost[slot][source]`); returns the per-slot source choice.
fn assignment_dp(cost: &[Vec<f64>]) -> Vec<usize> {
    let k = cost.len();
    let full = 1usize << k;
    let mut dp = vec![f64::INFINITY; full];
    let mut choice = vec![usize::MAX; full];
    dp[0] = 0.0;
    for mask in 0..full {
        if dp[mask].is_infinite() {
            continue;
        }
        let slot = mask.count_ones() as usize;
        if slot == k {
            continue;
        }
        for src in 0..k {
            if mask & (1 << src) != 0 {
                continue;
            }
            let next = mask | (1 << src);
            let c = dp[mask] + cost[slot][src];
            if c < dp[next] {
                dp[next] = c;
                choice[next] = src;
            }
        }
    }
    // Walk back from the full mask.
    let mut perm = vec![0usize; k];
    let mut mask = full - 1;
    while mask != 0 {
        let slot = mask.count_ones() as usize - 1;
        let src = choice[mask];
        perm[slot] = src;
        mask &= !(1 << src);
    }
    perm
}

/// Find the role relabeling of `est` that best matches `truth`,
/// minimizing the summed per-node Euclidean distance.
///
/// Up to 8 roles the search is exhaustive over all `K!` relabelings (the
/// exact objective); for larger `K` an optimal assignment on the
/// separable squared-distance surrogate is used (up to `K = 20`).  Ties
/// break toward the lexicographically smallest relabeling.
pub fn align_roles(truth: &[MembershipVector], est: &[MembershipVector]) -> Result<Alignment> {
    if truth.is_empty() || truth.len() != est.len() {
        return Err(Error::Data(format!(
            "alignment needs matching nonempty membership sets, got {} and {}",
            truth.len(),
            est.len()
        )));
    }
    let k = truth[0].k();
    if truth.iter().chain(est).any(|m| m.k() != k) {
        return Err(Error::Data(
            "membership vectors disagree on role count".into(),
        ));
    }
    if k > MAX_ALIGN_K {
        return Err(Error::InvalidArgument(format!(
            "role alignment supports at most {MAX_ALIGN_K} roles, got {k}"
        )));
    }
    let perm = if k <= EXHAUSTIVE_K {
        let mut best_perm: Option<Vec<usize>> = None;
        let mut best_cost = f64::INFINITY;
        for_each_permutation(k, |perm| {
            let c = alignment_cost(truth, est, perm);
            if c < best_cost {
                best_cost = c;
                best_perm = Some(perm.to_vec());
            }
        });
        best_perm.expect("at least one permutation exists")
    } else {
        // cost[slot][source] = sum_i (truth_i[slot] - est_i[source])^2.
        let mut cost = vec![vec![0.0; k]; k];
        for (slot, row) in cost.iter_mut().enumerate() {
            for (src, c) in row.iter_mut().enumerate() {
                *c = truth
                    .iter()
                    .zip(est)
                    .map(|(t, e)| {
                        let d = t.pi()[slot] - e.pi()[src];
                        d * d
                    })
                    .sum();
            }
        }
        assignment_dp(&cost)
    };
    let cost = alignment_cost(truth, est, &perm);
    Ok(Alignment { perm, cost })
}

/// Which norm [`membership_error`] averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
}

/// Mean per-node distance between reference and estimated memberships.
/// The estimate must already be aligned (see [`align_roles`]).
pub fn membership_error(
    truth: &[MembershipVector],
    est: &[MembershipVector],
    norm: Norm,
) -> Result<f64> {
    if truth.is_empty() || truth.len() != est.len() {
        return Err(Error::Data(format!(
            "error computation needs matching nonempty membership sets, got {} and {}",
            truth.len(),
            est.len()
        )));
    }
    let k = truth[0].k();
    if truth.iter().chain(est).any(|m| m.k() != k) {
        return Err(Error::Data(
            "membership vectors disagree on role count".into(),
        ));
    }
    let mut total = 0.0;
    for (t, e) in truth.iter().zip(est) {
        let mut l1 = 0.0;
        let mut l2 = 0.0;
        for c in 0..k {
            let d = (t.pi()[c] - e.pi()[c]).abs();
            l1 += d;
            l2 += d * d;
        }
        total += match norm {
            Norm::L1 => l1,
            Norm::L2 => l2.sqrt(),
        };
    }
    Ok(total / truth.len() as f64)
}

/// `log sum exp` over a slice, tolerating `-inf` entries (zero weights).
fn logsumexp_slice(xs: &[f64]) -> f64 {
    let m = xs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = xs
        .iter()
        .filter(|x| x.is_finite())
        .map(|&x| (x - m).exp())
        .sum();
    m + s.ln()
}

/// Importance-sampled marginal log-likelihood of a single snapshot under
/// static parameters, with the product of membership posteriors as the
/// proposal.
///
/// Role indicators are marginalized analytically: each dyad contributes
/// `log sum_{u,v} pi_i[u] pi_j[v] b[u,v]^e (1-b[u,v])^(1-e)`.  Returns
/// the log-likelihood estimate and a delta-method standard error (zero
/// when all weights coincide, e.g. a single role).  Fails if every
/// weight underflows to zero.  Requires at least 100 samples.
pub fn loglik_importance(
    net: &NetSeq,
    params: &StaticParams,
    posteriors: &[MembershipPosterior],
    n_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n_samples < 100 {
        return Err(Error::InvalidArgument(format!(
            "importance sampling needs at least 100 samples, got {n_samples}"
        )));
    }
    if net.n_times() != 1 {
        return Err(Error::Data(format!(
            "log-likelihood estimation works on a single snapshot, got {}",
            net.n_times()
        )));
    }
    let n = net.n_nodes();
    if posteriors.len() != n {
        return Err(Error::Data(format!(
            "dimension mismatch: {} posteriors for {n} nodes",
            posteriors.len()
        )));
    }
    let k = params.k();
    if posteriors.iter().any(|p| p.k() != k) {
        return Err(Error::Data(
            "posterior role count does not match parameters".into(),
        ));
    }
    let prior_chol = params.sigma_chol(crate::linalg::DEFAULT_JITTER)?;
    let prop_chols: Vec<ActiveChol> = posteriors
        .iter()
        .map(|p| ActiveChol::new(p.sigma_tilde(), k, crate::linalg::DEFAULT_JITTER))
        .collect::<Result<Vec<_>>>()?;
    let pairs = net.pairs();
    let b = params.b().as_matrix();
    let b_off = b.map(|p| 1.0 - p);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log_w = Vec::with_capacity(n_samples);
    let mut gammas: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut pis: Vec<DVector<f64>> = Vec::with_capacity(n);
    for _ in 0..n_samples {
        gammas.clear();
        pis.clear();
        let mut lw = 0.0;
        for (post, chol) in posteriors.iter().zip(&prop_chols) {
            let g = chol.sample(post.gamma_tilde(), &mut rng);
            lw += prior_chol.mvn_logpdf(&g, params.mu());
            lw -= chol.mvn_logpdf(&g, post.gamma_tilde());
            pis.push(softmax(&g));
            gammas.push(g);
        }
        for &(i, j) in &pairs {
            let m = if net.edge(0, i, j) { b } else { &b_off };
            let mut s = 0.0;
            for u in 0..k {
                let piu = pis[i][u];
                for v in 0..k {
                    s += piu * pis[j][v] * m[(u, v)];
                }
            }
            lw += s.ln();
        }
        log_w.push(lw);
    }
    let ls1 = logsumexp_slice(&log_w);
    if ls1 == f64::NEG_INFINITY {
        return Err(Error::Numerical(
            "all importance weights are zero; the model assigns zero probability to the data"
                .into(),
        ));
    }
    let s = n_samples as f64;
    let loglik = ls1 - s.ln();
    // Delta-method standard error of the log of the weight mean,
    // Var(log wbar) ~= (E[w^2]/wbar^2 - 1)/S, computed on weights rescaled
    // by the largest so that identical weights give exactly zero.
    let top = log_w.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let wn: Vec<f64> = log_w
        .iter()
        .map(|&w| if w.is_finite() { (w - top).exp() } else { 0.0 })
        .collect();
    let sum: f64 = wn.iter().sum();
    let sum2: f64 = wn.iter().map(|w| w * w).sum();
    let ratio = s * sum2 / (sum * sum) - 1.0;
    let se = (ratio.max(0.0) / s).sqrt();
    Ok((loglik, se))
}

/// A scored role count.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelScore {
    pub k: usize,
    pub loglik: f64,
    pub loglik_se: f64,
    pub n_params: usize,
    pub bic: f64,
}

fn free_cov_params(k: usize) -> usize {
    // Symmetric active block of size (k-1).
    (k - 1) * k / 2
}

/// Number of free parameters of a model family at the given dimensions.
pub fn param_count(dims: &Dims, model: ModelKind) -> usize {
    let k = dims.n_roles();
    match model {
        ModelKind::Static => k * k + (k - 1) + free_cov_params(k),
        ModelKind::Dynamic => {
            k * k + (k - 1) + free_cov_params(k) + dims.n_times() * free_cov_params(k)
        }
    }
}

/// Bayesian information criterion: `-2 loglik + n_params * ln(n_obs)`
/// where `n_obs` counts modeled dyads over all snapshots.
pub fn bic_score(
    loglik: f64,
    loglik_se: f64,
    dims: &Dims,
    model: ModelKind,
    directed: bool,
) -> ModelScore {
    let n = dims.n_nodes();
    let ordered = dims.n_times() * n * (n - 1);
    let n_obs = if directed { ordered } else { ordered / 2 };
    let n_params = param_count(dims, model);
    ModelScore {
        k: dims.n_roles(),
        loglik,
        loglik_se,
        n_params,
        bic: -2.0 * loglik + n_params as f64 * (n_obs as f64).ln(),
    }
}

/// Deterministic per-role-count seed for likelihood scoring.
fn scoring_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Fit every candidate role count, score each by importance-sampled
/// log-likelihood plus BIC, and return the BIC-minimizing count with the
/// full score table.  A role count whose fit or scoring fails is skipped
/// with a warning; at least one must survive.
pub fn select_roles(
    net: &NetSeq,
    k_values: &[usize],
    cfg: &RunConfig,
    seed: u64,
) -> Result<(usize, Vec<ModelScore>)> {
    cfg.validate()?;
    if k_values.is_empty() {
        return Err(Error::InvalidArgument(
            "role selection needs at least one candidate count".into(),
        ));
    }
    if k_values.iter().any(|&k| k == 0) {
        return Err(Error::InvalidArgument(
            "candidate role counts must be at least 1".into(),
        ));
    }
    if cfg.model == ModelKind::Static && net.n_times() != 1 {
        return Err(Error::Data(format!(
            "static model selection needs a single snapshot, got {}",
            net.n_times()
        )));
    }
    let fit_cfg = cfg.fit_cfg();
    let mut scores = Vec::new();
    let mut last_err: Option<Error> = None;
    for &k in k_values {
        let attempt = (|| -> Result<ModelScore> {
            let dims = Dims::new(net.n_nodes(), k, net.n_times())?;
            match cfg.model {
                ModelKind::Static => {
                    let fit = fit_lnmmsb(net, k, &fit_cfg, seed)?;
                    let (ll, se) = loglik_importance(
                        net,
                        &fit.params,
                        &fit.posteriors,
                        cfg.is_samples,
                        scoring_seed(seed, k),
                    )?;
                    Ok(bic_score(ll, se, &dims, ModelKind::Static, net.directed()))
                }
                ModelKind::Dynamic => {
                    let fit = fit_dmmsb(net, k, &fit_cfg, seed)?;
                    let mut ll = 0.0;
                    let mut var = 0.0;
                    for t in 0..net.n_times() {
                        let slice = net.time_slice(t)?;
                        let params = StaticParams::new(
                            fit.mu_traj[t].clone(),
                            fit.params.sigma(t).clone(),
                            fit.params.b().clone(),
                        )?;
                        let (ll_t, se_t) = loglik_importance(
                            &slice,
                            &params,
                            &fit.posteriors[t],
                            cfg.is_samples,
                            scoring_seed(seed, k).wrapping_add(t as u64),
                        )?;
                        ll += ll_t;
                        var += se_t * se_t;
                    }
                    Ok(bic_score(
                        ll,
                        var.sqrt(),
                        &dims,
                        ModelKind::Dynamic,
                        net.directed(),
                    ))
                }
            }
        })();
        match attempt {
            Ok(score) => scores.push(score),
            Err(e) => {
                warn!("role count {k} failed and was skipped: {e}");
                last_err = Some(e);
            }
        }
    }
    if scores.is_empty() {
        return Err(last_err
            .unwrap_or_else(|| Error::Numerical("no role count could be scored".into())));
    }
    let mut best = &scores[0];
    for s in &scores[1..] {
        if s.bic < best.bic {
            best = s;
        }
    }
    Ok((best.k, scores))
}
