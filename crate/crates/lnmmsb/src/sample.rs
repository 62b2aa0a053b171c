//! Forward sampling: static networks, dynamic network sequences, and a
//! group-structured scenario generator used by the examples and tests.
//!
//! All samplers consume randomness in a fixed, documented order so a seed
//! pins the entire draw: node-level vectors first (ascending node index),
//! then dyads in row-major order; dynamic samplers repeat that per
//! snapshot after drawing the snapshot's prior mean.  Samples carry their
//! ground truth (membership parameters, membership vectors and per-dyad
//! role picks) for recovery studies.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Error;
use crate::linalg::sample_mvn_psd;
use crate::logistic::logistic_transform;
use crate::types::{CompatMatrix, Dims, DynParams, Gamma, MembershipVector, NetSeq, StaticParams};
use crate::Result;

/// Ground-truth role picks for one dyad: the sender drew
/// `sender_role` from node `i`'s membership, the receiver drew
/// `receiver_role` from node `j`'s.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairRoles {
    pub i: usize,
    pub j: usize,
    pub sender_role: usize,
    pub receiver_role: usize,
}

/// A sampled static network with its generating latent state.
#[derive(Debug, Clone)]
pub struct StaticSample {
    pub net: NetSeq,
    pub gammas: Vec<Gamma>,
    pub memberships: Vec<MembershipVector>,
    pub pair_roles: Vec<PairRoles>,
}

/// A sampled dynamic sequence with its generating latent state, including
/// the prior-mean trajectory.
#[derive(Debug, Clone)]
pub struct DynamicSample {
    pub net: NetSeq,
    pub mu_traj: Vec<DVector<f64>>,
    pub gammas: Vec<Vec<Gamma>>,
    pub memberships: Vec<Vec<MembershipVector>>,
    pub pair_roles: Vec<Vec<PairRoles>>,
}

/// Inverse-CDF categorical draw using one uniform.
fn draw_cat<R: Rng>(p: &DVector<f64>, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &pk) in p.iter().enumerate() {
        acc += pk;
        if u < acc {
            return k;
        }
    }
    p.len() - 1
}

/// Sample every modeled dyad of snapshot `t` given memberships, writing
/// edges into `net` and returning the role picks.  Undirected sequences
/// sample each unordered pair once and mirror the edge.
fn sample_edges<R: Rng>(
    net: &mut NetSeq,
    t: usize,
    memberships: &[MembershipVector],
    b: &CompatMatrix,
    rng: &mut R,
) -> Result<Vec<PairRoles>> {
    let pairs = net.pairs();
    let mut roles = Vec::with_capacity(pairs.len());
    for (i, j) in pairs {
        let zu = draw_cat(memberships[i].pi(), rng);
        let zv = draw_cat(memberships[j].pi(), rng);
        let e = rng.random::<f64>() < b.get(zu, zv);
        net.set_edge(t, i, j, e)?;
        roles.push(PairRoles {
            i,
            j,
            sender_role: zu,
            receiver_role: zv,
        });
    }
    Ok(roles)
}

fn membership_draws<R: Rng>(
    mean: &DVector<f64>,
    cov: &nalgebra::DMatrix<f64>,
    n: usize,
    k: usize,
    rng: &mut R,
) -> (Vec<Gamma>, Vec<MembershipVector>) {
    let mut gammas = Vec::with_capacity(n);
    let mut pis = Vec::with_capacity(n);
    for _ in 0..n {
        let g = Gamma::new(sample_mvn_psd(mean, cov, k, rng))
            .expect("sampler keeps the pinned coordinate at zero");
        pis.push(logistic_transform(&g));
        gammas.push(g);
    }
    (gammas, pis)
}

/// Sample a single network snapshot from the static model.
///
/// `dims.n_times()` must be 1 and `dims.n_roles()` must match the
/// parameters.  Node membership parameters are drawn from
/// `N(mu, sigma)` (pinned coordinate fixed at zero), then every dyad
/// draws a sender role, a receiver role and an edge indicator with
/// probability `b[sender_role, receiver_role]`.
pub fn sample_static_network(
    params: &StaticParams,
    dims: &Dims,
    directed: bool,
    seed: u64,
) -> Result<StaticSample> {
    if dims.n_times() != 1 {
        return Err(Error::InvalidArgument(format!(
            "static sampling needs exactly 1 snapshot, got {}",
            dims.n_times()
        )));
    }
    if dims.n_roles() != params.k() {
        return Err(Error::Data(format!(
            "dimension mismatch: {} roles requested, parameters have {}",
            dims.n_roles(),
            params.k()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = NetSeq::empty(dims.n_nodes(), 1, directed)?;
    let (gammas, memberships) = membership_draws(
        params.mu(),
        params.sigma(),
        dims.n_nodes(),
        params.k(),
        &mut rng,
    );
    let pair_roles = sample_edges(&mut net, 0, &memberships, params.b(), &mut rng)?;
    Ok(StaticSample {
        net,
        gammas,
        memberships,
        pair_roles,
    })
}

/// Sample a network sequence from the dynamic model.
///
/// The prior mean follows `mu_1 ~ N(nu, phi)`,
/// `mu_t ~ N(A mu_{t-1}, phi)`; each snapshot then samples memberships
/// from `N(mu_t, sigma_t)` and dyads exactly as in the static model with
/// the shared compatibility matrix.  With one snapshot this collapses to
/// the static model with a randomly drawn prior mean.
pub fn sample_dynamic_network(
    params: &DynParams,
    dims: &Dims,
    directed: bool,
    seed: u64,
) -> Result<DynamicSample> {
    if dims.n_times() != params.n_times() {
        return Err(Error::Data(format!(
            "dimension mismatch: {} snapshots requested, parameters have {}",
            dims.n_times(),
            params.n_times()
        )));
    }
    if dims.n_roles() != params.k() {
        return Err(Error::Data(format!(
            "dimension mismatch: {} roles requested, parameters have {}",
            dims.n_roles(),
            params.k()
        )));
    }
    let k = params.k();
    let n = dims.n_nodes();
    let t_len = dims.n_times();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = NetSeq::empty(n, t_len, directed)?;
    let mut mu_traj = Vec::with_capacity(t_len);
    let mut gammas = Vec::with_capacity(t_len);
    let mut memberships = Vec::with_capacity(t_len);
    let mut pair_roles = Vec::with_capacity(t_len);
    let mut prev_mu: Option<DVector<f64>> = None;
    for t in 0..t_len {
        let mean = match &prev_mu {
            None => params.nu().clone(),
            Some(m) => params.a() * m,
        };
        let mu_t = sample_mvn_psd(&mean, params.phi(), k, &mut rng);
        let (g_t, pi_t) = membership_draws(&mu_t, params.sigma(t), n, k, &mut rng);
        let roles_t = sample_edges(&mut net, t, &pi_t, params.b(), &mut rng)?;
        prev_mu = Some(mu_t.clone());
        mu_traj.push(mu_t);
        gammas.push(g_t);
        memberships.push(pi_t);
        pair_roles.push(roles_t);
    }
    Ok(DynamicSample {
        net,
        mu_traj,
        gammas,
        memberships,
        pair_roles,
    })
}

/// Scenario knobs for the group-structured generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupSpec {
    /// Distance of each group's membership-parameter center from the
    /// origin; larger values mean purer memberships.
    pub concentration: f64,
    /// Standard deviation of per-node scatter around the group center.
    pub spread: f64,
}

impl Default for GroupSpec {
    fn default() -> Self {
        GroupSpec {
            concentration: 4.0,
            spread: 0.5,
        }
    }
}

/// Group label of node `i` when `n` nodes split into `k` contiguous blocks.
pub fn group_of(i: usize, n: usize, k: usize) -> usize {
    (i * k) / n
}

/// Membership-parameter center for group `g` out of `k`: group `g < k-1`
/// puts `+c` on its own coordinate, the last group puts `-c` on every
/// unpinned coordinate (its softmax then concentrates on the pinned role).
fn group_center(g: usize, k: usize, c: f64) -> DVector<f64> {
    let mut v = DVector::zeros(k);
    if k == 1 {
        return v;
    }
    if g + 1 < k {
        v[g] = c;
    } else {
        for d in 0..k - 1 {
            v[d] = -c;
        }
    }
    v
}

fn group_membership_draws<R: Rng>(
    centers: &[DVector<f64>],
    n: usize,
    k: usize,
    spread: f64,
    rng: &mut R,
) -> (Vec<Gamma>, Vec<MembershipVector>) {
    let mut gammas = Vec::with_capacity(n);
    let mut pis = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = centers[group_of(i, n, k)].clone();
        for d in 0..k.saturating_sub(1) {
            let z: f64 = rng.sample(StandardNormal);
            v[d] += spread * z;
        }
        v[k - 1] = 0.0;
        let g = Gamma::new(v).expect("group draws keep the pinned coordinate at zero");
        pis.push(logistic_transform(&g));
        gammas.push(g);
    }
    (gammas, pis)
}

/// Sample a static network with planted group structure: nodes split into
/// `k` contiguous groups whose membership parameters concentrate on one
/// role each (plus per-node scatter).  Useful for recovery studies where
/// ground-truth roles should be clearly separated.
pub fn sample_group_network(
    dims: &Dims,
    b: &CompatMatrix,
    spec: &GroupSpec,
    directed: bool,
    seed: u64,
) -> Result<StaticSample> {
    if dims.n_times() != 1 {
        return Err(Error::InvalidArgument(format!(
            "static sampling needs exactly 1 snapshot, got {}",
            dims.n_times()
        )));
    }
    if dims.n_roles() != b.k() {
        return Err(Error::Data(format!(
            "dimension mismatch: {} roles requested, compatibility matrix has {}",
            dims.n_roles(),
            b.k()
        )));
    }
    let k = dims.n_roles();
    let n = dims.n_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<DVector<f64>> = (0..k)
        .map(|g| group_center(g, k, spec.concentration))
        .collect();
    let mut net = NetSeq::empty(n, 1, directed)?;
    let (gammas, memberships) = group_membership_draws(&centers, n, k, spec.spread, &mut rng);
    let pair_roles = sample_edges(&mut net, 0, &memberships, b, &mut rng)?;
    Ok(StaticSample {
        net,
        gammas,
        memberships,
        pair_roles,
    })
}

/// Sample a dynamic sequence with planted group structure whose group
/// centers each follow an independent random walk with per-coordinate
/// step standard deviation `drift`.  Per-node scatter is redrawn every
/// snapshot.  The returned trajectory is the per-snapshot mean of the
/// membership parameters (the target the dynamic prior mean tracks).
pub fn sample_group_dynamic(
    dims: &Dims,
    b: &CompatMatrix,
    spec: &GroupSpec,
    drift: f64,
    directed: bool,
    seed: u64,
) -> Result<DynamicSample> {
    if dims.n_roles() != b.k() {
        return Err(Error::Data(format!(
            "dimension mismatch: {} roles requested, compatibility matrix has {}",
            dims.n_roles(),
            b.k()
        )));
    }
    let k = dims.n_roles();
    let n = dims.n_nodes();
    let t_len = dims.n_times();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<DVector<f64>> = (0..k)
        .map(|g| group_center(g, k, spec.concentration))
        .collect();
    let mut net = NetSeq::empty(n, t_len, directed)?;
    let mut mu_traj = Vec::with_capacity(t_len);
    let mut gammas = Vec::with_capacity(t_len);
    let mut memberships = Vec::with_capacity(t_len);
    let mut pair_roles = Vec::with_capacity(t_len);
    for t in 0..t_len {
        if t > 0 && drift > 0.0 {
            for center in centers.iter_mut() {
                for d in 0..k.saturating_sub(1) {
                    let z: f64 = rng.sample(StandardNormal);
                    center[d] += drift * z;
                }
            }
        }
        let (g_t, pi_t) = group_membership_draws(&centers, n, k, spec.spread, &mut rng);
        let roles_t = sample_edges(&mut net, t, &pi_t, b, &mut rng)?;
        let mut mean = DVector::zeros(k);
        for g in &g_t {
            mean += g.values();
        }
        mean /= n as f64;
        mu_traj.push(mean);
        gammas.push(g_t);
        memberships.push(pi_t);
        pair_roles.push(roles_t);
    }
    Ok(DynamicSample {
        net,
        mu_traj,
        gammas,
        memberships,
        pair_roles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn static_params(k: usize, sigma_diag: f64, on: f64, off: f64) -> StaticParams {
        let mut sigma = DMatrix::zeros(k, k);
        for d in 0..k - 1 {
            sigma[(d, d)] = sigma_diag;
        }
        StaticParams::new(
            DVector::zeros(k),
            sigma,
            CompatMatrix::diag_dominant(k, on, off).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn static_sampler_shapes_and_determinism() {
        let params = static_params(3, 1.0, 0.8, 0.1);
        let dims = Dims::new(12, 3, 1).unwrap();
        let a = sample_static_network(&params, &dims, true, 5).unwrap();
        let b = sample_static_network(&params, &dims, true, 5).unwrap();
        let c = sample_static_network(&params, &dims, true, 6).unwrap();
        assert_eq!(a.net, b.net);
        assert_eq!(a.gammas, b.gammas);
        assert_eq!(a.pair_roles, b.pair_roles);
        assert_ne!(a.net, c.net);
        assert_eq!(a.gammas.len(), 12);
        assert_eq!(a.pair_roles.len(), 12 * 11);
        for g in &a.gammas {
            assert_eq!(g.values()[2], 0.0);
        }
        for pi in &a.memberships {
            assert_abs_diff_eq!(pi.pi().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn undirected_sampler_mirrors_edges() {
        let params = static_params(2, 1.0, 0.9, 0.3);
        let dims = Dims::new(10, 2, 1).unwrap();
        let s = sample_static_network(&params, &dims, false, 3).unwrap();
        assert_eq!(s.pair_roles.len(), 10 * 9 / 2);
        for i in 0..10 {
            for j in 0..10 {
                if i != j {
                    assert_eq!(s.net.edge(0, i, j), s.net.edge(0, j, i));
                }
            }
        }
    }

    #[test]
    fn extreme_compatibility_pins_edges() {
        let dims = Dims::new(6, 2, 1).unwrap();
        let full = static_params(2, 1.0, 1.0, 1.0);
        let s = sample_static_network(&full, &dims, true, 1).unwrap();
        assert_eq!(s.net.n_edges(0), 30);
        let none = static_params(2, 1.0, 0.0, 0.0);
        let s = sample_static_network(&none, &dims, true, 1).unwrap();
        assert_eq!(s.net.n_edges(0), 0);
    }

    #[test]
    fn dynamic_sampler_tracks_walk_and_degenerates_to_static() {
        let k = 2;
        let b = CompatMatrix::diag_dominant(k, 0.7, 0.2).unwrap();
        let zero = DMatrix::zeros(k, k);
        let nu = DVector::from_vec(vec![1.5, 0.0]);
        // Zero walk noise and zero membership scatter: every node sits at
        // nu in every snapshot.
        let params = DynParams::new(nu.clone(), zero.clone(), vec![zero.clone(); 3], b).unwrap();
        let dims = Dims::new(5, k, 3).unwrap();
        let s = sample_dynamic_network(&params, &dims, true, 9).unwrap();
        assert_eq!(s.mu_traj.len(), 3);
        for t in 0..3 {
            assert_eq!(s.mu_traj[t], nu);
            for g in &s.gammas[t] {
                assert_eq!(g.values(), &nu);
            }
        }
        let expected_pi = logistic_transform(&Gamma::new(nu).unwrap());
        assert_abs_diff_eq!(
            s.memberships[2][4].pi()[0],
            expected_pi.pi()[0],
            epsilon = 1e-15
        );
    }

    #[test]
    fn dynamic_sampler_is_deterministic() {
        let k = 3;
        let b = CompatMatrix::diag_dominant(k, 0.8, 0.1).unwrap();
        let mut phi = DMatrix::zeros(k, k);
        let mut sig = DMatrix::zeros(k, k);
        for d in 0..k - 1 {
            phi[(d, d)] = 0.2;
            sig[(d, d)] = 1.0;
        }
        let params = DynParams::new(DVector::zeros(k), phi, vec![sig; 4], b).unwrap();
        let dims = Dims::new(8, k, 4).unwrap();
        let a = sample_dynamic_network(&params, &dims, true, 11).unwrap();
        let b2 = sample_dynamic_network(&params, &dims, true, 11).unwrap();
        assert_eq!(a.net, b2.net);
        assert_eq!(a.mu_traj, b2.mu_traj);
    }

    #[test]
    fn group_generator_plants_pure_groups() {
        let k = 3;
        let n = 60;
        let dims = Dims::new(n, k, 1).unwrap();
        let b = CompatMatrix::diag_dominant(k, 0.7, 0.1).unwrap();
        let spec = GroupSpec {
            concentration: 30.0,
            spread: 0.0,
        };
        let s = sample_group_network(&dims, &b, &spec, true, 21).unwrap();
        for i in 0..n {
            assert_eq!(s.memberships[i].dominant_role(), group_of(i, n, k));
            assert!(s.memberships[i].pi()[group_of(i, n, k)] > 0.999);
        }
    }

    #[test]
    fn group_generator_edge_rates_match_compatibility() {
        // With pure memberships the within-group edge rate estimates the
        // on-diagonal compatibility and cross-group rates the off-diagonal
        // one.  Bounds are 3-sigma binomial intervals.
        let k = 3;
        let n = 60;
        let dims = Dims::new(n, k, 1).unwrap();
        let on = 0.7;
        let off = 0.1;
        let b = CompatMatrix::diag_dominant(k, on, off).unwrap();
        let spec = GroupSpec {
            concentration: 30.0,
            spread: 0.0,
        };
        let s = sample_group_network(&dims, &b, &spec, true, 33).unwrap();
        let mut count = vec![vec![0usize; k]; k];
        let mut total = vec![vec![0usize; k]; k];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (gi, gj) = (group_of(i, n, k), group_of(j, n, k));
                total[gi][gj] += 1;
                if s.net.edge(0, i, j) {
                    count[gi][gj] += 1;
                }
            }
        }
        for u in 0..k {
            for v in 0..k {
                let p = if u == v { on } else { off };
                let m = total[u][v] as f64;
                let rate = count[u][v] as f64 / m;
                let bound = 3.0 * (p * (1.0 - p) / m).sqrt();
                assert!(
                    (rate - p).abs() < bound,
                    "block ({u},{v}): rate {rate:.3} vs {p} (bound {bound:.3})"
                );
            }
        }
    }

    #[test]
    fn group_dynamic_generator_shapes() {
        let k = 2;
        let dims = Dims::new(10, k, 4).unwrap();
        let b = CompatMatrix::diag_dominant(k, 0.8, 0.2).unwrap();
        let spec = GroupSpec::default();
        let s = sample_group_dynamic(&dims, &b, &spec, 0.3, true, 2).unwrap();
        assert_eq!(s.net.n_times(), 4);
        assert_eq!(s.gammas.len(), 4);
        assert_eq!(s.mu_traj.len(), 4);
        for t in 0..4 {
            assert_eq!(s.gammas[t].len(), 10);
            assert_eq!(s.mu_traj[t][k - 1], 0.0);
        }
    }
}
