//! Randomized property tests for the algebraic core: simplex
//! normalizations, covariance shape and ordering, M-step ranges, exact
//! format round trips, alignment consistency, and sampling determinism.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use lnmmsb::linalg::{active_dim, embed_active, embed_active_vec, min_eig_active};
use lnmmsb::static_infer::edge_role_expectations;
use lnmmsb::{
    align_roles, grad_hess_log_partition, kalman_filter, log_partition, logistic_transform,
    membership_error, mstep_b_static, read_network, rts_smooth, sample_static_network,
    update_edge_posterior, update_membership_posterior, write_network, CompatMatrix, Dims, Gamma,
    MembershipVector, NetFormat, NetSeq, Norm, ParamsFile, PseudoObs, StaticParams,
};

const SIMPLEX_TOL: f64 = 1e-12;

/// One standard normal draw.
fn norm(rng: &mut ChaCha8Rng) -> f64 {
    rand::Rng::sample(rng, StandardNormal)
}

/// Deterministic random SPD matrix embedded into `k` with a pinned block.
fn seeded_spd(k: usize, seed: u64, lo: f64, hi: f64) -> DMatrix<f64> {
    let d = active_dim(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if d == 0 {
        return DMatrix::zeros(k, k);
    }
    let g = DMatrix::from_fn(d, d, |_, _| norm(&mut rng));
    let q = g.qr().q();
    let span = hi - lo;
    let eigs = DVector::from_fn(d, |i, _| {
        lo + span * (i as f64 + 0.5) / d as f64
    });
    let m = &q * DMatrix::from_diagonal(&eigs) * q.transpose();
    embed_active(&((&m + m.transpose()) * 0.5), k)
}

proptest! {
    // --- membership simplex algebra ---------------------------------

    #[test]
    fn membership_transform_is_normalized(k in 1usize..=6, seed in any::<u32>()) {
        let gamma = {
            let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
            let mut v = DVector::from_fn(k, |_, _| 8.0 * norm(&mut rng));
            v[k - 1] = 0.0;
            Gamma::new(v).unwrap()
        };
        let pi = logistic_transform(&gamma);
        prop_assert!((pi.pi().sum() - 1.0).abs() <= SIMPLEX_TOL);
        prop_assert!(pi.pi().iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn log_partition_bounds_and_gradient(k in 1usize..=6, seed in any::<u32>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
        let gamma = {
            let mut v = DVector::from_fn(k, |_, _| 6.0 * norm(&mut rng));
            v[k - 1] = 0.0;
            Gamma::new(v).unwrap()
        };
        let c = log_partition(&gamma);
        let max = gamma.values().max();
        prop_assert!(c >= max - 1e-12);
        prop_assert!(c <= max + (k as f64).ln() + 1e-12);
        let (g, h) = grad_hess_log_partition(&gamma);
        let pi = logistic_transform(&gamma);
        for i in 0..k {
            prop_assert!((g[i] - pi.pi()[i]).abs() <= SIMPLEX_TOL);
            let row: f64 = (0..k).map(|j| h[(i, j)]).sum();
            prop_assert!(row.abs() <= SIMPLEX_TOL);
        }
        prop_assert!((&h - h.transpose()).abs().max() <= SIMPLEX_TOL);
        prop_assert!(min_eig_active(&embed_active(&h, k + 1), k + 1) >= -1e-10);
    }

    // --- dyad posterior ----------------------------------------------

    #[test]
    fn dyad_posterior_is_normalized(
        k in 1usize..=5,
        edge in any::<bool>(),
        seed in any::<u32>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
        let draw = |rng: &mut ChaCha8Rng| {
            let mut v = DVector::from_fn(k, |_, _| 5.0 * norm(rng));
            v[k - 1] = 0.0;
            v
        };
        let gi = draw(&mut rng);
        let gj = draw(&mut rng);
        let b = CompatMatrix::new(DMatrix::from_fn(k, k, |_, _| {
            0.05 + 0.9 * rand::Rng::random::<f64>(&mut rng)
        }))
        .unwrap();
        let (delta, degenerate) = update_edge_posterior(edge, &gi, &gj, &b).unwrap();
        prop_assert!(!degenerate);
        prop_assert!((delta.delta().sum() - 1.0).abs() <= SIMPLEX_TOL);
        let (ez_to, ez_from) = edge_role_expectations(&delta);
        prop_assert!((ez_to.sum() - 1.0).abs() <= SIMPLEX_TOL);
        prop_assert!((ez_from.sum() - 1.0).abs() <= SIMPLEX_TOL);
    }

    #[test]
    fn constant_compatibility_factorizes_dyad_posterior(
        k in 2usize..=4,
        edge in any::<bool>(),
        level in 0.2..0.8f64,
        seed in any::<u32>(),
    ) {
        // With all compatibilities equal the Bernoulli factor cancels and
        // the posterior is the outer product of the two softmaxes.
        let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
        let draw = |rng: &mut ChaCha8Rng| {
            let mut v = DVector::from_fn(k, |_, _| 3.0 * norm(rng));
            v[k - 1] = 0.0;
            v
        };
        let gi = draw(&mut rng);
        let gj = draw(&mut rng);
        let b = CompatMatrix::new(DMatrix::from_element(k, k, level)).unwrap();
        let (delta, _) = update_edge_posterior(edge, &gi, &gj, &b).unwrap();
        let pi = logistic_transform(&Gamma::new(gi).unwrap());
        let pj = logistic_transform(&Gamma::new(gj).unwrap());
        for u in 0..k {
            for v in 0..k {
                let expected = pi.pi()[u] * pj.pi()[v];
                prop_assert!((delta.delta()[(u, v)] - expected).abs() <= 1e-12);
            }
        }
    }

    // --- Laplace membership update -----------------------------------

    #[test]
    fn membership_update_returns_valid_covariance(
        k in 2usize..=5,
        n in 2usize..=40,
        seed in any::<u32>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
        let sigma = seeded_spd(k, seed as u64, 0.3, 3.0);
        let mut mu = DVector::from_fn(k, |_, _| norm(&mut rng));
        mu[k - 1] = 0.0;
        let role_draws = 2.0 * (n as f64 - 1.0);
        // A nonnegative expected-count vector totalling the draw count.
        let raw = DVector::from_fn(k, |_, _| rand::Rng::random_range(&mut rng, 0.01..1.0));
        let m = &raw * (role_draws / raw.sum());
        let mut gamma_hat = DVector::from_fn(k, |_, _| norm(&mut rng));
        gamma_hat[k - 1] = 0.0;
        let post = update_membership_posterior(&m, &mu, &sigma, &gamma_hat, role_draws).unwrap();
        let st = post.sigma_tilde();
        prop_assert!((st - st.transpose()).abs().max() <= 1e-10);
        prop_assert!(min_eig_active(st, k) > 0.0);
        prop_assert_eq!(post.gamma_tilde()[k - 1], 0.0);
        prop_assert!((post.mean_membership().pi().sum() - 1.0).abs() <= SIMPLEX_TOL);
    }

    #[test]
    fn membership_update_fixes_prior_mean(k in 2usize..=5, n in 2usize..=30, seed in any::<u32>()) {
        // When the expansion point sits at the prior mean and the expected
        // counts equal the draw count times the mean's membership vector,
        // the update returns the prior mean unchanged.
        let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
        let sigma = seeded_spd(k, seed as u64 ^ 0xABCD, 0.3, 2.0);
        let mut mu = DVector::from_fn(k, |_, _| norm(&mut rng));
        mu[k - 1] = 0.0;
        let role_draws = 2.0 * (n as f64 - 1.0);
        let pi_mu = logistic_transform(&Gamma::new(mu.clone()).unwrap());
        let m = pi_mu.pi() * role_draws;
        let post = update_membership_posterior(&m, &mu, &sigma, &mu, role_draws).unwrap();
        prop_assert!((post.gamma_tilde() - &mu).abs().max() <= 1e-9);
    }

    // --- compatibility M-step ----------------------------------------

    #[test]
    fn compatibility_mstep_stays_in_unit_interval(
        k in 1usize..=4,
        n_pairs in 1usize..=30,
        seed in any::<u32>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
        let b = CompatMatrix::new(DMatrix::from_fn(k, k, |_, _| {
            0.05 + 0.9 * rand::Rng::random::<f64>(&mut rng)
        }))
        .unwrap();
        let mut edges = Vec::with_capacity(n_pairs);
        let mut deltas = Vec::with_capacity(n_pairs);
        for _ in 0..n_pairs {
            let e = rand::Rng::random::<f64>(&mut rng) < 0.5;
            let mut gi = DVector::from_fn(k, |_, _| 2.0 * norm(&mut rng));
            let mut gj = DVector::from_fn(k, |_, _| 2.0 * norm(&mut rng));
            gi[k - 1] = 0.0;
            gj[k - 1] = 0.0;
            let (d, _) = update_edge_posterior(e, &gi, &gj, &b).unwrap();
            edges.push(e);
            deltas.push(d);
        }
        let updated = mstep_b_static(&edges, &deltas, &b).unwrap();
        prop_assert!(updated
            .as_matrix()
            .iter()
            .all(|&v| (0.0..=1.0).contains(&v)));
        // All-edge data pushes every touched cell to probability one.
        let all_true = vec![true; n_pairs];
        let saturated = mstep_b_static(&all_true, &deltas, &b).unwrap();
        prop_assert!(saturated
            .as_matrix()
            .iter()
            .all(|&v| (0.0..=1.0).contains(&v)));
    }

    // --- state-space covariances -------------------------------------

    #[test]
    fn smoother_covariances_shrink(
        k in 2usize..=4,
        t_len in 1usize..=6,
        n_nodes in 1usize..=60,
        seed in any::<u32>(),
    ) {
        let d = active_dim(k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
        let phi = seeded_spd(k, seed as u64 ^ 0x11, 0.1, 1.5);
        let sigmas: Vec<DMatrix<f64>> = (0..t_len)
            .map(|t| seeded_spd(k, (seed as u64) << 8 | t as u64, 0.1, 1.5))
            .collect();
        let mut nu = DVector::from_fn(k, |_, _| norm(&mut rng));
        nu[k - 1] = 0.0;
        let ys: Vec<DVector<f64>> = (0..t_len)
            .map(|_| {
                let v = DVector::from_fn(d, |_, _| {
                    2.0 * norm(&mut rng)
                });
                embed_active_vec(&v, k)
            })
            .collect();
        let a = embed_active(&DMatrix::identity(d, d), k);
        let obs = PseudoObs::new(ys).unwrap();
        let trace = kalman_filter(&obs, &nu, &phi, &sigmas, n_nodes, &a, 1e-10).unwrap();
        let trace = rts_smooth(trace, &a, 1e-10).unwrap();
        for t in 0..t_len {
            for cov in [trace.filtered_cov(t), trace.smoothed_cov(t)] {
                prop_assert!((cov - cov.transpose()).abs().max() <= 1e-10);
                prop_assert!(min_eig_active(cov, k) >= -1e-8);
            }
            let gap = trace.filtered_cov(t) - trace.smoothed_cov(t);
            prop_assert!(min_eig_active(&gap, k) >= -1e-8);
            prop_assert_eq!(trace.smoothed_mean(t)[k - 1], 0.0);
        }
    }

    // --- alignment ----------------------------------------------------

    #[test]
    fn alignment_undoes_role_permutation(
        k in 2usize..=5,
        n in 3usize..=25,
        seed in any::<u32>(),
        rot in 1usize..=4,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
        let truth: Vec<MembershipVector> = (0..n)
            .map(|i| {
                // Anchor one node per role so every role is identifiable.
                let lead = i % k;
                let mut pi = DVector::from_fn(k, |r, _| {
                    let base = if r == lead { 10.0 } else { 1.0 };
                    base + rand::Rng::random_range(&mut rng, 0.0..0.5)
                });
                pi /= pi.sum();
                MembershipVector::new(pi).unwrap()
            })
            .collect();
        let shift = rot % k;
        let permuted: Vec<MembershipVector> = truth
            .iter()
            .map(|m| {
                let pi = DVector::from_fn(k, |r, _| m.pi()[(r + shift) % k]);
                MembershipVector::new(pi).unwrap()
            })
            .collect();
        let align = align_roles(&truth, &permuted).unwrap();
        let restored: Vec<MembershipVector> =
            permuted.iter().map(|m| align.apply(m)).collect();
        let err = membership_error(&truth, &restored, Norm::L2).unwrap();
        prop_assert!(err <= 1e-12, "residual error {err}");
    }

    // --- formats ------------------------------------------------------

    #[test]
    fn network_formats_round_trip(
        n in 2usize..=12,
        t_len in 1usize..=3,
        directed in any::<bool>(),
        seed in any::<u32>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
        let mut net = NetSeq::empty(n, t_len, directed).unwrap();
        let pairs = net.pairs();
        for t in 0..t_len {
            for &(i, j) in &pairs {
                if rand::Rng::random::<f64>(&mut rng) < 0.4 {
                    net.set_edge(t, i, j, true).unwrap();
                }
            }
        }
        let dir = tempfile::tempdir().unwrap();
        for (format, name) in [(NetFormat::EdgeList, "net.tsv"), (NetFormat::Dense, "net.csv")] {
            let path = dir.path().join(name);
            write_network(&net, &path, format).unwrap();
            let back = read_network(&path, format).unwrap();
            prop_assert_eq!(&back, &net);
        }
    }

    #[test]
    fn parameter_json_round_trips_bitwise(k in 2usize..=5, seed in any::<u32>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
        let mut mu = DVector::from_fn(k, |_, _| norm(&mut rng));
        mu[k - 1] = 0.0;
        let sigma = seeded_spd(k, seed as u64 ^ 0x5151, 0.2, 2.0);
        let b = CompatMatrix::new(DMatrix::from_fn(k, k, |_, _| {
            rand::Rng::random::<f64>(&mut rng)
        }))
        .unwrap();
        let params = StaticParams::new(mu, sigma, b).unwrap();
        let file = ParamsFile::from_static(&params, true);
        let text = serde_json::to_string(&file).unwrap();
        let back: ParamsFile = serde_json::from_str(&text).unwrap();
        let restored = back.to_static().unwrap();
        prop_assert_eq!(restored.mu(), params.mu());
        prop_assert_eq!(restored.sigma(), params.sigma());
        prop_assert_eq!(restored.b().as_matrix(), params.b().as_matrix());
    }

    // --- sampling -----------------------------------------------------

    #[test]
    fn sampling_is_deterministic(k in 1usize..=4, n in 2usize..=20, seed in any::<u32>()) {
        let mu = DVector::zeros(k);
        let sigma = seeded_spd(k, 7, 0.2, 1.0);
        let b = CompatMatrix::diag_dominant(k, 0.7, 0.2).unwrap();
        let params = StaticParams::new(mu, sigma, b).unwrap();
        let dims = Dims::new(n, k, 1).unwrap();
        let s1 = sample_static_network(&params, &dims, true, seed as u64).unwrap();
        let s2 = sample_static_network(&params, &dims, true, seed as u64).unwrap();
        prop_assert_eq!(&s1.net, &s2.net);
        for (a, b) in s1.gammas.iter().zip(&s2.gammas) {
            prop_assert_eq!(a.values(), b.values());
        }
        for (a, b) in s1.memberships.iter().zip(&s2.memberships) {
            prop_assert_eq!(a.pi(), b.pi());
        }
    }
}
