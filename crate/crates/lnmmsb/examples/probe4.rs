//! Scratch probe: is the generating configuration a stable point of the
//! alternating updates, and which basin has the better surrogate?

use lnmmsb::sample::GroupSpec;
use lnmmsb::{
    mstep_b_static, mstep_mu_sigma_static, sample_group_network, update_edge_posterior,
    update_membership_posterior, CompatMatrix, Dims, EdgePosterior, MembershipPosterior,
};
use nalgebra::{DMatrix, DVector};

fn main() {
    let k = 3;
    let n = 100;
    let b_true = CompatMatrix::diag_dominant(k, 0.8, 0.1).unwrap();
    let spec = GroupSpec {
        concentration: 6.0,
        spread: 0.3,
    };
    let dims = Dims::new(n, k, 1).unwrap();
    let sample = sample_group_network(&dims, &b_true, &spec, true, 1000).unwrap();
    let pairs = sample.net.pairs();
    let edge_flags: Vec<bool> = pairs
        .iter()
        .map(|&(i, j)| sample.net.edge(0, i, j))
        .collect();
    let role_draws = 2.0 * (n as f64 - 1.0);

    // Start exactly at the generating configuration.
    let mut b = b_true.clone();
    let mut posteriors: Vec<MembershipPosterior> = sample
        .gammas
        .iter()
        .map(|g| {
            MembershipPosterior::new(g.values().clone(), DMatrix::zeros(k, k)).unwrap()
        })
        .collect();
    // Prior moments matched to the sampled membership parameters.
    let (mut mu, mut sigma) = moment_fit(&posteriors, k);

    for outer in 0..60 {
        for _inner in 0..3 {
            let mut deltas: Vec<EdgePosterior> = Vec::with_capacity(pairs.len());
            for &(i, j) in &pairs {
                let (d, _) = update_edge_posterior(
                    sample.net.edge(0, i, j),
                    posteriors[i].gamma_tilde(),
                    posteriors[j].gamma_tilde(),
                    &b,
                )
                .unwrap();
                deltas.push(d);
            }
            // Expected role-count vectors per node.
            let mut m = vec![DVector::zeros(k); n];
            for (d, &(i, j)) in deltas.iter().zip(&pairs) {
                let dm = d.delta();
                for u in 0..k {
                    let mut su = 0.0;
                    let mut sv = 0.0;
                    for v in 0..k {
                        su += dm[(u, v)];
                        sv += dm[(v, u)];
                    }
                    m[i][u] += su;
                    m[j][u] += sv;
                }
            }
            for i in 0..n {
                posteriors[i] = update_membership_posterior(
                    &m[i],
                    &mu,
                    &sigma,
                    posteriors[i].gamma_tilde(),
                    role_draws,
                )
                .unwrap();
            }
            b = mstep_b_static(&edge_flags, &deltas, &b).unwrap();
        }
        let (nmu, nsig) = mstep_mu_sigma_static(&posteriors).unwrap();
        mu = nmu;
        sigma = nsig;
        if outer % 5 == 0 || outer == 59 {
            let pi0 = posteriors[0].mean_membership();
            println!(
                "outer {outer:2}: b00 {:.3} b11 {:.3} b01 {:.3} b10 {:.3} | pi0 {:.3} | sigma00 {:.2}",
                b.get(0, 0),
                b.get(1, 1),
                b.get(0, 1),
                b.get(1, 0),
                pi0.pi()[0],
                sigma[(0, 0)]
            );
        }
    }
}

fn moment_fit(posteriors: &[MembershipPosterior], k: usize) -> (DVector<f64>, DMatrix<f64>) {
    let n = posteriors.len();
    let mut mu = DVector::zeros(k);
    for p in posteriors {
        mu += p.gamma_tilde();
    }
    mu /= n as f64;
    mu[k - 1] = 0.0;
    let mut sig = DMatrix::zeros(k, k);
    for p in posteriors {
        let d = p.gamma_tilde() - &mu;
        sig += &d * d.transpose();
    }
    sig /= n as f64;
    for i in 0..k {
        sig[(i, k - 1)] = 0.0;
        sig[(k - 1, i)] = 0.0;
    }
    (mu, sig)
}
