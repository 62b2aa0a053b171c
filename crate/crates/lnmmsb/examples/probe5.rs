//! Scratch diagnostic: per-slice comparison of the sequence fit against
//! independent per-slice fits on drifting-mean synthetic data.

use lnmmsb::*;
use lnmmsb::linalg::{active_dim, embed_active};
use nalgebra::{DMatrix, DVector};

fn mean_memberships(posts: &[MembershipPosterior]) -> Vec<MembershipVector> {
    posts.iter().map(|p| p.mean_membership()).collect()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seed: u64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0);
    let b_hi: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.8);
    let b_lo: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(0.1);
    let phi_v: f64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(0.09);
    let sig_v: f64 = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(2.25);

    let n = 100;
    let k = 3;
    let t_len = 10;
    let d = active_dim(k);
    let b_true = CompatMatrix::diag_dominant(k, b_hi, b_lo).unwrap();
    let nu = DVector::zeros(k);
    let phi = embed_active(&(DMatrix::identity(d, d) * phi_v), k);
    let sigma = embed_active(&(DMatrix::identity(d, d) * sig_v), k);
    let params = DynParams::new(nu, phi, vec![sigma; t_len], b_true).unwrap();
    let dims = Dims::new(n, k, t_len).unwrap();
    let cfg = FitCfg { n_restarts: 3, ..FitCfg::default() };

    let sample = sample_dynamic_network(&params, &dims, true, 3000 + seed).unwrap();
    let dyn_fit = fit_dmmsb(&sample.net, k, &cfg, 4000 + seed).unwrap();

    println!("B_hat dynamic:");
    let bd = dyn_fit.params.b().as_matrix();
    for r in 0..k {
        let row: Vec<String> = (0..k).map(|c| format!("{:.3}", bd[(r, c)])).collect();
        println!("  [{}]", row.join(", "));
    }
    println!(
        "Phi_hat diag: {:?}",
        (0..d).map(|i| dyn_fit.params.phi()[(i, i)]).collect::<Vec<_>>()
    );

    let mut dyn_sum = 0.0;
    let mut stat_sum = 0.0;
    for t in 0..t_len {
        let truth = &sample.memberships[t];
        let dyn_m = mean_memberships(&dyn_fit.posteriors[t]);
        let al_d = align_roles(truth, &dyn_m).unwrap();
        let dyn_al: Vec<MembershipVector> = dyn_m.iter().map(|m| al_d.apply(m)).collect();
        let e_d = membership_error(truth, &dyn_al, Norm::L2).unwrap();

        let slice = sample.net.time_slice(t).unwrap();
        let sfit = fit_lnmmsb(&slice, k, &cfg, 5000 + seed * 100 + t as u64).unwrap();
        let st_m = mean_memberships(&sfit.posteriors);
        let al_s = align_roles(truth, &st_m).unwrap();
        let st_al: Vec<MembershipVector> = st_m.iter().map(|m| al_s.apply(m)).collect();
        let e_s = membership_error(truth, &st_al, Norm::L2).unwrap();

        dyn_sum += e_d;
        stat_sum += e_s;
        let mu_t = &dyn_fit.mu_traj[t];
        let mu_s = sfit.params.mu();
        println!(
            "t={t}: dyn perm {:?} err {:.4} | stat perm {:?} err {:.4} | mu_dyn [{:.2},{:.2}] mu_stat [{:.2},{:.2}] mu_true [{:.2},{:.2}] | B_stat diag [{:.2},{:.2},{:.2}] off {:.2}",
            al_d.perm(), e_d, al_s.perm(), e_s,
            mu_t[0], mu_t[1], mu_s[0], mu_s[1],
            sample.mu_traj[t][0], sample.mu_traj[t][1],
            sfit.params.b().as_matrix()[(0,0)], sfit.params.b().as_matrix()[(1,1)], sfit.params.b().as_matrix()[(2,2)],
            sfit.params.b().as_matrix()[(0,1)],
        );
    }
    println!(
        "avg dyn {:.4} stat {:.4} reduction {:.1}%",
        dyn_sum / t_len as f64,
        stat_sum / t_len as f64,
        (1.0 - dyn_sum / stat_sum) * 100.0
    );
}
