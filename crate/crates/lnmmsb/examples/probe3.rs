//! Scratch probe for planted-recovery tuning.

use lnmmsb::sample::GroupSpec;
use lnmmsb::{
    align_roles, fit_lnmmsb, membership_error, sample_group_network, CompatMatrix, Dims, FitCfg,
    MembershipVector, Norm,
};

fn main() {
    let b_true = CompatMatrix::diag_dominant(3, 0.95, 0.02).unwrap();
    let conc: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(8.0);
    let spread: f64 = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.2);
    let spec = GroupSpec {
        concentration: conc,
        spread,
    };
    let cfg = FitCfg {
        n_restarts: 3,
        ..FitCfg::default()
    };
    for seed in [0u64, 3, 6] {
        let dims = Dims::new(100, 3, 1).unwrap();
        let sample = sample_group_network(&dims, &b_true, &spec, true, 1000 + seed).unwrap();
        println!(
            "seed {seed}: sample pi[0] = {:?}",
            sample.memberships[0].pi().as_slice()
        );
        let fit = fit_lnmmsb(&sample.net, 3, &cfg, 2000 + seed).unwrap();
        let est: Vec<MembershipVector> =
            fit.posteriors.iter().map(|p| p.mean_membership()).collect();
        let align = align_roles(&sample.memberships, &est).unwrap();
        let aligned: Vec<MembershipVector> = est.iter().map(|m| align.apply(m)).collect();
        let err = membership_error(&sample.memberships, &aligned, Norm::L2).unwrap();
        let bhat = align.apply_compat(fit.params.b());
        println!("  err {err:.4}, restart {} converged {}", fit.report.restart, fit.report.converged);
        println!("  est pi[0] = {:?}", aligned[0].pi().as_slice());
        println!("  est pi[50] = {:?}", aligned[50].pi().as_slice());
        for r in 0..3 {
            println!(
                "  bhat [{:.3} {:.3} {:.3}]",
                bhat.get(r, 0),
                bhat.get(r, 1),
                bhat.get(r, 2)
            );
        }
        println!("  mu = {:?}", fit.params.mu().as_slice());
        println!(
            "  sigma diag = {:?} {:?}",
            fit.params.sigma()[(0, 0)],
            fit.params.sigma()[(1, 1)]
        );
    }
}
