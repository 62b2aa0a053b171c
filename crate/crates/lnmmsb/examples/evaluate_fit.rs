//! Score a fitted model: importance-sampled log-likelihood, BIC, and
//! membership recovery error against ground truth.
//!
//! Run with: `cargo run --example evaluate_fit`

use lnmmsb::config::{FitCfg, ModelKind};
use lnmmsb::eval::{align_roles, bic_score, loglik_importance, membership_error, Norm};
use lnmmsb::sample::{sample_group_network, GroupSpec};
use lnmmsb::static_infer::fit_lnmmsb;
use lnmmsb::types::{CompatMatrix, Dims, MembershipVector};

fn main() -> lnmmsb::Result<()> {
    let k = 3;
    let dims = Dims::new(40, k, 1)?;
    let b = CompatMatrix::diag_dominant(k, 0.9, 0.05)?;
    let spec = GroupSpec {
        concentration: 6.0,
        spread: 0.4,
    };
    let sample = sample_group_network(&dims, &b, &spec, true, 23)?;

    let cfg = FitCfg {
        n_restarts: 3,
        max_outer: 40,
        ..FitCfg::default()
    };
    let fit = fit_lnmmsb(&sample.net, k, &cfg, 2)?;
    println!(
        "fitted {} roles in {} outer iterations (converged: {})",
        k, fit.report.n_outer, fit.report.converged
    );

    // Log-likelihood of the observed network under the fitted model, with
    // role indicators marginalized exactly and memberships integrated by
    // importance sampling from the fitted posteriors.
    let (loglik, se) = loglik_importance(&sample.net, &fit.params, &fit.posteriors, 1000, 99)?;
    println!("log-likelihood: {loglik:.2} +- {se:.4}");
    let score = bic_score(loglik, se, &dims, ModelKind::Static, true);
    println!("free parameters: {}", score.n_params);
    println!("BIC: {:.2}", score.bic);

    // Recovery error against the generating memberships.
    let est: Vec<MembershipVector> = fit
        .posteriors
        .iter()
        .map(|p| p.mean_membership())
        .collect();
    let alignment = align_roles(&sample.memberships, &est)?;
    let aligned: Vec<MembershipVector> = est.iter().map(|m| alignment.apply(m)).collect();
    println!(
        "membership error: L1 {:.4}, L2 {:.4}",
        membership_error(&sample.memberships, &aligned, Norm::L1)?,
        membership_error(&sample.memberships, &aligned, Norm::L2)?
    );
    Ok(())
}
