//! Kalman filtering and two-sided smoothing of a latent prior-mean
//! trajectory, shown directly on the state-space layer.
//!
//! A noisy pseudo-observation sequence is produced from a known random
//! walk; the example prints how the backward smoothing pass tightens the
//! forward filter's estimates, especially early in the sequence.
//!
//! Run with: `cargo run --example smooth_trajectory`

use lnmmsb::kalman::{kalman_filter, rts_smooth, PseudoObs};
use lnmmsb::linalg::embed_active;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> lnmmsb::Result<()> {
    let k = 2; // one active coordinate
    let t_len = 12;
    let n_nodes = 20; // averaging count behind each pseudo-observation
    let step_sd = 0.4f64;
    let obs_sd = 1.2f64;

    // Simulate the walk and its noisy observations.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut truth = Vec::with_capacity(t_len);
    let mut obs = Vec::with_capacity(t_len);
    let mut x = 0.0f64;
    for _ in 0..t_len {
        let e: f64 = StandardNormal.sample(&mut rng);
        x += step_sd * e;
        truth.push(x);
        let e: f64 = StandardNormal.sample(&mut rng);
        let y = x + obs_sd / (n_nodes as f64).sqrt() * e;
        obs.push(DVector::from_vec(vec![y, 0.0]));
    }

    let nu = DVector::zeros(k);
    let phi = embed_active(&(DMatrix::identity(1, 1) * step_sd * step_sd), k);
    let sigma = embed_active(&(DMatrix::identity(1, 1) * obs_sd * obs_sd), k);
    let a = embed_active(&DMatrix::identity(1, 1), k);

    let y = PseudoObs::new(obs)?;
    let trace = kalman_filter(&y, &nu, &phi, &vec![sigma; t_len], n_nodes, &a, 1e-10)?;
    let trace = rts_smooth(trace, &a, 1e-10)?;

    println!(" t   truth    filtered (var)      smoothed (var)");
    let mut filt_se = 0.0;
    let mut smooth_se = 0.0;
    for t in 0..t_len {
        let xf = trace.filtered_mean(t)[0];
        let pf = trace.filtered_cov(t)[(0, 0)];
        let xs = trace.smoothed_mean(t)[0];
        let ps = trace.smoothed_cov(t)[(0, 0)];
        filt_se += (xf - truth[t]).powi(2);
        smooth_se += (xs - truth[t]).powi(2);
        println!(
            "{:2}  {:+.3}   {:+.3} ({:.4})      {:+.3} ({:.4})",
            t + 1,
            truth[t],
            xf,
            pf,
            xs,
            ps
        );
    }
    println!(
        "mean squared error: filtered {:.4}, smoothed {:.4}",
        filt_se / t_len as f64,
        smooth_se / t_len as f64
    );
    println!("(smoothing can only shrink the posterior variance at each step)");
    Ok(())
}
