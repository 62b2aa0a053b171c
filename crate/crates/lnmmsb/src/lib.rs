//! Mixed membership blockmodels with logistic-normal membership priors.
//!
//! This crate implements a generative model for directed or undirected
//! networks in which every node carries a membership vector over `K` latent
//! roles.  Memberships live on the simplex via the logistic (softmax)
//! transform of a Gaussian vector, which lets roles be correlated — unlike
//! Dirichlet-based variants.  A state-space extension chains the membership
//! prior mean through a Gaussian random walk so role occupancy can drift
//! over a sequence of network snapshots.
//!
//! What you can do with it:
//!
//! * simulate static networks and dynamic network sequences
//!   ([`sample_static_network`], [`sample_dynamic_network`]),
//! * infer per-node membership posteriors with a variational scheme that
//!   combines coordinate updates for edge-level role posteriors with a
//!   Laplace (quadratic) approximation for the membership vectors
//!   ([`infer_lnmmsb`], [`infer_dmmsb`]),
//! * learn all model parameters by variational EM ([`fit_lnmmsb`],
//!   [`fit_dmmsb`]), with Kalman filtering and Rauch-Tung-Striebel
//!   smoothing for the dynamic prior mean ([`kalman_filter`],
//!   [`rts_smooth`]),
//! * score fitted models by importance-sampled log-likelihood and BIC and
//!   select the number of roles ([`loglik_importance`], [`bic_score`],
//!   [`select_roles`]),
//! * compare recovered memberships against ground truth up to role
//!   relabeling ([`align_roles`], [`membership_error`]),
//! * read and write edge lists, dense adjacency dumps, fitted-state JSON
//!   and per-node trajectory tables ([`read_network`], [`write_network`],
//!   [`export_trajectories`]).
//!
//! The `examples/` directory contains one runnable program per capability;
//! a thin `lnmmsb` binary exposes the same operations as subcommands
//! (`generate`, `fit`, `evaluate`, `select`, `export`).
//!
//! # Conventions
//!
//! With `K` roles, membership vectors are parameterized by a `K`-dimensional
//! Gaussian vector whose last coordinate is pinned to zero for
//! identifiability (the softmax is invariant under adding a constant).  All
//! vectors and matrices are stored at full size `K`/`K x K`; covariance-like
//! objects carry a zero final row and column, and linear algebra
//! (factorization, solves, determinants) happens on the leading
//! `(K-1) x (K-1)` block.

pub mod cli;
pub mod config;
pub mod dynamic_infer;
pub mod error;
pub mod eval;
pub mod io;
pub mod kalman;
pub mod linalg;
pub mod logistic;
pub mod sample;
pub mod static_infer;
pub mod types;

pub use config::{FitCfg, InferCfg, ModelKind, RunConfig};
pub use dynamic_infer::{
    fit_dmmsb, infer_dmmsb, mstep_b_dynamic, mstep_dynamics, DmmsbFit, DmmsbInference,
};
pub use error::Error;
pub use eval::{
    align_roles, bic_score, loglik_importance, membership_error, select_roles, Alignment,
    ModelScore, Norm,
};
pub use io::{
    export_trajectories, read_network, read_trajectories, write_network, NetFormat, ParamsFile,
    TrajectoryExport,
};
pub use kalman::{kalman_filter, rts_smooth, KalmanTrace, PseudoObs};
pub use logistic::{grad_hess_log_partition, log_partition, logistic_transform};
pub use sample::{
    sample_dynamic_network, sample_group_dynamic, sample_group_network, sample_static_network,
    DynamicSample, GroupSpec, PairRoles, StaticSample,
};
pub use static_infer::{
    fit_lnmmsb, infer_lnmmsb, mstep_b_static, mstep_mu_sigma_static, update_edge_posterior,
    update_membership_posterior, EdgePosterior, ExpectedCounts, FitReport, MembershipPosterior,
    StaticFit, StaticInference,
};
pub use types::{
    CompatMatrix, Dims, DynParams, Gamma, MembershipVector, NetSeq, StaticParams,
};

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
