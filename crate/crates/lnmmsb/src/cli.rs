//! Command-line interface.
//!
//! Five subcommands cover the full workflow: `generate` samples a network
//! from the model, `fit` learns parameters and posteriors, `evaluate`
//! scores a fit (and compares against ground truth when available),
//! `select` chooses a role count by BIC, and `export` re-emits the
//! trajectory tables from a saved fit.
//!
//! Every command prints machine-readable `key = value` lines and writes
//! its effective configuration next to its outputs.  Exit codes: 0 on
//! success, 1 for invalid arguments, 2 for unreadable or inconsistent
//! data, 3 for numerical failures.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::config::{ModelKind, RunConfig};
use crate::dynamic_infer::fit_dmmsb;
use crate::error::Error;
use crate::eval::{align_roles, bic_score, loglik_importance, membership_error, select_roles, Norm};
use crate::io::{
    self, export_trajectories, read_network, read_trajectories, write_network, FitStateFile,
    NetFormat, ParamsFile, TrajectoryExport,
};
use crate::linalg::embed_active;
use crate::sample::{sample_dynamic_network, sample_static_network};
use crate::static_infer::fit_lnmmsb;
use crate::types::{CompatMatrix, Dims, DynParams, MembershipVector, NetSeq, StaticParams};
use crate::Result;

fn parse_model(s: &str) -> std::result::Result<ModelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> std::result::Result<NetFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "lnmmsb",
    version,
    about = "Mixed-membership blockmodels with logistic-normal priors",
    disable_help_subcommand = true
)]
pub struct Cli {
    /// Worker threads for restart-parallel fitting (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Log progress details to stderr.
    #[arg(long, short = 'v', global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    Generate(GenerateArgs),
    Fit(FitArgs),
    Evaluate(EvaluateArgs),
    Select(SelectArgs),
    Export(ExportArgs),
}

/// Sample a network (and its latent ground truth) from the model.
#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Number of nodes.
    #[arg(long)]
    pub nodes: usize,
    /// Number of roles (required unless --params supplies it).
    #[arg(long)]
    pub roles: Option<usize>,
    /// Number of snapshots.
    #[arg(long)]
    pub times: Option<usize>,
    /// Model family; defaults to static for one snapshot, dynamic otherwise.
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ModelKind>,
    /// Treat edges as undirected.
    #[arg(long)]
    pub undirected: bool,
    /// Generating parameters (JSON); built-in defaults otherwise.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Within-role connection probability for the default parameters.
    #[arg(long, default_value_t = 0.8)]
    pub edge_on: f64,
    /// Between-role connection probability for the default parameters.
    #[arg(long, default_value_t = 0.1)]
    pub edge_off: f64,
    /// Prior standard deviation of membership parameters for the default
    /// parameters.
    #[arg(long, default_value_t = 1.5)]
    pub latent_sd: f64,
    /// Random-walk step standard deviation for the default dynamic
    /// parameters.
    #[arg(long, default_value_t = 0.5)]
    pub drift_sd: f64,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Network file format (edgelist or dense).
    #[arg(long, value_parser = parse_format)]
    pub format: Option<NetFormat>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Learn parameters and membership posteriors from a network.
#[derive(Debug, Args)]
pub struct FitArgs {
    /// Input network file.
    #[arg(long)]
    pub network: PathBuf,
    /// Network file format (inferred from the extension by default).
    #[arg(long, value_parser = parse_format)]
    pub format: Option<NetFormat>,
    /// Number of roles.
    #[arg(long)]
    pub roles: Option<usize>,
    /// Model family; defaults to static for one snapshot, dynamic otherwise.
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ModelKind>,
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Random seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Independent random restarts.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Convergence threshold on the relative objective change.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Cap on inner sweeps per outer cycle.
    #[arg(long)]
    pub max_inner: Option<usize>,
    /// Cap on outer parameter-update cycles.
    #[arg(long)]
    pub max_outer: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Score a saved fit on a network, optionally against ground truth.
#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Input network file.
    #[arg(long)]
    pub network: PathBuf,
    /// Network file format (inferred from the extension by default).
    #[arg(long, value_parser = parse_format)]
    pub format: Option<NetFormat>,
    /// Saved fit state (JSON, as written by `fit`).
    #[arg(long)]
    pub fit: PathBuf,
    /// Ground-truth trajectory table (as written by `generate`).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Importance samples for the log-likelihood estimate.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Random seed for the log-likelihood estimate.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Choose a role count by BIC over a candidate range.
#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Input network file.
    #[arg(long)]
    pub network: PathBuf,
    /// Network file format (inferred from the extension by default).
    #[arg(long, value_parser = parse_format)]
    pub format: Option<NetFormat>,
    /// Model family; defaults to static for one snapshot, dynamic otherwise.
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ModelKind>,
    /// Smallest candidate role count.
    #[arg(long)]
    pub k_min: Option<usize>,
    /// Largest candidate role count.
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Random seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Independent random restarts per candidate.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Convergence threshold on the relative objective change.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Cap on inner sweeps per outer cycle.
    #[arg(long)]
    pub max_inner: Option<usize>,
    /// Cap on outer parameter-update cycles.
    #[arg(long)]
    pub max_outer: Option<usize>,
    /// Importance samples for the log-likelihood estimates.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Optional output directory for the score table and configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Re-emit trajectory tables and parameters from a saved fit.
#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Saved fit state (JSON, as written by `fit`).
    #[arg(long)]
    pub fit: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Parse arguments, run, and return the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests print on stdout and succeed; real
            // usage errors print on stderr and exit 1.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.verbose);
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            warn!("could not configure {n} worker threads: {e}");
        }
    }
    let result = match cli.command {
        Command::Generate(args) => run_generate(args),
        Command::Fit(args) => run_fit(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Select(args) => run_select(args),
        Command::Export(args) => run_export(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_logging(verbose: bool) {
    let default = if verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(
        env_logger::Env::default().default_filter_or(default),
    )
    .format_timestamp(None)
    .try_init();
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Data(format!("cannot create directory {}: {e}", dir.display())))
}

/// Pick a format from an explicit flag or the file extension.
fn resolve_format(path: &Path, explicit: Option<NetFormat>) -> Result<NetFormat> {
    if let Some(f) = explicit {
        return Ok(f);
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("tsv") | Some("txt") | Some("edges") => Ok(NetFormat::EdgeList),
        Some("csv") => Ok(NetFormat::Dense),
        _ => Err(Error::InvalidArgument(format!(
            "cannot infer the format of {} from its extension; pass --format",
            path.display()
        ))),
    }
}

fn network_file_name(format: NetFormat) -> &'static str {
    match format {
        NetFormat::EdgeList => "network.tsv",
        NetFormat::Dense => "network.csv",
    }
}

/// Default model family for a network: dynamic as soon as there is more
/// than one snapshot.
fn default_model(net: &NetSeq) -> ModelKind {
    if net.n_times() > 1 {
        ModelKind::Dynamic
    } else {
        ModelKind::Static
    }
}

/// Build the effective run configuration: data-derived defaults, then the
/// configuration file, then explicit command-line flags.
#[allow(clippy::too_many_arguments)]
fn build_config(
    net: &NetSeq,
    model: Option<ModelKind>,
    roles: Option<usize>,
    config_path: Option<&Path>,
    seed: Option<u64>,
    restarts: Option<usize>,
    tol: Option<f64>,
    max_inner: Option<usize>,
    max_outer: Option<usize>,
    samples: Option<usize>,
) -> Result<RunConfig> {
    let mut cfg = RunConfig {
        model: default_model(net),
        directed: net.directed(),
        ..RunConfig::default()
    };
    if let Some(path) = config_path {
        cfg.apply_key_values(&io::read_file(path)?)?;
    }
    if let Some(m) = model {
        cfg.model = m;
    }
    if let Some(k) = roles {
        cfg.k = k;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = restarts {
        cfg.n_restarts = r;
    }
    if let Some(t) = tol {
        cfg.tol = t;
    }
    if let Some(m) = max_inner {
        cfg.max_inner = m;
    }
    if let Some(m) = max_outer {
        cfg.max_outer = m;
    }
    if let Some(s) = samples {
        cfg.is_samples = s;
    }
    // The network file is authoritative about directedness.
    cfg.directed = net.directed();
    cfg.validate()?;
    Ok(cfg)
}

fn print_kv(key: &str, value: impl std::fmt::Display) {
    println!("{key} = {value}");
}

fn run_generate(args: GenerateArgs) -> Result<()> {
    if args.nodes < 2 {
        return Err(Error::InvalidArgument(format!(
            "--nodes must be at least 2, got {}",
            args.nodes
        )));
    }
    if args.roles == Some(0) {
        return Err(Error::InvalidArgument("--roles must be at least 1".into()));
    }
    if args.times == Some(0) {
        return Err(Error::InvalidArgument("--times must be at least 1".into()));
    }
    let directed = !args.undirected;
    let format = args.format.unwrap_or(NetFormat::EdgeList);
    ensure_dir(&args.out)?;

    let (model, truth, params_file) = match &args.params {
        Some(path) => {
            let pf = ParamsFile::read(path)?;
            let model: ModelKind = pf.model.parse()?;
            if let Some(r) = args.roles {
                if r != pf.k {
                    return Err(Error::InvalidArgument(format!(
                        "--roles {r} disagrees with the parameter file ({})",
                        pf.k
                    )));
                }
            }
            if let Some(m) = args.model {
                if m != model {
                    return Err(Error::InvalidArgument(format!(
                        "--model {m} disagrees with the parameter file ({model})"
                    )));
                }
            }
            match model {
                ModelKind::Static => {
                    if args.times.unwrap_or(1) != 1 {
                        return Err(Error::InvalidArgument(
                            "static generation produces exactly one snapshot".into(),
                        ));
                    }
                    let sp = pf.to_static()?;
                    (model, generate_static(&sp, args.nodes, directed, args.seed)?, pf)
                }
                ModelKind::Dynamic => {
                    let dp = pf.to_dynamic()?;
                    if let Some(t) = args.times {
                        if t != dp.n_times() {
                            return Err(Error::InvalidArgument(format!(
                                "--times {t} disagrees with the parameter file ({})",
                                dp.n_times()
                            )));
                        }
                    }
                    (model, generate_dynamic(&dp, args.nodes, directed, args.seed)?, pf)
                }
            }
        }
        None => {
            let k = args.roles.ok_or_else(|| {
                Error::InvalidArgument("--roles is required without --params".into())
            })?;
            let times = args.times.unwrap_or(1);
            let model = args.model.unwrap_or(if times > 1 {
                ModelKind::Dynamic
            } else {
                ModelKind::Static
            });
            let b = CompatMatrix::diag_dominant(k, args.edge_on, args.edge_off)?;
            let d = k.saturating_sub(1);
            let sigma = embed_active(
                &(DMatrix::identity(d, d) * args.latent_sd * args.latent_sd),
                k,
            );
            match model {
                ModelKind::Static => {
                    if times != 1 {
                        return Err(Error::InvalidArgument(
                            "static generation produces exactly one snapshot; drop --times or pick --model dynamic".into(),
                        ));
                    }
                    let sp = StaticParams::new(DVector::zeros(k), sigma, b)?;
                    let pf = ParamsFile::from_static(&sp, directed);
                    (model, generate_static(&sp, args.nodes, directed, args.seed)?, pf)
                }
                ModelKind::Dynamic => {
                    let phi = embed_active(
                        &(DMatrix::identity(d, d) * args.drift_sd * args.drift_sd),
                        k,
                    );
                    let dp = DynParams::new(
                        DVector::zeros(k),
                        phi,
                        vec![sigma; times],
                        b,
                    )?;
                    let pf = ParamsFile::from_dynamic(&dp, None, directed);
                    (model, generate_dynamic(&dp, args.nodes, directed, args.seed)?, pf)
                }
            }
        }
    };

    let TruthBundle {
        net,
        memberships,
        gammas,
        mu_traj,
    } = truth;
    let net_path = args.out.join(network_file_name(format));
    write_network(&net, &net_path, format)?;

    let truth_path = args.out.join("truth.csv");
    let params_path = args.out.join("params.json");
    let export = TrajectoryExport::from_truth(memberships, gammas, mu_traj, params_file);
    export_trajectories(&export, &truth_path, &params_path)?;

    let cfg = RunConfig {
        model,
        k: export.params.k,
        seed: args.seed,
        directed,
        ..RunConfig::default()
    };
    let config_path = args.out.join("config.txt");
    io::write_file(&config_path, &cfg.to_key_values())?;

    print_kv("model", model);
    print_kv("k", export.params.k);
    print_kv("nodes", net.n_nodes());
    let counts: Vec<String> = (0..net.n_times())
        .map(|t| net.n_edges(t).to_string())
        .collect();
    print_kv("edges", counts.join(" "));
    print_kv("network", net_path.display());
    print_kv("truth", truth_path.display());
    print_kv("params", params_path.display());
    print_kv("config", config_path.display());
    Ok(())
}

/// Ground truth in a model-independent shape.
struct TruthBundle {
    net: NetSeq,
    memberships: Vec<Vec<MembershipVector>>,
    gammas: Vec<Vec<DVector<f64>>>,
    mu_traj: Vec<DVector<f64>>,
}

fn generate_static(
    params: &StaticParams,
    nodes: usize,
    directed: bool,
    seed: u64,
) -> Result<TruthBundle> {
    let dims = Dims::new(nodes, params.k(), 1)?;
    let s = sample_static_network(params, &dims, directed, seed)?;
    Ok(TruthBundle {
        net: s.net,
        memberships: vec![s.memberships],
        gammas: vec![s.gammas.iter().map(|g| g.values().clone()).collect()],
        mu_traj: vec![params.mu().clone()],
    })
}

fn generate_dynamic(
    params: &DynParams,
    nodes: usize,
    directed: bool,
    seed: u64,
) -> Result<TruthBundle> {
    let dims = Dims::new(nodes, params.k(), params.n_times())?;
    let s = sample_dynamic_network(params, &dims, directed, seed)?;
    Ok(TruthBundle {
        net: s.net,
        memberships: s.memberships,
        gammas: s
            .gammas
            .iter()
            .map(|snap| snap.iter().map(|g| g.values().clone()).collect())
            .collect(),
        mu_traj: s.mu_traj,
    })
}

fn run_fit(args: FitArgs) -> Result<()> {
    let format = resolve_format(&args.network, args.format)?;
    let net = read_network(&args.network, format)?;
    let cfg = build_config(
        &net,
        args.model,
        args.roles,
        args.config.as_deref(),
        args.seed,
        args.restarts,
        args.tol,
        args.max_inner,
        args.max_outer,
        None,
    )?;
    ensure_dir(&args.out)?;

    let fit_cfg = cfg.fit_cfg();
    let (state, export) = match cfg.model {
        ModelKind::Static => {
            if net.n_times() != 1 {
                return Err(Error::Data(format!(
                    "the static model needs a single snapshot, got {}; pass --model dynamic",
                    net.n_times()
                )));
            }
            let fit = fit_lnmmsb(&net, cfg.k, &fit_cfg, cfg.seed)?;
            (
                FitStateFile::from_static(&fit, net.directed()),
                TrajectoryExport::from_static(&fit, net.directed()),
            )
        }
        ModelKind::Dynamic => {
            let fit = fit_dmmsb(&net, cfg.k, &fit_cfg, cfg.seed)?;
            (
                FitStateFile::from_dynamic(&fit, net.directed()),
                TrajectoryExport::from_dynamic(&fit, net.directed()),
            )
        }
    };

    let fit_path = args.out.join("fit.json");
    state.write(&fit_path)?;
    let traj_path = args.out.join("trajectories.csv");
    let params_path = args.out.join("params.json");
    export_trajectories(&export, &traj_path, &params_path)?;
    let config_path = args.out.join("config.txt");
    io::write_file(&config_path, &cfg.to_key_values())?;

    print_kv("model", cfg.model);
    print_kv("k", cfg.k);
    print_kv("converged", state.report.converged);
    print_kv("n_outer", state.report.n_outer);
    print_kv("n_inner", state.report.n_inner);
    print_kv("restart", state.report.restart);
    if let Some(obj) = state.report.objective_trace.last() {
        print_kv("objective", format!("{obj:.6}"));
    }
    print_kv("fit", fit_path.display());
    print_kv("trajectories", traj_path.display());
    print_kv("params", params_path.display());
    print_kv("config", config_path.display());
    Ok(())
}

fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let format = resolve_format(&args.network, args.format)?;
    let net = read_network(&args.network, format)?;
    let state = FitStateFile::read(&args.fit)?;
    let model: ModelKind = state.model.parse()?;
    if state.n_times != net.n_times() {
        return Err(Error::Data(format!(
            "fit state covers {} snapshots but the network has {}",
            state.n_times,
            net.n_times()
        )));
    }
    if state.directed != net.directed() {
        return Err(Error::Data(
            "fit state and network disagree on directedness".into(),
        ));
    }
    let samples = args.samples.unwrap_or(RunConfig::default().is_samples);
    let seed = args.seed.unwrap_or(0);
    let dims = Dims::new(net.n_nodes(), state.k, net.n_times())?;

    let (loglik, se) = match model {
        ModelKind::Static => {
            let params = state.params.to_static()?;
            let posts = state.posteriors_at(0)?;
            loglik_importance(&net, &params, &posts, samples, seed)?
        }
        ModelKind::Dynamic => {
            let dyn_params = state.params.to_dynamic()?;
            let mu_traj = state.params.mu_traj.as_ref().ok_or_else(|| {
                Error::Data("fit state lacks a prior-mean trajectory".into())
            })?;
            let mut ll = 0.0;
            let mut var = 0.0;
            for t in 0..net.n_times() {
                let slice = net.time_slice(t)?;
                let params = StaticParams::new(
                    DVector::from_vec(mu_traj[t].clone()),
                    dyn_params.sigma(t).clone(),
                    dyn_params.b().clone(),
                )?;
                let posts = state.posteriors_at(t)?;
                let (ll_t, se_t) =
                    loglik_importance(&slice, &params, &posts, samples, seed.wrapping_add(t as u64))?;
                ll += ll_t;
                var += se_t * se_t;
            }
            (ll, var.sqrt())
        }
    };
    let score = bic_score(loglik, se, &dims, model, net.directed());

    print_kv("model", model);
    print_kv("k", state.k);
    print_kv("n_params", score.n_params);
    print_kv("loglik", format!("{loglik:.6}"));
    print_kv("loglik_se", format!("{se:.6}"));
    print_kv("bic", format!("{:.6}", score.bic));

    if let Some(truth_path) = &args.truth {
        let truth = read_trajectories(truth_path)?;
        if truth.memberships.len() != state.n_times {
            return Err(Error::Data(format!(
                "ground truth covers {} snapshots but the fit has {}",
                truth.memberships.len(),
                state.n_times
            )));
        }
        let mut truth_flat = Vec::new();
        let mut est_flat = Vec::new();
        for t in 0..state.n_times {
            if truth.memberships[t].len() != net.n_nodes() {
                return Err(Error::Data(format!(
                    "ground truth snapshot {} covers {} nodes but the network has {}",
                    t + 1,
                    truth.memberships[t].len(),
                    net.n_nodes()
                )));
            }
            truth_flat.extend(truth.memberships[t].iter().cloned());
            est_flat.extend(state.posteriors_at(t)?.iter().map(|p| p.mean_membership()));
        }
        let alignment = align_roles(&truth_flat, &est_flat)?;
        let aligned: Vec<MembershipVector> =
            est_flat.iter().map(|m| alignment.apply(m)).collect();
        let err_l1 = membership_error(&truth_flat, &aligned, Norm::L1)?;
        let err_l2 = membership_error(&truth_flat, &aligned, Norm::L2)?;
        let perm: Vec<String> = alignment.perm().iter().map(|p| p.to_string()).collect();
        print_kv("alignment", perm.join(" "));
        print_kv("membership_error_l1", format!("{err_l1:.6}"));
        print_kv("membership_error_l2", format!("{err_l2:.6}"));
    }
    Ok(())
}

fn run_select(args: SelectArgs) -> Result<()> {
    let format = resolve_format(&args.network, args.format)?;
    let net = read_network(&args.network, format)?;
    let mut cfg = build_config(
        &net,
        args.model,
        None,
        args.config.as_deref(),
        args.seed,
        args.restarts,
        args.tol,
        args.max_inner,
        args.max_outer,
        args.samples,
    )?;
    match (args.k_min, args.k_max) {
        (Some(lo), Some(hi)) => cfg.k_range = Some((lo, hi)),
        (None, None) => {}
        _ => {
            return Err(Error::InvalidArgument(
                "--k-min and --k-max must be given together".into(),
            ))
        }
    }
    let (lo, hi) = cfg.k_range.ok_or_else(|| {
        Error::InvalidArgument(
            "pass --k-min/--k-max (or k_range in --config) to select a role count".into(),
        )
    })?;
    cfg.validate()?;
    let ks: Vec<usize> = (lo..=hi).collect();
    let (best, scores) = select_roles(&net, &ks, &cfg, cfg.seed)?;

    println!(
        "{:>3}  {:>14}  {:>10}  {:>8}  {:>14}",
        "k", "loglik", "loglik_se", "n_params", "bic"
    );
    for s in &scores {
        println!(
            "{:>3}  {:>14.4}  {:>10.4}  {:>8}  {:>14.4}",
            s.k, s.loglik, s.loglik_se, s.n_params, s.bic
        );
    }
    print_kv("best_k", best);

    if let Some(out) = &args.out {
        ensure_dir(out)?;
        let mut csv = String::from("k,loglik,loglik_se,n_params,bic\n");
        for s in &scores {
            csv.push_str(&format!(
                "{},{:.17e},{:.17e},{},{:.17e}\n",
                s.k, s.loglik, s.loglik_se, s.n_params, s.bic
            ));
        }
        let table_path = out.join("selection.csv");
        io::write_file(&table_path, &csv)?;
        let config_path = out.join("config.txt");
        io::write_file(&config_path, &cfg.to_key_values())?;
        print_kv("selection", table_path.display());
        print_kv("config", config_path.display());
    }
    Ok(())
}

fn run_export(args: ExportArgs) -> Result<()> {
    let state = FitStateFile::read(&args.fit)?;
    let export = TrajectoryExport::from_fit_state(&state)?;
    ensure_dir(&args.out)?;
    let traj_path = args.out.join("trajectories.csv");
    let params_path = args.out.join("params.json");
    export_trajectories(&export, &traj_path, &params_path)?;
    print_kv("model", &state.model);
    print_kv("k", state.k);
    print_kv("trajectories", traj_path.display());
    print_kv("params", params_path.display());
    Ok(())
}
