//! File formats: network sequences (edge list or dense adjacency),
//! parameter bundles and fitted state (JSON), and per-node membership
//! trajectory tables (CSV).
//!
//! Network files open with a header comment
//! `# nodes=<N> times=<T> directed=<0|1>`.  Edge lists then carry one
//! `t<TAB>i<TAB>j` row per edge (snapshot index 1-based, node indices
//! 0-based); dense files carry `T` blocks of `N` comma-separated 0/1
//! rows.  Trajectory tables are CSV with one row per
//! (snapshot, node, role) carrying the membership probability and the
//! membership parameter at full precision, so a written table re-imports
//! to the same values.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamic_infer::DmmsbFit;
use crate::error::Error;
use crate::static_infer::{FitReport, MembershipPosterior, StaticFit};
use crate::types::{CompatMatrix, DynParams, MembershipVector, NetSeq, StaticParams};
use crate::Result;

/// On-disk network representations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetFormat {
    /// Sparse rows `t<TAB>i<TAB>j`, one per edge.
    EdgeList,
    /// Dense 0/1 adjacency blocks, one row per node per snapshot.
    Dense,
}

impl std::str::FromStr for NetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "edgelist" => Ok(NetFormat::EdgeList),
            "dense" => Ok(NetFormat::Dense),
            other => Err(Error::InvalidArgument(format!(
                "unknown network format '{other}' (expected 'edgelist' or 'dense')"
            ))),
        }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))
}

pub(crate) fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content)
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))
}

/// Parse the `# nodes=<N> times=<T> directed=<0|1>` header line.
fn parse_header(line: &str, path: &Path, lineno: usize) -> Result<(usize, usize, bool)> {
    let body = line.trim_start_matches('#').trim();
    let mut nodes = None;
    let mut times = None;
    let mut directed = None;
    for token in body.split_whitespace() {
        let Some((key, value)) = token.split_once('=') else {
            return Err(Error::Data(format!(
                "{} line {lineno}: malformed header token '{token}'",
                path.display()
            )));
        };
        let parse_usize = |what: &str| {
            value.parse::<usize>().map_err(|_| {
                Error::Data(format!(
                    "{} line {lineno}: invalid {what} value '{value}'",
                    path.display()
                ))
            })
        };
        match key {
            "nodes" => nodes = Some(parse_usize("nodes")?),
            "times" => times = Some(parse_usize("times")?),
            "directed" => {
                directed = Some(match value {
                    "0" => false,
                    "1" => true,
                    _ => {
                        return Err(Error::Data(format!(
                            "{} line {lineno}: directed must be 0 or 1, got '{value}'",
                            path.display()
                        )))
                    }
                })
            }
            other => {
                return Err(Error::Data(format!(
                    "{} line {lineno}: unknown header key '{other}'",
                    path.display()
                )))
            }
        }
    }
    match (nodes, times, directed) {
        (Some(n), Some(t), Some(d)) => Ok((n, t, d)),
        _ => Err(Error::Data(format!(
            "{} line {lineno}: header must declare nodes, times and directed",
            path.display()
        ))),
    }
}

fn header_line(net: &NetSeq) -> String {
    format!(
        "# nodes={} times={} directed={}\n",
        net.n_nodes(),
        net.n_times(),
        if net.directed() { 1 } else { 0 }
    )
}

fn read_edgelist(path: &Path, text: &str) -> Result<NetSeq> {
    let mut lines = text.lines().enumerate();
    let (header_no, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| Error::Data(format!("{}: empty network file", path.display())))?;
    if !header.trim_start().starts_with('#') {
        return Err(Error::Data(format!(
            "{} line {}: expected a '# nodes=... times=... directed=...' header",
            path.display(),
            header_no + 1
        )));
    }
    let (n, t_len, directed) = parse_header(header, path, header_no + 1)?;
    let mut net = NetSeq::empty(n, t_len, directed)?;
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Data(format!(
                "{} line {lineno}: expected 't i j', got '{line}'",
                path.display()
            )));
        }
        let parse = |s: &str, what: &str| {
            s.parse::<usize>().map_err(|_| {
                Error::Data(format!(
                    "{} line {lineno}: invalid {what} '{s}'",
                    path.display()
                ))
            })
        };
        let t = parse(fields[0], "snapshot index")?;
        let i = parse(fields[1], "node index")?;
        let j = parse(fields[2], "node index")?;
        if t == 0 || t > t_len {
            return Err(Error::Data(format!(
                "{} line {lineno}: snapshot index {t} outside 1..={t_len}",
                path.display()
            )));
        }
        net.set_edge(t - 1, i, j, true).map_err(|e| {
            Error::Data(format!("{} line {lineno}: {e}", path.display()))
        })?;
    }
    Ok(net)
}

fn write_edgelist(net: &NetSeq) -> String {
    let mut out = header_line(net);
    let pairs = net.pairs();
    for t in 0..net.n_times() {
        for &(i, j) in &pairs {
            if net.edge(t, i, j) {
                let _ = writeln!(out, "{}\t{}\t{}", t + 1, i, j);
            }
        }
    }
    out
}

fn read_dense(path: &Path, text: &str) -> Result<NetSeq> {
    let mut rows: Vec<(usize, Vec<bool>)> = Vec::new();
    let mut header: Option<(usize, usize, bool)> = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            if header.is_none() {
                header = Some(parse_header(trimmed, path, lineno)?);
            }
            continue;
        }
        let mut row = Vec::new();
        for cell in trimmed.split(',') {
            match cell.trim() {
                "0" => row.push(false),
                "1" => row.push(true),
                other => {
                    return Err(Error::Data(format!(
                        "{} line {lineno}: adjacency entries must be 0 or 1, got '{other}'",
                        path.display()
                    )))
                }
            }
        }
        rows.push((lineno, row));
    }
    let (n, t_len, directed) = header.ok_or_else(|| {
        Error::Data(format!(
            "{}: missing '# nodes=... times=... directed=...' header",
            path.display()
        ))
    })?;
    if rows.len() != n * t_len {
        return Err(Error::Data(format!(
            "{}: expected {} adjacency rows ({} nodes x {} snapshots), found {}",
            path.display(),
            n * t_len,
            n,
            t_len,
            rows.len()
        )));
    }
    let mut net = NetSeq::empty(n, t_len, directed)?;
    for (t, block) in rows.chunks(n).enumerate() {
        for (i, (lineno, row)) in block.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Data(format!(
                    "{} line {lineno}: expected {n} entries, got {}",
                    path.display(),
                    row.len()
                )));
            }
            for (j, &present) in row.iter().enumerate() {
                if i == j {
                    if present {
                        return Err(Error::Data(format!(
                            "{} line {lineno}: nonzero diagonal entry",
                            path.display()
                        )));
                    }
                    continue;
                }
                if !directed && j < i {
                    // Lower triangle: must mirror what the upper half set.
                    if net.edge(t, i, j) != present {
                        return Err(Error::Data(format!(
                            "{} line {lineno}: undirected adjacency is not symmetric at ({i}, {j})",
                            path.display()
                        )));
                    }
                    continue;
                }
                if present {
                    net.set_edge(t, i, j, true)?;
                }
            }
        }
    }
    Ok(net)
}

fn write_dense(net: &NetSeq) -> String {
    let mut out = header_line(net);
    for t in 0..net.n_times() {
        let _ = writeln!(out, "# t={}", t + 1);
        for i in 0..net.n_nodes() {
            let row: Vec<&str> = (0..net.n_nodes())
                .map(|j| if i != j && net.edge(t, i, j) { "1" } else { "0" })
                .collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        if t + 1 < net.n_times() {
            out.push('\n');
        }
    }
    out
}

/// Read a network sequence from `path` in the given format.
pub fn read_network(path: impl AsRef<Path>, format: NetFormat) -> Result<NetSeq> {
    let path = path.as_ref();
    let text = read_file(path)?;
    match format {
        NetFormat::EdgeList => read_edgelist(path, &text),
        NetFormat::Dense => read_dense(path, &text),
    }
}

/// Write a network sequence to `path` in the given format.
pub fn write_network(net: &NetSeq, path: impl AsRef<Path>, format: NetFormat) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        NetFormat::EdgeList => write_edgelist(net),
        NetFormat::Dense => write_dense(net),
    };
    write_file(path, &text)
}

fn mat_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn rows_mat(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Data(format!("{what}: empty matrix")));
    }
    let c = rows[0].len();
    if rows.iter().any(|r| r.len() != c) {
        return Err(Error::Data(format!("{what}: ragged matrix rows")));
    }
    Ok(DMatrix::from_fn(n, c, |i, j| rows[i][j]))
}

/// JSON-facing parameter bundle covering both model families.  Static
/// parameters fill `mu`/`sigma`; dynamic ones fill `nu`/`phi`/`sigmas`
/// (and optionally a fitted prior-mean trajectory).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ParamsFile {
    pub model: String,
    pub k: usize,
    pub directed: bool,
    pub b: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_traj: Option<Vec<Vec<f64>>>,
}

impl ParamsFile {
    pub fn from_static(p: &StaticParams, directed: bool) -> Self {
        ParamsFile {
            model: "static".into(),
            k: p.k(),
            directed,
            b: mat_rows(p.b().as_matrix()),
            mu: Some(p.mu().iter().copied().collect()),
            sigma: Some(mat_rows(p.sigma())),
            nu: None,
            phi: None,
            sigmas: None,
            a: None,
            mu_traj: None,
        }
    }

    pub fn from_dynamic(
        p: &DynParams,
        mu_traj: Option<&[DVector<f64>]>,
        directed: bool,
    ) -> Self {
        ParamsFile {
            model: "dynamic".into(),
            k: p.k(),
            directed,
            b: mat_rows(p.b().as_matrix()),
            mu: None,
            sigma: None,
            nu: Some(p.nu().iter().copied().collect()),
            phi: Some(mat_rows(p.phi())),
            sigmas: Some(p.sigmas().iter().map(mat_rows).collect()),
            a: Some(mat_rows(p.a())),
            mu_traj: mu_traj.map(|ms| {
                ms.iter().map(|v| v.iter().copied().collect()).collect()
            }),
        }
    }

    pub fn to_static(&self) -> Result<StaticParams> {
        let mu = self
            .mu
            .as_ref()
            .ok_or_else(|| Error::Data("static parameters need 'mu'".into()))?;
        let sigma = self
            .sigma
            .as_ref()
            .ok_or_else(|| Error::Data("static parameters need 'sigma'".into()))?;
        StaticParams::new(
            DVector::from_vec(mu.clone()),
            rows_mat(sigma, "sigma")?,
            CompatMatrix::new(rows_mat(&self.b, "b")?)?,
        )
    }

    pub fn to_dynamic(&self) -> Result<DynParams> {
        let nu = self
            .nu
            .as_ref()
            .ok_or_else(|| Error::Data("dynamic parameters need 'nu'".into()))?;
        let phi = self
            .phi
            .as_ref()
            .ok_or_else(|| Error::Data("dynamic parameters need 'phi'".into()))?;
        let sigmas = self
            .sigmas
            .as_ref()
            .ok_or_else(|| Error::Data("dynamic parameters need 'sigmas'".into()))?;
        let sigmas = sigmas
            .iter()
            .map(|s| rows_mat(s, "sigmas"))
            .collect::<Result<Vec<_>>>()?;
        let b = CompatMatrix::new(rows_mat(&self.b, "b")?)?;
        let nu = DVector::from_vec(nu.clone());
        match &self.a {
            Some(a) => {
                DynParams::with_transition(nu, rows_mat(phi, "phi")?, sigmas, b, rows_mat(a, "a")?)
            }
            None => DynParams::new(nu, rows_mat(phi, "phi")?, sigmas, b),
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Data(format!("cannot serialize parameters: {e}")))?;
        write_file(path.as_ref(), &json)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = read_file(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PosteriorJson {
    pub gamma_tilde: Vec<f64>,
    pub sigma_tilde: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportJson {
    pub converged: bool,
    pub n_outer: usize,
    pub n_inner: usize,
    pub restart: usize,
    pub objective_trace: Vec<f64>,
}

impl From<&FitReport> for ReportJson {
    fn from(r: &FitReport) -> Self {
        ReportJson {
            converged: r.converged,
            n_outer: r.n_outer,
            n_inner: r.n_inner,
            restart: r.restart,
            objective_trace: r.objective_trace.clone(),
        }
    }
}

/// Serialized fitted state: parameters plus every membership posterior,
/// enough to evaluate or export without refitting.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FitStateFile {
    pub model: String,
    pub k: usize,
    pub directed: bool,
    pub n_times: usize,
    pub params: ParamsFile,
    /// Posteriors per snapshot, then per node.
    pub posteriors: Vec<Vec<PosteriorJson>>,
    pub report: ReportJson,
}

fn posterior_json(p: &MembershipPosterior) -> PosteriorJson {
    PosteriorJson {
        gamma_tilde: p.gamma_tilde().iter().copied().collect(),
        sigma_tilde: mat_rows(p.sigma_tilde()),
    }
}

impl FitStateFile {
    pub fn from_static(fit: &StaticFit, directed: bool) -> Self {
        FitStateFile {
            model: "static".into(),
            k: fit.params.k(),
            directed,
            n_times: 1,
            params: ParamsFile::from_static(&fit.params, directed),
            posteriors: vec![fit.posteriors.iter().map(posterior_json).collect()],
            report: (&fit.report).into(),
        }
    }

    pub fn from_dynamic(fit: &DmmsbFit, directed: bool) -> Self {
        FitStateFile {
            model: "dynamic".into(),
            k: fit.params.k(),
            directed,
            n_times: fit.params.n_times(),
            params: ParamsFile::from_dynamic(&fit.params, Some(&fit.mu_traj), directed),
            posteriors: fit
                .posteriors
                .iter()
                .map(|snap| snap.iter().map(posterior_json).collect())
                .collect(),
            report: (&fit.report).into(),
        }
    }

    /// Rebuild the membership posteriors of snapshot `t`.
    pub fn posteriors_at(&self, t: usize) -> Result<Vec<MembershipPosterior>> {
        let snap = self.posteriors.get(t).ok_or_else(|| {
            Error::Data(format!(
                "fit state has {} snapshots, requested {t}",
                self.posteriors.len()
            ))
        })?;
        snap.iter()
            .map(|p| {
                MembershipPosterior::new(
                    DVector::from_vec(p.gamma_tilde.clone()),
                    rows_mat(&p.sigma_tilde, "sigma_tilde")?,
                )
            })
            .collect()
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Data(format!("cannot serialize fit state: {e}")))?;
        write_file(path.as_ref(), &json)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = read_file(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    }
}

/// Everything the trajectory export writes: per-snapshot, per-node
/// memberships (probabilities, parameters, dominant role), the
/// prior-mean trajectory and the parameter bundle.
#[derive(Debug, Clone)]
pub struct TrajectoryExport {
    /// Memberships per snapshot, then per node.
    pub memberships: Vec<Vec<MembershipVector>>,
    /// Membership parameters per snapshot, then per node.
    pub gammas: Vec<Vec<DVector<f64>>>,
    /// Dominant role per snapshot, then per node.
    pub dominant: Vec<Vec<usize>>,
    /// Prior mean per snapshot.
    pub mu_traj: Vec<DVector<f64>>,
    pub params: ParamsFile,
}

impl TrajectoryExport {
    pub fn from_static(fit: &StaticFit, directed: bool) -> Self {
        let memberships: Vec<MembershipVector> = fit
            .posteriors
            .iter()
            .map(|p| p.mean_membership())
            .collect();
        let dominant = memberships.iter().map(|m| m.dominant_role()).collect();
        TrajectoryExport {
            gammas: vec![fit.posteriors.iter().map(|p| p.gamma_tilde().clone()).collect()],
            memberships: vec![memberships],
            dominant: vec![dominant],
            mu_traj: vec![fit.params.mu().clone()],
            params: ParamsFile::from_static(&fit.params, directed),
        }
    }

    pub fn from_dynamic(fit: &DmmsbFit, directed: bool) -> Self {
        let memberships: Vec<Vec<MembershipVector>> = fit
            .posteriors
            .iter()
            .map(|snap| snap.iter().map(|p| p.mean_membership()).collect())
            .collect();
        let dominant = memberships
            .iter()
            .map(|snap: &Vec<MembershipVector>| {
                snap.iter().map(|m| m.dominant_role()).collect()
            })
            .collect();
        TrajectoryExport {
            gammas: fit
                .posteriors
                .iter()
                .map(|snap| snap.iter().map(|p| p.gamma_tilde().clone()).collect())
                .collect(),
            memberships,
            dominant,
            mu_traj: fit.mu_traj.clone(),
            params: ParamsFile::from_dynamic(&fit.params, Some(&fit.mu_traj), directed),
        }
    }

    /// Build directly from ground-truth draws (used when exporting the
    /// latent state of a simulation).
    pub fn from_truth(
        memberships: Vec<Vec<MembershipVector>>,
        gammas: Vec<Vec<DVector<f64>>>,
        mu_traj: Vec<DVector<f64>>,
        params: ParamsFile,
    ) -> Self {
        let dominant = memberships
            .iter()
            .map(|snap| snap.iter().map(|m| m.dominant_role()).collect())
            .collect();
        TrajectoryExport {
            memberships,
            gammas,
            dominant,
            mu_traj,
            params,
        }
    }

    /// Rebuild an export from saved fitted state, without refitting.
    pub fn from_fit_state(state: &FitStateFile) -> Result<Self> {
        let k = state.k;
        let mut memberships = Vec::with_capacity(state.n_times);
        let mut gammas = Vec::with_capacity(state.n_times);
        for t in 0..state.posteriors.len() {
            let posts = state.posteriors_at(t)?;
            memberships.push(posts.iter().map(|p| p.mean_membership()).collect::<Vec<_>>());
            gammas.push(posts.iter().map(|p| p.gamma_tilde().clone()).collect::<Vec<_>>());
        }
        let mu_rows: Vec<Vec<f64>> = match (&state.params.mu_traj, &state.params.mu) {
            (Some(traj), _) => traj.clone(),
            (None, Some(mu)) => vec![mu.clone(); state.n_times],
            (None, None) => {
                return Err(Error::Data(
                    "fit state lacks both a prior mean and a prior-mean trajectory".into(),
                ))
            }
        };
        if mu_rows.len() != state.n_times || mu_rows.iter().any(|r| r.len() != k) {
            return Err(Error::Data(
                "fit state prior-mean trajectory has the wrong shape".into(),
            ));
        }
        let mu_traj = mu_rows
            .into_iter()
            .map(DVector::from_vec)
            .collect::<Vec<_>>();
        let dominant = memberships
            .iter()
            .map(|snap: &Vec<MembershipVector>| {
                snap.iter().map(|m| m.dominant_role()).collect()
            })
            .collect();
        Ok(TrajectoryExport {
            memberships,
            gammas,
            dominant,
            mu_traj,
            params: state.params.clone(),
        })
    }

    fn csv(&self) -> String {
        let mut out = String::from("t,node,role,pi,gamma,dominant\n");
        for (t, (snap_pi, snap_g)) in self.memberships.iter().zip(&self.gammas).enumerate() {
            for (i, (pi, g)) in snap_pi.iter().zip(snap_g).enumerate() {
                let dom = self.dominant[t][i];
                for r in 0..pi.k() {
                    let _ = writeln!(
                        out,
                        "{},{},{},{:.17e},{:.17e},{}",
                        t + 1,
                        i,
                        r,
                        pi.pi()[r],
                        g[r],
                        u8::from(r == dom)
                    );
                }
            }
        }
        out
    }
}

/// Write a trajectory export: the CSV table to `csv_path` and the
/// parameter bundle (including the prior-mean trajectory) to
/// `params_path`.
pub fn export_trajectories(
    export: &TrajectoryExport,
    csv_path: impl AsRef<Path>,
    params_path: impl AsRef<Path>,
) -> Result<()> {
    let mut params = export.params.clone();
    params.mu_traj = Some(
        export
            .mu_traj
            .iter()
            .map(|v| v.iter().copied().collect())
            .collect(),
    );
    write_file(csv_path.as_ref(), &export.csv())?;
    params.write(params_path)
}

/// Trajectory table re-imported from CSV.
#[derive(Debug, Clone)]
pub struct RawTrajectories {
    pub memberships: Vec<Vec<MembershipVector>>,
    pub gammas: Vec<Vec<DVector<f64>>>,
    pub dominant: Vec<Vec<usize>>,
}

/// Read back a trajectory CSV written by [`export_trajectories`].
pub fn read_trajectories(path: impl AsRef<Path>) -> Result<RawTrajectories> {
    let path = path.as_ref();
    let text = read_file(path)?;
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(Error::Data(format!("{}: empty trajectory file", path.display())));
    };
    if header.trim() != "t,node,role,pi,gamma,dominant" {
        return Err(Error::Data(format!(
            "{}: unexpected header '{}'",
            path.display(),
            header.trim()
        )));
    }
    struct Cell {
        pi: f64,
        gamma: f64,
        dominant: bool,
    }
    let mut cells: Vec<(usize, usize, usize, Cell)> = Vec::new();
    let (mut max_t, mut max_node, mut max_role) = (0usize, 0usize, 0usize);
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Data(format!(
                "{} line {lineno}: expected 6 fields, got {}",
                path.display(),
                fields.len()
            )));
        }
        let bad = |what: &str, s: &str| {
            Error::Data(format!(
                "{} line {lineno}: invalid {what} '{s}'",
                path.display()
            ))
        };
        let t: usize = fields[0].parse().map_err(|_| bad("snapshot index", fields[0]))?;
        let node: usize = fields[1].parse().map_err(|_| bad("node index", fields[1]))?;
        let role: usize = fields[2].parse().map_err(|_| bad("role index", fields[2]))?;
        let pi: f64 = fields[3].parse().map_err(|_| bad("probability", fields[3]))?;
        let gamma: f64 = fields[4].parse().map_err(|_| bad("parameter", fields[4]))?;
        let dominant = match fields[5] {
            "0" => false,
            "1" => true,
            s => return Err(bad("dominant flag", s)),
        };
        if t == 0 {
            return Err(bad("snapshot index", fields[0]));
        }
        max_t = max_t.max(t);
        max_node = max_node.max(node);
        max_role = max_role.max(role);
        cells.push((t - 1, node, role, Cell { pi, gamma, dominant }));
    }
    let (t_len, n, k) = (max_t, max_node + 1, max_role + 1);
    if cells.len() != t_len * n * k {
        return Err(Error::Data(format!(
            "{}: expected {} rows for {} snapshots x {} nodes x {} roles, found {}",
            path.display(),
            t_len * n * k,
            t_len,
            n,
            k,
            cells.len()
        )));
    }
    let mut pi = vec![vec![vec![f64::NAN; k]; n]; t_len];
    let mut gamma = vec![vec![vec![f64::NAN; k]; n]; t_len];
    let mut dominant = vec![vec![usize::MAX; n]; t_len];
    for (t, node, role, cell) in cells {
        pi[t][node][role] = cell.pi;
        gamma[t][node][role] = cell.gamma;
        if cell.dominant {
            dominant[t][node] = role;
        }
    }
    let mut memberships = Vec::with_capacity(t_len);
    let mut gammas = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let mut ms = Vec::with_capacity(n);
        let mut gs = Vec::with_capacity(n);
        for node in 0..n {
            if pi[t][node].iter().any(|v| v.is_nan()) || dominant[t][node] == usize::MAX {
                return Err(Error::Data(format!(
                    "{}: incomplete rows for snapshot {} node {node}",
                    path.display(),
                    t + 1
                )));
            }
            ms.push(MembershipVector::new(DVector::from_vec(pi[t][node].clone()))?);
            gs.push(DVector::from_vec(gamma[t][node].clone()));
        }
        memberships.push(ms);
        gammas.push(gs);
    }
    Ok(RawTrajectories {
        memberships,
        gammas,
        dominant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::embed_active;
    use approx::assert_abs_diff_eq;
    use tempfile::tempdir;

    fn sample_net(directed: bool) -> NetSeq {
        let mut net = NetSeq::empty(4, 2, directed).unwrap();
        net.set_edge(0, 0, 1, true).unwrap();
        net.set_edge(0, 2, 3, true).unwrap();
        net.set_edge(1, 1, 0, true).unwrap();
        net.set_edge(1, 3, 0, true).unwrap();
        net
    }

    #[test]
    fn edgelist_round_trip() {
        let dir = tempdir().unwrap();
        for directed in [true, false] {
            let net = sample_net(directed);
            let path = dir.path().join(format!("net_{directed}.tsv"));
            write_network(&net, &path, NetFormat::EdgeList).unwrap();
            let back = read_network(&path, NetFormat::EdgeList).unwrap();
            assert_eq!(net, back);
        }
    }

    #[test]
    fn dense_round_trip() {
        let dir = tempdir().unwrap();
        for directed in [true, false] {
            let net = sample_net(directed);
            let path = dir.path().join(format!("net_{directed}.csv"));
            write_network(&net, &path, NetFormat::Dense).unwrap();
            let back = read_network(&path, NetFormat::Dense).unwrap();
            assert_eq!(net, back);
        }
    }

    #[test]
    fn malformed_inputs_report_line_numbers() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.tsv");
        std::fs::write(&path, "# nodes=3 times=1 directed=1\n1\t0\t5\n").unwrap();
        let err = read_network(&path, NetFormat::EdgeList).unwrap_err();
        assert!(err.to_string().contains("line 2"), "got: {err}");

        std::fs::write(&path, "# nodes=3 times=1 directed=1\n2\t0\t1\n").unwrap();
        let err = read_network(&path, NetFormat::EdgeList).unwrap_err();
        assert!(err.to_string().contains("snapshot index 2"), "got: {err}");

        std::fs::write(&path, "1\t0\t1\n").unwrap();
        let err = read_network(&path, NetFormat::EdgeList).unwrap_err();
        assert!(err.to_string().contains("header"), "got: {err}");

        // Asymmetric undirected dense input.
        let path = dir.path().join("bad.csv");
        std::fs::write(
            &path,
            "# nodes=2 times=1 directed=0\n0,1\n0,0\n",
        )
        .unwrap();
        let err = read_network(&path, NetFormat::Dense).unwrap_err();
        assert!(err.to_string().contains("not symmetric"), "got: {err}");
    }

    #[test]
    fn params_json_round_trip() {
        let dir = tempdir().unwrap();
        let k = 3;
        let b = CompatMatrix::diag_dominant(k, 0.8, 0.1).unwrap();
        let sigma = embed_active(&DMatrix::identity(2, 2), k);
        let st = StaticParams::new(
            DVector::from_vec(vec![0.5, -0.5, 0.0]),
            sigma.clone(),
            b.clone(),
        )
        .unwrap();
        let path = dir.path().join("static.json");
        ParamsFile::from_static(&st, true).write(&path).unwrap();
        let back = ParamsFile::read(&path).unwrap().to_static().unwrap();
        assert_eq!(&st, &back);

        let dy = DynParams::new(
            DVector::zeros(k),
            embed_active(&(DMatrix::identity(2, 2) * 0.2), k),
            vec![sigma; 3],
            b,
        )
        .unwrap();
        let path = dir.path().join("dynamic.json");
        ParamsFile::from_dynamic(&dy, None, false).write(&path).unwrap();
        let file = ParamsFile::read(&path).unwrap();
        assert!(!file.directed);
        let back = file.to_dynamic().unwrap();
        assert_eq!(&dy, &back);
    }

    #[test]
    fn fit_state_round_trip() {
        let dir = tempdir().unwrap();
        let k = 2;
        let sigma = embed_active(&DMatrix::identity(1, 1), k);
        let params = StaticParams::new(
            DVector::zeros(k),
            sigma.clone(),
            CompatMatrix::diag_dominant(k, 0.7, 0.2).unwrap(),
        )
        .unwrap();
        let posteriors = vec![
            MembershipPosterior::new(DVector::from_vec(vec![0.3, 0.0]), sigma.clone()).unwrap(),
            MembershipPosterior::new(DVector::from_vec(vec![-0.4, 0.0]), sigma).unwrap(),
        ];
        let fit = StaticFit {
            params,
            posteriors,
            deltas: vec![],
            report: FitReport {
                converged: true,
                n_outer: 3,
                n_inner: 17,
                objective_trace: vec![-10.0, -8.0, -7.9],
                restart: 1,
            },
        };
        let path = dir.path().join("fit.json");
        let state = FitStateFile::from_static(&fit, true);
        state.write(&path).unwrap();
        let back = FitStateFile::read(&path).unwrap();
        assert_eq!(state, back);
        let ps = back.posteriors_at(0).unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[0].gamma_tilde()[0], 0.3);
        assert!(back.posteriors_at(1).is_err());
    }

    #[test]
    fn trajectory_round_trip_preserves_values() {
        let dir = tempdir().unwrap();
        let k = 3;
        let gammas = vec![vec![
            DVector::from_vec(vec![1.25, -0.75, 0.0]),
            DVector::from_vec(vec![-2.0, 0.5, 0.0]),
        ]];
        let memberships: Vec<Vec<MembershipVector>> = vec![gammas[0]
            .iter()
            .map(|g| {
                MembershipVector::new(crate::logistic::softmax(g)).unwrap()
            })
            .collect()];
        let params = ParamsFile {
            model: "static".into(),
            k,
            directed: true,
            b: vec![vec![0.5; k]; k],
            mu: Some(vec![0.0; k]),
            sigma: Some(vec![vec![0.0; k]; k]),
            nu: None,
            phi: None,
            sigmas: None,
            a: None,
            mu_traj: None,
        };
        let export = TrajectoryExport::from_truth(
            memberships.clone(),
            gammas.clone(),
            vec![DVector::zeros(k)],
            params,
        );
        let csv = dir.path().join("traj.csv");
        let pjson = dir.path().join("params.json");
        export_trajectories(&export, &csv, &pjson).unwrap();
        let back = read_trajectories(&csv).unwrap();
        assert_eq!(back.memberships.len(), 1);
        for i in 0..2 {
            for r in 0..k {
                // 17 fractional digits in the export make the text form
                // lossless; the membership constructor renormalizes the
                // parsed simplex, which can move entries by an ulp.
                assert_abs_diff_eq!(
                    back.memberships[0][i].pi()[r],
                    memberships[0][i].pi()[r],
                    epsilon = 1e-15
                );
                assert_eq!(back.gammas[0][i][r], gammas[0][i][r]);
            }
            assert_eq!(back.dominant[0][i], memberships[0][i].dominant_role());
        }
        let pback = ParamsFile::read(&pjson).unwrap();
        assert!(pback.mu_traj.is_some());
    }
}
