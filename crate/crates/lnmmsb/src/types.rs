//! Core data containers: problem dimensions, network sequences, membership
//! parameterizations and model parameter bundles.
//!
//! Constructors validate their invariants and return [`Error::Data`] on
//! violation, so downstream numerical code can assume well-formed inputs.

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::linalg::{active_dim, min_eig_active, symmetrize, ActiveChol};
use crate::Result;

/// Tolerance for "this trailing row/column should be zero" checks.
const PIN_TOL: f64 = 1e-12;
/// Tolerance for symmetry checks on covariance inputs.
const SYM_TOL: f64 = 1e-8;

/// Problem dimensions: nodes, roles and snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    n_nodes: usize,
    n_roles: usize,
    n_times: usize,
}

impl Dims {
    /// Validate and build dimensions: at least 2 nodes, 1 role, 1 snapshot.
    pub fn new(n_nodes: usize, n_roles: usize, n_times: usize) -> Result<Self> {
        if n_nodes < 2 {
            return Err(Error::Data(format!(
                "need at least 2 nodes, got {n_nodes}"
            )));
        }
        if n_roles < 1 {
            return Err(Error::Data("need at least 1 role".into()));
        }
        if n_times < 1 {
            return Err(Error::Data("need at least 1 snapshot".into()));
        }
        Ok(Dims {
            n_nodes,
            n_roles,
            n_times,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_roles(&self) -> usize {
        self.n_roles
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    /// Number of unpinned membership coordinates, `n_roles - 1`.
    pub fn active_dim(&self) -> usize {
        active_dim(self.n_roles)
    }
}

/// A sequence of `T` binary network snapshots over a fixed node set.
///
/// Snapshots are stored as dense adjacency indicators with an always-empty
/// diagonal.  Undirected sequences keep their adjacency exactly symmetric:
/// [`NetSeq::set_edge`] mirrors automatically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetSeq {
    n_nodes: usize,
    directed: bool,
    /// `snapshots[t][i * n_nodes + j]` is the edge indicator `i -> j`.
    snapshots: Vec<Vec<bool>>,
}

impl NetSeq {
    /// An edgeless sequence with `n_times` snapshots.
    pub fn empty(n_nodes: usize, n_times: usize, directed: bool) -> Result<Self> {
        if n_nodes < 2 {
            return Err(Error::Data(format!(
                "need at least 2 nodes, got {n_nodes}"
            )));
        }
        if n_times < 1 {
            return Err(Error::Data("need at least 1 snapshot".into()));
        }
        Ok(NetSeq {
            n_nodes,
            directed,
            snapshots: vec![vec![false; n_nodes * n_nodes]; n_times],
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_times(&self) -> usize {
        self.snapshots.len()
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    fn check_index(&self, t: usize, i: usize, j: usize) -> Result<()> {
        if t >= self.n_times() {
            return Err(Error::Data(format!(
                "snapshot index {t} out of range (have {})",
                self.n_times()
            )));
        }
        if i >= self.n_nodes || j >= self.n_nodes {
            return Err(Error::Data(format!(
                "node index ({i}, {j}) out of range (have {} nodes)",
                self.n_nodes
            )));
        }
        if i == j {
            return Err(Error::Data(format!("self-loop at node {i} not allowed")));
        }
        Ok(())
    }

    /// Set the indicator for `i -> j` in snapshot `t`; mirrors `j -> i`
    /// when the sequence is undirected.
    pub fn set_edge(&mut self, t: usize, i: usize, j: usize, present: bool) -> Result<()> {
        self.check_index(t, i, j)?;
        let n = self.n_nodes;
        self.snapshots[t][i * n + j] = present;
        if !self.directed {
            self.snapshots[t][j * n + i] = present;
        }
        Ok(())
    }

    /// Edge indicator `i -> j` in snapshot `t`.  Panics on out-of-range
    /// indices (inference loops run over validated index sets).
    pub fn edge(&self, t: usize, i: usize, j: usize) -> bool {
        self.snapshots[t][i * self.n_nodes + j]
    }

    /// Number of present edges in snapshot `t` (ordered count when
    /// directed, unordered when not).
    pub fn n_edges(&self, t: usize) -> usize {
        self.pairs()
            .iter()
            .filter(|&&(i, j)| self.edge(t, i, j))
            .count()
    }

    /// The modeled dyads of one snapshot, in fixed row-major order:
    /// all ordered pairs `i != j` when directed, pairs `i < j` when not.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        pair_list(self.n_nodes, self.directed)
    }

    /// Copy of a single snapshot as a one-snapshot sequence.
    pub fn time_slice(&self, t: usize) -> Result<NetSeq> {
        if t >= self.n_times() {
            return Err(Error::Data(format!(
                "snapshot index {t} out of range (have {})",
                self.n_times()
            )));
        }
        Ok(NetSeq {
            n_nodes: self.n_nodes,
            directed: self.directed,
            snapshots: vec![self.snapshots[t].clone()],
        })
    }
}

/// The modeled dyads for `n` nodes in fixed row-major order.
pub fn pair_list(n: usize, directed: bool) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(if directed { n * (n - 1) } else { n * (n - 1) / 2 });
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if directed || i < j {
                out.push((i, j));
            }
        }
    }
    out
}

/// Membership vector in its Gaussian parameterization: a length-`K` vector
/// whose last coordinate is pinned to exactly zero for identifiability.
#[derive(Debug, Clone, PartialEq)]
pub struct Gamma {
    values: DVector<f64>,
}

impl Gamma {
    /// Validate: finite entries and a last coordinate of exactly zero.
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Data("membership parameter vector is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(
                "membership parameter vector has non-finite entries".into(),
            ));
        }
        if values[values.len() - 1] != 0.0 {
            return Err(Error::Data(format!(
                "last membership coordinate must be pinned to 0, got {}",
                values[values.len() - 1]
            )));
        }
        Ok(Gamma { values })
    }

    /// Build from the `K - 1` unpinned coordinates.
    pub fn from_active(active: &[f64]) -> Result<Self> {
        let mut v = DVector::zeros(active.len() + 1);
        for (i, &x) in active.iter().enumerate() {
            v[i] = x;
        }
        Gamma::new(v)
    }

    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }
}

/// A point on the `K`-simplex: nonnegative role probabilities summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipVector {
    pi: DVector<f64>,
}

impl MembershipVector {
    /// Validate a probability vector.  Entries may carry a few ulps of
    /// float noise; they are clamped into `[0, 1]` and the sum must match
    /// 1 within `1e-6` (re-normalized to machine precision on accept).
    pub fn new(pi: DVector<f64>) -> Result<Self> {
        if pi.is_empty() {
            return Err(Error::Data("membership vector is empty".into()));
        }
        if pi.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("membership vector has non-finite entries".into()));
        }
        if pi.iter().any(|&v| !(-1e-9..=1.0 + 1e-9).contains(&v)) {
            return Err(Error::Data(
                "membership vector has entries outside [0, 1]".into(),
            ));
        }
        let sum: f64 = pi.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Data(format!(
                "membership vector sums to {sum}, expected 1"
            )));
        }
        let mut pi = pi;
        for v in pi.iter_mut() {
            *v = v.clamp(0.0, 1.0) / sum;
        }
        Ok(MembershipVector { pi })
    }

    pub fn k(&self) -> usize {
        self.pi.len()
    }

    pub fn pi(&self) -> &DVector<f64> {
        &self.pi
    }

    /// Index of the largest component (lowest index wins ties).
    pub fn dominant_role(&self) -> usize {
        let mut best = 0;
        for i in 1..self.pi.len() {
            if self.pi[i] > self.pi[best] {
                best = i;
            }
        }
        best
    }
}

/// Role-compatibility matrix: entry `(u, v)` is the probability of an edge
/// from a sender in role `u` to a receiver in role `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatMatrix {
    beta: DMatrix<f64>,
}

impl CompatMatrix {
    /// Validate a square matrix of probabilities.
    pub fn new(beta: DMatrix<f64>) -> Result<Self> {
        if beta.nrows() == 0 || beta.nrows() != beta.ncols() {
            return Err(Error::Data(format!(
                "compatibility matrix must be square and non-empty, got {} x {}",
                beta.nrows(),
                beta.ncols()
            )));
        }
        if beta.iter().any(|v| !v.is_finite() || !(0.0..=1.0).contains(v)) {
            return Err(Error::Data(
                "compatibility matrix entries must be probabilities in [0, 1]".into(),
            ));
        }
        Ok(CompatMatrix { beta })
    }

    /// Diagonal-dominant matrix: `on` within a role, `off` across roles.
    pub fn diag_dominant(k: usize, on: f64, off: f64) -> Result<Self> {
        CompatMatrix::new(DMatrix::from_fn(k, k, |i, j| if i == j { on } else { off }))
    }

    pub fn k(&self) -> usize {
        self.beta.nrows()
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.beta[(u, v)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.beta
    }
}

/// Check that a covariance-like `k x k` matrix is symmetric, has a (nearly)
/// zero trailing row/column and is PSD on the active block; returns the
/// cleaned matrix (exactly symmetric, trailing row/column exactly zero).
fn validate_covariance(m: &DMatrix<f64>, k: usize, name: &str) -> Result<DMatrix<f64>> {
    if m.nrows() != k || m.ncols() != k {
        return Err(Error::Data(format!(
            "{name} must be {k} x {k}, got {} x {}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data(format!("{name} has non-finite entries")));
    }
    if (m - m.transpose()).amax() > SYM_TOL {
        return Err(Error::Data(format!("{name} is not symmetric")));
    }
    for i in 0..k {
        if m[(i, k - 1)].abs() > PIN_TOL || m[(k - 1, i)].abs() > PIN_TOL {
            return Err(Error::Data(format!(
                "{name} must be zero on its pinned row/column"
            )));
        }
    }
    let clean = crate::linalg::embed_active(
        &symmetrize(&crate::linalg::active_block(m, active_dim(k))),
        k,
    );
    if min_eig_active(&clean, k) < -1e-10 {
        return Err(Error::Data(format!(
            "{name} is not positive semi-definite on its active block"
        )));
    }
    Ok(clean)
}

/// Check a mean-like vector: length `k`, finite, pinned last coordinate.
fn validate_pinned_mean(v: &DVector<f64>, k: usize, name: &str) -> Result<DVector<f64>> {
    if v.len() != k {
        return Err(Error::Data(format!(
            "{name} must have length {k}, got {}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Data(format!("{name} has non-finite entries")));
    }
    if v[k - 1].abs() > PIN_TOL {
        return Err(Error::Data(format!(
            "{name} must be zero in its pinned coordinate"
        )));
    }
    let mut clean = v.clone();
    clean[k - 1] = 0.0;
    Ok(clean)
}

/// Parameters of the static model: membership prior mean and covariance
/// plus the role-compatibility matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticParams {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    b: CompatMatrix,
}

impl StaticParams {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>, b: CompatMatrix) -> Result<Self> {
        let k = b.k();
        let mu = validate_pinned_mean(&mu, k, "prior mean")?;
        let sigma = validate_covariance(&sigma, k, "prior covariance")?;
        Ok(StaticParams { mu, sigma, b })
    }

    pub fn k(&self) -> usize {
        self.b.k()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn b(&self) -> &CompatMatrix {
        &self.b
    }

    /// Factor the prior covariance, failing if it is not (jitterably)
    /// positive definite on the active block.
    pub fn sigma_chol(&self, jitter: f64) -> Result<ActiveChol> {
        ActiveChol::new(&self.sigma, self.k(), jitter)
    }
}

/// Parameters of the dynamic model: initial mean `nu`, random-walk
/// covariance `phi`, per-snapshot membership covariances, the shared
/// role-compatibility matrix and the (fixed, typically identity) state
/// transition.
#[derive(Debug, Clone, PartialEq)]
pub struct DynParams {
    nu: DVector<f64>,
    phi: DMatrix<f64>,
    sigmas: Vec<DMatrix<f64>>,
    b: CompatMatrix,
    a: DMatrix<f64>,
}

impl DynParams {
    /// Build with the identity state transition.
    pub fn new(
        nu: DVector<f64>,
        phi: DMatrix<f64>,
        sigmas: Vec<DMatrix<f64>>,
        b: CompatMatrix,
    ) -> Result<Self> {
        let k = b.k();
        let a = crate::linalg::embed_active(&DMatrix::identity(active_dim(k), active_dim(k)), k);
        DynParams::with_transition(nu, phi, sigmas, b, a)
    }

    /// Build with an explicit state transition matrix (active block only;
    /// the pinned row/column must be zero).
    pub fn with_transition(
        nu: DVector<f64>,
        phi: DMatrix<f64>,
        sigmas: Vec<DMatrix<f64>>,
        b: CompatMatrix,
        a: DMatrix<f64>,
    ) -> Result<Self> {
        let k = b.k();
        let nu = validate_pinned_mean(&nu, k, "initial state mean")?;
        let phi = validate_covariance(&phi, k, "state noise covariance")?;
        if sigmas.is_empty() {
            return Err(Error::Data(
                "need at least one per-snapshot membership covariance".into(),
            ));
        }
        let sigmas = sigmas
            .iter()
            .map(|s| validate_covariance(s, k, "membership covariance"))
            .collect::<Result<Vec<_>>>()?;
        if a.nrows() != k || a.ncols() != k {
            return Err(Error::Data(format!(
                "state transition must be {k} x {k}, got {} x {}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("state transition has non-finite entries".into()));
        }
        for i in 0..k {
            if a[(i, k - 1)].abs() > PIN_TOL || a[(k - 1, i)].abs() > PIN_TOL {
                return Err(Error::Data(
                    "state transition must be zero on its pinned row/column".into(),
                ));
            }
        }
        Ok(DynParams {
            nu,
            phi,
            sigmas,
            b,
            a,
        })
    }

    pub fn k(&self) -> usize {
        self.b.k()
    }

    pub fn n_times(&self) -> usize {
        self.sigmas.len()
    }

    pub fn nu(&self) -> &DVector<f64> {
        &self.nu
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn sigmas(&self) -> &[DMatrix<f64>] {
        &self.sigmas
    }

    pub fn sigma(&self, t: usize) -> &DMatrix<f64> {
        &self.sigmas[t]
    }

    pub fn b(&self) -> &CompatMatrix {
        &self.b
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_validation() {
        assert!(Dims::new(2, 1, 1).is_ok());
        assert!(Dims::new(1, 3, 1).is_err());
        assert!(Dims::new(5, 0, 1).is_err());
        assert!(Dims::new(5, 3, 0).is_err());
        let d = Dims::new(10, 4, 3).unwrap();
        assert_eq!(d.active_dim(), 3);
    }

    #[test]
    fn netseq_directed_and_undirected_edges() {
        let mut net = NetSeq::empty(4, 2, true).unwrap();
        net.set_edge(0, 0, 1, true).unwrap();
        assert!(net.edge(0, 0, 1));
        assert!(!net.edge(0, 1, 0));
        assert_eq!(net.n_edges(0), 1);
        assert_eq!(net.n_edges(1), 0);
        assert!(net.set_edge(0, 2, 2, true).is_err());
        assert!(net.set_edge(2, 0, 1, true).is_err());
        assert!(net.set_edge(0, 0, 4, true).is_err());

        let mut und = NetSeq::empty(4, 1, false).unwrap();
        und.set_edge(0, 2, 0, true).unwrap();
        assert!(und.edge(0, 0, 2));
        assert!(und.edge(0, 2, 0));
        assert_eq!(und.n_edges(0), 1);
        assert_eq!(und.pairs().len(), 6);
    }

    #[test]
    fn pair_list_orders_row_major() {
        assert_eq!(
            pair_list(3, true),
            vec![(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]
        );
        assert_eq!(pair_list(3, false), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn time_slice_copies_one_snapshot() {
        let mut net = NetSeq::empty(3, 3, true).unwrap();
        net.set_edge(1, 0, 1, true).unwrap();
        let s = net.time_slice(1).unwrap();
        assert_eq!(s.n_times(), 1);
        assert!(s.edge(0, 0, 1));
        assert!(net.time_slice(3).is_err());
    }

    #[test]
    fn gamma_requires_pinned_tail() {
        assert!(Gamma::new(DVector::from_vec(vec![1.0, -2.0, 0.0])).is_ok());
        assert!(Gamma::new(DVector::from_vec(vec![1.0, 0.5])).is_err());
        assert!(Gamma::new(DVector::from_vec(vec![f64::NAN, 0.0])).is_err());
        let g = Gamma::from_active(&[3.0, -1.0]).unwrap();
        assert_eq!(g.k(), 3);
        assert_eq!(g.values()[2], 0.0);
    }

    #[test]
    fn membership_vector_validation() {
        let ok = MembershipVector::new(DVector::from_vec(vec![0.2, 0.3, 0.5])).unwrap();
        assert_eq!(ok.dominant_role(), 2);
        assert!(MembershipVector::new(DVector::from_vec(vec![0.9, 0.3])).is_err());
        assert!(MembershipVector::new(DVector::from_vec(vec![1.2, -0.2])).is_err());
        // Ties resolve to the lowest index.
        let tie = MembershipVector::new(DVector::from_vec(vec![0.5, 0.5])).unwrap();
        assert_eq!(tie.dominant_role(), 0);
    }

    #[test]
    fn compat_matrix_validation() {
        assert!(CompatMatrix::new(DMatrix::from_element(3, 3, 0.5)).is_ok());
        assert!(CompatMatrix::new(DMatrix::from_element(3, 2, 0.5)).is_err());
        assert!(CompatMatrix::new(DMatrix::from_element(2, 2, 1.5)).is_err());
        let d = CompatMatrix::diag_dominant(3, 0.8, 0.1).unwrap();
        assert_eq!(d.get(0, 0), 0.8);
        assert_eq!(d.get(0, 1), 0.1);
    }

    #[test]
    fn static_params_validation() {
        let k = 3;
        let b = CompatMatrix::diag_dominant(k, 0.8, 0.1).unwrap();
        let mu = DVector::from_vec(vec![1.0, -1.0, 0.0]);
        let mut sigma = DMatrix::zeros(k, k);
        sigma[(0, 0)] = 1.0;
        sigma[(1, 1)] = 2.0;
        sigma[(0, 1)] = 0.3;
        sigma[(1, 0)] = 0.3;
        let p = StaticParams::new(mu.clone(), sigma.clone(), b.clone()).unwrap();
        assert_eq!(p.k(), 3);
        assert!(p.sigma_chol(1e-8).is_ok());

        // Unpinned mean rejected.
        let bad_mu = DVector::from_vec(vec![1.0, -1.0, 0.5]);
        assert!(StaticParams::new(bad_mu, sigma.clone(), b.clone()).is_err());
        // Junk in the pinned row rejected.
        let mut bad_sigma = sigma.clone();
        bad_sigma[(2, 2)] = 1.0;
        assert!(StaticParams::new(mu.clone(), bad_sigma, b.clone()).is_err());
        // Indefinite active block rejected.
        let mut neg = DMatrix::zeros(k, k);
        neg[(0, 0)] = -1.0;
        assert!(StaticParams::new(mu, neg, b).is_err());
    }

    #[test]
    fn dyn_params_validation() {
        let k = 2;
        let b = CompatMatrix::diag_dominant(k, 0.7, 0.1).unwrap();
        let nu = DVector::from_vec(vec![0.5, 0.0]);
        let mut phi = DMatrix::zeros(k, k);
        phi[(0, 0)] = 0.1;
        let mut sig = DMatrix::zeros(k, k);
        sig[(0, 0)] = 1.0;
        let p = DynParams::new(nu.clone(), phi.clone(), vec![sig.clone(); 4], b.clone()).unwrap();
        assert_eq!(p.n_times(), 4);
        assert_eq!(p.a()[(0, 0)], 1.0);
        assert_eq!(p.a()[(1, 1)], 0.0);
        assert!(DynParams::new(nu, phi, vec![], b).is_err());
    }
}
