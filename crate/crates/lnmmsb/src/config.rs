//! Inference/fitting knobs and the reproducible run configuration used by
//! the command-line tool.
//!
//! [`RunConfig`] serializes to a simple `key = value` text format; every
//! command writes the effective configuration next to its outputs so a run
//! can be repeated exactly.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::linalg::DEFAULT_JITTER;
use crate::Result;

/// Which model family a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Single-snapshot model with one prior mean/covariance.
    Static,
    /// State-space model whose prior mean follows a random walk across
    /// snapshots.
    Dynamic,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Static => write!(f, "static"),
            ModelKind::Dynamic => write!(f, "dynamic"),
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "static" => Ok(ModelKind::Static),
            "dynamic" => Ok(ModelKind::Dynamic),
            other => Err(Error::InvalidArgument(format!(
                "unknown model kind '{other}' (expected 'static' or 'dynamic')"
            ))),
        }
    }
}

/// Knobs for posterior inference with fixed model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferCfg {
    /// Relative-change convergence threshold on the variational objective.
    pub tol: f64,
    /// Cap on coordinate-update sweeps.
    pub max_iter: usize,
    /// Independent random initializations; the best objective wins.
    pub n_restarts: usize,
    /// Diagonal jitter for covariance factorizations.
    pub jitter: f64,
}

impl Default for InferCfg {
    fn default() -> Self {
        InferCfg {
            tol: 1e-6,
            max_iter: 200,
            n_restarts: 5,
            jitter: DEFAULT_JITTER,
        }
    }
}

impl InferCfg {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive and finite, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if self.n_restarts == 0 {
            return Err(Error::InvalidArgument(
                "n_restarts must be at least 1".into(),
            ));
        }
        if !(self.jitter.is_finite() && self.jitter >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "jitter must be nonnegative and finite, got {}",
                self.jitter
            )));
        }
        Ok(())
    }
}

/// Knobs for full parameter learning (variational EM).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitCfg {
    /// Relative-change convergence threshold on the variational objective.
    pub tol: f64,
    /// Cap on inner sweeps (posterior + compatibility updates) per outer
    /// cycle.
    pub max_inner: usize,
    /// Cap on outer cycles (prior parameter re-estimation).
    pub max_outer: usize,
    /// Independent random initializations; the best objective wins.
    pub n_restarts: usize,
    /// Diagonal jitter for covariance factorizations.
    pub jitter: f64,
}

impl Default for FitCfg {
    fn default() -> Self {
        FitCfg {
            tol: 1e-6,
            max_inner: 200,
            max_outer: 100,
            n_restarts: 5,
            jitter: DEFAULT_JITTER,
        }
    }
}

impl FitCfg {
    pub fn validate(&self) -> Result<()> {
        InferCfg {
            tol: self.tol,
            max_iter: self.max_inner,
            n_restarts: self.n_restarts,
            jitter: self.jitter,
        }
        .validate()?;
        if self.max_outer == 0 {
            return Err(Error::InvalidArgument(
                "max_outer must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// The inference knobs implied by these fitting knobs.
    pub fn infer_cfg(&self) -> InferCfg {
        InferCfg {
            tol: self.tol,
            max_iter: self.max_inner,
            n_restarts: self.n_restarts,
            jitter: self.jitter,
        }
    }
}

/// Everything needed to reproduce a command-line run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    /// Number of roles (ignored when `k_range` is set).
    pub k: usize,
    /// Inclusive range of role counts for model selection.
    pub k_range: Option<(usize, usize)>,
    pub seed: u64,
    pub tol: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    pub n_restarts: usize,
    pub jitter: f64,
    /// Importance-sample count for log-likelihood estimates.
    pub is_samples: usize,
    pub directed: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let f = FitCfg::default();
        RunConfig {
            model: ModelKind::Static,
            k: 3,
            k_range: None,
            seed: 0,
            tol: f.tol,
            max_inner: f.max_inner,
            max_outer: f.max_outer,
            n_restarts: f.n_restarts,
            jitter: f.jitter,
            is_samples: 500,
            directed: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.fit_cfg().validate()?;
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if let Some((lo, hi)) = self.k_range {
            if lo == 0 || lo > hi {
                return Err(Error::InvalidArgument(format!(
                    "invalid role-count range {lo}..{hi}"
                )));
            }
        }
        if self.is_samples == 0 {
            return Err(Error::InvalidArgument(
                "is_samples must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn fit_cfg(&self) -> FitCfg {
        FitCfg {
            tol: self.tol,
            max_inner: self.max_inner,
            max_outer: self.max_outer,
            n_restarts: self.n_restarts,
            jitter: self.jitter,
        }
    }

    pub fn infer_cfg(&self) -> InferCfg {
        self.fit_cfg().infer_cfg()
    }

    /// Serialize as `key = value` lines (stable order).
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("model = {}\n", self.model));
        out.push_str(&format!("k = {}\n", self.k));
        if let Some((lo, hi)) = self.k_range {
            out.push_str(&format!("k_range = {lo}..{hi}\n"));
        }
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("tol = {:e}\n", self.tol));
        out.push_str(&format!("max_inner = {}\n", self.max_inner));
        out.push_str(&format!("max_outer = {}\n", self.max_outer));
        out.push_str(&format!("n_restarts = {}\n", self.n_restarts));
        out.push_str(&format!("jitter = {:e}\n", self.jitter));
        out.push_str(&format!("is_samples = {}\n", self.is_samples));
        out.push_str(&format!("directed = {}\n", self.directed));
        out
    }

    /// Apply `key = value` lines on top of this configuration.  Blank
    /// lines and `#` comments are ignored; unknown keys are errors.
    pub fn apply_key_values(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::InvalidArgument(format!(
                    "config line {}: expected 'key = value', got '{raw}'",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| {
                Error::InvalidArgument(format!(
                    "config line {}: invalid {what} value '{value}'",
                    lineno + 1
                ))
            };
            match key {
                "model" => self.model = value.parse()?,
                "k" => self.k = value.parse().map_err(|_| bad("k"))?,
                "k_range" => {
                    let (lo, hi) = value
                        .split_once("..")
                        .ok_or_else(|| bad("k_range"))?;
                    let lo = lo.trim().parse().map_err(|_| bad("k_range"))?;
                    let hi = hi.trim().parse().map_err(|_| bad("k_range"))?;
                    self.k_range = Some((lo, hi));
                }
                "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
                "tol" => self.tol = value.parse().map_err(|_| bad("tol"))?,
                "max_inner" => self.max_inner = value.parse().map_err(|_| bad("max_inner"))?,
                "max_outer" => self.max_outer = value.parse().map_err(|_| bad("max_outer"))?,
                "n_restarts" => {
                    self.n_restarts = value.parse().map_err(|_| bad("n_restarts"))?
                }
                "jitter" => self.jitter = value.parse().map_err(|_| bad("jitter"))?,
                "is_samples" => {
                    self.is_samples = value.parse().map_err(|_| bad("is_samples"))?
                }
                "directed" => self.directed = value.parse().map_err(|_| bad("directed"))?,
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "config line {}: unknown key '{other}'",
                        lineno + 1
                    )))
                }
            }
        }
        self.validate()
    }

    /// Parse a full configuration from `key = value` text, starting from
    /// defaults.
    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_key_values(text)?;
        Ok(cfg)
    }
}
