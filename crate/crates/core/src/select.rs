//! Model selection: SPSP (partitioning the solution path at each grid point
//! and taking the union), cross-validated support selection, and the
//! two-stage estimator (selection followed by least-squares refit).

use ndarray::{Array2, ShapeBuilder};
use serde::{Deserialize, Serialize};

use crate::data::{ols_solve, Dataset};
use crate::error::{Error, Result};
use crate::path::{
    adaptive_weights, cv_curve, default_grid, fit_path, PenaltySpec, SolutionPath,
    DEFAULT_MCP_GAMMA, DEFAULT_SCAD_A,
};

pub const DEFAULT_CONTROL_RATIO: f64 = 5.0;
pub const DEFAULT_CV_FOLDS: usize = 10;

/// A selected model with its least-squares refit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectedModel {
    /// Selected covariates, ascending 0-based indices.
    pub indices: Vec<usize>,
    /// Refit coefficients, zeros off the selected support.
    pub beta_refit: Vec<f64>,
    pub selector_tag: String,
    /// True when the selection exceeded n−1 covariates and was truncated to
    /// the n−1 with the largest marginal correlations.
    pub truncated: bool,
}

/// Control ratio for the path-partition criterion: an explicit constant or
/// the data-driven rule (currently the constant default; the estimator slot
/// is pluggable).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlRatio {
    Fixed(f64),
    Auto,
}

/// Partition settings. The tie rule is fixed: among all admissible splits,
/// the smallest relevant set wins.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpspConfig {
    pub control_ratio: ControlRatio,
}

impl Default for SpspConfig {
    fn default() -> Self {
        Self {
            control_ratio: ControlRatio::Auto,
        }
    }
}

impl SpspConfig {
    pub fn fixed(r: f64) -> Self {
        Self {
            control_ratio: ControlRatio::Fixed(r),
        }
    }

    pub fn resolve(&self, path: &SolutionPath) -> f64 {
        match self.control_ratio {
            ControlRatio::Fixed(r) => r,
            ControlRatio::Auto => estimate_control_ratio(path),
        }
    }
}

/// Data-driven control-ratio estimate. The default rule returns the constant
/// 5; it is deterministic in the path and replaceable.
pub fn estimate_control_ratio(_path: &SolutionPath) -> f64 {
    DEFAULT_CONTROL_RATIO
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Splits one coefficient vector into relevant/irrelevant sets by the gap
/// criterion: sort |β| ascending, and find the largest split point t where
/// the spacings D above the split stay within factor R of the gap while the
/// gap exceeds R times the spacings below:
/// D_max(rel)/gap ≤ R < gap/D_max(irrel). Returns ascending covariate
/// indices of the relevant set, or empty when no split qualifies.
pub fn partition_at_lambda(beta: &[f64], control_ratio: f64) -> Vec<usize> {
    let p = beta.len();
    if p < 2 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| beta[a].abs().total_cmp(&beta[b].abs()).then(a.cmp(&b)));
    let m: Vec<f64> = order.iter().map(|&j| beta[j].abs()).collect();
    // dist(i) = m[i] − m[i−1] for i in 1..p
    let dist = |i: usize| m[i] - m[i - 1];

    // prefix[i] = max dist(1..=i); suffix[i] = max dist(i..=p−1)
    let mut prefix = vec![0.0f64; p];
    for i in 1..p {
        prefix[i] = prefix[i - 1].max(dist(i));
    }
    let mut suffix = vec![0.0f64; p + 1];
    for i in (1..p).rev() {
        suffix[i] = suffix[i + 1].max(dist(i));
    }

    for t in (1..p).rev() {
        let gap = dist(t);
        let dmax_relevant = suffix[t + 1];
        let dmax_irrelevant = if t >= 2 { prefix[t - 1] } else { 0.0 };
        if ratio(dmax_relevant, gap) <= control_ratio
            && control_ratio < ratio(gap, dmax_irrelevant)
        {
            let mut selected = order[t..].to_vec();
            selected.sort_unstable();
            return selected;
        }
    }
    Vec::new()
}

/// Union of the per-grid-point partitions over the whole path.
pub fn spsp_select(path: &SolutionPath, config: &SpspConfig) -> Vec<usize> {
    let r = config.resolve(path);
    let p = path.coefs.ncols();
    let mut in_union = vec![false; p];
    for k in 0..path.grid.len() {
        for j in partition_at_lambda(path.row(k), r) {
            in_union[j] = true;
        }
    }
    (0..p).filter(|&j| in_union[j]).collect()
}

/// Support of the full-data fit at the CV-optimal grid point.
pub fn cv_select(d: &Dataset, penalty: &PenaltySpec, folds: usize, seed: u64) -> Result<Vec<usize>> {
    let curve = cv_curve(d, penalty, folds, seed)?;
    Ok(curve.full_path.support(curve.best_index))
}

/// Selection method of the two-stage estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SpspLasso,
    SpspAdalasso,
    SpspScad,
    SpspMcp,
    CvLasso,
    CvAdalasso,
    CvScad,
    CvMcp,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::SpspLasso => "spsp-lasso",
            Method::SpspAdalasso => "spsp-adalasso",
            Method::SpspScad => "spsp-scad",
            Method::SpspMcp => "spsp-mcp",
            Method::CvLasso => "cv-lasso",
            Method::CvAdalasso => "cv-adalasso",
            Method::CvScad => "cv-scad",
            Method::CvMcp => "cv-mcp",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spsp-lasso" => Ok(Method::SpspLasso),
            "spsp-adalasso" => Ok(Method::SpspAdalasso),
            "spsp-scad" => Ok(Method::SpspScad),
            "spsp-mcp" => Ok(Method::SpspMcp),
            "cv-lasso" => Ok(Method::CvLasso),
            "cv-adalasso" => Ok(Method::CvAdalasso),
            "cv-scad" => Ok(Method::CvScad),
            "cv-mcp" => Ok(Method::CvMcp),
            other => Err(Error::InvalidConfig(format!(
                "unknown selector {other:?} (expected spsp-/cv- + lasso|adalasso|scad|mcp)"
            ))),
        }
    }
}

/// Full selector configuration: method, control ratio (SPSP), fold count
/// (CV and adaptive weights), and the seed for deterministic folds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SelectorSpec {
    pub method: Method,
    #[serde(default = "default_control_ratio")]
    pub control_ratio: ControlRatio,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub cv_seed: u64,
}

fn default_control_ratio() -> ControlRatio {
    ControlRatio::Auto
}

fn default_folds() -> usize {
    DEFAULT_CV_FOLDS
}

impl SelectorSpec {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            control_ratio: ControlRatio::Auto,
            folds: DEFAULT_CV_FOLDS,
            cv_seed: 0,
        }
    }

    pub fn with_control_ratio(mut self, r: f64) -> Self {
        self.control_ratio = ControlRatio::Fixed(r);
        self
    }

    fn penalty(&self, d: &Dataset) -> Result<PenaltySpec> {
        match self.method {
            Method::SpspLasso | Method::CvLasso => Ok(PenaltySpec::lasso()),
            Method::SpspAdalasso | Method::CvAdalasso => {
                PenaltySpec::adaptive_lasso(adaptive_weights(d, self.cv_seed)?)
            }
            Method::SpspScad | Method::CvScad => PenaltySpec::scad(DEFAULT_SCAD_A),
            Method::SpspMcp | Method::CvMcp => PenaltySpec::mcp(DEFAULT_MCP_GAMMA),
        }
    }

    fn is_path_partition(&self) -> bool {
        matches!(
            self.method,
            Method::SpspLasso | Method::SpspAdalasso | Method::SpspScad | Method::SpspMcp
        )
    }
}

/// Least-squares refit on `indices`, embedded into a length-p coefficient
/// vector. A singular refit reports the offending covariate's original index.
pub fn refit_model(d: &Dataset, indices: Vec<usize>, tag: &str, truncated: bool) -> Result<SelectedModel> {
    let n = d.n();
    let mut x_sub = Array2::zeros((n, indices.len()).f());
    for (a, &j) in indices.iter().enumerate() {
        let col = d.column(j);
        for i in 0..n {
            x_sub[[i, a]] = col[i];
        }
    }
    let solution = ols_solve(x_sub.view(), d.y.view()).map_err(|e| match e {
        Error::SingularSystem {
            column,
            pivot,
            tolerance,
        } => Error::SingularSystem {
            column: indices[column],
            pivot,
            tolerance,
        },
        other => other,
    })?;
    let mut beta_refit = vec![0.0; d.p()];
    for (a, &j) in indices.iter().enumerate() {
        beta_refit[j] = solution[a];
    }
    Ok(SelectedModel {
        indices,
        beta_refit,
        selector_tag: tag.to_owned(),
        truncated,
    })
}

/// Caps a selection at n−1 covariates, keeping those with the largest
/// |x_jᵀy|/n. Returns the (possibly smaller) set and whether truncation
/// happened.
fn truncate_to_refittable(d: &Dataset, mut indices: Vec<usize>) -> (Vec<usize>, bool) {
    let cap = d.n() - 1;
    if indices.len() <= cap {
        return (indices, false);
    }
    let n = d.n() as f64;
    let score = |j: usize| {
        d.column(j)
            .iter()
            .zip(d.y.iter())
            .map(|(x, y)| x * y)
            .sum::<f64>()
            .abs()
            / n
    };
    indices.sort_by(|&a, &b| score(b).total_cmp(&score(a)).then(a.cmp(&b)));
    indices.truncate(cap);
    indices.sort_unstable();
    (indices, true)
}

/// Two-stage estimator: run the configured selector, then refit by least
/// squares on the selected support.
pub fn two_stage(d: &Dataset, selector: &SelectorSpec) -> Result<SelectedModel> {
    let penalty = selector.penalty(d)?;
    let indices = if selector.is_path_partition() {
        let grid = default_grid(d)?;
        let path = fit_path(d, &penalty, &grid)?;
        let config = SpspConfig {
            control_ratio: selector.control_ratio,
        };
        spsp_select(&path, &config)
    } else {
        cv_select(d, &penalty, selector.folds, selector.cv_seed)?
    };
    let (indices, truncated) = truncate_to_refittable(d, indices);
    refit_model(d, indices, selector.method.as_str(), truncated)
}
