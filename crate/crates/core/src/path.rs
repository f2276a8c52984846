//! Pathwise coordinate descent for L1-type penalties over a descending
//! lambda grid, with KKT verification and cross-validated tuning.

use ndarray::{Array1, Array2, Axis, ShapeBuilder};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::sub_rng;

pub const DEFAULT_SCAD_A: f64 = 3.7;
pub const DEFAULT_MCP_GAMMA: f64 = 3.0;
pub const DEFAULT_GRID_LEN: usize = 100;

const TOL: f64 = 1e-8;
const MAX_SWEEPS: usize = 10_000;
const WEIGHT_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Lasso,
    AdaptiveLasso,
    Scad,
    Mcp,
}

/// Penalty family plus its parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub family: Family,
    /// SCAD `a` or MCP `gamma`; unused for the lasso families.
    pub nonconvexity: f64,
    /// Per-coordinate multipliers on lambda (adaptive lasso only).
    pub weights: Option<Vec<f64>>,
}

impl PenaltySpec {
    pub fn lasso() -> Self {
        Self {
            family: Family::Lasso,
            nonconvexity: 0.0,
            weights: None,
        }
    }

    pub fn adaptive_lasso(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::InvalidConfig(
                "adaptive weights must be finite and positive".into(),
            ));
        }
        Ok(Self {
            family: Family::AdaptiveLasso,
            nonconvexity: 0.0,
            weights: Some(weights),
        })
    }

    pub fn scad(a: f64) -> Result<Self> {
        if !(a > 2.0) {
            return Err(Error::InvalidConfig(format!("scad parameter must exceed 2, got {a}")));
        }
        Ok(Self {
            family: Family::Scad,
            nonconvexity: a,
            weights: None,
        })
    }

    pub fn mcp(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0) {
            return Err(Error::InvalidConfig(format!(
                "mcp parameter must exceed 1, got {gamma}"
            )));
        }
        Ok(Self {
            family: Family::Mcp,
            nonconvexity: gamma,
            weights: None,
        })
    }

    fn validate(&self, p: usize) -> Result<()> {
        match self.family {
            Family::Scad if !(self.nonconvexity > 2.0) => Err(Error::InvalidConfig(
                format!("scad parameter must exceed 2, got {}", self.nonconvexity),
            )),
            Family::Mcp if !(self.nonconvexity > 1.0) => Err(Error::InvalidConfig(
                format!("mcp parameter must exceed 1, got {}", self.nonconvexity),
            )),
            Family::AdaptiveLasso => match &self.weights {
                Some(w) if w.len() == p => Ok(()),
                Some(w) => Err(Error::DimensionMismatch(format!(
                    "{} adaptive weights for {p} covariates",
                    w.len()
                ))),
                None => Err(Error::InvalidConfig(
                    "adaptive lasso requires a weight vector".into(),
                )),
            },
            _ => Ok(()),
        }
    }

    fn weight(&self, j: usize) -> f64 {
        match &self.weights {
            Some(w) => w[j],
            None => 1.0,
        }
    }

    /// Exact minimizer of the coordinate objective
    /// g(b) = −z·b + v·b²/2 + penalty(b; λ)  (v = column sum of squares / n).
    fn coordinate_update(&self, z: f64, v: f64, lambda: f64, j: usize) -> f64 {
        match self.family {
            Family::Lasso | Family::AdaptiveLasso => {
                soft_threshold(z, lambda * self.weight(j)) / v
            }
            Family::Mcp => {
                let g = self.nonconvexity;
                let denom = v - 1.0 / g;
                if denom <= 0.0 {
                    return self.update_by_enumeration(z, v, lambda, j);
                }
                if z.abs() <= v * g * lambda {
                    soft_threshold(z, lambda) / denom
                } else {
                    z / v
                }
            }
            Family::Scad => {
                let a = self.nonconvexity;
                let denom = v - 1.0 / (a - 1.0);
                if denom <= 0.0 {
                    return self.update_by_enumeration(z, v, lambda, j);
                }
                let za = z.abs();
                if za <= (v + 1.0) * lambda {
                    soft_threshold(z, lambda) / v
                } else if za <= v * a * lambda {
                    soft_threshold(z, a * lambda / (a - 1.0)) / denom
                } else {
                    z / v
                }
            }
        }
    }

    /// Fallback when a closed-form denominator is non-positive (column scale
    /// below the penalty curvature): compare the candidate stationary points
    /// and region boundaries directly.
    fn update_by_enumeration(&self, z: f64, v: f64, lambda: f64, j: usize) -> f64 {
        let s = if z >= 0.0 { 1.0 } else { -1.0 };
        let mut candidates = vec![0.0, z / v];
        match self.family {
            Family::Mcp => candidates.push(s * self.nonconvexity * lambda),
            Family::Scad => {
                candidates.push(s * lambda);
                candidates.push(s * self.nonconvexity * lambda);
            }
            _ => {}
        }
        let g = |b: f64| -z * b + 0.5 * v * b * b + self.value(b, lambda, j);
        candidates
            .into_iter()
            .min_by(|&a, &b| g(a).total_cmp(&g(b)))
            .unwrap()
    }

    /// Penalty value at coefficient `b` under tuning parameter `lambda`.
    pub fn value(&self, b: f64, lambda: f64, j: usize) -> f64 {
        let ab = b.abs();
        match self.family {
            Family::Lasso | Family::AdaptiveLasso => lambda * self.weight(j) * ab,
            Family::Mcp => {
                let g = self.nonconvexity;
                if ab <= g * lambda {
                    lambda * ab - b * b / (2.0 * g)
                } else {
                    g * lambda * lambda / 2.0
                }
            }
            Family::Scad => {
                let a = self.nonconvexity;
                if ab <= lambda {
                    lambda * ab
                } else if ab <= a * lambda {
                    (2.0 * a * lambda * ab - b * b - lambda * lambda) / (2.0 * (a - 1.0))
                } else {
                    lambda * lambda * (a + 1.0) / 2.0
                }
            }
        }
    }
}

/// sign(z)·max(|z|−t, 0).
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Strictly decreasing positive tuning-parameter grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub values: Vec<f64>,
}

impl LambdaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidConfig("empty lambda grid".into()));
        }
        if values.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidConfig("lambda grid values must be positive".into()));
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidConfig(
                "lambda grid must be strictly decreasing".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Log-spaced grid from λ_max = max_j |x_jᵀy|/n down to ratio·λ_max.
pub fn make_lambda_grid(d: &Dataset, k: usize, ratio: f64) -> Result<LambdaGrid> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("grid length must be at least 2, got {k}")));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidConfig(format!("grid ratio must lie in (0,1), got {ratio}")));
    }
    let n = d.n() as f64;
    let lambda_max = (0..d.p())
        .map(|j| {
            d.column(j)
                .iter()
                .zip(d.y.iter())
                .map(|(x, y)| x * y)
                .sum::<f64>()
                .abs()
                / n
        })
        .fold(0.0f64, f64::max);
    if lambda_max <= 0.0 {
        return Err(Error::ZeroResponse);
    }
    let values = (0..k)
        .map(|i| lambda_max * ratio.powf(i as f64 / (k - 1) as f64))
        .collect();
    LambdaGrid::new(values)
}

/// Default grid: 100 points, ratio 1e-3 when n > p and 1e-2 otherwise.
pub fn default_grid(d: &Dataset) -> Result<LambdaGrid> {
    let ratio = if d.n() > d.p() { 1e-3 } else { 1e-2 };
    make_lambda_grid(d, DEFAULT_GRID_LEN, ratio)
}

/// Coefficient estimates along a lambda grid, one row per grid point.
#[derive(Debug, Clone)]
pub struct SolutionPath {
    pub grid: LambdaGrid,
    pub coefs: Array2<f64>,
    pub penalty: PenaltySpec,
}

impl SolutionPath {
    /// Row `k` as a contiguous slice.
    pub fn row(&self, k: usize) -> &[f64] {
        self.coefs
            .row(k)
            .to_slice()
            .expect("path rows are stored contiguously")
    }

    /// Indices with nonzero coefficients in row `k`.
    pub fn support(&self, k: usize) -> Vec<usize> {
        self.row(k)
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn to_json_string(&self) -> Result<String> {
        let doc = serde_json::json!({
            "lambdas": self.grid.values,
            "coefs": self.coefs.rows().into_iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
        });
        Ok(serde_json::to_string(&doc)?)
    }
}

/// Fits the penalized path by cyclic coordinate descent with warm starts and
/// an active-set strategy. Convergence at each grid point means a full sweep
/// changes no coefficient by more than 1e-8, measured on the unit-RMS
/// response scale: the problem is solved with y and λ divided by
/// rms(y) = √(Σy²/n) and the coefficients rescaled afterwards (every
/// supported penalty satisfies pen(c·β; c·λ) = c²·pen(β; λ), so this is
/// exact), which makes the solve equivariant under joint scaling of the
/// response and the grid.
pub fn fit_path(d: &Dataset, penalty: &PenaltySpec, grid: &LambdaGrid) -> Result<SolutionPath> {
    penalty.validate(d.p())?;
    let (n, p) = (d.n(), d.p());
    let nf = n as f64;
    let cols: Vec<&[f64]> = (0..p).map(|j| d.column(j)).collect();
    let v: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>() / nf)
        .collect();

    let rms = (d.y.iter().map(|y| y * y).sum::<f64>() / nf).sqrt();
    let scale = if rms > 0.0 { rms } else { 1.0 };

    let mut beta = vec![0.0f64; p];
    let mut residual: Vec<f64> = d.y.iter().map(|y| y / scale).collect();
    let mut flat = Vec::with_capacity(grid.len() * p);

    for (k, &raw_lambda) in grid.values.iter().enumerate() {
        let lambda = raw_lambda / scale;
        let mut sweeps = 0usize;
        loop {
            let full_delta = sweep(&cols, &v, penalty, lambda, nf, &mut beta, &mut residual, None);
            sweeps += 1;
            if full_delta <= TOL {
                break;
            }
            if sweeps >= MAX_SWEEPS {
                return Err(Error::NonConvergence { lambda_index: k, sweeps });
            }
            let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
            loop {
                let delta = sweep(
                    &cols,
                    &v,
                    penalty,
                    lambda,
                    nf,
                    &mut beta,
                    &mut residual,
                    Some(&active),
                );
                sweeps += 1;
                if delta <= TOL {
                    break;
                }
                if sweeps >= MAX_SWEEPS {
                    return Err(Error::NonConvergence { lambda_index: k, sweeps });
                }
            }
        }
        flat.extend(beta.iter().map(|b| b * scale));
    }

    Ok(SolutionPath {
        grid: grid.clone(),
        coefs: Array2::from_shape_vec((grid.len(), p), flat).expect("path dimensions"),
        penalty: penalty.clone(),
    })
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    cols: &[&[f64]],
    v: &[f64],
    penalty: &PenaltySpec,
    lambda: f64,
    nf: f64,
    beta: &mut [f64],
    residual: &mut [f64],
    subset: Option<&[usize]>,
) -> f64 {
    let mut max_delta = 0.0f64;
    let mut visit = |j: usize, beta: &mut [f64], residual: &mut [f64]| {
        let vj = v[j];
        if vj <= 0.0 {
            return;
        }
        let col = cols[j];
        let old = beta[j];
        let mut dot = 0.0;
        for (x, r) in col.iter().zip(residual.iter()) {
            dot += x * r;
        }
        let z = dot / nf + vj * old;
        let new = penalty.coordinate_update(z, vj, lambda, j);
        if new != old {
            let step = new - old;
            for (r, x) in residual.iter_mut().zip(col.iter()) {
                *r -= step * x;
            }
            beta[j] = new;
            max_delta = max_delta.max(step.abs());
        }
    };
    match subset {
        Some(indices) => {
            for &j in indices {
                visit(j, beta, residual);
            }
        }
        None => {
            for j in 0..cols.len() {
                visit(j, beta, residual);
            }
        }
    }
    max_delta
}

/// Maximum KKT violation of `beta` for the (weighted) lasso at `lambda`:
/// active coordinates check |x_jᵀr/n − λ_j·sign(β_j)|, inactive ones
/// max(0, |x_jᵀr/n| − λ_j). Valid solutions return < 1e-6.
pub fn check_kkt(d: &Dataset, beta: &[f64], lambda: f64, weights: Option<&[f64]>) -> f64 {
    let n = d.n() as f64;
    let mut residual = d.y.to_vec();
    for j in 0..d.p() {
        if beta[j] != 0.0 {
            for (r, x) in residual.iter_mut().zip(d.column(j).iter()) {
                *r -= beta[j] * x;
            }
        }
    }
    let mut worst = 0.0f64;
    for j in 0..d.p() {
        let grad = d
            .column(j)
            .iter()
            .zip(residual.iter())
            .map(|(x, r)| x * r)
            .sum::<f64>()
            / n;
        let lambda_j = lambda * weights.map_or(1.0, |w| w[j]);
        let violation = if beta[j] != 0.0 {
            (grad - lambda_j * beta[j].signum()).abs()
        } else {
            (grad.abs() - lambda_j).max(0.0)
        };
        worst = worst.max(violation);
    }
    worst
}

/// Penalized objective (1/2n)‖y − Xβ‖² + Σ_j penalty(β_j; λ).
pub fn objective(d: &Dataset, beta: &[f64], penalty: &PenaltySpec, lambda: f64) -> f64 {
    let n = d.n();
    let mut rss = 0.0;
    for i in 0..n {
        let mut fit = 0.0;
        for j in 0..d.p() {
            if beta[j] != 0.0 {
                fit += beta[j] * d.column(j)[i];
            }
        }
        rss += (d.y[i] - fit).powi(2);
    }
    let pen: f64 = beta
        .iter()
        .enumerate()
        .map(|(j, b)| penalty.value(*b, lambda, j))
        .sum();
    rss / (2.0 * n as f64) + pen
}

/// Deterministic partition of rows 0..n into `folds` near-equal groups.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut sub_rng(seed, 0));
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        out.push(order[start..start + size].to_vec());
        start += size;
    }
    out
}

/// Cross-validation curve over the default full-data grid.
pub struct CvCurve {
    pub grid: LambdaGrid,
    /// Mean held-out squared prediction error per grid point (pooled over
    /// all held-out rows).
    pub errors: Vec<f64>,
    /// Error-minimizing grid index; ties resolve to the larger lambda.
    pub best_index: usize,
    /// Full-data path on the same grid.
    pub full_path: SolutionPath,
}

/// K-fold cross-validation of the tuning parameter: one shared grid from the
/// full data, per-fold warm-started paths, pooled held-out squared error.
pub fn cv_curve(d: &Dataset, penalty: &PenaltySpec, folds: usize, seed: u64) -> Result<CvCurve> {
    if folds < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 folds, got {folds}")));
    }
    if d.n() < folds {
        return Err(Error::InvalidConfig(format!(
            "cannot split {} rows into {folds} folds",
            d.n()
        )));
    }
    let grid = default_grid(d)?;
    let full_path = fit_path(d, penalty, &grid)?;

    let assignment = fold_assignment(d.n(), folds, seed);
    let mut total_se = vec![0.0f64; grid.len()];
    for held_out in &assignment {
        let mut in_fold = vec![false; d.n()];
        for &i in held_out {
            in_fold[i] = true;
        }
        let train_rows: Vec<usize> = (0..d.n()).filter(|i| !in_fold[*i]).collect();

        let mut x_train = Array2::zeros((train_rows.len(), d.p()).f());
        for j in 0..d.p() {
            let col = d.column(j);
            for (a, &i) in train_rows.iter().enumerate() {
                x_train[[a, j]] = col[i];
            }
        }
        let y_train = Array1::from_iter(train_rows.iter().map(|&i| d.y[i]));
        let train = Dataset {
            y: y_train,
            x: x_train,
            names: d.names.clone(),
        };

        let fold_path = fit_path(&train, penalty, &grid)?;
        for k in 0..grid.len() {
            let beta = fold_path.row(k);
            for &i in held_out {
                let mut fit = 0.0;
                for (j, b) in beta.iter().enumerate() {
                    if *b != 0.0 {
                        fit += b * d.column(j)[i];
                    }
                }
                total_se[k] += (d.y[i] - fit).powi(2);
            }
        }
    }

    let errors: Vec<f64> = total_se.iter().map(|s| s / d.n() as f64).collect();
    let mut best_index = 0;
    for (k, err) in errors.iter().enumerate() {
        if *err < errors[best_index] {
            best_index = k;
        }
    }
    Ok(CvCurve {
        grid,
        errors,
        best_index,
        full_path,
    })
}

/// Maps an initial estimate to adaptive-lasso weights 1/(|b|+1e-6).
pub fn weights_from_init(beta_init: &[f64]) -> Vec<f64> {
    beta_init.iter().map(|b| 1.0 / (b.abs() + WEIGHT_FLOOR)).collect()
}

/// Adaptive-lasso weights from the lasso fit at the 10-fold-CV-optimal
/// lambda, folds derived deterministically from `seed`.
pub fn adaptive_weights(d: &Dataset, seed: u64) -> Result<Vec<f64>> {
    let folds = 10.min(d.n() / 2).max(2);
    let curve = cv_curve(d, &PenaltySpec::lasso(), folds, seed)?;
    Ok(weights_from_init(curve.full_path.row(curve.best_index)))
}

/// Predictions X·β for a coefficient row.
pub fn predict(d: &Dataset, beta: &[f64]) -> Array1<f64> {
    let mut fit = Array1::zeros(d.n());
    for (j, b) in beta.iter().enumerate() {
        if *b != 0.0 {
            fit.scaled_add(*b, &d.x.index_axis(Axis(1), j));
        }
    }
    fit
}
