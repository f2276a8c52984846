//! Data-generating processes and the Monte-Carlo study driver: builtin
//! example designs, AR(1) Gaussian covariate generation, per-replicate
//! coverage/width evaluation, and aggregation into study metrics.

use ndarray::{Array1, Array2, ShapeBuilder};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bootstrap::run_ensemble;
use crate::data::{standardize, Dataset, StandardizationInfo};
use crate::error::{Error, Result};
use crate::par::{par_map_indexed, with_workers};
use crate::rng::{derive_seed, sub_rng};
use crate::select::{two_stage, SelectorSpec};
use crate::ssci::{
    build_ssci, classify, mcb_from_ssci, oracle_bonferroni_sci, McbResult, SsciResult,
};

/// Default Monte-Carlo repetition count for desk-scale studies. Full-scale
/// runs use 1000; pass a larger value to scale up.
pub const DEFAULT_MC: usize = 200;
/// Default bootstrap replicate count for desk-scale studies. Full-scale
/// runs use 1000 or more.
pub const DEFAULT_B: usize = 500;

/// One simulation design: dimensions, true coefficients, covariate
/// correlation, and noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleSpec {
    pub n: usize,
    pub p: usize,
    /// Length-p true coefficient vector.
    pub beta0: Vec<f64>,
    /// Lag-1 correlation of the covariate process; columns j and j'
    /// correlate as rho^|j−j'|.
    pub rho: f64,
    /// Error standard deviation.
    pub sigma: f64,
    /// Number of nonzero true coefficients.
    pub s0: usize,
    /// Coordinate of the individually tracked weak signal, if the design
    /// has one.
    pub theta_index: Option<usize>,
}

impl ExampleSpec {
    pub fn new(
        n: usize,
        p: usize,
        beta0: Vec<f64>,
        rho: f64,
        sigma: f64,
        theta_index: Option<usize>,
    ) -> Result<Self> {
        if beta0.len() != p {
            return Err(Error::InvalidConfig(format!(
                "beta0 has {} entries but p = {p}",
                beta0.len()
            )));
        }
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::InvalidConfig(format!(
                "rho must lie in [0,1), got {rho}"
            )));
        }
        if sigma <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if let Some(t) = theta_index {
            if t >= p {
                return Err(Error::InvalidConfig(format!(
                    "theta index {t} out of range for p = {p}"
                )));
            }
        }
        let s0 = beta0.iter().filter(|b| **b != 0.0).count();
        Ok(ExampleSpec {
            n,
            p,
            beta0,
            rho,
            sigma,
            s0,
            theta_index,
        })
    }

    /// Indices of the nonzero true coefficients, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.beta0
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, _)| j)
            .collect()
    }
}

fn padded(head: &[f64], p: usize) -> Vec<f64> {
    let mut beta = vec![0.0; p];
    beta[..head.len()].copy_from_slice(head);
    beta
}

/// The ten builtin study designs.
///
/// 1–4: high-dimensional settings (unit noise); 5–7: weak-signal settings
/// (n=100, p=20, σ=2, θ=0.3 in coordinate 4); 8–10: higher p/n ratio and a
/// denser true model.
pub fn builtin_example(id: usize) -> Result<ExampleSpec> {
    match id {
        1 => ExampleSpec::new(200, 300, padded(&[4.0, 3.5, 3.0, 2.5, 2.0], 300), 0.0, 1.0, None),
        2 => ExampleSpec::new(50, 100, padded(&[3.0, 2.0, 1.5], 100), 0.5, 1.0, None),
        3 => ExampleSpec::new(200, 300, padded(&[3.0, 2.0, 1.5], 300), 0.5, 1.0, None),
        4 => ExampleSpec::new(
            200,
            300,
            padded(&[0.9, -0.85, 0.93, -1.0, 0.8, -0.85, 0.88], 300),
            0.5,
            1.0,
            None,
        ),
        5 => ExampleSpec::new(100, 20, padded(&[1.0, 1.0, 0.5, 0.3], 20), 0.0, 2.0, Some(3)),
        6 => ExampleSpec::new(100, 20, padded(&[1.0, 1.0, 0.5, 0.3], 20), 0.2, 2.0, Some(3)),
        7 => ExampleSpec::new(100, 20, padded(&[1.0, 1.0, 0.5, 0.3], 20), 0.5, 2.0, Some(3)),
        8 => ExampleSpec::new(50, 300, padded(&[3.0, 2.0, 2.0], 300), 0.0, 1.0, None),
        9 => ExampleSpec::new(50, 150, padded(&[3.0, 2.0, 1.5], 150), 0.5, 1.0, None),
        10 => ExampleSpec::new(100, 150, padded(&[2.0; 15], 150), 0.0, 1.0, None),
        _ => Err(Error::UnknownExample(id)),
    }
}

/// Draws one dataset from the design: covariates are a Gaussian AR(1)
/// process across columns (x_1 = z_1, x_j = ρ·x_{j−1} + √(1−ρ²)·z_j, so
/// every column is marginally N(0,1)), the response is Xβ⁰ plus N(0,σ²)
/// noise, and the result is standardized. Returns the standardized dataset,
/// the true coefficients on the generated scale, and the standardization
/// parameters needed to map intervals back to that scale.
pub fn generate_dataset(
    spec: &ExampleSpec,
    rng: &mut ChaCha8Rng,
) -> (Dataset, Vec<f64>, StandardizationInfo) {
    let (n, p) = (spec.n, spec.p);
    let mut x = Array2::zeros((n, p).f());
    let innovation_scale = (1.0 - spec.rho * spec.rho).sqrt();
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            let v = if j == 0 {
                z
            } else {
                spec.rho * prev + innovation_scale * z
            };
            x[[i, j]] = v;
            prev = v;
        }
    }

    let support = spec.support();
    let mut y = Array1::zeros(n);
    for i in 0..n {
        let mut fit = 0.0;
        for &j in &support {
            fit += x[[i, j]] * spec.beta0[j];
        }
        let noise: f64 = rng.sample(StandardNormal);
        y[i] = fit + spec.sigma * noise;
    }

    let names = (0..p).map(|j| format!("x{}", j + 1)).collect();
    let raw = Dataset::new(y, x, names).expect("generated data is finite and well-shaped");
    let (standardized, info) = standardize(&raw, true);
    (standardized, spec.beta0.clone(), info)
}

/// Coverage and width indicators for a single replicate. Intervals must be
/// on the same scale as the design's true coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationOutcome {
    /// Every coordinate's interval contains its true coefficient.
    pub sci_cover: bool,
    /// Mean interval width over the true support (0 when the support is
    /// empty).
    pub w_signal: f64,
    /// Mean interval width off the support.
    pub w_noise: f64,
    /// lower_model ⊆ true support ⊆ upper_model.
    pub mcb_cover: bool,
    pub mcb_width: usize,
    /// The weak-signal coordinate's interval contains its coefficient.
    pub theta_cover: Option<bool>,
}

pub fn evaluate_replication(
    spec: &ExampleSpec,
    ssci: &SsciResult,
    mcb: &McbResult,
) -> ReplicationOutcome {
    let p = spec.p;
    let sci_cover =
        (0..p).all(|j| ssci.lower[j] <= spec.beta0[j] && spec.beta0[j] <= ssci.upper[j]);

    let mut signal_width = 0.0;
    let mut noise_width = 0.0;
    for j in 0..p {
        let w = ssci.upper[j] - ssci.lower[j];
        if spec.beta0[j] != 0.0 {
            signal_width += w;
        } else {
            noise_width += w;
        }
    }
    let w_signal = if spec.s0 > 0 {
        signal_width / spec.s0 as f64
    } else {
        0.0
    };
    let w_noise = if p > spec.s0 {
        noise_width / (p - spec.s0) as f64
    } else {
        0.0
    };

    let support = spec.support();
    let mcb_cover = mcb.lower_model.iter().all(|j| spec.beta0[*j] != 0.0)
        && support.iter().all(|j| mcb.upper_model.contains(j));

    let theta_cover = spec
        .theta_index
        .map(|t| ssci.lower[t] <= spec.beta0[t] && spec.beta0[t] <= ssci.upper[t]);

    ReplicationOutcome {
        sci_cover,
        w_signal,
        w_noise,
        mcb_cover,
        mcb_width: mcb.width,
        theta_cover,
    }
}

/// Monte-Carlo standard errors for each aggregated metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSe {
    pub sci_coverage: f64,
    pub w_signal: f64,
    pub w_noise: f64,
    pub mcb_coverage: f64,
    pub mcb_width: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_coverage: Option<f64>,
}

/// Aggregated study metrics over MC replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub sci_coverage: f64,
    pub w_signal: f64,
    pub w_noise: f64,
    pub mcb_coverage: f64,
    pub mcb_width: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_coverage: Option<f64>,
    pub mc_se: McSe,
    #[serde(rename = "MC")]
    pub mc: usize,
}

impl SimMetrics {
    /// One CSV row per metric: `example,method,metric,value,mc_se`, header
    /// included.
    pub fn csv_rows(&self, example: &str, method: &str) -> String {
        let mut out = String::from("example,method,metric,value,mc_se\n");
        let mut push = |metric: &str, value: f64, se: f64| {
            out.push_str(&format!("{example},{method},{metric},{value},{se}\n"));
        };
        push("sci_coverage", self.sci_coverage, self.mc_se.sci_coverage);
        push("w_signal", self.w_signal, self.mc_se.w_signal);
        push("w_noise", self.w_noise, self.mc_se.w_noise);
        push("mcb_coverage", self.mcb_coverage, self.mc_se.mcb_coverage);
        push("mcb_width", self.mcb_width, self.mc_se.mcb_width);
        if let Some(t) = self.theta_coverage {
            push("theta_coverage", t, self.mc_se.theta_coverage.unwrap_or(0.0));
        }
        out
    }
}

fn proportion(hits: impl Iterator<Item = bool>, mc: usize) -> (f64, f64) {
    let count = hits.filter(|h| *h).count() as f64;
    let phat = count / mc as f64;
    let se = (phat * (1.0 - phat) / mc as f64).sqrt();
    (phat, se)
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn aggregate(outcomes: &[ReplicationOutcome]) -> SimMetrics {
    let mc = outcomes.len();
    let (sci_coverage, sci_se) = proportion(outcomes.iter().map(|o| o.sci_cover), mc);
    let (mcb_coverage, mcb_se) = proportion(outcomes.iter().map(|o| o.mcb_cover), mc);
    let signal_widths: Vec<f64> = outcomes.iter().map(|o| o.w_signal).collect();
    let noise_widths: Vec<f64> = outcomes.iter().map(|o| o.w_noise).collect();
    let mcb_widths: Vec<f64> = outcomes.iter().map(|o| o.mcb_width as f64).collect();
    let (w_signal, w_signal_se) = mean_and_se(&signal_widths);
    let (w_noise, w_noise_se) = mean_and_se(&noise_widths);
    let (mcb_width, mcb_width_se) = mean_and_se(&mcb_widths);

    let has_theta = outcomes.iter().all(|o| o.theta_cover.is_some());
    let (theta_coverage, theta_se) = if has_theta && mc > 0 {
        let (t, se) = proportion(outcomes.iter().map(|o| o.theta_cover.unwrap()), mc);
        (Some(t), Some(se))
    } else {
        (None, None)
    };

    SimMetrics {
        sci_coverage,
        w_signal,
        w_noise,
        mcb_coverage,
        mcb_width,
        theta_coverage,
        mc_se: McSe {
            sci_coverage: sci_se,
            w_signal: w_signal_se,
            w_noise: w_noise_se,
            mcb_coverage: mcb_se,
            mcb_width: mcb_width_se,
            theta_coverage: theta_se,
        },
        mc,
    }
}

fn replicate_once(
    spec: &ExampleSpec,
    selector: &SelectorSpec,
    b: usize,
    alpha: f64,
    seed: u64,
    r: usize,
) -> Result<ReplicationOutcome> {
    let mut data_rng = sub_rng(derive_seed(seed, 1, r as u64), 0);
    let (d, _beta0, info) = generate_dataset(spec, &mut data_rng);
    let base = two_stage(&d, selector)?;
    let ens = run_ensemble(&d, &base, selector, b, derive_seed(seed, 2, r as u64))?;
    let ssci = build_ssci(&ens, alpha)?.to_original_scale(&info.column_scales);
    let mcb = mcb_from_ssci(&ssci);
    Ok(evaluate_replication(spec, &ssci, &mcb))
}

/// Runs MC independent replicates of the full pipeline (generate → select →
/// bootstrap → intervals) and aggregates coverage and width metrics.
/// Replicate streams are derived from the seed alone, so the result is
/// identical for any worker count.
pub fn run_study(
    spec: &ExampleSpec,
    selector: &SelectorSpec,
    mc: usize,
    b: usize,
    alpha: f64,
    seed: u64,
    workers: usize,
) -> Result<SimMetrics> {
    if mc < 1 {
        return Err(Error::InvalidConfig(format!(
            "need at least 1 replicate, got {mc}"
        )));
    }
    let outcomes = with_workers(workers, || {
        par_map_indexed(mc, |r| replicate_once(spec, selector, b, alpha, seed, r))
    });
    let mut collected = Vec::with_capacity(mc);
    for (r, outcome) in outcomes.into_iter().enumerate() {
        collected.push(outcome.map_err(|e| Error::StudyReplicateFailed {
            replicate: r + 1,
            source: Box::new(e),
        })?);
    }
    Ok(aggregate(&collected))
}

fn oracle_once(spec: &ExampleSpec, alpha: f64, seed: u64, r: usize) -> Result<ReplicationOutcome> {
    let mut data_rng = sub_rng(derive_seed(seed, 1, r as u64), 0);
    let (d, _beta0, info) = generate_dataset(spec, &mut data_rng);
    let intervals = oracle_bonferroni_sci(&d, &spec.support(), alpha)?;
    let lower: Vec<f64> = intervals.iter().map(|iv| iv.0).collect();
    let upper: Vec<f64> = intervals.iter().map(|iv| iv.1).collect();
    let classes = lower
        .iter()
        .zip(upper.iter())
        .map(|(&lo, &hi)| classify(lo, hi))
        .collect();
    let ssci = SsciResult {
        alpha,
        lower,
        upper,
        retained: vec![],
        q: 0.0,
        classes,
    }
    .to_original_scale(&info.column_scales);
    let mcb = mcb_from_ssci(&ssci);
    Ok(evaluate_replication(spec, &ssci, &mcb))
}

/// Reference study: Bonferroni-adjusted t-intervals on the known true
/// support, zero intervals elsewhere. Uses the same per-replicate data
/// streams as [`run_study`], so both see identical datasets for a given
/// seed.
pub fn run_oracle_study(
    spec: &ExampleSpec,
    mc: usize,
    alpha: f64,
    seed: u64,
    workers: usize,
) -> Result<SimMetrics> {
    if mc < 1 {
        return Err(Error::InvalidConfig(format!(
            "need at least 1 replicate, got {mc}"
        )));
    }
    let outcomes = with_workers(workers, || {
        par_map_indexed(mc, |r| oracle_once(spec, alpha, seed, r))
    });
    let mut collected = Vec::with_capacity(mc);
    for (r, outcome) in outcomes.into_iter().enumerate() {
        collected.push(outcome.map_err(|e| Error::StudyReplicateFailed {
            replicate: r + 1,
            source: Box::new(e),
        })?);
    }
    Ok(aggregate(&collected))
}
