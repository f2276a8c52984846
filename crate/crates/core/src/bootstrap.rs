//! Residual bootstrap of the two-stage estimator: resample centered refit
//! residuals, rebuild the response, rerun selection + refit, and collect the
//! draws into a deterministic ensemble.

use ndarray::Array1;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::par::par_map_indexed;
use crate::path::predict;
use crate::rng::sub_rng;
use crate::select::{two_stage, SelectedModel, SelectorSpec};

/// One bootstrap replicate: the reselected model and its refit estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapDraw {
    /// Selected covariates of this replicate, ascending 0-based indices.
    pub model: Vec<usize>,
    /// Refit coefficients, zeros off `model`.
    pub beta: Vec<f64>,
    /// 1-based replicate number.
    pub replicate_id: usize,
}

/// All draws of one bootstrap run plus the base fit they resample around.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapEnsemble {
    pub draws: Vec<BootstrapDraw>,
    pub base_model: SelectedModel,
    pub seed: u64,
    /// Number of bootstrap replicates.
    #[serde(rename = "B")]
    pub b: usize,
}

impl BootstrapEnsemble {
    pub fn to_json_string(&self) -> Result<String> {
        let doc = serde_json::json!({
            "seed": self.seed,
            "B": self.b,
            "draws": self.draws.iter().map(|d| {
                serde_json::json!({ "model": d.model, "beta": d.beta })
            }).collect::<Vec<_>>(),
        });
        Ok(serde_json::to_string(&doc)?)
    }
}

/// Fitted values and centered residuals of the base model, shared by all
/// replicates of a run.
struct ResidualPool {
    fitted: Vec<f64>,
    centered: Vec<f64>,
}

impl ResidualPool {
    fn new(d: &Dataset, base: &SelectedModel) -> Self {
        let fitted: Vec<f64> = predict(d, &base.beta_refit).to_vec();
        let raw: Vec<f64> = d
            .y
            .iter()
            .zip(fitted.iter())
            .map(|(y, f)| y - f)
            .collect();
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        let centered = raw.iter().map(|r| r - mean).collect();
        Self { fitted, centered }
    }

    /// y^(b) = fitted + residuals resampled with replacement.
    fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        let n = self.fitted.len();
        (0..n)
            .map(|i| self.fitted[i] + self.centered[rng.random_range(0..n)])
            .collect()
    }
}

/// A single resampled response vector y^(b) = Xβ̃ + ε̃^(b), where ε̃^(b)
/// draws n values with replacement from the centered refit residuals.
pub fn residual_bootstrap_sample(
    d: &Dataset,
    base: &SelectedModel,
    rng: &mut impl Rng,
) -> Vec<f64> {
    ResidualPool::new(d, base).sample(rng)
}

const MAX_ATTEMPTS: usize = 4;

/// Runs `b` bootstrap replicates of the two-stage estimator. Replicate `i`
/// draws from its own counter-based stream, so the result is bit-identical
/// for fixed inputs regardless of worker count. A replicate whose refit
/// fails is redrawn from a derived retry stream up to 3 times, then the run
/// errors.
pub fn run_ensemble(
    d: &Dataset,
    base: &SelectedModel,
    selector: &SelectorSpec,
    b: usize,
    seed: u64,
) -> Result<BootstrapEnsemble> {
    if b < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 bootstrap replicates, got {b}"
        )));
    }
    let pool = ResidualPool::new(d, base);

    let draws: Result<Vec<BootstrapDraw>> = par_map_indexed(b, |i| {
        let mut last_err = None;
        for attempt in 0..MAX_ATTEMPTS {
            let stream = 1 + i as u64 + ((attempt as u64) << 32);
            let mut rng = sub_rng(seed, stream);
            let y_b = pool.sample(&mut rng);
            let replicate = Dataset {
                y: Array1::from_vec(y_b),
                x: d.x.clone(),
                names: d.names.clone(),
            };
            match two_stage(&replicate, selector) {
                Ok(model) => {
                    return Ok(BootstrapDraw {
                        model: model.indices,
                        beta: model.beta_refit,
                        replicate_id: i + 1,
                    });
                }
                Err(e) => last_err = Some(e),
            }
        }
        Err(Error::ReplicateFailed {
            replicate: i + 1,
            attempts: MAX_ATTEMPTS,
            source: Box::new(last_err.expect("at least one attempt ran")),
        })
    })
    .into_iter()
    .collect();

    Ok(BootstrapEnsemble {
        draws: draws?,
        base_model: base.clone(),
        seed,
        b,
    })
}
