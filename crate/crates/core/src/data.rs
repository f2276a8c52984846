//! Dataset representation, CSV/JSON ingestion, standardization, and the
//! least-squares solver used by the refit stage.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ShapeBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed-design regression data: response `y` and an n×p covariate matrix.
///
/// The matrix is stored column-major so per-coordinate solver loops can read
/// each column as a contiguous slice.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub y: Array1<f64>,
    pub x: Array2<f64>,
    pub names: Vec<String>,
}

/// Parameters recorded by [`standardize`] so coefficients and data can be
/// mapped back to the original scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StandardizationInfo {
    pub column_means: Vec<f64>,
    pub column_scales: Vec<f64>,
    pub response_mean: f64,
    /// Indices of columns that were constant in the raw data. These are
    /// zeroed with scale 1 and are never selectable.
    pub constant_columns: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct DatasetJson {
    names: Vec<String>,
    y: Vec<f64>,
    #[serde(rename = "X")]
    x: Vec<Vec<f64>>,
}

impl Dataset {
    /// Validates dimensions and finiteness; converts `x` to column-major
    /// storage if needed.
    pub fn new(y: Array1<f64>, x: Array2<f64>, names: Vec<String>) -> Result<Self> {
        let (n, p) = x.dim();
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "response has {} rows but design matrix has {n}",
                y.len()
            )));
        }
        if names.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "{} covariate names for {p} columns",
                names.len()
            )));
        }
        if n < 2 {
            return Err(Error::TooFewRows { needed: 2, found: n });
        }
        if p == 0 {
            return Err(Error::InvalidConfig("dataset needs at least one covariate".into()));
        }
        if let Some(v) = y.iter().chain(x.iter()).find(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite value {v} in dataset")));
        }
        let x = if x.t().is_standard_layout() {
            x
        } else {
            let mut xf = Array2::zeros(x.raw_dim().f());
            xf.assign(&x);
            xf
        };
        Ok(Self { y, x, names })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Column `j` as a contiguous slice.
    pub fn column(&self, j: usize) -> &[f64] {
        self.x
            .column(j)
            .to_slice()
            .expect("design matrix is stored column-major")
    }

    pub fn to_json_string(&self) -> Result<String> {
        let doc = DatasetJson {
            names: self.names.clone(),
            y: self.y.to_vec(),
            x: self.x.rows().into_iter().map(|r| r.to_vec()).collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: DatasetJson = serde_json::from_str(text)?;
        let n = doc.x.len();
        let p = doc.x.first().map_or(0, Vec::len);
        if doc.x.iter().any(|r| r.len() != p) {
            return Err(Error::DimensionMismatch("ragged rows in JSON matrix".into()));
        }
        let mut x = Array2::zeros((n, p).f());
        for (i, row) in doc.x.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                x[[i, j]] = *v;
            }
        }
        Self::new(Array1::from_vec(doc.y), x, doc.names)
    }
}

/// Reads a headered CSV file, taking `response_column` as `y` and all other
/// columns as covariates in header order.
pub fn load_csv(path: impl AsRef<Path>, response_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io {
            path: path.display().to_string(),
            source: match e.into_kind() {
                csv::ErrorKind::Io(io) => io,
                _ => unreachable!(),
            },
        },
        _ => Error::Csv(e.to_string()),
    })?;

    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let response_index = header
        .iter()
        .position(|h| h == response_column)
        .ok_or_else(|| Error::MissingResponse(response_column.to_owned()))?;
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != response_index)
        .map(|(_, h)| h.clone())
        .collect();

    let mut y = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let mut row = Vec::with_capacity(names.len());
        for (j, cell) in record.iter().enumerate() {
            let value: f64 = cell.trim().parse().unwrap_or(f64::NAN);
            if !value.is_finite() {
                return Err(Error::BadCell {
                    row: i + 1,
                    column: header.get(j).cloned().unwrap_or_else(|| format!("#{j}")),
                    value: cell.to_owned(),
                });
            }
            if j == response_index {
                y.push(value);
            } else {
                row.push(value);
            }
        }
        if row.len() != names.len() {
            return Err(Error::Csv(format!(
                "row {} has {} fields, expected {}",
                i + 1,
                record.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    if rows.len() < 2 {
        return Err(Error::TooFewRows { needed: 2, found: rows.len() });
    }

    let (n, p) = (rows.len(), names.len());
    let mut x = Array2::zeros((n, p).f());
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            x[[i, j]] = *v;
        }
    }
    Dataset::new(Array1::from_vec(y), x, names)
}

/// Writes the dataset as a headered CSV with the response under
/// `response_column` followed by covariates in order. Values round-trip
/// exactly through [`load_csv`].
pub fn write_csv(d: &Dataset, path: impl AsRef<Path>, response_column: &str) -> Result<()> {
    let path = path.as_ref();
    let io_err = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        source: e,
    };
    let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => io_err(io),
        other => Error::Csv(format!("{other:?}")),
    })?;
    let mut header = vec![response_column.to_owned()];
    header.extend(d.names.iter().cloned());
    writer.write_record(&header).map_err(|e| Error::Csv(e.to_string()))?;
    for i in 0..d.n() {
        let mut record = vec![d.y[i].to_string()];
        record.extend((0..d.p()).map(|j| d.x[[i, j]].to_string()));
        writer.write_record(&record).map_err(|e| Error::Csv(e.to_string()))?;
    }
    writer.flush().map_err(io_err)
}

/// Centers every column and scales it to unit sample standard deviation
/// (divisor n−1). Constant columns are zeroed with scale 1 and flagged.
/// If `center_response`, `y` is centered and its mean recorded.
pub fn standardize(d: &Dataset, center_response: bool) -> (Dataset, StandardizationInfo) {
    let (n, p) = (d.n(), d.p());
    let mut x = Array2::zeros((n, p).f());
    let mut column_means = Vec::with_capacity(p);
    let mut column_scales = Vec::with_capacity(p);
    let mut constant_columns = Vec::new();

    for j in 0..p {
        let col = d.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let ss: f64 = col.iter().map(|v| (v - mean).powi(2)).sum();
        let sd = (ss / (n - 1) as f64).sqrt();
        let magnitude = col.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if sd < 1e-12 * magnitude {
            constant_columns.push(j);
            column_means.push(mean);
            column_scales.push(1.0);
        } else {
            column_means.push(mean);
            column_scales.push(sd);
            for i in 0..n {
                x[[i, j]] = (col[i] - mean) / sd;
            }
        }
    }

    let response_mean = if center_response {
        d.y.iter().sum::<f64>() / n as f64
    } else {
        0.0
    };
    let y = d.y.mapv(|v| v - response_mean);

    let standardized = Dataset {
        y,
        x,
        names: d.names.clone(),
    };
    let info = StandardizationInfo {
        column_means,
        column_scales,
        response_mean,
        constant_columns,
    };
    (standardized, info)
}

impl StandardizationInfo {
    /// Inverse of [`standardize`]: maps a standardized dataset back to the
    /// original scale.
    pub fn unstandardize(&self, d: &Dataset) -> Dataset {
        let (n, p) = (d.n(), d.p());
        let mut x = Array2::zeros((n, p).f());
        for j in 0..p {
            let col = d.column(j);
            for i in 0..n {
                x[[i, j]] = col[i] * self.column_scales[j] + self.column_means[j];
            }
        }
        Dataset {
            y: d.y.mapv(|v| v + self.response_mean),
            x,
            names: d.names.clone(),
        }
    }
}

/// Least-squares fit of `y` on the columns of `x_sub` via Householder QR.
///
/// Errors with [`Error::SingularSystem`] when a pivot falls below
/// `1e-10 ·` (largest column norm), signalling a rank-deficient model.
pub fn ols_solve(x_sub: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<Array1<f64>> {
    qr_least_squares(x_sub, y, false).map(|(beta, _)| beta)
}

/// Like [`ols_solve`] but also returns the diagonal of (XᵀX)⁻¹, needed for
/// classical per-coordinate standard errors.
pub fn ols_solve_with_cov(
    x_sub: ArrayView2<f64>,
    y: ArrayView1<f64>,
) -> Result<(Array1<f64>, Array1<f64>)> {
    qr_least_squares(x_sub, y, true).map(|(beta, diag)| (beta, diag.unwrap()))
}

fn qr_least_squares(
    x_sub: ArrayView2<f64>,
    y: ArrayView1<f64>,
    want_cov_diag: bool,
) -> Result<(Array1<f64>, Option<Array1<f64>>)> {
    let (n, k) = x_sub.dim();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{}-row response against a {n}-row design",
            y.len()
        )));
    }
    if k > n {
        return Err(Error::DimensionMismatch(format!(
            "cannot fit {k} coefficients from {n} observations"
        )));
    }
    if k == 0 {
        let diag = want_cov_diag.then(|| Array1::zeros(0));
        return Ok((Array1::zeros(0), diag));
    }

    let mut cols: Vec<Vec<f64>> = (0..k).map(|j| x_sub.column(j).to_vec()).collect();
    let mut rhs = y.to_vec();
    let max_norm = cols
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max);
    let tolerance = 1e-10 * max_norm;

    let mut rdiag = vec![0.0; k];
    for step in 0..k {
        let (left, right) = cols.split_at_mut(step + 1);
        let colk = &mut left[step];
        let pivot = colk[step..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if pivot <= tolerance {
            return Err(Error::SingularSystem {
                column: step,
                pivot,
                tolerance,
            });
        }
        let alpha = if colk[step] >= 0.0 { -pivot } else { pivot };
        colk[step] -= alpha;
        let vnorm2: f64 = colk[step..].iter().map(|v| v * v).sum();
        let reflect = |target: &mut [f64]| {
            let dot: f64 = colk[step..]
                .iter()
                .zip(target.iter())
                .map(|(v, t)| v * t)
                .sum();
            let coef = 2.0 * dot / vnorm2;
            for (t, v) in target.iter_mut().zip(colk[step..].iter()) {
                *t -= coef * v;
            }
        };
        for col in right.iter_mut() {
            reflect(&mut col[step..]);
        }
        reflect(&mut rhs[step..]);
        rdiag[step] = alpha;
    }

    // Upper triangle: R[i][j] = cols[j][i] for i < j, diagonal in rdiag.
    let r = |i: usize, j: usize| if i == j { rdiag[i] } else { cols[j][i] };

    let mut beta = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = rhs[i];
        for j in i + 1..k {
            s -= r(i, j) * beta[j];
        }
        beta[i] = s / rdiag[i];
    }

    let diag = if want_cov_diag {
        // (XᵀX)⁻¹ = R⁻¹R⁻ᵀ, so the i-th diagonal entry is ‖w‖² with Rᵀw = eᵢ.
        let mut diag = vec![0.0; k];
        let mut w = vec![0.0; k];
        for i in 0..k {
            for a in i..k {
                let mut s = if a == i { 1.0 } else { 0.0 };
                for b in i..a {
                    s -= r(b, a) * w[b];
                }
                w[a] = s / rdiag[a];
            }
            diag[i] = w[i..].iter().map(|v| v * v).sum();
        }
        Some(Array1::from_vec(diag))
    } else {
        None
    };

    Ok((Array1::from_vec(beta), diag))
}
