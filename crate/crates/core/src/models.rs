//! Polynomial drift models, quality weighting and coasting evaluation.
//!
//! A model is fitted by weighted least squares on a fit window and then
//! extrapolated ("coasted") across the following window, where its accuracy
//! is the RMSE against the measured offsets.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timeseries::{MeasurementSeries, CADENCE_TOLERANCE_S};

pub const MAX_DEGREE: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("missing metadata: {0}")]
    Metadata(String),
    #[error("sample {index} has zero weight")]
    ZeroWeight { index: usize },
    #[error("degree {0} outside 1..=4")]
    Degree(usize),
    #[error("fit is rank deficient: {0}")]
    RankDeficient(String),
    #[error("invalid scheme: {0}")]
    Scheme(String),
    #[error("windows are not contiguous: {0}")]
    Windows(String),
}

/// How each fit sample is weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightScheme {
    Uniform,
    /// `n_vis / n_max`.
    VisnumRatio {
        n_max: u32,
    },
    /// `1 / tdop`.
    InverseTdop,
}

impl WeightScheme {
    /// Position in the fixed tie-break order: uniform, visnum, inverse TDOP.
    fn rank(&self) -> u8 {
        match self {
            WeightScheme::Uniform => 0,
            WeightScheme::VisnumRatio { .. } => 1,
            WeightScheme::InverseTdop => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            WeightScheme::Uniform => "uniform",
            WeightScheme::VisnumRatio { .. } => "visnum",
            WeightScheme::InverseTdop => "inv_tdop",
        }
    }
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Scheme kind as named on the command line, before `n_max` is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Uniform,
    Visnum,
    InverseTdop,
}

impl SchemeKind {
    pub fn with_n_max(self, n_max: u32) -> WeightScheme {
        match self {
            SchemeKind::Uniform => WeightScheme::Uniform,
            SchemeKind::Visnum => WeightScheme::VisnumRatio { n_max },
            SchemeKind::InverseTdop => WeightScheme::InverseTdop,
        }
    }
}

impl FromStr for SchemeKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "uniform" | "linear" => Ok(SchemeKind::Uniform),
            "visnum" | "satnum" | "visnum_ratio" => Ok(SchemeKind::Visnum),
            "inv_tdop" | "tdop" | "inverse_tdop" => Ok(SchemeKind::InverseTdop),
            other => Err(ModelError::Scheme(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Per-sample weights for `series` under `scheme`; every weight is positive.
pub fn weights_for(series: &MeasurementSeries, scheme: &WeightScheme) -> Result<Vec<f64>, ModelError> {
    match *scheme {
        WeightScheme::Uniform => Ok(vec![1.0; series.len()]),
        WeightScheme::InverseTdop => series
            .samples()
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.tdop
                    .map(|t| 1.0 / t)
                    .ok_or_else(|| ModelError::Metadata(format!("sample {i} (t={}) has no tdop", s.t_rel_s())))
            })
            .collect(),
        WeightScheme::VisnumRatio { n_max } => {
            if n_max == 0 {
                return Err(ModelError::Scheme("n_max must be positive".into()));
            }
            series
                .samples()
                .iter()
                .enumerate()
                .map(|(index, s)| {
                    if s.n_vis > n_max {
                        Err(ModelError::Scheme(format!("n_vis {} at sample {index} exceeds n_max {n_max}", s.n_vis)))
                    } else if s.n_vis == 0 {
                        Err(ModelError::ZeroWeight { index })
                    } else {
                        Ok(f64::from(s.n_vis) / f64::from(n_max))
                    }
                })
                .collect()
        }
    }
}

/// Fitted drift polynomial in ascending powers of `t_rel − t_ref_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftModel {
    pub degree: usize,
    /// `c_k` in ns/s^k.
    #[serde(rename = "coeffs_ns_per_s_pow")]
    pub coeffs: Vec<f64>,
    pub scheme: WeightScheme,
    pub t_ref_s: f64,
    pub n_fit: usize,
}

impl DriftModel {
    pub fn predict(&self, t_rel_s: f64) -> f64 {
        let dt = t_rel_s - self.t_ref_s;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * dt + c)
    }
}

/// Predicted offset at `t_rel_s`, in ns.
pub fn predict(model: &DriftModel, t_rel_s: f64) -> f64 {
    model.predict(t_rel_s)
}

/// Weighted least-squares polynomial fit with explicit weights.
///
/// Times are mapped to `[-1, 1]` over the window before forming the normal
/// equations, which are solved by Cholesky; the coefficients are then
/// re-expanded about `t_ref_s` (the first sample time).
pub fn fit_weighted(
    times: &[f64],
    values: &[f64],
    weights: &[f64],
    degree: usize,
) -> Result<(f64, Vec<f64>), ModelError> {
    if !(1..=MAX_DEGREE).contains(&degree) {
        return Err(ModelError::Degree(degree));
    }
    assert_eq!(times.len(), values.len());
    assert_eq!(times.len(), weights.len());
    if let Some(index) = weights.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(ModelError::ZeroWeight { index });
    }
    let mut distinct: Vec<f64> = times.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < degree + 1 {
        return Err(ModelError::RankDeficient(format!("{} distinct times for degree {degree}", distinct.len())));
    }

    let t_ref = times[0];
    let lo = distinct[0];
    let hi = distinct[distinct.len() - 1];
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let m = degree + 1;

    let mut normal = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    let mut powers = vec![0.0; 2 * m - 1];
    for ((&t, &y), &w) in times.iter().zip(values).zip(weights) {
        let u = (t - center) / half;
        let mut p = 1.0;
        for pw in powers.iter_mut() {
            *pw = p;
            p *= u;
        }
        for i in 0..m {
            rhs[i] += w * powers[i] * y;
            for j in 0..m {
                normal[(i, j)] += w * powers[i + j];
            }
        }
    }
    let chol = normal
        .clone()
        .cholesky()
        .ok_or_else(|| ModelError::RankDeficient("normal matrix is not positive definite".into()))?;
    let b = chol.solve(&rhs);

    // Σ b_k ((t − center)/half)^k  →  Σ c_j (t − t_ref)^j with s = t − t_ref:
    // (t − center) = s − shift, shift = center − t_ref.
    let shift = center - t_ref;
    let mut coeffs = vec![0.0; m];
    for (k, bk) in b.iter().enumerate() {
        let scale = bk / half.powi(k as i32);
        for (j, c) in coeffs.iter_mut().enumerate().take(k + 1) {
            *c += scale * binomial(k, j) * (-shift).powi((k - j) as i32);
        }
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(ModelError::RankDeficient("non-finite coefficients".into()));
    }
    Ok((t_ref, coeffs))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Fits a degree-`degree` drift model to the whole series under `scheme`.
pub fn fit(series: &MeasurementSeries, degree: usize, scheme: WeightScheme) -> Result<DriftModel, ModelError> {
    if !(1..=MAX_DEGREE).contains(&degree) {
        return Err(ModelError::Degree(degree));
    }
    let weights = weights_for(series, &scheme)?;
    let times: Vec<f64> = series.times().collect();
    let values: Vec<f64> = series.offsets().collect();
    let (t_ref_s, coeffs) = fit_weighted(&times, &values, &weights, degree)?;
    Ok(DriftModel { degree, coeffs, scheme, t_ref_s, n_fit: series.len() })
}

/// Root-mean-square prediction error over `truth`, in ns.
pub fn coast_rmse(model: &DriftModel, truth: &MeasurementSeries) -> f64 {
    let sse: f64 = truth.samples().iter().map(|s| (model.predict(s.t_rel_s()) - s.offset_ns).powi(2)).sum();
    (sse / truth.len() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoastRow {
    pub degree: usize,
    pub scheme: WeightScheme,
    pub rmse_ns: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub model: Option<DriftModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoastReport {
    /// Time from the last fit sample to the last coast sample.
    pub horizon_s: f64,
    pub n_fit: usize,
    pub n_coast: usize,
    /// Successful rows by ascending RMSE, then failed rows.
    pub rows: Vec<CoastRow>,
}

impl CoastReport {
    /// CSV with header `degree,scheme,rmse_ns`; failed rows have an empty RMSE.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("degree,scheme,rmse_ns\n");
        for r in &self.rows {
            let _ = write!(out, "{},{},", r.degree, r.scheme);
            if let Some(v) = r.rmse_ns {
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn best(&self) -> Option<&CoastRow> {
        self.rows.first().filter(|r| r.rmse_ns.is_some())
    }

    pub fn rmse(&self, degree: usize, scheme_name: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.degree == degree && r.scheme.name() == scheme_name).and_then(|r| r.rmse_ns)
    }
}

/// Fits every `(degree, scheme)` pair on `fit_window`, scores each on
/// `coast_window`, and ranks them. Fit failures stay in the report as rows
/// carrying the error message.
pub fn model_select(
    fit_window: &MeasurementSeries,
    coast_window: &MeasurementSeries,
    degrees: &[usize],
    schemes: &[WeightScheme],
) -> Result<CoastReport, ModelError> {
    if fit_window.cadence_s() != coast_window.cadence_s() {
        return Err(ModelError::Windows("fit and coast cadences differ".into()));
    }
    let gap = coast_window.first().t_rel_s() - fit_window.last().t_rel_s();
    match fit_window.cadence_s() {
        Some(c) if (gap - c).abs() > CADENCE_TOLERANCE_S => {
            return Err(ModelError::Windows(format!("coast starts {gap} s after fit end, cadence {c} s")));
        }
        _ if gap <= 0.0 => return Err(ModelError::Windows("coast window overlaps fit window".into())),
        _ => {}
    }

    let mut rows: Vec<CoastRow> = Vec::with_capacity(degrees.len() * schemes.len());
    for &degree in degrees {
        for scheme in schemes {
            let row = match fit(fit_window, degree, *scheme) {
                Ok(model) => CoastRow {
                    degree,
                    scheme: *scheme,
                    rmse_ns: Some(coast_rmse(&model, coast_window)),
                    error: None,
                    model: Some(model),
                },
                Err(e) => CoastRow { degree, scheme: *scheme, rmse_ns: None, error: Some(e.to_string()), model: None },
            };
            rows.push(row);
        }
    }
    rows.sort_by(|a, b| {
        let key = |r: &CoastRow| r.rmse_ns.unwrap_or(f64::INFINITY);
        a.rmse_ns
            .is_none()
            .cmp(&b.rmse_ns.is_none())
            .then(key(a).total_cmp(&key(b)))
            .then(a.degree.cmp(&b.degree))
            .then(a.scheme.rank().cmp(&b.scheme.rank()))
    });
    Ok(CoastReport {
        horizon_s: coast_window.last().t_rel_s() - fit_window.last().t_rel_s(),
        n_fit: fit_window.len(),
        n_coast: coast_window.len(),
        rows,
    })
}
