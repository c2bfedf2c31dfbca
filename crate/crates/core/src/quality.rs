//! Measurement-quality metrics over repeated datasets of one scenario.
//!
//! Replicates recorded under identical conditions are differenced pairwise;
//! the spread of those differences, stratified by visible-satellite count or
//! TDOP range, measures how consistently the receiver delivered GPS time.
//! Variances are reported in ns² because offsets are stored in ns.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timeseries::{MeasurementSeries, CADENCE_TOLERANCE_S};

/// Default TDOP bin edges.
pub const DEFAULT_TDOP_THRESHOLDS: [f64; 2] = [1.25, 2.0];

#[derive(Debug, Error, PartialEq)]
pub enum QualityError {
    #[error("noise variance needs at least 2 values, got {0}")]
    InsufficientData(usize),
    #[error("at least 2 datasets are required, got {0}")]
    TooFewDatasets(usize),
    #[error("datasets are not aligned: {0}")]
    Alignment(String),
    #[error("missing metadata: {0}")]
    Metadata(String),
    #[error("invalid bin spec: {0}")]
    BinSpec(String),
}

/// Mean squared difference over all unordered pairs of `x`.
///
/// Evaluated through the centered second moment,
/// `Σ_{i<j} (xᵢ−xⱼ)² = n·Σ (xᵢ−x̄)²`, which keeps the cost linear.
pub fn noise_variance(x: &[f64]) -> Result<f64, QualityError> {
    let n = x.len();
    if n < 2 {
        return Err(QualityError::InsufficientData(n));
    }
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let centered: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    // n·Σ(x−x̄)² / C(n,2)
    Ok(2.0 * centered / (nf - 1.0))
}

/// Element-wise offset difference `datasets[i] − datasets[j]` for one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDifference {
    pub pair: (usize, usize),
    pub diff_ns: Vec<f64>,
}

fn check_aligned(datasets: &[MeasurementSeries]) -> Result<(), QualityError> {
    if datasets.len() < 2 {
        return Err(QualityError::TooFewDatasets(datasets.len()));
    }
    let reference = &datasets[0];
    for (k, ds) in datasets.iter().enumerate().skip(1) {
        if ds.len() != reference.len() {
            return Err(QualityError::Alignment(format!(
                "dataset {k} has {} samples, dataset 0 has {}",
                ds.len(),
                reference.len()
            )));
        }
        if ds.cadence_s() != reference.cadence_s() {
            return Err(QualityError::Alignment(format!(
                "dataset {k} cadence {:?} differs from {:?}",
                ds.cadence_s(),
                reference.cadence_s()
            )));
        }
        for (i, (a, b)) in reference.samples().iter().zip(ds.samples()).enumerate() {
            if (a.t_rel_s() - b.t_rel_s()).abs() > CADENCE_TOLERANCE_S {
                return Err(QualityError::Alignment(format!(
                    "epoch {i}: dataset {k} at t={} vs t={}",
                    b.t_rel_s(),
                    a.t_rel_s()
                )));
            }
            if a.n_vis != b.n_vis {
                return Err(QualityError::Alignment(format!(
                    "epoch {i}: dataset {k} reports n_vis={} vs {}",
                    b.n_vis, a.n_vis
                )));
            }
        }
    }
    Ok(())
}

/// Difference series for every pair `(i, j)`, `i < j`, in lexicographic order.
pub fn pairwise_noise_series(datasets: &[MeasurementSeries]) -> Result<Vec<PairDifference>, QualityError> {
    check_aligned(datasets)?;
    let k = datasets.len();
    let mut out = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let diff_ns = datasets[i].offsets().zip(datasets[j].offsets()).map(|(a, b)| a - b).collect();
            out.push(PairDifference { pair: (i, j), diff_ns });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinMode {
    ByTdop,
    ByNVis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityBinSpec {
    pub tdop_thresholds: Vec<f64>,
    pub mode: BinMode,
}

impl QualityBinSpec {
    pub fn by_tdop(thresholds: Vec<f64>) -> Result<Self, QualityError> {
        if thresholds.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(QualityError::BinSpec("thresholds must be positive".into()));
        }
        if thresholds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(QualityError::BinSpec("thresholds must be strictly increasing".into()));
        }
        Ok(Self { tdop_thresholds: thresholds, mode: BinMode::ByTdop })
    }

    pub fn by_n_vis() -> Self {
        Self { tdop_thresholds: DEFAULT_TDOP_THRESHOLDS.to_vec(), mode: BinMode::ByNVis }
    }

    /// Index of the left-closed, right-open TDOP bin containing `tdop`.
    pub fn tdop_bin(&self, tdop: f64) -> usize {
        self.tdop_thresholds.iter().take_while(|&&t| tdop >= t).count()
    }

    /// Labels of the TDOP bins, e.g. `tdop<1.25`, `1.25<=tdop<2`, `2<=tdop`.
    pub fn tdop_labels(&self) -> Vec<String> {
        let th = &self.tdop_thresholds;
        let mut labels = Vec::with_capacity(th.len() + 1);
        match th.first() {
            None => labels.push("all".to_string()),
            Some(first) => labels.push(format!("tdop<{first}")),
        }
        for w in th.windows(2) {
            labels.push(format!("{}<=tdop<{}", w[0], w[1]));
        }
        if let Some(last) = th.last() {
            labels.push(format!("{last}<=tdop"));
        }
        labels
    }
}

impl Default for QualityBinSpec {
    fn default() -> Self {
        Self { tdop_thresholds: DEFAULT_TDOP_THRESHOLDS.to_vec(), mode: BinMode::ByTdop }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityBin {
    pub bin: String,
    /// Number of pooled difference values (epochs × dataset pairs).
    pub count: usize,
    /// Noise variance in ns²; absent when fewer than 2 values fell in the bin.
    pub noise_variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub mode: BinMode,
    pub bins: Vec<QualityBin>,
}

impl QualityReport {
    /// CSV with header `bin,count,noise_variance`; absent variances are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin,count,noise_variance\n");
        for b in &self.bins {
            let _ = write!(out, "{},{},", b.bin, b.count);
            if let Some(v) = b.noise_variance {
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn variances(&self) -> Vec<Option<f64>> {
        self.bins.iter().map(|b| b.noise_variance).collect()
    }
}

/// Pools pairwise differences per bin and applies [`noise_variance`] to
/// each pool. Bin membership comes from the first dataset's metadata.
pub fn stratified_quality(
    datasets: &[MeasurementSeries],
    spec: &QualityBinSpec,
) -> Result<QualityReport, QualityError> {
    let pairs = pairwise_noise_series(datasets)?;
    let reference = datasets[0].samples();

    let (labels, assignment): (Vec<String>, Vec<usize>) = match spec.mode {
        BinMode::ByNVis => {
            let mut index: BTreeMap<u32, usize> = BTreeMap::new();
            for s in reference {
                index.entry(s.n_vis).or_insert(0);
            }
            for (i, v) in index.values_mut().enumerate() {
                *v = i;
            }
            let labels = index.keys().map(|n| n.to_string()).collect();
            (labels, reference.iter().map(|s| index[&s.n_vis]).collect())
        }
        BinMode::ByTdop => {
            let mut assignment = Vec::with_capacity(reference.len());
            for (i, s) in reference.iter().enumerate() {
                let tdop = s
                    .tdop
                    .ok_or_else(|| QualityError::Metadata(format!("epoch {i} (t={}) has no tdop", s.t_rel_s())))?;
                for (k, ds) in datasets.iter().enumerate().skip(1) {
                    let other = ds.samples()[i].tdop;
                    if other.is_none_or(|o| (o - tdop).abs() > 1e-12 * tdop.max(1.0)) {
                        return Err(QualityError::Alignment(format!(
                            "epoch {i}: dataset {k} reports tdop {other:?} vs {tdop}"
                        )));
                    }
                }
                assignment.push(spec.tdop_bin(tdop));
            }
            (spec.tdop_labels(), assignment)
        }
    };

    let mut pools: Vec<Vec<f64>> = vec![Vec::new(); labels.len()];
    for p in &pairs {
        for (epoch, d) in p.diff_ns.iter().enumerate() {
            pools[assignment[epoch]].push(*d);
        }
    }
    let bins = labels
        .into_iter()
        .zip(pools)
        .map(|(bin, pool)| QualityBin { bin, count: pool.len(), noise_variance: noise_variance(&pool).ok() })
        .collect();
    Ok(QualityReport { mode: spec.mode, bins })
}
