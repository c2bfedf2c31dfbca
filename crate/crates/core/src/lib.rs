//! Chip-scale atomic clock (CSAC) drift modeling against GPS time.
//!
//! The crate covers the full holdover workflow:
//!
//! * [`timeseries`]: offset series, CSV ingestion and emission, windowing.
//! * [`geometry`]: nominal constellation, visibility and DOP factors.
//! * [`quality`]: pairwise noise variance across repeated datasets, binned
//!   by visible-satellite count or TDOP.
//! * [`models`]: uniform and quality-weighted polynomial drift fits and
//!   coasting RMSE.
//! * [`simulator`]: synthetic datasets and the three reference scenarios.

pub mod geometry;
pub mod models;
pub mod quality;
pub mod simulator;
pub mod timeseries;

pub use geometry::{dop_from_los, nominal_gps_constellation, sky_state, Constellation, DopSet, ReceiverPos, SkyState};
pub use models::{coast_rmse, fit, model_select, predict, weights_for, CoastReport, DriftModel, WeightScheme};
pub use quality::{noise_variance, pairwise_noise_series, stratified_quality, QualityBinSpec, QualityReport};
pub use simulator::{preset_scenarios, replicate, simulate_clock_truth, simulate_dataset, ClockSpec, Scenario};
pub use timeseries::{emit_series, parse_series, MeasurementSeries, Sample};
