//! Synthetic CSAC-versus-GPST datasets.
//!
//! The clock truth is a deterministic quadratic (offset, frequency offset,
//! aging) plus a random walk of frequency and white phase noise. Receiver
//! metadata (visible count, TDOP) comes from the geometry module, and an
//! optional TDOP-proportional measurement noise models the degraded timing
//! solution under poor geometry.
//!
//! Randomness uses ChaCha8 from `rand_chacha` with Gaussian draws from
//! `rand_distr::StandardNormal`. Independent streams are derived by hashing
//! `seed ^ splitmix64(stream)` through SplitMix64, so every output is a pure
//! function of its inputs. Bit-identical replay is guaranteed for one build;
//! across platforms it relies on `f64` libm agreement and is best effort.

use chrono::{DateTime, TimeZone, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{sky_state, Constellation, ElementDoc, GeometryError, ReceiverPos};
use crate::timeseries::{Epoch, MeasurementSeries, Sample, TimeseriesError, DEFAULT_CADENCE_S};

/// Default elevation mask, degrees.
pub const DEFAULT_MASK_DEG: f64 = 5.0;

/// Duration of the full measurement protocol: 6 h fit + 12 h coast.
pub const PROTOCOL_DURATION_S: f64 = 18.0 * 3600.0;

/// Fit-window length of the full protocol, in samples (6 h at 2 s, inclusive).
pub const PROTOCOL_FIT_SAMPLES: usize = 10_801;

/// Stand-in TDOP for measurement noise before the first valid solution.
pub const FALLBACK_TDOP: f64 = 3.0;

const STREAM_CLOCK: u64 = 1;
const STREAM_MEASUREMENT: u64 = 2;
const STREAM_REPLICATE: u64 = 0x5245_504c; // "REPL"

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("invalid clock spec: {0}")]
    Clock(String),
    #[error("at least 2 replicates are required, got {0}")]
    TooFewReplicates(usize),
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Series(#[from] TimeseriesError),
}

/// Epoch against which orbital elements are referenced.
pub fn constellation_epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap()
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of sub-stream `stream` under `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

/// Seed used for replicate `index` of a scenario seeded with `seed`.
pub fn replicate_seed(seed: u64, index: usize) -> u64 {
    derive_seed(derive_seed(seed, STREAM_REPLICATE), index as u64)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream))
}

/// Synthetic clock parameters. Offsets in ns, time in s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClockSpec {
    pub x0_ns: f64,
    pub y0_ns_per_s: f64,
    /// Linear frequency drift (aging), ns/s².
    pub d_ns_per_s2: f64,
    /// White phase noise σ per sample, ns.
    pub sigma_wpm_ns: f64,
    /// Random-walk FM intensity: the frequency (ns/s) takes steps of
    /// σ·√Δt, so the unit is ns/s per √s.
    pub sigma_rwfm_ns_per_sqrt_s: f64,
    /// Measurement noise σ per unit TDOP, ns.
    pub tdop_noise_gain: f64,
}

impl Default for ClockSpec {
    fn default() -> Self {
        Self {
            x0_ns: 4000.0,
            y0_ns_per_s: 0.05,
            d_ns_per_s2: 1e-6,
            sigma_wpm_ns: 2.0,
            sigma_rwfm_ns_per_sqrt_s: DEFAULT_SIGMA_RWFM,
            tdop_noise_gain: 0.0,
        }
    }
}

/// Default random-walk FM intensity. Corresponds to an Allan deviation of
/// roughly 1e-11 at one day.
pub const DEFAULT_SIGMA_RWFM: f64 = 6e-5;

impl ClockSpec {
    /// Noise-free clock with the given deterministic terms.
    pub fn deterministic(x0_ns: f64, y0_ns_per_s: f64, d_ns_per_s2: f64) -> Self {
        Self { x0_ns, y0_ns_per_s, d_ns_per_s2, sigma_wpm_ns: 0.0, sigma_rwfm_ns_per_sqrt_s: 0.0, tdop_noise_gain: 0.0 }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let finite = [self.x0_ns, self.y0_ns_per_s, self.d_ns_per_s2];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(SimError::Clock("deterministic terms must be finite".into()));
        }
        let sigmas = [
            ("sigma_wpm_ns", self.sigma_wpm_ns),
            ("sigma_rwfm_ns_per_sqrt_s", self.sigma_rwfm_ns_per_sqrt_s),
            ("tdop_noise_gain", self.tdop_noise_gain),
        ];
        for (name, v) in sigmas {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::Clock(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Noise-free offset at time `t`.
    pub fn deterministic_offset(&self, t: f64) -> f64 {
        self.x0_ns + self.y0_ns_per_s * t + 0.5 * self.d_ns_per_s2 * t * t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "ScenarioDoc", into = "ScenarioDoc")]
pub struct Scenario {
    pub name: String,
    pub start: DateTime<Utc>,
    pub duration_s: f64,
    pub cadence_s: f64,
    pub rx: ReceiverPos,
    pub max_sats: Option<usize>,
    pub mask_rad: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    #[serde(default)]
    name: String,
    start: DateTime<Utc>,
    duration_s: f64,
    #[serde(default = "default_cadence")]
    cadence_s: f64,
    rx: ReceiverPos,
    #[serde(default)]
    max_sats: Option<usize>,
    #[serde(default = "default_mask_deg")]
    mask_deg: f64,
    #[serde(default)]
    seed: u64,
}

fn default_cadence() -> f64 {
    DEFAULT_CADENCE_S
}

fn default_mask_deg() -> f64 {
    DEFAULT_MASK_DEG
}

impl From<ScenarioDoc> for Scenario {
    fn from(d: ScenarioDoc) -> Self {
        Self {
            name: d.name,
            start: d.start,
            duration_s: d.duration_s,
            cadence_s: d.cadence_s,
            rx: d.rx,
            max_sats: d.max_sats,
            mask_rad: d.mask_deg.to_radians(),
            seed: d.seed,
        }
    }
}

impl From<Scenario> for ScenarioDoc {
    fn from(s: Scenario) -> Self {
        Self {
            name: s.name,
            start: s.start,
            duration_s: s.duration_s,
            cadence_s: s.cadence_s,
            rx: s.rx,
            max_sats: s.max_sats,
            mask_deg: s.mask_rad.to_degrees(),
            seed: s.seed,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Scenario(m));
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad(format!("duration_s must be positive, got {}", self.duration_s));
        }
        if !(self.cadence_s.is_finite() && self.cadence_s > 0.0) {
            return bad(format!("cadence_s must be positive, got {}", self.cadence_s));
        }
        let steps = self.duration_s / self.cadence_s;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return bad(format!("duration {} s is not a multiple of cadence {} s", self.duration_s, self.cadence_s));
        }
        if !self.rx.is_valid() {
            return bad("receiver latitude outside ±90°".into());
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&self.mask_rad) {
            return bad(format!("elevation mask {} rad outside [0, π/2)", self.mask_rad));
        }
        if self.max_sats == Some(0) {
            return bad("max_sats must be positive".into());
        }
        Ok(())
    }

    /// `duration / cadence + 1`.
    pub fn sample_count(&self) -> usize {
        (self.duration_s / self.cadence_s).round() as usize + 1
    }

    /// Seconds from the constellation reference epoch to the scenario start.
    pub fn orbit_offset_s(&self) -> f64 {
        (self.start - constellation_epoch()).num_milliseconds() as f64 / 1000.0
    }

    pub fn with_duration(mut self, duration_s: f64) -> Self {
        self.duration_s = duration_s;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// The three measurement scenarios: Incheon, New York and Florence, each
/// 18 h at 2 s with a 5° mask.
pub fn preset_scenarios() -> Vec<Scenario> {
    let make = |name: &str, (y, mo, d, h): (i32, u32, u32, u32), lat, lon, alt, max_sats, seed| Scenario {
        name: name.to_string(),
        start: Utc.with_ymd_and_hms(y, mo, d, h, 0, 0).unwrap(),
        duration_s: PROTOCOL_DURATION_S,
        cadence_s: DEFAULT_CADENCE_S,
        rx: ReceiverPos::from_degrees(lat, lon, alt),
        max_sats: Some(max_sats),
        mask_rad: DEFAULT_MASK_DEG.to_radians(),
        seed,
    };
    vec![
        make("scenario1_incheon", (2023, 1, 10, 10), 37.6315, 126.3633, 11.665, 7, 1),
        make("scenario2_new_york", (2023, 1, 8, 4), 43.0830, -77.5890, 206.550, 8, 2),
        make("scenario3_florence", (2023, 1, 9, 4), 43.7800, 11.2500, 31.200, 9, 3),
    ]
}

/// Preset by 1-based scenario number.
pub fn preset(number: usize) -> Option<Scenario> {
    number.checked_sub(1).and_then(|i| preset_scenarios().into_iter().nth(i))
}

/// Clock offsets at `t_k = k·cadence`, `k = 0..n`.
pub fn simulate_clock_truth(spec: &ClockSpec, n: usize, cadence_s: f64, seed: u64) -> Vec<f64> {
    let mut rng = rng_for(seed, STREAM_CLOCK);
    let rw_step = spec.sigma_rwfm_ns_per_sqrt_s * cadence_s.sqrt();
    let mut freq = 0.0;
    let mut walk = 0.0;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * cadence_s;
        if k > 0 {
            // Phase integrates the frequency held over the previous step.
            walk += freq * cadence_s;
        }
        // Draw both variates every step so streams stay aligned whichever
        // noise terms are enabled.
        let z_rw: f64 = StandardNormal.sample(&mut rng);
        let z_wpm: f64 = StandardNormal.sample(&mut rng);
        freq += rw_step * z_rw;
        out.push(spec.deterministic_offset(t) + walk + spec.sigma_wpm_ns * z_wpm);
    }
    out
}

/// Per-epoch receiver metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochMeta {
    pub t_rel_s: f64,
    pub n_vis: u32,
    pub dops: Option<crate::geometry::DopSet>,
}

/// Visibility and DOP timeline of a scenario.
pub fn sky_timeline(scn: &Scenario, cst: &Constellation) -> Result<Vec<EpochMeta>, SimError> {
    scn.validate()?;
    let offset = scn.orbit_offset_s();
    Ok((0..scn.sample_count())
        .map(|k| {
            let t_rel_s = k as f64 * scn.cadence_s;
            let sky = sky_state(cst, &scn.rx, offset + t_rel_s, scn.mask_rad, scn.max_sats);
            EpochMeta { t_rel_s, n_vis: sky.n_vis() as u32, dops: sky.dops }
        })
        .collect())
}

/// Assembles one dataset over a precomputed timeline.
pub fn simulate_on_timeline(
    scn: &Scenario,
    timeline: &[EpochMeta],
    spec: &ClockSpec,
    seed: u64,
) -> Result<MeasurementSeries, SimError> {
    spec.validate()?;
    let truth = simulate_clock_truth(spec, timeline.len(), scn.cadence_s, seed);
    let mut meas_rng = rng_for(seed, STREAM_MEASUREMENT);
    let mut last_tdop = FALLBACK_TDOP;
    let samples = timeline
        .iter()
        .zip(truth)
        .map(|(meta, x)| {
            let tdop = meta.dops.map(|d| d.tdop);
            if let Some(t) = tdop {
                last_tdop = t;
            }
            let z: f64 = StandardNormal.sample(&mut meas_rng);
            let offset_ns = x + spec.tdop_noise_gain * last_tdop * z;
            let t_abs = scn.start + chrono::Duration::milliseconds((meta.t_rel_s * 1000.0).round() as i64);
            Sample { epoch: Epoch { t_rel_s: meta.t_rel_s, t_abs: Some(t_abs) }, offset_ns, n_vis: meta.n_vis, tdop }
        })
        .collect();
    Ok(MeasurementSeries::new(samples, Some(scn.cadence_s), scn.name.clone())?)
}

/// One dataset for `scn`, seeded with `scn.seed`.
pub fn simulate_dataset(scn: &Scenario, spec: &ClockSpec, cst: &Constellation) -> Result<MeasurementSeries, SimError> {
    let timeline = sky_timeline(scn, cst)?;
    simulate_on_timeline(scn, &timeline, spec, scn.seed)
}

/// `k` datasets sharing the scenario's metadata with independent noise.
pub fn replicate(
    scn: &Scenario,
    spec: &ClockSpec,
    cst: &Constellation,
    k: usize,
) -> Result<Vec<MeasurementSeries>, SimError> {
    if k < 2 {
        return Err(SimError::TooFewReplicates(k));
    }
    let timeline = sky_timeline(scn, cst)?;
    (0..k)
        .map(|i| {
            let series = simulate_on_timeline(scn, &timeline, spec, replicate_seed(scn.seed, i))?;
            let label = format!("{}_rep{}", scn.name, i + 1);
            Ok(series.with_label(label))
        })
        .collect()
}

/// Scenario section of a simulation config: either a full scenario, or a
/// preset number with optional overrides.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub preset: Option<usize>,
    pub name: Option<String>,
    pub start: Option<DateTime<Utc>>,
    pub duration_s: Option<f64>,
    pub cadence_s: Option<f64>,
    pub rx: Option<ReceiverPos>,
    pub max_sats: Option<usize>,
    pub mask_deg: Option<f64>,
    pub seed: Option<u64>,
}

impl ScenarioConfig {
    pub fn resolve(&self) -> Result<Scenario, SimError> {
        let missing = |field: &str| SimError::Config {
            field: format!("scenario.{field}"),
            message: "required when no preset is given".into(),
        };
        let mut scn = match self.preset {
            Some(n) => preset(n).ok_or_else(|| SimError::Config {
                field: "scenario.preset".into(),
                message: format!("unknown preset {n}; expected 1, 2 or 3"),
            })?,
            None => Scenario {
                name: String::new(),
                start: self.start.ok_or_else(|| missing("start"))?,
                duration_s: self.duration_s.ok_or_else(|| missing("duration_s"))?,
                cadence_s: DEFAULT_CADENCE_S,
                rx: self.rx.ok_or_else(|| missing("rx"))?,
                max_sats: None,
                mask_rad: DEFAULT_MASK_DEG.to_radians(),
                seed: 0,
            },
        };
        if let Some(v) = &self.name {
            scn.name = v.clone();
        }
        if scn.name.is_empty() {
            scn.name = "scenario".into();
        }
        if let Some(v) = self.start {
            scn.start = v;
        }
        if let Some(v) = self.duration_s {
            scn.duration_s = v;
        }
        if let Some(v) = self.cadence_s {
            scn.cadence_s = v;
        }
        if let Some(v) = self.rx {
            scn.rx = v;
        }
        if let Some(v) = self.max_sats {
            scn.max_sats = Some(v);
        }
        if let Some(v) = self.mask_deg {
            scn.mask_rad = v.to_radians();
        }
        if let Some(v) = self.seed {
            scn.seed = v;
        }
        scn.validate()?;
        Ok(scn)
    }
}

/// JSON configuration consumed by the simulate and dop commands.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub clock: ClockSpec,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Custom constellation; the nominal 24-satellite one when absent.
    #[serde(default)]
    pub constellation: Option<Vec<ElementDoc>>,
}

fn default_replicates() -> usize {
    1
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Config {
            field: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    pub fn constellation(&self) -> Result<Constellation, SimError> {
        match &self.constellation {
            Some(docs) => Ok(Constellation::from_docs(docs)?),
            None => Ok(crate::geometry::nominal_gps_constellation()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::nominal_gps_constellation;

    fn short(scn: Scenario, hours: f64) -> Scenario {
        scn.with_duration(hours * 3600.0)
    }

    #[test]
    fn presets_match_scenario_table() {
        let p = preset_scenarios();
        assert_eq!(p.len(), 3);
        let expect = [
            (37.6315, 126.3633, 11.665, 7, "2023-01-10T10:00:00Z"),
            (43.0830, -77.5890, 206.550, 8, "2023-01-08T04:00:00Z"),
            (43.7800, 11.2500, 31.200, 9, "2023-01-09T04:00:00Z"),
        ];
        for (s, (lat, lon, alt, max, start)) in p.iter().zip(expect) {
            assert!((s.rx.lat_rad.to_degrees() - lat).abs() < 1e-12);
            assert!((s.rx.lon_rad.to_degrees() - lon).abs() < 1e-12);
            assert_eq!(s.rx.alt_m, alt);
            assert_eq!(s.max_sats, Some(max));
            assert_eq!(s.start, start.parse::<DateTime<Utc>>().unwrap());
            assert_eq!(s.duration_s, 64_800.0);
            assert_eq!(s.cadence_s, 2.0);
            assert_eq!(s.sample_count(), 32_401);
        }
        assert!(preset(0).is_none() && preset(4).is_none());
    }

    #[test]
    fn noise_free_truth_is_polynomial() {
        let spec = ClockSpec::deterministic(4000.0, 0.1, 0.0);
        let x = simulate_clock_truth(&spec, 3, 2.0, 99);
        assert_eq!(x, vec![4000.0, 4000.2, 4000.4]);
    }

    #[test]
    fn truth_is_deterministic_per_seed() {
        let spec = ClockSpec::default();
        assert_eq!(simulate_clock_truth(&spec, 500, 2.0, 7), simulate_clock_truth(&spec, 500, 2.0, 7));
        assert_ne!(simulate_clock_truth(&spec, 500, 2.0, 7), simulate_clock_truth(&spec, 500, 2.0, 8));
    }

    #[test]
    fn white_noise_variance() {
        let spec = ClockSpec { sigma_wpm_ns: 1.0, ..ClockSpec::deterministic(0.0, 0.0, 0.0) };
        let x = simulate_clock_truth(&spec, 10_000, 2.0, 3);
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (x.len() - 1) as f64;
        assert!((var - 1.0).abs() < 0.1, "variance {var}");
    }

    #[test]
    fn random_walk_frequency_growth() {
        // Frequency after k steps has variance k·σ²·Δt; check over many seeds.
        let spec = ClockSpec { sigma_rwfm_ns_per_sqrt_s: 0.01, ..ClockSpec::deterministic(0.0, 0.0, 0.0) };
        let n = 201;
        let finals: Vec<f64> = (0..400)
            .map(|s| {
                let x = simulate_clock_truth(&spec, n, 2.0, s);
                (x[n - 1] - x[n - 2]) / 2.0
            })
            .collect();
        let var = finals.iter().map(|f| f * f).sum::<f64>() / finals.len() as f64;
        // Frequency held over the last step is the sum of 199 increments.
        let expected = 199.0 * 0.01f64.powi(2) * 2.0;
        assert!((var / expected - 1.0).abs() < 0.2, "var {var} expected {expected}");
    }

    #[test]
    fn dataset_shape_and_cap() {
        let cst = nominal_gps_constellation();
        let scn = short(preset(1).unwrap(), 1.0);
        let ds = simulate_dataset(&scn, &ClockSpec::default(), &cst).unwrap();
        assert_eq!(ds.len(), 1801);
        assert!(ds.samples().iter().all(|s| s.n_vis <= 7));
        assert_eq!(ds.cadence_s(), Some(2.0));
        assert_eq!(ds.first().epoch.t_abs, Some(scn.start));
    }

    #[test]
    fn noise_off_dataset_is_exact() {
        let cst = nominal_gps_constellation();
        let scn = short(preset(2).unwrap(), 0.5);
        let spec = ClockSpec::deterministic(4000.0, 0.05, 1e-6);
        let ds = simulate_dataset(&scn, &spec, &cst).unwrap();
        for s in ds.samples() {
            assert_eq!(s.offset_ns, spec.deterministic_offset(s.t_rel_s()));
        }
    }

    #[test]
    fn replicates_share_metadata() {
        let cst = nominal_gps_constellation();
        let scn = short(preset(3).unwrap(), 0.5);
        let spec = ClockSpec { tdop_noise_gain: 1.0, ..ClockSpec::default() };
        let reps = replicate(&scn, &spec, &cst, 5).unwrap();
        assert_eq!(reps.len(), 5);
        for r in &reps[1..] {
            for (a, b) in reps[0].samples().iter().zip(r.samples()) {
                assert_eq!((a.n_vis, a.tdop), (b.n_vis, b.tdop));
            }
            assert_ne!(reps[0].offsets().collect::<Vec<_>>(), r.offsets().collect::<Vec<_>>());
        }
        let again = replicate(&scn, &spec, &cst, 5).unwrap();
        assert_eq!(reps, again);
        assert!(matches!(replicate(&scn, &spec, &cst, 1), Err(SimError::TooFewReplicates(1))));

        let quiet = replicate(&scn, &ClockSpec::deterministic(1.0, 0.0, 0.0), &cst, 2).unwrap();
        assert_eq!(quiet[0].samples(), quiet[1].samples());
    }

    #[test]
    fn scenario_validation() {
        let base = preset(1).unwrap();
        assert!(base.clone().with_duration(3.0).validate().is_err());
        assert!(base.clone().with_duration(-2.0).validate().is_err());
        let mut s = base.clone();
        s.mask_rad = 2.0;
        assert!(s.validate().is_err());
        assert!(ClockSpec { sigma_wpm_ns: -1.0, ..ClockSpec::default() }.validate().is_err());
    }

    #[test]
    fn config_resolution() {
        let cfg =
            SimConfig::from_json(r#"{"scenario": {"preset": 2, "duration_s": 7200, "seed": 9}, "replicates": 3}"#)
                .unwrap();
        let scn = cfg.scenario.resolve().unwrap();
        assert_eq!(scn.max_sats, Some(8));
        assert_eq!(scn.sample_count(), 3601);
        assert_eq!(scn.seed, 9);
        assert_eq!(cfg.clock, ClockSpec::default());

        let cfg = SimConfig::from_json(r#"{"scenario": {"duration_s": 7200}}"#).unwrap();
        match cfg.scenario.resolve() {
            Err(SimError::Config { field, .. }) => assert_eq!(field, "scenario.start"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(SimConfig::from_json(r#"{"scenario": {}, "bogus": 1}"#), Err(SimError::Config { .. })));

        let explicit = SimConfig::from_json(
            r#"{"scenario": {"start": "2023-01-10T10:00:00Z", "duration_s": 60,
                "rx": {"lat_deg": 10, "lon_deg": 20, "alt_m": 5}, "mask_deg": 10}}"#,
        )
        .unwrap();
        let scn = explicit.scenario.resolve().unwrap();
        assert!((scn.mask_rad - 10f64.to_radians()).abs() < 1e-15);
        assert_eq!(scn.sample_count(), 31);
    }

    #[test]
    fn scenario_json_round_trip() {
        let s = preset(2).unwrap();
        let back: Scenario = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back.name, s.name);
        assert_eq!(back.start, s.start);
        assert!((back.mask_rad - s.mask_rad).abs() < 1e-15);
        assert!((back.rx.lat_rad - s.rx.lat_rad).abs() < 1e-15);
    }
}
