//! Satellite geometry: a circular-orbit GPS constellation, per-epoch
//! visibility from a fixed receiver, and dilution-of-precision factors.
//!
//! Orbits are unperturbed circles. At the constellation reference epoch the
//! inertial and Earth-fixed frames coincide; afterwards the Earth-fixed frame
//! rotates at [`WGS84_OMEGA_E`].

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix4, SymmetricEigen, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timeseries::Epoch;

/// WGS-84 semi-major axis (m).
pub const WGS84_A: f64 = 6_378_137.0;
/// WGS-84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;
/// WGS-84 Earth rotation rate (rad/s).
pub const WGS84_OMEGA_E: f64 = 7.292_115_146_7e-5;
/// WGS-84 gravitational parameter (m³/s²).
pub const WGS84_GM: f64 = 3.986_004_418e14;

/// Semi-major axis of the nominal GPS orbit (m).
pub const GPS_SEMI_MAJOR_AXIS_M: f64 = 26_559_710.0;

/// Largest accepted condition number of the normal matrix GᵀG.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("degenerate satellite geometry: {0}")]
    Degenerate(String),
    #[error("at least 4 line-of-sight vectors are required, got {0}")]
    TooFewSatellites(usize),
    #[error("invalid orbital element for PRN {prn}: {message}")]
    InvalidElement { prn: u32, message: String },
    #[error("invalid constellation: {0}")]
    InvalidConstellation(String),
    #[error("constellation document: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitalElement {
    pub prn: u32,
    pub semi_major_axis_m: f64,
    pub inclination_rad: f64,
    pub raan_rad: f64,
    /// Argument of latitude at the reference epoch.
    pub arg_lat_epoch_rad: f64,
}

impl OrbitalElement {
    /// Builds an element, normalizing the angles into `[0, 2π)`.
    pub fn new(
        prn: u32,
        semi_major_axis_m: f64,
        inclination_rad: f64,
        raan_rad: f64,
        arg_lat_epoch_rad: f64,
    ) -> Result<Self, GeometryError> {
        let bad = |message: &str| GeometryError::InvalidElement { prn, message: message.to_string() };
        if prn == 0 {
            return Err(bad("PRN must be positive"));
        }
        if !(semi_major_axis_m.is_finite() && semi_major_axis_m > WGS84_A) {
            return Err(bad("semi-major axis must exceed the Earth radius"));
        }
        if !(0.0..=PI).contains(&inclination_rad) {
            return Err(bad("inclination must lie in [0, π]"));
        }
        if !(raan_rad.is_finite() && arg_lat_epoch_rad.is_finite()) {
            return Err(bad("angles must be finite"));
        }
        Ok(Self {
            prn,
            semi_major_axis_m,
            inclination_rad,
            raan_rad: raan_rad.rem_euclid(TAU),
            arg_lat_epoch_rad: arg_lat_epoch_rad.rem_euclid(TAU),
        })
    }

    /// Mean motion (rad/s).
    pub fn mean_motion(&self, gm: f64) -> f64 {
        (gm / self.semi_major_axis_m.powi(3)).sqrt()
    }

    /// Orbital period (s).
    pub fn period_s(&self, gm: f64) -> f64 {
        TAU / self.mean_motion(gm)
    }
}

/// JSON form of one orbital element, angles in degrees.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementDoc {
    pub prn: u32,
    pub a_m: f64,
    pub inc_deg: f64,
    pub raan_deg: f64,
    pub arg_lat_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    elements: Vec<OrbitalElement>,
    pub earth_rotation_rate_rad_s: f64,
    pub gm_m3_s2: f64,
}

impl Constellation {
    pub fn new(
        elements: Vec<OrbitalElement>,
        earth_rotation_rate_rad_s: f64,
        gm_m3_s2: f64,
    ) -> Result<Self, GeometryError> {
        if elements.is_empty() {
            return Err(GeometryError::InvalidConstellation("no satellites".into()));
        }
        let mut prns: Vec<u32> = elements.iter().map(|e| e.prn).collect();
        prns.sort_unstable();
        if let Some(w) = prns.windows(2).find(|w| w[0] == w[1]) {
            return Err(GeometryError::InvalidConstellation(format!("duplicate PRN {}", w[0])));
        }
        if !(gm_m3_s2.is_finite() && gm_m3_s2 > 0.0) || !earth_rotation_rate_rad_s.is_finite() {
            return Err(GeometryError::InvalidConstellation("bad physical constants".into()));
        }
        Ok(Self { elements, earth_rotation_rate_rad_s, gm_m3_s2 })
    }

    pub fn elements(&self) -> &[OrbitalElement] {
        &self.elements
    }

    /// Reads the JSON list form `[{prn, a_m, inc_deg, raan_deg, arg_lat_deg}, ...]`
    /// with WGS-84 Earth constants.
    pub fn from_json(text: &str) -> Result<Self, GeometryError> {
        let docs: Vec<ElementDoc> = serde_json::from_str(text).map_err(|e| GeometryError::Parse(e.to_string()))?;
        Self::from_docs(&docs)
    }

    pub fn from_docs(docs: &[ElementDoc]) -> Result<Self, GeometryError> {
        let elements = docs
            .iter()
            .map(|d| {
                OrbitalElement::new(
                    d.prn,
                    d.a_m,
                    d.inc_deg.to_radians(),
                    d.raan_deg.to_radians(),
                    d.arg_lat_deg.to_radians(),
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(elements, WGS84_OMEGA_E, WGS84_GM)
    }

    pub fn to_docs(&self) -> Vec<ElementDoc> {
        self.elements
            .iter()
            .map(|e| ElementDoc {
                prn: e.prn,
                a_m: e.semi_major_axis_m,
                inc_deg: e.inclination_rad.to_degrees(),
                raan_deg: e.raan_rad.to_degrees(),
                arg_lat_deg: e.arg_lat_epoch_rad.to_degrees(),
            })
            .collect()
    }
}

/// The 24-slot nominal constellation: six planes 60° apart in RAAN, four
/// satellites per plane 90° apart, each plane phased by 30° from the last.
pub fn nominal_gps_constellation() -> Constellation {
    let inclination = 55f64.to_radians();
    let mut elements = Vec::with_capacity(24);
    for plane in 0..6u32 {
        let raan = (60.0 * plane as f64).to_radians();
        for slot in 0..4u32 {
            let arg_lat = (90.0 * slot as f64 + 30.0 * plane as f64).to_radians();
            let prn = plane * 4 + slot + 1;
            elements.push(
                OrbitalElement::new(prn, GPS_SEMI_MAJOR_AXIS_M, inclination, raan, arg_lat)
                    .expect("nominal element is valid"),
            );
        }
    }
    Constellation::new(elements, WGS84_OMEGA_E, WGS84_GM).expect("nominal constellation is valid")
}

/// Earth-fixed position of a satellite `t` seconds after the reference epoch.
pub fn satellite_ecef(elem: &OrbitalElement, t: f64, cst: &Constellation) -> Vector3<f64> {
    let a = elem.semi_major_axis_m;
    let u = elem.arg_lat_epoch_rad + elem.mean_motion(cst.gm_m3_s2) * t;
    // Longitude of the ascending node in the rotating frame.
    let node = elem.raan_rad - cst.earth_rotation_rate_rad_s * t;
    let (su, cu) = u.sin_cos();
    let (si, ci) = elem.inclination_rad.sin_cos();
    let (sn, cn) = node.sin_cos();
    Vector3::new(a * (cu * cn - su * ci * sn), a * (cu * sn + su * ci * cn), a * (su * si))
}

/// Geodetic receiver position on the WGS-84 ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "ReceiverDoc", into = "ReceiverDoc")]
pub struct ReceiverPos {
    pub lat_rad: f64,
    pub lon_rad: f64,
    pub alt_m: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReceiverDoc {
    lat_deg: f64,
    lon_deg: f64,
    alt_m: f64,
}

impl From<ReceiverDoc> for ReceiverPos {
    fn from(d: ReceiverDoc) -> Self {
        Self::from_degrees(d.lat_deg, d.lon_deg, d.alt_m)
    }
}

impl From<ReceiverPos> for ReceiverDoc {
    fn from(p: ReceiverPos) -> Self {
        Self { lat_deg: p.lat_rad.to_degrees(), lon_deg: p.lon_rad.to_degrees(), alt_m: p.alt_m }
    }
}

impl ReceiverPos {
    pub fn from_degrees(lat_deg: f64, lon_deg: f64, alt_m: f64) -> Self {
        Self { lat_rad: lat_deg.to_radians(), lon_rad: lon_deg.to_radians(), alt_m }
    }

    pub fn is_valid(&self) -> bool {
        self.lat_rad.abs() <= PI / 2.0 && self.lon_rad.is_finite() && self.alt_m.is_finite()
    }

    pub fn ecef(&self) -> Vector3<f64> {
        let e2 = WGS84_F * (2.0 - WGS84_F);
        let (slat, clat) = self.lat_rad.sin_cos();
        let (slon, clon) = self.lon_rad.sin_cos();
        let n = WGS84_A / (1.0 - e2 * slat * slat).sqrt();
        Vector3::new(
            (n + self.alt_m) * clat * clon,
            (n + self.alt_m) * clat * slon,
            (n * (1.0 - e2) + self.alt_m) * slat,
        )
    }

    /// Rotates an Earth-fixed vector into the local East-North-Up frame.
    pub fn ecef_to_enu(&self, v: &Vector3<f64>) -> Vector3<f64> {
        let (slat, clat) = self.lat_rad.sin_cos();
        let (slon, clon) = self.lon_rad.sin_cos();
        Vector3::new(
            -slon * v.x + clon * v.y,
            -slat * clon * v.x - slat * slon * v.y + clat * v.z,
            clat * clon * v.x + clat * slon * v.y + slat * v.z,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DopSet {
    pub gdop: f64,
    pub pdop: f64,
    pub hdop: f64,
    pub vdop: f64,
    pub tdop: f64,
}

/// Unit line-of-sight vector to one satellite, East-North-Up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineOfSight {
    pub prn: u32,
    pub enu: Vector3<f64>,
}

impl LineOfSight {
    pub fn elevation_rad(&self) -> f64 {
        self.enu.z.clamp(-1.0, 1.0).asin()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkyState {
    pub epoch: Epoch,
    /// Visible satellites ordered by PRN.
    pub los: Vec<LineOfSight>,
    pub dops: Option<DopSet>,
}

impl SkyState {
    pub fn n_vis(&self) -> usize {
        self.los.len()
    }
}

/// Visible satellites from `rx` at `t` seconds past the reference epoch.
///
/// When `max_sats` caps the count, the highest satellites are kept; equal
/// elevations prefer the lower PRN. DOPs are filled whenever at least four
/// satellites remain and their geometry is well conditioned.
pub fn sky_state(cst: &Constellation, rx: &ReceiverPos, t: f64, mask_rad: f64, max_sats: Option<usize>) -> SkyState {
    let rx_ecef = rx.ecef();
    let min_up = mask_rad.sin();
    let mut los: Vec<LineOfSight> = cst
        .elements()
        .iter()
        .filter_map(|elem| {
            let d = satellite_ecef(elem, t, cst) - rx_ecef;
            let enu = rx.ecef_to_enu(&(d / d.norm()));
            (enu.z >= min_up).then_some(LineOfSight { prn: elem.prn, enu })
        })
        .collect();

    if let Some(cap) = max_sats {
        if los.len() > cap {
            los.sort_by(|a, b| b.enu.z.total_cmp(&a.enu.z).then(a.prn.cmp(&b.prn)));
            los.truncate(cap);
        }
    }
    los.sort_by_key(|l| l.prn);

    let dops = if los.len() >= 4 {
        let vectors: Vec<Vector3<f64>> = los.iter().map(|l| l.enu).collect();
        dop_from_los(&vectors).ok()
    } else {
        None
    };
    SkyState { epoch: Epoch::relative(t), los, dops }
}

/// DOP factors from East-North-Up unit line-of-sight vectors.
///
/// Each row of the geometry matrix is `[-e, -n, -u, 1]`; the factors are
/// square roots of diagonal sums of `(GᵀG)⁻¹`.
pub fn dop_from_los(los: &[Vector3<f64>]) -> Result<DopSet, GeometryError> {
    if los.len() < 4 {
        return Err(GeometryError::TooFewSatellites(los.len()));
    }
    let mut normal = Matrix4::<f64>::zeros();
    for v in los {
        let row = Vector4::new(-v.x, -v.y, -v.z, 1.0);
        normal += row * row.transpose();
    }

    let eig = SymmetricEigen::new(normal);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min.is_nan() || min <= 0.0 || max / min > MAX_CONDITION {
        return Err(GeometryError::Degenerate(format!("condition number {:.3e}", max / min)));
    }
    let q = normal.try_inverse().ok_or_else(|| GeometryError::Degenerate("singular normal matrix".into()))?;

    let (qe, qn, qu, qt) = (q[(0, 0)], q[(1, 1)], q[(2, 2)], q[(3, 3)]);
    Ok(DopSet {
        gdop: (qe + qn + qu + qt).sqrt(),
        pdop: (qe + qn + qu).sqrt(),
        hdop: (qe + qn).sqrt(),
        vdop: qu.sqrt(),
        tdop: qt.sqrt(),
    })
}
