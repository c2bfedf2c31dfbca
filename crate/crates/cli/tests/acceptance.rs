//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_RED` are reported but do not fail the run
//! unless `CSAC_ACCEPTANCE_STRICT=1` is set.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use csac_holdover::geometry::{dop_from_los, nominal_gps_constellation, DopSet};
use csac_holdover::models::{coast_rmse, fit, fit_weighted, model_select, WeightScheme};
use csac_holdover::quality::{noise_variance, stratified_quality, QualityBinSpec};
use csac_holdover::simulator::{
    preset, preset_scenarios, replicate_seed, simulate_dataset, simulate_on_timeline, sky_timeline, ClockSpec,
    Scenario, PROTOCOL_FIT_SAMPLES,
};
use csac_holdover::timeseries::MeasurementSeries;
use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KNOWN_RED: &[u8] = &[5, 6];

/// Measurement-noise gain for the TDOP-coupled experiments, ns per unit TDOP.
const TDOP_GAIN_NS: f64 = 10.0;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

// ---------------------------------------------------------------- 1

fn welford_unbiased(x: &[f64]) -> f64 {
    let (mut mean, mut m2) = (0.0, 0.0);
    for (i, &v) in x.iter().enumerate() {
        let d = v - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (v - mean);
    }
    m2 / (x.len() - 1) as f64
}

fn pairwise_mean_square(x: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += (x[i] - x[j]).powi(2);
        }
    }
    s / (n * (n - 1)) as f64
}

fn criterion1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let (mut identity, mut pairwise, mut shift, mut scale) = (0f64, 0f64, 0f64, 0f64);
    for _ in 0..1000 {
        let n = rng.random_range(2..=200);
        let sigma = 10f64.powf(rng.random_range(-2.0..2.0));
        let centre = sigma * rng.random_range(-10.0..10.0);
        let x: Vec<f64> = (0..n).map(|_| centre + sigma * rng.random_range(-1.7..1.7)).collect();
        let nv = noise_variance(&x).unwrap();
        identity = identity.max(rel(nv, 2.0 * welford_unbiased(&x)));
        pairwise = pairwise.max(rel(nv, pairwise_mean_square(&x)));

        let c = sigma * rng.random_range(-10.0..10.0);
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        shift = shift.max(rel(noise_variance(&shifted).unwrap(), nv));

        let a = 10f64.powf(rng.random_range(-3.0..3.0)) * if rng.random_bool(0.5) { -1.0 } else { 1.0 };
        let scaled: Vec<f64> = x.iter().map(|v| a * v).collect();
        scale = scale.max(rel(noise_variance(&scaled).unwrap(), a * a * nv));
    }
    let tol = 1e-12;
    Verdict::new(
        identity <= tol && pairwise <= tol && shift <= tol && scale <= tol,
        format!(
            "1000 vectors; max rel err: 2*var {identity:.1e}, pairwise {pairwise:.1e}, shift {shift:.1e}, scale {scale:.1e} (tol {tol:.0e})"
        ),
    )
}

// ---------------------------------------------------------------- 2

fn random_los(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let az = rng.random_range(0.0..std::f64::consts::TAU);
    let el = rng.random_range(5f64.to_radians()..std::f64::consts::FRAC_PI_2);
    Vector3::new(el.cos() * az.sin(), el.cos() * az.cos(), el.sin())
}

fn dop_values(d: &DopSet) -> [f64; 5] {
    [d.gdop, d.pdop, d.hdop, d.vdop, d.tdop]
}

fn criterion2() -> Verdict {
    let c = 3f64.sqrt() / 2.0;
    let worked = [
        Vector3::new(0.0, 0.0, 1.0),
        Vector3::new(0.0, 1.0, 0.0),
        Vector3::new(c, -0.5, 0.0),
        Vector3::new(-c, -0.5, 0.0),
    ];
    let worked_err = (dop_from_los(&worked).unwrap().tdop - (1.0f64 / 3.0).sqrt()).abs();

    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let (mut sets, mut degenerate, mut violations) = (0, 0, 0);
    let (mut ident, mut rot) = (0f64, 0f64);
    while sets < 500 {
        let n = rng.random_range(4..=12);
        let los: Vec<Vector3<f64>> = (0..n).map(|_| random_los(&mut rng)).collect();
        let Ok(d) = dop_from_los(&los) else {
            degenerate += 1;
            continue;
        };
        sets += 1;
        ident = ident.max(rel(d.gdop.powi(2), d.pdop.powi(2) + d.tdop.powi(2)));
        ident = ident.max(rel(d.pdop.powi(2), d.hdop.powi(2) + d.vdop.powi(2)));

        let mut more = los.clone();
        more.push(random_los(&mut rng));
        let d2 = dop_from_los(&more).unwrap();
        if dop_values(&d2).iter().zip(dop_values(&d)).any(|(new, old)| *new > old * (1.0 + 1e-9)) {
            violations += 1;
        }

        let q = Quaternion::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let r = UnitQuaternion::from_quaternion(q);
        let rotated: Vec<Vector3<f64>> = los.iter().map(|v| r * v).collect();
        let dr = dop_from_los(&rotated).unwrap();
        rot = rot.max(rel(dr.tdop, d.tdop)).max(rel(dr.gdop, d.gdop));
    }
    let tol = 1e-9;
    Verdict::new(
        worked_err <= tol && ident <= tol && violations == 0 && rot <= tol,
        format!(
            "worked tdop err {worked_err:.1e}; {sets} sets ({degenerate} degenerate skipped): identity {ident:.1e}, \
             monotonicity violations {violations}, rotation {rot:.1e} (tol {tol:.0e})"
        ),
    )
}

// ---------------------------------------------------------------- 3

fn horner(c: &[f64], dt: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * dt + v)
}

/// Weighted least-squares residual sum of squares by Householder QR on a
/// centred, scaled monomial basis.
#[allow(clippy::needless_range_loop)]
fn qr_sse(times: &[f64], values: &[f64], weights: &[f64], degree: usize) -> f64 {
    let n = times.len();
    let m = degree + 1;
    let mid = 0.5 * (times[0] + times[n - 1]);
    let half = 0.5 * (times[n - 1] - times[0]);
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let s = (times[i] - mid) / half;
            let sw = weights[i].sqrt();
            let mut row: Vec<f64> = (0..m).map(|k| sw * s.powi(k as i32)).collect();
            row.push(sw * values[i]);
            row
        })
        .collect();
    for k in 0..m {
        let norm = (k..n).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..n).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..=m {
            let dot: f64 = (k..n).map(|i| v[i - k] * a[i][j]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..n {
                a[i][j] -= f * v[i - k];
            }
        }
    }
    (m..n).map(|i| a[i][m] * a[i][m]).sum()
}

fn criterion3() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let mut recovery = 0f64;
    let mut failures = 0;
    for degree in 1..=4usize {
        for _ in 0..100 {
            let n = rng.random_range(degree + 6..=200);
            let t0 = rng.random_range(0.0..1e4);
            let times: Vec<f64> = (0..n).map(|k| t0 + 2.0 * k as f64).collect();
            let span = times[n - 1] - t0;
            let sign = |r: &mut ChaCha8Rng| if r.random_bool(0.5) { -1.0 } else { 1.0 };
            let mut coeffs = vec![sign(&mut rng) * rng.random_range(100.0..5000.0)];
            for k in 1..=degree {
                coeffs.push(sign(&mut rng) * rng.random_range(0.1..1.0) * 100.0 / span.powi(k as i32));
            }
            let values: Vec<f64> = times.iter().map(|t| horner(&coeffs, t - t0)).collect();
            let weights: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-2.0..2.0))).collect();
            match fit_weighted(&times, &values, &weights, degree) {
                Ok((t_ref, got)) if t_ref == t0 && got.len() == coeffs.len() => {
                    for (g, c) in got.iter().zip(&coeffs) {
                        recovery = recovery.max(rel(*g, *c));
                    }
                }
                _ => failures += 1,
            }
        }
    }

    let mut sse_err = 0f64;
    for _ in 0..100 {
        let degree = rng.random_range(1..=4usize);
        let n = rng.random_range(degree + 2..=50);
        let mut t = rng.random_range(0.0..1e3);
        let times: Vec<f64> = (0..n)
            .map(|_| {
                t += rng.random_range(0.5..5.0);
                t
            })
            .collect();
        let values: Vec<f64> = times.iter().map(|&t| 0.01 * t + rng.random_range(-10.0..10.0)).collect();
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let Ok((t_ref, c)) = fit_weighted(&times, &values, &weights, degree) else {
            failures += 1;
            continue;
        };
        let sse: f64 = (0..n).map(|i| weights[i] * (values[i] - horner(&c, times[i] - t_ref)).powi(2)).sum();
        sse_err = sse_err.max(rel(sse, qr_sse(&times, &values, &weights, degree)));
    }
    Verdict::new(
        recovery <= 1e-9 && sse_err <= 1e-6 && failures == 0,
        format!(
            "400 exact fits: max coeff rel err {recovery:.1e} (tol 1e-9); 100 SSE checks vs QR: max rel err \
             {sse_err:.1e} (tol 1e-6); fit failures {failures}"
        ),
    )
}

// ---------------------------------------------------------------- 4

fn strictly(values: &[Option<f64>], increasing: bool) -> bool {
    let Some(v) = values.iter().copied().collect::<Option<Vec<f64>>>() else {
        return false;
    };
    v.len() >= 2 && v.windows(2).all(|w| if increasing { w[0] < w[1] } else { w[0] > w[1] })
}

/// Scenario (1) location over a stretch of sky where all three TDOP bins and
/// several visible counts occur.
fn quality_scenario() -> Scenario {
    let mut scn = preset(1).unwrap().with_duration(2.0 * 3600.0);
    scn.start += chrono::Duration::seconds(4800);
    scn.mask_rad = 15f64.to_radians();
    scn
}

fn criterion4() -> Verdict {
    let scn = quality_scenario();
    let cst = nominal_gps_constellation();
    let timeline = sky_timeline(&scn, &cst).unwrap();
    let spec = ClockSpec { sigma_rwfm_ns_per_sqrt_s: 0.0, tdop_noise_gain: TDOP_GAIN_NS, ..ClockSpec::default() };
    let by_tdop = QualityBinSpec::by_tdop(vec![1.25, 2.0]).unwrap();
    let by_n_vis = QualityBinSpec::by_n_vis();
    let (mut tdop_ok, mut nvis_ok) = (0, 0);
    let mut bins = String::new();
    for run in 0..100u64 {
        let reps: Vec<MeasurementSeries> = (0..5)
            .map(|i| simulate_on_timeline(&scn, &timeline, &spec, replicate_seed(1000 + run, i)).unwrap())
            .collect();
        let t = stratified_quality(&reps, &by_tdop).unwrap();
        let v = stratified_quality(&reps, &by_n_vis).unwrap();
        tdop_ok += strictly(&t.variances(), true) as u32;
        nvis_ok += strictly(&v.variances(), false) as u32;
        if run == 0 {
            bins = v.bins.iter().map(|b| b.bin.clone()).collect::<Vec<_>>().join("/");
        }
    }
    Verdict::new(
        tdop_ok >= 99 && nvis_ok >= 99,
        format!(
            "100 runs x 5 replicates: TDOP increasing {tdop_ok}/100, n_vis ({bins}) decreasing {nvis_ok}/100 (need 99)"
        ),
    )
}

// ---------------------------------------------------------------- 5, 6

const ENSEMBLE_FIT: usize = 1801;
const ENSEMBLE_HOURS: f64 = 3.0;

fn ensemble(scn: &Scenario, spec: &ClockSpec) -> Vec<(MeasurementSeries, MeasurementSeries)> {
    let scn = scn.clone().with_duration(ENSEMBLE_HOURS * 3600.0);
    let timeline = sky_timeline(&scn, &nominal_gps_constellation()).unwrap();
    (0..100u64)
        .map(|seed| {
            let ds = simulate_on_timeline(&scn, &timeline, spec, seed).unwrap();
            ds.split_at(ENSEMBLE_FIT).unwrap()
        })
        .collect()
}

fn criterion5() -> Verdict {
    let spec = ClockSpec { d_ns_per_s2: 0.0, ..ClockSpec::default() };
    let mut wins = [0u32; 4];
    for (fit_w, coast_w) in ensemble(&preset(1).unwrap(), &spec) {
        let report = model_select(&fit_w, &coast_w, &[1, 2, 3, 4], &[WeightScheme::Uniform]).unwrap();
        if let Some(best) = report.best() {
            wins[best.degree - 1] += 1;
        }
    }
    Verdict::new(
        wins[0] >= 95,
        format!(
            "lowest coast RMSE by degree 1/2/3/4: {}/{}/{}/{} of 100 (need degree 1 >= 95)",
            wins[0], wins[1], wins[2], wins[3]
        ),
    )
}

fn criterion6() -> Verdict {
    let spec = ClockSpec { d_ns_per_s2: 0.0, tdop_noise_gain: TDOP_GAIN_NS, ..ClockSpec::default() };
    let mut all = true;
    let mut parts = Vec::new();
    for (p, scn) in preset_scenarios().iter().enumerate() {
        let schemes = [
            WeightScheme::Uniform,
            WeightScheme::VisnumRatio { n_max: scn.max_sats.unwrap() as u32 },
            WeightScheme::InverseTdop,
        ];
        let mut sums = [0.0; 3];
        let (mut tdop_le_vis, mut vis_le_uni, mut runs) = (0, 0, 0);
        for (fit_w, coast_w) in ensemble(scn, &spec) {
            let report = model_select(&fit_w, &coast_w, &[1], &schemes).unwrap();
            let r: Vec<Option<f64>> = ["uniform", "visnum", "inv_tdop"].iter().map(|s| report.rmse(1, s)).collect();
            runs += 1;
            let [Some(uni), Some(vis), Some(tdop)] = r[..] else {
                continue;
            };
            sums[0] += uni;
            sums[1] += vis;
            sums[2] += tdop;
            tdop_le_vis += (tdop <= vis) as u32;
            vis_le_uni += (vis <= uni) as u32;
        }
        let mean = sums.map(|s| s / runs as f64);
        let ok = mean[2] <= mean[1]
            && mean[1] <= mean[0]
            && tdop_le_vis as f64 >= 0.6 * runs as f64
            && vis_le_uni as f64 >= 0.6 * runs as f64;
        all &= ok;
        parts.push(format!(
            "({}) mean uni/vis/tdop {:.2}/{:.2}/{:.2} ns, tdop<=vis {tdop_le_vis}%, vis<=uni {vis_le_uni}% [{}]",
            p + 1,
            mean[0],
            mean[1],
            mean[2],
            if ok { "ok" } else { "x" }
        ));
    }
    Verdict::new(all, parts.join("; "))
}

// ---------------------------------------------------------------- 7

fn criterion7() -> Verdict {
    let cst = nominal_gps_constellation();
    let mut all = true;
    let mut parts = Vec::new();
    for (p, scn) in preset_scenarios().iter().enumerate() {
        let started = Instant::now();
        let ds = simulate_dataset(scn, &ClockSpec::default(), &cst).unwrap();
        let (fit_w, coast_w) = ds.split_at(PROTOCOL_FIT_SAMPLES).unwrap();
        let model = fit(&fit_w, 1, WeightScheme::InverseTdop).unwrap();
        let rmse = coast_rmse(&model, &coast_w);
        let secs = started.elapsed().as_secs_f64();
        let ok = (100.0..=10_000.0).contains(&rmse) && secs < 60.0 && coast_w.len() == 21_600;
        all &= ok;
        parts.push(format!("({}) {:.3} us in {secs:.1} s", p + 1, rmse / 1000.0));
    }
    Verdict::new(all, format!("weighted(TDOP) linear coast RMSE: {} (band 0.1-10 us)", parts.join(", ")))
}

// ---------------------------------------------------------------- 8

fn criterion8() -> Verdict {
    let table = [
        ((2023, 1, 10, 10), 37.6315, 126.3633, 11.665, 7),
        ((2023, 1, 8, 4), 43.0830, -77.5890, 206.550, 8),
        ((2023, 1, 9, 4), 43.7800, 11.2500, 31.200, 9),
    ];
    let presets = preset_scenarios();
    let mut mismatches = Vec::new();
    for (i, (scn, ((y, mo, d, h), lat, lon, alt, cap))) in presets.iter().zip(table).enumerate() {
        let fields_ok = scn.start == Utc.with_ymd_and_hms(y, mo, d, h, 0, 0).unwrap()
            && scn.rx.lat_rad == f64::to_radians(lat)
            && scn.rx.lon_rad == f64::to_radians(lon)
            && scn.rx.alt_m == alt
            && scn.max_sats == Some(cap)
            && scn.cadence_s == 2.0
            && scn.duration_s == 18.0 * 3600.0
            && scn.sample_count() == 32_401;
        if !fields_ok {
            mismatches.push(i + 1);
        }
    }
    let ds = simulate_dataset(&presets[0], &ClockSpec::default(), &nominal_gps_constellation()).unwrap();
    let (fit_w, coast_w) = ds.split_at(PROTOCOL_FIT_SAMPLES).unwrap();
    let ok = presets.len() == 3
        && mismatches.is_empty()
        && ds.len() == 32_401
        && fit_w.len() == 10_801
        && coast_w.len() == 21_600;
    Verdict::new(
        ok,
        format!(
            "presets {} match scenario table (mismatched: {mismatches:?}); simulated {} samples, split {}/{}",
            presets.len(),
            ds.len(),
            fit_w.len(),
            coast_w.len()
        ),
    )
}

// ---------------------------------------------------------------- 9

fn run_pipeline(dir: &Path) -> Result<(), String> {
    let bin = env!("CARGO_BIN_EXE_csac");
    let run = |args: &[&str]| -> Result<(), String> {
        let o = Command::new(bin).args(args).output().map_err(|e| e.to_string())?;
        if o.status.success() {
            Ok(())
        } else {
            Err(String::from_utf8_lossy(&o.stderr).into_owned())
        }
    };
    let out = dir.to_str().unwrap();
    run(&["simulate", "--preset", "1", "--seed", "20230110", "-o", out])?;
    let csv = dir.join("scenario1_incheon.csv");
    run(&["coast", csv.to_str().unwrap(), "--degrees", "1,2,3,4", "-o", out])
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| {
            let path = e.unwrap().path();
            (path.extension()? == "csv")
                .then(|| (path.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&path).unwrap()))
        })
        .collect();
    files.sort();
    files
}

fn criterion9() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        if let Err(e) = run_pipeline(dir) {
            return Verdict::new(false, format!("pipeline failed: {e}"));
        }
    }
    let (fa, fb) = (csv_files(&a), csv_files(&b));
    let bytes: usize = fa.iter().map(|(_, d)| d.len()).sum();
    Verdict::new(
        !fa.is_empty() && fa == fb,
        format!(
            "simulate+coast twice with seed 20230110: {} CSV files, {bytes} bytes, identical: {}",
            fa.len(),
            fa == fb
        ),
    )
}

// ----------------------------------------------------------------

/// Id, name, runtime budget in seconds, check.
type Criterion = (u8, &'static str, u64, fn() -> Verdict);

fn main() -> ExitCode {
    let strict = std::env::var("CSAC_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let criteria: [Criterion; 9] = [
        (1, "noise variance identity", 5, criterion1),
        (2, "DOP oracle", 10, criterion2),
        (3, "WLS correctness", 10, criterion3),
        (4, "quality trends by TDOP and n_vis", 120, criterion4),
        (5, "degree 1 lowest coast RMSE", 120, criterion5),
        (6, "weighting order TDOP <= satnum <= uniform", 180, criterion6),
        (7, "coast RMSE magnitude band", 180, criterion7),
        (8, "protocol fidelity", 30, criterion8),
        (9, "end-to-end determinism", 60, criterion9),
    ];
    let mut fatal = 0;
    let mut failed = 0;
    println!("acceptance: {} criteria", criteria.len());
    for (id, name, budget, run) in criteria {
        let started = Instant::now();
        let v = run();
        let elapsed = started.elapsed();
        let in_time = elapsed < Duration::from_secs(budget);
        let pass = v.pass && in_time;
        let known = KNOWN_RED.contains(&id);
        let tag = match (pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known red)",
            (false, false) => "FAIL",
        };
        println!(
            "criterion {id} {tag}: {name}: {} [{:.1} s, budget {budget} s{}]",
            v.detail,
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", over budget" }
        );
        if pass && known {
            println!("criterion {id} note: listed as known red but passed");
        }
        if !pass {
            failed += 1;
            if !known || strict {
                fatal += 1;
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed, {fatal} fatal", criteria.len() - failed);
    if fatal == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
