use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use csac_holdover::models::{model_select, SchemeKind, MAX_DEGREE};
use csac_holdover::quality::{stratified_quality, QualityBinSpec};
use csac_holdover::simulator::{replicate, simulate_dataset, sky_timeline, Scenario, ScenarioConfig, SimConfig};
use csac_holdover::timeseries::{emit_series, parse_series, MeasurementSeries};
use serde_json::json;

use crate::output::{read_text, CliError, Writer, EXIT_IO, EXIT_USAGE};
use crate::{CoastArgs, DopArgs, ModeArg, QualityArgs, ScenarioSource, SimulateArgs};

fn load_config(source: &ScenarioSource) -> Result<SimConfig, CliError> {
    match (&source.config, source.preset) {
        (Some(path), _) => {
            let text = read_text(path, EXIT_USAGE)?;
            SimConfig::from_json(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
        }
        (None, Some(n)) => Ok(SimConfig {
            scenario: ScenarioConfig { preset: Some(n), ..Default::default() },
            replicates: 1,
            ..Default::default()
        }),
        (None, None) => Err(CliError::usage("either --config or --preset is required")),
    }
}

fn resolve(mut cfg: ScenarioConfig, seed: Option<u64>, duration_s: Option<f64>) -> Result<Scenario, CliError> {
    cfg.seed = seed.or(cfg.seed);
    cfg.duration_s = duration_s.or(cfg.duration_s);
    cfg.resolve().map_err(|e| CliError::usage(e.to_string()))
}

fn inputs_of(source: &ScenarioSource) -> Vec<PathBuf> {
    source.config.iter().cloned().collect()
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.source)?;
    let scn = resolve(cfg.scenario.clone(), args.seed, args.duration_s)?;
    let k = args.replicates.unwrap_or(cfg.replicates);
    if k == 0 {
        return Err(CliError::usage("replicates must be at least 1"));
    }
    let cst = cfg.constellation().map_err(|e| CliError::usage(format!("constellation: {e}")))?;
    let datasets = if k == 1 {
        vec![simulate_dataset(&scn, &cfg.clock, &cst)]
    } else {
        match replicate(&scn, &cfg.clock, &cst, k) {
            Ok(v) => v.into_iter().map(Ok).collect(),
            Err(e) => vec![Err(e)],
        }
    };

    let mut out = Writer::create(&args.out.out)?;
    for ds in datasets {
        let ds = ds.map_err(|e| CliError::usage(e.to_string()))?;
        out.write(&format!("{}.csv", ds.label()), &emit_series(&ds))?;
    }
    let config = json!({
        "scenario": scn,
        "clock": cfg.clock,
        "replicates": k,
        "constellation": cfg.constellation,
    });
    out.finish(&format!("{}.simulate", scn.name), "simulate", config, inputs_of(&args.source), Some(scn.seed))
}

pub fn dop(args: &DopArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.source)?;
    let scn = resolve(cfg.scenario.clone(), None, args.duration_s)?;
    let cst = cfg.constellation().map_err(|e| CliError::usage(format!("constellation: {e}")))?;
    let timeline = sky_timeline(&scn, &cst).map_err(|e| CliError::usage(e.to_string()))?;

    let mut csv = String::from("t_rel_s,n_vis,tdop,gdop,pdop,hdop,vdop\n");
    for m in &timeline {
        let _ = write!(csv, "{},{}", m.t_rel_s, m.n_vis);
        match m.dops {
            Some(d) => {
                let _ = writeln!(csv, ",{},{},{},{},{}", d.tdop, d.gdop, d.pdop, d.hdop, d.vdop);
            }
            None => csv.push_str(",,,,,\n"),
        }
    }
    let mut out = Writer::create(&args.out.out)?;
    out.write(&format!("{}_dop.csv", scn.name), &csv)?;
    let config = json!({ "scenario": scn, "constellation": cfg.constellation });
    out.finish(&format!("{}.dop", scn.name), "dop", config, inputs_of(&args.source), None)
}

fn load_dataset(path: &Path, cadence_s: Option<f64>) -> Result<MeasurementSeries, CliError> {
    let text = read_text(path, EXIT_IO)?;
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_series(text.as_bytes(), cadence_s)
        .map(|s| s.with_label(label))
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn quality(args: &QualityArgs) -> Result<(), CliError> {
    if args.datasets.len() < 2 {
        return Err(CliError::usage(format!("quality needs at least 2 datasets, got {}", args.datasets.len())));
    }
    let (spec, mode) = match args.mode {
        ModeArg::NVis => (QualityBinSpec::by_n_vis(), "n_vis"),
        ModeArg::Tdop => {
            (QualityBinSpec::by_tdop(args.thresholds.clone()).map_err(|e| CliError::usage(e.to_string()))?, "tdop")
        }
    };
    let datasets = args.datasets.iter().map(|p| load_dataset(p, args.cadence.0)).collect::<Result<Vec<_>, _>>()?;
    let report = stratified_quality(&datasets, &spec).map_err(|e| CliError::data(e.to_string()))?;

    let mut out = Writer::create(&args.out.out)?;
    out.write(&format!("quality_{mode}.csv"), &report.to_csv())?;
    out.write_json(&format!("quality_{mode}.json"), &report)?;
    let config = json!({ "bins": spec, "cadence_s": args.cadence.0 });
    out.finish(&format!("quality_{mode}"), "quality", config, args.datasets.clone(), None)
}

pub fn coast(args: &CoastArgs) -> Result<(), CliError> {
    if args.degrees.is_empty() || args.degrees.iter().any(|d| !(1..=MAX_DEGREE).contains(d)) {
        return Err(CliError::usage(format!("degrees must lie in 1..={MAX_DEGREE}, got {:?}", args.degrees)));
    }
    let kinds = args
        .schemes
        .iter()
        .map(|s| s.parse::<SchemeKind>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::usage(e.to_string()))?;
    if kinds.is_empty() {
        return Err(CliError::usage("no weighting schemes given"));
    }

    let series = load_dataset(&args.dataset, args.cadence.0)?;
    let (fit_window, coast_window) = series.split_at(args.fit_count).map_err(|_| {
        CliError::usage(format!("fit count {} out of range for a dataset of {} samples", args.fit_count, series.len()))
    })?;
    let n_max = args.n_max.unwrap_or_else(|| fit_window.samples().iter().map(|s| s.n_vis).max().unwrap_or(0));
    let schemes: Vec<_> = kinds.iter().map(|k| k.with_n_max(n_max)).collect();
    let report =
        model_select(&fit_window, &coast_window, &args.degrees, &schemes).map_err(|e| CliError::data(e.to_string()))?;

    let models: Vec<_> = report.rows.iter().filter_map(|r| r.model.clone()).collect();
    let mut csv = String::from("t_rel_s,window,truth_ns");
    for m in &models {
        let _ = write!(csv, ",deg{}_{}", m.degree, m.scheme);
    }
    csv.push('\n');
    for (i, s) in series.samples().iter().enumerate() {
        let window = if i < args.fit_count { "fit" } else { "coast" };
        let _ = write!(csv, "{},{window},{}", s.t_rel_s(), s.offset_ns);
        for m in &models {
            let _ = write!(csv, ",{}", m.predict(s.t_rel_s()));
        }
        csv.push('\n');
    }

    let stem = series.label().to_string();
    let mut out = Writer::create(&args.out.out)?;
    out.write(&format!("{stem}_coast.csv"), &report.to_csv())?;
    out.write(&format!("{stem}_predictions.csv"), &csv)?;
    out.write_json(&format!("{stem}_coast.json"), &json!({ "dataset": stem, "report": report, "models": models }))?;
    for row in report.rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("csac: degree {} {} failed: {}", row.degree, row.scheme, row.error.as_deref().unwrap_or_default());
    }
    let config = json!({
        "fit_count": args.fit_count,
        "degrees": args.degrees,
        "schemes": schemes,
        "n_max": n_max,
        "cadence_s": args.cadence.0,
    });
    out.finish(&format!("{stem}.coast"), "coast", config, vec![args.dataset.clone()], None)
}
