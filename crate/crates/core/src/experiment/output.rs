use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::json;

use super::run::{test_block_sizes, Experiment, ResultRow, RunOutput};
use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::features::META_FEATURE_NAMES;
use crate::selector::{SelectionMode, HIDDEN_UNITS, WEIGHTS_VERSION};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn csv_error(e: csv::Error) -> Error {
    Error::Format(format!("results csv: {e}"))
}

/// Comment lines carrying the code version, experiment and config.
pub fn header_lines(kind: Experiment, cfg: &ExperimentConfig) -> Result<String> {
    Ok(format!("# cogsel {VERSION}\n# experiment {kind}\n# config {}\n", serde_json::to_string(cfg)?))
}

pub fn results_csv(kind: Experiment, cfg: &ExperimentConfig, rows: &[ResultRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(header_lines(kind, cfg)?.into_bytes());
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

pub fn parse_results(text: &str) -> Result<Vec<ResultRow>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let rows: Vec<ResultRow> = r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_error)?;
    for row in &rows {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !in_unit(row.selection_accuracy) || !in_unit(row.recognition_accuracy) || !in_unit(row.mislabel_ratio) {
            return Err(Error::Format(format!("row out of range: {row:?}")));
        }
    }
    Ok(rows)
}

pub fn events_jsonl(kind: Experiment, cfg: &ExperimentConfig, out: &RunOutput) -> Result<String> {
    let mut s = serde_json::to_string(&json!({ "version": VERSION, "experiment": kind, "config": cfg }))?;
    s.push('\n');
    for e in &out.events {
        s.push_str(&serde_json::to_string(e)?);
        s.push('\n');
    }
    Ok(s)
}

/// Identifies one plotted curve.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SeriesKey {
    pub experiment: Experiment,
    /// Mislabel ratio in millionths, so the key is orderable.
    pub noise_ppm: u64,
    pub selection_mode: SelectionMode,
    pub arm: String,
}

impl SeriesKey {
    pub fn file_name(&self) -> String {
        let noise = if self.experiment == Experiment::Noise {
            format!("_r{:.2}", self.noise_ppm as f64 / 1e6)
        } else {
            String::new()
        };
        format!("{}{noise}_{}_{}.dat", self.experiment, self.selection_mode.label(), self.arm)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub test_index: usize,
    pub seeds: usize,
    pub selection: (f64, f64),
    pub recognition: (f64, f64),
    pub ccb_size: f64,
    pub mislabel_ratio: f64,
}

/// Mean and standard error (n - 1 denominator; 0 for a single value).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Per-seed averages over datasets, then mean and standard error across
/// seeds, for every (experiment, ratio, mode, arm) curve.
pub fn aggregate(rows: &[ResultRow]) -> BTreeMap<SeriesKey, Vec<SeriesPoint>> {
    type Cell = BTreeMap<usize, Vec<[f64; 4]>>;
    let mut grouped: BTreeMap<SeriesKey, BTreeMap<usize, Cell>> = BTreeMap::new();
    for r in rows {
        let key = SeriesKey {
            experiment: r.experiment,
            noise_ppm: (r.noise_ratio * 1e6).round() as u64,
            selection_mode: r.selection_mode,
            arm: r.arm.clone(),
        };
        grouped.entry(key).or_default().entry(r.test_index).or_default().entry(r.seed).or_default().push([
            r.selection_accuracy,
            r.recognition_accuracy,
            r.ccb_size as f64,
            r.mislabel_ratio,
        ]);
    }
    grouped
        .into_iter()
        .map(|(key, tests)| {
            let points = tests
                .into_iter()
                .map(|(test_index, seeds)| {
                    let per_seed: Vec<[f64; 4]> = seeds
                        .values()
                        .map(|v| std::array::from_fn(|j| mean(&v.iter().map(|x| x[j]).collect::<Vec<_>>())))
                        .collect();
                    let column = |j: usize| per_seed.iter().map(|x| x[j]).collect::<Vec<_>>();
                    SeriesPoint {
                        test_index,
                        seeds: per_seed.len(),
                        selection: mean_stderr(&column(0)),
                        recognition: mean_stderr(&column(1)),
                        ccb_size: mean(&column(2)),
                        mislabel_ratio: mean(&column(3)),
                    }
                })
                .collect();
            (key, points)
        })
        .collect()
}

/// One gnuplot-ready file per curve, keyed by file name.
pub fn emit_plotdata(csv_text: &str) -> Result<BTreeMap<String, String>> {
    let rows = parse_results(csv_text)?;
    if rows.is_empty() {
        return Err(Error::Format("results csv has no rows".into()));
    }
    let mut files = BTreeMap::new();
    for (key, points) in aggregate(&rows) {
        let mut s = format!(
            "# {} {} mode={} noise={:.2}\n# test seeds selection_mean selection_stderr recognition_mean recognition_stderr ccb_size mislabel_ratio\n",
            key.experiment,
            key.arm,
            key.selection_mode.label(),
            key.noise_ppm as f64 / 1e6
        );
        for p in points {
            writeln!(
                s,
                "{} {} {:.6} {:.6} {:.6} {:.6} {:.1} {:.6}",
                p.test_index, p.seeds, p.selection.0, p.selection.1, p.recognition.0, p.recognition.1, p.ccb_size, p.mislabel_ratio
            )
            .expect("writing to a string");
        }
        files.insert(key.file_name(), s);
    }
    Ok(files)
}

/// Run metadata: the config plus every constant a reader needs to audit it.
pub fn meta_json(kind: Experiment, cfg: &ExperimentConfig) -> Result<String> {
    let d = &cfg.dynamic;
    let blocks = if kind == Experiment::Noise { cfg.noise_blocks() } else { &cfg.blocks };
    let meta = json!({
        "version": VERSION,
        "experiment": kind,
        "config": cfg,
        "selector": {
            "layers": [META_FEATURE_NAMES.len(), HIDDEN_UNITS, "outputs"],
            "outputs": { "algorithm": SelectionMode::AlgorithmSelect.outputs(), "hyperparameter": SelectionMode::HpSelect.outputs() },
            "hidden_activation": "tanh",
            "output": "softmax",
            "loss": "mean cross-entropy",
            "optimizer": "full-batch adam, beta1 0.9, beta2 0.999, eps 1e-8; rejected steps are undone, the rate halved and the moments reset",
            "learning_rate": cfg.learning_rate,
            "epochs": cfg.epochs,
            "init": "uniform(-0.1, 0.1)",
            "retraining": "from scratch after every case-base change",
            "weights_version": WEIGHTS_VERSION,
        },
        "meta_features": META_FEATURE_NAMES,
        "block_sizes": blocks,
        "ccb_sizes": ExperimentConfig::ccb_sizes(blocks),
        "test_block_sizes": test_block_sizes(blocks),
        "mtl_examples": cfg.mtl_examples,
        "offline_passes": cfg.offline_passes,
        "offline_budget": cfg.offline_budget,
        "change_points": { "requirement": d.requirement_change, "dataset": d.dataset_change },
        "dynamic": d,
        "noise_ratios": cfg.noise.ratios,
        "plateau_target": {
            "value": d.plateau_target,
            "directly_comparable": false,
            "note": "desk-scale analog of a published plateau; pools, features and selector differ",
        },
    });
    Ok(serde_json::to_string_pretty(&meta)? + "\n")
}

/// Writes `results.csv`, `events.jsonl`, `series/*.dat` and `meta.json`.
pub fn write_outputs(dir: &Path, kind: Experiment, cfg: &ExperimentConfig, out: &RunOutput) -> Result<()> {
    fs::create_dir_all(dir.join("series"))?;
    let csv = results_csv(kind, cfg, &out.rows)?;
    fs::write(dir.join("results.csv"), &csv)?;
    fs::write(dir.join("events.jsonl"), events_jsonl(kind, cfg, out)?)?;
    for (name, text) in emit_plotdata(&csv)? {
        fs::write(dir.join("series").join(name), text)?;
    }
    fs::write(dir.join("meta.json"), meta_json(kind, cfg)?)?;
    Ok(())
}
