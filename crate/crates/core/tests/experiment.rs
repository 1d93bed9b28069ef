use std::collections::BTreeMap;
use std::sync::OnceLock;

use cogsel_core::experiment::{
    emit_plotdata, mean_stderr, parse_results, results_csv, run_experiment, write_outputs, DynamicConfig, Experiment,
    ExperimentConfig, NoiseConfig, ResultRow, RunOutput, Workbench, CL_ARM,
};
use cogsel_core::pool::GridPoint;
use cogsel_core::selector::SelectionMode;
use proptest::prelude::*;

fn tiny() -> ExperimentConfig {
    ExperimentConfig {
        seeds: 2,
        datasets: vec!["dataset5".into()],
        size_fractions: vec![0.1],
        blocks: vec![4, 4, 6],
        mtl_examples: vec![3, 6],
        epochs: 150,
        dynamic: DynamicConfig {
            tests: 5,
            block: 4,
            pretrain: 4,
            requirement_change: 2,
            dataset_change: 4,
            initial_dataset: "dataset5".into(),
            new_dataset: "dataset4".into(),
            plateau_target: 0.8,
        },
        noise: NoiseConfig { ratios: vec![0.3], blocks: vec![] },
        threads: 1,
        ..ExperimentConfig::default()
    }
}

fn bench() -> &'static Workbench {
    static CELL: OnceLock<Workbench> = OnceLock::new();
    CELL.get_or_init(|| Workbench::build(&tiny()).unwrap())
}

fn run(kind: Experiment, cfg: &ExperimentConfig) -> RunOutput {
    run_experiment(kind, cfg, bench()).unwrap()
}

fn row(seed: usize, test_index: usize, dataset: &str, selection: f64) -> ResultRow {
    ResultRow {
        experiment: Experiment::SelfLearning,
        arm: CL_ARM.into(),
        selection_mode: SelectionMode::HpSelect,
        noise_ratio: 0.0,
        seed,
        test_index,
        dataset: dataset.into(),
        requirement: "mixed".into(),
        selection_accuracy: selection,
        recognition_accuracy: 0.5,
        ccb_size: 10 * test_index,
        mislabel_ratio: 0.0,
    }
}

/// Parses a series file into rows of numbers.
fn series(text: &str) -> Vec<Vec<f64>> {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| l.split(' ').map(|v| v.parse().unwrap()).collect()).collect()
}

#[test]
fn config_round_trips_and_fills_defaults() {
    let cfg = tiny();
    let back = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);
    let partial = ExperimentConfig::from_json(r#"{"seeds": 3, "noise": {"ratios": [0.2]}}"#).unwrap();
    assert_eq!(partial.seeds, 3);
    assert_eq!(partial.noise.ratios, [0.2]);
    assert_eq!(partial.blocks, ExperimentConfig::default().blocks);
    assert!(ExperimentConfig::from_json(r#"{"seed": 3}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"noise": {"ratios": [1.0]}}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"dynamic": {"dataset_change": 40}}"#).is_err());
}

#[test]
fn plotdata_averages_over_seeds() {
    let mut rows = Vec::new();
    for seed in 0..10 {
        for t in 1..=6 {
            for (d, shift) in [("dataset1", 0.0), ("dataset2", 0.2)] {
                rows.push(row(seed, t, d, 0.1 * t as f64 / 2.0 + shift + 0.01 * seed as f64));
            }
        }
    }
    let csv = results_csv(Experiment::SelfLearning, &tiny(), &rows).unwrap();
    let files = emit_plotdata(&csv).unwrap();
    assert_eq!(files.keys().collect::<Vec<_>>(), ["self-learning_hyperparameter_CL.dat"]);
    let points = series(&files["self-learning_hyperparameter_CL.dat"]);
    assert_eq!(points.len(), 6);
    for (i, p) in points.iter().enumerate() {
        let t = (i + 1) as f64;
        assert_eq!(p[0], t);
        assert_eq!(p[1], 10.0);
        // Per-seed values are 0.05 t + 0.1 + 0.01 s for s = 0..9.
        let per_seed: Vec<f64> = (0..10).map(|s| 0.05 * t + 0.1 + 0.01 * s as f64).collect();
        let mean = per_seed.iter().sum::<f64>() / 10.0;
        let sd = (per_seed.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 9.0).sqrt();
        assert!((p[2] - mean).abs() < 2e-6);
        assert!((p[3] - sd / 10f64.sqrt()).abs() < 2e-6);
        assert_eq!((p[4], p[5]), (0.5, 0.0));
        assert_eq!(p[6], 10.0 * t);
    }
}

#[test]
fn a_single_seed_has_zero_stderr() {
    let rows: Vec<ResultRow> = (1..=3).map(|t| row(0, t, "dataset1", 0.4)).collect();
    let csv = results_csv(Experiment::SelfLearning, &tiny(), &rows).unwrap();
    for p in series(&emit_plotdata(&csv).unwrap()["self-learning_hyperparameter_CL.dat"]) {
        assert_eq!((p[1], p[2], p[3]), (1.0, 0.4, 0.0));
    }
    assert!(emit_plotdata("# nothing\n").is_err());
}

#[test]
fn results_csv_round_trips_and_rejects_bad_rows() {
    let rows = vec![row(0, 1, "dataset1", 0.125), row(1, 2, "dataset2", 1.0)];
    let csv = results_csv(Experiment::SelfLearning, &tiny(), &rows).unwrap();
    assert!(csv.starts_with("# cogsel "));
    assert_eq!(parse_results(&csv).unwrap(), rows);
    let bad = results_csv(Experiment::SelfLearning, &tiny(), &[row(0, 1, "dataset1", 1.5)]).unwrap();
    assert!(parse_results(&bad).is_err());
}

#[test]
fn self_learning_rows_cover_every_test_and_arm() {
    let cfg = tiny();
    let out = run(Experiment::SelfLearning, &cfg);
    let tests = cfg.blocks.len();
    let arms = 1 + cfg.mtl_examples.len();
    assert_eq!(out.rows.len(), tests * arms * cfg.modes.len() * cfg.seeds * cfg.datasets.len());
    assert_eq!(out.events.len(), out.rows.len());
    for (r, e) in out.rows.iter().zip(&out.events) {
        let hits = e
            .event
            .selections
            .iter()
            .zip(&e.event.oracle)
            .filter(|(s, o)| {
                r.selection_mode.matches(&GridPoint::from_index(**s).unwrap(), &GridPoint::from_index(**o).unwrap())
            })
            .count();
        assert!((r.selection_accuracy - hits as f64 / e.event.selections.len() as f64).abs() < 1e-12);
        assert_eq!(r.test_index, e.event.test_index);
        assert_eq!(r.dataset, e.dataset);
    }
    let cl_sizes: Vec<usize> =
        out.rows.iter().filter(|r| r.arm == CL_ARM && r.seed == 0 && r.selection_mode == SelectionMode::HpSelect).map(|r| r.ccb_size).collect();
    assert_eq!(cl_sizes, [4, 8, 14]);
    for r in out.rows.iter().filter(|r| r.arm != CL_ARM) {
        assert_eq!(r.ccb_size.to_string(), r.arm.trim_start_matches("MtL-"));
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let one = run(Experiment::Noise, &tiny());
    let three = run(Experiment::Noise, &ExperimentConfig { threads: 3, ..tiny() });
    assert_eq!(one, three);
}

#[test]
fn noise_rows_carry_the_ratio_and_cleanup() {
    let out = run(Experiment::Noise, &tiny());
    assert!(out.rows.iter().all(|r| r.noise_ratio == 0.3));
    let mut cl: BTreeMap<(usize, SelectionMode), Vec<f64>> = BTreeMap::new();
    for r in out.rows.iter().filter(|r| r.arm == CL_ARM) {
        cl.entry((r.seed, r.selection_mode)).or_default().push(r.mislabel_ratio);
    }
    for ratios in cl.values() {
        assert!(ratios[0] > 0.0, "{ratios:?}");
        assert!(ratios.windows(2).all(|w| w[1] <= w[0]), "{ratios:?}");
    }
}

#[test]
fn dynamic_schedule_switches_requirement_then_dataset() {
    let cfg = tiny();
    let out = run(Experiment::Dynamic, &cfg);
    for r in out.rows.iter().filter(|r| r.arm == CL_ARM) {
        let want_req = if r.test_index >= 2 { "accuracy-first" } else { "time-first" };
        let want_ds = if r.test_index >= 4 { "dataset4" } else { "dataset5" };
        assert_eq!((r.requirement.as_str(), r.dataset.as_str()), (want_req, want_ds), "test {}", r.test_index);
    }
    assert_eq!(out.rows.len(), cfg.dynamic.tests * (1 + cfg.mtl_examples.len()) * cfg.modes.len() * cfg.seeds);
}

#[test]
fn written_outputs_parse_back() {
    let cfg = tiny();
    let out = run(Experiment::SelfLearning, &cfg);
    let dir = tempfile::tempdir().unwrap();
    write_outputs(dir.path(), Experiment::SelfLearning, &cfg, &out).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(parse_results(&csv).unwrap().len(), out.rows.len());
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["ccb_sizes"], serde_json::json!([4, 8, 14]));
    assert_eq!(meta["change_points"]["dataset"], 4);
    let events = std::fs::read_to_string(dir.path().join("events.jsonl")).unwrap();
    assert_eq!(events.lines().count(), out.events.len() + 1);
    let series = std::fs::read_dir(dir.path().join("series")).unwrap().count();
    assert_eq!(series, cfg.modes.len() * (1 + cfg.mtl_examples.len()));
}

proptest! {
    #[test]
    fn stderr_shifts_and_scales(values in prop::collection::vec(-5.0..5.0f64, 2..30), shift in -3.0..3.0f64, scale in 0.1..10.0f64) {
        let (m, s) = mean_stderr(&values);
        let moved: Vec<f64> = values.iter().map(|v| v * scale + shift).collect();
        let (m2, s2) = mean_stderr(&moved);
        prop_assert!((m2 - (m * scale + shift)).abs() < 1e-9);
        prop_assert!((s2 - s * scale).abs() < 1e-9);
        let constant = vec![values[0]; values.len()];
        let (c, sc) = mean_stderr(&constant);
        prop_assert!((c - values[0]).abs() < 1e-12 && sc < 1e-12);
    }
}

#[test]
fn readme_config_is_the_default() {
    let readme = include_str!("../../../README.md");
    let start = readme.find("```json\n").unwrap() + "```json\n".len();
    let end = start + readme[start..].find("```").unwrap();
    assert_eq!(ExperimentConfig::from_json(&readme[start..end]).unwrap(), ExperimentConfig::default());
}
