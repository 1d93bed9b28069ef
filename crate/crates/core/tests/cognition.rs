use std::sync::{Arc, OnceLock};

use cogsel_core::cognition::{
    cognitive_evaluate, noisy_labels, run_protocol, Baseline, Catalog, Cognition, Context, Prepared, Protocol,
    ProtocolStep, Verdict,
};
use cogsel_core::experiment::{ExperimentConfig, Family, Workbench};
use cogsel_core::features::{MetaFeatures, Priority, TaskRequirement};
use cogsel_core::memory::{CaseBase, CaseDraft, CaseOrigin, Outcome};
use cogsel_core::pool::{evaluation_value, list_grid, GridPoint, LearningResult, GRID_SIZE};
use cogsel_core::rng::SplitMix64;
use cogsel_core::selector::{SelectionMode, TrainConfig};
use cogsel_core::workload::{build_dataset, DatasetSpec, ModClass};

const FAST: TrainConfig = TrainConfig { learning_rate: 0.01, epochs: 400, seed: 1 };

/// Three small environments that differ in SNR and class set.
fn small() -> &'static (Arc<Catalog>, Vec<Family>) {
    static CELL: OnceLock<(Arc<Catalog>, Vec<Family>)> = OnceLock::new();
    CELL.get_or_init(|| {
        use ModClass::*;
        let specs = [
            ("hi", vec![Bpsk, Qpsk, Gfsk, AmDsb, Wbfm], 18.0),
            ("mid", vec![Bpsk, Qpsk, Gfsk, AmDsb, Wbfm], 2.0),
            ("low", vec![Bpsk, Qam16, Pam4, Cpfsk], -10.0),
        ];
        let mut catalog = Catalog::new();
        let mut families = Vec::new();
        for (i, (id, classes, snr_db)) in specs.into_iter().enumerate() {
            let spec = DatasetSpec { classes, samples_per_class: 40, snr_db, seed: 50 + i as u64 };
            let p = catalog.insert(Prepared::new(build_dataset(id, spec).unwrap(), i as u64).unwrap());
            families.push(Family { dataset: id.into(), variants: vec![(id.into(), p.cost_range())] });
        }
        (Arc::new(catalog), families)
    })
}

fn contexts(seed: u64, n: usize) -> Vec<Context> {
    let (_, families) = small();
    let mut rng = SplitMix64::new(seed);
    (0..n).map(|_| families[rng.below(families.len())].draw(&mut rng, None, 0.5)).collect()
}

fn fresh(mode: SelectionMode) -> Cognition {
    Cognition::new(Arc::clone(&small().0), mode, FAST)
}

fn result(p: f64) -> LearningResult {
    LearningResult { point: list_grid()[0], predictions: Arc::from(vec![]), accuracy: p, cost: 1.0, p }
}

fn features(v: f64) -> MetaFeatures {
    MetaFeatures([v, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, Priority::TimeFirst.flag()])
}

fn stored_labels(state: &Cognition) -> Vec<(u64, GridPoint)> {
    state.memory.ccb.cases().iter().map(|c| (c.context_id, c.label)).collect()
}

#[test]
fn empty_case_base_falls_back_to_the_first_point() {
    let mut state = fresh(SelectionMode::HpSelect);
    let c = &contexts(1, 1)[0];
    let out = state.online_step(&c.dataset_id, c.requirement).unwrap();
    assert!(out.cold_start);
    assert_eq!(out.selection.point, list_grid()[0]);
    assert!(state.memory.ccb.is_empty());
    assert_eq!(state.memory.staging().len(), 1);
}

#[test]
fn online_steps_leave_the_case_base_alone() {
    let mut state = fresh(SelectionMode::AlgorithmSelect);
    state.seed_cases(&contexts(2, 12), 0.0, &mut SplitMix64::new(0)).unwrap();
    let before = state.memory.ccb.clone();
    let stored = state.memory.contexts().len();
    for c in contexts(3, 8) {
        let out = state.online_step(&c.dataset_id, c.requirement).unwrap();
        assert!(!out.cold_start);
        let r = &out.result;
        assert_eq!(r.point, out.selection.point);
        assert_eq!(r.p, evaluation_value(r.accuracy, r.cost, c.requirement.time_budget));
    }
    assert_eq!(state.memory.ccb, before);
    assert_eq!(state.memory.contexts().len(), stored + 8);
    assert_eq!(state.memory.staging().len(), 8);
}

#[test]
fn verdict_needs_a_strict_improvement() {
    let mut ccb = CaseBase::new();
    assert_eq!(cognitive_evaluate(&result(0.6), &features(0.5), &ccb), (0.6, Verdict::Best));
    ccb.insert(CaseDraft {
        context_id: 0,
        features: features(0.52),
        label: list_grid()[3],
        outcome: Outcome { p: 0.7, accuracy: 0.7, cost: 1.0 },
        origin: CaseOrigin::Seed,
    })
    .unwrap();
    assert_eq!(cognitive_evaluate(&result(0.6), &features(0.5), &ccb).1, Verdict::NotBest);
    assert_eq!(cognitive_evaluate(&result(0.7), &features(0.5), &ccb).1, Verdict::NotBest);
    assert_eq!(cognitive_evaluate(&result(0.71), &features(0.5), &ccb).1, Verdict::Best);
    assert_eq!(cognitive_evaluate(&result(0.6), &features(0.9), &ccb).1, Verdict::Best);
}

#[test]
fn full_budget_corrects_to_the_oracle() {
    for mode in SelectionMode::ALL {
        let mut state = fresh(mode);
        let cs = contexts(4, 20);
        for c in &cs {
            let oracle = state.catalog().get(&c.dataset_id).unwrap().oracle(&c.requirement);
            let wrong = list_grid().iter().find(|p| !mode.matches(p, &oracle)).unwrap();
            state.add_case(&c.dataset_id, c.requirement, *wrong, CaseOrigin::InjectedMislabel).unwrap();
        }
        state.ensure_trained().unwrap();
        let report = state.offline_pass(&state.case_contexts(), GRID_SIZE).unwrap();
        assert_eq!(report.corrections, state.memory.ccb.len());
        assert!(report.corrections <= report.trials);
        for case in state.memory.ccb.cases() {
            let ctx = state.memory.context(case.context_id).unwrap();
            assert_eq!(case.label, state.oracle(ctx).unwrap());
            assert_eq!(case.origin, CaseOrigin::OfflineCorrected);
        }
        assert_eq!(state.mislabel_ratio().unwrap(), 0.0);
    }
}

#[test]
fn oracle_labels_are_never_corrected() {
    let mut state = fresh(SelectionMode::HpSelect);
    state.seed_cases(&contexts(5, 25), 0.0, &mut SplitMix64::new(0)).unwrap();
    let before = stored_labels(&state);
    let report = state.offline_pass(&state.case_contexts(), GRID_SIZE).unwrap();
    assert_eq!(report.corrections, 0);
    assert_eq!(stored_labels(&state), before);
}

#[test]
fn second_pass_corrects_no_more_than_the_first() {
    for (seed, budget) in [(6, 2), (7, 4), (8, GRID_SIZE)] {
        let mut state = fresh(SelectionMode::HpSelect);
        state.seed_cases(&contexts(seed, 30), 0.3, &mut SplitMix64::new(seed)).unwrap();
        let ids = state.case_contexts();
        let first = state.offline_pass(&ids, budget).unwrap().corrections;
        let second = state.offline_pass(&ids, budget).unwrap().corrections;
        assert!(second <= first, "budget {budget}: {first} then {second}");
    }
}

#[test]
fn curation_reaches_zero_within_three_passes() {
    for mode in SelectionMode::ALL {
        for ratio in [0.1, 0.3] {
            let mut state = fresh(mode);
            state.seed_cases(&contexts(9, 50), ratio, &mut SplitMix64::new(3)).unwrap();
            let mut ratios = vec![state.mislabel_ratio().unwrap()];
            assert!(ratios[0] > 0.0);
            for _ in 0..3 {
                state.offline_pass(&state.case_contexts(), GRID_SIZE).unwrap();
                ratios.push(state.mislabel_ratio().unwrap());
            }
            assert!(ratios.windows(2).all(|w| w[1] <= w[0]), "{mode:?} {ratio}: {ratios:?}");
            assert_eq!(*ratios.last().unwrap(), 0.0, "{mode:?} {ratio}: {ratios:?}");
        }
    }
}

#[test]
fn stored_merit_never_drops_across_passes() {
    let mut state = fresh(SelectionMode::HpSelect);
    state.seed_cases(&contexts(10, 40), 0.3, &mut SplitMix64::new(4)).unwrap();
    let ids = state.case_contexts();
    let snapshot = |s: &Cognition| ids.iter().map(|&id| s.memory.ccb.for_context(id).unwrap().clone()).collect::<Vec<_>>();
    let mut prev = snapshot(&state);
    for budget in [1, 2, 3, 5, 8] {
        state.offline_pass(&ids, budget).unwrap();
        let now = snapshot(&state);
        for (a, b) in prev.iter().zip(&now) {
            assert!(b.merit() >= a.merit());
            if b.priority() == Priority::TimeFirst {
                assert!(b.p() >= a.p());
            }
        }
        prev = now;
    }
}

#[test]
fn staged_observations_enter_only_when_best() {
    let mut state = fresh(SelectionMode::HpSelect);
    state.seed_cases(&contexts(11, 10), 0.0, &mut SplitMix64::new(0)).unwrap();
    for c in contexts(12, 6) {
        state.online_step(&c.dataset_id, c.requirement).unwrap();
    }
    let staged = state.memory.staging().to_vec();
    let verdicts: Vec<bool> = staged
        .iter()
        .map(|o| {
            let ctx = state.memory.context(o.context_id).unwrap();
            let r = state.catalog().get(&ctx.dataset_id).unwrap().evaluate(&o.selection, &ctx.requirement);
            cognitive_evaluate(&r, &o.features, &state.memory.ccb).1 == Verdict::Best
        })
        .collect();
    let before = state.ccb_size();
    let report = state.offline_pass(&[], GRID_SIZE).unwrap();
    assert!(state.memory.staging().is_empty());
    assert!(report.insertions <= verdicts.iter().filter(|&&b| b).count());
    assert_eq!(state.ccb_size(), before + report.insertions);
}

#[test]
fn case_base_grows_with_the_block_schedule() {
    let mut state = fresh(SelectionMode::AlgorithmSelect);
    state.seed_cases(&contexts(13, 10), 0.0, &mut SplitMix64::new(0)).unwrap();
    let steps: Vec<ProtocolStep> =
        [10, 30, 40, 200, 200, 200].iter().enumerate().map(|(i, &n)| ProtocolStep { block: contexts(20 + i as u64, n) }).collect();
    let protocol = Protocol { steps, mislabel_ratio: 0.0, offline_passes: 1, offline_budget: GRID_SIZE, noise_seed: 0 };
    let metrics = run_protocol(&protocol, &mut state).unwrap();
    let sizes: Vec<usize> = metrics.iter().map(|m| m.ccb_size).collect();
    assert_eq!(sizes, [10, 20, 50, 90, 290, 490]);
    for m in &metrics {
        assert!((0.0..=1.0).contains(&m.selection_accuracy));
        assert_eq!(m.mislabel_ratio, 0.0);
        assert_eq!(m.event.selections.len(), protocol.steps[m.test_index - 1].block.len());
    }
    assert_eq!(state.ccb_size(), 490);
}

#[test]
fn protocol_rejects_a_ratio_of_one() {
    let protocol = Protocol { steps: vec![], mislabel_ratio: 1.0, offline_passes: 1, offline_budget: 15, noise_seed: 0 };
    assert!(run_protocol(&protocol, &mut fresh(SelectionMode::HpSelect)).is_err());
}

#[test]
fn injected_labels_disagree_at_the_mode_granularity() {
    let oracle: Vec<GridPoint> = (0..10).map(|i| list_grid()[i % GRID_SIZE]).collect();
    for mode in SelectionMode::ALL {
        let labels = noisy_labels(mode, &oracle, 0.3, &mut SplitMix64::new(5));
        assert_eq!(labels.iter().filter(|l| l.1).count(), 3);
        for ((label, injected), truth) in labels.iter().zip(&oracle) {
            assert_eq!(*injected, !mode.matches(label, truth));
        }
    }
}

#[test]
fn baselines_are_isolated_from_the_cognitive_arm() {
    let (catalog, _) = small();
    for mode in SelectionMode::ALL {
        let baseline = Baseline::pretrain(Arc::clone(catalog), mode, FAST, &contexts(14, 20), 0.0, 0).unwrap();
        let weights = baseline.selector().net().to_json().unwrap();
        let block = contexts(15, 12);
        let first = baseline.test(1, &block).unwrap();

        let mut state = fresh(mode);
        state.seed_cases(&contexts(16, 10), 0.0, &mut SplitMix64::new(0)).unwrap();
        let protocol = Protocol {
            steps: vec![ProtocolStep { block: contexts(17, 20) }, ProtocolStep { block: block.clone() }],
            mislabel_ratio: 0.0,
            offline_passes: 2,
            offline_budget: GRID_SIZE,
            noise_seed: 0,
        };
        run_protocol(&protocol, &mut state).unwrap();

        assert_eq!(baseline.selector().net().to_json().unwrap(), weights);
        assert_eq!(baseline.test(1, &block).unwrap(), first);
        assert_eq!(baseline.examples(), 20);
    }
}

#[test]
fn trained_selector_tracks_the_oracle_on_dataset1() {
    let cfg = ExperimentConfig { datasets: vec!["dataset1".into()], size_fractions: vec![0.1, 0.3], ..Default::default() };
    let bench = Workbench::build_datasets(&cfg, &cfg.datasets).unwrap();
    let family = bench.family("dataset1").unwrap();
    let mut hits = 0;
    for trial in 0..10u64 {
        let mut rng = SplitMix64::new(trial);
        let train = family.block(&mut rng, 200, Some(Priority::TimeFirst), 1.0);
        let mut state = Cognition::new(Arc::clone(&bench.catalog), SelectionMode::HpSelect, TrainConfig { seed: trial, ..TrainConfig::default() });
        state.seed_cases(&train, 0.0, &mut rng).unwrap();
        let c = family.draw(&mut rng, Some(Priority::TimeFirst), 1.0);
        let out = state.online_step(&c.dataset_id, c.requirement).unwrap();
        if out.selection.point == state.oracle(&out.context).unwrap() {
            hits += 1;
        }
    }
    assert!(hits >= 8, "{hits} of 10 trials matched the oracle");
}

#[test]
fn requirement_validation_happens_before_selection() {
    let mut state = fresh(SelectionMode::HpSelect);
    let bad = TaskRequirement { required_accuracy: 0.5, time_budget: 0.0, priority: Priority::TimeFirst };
    assert!(state.online_step("hi", bad).is_err());
    assert!(state.memory.contexts().is_empty());
}
