use std::sync::Arc;

use cogsel_core::features::{MetaFeatures, Priority, TaskRequirement};
use cogsel_core::memory::{
    CaseBase, CaseDraft, CaseOrigin, Memory, Outcome, StagedObservation, NEIGHBOR_RADIUS,
};
use cogsel_core::pool::{list_grid, GridPoint, GRID_SIZE};
use cogsel_core::workload::{build_dataset, DatasetSpec, ModClass, SignalDataset};
use cogsel_core::Error;
use proptest::prelude::*;

fn dataset(id: &str, seed: u64) -> Arc<SignalDataset> {
    let spec = DatasetSpec { classes: vec![ModClass::Bpsk, ModClass::Gfsk], samples_per_class: 4, snr_db: 10.0, seed };
    Arc::new(build_dataset(id, spec).unwrap())
}

fn task(budget: f64) -> TaskRequirement {
    TaskRequirement { required_accuracy: 0.8, time_budget: budget, priority: Priority::TimeFirst }
}

fn features(v: f64) -> MetaFeatures {
    MetaFeatures([v, 0.2, 0.4, 0.6, 0.8, 0.5, 0.5, Priority::TimeFirst.flag()])
}

fn draft(context_id: u64, f: MetaFeatures, label: usize, p: f64) -> CaseDraft {
    CaseDraft {
        context_id,
        features: f,
        label: list_grid()[label],
        outcome: Outcome { p, accuracy: p, cost: 5.0 },
        origin: CaseOrigin::Seed,
    }
}

/// Ten contexts with cases; the oracle label of context `i` is grid point `i`.
fn labelled_memory(flipped: &[usize]) -> Memory {
    let ds = dataset("d", 1);
    let mut m = Memory::new();
    for i in 0..10 {
        let ctx = m.store_context(&ds, task(10.0 + i as f64));
        let label = if flipped.contains(&i) { (i + 1) % GRID_SIZE } else { i };
        m.insert_case(draft(ctx.id, features(i as f64 / 10.0), label, 0.5)).unwrap();
    }
    m
}

fn oracle_by_context(ctx: &cogsel_core::memory::StoredContext) -> cogsel_core::Result<GridPoint> {
    Ok(list_grid()[ctx.id as usize])
}

#[test]
fn storing_twice_gives_two_timestamps() {
    let ds = dataset("dataset1", 3);
    let mut m = Memory::new();
    let a = m.store_context(&ds, task(20.0));
    let b = m.store_context(&ds, task(20.0));
    assert_ne!(a.id, b.id);
    assert!(a.timestamp < b.timestamp);
    assert_eq!(m.contexts().len(), 2);
    assert!(Arc::ptr_eq(m.dataset("dataset1").unwrap(), &ds));
}

#[test]
fn cases_need_a_stored_context() {
    let mut m = Memory::new();
    assert!(matches!(m.insert_case(draft(4, features(0.1), 0, 0.5)), Err(Error::MissingContext(4))));
}

#[test]
fn mislabel_ratio_counts_disagreements() {
    assert_eq!(labelled_memory(&[]).mislabel_ratio(oracle_by_context).unwrap(), 0.0);
    let m = labelled_memory(&[1, 4, 7]);
    assert!((m.mislabel_ratio(oracle_by_context).unwrap() - 0.3).abs() < 1e-12);
    assert_eq!(Memory::new().mislabel_ratio(oracle_by_context).unwrap(), 0.0);
}

#[test]
fn correcting_a_label_never_raises_the_ratio() {
    let mut m = labelled_memory(&[2, 5]);
    let before = m.mislabel_ratio(oracle_by_context).unwrap();
    let seq = m.ccb.for_context(2).unwrap().seq;
    m.replace_label(seq, list_grid()[2], Outcome { p: 0.9, accuracy: 0.9, cost: 5.0 }).unwrap();
    let after = m.mislabel_ratio(oracle_by_context).unwrap();
    assert!(after <= before);
    assert!((after - 0.1).abs() < 1e-12);
}

#[test]
fn distance_004_is_inside_the_radius() {
    let mut cb = CaseBase::new();
    cb.insert(draft(0, features(0.54), 3, 0.5)).unwrap();
    cb.insert(draft(1, features(0.44), 3, 0.5)).unwrap();
    let hits = cb.query_neighbors(&features(0.5), NEIGHBOR_RADIUS);
    assert_eq!(hits.iter().map(|c| c.seq).collect::<Vec<_>>(), [0]);
}

#[test]
fn save_and_load_round_trip() {
    let mut m = labelled_memory(&[3]);
    let other = dataset("other", 8);
    let ctx = m.store_context(&other, task(3.0));
    m.stage(StagedObservation {
        context_id: ctx.id,
        features: features(0.95),
        selection: list_grid()[9],
        outcome: Outcome { p: 0.0, accuracy: 0.7, cost: 4.0 },
    });
    let seq = m.ccb.for_context(3).unwrap().seq;
    m.replace_label(seq, list_grid()[3], Outcome { p: 0.8, accuracy: 0.8, cost: 5.0 }).unwrap();

    let dir = tempfile::tempdir().unwrap();
    m.save(dir.path()).unwrap();
    let mut back = Memory::load(dir.path()).unwrap();
    assert_eq!(back.ccb, m.ccb);
    assert_eq!(back.contexts(), m.contexts());
    assert_eq!(back.staging(), m.staging());
    for id in ["d", "other"] {
        let (a, b) = (m.dataset(id).unwrap(), back.dataset(id).unwrap());
        assert_eq!(a.spec, b.spec);
        assert_eq!(a.train.len(), b.train.len());
        assert_eq!(a.test.len(), b.test.len());
    }

    // Frames are stored at f32 precision, so the loaded state is a fixed point.
    let dir2 = tempfile::tempdir().unwrap();
    back.save(dir2.path()).unwrap();
    let again = Memory::load(dir2.path()).unwrap();
    assert_eq!(again.dataset("d").unwrap(), back.dataset("d").unwrap());
    for f in ["manifest.json", "ccb.jsonl", "datasets/d.bin", "datasets/other.bin"] {
        assert_eq!(std::fs::read(dir.path().join(f)).unwrap(), std::fs::read(dir2.path().join(f)).unwrap(), "{f}");
    }

    // Seqs continue after a reload.
    let next = back.ccb.next_seq();
    let c = back.store_context(&other, task(4.0));
    assert_eq!(back.insert_case(draft(c.id, features(0.99), 0, 0.5)).unwrap(), next);
}

#[test]
fn load_rejects_another_schema() {
    let m = labelled_memory(&[]);
    let dir = tempfile::tempdir().unwrap();
    m.save(dir.path()).unwrap();
    let path = dir.path().join("ccb.jsonl");
    let text = std::fs::read_to_string(&path).unwrap().replacen("\"schema\":1", "\"schema\":7", 1);
    std::fs::write(&path, text).unwrap();
    assert!(matches!(Memory::load(dir.path()), Err(Error::Format(_))));
}

#[derive(Debug, Clone)]
enum Op {
    Insert { slot: u8, label: usize, p: f64 },
    Replace { pick: usize, label: usize, p: f64 },
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0u8..6, 0..GRID_SIZE, 0.0..=1.0f64).prop_map(|(slot, label, p)| Op::Insert { slot, label, p }),
        (any::<usize>(), 0..GRID_SIZE, 0.0..=1.0f64).prop_map(|(pick, label, p)| Op::Replace { pick, label, p }),
    ]
}

proptest! {
    #[test]
    fn seqs_are_append_only(ops in prop::collection::vec(op(), 1..60)) {
        let mut cb = CaseBase::new();
        let mut issued: Vec<u64> = Vec::new();
        for op in ops {
            match op {
                Op::Insert { slot, label, p } => {
                    let before = cb.len();
                    let seq = cb.insert(draft(0, features(slot as f64 / 10.0), label, p)).unwrap();
                    if cb.len() > before {
                        prop_assert!(issued.iter().all(|&s| s < seq));
                        issued.push(seq);
                    } else {
                        prop_assert!(issued.contains(&seq));
                    }
                }
                Op::Replace { pick, label, p } => {
                    if cb.is_empty() {
                        continue;
                    }
                    let old = cb.cases()[pick % cb.len()].clone();
                    let outcome = Outcome { p, accuracy: p, cost: 5.0 };
                    match cb.replace_label(old.seq, list_grid()[label], outcome) {
                        Ok(new) => {
                            prop_assert_eq!(new.seq, old.seq);
                            prop_assert!(new.merit() > old.merit());
                            prop_assert!(new.p() >= old.p());
                        }
                        Err(Error::NoImprovement) => prop_assert_eq!(cb.get(old.seq).unwrap(), &old),
                        Err(e) => prop_assert!(false, "unexpected error {e}"),
                    }
                }
            }
            let seqs: Vec<u64> = cb.cases().iter().map(|c| c.seq).collect();
            prop_assert_eq!(&seqs, &issued);
            prop_assert!(cb.next_seq() > seqs.last().copied().unwrap_or(0) || seqs.is_empty());
        }
    }
}
