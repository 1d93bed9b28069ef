use serde::{Deserialize, Serialize};

use super::modulation::ModClass;
use super::synth::{synthesize_frame, Frame};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, derive_seed_str, SplitMix64};

/// Test frames per class, independent of the training size.
pub const TEST_PER_CLASS: usize = 200;

const TRAIN_STREAM: u64 = 0x7261_696E;
const TEST_STREAM: u64 = 0x7465_7374;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub classes: Vec<ModClass>,
    pub samples_per_class: usize,
    pub snr_db: f64,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::EmptyClassSet);
        }
        if self.samples_per_class == 0 {
            return Err(Error::Config("samples_per_class must be at least 1".into()));
        }
        Ok(())
    }

    /// True when `snr_db` lies on the -20..=18 dB grid with 2 dB steps.
    pub fn on_standard_grid(&self) -> bool {
        (-20.0..=18.0).contains(&self.snr_db) && (self.snr_db + 20.0).rem_euclid(2.0) == 0.0
    }
}

/// An environment: labeled train and test frames from one spec.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalDataset {
    pub id: String,
    pub spec: DatasetSpec,
    pub train: Vec<Frame>,
    pub test: Vec<Frame>,
}

impl SignalDataset {
    pub fn num_classes(&self) -> usize {
        self.spec.classes.len()
    }

    /// Dense label index (position in `spec.classes`) for each class.
    pub fn class_index(&self, class: ModClass) -> Option<usize> {
        self.spec.classes.iter().position(|&c| c == class)
    }

    /// The same environment with only the first `per_class` training frames
    /// of each class. Frames are generated per index, so this equals building
    /// the spec with `samples_per_class = per_class` directly.
    pub fn truncated(&self, id: impl Into<String>, per_class: usize) -> Result<SignalDataset> {
        let spec = DatasetSpec { samples_per_class: per_class, ..self.spec.clone() };
        spec.validate()?;
        if per_class > self.spec.samples_per_class {
            return Err(Error::Config(format!(
                "cannot take {per_class} frames per class from {} ({} available)",
                self.id, self.spec.samples_per_class
            )));
        }
        let n = self.spec.samples_per_class;
        let train = self.train.chunks(n).flat_map(|c| c[..per_class].iter().cloned()).collect();
        Ok(SignalDataset { id: id.into(), spec, train, test: self.test.clone() })
    }

    /// Rebuilds a dataset from frames read back from a file. The train split
    /// must be grouped by class in class-id order with equal counts, as
    /// [`build_dataset`] writes it. The generating seed is not stored, so it
    /// is reported as 0.
    pub fn from_frames(id: impl Into<String>, train: Vec<Frame>, test: Vec<Frame>) -> Result<SignalDataset> {
        let first = train.first().ok_or(Error::EmptyDataset)?;
        let mut classes: Vec<ModClass> = train.iter().map(|f| f.label).collect();
        classes.dedup();
        let per_class = train.len() / classes.len();
        let grouped = classes.windows(2).all(|w| w[0] < w[1])
            && train.len() == per_class * classes.len()
            && train.chunks(per_class).zip(&classes).all(|(c, &k)| c.iter().all(|f| f.label == k));
        if !grouped {
            return Err(Error::Format("train frames are not grouped by class with equal counts".into()));
        }
        let spec = DatasetSpec { classes, samples_per_class: per_class, snr_db: first.snr_db, seed: 0 };
        Ok(SignalDataset { id: id.into(), spec, train, test })
    }
}

fn split(spec: &DatasetSpec, stream: u64, per_class: usize) -> Vec<Frame> {
    let split_seed = derive_seed(spec.seed, stream);
    let mut frames = Vec::with_capacity(per_class * spec.classes.len());
    for &class in &spec.classes {
        let class_seed = derive_seed(split_seed, u64::from(class.id()));
        for i in 0..per_class {
            let mut rng = SplitMix64::derive(class_seed, i as u64);
            frames.push(synthesize_frame(class, spec.snr_db, &mut rng));
        }
    }
    frames
}

pub fn build_dataset(id: impl Into<String>, spec: DatasetSpec) -> Result<SignalDataset> {
    spec.validate()?;
    let mut classes = spec.classes.clone();
    classes.sort();
    classes.dedup();
    let spec = DatasetSpec { classes, ..spec };
    let train = split(&spec, TRAIN_STREAM, spec.samples_per_class);
    let test = split(&spec, TEST_STREAM, TEST_PER_CLASS);
    Ok(SignalDataset { id: id.into(), spec, train, test })
}

/// The five sub-dataset specs, each with a sub-seed derived from `master_seed`.
pub fn builtin_dataset_specs(master_seed: u64) -> Vec<(String, DatasetSpec)> {
    use ModClass::*;
    let subset = vec![AmDsb, Bpsk, Cpfsk, Gfsk, Pam4, Qpsk];
    let rows: [(&str, Vec<ModClass>, usize, f64); 5] = [
        ("dataset1", ModClass::ALL.to_vec(), 1000, 18.0),
        ("dataset2", ModClass::ALL.to_vec(), 1000, -16.0),
        ("dataset3", ModClass::ALL.to_vec(), 1000, 2.0),
        ("dataset4", subset, 1000, 18.0),
        ("dataset5", ModClass::ALL.to_vec(), 500, 18.0),
    ];
    rows.into_iter()
        .map(|(id, classes, n, snr)| {
            let spec = DatasetSpec {
                classes,
                samples_per_class: n,
                snr_db: snr,
                seed: derive_seed_str(master_seed, id),
            };
            (id.to_string(), spec)
        })
        .collect()
}

pub fn builtin_dataset(name: &str, master_seed: u64) -> Result<SignalDataset> {
    let (id, spec) = builtin_dataset_specs(master_seed)
        .into_iter()
        .find(|(id, _)| id == name)
        .ok_or_else(|| Error::Config(format!("unknown dataset {name:?} (expected dataset1..dataset5)")))?;
    build_dataset(id, spec)
}

pub fn builtin_datasets(master_seed: u64) -> Vec<SignalDataset> {
    builtin_dataset_specs(master_seed)
        .into_iter()
        .map(|(id, spec)| build_dataset(id, spec).expect("built-in specs are valid"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn small(classes: Vec<ModClass>, n: usize, snr: f64) -> DatasetSpec {
        DatasetSpec { classes, samples_per_class: n, snr_db: snr, seed: 5 }
    }

    #[test]
    fn truncation_matches_a_smaller_build() {
        let classes = vec![ModClass::Qpsk, ModClass::Gfsk, ModClass::AmSsb];
        let full = build_dataset("full", small(classes.clone(), 9, 4.0)).unwrap();
        let direct = build_dataset("part", small(classes, 4, 4.0)).unwrap();
        assert_eq!(full.truncated("part", 4).unwrap(), direct);
        assert!(full.truncated("big", 10).is_err());
    }

    #[test]
    fn frames_rebuild_the_spec() {
        let ds = build_dataset("d", small(vec![ModClass::Wbfm, ModClass::Bpsk], 3, 2.0)).unwrap();
        let back = SignalDataset::from_frames("d", ds.train.clone(), ds.test.clone()).unwrap();
        assert_eq!(back.spec.classes, ds.spec.classes);
        assert_eq!(back.spec.samples_per_class, 3);
        assert_eq!(back.spec.snr_db, 2.0);
        let mut shuffled = ds.train.clone();
        shuffled.swap(0, 5);
        assert!(matches!(SignalDataset::from_frames("d", shuffled, vec![]), Err(Error::Format(_))));
        assert!(matches!(SignalDataset::from_frames("d", vec![], vec![]), Err(Error::EmptyDataset)));
    }

    #[test]
    fn empty_class_set_is_rejected() {
        assert!(matches!(build_dataset("x", small(vec![], 3, 0.0)), Err(Error::EmptyClassSet)));
    }

    #[test]
    fn splits_are_balanced_and_disjoint() {
        let ds = build_dataset("x", small(vec![ModClass::Bpsk, ModClass::Wbfm], 7, 2.0)).unwrap();
        assert_eq!(ds.train.len(), 14);
        assert_eq!(ds.test.len(), 2 * TEST_PER_CLASS);
        let mut counts: BTreeMap<ModClass, usize> = BTreeMap::new();
        for f in &ds.test {
            *counts.entry(f.label).or_default() += 1;
        }
        assert!(counts.values().all(|&c| c == TEST_PER_CLASS));
        for t in &ds.train {
            assert!(!ds.test.contains(t));
        }
    }

    #[test]
    fn builtin_specs_match_descriptions() {
        let specs = builtin_dataset_specs(42);
        let ids: Vec<_> = specs.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, ["dataset1", "dataset2", "dataset3", "dataset4", "dataset5"]);
        let snrs: Vec<f64> = specs.iter().map(|(_, s)| s.snr_db).collect();
        assert_eq!(snrs, [18.0, -16.0, 2.0, 18.0, 18.0]);
        let sizes: Vec<usize> = specs.iter().map(|(_, s)| s.samples_per_class).collect();
        assert_eq!(sizes, [1000, 1000, 1000, 1000, 500]);
        assert_eq!(specs[3].1.classes.len(), 6);
        assert!(specs.iter().all(|(_, s)| s.on_standard_grid()));
        let seeds: std::collections::BTreeSet<u64> = specs.iter().map(|(_, s)| s.seed).collect();
        assert_eq!(seeds.len(), 5);
    }

    #[test]
    fn dataset4_class_set() {
        let mut spec = builtin_dataset_specs(42)[3].1.clone();
        spec.samples_per_class = 2;
        let ds = build_dataset("dataset4", spec).unwrap();
        use ModClass::*;
        assert_eq!(ds.spec.classes, vec![Bpsk, Qpsk, Pam4, Gfsk, Cpfsk, AmDsb]);
        assert_eq!(ds.train.len(), 12);
    }

    #[test]
    fn rebuild_is_bit_identical() {
        let spec = small(ModClass::ALL.to_vec(), 3, -16.0);
        let a = build_dataset("a", spec.clone()).unwrap();
        let b = build_dataset("a", spec).unwrap();
        assert_eq!(a, b);
    }
}
