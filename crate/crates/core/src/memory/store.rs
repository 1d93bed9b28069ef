//! The memory module: stored contexts (the data base), the cognitive case
//! base, the staging area filled by online steps, and persistence.
//!
//! On disk a memory directory holds
//!
//! * `manifest.json`: schema version, logical clock, stored contexts,
//!   staged observations and the spec of every referenced dataset;
//! * `ccb.jsonl`: one case per line, each tagged with the schema version;
//! * `datasets/<id>.bin`: frames in the binary dataset format.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::case::{CaseDraft, CognitiveCase, Outcome};
use super::case_base::CaseBase;
use crate::error::{Error, Result};
use crate::features::{MetaFeatures, TaskRequirement};
use crate::pool::GridPoint;
use crate::workload::{io as dsio, DatasetSpec, SignalDataset};

pub const SCHEMA_VERSION: u32 = 1;

/// A remembered (environment, task) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredContext {
    pub id: u64,
    pub dataset_id: String,
    pub requirement: TaskRequirement,
    /// Logical clock value at storage time.
    pub timestamp: u64,
}

/// What an online step observed, awaiting evaluation-gated insertion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagedObservation {
    pub context_id: u64,
    pub features: MetaFeatures,
    pub selection: GridPoint,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Default)]
pub struct Memory {
    datasets: BTreeMap<String, Arc<SignalDataset>>,
    contexts: Vec<StoredContext>,
    clock: u64,
    staging: Vec<StagedObservation>,
    pub ccb: CaseBase,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    schema: u32,
    clock: u64,
    datasets: BTreeMap<String, DatasetSpec>,
    contexts: Vec<StoredContext>,
    staging: Vec<StagedObservation>,
    next_seq: u64,
}

#[derive(Serialize, Deserialize)]
struct CaseLine {
    schema: u32,
    #[serde(flatten)]
    case: CognitiveCase,
}

impl Memory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn store_context(&mut self, e: &Arc<SignalDataset>, x: TaskRequirement) -> StoredContext {
        self.datasets.entry(e.id.clone()).or_insert_with(|| Arc::clone(e));
        self.clock += 1;
        let ctx = StoredContext {
            id: self.contexts.len() as u64,
            dataset_id: e.id.clone(),
            requirement: x,
            timestamp: self.clock,
        };
        self.contexts.push(ctx.clone());
        ctx
    }

    pub fn context(&self, id: u64) -> Result<&StoredContext> {
        self.contexts.get(id as usize).ok_or(Error::MissingContext(id))
    }

    pub fn contexts(&self) -> &[StoredContext] {
        &self.contexts
    }

    pub fn dataset(&self, id: &str) -> Option<&Arc<SignalDataset>> {
        self.datasets.get(id)
    }

    pub fn stage(&mut self, obs: StagedObservation) {
        self.staging.push(obs);
    }

    pub fn staging(&self) -> &[StagedObservation] {
        &self.staging
    }

    pub fn take_staging(&mut self) -> Vec<StagedObservation> {
        std::mem::take(&mut self.staging)
    }

    pub fn insert_case(&mut self, draft: CaseDraft) -> Result<u64> {
        self.context(draft.context_id)?;
        self.ccb.insert(draft)
    }

    pub fn replace_label(&mut self, seq: u64, label: GridPoint, outcome: Outcome) -> Result<&CognitiveCase> {
        self.ccb.replace_label(seq, label, outcome)
    }

    /// Fraction of cases whose label differs from `oracle` on their originating context.
    pub fn mislabel_ratio<F>(&self, oracle: F) -> Result<f64>
    where
        F: FnMut(&StoredContext) -> Result<GridPoint>,
    {
        self.mislabel_ratio_with(oracle, |label, truth| label == truth)
    }

    /// As [`Memory::mislabel_ratio`] with a custom notion of agreement, e.g.
    /// comparing only the algorithm.
    pub fn mislabel_ratio_with<F, S>(&self, mut oracle: F, same: S) -> Result<f64>
    where
        F: FnMut(&StoredContext) -> Result<GridPoint>,
        S: Fn(&GridPoint, &GridPoint) -> bool,
    {
        if self.ccb.is_empty() {
            return Ok(0.0);
        }
        let mut wrong = 0usize;
        for case in self.ccb.cases() {
            let ctx = self.context(case.context_id)?;
            if !same(&case.label, &oracle(ctx)?) {
                wrong += 1;
            }
        }
        Ok(wrong as f64 / self.ccb.len() as f64)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir.join("datasets"))?;
        let manifest = Manifest {
            schema: SCHEMA_VERSION,
            clock: self.clock,
            datasets: self.datasets.iter().map(|(k, v)| (k.clone(), v.spec.clone())).collect(),
            contexts: self.contexts.clone(),
            staging: self.staging.clone(),
            next_seq: self.ccb.next_seq(),
        };
        fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;

        let mut w = BufWriter::new(File::create(dir.join("ccb.jsonl"))?);
        for case in self.ccb.cases() {
            serde_json::to_writer(&mut w, &CaseLine { schema: SCHEMA_VERSION, case: case.clone() })?;
            w.write_all(b"\n")?;
        }
        w.flush()?;

        for (id, ds) in &self.datasets {
            let f = BufWriter::new(File::create(dir.join("datasets").join(format!("{id}.bin")))?);
            dsio::write_frames(f, &ds.train, &ds.test)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)?;
        if manifest.schema != SCHEMA_VERSION {
            return Err(Error::Format(format!("unsupported memory schema {}", manifest.schema)));
        }
        let mut datasets = BTreeMap::new();
        for (id, spec) in manifest.datasets {
            let f = BufReader::new(File::open(dir.join("datasets").join(format!("{id}.bin")))?);
            let (train, test) = dsio::read_frames(f)?;
            datasets.insert(id.clone(), Arc::new(SignalDataset { id, spec, train, test }));
        }
        let mut cases = Vec::new();
        for line in BufReader::new(File::open(dir.join("ccb.jsonl"))?).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CaseLine = serde_json::from_str(&line)?;
            if rec.schema != SCHEMA_VERSION {
                return Err(Error::Format(format!("unsupported case schema {}", rec.schema)));
            }
            cases.push(rec.case);
        }
        let memory = Self {
            datasets,
            contexts: manifest.contexts,
            clock: manifest.clock,
            staging: manifest.staging,
            ccb: CaseBase::from_parts(cases, manifest.next_seq)?,
        };
        for c in &memory.contexts {
            if !memory.datasets.contains_key(&c.dataset_id) {
                return Err(Error::Format(format!("context {} references missing dataset {}", c.id, c.dataset_id)));
            }
        }
        Ok(memory)
    }
}
