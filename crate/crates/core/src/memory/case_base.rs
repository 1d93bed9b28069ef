use serde::{Deserialize, Serialize};

use super::case::{CaseDraft, CaseOrigin, CognitiveCase, Merit, Outcome};
use crate::error::{Error, Result};
use crate::features::MetaFeatures;
use crate::pool::GridPoint;

/// Radius (L-infinity, normalized meta-feature space) that defines "the same context".
pub const NEIGHBOR_RADIUS: f64 = 0.05;

/// Ordered, append-only store of cognitive cases.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CaseBase {
    cases: Vec<CognitiveCase>,
    next_seq: u64,
}

impl CaseBase {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a case base from persisted cases, checking seq order.
    pub fn from_parts(cases: Vec<CognitiveCase>, next_seq: u64) -> Result<Self> {
        if !cases.windows(2).all(|w| w[0].seq < w[1].seq) {
            return Err(Error::Format("case seqs are not strictly increasing".into()));
        }
        if cases.last().is_some_and(|c| c.seq >= next_seq) {
            return Err(Error::Format("next seq does not exceed stored seqs".into()));
        }
        Ok(Self { cases, next_seq })
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn cases(&self) -> &[CognitiveCase] {
        &self.cases
    }

    pub fn get(&self, seq: u64) -> Option<&CognitiveCase> {
        self.position(seq).map(|i| &self.cases[i])
    }

    fn position(&self, seq: u64) -> Option<usize> {
        self.cases.binary_search_by_key(&seq, |c| c.seq).ok()
    }

    /// Appends `draft` and returns its seq. A case identical in features and
    /// label to a stored one is not added; the stored seq is returned.
    pub fn insert(&mut self, draft: CaseDraft) -> Result<u64> {
        draft.validate()?;
        if let Some(existing) =
            self.cases.iter().find(|c| c.features == draft.features && c.label == draft.label)
        {
            return Ok(existing.seq);
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.cases.push(CognitiveCase {
            seq,
            context_id: draft.context_id,
            features: draft.features,
            label: draft.label,
            outcome: draft.outcome,
            origin: draft.origin,
        });
        Ok(seq)
    }

    /// Cases within L-infinity distance `radius` of `f`, nearest first, then by seq.
    pub fn query_neighbors(&self, f: &MetaFeatures, radius: f64) -> Vec<&CognitiveCase> {
        let mut hits: Vec<(f64, &CognitiveCase)> = self
            .cases
            .iter()
            .map(|c| (c.features.linf_distance(f), c))
            .filter(|(d, _)| *d <= radius)
            .collect();
        hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.seq.cmp(&b.1.seq)));
        hits.into_iter().map(|(_, c)| c).collect()
    }

    /// The case observed in `context_id`, if any.
    pub fn for_context(&self, context_id: u64) -> Option<&CognitiveCase> {
        self.cases.iter().find(|c| c.context_id == context_id)
    }

    /// Relabels case `seq` in place when the new label strictly improves on
    /// the stored one under [`Merit`] (evaluation value, then cost, then grid
    /// index). The seq is kept; origin becomes `OfflineCorrected`.
    pub fn replace_label(&mut self, seq: u64, label: GridPoint, outcome: Outcome) -> Result<&CognitiveCase> {
        label.validate().map_err(|_| Error::InvalidLabel(format!("{label} is not on the grid")))?;
        let i = self.position(seq).ok_or(Error::UnknownSeq(seq))?;
        let case = &mut self.cases[i];
        let priority = case.priority();
        if Merit::new(&outcome, &label, priority) <= case.merit() {
            return Err(Error::NoImprovement);
        }
        case.label = label;
        case.outcome = outcome;
        case.origin = CaseOrigin::OfflineCorrected;
        Ok(case)
    }
}
