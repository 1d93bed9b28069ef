mod case;
mod case_base;
mod store;

pub use case::{CaseDraft, CaseOrigin, CognitiveCase, Merit, Outcome};
pub use case_base::{CaseBase, NEIGHBOR_RADIUS};
pub use store::{Memory, StagedObservation, StoredContext, SCHEMA_VERSION};
