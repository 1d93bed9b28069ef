//! Signal features for the classifier pool and meta-features for the selector.

mod meta;
mod signal;

pub use meta::{
    estimate_snr_db, meta_features, meta_features_from_profile, normalize_budget, normalize_snr,
    normalize_train_size, DatasetFeatures, EnvironmentProfile, MetaFeatures, Priority,
    TaskRequirement, BUDGET_DECADES, META_FEATURE_COUNT, META_FEATURE_NAMES, SNR_RANGE_DB,
};
pub use signal::{
    signal_features, Moments, SignalFeatureExtractor, SignalFeatures, SIGNAL_FEATURE_COUNT,
    SIGNAL_FEATURE_NAMES,
};
