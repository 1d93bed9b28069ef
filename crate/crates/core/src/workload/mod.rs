//! Synthetic RF environments: modulation classes, frame synthesis, datasets.

mod dataset;
pub mod io;
mod modulation;
mod synth;

pub use dataset::{
    build_dataset, builtin_dataset, builtin_dataset_specs, builtin_datasets, DatasetSpec, SignalDataset,
    TEST_PER_CLASS,
};
pub use modulation::ModClass;
pub use synth::{
    constellation, mean_power, noise_power, rrc_taps, synthesize_frame, synthesize_parts,
    synthesize_waveform, Frame, FRAME_LEN, SAMPLES_PER_SYMBOL,
};
