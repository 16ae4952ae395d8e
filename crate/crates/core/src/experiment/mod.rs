mod config;
mod corpus;
mod manifest;
mod report;
mod run;

pub use config::{
    AlphaGrid, BodyCorpus, CalibrateConfig, CzConfig, EmbedConfig, Experiment, ExperimentConfig,
    FitConfig, HaloConfig, HolderSpec, JohnConfig, TauberianConfig, WindowSpec,
};
pub use corpus::{instance_rng, random_ball_cluster, random_polygon, random_rect_union, Corpus};
pub use manifest::{sha256_hex, Manifest, OutputFile, Timing};
pub use report::{report, Report};
pub use run::{
    embed_instance, john_sandwich_violations, run, summarize_embed, target_exponent, EmbedSummary,
    InstanceOutcome, WitnessOutcome,
};
