//! Deterministic simulator of spectrum coordination in a neutral-host small
//! cell network.
//!
//! A shared pool is split each window between two slice instances: SI-I
//! carries the venue's own services and SI-II carries the users of several
//! MNOs. SI-II's grant is then split among the MNOs. Splits follow one of
//! three policies: fixed reservation (FR), principal shares with surplus
//! transfer (PR), or demand-proportional complete sharing (CS).

pub mod chart;
pub mod cli;
pub mod config;
pub mod demand;
pub mod engine;
pub mod metrics;
pub mod model;
pub mod policy;
pub mod presets;
pub mod rng;

pub use engine::{run_experiment, run_sweep, ScenarioConfig, WindowRecord};
pub use model::{AllocationResult, DemandVector, ShareProfile, SpectrumPool, ValidatedProfile};
pub use policy::{allocate_cs, allocate_fr, allocate_pr_inter, allocate_pr_intra, PolicyKind};
