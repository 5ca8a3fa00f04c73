//! Declarative scenarios and the command-line interface.
//!
//! A scenario file is JSON with `schema_version`, `name` and a list of
//! `sub_scenarios`; each sub-scenario names a network generator, a model,
//! optional calibration, seeding, an optional vaccination intervention, and
//! the batch parameters. See the repository README for the full schema.

mod bundled;
pub mod cli;
mod run;
mod scenario;

pub use bundled::{bundled_scenario, bundled_scenarios, BundledScenario};
pub use cli::cli;
pub use run::{
    build_network, run_scenario, run_sub_scenario, write_artifacts, ResolvedParameters, RunOptions,
    ScenarioOutcome, SubScenarioOutcome,
};
pub use scenario::{
    load_scenario, AnalyticSpec, CalibrationBasis, CalibrationSpec, GridSpec, InterventionSpec, LayerSpec, ModelSpec,
    NetworkSpec, ScenarioConfig, ScenarioFile, SeedSpec, SeedStrategy, TemporalMode, VaccinationSpec,
    BUILTIN_MODELS, SCHEMA_VERSION,
};
