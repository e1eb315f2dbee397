//! Scenario registry, run records and report export used by `rprox`.

mod config;
mod record;
mod scenarios;

pub use config::{parse_overrides, RunConfig};
pub use record::{export_report, ExpectationRecord, ExportFormat, Provenance, Relation, RunRecord};
pub use scenarios::{cylinder_h_of_g_map, list_scenarios, registry, run_scenario, Run, Scenario};
