//! Scenario runner: named end-to-end runs, seeded property batteries,
//! JSON reports, and the simulated-time broadcast latency benchmark.

mod bench;
mod battery;
mod config;
mod report;
mod script;
mod sim;

pub use battery::{run_battery, BatteryFailure, BatterySummary, SUITES};
pub use bench::{bench_broadcast, BenchRow};
pub use config::{
    parse_config_text, parse_party_strategy, parse_warden_strategy, AdversaryKind, ConfigError,
    ModeKind, ScenarioConfig, ScenarioKind, SCENARIO_NAMES,
};
pub use report::{BaselineOutcome, RunReport};
pub use sim::{run, SimOutput};
