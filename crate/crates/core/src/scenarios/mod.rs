//! Scenario files, genesis construction, background workload and attack
//! drivers, and the runner tying them to the network simulator.

mod attacks;
pub mod bundled;
pub mod genesis;
pub mod runner;
pub mod spec;
pub mod workload;

pub use attacks::spam_contract;
pub use genesis::build_genesis;
pub use runner::{run_scenario, summarize, RunError, RunOutput, Summary};
pub use spec::{AttackConfig, ConfigError, ScenarioSpec};
