//! Toy contracts: the handler IR, its text format, execution and the
//! vulnerability checker.

pub mod checker;
pub mod corpus;
pub mod descriptor;
pub mod exec;
pub mod ir;

pub use checker::{check_vulnerabilities, Finding, VulnClass};
pub use descriptor::{parse, print, DescriptorError, ParsedContract};
pub use exec::{execute_transaction, Effect, ExecEnv, ExecOutcome};
pub use ir::{ContractDef, HandlerSpec, Step};
