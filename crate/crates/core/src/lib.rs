//! Discrete-event simulator of an EOSIO-style DPoS chain: ledger and
//! resource accounting, producer scheduling and finality, a contract model
//! with a vulnerability checker, a network simulator and attack scenarios.

pub mod chain;
pub mod cli;
pub mod consensus;
pub mod contracts;
pub mod hash;
pub mod name;
pub mod netsim;
pub mod metrics;
pub mod resources;
pub mod scenarios;
pub mod trace;

/// Simulated time in milliseconds since genesis.
pub type Millis = u64;
