//! Scenario files: TOML with `[topology]`, `[producers]`, `[resources]`,
//! `[[accounts]]`, `[workload]` and `[attack]` sections.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus::{ConsensusParams, DposMode};
use crate::contracts::corpus;
use crate::contracts::ir::Step;
use crate::name::{generated, AccountName};
use crate::resources::ResourceParams;
use crate::Millis;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl ConfigError {
    fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Field path for validation errors.
    pub fn path(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { path, .. } => Some(path),
            ConfigError::Parse { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub duration_ms: Millis,
    pub seed: u64,
    #[serde(default)]
    pub mode: DposMode,
    #[serde(default)]
    pub topology: TopologySpec,
    #[serde(default)]
    pub producers: ProducersSpec,
    #[serde(default)]
    pub resources: ResourcesSpec,
    #[serde(default)]
    pub accounts: Vec<AccountSpec>,
    pub workload: Option<WorkloadSpec>,
    pub attack: Option<AttackConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologySpec {
    pub nodes: usize,
    /// Inclusive range each link's fixed latency is drawn from.
    pub latency_ms: [Millis; 2],
    pub shape: TopologyShape,
    pub drop_probability: f64,
    /// Nodes that stay offline until the given time, then catch up.
    pub late_joiners: Vec<LateJoin>,
}

impl Default for TopologySpec {
    fn default() -> Self {
        Self {
            nodes: 1,
            latency_ms: [0, 0],
            shape: TopologyShape::Mesh,
            drop_probability: 0.0,
            late_joiners: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyShape {
    #[default]
    Mesh,
    Ring,
    Line,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LateJoin {
    pub node: usize,
    pub at_ms: Millis,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProducersSpec {
    pub count: usize,
    /// Self-stake of each elected producer; also its vote weight.
    pub stake: u64,
    /// Registered candidates below the producers in votes.
    pub standby: usize,
    pub standby_stake: u64,
    /// Producers (by index) that never produce.
    pub offline: Vec<usize>,
}

impl Default for ProducersSpec {
    fn default() -> Self {
        Self {
            count: 21,
            stake: 1_000_000,
            standby: 0,
            standby_stake: 100_000,
            offline: Vec::new(),
        }
    }
}

impl ProducersSpec {
    pub fn producer_name(i: usize) -> AccountName {
        generated("bp", i)
    }

    pub fn standby_name(i: usize) -> AccountName {
        generated("sb", i)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResourcesSpec {
    pub ram_price: Option<u64>,
    pub total_ram_supply: Option<u64>,
    pub window_cpu_capacity_ms: Option<u64>,
    pub window_net_capacity_words: Option<u64>,
    pub window_length_ms: Option<Millis>,
    pub block_cpu_budget_ms: Option<u64>,
    pub block_net_budget_words: Option<u64>,
}

impl ResourcesSpec {
    pub fn resource_params(&self) -> ResourceParams {
        let d = ResourceParams::default();
        ResourceParams {
            ram_price: self.ram_price.unwrap_or(d.ram_price),
            total_ram_supply: self.total_ram_supply.unwrap_or(d.total_ram_supply),
            window_cpu_capacity_ms: self.window_cpu_capacity_ms.unwrap_or(d.window_cpu_capacity_ms),
            window_net_capacity_words: self.window_net_capacity_words.unwrap_or(d.window_net_capacity_words),
            window_length_ms: self.window_length_ms.unwrap_or(d.window_length_ms),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccountSpec {
    pub name: String,
    /// Liquid EOS after staking and RAM purchase.
    #[serde(default)]
    pub balance: u64,
    #[serde(default)]
    pub cpu_stake: u64,
    #[serde(default)]
    pub net_stake: u64,
    /// EOS spent on RAM at creation; must cover the account footprint.
    #[serde(default = "default_ram_payment")]
    pub ram: u64,
    /// Name of a bundled contract to deploy.
    pub contract: Option<String>,
}

fn default_ram_payment() -> u64 {
    4_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    /// Transactions per simulated second.
    pub tx_rate: f64,
    pub senders: Vec<String>,
    /// Defaults to the senders.
    #[serde(default)]
    pub receivers: Vec<String>,
    /// Inclusive range of transfer actions per transaction.
    #[serde(default = "one_one")]
    pub actions_per_tx: [u64; 2],
    /// Inclusive range of memo sizes.
    #[serde(default)]
    pub payload_bytes: [u64; 2],
    #[serde(default = "one")]
    pub amount: u64,
    #[serde(default)]
    pub start_ms: Millis,
    pub stop_ms: Option<Millis>,
}

fn one_one() -> [u64; 2] {
    [1, 1]
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackConfig {
    BlockDelay {
        attacker: String,
        recursion_factor: u32,
        /// Block at which the attacker replaces its contract.
        swap_at_block: u64,
        #[serde(default = "one")]
        seed_txs: u64,
        #[serde(default)]
        start_ms: Millis,
    },
    CpuExhaustion {
        attacker: String,
        victim: String,
        /// Calls per simulated second.
        call_rate: f64,
        #[serde(default)]
        start_ms: Millis,
    },
    RamExhaustion {
        attacker: String,
        victim: String,
        row_bytes: u64,
        /// Stores per simulated second.
        rate: f64,
        /// Honest user who posts once the attacker is done.
        user: Option<String>,
    },
    Ramsomware {
        attacker: String,
        victim: String,
        /// When the victim grants the attacker contract its authority.
        grant_at: Option<Millis>,
        /// When the attacker swaps in the draining contract.
        swap_at: Option<Millis>,
        drain_at: Millis,
    },
    FakeEos {
        attacker: String,
        /// Account holding the counterfeit token contract.
        token: String,
        target: String,
        bets: u64,
        amount: u64,
    },
    FakeNotification {
        attacker: String,
        /// Second attacker account running the notification relay.
        accomplice: String,
        target: String,
        bets: u64,
        amount: u64,
    },
    RollRandom {
        attacker: String,
        target: String,
        /// Honest bettor used as the comparison.
        honest: Option<String>,
        bets: u64,
        amount: u64,
        /// Candidate `ref_block_num` values tried per bet.
        #[serde(default = "default_tries")]
        tries: u64,
    },
}

fn default_tries() -> u64 {
    8
}

impl AttackConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            AttackConfig::BlockDelay { .. } => "block_delay",
            AttackConfig::CpuExhaustion { .. } => "cpu_exhaustion",
            AttackConfig::RamExhaustion { .. } => "ram_exhaustion",
            AttackConfig::Ramsomware { .. } => "ramsomware",
            AttackConfig::FakeEos { .. } => "fake_eos",
            AttackConfig::FakeNotification { .. } => "fake_notification",
            AttackConfig::RollRandom { .. } => "roll_random",
        }
    }

    /// Accounts the attack refers to, with their field names.
    fn referenced(&self) -> Vec<(&'static str, &str)> {
        let mut out = Vec::new();
        match self {
            AttackConfig::BlockDelay { attacker, .. } => out.push(("attacker", attacker.as_str())),
            AttackConfig::CpuExhaustion { attacker, victim, .. } | AttackConfig::Ramsomware { attacker, victim, .. } => {
                out.push(("attacker", attacker.as_str()));
                out.push(("victim", victim.as_str()));
            }
            AttackConfig::RamExhaustion { attacker, victim, user, .. } => {
                out.push(("attacker", attacker.as_str()));
                out.push(("victim", victim.as_str()));
                if let Some(u) = user {
                    out.push(("user", u.as_str()));
                }
            }
            AttackConfig::FakeEos { attacker, token, target, .. } => {
                out.push(("attacker", attacker.as_str()));
                out.push(("token", token.as_str()));
                out.push(("target", target.as_str()));
            }
            AttackConfig::FakeNotification {
                attacker,
                accomplice,
                target,
                ..
            } => {
                out.push(("attacker", attacker.as_str()));
                out.push(("accomplice", accomplice.as_str()));
                out.push(("target", target.as_str()));
            }
            AttackConfig::RollRandom { attacker, target, honest, .. } => {
                out.push(("attacker", attacker.as_str()));
                out.push(("target", target.as_str()));
                if let Some(h) = honest {
                    out.push(("honest", h.as_str()));
                }
            }
        }
        out
    }
}

/// Line number (1-based) of byte offset `pos` in `text`.
fn line_of(text: &str, pos: usize) -> usize {
    text[..pos.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

impl ScenarioSpec {
    /// Parses and validates a scenario file.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let spec: ScenarioSpec = toml::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.span().map_or(1, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn consensus_params(&self) -> ConsensusParams {
        let d = ConsensusParams::default();
        ConsensusParams {
            producer_count: self.producers.count,
            mode: self.mode,
            block_cpu_budget_ms: self.resources.block_cpu_budget_ms.unwrap_or(d.block_cpu_budget_ms),
            block_net_budget_words: self.resources.block_net_budget_words.unwrap_or(d.block_net_budget_words),
            ..d
        }
    }

    pub fn account(&self, name: &str) -> Option<&AccountSpec> {
        self.accounts.iter().find(|a| a.name == name)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.duration_ms == 0 {
            return Err(ConfigError::invalid("duration_ms", "must be positive"));
        }
        // TOML integers are signed; larger seeds could not be written back
        // into a trace header.
        if i64::try_from(self.seed).is_err() {
            return Err(ConfigError::invalid("seed", format!("must be at most {}", i64::MAX)));
        }
        let t = &self.topology;
        if t.nodes == 0 {
            return Err(ConfigError::invalid("topology.nodes", "must be at least 1"));
        }
        if t.latency_ms[0] > t.latency_ms[1] {
            return Err(ConfigError::invalid("topology.latency_ms", "minimum exceeds maximum"));
        }
        let interval = ConsensusParams::default().block_interval_ms;
        if t.nodes > 1 && t.latency_ms[1] >= interval {
            return Err(ConfigError::invalid(
                "topology.latency_ms",
                format!("link latency must stay below the {interval} ms block interval"),
            ));
        }
        if !(0.0..=1.0).contains(&t.drop_probability) {
            return Err(ConfigError::invalid("topology.drop_probability", "must lie in [0, 1]"));
        }
        for (i, j) in t.late_joiners.iter().enumerate() {
            if j.node == 0 || j.node >= t.nodes {
                return Err(ConfigError::invalid(
                    format!("topology.late_joiners[{i}].node"),
                    "must name a node other than node 0",
                ));
            }
        }
        if t.late_joiners.len() + 1 > t.nodes {
            return Err(ConfigError::invalid("topology.late_joiners", "at least one node must start online"));
        }
        let p = &self.producers;
        if p.count == 0 {
            return Err(ConfigError::invalid("producers.count", "must be at least 1"));
        }
        if p.stake == 0 {
            return Err(ConfigError::invalid("producers.stake", "must be positive"));
        }
        if p.standby > 0 && p.standby_stake >= p.stake {
            return Err(ConfigError::invalid("producers.standby_stake", "must be below producers.stake"));
        }
        for (i, o) in p.offline.iter().enumerate() {
            if *o >= p.count {
                return Err(ConfigError::invalid(format!("producers.offline[{i}]"), "no such producer"));
            }
        }
        let mut seen = BTreeSet::new();
        for (i, a) in self.accounts.iter().enumerate() {
            let path = format!("accounts[{i}]");
            let n: AccountName = a
                .name
                .parse()
                .map_err(|e: crate::name::NameError| ConfigError::invalid(format!("{path}.name"), e.to_string()))?;
            if n.as_str() == "eosio" || n.as_str().starts_with("eosio.") {
                return Err(ConfigError::invalid(format!("{path}.name"), "reserved system name"));
            }
            let is_bp = (0..p.count).any(|k| ProducersSpec::producer_name(k) == n)
                || (0..p.standby).any(|k| ProducersSpec::standby_name(k) == n);
            if is_bp || !seen.insert(n) {
                return Err(ConfigError::invalid(format!("{path}.name"), format!("duplicate account {}", a.name)));
            }
            if let Some(c) = &a.contract {
                if corpus::text(c).is_none() {
                    return Err(ConfigError::invalid(format!("{path}.contract"), format!("no bundled contract named {c:?}")));
                }
            }
            if a.ram < crate::chain::ACCOUNT_RAM_BYTES * 2 {
                // A RAM payment this small cannot cover the footprint plus fee.
                let params = self.resources.resource_params();
                let bytes = (a.ram - crate::resources::ram_fee(a.ram)) / params.ram_price.max(1);
                if bytes < crate::chain::ACCOUNT_RAM_BYTES {
                    return Err(ConfigError::invalid(format!("{path}.ram"), "does not cover the account footprint"));
                }
            }
        }
        let declared = |n: &str| self.account(n).is_some();
        if let Some(w) = &self.workload {
            if !w.tx_rate.is_finite() || w.tx_rate < 0.0 {
                return Err(ConfigError::invalid("workload.tx_rate", "must be a finite non-negative rate"));
            }
            if w.senders.is_empty() && w.tx_rate > 0.0 {
                return Err(ConfigError::invalid("workload.senders", "no senders for a positive rate"));
            }
            for (field, list) in [("senders", &w.senders), ("receivers", &w.receivers)] {
                for (i, s) in list.iter().enumerate() {
                    if !declared(s) {
                        return Err(ConfigError::invalid(format!("workload.{field}[{i}]"), format!("undeclared account {s:?}")));
                    }
                }
            }
            let receivers = if w.receivers.is_empty() { &w.senders } else { &w.receivers };
            if w.tx_rate > 0.0 {
                if let Some(lonely) = w.senders.iter().find(|s| receivers.iter().all(|r| r == *s)) {
                    return Err(ConfigError::invalid("workload.receivers", format!("sender {lonely:?} has nobody else to pay")));
                }
            }
            if w.actions_per_tx[0] == 0 || w.actions_per_tx[0] > w.actions_per_tx[1] {
                return Err(ConfigError::invalid("workload.actions_per_tx", "needs 1 <= min <= max"));
            }
            if w.payload_bytes[0] > w.payload_bytes[1] {
                return Err(ConfigError::invalid("workload.payload_bytes", "minimum exceeds maximum"));
            }
            if w.amount == 0 {
                return Err(ConfigError::invalid("workload.amount", "must be positive"));
            }
        }
        if let Some(a) = &self.attack {
            for (field, n) in a.referenced() {
                if !declared(n) {
                    return Err(ConfigError::invalid(format!("attack.{field}"), format!("undeclared account {n:?}")));
                }
            }
            self.validate_attack(a)?;
        }
        Ok(())
    }

    fn validate_attack(&self, a: &AttackConfig) -> Result<(), ConfigError> {
        let rate_ok = |r: f64| r.is_finite() && r > 0.0;
        match a {
            AttackConfig::BlockDelay { recursion_factor, .. } => {
                if *recursion_factor < 1 {
                    return Err(ConfigError::invalid("attack.recursion_factor", "must be at least 1"));
                }
            }
            AttackConfig::CpuExhaustion { call_rate, .. } => {
                if !rate_ok(*call_rate) {
                    return Err(ConfigError::invalid("attack.call_rate", "must be a positive rate"));
                }
            }
            AttackConfig::RamExhaustion { victim, row_bytes, rate, .. } => {
                if !rate_ok(*rate) {
                    return Err(ConfigError::invalid("attack.rate", "must be a positive rate"));
                }
                let contract = self.account(victim).and_then(|v| v.contract.as_deref());
                let bytes = contract.and_then(row_size_of);
                if bytes != Some(*row_bytes) {
                    return Err(ConfigError::invalid(
                        "attack.row_bytes",
                        format!("victim contract stores rows of {bytes:?} bytes"),
                    ));
                }
            }
            AttackConfig::Ramsomware { grant_at, swap_at, drain_at, .. } => {
                if grant_at.is_some_and(|g| g >= *drain_at) || swap_at.is_some_and(|s| s >= *drain_at) {
                    return Err(ConfigError::invalid("attack.drain_at", "must come after the grant and the swap"));
                }
            }
            AttackConfig::FakeEos { bets, amount, .. }
            | AttackConfig::FakeNotification { bets, amount, .. }
            | AttackConfig::RollRandom { bets, amount, .. } => {
                if *bets == 0 || *amount == 0 {
                    return Err(ConfigError::invalid("attack.bets", "bets and amount must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// Row size stored by the first `store_row` step of a bundled contract.
fn row_size_of(contract: &str) -> Option<u64> {
    corpus::text(contract)?;
    let parsed = corpus::load(contract);
    let mut found = None;
    for h in parsed.contract.handlers() {
        crate::contracts::ir::walk_steps(&h.steps, &mut |_, s| {
            if let (None, Step::StoreRow { bytes, .. }) = (found, s) {
                found = Some(*bytes);
            }
        });
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
duration_ms = 1000
seed = 1

[[accounts]]
name = "alice"
balance = 100

[[accounts]]
name = "bob"

[workload]
tx_rate = 2.0
senders = ["alice", "bob"]
"#;

    #[test]
    fn minimal_spec_parses_with_defaults() {
        let s = ScenarioSpec::parse(MINIMAL).unwrap();
        assert_eq!(s.producers.count, 21);
        assert_eq!(s.topology.nodes, 1);
        assert_eq!(s.mode, DposMode::Bft);
        assert_eq!(s.accounts[0].ram, 4_000);
        let again = ScenarioSpec::parse(&s.to_toml()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn undeclared_sender_names_the_field() {
        let text = MINIMAL.replace("senders = [\"alice\", \"bob\"]", "senders = [\"alice\", \"carol\"]");
        let err = ScenarioSpec::parse(&text).unwrap_err();
        assert_eq!(err.path(), Some("workload.senders[1]"));
    }

    #[test]
    fn a_lone_sender_needs_a_receiver() {
        let text = MINIMAL.replace("senders = [\"alice\", \"bob\"]", "senders = [\"alice\"]");
        assert_eq!(ScenarioSpec::parse(&text).unwrap_err().path(), Some("workload.receivers"));
        let fixed = text.replace("senders = [\"alice\"]", "senders = [\"alice\"]\nreceivers = [\"bob\"]");
        assert!(ScenarioSpec::parse(&fixed).is_ok());
    }

    #[test]
    fn unknown_key_cites_its_line() {
        let text = MINIMAL.replace("balance = 100", "balance = 100\nbalanse = 3");
        match ScenarioSpec::parse(&text).unwrap_err() {
            ConfigError::Parse { line, message } => {
                assert_eq!(line, 9);
                assert!(message.contains("balanse"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn seed_must_fit_a_toml_integer() {
        let mut s = ScenarioSpec::parse(MINIMAL).unwrap();
        s.seed = u64::MAX;
        assert_eq!(s.validate().unwrap_err().path(), Some("seed"));
    }

    #[test]
    fn zero_duration_is_rejected() {
        let text = MINIMAL.replace("duration_ms = 1000", "duration_ms = 0");
        assert_eq!(ScenarioSpec::parse(&text).unwrap_err().path(), Some("duration_ms"));
    }

    #[test]
    fn slow_links_are_rejected_for_multi_node_runs() {
        let text = format!("{MINIMAL}\n[topology]\nnodes = 3\nlatency_ms = [10, 600]\n");
        assert_eq!(ScenarioSpec::parse(&text).unwrap_err().path(), Some("topology.latency_ms"));
    }

    #[test]
    fn ram_attack_row_size_must_match_victim() {
        let text = r#"
name = "r"
duration_ms = 1000
seed = 1
[[accounts]]
name = "mallory"
[[accounts]]
name = "victim"
contract = "ram-victim"
[attack]
kind = "ram_exhaustion"
attacker = "mallory"
victim = "victim"
row_bytes = 64
rate = 10.0
"#;
        assert_eq!(ScenarioSpec::parse(text).unwrap_err().path(), Some("attack.row_bytes"));
        assert!(ScenarioSpec::parse(&text.replace("64", "100")).is_ok());
    }
}
