//! Builds the genesis ledger of a scenario by running ordinary system
//! actions: account creation, funding, staking, votes and code deployment.

use crate::chain::{Action, KeyId, Ledger, PermissionLevel, Transaction, EOS, SYSTEM_ACCOUNT, TOKEN_ACCOUNT};
use crate::consensus::{tally_votes, ConsensusLedger, VoteState};
use crate::contracts::corpus;
use crate::contracts::exec::{execute_transaction, ExecEnv};
use crate::name::{name, AccountName};
use crate::scenarios::spec::{ConfigError, ProducersSpec, ScenarioSpec};

/// Key controlling the system accounts.
pub const SYSTEM_KEY: &str = "K-eosio";
/// RAM payment made for every producer and standby account.
pub const PRODUCER_RAM_PAYMENT: u64 = 4_000;

/// Signing key of a scenario account.
pub fn account_key(account: &AccountName) -> KeyId {
    KeyId::new(format!("K-{account}"))
}

struct Setup {
    name: AccountName,
    path: String,
    funds: u64,
    ram: u64,
    cpu: u64,
    net: u64,
    vote_self: bool,
    contract: Option<String>,
}

/// Elected producer names, in index order.
pub fn producer_names(spec: &ScenarioSpec) -> Vec<AccountName> {
    (0..spec.producers.count).map(ProducersSpec::producer_name).collect()
}

pub fn build_genesis(spec: &ScenarioSpec) -> Result<Ledger, ConfigError> {
    let params = spec.consensus_params();
    let mut votes = VoteState::default();
    let p = &spec.producers;
    let mut setups = Vec::new();
    let candidates = (0..p.count)
        .map(|i| (ProducersSpec::producer_name(i), p.stake, format!("producers[{i}]")))
        .chain((0..p.standby).map(|i| (ProducersSpec::standby_name(i), p.standby_stake, format!("producers.standby[{i}]"))));
    for (n, stake, path) in candidates {
        votes.register(n.clone(), 0);
        let cpu = stake / 2;
        setups.push(Setup {
            name: n,
            path,
            funds: stake,
            ram: PRODUCER_RAM_PAYMENT,
            cpu,
            net: stake - cpu,
            vote_self: true,
            contract: None,
        });
    }
    for (i, a) in spec.accounts.iter().enumerate() {
        setups.push(Setup {
            name: name(&a.name),
            path: format!("accounts[{i}]"),
            funds: a.balance + a.cpu_stake + a.net_stake,
            ram: a.ram,
            cpu: a.cpu_stake,
            net: a.net_stake,
            vote_self: false,
            contract: a.contract.clone(),
        });
    }
    let consensus = ConsensusLedger::new(params, votes).map_err(|e| ConfigError::Invalid {
        path: "producers.count".into(),
        message: e.to_string(),
    })?;
    let mut ledger = Ledger::genesis(spec.resources.resource_params(), consensus, KeyId::new(SYSTEM_KEY));
    let system = name(SYSTEM_ACCOUNT);
    let total: u64 = setups.iter().map(|s| s.funds + s.ram).sum();
    ledger.issue(&system, EOS, total).map_err(|e| ConfigError::Invalid {
        path: "accounts".into(),
        message: e.to_string(),
    })?;
    let env = ExecEnv {
        now: 0,
        head_num: 0,
        head_time: 0,
    };
    for (nonce, s) in setups.iter().enumerate() {
        let key = account_key(&s.name);
        let own = || PermissionLevel::active(s.name.clone());
        let mut actions = vec![Action::new(system.clone(), "newaccount")
            .with("creator", system.clone())
            .with("name", s.name.clone())
            .with("key", key.0.as_str())
            .with("ram", s.ram)
            .auth(PermissionLevel::active(system.clone()))];
        if s.funds > 0 {
            actions.push(
                Action::new(name(TOKEN_ACCOUNT), "transfer")
                    .with("from", system.clone())
                    .with("to", s.name.clone())
                    .with("quantity", s.funds)
                    .auth(PermissionLevel::active(system.clone())),
            );
        }
        if s.cpu + s.net > 0 {
            actions.push(
                Action::new(system.clone(), "delegatebw")
                    .with("account", s.name.clone())
                    .with("cpu", s.cpu)
                    .with("net", s.net)
                    .auth(own()),
            );
        }
        if s.vote_self {
            actions.push(
                Action::new(system.clone(), "voteproducer")
                    .with("voter", s.name.clone())
                    .with("producers", s.name.as_str())
                    .auth(own()),
            );
        }
        if let Some(c) = &s.contract {
            let text = corpus::text(c).ok_or_else(|| ConfigError::Invalid {
                path: format!("{}.contract", s.path),
                message: format!("no bundled contract named {c:?}"),
            })?;
            actions.push(
                Action::new(system.clone(), "setcode")
                    .with("account", s.name.clone())
                    .with("code", text)
                    .auth(own()),
            );
        }
        let tx = Transaction::immediate(actions, 0, u64::MAX, nonce as u64);
        let out = execute_transaction(&ledger, &tx, &env, true).map_err(|e| ConfigError::Invalid {
            path: s.path.clone(),
            message: e.to_string(),
        })?;
        ledger.commit(out.changes);
    }
    let c = &ledger.consensus;
    let schedule = tally_votes(&c.votes, c.params.producer_count, c.params.slots_per_producer, 0).map_err(|e| ConfigError::Invalid {
        path: "producers".into(),
        message: e.to_string(),
    })?;
    ledger.consensus.schedule = schedule;
    debug_assert_eq!(ledger.check_invariants(), Ok(()));
    Ok(ledger)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genesis_funds_stakes_and_elects() {
        let spec = ScenarioSpec::parse(
            r#"
name = "g"
duration_ms = 1000
seed = 3
[producers]
count = 4
stake = 1000
standby = 1
standby_stake = 10
[[accounts]]
name = "alice"
balance = 50
cpu_stake = 20
net_stake = 10
contract = "benign"
"#,
        )
        .unwrap();
        let l = build_genesis(&spec).unwrap();
        l.check_invariants().unwrap();
        let alice = name("alice");
        assert_eq!(l.balance(&alice, EOS), 50);
        let r = l.resources.account(&alice).unwrap();
        assert_eq!((r.staked_cpu, r.staked_net), (20, 10));
        assert!(l.account(&alice).unwrap().contract.is_some());
        assert_eq!(l.consensus.schedule.producers, producer_names(&spec));
        assert_eq!(l.balance(&name(SYSTEM_ACCOUNT), EOS), 0);
    }
}
