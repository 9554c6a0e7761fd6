//! Property suites over ledger atomicity, descriptor printing and network
//! convergence.

use proptest::prelude::*;

use eosim::chain::account::EOS;
use eosim::chain::state::ChainState;
use eosim::chain::{Action, PermissionLevel, Transaction, TOKEN_ACCOUNT};
use eosim::contracts::descriptor;
use eosim::name::{name, AccountName};
use eosim::scenarios::genesis::account_key;
use eosim::scenarios::{build_genesis, run_scenario, ScenarioSpec};

const PEOPLE: [&str; 3] = ["alice", "bob", "carol"];

fn ledger_spec() -> ScenarioSpec {
    let mut text = String::from(
        "name = \"p\"\nduration_ms = 1000\nseed = 1\n[resources]\nwindow_cpu_capacity_ms = 34560000\nwindow_net_capacity_words = 1000000000\n",
    );
    for p in PEOPLE {
        text.push_str(&format!("[[accounts]]\nname = \"{p}\"\nbalance = 1000\ncpu_stake = 1000000\nnet_stake = 1000000\n"));
    }
    ScenarioSpec::parse(&text).unwrap()
}

fn transfer(from: &AccountName, to: &AccountName, amount: u64) -> Action {
    Action::new(name(TOKEN_ACCOUNT), "transfer")
        .with("from", from.clone())
        .with("to", to.clone())
        .with("quantity", amount)
        .with("memo", "")
        .auth(PermissionLevel::active(from.clone()))
}

/// One transaction: a sender and its transfers as (receiver, amount).
fn tx_strategy() -> impl Strategy<Value = (usize, Vec<(usize, u64)>)> {
    (0..3usize, prop::collection::vec((0..3usize, 0..700u64), 1..4))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    /// A transaction applies all of its transfers or none, and tokens are
    /// conserved throughout.
    #[test]
    fn transfers_are_atomic_and_conserve_tokens(txs in prop::collection::vec(tx_strategy(), 1..12)) {
        let names: Vec<AccountName> = PEOPLE.iter().map(|p| name(p)).collect();
        let mut chain = ChainState::new(build_genesis(&ledger_spec()).unwrap());
        let mut model: Vec<u64> = vec![1000; 3];
        for (slot, (from, legs)) in txs.into_iter().enumerate() {
            let actions: Vec<Action> = legs.iter().map(|(to, amt)| transfer(&names[from], &names[*to], *amt)).collect();
            let tx = Transaction::immediate(actions, chain.head_num(), 3_600_000, slot as u64).signed(account_key(&names[from]));
            chain.push_transaction(tx, 0).unwrap();

            let mut next = model.clone();
            let mut ok = true;
            for (to, amt) in &legs {
                if *to == from || *amt == 0 || next[from] < *amt {
                    ok = false;
                    break;
                }
                next[from] -= amt;
                next[*to] += amt;
            }
            let owner = chain.slot_owner(slot as u64);
            let produced = chain.produce_block(&owner, slot as u64, 0).unwrap();
            prop_assert_eq!(produced.block.transaction_count() == 1, ok);
            prop_assert_eq!(produced.rejected.len() == 1, !ok);
            if ok {
                model = next;
            }
            let balances: Vec<u64> = names.iter().map(|n| chain.ledger().balance(n, EOS)).collect();
            prop_assert_eq!(&balances, &model);
            chain.ledger().check_invariants().map_err(TestCaseError::fail)?;
        }
    }
}

fn operand() -> impl Strategy<Value = String> {
    prop_oneof![
        prop::sample::select(vec!["$from", "$to", "$quantity", "$amount", "$player"]).prop_map(str::to_string),
        (0..1000u64).prop_map(|n| n.to_string()),
    ]
}

fn leaf_step() -> impl Strategy<Value = String> {
    prop_oneof![
        prop::sample::select(vec!["$from", "$owner", "self"]).prop_map(|a| format!("check_auth actor={a}")),
        Just("check_recipient_is_self".to_string()),
        Just("check_code_is account=eosio.token".to_string()),
        (prop::sample::select(vec!["add", "sub", "mul"]), operand(), operand(), prop::sample::select(vec!["checked", "wrapping"]))
            .prop_map(|(op, l, r, m)| format!("arith op={op} lhs={l} rhs={r} into=v mode={m}")),
        prop::sample::select(vec!["$quantity", "$amount", "$v"]).prop_map(|a| format!("transfer_out to=$from amount={a}")),
        Just("notify account=$to".to_string()),
        Just("read_block_info into=draw".to_string()),
        (1..512u64).prop_map(|b| format!("store_row table=rows key=$from bytes={b} payer=self")),
        (0..2000u64).prop_map(|d| format!("send_deferred contract=self action=tick auth=self@active delay={d} sponsor=self")),
    ]
}

fn steps(depth: u32) -> BoxedStrategy<Vec<String>> {
    let leaf = leaf_step().prop_map(|s| vec![s]);
    let item = if depth == 0 {
        leaf.boxed()
    } else {
        prop_oneof![
            3 => leaf,
            1 => (0..100u64, steps(depth - 1)).prop_map(|(t, body)| {
                let mut v = vec![format!("branch_on field=$draw threshold={t}")];
                v.extend(body.into_iter().map(|l| format!("  {l}")));
                v.push("end".into());
                v
            }),
        ]
        .boxed()
    };
    prop::collection::vec(item, 0..5).prop_map(|v| v.concat()).boxed()
}

fn contract_text() -> impl Strategy<Value = String> {
    let handler = (prop::sample::select(vec!["self", "*", "eosio.token"]), prop::sample::select(vec!["transfer", "bet", "tick", "post"]), steps(2));
    prop::collection::vec(handler, 1..4).prop_map(|hs| {
        let mut text = String::from("contract sample\n");
        let mut seen = std::collections::BTreeSet::new();
        for (code, action, body) in hs {
            if !seen.insert((code, action)) {
                continue;
            }
            text.push_str(&format!("handler {code} {action}\n"));
            for l in body {
                text.push_str(&format!("  {l}\n"));
            }
            text.push_str("end\n");
        }
        text
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn descriptors_survive_print_and_parse(text in contract_text()) {
        let parsed = descriptor::parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        let printed = descriptor::print(&parsed.contract);
        let again = descriptor::parse(&printed).map_err(|e| TestCaseError::fail(format!("{e}\n{printed}")))?;
        prop_assert_eq!(&again.contract, &parsed.contract);
        prop_assert_eq!(descriptor::print(&again.contract), printed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    /// Any connected network of up to six nodes ends with every node on the
    /// same head and the same irreversible block.
    #[test]
    fn networks_converge(nodes in 2..=6usize, shape in prop::sample::select(vec!["mesh", "line", "ring"]),
                         lat in (0..200u64, 0..250u64), seed in 0..=i64::MAX as u64, late in any::<bool>()) {
        let (lo, hi) = (lat.0, lat.0 + lat.1);
        let mut text = format!(
            "name = \"conv\"\nduration_ms = 8000\nseed = {seed}\n[topology]\nnodes = {nodes}\nshape = \"{shape}\"\nlatency_ms = [{lo}, {hi}]\n"
        );
        if late {
            text.push_str(&format!("[[topology.late_joiners]]\nnode = {}\nat_ms = 3000\n", nodes - 1));
        }
        text.push_str("[[accounts]]\nname = \"alice\"\nbalance = 100000\ncpu_stake = 10000\nnet_stake = 10000\n");
        text.push_str("[[accounts]]\nname = \"bob\"\nbalance = 100000\ncpu_stake = 10000\nnet_stake = 10000\n");
        text.push_str("[workload]\ntx_rate = 10\nsenders = [\"alice\", \"bob\"]\n");
        let spec = ScenarioSpec::parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        let out = run_scenario(&spec).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let fin = out.summary.final_state.unwrap();
        let heads: Vec<u64> = fin["node_heads"].as_array().unwrap().iter().map(|h| h.as_u64().unwrap()).collect();
        prop_assert!(heads.iter().all(|h| *h == heads[0] && *h >= 14), "heads {:?}", heads);
    }
}
