//! Static detection of five vulnerability patterns in handler step lists.
//!
//! The analysis walks each handler's steps in execution order, tracking which
//! guards have run on the current path and which fields carry wrapped or
//! block-derived values. Branch arms are analysed separately; after a branch
//! a guard counts only if both arms established it.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chain::ledger::TOKEN_ACCOUNT;
use crate::contracts::ir::{ArithMode, CodeMatch, ContractDef, HandlerSpec, Operand, Step, ValueExpr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VulnClass {
    IntegerOverflow,
    MissingAuth,
    FakeEos,
    FakeNotification,
    PredictableRandomness,
}

impl VulnClass {
    pub const ALL: [VulnClass; 5] = [
        VulnClass::IntegerOverflow,
        VulnClass::MissingAuth,
        VulnClass::FakeEos,
        VulnClass::FakeNotification,
        VulnClass::PredictableRandomness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VulnClass::IntegerOverflow => "integer-overflow",
            VulnClass::MissingAuth => "missing-auth",
            VulnClass::FakeEos => "fake-eos",
            VulnClass::FakeNotification => "fake-notification",
            VulnClass::PredictableRandomness => "predictable-randomness",
        }
    }
}

impl fmt::Display for VulnClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VulnClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VulnClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown vulnerability class {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub class: VulnClass,
    pub code: String,
    pub action: String,
    /// Pre-order step indices, as numbered by [`crate::contracts::ir::walk_steps`].
    pub evidence: Vec<usize>,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} in handler ({}, {}) at steps {:?}", self.class, self.code, self.action, self.evidence)
    }
}

#[derive(Debug, Clone, Default)]
struct PathState {
    auth_checked: bool,
    code_checked: bool,
    recipient_checked: bool,
    /// Field -> index of the unchecked wrapping arith it derives from.
    wrapped: BTreeMap<String, usize>,
    /// Field -> index of the block-info read it derives from.
    block_derived: BTreeMap<String, usize>,
}

impl PathState {
    fn join(a: PathState, b: PathState) -> PathState {
        let mut wrapped = a.wrapped;
        for (k, v) in b.wrapped {
            wrapped.entry(k).or_insert(v);
        }
        let mut block_derived = a.block_derived;
        for (k, v) in b.block_derived {
            block_derived.entry(k).or_insert(v);
        }
        PathState {
            auth_checked: a.auth_checked && b.auth_checked,
            code_checked: a.code_checked && b.code_checked,
            recipient_checked: a.recipient_checked && b.recipient_checked,
            wrapped,
            block_derived,
        }
    }
}

struct Analysis {
    /// Incoming-transfer handler that is reachable for foreign code.
    transfer_from_other_code: bool,
    /// Incoming-transfer handler whose code is not pinned to eosio.token.
    transfer_not_pinned: bool,
    found: BTreeMap<VulnClass, Vec<usize>>,
    next: usize,
}

fn operand_field(o: &Operand) -> Option<&str> {
    match o {
        Operand::Field(f) => Some(f),
        Operand::Const(_) => None,
    }
}

fn pays_out(steps: &[Step]) -> bool {
    steps.iter().any(|s| match s {
        Step::TransferOut { .. } | Step::SendInline(_) | Step::SendDeferred { .. } => true,
        Step::BranchOn { then, otherwise, .. } => pays_out(then) || pays_out(otherwise),
        _ => false,
    })
}

impl Analysis {
    fn report(&mut self, class: VulnClass, evidence: Vec<usize>) {
        self.found.entry(class).or_insert(evidence);
    }

    fn acting_step(&mut self, idx: usize, st: &PathState) {
        if self.transfer_not_pinned && !st.code_checked {
            self.report(VulnClass::FakeEos, vec![idx]);
        }
        if self.transfer_from_other_code && !st.recipient_checked {
            self.report(VulnClass::FakeNotification, vec![idx]);
        }
    }

    fn sink(&mut self, idx: usize, st: &PathState, field: &str) {
        if let Some(origin) = st.wrapped.get(field) {
            self.report(VulnClass::IntegerOverflow, vec![*origin, idx]);
        }
    }

    fn walk(&mut self, steps: &[Step], mut st: PathState) -> PathState {
        for step in steps {
            let idx = self.next;
            self.next += 1;
            match step {
                Step::CheckAuth { .. } => st.auth_checked = true,
                Step::CheckCodeIs { account } => {
                    if account.as_str() == TOKEN_ACCOUNT {
                        st.code_checked = true;
                    }
                }
                Step::CheckRecipientIsSelf => st.recipient_checked = true,
                Step::Arith {
                    lhs, rhs, into, mode, bound, ..
                } => {
                    let inputs = [operand_field(lhs), operand_field(rhs)];
                    let inherited = inputs.iter().flatten().find_map(|f| st.wrapped.get(*f).copied());
                    let origin = inherited.or((*mode == ArithMode::Wrapping && bound.is_none()).then_some(idx));
                    match origin {
                        Some(o) => st.wrapped.insert(into.clone(), o),
                        None => st.wrapped.remove(into),
                    };
                    let random = inputs.iter().flatten().find_map(|f| st.block_derived.get(*f).copied());
                    match random {
                        Some(o) => st.block_derived.insert(into.clone(), o),
                        None => st.block_derived.remove(into),
                    };
                }
                Step::TransferOut { amount, .. } => {
                    if !st.auth_checked {
                        self.report(VulnClass::MissingAuth, vec![idx]);
                    }
                    self.acting_step(idx, &st);
                    self.sink(idx, &st, amount);
                }
                Step::StoreRow { key, .. } => {
                    if !st.auth_checked {
                        self.report(VulnClass::MissingAuth, vec![idx]);
                    }
                    self.acting_step(idx, &st);
                    self.sink(idx, &st, key);
                }
                Step::SendInline(t) | Step::SendDeferred { template: t, .. } => {
                    self.acting_step(idx, &st);
                    for (_, v) in &t.data {
                        if let ValueExpr::Field(f) = v {
                            self.sink(idx, &st, f);
                        }
                    }
                }
                Step::Notify { .. } => {}
                Step::ReadBlockInfo { into } => {
                    st.block_derived.insert(into.clone(), idx);
                    st.wrapped.remove(into);
                }
                Step::BranchOn {
                    field, then, otherwise, ..
                } => {
                    if let Some(origin) = st.block_derived.get(field) {
                        if pays_out(then) || pays_out(otherwise) {
                            self.report(VulnClass::PredictableRandomness, vec![*origin, idx]);
                        }
                    }
                    let a = self.walk(then, st.clone());
                    let b = self.walk(otherwise, st);
                    st = PathState::join(a, b);
                }
            }
        }
        st
    }
}

fn check_handler(contract: &ContractDef, h: &HandlerSpec) -> Vec<Finding> {
    let owner_code = CodeMatch::Exact(contract.owner.clone());
    let token_code = CodeMatch::Exact(TOKEN_ACCOUNT.parse().expect("valid"));
    let is_transfer = h.action == "transfer";
    let mut a = Analysis {
        transfer_from_other_code: is_transfer && h.code != owner_code,
        transfer_not_pinned: is_transfer && h.code != owner_code && h.code != token_code,
        found: BTreeMap::new(),
        next: 0,
    };
    a.walk(&h.steps, PathState::default());
    a.found
        .into_iter()
        .map(|(class, evidence)| Finding {
            class,
            code: h.code.to_string(),
            action: h.action.clone(),
            evidence,
        })
        .collect()
}

/// Findings for every handler of `contract`, at most one per class and
/// handler, ordered by handler then class.
pub fn check_vulnerabilities(contract: &ContractDef) -> Vec<Finding> {
    contract.handlers().iter().flat_map(|h| check_handler(contract, h)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contracts::descriptor::parse;

    fn classes(text: &str) -> Vec<VulnClass> {
        let c = parse(text).unwrap().contract;
        check_vulnerabilities(&c).into_iter().map(|f| f.class).collect()
    }

    #[test]
    fn class_names_round_trip() {
        for c in VulnClass::ALL {
            assert_eq!(c.as_str().parse::<VulnClass>().unwrap(), c);
        }
        assert!("nope".parse::<VulnClass>().is_err());
    }

    #[test]
    fn wrapping_sum_into_transfer_is_overflow() {
        let text = "contract batch\nhandler self batch\n  check_auth actor=$from\n  arith op=mul lhs=$count rhs=$value into=total mode=wrapping\n  transfer_out to=$to amount=$total\nend\n";
        let c = parse(text).unwrap().contract;
        let f = check_vulnerabilities(&c);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].class, VulnClass::IntegerOverflow);
        assert_eq!(f[0].evidence, vec![1, 2]);
        assert!(classes(&text.replace("mode=wrapping", "mode=checked")).is_empty());
        assert!(classes(&text.replace("mode=wrapping", "mode=wrapping bound=1000")).is_empty());
    }

    #[test]
    fn overflow_taint_flows_through_arith() {
        let text = "contract batch\nhandler self batch\n  check_auth actor=$from\n  arith op=add lhs=$a rhs=$b into=s mode=wrapping\n  arith op=mul lhs=$s rhs=2 into=t mode=checked\n  transfer_out to=$to amount=$t\nend\n";
        assert_eq!(classes(text), vec![VulnClass::IntegerOverflow]);
    }

    #[test]
    fn auth_inside_one_arm_does_not_cover_the_join() {
        let text = "contract w\nhandler self withdraw\n  branch_on field=$x threshold=1\n    check_auth actor=$owner\n  end\n  transfer_out to=$owner amount=$amount\nend\n";
        assert_eq!(classes(text), vec![VulnClass::MissingAuth]);
        let both = "contract w\nhandler self withdraw\n  branch_on field=$x threshold=1\n    check_auth actor=$owner\n  else\n    check_auth actor=self\n  end\n  transfer_out to=$owner amount=$amount\nend\n";
        assert!(classes(both).is_empty());
    }

    #[test]
    fn transfer_handlers() {
        let base = "contract bet\nhandler * transfer\n  check_auth actor=$from\n  check_recipient_is_self\n  transfer_out to=$from amount=$quantity\nend\n";
        assert_eq!(classes(base), vec![VulnClass::FakeEos]);
        let pinned = base.replace("handler * transfer", "handler eosio.token transfer");
        assert!(classes(&pinned).is_empty());
        let unchecked = pinned.replace("  check_recipient_is_self\n", "");
        assert_eq!(classes(&unchecked), vec![VulnClass::FakeNotification]);
        // A contract's own transfer action is not a notification handler.
        let own = unchecked.replace("handler eosio.token transfer", "handler self transfer");
        assert!(classes(&own).is_empty());
    }

    #[test]
    fn block_info_guarding_payout() {
        let text = "contract dice\nhandler eosio.token transfer\n  check_auth actor=$from\n  check_recipient_is_self\n  read_block_info into=draw\n  branch_on field=$draw threshold=50\n    transfer_out to=$from amount=$quantity\n  end\nend\n";
        let c = parse(text).unwrap().contract;
        let f = check_vulnerabilities(&c);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].class, VulnClass::PredictableRandomness);
        assert_eq!(f[0].evidence, vec![2, 3]);
        let no_payout = text.replace("    transfer_out to=$from amount=$quantity\n", "    notify account=$from\n");
        assert!(classes(&no_payout).is_empty());
    }
}
