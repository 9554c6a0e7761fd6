use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chain::account::{Account, EOS};
use crate::chain::permission::{AuthError, KeyId, Permission, PermissionLevel, PermissionName, PermissionSource};
use crate::chain::transaction::{Transaction, TxId};
use crate::chain::ChainError;
use crate::consensus::{ConsensusLedger, VoteState};
use crate::hash::fnv1a64;
use crate::name::{name, AccountName};
use crate::resources::{self, ops, AccountResources, ResourceKind, ResourceLedger, ResourceParams, ResourceTotals};
use crate::Millis;

pub const SYSTEM_ACCOUNT: &str = "eosio";
pub const TOKEN_ACCOUNT: &str = "eosio.token";
/// Holds staked and refunding tokens.
pub const STAKE_ACCOUNT: &str = "eosio.stake";
/// Holds tokens paid for RAM.
pub const RAM_ACCOUNT: &str = "eosio.ram";
/// RAM every new account must own and immediately uses.
pub const ACCOUNT_RAM_BYTES: u64 = 3000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeferredEntry {
    pub due: Millis,
    pub id: TxId,
    pub tx: Transaction,
    /// Authorization was already checked when the entry was scheduled.
    pub preauthorized: bool,
}

/// Deferred transactions ordered by due time, then id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeferredQueue {
    #[serde(with = "entries_as_vec")]
    entries: BTreeMap<(Millis, TxId), DeferredEntry>,
}

mod entries_as_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<(Millis, TxId), DeferredEntry>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.values())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(Millis, TxId), DeferredEntry>, D::Error> {
        let v: Vec<DeferredEntry> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|e| ((e.due, e.id), e)).collect())
    }
}

impl DeferredQueue {
    pub fn push(&mut self, entry: DeferredEntry) {
        self.entries.insert((entry.due, entry.id), entry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &DeferredEntry> {
        self.entries.values()
    }

    /// Earliest entry due at or before `now`.
    pub fn first_due(&self, now: Millis) -> Option<&DeferredEntry> {
        self.entries.values().next().filter(|e| e.due <= now)
    }

    pub fn due_count(&self, now: Millis) -> usize {
        self.entries.range(..=(now, TxId(u64::MAX))).count()
    }

    pub fn remove(&mut self, due: Millis, id: TxId) -> Option<DeferredEntry> {
        self.entries.remove(&(due, id))
    }

    pub fn find(&self, id: TxId) -> Option<&DeferredEntry> {
        self.entries.values().find(|e| e.id == id)
    }
}

/// Full replicated application state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    pub accounts: BTreeMap<AccountName, Account>,
    pub resources: ResourceLedger,
    pub consensus: ConsensusLedger,
    pub deferred: DeferredQueue,
    /// Total issued per symbol.
    pub supply: BTreeMap<String, u64>,
}

impl PermissionSource for Ledger {
    fn permission(&self, level: &PermissionLevel) -> Result<&Permission, AuthError> {
        let acct = self
            .accounts
            .get(&level.actor)
            .ok_or_else(|| AuthError::UnknownAccount(level.actor.clone()))?;
        acct.permissions
            .get(&level.permission)
            .ok_or_else(|| AuthError::UnknownPermission(level.clone()))
    }
}

impl Ledger {
    /// Ledger holding the system accounts, all controlled by `system_key`.
    pub fn genesis(resources: ResourceParams, consensus: ConsensusLedger, system_key: KeyId) -> Self {
        let mut accounts = BTreeMap::new();
        for n in [SYSTEM_ACCOUNT, TOKEN_ACCOUNT, STAKE_ACCOUNT, RAM_ACCOUNT] {
            let n = name(n);
            accounts.insert(
                n.clone(),
                Account::new(
                    n,
                    name(SYSTEM_ACCOUNT),
                    0,
                    Permission::single_key(PermissionName::Owner, system_key.clone()),
                    Permission::single_key(PermissionName::Active, system_key.clone()),
                ),
            );
        }
        Self {
            accounts,
            resources: ResourceLedger::new(resources),
            consensus,
            deferred: DeferredQueue::default(),
            supply: BTreeMap::new(),
        }
    }

    pub fn account(&self, n: &AccountName) -> Option<&Account> {
        self.accounts.get(n)
    }

    pub fn balance(&self, n: &AccountName, symbol: &str) -> u64 {
        self.accounts.get(n).map_or(0, |a| a.balance(symbol))
    }

    /// Mints `amount` of `symbol` to `to`.
    pub fn issue(&mut self, to: &AccountName, symbol: &str, amount: u64) -> Result<(), ChainError> {
        let acct = self
            .accounts
            .get_mut(to)
            .ok_or_else(|| ChainError::UnknownAccount(to.clone()))?;
        acct.credit(symbol, amount);
        *self.supply.entry(symbol.to_string()).or_insert(0) += amount;
        Ok(())
    }

    pub fn overlay(&self) -> Overlay<'_> {
        Overlay::new(self)
    }

    pub fn commit(&mut self, changes: Changes) {
        for (n, a) in changes.accounts {
            self.accounts.insert(n, a);
        }
        for (n, r) in changes.resources {
            self.resources.accounts.insert(n, r);
        }
        self.resources.totals = changes.totals;
        for e in changes.new_deferred {
            self.deferred.push(e);
        }
        if let Some(v) = changes.votes {
            self.consensus.votes = v;
        }
    }

    fn with_overlay<T>(&mut self, f: impl FnOnce(&mut Overlay<'_>) -> Result<T, ChainError>) -> Result<T, ChainError> {
        let mut o = self.overlay();
        let out = f(&mut o)?;
        let changes = o.into_changes();
        self.commit(changes);
        Ok(out)
    }

    /// Creates `new_name`, buying its RAM with `ram_purchase` tokens from
    /// `creator`. The purchase must cover [`ACCOUNT_RAM_BYTES`].
    pub fn create_account(
        &mut self,
        creator: &AccountName,
        new_name: &AccountName,
        owner: Permission,
        active: Permission,
        ram_purchase: u64,
        now: Millis,
    ) -> Result<(), ChainError> {
        self.with_overlay(|o| o.create_account(creator, new_name, owner, active, ram_purchase, now))
    }

    pub fn stake(&mut self, n: &AccountName, amount: u64, kind: ResourceKind) -> Result<(), ChainError> {
        self.with_overlay(|o| o.stake(n, amount, kind))
    }

    pub fn unstake(&mut self, n: &AccountName, amount: u64, kind: ResourceKind, now: Millis) -> Result<resources::Refund, ChainError> {
        self.with_overlay(|o| o.unstake(n, amount, kind, now))
    }

    pub fn buy_ram(&mut self, n: &AccountName, payment: u64) -> Result<u64, ChainError> {
        self.with_overlay(|o| o.buy_ram(n, n, payment))
    }

    pub fn sell_ram(&mut self, n: &AccountName, bytes: u64) -> Result<u64, ChainError> {
        self.with_overlay(|o| o.sell_ram(n, bytes))
    }

    /// Credits every refund due at `now` back to its owner.
    pub fn release_refunds(&mut self, now: Millis) -> Vec<(AccountName, u64)> {
        let due = self.resources.take_due_refunds(now);
        for (n, amount) in &due {
            let stake = self.accounts.get_mut(&name(STAKE_ACCOUNT)).expect("system account");
            let ok = stake.debit(EOS, *amount);
            debug_assert!(ok, "stake account underfunded");
            if let Some(a) = self.accounts.get_mut(n) {
                a.credit(EOS, *amount);
            }
        }
        due
    }

    /// Canonical JSON serialization; maps are ordered so the bytes are stable.
    pub fn canonical_json(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("ledger serializes")
    }

    pub fn state_hash(&self) -> u64 {
        fnv1a64(&self.canonical_json())
    }

    pub fn total_balances(&self, symbol: &str) -> u64 {
        self.accounts.values().map(|a| a.balance(symbol)).sum()
    }

    /// Token conservation, stake custody and resource/vote invariants.
    pub fn check_invariants(&self) -> Result<(), String> {
        let supply = self.supply.get(EOS).copied().unwrap_or(0);
        let held = self.total_balances(EOS);
        let burned = self.resources.totals.fees_burned;
        if held + burned != supply {
            return Err(format!("EOS balances {held} + burned {burned} != supply {supply}"));
        }
        let custody = self.balance(&name(STAKE_ACCOUNT), EOS);
        let owed = self.resources.totals.total_staked_cpu + self.resources.totals.total_staked_net + self.resources.pending_refund_total();
        if custody != owed {
            return Err(format!("stake custody {custody} != staked + refunding {owed}"));
        }
        self.resources.check_invariants()?;
        self.consensus.votes.check_invariants()
    }
}

/// Pending writes of one transaction.
#[derive(Debug, Default)]
pub struct Changes {
    pub accounts: BTreeMap<AccountName, Account>,
    pub resources: BTreeMap<AccountName, AccountResources>,
    pub totals: ResourceTotals,
    pub new_deferred: Vec<DeferredEntry>,
    pub votes: Option<VoteState>,
}

/// Copy-on-write view of a [`Ledger`]. Reads fall through to the base;
/// writes are collected and applied by [`Ledger::commit`] only on success,
/// which makes every transaction atomic.
pub struct Overlay<'a> {
    base: &'a Ledger,
    accounts: BTreeMap<AccountName, Account>,
    resources: BTreeMap<AccountName, AccountResources>,
    totals: ResourceTotals,
    new_deferred: Vec<DeferredEntry>,
    votes: Option<VoteState>,
}

impl PermissionSource for Overlay<'_> {
    fn permission(&self, level: &PermissionLevel) -> Result<&Permission, AuthError> {
        let acct = self
            .account(&level.actor)
            .ok_or_else(|| AuthError::UnknownAccount(level.actor.clone()))?;
        acct.permissions
            .get(&level.permission)
            .ok_or_else(|| AuthError::UnknownPermission(level.clone()))
    }
}

impl<'a> Overlay<'a> {
    pub fn new(base: &'a Ledger) -> Self {
        Self {
            base,
            accounts: BTreeMap::new(),
            resources: BTreeMap::new(),
            totals: base.resources.totals.clone(),
            new_deferred: Vec::new(),
            votes: None,
        }
    }

    pub fn base(&self) -> &'a Ledger {
        self.base
    }

    pub fn into_changes(self) -> Changes {
        Changes {
            accounts: self.accounts,
            resources: self.resources,
            totals: self.totals,
            new_deferred: self.new_deferred,
            votes: self.votes,
        }
    }

    pub fn votes(&self) -> &VoteState {
        self.votes.as_ref().unwrap_or(&self.base.consensus.votes)
    }

    pub fn votes_mut(&mut self) -> &mut VoteState {
        let base = &self.base.consensus.votes;
        self.votes.get_or_insert_with(|| base.clone())
    }

    pub fn account(&self, n: &AccountName) -> Option<&Account> {
        self.accounts.get(n).or_else(|| self.base.accounts.get(n))
    }

    pub fn exists(&self, n: &AccountName) -> bool {
        self.account(n).is_some()
    }

    pub fn account_mut(&mut self, n: &AccountName) -> Result<&mut Account, ChainError> {
        if !self.accounts.contains_key(n) {
            let a = self
                .base
                .accounts
                .get(n)
                .ok_or_else(|| ChainError::UnknownAccount(n.clone()))?
                .clone();
            self.accounts.insert(n.clone(), a);
        }
        Ok(self.accounts.get_mut(n).expect("inserted"))
    }

    pub fn balance(&self, n: &AccountName, symbol: &str) -> u64 {
        self.account(n).map_or(0, |a| a.balance(symbol))
    }

    pub fn debit(&mut self, n: &AccountName, symbol: &str, amount: u64) -> Result<(), ChainError> {
        let a = self.account_mut(n)?;
        let balance = a.balance(symbol);
        if !a.debit(symbol, amount) {
            return Err(ChainError::InsufficientBalance {
                account: n.clone(),
                symbol: symbol.to_string(),
                balance,
                needed: amount,
            });
        }
        Ok(())
    }

    pub fn credit(&mut self, n: &AccountName, symbol: &str, amount: u64) -> Result<(), ChainError> {
        self.account_mut(n)?.credit(symbol, amount);
        Ok(())
    }

    pub fn move_tokens(&mut self, from: &AccountName, to: &AccountName, symbol: &str, amount: u64) -> Result<(), ChainError> {
        if !self.exists(to) {
            return Err(ChainError::UnknownAccount(to.clone()));
        }
        self.debit(from, symbol, amount)?;
        self.credit(to, symbol, amount)
    }

    pub fn resources(&self, n: &AccountName) -> AccountResources {
        self.resources
            .get(n)
            .or_else(|| self.base.resources.accounts.get(n))
            .cloned()
            .unwrap_or_default()
    }

    fn resources_mut(&mut self, n: &AccountName) -> &mut AccountResources {
        if !self.resources.contains_key(n) {
            let r = self.base.resources.accounts.get(n).cloned().unwrap_or_default();
            self.resources.insert(n.clone(), r);
        }
        self.resources.get_mut(n).expect("inserted")
    }

    pub fn params(&self) -> &'a ResourceParams {
        &self.base.resources.params
    }

    pub fn push_deferred(&mut self, entry: DeferredEntry) {
        self.new_deferred.push(entry);
    }

    pub fn new_deferred(&self) -> &[DeferredEntry] {
        &self.new_deferred
    }

    pub fn create_account(
        &mut self,
        creator: &AccountName,
        new_name: &AccountName,
        owner: Permission,
        active: Permission,
        ram_purchase: u64,
        now: Millis,
    ) -> Result<(), ChainError> {
        if !self.exists(creator) {
            return Err(ChainError::UnknownAccount(creator.clone()));
        }
        if self.exists(new_name) {
            return Err(ChainError::NameTaken(new_name.clone()));
        }
        let balance = self.balance(creator, EOS);
        if balance < ram_purchase {
            return Err(ChainError::InsufficientBalance {
                account: creator.clone(),
                symbol: EOS.into(),
                balance,
                needed: ram_purchase,
            });
        }
        let price = self.params().ram_price.max(1);
        let bytes = ram_purchase.saturating_sub(resources::ram_fee(ram_purchase)) / price;
        if bytes < ACCOUNT_RAM_BYTES {
            return Err(ChainError::InsufficientRam {
                bytes,
                needed: ACCOUNT_RAM_BYTES,
            });
        }
        let acct = Account::new(new_name.clone(), creator.clone(), now, owner, active);
        self.accounts.insert(new_name.clone(), acct);
        self.buy_ram(creator, new_name, ram_purchase)?;
        self.use_ram(new_name, ACCOUNT_RAM_BYTES)?;
        Ok(())
    }

    pub fn stake(&mut self, n: &AccountName, amount: u64, kind: ResourceKind) -> Result<(), ChainError> {
        if amount == 0 {
            return Err(resources::ResourceError::ZeroAmount.into());
        }
        self.move_tokens(n, &name(STAKE_ACCOUNT), EOS, amount)?;
        let mut totals = self.totals.clone();
        ops::stake(&mut totals, self.resources_mut(n), amount, kind)?;
        self.totals = totals;
        Ok(())
    }

    pub fn unstake(&mut self, n: &AccountName, amount: u64, kind: ResourceKind, now: Millis) -> Result<resources::Refund, ChainError> {
        if !self.exists(n) {
            return Err(ChainError::UnknownAccount(n.clone()));
        }
        let mut totals = self.totals.clone();
        let refund = ops::unstake(n, &mut totals, self.resources_mut(n), amount, kind, now)?;
        self.totals = totals;
        Ok(refund)
    }

    /// `payer` pays `payment` tokens; `receiver` gets the bytes. Returns bytes.
    pub fn buy_ram(&mut self, payer: &AccountName, receiver: &AccountName, payment: u64) -> Result<u64, ChainError> {
        if !self.exists(receiver) {
            return Err(ChainError::UnknownAccount(receiver.clone()));
        }
        let balance = self.balance(payer, EOS);
        if balance < payment {
            return Err(ChainError::InsufficientBalance {
                account: payer.clone(),
                symbol: EOS.into(),
                balance,
                needed: payment,
            });
        }
        let params = self.params();
        let mut totals = self.totals.clone();
        let purchase = ops::buy_ram(params, &mut totals, self.resources_mut(receiver), payment)?;
        self.totals = totals;
        self.debit(payer, EOS, payment - purchase.change)?;
        self.credit(&name(RAM_ACCOUNT), EOS, payment - purchase.change - purchase.fee)?;
        Ok(purchase.bytes)
    }

    /// Returns the tokens credited after the fee.
    pub fn sell_ram(&mut self, n: &AccountName, bytes: u64) -> Result<u64, ChainError> {
        if !self.exists(n) {
            return Err(ChainError::UnknownAccount(n.clone()));
        }
        let params = self.params();
        let mut totals = self.totals.clone();
        let sale = ops::sell_ram(n, params, &mut totals, self.resources_mut(n), bytes)?;
        self.totals = totals;
        if sale.proceeds > 0 {
            self.debit(&name(RAM_ACCOUNT), EOS, sale.proceeds)?;
            self.credit(n, EOS, sale.net)?;
        }
        Ok(sale.net)
    }

    pub fn consume(&mut self, n: &AccountName, cpu_ms: u64, net_words: u64, now: Millis) -> Result<(), ChainError> {
        let params = self.params();
        let totals = self.totals.clone();
        ops::consume(n, params, &totals, self.resources_mut(n), cpu_ms, net_words, now)?;
        Ok(())
    }

    pub fn use_ram(&mut self, n: &AccountName, bytes: u64) -> Result<(), ChainError> {
        ops::use_ram(n, self.resources_mut(n), bytes)?;
        Ok(())
    }

    pub fn release_ram(&mut self, n: &AccountName, bytes: u64) -> Result<(), ChainError> {
        ops::release_ram(n, self.resources_mut(n), bytes)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::{ConsensusLedger, ConsensusParams, VoteState};
    use crate::name::generated;

    pub(crate) fn test_ledger() -> Ledger {
        let mut votes = VoteState::default();
        for i in 0..21 {
            votes.register(generated("bp", i), 0);
        }
        let params = ConsensusParams::default();
        let consensus = ConsensusLedger::new(params, votes).unwrap();
        let mut l = Ledger::genesis(ResourceParams::default(), consensus, KeyId::new("SYS"));
        l.issue(&name(SYSTEM_ACCOUNT), EOS, 1_000_000_000).unwrap();
        l
    }

    fn key_perm(p: PermissionName, k: &str) -> Permission {
        Permission::single_key(p, KeyId::new(k))
    }

    #[test]
    fn create_account_charges_footprint() {
        let mut l = test_ledger();
        l.create_account(
            &name("eosio"),
            &name("alice12"),
            key_perm(PermissionName::Owner, "K1"),
            key_perm(PermissionName::Active, "K1"),
            3100,
            5,
        )
        .unwrap();
        assert_eq!(l.resources.ram_used(&name("alice12")), ACCOUNT_RAM_BYTES);
        assert_eq!(l.resources.ram_owned(&name("alice12")), 3100 - 15);
        let a = l.account(&name("alice12")).unwrap();
        assert!(a.permissions.contains_key(&PermissionName::Owner));
        assert!(a.permissions.contains_key(&PermissionName::Active));
        l.check_invariants().unwrap();
    }

    #[test]
    fn create_account_errors() {
        let mut l = test_ledger();
        let own = || key_perm(PermissionName::Owner, "K");
        let act = || key_perm(PermissionName::Active, "K");
        l.create_account(&name("eosio"), &name("alice12"), own(), act(), 5000, 0).unwrap();
        assert_eq!(
            l.create_account(&name("eosio"), &name("alice12"), own(), act(), 5000, 0),
            Err(ChainError::NameTaken(name("alice12")))
        );
        assert!(matches!(
            l.create_account(&name("eosio"), &name("bob"), own(), act(), 3000, 0),
            Err(ChainError::InsufficientRam { bytes: 2985, .. })
        ));
        assert!(matches!(
            l.create_account(&name("alice12"), &name("bob"), own(), act(), 1_000_000, 0),
            Err(ChainError::InsufficientBalance { .. })
        ));
        assert!("ALICE".parse::<AccountName>().is_err());
        // Failed creations leave no trace.
        assert!(l.account(&name("bob")).is_none());
        l.check_invariants().unwrap();
    }

    #[test]
    fn staking_moves_tokens_into_custody() {
        let mut l = test_ledger();
        let sys = name("eosio");
        l.stake(&sys, 100, ResourceKind::Cpu).unwrap();
        assert_eq!(l.balance(&name(STAKE_ACCOUNT), EOS), 100);
        l.unstake(&sys, 40, ResourceKind::Cpu, 0).unwrap();
        l.check_invariants().unwrap();
        let before = l.balance(&sys, EOS);
        assert!(l.release_refunds(resources::UNSTAKE_LOCK_MS - 1).is_empty());
        assert_eq!(l.release_refunds(resources::UNSTAKE_LOCK_MS), vec![(sys.clone(), 40)]);
        assert_eq!(l.balance(&sys, EOS), before + 40);
        l.check_invariants().unwrap();
    }

    #[test]
    fn ram_trade_conserves_tokens() {
        let mut l = test_ledger();
        let sys = name("eosio");
        let bytes = l.buy_ram(&sys, 2000).unwrap();
        assert_eq!(bytes, 1990);
        assert_eq!(l.sell_ram(&sys, 1000).unwrap(), 995);
        assert_eq!(l.resources.totals.fees_burned, 15);
        l.check_invariants().unwrap();
    }

    #[test]
    fn deferred_queue_order() {
        let mut q = DeferredQueue::default();
        let tx = |n| Transaction::immediate(vec![], 0, 1, n);
        for (due, n) in [(5, 1), (3, 2), (5, 0)] {
            let t = tx(n);
            q.push(DeferredEntry { due, id: t.id(), tx: t, preauthorized: true });
        }
        let order: Vec<_> = q.iter().map(|e| e.due).collect();
        assert_eq!(order, [3, 5, 5]);
        let fives: Vec<_> = q.iter().filter(|e| e.due == 5).map(|e| e.id).collect();
        assert!(fives[0] < fives[1]);
        assert_eq!(q.due_count(4), 1);
        assert_eq!(q.due_count(5), 3);
        assert!(q.first_due(2).is_none());
    }
}
