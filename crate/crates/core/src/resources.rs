//! Token-staked resource metering.
//!
//! CPU and NET are shares of a per-window capacity proportional to stake and
//! are replenished at fixed window boundaries. RAM is bought outright for
//! tokens, carries a 0.5% fee on both purchase and sale, and never
//! replenishes. Unstaking CPU/NET returns tokens only after a three-day lock.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::name::AccountName;
use crate::Millis;

/// Three simulated days.
pub const UNSTAKE_LOCK_MS: Millis = 3 * 24 * 3600 * 1000;
/// RAM trade fee in basis points (0.5%).
pub const RAM_FEE_BPS: u64 = 50;
pub const DAY_MS: Millis = 24 * 3600 * 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceKind {
    Cpu,
    Net,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceParams {
    /// Base token units per byte.
    pub ram_price: u64,
    pub total_ram_supply: u64,
    pub window_cpu_capacity_ms: u64,
    pub window_net_capacity_words: u64,
    pub window_length_ms: Millis,
}

impl Default for ResourceParams {
    fn default() -> Self {
        Self {
            ram_price: 1,
            total_ram_supply: 64 * 1024 * 1024,
            window_cpu_capacity_ms: 10_000,
            window_net_capacity_words: 1_000_000,
            window_length_ms: DAY_MS,
        }
    }
}

pub fn ram_fee(amount: u64) -> u64 {
    ((u128::from(amount) * u128::from(RAM_FEE_BPS)) / 10_000) as u64
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResourceError {
    #[error("amount must be positive")]
    ZeroAmount,
    #[error("{account} has {staked} staked, cannot unstake {requested}")]
    InsufficientStake {
        account: AccountName,
        staked: u64,
        requested: u64,
    },
    #[error("RAM supply exhausted: {requested} bytes requested, {available} available")]
    RamSupplyExhausted { requested: u64, available: u64 },
    #[error("{account} cannot sell {requested} bytes: only {free} unused")]
    RamInUse {
        account: AccountName,
        free: u64,
        requested: u64,
    },
    #[error("{account} CPU exhausted: used {used} + {requested} > limit {limit} ms")]
    CpuExhausted {
        account: AccountName,
        used: u64,
        requested: u64,
        limit: u64,
    },
    #[error("{account} NET exhausted: used {used} + {requested} > limit {limit} words")]
    NetExhausted {
        account: AccountName,
        used: u64,
        requested: u64,
        limit: u64,
    },
    #[error("{account} RAM exhausted: used {used} + {requested} > owned {owned} bytes")]
    RamExhausted {
        account: AccountName,
        used: u64,
        requested: u64,
        owned: u64,
    },
    #[error("{account} releases {requested} bytes but only uses {used}")]
    RamUnderflow {
        account: AccountName,
        used: u64,
        requested: u64,
    },
    #[error("payment of {0} buys no RAM")]
    PaymentTooSmall(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Refund {
    pub amount: u64,
    pub release_at: Millis,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountResources {
    pub staked_cpu: u64,
    pub staked_net: u64,
    pub cpu_used: u64,
    pub net_used: u64,
    /// Index of the window `cpu_used`/`net_used` belong to.
    pub window: u64,
    pub ram_owned: u64,
    pub ram_used: u64,
    pub pending_refunds: Vec<Refund>,
}

impl AccountResources {
    pub fn ram_free(&self) -> u64 {
        self.ram_owned - self.ram_used
    }

    fn roll_window(&mut self, params: &ResourceParams, now: Millis) {
        let w = now / params.window_length_ms.max(1);
        if w > self.window {
            self.window = w;
            self.cpu_used = 0;
            self.net_used = 0;
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceTotals {
    pub total_staked_cpu: u64,
    pub total_staked_net: u64,
    pub ram_sold: u64,
    pub fees_burned: u64,
    /// Gross token volume of RAM trades (purchases and sale proceeds).
    pub ram_trade_volume: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RamPurchase {
    pub bytes: u64,
    pub fee: u64,
    /// Payment left over because it did not buy a whole byte.
    pub change: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RamSale {
    pub proceeds: u64,
    pub fee: u64,
    pub net: u64,
}

/// Operations on one account's resources against the shared totals. The
/// ledger and the per-transaction overlay both drive these.
pub mod ops {
    use super::*;

    pub fn limit(capacity: u64, stake: u64, total: u64) -> u64 {
        if total == 0 {
            return 0;
        }
        ((u128::from(capacity) * u128::from(stake)) / u128::from(total)) as u64
    }

    pub fn cpu_limit(p: &ResourceParams, t: &ResourceTotals, a: &AccountResources) -> u64 {
        limit(p.window_cpu_capacity_ms, a.staked_cpu, t.total_staked_cpu)
    }

    pub fn net_limit(p: &ResourceParams, t: &ResourceTotals, a: &AccountResources) -> u64 {
        limit(p.window_net_capacity_words, a.staked_net, t.total_staked_net)
    }

    pub fn stake(t: &mut ResourceTotals, a: &mut AccountResources, amount: u64, kind: ResourceKind) -> Result<(), ResourceError> {
        if amount == 0 {
            return Err(ResourceError::ZeroAmount);
        }
        match kind {
            ResourceKind::Cpu => {
                a.staked_cpu += amount;
                t.total_staked_cpu += amount;
            }
            ResourceKind::Net => {
                a.staked_net += amount;
                t.total_staked_net += amount;
            }
        }
        Ok(())
    }

    pub fn unstake(
        name: &AccountName,
        t: &mut ResourceTotals,
        a: &mut AccountResources,
        amount: u64,
        kind: ResourceKind,
        now: Millis,
    ) -> Result<Refund, ResourceError> {
        if amount == 0 {
            return Err(ResourceError::ZeroAmount);
        }
        let (staked, total) = match kind {
            ResourceKind::Cpu => (&mut a.staked_cpu, &mut t.total_staked_cpu),
            ResourceKind::Net => (&mut a.staked_net, &mut t.total_staked_net),
        };
        if *staked < amount {
            return Err(ResourceError::InsufficientStake {
                account: name.clone(),
                staked: *staked,
                requested: amount,
            });
        }
        *staked -= amount;
        *total -= amount;
        let refund = Refund {
            amount,
            release_at: now + UNSTAKE_LOCK_MS,
        };
        a.pending_refunds.push(refund.clone());
        Ok(refund)
    }

    /// Removes and returns the sum of refunds due at or before `now`.
    pub fn take_due_refunds(a: &mut AccountResources, now: Millis) -> u64 {
        let mut due = 0;
        a.pending_refunds.retain(|r| {
            if r.release_at <= now {
                due += r.amount;
                false
            } else {
                true
            }
        });
        due
    }

    pub fn buy_ram(p: &ResourceParams, t: &mut ResourceTotals, a: &mut AccountResources, payment: u64) -> Result<RamPurchase, ResourceError> {
        if payment == 0 {
            return Err(ResourceError::ZeroAmount);
        }
        let fee = ram_fee(payment);
        let price = p.ram_price.max(1);
        let bytes = (payment - fee) / price;
        if bytes == 0 {
            return Err(ResourceError::PaymentTooSmall(payment));
        }
        let available = p.total_ram_supply.saturating_sub(t.ram_sold);
        if bytes > available {
            return Err(ResourceError::RamSupplyExhausted {
                requested: bytes,
                available,
            });
        }
        let change = (payment - fee) - bytes * price;
        t.ram_sold += bytes;
        t.fees_burned += fee;
        t.ram_trade_volume += payment;
        a.ram_owned += bytes;
        Ok(RamPurchase { bytes, fee, change })
    }

    pub fn sell_ram(
        name: &AccountName,
        p: &ResourceParams,
        t: &mut ResourceTotals,
        a: &mut AccountResources,
        bytes: u64,
    ) -> Result<RamSale, ResourceError> {
        if bytes == 0 {
            return Ok(RamSale { proceeds: 0, fee: 0, net: 0 });
        }
        if a.ram_free() < bytes {
            return Err(ResourceError::RamInUse {
                account: name.clone(),
                free: a.ram_free(),
                requested: bytes,
            });
        }
        let proceeds = bytes * p.ram_price.max(1);
        let fee = ram_fee(proceeds);
        a.ram_owned -= bytes;
        t.ram_sold -= bytes;
        t.fees_burned += fee;
        t.ram_trade_volume += proceeds;
        Ok(RamSale {
            proceeds,
            fee,
            net: proceeds - fee,
        })
    }

    pub fn consume(
        name: &AccountName,
        p: &ResourceParams,
        t: &ResourceTotals,
        a: &mut AccountResources,
        cpu_ms: u64,
        net_words: u64,
        now: Millis,
    ) -> Result<(), ResourceError> {
        a.roll_window(p, now);
        let cpu_limit = cpu_limit(p, t, a);
        if a.cpu_used + cpu_ms > cpu_limit {
            return Err(ResourceError::CpuExhausted {
                account: name.clone(),
                used: a.cpu_used,
                requested: cpu_ms,
                limit: cpu_limit,
            });
        }
        let net_limit = net_limit(p, t, a);
        if a.net_used + net_words > net_limit {
            return Err(ResourceError::NetExhausted {
                account: name.clone(),
                used: a.net_used,
                requested: net_words,
                limit: net_limit,
            });
        }
        a.cpu_used += cpu_ms;
        a.net_used += net_words;
        Ok(())
    }

    pub fn use_ram(name: &AccountName, a: &mut AccountResources, bytes: u64) -> Result<(), ResourceError> {
        if a.ram_free() < bytes {
            return Err(ResourceError::RamExhausted {
                account: name.clone(),
                used: a.ram_used,
                requested: bytes,
                owned: a.ram_owned,
            });
        }
        a.ram_used += bytes;
        Ok(())
    }

    pub fn release_ram(name: &AccountName, a: &mut AccountResources, bytes: u64) -> Result<(), ResourceError> {
        if a.ram_used < bytes {
            return Err(ResourceError::RamUnderflow {
                account: name.clone(),
                used: a.ram_used,
                requested: bytes,
            });
        }
        a.ram_used -= bytes;
        Ok(())
    }
}

/// Resource state for every account plus global totals.
///
/// Token balances live in the chain ledger; these methods only move stake,
/// usage and RAM. Callers debit or credit balances around them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceLedger {
    pub params: ResourceParams,
    pub totals: ResourceTotals,
    pub accounts: BTreeMap<AccountName, AccountResources>,
}

impl ResourceLedger {
    pub fn new(params: ResourceParams) -> Self {
        Self {
            params,
            ..Default::default()
        }
    }

    pub fn account(&self, name: &AccountName) -> Option<&AccountResources> {
        self.accounts.get(name)
    }

    fn entry(&mut self, name: &AccountName) -> &mut AccountResources {
        self.accounts.entry(name.clone()).or_default()
    }

    pub fn cpu_limit(&self, name: &AccountName) -> u64 {
        self.accounts
            .get(name)
            .map_or(0, |a| ops::cpu_limit(&self.params, &self.totals, a))
    }

    pub fn net_limit(&self, name: &AccountName) -> u64 {
        self.accounts
            .get(name)
            .map_or(0, |a| ops::net_limit(&self.params, &self.totals, a))
    }

    /// CPU used in the window containing `now`.
    pub fn cpu_used_at(&self, name: &AccountName, now: Millis) -> u64 {
        self.usage_at(name, now).0
    }

    pub fn net_used_at(&self, name: &AccountName, now: Millis) -> u64 {
        self.usage_at(name, now).1
    }

    fn usage_at(&self, name: &AccountName, now: Millis) -> (u64, u64) {
        match self.accounts.get(name) {
            Some(a) if now / self.params.window_length_ms.max(1) <= a.window => (a.cpu_used, a.net_used),
            _ => (0, 0),
        }
    }

    pub fn ram_used(&self, name: &AccountName) -> u64 {
        self.accounts.get(name).map_or(0, |a| a.ram_used)
    }

    pub fn ram_owned(&self, name: &AccountName) -> u64 {
        self.accounts.get(name).map_or(0, |a| a.ram_owned)
    }

    pub fn stake(&mut self, name: &AccountName, amount: u64, kind: ResourceKind) -> Result<(), ResourceError> {
        let mut totals = self.totals.clone();
        let a = self.accounts.entry(name.clone()).or_default();
        ops::stake(&mut totals, a, amount, kind)?;
        self.totals = totals;
        Ok(())
    }

    pub fn unstake(&mut self, name: &AccountName, amount: u64, kind: ResourceKind, now: Millis) -> Result<Refund, ResourceError> {
        let mut totals = self.totals.clone();
        let a = self.accounts.entry(name.clone()).or_default();
        let refund = ops::unstake(name, &mut totals, a, amount, kind, now)?;
        self.totals = totals;
        Ok(refund)
    }

    pub fn buy_ram(&mut self, name: &AccountName, payment: u64) -> Result<RamPurchase, ResourceError> {
        let params = self.params.clone();
        let mut totals = self.totals.clone();
        let a = self.accounts.entry(name.clone()).or_default();
        let r = ops::buy_ram(&params, &mut totals, a, payment)?;
        self.totals = totals;
        Ok(r)
    }

    pub fn sell_ram(&mut self, name: &AccountName, bytes: u64) -> Result<RamSale, ResourceError> {
        let params = self.params.clone();
        let mut totals = self.totals.clone();
        let a = self.accounts.entry(name.clone()).or_default();
        let r = ops::sell_ram(name, &params, &mut totals, a, bytes)?;
        self.totals = totals;
        Ok(r)
    }

    pub fn consume(&mut self, name: &AccountName, cpu_ms: u64, net_words: u64, now: Millis) -> Result<(), ResourceError> {
        let params = self.params.clone();
        let totals = self.totals.clone();
        let a = self.entry(name);
        ops::consume(name, &params, &totals, a, cpu_ms, net_words, now)
    }

    pub fn use_ram(&mut self, name: &AccountName, bytes: u64) -> Result<(), ResourceError> {
        ops::use_ram(name, self.entry(name), bytes)
    }

    pub fn release_ram(&mut self, name: &AccountName, bytes: u64) -> Result<(), ResourceError> {
        ops::release_ram(name, self.entry(name), bytes)
    }

    /// Pops every refund due at `now`, returning `(account, amount)` pairs in
    /// account order.
    pub fn take_due_refunds(&mut self, now: Millis) -> Vec<(AccountName, u64)> {
        let mut out = Vec::new();
        for (name, a) in self.accounts.iter_mut() {
            let due = ops::take_due_refunds(a, now);
            if due > 0 {
                out.push((name.clone(), due));
            }
        }
        out
    }

    pub fn pending_refund_total(&self) -> u64 {
        self.accounts
            .values()
            .flat_map(|a| a.pending_refunds.iter())
            .map(|r| r.amount)
            .sum()
    }

    /// Checks the structural invariants; returns a description of the first
    /// violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut cpu = 0u64;
        let mut net = 0u64;
        for (name, a) in &self.accounts {
            if a.ram_used > a.ram_owned {
                return Err(format!("{name}: ram_used {} > ram_owned {}", a.ram_used, a.ram_owned));
            }
            // Usage may sit above a limit that shrank after unstaking; only
            // new consumption is bounded, so limits are not checked here.
            cpu += a.staked_cpu;
            net += a.staked_net;
        }
        if cpu != self.totals.total_staked_cpu || net != self.totals.total_staked_net {
            return Err(format!(
                "stake totals {}/{} != sums {cpu}/{net}",
                self.totals.total_staked_cpu, self.totals.total_staked_net
            ));
        }
        if self.totals.ram_sold > self.params.total_ram_supply {
            return Err(format!(
                "ram_sold {} > supply {}",
                self.totals.ram_sold, self.params.total_ram_supply
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::name::name;

    fn ledger() -> ResourceLedger {
        ResourceLedger::new(ResourceParams::default())
    }

    #[test]
    fn proportional_cpu_limit() {
        let mut l = ledger();
        l.stake(&name("alice"), 100, ResourceKind::Cpu).unwrap();
        l.stake(&name("bob"), 900, ResourceKind::Cpu).unwrap();
        assert_eq!(l.totals.total_staked_cpu, 1000);
        assert_eq!(l.cpu_limit(&name("alice")), 1000);
        assert_eq!(l.cpu_limit(&name("bob")), 9000);
    }

    #[test]
    fn sole_staker_gets_full_window() {
        let mut l = ledger();
        l.stake(&name("alice"), 7, ResourceKind::Net).unwrap();
        assert_eq!(l.net_limit(&name("alice")), 1_000_000);
    }

    #[test]
    fn zero_stake_rejected() {
        assert_eq!(ledger().stake(&name("a"), 0, ResourceKind::Cpu), Err(ResourceError::ZeroAmount));
    }

    #[test]
    fn unstake_locks_three_days() {
        let mut l = ledger();
        l.stake(&name("a"), 100, ResourceKind::Cpu).unwrap();
        let r = l.unstake(&name("a"), 50, ResourceKind::Cpu, 0).unwrap();
        assert_eq!(r, Refund { amount: 50, release_at: 259_200_000 });
        assert_eq!(l.totals.total_staked_cpu, 50);
        assert!(l.take_due_refunds(259_199_999).is_empty());
        assert_eq!(l.take_due_refunds(259_200_000), vec![(name("a"), 50)]);
        assert!(matches!(
            l.unstake(&name("a"), 51, ResourceKind::Cpu, 0),
            Err(ResourceError::InsufficientStake { .. })
        ));
    }

    #[test]
    fn ram_purchase_fee_and_floor() {
        let mut l = ledger();
        let p = l.buy_ram(&name("a"), 2000).unwrap();
        assert_eq!((p.fee, p.bytes), (10, 1990));
        l.params.ram_price = 2;
        let p = l.buy_ram(&name("b"), 2000).unwrap();
        assert_eq!((p.fee, p.bytes, p.change), (10, 995, 0));
    }

    #[test]
    fn ram_supply_exhaustion() {
        let mut l = ledger();
        l.params.total_ram_supply = 1000;
        assert!(matches!(
            l.buy_ram(&name("a"), 2000),
            Err(ResourceError::RamSupplyExhausted { .. })
        ));
    }

    #[test]
    fn ram_sale() {
        let mut l = ledger();
        l.buy_ram(&name("a"), 5000).unwrap();
        let s = l.sell_ram(&name("a"), 1000).unwrap();
        assert_eq!(s.net, 995);
        assert_eq!(l.sell_ram(&name("a"), 0).unwrap().net, 0);
        l.use_ram(&name("a"), l.ram_owned(&name("a"))).unwrap();
        assert!(matches!(l.sell_ram(&name("a"), 1), Err(ResourceError::RamInUse { .. })));
    }

    #[test]
    fn consume_boundary_and_replenish() {
        let mut l = ledger();
        l.params.window_cpu_capacity_ms = 1000;
        l.stake(&name("a"), 1, ResourceKind::Cpu).unwrap();
        l.stake(&name("a"), 1, ResourceKind::Net).unwrap();
        l.consume(&name("a"), 990, 0, 0).unwrap();
        assert!(matches!(
            l.consume(&name("a"), 20, 0, 0),
            Err(ResourceError::CpuExhausted { limit: 1000, used: 990, .. })
        ));
        assert_eq!(l.cpu_used_at(&name("a"), DAY_MS - 1), 990);
        assert_eq!(l.cpu_used_at(&name("a"), DAY_MS), 0);
        l.consume(&name("a"), 20, 0, DAY_MS).unwrap();
        assert_eq!(l.cpu_used_at(&name("a"), DAY_MS), 20);
    }

    #[test]
    fn net_exhaustion_names_net() {
        let mut l = ledger();
        l.params.window_net_capacity_words = 10;
        l.stake(&name("a"), 1, ResourceKind::Cpu).unwrap();
        l.stake(&name("a"), 1, ResourceKind::Net).unwrap();
        assert!(matches!(l.consume(&name("a"), 0, 11, 0), Err(ResourceError::NetExhausted { .. })));
    }

    #[test]
    fn ram_use_release() {
        let mut l = ledger();
        l.buy_ram(&name("a"), 3016).unwrap(); // fee 15, 3001 bytes
        l.release_ram(&name("a"), 0).unwrap();
        l.use_ram(&name("a"), 2991).unwrap();
        assert!(matches!(l.use_ram(&name("a"), 20), Err(ResourceError::RamExhausted { .. })));
        l.use_ram(&name("a"), 10).unwrap();
        l.release_ram(&name("a"), 10).unwrap();
        assert_eq!(l.ram_used(&name("a")), 2991);
        // Time never touches RAM.
        l.consume(&name("a"), 0, 0, 10 * DAY_MS).ok();
        assert_eq!(l.ram_used(&name("a")), 2991);
    }
}
