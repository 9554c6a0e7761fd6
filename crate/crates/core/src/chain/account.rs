use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chain::permission::{Permission, PermissionName};
use crate::contracts::ir::ContractDef;
use crate::name::AccountName;
use crate::Millis;

pub const EOS: &str = "EOS";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub name: AccountName,
    pub creator: AccountName,
    pub created_at: Millis,
    pub permissions: BTreeMap<PermissionName, Permission>,
    /// Token symbol to base units (4 implied decimals).
    pub balances: BTreeMap<String, u64>,
    pub contract: Option<ContractDef>,
}

impl Account {
    pub fn new(name: AccountName, creator: AccountName, created_at: Millis, owner: Permission, active: Permission) -> Self {
        let mut permissions = BTreeMap::new();
        permissions.insert(PermissionName::Owner, owner);
        permissions.insert(PermissionName::Active, active);
        Self {
            name,
            creator,
            created_at,
            permissions,
            balances: BTreeMap::new(),
            contract: None,
        }
    }

    pub fn balance(&self, symbol: &str) -> u64 {
        self.balances.get(symbol).copied().unwrap_or(0)
    }

    pub fn credit(&mut self, symbol: &str, amount: u64) {
        *self.balances.entry(symbol.to_string()).or_insert(0) += amount;
    }

    /// Returns false, leaving the balance untouched, if funds are short.
    pub fn debit(&mut self, symbol: &str, amount: u64) -> bool {
        let bal = self.balances.entry(symbol.to_string()).or_insert(0);
        if *bal < amount {
            return false;
        }
        *bal -= amount;
        true
    }
}
