//! Declarative handler IR for toy contracts.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::permission::PermissionName;
use crate::chain::transaction::Value;
use crate::name::AccountName;

/// Which `code` account a handler responds to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CodeMatch {
    /// Any code account (`*`): the shape behind fake-token exploits.
    Any,
    Exact(AccountName),
}

impl fmt::Display for CodeMatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeMatch::Any => f.write_str("*"),
            CodeMatch::Exact(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccountRef {
    SelfAccount,
    Field(String),
    Literal(AccountName),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Operand {
    Field(String),
    Const(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArithOp {
    Add,
    Mul,
    Sub,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArithMode {
    /// Modulo 2^64.
    Wrapping,
    /// Traps on overflow or underflow.
    Checked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Payer {
    SelfAccount,
    /// First authorizer of the action being handled.
    Actor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValueExpr {
    Field(String),
    SelfAccount,
    Literal(Value),
}

/// Action emitted by a handler. Values are resolved against the handler's
/// fields when the step runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionTemplate {
    pub contract: AccountRef,
    pub action: String,
    pub auth: Vec<(AccountRef, PermissionName)>,
    pub data: Vec<(String, ValueExpr)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Step {
    /// `require_auth` on the named account.
    CheckAuth { actor: AccountRef },
    CheckCodeIs { account: AccountName },
    /// Payload field `to` must name the receiving contract.
    CheckRecipientIsSelf,
    Arith {
        op: ArithOp,
        lhs: Operand,
        rhs: Operand,
        into: String,
        mode: ArithMode,
        /// Exact result must not exceed this value.
        bound: Option<u64>,
    },
    /// Pays EOS from the contract's own balance.
    TransferOut { to: String, amount: String },
    StoreRow {
        table: String,
        key: String,
        bytes: u64,
        payer: Payer,
        /// Maximum rows one actor may own in the table.
        quota: Option<u32>,
    },
    Notify { account: String },
    SendInline(ActionTemplate),
    SendDeferred {
        template: ActionTemplate,
        delay_ms: u64,
        sponsor: Payer,
    },
    /// Stores a draw in `[0, 100)` derived from the head block number, head
    /// timestamp and the enclosing transaction's `ref_block_num`.
    ReadBlockInfo { into: String },
    /// Runs `then` when the field is `>= threshold`, otherwise `otherwise`.
    BranchOn {
        field: String,
        threshold: u64,
        then: Vec<Step>,
        otherwise: Vec<Step>,
    },
}

pub mod cost {
    pub const CHECK_MS: u64 = 1;
    pub const ARITH_MS: u64 = 1;
    pub const TRANSFER_OUT_MS: u64 = 5;
    pub const TRANSFER_OUT_WORDS: u64 = 16;
    pub const SEND_DEFERRED_MS: u64 = 2;
    pub const NOTIFY_MS: u64 = 1;
    pub const SEND_INLINE_MS: u64 = 1;
    pub const READ_BLOCK_INFO_MS: u64 = 1;
    pub const STORE_ROW_MS: u64 = 1;
    /// Native `eosio.token::transfer` and system actions.
    pub const NATIVE_ACTION_MS: u64 = 2;
    /// Producer time spent on a deferred transaction that fails.
    pub const FAILED_DEFERRED_MS: u64 = 1;
}

impl Step {
    /// CPU charged to the transaction payer when the step runs. The deferred
    /// send fee is charged to the sponsor separately.
    pub fn cpu_ms(&self) -> u64 {
        match self {
            Step::CheckAuth { .. } | Step::CheckCodeIs { .. } | Step::CheckRecipientIsSelf => cost::CHECK_MS,
            Step::Arith { .. } => cost::ARITH_MS,
            Step::TransferOut { .. } => cost::TRANSFER_OUT_MS,
            Step::StoreRow { .. } => cost::STORE_ROW_MS,
            Step::Notify { .. } => cost::NOTIFY_MS,
            Step::SendInline(_) => cost::SEND_INLINE_MS,
            Step::SendDeferred { .. } => 0,
            Step::ReadBlockInfo { .. } => cost::READ_BLOCK_INFO_MS,
            Step::BranchOn { .. } => 0,
        }
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            Step::CheckAuth { .. } => "check_auth",
            Step::CheckCodeIs { .. } => "check_code_is",
            Step::CheckRecipientIsSelf => "check_recipient_is_self",
            Step::Arith { .. } => "arith",
            Step::TransferOut { .. } => "transfer_out",
            Step::StoreRow { .. } => "store_row",
            Step::Notify { .. } => "notify",
            Step::SendInline(_) => "send_inline",
            Step::SendDeferred { .. } => "send_deferred",
            Step::ReadBlockInfo { .. } => "read_block_info",
            Step::BranchOn { .. } => "branch_on",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HandlerSpec {
    pub code: CodeMatch,
    pub action: String,
    pub steps: Vec<Step>,
}

impl HandlerSpec {
    pub fn new(code: CodeMatch, action: impl Into<String>, steps: Vec<Step>) -> Self {
        Self {
            code,
            action: action.into(),
            steps,
        }
    }
}

/// Visits steps in pre-order, yielding the flat index used as finding
/// evidence and the nesting path of branch bodies.
pub fn walk_steps<'a>(steps: &'a [Step], f: &mut impl FnMut(usize, &'a Step)) {
    fn go<'a>(steps: &'a [Step], next: &mut usize, f: &mut impl FnMut(usize, &'a Step)) {
        for s in steps {
            let idx = *next;
            *next += 1;
            f(idx, s);
            if let Step::BranchOn { then, otherwise, .. } = s {
                go(then, next, f);
                go(otherwise, next, f);
            }
        }
    }
    let mut next = 0;
    go(steps, &mut next, f);
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Row {
    pub bytes: u64,
    pub payer: AccountName,
    pub owner: AccountName,
}

pub type Table = BTreeMap<String, Row>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractError {
    #[error("contract {owner} has two handlers for ({code}, {action})")]
    DuplicateHandler {
        owner: AccountName,
        code: CodeMatch,
        action: String,
    },
}

/// A deployed toy contract: handlers plus the tables it stores.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractDef {
    pub owner: AccountName,
    /// Free-text Ricardian clause; never interpreted.
    pub ricardian: Option<String>,
    handlers: Vec<HandlerSpec>,
    pub tables: BTreeMap<String, Table>,
}

impl ContractDef {
    pub fn new(owner: AccountName, handlers: Vec<HandlerSpec>) -> Result<Self, ContractError> {
        for (i, h) in handlers.iter().enumerate() {
            if handlers[..i].iter().any(|o| o.code == h.code && o.action == h.action) {
                return Err(ContractError::DuplicateHandler {
                    owner,
                    code: h.code.clone(),
                    action: h.action.clone(),
                });
            }
        }
        Ok(Self {
            owner,
            ricardian: None,
            handlers,
            tables: BTreeMap::new(),
        })
    }

    pub fn handlers(&self) -> &[HandlerSpec] {
        &self.handlers
    }

    /// Exact `(code, action)` match first, then a wildcard-code handler.
    pub fn handler_for(&self, code: &AccountName, action: &str) -> Option<&HandlerSpec> {
        self.handlers
            .iter()
            .find(|h| h.action == action && h.code == CodeMatch::Exact(code.clone()))
            .or_else(|| self.handlers.iter().find(|h| h.action == action && h.code == CodeMatch::Any))
    }

    /// Same handlers, renamed owner; used when a descriptor is deployed to an
    /// account other than the one it was written for.
    pub fn deployed_to(&self, owner: &AccountName) -> Self {
        let mut c = self.clone();
        let old = self.owner.clone();
        c.owner = owner.clone();
        for h in &mut c.handlers {
            if h.code == CodeMatch::Exact(old.clone()) {
                h.code = CodeMatch::Exact(owner.clone());
            }
        }
        c
    }

    pub fn rows_owned_by(&self, table: &str, owner: &AccountName) -> usize {
        self.tables
            .get(table)
            .map_or(0, |t| t.values().filter(|r| &r.owner == owner).count())
    }
}
