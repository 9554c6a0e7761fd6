//! Ledger state, transactions, blocks and chain bookkeeping.

pub mod account;
pub mod block;
pub mod ledger;
pub mod permission;
pub mod state;
pub mod transaction;

use thiserror::Error;

use crate::name::{AccountName, NameError};
use crate::resources::ResourceError;
use crate::Millis;

pub use account::{Account, EOS};
pub use block::{Block, BlockId, ReceiptStatus, TxReceipt};
pub use ledger::{DeferredEntry, DeferredQueue, Ledger, ACCOUNT_RAM_BYTES, SYSTEM_ACCOUNT, TOKEN_ACCOUNT};
pub use permission::{Authority, KeyId, Permission, PermissionLevel, PermissionName, Signers, WeightedAuthority};
pub use state::{ChainState, PendingAck, QueryKey, ReadMode};
pub use transaction::{Action, Payload, Transaction, TxId, TxKind, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error(transparent)]
    InvalidName(#[from] NameError),
    #[error("account {0} already exists")]
    NameTaken(AccountName),
    #[error("account {0} does not exist")]
    UnknownAccount(AccountName),
    #[error("{account} holds {balance} {symbol}, needs {needed}")]
    InsufficientBalance {
        account: AccountName,
        symbol: String,
        balance: u64,
        needed: u64,
    },
    #[error("RAM purchase yields {bytes} bytes, account needs {needed}")]
    InsufficientRam { bytes: u64, needed: u64 },
    #[error(transparent)]
    Permission(#[from] permission::PermissionError),
    #[error(transparent)]
    Auth(#[from] permission::AuthError),
    #[error("authorization failure: {0}")]
    AuthFailure(String),
    #[error("transaction expired at {expiration}, now {now}")]
    Expired { expiration: Millis, now: Millis },
    #[error("ref_block_num {ref_block_num} is beyond head {head}")]
    BadRefBlock { ref_block_num: u64, head: u64 },
    #[error("transaction has no actions")]
    EmptyTransaction,
    #[error("state mutation attempted in read-only mode")]
    MutationInReadOnly,
    #[error(transparent)]
    Resource(#[from] ResourceError),
    #[error("arithmetic overflow trapped: {0}")]
    OverflowTrap(String),
    #[error("action nesting depth {0} exceeds limit")]
    DepthExceeded(usize),
    #[error("cannot transfer to self")]
    SelfTransfer,
    #[error("quantity must be positive")]
    NonPositiveQuantity,
    #[error("no handler for {action} on {contract}")]
    MissingHandler { contract: AccountName, action: String },
    #[error("assertion failed: {0}")]
    ContractAssert(String),
    #[error("missing payload field {0:?}")]
    MissingField(String),
    #[error("bad contract descriptor: {0}")]
    Descriptor(String),
    #[error("transaction needs {cpu_ms} ms, more than a whole block budget")]
    ExceedsBlockBudget { cpu_ms: u64 },
    #[error("duplicate transaction {0}")]
    DuplicateTransaction(TxId),
    #[error("invalid block: {0}")]
    BadBlock(String),
    #[error("replica diverged: {0}")]
    Divergence(String),
    #[error("state unavailable: {0}")]
    StateUnavailable(String),
}

impl ChainError {
    /// Stable snake-case class name used in traces and rejection counts.
    pub fn class(&self) -> &'static str {
        use permission::AuthError;
        match self {
            ChainError::InvalidName(_) => "invalid_name",
            ChainError::NameTaken(_) => "name_taken",
            ChainError::UnknownAccount(_) => "unknown_account",
            ChainError::InsufficientBalance { .. } => "insufficient_balance",
            ChainError::InsufficientRam { .. } => "insufficient_ram",
            ChainError::Permission(_) => "bad_permission",
            ChainError::Auth(AuthError::UnknownPermission(_)) => "unknown_permission",
            ChainError::Auth(AuthError::RecursionDepthExceeded(_)) => "recursion_depth_exceeded",
            ChainError::Auth(AuthError::UnknownAccount(_)) => "unknown_account",
            ChainError::AuthFailure(_) => "auth_failure",
            ChainError::Expired { .. } => "expired",
            ChainError::BadRefBlock { .. } => "bad_ref_block",
            ChainError::EmptyTransaction => "empty_transaction",
            ChainError::MutationInReadOnly => "mutation_in_read_only",
            ChainError::Resource(r) => match r {
                ResourceError::CpuExhausted { .. } => "cpu_exhausted",
                ResourceError::NetExhausted { .. } => "net_exhausted",
                ResourceError::RamExhausted { .. } => "ram_exhausted",
                ResourceError::ZeroAmount => "zero_amount",
                ResourceError::InsufficientStake { .. } => "insufficient_stake",
                ResourceError::RamSupplyExhausted { .. } => "ram_supply_exhausted",
                ResourceError::RamInUse { .. } => "ram_in_use",
                ResourceError::RamUnderflow { .. } => "ram_underflow",
                ResourceError::PaymentTooSmall(_) => "payment_too_small",
            },
            ChainError::OverflowTrap(_) => "overflow_trap",
            ChainError::DepthExceeded(_) => "depth_exceeded",
            ChainError::SelfTransfer => "self_transfer",
            ChainError::NonPositiveQuantity => "non_positive_quantity",
            ChainError::MissingHandler { .. } => "missing_handler",
            ChainError::ContractAssert(_) => "contract_assert",
            ChainError::MissingField(_) => "missing_field",
            ChainError::Descriptor(_) => "bad_descriptor",
            ChainError::ExceedsBlockBudget { .. } => "exceeds_block_budget",
            ChainError::DuplicateTransaction(_) => "duplicate_transaction",
            ChainError::BadBlock(_) => "bad_block",
            ChainError::Divergence(_) => "divergence",
            ChainError::StateUnavailable(_) => "state_unavailable",
        }
    }
}
