use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chain::transaction::{Transaction, TxId};
use crate::hash::CanonicalWriter;
use crate::name::AccountName;
use crate::Millis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
pub struct BlockId(pub u64);

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReceiptStatus {
    Executed,
    /// A user-submitted delayed transaction entering the deferred queue.
    Scheduled { due: Millis },
    /// A deferred transaction that failed; it is dropped without effect.
    Failed { class: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxReceipt {
    pub trx: Transaction,
    pub id: TxId,
    pub status: ReceiptStatus,
    pub cpu_ms: u64,
    pub net_words: u64,
    /// Whether the transaction was popped from the deferred queue.
    pub from_deferred: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub number: u64,
    pub slot: u64,
    /// Slot-aligned: `(slot + 1) * block_interval_ms`.
    pub timestamp: Millis,
    pub producer: AccountName,
    pub previous_id: BlockId,
    pub receipts: Vec<TxReceipt>,
    pub cpu_used: u64,
    /// NET in 8-byte words.
    pub net_used: u64,
}

impl Block {
    pub fn genesis(producer: AccountName, chain_id: u64) -> Self {
        Self {
            number: 0,
            slot: 0,
            timestamp: 0,
            producer,
            previous_id: BlockId(chain_id),
            receipts: Vec::new(),
            cpu_used: 0,
            net_used: 0,
        }
    }

    pub fn id(&self) -> BlockId {
        let mut w = CanonicalWriter::new();
        w.u64(self.number)
            .u64(self.slot)
            .u64(self.timestamp)
            .str(self.producer.as_str())
            .u64(self.previous_id.0)
            .u64(self.cpu_used)
            .u64(self.net_used)
            .u32(self.receipts.len() as u32);
        for r in &self.receipts {
            w.u64(r.id.0).u64(r.cpu_ms).u64(r.net_words).u8(u8::from(r.from_deferred));
            match &r.status {
                ReceiptStatus::Executed => {
                    w.u8(0);
                }
                ReceiptStatus::Scheduled { due } => {
                    w.u8(1).u64(*due);
                }
                ReceiptStatus::Failed { class } => {
                    w.u8(2).str(class);
                }
            }
        }
        BlockId(w.digest())
    }

    pub fn transaction_count(&self) -> usize {
        self.receipts.len()
    }

    pub fn action_count(&self) -> usize {
        self.receipts.iter().map(|r| r.trx.action_count()).sum()
    }
}
