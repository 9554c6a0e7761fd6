//! A node's replica of the chain: blocks, head and irreversible state, the
//! pending pool, and read-mode queries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chain::block::{Block, BlockId, ReceiptStatus, TxReceipt};
use crate::chain::ledger::{DeferredEntry, Ledger, SYSTEM_ACCOUNT};
use crate::chain::transaction::{Transaction, TxId, TxKind};
use crate::chain::ChainError;
use crate::consensus::{ConsensusError, ConsensusLedger, DposMode, MissedSlot, ProducerMode, ProducerSchedule};
use crate::contracts::exec::{authorize, execute_transaction, Effect, ExecEnv};
use crate::contracts::ir::cost;
use crate::name::{name, AccountName};
use crate::Millis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReadMode {
    /// Head state plus the effects of the local pending pool.
    #[default]
    Speculative,
    Head,
    /// Head state; transaction submission is refused.
    ReadOnly,
    /// State as of the last irreversible block.
    Irreversible,
}

impl ReadMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ReadMode::Speculative => "speculative",
            ReadMode::Head => "head",
            ReadMode::ReadOnly => "read-only",
            ReadMode::Irreversible => "irreversible",
        }
    }
}

impl fmt::Display for ReadMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReadMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "speculative" => Ok(ReadMode::Speculative),
            "head" => Ok(ReadMode::Head),
            "read-only" | "readonly" => Ok(ReadMode::ReadOnly),
            "irreversible" => Ok(ReadMode::Irreversible),
            _ => Err(format!("unknown read mode {s:?} (speculative, head, read-only, irreversible)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryKey {
    Balance { account: AccountName, symbol: String },
    RamUsed(AccountName),
    RamOwned(AccountName),
    CpuLimit(AccountName),
    /// 1 if the account exists, else 0.
    AccountExists(AccountName),
    DeferredCount,
    HeadBlock,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingAck {
    pub id: TxId,
    /// For a delayed transaction, when it will fall due once scheduled.
    pub scheduled_due: Option<Millis>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct PendingTx {
    tx: Transaction,
    id: TxId,
    due: Option<Millis>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub id: TxId,
    pub class: String,
    pub message: String,
    /// Payer of the rejected transaction, when it names one.
    pub payer: Option<AccountName>,
}

/// Bookkeeping performed when a block is applied.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AppliedBlock {
    pub missed: Vec<MissedSlot>,
    pub new_schedule: Option<ProducerSchedule>,
    pub refunds: Vec<(AccountName, u64)>,
    pub new_lib: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProducedBlock {
    pub block: Block,
    pub mode: ProducerMode,
    pub rejected: Vec<Rejection>,
    pub effects: Vec<(TxId, Vec<Effect>)>,
    pub applied: AppliedBlock,
}

/// Rolls the election state forward to `slot`, recording every slot skipped
/// since `prev_slot` as missed.
fn roll_consensus(c: &mut ConsensusLedger, prev_slot: Option<u64>, slot: u64) -> (Vec<MissedSlot>, Option<ProducerSchedule>) {
    let mut missed = Vec::new();
    let mut new_schedule = None;
    let start = prev_slot.map_or(0, |p| p + 1);
    for s in start..slot {
        if let Some(sched) = c.roll_to(s) {
            new_schedule = Some(sched);
        }
        let t = c.params.slot_time(s);
        missed.push(c.handle_missed_slot(s, t));
    }
    if let Some(sched) = c.roll_to(slot) {
        new_schedule = Some(sched);
    }
    (missed, new_schedule)
}

fn env_after(prev: &Block, timestamp: Millis) -> ExecEnv {
    ExecEnv {
        now: timestamp,
        head_num: prev.number,
        head_time: prev.timestamp,
    }
}

fn prev_slot(prev: &Block) -> Option<u64> {
    (prev.number > 0).then_some(prev.slot)
}

/// Validates and schedules a user-submitted delayed transaction.
fn schedule_user_deferred(ledger: &mut Ledger, tx: &Transaction, env: &ExecEnv, due: Millis) -> Result<(), ChainError> {
    if tx.actions.is_empty() {
        return Err(ChainError::EmptyTransaction);
    }
    if tx.expiration <= env.now {
        return Err(ChainError::Expired {
            expiration: tx.expiration,
            now: env.now,
        });
    }
    authorize(&ledger.overlay(), tx)?;
    ledger.deferred.push(DeferredEntry {
        due,
        id: tx.id(),
        tx: tx.clone(),
        preauthorized: true,
    });
    Ok(())
}

/// Re-executes the receipts of `block` on top of `ledger`, whose head is
/// `prev`. Any disagreement with the recorded outcome is a divergence.
fn apply_body(ledger: &mut Ledger, prev: &Block, block: &Block) -> Result<AppliedBlock, ChainError> {
    if block.number != prev.number + 1 || block.previous_id != prev.id() {
        return Err(ChainError::BadBlock(format!(
            "block {} does not extend head {} ({})",
            block.number,
            prev.number,
            prev.id()
        )));
    }
    if prev_slot(prev).is_some_and(|s| block.slot <= s) {
        return Err(ChainError::BadBlock(format!("slot {} is not after {}", block.slot, prev.slot)));
    }
    let mut consensus = ledger.consensus.clone();
    let (missed, new_schedule) = roll_consensus(&mut consensus, prev_slot(prev), block.slot);
    if block.timestamp != consensus.params.slot_time(block.slot) {
        return Err(ChainError::BadBlock(format!("timestamp {} is not aligned to slot {}", block.timestamp, block.slot)));
    }
    let owner = consensus.owner_of(block.slot);
    if owner != block.producer {
        return Err(ChainError::BadBlock(format!("slot {} belongs to {owner}, not {}", block.slot, block.producer)));
    }
    consensus.record_block(&block.producer, block.timestamp);
    ledger.consensus = consensus;
    let refunds = ledger.release_refunds(block.timestamp);
    let env = env_after(prev, block.timestamp);
    let diverged = |r: &TxReceipt, why: String| ChainError::Divergence(format!("block {} tx {}: {why}", block.number, r.id));
    for r in &block.receipts {
        match (&r.status, r.from_deferred) {
            (ReceiptStatus::Scheduled { due }, false) => {
                schedule_user_deferred(ledger, &r.trx, &env, *due).map_err(|e| diverged(r, e.to_string()))?;
            }
            (ReceiptStatus::Executed, false) => {
                let out = execute_transaction(ledger, &r.trx, &env, false).map_err(|e| diverged(r, e.to_string()))?;
                if out.cpu_ms != r.cpu_ms || out.net_words != r.net_words {
                    return Err(diverged(r, format!("billed {}ms/{}w, receipt says {}ms/{}w", out.cpu_ms, out.net_words, r.cpu_ms, r.net_words)));
                }
                ledger.commit(out.changes);
            }
            (status, true) => {
                let entry = ledger
                    .deferred
                    .find(r.id)
                    .cloned()
                    .ok_or_else(|| diverged(r, "not in the deferred queue".into()))?;
                if entry.due > block.timestamp {
                    return Err(diverged(r, format!("due at {}, block at {}", entry.due, block.timestamp)));
                }
                ledger.deferred.remove(entry.due, entry.id);
                let result = run_deferred(ledger, &entry, &env);
                match (status, result) {
                    (ReceiptStatus::Executed, Ok(out)) if out.cpu_ms == r.cpu_ms => ledger.commit(out.changes),
                    (ReceiptStatus::Failed { class }, Err(e)) if e.class() == class => {}
                    (_, other) => {
                        let got = match other {
                            Ok(o) => format!("executed ({}ms)", o.cpu_ms),
                            Err(e) => format!("failed: {e}"),
                        };
                        return Err(diverged(r, format!("receipt {status:?}, replay {got}")));
                    }
                }
            }
            (status, false) => return Err(diverged(r, format!("unexpected receipt status {status:?}"))),
        }
    }
    Ok(AppliedBlock {
        missed,
        new_schedule,
        refunds,
        new_lib: None,
    })
}

fn run_deferred(
    ledger: &Ledger,
    entry: &DeferredEntry,
    env: &ExecEnv,
) -> Result<crate::contracts::exec::ExecOutcome, ChainError> {
    if entry.tx.expiration <= env.now {
        return Err(ChainError::Expired {
            expiration: entry.tx.expiration,
            now: env.now,
        });
    }
    execute_transaction(ledger, &entry.tx, env, entry.preauthorized)
}

/// One node's view of the chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub chain_id: u64,
    blocks: Vec<Block>,
    ledger: Ledger,
    lib: u64,
    /// Ledger as of `lib`; kept only when irreversible reads are enabled.
    irreversible: Option<Box<Ledger>>,
    confirmations: BTreeMap<u64, BTreeSet<AccountName>>,
    pending: Vec<PendingTx>,
    pending_ids: BTreeSet<TxId>,
    included: BTreeSet<TxId>,
    pub read_mode: ReadMode,
}

impl ChainState {
    /// Starts a chain from `genesis`. The chain id is the genesis state hash.
    pub fn new(genesis: Ledger) -> Self {
        let chain_id = genesis.state_hash();
        Self {
            chain_id,
            blocks: vec![Block::genesis(name(SYSTEM_ACCOUNT), chain_id)],
            irreversible: Some(Box::new(genesis.clone())),
            ledger: genesis,
            lib: 0,
            confirmations: BTreeMap::new(),
            pending: Vec::new(),
            pending_ids: BTreeSet::new(),
            included: BTreeSet::new(),
            read_mode: ReadMode::default(),
        }
    }

    /// Stops maintaining the irreversible-state replica. Saves one
    /// re-execution of every block; irreversible reads then fail while the
    /// irreversible block lags the head.
    pub fn without_irreversible_state(mut self) -> Self {
        self.irreversible = None;
        self
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn head(&self) -> &Block {
        self.blocks.last().expect("genesis block")
    }

    pub fn head_num(&self) -> u64 {
        self.head().number
    }

    /// Slot of the head block, or `None` while only genesis exists.
    pub fn head_slot(&self) -> Option<u64> {
        prev_slot(self.head())
    }

    pub fn last_irreversible(&self) -> u64 {
        self.lib
    }

    pub fn block(&self, number: u64) -> Option<&Block> {
        self.blocks.get(number as usize)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn confirmations(&self, number: u64) -> usize {
        self.confirmations.get(&number).map_or(0, BTreeSet::len)
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_pending(&self, id: TxId) -> bool {
        self.pending_ids.contains(&id)
    }

    /// Producer that owns `slot` if the next block is produced there,
    /// accounting for schedule rolls and evictions in the skipped slots.
    pub fn slot_owner(&self, slot: u64) -> AccountName {
        let mut c = self.ledger.consensus.clone();
        if self.head_slot().is_none_or(|h| slot > h) {
            roll_consensus(&mut c, self.head_slot(), slot);
        }
        c.owner_of(slot)
    }

    /// Whether a block produced at `timestamp` would have anything to do.
    pub fn has_work(&self, timestamp: Millis) -> bool {
        !self.pending.is_empty() || self.ledger.deferred.first_due(timestamp).is_some()
    }

    /// Validates `tx` and adds it to the pending pool.
    pub fn push_transaction(&mut self, tx: Transaction, now: Millis) -> Result<PendingAck, ChainError> {
        if self.read_mode == ReadMode::ReadOnly {
            return Err(ChainError::MutationInReadOnly);
        }
        if tx.actions.is_empty() {
            return Err(ChainError::EmptyTransaction);
        }
        if tx.expiration <= now {
            return Err(ChainError::Expired {
                expiration: tx.expiration,
                now,
            });
        }
        let head = self.head_num();
        if tx.ref_block_num > head {
            return Err(ChainError::BadRefBlock {
                ref_block_num: tx.ref_block_num,
                head,
            });
        }
        let id = tx.id();
        if self.pending_ids.contains(&id) || self.included.contains(&id) {
            return Err(ChainError::DuplicateTransaction(id));
        }
        authorize(&self.ledger.overlay(), &tx)?;
        let due = match &tx.kind {
            TxKind::Deferred { delay_ms, .. } => Some(now + delay_ms),
            TxKind::Immediate => None,
        };
        self.pending_ids.insert(id);
        self.pending.push(PendingTx { tx, id, due });
        Ok(PendingAck { id, scheduled_due: due })
    }

    /// Produces the block for `slot` as `producer`; see
    /// [`crate::consensus::produce_block`].
    pub fn produce_block(&mut self, producer: &AccountName, slot: u64, _now: Millis) -> Result<ProducedBlock, ConsensusError> {
        if let Some(h) = self.head_slot() {
            if slot <= h {
                return Err(ConsensusError::SlotTaken {
                    slot,
                    head_time: self.head().timestamp,
                });
            }
        }
        let mut consensus = self.ledger.consensus.clone();
        let (missed, new_schedule) = roll_consensus(&mut consensus, self.head_slot(), slot);
        let expected = consensus.owner_of(slot);
        if &expected != producer {
            return Err(ConsensusError::NotYourSlot {
                slot,
                expected,
                producer: producer.clone(),
            });
        }
        let timestamp = consensus.params.slot_time(slot);
        let cpu_budget = consensus.params.block_cpu_budget_ms;
        let net_budget = consensus.params.block_net_budget_words;
        consensus.record_block(producer, timestamp);

        let prev = self.head().clone();
        let mut ledger = self.ledger.clone();
        ledger.consensus = consensus;
        let refunds = ledger.release_refunds(timestamp);
        let env = env_after(&prev, timestamp);

        let mut receipts = Vec::new();
        let mut rejected = Vec::new();
        let mut effects = Vec::new();
        let (mut cpu_used, mut net_used) = (0u64, 0u64);
        let mut exhausted = false;
        let mut kept = Vec::new();

        let pool = std::mem::take(&mut self.pending);
        for p in pool {
            if exhausted {
                kept.push(p);
                continue;
            }
            let payer = p.tx.payer().cloned();
            let reject = |e: ChainError| Rejection {
                id: p.id,
                class: e.class().to_string(),
                message: e.to_string(),
                payer: payer.clone(),
            };
            if let Some(due) = p.due {
                let words = p.tx.net_words();
                if net_used + words > net_budget {
                    exhausted = true;
                    kept.push(p);
                    continue;
                }
                match schedule_user_deferred(&mut ledger, &p.tx, &env, due) {
                    Ok(()) => {
                        net_used += words;
                        receipts.push(TxReceipt {
                            id: p.id,
                            trx: p.tx,
                            status: ReceiptStatus::Scheduled { due },
                            cpu_ms: 0,
                            net_words: words,
                            from_deferred: false,
                        });
                    }
                    Err(e) => rejected.push(reject(e)),
                }
                continue;
            }
            match execute_transaction(&ledger, &p.tx, &env, false) {
                Err(e) => rejected.push(reject(e)),
                Ok(out) if out.cpu_ms > cpu_budget || out.net_words > net_budget => {
                    rejected.push(reject(ChainError::ExceedsBlockBudget { cpu_ms: out.cpu_ms }));
                }
                Ok(out) if cpu_used + out.cpu_ms > cpu_budget || net_used + out.net_words > net_budget => {
                    exhausted = true;
                    kept.push(p);
                }
                Ok(out) => {
                    cpu_used += out.cpu_ms;
                    net_used += out.net_words;
                    ledger.commit(out.changes);
                    effects.push((p.id, out.effects));
                    receipts.push(TxReceipt {
                        id: p.id,
                        trx: p.tx,
                        status: ReceiptStatus::Executed,
                        cpu_ms: out.cpu_ms,
                        net_words: out.net_words,
                        from_deferred: false,
                    });
                }
            }
        }

        while !exhausted {
            let Some(entry) = ledger.deferred.first_due(timestamp).cloned() else {
                break;
            };
            match run_deferred(&ledger, &entry, &env) {
                Ok(out) if out.cpu_ms <= cpu_budget && out.net_words <= net_budget => {
                    if cpu_used + out.cpu_ms > cpu_budget || net_used + out.net_words > net_budget {
                        exhausted = true;
                        break;
                    }
                    ledger.deferred.remove(entry.due, entry.id);
                    cpu_used += out.cpu_ms;
                    net_used += out.net_words;
                    ledger.commit(out.changes);
                    effects.push((entry.id, out.effects));
                    receipts.push(TxReceipt {
                        id: entry.id,
                        trx: entry.tx,
                        status: ReceiptStatus::Executed,
                        cpu_ms: out.cpu_ms,
                        net_words: out.net_words,
                        from_deferred: true,
                    });
                }
                other => {
                    let class = match other {
                        Ok(out) => ChainError::ExceedsBlockBudget { cpu_ms: out.cpu_ms }.class(),
                        Err(e) => e.class(),
                    };
                    if cpu_used + cost::FAILED_DEFERRED_MS > cpu_budget {
                        exhausted = true;
                        break;
                    }
                    ledger.deferred.remove(entry.due, entry.id);
                    cpu_used += cost::FAILED_DEFERRED_MS;
                    receipts.push(TxReceipt {
                        id: entry.id,
                        trx: entry.tx,
                        status: ReceiptStatus::Failed { class: class.to_string() },
                        cpu_ms: cost::FAILED_DEFERRED_MS,
                        net_words: 0,
                        from_deferred: true,
                    });
                }
            }
        }

        for r in &rejected {
            self.pending_ids.remove(&r.id);
        }
        for r in &receipts {
            if !r.from_deferred {
                self.pending_ids.remove(&r.id);
                self.included.insert(r.id);
            }
        }
        self.pending = kept;

        let block = Block {
            number: prev.number + 1,
            slot,
            timestamp,
            producer: producer.clone(),
            previous_id: prev.id(),
            receipts,
            cpu_used,
            net_used,
        };
        self.ledger = ledger;
        self.blocks.push(block.clone());
        let mut applied = AppliedBlock {
            missed,
            new_schedule,
            refunds,
            new_lib: None,
        };
        applied.new_lib = self.self_confirm(&block);
        Ok(ProducedBlock {
            block,
            mode: if exhausted { ProducerMode::Exhausted } else { ProducerMode::Success },
            rejected,
            effects,
            applied,
        })
    }

    /// Applies a block produced elsewhere on top of the local head.
    pub fn apply_block(&mut self, block: &Block) -> Result<AppliedBlock, ChainError> {
        let mut ledger = self.ledger.clone();
        let mut applied = apply_body(&mut ledger, self.head(), block)?;
        self.ledger = ledger;
        self.blocks.push(block.clone());
        for r in &block.receipts {
            if !r.from_deferred {
                self.included.insert(r.id);
                if self.pending_ids.remove(&r.id) {
                    self.pending.retain(|p| p.id != r.id);
                }
            }
        }
        applied.new_lib = self.self_confirm(block);
        Ok(applied)
    }

    /// The producer's own confirmation, plus in plain DPoS its implicit
    /// confirmation of every unconfirmed ancestor it builds on.
    fn self_confirm(&mut self, block: &Block) -> Option<u64> {
        let producer = &block.producer;
        if self.ledger.consensus.params.mode == DposMode::Plain {
            for n in self.lib + 1..block.number {
                self.confirmations.entry(n).or_default().insert(producer.clone());
            }
        }
        self.confirmations.entry(block.number).or_default().insert(producer.clone());
        self.advance_lib()
    }

    /// Records `producer`'s confirmation of block `number`. Returns the new
    /// last irreversible block if it advanced.
    pub fn confirm_block(&mut self, number: u64, block_id: Option<u64>, producer: &AccountName) -> Result<Option<u64>, ConsensusError> {
        if !self.ledger.consensus.schedule.contains(producer) {
            return Err(ConsensusError::NotAProducer(producer.clone()));
        }
        let block = self.block(number).ok_or(ConsensusError::UnknownBlock(number))?;
        if block_id.is_some_and(|id| BlockId(id) != block.id()) {
            return Err(ConsensusError::UnknownBlock(number));
        }
        if number <= self.lib {
            return Ok(None);
        }
        self.confirmations.entry(number).or_default().insert(producer.clone());
        Ok(self.advance_lib())
    }

    fn advance_lib(&mut self) -> Option<u64> {
        let threshold = self.ledger.consensus.threshold();
        let best = self
            .confirmations
            .iter()
            .rev()
            .find(|(_, c)| c.len() >= threshold)
            .map(|(n, _)| *n)?;
        if best <= self.lib {
            return None;
        }
        let old = self.lib;
        self.lib = best;
        self.confirmations = self.confirmations.split_off(&(best + 1));
        if let Some(irr) = self.irreversible.as_mut() {
            for n in old + 1..=best {
                let prev = &self.blocks[n as usize - 1];
                let block = &self.blocks[n as usize];
                apply_body(irr, prev, block).expect("irreversible replay of an applied block");
            }
        }
        Some(best)
    }

    fn read_ledger(&self, mode: ReadMode) -> Result<std::borrow::Cow<'_, Ledger>, ChainError> {
        use std::borrow::Cow;
        match mode {
            ReadMode::Head | ReadMode::ReadOnly => Ok(Cow::Borrowed(&self.ledger)),
            ReadMode::Irreversible => {
                if self.lib == self.head_num() {
                    return Ok(Cow::Borrowed(&self.ledger));
                }
                self.irreversible
                    .as_deref()
                    .map(Cow::Borrowed)
                    .ok_or_else(|| ChainError::StateUnavailable("irreversible state is not tracked".into()))
            }
            ReadMode::Speculative => {
                if self.pending.is_empty() {
                    return Ok(Cow::Borrowed(&self.ledger));
                }
                let head = self.head();
                let env = env_after(head, head.timestamp + self.ledger.consensus.params.block_interval_ms);
                let mut l = self.ledger.clone();
                for p in &self.pending {
                    if let Some(due) = p.due {
                        let _ = schedule_user_deferred(&mut l, &p.tx, &env, due);
                    } else if let Ok(out) = execute_transaction(&l, &p.tx, &env, false) {
                        l.commit(out.changes);
                    }
                }
                Ok(Cow::Owned(l))
            }
        }
    }

    pub fn query(&self, mode: ReadMode, key: &QueryKey) -> Result<u64, ChainError> {
        if let QueryKey::HeadBlock = key {
            return Ok(match mode {
                ReadMode::Irreversible => self.lib,
                _ => self.head_num(),
            });
        }
        let l = self.read_ledger(mode)?;
        Ok(match key {
            QueryKey::Balance { account, symbol } => l.balance(account, symbol),
            QueryKey::RamUsed(a) => l.resources.ram_used(a),
            QueryKey::RamOwned(a) => l.resources.ram_owned(a),
            QueryKey::CpuLimit(a) => l.resources.cpu_limit(a),
            QueryKey::AccountExists(a) => u64::from(l.account(a).is_some()),
            QueryKey::DeferredCount => l.deferred.len() as u64,
            QueryKey::HeadBlock => unreachable!("handled above"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::account::EOS;
    use crate::chain::ledger::TOKEN_ACCOUNT;
    use crate::chain::{Action, PermissionLevel};
    use crate::scenarios::genesis::account_key;
    use crate::scenarios::{build_genesis, ScenarioSpec};

    fn genesis(mode: &str) -> Ledger {
        let spec = ScenarioSpec::parse(&format!(
            "name = \"s\"\nduration_ms = 1000\nseed = 1\nmode = \"{mode}\"\n\
             [resources]\nwindow_cpu_capacity_ms = 34560000\nwindow_net_capacity_words = 1000000000\n\
             [[accounts]]\nname = \"alice\"\nbalance = 1000\ncpu_stake = 1000000\nnet_stake = 1000000\n\
             [[accounts]]\nname = \"bob\"\nbalance = 10\n"
        ))
        .unwrap();
        build_genesis(&spec).unwrap()
    }

    fn pay(amount: u64, nonce: u64) -> Transaction {
        let alice = name("alice");
        let act = Action::new(name(TOKEN_ACCOUNT), "transfer")
            .with("from", alice.clone())
            .with("to", name("bob"))
            .with("quantity", amount)
            .with("memo", "")
            .auth(PermissionLevel::active(alice.clone()));
        Transaction::immediate(vec![act], 0, 60_000, nonce).signed(account_key(&alice))
    }

    fn bob(chain: &ChainState, mode: ReadMode) -> u64 {
        let key = QueryKey::Balance {
            account: name("bob"),
            symbol: EOS.into(),
        };
        chain.query(mode, &key).unwrap()
    }

    fn produce_next(chain: &mut ChainState) -> ProducedBlock {
        let slot = chain.head_slot().map_or(0, |s| s + 1);
        let owner = chain.slot_owner(slot);
        chain.produce_block(&owner, slot, 0).unwrap()
    }

    #[test]
    fn replica_applying_a_produced_block_reaches_the_same_state() {
        let mut a = ChainState::new(genesis("bft"));
        let mut b = ChainState::new(genesis("bft"));
        a.push_transaction(pay(5, 1), 0).unwrap();
        let produced = produce_next(&mut a);
        assert_eq!(produced.rejected, vec![]);
        assert_eq!(produced.block.transaction_count(), 1);
        assert_eq!(produced.mode, ProducerMode::Success);
        b.apply_block(&produced.block).unwrap();
        assert_eq!(a.ledger().state_hash(), b.ledger().state_hash());
        assert_eq!(a.head().id(), b.head().id());
    }

    #[test]
    fn speculative_reads_see_pending_transfers() {
        let mut chain = ChainState::new(genesis("bft"));
        chain.push_transaction(pay(7, 1), 0).unwrap();
        assert_eq!(bob(&chain, ReadMode::Head), 10);
        assert_eq!(bob(&chain, ReadMode::Speculative), 17);
        produce_next(&mut chain);
        assert_eq!(bob(&chain, ReadMode::Head), 17);
        // One self-confirmation is far from the 15 needed.
        assert_eq!(chain.last_irreversible(), 0);
        assert_eq!(bob(&chain, ReadMode::Irreversible), 10);
        assert_eq!(chain.query(ReadMode::Irreversible, &QueryKey::HeadBlock).unwrap(), 0);
    }

    #[test]
    fn pool_admission_checks() {
        let mut chain = ChainState::new(genesis("bft"));
        chain.push_transaction(pay(1, 1), 0).unwrap();
        assert!(matches!(chain.push_transaction(pay(1, 1), 0), Err(ChainError::DuplicateTransaction(_))));
        assert!(matches!(chain.push_transaction(pay(1, 2), 60_000), Err(ChainError::Expired { .. })));
        let empty = Transaction::immediate(Vec::new(), 0, 60_000, 3);
        assert!(matches!(chain.push_transaction(empty, 0), Err(ChainError::EmptyTransaction)));
        let mut ahead = pay(1, 4);
        ahead.ref_block_num = 9;
        assert!(matches!(chain.push_transaction(ahead, 0), Err(ChainError::BadRefBlock { .. })));
        chain.read_mode = ReadMode::ReadOnly;
        assert!(matches!(chain.push_transaction(pay(1, 5), 0), Err(ChainError::MutationInReadOnly)));
        assert_eq!(chain.pending_len(), 1);
    }

    #[test]
    fn slots_are_owned_and_used_once() {
        let mut chain = ChainState::new(genesis("bft"));
        let owner = chain.slot_owner(0);
        let other = chain.slot_owner(12);
        assert_ne!(owner, other);
        assert!(matches!(chain.produce_block(&other, 0, 0), Err(ConsensusError::NotYourSlot { .. })));
        chain.produce_block(&owner, 0, 0).unwrap();
        assert!(matches!(chain.produce_block(&owner, 0, 0), Err(ConsensusError::SlotTaken { .. })));
    }

    #[test]
    fn fifteenth_confirmation_makes_a_block_irreversible() {
        let mut chain = ChainState::new(genesis("bft"));
        produce_next(&mut chain);
        let producers = chain.ledger().consensus.schedule.producers.clone();
        let producer = chain.head().producer.clone();
        let others: Vec<_> = producers.iter().filter(|p| **p != producer).collect();
        for p in &others[..13] {
            assert_eq!(chain.confirm_block(1, None, p).unwrap(), None);
        }
        assert_eq!(chain.confirmations(1), 14);
        assert_eq!(chain.confirm_block(1, None, others[13]).unwrap(), Some(1));
        assert_eq!(chain.last_irreversible(), 1);
        assert!(matches!(chain.confirm_block(1, None, &name("alice")), Err(ConsensusError::NotAProducer(_))));
        assert!(matches!(chain.confirm_block(1, Some(42), others[14]), Err(ConsensusError::UnknownBlock(1))));
    }

    #[test]
    fn plain_mode_producers_confirm_their_ancestors() {
        let mut chain = ChainState::new(genesis("plain"));
        // 14 producers' worth of rounds: block 1 has 14 distinct confirmers.
        for _ in 0..14 * 12 {
            produce_next(&mut chain);
        }
        assert_eq!(chain.last_irreversible(), 0);
        produce_next(&mut chain);
        // The fifteenth producer's first block gives the first producer's
        // twelve blocks their fifteenth confirmer; block 13 still has 14.
        assert_eq!(chain.last_irreversible(), 12);
    }
}
