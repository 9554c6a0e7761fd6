//! Deterministic discrete-event network of chain replicas.
//!
//! Every node owns a [`ChainState`]. Links are FIFO with a fixed latency, and
//! the event queue is ordered by `(time, insertion sequence)`, so a run is a
//! pure function of its setup and seed.
//!
//! Catch-up follows a pull protocol: on connecting, a node sends a
//! handshake; a peer with a longer chain answers with a notice; the lagging
//! node then requests blocks one at a time, asking for the next only after
//! applying the previous one. Once caught up, new blocks, transactions and
//! confirmations are flooded to peers with duplicate suppression.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::state::ProducedBlock;
use crate::chain::{Block, BlockId, ChainState, ReceiptStatus, Transaction, TxId};
use crate::consensus::{DposMode, ProducerMode};
use crate::name::AccountName;
use crate::trace::{BlockSummary, EventBody, TraceEvent};
use crate::Millis;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("event queue is empty")]
    EmptyQueue,
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("no link between nodes {0} and {1}")]
    NoLink(NodeId, NodeId),
    #[error("node {node}: block {number} does not extend head {head}")]
    BadLinkage { node: NodeId, number: u64, head: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MessageKind {
    Handshake { head: u64, last_irreversible: u64, chain_id: u64 },
    Notice { head: u64 },
    SyncRequest { block_number: u64 },
    SignedBlock { block: Box<Block> },
    TxBroadcast { transaction: Box<Transaction> },
    Confirmation { block_number: u64, block_id: BlockId, producer: AccountName },
}

impl MessageKind {
    pub fn label(&self) -> &'static str {
        match self {
            MessageKind::Handshake { .. } => "handshake",
            MessageKind::Notice { .. } => "notice",
            MessageKind::SyncRequest { .. } => "sync_request",
            MessageKind::SignedBlock { .. } => "signed_block",
            MessageKind::TxBroadcast { .. } => "tx_broadcast",
            MessageKind::Confirmation { .. } => "confirmation",
        }
    }

    fn number(&self) -> Option<u64> {
        match self {
            MessageKind::Handshake { head, .. } | MessageKind::Notice { head } => Some(*head),
            MessageKind::SyncRequest { block_number } | MessageKind::Confirmation { block_number, .. } => Some(*block_number),
            MessageKind::SignedBlock { block } => Some(block.number),
            MessageKind::TxBroadcast { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub kind: MessageKind,
    pub from: NodeId,
    pub to: NodeId,
    pub send_time: Millis,
    pub deliver_time: Millis,
}

#[derive(Debug, Clone)]
enum Event {
    Deliver(Message),
    SlotTimer { node: NodeId, slot: u64 },
    /// An exhausted producer moving straight on to its next slot.
    BackFill { node: NodeId },
    Submit { node: NodeId, tx: Box<Transaction>, tag: String },
    Connect { node: NodeId, peer: NodeId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct SyncState {
    peer: NodeId,
    target: u64,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub id: NodeId,
    pub chain: ChainState,
    producers: BTreeSet<AccountName>,
    peers: BTreeSet<NodeId>,
    sync: Option<SyncState>,
    seen_confirmations: BTreeSet<(u64, AccountName)>,
    early_confirmations: BTreeMap<u64, Vec<(BlockId, AccountName)>>,
}

impl Node {
    pub fn producers(&self) -> &BTreeSet<AccountName> {
        &self.producers
    }

    pub fn peers(&self) -> &BTreeSet<NodeId> {
        &self.peers
    }

    pub fn is_syncing(&self) -> bool {
        self.sync.is_some()
    }
}

/// The simulated network and its event loop.
#[derive(Debug)]
pub struct SimNet {
    nodes: Vec<Node>,
    links: BTreeMap<(NodeId, NodeId), Millis>,
    queue: BTreeMap<(Millis, u64), Event>,
    seq: u64,
    now: Millis,
    rng: ChaCha8Rng,
    drop_probability: f64,
    production_end: Option<Millis>,
    record_deliveries: bool,
    trace: Vec<TraceEvent>,
}

impl SimNet {
    pub fn new(seed: u64) -> Self {
        Self {
            nodes: Vec::new(),
            links: BTreeMap::new(),
            queue: BTreeMap::new(),
            seq: 0,
            now: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            drop_probability: 0.0,
            production_end: None,
            record_deliveries: true,
            trace: Vec::new(),
        }
    }

    /// Probability that a transaction or confirmation message is lost.
    /// Blocks and sync traffic are always delivered.
    pub fn set_drop_probability(&mut self, p: f64) {
        self.drop_probability = p.clamp(0.0, 1.0);
    }

    /// Producers stop scheduling slots after `t`.
    pub fn set_production_end(&mut self, t: Millis) {
        self.production_end = Some(t);
    }

    /// Whether message deliveries are written to the trace.
    pub fn set_record_deliveries(&mut self, on: bool) {
        self.record_deliveries = on;
    }

    /// Adds a node hosting `producers` and starts its slot timer.
    pub fn add_node(&mut self, chain: ChainState, producers: impl IntoIterator<Item = AccountName>) -> NodeId {
        let id = self.nodes.len();
        let producers: BTreeSet<_> = producers.into_iter().collect();
        if !producers.is_empty() {
            let params = &chain.ledger().consensus.params;
            let next = chain.head_slot().map_or(0, |h| h + 1).max(first_slot_at_or_after(params.block_interval_ms, self.now));
            let at = params.slot_time(next);
            self.schedule(at, Event::SlotTimer { node: id, slot: next });
        }
        self.nodes.push(Node {
            id,
            chain,
            producers,
            peers: BTreeSet::new(),
            sync: None,
            seen_confirmations: BTreeSet::new(),
            early_confirmations: BTreeMap::new(),
        });
        id
    }

    pub fn link(&mut self, a: NodeId, b: NodeId, latency: Millis) -> Result<(), NetError> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Err(NetError::UnknownNode(b));
        }
        self.links.insert((a, b), latency);
        self.links.insert((b, a), latency);
        Ok(())
    }

    /// Links `a` and `b` with a latency drawn uniformly from `[min, max]`.
    pub fn link_random(&mut self, a: NodeId, b: NodeId, min: Millis, max: Millis) -> Result<Millis, NetError> {
        let latency = self.rng.gen_range(min..=max.max(min));
        self.link(a, b, latency)?;
        Ok(latency)
    }

    pub fn latency(&self, a: NodeId, b: NodeId) -> Option<Millis> {
        self.links.get(&(a, b)).copied()
    }

    /// `node` opens a connection to `peer` now by sending a handshake.
    pub fn connect(&mut self, node: NodeId, peer: NodeId) -> Result<(), NetError> {
        self.check(node)?;
        self.check(peer)?;
        if node == peer {
            return Err(NetError::UnknownNode(peer));
        }
        if !self.links.contains_key(&(node, peer)) {
            return Err(NetError::NoLink(node, peer));
        }
        self.nodes[node].peers.insert(peer);
        let c = &self.nodes[node].chain;
        let kind = MessageKind::Handshake {
            head: c.head_num(),
            last_irreversible: c.last_irreversible(),
            chain_id: c.chain_id,
        };
        self.send(node, peer, kind);
        Ok(())
    }

    pub fn connect_at(&mut self, t: Millis, node: NodeId, peer: NodeId) -> Result<(), NetError> {
        self.check(node)?;
        self.check(peer)?;
        self.schedule(t, Event::Connect { node, peer });
        Ok(())
    }

    /// Queues a client submission of `tx` to `node` at time `t`.
    pub fn submit_at(&mut self, t: Millis, node: NodeId, tx: Transaction, tag: impl Into<String>) -> Result<(), NetError> {
        self.check(node)?;
        self.schedule(
            t.max(self.now),
            Event::Submit {
                node,
                tx: Box::new(tx),
                tag: tag.into(),
            },
        );
        Ok(())
    }

    pub fn now(&self) -> Millis {
        self.now
    }

    pub fn node(&self, id: NodeId) -> Result<&Node, NetError> {
        self.nodes.get(id).ok_or(NetError::UnknownNode(id))
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn take_trace(&mut self) -> Vec<TraceEvent> {
        std::mem::take(&mut self.trace)
    }

    /// Appends a scenario-level event to the trace.
    pub fn note(&mut self, label: &str, value: serde_json::Value) {
        self.trace.push(TraceEvent {
            time: self.now,
            node: None,
            body: EventBody::Note {
                label: label.to_string(),
                value,
            },
        });
    }

    /// Appends an arbitrary event to the trace at the current time.
    pub fn record(&mut self, node: Option<NodeId>, body: EventBody) {
        self.emit(node, body);
    }

    pub fn next_event_time(&self) -> Option<Millis> {
        self.queue.keys().next().map(|(t, _)| *t)
    }

    /// Processes the earliest event and returns the trace events it emitted.
    pub fn step(&mut self) -> Result<&[TraceEvent], NetError> {
        let ((time, _), event) = self.queue.pop_first().ok_or(NetError::EmptyQueue)?;
        self.now = time;
        let mark = self.trace.len();
        match event {
            Event::Deliver(msg) => self.deliver(msg),
            Event::SlotTimer { node, slot } => self.slot_timer(node, slot),
            Event::BackFill { node } => self.back_fill(node),
            Event::Submit { node, tx, tag } => self.submit(node, *tx, tag),
            Event::Connect { node, peer } => self.connect(node, peer)?,
        }
        Ok(&self.trace[mark..])
    }

    /// Processes every event due at or before `t_end`.
    pub fn run_until(&mut self, t_end: Millis) -> Result<(), NetError> {
        while self.next_event_time().is_some_and(|t| t <= t_end) {
            self.step()?;
        }
        self.now = self.now.max(t_end);
        Ok(())
    }

    /// Processes events until the queue is empty. Only terminates once
    /// production has been stopped with [`SimNet::set_production_end`].
    pub fn drain(&mut self) -> Result<(), NetError> {
        while !self.queue.is_empty() {
            self.step()?;
        }
        Ok(())
    }

    fn check(&self, id: NodeId) -> Result<(), NetError> {
        if id < self.nodes.len() {
            Ok(())
        } else {
            Err(NetError::UnknownNode(id))
        }
    }

    fn schedule(&mut self, t: Millis, e: Event) {
        self.queue.insert((t, self.seq), e);
        self.seq += 1;
    }

    fn emit(&mut self, node: Option<NodeId>, body: EventBody) {
        self.trace.push(TraceEvent { time: self.now, node, body });
    }

    fn send(&mut self, from: NodeId, to: NodeId, kind: MessageKind) {
        let Some(latency) = self.latency(from, to) else {
            return;
        };
        let droppable = matches!(kind, MessageKind::TxBroadcast { .. } | MessageKind::Confirmation { .. });
        if droppable && self.drop_probability > 0.0 && self.rng.gen_bool(self.drop_probability) {
            return;
        }
        let msg = Message {
            kind,
            from,
            to,
            send_time: self.now,
            deliver_time: self.now + latency,
        };
        self.schedule(msg.deliver_time, Event::Deliver(msg));
    }

    fn broadcast(&mut self, from: NodeId, except: Option<NodeId>, kind: &MessageKind) {
        let peers: Vec<_> = self.nodes[from].peers.iter().copied().filter(|p| Some(*p) != except).collect();
        for p in peers {
            self.send(from, p, kind.clone());
        }
    }

    fn deliver(&mut self, msg: Message) {
        let (n, from) = (msg.to, msg.from);
        if self.record_deliveries {
            self.emit(
                Some(n),
                EventBody::Deliver {
                    from,
                    msg: msg.kind.label().to_string(),
                    number: msg.kind.number(),
                },
            );
        }
        match msg.kind {
            MessageKind::Handshake { head, chain_id, .. } => {
                let local = &self.nodes[n].chain;
                if chain_id != local.chain_id {
                    self.emit(
                        Some(n),
                        EventBody::ConnectionRefused {
                            peer: from,
                            reason: format!("chain id {chain_id:x} differs from {:x}", local.chain_id),
                        },
                    );
                    return;
                }
                let local_head = local.head_num();
                self.nodes[n].peers.insert(from);
                if local_head > head {
                    self.send(n, from, MessageKind::Notice { head: local_head });
                } else if local_head < head {
                    self.start_sync(n, from, head);
                }
            }
            MessageKind::Notice { head } => {
                if head > self.nodes[n].chain.head_num() {
                    self.start_sync(n, from, head);
                }
            }
            MessageKind::SyncRequest { block_number } => {
                if let Some(b) = self.nodes[n].chain.block(block_number) {
                    let block = Box::new(b.clone());
                    self.send(n, from, MessageKind::SignedBlock { block });
                }
            }
            MessageKind::SignedBlock { block } => self.receive_block(n, from, *block),
            MessageKind::TxBroadcast { transaction } => {
                let now = self.now;
                if self.nodes[n].chain.push_transaction((*transaction).clone(), now).is_ok() {
                    self.broadcast(n, Some(from), &MessageKind::TxBroadcast { transaction });
                }
            }
            MessageKind::Confirmation {
                block_number,
                block_id,
                producer,
            } => self.receive_confirmation(n, Some(from), block_number, block_id, producer),
        }
    }

    fn start_sync(&mut self, n: NodeId, peer: NodeId, target: u64) {
        let node = &mut self.nodes[n];
        if node.sync.is_some() {
            if let Some(s) = node.sync.as_mut() {
                s.target = s.target.max(target);
            }
            return;
        }
        node.sync = Some(SyncState { peer, target });
        let next = node.chain.head_num() + 1;
        self.send(n, peer, MessageKind::SyncRequest { block_number: next });
    }

    /// Requests the next block from the sync peer, or leaves sync mode once
    /// the target height is reached.
    fn continue_sync(&mut self, n: NodeId) {
        let Some(s) = self.nodes[n].sync else {
            return;
        };
        let head = self.nodes[n].chain.head_num();
        if head < s.target {
            self.send(n, s.peer, MessageKind::SyncRequest { block_number: head + 1 });
        } else {
            self.nodes[n].sync = None;
        }
    }

    fn receive_block(&mut self, n: NodeId, from: NodeId, block: Block) {
        let head = self.nodes[n].chain.head_num();
        let from_sync_peer = self.nodes[n].sync.is_some_and(|s| s.peer == from);
        if block.number <= head {
            if from_sync_peer {
                self.continue_sync(n);
            }
            return;
        }
        if block.number > head + 1 {
            self.start_sync(n, from, block.number);
            return;
        }
        if block.previous_id != self.nodes[n].chain.head().id() {
            self.emit(Some(n), EventBody::BadLinkage { number: block.number, head });
            if let Some(s) = self.nodes[n].sync {
                self.send(n, s.peer, MessageKind::SyncRequest { block_number: head + 1 });
            }
            return;
        }
        let applied = match self.nodes[n].chain.apply_block(&block) {
            Ok(a) => a,
            Err(e) => {
                self.emit(
                    Some(n),
                    EventBody::BlockRejected {
                        number: block.number,
                        class: e.class().to_string(),
                        message: e.to_string(),
                    },
                );
                return;
            }
        };
        self.after_block(n, applied.new_lib, &applied.missed, applied.new_schedule.as_ref());
        let number = block.number;
        match self.nodes[n].sync {
            Some(_) => self.continue_sync(n),
            None => {
                let id = block.id();
                self.broadcast(n, Some(from), &MessageKind::SignedBlock { block: Box::new(block) });
                self.confirm_as_hosted(n, number, id);
            }
        }
        if let Some(early) = self.nodes[n].early_confirmations.remove(&number) {
            for (id, producer) in early {
                self.receive_confirmation(n, None, number, id, producer);
            }
        }
    }

    fn receive_confirmation(&mut self, n: NodeId, from: Option<NodeId>, number: u64, id: BlockId, producer: AccountName) {
        let node = &mut self.nodes[n];
        if number <= node.chain.last_irreversible() {
            return;
        }
        if number > node.chain.head_num() {
            node.early_confirmations.entry(number).or_default().push((id, producer));
            return;
        }
        if !node.seen_confirmations.insert((number, producer.clone())) {
            return;
        }
        // Confirmations from non-producers or for unknown blocks are dropped.
        if let Ok(new_lib) = node.chain.confirm_block(number, Some(id.0), &producer) {
            if let Some(lib) = new_lib {
                self.lib_advanced(n, lib);
            }
            let kind = MessageKind::Confirmation {
                block_number: number,
                block_id: id,
                producer,
            };
            self.broadcast(n, from, &kind);
        }
    }

    /// In BFT mode, producers hosted on `n` confirm a block as soon as they
    /// hold it.
    fn confirm_as_hosted(&mut self, n: NodeId, number: u64, id: BlockId) {
        let chain = &self.nodes[n].chain;
        if chain.ledger().consensus.params.mode != DposMode::Bft {
            return;
        }
        let block_producer = chain.block(number).map(|b| b.producer.clone());
        let confirmers: Vec<_> = self.nodes[n]
            .producers
            .iter()
            .filter(|p| Some(*p) != block_producer.as_ref() && chain.ledger().consensus.schedule.contains(p))
            .cloned()
            .collect();
        for p in confirmers {
            self.receive_confirmation(n, None, number, id, p);
        }
    }

    fn lib_advanced(&mut self, n: NodeId, lib: u64) {
        self.emit(Some(n), EventBody::Irreversible { number: lib });
        let node = &mut self.nodes[n];
        node.seen_confirmations.retain(|(number, _)| *number > lib);
        node.early_confirmations = node.early_confirmations.split_off(&(lib + 1));
    }

    fn after_block(
        &mut self,
        n: NodeId,
        new_lib: Option<u64>,
        missed: &[crate::consensus::MissedSlot],
        schedule: Option<&crate::consensus::ProducerSchedule>,
    ) {
        for m in missed.iter().filter(|m| m.deregistered) {
            self.emit(
                Some(n),
                EventBody::ProducerEvicted {
                    producer: m.producer.clone(),
                    slot: m.slot,
                },
            );
        }
        if let Some(s) = schedule {
            self.emit(
                Some(n),
                EventBody::Schedule {
                    round: s.round,
                    producers: s.producers.clone(),
                },
            );
        }
        if let Some(lib) = new_lib {
            self.lib_advanced(n, lib);
        }
    }

    fn slot_timer(&mut self, n: NodeId, slot: u64) {
        if self.production_end.is_some_and(|e| self.now > e) {
            return;
        }
        let params = self.nodes[n].chain.ledger().consensus.params.clone();
        self.schedule(params.slot_time(slot + 1), Event::SlotTimer { node: n, slot: slot + 1 });
        let chain = &self.nodes[n].chain;
        if chain.head_slot().is_some_and(|h| h >= slot) || self.nodes[n].sync.is_some() {
            return;
        }
        let owner = chain.slot_owner(slot);
        if self.nodes[n].producers.contains(&owner) {
            self.produce(n, &owner, slot);
        }
    }

    fn back_fill(&mut self, n: NodeId) {
        if self.production_end.is_some_and(|e| self.now > e) {
            return;
        }
        let chain = &self.nodes[n].chain;
        let next = chain.head_slot().map_or(0, |h| h + 1);
        if chain.ledger().consensus.params.slot_time(next) < self.now {
            return;
        }
        let owner = chain.slot_owner(next);
        if self.nodes[n].producers.contains(&owner) {
            self.produce(n, &owner, next);
        }
    }

    fn produce(&mut self, n: NodeId, producer: &AccountName, slot: u64) {
        let now = self.now;
        let pb = match self.nodes[n].chain.produce_block(producer, slot, now) {
            Ok(pb) => pb,
            Err(_) => return,
        };
        self.record_produced(n, &pb);
        let ProducedBlock { block, mode, applied, .. } = pb;
        let id = block.id();
        let number = block.number;
        let cpu_used = block.cpu_used;
        self.after_block(n, applied.new_lib, &applied.missed, applied.new_schedule.as_ref());
        self.broadcast(n, None, &MessageKind::SignedBlock { block: Box::new(block) });
        self.confirm_as_hosted(n, number, id);
        if mode == ProducerMode::Exhausted {
            self.schedule(now + cpu_used.max(1), Event::BackFill { node: n });
        }
    }

    fn record_produced(&mut self, n: NodeId, pb: &ProducedBlock) {
        let b = &pb.block;
        let mut summary = BlockSummary {
            number: b.number,
            slot: b.slot,
            producer: b.producer.clone(),
            timestamp: b.timestamp,
            drift: b.timestamp as i64 - self.now as i64,
            mode: pb.mode,
            txs: 0,
            actions: 0,
            deferred: 0,
            failed: 0,
            scheduled: 0,
            cpu_used: b.cpu_used,
            net_used: b.net_used,
            tx_ids: Vec::new(),
            missed: pb.applied.missed.iter().map(|m| m.producer.clone()).collect(),
        };
        let mut failures = Vec::new();
        for r in &b.receipts {
            match &r.status {
                ReceiptStatus::Executed => {
                    summary.txs += 1;
                    summary.actions += r.trx.action_count() as u64;
                    if r.from_deferred {
                        summary.deferred += 1;
                    }
                }
                ReceiptStatus::Scheduled { .. } => summary.scheduled += 1,
                ReceiptStatus::Failed { class } => {
                    summary.failed += 1;
                    failures.push((r.id, class.clone()));
                }
            }
            if !r.from_deferred {
                summary.tx_ids.push(r.id);
            }
        }
        self.emit(Some(n), EventBody::BlockProduced(summary));
        for rej in &pb.rejected {
            self.emit(
                Some(n),
                EventBody::TxRejected {
                    id: rej.id,
                    class: rej.class.clone(),
                    payer: rej.payer.clone(),
                    stage: "block".into(),
                },
            );
        }
        for (id, class) in failures {
            self.emit(Some(n), EventBody::DeferredFailed { id, class });
        }
        for (tx, effects) in &pb.effects {
            for e in effects {
                self.emit(
                    Some(n),
                    EventBody::Effect {
                        tx: *tx,
                        effect: e.clone(),
                    },
                );
            }
        }
    }

    fn submit(&mut self, n: NodeId, tx: Transaction, tag: String) {
        let id: TxId = tx.id();
        let payer = tx.payer().cloned();
        self.emit(
            Some(n),
            EventBody::TxSubmitted {
                id,
                payer: payer.clone(),
                tag,
            },
        );
        let now = self.now;
        match self.nodes[n].chain.push_transaction(tx.clone(), now) {
            Ok(_) => self.broadcast(n, None, &MessageKind::TxBroadcast { transaction: Box::new(tx) }),
            Err(e) => self.emit(
                Some(n),
                EventBody::TxRejected {
                    id,
                    class: e.class().to_string(),
                    payer,
                    stage: "push".into(),
                },
            ),
        }
    }
}

/// First slot whose due time is at or after `t`.
fn first_slot_at_or_after(interval: Millis, t: Millis) -> u64 {
    // Slot s is due at (s + 1) * interval.
    (t.div_ceil(interval)).saturating_sub(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Ledger;
    use crate::scenarios::genesis::producer_names;
    use crate::scenarios::{build_genesis, ScenarioSpec};

    fn spec(extra: &str) -> ScenarioSpec {
        ScenarioSpec::parse(&format!("name = \"n\"\nduration_ms = 1000\nseed = 1\n{extra}")).unwrap()
    }

    fn genesis() -> (Ledger, Vec<AccountName>) {
        let s = spec("");
        (build_genesis(&s).unwrap(), producer_names(&s))
    }

    fn deliveries(net: &SimNet, node: NodeId, label: &str) -> Vec<Option<u64>> {
        net.trace()
            .iter()
            .filter(|e| e.node == Some(node))
            .filter_map(|e| match &e.body {
                EventBody::Deliver { msg, number, .. } if msg == label => Some(*number),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn running_an_empty_network_records_nothing() {
        let mut net = SimNet::new(1);
        net.run_until(0).unwrap();
        assert!(net.trace().is_empty());
        assert_eq!(net.now(), 0);
        assert!(matches!(net.step(), Err(NetError::EmptyQueue)));
    }

    #[test]
    fn simultaneous_events_run_in_scheduling_order() {
        let (g, producers) = genesis();
        let mut net = SimNet::new(1);
        net.add_node(ChainState::new(g), producers);
        net.set_production_end(0);
        for (i, tag) in ["first", "second", "third"].into_iter().enumerate() {
            let tx = Transaction::immediate(Vec::new(), 0, 10_000, i as u64);
            net.submit_at(100, 0, tx, tag).unwrap();
        }
        net.run_until(100).unwrap();
        let order: Vec<(Millis, String)> = net
            .trace()
            .iter()
            .filter_map(|e| match &e.body {
                EventBody::TxSubmitted { tag, .. } => Some((e.time, tag.clone())),
                _ => None,
            })
            .collect();
        let expected: Vec<(Millis, String)> = ["first", "second", "third"].iter().map(|t| (100, t.to_string())).collect();
        assert_eq!(order, expected);
    }

    #[test]
    fn cold_node_syncs_one_block_per_request() {
        let (g, producers) = genesis();
        let mut net = SimNet::new(1);
        net.add_node(ChainState::new(g.clone()), producers);
        net.add_node(ChainState::new(g), Vec::new());
        net.link(0, 1, 20).unwrap();
        net.set_production_end(2_500);
        net.run_until(2_600).unwrap();
        assert_eq!(net.nodes()[0].chain.head_num(), 5);
        net.connect(1, 0).unwrap();
        net.drain().unwrap();
        assert_eq!(deliveries(&net, 0, "sync_request"), (1..=5).map(Some).collect::<Vec<_>>());
        assert_eq!(deliveries(&net, 1, "signed_block"), (1..=5).map(Some).collect::<Vec<_>>());
        assert_eq!(net.nodes()[1].chain.head().id(), net.nodes()[0].chain.head().id());
        assert!(!net.nodes()[1].is_syncing());
    }

    #[test]
    fn foreign_chain_is_refused() {
        let (g, producers) = genesis();
        let other = build_genesis(&spec("[[accounts]]\nname = \"alice\"\nbalance = 1\n")).unwrap();
        let mut net = SimNet::new(1);
        net.add_node(ChainState::new(g), producers);
        net.add_node(ChainState::new(other), Vec::new());
        assert!(matches!(net.connect(1, 0), Err(NetError::NoLink(1, 0))));
        net.link(0, 1, 10).unwrap();
        net.set_production_end(1_000);
        net.connect(1, 0).unwrap();
        net.drain().unwrap();
        let refused = net.trace().iter().any(|e| e.node == Some(0) && matches!(e.body, EventBody::ConnectionRefused { peer: 1, .. }));
        assert!(refused);
        assert_eq!(net.nodes()[1].chain.head_num(), 0);
        assert!(net.nodes()[0].peers().is_empty());
    }

    #[test]
    fn blocks_arriving_twice_are_applied_once() {
        let (g, producers) = genesis();
        let mut net = SimNet::new(1);
        net.add_node(ChainState::new(g.clone()), producers);
        net.add_node(ChainState::new(g.clone()), Vec::new());
        net.add_node(ChainState::new(g), Vec::new());
        for (a, b) in [(0, 1), (1, 2), (0, 2)] {
            net.link(a, b, 10 + 5 * a as Millis).unwrap();
            net.connect(a, b).unwrap();
        }
        net.set_production_end(5_000);
        net.drain().unwrap();
        let copies = deliveries(&net, 2, "signed_block");
        assert!(copies.len() > 10, "node 2 hears every block from both neighbours");
        let heads: Vec<_> = net.nodes().iter().map(|n| n.chain.head().id()).collect();
        assert!(heads.iter().all(|h| *h == heads[0]));
        assert_eq!(net.nodes()[2].chain.head_num(), 10);
        let rejected = net.trace().iter().any(|e| matches!(e.body, EventBody::BlockRejected { .. } | EventBody::BadLinkage { .. }));
        assert!(!rejected);
    }
}
