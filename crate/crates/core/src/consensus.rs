//! DPoS election, round scheduling, producer liveness and BFT finality.
//!
//! A round is `producer_count * slots_per_producer` slots (21 x 12 = 252 by
//! default). Slot `s` is due at `(s + 1) * block_interval_ms` and belongs to
//! `producers[(s mod 252) / 12]` of the schedule tallied at the start of its
//! round. A block is irreversible once `2n/3 + 1` distinct scheduled
//! producers (15 of 21) have confirmed it.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::block::Block;
use crate::chain::state::{ChainState, ProducedBlock};
use crate::chain::ChainError;
use crate::name::AccountName;
use crate::Millis;

pub const PRODUCER_COUNT: usize = 21;
pub const SLOTS_PER_PRODUCER: u64 = 12;
pub const BLOCK_INTERVAL_MS: Millis = 500;
pub const MAX_VOTES_PER_VOTER: usize = 30;
/// A producer silent for longer than this is deregistered.
pub const EVICTION_MS: Millis = 24 * 3600 * 1000;
pub const DEFAULT_BLOCK_CPU_BUDGET_MS: u64 = 200;
pub const DEFAULT_BLOCK_NET_BUDGET_WORDS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DposMode {
    /// Producers confirm every block as soon as they receive it.
    #[default]
    Bft,
    /// A producer confirms pending blocks only when it produces its own.
    Plain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsensusParams {
    pub producer_count: usize,
    pub slots_per_producer: u64,
    pub block_interval_ms: Millis,
    pub block_cpu_budget_ms: u64,
    pub block_net_budget_words: u64,
    pub mode: DposMode,
    pub eviction_ms: Millis,
}

impl Default for ConsensusParams {
    fn default() -> Self {
        Self {
            producer_count: PRODUCER_COUNT,
            slots_per_producer: SLOTS_PER_PRODUCER,
            block_interval_ms: BLOCK_INTERVAL_MS,
            block_cpu_budget_ms: DEFAULT_BLOCK_CPU_BUDGET_MS,
            block_net_budget_words: DEFAULT_BLOCK_NET_BUDGET_WORDS,
            mode: DposMode::Bft,
            eviction_ms: EVICTION_MS,
        }
    }
}

impl ConsensusParams {
    pub fn blocks_per_round(&self) -> u64 {
        self.producer_count as u64 * self.slots_per_producer
    }

    pub fn slot_time(&self, slot: u64) -> Millis {
        (slot + 1) * self.block_interval_ms
    }

    /// Slot whose due time is exactly `t`, if any.
    pub fn slot_at(&self, t: Millis) -> Option<u64> {
        if t == 0 || !t.is_multiple_of(self.block_interval_ms) {
            None
        } else {
            Some(t / self.block_interval_ms - 1)
        }
    }
}

/// Confirmations needed for irreversibility among `n` producers.
pub fn irreversible_threshold(n: usize) -> usize {
    2 * n / 3 + 1
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConsensusError {
    #[error("only {registered} registered candidates, {needed} needed")]
    TooFewCandidates { registered: usize, needed: usize },
    #[error("slot {slot} belongs to {expected}, not {producer}")]
    NotYourSlot {
        slot: u64,
        expected: AccountName,
        producer: AccountName,
    },
    #[error("slot {slot} is already filled (head timestamp {head_time})")]
    SlotTaken { slot: u64, head_time: Millis },
    #[error("unknown block {0}")]
    UnknownBlock(u64),
    #[error("{0} is not an active producer")]
    NotAProducer(AccountName),
    #[error("{voter} votes for {count} candidates, limit is {MAX_VOTES_PER_VOTER}")]
    TooManyVotes { voter: AccountName, count: usize },
    #[error("{0} is not a registered candidate")]
    UnknownCandidate(AccountName),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Voter {
    pub stake: u64,
    pub votes: BTreeSet<AccountName>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub registered: bool,
    pub total_vote_weight: u64,
    pub last_block_time: Millis,
    pub missed_slots: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteState {
    pub voters: BTreeMap<AccountName, Voter>,
    pub candidates: BTreeMap<AccountName, Candidate>,
}

impl VoteState {
    pub fn register(&mut self, name: AccountName, now: Millis) {
        let c = self.candidates.entry(name).or_default();
        c.registered = true;
        c.last_block_time = now;
    }

    pub fn deregister(&mut self, name: &AccountName) {
        if let Some(c) = self.candidates.get_mut(name) {
            c.registered = false;
        }
    }

    pub fn is_registered(&self, name: &AccountName) -> bool {
        self.candidates.get(name).is_some_and(|c| c.registered)
    }

    /// Replaces the voter's ballot, keeping candidate weights in sync.
    pub fn vote(&mut self, voter: AccountName, stake: u64, votes: BTreeSet<AccountName>) -> Result<(), ConsensusError> {
        if votes.len() > MAX_VOTES_PER_VOTER {
            return Err(ConsensusError::TooManyVotes {
                voter,
                count: votes.len(),
            });
        }
        if let Some(missing) = votes.iter().find(|c| !self.candidates.contains_key(*c)) {
            return Err(ConsensusError::UnknownCandidate(missing.clone()));
        }
        if let Some(old) = self.voters.remove(&voter) {
            for c in &old.votes {
                if let Some(cand) = self.candidates.get_mut(c) {
                    cand.total_vote_weight -= old.stake;
                }
            }
        }
        for c in &votes {
            self.candidates.get_mut(c).expect("checked").total_vote_weight += stake;
        }
        self.voters.insert(voter, Voter { stake, votes });
        Ok(())
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        for (name, cand) in &self.candidates {
            let expect: u64 = self
                .voters
                .values()
                .filter(|v| v.votes.contains(name))
                .map(|v| v.stake)
                .sum();
            if expect != cand.total_vote_weight {
                return Err(format!("{name}: weight {} != {expect}", cand.total_vote_weight));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProducerSchedule {
    pub round: u64,
    /// Slot order within the round: the elected set sorted by name.
    pub producers: Vec<AccountName>,
    pub slots_per_producer: u64,
}

impl ProducerSchedule {
    pub fn blocks_per_round(&self) -> u64 {
        self.producers.len() as u64 * self.slots_per_producer
    }

    pub fn contains(&self, name: &AccountName) -> bool {
        self.producers.contains(name)
    }
}

/// Elects the `count` heaviest registered candidates (ties to the smaller
/// name) and orders them by name for slot assignment.
pub fn tally_votes(votes: &VoteState, count: usize, slots_per_producer: u64, round: u64) -> Result<ProducerSchedule, ConsensusError> {
    let mut ranked: Vec<(&AccountName, u64)> = votes
        .candidates
        .iter()
        .filter(|(_, c)| c.registered)
        .map(|(n, c)| (n, c.total_vote_weight))
        .collect();
    if ranked.len() < count {
        return Err(ConsensusError::TooFewCandidates {
            registered: ranked.len(),
            needed: count,
        });
    }
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let mut producers: Vec<AccountName> = ranked.into_iter().take(count).map(|(n, _)| n.clone()).collect();
    producers.sort();
    Ok(ProducerSchedule {
        round,
        producers,
        slots_per_producer,
    })
}

/// Owner of `slot` under `schedule`: `producers[(slot mod round_len) / slots]`.
pub fn slot_producer(schedule: &ProducerSchedule, slot: u64) -> &AccountName {
    let idx = (slot % schedule.blocks_per_round()) / schedule.slots_per_producer;
    &schedule.producers[idx as usize]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProducerMode {
    /// All available work fit; the producer waits for its next slot.
    Success,
    /// The block budget ran out with work left over.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissedSlot {
    pub slot: u64,
    pub producer: AccountName,
    pub deregistered: bool,
}

/// Election and liveness state replicated inside the ledger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsensusLedger {
    pub params: ConsensusParams,
    pub votes: VoteState,
    pub schedule: ProducerSchedule,
}

impl ConsensusLedger {
    pub fn new(params: ConsensusParams, votes: VoteState) -> Result<Self, ConsensusError> {
        let schedule = tally_votes(&votes, params.producer_count, params.slots_per_producer, 0)?;
        Ok(Self { params, votes, schedule })
    }

    pub fn round_of(&self, slot: u64) -> u64 {
        slot / self.params.blocks_per_round()
    }

    /// Schedule that will govern `slot`, tallying ahead if it starts a new
    /// round. A failed tally keeps the current producer set.
    pub fn schedule_for_slot(&self, slot: u64) -> Cow<'_, ProducerSchedule> {
        let round = self.round_of(slot);
        if round == self.schedule.round {
            Cow::Borrowed(&self.schedule)
        } else {
            match tally_votes(&self.votes, self.params.producer_count, self.params.slots_per_producer, round) {
                Ok(s) => Cow::Owned(s),
                Err(_) => Cow::Owned(ProducerSchedule {
                    round,
                    ..self.schedule.clone()
                }),
            }
        }
    }

    pub fn owner_of(&self, slot: u64) -> AccountName {
        slot_producer(&self.schedule_for_slot(slot), slot).clone()
    }

    /// Advances the schedule to the round containing `slot`. Returns the new
    /// schedule when a round boundary was crossed.
    pub fn roll_to(&mut self, slot: u64) -> Option<ProducerSchedule> {
        if self.round_of(slot) == self.schedule.round {
            return None;
        }
        let next = self.schedule_for_slot(slot).into_owned();
        // A producer entering the schedule is silent only from the start of
        // its first round, not from its registration.
        let start = self.params.slot_time(self.round_of(slot) * self.params.blocks_per_round());
        for p in next.producers.iter().filter(|p| !self.schedule.contains(p)) {
            if let Some(c) = self.votes.candidates.get_mut(p) {
                c.last_block_time = c.last_block_time.max(start);
            }
        }
        self.schedule = next.clone();
        Some(next)
    }

    pub fn record_block(&mut self, producer: &AccountName, at: Millis) {
        if let Some(c) = self.votes.candidates.get_mut(producer) {
            c.last_block_time = at;
        }
    }

    /// Records that the owner of `slot` produced nothing. The owner is
    /// deregistered once it has been silent for more than the eviction window.
    pub fn handle_missed_slot(&mut self, slot: u64, now: Millis) -> MissedSlot {
        let producer = self.owner_of(slot);
        let eviction = self.params.eviction_ms;
        let mut deregistered = false;
        if let Some(c) = self.votes.candidates.get_mut(&producer) {
            c.missed_slots += 1;
            if c.registered && now.saturating_sub(c.last_block_time) > eviction {
                c.registered = false;
                deregistered = true;
            }
        }
        MissedSlot {
            slot,
            producer,
            deregistered,
        }
    }

    pub fn threshold(&self) -> usize {
        irreversible_threshold(self.schedule.producers.len())
    }
}

/// Produces the block for `slot` on `state` as `producer`.
///
/// Pending immediate transactions run first, then due deferred ones, until the
/// block's CPU or NET budget is reached. Invalid transactions are dropped and
/// reported in [`ProducedBlock::rejected`].
pub fn produce_block(state: &mut ChainState, producer: &AccountName, slot: u64, now: Millis) -> Result<ProducedBlock, ConsensusError> {
    state.produce_block(producer, slot, now)
}

/// Adds `producer`'s confirmation of block `number`. Returns the new last
/// irreversible block number if it advanced.
pub fn confirm_block(state: &mut ChainState, number: u64, block_id: Option<u64>, producer: &AccountName) -> Result<Option<u64>, ConsensusError> {
    state.confirm_block(number, block_id, producer)
}

/// Applies a block produced elsewhere.
pub fn apply_block(state: &mut ChainState, block: &Block) -> Result<crate::chain::state::AppliedBlock, ChainError> {
    state.apply_block(block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::name::{generated, name};

    fn votes_with(weights: &[(&str, u64)]) -> VoteState {
        let mut v = VoteState::default();
        for (n, w) in weights {
            v.register(name(n), 0);
            v.vote(name(&format!("v{n}")), *w, [name(n)].into_iter().collect()).unwrap();
        }
        v
    }

    #[test]
    fn round_constants() {
        let p = ConsensusParams::default();
        assert_eq!(p.blocks_per_round(), 252);
        assert_eq!(irreversible_threshold(21), 15);
        assert_eq!(p.slot_time(0), 500);
        assert_eq!(p.slot_at(500), Some(0));
        assert_eq!(p.slot_at(750), None);
    }

    #[test]
    fn selects_heaviest_21_of_25() {
        let mut v = VoteState::default();
        for i in 0..25 {
            let c = generated("cand", i);
            v.register(c.clone(), 0);
            v.vote(generated("voter", i), 1000 + i as u64, [c].into_iter().collect()).unwrap();
        }
        let s = tally_votes(&v, 21, 12, 0).unwrap();
        let expect: BTreeSet<_> = (4..25).map(|i| generated("cand", i)).collect();
        assert_eq!(s.producers.iter().cloned().collect::<BTreeSet<_>>(), expect);
        assert!(s.producers.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn too_few_candidates() {
        let mut v = VoteState::default();
        for i in 0..20 {
            v.register(generated("cand", i), 0);
        }
        assert_eq!(
            tally_votes(&v, 21, 12, 0),
            Err(ConsensusError::TooFewCandidates { registered: 20, needed: 21 })
        );
    }

    /// Brute force over every insertion order of a 22-candidate fixture with a
    /// tie at rank 21: the smaller name must always win.
    #[test]
    fn tie_at_cutoff_goes_to_smaller_name() {
        let mut weights: Vec<(String, u64)> = (0..20).map(|i| (generated("top", i).to_string(), 100)).collect();
        weights.push(("tieb".into(), 10));
        weights.push(("tiea".into(), 10));
        let n = weights.len();
        // Rotations and reversals cover every relative position of the pair.
        for rot in 0..n {
            for rev in [false, true] {
                let mut order = weights.clone();
                order.rotate_left(rot);
                if rev {
                    order.reverse();
                }
                let pairs: Vec<(&str, u64)> = order.iter().map(|(a, w)| (a.as_str(), *w)).collect();
                let s = tally_votes(&votes_with(&pairs), 21, 12, 0).unwrap();
                assert!(s.contains(&name("tiea")));
                assert!(!s.contains(&name("tieb")));
            }
        }
    }

    #[test]
    fn slot_arithmetic() {
        let s = ProducerSchedule {
            round: 0,
            producers: (0..21).map(|i| generated("bp", i)).collect(),
            slots_per_producer: 12,
        };
        for b in 0..12 {
            assert_eq!(slot_producer(&s, b), &s.producers[0]);
        }
        assert_eq!(slot_producer(&s, 12), &s.producers[1]);
        assert_eq!(slot_producer(&s, 251), &s.producers[20]);
        assert_eq!(slot_producer(&s, 252), &s.producers[0]);
        let mut counts = BTreeMap::new();
        for b in 0..252 {
            *counts.entry(slot_producer(&s, b).clone()).or_insert(0) += 1;
        }
        assert!(counts.values().all(|&c| c == 12));
    }

    #[test]
    fn vote_cap_and_weights() {
        let mut v = VoteState::default();
        for i in 0..31 {
            v.register(generated("c", i), 0);
        }
        let all: BTreeSet<_> = (0..31).map(|i| generated("c", i)).collect();
        assert!(matches!(v.vote(name("alice"), 5, all), Err(ConsensusError::TooManyVotes { .. })));
        v.vote(name("alice"), 5, [generated("c", 0)].into_iter().collect()).unwrap();
        v.vote(name("alice"), 7, [generated("c", 1)].into_iter().collect()).unwrap();
        assert_eq!(v.candidates[&generated("c", 0)].total_vote_weight, 0);
        assert_eq!(v.candidates[&generated("c", 1)].total_vote_weight, 7);
        v.check_invariants().unwrap();
    }

    #[test]
    fn missed_slot_eviction_after_24h() {
        let mut v = VoteState::default();
        for i in 0..22 {
            v.register(generated("bp", i), 0);
            v.vote(generated("v", i), 100 - i as u64, [generated("bp", i)].into_iter().collect()).unwrap();
        }
        let mut c = ConsensusLedger::new(ConsensusParams::default(), v).unwrap();
        let victim = c.schedule.producers[0].clone();
        let m = c.handle_missed_slot(0, EVICTION_MS);
        assert_eq!((m.producer.clone(), m.deregistered), (victim.clone(), false));
        let m = c.handle_missed_slot(1, EVICTION_MS + 1);
        assert!(m.deregistered);
        let next = c.roll_to(252 * 400).unwrap();
        assert!(!next.contains(&victim));
        let promoted = generated("bp", 21);
        assert!(next.contains(&promoted));
        // Registered at 0 but scheduled only now: not yet silent for a day.
        let first = (0..252 * 401).find(|s| *s >= 252 * 400 && c.owner_of(*s) == promoted).unwrap();
        let m = c.handle_missed_slot(first, c.params.slot_time(first));
        assert_eq!((m.producer, m.deregistered), (promoted, false));
    }
}
