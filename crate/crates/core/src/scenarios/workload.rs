//! Background transfer traffic.

use rand::distributions::Alphanumeric;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::{Action, PermissionLevel, Transaction, TOKEN_ACCOUNT};
use crate::name::{name, AccountName};
use crate::scenarios::genesis::account_key;
use crate::scenarios::spec::WorkloadSpec;
use crate::Millis;

/// Lifetime given to every generated transaction.
pub const TX_LIFETIME_MS: Millis = 30_000;

/// Deterministic stream of transfer transactions arriving at a fixed rate:
/// arrival `k` happens at `start + floor(k * 1000 / rate)`.
#[derive(Debug, Clone)]
pub struct Workload {
    rate: f64,
    start: Millis,
    end: Millis,
    senders: Vec<AccountName>,
    receivers: Vec<AccountName>,
    actions: [u64; 2],
    payload: [u64; 2],
    amount: u64,
    rng: ChaCha8Rng,
    index: u64,
}

impl Workload {
    pub fn new(spec: &WorkloadSpec, seed: u64, duration: Millis) -> Self {
        let senders: Vec<_> = spec.senders.iter().map(|s| name(s)).collect();
        let receivers = if spec.receivers.is_empty() {
            senders.clone()
        } else {
            spec.receivers.iter().map(|s| name(s)).collect()
        };
        Self {
            rate: spec.tx_rate,
            start: spec.start_ms,
            end: spec.stop_ms.unwrap_or(duration).min(duration),
            senders,
            receivers,
            actions: spec.actions_per_tx,
            payload: spec.payload_bytes,
            amount: spec.amount,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x776f_726b_6c6f_6164),
            index: 0,
        }
    }

    fn arrival(&self, k: u64) -> Option<Millis> {
        if self.rate <= 0.0 {
            return None;
        }
        let t = self.start + (k as f64 * 1000.0 / self.rate).floor() as Millis;
        (t < self.end).then_some(t)
    }

    pub fn next_time(&self) -> Option<Millis> {
        self.arrival(self.index)
    }

    /// Builds the next transaction, referencing block `ref_block_num`.
    pub fn next_tx(&mut self, ref_block_num: u64) -> Option<(Millis, Transaction)> {
        let t = self.arrival(self.index)?;
        let k = self.index;
        self.index += 1;
        let sender = self.senders[self.rng.gen_range(0..self.senders.len())].clone();
        let n_actions = self.rng.gen_range(self.actions[0]..=self.actions[1]);
        let mut actions = Vec::new();
        for _ in 0..n_actions {
            let others: Vec<_> = self.receivers.iter().filter(|r| **r != sender).collect();
            if others.is_empty() {
                break;
            }
            let to = others[self.rng.gen_range(0..others.len())].clone();
            let len = self.rng.gen_range(self.payload[0]..=self.payload[1]) as usize;
            let memo: String = (&mut self.rng).sample_iter(&Alphanumeric).take(len).map(char::from).collect();
            actions.push(
                Action::new(name(TOKEN_ACCOUNT), "transfer")
                    .with("from", sender.clone())
                    .with("to", to)
                    .with("quantity", self.amount)
                    .with("memo", memo.as_str())
                    .auth(PermissionLevel::active(sender.clone())),
            );
        }
        let tx = Transaction::immediate(actions, ref_block_num, t + TX_LIFETIME_MS, k).signed(account_key(&sender));
        Some((t, tx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(rate: f64) -> WorkloadSpec {
        WorkloadSpec {
            tx_rate: rate,
            senders: vec!["alice".into(), "bob".into()],
            receivers: Vec::new(),
            actions_per_tx: [1, 3],
            payload_bytes: [0, 16],
            amount: 1,
            start_ms: 0,
            stop_ms: None,
        }
    }

    #[test]
    fn arrivals_follow_the_rate() {
        let mut w = Workload::new(&spec(56.4), 1, 60_000);
        let mut n = 0;
        while let Some((t, tx)) = w.next_tx(0) {
            assert!(t < 60_000);
            assert!((1..=3).contains(&tx.actions.len()));
            n += 1;
        }
        assert_eq!(n, 3384);
    }

    #[test]
    fn zero_rate_generates_nothing() {
        let mut w = Workload::new(&spec(0.0), 1, 60_000);
        assert!(w.next_tx(0).is_none());
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = Workload::new(&spec(10.0), 5, 5_000);
        let mut b = Workload::new(&spec(10.0), 5, 5_000);
        for _ in 0..50 {
            assert_eq!(a.next_tx(0), b.next_tx(0));
        }
    }
}
