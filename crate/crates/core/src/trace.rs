//! JSON-lines event trace: one header line naming the schema and scenario,
//! then one object per event.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::TxId;
use crate::consensus::ProducerMode;
use crate::contracts::Effect;
use crate::name::AccountName;
use crate::Millis;

pub const SCHEMA: &str = "eosim-trace/1";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("unsupported trace schema {found:?} (expected {SCHEMA})")]
    SchemaMismatch { found: String },
    #[error("trace line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("empty trace file")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema: String,
    pub scenario: String,
    pub seed: u64,
    /// Scenario file the run was made from, so the trace can be replayed.
    pub spec: Option<String>,
}

impl TraceHeader {
    pub fn new(scenario: impl Into<String>, seed: u64, spec: Option<String>) -> Self {
        Self {
            schema: SCHEMA.to_string(),
            scenario: scenario.into(),
            seed,
            spec,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSummary {
    pub number: u64,
    pub slot: u64,
    pub producer: AccountName,
    pub timestamp: Millis,
    /// Block timestamp minus the simulated time it was produced at.
    pub drift: i64,
    pub mode: ProducerMode,
    /// Executed transactions, deferred ones included.
    pub txs: u64,
    pub actions: u64,
    pub deferred: u64,
    pub failed: u64,
    pub scheduled: u64,
    pub cpu_used: u64,
    pub net_used: u64,
    /// Ids of the submitted (non-deferred) transactions included.
    pub tx_ids: Vec<TxId>,
    /// Producers whose slots were skipped since the previous block.
    pub missed: Vec<AccountName>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventBody {
    Deliver {
        from: usize,
        msg: String,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        number: Option<u64>,
    },
    ConnectionRefused {
        peer: usize,
        reason: String,
    },
    BadLinkage {
        number: u64,
        head: u64,
    },
    BlockProduced(BlockSummary),
    BlockRejected {
        number: u64,
        class: String,
        message: String,
    },
    Irreversible {
        number: u64,
    },
    Schedule {
        round: u64,
        producers: Vec<AccountName>,
    },
    ProducerEvicted {
        producer: AccountName,
        slot: u64,
    },
    TxSubmitted {
        id: TxId,
        payer: Option<AccountName>,
        tag: String,
    },
    TxRejected {
        id: TxId,
        class: String,
        payer: Option<AccountName>,
        stage: String,
    },
    DeferredFailed {
        id: TxId,
        class: String,
    },
    Effect {
        tx: TxId,
        #[serde(flatten)]
        effect: Effect,
    },
    /// Scenario-level marker, e.g. the moment an attack takes hold.
    Note {
        label: String,
        value: serde_json::Value,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: Millis,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub node: Option<usize>,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub header: TraceHeader,
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        serde_json::to_writer(&mut w, &self.header)?;
        w.write_all(b"\n")?;
        for e in &self.events {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = Vec::new();
        self.write_jsonl(&mut out).expect("writing to memory");
        String::from_utf8(out).expect("json is utf-8")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Trace, TraceError> {
        let mut lines = r.lines();
        let first = lines.next().ok_or(TraceError::Empty)??;
        let raw: serde_json::Value = serde_json::from_str(&first).map_err(|e| TraceError::Parse {
            line: 1,
            message: e.to_string(),
        })?;
        let schema = raw.get("schema").and_then(|s| s.as_str()).unwrap_or_default();
        if schema != SCHEMA {
            return Err(TraceError::SchemaMismatch { found: schema.to_string() });
        }
        let header: TraceHeader = serde_json::from_value(raw).map_err(|e| TraceError::Parse {
            line: 1,
            message: e.to_string(),
        })?;
        let mut events = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let e = serde_json::from_str(&line).map_err(|e| TraceError::Parse {
                line: i + 2,
                message: e.to_string(),
            })?;
            events.push(e);
        }
        Ok(Trace { header, events })
    }

    pub fn blocks(&self) -> impl Iterator<Item = (Millis, &BlockSummary)> {
        self.events.iter().filter_map(|e| match &e.body {
            EventBody::BlockProduced(b) => Some((e.time, b)),
            _ => None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::name::name;

    fn sample() -> Trace {
        Trace {
            header: TraceHeader::new("t", 9, None),
            events: vec![
                TraceEvent {
                    time: 0,
                    node: Some(1),
                    body: EventBody::Deliver {
                        from: 0,
                        msg: "handshake".into(),
                        number: None,
                    },
                },
                TraceEvent {
                    time: 500,
                    node: Some(0),
                    body: EventBody::Effect {
                        tx: TxId(u64::MAX),
                        effect: Effect::Draw {
                            contract: name("eoswin"),
                            value: 42,
                        },
                    },
                },
                TraceEvent {
                    time: 500,
                    node: None,
                    body: EventBody::Note {
                        label: "x".into(),
                        value: serde_json::json!({"a": 1}),
                    },
                },
            ],
        }
    }

    #[test]
    fn jsonl_round_trip_keeps_large_ids() {
        let t = sample();
        let text = t.to_jsonl();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("{\"schema\":\"eosim-trace/1\""));
        let back = Trace::read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let text = "{\"schema\":\"other/2\",\"scenario\":\"x\",\"seed\":1,\"spec\":null}\n";
        assert!(matches!(Trace::read_jsonl(text.as_bytes()), Err(TraceError::SchemaMismatch { .. })));
    }

    #[test]
    fn bad_event_line_is_located() {
        let mut text = sample().to_jsonl();
        text.push_str("{not json}\n");
        match Trace::read_jsonl(text.as_bytes()) {
            Err(TraceError::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
    }
}
