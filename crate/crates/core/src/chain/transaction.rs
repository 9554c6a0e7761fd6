use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chain::permission::{KeyId, PermissionLevel};
use crate::hash::CanonicalWriter;
use crate::name::AccountName;
use crate::Millis;

/// Scalar payload value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(u64),
    Name(AccountName),
    Str(String),
}

impl Value {
    pub fn as_int(&self) -> Option<u64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    /// Names and strings that spell a valid name both resolve to an account.
    pub fn as_name(&self) -> Option<AccountName> {
        match self {
            Value::Name(n) => Some(n.clone()),
            Value::Str(s) => AccountName::new(s.clone()).ok(),
            Value::Int(_) => None,
        }
    }

    pub fn as_text(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::Name(n) => n.to_string(),
            Value::Str(s) => s.clone(),
        }
    }

    fn encode(&self, w: &mut CanonicalWriter) {
        match self {
            Value::Int(v) => {
                w.u8(0).u64(*v);
            }
            Value::Str(s) => {
                w.u8(1).str(s);
            }
            Value::Name(n) => {
                w.u8(2).str(n.as_str());
            }
        }
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v)
    }
}

impl From<AccountName> for Value {
    fn from(v: AccountName) -> Self {
        Value::Name(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Str(v.to_string())
    }
}

pub type Payload = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub contract: AccountName,
    pub name: String,
    pub payload: Payload,
    pub authorizations: Vec<PermissionLevel>,
}

impl Action {
    pub fn new(contract: AccountName, name: impl Into<String>) -> Self {
        Self {
            contract,
            name: name.into(),
            payload: Payload::new(),
            authorizations: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.payload.insert(key.to_string(), value.into());
        self
    }

    pub fn auth(mut self, level: PermissionLevel) -> Self {
        self.authorizations.push(level);
        self
    }

    pub fn field(&self, key: &str) -> Option<&Value> {
        self.payload.get(key)
    }

    pub fn has_auth(&self, actor: &AccountName) -> bool {
        self.authorizations.iter().any(|l| &l.actor == actor)
    }

    fn encode(&self, w: &mut CanonicalWriter) {
        w.str(self.contract.as_str()).str(&self.name);
        w.u32(self.authorizations.len() as u32);
        for level in &self.authorizations {
            w.str(level.actor.as_str()).str(level.permission.as_str());
        }
        w.u32(self.payload.len() as u32);
        for (k, v) in &self.payload {
            w.str(k);
            v.encode(w);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TxKind {
    Immediate,
    Deferred { delay_ms: Millis, sponsor: AccountName },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TxId(pub u64);

impl fmt::Display for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// An ordered, atomically executed bundle of actions.
///
/// The id covers every field except `signatures`, in the order written by
/// [`Transaction::canonical_bytes`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub actions: Vec<Action>,
    pub ref_block_num: u64,
    pub expiration: Millis,
    pub kind: TxKind,
    /// Free uniqueness field; generated transactions derive it from their origin.
    pub nonce: u64,
    pub signatures: BTreeSet<KeyId>,
}

impl Transaction {
    pub fn immediate(actions: Vec<Action>, ref_block_num: u64, expiration: Millis, nonce: u64) -> Self {
        Self {
            actions,
            ref_block_num,
            expiration,
            kind: TxKind::Immediate,
            nonce,
            signatures: BTreeSet::new(),
        }
    }

    pub fn signed(mut self, key: KeyId) -> Self {
        self.signatures.insert(key);
        self
    }

    /// Canonical encoding:
    ///
    /// ```text
    /// u64 nonce | u64 ref_block_num | u64 expiration
    /// u8 kind (0 immediate, 1 deferred) [u64 delay_ms | str sponsor]
    /// u32 action count, then per action:
    ///   str contract | str name
    ///   u32 auth count, then (str actor | str permission)*
    ///   u32 payload count, then (str key | u8 tag | value)* in key order
    ///     tag 0: u64, tag 1: str, tag 2: str (account name)
    /// ```
    ///
    /// Integers are little-endian; `str` is a u32 byte length then UTF-8.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut w = CanonicalWriter::new();
        w.u64(self.nonce).u64(self.ref_block_num).u64(self.expiration);
        match &self.kind {
            TxKind::Immediate => {
                w.u8(0);
            }
            TxKind::Deferred { delay_ms, sponsor } => {
                w.u8(1).u64(*delay_ms).str(sponsor.as_str());
            }
        }
        w.u32(self.actions.len() as u32);
        for a in &self.actions {
            a.encode(&mut w);
        }
        w.into_bytes()
    }

    pub fn id(&self) -> TxId {
        TxId(crate::hash::fnv1a64(&self.canonical_bytes()))
    }

    /// NET cost in 8-byte words, rounded up.
    pub fn net_words(&self) -> u64 {
        (self.canonical_bytes().len() as u64).div_ceil(8)
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn is_deferred(&self) -> bool {
        matches!(self.kind, TxKind::Deferred { .. })
    }

    /// The account billed for CPU/NET: the sponsor of a deferred transaction,
    /// otherwise the first authorizer of the first action.
    pub fn payer(&self) -> Option<&AccountName> {
        match &self.kind {
            TxKind::Deferred { sponsor, .. } => Some(sponsor),
            TxKind::Immediate => self
                .actions
                .first()
                .and_then(|a| a.authorizations.first())
                .map(|l| &l.actor),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::name::name;

    fn transfer(nonce: u64) -> Transaction {
        Transaction::immediate(
            vec![Action::new(name("eosio.token"), "transfer")
                .with("from", name("alice"))
                .with("to", name("bob"))
                .with("quantity", 100)
                .with("memo", "hi")
                .auth(PermissionLevel::active(name("alice")))],
            3,
            60_000,
            nonce,
        )
    }

    #[test]
    fn id_is_stable_and_ignores_signatures() {
        let a = transfer(1);
        let b = transfer(1).signed(KeyId::new("K"));
        assert_eq!(a.id(), b.id());
        assert_eq!(a.id(), transfer(1).id());
        assert_ne!(a.id(), transfer(2).id());
    }

    #[test]
    fn canonical_layout_prefix() {
        let tx = Transaction::immediate(vec![Action::new(name("a"), "b")], 7, 9, 5);
        let bytes = tx.canonical_bytes();
        let mut expect = Vec::new();
        expect.extend_from_slice(&5u64.to_le_bytes());
        expect.extend_from_slice(&7u64.to_le_bytes());
        expect.extend_from_slice(&9u64.to_le_bytes());
        expect.push(0);
        expect.extend_from_slice(&1u32.to_le_bytes());
        expect.extend_from_slice(&1u32.to_le_bytes());
        expect.push(b'a');
        expect.extend_from_slice(&1u32.to_le_bytes());
        expect.push(b'b');
        expect.extend_from_slice(&0u32.to_le_bytes());
        expect.extend_from_slice(&0u32.to_le_bytes());
        assert_eq!(bytes, expect);
        assert_eq!(tx.net_words(), (bytes.len() as u64).div_ceil(8));
    }

    #[test]
    fn value_tags_distinguish_types() {
        let a = Transaction::immediate(vec![Action::new(name("a"), "b").with("x", 1)], 0, 1, 0);
        let b = Transaction::immediate(vec![Action::new(name("a"), "b").with("x", "1")], 0, 1, 0);
        assert_ne!(a.id(), b.id());
    }

    #[test]
    fn payer_rules() {
        let mut tx = transfer(0);
        assert_eq!(tx.payer(), Some(&name("alice")));
        tx.kind = TxKind::Deferred {
            delay_ms: 10,
            sponsor: name("dapp"),
        };
        assert_eq!(tx.payer(), Some(&name("dapp")));
    }
}
