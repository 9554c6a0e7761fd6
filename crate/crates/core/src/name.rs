//! Account names.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const MAX_NAME_LEN: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NameError {
    #[error("invalid account name {0:?}: must be 1-12 characters from a-z, 1-5 and '.'")]
    InvalidName(String),
}

/// A 1 to 12 character account identifier over `a-z`, `1-5` and `.`.
///
/// A dot may not lead or trail the name. Ordering is plain lexicographic
/// byte order, which is what schedule tie-breaks rely on.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AccountName(String);

impl AccountName {
    pub fn new(value: impl Into<String>) -> Result<Self, NameError> {
        let value = value.into();
        if Self::is_valid(&value) {
            Ok(Self(value))
        } else {
            Err(NameError::InvalidName(value))
        }
    }

    pub fn is_valid(value: &str) -> bool {
        let bytes = value.as_bytes();
        if bytes.is_empty() || bytes.len() > MAX_NAME_LEN {
            return false;
        }
        if bytes[0] == b'.' || bytes[bytes.len() - 1] == b'.' {
            return false;
        }
        bytes
            .iter()
            .all(|&b| b.is_ascii_lowercase() || (b'1'..=b'5').contains(&b) || b == b'.')
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Build a name from a literal known to be valid. Panics otherwise.
pub fn name(value: &str) -> AccountName {
    AccountName::new(value).unwrap_or_else(|e| panic!("{e}"))
}

impl fmt::Display for AccountName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for AccountName {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

impl AsRef<str> for AccountName {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl Serialize for AccountName {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for AccountName {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        AccountName::new(raw).map_err(serde::de::Error::custom)
    }
}

/// Deterministic name for the `index`-th generated account with `prefix`.
///
/// Suffix digits are drawn from `a-z`, so names stay valid for any prefix
/// of up to 8 characters.
pub fn generated(prefix: &str, index: usize) -> AccountName {
    let mut suffix = Vec::new();
    let mut n = index;
    for _ in 0..3 {
        suffix.push(b'a' + (n % 26) as u8);
        n /= 26;
    }
    suffix.reverse();
    let mut raw = prefix.to_string();
    raw.push_str(std::str::from_utf8(&suffix).expect("ascii"));
    name(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_valid_names() {
        for ok in ["a", "alice12", "eosio", "eosio.token", "abcdefghij12", "z5"] {
            assert!(AccountName::new(ok).is_ok(), "{ok}");
        }
    }

    #[test]
    fn rejects_invalid_names() {
        for bad in ["", "ALICE", "alice6", "abcdefghijklm", ".eosio", "eosio.", "al ce", "bob0"] {
            assert_eq!(
                AccountName::new(bad),
                Err(NameError::InvalidName(bad.to_string())),
                "{bad}"
            );
        }
    }

    #[test]
    fn ordering_is_lexicographic() {
        let mut v = [name("bob"), name("alice"), name("alice1"), name("a")];
        v.sort();
        let s: Vec<_> = v.iter().map(|n| n.as_str()).collect();
        assert_eq!(s, ["a", "alice", "alice1", "bob"]);
    }

    #[test]
    fn generated_names_are_unique_and_valid() {
        let names: std::collections::BTreeSet<_> = (0..2000).map(|i| generated("user", i)).collect();
        assert_eq!(names.len(), 2000);
        assert_eq!(generated("bp", 0).as_str(), "bpaaa");
        assert_eq!(generated("bp", 27).as_str(), "bpabb");
    }
}
