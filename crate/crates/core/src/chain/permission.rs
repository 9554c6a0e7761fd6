use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::name::AccountName;

/// Nested `(account, permission)` authorities are followed at most this deep.
pub const MAX_PERMISSION_DEPTH: usize = 4;

/// Pseudo-permission a contract holds when it emits actions on its own.
pub const CODE_PERMISSION: &str = "eosio.code";

/// Opaque identifier of a signing key. Signatures are modelled as the set of
/// key ids a transaction asserts it was signed with.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct KeyId(pub String);

impl KeyId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }
}

impl fmt::Display for KeyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum PermissionName {
    Owner,
    Active,
    Custom(String),
}

impl PermissionName {
    pub fn custom(name: impl Into<String>) -> Self {
        let name = name.into();
        match name.as_str() {
            "owner" => Self::Owner,
            "active" => Self::Active,
            _ => Self::Custom(name),
        }
    }

    pub fn code() -> Self {
        Self::Custom(CODE_PERMISSION.to_string())
    }

    pub fn as_str(&self) -> &str {
        match self {
            Self::Owner => "owner",
            Self::Active => "active",
            Self::Custom(s) => s,
        }
    }
}

impl fmt::Display for PermissionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PermissionName {
    type Err = PermissionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() || s.chars().any(char::is_whitespace) {
            return Err(PermissionError::BadName(s.to_string()));
        }
        Ok(Self::custom(s))
    }
}

impl From<PermissionName> for String {
    fn from(p: PermissionName) -> Self {
        p.as_str().to_string()
    }
}

impl TryFrom<String> for PermissionName {
    type Error = PermissionError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// `actor@permission`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PermissionLevel {
    pub actor: AccountName,
    pub permission: PermissionName,
}

impl PermissionLevel {
    pub fn new(actor: AccountName, permission: PermissionName) -> Self {
        Self { actor, permission }
    }

    pub fn active(actor: AccountName) -> Self {
        Self::new(actor, PermissionName::Active)
    }
}

impl fmt::Display for PermissionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.actor, self.permission)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Authority {
    Key(KeyId),
    Account(PermissionLevel),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedAuthority {
    pub authority: Authority,
    pub weight: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PermissionError {
    #[error("threshold must be at least 1")]
    ZeroThreshold,
    #[error("authorization list is empty")]
    NoAuthorities,
    #[error("authority weights must be positive")]
    ZeroWeight,
    #[error("duplicate authority {0:?}")]
    DuplicateAuthority(Authority),
    #[error("total weight {total} can never reach threshold {threshold}")]
    Unsatisfiable { total: u64, threshold: u32 },
    #[error("invalid permission name {0:?}")]
    BadName(String),
}

/// A thresholded set of weighted authorities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permission {
    name: PermissionName,
    threshold: u32,
    authorizations: Vec<WeightedAuthority>,
}

impl Permission {
    pub fn new(
        name: PermissionName,
        threshold: u32,
        authorizations: Vec<WeightedAuthority>,
    ) -> Result<Self, PermissionError> {
        if threshold == 0 {
            return Err(PermissionError::ZeroThreshold);
        }
        if authorizations.is_empty() {
            return Err(PermissionError::NoAuthorities);
        }
        let mut seen = BTreeSet::new();
        let mut total = 0u64;
        for a in &authorizations {
            if a.weight == 0 {
                return Err(PermissionError::ZeroWeight);
            }
            if !seen.insert(&a.authority) {
                return Err(PermissionError::DuplicateAuthority(a.authority.clone()));
            }
            total += u64::from(a.weight);
        }
        if total < u64::from(threshold) {
            return Err(PermissionError::Unsatisfiable { total, threshold });
        }
        Ok(Self {
            name,
            threshold,
            authorizations,
        })
    }

    /// Threshold-1 permission held by a single key.
    pub fn single_key(name: PermissionName, key: KeyId) -> Self {
        Self::new(
            name,
            1,
            vec![WeightedAuthority {
                authority: Authority::Key(key),
                weight: 1,
            }],
        )
        .expect("single key permission is valid")
    }

    pub fn name(&self) -> &PermissionName {
        &self.name
    }

    pub fn threshold(&self) -> u32 {
        self.threshold
    }

    pub fn authorizations(&self) -> &[WeightedAuthority] {
        &self.authorizations
    }

    /// Returns a copy with `authority` added at `weight`, or its weight
    /// replaced if already present.
    pub fn with_authority(&self, authority: Authority, weight: u32) -> Result<Self, PermissionError> {
        let mut auths: Vec<_> = self
            .authorizations
            .iter()
            .filter(|a| a.authority != authority)
            .cloned()
            .collect();
        auths.push(WeightedAuthority { authority, weight });
        auths.sort_by(|a, b| a.authority.cmp(&b.authority));
        Self::new(self.name.clone(), self.threshold, auths)
    }
}

/// What a transaction (or a contract acting on its own behalf) can prove:
/// signing keys plus directly granted permission levels such as
/// `contract@eosio.code`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signers {
    pub keys: BTreeSet<KeyId>,
    pub levels: BTreeSet<PermissionLevel>,
}

impl Signers {
    pub fn keys<I: IntoIterator<Item = KeyId>>(keys: I) -> Self {
        Self {
            keys: keys.into_iter().collect(),
            levels: BTreeSet::new(),
        }
    }

    pub fn code_of(contract: &AccountName) -> Self {
        let mut levels = BTreeSet::new();
        levels.insert(PermissionLevel::new(contract.clone(), PermissionName::code()));
        Self {
            keys: BTreeSet::new(),
            levels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuthError {
    #[error("account {0} does not exist")]
    UnknownAccount(AccountName),
    #[error("permission {0} does not exist")]
    UnknownPermission(PermissionLevel),
    #[error("permission recursion deeper than {MAX_PERMISSION_DEPTH} at {0}")]
    RecursionDepthExceeded(PermissionLevel),
}

/// Looks up the permission table of an account. Implemented by the ledger
/// and by the per-transaction overlay.
pub trait PermissionSource {
    fn permission(&self, level: &PermissionLevel) -> Result<&Permission, AuthError>;
}

/// True iff the weights of satisfied authorities of `level` reach its
/// threshold. Nested account authorities are resolved recursively, at most
/// [`MAX_PERMISSION_DEPTH`] levels below `level`.
pub fn satisfies<S: PermissionSource + ?Sized>(
    source: &S,
    level: &PermissionLevel,
    signers: &Signers,
) -> Result<bool, AuthError> {
    satisfies_at(source, level, signers, 0)
}

fn satisfies_at<S: PermissionSource + ?Sized>(
    source: &S,
    level: &PermissionLevel,
    signers: &Signers,
    depth: usize,
) -> Result<bool, AuthError> {
    if signers.levels.contains(level) {
        return Ok(true);
    }
    if depth > MAX_PERMISSION_DEPTH {
        return Err(AuthError::RecursionDepthExceeded(level.clone()));
    }
    let permission = source.permission(level)?;
    let threshold = u64::from(permission.threshold);
    let mut weight = 0u64;
    for wa in &permission.authorizations {
        let ok = match &wa.authority {
            Authority::Key(k) => signers.keys.contains(k),
            Authority::Account(nested) => {
                if signers.levels.contains(nested) {
                    true
                } else if nested.permission == PermissionName::code() {
                    // eosio.code is granted, never derived from keys.
                    false
                } else {
                    satisfies_at(source, nested, signers, depth + 1)?
                }
            }
        };
        if ok {
            weight += u64::from(wa.weight);
            if weight >= threshold {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::name::name;
    use std::collections::BTreeMap;

    struct Table(BTreeMap<PermissionLevel, Permission>);

    impl PermissionSource for Table {
        fn permission(&self, level: &PermissionLevel) -> Result<&Permission, AuthError> {
            self.0
                .get(level)
                .ok_or_else(|| AuthError::UnknownPermission(level.clone()))
        }
    }

    fn key(k: &str, w: u32) -> WeightedAuthority {
        WeightedAuthority {
            authority: Authority::Key(KeyId::new(k)),
            weight: w,
        }
    }

    fn acct(a: &str, w: u32) -> WeightedAuthority {
        WeightedAuthority {
            authority: Authority::Account(PermissionLevel::active(name(a))),
            weight: w,
        }
    }

    #[test]
    fn constructor_rejects_bad_permissions() {
        let p = PermissionName::Active;
        assert_eq!(Permission::new(p.clone(), 0, vec![key("k", 1)]), Err(PermissionError::ZeroThreshold));
        assert_eq!(Permission::new(p.clone(), 1, vec![]), Err(PermissionError::NoAuthorities));
        assert_eq!(
            Permission::new(p.clone(), 3, vec![key("a", 1), key("b", 1)]),
            Err(PermissionError::Unsatisfiable { total: 2, threshold: 3 })
        );
        assert!(matches!(
            Permission::new(p, 1, vec![key("a", 1), key("a", 2)]),
            Err(PermissionError::DuplicateAuthority(_))
        ));
    }

    #[test]
    fn weighted_threshold() {
        let alice = PermissionLevel::active(name("alice"));
        let perm = Permission::new(PermissionName::Active, 2, vec![key("K1", 1), key("K2", 1)]).unwrap();
        let t = Table([(alice.clone(), perm)].into_iter().collect());
        let both = Signers::keys([KeyId::new("K1"), KeyId::new("K2")]);
        let one = Signers::keys([KeyId::new("K1")]);
        assert_eq!(satisfies(&t, &alice, &both), Ok(true));
        assert_eq!(satisfies(&t, &alice, &one), Ok(false));
    }

    #[test]
    fn nested_account_authority() {
        // alice@active delegates to bob@active; bob@active is key KB.
        let alice = PermissionLevel::active(name("alice"));
        let bob = PermissionLevel::active(name("bob"));
        let t = Table(
            [
                (alice.clone(), Permission::new(PermissionName::Active, 1, vec![acct("bob", 1)]).unwrap()),
                (bob, Permission::new(PermissionName::Active, 1, vec![key("KB", 1)]).unwrap()),
            ]
            .into_iter()
            .collect(),
        );
        assert_eq!(satisfies(&t, &alice, &Signers::keys([KeyId::new("KB")])), Ok(true));
        assert_eq!(satisfies(&t, &alice, &Signers::keys([KeyId::new("KA")])), Ok(false));
    }

    #[test]
    fn cycles_hit_depth_cap() {
        let a = PermissionLevel::active(name("a"));
        let b = PermissionLevel::active(name("b"));
        let t = Table(
            [
                (a.clone(), Permission::new(PermissionName::Active, 1, vec![acct("b", 1)]).unwrap()),
                (b, Permission::new(PermissionName::Active, 1, vec![acct("a", 1)]).unwrap()),
            ]
            .into_iter()
            .collect(),
        );
        assert!(matches!(
            satisfies(&t, &a, &Signers::default()),
            Err(AuthError::RecursionDepthExceeded(_))
        ));
    }

    #[test]
    fn code_permission_is_granted_not_derived() {
        let victim = PermissionLevel::active(name("victim"));
        let grant = WeightedAuthority {
            authority: Authority::Account(PermissionLevel::new(name("evil"), PermissionName::code())),
            weight: 1,
        };
        let t = Table(
            [(victim.clone(), Permission::new(PermissionName::Active, 1, vec![key("KV", 1), grant]).unwrap())]
                .into_iter()
                .collect(),
        );
        assert_eq!(satisfies(&t, &victim, &Signers::code_of(&name("evil"))), Ok(true));
        assert_eq!(satisfies(&t, &victim, &Signers::code_of(&name("other"))), Ok(false));
    }

    #[test]
    fn unknown_permission() {
        let t = Table(BTreeMap::new());
        assert!(matches!(
            satisfies(&t, &PermissionLevel::active(name("x")), &Signers::default()),
            Err(AuthError::UnknownPermission(_))
        ));
    }
}
