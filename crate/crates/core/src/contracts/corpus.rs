//! Bundled contract descriptors: the labeled linter corpus and the contracts
//! used by attack scenarios.

use crate::contracts::descriptor::{self, ParsedContract};

/// `(name, descriptor text)` for every bundled contract, sorted by name.
pub const FILES: &[(&str, &str)] = &[
    ("batch-overflow-safe", include_str!("../../corpus/batch-overflow-safe.contract")),
    ("batch-overflow-vuln", include_str!("../../corpus/batch-overflow-vuln.contract")),
    ("benign", include_str!("../../corpus/benign.contract")),
    ("cpu-victim", include_str!("../../corpus/cpu-victim.contract")),
    ("drain", include_str!("../../corpus/drain.contract")),
    ("fake-token", include_str!("../../corpus/fake-token.contract")),
    ("fakeeos-safe", include_str!("../../corpus/fakeeos-safe.contract")),
    ("fakeeos-vuln", include_str!("../../corpus/fakeeos-vuln.contract")),
    ("fakenotify-safe", include_str!("../../corpus/fakenotify-safe.contract")),
    ("fakenotify-vuln", include_str!("../../corpus/fakenotify-vuln.contract")),
    ("multi-vuln", include_str!("../../corpus/multi-vuln.contract")),
    ("notify-relay", include_str!("../../corpus/notify-relay.contract")),
    ("ram-victim", include_str!("../../corpus/ram-victim.contract")),
    ("ram-victim-quota", include_str!("../../corpus/ram-victim-quota.contract")),
    ("random-safe", include_str!("../../corpus/random-safe.contract")),
    ("random-vuln", include_str!("../../corpus/random-vuln.contract")),
    ("spam", include_str!("../../corpus/spam.contract")),
    ("spam-swapped", include_str!("../../corpus/spam-swapped.contract")),
    ("withdraw-auth-safe", include_str!("../../corpus/withdraw-auth-safe.contract")),
    ("withdraw-noauth-vuln", include_str!("../../corpus/withdraw-noauth-vuln.contract")),
];

pub fn text(name: &str) -> Option<&'static str> {
    FILES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Parses a bundled contract. Panics on an unknown name; the corpus is
/// validated by tests.
pub fn load(name: &str) -> ParsedContract {
    let t = text(name).unwrap_or_else(|| panic!("no bundled contract {name}"));
    descriptor::parse(t).unwrap_or_else(|e| panic!("bundled contract {name}: {e}"))
}
