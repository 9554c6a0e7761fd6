//! Scenario files shipped with the crate, addressable by name.

const BUNDLED: &[(&str, &str)] = &[
    ("baseline-60s", include_str!("../../scenarios/baseline-60s.toml")),
    ("blockdelay-attack", include_str!("../../scenarios/blockdelay-attack.toml")),
    ("blockdelay-control", include_str!("../../scenarios/blockdelay-control.toml")),
    ("burst-126", include_str!("../../scenarios/burst-126.toml")),
    ("cpu-exhaustion", include_str!("../../scenarios/cpu-exhaustion.toml")),
    ("cpu-exhaustion-2x", include_str!("../../scenarios/cpu-exhaustion-2x.toml")),
    ("cpu-exhaustion-control", include_str!("../../scenarios/cpu-exhaustion-control.toml")),
    ("eosbet-fakeeos", include_str!("../../scenarios/eosbet-fakeeos.toml")),
    ("eosbet-fakeeos-safe", include_str!("../../scenarios/eosbet-fakeeos-safe.toml")),
    ("eosbet-fakenotify", include_str!("../../scenarios/eosbet-fakenotify.toml")),
    ("eosbet-fakenotify-safe", include_str!("../../scenarios/eosbet-fakenotify-safe.toml")),
    ("eoswin-random", include_str!("../../scenarios/eoswin-random.toml")),
    ("eoswin-random-safe", include_str!("../../scenarios/eoswin-random-safe.toml")),
    ("fault-free-round", include_str!("../../scenarios/fault-free-round.toml")),
    ("finality-bft", include_str!("../../scenarios/finality-bft.toml")),
    ("finality-plain", include_str!("../../scenarios/finality-plain.toml")),
    ("late-joiner", include_str!("../../scenarios/late-joiner.toml")),
    ("ram-exhaustion", include_str!("../../scenarios/ram-exhaustion.toml")),
    ("ram-exhaustion-quota", include_str!("../../scenarios/ram-exhaustion-quota.toml")),
    ("ramsomware", include_str!("../../scenarios/ramsomware.toml")),
    ("ramsomware-nogrant", include_str!("../../scenarios/ramsomware-nogrant.toml")),
    ("ramsomware-noswap", include_str!("../../scenarios/ramsomware-noswap.toml")),
];

/// Names of all bundled scenarios, sorted.
pub fn names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

/// Text of the bundled scenario `name`.
pub fn text(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::ScenarioSpec;

    #[test]
    fn every_bundled_scenario_validates_under_its_own_name() {
        for n in names() {
            let spec = ScenarioSpec::parse(text(n).unwrap()).unwrap_or_else(|e| panic!("{n}: {e}"));
            assert_eq!(spec.name, n);
        }
    }
}
