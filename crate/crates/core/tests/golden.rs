//! Golden traces: each bundled scenario listed in `golden/digests.txt` must
//! reproduce its recorded trace digest and event count.

use eosim::hash::fnv1a64;
use eosim::scenarios::{bundled, run_scenario, ScenarioSpec};

fn digest(name: &str) -> (String, usize) {
    let spec = ScenarioSpec::parse(bundled::text(name).expect("bundled")).unwrap();
    let out = run_scenario(&spec).unwrap();
    (format!("{:016x}", fnv1a64(out.trace.to_jsonl().as_bytes())), out.trace.events.len())
}

fn recorded() -> Vec<(String, String, usize)> {
    include_str!("golden/digests.txt")
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (f[0].to_string(), f[1].to_string(), f[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn golden_digests_match() {
    let golden = recorded();
    assert!(golden.len() >= 5);
    let mut mismatches = Vec::new();
    for (name, hex, events) in &golden {
        let (got_hex, got_events) = digest(name);
        if (&got_hex, got_events) != (hex, *events) {
            mismatches.push(format!("{name} {got_hex} {got_events}"));
        }
    }
    assert!(mismatches.is_empty(), "traces changed; current values:\n{}", mismatches.join("\n"));
}
