//! Runs a scenario end to end and condenses its trace into a summary.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::chain::state::ChainState;
use crate::chain::Ledger;
use crate::metrics::{self, MetricsReport, DEFAULT_WINDOW_MS};
use crate::netsim::{NetError, NodeId, SimNet};
use crate::scenarios::attacks::driver_for;
use crate::scenarios::genesis::build_genesis;
use crate::scenarios::spec::{ConfigError, ProducersSpec, ScenarioSpec, TopologyShape};
use crate::scenarios::workload::Workload;
use crate::trace::{EventBody, Trace, TraceHeader};
use crate::Millis;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("network: {0}")]
    Net(#[from] NetError),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug)]
pub struct RunOutput {
    pub trace: Trace,
    pub summary: Summary,
    pub genesis: Ledger,
    /// Final ledger of node 0.
    pub ledger: Ledger,
    /// Final chain state of node 0.
    pub node0: ChainState,
}

/// Headline results of a run. Derived from the trace alone, so a persisted
/// trace always reproduces it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub seed: u64,
    pub events: usize,
    pub metrics: Option<MetricsReport>,
    pub outcome: Option<Json>,
    pub final_state: Option<Json>,
}

pub fn summarize(trace: &Trace) -> Summary {
    let note = |label: &str| {
        trace.events.iter().rev().find_map(|e| match &e.body {
            EventBody::Note { label: l, value } if l == label => Some(value.clone()),
            _ => None,
        })
    };
    Summary {
        scenario: trace.header.scenario.clone(),
        seed: trace.header.seed,
        events: trace.events.len(),
        metrics: metrics::compute(trace, DEFAULT_WINDOW_MS).ok(),
        outcome: note("outcome"),
        final_state: note("final"),
    }
}

/// Which node hosts each online producer: round robin over the nodes that
/// are connected from the start.
fn placement(spec: &ScenarioSpec) -> Vec<Vec<crate::name::AccountName>> {
    let t = &spec.topology;
    let online: Vec<NodeId> = (0..t.nodes).filter(|n| !t.late_joiners.iter().any(|j| j.node == *n)).collect();
    let mut hosted = vec![Vec::new(); t.nodes];
    let p = &spec.producers;
    let names = (0..p.count)
        .filter(|i| !p.offline.contains(i))
        .map(ProducersSpec::producer_name)
        .chain((0..p.standby).map(ProducersSpec::standby_name));
    for (k, n) in names.enumerate() {
        hosted[online[k % online.len()]].push(n);
    }
    hosted
}

fn links(shape: TopologyShape, n: usize) -> Vec<(NodeId, NodeId)> {
    match shape {
        TopologyShape::Mesh => (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect(),
        TopologyShape::Line => (1..n).map(|b| (b - 1, b)).collect(),
        TopologyShape::Ring if n > 2 => (0..n).map(|a| (a, (a + 1) % n)).collect(),
        TopologyShape::Ring => (1..n).map(|b| (b - 1, b)).collect(),
    }
}

fn build_net(spec: &ScenarioSpec, genesis: &Ledger) -> Result<SimNet, RunError> {
    let t = &spec.topology;
    let mut net = SimNet::new(spec.seed);
    net.set_drop_probability(t.drop_probability);
    net.set_production_end(spec.duration_ms);
    for producers in placement(spec) {
        net.add_node(ChainState::new(genesis.clone()), producers);
    }
    let late = |n: NodeId| t.late_joiners.iter().find(|j| j.node == n).map(|j| j.at_ms);
    for (a, b) in links(t.shape, t.nodes) {
        net.link_random(a, b, t.latency_ms[0], t.latency_ms[1])?;
        match (late(a), late(b)) {
            (None, None) => net.connect(a, b)?,
            (Some(at), None) => net.connect_at(at, a, b)?,
            (None, Some(at)) => net.connect_at(at, b, a)?,
            (Some(x), Some(y)) if x >= y => net.connect_at(x, a, b)?,
            (Some(_), Some(y)) => net.connect_at(y, b, a)?,
        }
    }
    let schedule = &genesis.consensus.schedule;
    net.record(
        None,
        EventBody::Schedule {
            round: schedule.round,
            producers: schedule.producers.clone(),
        },
    );
    Ok(net)
}

/// Irreversible blocks must agree across nodes and every ledger must pass
/// its own consistency checks.
fn check_invariants(net: &SimNet) -> Result<(), RunError> {
    let reference = &net.nodes()[0].chain;
    for node in net.nodes() {
        node.chain
            .ledger()
            .check_invariants()
            .map_err(|e| RunError::Invariant(format!("node {}: {e}", node.id)))?;
        let lib = node.chain.last_irreversible().min(reference.last_irreversible());
        if node.chain.block(lib).map(|b| b.id()) != reference.block(lib).map(|b| b.id()) {
            return Err(RunError::Invariant(format!("node {} finalized a different block {lib}", node.id)));
        }
    }
    Ok(())
}

pub fn run_scenario(spec: &ScenarioSpec) -> Result<RunOutput, RunError> {
    spec.validate()?;
    let genesis = build_genesis(spec)?;
    let mut net = build_net(spec, &genesis)?;
    let end: Millis = spec.duration_ms;
    let online: Vec<NodeId> = (0..spec.topology.nodes)
        .filter(|n| !spec.topology.late_joiners.iter().any(|j| j.node == *n))
        .collect();

    let mut workload = spec.workload.as_ref().map(|w| Workload::new(w, spec.seed, end));
    let mut driver = spec.attack.as_ref().map(|a| driver_for(a, end));
    let mut submitted = 0usize;
    loop {
        let tw = workload.as_ref().and_then(Workload::next_time).filter(|t| *t < end);
        let ta = driver.as_ref().and_then(|d| d.next_time()).filter(|t| *t < end);
        let t = match (tw, ta) {
            (None, None) => break,
            (Some(w), Some(a)) => w.min(a),
            (Some(w), None) => w,
            (None, Some(a)) => a,
        };
        if t > 0 {
            net.run_until(t - 1)?;
        }
        if tw == Some(t) {
            let w = workload.as_mut().expect("workload time came from a workload");
            let node = online[submitted % online.len()];
            let head = net.nodes()[node].chain.head_num();
            if let Some((at, tx)) = w.next_tx(head) {
                net.submit_at(at, node, tx, "legit")?;
                submitted += 1;
            }
        } else if let Some(d) = driver.as_mut() {
            d.fire(&mut net, t)?;
        }
    }
    net.run_until(end)?;
    net.drain()?;

    if let Some(d) = &driver {
        let outcome = d.outcome(&net, &genesis);
        net.note("outcome", outcome);
    }
    check_invariants(&net)?;
    let chain = &net.nodes()[0].chain;
    let heads: Vec<u64> = net.nodes().iter().map(|n| n.chain.head_num()).collect();
    let final_state = json!({
        "state_hash": format!("{:016x}", chain.ledger().state_hash()),
        "head": chain.head_num(),
        "last_irreversible": chain.last_irreversible(),
        "node_heads": heads,
    });
    let ledger = chain.ledger().clone();
    let node0 = chain.clone();
    net.note("final", final_state);

    let trace = Trace {
        header: TraceHeader::new(spec.name.clone(), spec.seed, Some(spec.to_toml())),
        events: net.take_trace(),
    };
    let summary = summarize(&trace);
    Ok(RunOutput {
        trace,
        summary,
        genesis,
        ledger,
        node0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(toml: &str) -> ScenarioSpec {
        ScenarioSpec::parse(toml).unwrap()
    }

    #[test]
    fn fault_free_run_produces_every_slot() {
        let s = spec("name = \"t\"\nduration_ms = 10000\nseed = 1\n");
        let out = run_scenario(&s).unwrap();
        let blocks: Vec<_> = out.trace.blocks().collect();
        assert_eq!(blocks.len(), 20);
        for (i, (_, b)) in blocks.iter().enumerate() {
            assert_eq!(b.number, i as u64 + 1);
            assert_eq!(b.timestamp, (i as u64 + 1) * 500);
            assert_eq!(b.drift, 0);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let s = spec(
            "name = \"d\"\nduration_ms = 5000\nseed = 9\n[topology]\nnodes = 3\nlatency_ms = [5, 40]\n\
             [[accounts]]\nname = \"alice\"\nbalance = 100000\ncpu_stake = 10000\nnet_stake = 10000\n\
             [[accounts]]\nname = \"bob\"\nbalance = 100000\ncpu_stake = 10000\nnet_stake = 10000\n\
             [workload]\ntx_rate = 20\nsenders = [\"alice\", \"bob\"]\n",
        );
        let a = run_scenario(&s).unwrap();
        let b = run_scenario(&s).unwrap();
        assert_eq!(a.trace.to_jsonl(), b.trace.to_jsonl());
        assert_eq!(a.summary, b.summary);
    }

    #[test]
    fn summary_is_reproduced_from_persisted_trace() {
        let s = spec("name = \"p\"\nduration_ms = 3000\nseed = 2\n");
        let out = run_scenario(&s).unwrap();
        let text = out.trace.to_jsonl();
        let back = Trace::read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(summarize(&back), out.summary);
    }

    #[test]
    fn ring_of_three_closes_the_loop() {
        assert_eq!(links(TopologyShape::Ring, 3), vec![(0, 1), (1, 2), (2, 0)]);
        assert_eq!(links(TopologyShape::Ring, 2), vec![(0, 1)]);
        assert_eq!(links(TopologyShape::Mesh, 3).len(), 3);
    }
}
