//! Minimum-delay broadcast.
//!
//! The search allows one transmitter per stage, but unlike unicast that
//! transmitter may be any node already holding the packet, and a node may
//! transmit in several stages. It branches on the transmitter at every stage;
//! each branch runs until one more node decodes, so with `n` receivers there
//! are exactly `n!` complete transmitter sequences.
//!
//! One transmitter per stage is not always optimal. Splitting a stage between
//! two transmitters can let a later node accumulate earlier, and the
//! per-ordering LP in [`crate::lp`] then finds a shorter broadcast. On random
//! topologies this happens in roughly one instance in six.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::network::{MutualInfoState, NodeId, Topology};
use crate::unicast::{earliest, time_to_decode, Stage};

pub const DEFAULT_BROADCAST_CAP: usize = 10;

/// Mutual information plus the set of nodes that have entered the decoding
/// order. A node can physically hold `i_max` bits (decoded in the
/// information state) before it is informed: several nodes may finish at the
/// same instant, and each one still gets its own, zero-length, stage.
#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastState {
    pub info: MutualInfoState,
    informed: Vec<bool>,
    order: Vec<NodeId>,
}

impl BroadcastState {
    pub fn initial(topo: &Topology) -> Self {
        let mut informed = vec![false; topo.node_count()];
        informed[topo.source()] = true;
        BroadcastState {
            info: MutualInfoState::initial(topo),
            informed,
            order: vec![topo.source()],
        }
    }

    pub fn is_informed(&self, node: NodeId) -> bool {
        self.informed[node]
    }

    /// Informed nodes, source first, in the order they decoded.
    pub fn informed_order(&self) -> &[NodeId] {
        &self.order
    }

    pub fn is_complete(&self) -> bool {
        self.order.len() == self.informed.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub decoder: NodeId,
    pub duration: f64,
    pub state: BroadcastState,
}

/// `transmitter` sends until the next uninformed node decodes.
pub fn broadcast_run(topo: &Topology, state: &BroadcastState, transmitter: NodeId) -> Result<Run> {
    if transmitter >= topo.node_count() || !state.informed[transmitter] {
        return Err(Error::NotDecoded(transmitter));
    }
    if state.is_complete() {
        return Err(invalid("every node already holds the packet"));
    }
    let times = (0..topo.node_count())
        .filter(|&j| !state.informed[j])
        .map(|j| (j, time_to_decode(state.info.deficit(j), topo.capacity(transmitter, j))));
    let (decoder, duration) =
        earliest(times).ok_or_else(|| Error::Infeasible(format!("node {transmitter} reaches no uninformed node")))?;
    let mut next = state.clone();
    next.info.accumulate_in_place(topo, transmitter, duration)?;
    next.info.mark_decoded(decoder);
    next.informed[decoder] = true;
    next.order.push(decoder);
    Ok(Run {
        decoder,
        duration,
        state: next,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BroadcastSolution {
    pub stages: Vec<Stage>,
    /// Every non-source node, in the order it decoded.
    pub decoding_order: Vec<NodeId>,
    pub delay: f64,
}

impl BroadcastSolution {
    /// Non-source nodes that transmit for a positive time, by first use.
    pub fn relay_set(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        for s in &self.stages {
            if s.transmitter != 0 && s.duration > 0.0 && !out.contains(&s.transmitter) {
                out.push(s.transmitter);
            }
        }
        out
    }

    /// Position of each stage's transmitter in the decoding order (source = 0).
    pub fn transmitter_ranks(&self) -> Vec<usize> {
        let mut order = vec![0];
        order.extend(&self.decoding_order);
        self.stages
            .iter()
            .map(|s| {
                order
                    .iter()
                    .position(|&n| n == s.transmitter)
                    .expect("transmitter decoded")
            })
            .collect()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "method": "broadcast",
            "relay_set": self.relay_set(),
            "stages": self.stages,
            "delay": self.delay,
            "decoding_order": self.decoding_order,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BroadcastOptions {
    pub prune: bool,
    /// Largest receiver count the search accepts.
    pub budget_cap: usize,
}

impl Default for BroadcastOptions {
    fn default() -> Self {
        BroadcastOptions {
            prune: true,
            budget_cap: DEFAULT_BROADCAST_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BroadcastStats {
    pub runs: u64,
    pub leaves: u64,
    pub pruned: u64,
}

struct Search<'a> {
    topo: &'a Topology,
    prune: bool,
    max_rate_into: Vec<f64>,
    stats: BroadcastStats,
    best: Option<(f64, Vec<Stage>)>,
    stages: Vec<Stage>,
}

impl Search<'_> {
    fn lower_bound(&self, state: &BroadcastState) -> f64 {
        (0..self.topo.node_count())
            .filter(|&j| !state.informed[j])
            .map(|j| time_to_decode(state.info.deficit(j), self.max_rate_into[j]))
            .fold(0.0, f64::max)
    }

    fn dfs(&mut self, state: &BroadcastState, elapsed: f64) {
        if state.is_complete() {
            self.stats.leaves += 1;
            // strict: among equal delays the first, lexicographically smallest,
            // transmitter sequence is kept
            if self.best.as_ref().is_none_or(|(d, _)| elapsed < *d) {
                self.best = Some((elapsed, self.stages.clone()));
            }
            return;
        }
        if self.prune {
            if let Some((best, _)) = &self.best {
                if elapsed + self.lower_bound(state) > best * (1.0 + 1e-9) {
                    self.stats.pruned += 1;
                    return;
                }
            }
        }
        let mut transmitters = state.order.clone();
        transmitters.sort_unstable();
        for tx in transmitters {
            self.stats.runs += 1;
            let Ok(run) = broadcast_run(self.topo, state, tx) else {
                continue;
            };
            self.stages.push(Stage {
                transmitter: tx,
                duration: run.duration,
                decoder: run.decoder,
            });
            self.dfs(&run.state, elapsed + run.duration);
            self.stages.pop();
        }
    }
}

pub fn solve_min_delay_broadcast(topo: &Topology) -> Result<BroadcastSolution> {
    solve_min_delay_broadcast_with(topo, &BroadcastOptions::default()).map(|(s, _)| s)
}

/// Depth-first search over transmitter sequences.
pub fn solve_min_delay_broadcast_with(
    topo: &Topology,
    opts: &BroadcastOptions,
) -> Result<(BroadcastSolution, BroadcastStats)> {
    let n = topo.node_count() - 1;
    if n > opts.budget_cap {
        return Err(Error::BudgetExceeded {
            what: "broadcast search",
            size: n,
            cap: opts.budget_cap,
        });
    }
    let max_rate_into: Vec<f64> = (0..topo.node_count())
        .map(|j| (0..topo.node_count()).map(|i| topo.capacity(i, j)).fold(0.0, f64::max))
        .collect();
    if let Some(j) = (1..topo.node_count()).find(|&j| max_rate_into[j] <= 0.0) {
        return Err(Error::Infeasible(format!("node {j} has no incoming link")));
    }
    let mut search = Search {
        topo,
        prune: opts.prune,
        max_rate_into,
        stats: BroadcastStats::default(),
        best: None,
        stages: Vec::with_capacity(n),
    };
    search.dfs(&BroadcastState::initial(topo), 0.0);
    let stats = search.stats;
    let (delay, stages) = search
        .best
        .ok_or_else(|| Error::Infeasible("no transmitter sequence reaches every node".into()))?;
    Ok((
        BroadcastSolution {
            decoding_order: stages.iter().map(|s| s.decoder).collect(),
            stages,
            delay,
        },
        stats,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{gen_random_topology, TopologyGenConfig};
    use crate::replay::replay_broadcast;

    fn topo(cap: Vec<Vec<f64>>) -> Topology {
        Topology::new(cap, 1.0).unwrap()
    }

    fn star(n: usize) -> Topology {
        let mut cap = vec![vec![0.0; n + 1]; n + 1];
        cap[0][1..=n].fill(1.0);
        for row in &mut cap[1..=n] {
            row[0] = 1.0;
        }
        topo(cap)
    }

    #[test]
    fn star_runs() {
        let t = star(3);
        let s0 = BroadcastState::initial(&t);
        let r1 = broadcast_run(&t, &s0, 0).unwrap();
        assert_eq!((r1.decoder, r1.duration), (1, 1.0));
        let r2 = broadcast_run(&t, &r1.state, 0).unwrap();
        assert_eq!((r2.decoder, r2.duration), (2, 0.0));
        // an informed node with no links still finds the already-full node
        let r3 = broadcast_run(&t, &r2.state, 1).unwrap();
        assert_eq!((r3.decoder, r3.duration), (3, 0.0));
        assert!(r3.state.is_complete());
        assert!(broadcast_run(&t, &r3.state, 0).is_err());
    }

    #[test]
    fn run_requires_informed_transmitter() {
        let t = star(2);
        assert!(matches!(
            broadcast_run(&t, &BroadcastState::initial(&t), 1),
            Err(Error::NotDecoded(1))
        ));
    }

    #[test]
    fn two_receivers() {
        let t = topo(vec![vec![0.0, 2.0, 1.0], vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]]);
        let r = broadcast_run(&t, &BroadcastState::initial(&t), 0).unwrap();
        assert_eq!((r.decoder, r.duration), (1, 0.5));
        let sol = solve_min_delay_broadcast(&t).unwrap();
        assert_eq!(sol.delay, 1.0);
        assert_eq!(sol.decoding_order, vec![1, 2]);
    }

    #[test]
    fn single_receiver() {
        let t = topo(vec![vec![0.0, 4.0], vec![1.0, 0.0]]);
        let sol = solve_min_delay_broadcast(&t).unwrap();
        assert_eq!(sol.delay, 0.25);
        assert_eq!(sol.stages.len(), 1);
    }

    #[test]
    fn star_delay_is_one_either_way() {
        for prune in [false, true] {
            let opts = BroadcastOptions {
                prune,
                ..Default::default()
            };
            let (sol, _) = solve_min_delay_broadcast_with(&star(4), &opts).unwrap();
            assert_eq!(sol.delay, 1.0);
            assert_eq!(sol.decoding_order, vec![1, 2, 3, 4]);
            replay_broadcast(&star(4), &sol.stages).unwrap();
        }
    }

    #[test]
    fn leaf_count_is_factorial() {
        let mut fact = 1u64;
        for n in 1..=6usize {
            fact *= n as u64;
            let t = gen_random_topology(&TopologyGenConfig::with_seed(n - 1, n as u64)).unwrap();
            let opts = BroadcastOptions {
                prune: false,
                ..Default::default()
            };
            let (_, stats) = solve_min_delay_broadcast_with(&t, &opts).unwrap();
            assert_eq!(stats.leaves, fact, "n = {n}");
        }
    }

    #[test]
    fn pruning_keeps_the_answer() {
        for seed in 0..25 {
            let t = gen_random_topology(&TopologyGenConfig::with_seed(4, seed)).unwrap();
            let full = solve_min_delay_broadcast_with(
                &t,
                &BroadcastOptions {
                    prune: false,
                    ..Default::default()
                },
            )
            .unwrap();
            let pruned = solve_min_delay_broadcast_with(&t, &BroadcastOptions::default()).unwrap();
            assert_eq!(full.0, pruned.0, "seed {seed}");
            assert!(pruned.1.leaves <= full.1.leaves);
            replay_broadcast(&t, &full.0.stages).unwrap();
        }
    }

    #[test]
    fn hub_is_reused() {
        // The source reaches everyone well; node 1 decodes first but has poor
        // links, so the source keeps transmitting.
        let t = topo(vec![
            vec![0.0, 2.0, 1.0, 1.0],
            vec![0.1, 0.0, 0.1, 0.1],
            vec![0.1, 0.1, 0.0, 0.1],
            vec![0.1, 0.1, 0.1, 0.0],
        ]);
        let sol = solve_min_delay_broadcast(&t).unwrap();
        assert_eq!(sol.delay, 1.0);
        assert_eq!(sol.transmitter_ranks(), vec![0, 0, 0]);
        assert!(sol.transmitter_ranks().iter().enumerate().any(|(j, &r)| r < j));
        assert!(sol.relay_set().is_empty());
    }

    #[test]
    fn unreachable_node_is_infeasible() {
        let t = topo(vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]]);
        assert!(matches!(solve_min_delay_broadcast(&t), Err(Error::Infeasible(_))));
    }

    #[test]
    fn budget_cap() {
        let t = star(5);
        let opts = BroadcastOptions {
            budget_cap: 4,
            ..Default::default()
        };
        assert!(matches!(
            solve_min_delay_broadcast_with(&t, &opts),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn time_sharing_within_a_stage_can_be_faster() {
        // The search switches transmitter only at decode events. Here the
        // source and node 1 splitting the stage that ends with node 2
        // decoding lets node 3 gather from node 1 early, which no
        // single-transmitter stage sequence matches.
        let t = gen_random_topology(&TopologyGenConfig::with_seed(3, 2013)).unwrap();
        let searched = solve_min_delay_broadcast(&t).unwrap();
        let mut state = MutualInfoState::initial(&t);
        let shared = [
            (0, 15.121837318922084),
            (0, 43.62324358119845),
            (1, 17.760239212561487),
            (2, 159.19711489956822),
        ];
        for (tx, dur) in shared {
            state.accumulate_in_place(&t, tx, dur).unwrap();
        }
        assert_eq!(state.decoded_count(), t.node_count());
        let total: f64 = shared.iter().map(|s| s.1).sum();
        assert!(total < searched.delay * (1.0 - 1e-3), "{total} vs {}", searched.delay);
    }
}
