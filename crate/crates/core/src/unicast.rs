//! Minimum-delay unicast routing.
//!
//! For a fixed relay set the optimal schedule has a single transmitter per
//! stage: the node that decoded most recently. The source sends until the
//! first member of the set (or the destination) decodes, that node takes over,
//! and so on. The global optimum is the best such schedule over all `2^n`
//! relay subsets.

use std::cmp::Ordering;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::network::{MutualInfoState, NodeId, Topology};
use crate::DECODE_TOL;

/// Default refusal threshold for exponential searches.
pub const DEFAULT_SUBSET_CAP: usize = 24;

/// One transmitter holding the channel until `decoder` completes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    #[serde(rename = "tx")]
    pub transmitter: NodeId,
    #[serde(rename = "dur")]
    pub duration: f64,
    pub decoder: NodeId,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schedule {
    pub stages: Vec<Stage>,
    pub total_delay: f64,
}

impl Schedule {
    pub fn from_stages(stages: Vec<Stage>) -> Self {
        let total_delay = stages.iter().map(|s| s.duration).sum();
        Schedule { stages, total_delay }
    }

    /// Order in which the stage decoders completed.
    pub fn decoding_order(&self) -> Vec<NodeId> {
        self.stages.iter().map(|s| s.decoder).collect()
    }

    /// Relays that actually transmitted, in transmission order.
    pub fn relay_transmitters(&self, source: NodeId) -> Vec<NodeId> {
        self.stages
            .iter()
            .map(|s| s.transmitter)
            .filter(|&t| t != source)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnicastSolution {
    /// Relays that transmit, in decoding order.
    pub relay_set: Vec<NodeId>,
    pub schedule: Schedule,
    pub delay: f64,
}

impl UnicastSolution {
    pub(crate) fn from_schedule(topo: &Topology, schedule: Schedule) -> Self {
        UnicastSolution {
            relay_set: schedule.relay_transmitters(topo.source()),
            delay: schedule.total_delay,
            schedule,
        }
    }

    /// JSON object `{"relay_set", "stages", "delay"}`, optionally tagged with
    /// the producing method.
    pub fn to_json_value(&self, method: Option<&str>) -> serde_json::Value {
        let mut v = serde_json::json!({
            "relay_set": self.relay_set,
            "stages": self.schedule.stages,
            "delay": self.delay,
        });
        if let Some(m) = method {
            v["method"] = m.into();
        }
        v
    }
}

/// Picks the candidate that finishes first. Times within `DECODE_TOL`
/// (relative) of the minimum count as simultaneous; among those the smallest
/// node id wins. Returns `(node, min_time)`; `None` if no candidate can ever
/// finish.
pub(crate) fn earliest(candidates: impl Iterator<Item = (NodeId, f64)> + Clone) -> Option<(NodeId, f64)> {
    let t_min = candidates.clone().map(|(_, t)| t).fold(f64::INFINITY, f64::min);
    if !t_min.is_finite() {
        return None;
    }
    let limit = t_min + DECODE_TOL * t_min;
    candidates
        .filter(|&(_, t)| t <= limit)
        .map(|(n, _)| n)
        .min()
        .map(|n| (n, t_min))
}

/// Time for `node` to collect its missing bits at rate `rate`.
#[inline]
pub(crate) fn time_to_decode(deficit: f64, rate: f64) -> f64 {
    if deficit <= 0.0 {
        0.0
    } else if rate > 0.0 {
        deficit / rate
    } else {
        f64::INFINITY
    }
}

fn check_relays(topo: &Topology, relay_set: &[NodeId]) -> Result<()> {
    for &r in relay_set {
        if !topo.relays().contains(&r) {
            return Err(invalid(format!("node {r} is not a relay")));
        }
    }
    Ok(())
}

/// Greedy single-transmitter schedule restricted to `relay_set`.
///
/// Relays of the set that never get to transmit before the destination
/// decodes do not appear in the schedule.
pub fn greedy_schedule(topo: &Topology, relay_set: &[NodeId]) -> Result<Schedule> {
    check_relays(topo, relay_set)?;
    let d = topo.destination();
    let mut candidates: Vec<NodeId> = relay_set.to_vec();
    candidates.sort_unstable();
    candidates.dedup();
    candidates.push(d);

    let mut state = MutualInfoState::initial(topo);
    let mut transmitter = topo.source();
    let mut stages = Vec::new();
    while !state.is_decoded(d) {
        let times = candidates
            .iter()
            .filter(|&&c| !state.is_decoded(c))
            .map(|&c| (c, time_to_decode(state.deficit(c), topo.capacity(transmitter, c))));
        let Some((decoder, duration)) = earliest(times) else {
            return Err(Error::Infeasible(format!(
                "no remaining candidate can decode from node {transmitter}"
            )));
        };
        state.accumulate_in_place(topo, transmitter, duration)?;
        state.mark_decoded(decoder);
        stages.push(Stage {
            transmitter,
            duration,
            decoder,
        });
        transmitter = decoder;
    }
    Ok(Schedule::from_stages(stages))
}

/// [`greedy_schedule`] wrapped as a solution.
pub fn greedy_solution(topo: &Topology, relay_set: &[NodeId]) -> Result<UnicastSolution> {
    Ok(UnicastSolution::from_schedule(topo, greedy_schedule(topo, relay_set)?))
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    /// Abandon a subset once its elapsed time plus a lower bound on the
    /// remaining time exceeds the best delay found so far.
    pub prune: bool,
    pub parallel: bool,
    /// Largest relay count the search accepts.
    pub budget_cap: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            prune: false,
            parallel: true,
            budget_cap: DEFAULT_SUBSET_CAP,
        }
    }
}

impl SearchOptions {
    pub fn pruned() -> Self {
        SearchOptions {
            prune: true,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub subsets: u64,
    pub completed: u64,
    pub pruned: u64,
    pub infeasible: u64,
}

impl SearchStats {
    fn merge(self, o: SearchStats) -> SearchStats {
        SearchStats {
            subsets: self.subsets + o.subsets,
            completed: self.completed + o.completed,
            pruned: self.pruned + o.pruned,
            infeasible: self.infeasible + o.infeasible,
        }
    }
}

/// Best subset seen so far: its delay and the bitmask of relays that
/// actually transmitted (bit `r - 1` for relay `r`).
#[derive(Debug, Clone, Copy)]
struct Candidate {
    delay: f64,
    used: u64,
}

/// Delay first, then fewer relays, then the lexicographically smaller sorted
/// relay list.
fn candidate_cmp(a: &Candidate, b: &Candidate) -> Ordering {
    a.delay
        .total_cmp(&b.delay)
        .then_with(|| a.used.count_ones().cmp(&b.used.count_ones()))
        .then_with(|| {
            let diff = a.used ^ b.used;
            if diff == 0 {
                Ordering::Equal
            } else if a.used & (diff & diff.wrapping_neg()) != 0 {
                // equal cardinality: whoever holds the lowest differing relay
                // sorts first
                Ordering::Less
            } else {
                Ordering::Greater
            }
        })
}

fn better(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if candidate_cmp(&y, &x) == Ordering::Less { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

enum Outcome {
    Done(Candidate),
    Pruned,
    Infeasible,
}

/// Reusable buffers for the allocation-free greedy used inside the search.
#[derive(Default)]
struct Scratch {
    nodes: Vec<NodeId>,
    info: Vec<f64>,
    decoded: Vec<bool>,
}

/// Shared monotone upper bound on the optimal delay.
struct Incumbent(AtomicU64);

impl Incumbent {
    fn new(v: f64) -> Self {
        Incumbent(AtomicU64::new(v.to_bits()))
    }

    fn get(&self) -> f64 {
        f64::from_bits(self.0.load(AtomicOrdering::Relaxed))
    }

    // Positive doubles order the same way as their bit patterns.
    fn offer(&self, v: f64) {
        self.0.fetch_min(v.to_bits(), AtomicOrdering::Relaxed);
    }
}

struct SubsetSearch<'a> {
    topo: &'a Topology,
    max_rate_into_dest: f64,
    prune: bool,
    incumbent: Incumbent,
}

impl SubsetSearch<'_> {
    /// Same semantics as [`greedy_schedule`], tracking only the candidates.
    fn run(&self, mask: u64, scratch: &mut Scratch) -> Outcome {
        let topo = self.topo;
        let i_max = topo.i_max();
        let d = topo.destination();
        scratch.nodes.clear();
        let mut bits = mask;
        while bits != 0 {
            scratch.nodes.push(bits.trailing_zeros() as usize + 1);
            bits &= bits - 1;
        }
        scratch.nodes.push(d);
        let k = scratch.nodes.len();
        scratch.info.clear();
        scratch.info.resize(k, 0.0);
        scratch.decoded.clear();
        scratch.decoded.resize(k, false);

        let dest = k - 1;
        let mut tx = topo.source();
        let mut elapsed = 0.0;
        let mut used = 0u64;
        loop {
            let times = (0..k).filter(|&c| !scratch.decoded[c]).map(|c| {
                (
                    c,
                    time_to_decode(i_max - scratch.info[c], topo.capacity(tx, scratch.nodes[c])),
                )
            });
            let Some((chosen, duration)) = earliest(times) else {
                return Outcome::Infeasible;
            };
            for c in 0..k {
                if !scratch.decoded[c] {
                    scratch.info[c] += duration * topo.capacity(tx, scratch.nodes[c]);
                    if scratch.info[c] >= i_max * (1.0 - DECODE_TOL) {
                        scratch.info[c] = i_max;
                        scratch.decoded[c] = true;
                    }
                }
            }
            scratch.info[chosen] = i_max;
            scratch.decoded[chosen] = true;
            elapsed += duration;
            if tx != topo.source() {
                used |= 1 << (tx - 1);
            }
            if scratch.decoded[dest] {
                return Outcome::Done(Candidate { delay: elapsed, used });
            }
            tx = scratch.nodes[chosen];
            if self.prune {
                let remaining = time_to_decode(i_max - scratch.info[dest], self.max_rate_into_dest);
                if elapsed + remaining > self.incumbent.get() * (1.0 + 1e-9) {
                    return Outcome::Pruned;
                }
            }
        }
    }

    fn visit(&self, mask: u64, scratch: &mut Scratch) -> (Option<Candidate>, SearchStats) {
        let mut stats = SearchStats {
            subsets: 1,
            ..Default::default()
        };
        match self.run(mask, scratch) {
            Outcome::Done(c) => {
                stats.completed = 1;
                if self.prune {
                    self.incumbent.offer(c.delay);
                }
                (Some(c), stats)
            }
            Outcome::Pruned => {
                stats.pruned = 1;
                (None, stats)
            }
            Outcome::Infeasible => {
                stats.infeasible = 1;
                (None, stats)
            }
        }
    }
}

/// Exhaustive relay-subset search with the default options.
pub fn solve_min_delay(topo: &Topology) -> Result<UnicastSolution> {
    solve_min_delay_with(topo, &SearchOptions::default()).map(|(s, _)| s)
}

/// Exhaustive relay-subset search.
///
/// The returned solution is independent of `parallel` and `prune`: ties on
/// delay go to the smaller relay set, then to the lexicographically smaller one.
pub fn solve_min_delay_with(topo: &Topology, opts: &SearchOptions) -> Result<(UnicastSolution, SearchStats)> {
    let n = topo.n_relays();
    if n > opts.budget_cap || n > 63 {
        return Err(Error::BudgetExceeded {
            what: "relay subset search",
            size: n,
            cap: opts.budget_cap.min(63),
        });
    }
    let d = topo.destination();
    let max_rate_into_dest = (0..topo.node_count()).map(|i| topo.capacity(i, d)).fold(0.0, f64::max);
    let search = SubsetSearch {
        topo,
        max_rate_into_dest,
        prune: opts.prune,
        incumbent: Incumbent::new(f64::INFINITY),
    };
    if opts.prune {
        let all_relays = if n == 0 { 0 } else { u64::MAX >> (64 - n) };
        let mut scratch = Scratch::default();
        for seed in [0, all_relays] {
            if let Outcome::Done(c) = search.run(seed, &mut scratch) {
                search.incumbent.offer(c.delay);
            }
        }
    }

    let total: u64 = 1 << n;
    let (best, stats) = if opts.parallel {
        (0..total)
            .into_par_iter()
            .map_init(Scratch::default, |scratch, mask| search.visit(mask, scratch))
            .reduce(
                || (None, SearchStats::default()),
                |(a, sa), (b, sb)| (better(a, b), sa.merge(sb)),
            )
    } else {
        let mut scratch = Scratch::default();
        (0..total).fold((None, SearchStats::default()), |(a, sa), mask| {
            let (b, sb) = search.visit(mask, &mut scratch);
            (better(a, b), sa.merge(sb))
        })
    };
    let best = best.ok_or_else(|| Error::Infeasible("destination unreachable under every relay subset".into()))?;
    let relays: Vec<NodeId> = (1..=n).filter(|r| best.used & (1 << (r - 1)) != 0).collect();
    let solution = greedy_solution(topo, &relays)?;
    Ok((solution, stats))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPath {
    /// Source first, destination last.
    pub path: Vec<NodeId>,
    pub delay: f64,
}

impl ShortestPath {
    pub fn interior(&self) -> &[NodeId] {
        &self.path[1..self.path.len() - 1]
    }

    /// Hop-by-hop forwarding: each hop carries the whole packet over one link.
    pub fn hops(&self, topo: &Topology) -> Vec<Stage> {
        self.path
            .windows(2)
            .map(|w| Stage {
                transmitter: w[0],
                duration: topo.i_max() / topo.capacity(w[0], w[1]),
                decoder: w[1],
            })
            .collect()
    }

    pub fn to_json_value(&self, topo: &Topology) -> serde_json::Value {
        serde_json::json!({
            "method": "sp",
            "relay_set": self.interior(),
            "path": self.path,
            "stages": self.hops(topo),
            "delay": self.delay,
        })
    }
}

/// Traditional minimum-delay route: Dijkstra with link weight `i_max / C_ij`.
pub fn traditional_shortest_path(topo: &Topology) -> Result<ShortestPath> {
    let n = topo.node_count();
    let (s, d) = (topo.source(), topo.destination());
    let mut dist = vec![f64::INFINITY; n];
    let mut prev: Vec<Option<NodeId>> = vec![None; n];
    let mut done = vec![false; n];
    dist[s] = 0.0;
    // Dense graph: the O(V^2) array scan beats a heap; the scan also gives the
    // smaller-id tie-break for free.
    while let Some(u) = (0..n)
        .filter(|&v| !done[v] && dist[v].is_finite())
        .min_by(|&a, &b| dist[a].total_cmp(&dist[b]))
    {
        done[u] = true;
        if u == d {
            break;
        }
        for v in 0..n {
            let c = topo.capacity(u, v);
            if done[v] || c <= 0.0 {
                continue;
            }
            let alt = dist[u] + topo.i_max() / c;
            if alt < dist[v] {
                dist[v] = alt;
                prev[v] = Some(u);
            }
        }
    }
    if !dist[d].is_finite() {
        return Err(Error::Infeasible("destination unreachable".into()));
    }
    let mut path = vec![d];
    let mut cur = d;
    while let Some(p) = prev[cur] {
        path.push(p);
        cur = p;
    }
    path.reverse();
    Ok(ShortestPath { path, delay: dist[d] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{gen_random_topology, TopologyGenConfig};
    use crate::replay::replay_unicast;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn topo(cap: Vec<Vec<f64>>) -> Topology {
        Topology::new(cap, 1.0).unwrap()
    }

    /// s=0, r=1, d=2 with C_sr=2, C_sd=0.5, C_rd=2.
    fn one_relay() -> Topology {
        topo(vec![vec![0.0, 2.0, 0.5], vec![2.0, 0.0, 2.0], vec![0.5, 2.0, 0.0]])
    }

    #[test]
    fn empty_relay_set_is_direct() {
        let t = one_relay();
        let s = greedy_schedule(&t, &[]).unwrap();
        assert_eq!(s.stages.len(), 1);
        assert_eq!(
            s.stages[0],
            Stage {
                transmitter: 0,
                duration: 2.0,
                decoder: 2
            }
        );
        assert_eq!(s.total_delay, 2.0);
    }

    #[test]
    fn one_relay_hand_example() {
        let t = one_relay();
        let s = greedy_schedule(&t, &[1]).unwrap();
        assert_eq!(s.stages.len(), 2);
        assert_eq!(
            s.stages[0],
            Stage {
                transmitter: 0,
                duration: 0.5,
                decoder: 1
            }
        );
        assert_eq!(s.stages[1].transmitter, 1);
        assert_abs_diff_eq!(s.stages[1].duration, 0.375, epsilon = 1e-15);
        assert_abs_diff_eq!(s.total_delay, 0.875, epsilon = 1e-15);
        let sol = solve_min_delay(&t).unwrap();
        assert_eq!(sol.relay_set, vec![1]);
        assert_abs_diff_eq!(sol.delay, 0.875, epsilon = 1e-15);
    }

    #[test]
    fn zero_capacity_cut_is_infeasible() {
        let t = topo(vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]);
        assert!(matches!(greedy_schedule(&t, &[1]), Err(Error::Infeasible(_))));
        assert!(matches!(solve_min_delay(&t), Err(Error::Infeasible(_))));
        assert!(matches!(traditional_shortest_path(&t), Err(Error::Infeasible(_))));
    }

    #[test]
    fn rejects_non_relays() {
        let t = one_relay();
        assert!(greedy_schedule(&t, &[0]).is_err());
        assert!(greedy_schedule(&t, &[2]).is_err());
    }

    #[test]
    fn late_relays_are_pruned() {
        // Relay 1 is worse than the direct link: the destination decodes first.
        let t = topo(vec![vec![0.0, 0.5, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]);
        let sol = greedy_solution(&t, &[1]).unwrap();
        assert!(sol.relay_set.is_empty());
        assert_eq!(sol.delay, 1.0);
    }

    #[test]
    fn simultaneous_decode_prefers_smaller_id() {
        // C_s1 == C_sd: relay 1 and the destination finish together.
        let t = topo(vec![vec![0.0, 2.0, 2.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]);
        let s = greedy_schedule(&t, &[1]).unwrap();
        assert_eq!(
            s.stages,
            vec![Stage {
                transmitter: 0,
                duration: 0.5,
                decoder: 1
            }]
        );
        let sol = UnicastSolution::from_schedule(&t, s);
        assert!(sol.relay_set.is_empty());
    }

    #[test]
    fn equal_spacing_line_two_relays() {
        // positions 0,1,2,3 with C = 1/d^2
        let c = |i: usize, j: usize| {
            if i == j {
                0.0
            } else {
                1.0 / ((i as f64 - j as f64).powi(2))
            }
        };
        let t = topo((0..4).map(|i| (0..4).map(|j| c(i, j)).collect()).collect());
        let sol = solve_min_delay(&t).unwrap();
        let d0 = 1.0;
        let d1 = 1.0 - 0.25;
        let d2 = 1.0 - d0 / 9.0 - d1 / 4.0;
        assert_eq!(sol.relay_set, vec![1, 2]);
        assert_abs_diff_eq!(sol.delay, d0 + d1 + d2, epsilon = 1e-12);
    }

    #[test]
    fn shortest_path_examples() {
        let direct = topo(vec![vec![0.0, 4.0], vec![4.0, 0.0]]);
        let sp = traditional_shortest_path(&direct).unwrap();
        assert_eq!(sp.path, vec![0, 1]);
        assert_eq!(sp.delay, 0.25);

        let tri = topo(vec![vec![0.0, 4.0, 1.0], vec![4.0, 0.0, 4.0], vec![1.0, 4.0, 0.0]]);
        let sp = traditional_shortest_path(&tri).unwrap();
        assert_eq!(sp.path, vec![0, 1, 2]);
        assert_eq!(sp.delay, 0.5);
        assert_eq!(sp.interior(), &[1]);
    }

    #[test]
    fn shortest_path_tie_prefers_smaller_id() {
        // Two equal two-hop routes through relays 1 and 2.
        let t = topo(vec![
            vec![0.0, 2.0, 2.0, 0.0],
            vec![0.0, 0.0, 0.0, 2.0],
            vec![0.0, 0.0, 0.0, 2.0],
            vec![0.0, 0.0, 0.0, 0.0],
        ]);
        assert_eq!(traditional_shortest_path(&t).unwrap().path, vec![0, 1, 3]);
    }

    #[test]
    fn budget_cap_refuses() {
        let t = gen_random_topology(&TopologyGenConfig::with_seed(6, 0)).unwrap();
        let opts = SearchOptions {
            budget_cap: 5,
            ..Default::default()
        };
        assert!(matches!(
            solve_min_delay_with(&t, &opts),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn search_modes_agree() {
        for seed in 0..30 {
            let t = gen_random_topology(&TopologyGenConfig::with_seed(8, seed)).unwrap();
            let modes = [(false, false), (false, true), (true, false), (true, true)];
            let sols: Vec<_> = modes
                .iter()
                .map(|&(prune, parallel)| {
                    let o = SearchOptions {
                        prune,
                        parallel,
                        ..Default::default()
                    };
                    solve_min_delay_with(&t, &o).unwrap()
                })
                .collect();
            for (s, stats) in &sols {
                assert_eq!(s, &sols[0].0, "seed {seed}");
                assert_eq!(stats.subsets, 256);
            }
            assert_eq!(sols[0].1.pruned, 0);
        }
    }

    #[test]
    fn optimum_dominates_every_subset_and_shortest_path() {
        for seed in 0..40 {
            let t = gen_random_topology(&TopologyGenConfig::with_seed(6, seed)).unwrap();
            let best = solve_min_delay(&t).unwrap();
            replay_unicast(&t, &best.schedule).unwrap();
            for mask in 0u32..64 {
                let set: Vec<_> = (1..=6).filter(|r| mask & (1 << (r - 1)) != 0).collect();
                let g = greedy_schedule(&t, &set).unwrap();
                assert!(best.delay <= g.total_delay, "seed {seed} mask {mask}");
            }
            let sp = traditional_shortest_path(&t).unwrap();
            assert!(sp.delay >= best.delay - 1e-9);
        }
    }

    #[test]
    fn solutions_transmit_for_positive_time() {
        for seed in 0..40 {
            let t = gen_random_topology(&TopologyGenConfig::with_seed(7, seed)).unwrap();
            let s = solve_min_delay(&t).unwrap();
            assert_eq!(s.relay_set.len() + 1, s.schedule.stages.len());
            assert!(s.schedule.stages.iter().all(|st| st.duration > 0.0));
            assert_eq!(&s.relay_set[..], &s.schedule.decoding_order()[..s.relay_set.len()]);
        }
    }

    #[test]
    fn solution_json_schema() {
        let sol = greedy_solution(&one_relay(), &[1]).unwrap();
        let v = sol.to_json_value(Some("optimal"));
        assert_eq!(v["relay_set"], serde_json::json!([1]));
        assert_eq!(v["stages"][0], serde_json::json!({"tx": 0, "dur": 0.5, "decoder": 1}));
        assert_eq!(v["delay"], 0.875);
        assert_eq!(v["method"], "optimal");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn more_capacity_never_hurts(seed in 0u64..10_000, i in 0usize..6, j in 0usize..6, bump in 0.0f64..3.0) {
            prop_assume!(i != j);
            let t = gen_random_topology(&TopologyGenConfig::with_seed(4, seed)).unwrap();
            let base = solve_min_delay(&t).unwrap().delay;
            let better_topo = t.with_capacity(i, j, t.capacity(i, j) + bump).unwrap();
            let bumped = solve_min_delay(&better_topo).unwrap().delay;
            prop_assert!(bumped <= base * (1.0 + 1e-12), "{bumped} > {base}");
        }

        #[test]
        fn greedy_schedules_replay(seed in 0u64..10_000, mask in 0u32..32) {
            let t = gen_random_topology(&TopologyGenConfig::with_seed(5, seed)).unwrap();
            let set: Vec<_> = (1..=5).filter(|r| mask & (1 << (r - 1)) != 0).collect();
            let s = greedy_schedule(&t, &set).unwrap();
            let report = replay_unicast(&t, &s).unwrap();
            prop_assert!(report.max_error < 1e-9 * t.i_max());
        }
    }
}
