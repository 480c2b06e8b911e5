//! Polynomial-time routing heuristics seeded by the traditional shortest path.
//!
//! Both start from `M`, the relays on the minimum-delay hop-by-hop route.
//! Heuristic 1 runs the greedy single-transmitter schedule on `M` alone.
//! Heuristic 2 runs the same greedy but watches the nodes outside `M`: if one
//! of them decodes before the next `M` node would and has a better link to
//! that next node than the current transmitter, it takes over transmission
//! until the next `M` node decodes.

use crate::error::{Error, Result};
use crate::network::{MutualInfoState, NodeId, Topology};
use crate::unicast::{
    earliest, greedy_solution, time_to_decode, traditional_shortest_path, Schedule, Stage, UnicastSolution,
};

pub fn heuristic1(topo: &Topology) -> Result<UnicastSolution> {
    let sp = traditional_shortest_path(topo)?;
    greedy_solution(topo, sp.interior())
}

/// Nodes adopted by heuristic 2 in addition to the shortest-path relays.
#[derive(Debug, Clone, PartialEq)]
pub struct Heuristic2Solution {
    pub solution: UnicastSolution,
    pub adopted: Vec<NodeId>,
}

pub fn heuristic2(topo: &Topology) -> Result<UnicastSolution> {
    heuristic2_detailed(topo).map(|h| h.solution)
}

pub fn heuristic2_detailed(topo: &Topology) -> Result<Heuristic2Solution> {
    let sp = traditional_shortest_path(topo)?;
    let d = topo.destination();
    let n = topo.node_count();
    let mut in_m = vec![false; n];
    for &r in sp.interior() {
        in_m[r] = true;
    }
    in_m[d] = true;

    let mut state = MutualInfoState::initial(topo);
    let mut tx = topo.source();
    let mut stages = Vec::new();
    let mut adopted = Vec::new();
    while !state.is_decoded(d) {
        let time_from = |t: NodeId, j: NodeId| time_to_decode(state.deficit(j), topo.capacity(t, j));
        let in_m = &in_m;
        let undecoded = |member: bool| (0..n).filter(move |&j| in_m[j] == member);
        let m_times = undecoded(true)
            .filter(|&j| !state.is_decoded(j))
            .map(|j| (j, time_from(tx, j)));
        let next = earliest(m_times);
        let outside_times = undecoded(false)
            .filter(|&j| !state.is_decoded(j))
            .map(|j| (j, time_from(tx, j)));
        let outside_first = earliest(outside_times.clone()).map(|(_, t)| t);

        match (next, outside_first) {
            (None, None) => {
                return Err(Error::Infeasible(format!("node {tx} reaches no undecoded node")));
            }
            (Some((target, t_next)), Some(t_out)) if t_out < t_next => {
                // Outside nodes finish first: run until they do, then consider
                // handing over to whichever has the best link to `target`.
                let limit = t_out + crate::DECODE_TOL * t_out;
                let early: Vec<NodeId> = outside_times.filter(|&(_, t)| t <= limit).map(|(j, _)| j).collect();
                state.accumulate_in_place(topo, tx, t_out)?;
                for &x in &early {
                    state.mark_decoded(x);
                }
                let best = early
                    .iter()
                    .copied()
                    .max_by(|&a, &b| {
                        topo.capacity(a, target)
                            .total_cmp(&topo.capacity(b, target))
                            .then(b.cmp(&a))
                    })
                    .expect("at least one early decoder");
                stages.push(Stage {
                    transmitter: tx,
                    duration: t_out,
                    decoder: best,
                });
                if topo.capacity(best, target) > topo.capacity(tx, target) {
                    adopted.push(best);
                    tx = best;
                }
            }
            (Some((target, t_next)), _) => {
                state.accumulate_in_place(topo, tx, t_next)?;
                state.mark_decoded(target);
                stages.push(Stage {
                    transmitter: tx,
                    duration: t_next,
                    decoder: target,
                });
                tx = target;
            }
            (None, Some(_)) => {
                return Err(Error::Infeasible(format!(
                    "node {tx} cannot reach any remaining shortest-path node"
                )));
            }
        }
    }
    Ok(Heuristic2Solution {
        solution: UnicastSolution::from_schedule(topo, merge_idle_stages(stages)),
        adopted,
    })
}

/// Outside decodes that did not lead to an adoption leave the transmitter
/// unchanged; fold those stages into the following one so every stage ends
/// with the decoder that the next transmitter is.
fn merge_idle_stages(stages: Vec<Stage>) -> Schedule {
    let mut merged: Vec<Stage> = Vec::with_capacity(stages.len());
    let mut carry = 0.0;
    for (k, st) in stages.iter().enumerate() {
        let hands_over = stages.get(k + 1).is_none_or(|next| next.transmitter == st.decoder);
        if hands_over {
            merged.push(Stage {
                duration: st.duration + carry,
                ..*st
            });
            carry = 0.0;
        } else {
            carry += st.duration;
        }
    }
    Schedule::from_stages(merged)
}
