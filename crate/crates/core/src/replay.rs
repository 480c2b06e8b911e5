//! Independent validation of emitted schedules.
//!
//! A schedule is replayed stage by stage through
//! [`MutualInfoState::accumulate`]. Every stage's decoder must hit `i_max`
//! exactly at the end of its stage, and no earlier unless the stage has zero
//! length.

use crate::error::{invalid, Result};
use crate::network::{MutualInfoState, NodeId, Topology};
use crate::unicast::{Schedule, Stage};

/// Largest gap between a decoder's replayed information and `i_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayReport {
    pub max_error: f64,
    pub final_time: f64,
}

/// Tolerance on stage-end decoding, relative to `i_max`.
pub const REPLAY_TOL: f64 = 1e-9;

fn replay(topo: &Topology, stages: &[Stage]) -> Result<(MutualInfoState, ReplayReport)> {
    let tol = REPLAY_TOL * topo.i_max();
    let mut state = MutualInfoState::initial(topo);
    let mut max_error: f64 = 0.0;
    let mut time = 0.0;
    for (k, st) in stages.iter().enumerate() {
        if st.decoder >= topo.node_count() {
            return Err(invalid(format!("stage {k}: decoder {} out of range", st.decoder)));
        }
        let error = if state.is_decoded(st.decoder) {
            if st.duration > tol {
                return Err(invalid(format!(
                    "stage {k}: decoder {} already held the packet before a stage of length {}",
                    st.decoder, st.duration
                )));
            }
            0.0
        } else {
            let reached = state.info(st.decoder) + st.duration * topo.capacity(st.transmitter, st.decoder);
            (reached - topo.i_max()).abs()
        };
        if error > tol {
            return Err(invalid(format!(
                "stage {k}: decoder {} ends {error:e} bits away from i_max",
                st.decoder
            )));
        }
        max_error = max_error.max(error);
        state = state.accumulate(topo, st.transmitter, st.duration)?;
        if !state.is_decoded(st.decoder) {
            // within REPLAY_TOL but short of the state's own decode threshold
            state.mark_decoded(st.decoder);
        }
        time += st.duration;
    }
    Ok((
        state,
        ReplayReport {
            max_error,
            final_time: time,
        },
    ))
}

/// Replays a unicast schedule; the destination must hold the packet at the end.
pub fn replay_unicast(topo: &Topology, schedule: &Schedule) -> Result<ReplayReport> {
    let (state, report) = replay(topo, &schedule.stages)?;
    if !state.is_decoded(topo.destination()) {
        return Err(invalid("destination has not decoded at the end of the schedule"));
    }
    if (report.final_time - schedule.total_delay).abs() > 1e-9 * report.final_time.max(1.0) {
        return Err(invalid("total delay does not match the sum of stage durations"));
    }
    Ok(report)
}

/// Replays a broadcast: stage decoders must be exactly the non-source nodes,
/// each once, and every node must end up decoded.
pub fn replay_broadcast(topo: &Topology, stages: &[Stage]) -> Result<ReplayReport> {
    let mut seen = vec![false; topo.node_count()];
    seen[topo.source()] = true;
    for st in stages {
        let d: NodeId = st.decoder;
        if d >= seen.len() || seen[d] {
            return Err(invalid(format!("node {d} appears twice in the decoding order")));
        }
        seen[d] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(invalid("some node never appears as a decoder"));
    }
    let (state, report) = replay(topo, stages)?;
    if state.decoded_count() != topo.node_count() {
        return Err(invalid("not every node decoded"));
    }
    Ok(report)
}
