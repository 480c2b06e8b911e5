//! Minimum-energy routing under a delay constraint.
//!
//! With linear rate-power curves `C_ij(P) = gamma * P * h_ij`, the greedy
//! decoding order and the energy `duration * psd` of every stage do not depend
//! on the (nonzero) powers used. The minimum-energy route is therefore the
//! minimum-delay route at unit PSD, and any delay budget is met by raising
//! every PSD by `D / d_max` and shrinking every stage by the same factor.
//!
//! Energies are in joules/Hz (PSD times seconds, bandwidth normalized to one).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::network::{MutualInfoState, NodeId, RateFn, RatePowerModel, Topology};
use crate::unicast::{self, earliest, time_to_decode, Schedule, SearchOptions, SearchStats};

/// Gains and rate coefficient of a low-SNR network.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearNetwork {
    model: RatePowerModel,
    i_max: f64,
}

impl LinearNetwork {
    pub fn new(gain: Vec<Vec<f64>>, gamma: f64, i_max: f64) -> Result<Self> {
        if !(i_max.is_finite() && i_max > 0.0) {
            return Err(invalid("i_max must be positive"));
        }
        let model = RatePowerModel::linear(gain, gamma)?;
        for i in 0..model.node_count() {
            if let RatePowerModel::LinearLowSnr { gain, .. } = &model {
                if gain[i][i] != 0.0 {
                    return Err(invalid("gain diagonal must be zero"));
                }
            }
        }
        Ok(LinearNetwork { model, i_max })
    }

    /// Reads a topology's capacity matrix as the gain matrix.
    pub fn from_topology(topo: &Topology, gamma: f64) -> Result<Self> {
        Self::new(topo.capacity_matrix().to_vec(), gamma, topo.i_max())
    }

    pub fn node_count(&self) -> usize {
        self.model.node_count()
    }

    pub fn i_max(&self) -> f64 {
        self.i_max
    }

    /// Capacities when node `i` transmits at `psd[i]`.
    pub fn topology(&self, psd: &[f64]) -> Result<Topology> {
        self.model.topology(psd, self.i_max)
    }

    pub fn uniform_topology(&self, psd: f64) -> Result<Topology> {
        self.topology(&vec![psd; self.node_count()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyStage {
    #[serde(rename = "tx")]
    pub transmitter: NodeId,
    #[serde(rename = "dur")]
    pub duration: f64,
    pub psd: f64,
    pub decoder: NodeId,
}

impl EnergyStage {
    pub fn energy(&self) -> f64 {
        self.duration * self.psd
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergySolution {
    pub relay_set: Vec<NodeId>,
    pub stages: Vec<EnergyStage>,
    pub total_energy: f64,
    pub delay: f64,
    pub d_max: f64,
}

impl EnergySolution {
    /// Plain schedule (PSD dropped) for replay at the solution's power level.
    pub fn schedule(&self) -> Schedule {
        Schedule::from_stages(
            self.stages
                .iter()
                .map(|s| unicast::Stage {
                    transmitter: s.transmitter,
                    duration: s.duration,
                    decoder: s.decoder,
                })
                .collect(),
        )
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "method": "energy",
            "relay_set": self.relay_set,
            "stages": self.stages,
            "delay": self.delay,
            "total_energy": self.total_energy,
            "d_max": self.d_max,
        })
    }
}

/// Greedy schedule on `relay_set` with node `i` transmitting at `psd[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoweredSchedule {
    pub schedule: Schedule,
    /// `duration * psd` per stage.
    pub energies: Vec<f64>,
}

impl PoweredSchedule {
    pub fn total_energy(&self) -> f64 {
        self.energies.iter().sum()
    }
}

pub fn greedy_schedule_with_powers(net: &LinearNetwork, relay_set: &[NodeId], psd: &[f64]) -> Result<PoweredSchedule> {
    if psd.iter().any(|&p| !(p.is_finite() && p > 0.0)) {
        return Err(invalid("every PSD must be finite and positive"));
    }
    let schedule = unicast::greedy_schedule(&net.topology(psd)?, relay_set)?;
    let energies = schedule
        .stages
        .iter()
        .map(|s| s.duration * psd[s.transmitter])
        .collect();
    Ok(PoweredSchedule { schedule, energies })
}

/// Greedy schedule with every node at `unit_psd`. The stage energies are the
/// same for every positive `unit_psd`.
pub fn greedy_linear_schedule(net: &LinearNetwork, relay_set: &[NodeId], unit_psd: f64) -> Result<PoweredSchedule> {
    greedy_schedule_with_powers(net, relay_set, &vec![unit_psd; net.node_count()])
}

/// Minimum total energy subject to `delay <= d_max`; the returned schedule
/// uses the whole budget.
pub fn solve_min_energy(net: &LinearNetwork, d_max: f64) -> Result<EnergySolution> {
    solve_min_energy_with(net, d_max, &SearchOptions::default()).map(|(s, _)| s)
}

pub fn solve_min_energy_with(
    net: &LinearNetwork,
    d_max: f64,
    opts: &SearchOptions,
) -> Result<(EnergySolution, SearchStats)> {
    if !(d_max.is_finite() && d_max > 0.0) {
        return Err(invalid(format!("d_max must be finite and positive, got {d_max}")));
    }
    // At unit PSD every stage's energy equals its duration, so the
    // minimum-energy subset is the minimum-delay subset.
    let unit = net.uniform_topology(1.0)?;
    let (best, stats) = unicast::solve_min_delay_with(&unit, opts)?;
    let unit_delay = best.delay;
    let psd = unit_delay / d_max;
    let shrink = d_max / unit_delay;
    let stages: Vec<EnergyStage> = best
        .schedule
        .stages
        .iter()
        .map(|s| EnergyStage {
            transmitter: s.transmitter,
            duration: s.duration * shrink,
            psd,
            decoder: s.decoder,
        })
        .collect();
    let total_energy = stages.iter().map(EnergyStage::energy).sum();
    let delay = stages.iter().map(|s| s.duration).sum();
    Ok((
        EnergySolution {
            relay_set: best.relay_set,
            stages,
            total_energy,
            delay,
            d_max,
        },
        stats,
    ))
}

/// Greedy decoding order over every non-source node of a power-dependent
/// network: the newest decoder transmits until the next node decodes.
pub fn greedy_decoding_order(model: &RatePowerModel, psd: &[f64], i_max: f64) -> Result<Vec<NodeId>> {
    let topo = model.topology(psd, i_max)?;
    let mut state = MutualInfoState::initial(&topo);
    let mut tx = topo.source();
    let mut informed = vec![false; topo.node_count()];
    informed[tx] = true;
    let mut order = Vec::new();
    while order.len() + 1 < topo.node_count() {
        // nodes that finished at the same instant come out as zero-length stages
        let times = (0..topo.node_count())
            .filter(|&j| !informed[j])
            .map(|j| (j, time_to_decode(state.deficit(j), topo.capacity(tx, j))));
        let (next, dur) = earliest(times).ok_or_else(|| Error::Infeasible(format!("node {tx} reaches nobody")))?;
        state.accumulate_in_place(&topo, tx, dur)?;
        state.mark_decoded(next);
        informed[next] = true;
        order.push(next);
        tx = next;
    }
    Ok(order)
}

/// Gain from the source to node 1 in the non-linear fixture.
pub const FIXTURE_H_S1: f64 = 1.0;
pub const FIXTURE_H_S2: f64 = 0.05;
pub const FIXTURE_H_S3: f64 = 0.1;
/// Common gain `h_12 = h_13`.
pub const FIXTURE_H_1X: f64 = 1.0;

/// Four-node network whose greedy decoding order depends on the source power:
/// every link is linear `h_ij * P` except `C_s3(P) = log2(1 + h_s3 P)`.
pub fn nonlinear_fixture() -> RatePowerModel {
    let lin = |h: f64| Some(RateFn::Linear { slope: h });
    RatePowerModel::custom(vec![
        vec![
            None,
            lin(FIXTURE_H_S1),
            lin(FIXTURE_H_S2),
            Some(RateFn::Log2 { gain: FIXTURE_H_S3 }),
        ],
        vec![lin(FIXTURE_H_S1), None, lin(FIXTURE_H_1X), lin(FIXTURE_H_1X)],
        vec![lin(FIXTURE_H_S2), lin(FIXTURE_H_1X), None, lin(1.0)],
        vec![lin(FIXTURE_H_S3), lin(FIXTURE_H_1X), lin(1.0), None],
    ])
    .expect("fixture is well formed")
}

/// Decoding order of the non-linear fixture with source PSD `p_s` (all other
/// nodes at unit PSD, `i_max = 1`). Node 1 always decodes first; whether node
/// 2 or node 3 follows depends on `p_s`.
pub fn nonlinear_decoding_order(p_s: f64) -> Result<Vec<NodeId>> {
    if !(p_s.is_finite() && p_s > 0.0) {
        return Err(invalid("source PSD must be positive"));
    }
    greedy_decoding_order(&nonlinear_fixture(), &[p_s, 1.0, 1.0, 1.0], 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replay::replay_unicast;
    use approx::assert_relative_eq;

    /// s=0, relay=1, d=2 with h_s1=2, h_sd=0, h_1d=1.
    fn one_relay() -> LinearNetwork {
        LinearNetwork::new(
            vec![vec![0.0, 2.0, 0.0], vec![2.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]],
            1.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn one_relay_energies() {
        let run = greedy_linear_schedule(&one_relay(), &[1], 1.0).unwrap();
        assert_eq!(run.energies, vec![0.5, 1.0]);
        assert_eq!(run.total_energy(), 1.5);
        assert_eq!(run.schedule.total_delay, 1.5);
    }

    #[test]
    fn energy_is_power_invariant() {
        let a = greedy_linear_schedule(&one_relay(), &[1], 1.0).unwrap();
        let b = greedy_linear_schedule(&one_relay(), &[1], 10.0).unwrap();
        assert_relative_eq!(a.total_energy(), b.total_energy(), max_relative = 1e-15);
        assert_relative_eq!(
            b.schedule.total_delay,
            a.schedule.total_delay / 10.0,
            max_relative = 1e-15
        );
        assert_eq!(a.schedule.decoding_order(), b.schedule.decoding_order());
    }

    #[test]
    fn equal_gains_tie_goes_to_relay() {
        let net = LinearNetwork::new(
            vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]],
            1.0,
            1.0,
        )
        .unwrap();
        let run = greedy_linear_schedule(&net, &[1], 1.0).unwrap();
        assert_eq!(run.schedule.stages[0].decoder, 1);
        assert_eq!(run.schedule.stages.len(), 1);
    }

    #[test]
    fn direct_link_scaling() {
        let net = LinearNetwork::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], 1.0, 1.0).unwrap();
        let sol = solve_min_energy(&net, 0.5).unwrap();
        assert_eq!(sol.stages.len(), 1);
        assert_eq!(sol.stages[0].psd, 2.0);
        assert_eq!(sol.stages[0].duration, 0.5);
        assert_eq!(sol.total_energy, 1.0);
        assert_eq!(sol.delay, 0.5);
    }

    #[test]
    fn one_relay_scaling() {
        let sol = solve_min_energy(&one_relay(), 0.15).unwrap();
        assert_eq!(sol.relay_set, vec![1]);
        assert_relative_eq!(sol.stages[0].psd, 10.0, max_relative = 1e-15);
        assert_relative_eq!(sol.total_energy, 1.5, max_relative = 1e-15);
        assert_relative_eq!(sol.delay, 0.15, max_relative = 1e-15);
        let topo = one_relay().uniform_topology(sol.stages[0].psd).unwrap();
        replay_unicast(&topo, &sol.schedule()).unwrap();
    }

    #[test]
    fn energy_independent_of_budget() {
        let e: Vec<f64> = [0.01, 0.15, 1.5, 100.0]
            .iter()
            .map(|&d| solve_min_energy(&one_relay(), d).unwrap().total_energy)
            .collect();
        for v in &e {
            assert_relative_eq!(*v, 1.5, max_relative = 1e-14);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(solve_min_energy(&one_relay(), 0.0).is_err());
        assert!(LinearNetwork::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], -1.0, 1.0).is_err());
        assert!(greedy_linear_schedule(&one_relay(), &[1], 0.0).is_err());
        let cut = LinearNetwork::new(vec![vec![0.0, 0.0], vec![1.0, 0.0]], 1.0, 1.0).unwrap();
        assert!(matches!(solve_min_energy(&cut, 1.0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn nonlinear_order_flips_with_power() {
        assert_eq!(nonlinear_decoding_order(1.0).unwrap(), vec![1, 3, 2]);
        assert_eq!(nonlinear_decoding_order(100.0).unwrap(), vec![1, 2, 3]);
    }

    #[test]
    fn nonlinear_crossover_is_a_tie() {
        // Bisection for h_s2 * P = log2(1 + h_s3 * P) on (1, 100).
        let f = |p: f64| FIXTURE_H_S2 * p - (1.0 + FIXTURE_H_S3 * p).log2();
        let (mut lo, mut hi) = (1.0f64, 100.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let p = 0.5 * (lo + hi);
        assert!(f(1.0) < 0.0 && f(100.0) > 0.0 && p > 1.0 && p < 100.0);
        assert_eq!(nonlinear_decoding_order(p).unwrap(), vec![1, 2, 3]);
        assert_eq!(nonlinear_decoding_order(p * 0.99).unwrap()[1], 3);
        assert_eq!(nonlinear_decoding_order(p * 1.01).unwrap()[1], 2);
    }
}
