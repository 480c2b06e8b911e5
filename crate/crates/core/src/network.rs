//! Network model: topologies, link capacities and mutual information state.
//!
//! Node `0` is always the source. For unicast problems the destination is the
//! last node (`n_relays + 1`) and nodes `1..=n_relays` are relays; broadcast
//! problems treat every non-source node as a receiver.
//!
//! Bandwidth is normalized to one, so a transmission of duration `t` over a
//! link of capacity `c` delivers `t * c` bits.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Weibull};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::DECODE_TOL;

pub type NodeId = usize;

/// Shannon capacity `log2(1 + h p / n0)` of an AWGN link in bits/sec/Hz.
pub fn capacity_awgn(gain: f64, psd: f64, noise_psd: f64) -> Result<f64> {
    if !(gain.is_finite() && psd.is_finite() && noise_psd.is_finite()) {
        return Err(invalid("capacity_awgn: non-finite input"));
    }
    if gain < 0.0 || psd < 0.0 || noise_psd <= 0.0 {
        return Err(invalid(format!(
            "capacity_awgn: need gain >= 0, psd >= 0, noise > 0 (got {gain}, {psd}, {noise_psd})"
        )));
    }
    Ok((gain * psd / noise_psd).ln_1p() / std::f64::consts::LN_2)
}

/// Derates a capacity for a practical rateless code with overhead `epsilon`.
pub fn overhead_adjust(capacity: f64, epsilon: f64) -> Result<f64> {
    if !(capacity.is_finite() && epsilon.is_finite()) {
        return Err(invalid("overhead_adjust: non-finite input"));
    }
    if capacity < 0.0 {
        return Err(invalid(format!("overhead_adjust: negative capacity {capacity}")));
    }
    if epsilon < 0.0 {
        return Err(invalid(format!("overhead_adjust: negative overhead {epsilon}")));
    }
    Ok(capacity / (1.0 + epsilon))
}

/// A set of nodes with pairwise link capacities (bits/sec/Hz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TopologyFile", into = "TopologyFile")]
pub struct Topology {
    capacity: Vec<Vec<f64>>,
    i_max: f64,
    positions: Option<Vec<[f64; 2]>>,
}

/// On-disk JSON layout of a [`Topology`].
#[derive(Serialize, Deserialize)]
struct TopologyFile {
    n_relays: usize,
    i_max: f64,
    capacity: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    positions: Option<Vec<[f64; 2]>>,
}

impl TryFrom<TopologyFile> for Topology {
    type Error = Error;

    fn try_from(file: TopologyFile) -> Result<Self> {
        if file.capacity.len() != file.n_relays + 2 {
            return Err(invalid(format!(
                "n_relays = {} but capacity matrix has {} rows",
                file.n_relays,
                file.capacity.len()
            )));
        }
        let mut topo = Topology::new(file.capacity, file.i_max)?;
        if let Some(pos) = file.positions {
            topo = topo.with_positions(pos)?;
        }
        Ok(topo)
    }
}

impl From<Topology> for TopologyFile {
    fn from(t: Topology) -> Self {
        TopologyFile {
            n_relays: t.n_relays(),
            i_max: t.i_max,
            capacity: t.capacity,
            positions: t.positions,
        }
    }
}

impl Topology {
    /// Builds a topology from a square capacity matrix. The diagonal must be zero.
    pub fn new(capacity: Vec<Vec<f64>>, i_max: f64) -> Result<Self> {
        let n = capacity.len();
        if n < 2 {
            return Err(invalid("a topology needs at least a source and one other node"));
        }
        if !(i_max.is_finite() && i_max > 0.0) {
            return Err(invalid(format!("i_max must be finite and positive, got {i_max}")));
        }
        for (i, row) in capacity.iter().enumerate() {
            if row.len() != n {
                return Err(invalid(format!(
                    "capacity row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &c) in row.iter().enumerate() {
                if !c.is_finite() || c < 0.0 {
                    return Err(invalid(format!(
                        "capacity[{i}][{j}] = {c} is not a finite nonnegative value"
                    )));
                }
                if i == j && c != 0.0 {
                    return Err(invalid(format!("capacity[{i}][{i}] must be zero")));
                }
            }
        }
        Ok(Topology {
            capacity,
            i_max,
            positions: None,
        })
    }

    pub fn with_positions(mut self, positions: Vec<[f64; 2]>) -> Result<Self> {
        if positions.len() != self.node_count() {
            return Err(invalid(format!(
                "{} positions for {} nodes",
                positions.len(),
                self.node_count()
            )));
        }
        if positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite position"));
        }
        self.positions = Some(positions);
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.capacity.len()
    }

    /// Number of relays when read as a unicast instance.
    pub fn n_relays(&self) -> usize {
        self.capacity.len() - 2
    }

    pub fn source(&self) -> NodeId {
        0
    }

    pub fn destination(&self) -> NodeId {
        self.capacity.len() - 1
    }

    pub fn relays(&self) -> std::ops::RangeInclusive<NodeId> {
        1..=self.n_relays()
    }

    pub fn i_max(&self) -> f64 {
        self.i_max
    }

    #[inline]
    pub fn capacity(&self, from: NodeId, to: NodeId) -> f64 {
        self.capacity[from][to]
    }

    pub fn capacity_matrix(&self) -> &[Vec<f64>] {
        &self.capacity
    }

    pub fn positions(&self) -> Option<&[[f64; 2]]> {
        self.positions.as_deref()
    }

    /// Returns a copy with one link capacity replaced.
    pub fn with_capacity(&self, from: NodeId, to: NodeId, value: f64) -> Result<Self> {
        let mut cap = self.capacity.clone();
        cap[from][to] = value;
        let mut t = Topology::new(cap, self.i_max)?;
        t.positions = self.positions.clone();
        Ok(t)
    }

    /// Returns a copy with every capacity divided by `1 + epsilon`.
    pub fn with_overhead(&self, epsilon: f64) -> Result<Self> {
        let cap = self
            .capacity
            .iter()
            .map(|row| row.iter().map(|&c| overhead_adjust(c, epsilon)).collect())
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let mut t = Topology::new(cap, self.i_max)?;
        t.positions = self.positions.clone();
        Ok(t)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut s = self.to_json()?;
        s.push('\n');
        fs::write(path, s)?;
        Ok(())
    }
}

/// Accumulated mutual information per node.
///
/// A node is decoded once its information is within `DECODE_TOL * i_max` of
/// `i_max`; its information is then clamped to exactly `i_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MutualInfoState {
    i_max: f64,
    info: Vec<f64>,
    decoded: Vec<bool>,
}

impl MutualInfoState {
    /// Only the source holds the packet.
    pub fn initial(topo: &Topology) -> Self {
        let mut info = vec![0.0; topo.node_count()];
        let mut decoded = vec![false; topo.node_count()];
        info[topo.source()] = topo.i_max();
        decoded[topo.source()] = true;
        MutualInfoState {
            i_max: topo.i_max(),
            info,
            decoded,
        }
    }

    /// Builds a state from explicit per-node information; decode flags follow
    /// from the values.
    pub fn from_info(i_max: f64, info: Vec<f64>) -> Result<Self> {
        if !(i_max.is_finite() && i_max > 0.0) {
            return Err(invalid("i_max must be finite and positive"));
        }
        if info.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("information values must be finite and nonnegative"));
        }
        let mut state = MutualInfoState {
            i_max,
            decoded: vec![false; info.len()],
            info,
        };
        for j in 0..state.info.len() {
            state.settle(j);
        }
        Ok(state)
    }

    pub fn i_max(&self) -> f64 {
        self.i_max
    }

    pub fn info(&self, node: NodeId) -> f64 {
        self.info[node]
    }

    pub fn infos(&self) -> &[f64] {
        &self.info
    }

    pub fn is_decoded(&self, node: NodeId) -> bool {
        self.decoded[node]
    }

    /// Bits still missing at `node` (zero once decoded).
    pub fn deficit(&self, node: NodeId) -> f64 {
        (self.i_max - self.info[node]).max(0.0)
    }

    pub fn decoded_count(&self) -> usize {
        self.decoded.iter().filter(|&&d| d).count()
    }

    fn settle(&mut self, j: NodeId) {
        if self.info[j] >= self.i_max * (1.0 - DECODE_TOL) {
            self.info[j] = self.i_max;
            self.decoded[j] = true;
        }
    }

    /// Force `node` into the decoded state. Used when a greedy step names the
    /// node as the stage's decoder and rounding left it a few ulps short.
    pub(crate) fn mark_decoded(&mut self, node: NodeId) {
        self.info[node] = self.i_max;
        self.decoded[node] = true;
    }

    /// `transmitter` sends for `duration` seconds; every undecoded node `j`
    /// gains `duration * C[transmitter][j]` bits.
    pub fn accumulate(&self, topo: &Topology, transmitter: NodeId, duration: f64) -> Result<Self> {
        let mut next = self.clone();
        next.accumulate_in_place(topo, transmitter, duration)?;
        Ok(next)
    }

    pub fn accumulate_in_place(&mut self, topo: &Topology, transmitter: NodeId, duration: f64) -> Result<()> {
        if self.info.len() != topo.node_count() {
            return Err(invalid("state and topology have different node counts"));
        }
        if transmitter >= self.info.len() {
            return Err(invalid(format!("transmitter {transmitter} out of range")));
        }
        if !self.decoded[transmitter] {
            return Err(Error::NotDecoded(transmitter));
        }
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(invalid(format!(
                "duration must be finite and nonnegative, got {duration}"
            )));
        }
        for j in 0..self.info.len() {
            if !self.decoded[j] {
                self.info[j] += duration * topo.capacity(transmitter, j);
                self.settle(j);
            }
        }
        Ok(())
    }
}

/// Per-link rate as a function of the transmitter's PSD.
#[derive(Debug, Clone, PartialEq)]
pub enum RateFn {
    /// `C(P) = slope * P`.
    Linear { slope: f64 },
    /// `C(P) = log2(1 + gain * P)`.
    Log2 { gain: f64 },
    /// Piecewise-linear interpolation through `(psd, rate)` points, starting
    /// at `(0, 0)` and held constant past the last point.
    Tabulated(Vec<(f64, f64)>),
}

impl RateFn {
    pub fn rate(&self, psd: f64) -> f64 {
        match self {
            RateFn::Linear { slope } => slope * psd,
            RateFn::Log2 { gain } => (gain * psd).ln_1p() / std::f64::consts::LN_2,
            RateFn::Tabulated(points) => {
                let mut prev = (0.0, 0.0);
                for &(p, r) in points {
                    if psd <= p {
                        let span = p - prev.0;
                        return if span > 0.0 {
                            prev.1 + (r - prev.1) * (psd - prev.0) / span
                        } else {
                            r
                        };
                    }
                    prev = (p, r);
                }
                prev.1
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            RateFn::Linear { slope } if !(slope.is_finite() && *slope >= 0.0) => {
                Err(invalid("linear rate slope must be finite and nonnegative"))
            }
            RateFn::Log2 { gain } if !(gain.is_finite() && *gain >= 0.0) => {
                Err(invalid("log rate gain must be finite and nonnegative"))
            }
            RateFn::Tabulated(points) => {
                let mut prev = (0.0, 0.0);
                for &(p, r) in points {
                    if !(p.is_finite() && r.is_finite()) || p <= prev.0 || r < prev.1 {
                        return Err(invalid(
                            "tabulated rate must be strictly increasing in psd and nondecreasing in rate",
                        ));
                    }
                    prev = (p, r);
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// How transmit power maps to link capacity.
#[derive(Debug, Clone, PartialEq)]
pub enum RatePowerModel {
    /// Capacities given directly; power plays no role.
    FixedCapacity(Topology),
    /// Low-SNR regime `C_ij(P) = gamma * P * h_ij`.
    LinearLowSnr { gain: Vec<Vec<f64>>, gamma: f64 },
    /// Arbitrary monotone rate per link; `None` on the diagonal.
    Custom { links: Vec<Vec<Option<RateFn>>> },
}

impl RatePowerModel {
    pub fn linear(gain: Vec<Vec<f64>>, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(invalid(format!("gamma must be positive, got {gamma}")));
        }
        check_square(&gain)?;
        if gain.iter().flatten().any(|h| !h.is_finite() || *h < 0.0) {
            return Err(invalid("gains must be finite and nonnegative"));
        }
        Ok(RatePowerModel::LinearLowSnr { gain, gamma })
    }

    pub fn custom(links: Vec<Vec<Option<RateFn>>>) -> Result<Self> {
        let n = links.len();
        for row in &links {
            if row.len() != n {
                return Err(invalid("custom rate table must be square"));
            }
            for f in row.iter().flatten() {
                f.validate()?;
            }
        }
        Ok(RatePowerModel::Custom { links })
    }

    pub fn node_count(&self) -> usize {
        match self {
            RatePowerModel::FixedCapacity(t) => t.node_count(),
            RatePowerModel::LinearLowSnr { gain, .. } => gain.len(),
            RatePowerModel::Custom { links } => links.len(),
        }
    }

    /// Capacity matrix when node `i` transmits at PSD `psd[i]`.
    pub fn capacities(&self, psd: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = self.node_count();
        if psd.len() != n {
            return Err(invalid(format!("{} PSD values for {n} nodes", psd.len())));
        }
        if psd.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(invalid("PSD values must be finite and nonnegative"));
        }
        let mut cap = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                cap[i][j] = match self {
                    RatePowerModel::FixedCapacity(t) => t.capacity(i, j),
                    RatePowerModel::LinearLowSnr { gain, gamma } => gamma * psd[i] * gain[i][j],
                    RatePowerModel::Custom { links } => links[i][j].as_ref().map_or(0.0, |f| f.rate(psd[i])),
                };
            }
        }
        Ok(cap)
    }

    pub fn topology(&self, psd: &[f64], i_max: f64) -> Result<Topology> {
        Topology::new(self.capacities(psd)?, i_max)
    }
}

fn check_square(m: &[Vec<f64>]) -> Result<()> {
    let n = m.len();
    if n < 2 || m.iter().any(|r| r.len() != n) {
        return Err(invalid("matrix must be square with at least two nodes"));
    }
    Ok(())
}

/// Parameters of the random-placement experiment topology.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyGenConfig {
    pub n_relays: usize,
    pub width: f64,
    pub height: f64,
    pub source: [f64; 2],
    pub destination: [f64; 2],
    pub alpha: f64,
    pub i_max: f64,
    pub seed: u64,
}

impl Default for TopologyGenConfig {
    fn default() -> Self {
        TopologyGenConfig {
            n_relays: 20,
            width: 10.0,
            height: 10.0,
            source: [1.0, 2.0],
            destination: [8.0, 8.0],
            alpha: 3.0,
            i_max: 1.0,
            seed: 0,
        }
    }
}

impl TopologyGenConfig {
    pub fn with_seed(n_relays: usize, seed: u64) -> Self {
        TopologyGenConfig {
            n_relays,
            seed,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 2.0) {
            return Err(invalid(format!("path-loss exponent must be >= 2, got {}", self.alpha)));
        }
        if !(self.width > 0.0 && self.height > 0.0 && self.width.is_finite() && self.height.is_finite()) {
            return Err(invalid("area must have positive finite size"));
        }
        let inside = |p: [f64; 2]| (0.0..=self.width).contains(&p[0]) && (0.0..=self.height).contains(&p[1]);
        if !inside(self.source) || !inside(self.destination) {
            return Err(invalid("source and destination must lie inside the area"));
        }
        if distance(self.source, self.destination) < MIN_SEPARATION {
            return Err(invalid("source and destination coincide"));
        }
        if !(self.i_max.is_finite() && self.i_max > 0.0) {
            return Err(invalid("i_max must be positive"));
        }
        Ok(())
    }
}

const MIN_SEPARATION: f64 = 1e-9;

/// Scale of the Rayleigh distribution whose mean is one: `mean = sigma * sqrt(pi / 2)`.
pub fn unit_mean_rayleigh_sigma() -> f64 {
    (2.0 / std::f64::consts::PI).sqrt()
}

/// Rayleigh(sigma) is Weibull with shape 2 and scale `sigma * sqrt(2)`.
fn rayleigh(sigma: f64) -> Weibull<f64> {
    Weibull::new(sigma * std::f64::consts::SQRT_2, 2.0).expect("positive sigma")
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Random topology: relays uniform in the area, `C_ij = log2(1 + h_ij / d_ij^alpha)`
/// with an independent unit-mean Rayleigh gain per ordered pair.
///
/// The RNG stream is: relay positions in order (re-drawing any position closer
/// than 1e-9 to an earlier node), then gains in row-major order skipping the
/// diagonal.
pub fn gen_random_topology(cfg: &TopologyGenConfig) -> Result<Topology> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_relays + 2;

    let mut positions = Vec::with_capacity(n);
    positions.push(cfg.source);
    for _ in 0..cfg.n_relays {
        let p = loop {
            let p = [rng.random_range(0.0..cfg.width), rng.random_range(0.0..cfg.height)];
            let clear = positions
                .iter()
                .chain(std::iter::once(&cfg.destination))
                .all(|q| distance(p, *q) >= MIN_SEPARATION);
            if clear {
                break p;
            }
        };
        positions.push(p);
    }
    positions.push(cfg.destination);

    let rayleigh = rayleigh(unit_mean_rayleigh_sigma());
    let mut capacity = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let h: f64 = rayleigh.sample(&mut rng);
            let d = distance(positions[i], positions[j]);
            capacity[i][j] = (h / d.powf(cfg.alpha)).ln_1p() / std::f64::consts::LN_2;
        }
    }
    Topology::new(capacity, cfg.i_max)?.with_positions(positions)
}
