//! Line topologies.
//!
//! When capacity depends only on distance and strictly decreases with it, the
//! optimal cooperating set is every relay strictly between source and
//! destination, and the greedy schedule decodes them left to right.
//!
//! For unit spacing and `C(d) = theta / d^2`, the stage lengths follow a
//! forward recursion. Keeping only transmitters within three hops of each
//! receiver gives a closed-form bound on the delay relative to hop-by-hop
//! routing, which tends to 36/49.

use crate::error::{invalid, Result};
use crate::network::{NodeId, Topology};
use crate::unicast::{greedy_solution, UnicastSolution};

/// Capacity as a function of distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CapacityLaw {
    /// `theta / d^alpha`; `theta = gamma * P`.
    PowerLaw { theta: f64, alpha: f64 },
    /// `log2(1 + snr / d^alpha)` with `snr = P / N0`.
    Awgn { snr: f64, alpha: f64 },
}

impl CapacityLaw {
    pub fn inverse_square(theta: f64) -> Self {
        CapacityLaw::PowerLaw { theta, alpha: 2.0 }
    }

    pub fn capacity(&self, distance: f64) -> f64 {
        match *self {
            CapacityLaw::PowerLaw { theta, alpha } => theta / distance.powf(alpha),
            CapacityLaw::Awgn { snr, alpha } => (snr / distance.powf(alpha)).ln_1p() / std::f64::consts::LN_2,
        }
    }

    fn validate(&self) -> Result<()> {
        let (scale, alpha) = match *self {
            CapacityLaw::PowerLaw { theta, alpha } => (theta, alpha),
            CapacityLaw::Awgn { snr, alpha } => (snr, alpha),
        };
        if !(scale.is_finite() && scale > 0.0 && alpha.is_finite() && alpha > 0.0) {
            return Err(invalid("capacity law needs a positive scale and exponent"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineConfig {
    pub source: f64,
    pub destination: f64,
    /// Relay coordinates, any order, any side of the source.
    pub relays: Vec<f64>,
    pub law: CapacityLaw,
    pub i_max: f64,
    /// Links longer than this carry nothing.
    pub truncation_radius: Option<f64>,
}

impl LineConfig {
    /// `n` relays at unit spacing between a source at 0 and a destination at `n + 1`.
    pub fn equally_spaced(n: usize, law: CapacityLaw, i_max: f64) -> Self {
        LineConfig {
            source: 0.0,
            destination: (n + 1) as f64,
            relays: (1..=n).map(|i| i as f64).collect(),
            law,
            i_max,
            truncation_radius: None,
        }
    }

    fn coordinates(&self) -> Vec<f64> {
        let mut xs = Vec::with_capacity(self.relays.len() + 2);
        xs.push(self.source);
        xs.extend(&self.relays);
        xs.push(self.destination);
        xs
    }

    fn validate(&self) -> Result<()> {
        self.law.validate()?;
        let xs = self.coordinates();
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(invalid("non-finite coordinate"));
        }
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("two nodes share a position"));
        }
        if let Some(r) = self.truncation_radius {
            if r.is_nan() || r <= 0.0 {
                return Err(invalid("truncation radius must be positive"));
            }
        }
        Ok(())
    }

    /// Node 0 is the source, relays keep their index order, the destination is last.
    pub fn topology(&self) -> Result<Topology> {
        self.validate()?;
        let xs = self.coordinates();
        let n = xs.len();
        let mut cap = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let d = (xs[i] - xs[j]).abs();
                if self.truncation_radius.is_none_or(|r| d <= r) {
                    cap[i][j] = self.law.capacity(d);
                }
            }
        }
        Topology::new(cap, self.i_max)?.with_positions(xs.iter().map(|&x| [x, 0.0]).collect())
    }

    /// Relays strictly between source and destination.
    pub fn relays_between(&self) -> Vec<NodeId> {
        let (lo, hi) = if self.source < self.destination {
            (self.source, self.destination)
        } else {
            (self.destination, self.source)
        };
        self.relays
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > lo && x < hi)
            .map(|(i, _)| i + 1)
            .collect()
    }
}

/// Optimal unicast on a line: the greedy schedule over every in-between relay.
pub fn solve_line(cfg: &LineConfig) -> Result<UnicastSolution> {
    let topo = cfg.topology()?;
    greedy_solution(&topo, &cfg.relays_between())
}

/// Stage lengths for `n` unit-spaced relays under `C(d) = theta / d^2`:
/// `Delta_m = (i_max - sum_{i<m} Delta_i * theta / (m + 1 - i)^2) / theta`,
/// dropping terms whose distance exceeds `truncation` hops.
pub fn line_delay_recursion(n: usize, theta: f64, i_max: f64, truncation: Option<usize>) -> Result<Vec<f64>> {
    if !(theta.is_finite() && theta > 0.0 && i_max.is_finite() && i_max > 0.0) {
        return Err(invalid("theta and i_max must be positive"));
    }
    if truncation == Some(0) {
        return Err(invalid("truncation radius must be at least one hop"));
    }
    let mut deltas: Vec<f64> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        let receiver = m + 1;
        let heard: f64 = deltas
            .iter()
            .enumerate()
            .filter(|(i, _)| truncation.is_none_or(|r| receiver - i <= r))
            .map(|(i, &d)| d * theta / ((receiver - i) as f64).powi(2))
            .sum();
        deltas.push((i_max - heard) / theta);
    }
    Ok(deltas)
}

/// Delay of cooperative routing against hop-by-hop routing on a unit line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayRatio {
    pub n: usize,
    pub mia_delay: f64,
    pub traditional_delay: f64,
    pub ratio: f64,
    /// `(n + 1 + 1/4 + 2/9) / ((n + 1)(1 + 1/4 + 1/9))`.
    pub bound: f64,
}

pub fn ratio_bound(n: usize) -> f64 {
    let m = (n + 1) as f64;
    (m + 0.25 + 2.0 / 9.0) / (m * (1.0 + 0.25 + 1.0 / 9.0))
}

/// The bound's limit as `n` grows.
pub const ASYMPTOTIC_RATIO: f64 = 36.0 / 49.0;

pub fn delay_ratio_with(n: usize, theta: f64, i_max: f64, truncation: Option<usize>) -> Result<DelayRatio> {
    let mia_delay: f64 = line_delay_recursion(n, theta, i_max, truncation)?.iter().sum();
    let traditional_delay = (n + 1) as f64 * i_max / theta;
    Ok(DelayRatio {
        n,
        mia_delay,
        traditional_delay,
        ratio: mia_delay / traditional_delay,
        bound: ratio_bound(n),
    })
}

/// Ratio under the three-hop truncation the bound is derived for.
pub fn delay_ratio(n: usize) -> DelayRatio {
    delay_ratio_with(n, 1.0, 1.0, Some(3)).expect("constant arguments are valid")
}

/// CSV with columns `n, mia_delay, trad_delay, ratio, bound` for `1..=n_max`.
pub fn write_ratio_csv<W: std::io::Write>(
    out: W,
    n_max: usize,
    theta: f64,
    i_max: f64,
    truncation: Option<usize>,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["n", "mia_delay", "trad_delay", "ratio", "bound"])?;
    for n in 1..=n_max {
        let r = delay_ratio_with(n, theta, i_max, truncation)?;
        w.serialize((n, r.mia_delay, r.traditional_delay, r.ratio, r.bound))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unicast::solve_min_delay;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn recursion_small_cases() {
        assert_eq!(line_delay_recursion(0, 2.0, 1.0, None).unwrap(), vec![0.5]);
        assert_eq!(line_delay_recursion(1, 1.0, 1.0, None).unwrap(), vec![1.0, 0.75]);
        let d = line_delay_recursion(2, 1.0, 1.0, None).unwrap();
        assert_abs_diff_eq!(d[2], 1.0 - 1.0 / 9.0 - 0.75 / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn recursion_respects_truncation() {
        let full = line_delay_recursion(4, 1.0, 1.0, None).unwrap();
        let cut = line_delay_recursion(4, 1.0, 1.0, Some(3)).unwrap();
        assert_eq!(full[..3], cut[..3]);
        assert_abs_diff_eq!(cut[3], 1.0 - cut[1] / 9.0 - cut[2] / 4.0, epsilon = 1e-15);
        assert!(cut[3] > full[3]);
    }

    #[test]
    fn later_stages_are_shorter() {
        for trunc in [None, Some(3)] {
            let d = line_delay_recursion(60, 1.0, 1.0, trunc).unwrap();
            assert!(d[1..].iter().all(|&x| x > 0.0 && x < d[0]));
        }
    }

    #[test]
    fn solve_line_matches_recursion() {
        let cfg = LineConfig::equally_spaced(2, CapacityLaw::inverse_square(1.0), 1.0);
        let sol = solve_line(&cfg).unwrap();
        let rec = line_delay_recursion(2, 1.0, 1.0, None).unwrap();
        assert_eq!(sol.relay_set, vec![1, 2]);
        for (st, d) in sol.schedule.stages.iter().zip(&rec) {
            assert_abs_diff_eq!(st.duration, *d, epsilon = 1e-14);
        }
    }

    #[test]
    fn no_relays_between_is_direct() {
        let cfg = LineConfig {
            source: 0.0,
            destination: 1.0,
            relays: vec![-1.0, 2.0],
            law: CapacityLaw::inverse_square(1.0),
            i_max: 1.0,
            truncation_radius: None,
        };
        let sol = solve_line(&cfg).unwrap();
        assert!(sol.relay_set.is_empty());
        assert_eq!(sol.delay, 1.0);
    }

    #[test]
    fn relays_behind_source_are_ignored() {
        let cfg = LineConfig {
            source: 0.0,
            destination: 3.0,
            relays: vec![-0.5, 1.0, 2.0],
            law: CapacityLaw::inverse_square(1.0),
            i_max: 1.0,
            truncation_radius: None,
        };
        assert_eq!(cfg.relays_between(), vec![2, 3]);
        let sol = solve_line(&cfg).unwrap();
        assert!(!sol.relay_set.contains(&1));
    }

    #[test]
    fn rejects_colocated_nodes() {
        let cfg = LineConfig {
            relays: vec![1.0, 1.0],
            ..LineConfig::equally_spaced(2, CapacityLaw::inverse_square(1.0), 1.0)
        };
        assert!(solve_line(&cfg).is_err());
    }

    #[test]
    fn random_lines_match_subset_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let n = rng.random_range(0..=5);
            let relays: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..12.0)).collect();
            let law = if rng.random_bool(0.5) {
                CapacityLaw::PowerLaw {
                    theta: rng.random_range(0.5..4.0),
                    alpha: 2.0,
                }
            } else {
                CapacityLaw::Awgn {
                    snr: rng.random_range(1.0..50.0),
                    alpha: 3.0,
                }
            };
            let cfg = LineConfig {
                source: 0.0,
                destination: 10.0,
                relays,
                law,
                i_max: 1.0,
                truncation_radius: None,
            };
            let line = solve_line(&cfg).unwrap();
            let full = solve_min_delay(&cfg.topology().unwrap()).unwrap();
            assert!((line.delay - full.delay).abs() <= 1e-9 * full.delay, "{cfg:?}");
        }
    }

    #[test]
    fn decoding_is_left_to_right() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let mut relays: Vec<f64> = (0..6).map(|_| rng.random_range(0.1..9.9)).collect();
            relays.sort_by(f64::total_cmp);
            let cfg = LineConfig {
                source: 0.0,
                destination: 10.0,
                relays,
                law: CapacityLaw::Awgn { snr: 20.0, alpha: 3.0 },
                i_max: 1.0,
                truncation_radius: None,
            };
            let sol = solve_line(&cfg).unwrap();
            let order = sol.schedule.decoding_order();
            assert!(order.windows(2).all(|w| w[0] < w[1]), "{order:?}");
        }
    }

    #[test]
    fn ratio_small_n() {
        let r = delay_ratio(1);
        assert_eq!(r.traditional_delay, 2.0);
        assert_eq!(r.mia_delay, 1.75);
        assert!(r.ratio < r.bound);
        assert_abs_diff_eq!(
            ratio_bound(1),
            (2.0 + 0.25 + 2.0 / 9.0) / (2.0 * (1.0 + 0.25 + 1.0 / 9.0)),
            epsilon = 1e-15
        );
    }

    #[test]
    fn ratio_csv_has_header_and_rows() {
        let mut buf = Vec::new();
        write_ratio_csv(&mut buf, 3, 1.0, 1.0, Some(3)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "n,mia_delay,trad_delay,ratio,bound");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("1,1.75,2.0,0.875,"));
    }
}
