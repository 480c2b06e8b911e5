//! Seeded batch of random topologies comparing the optimal route against the
//! heuristics and the shortest path.
//!
//! CSV layout: one row per instance in seed order with columns
//! `seed, delay_opt, delay_h1, delay_h2, delay_sp, r_h1, r_h2, r_sp`, where
//! each ratio is the method's delay over `delay_opt`. Summary rows follow,
//! labelled in the `seed` column (`mean`, `p10`, `p50`, `p90`, `max`).

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::heuristics::{heuristic1, heuristic2};
use crate::network::{gen_random_topology, TopologyGenConfig};
use crate::unicast::{solve_min_delay_with, traditional_shortest_path, SearchOptions};

/// Largest relay count the batch accepts.
pub const MAX_BATCH_RELAYS: usize = 22;

#[derive(Debug, Clone)]
pub struct CdfConfig {
    pub n_relays: usize,
    pub instances: usize,
    pub seed0: u64,
    pub alpha: f64,
    pub i_max: f64,
    pub parallel: bool,
    pub budget_cap: usize,
}

impl Default for CdfConfig {
    fn default() -> Self {
        CdfConfig {
            n_relays: 20,
            instances: 100,
            seed0: 0,
            alpha: 3.0,
            i_max: 1.0,
            parallel: true,
            budget_cap: MAX_BATCH_RELAYS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InstanceResult {
    pub seed: u64,
    pub delay_opt: f64,
    pub delay_h1: f64,
    pub delay_h2: f64,
    pub delay_sp: f64,
    pub r_h1: f64,
    pub r_h2: f64,
    pub r_sp: f64,
}

pub fn run_instance(cfg: &CdfConfig, seed: u64) -> Result<InstanceResult> {
    let topo = gen_random_topology(&TopologyGenConfig {
        n_relays: cfg.n_relays,
        alpha: cfg.alpha,
        i_max: cfg.i_max,
        seed,
        ..Default::default()
    })?;
    let opts = SearchOptions {
        prune: true,
        parallel: cfg.parallel,
        budget_cap: cfg.budget_cap.min(MAX_BATCH_RELAYS),
    };
    let delay_opt = solve_min_delay_with(&topo, &opts)?.0.delay;
    let delay_h1 = heuristic1(&topo)?.delay;
    let delay_h2 = heuristic2(&topo)?.delay;
    let delay_sp = traditional_shortest_path(&topo)?.delay;
    Ok(InstanceResult {
        seed,
        delay_opt,
        delay_h1,
        delay_h2,
        delay_sp,
        r_h1: delay_h1 / delay_opt,
        r_h2: delay_h2 / delay_opt,
        r_sp: delay_sp / delay_opt,
    })
}

/// Runs every instance; results come back in seed order.
pub fn run_cdf(cfg: &CdfConfig) -> Result<Vec<InstanceResult>> {
    let cap = cfg.budget_cap.min(MAX_BATCH_RELAYS);
    if cfg.n_relays > cap {
        return Err(Error::BudgetExceeded {
            what: "random-topology batch",
            size: cfg.n_relays,
            cap,
        });
    }
    if cfg.instances == 0 {
        return Err(invalid("instances must be at least 1"));
    }
    let seeds: Vec<u64> = (0..cfg.instances as u64).map(|i| cfg.seed0 + i).collect();
    if cfg.parallel {
        seeds.par_iter().map(|&s| run_instance(cfg, s)).collect()
    } else {
        seeds.iter().map(|&s| run_instance(cfg, s)).collect()
    }
}

/// Nearest-rank percentile of `values` (need not be sorted), `q` in `[0, 1]`.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: &'static str,
    pub values: [f64; 7],
}

pub fn summary(results: &[InstanceResult]) -> Vec<SummaryRow> {
    let columns: [Vec<f64>; 7] = [
        results.iter().map(|r| r.delay_opt).collect(),
        results.iter().map(|r| r.delay_h1).collect(),
        results.iter().map(|r| r.delay_h2).collect(),
        results.iter().map(|r| r.delay_sp).collect(),
        results.iter().map(|r| r.r_h1).collect(),
        results.iter().map(|r| r.r_h2).collect(),
        results.iter().map(|r| r.r_sp).collect(),
    ];
    let row = |label, f: &dyn Fn(&[f64]) -> f64| SummaryRow {
        label,
        values: std::array::from_fn(|k| f(&columns[k])),
    };
    vec![
        row("mean", &mean),
        row("p10", &|v| percentile(v, 0.1)),
        row("p50", &|v| percentile(v, 0.5)),
        row("p90", &|v| percentile(v, 0.9)),
        row("max", &|v| percentile(v, 1.0)),
    ]
}

pub const CSV_HEADER: [&str; 8] = [
    "seed",
    "delay_opt",
    "delay_h1",
    "delay_h2",
    "delay_sp",
    "r_h1",
    "r_h2",
    "r_sp",
];

pub fn write_cdf_csv<W: Write>(out: W, results: &[InstanceResult]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in results {
        w.serialize(r)?;
    }
    for s in summary(results) {
        let v = s.values;
        w.serialize((s.label, v[0], v[1], v[2], v[3], v[4], v[5], v[6]))?;
    }
    w.flush()?;
    Ok(())
}

/// Fraction of instances with `ratio <= threshold`.
pub fn fraction_within(results: &[InstanceResult], ratio: impl Fn(&InstanceResult) -> f64, threshold: f64) -> f64 {
    results.iter().filter(|r| ratio(r) <= threshold).count() as f64 / results.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(instances: usize) -> CdfConfig {
        CdfConfig {
            n_relays: 6,
            instances,
            seed0: 11,
            ..Default::default()
        }
    }

    #[test]
    fn one_instance_gives_one_row_plus_summary() {
        let res = run_cdf(&small(1)).unwrap();
        let mut buf = Vec::new();
        write_cdf_csv(&mut buf, &res).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert!(lines[1].starts_with("11,"));
        assert_eq!(lines.len(), 1 + 1 + 5);
    }

    #[test]
    fn ratios_at_least_one_and_ordered() {
        let res = run_cdf(&small(20)).unwrap();
        for (i, r) in res.iter().enumerate() {
            assert_eq!(r.seed, 11 + i as u64);
            for x in [r.r_h1, r.r_h2, r.r_sp] {
                assert!(x >= 1.0 - 1e-9);
            }
            assert!(r.delay_h1 <= r.delay_sp * (1.0 + 1e-9));
        }
    }

    #[test]
    fn deterministic_across_thread_modes() {
        let a = run_cdf(&small(8)).unwrap();
        let b = run_cdf(&CdfConfig {
            parallel: false,
            ..small(8)
        })
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn guards() {
        assert!(matches!(
            run_cdf(&CdfConfig {
                n_relays: 23,
                ..Default::default()
            }),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(run_cdf(&small(0)).is_err());
    }

    #[test]
    fn percentiles() {
        let v = [5.0, 1.0, 4.0, 2.0, 3.0];
        assert_eq!(percentile(&v, 0.5), 3.0);
        assert_eq!(percentile(&v, 1.0), 5.0);
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(mean(&v), 3.0);
    }
}
