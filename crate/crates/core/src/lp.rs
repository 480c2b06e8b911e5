//! Linear-programming oracle.
//!
//! For a fixed decoding order the minimum-delay schedule is a small linear
//! program over stage lengths `Delta_j` and per-stage transmission times
//! `A_ij` (node `i` transmitting during stage `j`, allowed only once `i` has
//! decoded, i.e. `i <= j`). Solving that program for every ordered relay
//! subset (unicast) or every permutation (broadcast) is the brute-force
//! baseline the greedy solvers are checked against.
//!
//! The solver is a dense two-phase tableau simplex with Bland's rule.

use std::fmt;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::network::{NodeId, Topology};

pub const PIVOT_TOL: f64 = 1e-10;
pub const FEASIBILITY_TOL: f64 = 1e-8;
const OPTIMALITY_TOL: f64 = 1e-10;
const MAX_PIVOTS: usize = 100_000;

/// Default refusal threshold for the exhaustive enumerations.
pub const DEFAULT_EXHAUSTIVE_CAP: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    NonNegative,
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `minimize c^T x` subject to row constraints and per-variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<Bound>,
}

impl LpProblem {
    /// All variables nonnegative.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LpProblem {
            objective,
            constraints: Vec::new(),
            bounds: vec![Bound::NonNegative; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }

    /// Sparse form of [`LpProblem::add`].
    pub fn add_terms(&mut self, terms: &[(usize, f64)], relation: Relation, rhs: f64) -> &mut Self {
        let mut coeffs = vec![0.0; self.num_vars()];
        for &(j, v) in terms {
            coeffs[j] += v;
        }
        self.add(coeffs, relation, rhs)
    }

    pub fn with_all_free(&self) -> Self {
        LpProblem {
            bounds: vec![Bound::Free; self.num_vars()],
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(invalid(format!("{} bounds for {n} variables", self.bounds.len())));
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite objective coefficient"));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(invalid(format!(
                    "row {i} has {} coefficients, expected {n}",
                    c.coeffs.len()
                )));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("row {i} has non-finite data")));
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound by `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (b, &xi) in self.bounds.iter().zip(x) {
            if *b == Bound::NonNegative {
                worst = worst.max(-xi);
            }
        }
        worst
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

/// Plain-text dump, one row per line.
impl fmt::Display for LpProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let row = |f: &mut fmt::Formatter<'_>, coeffs: &[f64]| -> fmt::Result {
            for v in coeffs {
                write!(f, " {v:>10.4}")?;
            }
            Ok(())
        };
        write!(f, "min  ")?;
        row(f, &self.objective)?;
        writeln!(f)?;
        for c in &self.constraints {
            write!(f, "s.t.")?;
            row(f, &c.coeffs)?;
            let rel = match c.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "==",
            };
            writeln!(f, "  {rel} {:.6}", c.rhs)?;
        }
        write!(f, "free:")?;
        for (j, b) in self.bounds.iter().enumerate() {
            if *b == Bound::Free {
                write!(f, " x{j}")?;
            }
        }
        writeln!(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// `NaN` unless optimal.
    pub objective: f64,
    /// Empty unless optimal.
    pub x: Vec<f64>,
    pub pivots: usize,
}

impl LpSolution {
    fn without_point(status: LpStatus, pivots: usize) -> Self {
        LpSolution {
            status,
            objective: f64::NAN,
            x: Vec::new(),
            pivots,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ColumnKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau {
    /// `rows x (cols + 1)`; last column is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    kinds: Vec<ColumnKind>,
    pivots: usize,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn cols(&self) -> usize {
        self.kinds.len()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.cols() + 1;
        let p = self.t[r][c];
        for v in &mut self.t[r] {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for k in 0..width {
                    row[k] -= f * pivot_row[k];
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        let rhs = self.cols();
        self.basis
            .iter()
            .enumerate()
            .map(|(i, &b)| cost[b] * self.t[i][rhs])
            .sum()
    }

    /// Primal simplex with Bland's rule: lowest-index improving column enters;
    /// among minimum-ratio rows the lowest-index basic variable leaves.
    fn optimize(&mut self, cost: &[f64], allow_artificial: bool) -> Result<Phase> {
        let rhs = self.cols();
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(invalid("simplex pivot limit exceeded"));
            }
            let entering = (0..self.cols()).find(|&j| {
                if !allow_artificial && self.kinds[j] == ColumnKind::Artificial {
                    return false;
                }
                if self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j]
                    - self
                        .basis
                        .iter()
                        .enumerate()
                        .map(|(i, &b)| cost[b] * self.t[i][j])
                        .sum::<f64>();
                reduced < -OPTIMALITY_TOL
            });
            let Some(c) = entering else {
                return Ok(Phase::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][c];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.t[i][rhs] / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        let tie = (ratio - best).abs() <= 1e-12 * best.abs().max(1.0);
                        if ratio < best && !tie || tie && self.basis[i] < self.basis[r] {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else {
                return Ok(Phase::Unbounded);
            };
            self.pivot(r, c);
        }
    }
}

/// Two-phase dense simplex.
pub fn simplex_solve(p: &LpProblem) -> Result<LpSolution> {
    p.validate()?;
    let n = p.num_vars();

    // Structural columns: one per nonnegative variable, two (x+, x-) per free one.
    let mut col_of: Vec<(usize, Option<usize>)> = Vec::with_capacity(n);
    let mut kinds = Vec::new();
    for b in &p.bounds {
        let pos = kinds.len();
        kinds.push(ColumnKind::Structural);
        let neg = if *b == Bound::Free {
            kinds.push(ColumnKind::Structural);
            Some(pos + 1)
        } else {
            None
        };
        col_of.push((pos, neg));
    }
    let structural = kinds.len();

    // Normalize rows to a nonnegative right-hand side.
    let rows: Vec<(Vec<f64>, Relation, f64)> = p
        .constraints
        .iter()
        .map(|c| {
            let mut coeffs = vec![0.0; structural];
            for (j, &v) in c.coeffs.iter().enumerate() {
                coeffs[col_of[j].0] = v;
                if let Some(neg) = col_of[j].1 {
                    coeffs[neg] = -v;
                }
            }
            if c.rhs < 0.0 {
                let flipped = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (coeffs.iter().map(|v| -v).collect(), flipped, -c.rhs)
            } else {
                (coeffs, c.relation, c.rhs)
            }
        })
        .collect();

    let m = rows.len();
    let mut slack_col = vec![None; m];
    let mut art_col = vec![None; m];
    for (i, (_, rel, _)) in rows.iter().enumerate() {
        if *rel != Relation::Eq {
            slack_col[i] = Some(kinds.len());
            kinds.push(ColumnKind::Slack);
        }
        if *rel != Relation::Le {
            art_col[i] = Some(kinds.len());
            kinds.push(ColumnKind::Artificial);
        }
    }
    let cols = kinds.len();
    let mut t = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0; m];
    for (i, (coeffs, rel, rhs)) in rows.into_iter().enumerate() {
        t[i][..structural].copy_from_slice(&coeffs);
        t[i][cols] = rhs;
        if let Some(s) = slack_col[i] {
            t[i][s] = if rel == Relation::Le { 1.0 } else { -1.0 };
        }
        basis[i] = match (rel, art_col[i]) {
            (Relation::Le, _) => slack_col[i].expect("slack for <= row"),
            (_, Some(a)) => {
                t[i][a] = 1.0;
                a
            }
            _ => unreachable!(),
        };
    }
    let mut tab = Tableau {
        t,
        basis,
        kinds,
        pivots: 0,
    };

    // Phase 1: drive the artificials to zero.
    if art_col.iter().any(Option::is_some) {
        let phase1: Vec<f64> = tab
            .kinds
            .iter()
            .map(|k| if *k == ColumnKind::Artificial { 1.0 } else { 0.0 })
            .collect();
        tab.optimize(&phase1, true)?;
        let scale = 1.0 + p.constraints.iter().map(|c| c.rhs.abs()).fold(0.0, f64::max);
        if tab.objective(&phase1) > FEASIBILITY_TOL * scale {
            return Ok(LpSolution::without_point(LpStatus::Infeasible, tab.pivots));
        }
        // Pivot zero-valued artificials out where possible; rows where that is
        // impossible are redundant and stay inert.
        for r in 0..m {
            if tab.kinds[tab.basis[r]] != ColumnKind::Artificial {
                continue;
            }
            if let Some(c) =
                (0..cols).find(|&j| tab.kinds[j] != ColumnKind::Artificial && tab.t[r][j].abs() > PIVOT_TOL)
            {
                tab.pivot(r, c);
            }
        }
    }

    // Phase 2.
    let mut cost = vec![0.0; cols];
    for (j, &(pos, neg)) in col_of.iter().enumerate() {
        cost[pos] = p.objective[j];
        if let Some(neg) = neg {
            cost[neg] = -p.objective[j];
        }
    }
    if let Phase::Unbounded = tab.optimize(&cost, false)? {
        return Ok(LpSolution::without_point(LpStatus::Unbounded, tab.pivots));
    }

    let mut values = vec![0.0; cols];
    for (i, &b) in tab.basis.iter().enumerate() {
        values[b] = tab.t[i][cols];
    }
    let x: Vec<f64> = col_of
        .iter()
        .map(|&(pos, neg)| values[pos] - neg.map_or(0.0, |c| values[c]))
        .collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: p.evaluate(&x),
        x,
        pivots: tab.pivots,
    })
}

/// A per-ordering delay LP with its variable layout.
///
/// Position `0` is the source; positions `1..len` follow the given ordering;
/// the last position is the node whose decoding ends the schedule. Stage `j`
/// runs from the decoding of position `j` to that of position `j + 1`.
#[derive(Debug, Clone)]
pub struct OrderingLp {
    pub problem: LpProblem,
    /// Node at each position.
    pub nodes: Vec<NodeId>,
    /// `a_index[i][j]`: column of `A_ij` (position `i` sending in stage `j`), for `i <= j`.
    pub a_index: Vec<Vec<Option<usize>>>,
    pub delta_index: Vec<usize>,
}

impl OrderingLp {
    fn build(topo: &Topology, nodes: Vec<NodeId>) -> Self {
        let stages = nodes.len() - 1;
        let mut a_index = vec![vec![None; stages]; stages];
        let mut next = 0;
        for j in 0..stages {
            for row in a_index.iter_mut().take(j + 1) {
                row[j] = Some(next);
                next += 1;
            }
        }
        let delta_index: Vec<usize> = (next..next + stages).collect();
        let mut objective = vec![0.0; next + stages];
        for &d in &delta_index {
            objective[d] = 1.0;
        }
        let mut problem = LpProblem::new(objective);
        // Position m must have collected i_max bits by the end of stage m - 1.
        for m in 1..nodes.len() {
            let mut terms = Vec::new();
            for (i, row) in a_index.iter().enumerate().take(m) {
                for col in row.iter().take(m).flatten() {
                    terms.push((*col, topo.capacity(nodes[i], nodes[m])));
                }
            }
            problem.add_terms(&terms, Relation::Ge, topo.i_max());
        }
        // Transmissions within a stage share its length.
        for j in 0..stages {
            let mut terms: Vec<(usize, f64)> = (0..=j).map(|i| (a_index[i][j].expect("i <= j"), 1.0)).collect();
            terms.push((delta_index[j], -1.0));
            problem.add_terms(&terms, Relation::Le, 0.0);
        }
        OrderingLp {
            problem,
            nodes,
            a_index,
            delta_index,
        }
    }

    pub fn stages(&self) -> usize {
        self.delta_index.len()
    }

    /// Positions transmitting for more than `tol` in stage `j` of solution `x`.
    pub fn transmitters_in_stage(&self, x: &[f64], j: usize, tol: f64) -> Vec<usize> {
        (0..=j)
            .filter(|&i| x[self.a_index[i][j].expect("i <= j")] > tol)
            .collect()
    }
}

fn check_permutation(topo: &Topology, items: &[NodeId], allowed: impl Fn(NodeId) -> bool) -> Result<()> {
    let mut seen = vec![false; topo.node_count()];
    for &r in items {
        if r >= seen.len() || !allowed(r) {
            return Err(invalid(format!("node {r} not allowed in this ordering")));
        }
        if seen[r] {
            return Err(invalid(format!("node {r} repeated in ordering")));
        }
        seen[r] = true;
    }
    Ok(())
}

/// Delay LP for a unicast relay ordering (relays in intended decoding order).
pub fn build_unicast_lp(topo: &Topology, ordering: &[NodeId]) -> Result<OrderingLp> {
    check_permutation(topo, ordering, |r| topo.relays().contains(&r))?;
    let mut nodes = vec![topo.source()];
    nodes.extend_from_slice(ordering);
    nodes.push(topo.destination());
    Ok(OrderingLp::build(topo, nodes))
}

/// Delay LP for a broadcast decoding order, which must list every non-source node.
pub fn build_broadcast_lp(topo: &Topology, ordering: &[NodeId]) -> Result<OrderingLp> {
    check_permutation(topo, ordering, |r| r != topo.source())?;
    if ordering.len() != topo.node_count() - 1 {
        return Err(invalid("broadcast ordering must contain every non-source node"));
    }
    let mut nodes = vec![topo.source()];
    nodes.extend_from_slice(ordering);
    Ok(OrderingLp::build(topo, nodes))
}

/// Delay LP restricted to one transmitter per stage, the node that decoded
/// last: variables are the stage lengths alone. Its optimum is strictly
/// positive whenever every stage is needed, which makes it a natural test
/// case for dropping the nonnegativity bounds.
pub fn build_single_transmitter_lp(topo: &Topology, ordering: &[NodeId]) -> Result<LpProblem> {
    check_permutation(topo, ordering, |r| topo.relays().contains(&r))?;
    let mut nodes = vec![topo.source()];
    nodes.extend_from_slice(ordering);
    nodes.push(topo.destination());
    let stages = nodes.len() - 1;
    let mut p = LpProblem::new(vec![1.0; stages]);
    for m in 1..nodes.len() {
        let terms: Vec<(usize, f64)> = (0..m).map(|j| (j, topo.capacity(nodes[j], nodes[m]))).collect();
        p.add_terms(&terms, Relation::Ge, topo.i_max());
    }
    Ok(p)
}

/// Outcome of a brute-force enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveResult {
    pub delay: f64,
    /// Best ordering (relays for unicast, all receivers for broadcast).
    pub ordering: Vec<NodeId>,
    pub lp_runs: u64,
    pub solution: LpSolution,
}

fn permutations(items: &[NodeId]) -> Vec<Vec<NodeId>> {
    fn rec(rest: &mut Vec<NodeId>, prefix: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..rest.len() {
            let v = rest.remove(k);
            prefix.push(v);
            rec(rest, prefix, out);
            prefix.pop();
            rest.insert(k, v);
        }
    }
    let mut out = Vec::new();
    rec(&mut items.to_vec(), &mut Vec::new(), &mut out);
    out
}

/// Every ordered subset of `items`, including the empty one.
fn ordered_subsets(items: &[NodeId]) -> Vec<Vec<NodeId>> {
    let n = items.len();
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        let subset: Vec<NodeId> = (0..n).filter(|k| mask & (1 << k) != 0).map(|k| items[k]).collect();
        out.extend(permutations(&subset));
    }
    out
}

fn best_of(
    orderings: Vec<Vec<NodeId>>,
    build: impl Fn(&[NodeId]) -> Result<OrderingLp> + Sync,
) -> Result<ExhaustiveResult> {
    let runs = orderings.len() as u64;
    let solved: Vec<(usize, LpSolution)> = orderings
        .par_iter()
        .enumerate()
        .map(|(k, o)| build(o).and_then(|lp| simplex_solve(&lp.problem)).map(|s| (k, s)))
        .collect::<Result<_>>()?;
    let (k, sol) = solved
        .into_iter()
        .filter(|(_, s)| s.is_optimal())
        .min_by(|a, b| a.1.objective.total_cmp(&b.1.objective).then(a.0.cmp(&b.0)))
        .ok_or_else(|| Error::Infeasible("no ordering admits a feasible schedule".into()))?;
    Ok(ExhaustiveResult {
        delay: sol.objective,
        ordering: orderings[k].clone(),
        lp_runs: runs,
        solution: sol,
    })
}

/// Minimum over all ordered relay subsets of the per-ordering LP optimum;
/// `sum_{m=0}^{n} C(n, m) m!` programs.
pub fn exhaustive_unicast(topo: &Topology, cap: usize) -> Result<ExhaustiveResult> {
    let n = topo.n_relays();
    if n > cap {
        return Err(Error::BudgetExceeded {
            what: "exhaustive unicast LP enumeration",
            size: n,
            cap,
        });
    }
    let relays: Vec<NodeId> = topo.relays().collect();
    best_of(ordered_subsets(&relays), |o| build_unicast_lp(topo, o))
}

/// Minimum over all `n!` broadcast decoding orders of the per-ordering LP optimum.
pub fn exhaustive_broadcast(topo: &Topology, cap: usize) -> Result<ExhaustiveResult> {
    let n = topo.node_count() - 1;
    if n > cap {
        return Err(Error::BudgetExceeded {
            what: "exhaustive broadcast LP enumeration",
            size: n,
            cap,
        });
    }
    let receivers: Vec<NodeId> = (1..topo.node_count()).collect();
    best_of(permutations(&receivers), |o| build_broadcast_lp(topo, o))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InactiveCheck {
    /// Dropping the bounds left the optimum unchanged.
    Unchanged,
    /// The relaxed problem reached a different value (`-inf` if unbounded).
    Changed { relaxed_objective: f64 },
    /// The solution is not strictly inside the bounds; the check says nothing.
    Inapplicable,
}

/// Re-solves `p` with every variable free, provided `sol` is an optimum whose
/// bounded variables are all strictly positive. For such an interior optimum
/// the bounds are inactive and removing them must not change the optimum.
pub fn inactive_constraint_check(p: &LpProblem, sol: &LpSolution) -> Result<InactiveCheck> {
    const INTERIOR: f64 = 1e-8;
    if !sol.is_optimal() || sol.x.len() != p.num_vars() {
        return Ok(InactiveCheck::Inapplicable);
    }
    let interior = p
        .bounds
        .iter()
        .zip(&sol.x)
        .all(|(b, &x)| *b == Bound::Free || x > INTERIOR);
    if !interior {
        return Ok(InactiveCheck::Inapplicable);
    }
    let relaxed = simplex_solve(&p.with_all_free())?;
    Ok(match relaxed.status {
        LpStatus::Optimal if (relaxed.objective - sol.objective).abs() <= 1e-7 * sol.objective.abs().max(1.0) => {
            InactiveCheck::Unchanged
        }
        LpStatus::Optimal => InactiveCheck::Changed {
            relaxed_objective: relaxed.objective,
        },
        _ => InactiveCheck::Changed {
            relaxed_objective: f64::NEG_INFINITY,
        },
    })
}
