//! Max-min fair joint routing/admission optimization over one window
//! segment.
//!
//! A segment covers consecutive window steps that share a single routing
//! decision; admission rates are chosen per step. The solver repeatedly
//! maximizes a common rate for all unsaturated commodity-steps, identifies
//! the ones that cannot individually exceed it (the saturated set), pins
//! them, and continues until every commodity-step is saturated. The final
//! rates are max-min fair per step.
//!
//! The common-rate and single-rate subproblems multiply the scalar rate by
//! the routing variables, so they are solved by bisection over the scalar
//! with an LP feasibility oracle in the routing variables only: shrinking
//! rates only relaxes constraints for a fixed routing, which makes the
//! feasibility predicate monotone.

use crate::lp::{LinearProgram, LpError, Relation, Sense};
use crate::net::{
    AdmissionVector, CapacitySnapshot, DemandVector, NetError, NetworkTopology, RoutingMatrix,
};
use serde::Serialize;
use thiserror::Error;

/// Bisection terminates when the bracketing interval is this wide.
pub const BISECT_TOL: f64 = 1e-6;
/// A candidate saturates when its individual optimum stays within this
/// distance of the common rate (10x the bisection tolerance, absorbing
/// compounded bisection error on both sides).
pub const SATURATION_TOL: f64 = 10.0 * BISECT_TOL;
/// Residual-graph slack threshold.
pub const SLACK_TOL: f64 = 1e-6;
/// Tolerance used when the feasibility oracle checks a fixed routing
/// directly (matches the LP feasibility acceptance).
const ORACLE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MaxMinError {
    #[error("fixed rates are inconsistent: infeasible even at zero common rate")]
    InconsistentFixedRates,
    #[error("candidate rates are infeasible even at the current saturation values")]
    InfeasibleSolution,
    #[error("bisection feasibility predicate is not monotone: {0}")]
    NonMonotone(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Routing regime of a segment: either freely re-optimized at the segment
/// start, or inherited unchanged from the previous configuration.
#[derive(Debug, Clone)]
pub enum RoutingMode {
    Free,
    Fixed(RoutingMatrix),
}

/// Consecutive window steps sharing one routing decision. Effective
/// capacities already incorporate any scratch reservation for a planned
/// re-route one step ahead.
#[derive(Debug, Clone)]
pub struct Subdivision {
    pub start: usize,
    pub end: usize,
    pub effective_caps: Vec<CapacitySnapshot>,
    pub mode: RoutingMode,
}

impl Subdivision {
    pub fn new(
        start: usize,
        end: usize,
        effective_caps: Vec<CapacitySnapshot>,
        mode: RoutingMode,
    ) -> Result<Self, NetError> {
        if end < start {
            return Err(NetError::DimensionMismatch(format!(
                "segment end {} before start {}",
                end, start
            )));
        }
        if effective_caps.len() != end - start + 1 {
            return Err(NetError::DimensionMismatch(format!(
                "{} capacity snapshots for steps {}..={}",
                effective_caps.len(),
                start,
                end
            )));
        }
        Ok(Self { start, end, effective_caps, mode })
    }

    pub fn num_steps(&self) -> usize {
        self.end - self.start + 1
    }
}

/// Index of one commodity at one window step within a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct CommodityStep {
    /// Commodity slot in the topology's commodity list.
    pub slot: usize,
    /// Step offset within the segment (0 = segment start).
    pub step: usize,
}

/// Saturation-based allocation result for one segment.
#[derive(Debug, Clone)]
pub struct Solution {
    /// Admission rates per segment step.
    pub admissions: Vec<AdmissionVector>,
    /// The single routing shared by every step of the segment.
    pub routing: RoutingMatrix,
    /// Saturation rate per (step, slot).
    pub saturation: Vec<Vec<f64>>,
    pub iterations: Vec<IterationRecord>,
}

impl Solution {
    /// Sum of admission rates over all commodities and steps.
    pub fn total_admission(&self) -> f64 {
        self.admissions.iter().map(|a| a.sum()).sum()
    }
}

/// One saturation iteration, serializable for debugging.
#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub index: usize,
    pub common_rate: f64,
    pub candidates: Vec<CommodityStep>,
    pub confirmed: Vec<CommodityStep>,
    /// The residual-graph prefilter confirmed nothing and the iteration was
    /// re-run with the exhaustive candidate set.
    pub fell_back_to_exhaustive: bool,
    /// No candidate confirmed even exhaustively; the minimal single-rate
    /// candidates were saturated to guarantee progress.
    pub forced_progress: bool,
}

/// How saturation candidates are picked each iteration. The residual-graph
/// prefilter is an accelerator; the exhaustive set is the reference and the
/// default in debug/test builds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateMode {
    Exhaustive,
    ResidualGraph,
}

impl Default for CandidateMode {
    fn default() -> Self {
        if cfg!(debug_assertions) {
            CandidateMode::Exhaustive
        } else {
            CandidateMode::ResidualGraph
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub bisect_tol: f64,
    pub saturation_tol: f64,
    pub slack_tol: f64,
    pub candidate_mode: CandidateMode,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            bisect_tol: BISECT_TOL,
            saturation_tol: SATURATION_TOL,
            slack_tol: SLACK_TOL,
            candidate_mode: CandidateMode::default(),
        }
    }
}

/// Per-(step, slot) admission rates used by the feasibility oracle.
type RateMatrix = Vec<Vec<f64>>;

/// Checks whether one routing can support the given per-step rates within
/// the segment's effective capacities; returns a witness routing when
/// feasible.
///
/// A commodity whose rate is zero at every step routes nothing and carries
/// no conservation rows. In fixed-routing mode the check is direct
/// arithmetic on the inherited fractions.
fn feasible_with_rates(
    topo: &NetworkTopology,
    d: &DemandVector,
    sub: &Subdivision,
    rates: &RateMatrix,
) -> Result<Option<RoutingMatrix>, MaxMinError> {
    let n_comm = topo.num_commodities();
    let n_edges = topo.num_edges();
    let n_steps = sub.num_steps();

    match &sub.mode {
        RoutingMode::Fixed(routing) => {
            for h in 0..n_steps {
                let caps = &sub.effective_caps[h];
                for e in 0..n_edges {
                    let load: f64 = (0..n_comm)
                        .map(|slot| {
                            rates[h][slot]
                                * d.of_node(topo.commodities()[slot])
                                * routing.get(slot, e)
                        })
                        .sum();
                    if load > caps.get(e) + ORACLE_TOL {
                        return Ok(None);
                    }
                }
            }
            Ok(Some(routing.clone()))
        }
        RoutingMode::Free => {
            let active: Vec<bool> = (0..n_comm)
                .map(|slot| (0..n_steps).any(|h| rates[h][slot] > 0.0))
                .collect();
            let mut lp = LinearProgram::new(Sense::Feasibility);
            // One fraction variable per (commodity, edge); inactive
            // commodities and structurally-zero fractions are pinned.
            for slot in 0..n_comm {
                let source = topo.commodities()[slot];
                for e in 0..n_edges {
                    let edge = &topo.edges()[e];
                    let pinned = !active[slot]
                        || edge.to == source
                        || edge.from == topo.destination();
                    let upper = if pinned { 0.0 } else { 1.0 };
                    lp.add_var(0.0, upper, 0.0);
                }
            }
            let var = |slot: usize, e: usize| slot * n_edges + e;
            // Flow conservation per active commodity and node; the
            // destination row is implied by the others.
            for slot in 0..n_comm {
                if !active[slot] {
                    continue;
                }
                let source = topo.commodities()[slot];
                for node in 0..topo.num_nodes() {
                    if node == topo.destination() {
                        continue;
                    }
                    let mut coeffs: Vec<(usize, f64)> = Vec::new();
                    for &e in topo.in_edges(node) {
                        coeffs.push((var(slot, e), 1.0));
                    }
                    for &e in topo.out_edges(node) {
                        coeffs.push((var(slot, e), -1.0));
                    }
                    let rhs = if node == source { -1.0 } else { 0.0 };
                    lp.add_row(Relation::Eq, rhs, &coeffs);
                }
            }
            // Per-step capacity rows.
            for h in 0..n_steps {
                let caps = &sub.effective_caps[h];
                for e in 0..n_edges {
                    let mut coeffs: Vec<(usize, f64)> = Vec::new();
                    for slot in 0..n_comm {
                        let weight = rates[h][slot] * d.of_node(topo.commodities()[slot]);
                        if weight > 0.0 {
                            coeffs.push((var(slot, e), weight));
                        }
                    }
                    if !coeffs.is_empty() {
                        lp.add_row(Relation::Le, caps.get(e), &coeffs);
                    }
                }
            }
            match lp.solve()? {
                crate::lp::LpOutcome::Optimal { assignment, .. } => {
                    let mut routing = RoutingMatrix::zeros(topo);
                    for slot in 0..n_comm {
                        for e in 0..n_edges {
                            routing.set(slot, e, assignment[var(slot, e)]);
                        }
                    }
                    Ok(Some(routing))
                }
                _ => Ok(None),
            }
        }
    }
}

fn build_rates(
    n_steps: usize,
    n_comm: usize,
    saturated: &[Vec<Option<f64>>],
    default_rate: f64,
) -> RateMatrix {
    (0..n_steps)
        .map(|h| {
            (0..n_comm)
                .map(|slot| saturated[h][slot].unwrap_or(default_rate))
                .collect()
        })
        .collect()
}

/// Largest common rate for the unsaturated commodity-steps, holding the
/// saturated ones at their values; returns the rate and a witness routing.
pub fn max_common_rate(
    topo: &NetworkTopology,
    d: &DemandVector,
    sub: &Subdivision,
    saturated: &[Vec<Option<f64>>],
    opts: &SolveOptions,
) -> Result<(f64, RoutingMatrix), MaxMinError> {
    let n_comm = topo.num_commodities();
    let n_steps = sub.num_steps();
    let probe = |z: f64| -> Result<Option<RoutingMatrix>, MaxMinError> {
        let rates = build_rates(n_steps, n_comm, saturated, z);
        feasible_with_rates(topo, d, sub, &rates)
    };
    bisect_rate(probe, opts).map_err(|e| match e {
        MaxMinError::InconsistentFixedRates => MaxMinError::InconsistentFixedRates,
        other => other,
    })
}

/// Largest feasible rate for one commodity-step with every other rate held
/// fixed.
pub fn max_single_rate(
    topo: &NetworkTopology,
    d: &DemandVector,
    sub: &Subdivision,
    target: CommodityStep,
    others: &RateMatrix,
    opts: &SolveOptions,
) -> Result<f64, MaxMinError> {
    let probe = |z: f64| -> Result<Option<RoutingMatrix>, MaxMinError> {
        let mut rates = others.clone();
        rates[target.step][target.slot] = z;
        feasible_with_rates(topo, d, sub, &rates)
    };
    bisect_rate(probe, opts).map(|(z, _)| z)
}

/// Monotone bisection over a rate in [0, 1]. The lower end stays feasible
/// and the upper end infeasible by construction; in debug builds the final
/// lower end is re-verified and a failure aborts with diagnostics.
fn bisect_rate<P>(mut probe: P, opts: &SolveOptions) -> Result<(f64, RoutingMatrix), MaxMinError>
where
    P: FnMut(f64) -> Result<Option<RoutingMatrix>, MaxMinError>,
{
    let witness_zero = probe(0.0)?.ok_or(MaxMinError::InconsistentFixedRates)?;
    if let Some(w) = probe(1.0)? {
        return Ok((1.0, w));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut witness = witness_zero;
    while hi - lo > opts.bisect_tol {
        let mid = 0.5 * (lo + hi);
        match probe(mid)? {
            Some(w) => {
                lo = mid;
                witness = w;
            }
            None => hi = mid,
        }
    }
    if cfg!(debug_assertions) && lo > 0.0 && probe(lo)?.is_none() {
        return Err(MaxMinError::NonMonotone(format!(
            "rate {} was feasible during bisection but infeasible on re-check",
            lo
        )));
    }
    Ok((lo, witness))
}

/// Unsaturated commodity-steps with no slack path from their source to the
/// destination in the per-step residual graph. A heuristic prefilter only:
/// saturation is always confirmed by the single-rate solve.
pub fn residual_candidates(
    topo: &NetworkTopology,
    d: &DemandVector,
    sub: &Subdivision,
    rates: &RateMatrix,
    routing: &RoutingMatrix,
    unsaturated: &[CommodityStep],
    slack_tol: f64,
) -> Vec<CommodityStep> {
    let n_comm = topo.num_commodities();
    let n_edges = topo.num_edges();
    let n_steps = sub.num_steps();

    // Per-step slack adjacency.
    let mut slack_out: Vec<Vec<Vec<usize>>> = Vec::with_capacity(n_steps);
    for h in 0..n_steps {
        let caps = &sub.effective_caps[h];
        let mut adj = vec![Vec::new(); topo.num_nodes()];
        for e in 0..n_edges {
            let load: f64 = (0..n_comm)
                .map(|slot| {
                    rates[h][slot] * d.of_node(topo.commodities()[slot]) * routing.get(slot, e)
                })
                .sum();
            if caps.get(e) - load > slack_tol {
                adj[topo.edges()[e].from].push(topo.edges()[e].to);
            }
        }
        slack_out.push(adj);
    }

    let mut out = Vec::new();
    for &cs in unsaturated {
        let source = topo.commodities()[cs.slot];
        if !reaches(&slack_out[cs.step], source, topo.destination(), topo.num_nodes()) {
            out.push(cs);
        }
    }
    out
}

fn reaches(adj: &[Vec<usize>], from: usize, to: usize, n: usize) -> bool {
    if from == to {
        return true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if w == to {
                return true;
            }
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    false
}

/// Runs the full saturation loop on one segment and returns per-step
/// max-min fair admission rates plus a routing consistent with all of them.
pub fn solve(
    topo: &NetworkTopology,
    d: &DemandVector,
    sub: &Subdivision,
    opts: &SolveOptions,
) -> Result<Solution, MaxMinError> {
    let n_comm = topo.num_commodities();
    let n_steps = sub.num_steps();
    let mut saturated: Vec<Vec<Option<f64>>> = vec![vec![None; n_comm]; n_steps];
    let mut unsaturated: Vec<CommodityStep> = (0..n_steps)
        .flat_map(|step| (0..n_comm).map(move |slot| CommodityStep { slot, step }))
        .collect();
    let mut iterations = Vec::new();
    let mut levels: Vec<f64> = Vec::new();

    let mut index = 0;
    while !unsaturated.is_empty() {
        let (mut common, witness) = max_common_rate(topo, d, sub, &saturated, opts)?;
        // A commodity-step confirmed one iteration later than its peers
        // (e.g. after a prefilter miss) re-derives the same mathematical
        // level, but bisection noise lands on a slightly different value
        // and the already-fixed rates amplify it downstream. Snapping onto
        // an existing level keeps delayed confirmations identical; only
        // downward snaps are taken, so the snapped rates stay feasible.
        if let Some(&level) = levels
            .iter()
            .filter(|&&l| l <= common && common - l <= opts.saturation_tol)
            .min_by(|a, b| {
                (common - *a).partial_cmp(&(common - *b)).unwrap()
            })
        {
            common = level;
        } else {
            levels.push(common);
        }
        let rates = build_rates(n_steps, n_comm, &saturated, common);

        let prefiltered = match opts.candidate_mode {
            CandidateMode::Exhaustive => unsaturated.clone(),
            CandidateMode::ResidualGraph => residual_candidates(
                topo,
                d,
                sub,
                &rates,
                &witness,
                &unsaturated,
                opts.slack_tol,
            ),
        };

        let mut fell_back = false;
        let (candidates, mut confirmed, singles) =
            confirm_candidates(topo, d, sub, &rates, &prefiltered, common, opts)?;
        let mut candidates = candidates;
        let mut singles = singles;
        if confirmed.is_empty() && prefiltered.len() < unsaturated.len() {
            fell_back = true;
            let (c2, conf2, s2) =
                confirm_candidates(topo, d, sub, &rates, &unsaturated, common, opts)?;
            candidates = c2;
            confirmed = conf2;
            singles = s2;
        }

        // On a single-step segment at least one candidate is always stuck
        // at the common rate. Multi-step segments couple the steps through
        // the shared routing, making the rate region nonconvex: there are
        // instances where every commodity-step can individually exceed the
        // common rate while the common rate itself cannot rise. Pinning the
        // minimal single-rate candidates at the common rate keeps the loop
        // terminating and picks the greedy lexicographic-max point; the
        // iteration record flags it.
        let mut forced = false;
        if confirmed.is_empty() {
            forced = true;
            let min_single = singles.iter().cloned().fold(f64::INFINITY, f64::min);
            confirmed = candidates
                .iter()
                .zip(&singles)
                .filter(|(_, &s)| s <= min_single + opts.saturation_tol)
                .map(|(&c, _)| c)
                .collect();
        }

        for &cs in &confirmed {
            saturated[cs.step][cs.slot] = Some(common);
        }
        unsaturated.retain(|cs| !confirmed.contains(cs));
        iterations.push(IterationRecord {
            index,
            common_rate: common,
            candidates,
            confirmed,
            fell_back_to_exhaustive: fell_back,
            forced_progress: forced,
        });
        index += 1;
    }

    // Final pass: re-derive one routing consistent with every saturation
    // value.
    let final_rates: RateMatrix = saturated
        .iter()
        .map(|row| row.iter().map(|z| z.expect("all saturated")).collect())
        .collect();
    let routing = feasible_with_rates(topo, d, sub, &final_rates)?
        .ok_or(MaxMinError::InfeasibleSolution)?;
    let admissions = final_rates
        .iter()
        .map(|row| AdmissionVector::new(row.clone()))
        .collect();
    Ok(Solution {
        admissions,
        routing,
        saturation: final_rates,
        iterations,
    })
}

#[allow(clippy::type_complexity)]
fn confirm_candidates(
    topo: &NetworkTopology,
    d: &DemandVector,
    sub: &Subdivision,
    rates: &RateMatrix,
    candidates: &[CommodityStep],
    common: f64,
    opts: &SolveOptions,
) -> Result<(Vec<CommodityStep>, Vec<CommodityStep>, Vec<f64>), MaxMinError> {
    let mut confirmed = Vec::new();
    let mut singles = Vec::with_capacity(candidates.len());
    for &cs in candidates {
        let single = max_single_rate(topo, d, sub, cs, rates, opts)?;
        singles.push(single);
        if single <= common + opts.saturation_tol {
            confirmed.push(cs);
        }
    }
    Ok((candidates.to_vec(), confirmed, singles))
}

/// Max-min fairness oracle. For each commodity-step, every smaller rate is
/// held fixed, every other rate is lower-bounded by the target's value
/// (monotonicity lets those sit exactly at the bound), and the target is
/// maximized; the vector is max-min fair when no target can exceed its
/// saturation value beyond tolerance.
pub fn verify_maxmin(
    topo: &NetworkTopology,
    d: &DemandVector,
    sub: &Subdivision,
    rates: &RateMatrix,
    opts: &SolveOptions,
) -> Result<bool, MaxMinError> {
    if feasible_with_rates(topo, d, sub, rates)?.is_none() {
        return Err(MaxMinError::InfeasibleSolution);
    }
    let n_comm = topo.num_commodities();
    let n_steps = sub.num_steps();
    for step in 0..n_steps {
        for slot in 0..n_comm {
            let level = rates[step][slot];
            let mut probe_rates: RateMatrix = vec![vec![0.0; n_comm]; n_steps];
            for h in 0..n_steps {
                for s in 0..n_comm {
                    probe_rates[h][s] = if rates[h][s] < level - 1e-9 {
                        rates[h][s]
                    } else {
                        level
                    };
                }
            }
            let best = max_single_rate(
                topo,
                d,
                sub,
                CommodityStep { slot, step },
                &probe_rates,
                opts,
            )?;
            if best > level + 1e-5 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
