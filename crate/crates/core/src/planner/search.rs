//! Plan evaluation with segment memoization and the backward-induction
//! search over first re-route times.

use super::plan::{subdivide, PlanPerformance, ReroutePlan, SegmentSpec, StepDecision};
use super::PlannerError;
use crate::maxmin::{self, RoutingMode, SolveOptions, Subdivision};
use crate::net::{effective_capacity, CapacitySnapshot, DemandVector, NetworkTopology, RoutingMatrix};
use std::collections::HashMap;
use std::rc::Rc;

/// Two plan totals within this distance are treated as tied and broken by
/// plan shape (fewer re-routes, then later first re-route). Far below the
/// bisection tolerance so genuinely better plans always win.
const TIE_TOL: f64 = 1e-9;

/// Everything needed to evaluate plans at one decision step.
pub struct PlanContext<'a> {
    pub topo: &'a NetworkTopology,
    pub demands: &'a DemandVector,
    /// Current plus predicted capacities for window steps 0..=horizon.
    pub capacities: &'a [CapacitySnapshot],
    /// Routing in effect before this step (fixed prefix of every plan that
    /// does not re-route immediately). `None` only at network start.
    pub prev_routing: Option<&'a RoutingMatrix>,
    pub s_min: f64,
    pub opts: SolveOptions,
}

impl<'a> PlanContext<'a> {
    pub fn horizon(&self) -> usize {
        self.capacities.len() - 1
    }
}

/// Memoizes segment solutions within one decision step. A segment's
/// solution depends only on its step range, routing mode, and the plan bits
/// that shape its effective capacities, so identical segments across plans
/// are solved once.
#[derive(Default)]
pub struct SegmentMemo {
    solutions: HashMap<(usize, usize, bool, u64), Rc<maxmin::Solution>>,
}

fn segment_key(seg: &SegmentSpec, plan: &ReroutePlan) -> (usize, usize, bool, u64) {
    let mut packed = 0u64;
    for (i, h) in (seg.start + 1..=seg.end + 1).enumerate() {
        if plan.bits()[h] {
            packed |= 1 << i;
        }
    }
    (seg.start, seg.end, seg.free, packed)
}

fn solve_segment(
    ctx: &PlanContext<'_>,
    memo: &mut SegmentMemo,
    seg: &SegmentSpec,
    plan: &ReroutePlan,
) -> Result<Rc<maxmin::Solution>, PlannerError> {
    let key = segment_key(seg, plan);
    if let Some(found) = memo.solutions.get(&key) {
        return Ok(found.clone());
    }
    let eff: Result<Vec<CapacitySnapshot>, _> = (seg.start..=seg.end)
        .map(|h| effective_capacity(h, plan.bits(), ctx.capacities, ctx.s_min))
        .collect();
    let mode = if seg.free {
        RoutingMode::Free
    } else {
        let prev = ctx.prev_routing.ok_or(PlannerError::MissingPreviousRouting)?;
        RoutingMode::Fixed(prev.clone())
    };
    let sub = Subdivision::new(seg.start, seg.end, eff?, mode)?;
    let solution = Rc::new(maxmin::solve(ctx.topo, ctx.demands, &sub, &ctx.opts)?);
    memo.solutions.insert(key, solution.clone());
    Ok(solution)
}

/// Evaluates the window suffix of a plan starting at `from` (a segment
/// boundary). Returns per-step admission sums for steps `from..horizon` and
/// the per-step decisions.
fn evaluate_from(
    ctx: &PlanContext<'_>,
    memo: &mut SegmentMemo,
    plan: &ReroutePlan,
    from: usize,
) -> Result<(Vec<f64>, Vec<StepDecision>), PlannerError> {
    let horizon = ctx.horizon();
    if plan.bits().len() != horizon + 1 {
        return Err(PlannerError::PlanLength(plan.bits().len(), horizon));
    }
    let mut sums = Vec::with_capacity(horizon - from);
    let mut steps = Vec::with_capacity(horizon - from);
    for seg in subdivide(plan, horizon) {
        if seg.end < from {
            continue;
        }
        debug_assert!(seg.start >= from, "suffix start must align with a segment boundary");
        let solution = solve_segment(ctx, memo, &seg, plan)?;
        for (offset, admission) in solution.admissions.iter().enumerate() {
            sums.push(admission.sum());
            steps.push(StepDecision {
                routing: solution.routing.clone(),
                admission: admission.clone(),
                rerouted: seg.free && offset == 0,
            });
        }
    }
    Ok((sums, steps))
}

/// Evaluates one plan over the whole window.
pub fn evaluate_plan(
    ctx: &PlanContext<'_>,
    memo: &mut SegmentMemo,
    plan: &ReroutePlan,
) -> Result<PlanPerformance, PlannerError> {
    let (per_step_sums, steps) = evaluate_from(ctx, memo, plan, 0)?;
    let cumulative = per_step_sums.iter().sum();
    Ok(PlanPerformance { plan: plan.clone(), per_step_sums, cumulative, steps })
}

/// Search result: the winning plan's full-window performance plus the
/// number of plan evaluations spent.
pub struct SearchOutcome {
    pub best: PlanPerformance,
    pub evaluations: usize,
}

/// Prefers higher total; near-ties go to fewer re-routes, then to the later
/// first re-route (less control-plane churn).
fn plan_sum_better(
    sum: f64,
    plan: &ReroutePlan,
    best_sum: f64,
    best_plan: &ReroutePlan,
) -> bool {
    if sum > best_sum + TIE_TOL {
        return true;
    }
    if sum < best_sum - TIE_TOL {
        return false;
    }
    let (a, b) = (plan.count_reroutes(), best_plan.count_reroutes());
    if a != b {
        return a < b;
    }
    let first = |p: &ReroutePlan| p.first_reroute().unwrap_or(usize::MAX);
    first(plan) > first(best_plan)
}

/// Backward induction over the first re-route time.
///
/// For each first re-route time `f` (latest first), the candidate plans are
/// the two that never re-route again (trailing bit 0 or 1) plus, for every
/// later-starting winner, that winner's tail grafted after a re-route at
/// `f`; the set winner maximizes the admission sum from `f` onward. The
/// final comparison puts every set winner, now including its inherited
/// prefix, against the two never-re-route plans on the full-window sum.
/// Solved segments are shared through the memo, so tails are never
/// recomputed.
pub fn plan_search(
    ctx: &PlanContext<'_>,
    allow_reroute_now: bool,
) -> Result<SearchOutcome, PlannerError> {
    let horizon = ctx.horizon();
    let mut memo = SegmentMemo::default();
    let mut evaluations = 0usize;

    // winners[k] = (first re-route time, plan, tail sum from that time).
    let mut winners: Vec<(usize, ReroutePlan, f64)> = Vec::new();
    for back in 1..=horizon {
        let first = horizon - back;
        if first == 0 && !allow_reroute_now {
            continue;
        }
        let mut candidates: Vec<ReroutePlan> = Vec::new();
        for trailing in [false, true] {
            let mut bits = vec![false; horizon + 1];
            bits[first] = true;
            bits[horizon] = trailing;
            // For first == horizon the two coincide; ranges keep them apart.
            if first < horizon {
                candidates.push(ReroutePlan::new(bits));
            }
        }
        for (later_first, later_plan, _) in &winners {
            let mut bits = vec![false; horizon + 1];
            bits[first] = true;
            bits[*later_first..].copy_from_slice(&later_plan.bits()[*later_first..]);
            candidates.push(ReroutePlan::new(bits));
        }

        let mut set_best: Option<(ReroutePlan, f64)> = None;
        for plan in candidates {
            let (sums, _) = evaluate_from(ctx, &mut memo, &plan, first)?;
            evaluations += 1;
            let tail: f64 = sums.iter().sum();
            let better = match &set_best {
                None => true,
                Some((best_plan, best_tail)) => plan_sum_better(tail, &plan, *best_tail, best_plan),
            };
            if better {
                set_best = Some((plan, tail));
            }
        }
        let (plan, tail) = set_best.expect("each set has candidates");
        winners.push((first, plan, tail));
    }

    // Final comparison over the full window.
    let mut best: Option<PlanPerformance> = None;
    let consider = |perf: PlanPerformance, best: &mut Option<PlanPerformance>| {
        let replace = match best {
            None => true,
            Some(b) => plan_sum_better(perf.cumulative, &perf.plan, b.cumulative, &b.plan),
        };
        if replace {
            *best = Some(perf);
        }
    };
    for (_, plan, _) in &winners {
        let perf = evaluate_plan(ctx, &mut memo, plan)?;
        evaluations += 1;
        consider(perf, &mut best);
    }
    for trailing in [false, true] {
        let mut bits = vec![false; horizon + 1];
        bits[horizon] = trailing;
        let perf = evaluate_plan(ctx, &mut memo, &ReroutePlan::new(bits))?;
        evaluations += 1;
        consider(perf, &mut best);
    }

    Ok(SearchOutcome { best: best.expect("never-re-route plan always evaluated"), evaluations })
}
