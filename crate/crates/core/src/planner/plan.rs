//! Re-routing plans and their decomposition into shared-routing segments.

use crate::net::{AdmissionVector, NetworkConfiguration, RoutingMatrix};

/// Binary vector over the prediction window: entry `h` marks a planned
/// re-route at step `t + h`. Length is `horizon + 1`; the final entry only
/// controls the scratch reservation of the last window step.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReroutePlan {
    bits: Vec<bool>,
}

impl ReroutePlan {
    pub fn new(bits: Vec<bool>) -> Self {
        assert!(bits.len() >= 2, "plan needs at least two entries");
        Self { bits }
    }

    /// All zeros: keep the current routing for the whole window.
    pub fn never(horizon: usize) -> Self {
        Self::new(vec![false; horizon + 1])
    }

    /// All ones: re-route every step (and reserve scratch every step).
    pub fn always(horizon: usize) -> Self {
        Self::new(vec![true; horizon + 1])
    }

    /// All ones except the current step (used when scratch is too low to
    /// re-route right now).
    pub fn always_from_next(horizon: usize) -> Self {
        let mut bits = vec![true; horizon + 1];
        bits[0] = false;
        Self::new(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn horizon(&self) -> usize {
        self.bits.len() - 1
    }

    pub fn reroutes_now(&self) -> bool {
        self.bits[0]
    }

    /// Index of the first planned re-route within the window, if any.
    pub fn first_reroute(&self) -> Option<usize> {
        self.bits[..self.bits.len() - 1].iter().position(|&b| b)
    }

    pub fn count_reroutes(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn bitstring(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn from_bitstring(s: &str) -> Option<Self> {
        if s.len() < 2 || !s.chars().all(|c| c == '0' || c == '1') {
            return None;
        }
        Some(Self::new(s.chars().map(|c| c == '1').collect()))
    }
}

/// One shared-routing segment of a plan: window steps `start..=end`, and
/// whether routing is re-optimized at `start` or inherited.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentSpec {
    pub start: usize,
    pub end: usize,
    pub free: bool,
}

/// Splits window steps `0..horizon` at the planned re-routing times. The
/// leading segment (before the first re-route) keeps the inherited routing;
/// every segment starting at a re-route is free.
pub fn subdivide(plan: &ReroutePlan, horizon: usize) -> Vec<SegmentSpec> {
    assert!(horizon >= 1 && plan.bits().len() > horizon);
    let bits = plan.bits();
    let mut segments = Vec::new();
    let mut start = 0usize;
    let mut first_free = bits[0];
    for h in 1..horizon {
        if bits[h] {
            segments.push(SegmentSpec { start, end: h - 1, free: first_free });
            start = h;
            first_free = true;
        }
    }
    segments.push(SegmentSpec { start, end: horizon - 1, free: first_free });
    segments
}

/// The routing/admission decision for one window step of an evaluated plan.
#[derive(Debug, Clone)]
pub struct StepDecision {
    pub routing: RoutingMatrix,
    pub admission: AdmissionVector,
    /// Whether this step re-optimized routing (segment start of a free
    /// segment).
    pub rerouted: bool,
}

impl StepDecision {
    pub fn into_configuration(self, time_step: i64) -> NetworkConfiguration {
        NetworkConfiguration {
            routing: self.routing,
            admission: self.admission,
            time_step,
        }
    }
}

/// Evaluated performance of a plan over the window.
#[derive(Debug, Clone)]
pub struct PlanPerformance {
    pub plan: ReroutePlan,
    /// Sum of admission rates per window step (length = horizon).
    pub per_step_sums: Vec<f64>,
    /// Window total of the per-step sums.
    pub cumulative: f64,
    pub steps: Vec<StepDecision>,
}

impl PlanPerformance {
    /// Tail total from window step `from` onward.
    pub fn tail_sum(&self, from: usize) -> f64 {
        self.per_step_sums[from..].iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(s: &str) -> ReroutePlan {
        ReroutePlan::from_bitstring(s).unwrap()
    }

    #[test]
    fn subdivision_example() {
        let p = plan("010010");
        let segs = subdivide(&p, 5);
        assert_eq!(
            segs,
            vec![
                SegmentSpec { start: 0, end: 0, free: false },
                SegmentSpec { start: 1, end: 3, free: true },
                SegmentSpec { start: 4, end: 4, free: true },
            ]
        );
    }

    #[test]
    fn never_plan_single_fixed_segment() {
        let p = ReroutePlan::never(5);
        let segs = subdivide(&p, 5);
        assert_eq!(segs, vec![SegmentSpec { start: 0, end: 4, free: false }]);
    }

    #[test]
    fn always_plan_singleton_free_segments() {
        let p = ReroutePlan::always(5);
        let segs = subdivide(&p, 5);
        assert_eq!(segs.len(), 5);
        for (h, s) in segs.iter().enumerate() {
            assert_eq!(*s, SegmentSpec { start: h, end: h, free: true });
        }
    }

    #[test]
    fn reroute_now_makes_leading_segment_free() {
        let p = plan("100");
        let segs = subdivide(&p, 2);
        assert_eq!(segs, vec![SegmentSpec { start: 0, end: 1, free: true }]);
    }

    #[test]
    fn plan_accessors() {
        let p = plan("010010");
        assert_eq!(p.horizon(), 5);
        assert_eq!(p.first_reroute(), Some(1));
        assert_eq!(p.count_reroutes(), 2);
        assert!(!p.reroutes_now());
        assert_eq!(p.bitstring(), "010010");
        assert_eq!(ReroutePlan::never(3).first_reroute(), None);
        // A trailing one only reserves scratch; it is not a window re-route.
        assert_eq!(plan("0001").first_reroute(), None);
    }
}
