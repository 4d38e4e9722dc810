//! Model-predictive re-route planning and the step-by-step simulation loop.
//!
//! A re-routing plan marks the window steps at which routing will be
//! re-optimized. Evaluating a plan decomposes the window at the re-routing
//! times into segments, solves each with the max-min allocator, and sums the
//! admitted rates. The planner searches plans by backward induction over the
//! first re-route time, reusing solved tails, and the simulator implements
//! only the first decision each step before re-planning.

mod plan;
mod search;
mod sim;

pub use plan::{subdivide, PlanPerformance, ReroutePlan, SegmentSpec, StepDecision};
pub use search::{evaluate_plan, plan_search, PlanContext, SearchOutcome};
pub use sim::{
    run_simulation, Algorithm, OraclePredictor, Predictor, SimParams, SimulationTrace, StepRecord,
};

use crate::maxmin::MaxMinError;
use crate::net::NetError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("plan of length {0} does not match horizon {1}")]
    PlanLength(usize, usize),
    #[error("{0} capacity snapshots provided, horizon {1} needs {2}")]
    CapacityCount(usize, usize, usize),
    #[error("no previous routing available for a fixed-routing prefix")]
    MissingPreviousRouting,
    #[error("re-route planned at the current step but scratch {0} is below the minimum {1}")]
    RerouteNotAllowed(f64, f64),
    #[error("simulation trace too short: {0} samples for horizon {1}")]
    TraceTooShort(usize, usize),
    #[error(transparent)]
    MaxMin(#[from] MaxMinError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("trace i/o error: {0}")]
    TraceIo(String),
}
