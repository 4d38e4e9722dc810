//! Predictive reconfiguration toolkit for wireless x-haul networks.
//!
//! The crate is organized around a single control loop: per-link attenuation
//! is measured (or synthesized), mapped to capacity through an adaptive
//! modulation state machine, forecast a few steps ahead by a recurrent
//! predictor, and fed to a model-predictive planner that decides when to
//! re-route and how much of each commodity's demand to admit, keeping the
//! admission rates max-min fair and every re-route free of transient
//! congestion.
//!
//! Module map:
//! - [`net`]: topology, demands, routing/admission configurations,
//!   feasibility checks, scratch capacity.
//! - [`phy`]: adaptive-modulation hysteresis state machine and the capacity
//!   table.
//! - [`lp`]: self-contained bounded-variable simplex solver.
//! - [`maxmin`]: max-min fair concurrent-flow allocation over a window
//!   segment with one shared routing decision.
//! - [`planner`]: re-routing plans, backward-induction plan search, and the
//!   step-by-step simulation loop.
//! - [`forecast`]: encoder-decoder recurrent attenuation predictor plus
//!   naive and autoregressive baselines.
//! - [`scenario`]: synthetic trace generators and trace/topology file I/O.
//! - [`eval`]: prediction-error and admission-gain metrics.

pub mod eval;
pub mod forecast;
pub mod lp;
pub mod maxmin;
pub mod net;
pub mod phy;
pub mod planner;
pub mod scenario;
