//! Step-by-step control-loop simulation.
//!
//! Per step: measured received levels advance each link's modulation state
//! (giving current capacities), the predictor supplies future attenuation
//! (projected to future capacities through a copy of the modulation state),
//! scratch capacity decides whether re-routing is allowed, the chosen
//! algorithm picks a re-routing plan, and the plan's first configuration is
//! implemented and logged.

use super::plan::ReroutePlan;
use super::search::{evaluate_plan, plan_search, PlanContext, SegmentMemo};
use super::PlannerError;
use crate::maxmin::{self, RoutingMode, SolveOptions, Subdivision};
use crate::net::{
    effective_capacity, link_loads, scratch_capacity, swan_stage_bound, CapacitySnapshot,
    NetworkConfiguration,
};
use crate::phy::{am_step, capacity_of, project_capacities, ModulationTable, StepMode};
use crate::scenario::{noisy_future_prx, AttenuationTrace, Scenario};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use std::path::Path;

/// Attenuation forecaster: given history through step `t`, produce per-link
/// attenuation (dB) for steps `t+1..=t+horizon`, one row per step ahead.
pub trait Predictor {
    fn predict(&mut self, t: usize, history: &[Vec<f64>], horizon: usize) -> Vec<Vec<f64>>;
    fn name(&self) -> &'static str;
}

/// Synthetic forecaster that reads the true future from the trace and adds
/// fresh Gaussian noise (clipped to the generator's level range). Zero
/// variance is the ideal predictor.
pub struct OraclePredictor<'a> {
    trace: &'a AttenuationTrace,
    noise: Option<(Normal<f64>, Vec<ChaCha8Rng>)>,
}

impl<'a> OraclePredictor<'a> {
    pub fn new(trace: &'a AttenuationTrace, sigma2: f64, seed: u64) -> Self {
        let noise = if sigma2 > 0.0 {
            use rand::SeedableRng;
            let normal = Normal::new(0.0, sigma2.sqrt()).expect("finite variance");
            let rngs = (0..trace.num_links())
                .map(|l| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(0xffff_0000u64 + l as u64);
                    rng
                })
                .collect();
            Some((normal, rngs))
        } else {
            None
        };
        Self { trace, noise }
    }
}

impl Predictor for OraclePredictor<'_> {
    fn predict(&mut self, t: usize, _history: &[Vec<f64>], horizon: usize) -> Vec<Vec<f64>> {
        (1..=horizon)
            .map(|h| {
                let prx = noisy_future_prx(self.trace, t, h, &mut self.noise)
                    .expect("simulation stops before trace exhaustion");
                let ptx = self.trace.ptx_row(t + h);
                prx.iter().zip(ptx).map(|(&p, &tx)| tx - p).collect()
            })
            .collect()
    }

    fn name(&self) -> &'static str {
        "oracle"
    }
}

/// Reconfiguration policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Backward-induction plan search over the prediction window.
    Msnr,
    /// Plan (0,...,0): keep routing frozen, re-optimize admission only.
    NeverReroute,
    /// Plan (1,1,...,1) whenever scratch allows, else (0,1,...,1).
    AlwaysReroute,
}

impl Algorithm {
    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::Msnr => "msnr",
            Algorithm::NeverReroute => "never",
            Algorithm::AlwaysReroute => "always",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimParams {
    pub horizon: usize,
    pub s_min: f64,
    /// Attenuation history rows kept for the predictor.
    pub history_window: usize,
    pub table: ModulationTable,
    pub step_mode: StepMode,
    pub opts: SolveOptions,
    /// Let the never-re-route policy grab a re-route whenever leftover
    /// scratch happens to allow one.
    pub opportunistic_never: bool,
    pub max_steps: Option<usize>,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            horizon: 5,
            s_min: 0.05,
            history_window: 12,
            table: ModulationTable::standard(),
            step_mode: StepMode::FixedPoint,
            opts: SolveOptions::default(),
            opportunistic_never: false,
            max_steps: None,
        }
    }
}

/// One simulated step's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub scratch: f64,
    pub rerouted: bool,
    pub swan_stages: Option<u32>,
    /// Admission rate per commodity.
    pub admission: Vec<f64>,
    /// Load per link under the implemented configuration.
    pub loads: Vec<f64>,
    /// Measured capacity per link at this step.
    pub capacities: Vec<f64>,
    pub plan: String,
    pub plan_evaluations: usize,
}

/// Full simulation log, exportable as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub algorithm: String,
    pub commodity_ids: Vec<u32>,
    pub link_labels: Vec<String>,
    pub records: Vec<StepRecord>,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Mean admission rate across commodities at one step.
    pub fn node_mean_admission(&self, t: usize) -> f64 {
        let r = &self.records[t];
        r.admission.iter().sum::<f64>() / r.admission.len() as f64
    }

    /// Time average of the per-step node-mean admission.
    pub fn time_average_admission(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        (0..self.records.len()).map(|t| self.node_mean_admission(t)).sum::<f64>()
            / self.records.len() as f64
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# algorithm={}\n", self.algorithm));
        let mut header = String::from("t,s_t,rerouted,swan_stages");
        for id in &self.commodity_ids {
            header.push_str(&format!(",z_{}", id));
        }
        for label in &self.link_labels {
            header.push_str(&format!(",load_{}", label));
        }
        for label in &self.link_labels {
            header.push_str(&format!(",cap_{}", label));
        }
        header.push_str(",plan");
        out.push_str(&header);
        out.push('\n');
        for r in &self.records {
            let mut row = format!(
                "{},{},{},{}",
                r.t,
                r.scratch,
                u8::from(r.rerouted),
                r.swan_stages.map(|s| s.to_string()).unwrap_or_default()
            );
            for z in &r.admission {
                row.push_str(&format!(",{}", z));
            }
            for v in &r.loads {
                row.push_str(&format!(",{}", v));
            }
            for v in &r.capacities {
                row.push_str(&format!(",{}", v));
            }
            row.push_str(&format!(",{}", r.plan));
            out.push_str(&row);
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), PlannerError> {
        let tmp = path.with_extension("csv.tmp");
        std::fs::write(&tmp, self.to_csv_string())
            .map_err(|e| PlannerError::TraceIo(e.to_string()))?;
        std::fs::rename(&tmp, path).map_err(|e| PlannerError::TraceIo(e.to_string()))?;
        Ok(())
    }

    pub fn from_csv_str(text: &str) -> Result<Self, PlannerError> {
        let bad = |m: String| PlannerError::TraceIo(m);
        let mut algorithm = String::from("unknown");
        let mut lines = text.lines().peekable();
        while let Some(line) = lines.peek() {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(a) = rest.trim().strip_prefix("algorithm=") {
                    algorithm = a.trim().to_string();
                }
                lines.next();
            } else {
                break;
            }
        }
        let header = lines.next().ok_or_else(|| bad("missing header".into()))?;
        let columns: Vec<&str> = header.split(',').collect();
        let mut commodity_ids = Vec::new();
        let mut link_labels = Vec::new();
        for c in &columns {
            if let Some(id) = c.strip_prefix("z_") {
                commodity_ids
                    .push(id.parse().map_err(|_| bad(format!("bad commodity column {}", c)))?);
            } else if let Some(label) = c.strip_prefix("load_") {
                link_labels.push(label.to_string());
            }
        }
        let n_z = commodity_ids.len();
        let n_l = link_labels.len();
        let expected = 4 + n_z + 2 * n_l + 1;
        let mut records = Vec::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != expected {
                return Err(bad(format!(
                    "row has {} fields, expected {}",
                    fields.len(),
                    expected
                )));
            }
            let fnum = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number {:?}", s)));
            let t: usize = fields[0].parse().map_err(|_| bad(format!("bad t {:?}", fields[0])))?;
            let scratch = fnum(fields[1])?;
            let rerouted = fields[2] == "1";
            let swan_stages = if fields[3].is_empty() {
                None
            } else {
                Some(fields[3].parse().map_err(|_| bad(format!("bad stages {:?}", fields[3])))?)
            };
            let mut cursor = 4;
            let take = |n: usize, cursor: &mut usize| -> Result<Vec<f64>, PlannerError> {
                let vals: Result<Vec<f64>, _> =
                    fields[*cursor..*cursor + n].iter().map(|s| fnum(s)).collect();
                *cursor += n;
                vals
            };
            let admission = take(n_z, &mut cursor)?;
            let loads = take(n_l, &mut cursor)?;
            let capacities = take(n_l, &mut cursor)?;
            let plan = fields[cursor].to_string();
            records.push(StepRecord {
                t,
                scratch,
                rerouted,
                swan_stages,
                admission,
                loads,
                capacities,
                plan,
                plan_evaluations: 0,
            });
        }
        Ok(Self { algorithm, commodity_ids, link_labels, records })
    }

    pub fn read_csv(path: &Path) -> Result<Self, PlannerError> {
        let text = std::fs::read_to_string(path).map_err(|e| PlannerError::TraceIo(e.to_string()))?;
        Self::from_csv_str(&text)
    }
}

/// Runs the control loop for as many steps as the trace supports (the
/// predictor needs a full window beyond the current step), optionally
/// clamped by `params.max_steps`.
pub fn run_simulation(
    scenario: &Scenario,
    algorithm: Algorithm,
    predictor: &mut dyn Predictor,
    params: &SimParams,
) -> Result<SimulationTrace, PlannerError> {
    let topo = &scenario.topology;
    let d = &scenario.demands;
    let trace = &scenario.trace;
    let horizon = params.horizon;
    assert!(horizon >= 1, "prediction window must cover at least one step");
    if trace.len() <= horizon {
        return Err(PlannerError::TraceTooShort(trace.len(), horizon));
    }
    let steps = (trace.len() - horizon).min(params.max_steps.unwrap_or(usize::MAX));

    let n_links = topo.num_edges();
    let mut link_states = vec![params.table.initial_state(); n_links];
    let mut prev_config: Option<NetworkConfiguration> = None;
    let mut history: Vec<Vec<f64>> = Vec::new();
    let mut records = Vec::with_capacity(steps);

    for t in 0..steps {
        // Measurements drive the live modulation states.
        let prx_now = trace.prx_row(t);
        for (l, state) in link_states.iter_mut().enumerate() {
            *state = am_step(&params.table, *state, prx_now[l], params.step_mode);
        }
        let c_now = CapacitySnapshot::new(
            link_states.iter().map(|&s| capacity_of(&params.table, s)).collect(),
        );

        history.push(trace.attenuation_row(t));
        if history.len() > params.history_window {
            history.remove(0);
        }

        // Predicted capacities: forecast attenuation, convert to received
        // levels, and project each link's modulation from its current state.
        let forecast = predictor.predict(t, &history, horizon);
        debug_assert_eq!(forecast.len(), horizon);
        let ptx_now = trace.ptx_row(t);
        let mut caps = Vec::with_capacity(horizon + 1);
        caps.push(c_now.clone());
        let mut projected: Vec<Vec<f64>> = vec![Vec::with_capacity(horizon); n_links];
        for (l, proj) in projected.iter_mut().enumerate() {
            let prx_future: Vec<f64> =
                (0..horizon).map(|h| ptx_now[l] - forecast[h][l]).collect();
            let (capacities, _) =
                project_capacities(&params.table, link_states[l], &prx_future, params.step_mode);
            *proj = capacities;
        }
        for h in 0..horizon {
            caps.push(CapacitySnapshot::new(
                (0..n_links).map(|l| projected[l][h]).collect(),
            ));
        }

        let (config, scratch, rerouted, plan_bits, evaluations) = match &prev_config {
            None => {
                // Network start: one free single-step allocation against the
                // worst case of current and next predicted capacity, with no
                // scratch reservation.
                let eff = effective_capacity(0, &[false, false], &caps[..2], params.s_min)?;
                let sub = Subdivision::new(0, 0, vec![eff], RoutingMode::Free)?;
                let solution = maxmin::solve(topo, d, &sub, &params.opts)?;
                let config = NetworkConfiguration {
                    routing: solution.routing.clone(),
                    admission: solution.admissions[0].clone(),
                    time_step: t as i64,
                };
                (config, 1.0, false, ReroutePlan::never(horizon).bitstring(), 0)
            }
            Some(prev) => {
                let scratch = scratch_capacity(topo, prev, d, &c_now);
                let allow = scratch >= params.s_min;
                let ctx = PlanContext {
                    topo,
                    demands: d,
                    capacities: &caps,
                    prev_routing: Some(&prev.routing),
                    s_min: params.s_min,
                    opts: params.opts,
                };
                let (performance, evaluations) = match algorithm {
                    Algorithm::Msnr => {
                        let out = plan_search(&ctx, allow)?;
                        (out.best, out.evaluations)
                    }
                    Algorithm::NeverReroute => {
                        let plan = if params.opportunistic_never && allow {
                            let mut bits = vec![false; horizon + 1];
                            bits[0] = true;
                            ReroutePlan::new(bits)
                        } else {
                            ReroutePlan::never(horizon)
                        };
                        let mut memo = SegmentMemo::default();
                        (evaluate_plan(&ctx, &mut memo, &plan)?, 1)
                    }
                    Algorithm::AlwaysReroute => {
                        let plan = if allow {
                            ReroutePlan::always(horizon)
                        } else {
                            ReroutePlan::always_from_next(horizon)
                        };
                        let mut memo = SegmentMemo::default();
                        (evaluate_plan(&ctx, &mut memo, &plan)?, 1)
                    }
                };
                let rerouted = performance.plan.reroutes_now();
                if rerouted && !allow {
                    return Err(PlannerError::RerouteNotAllowed(scratch, params.s_min));
                }
                let decision = &performance.steps[0];
                debug_assert_eq!(decision.rerouted, rerouted);
                if !rerouted {
                    debug_assert_eq!(decision.routing.max_abs_diff(&prev.routing), 0.0);
                }
                let config = NetworkConfiguration {
                    routing: decision.routing.clone(),
                    admission: decision.admission.clone(),
                    time_step: t as i64,
                };
                (config, scratch, rerouted, performance.plan.bitstring(), evaluations)
            }
        };

        let swan_stages = if rerouted {
            Some(swan_stage_bound(scratch)?)
        } else {
            None
        };
        let loads = link_loads(topo, &config, d);
        records.push(StepRecord {
            t,
            scratch,
            rerouted,
            swan_stages,
            admission: config.admission.rates().to_vec(),
            loads,
            capacities: c_now.values().to_vec(),
            plan: plan_bits,
            plan_evaluations: evaluations,
        });
        prev_config = Some(config);
    }

    Ok(SimulationTrace {
        algorithm: match algorithm {
            Algorithm::NeverReroute if params.opportunistic_never => "never-opportunistic".into(),
            other => other.label().into(),
        },
        commodity_ids: topo.commodities().iter().map(|&n| topo.node_id(n)).collect(),
        link_labels: (0..n_links).map(|e| topo.edge_label(e)).collect(),
        records,
    })
}
