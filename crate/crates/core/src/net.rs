//! Network model: topology, demands, routing/admission configurations,
//! feasibility checks, scratch capacity, and effective capacities under a
//! re-routing plan.
//!
//! Conventions: all capacities and demands are normalized to the top
//! modulation bitrate (225 Mbps); raw Mbps only appears at I/O boundaries.
//! Every node except the single destination is a commodity sourcing uplink
//! traffic toward that destination.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use thiserror::Error;

/// Absolute tolerance for conservation and capacity checks. LP solutions
/// carry round-off; exact arithmetic is not assumed anywhere downstream.
pub const FLOW_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("unknown edge ({0}, {1})")]
    UnknownEdge(usize, usize),
    #[error("edge index {0} out of range")]
    EdgeIndex(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("missing capacity snapshot for window step {0}")]
    MissingSnapshot(usize),
    #[error("re-routing plan has no entry for window step {0}")]
    MissingPlanEntry(usize),
    #[error("scratch capacity {0} is not positive; re-routing not permitted")]
    NoScratch(f64),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("topology file parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Optional per-link radio metadata carried by the topology file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EdgeMeta {
    pub length_km: Option<f64>,
    pub freq_ghz: Option<f64>,
    pub ptx_dbm: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub meta: EdgeMeta,
}

/// Directed graph of base-stations with one common destination.
#[derive(Debug, Clone)]
pub struct NetworkTopology {
    node_ids: Vec<u32>,
    coords: Vec<Option<(f64, f64)>>,
    destination: usize,
    edges: Vec<Edge>,
    edge_index: HashMap<(usize, usize), usize>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    commodities: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologyWarning {
    /// A commodity node with no outgoing edge can never deliver traffic.
    NodeWithoutEgress(usize),
}

impl NetworkTopology {
    /// Builds a topology from externally visible node ids and directed
    /// edges given as (from_id, to_id, meta).
    pub fn new(
        node_ids: Vec<u32>,
        destination_id: u32,
        edge_list: Vec<(u32, u32, EdgeMeta)>,
    ) -> Result<Self, NetError> {
        if node_ids.len() < 2 {
            return Err(NetError::Topology("at least two nodes required".into()));
        }
        let mut id_to_index = HashMap::new();
        for (i, &id) in node_ids.iter().enumerate() {
            if id_to_index.insert(id, i).is_some() {
                return Err(NetError::Topology(format!("duplicate node id {}", id)));
            }
        }
        let destination = *id_to_index
            .get(&destination_id)
            .ok_or_else(|| NetError::Topology(format!("destination id {} not listed", destination_id)))?;

        let n = node_ids.len();
        let mut edges = Vec::with_capacity(edge_list.len());
        let mut edge_index = HashMap::new();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (from_id, to_id, meta) in edge_list {
            let from = *id_to_index
                .get(&from_id)
                .ok_or_else(|| NetError::Topology(format!("edge references unknown node {}", from_id)))?;
            let to = *id_to_index
                .get(&to_id)
                .ok_or_else(|| NetError::Topology(format!("edge references unknown node {}", to_id)))?;
            if from == to {
                return Err(NetError::Topology(format!("self-loop at node {}", from_id)));
            }
            if edge_index.insert((from, to), edges.len()).is_some() {
                return Err(NetError::Topology(format!(
                    "duplicate edge ({}, {})",
                    from_id, to_id
                )));
            }
            out_edges[from].push(edges.len());
            in_edges[to].push(edges.len());
            edges.push(Edge { from, to, meta });
        }
        let commodities = (0..n).filter(|&v| v != destination).collect();
        Ok(Self {
            node_ids,
            coords: vec![None; n],
            destination,
            edges,
            edge_index,
            out_edges,
            in_edges,
            commodities,
        })
    }

    pub fn with_coords(mut self, coords: Vec<Option<(f64, f64)>>) -> Result<Self, NetError> {
        if coords.len() != self.num_nodes() {
            return Err(NetError::DimensionMismatch(format!(
                "{} coordinate entries for {} nodes",
                coords.len(),
                self.num_nodes()
            )));
        }
        self.coords = coords;
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn destination(&self) -> usize {
        self.destination
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> Result<&Edge, NetError> {
        self.edges.get(idx).ok_or(NetError::EdgeIndex(idx))
    }

    pub fn edge_id(&self, from: usize, to: usize) -> Result<usize, NetError> {
        self.edge_index
            .get(&(from, to))
            .copied()
            .ok_or(NetError::UnknownEdge(from, to))
    }

    pub fn out_edges(&self, node: usize) -> &[usize] {
        &self.out_edges[node]
    }

    pub fn in_edges(&self, node: usize) -> &[usize] {
        &self.in_edges[node]
    }

    /// Commodity source nodes (every node except the destination),
    /// ascending by internal index.
    pub fn commodities(&self) -> &[usize] {
        &self.commodities
    }

    pub fn num_commodities(&self) -> usize {
        self.commodities.len()
    }

    /// Position of `node` in the commodity list.
    pub fn commodity_slot(&self, node: usize) -> Option<usize> {
        self.commodities.iter().position(|&c| c == node)
    }

    pub fn node_id(&self, idx: usize) -> u32 {
        self.node_ids[idx]
    }

    pub fn node_coords(&self, idx: usize) -> Option<(f64, f64)> {
        self.coords[idx]
    }

    /// External label for an edge, used in trace files.
    pub fn edge_label(&self, idx: usize) -> String {
        let e = &self.edges[idx];
        format!("{}-{}", self.node_ids[e.from], self.node_ids[e.to])
    }

    pub fn edge_by_label(&self, label: &str) -> Option<usize> {
        let (a, b) = label.split_once('-')?;
        let from_id: u32 = a.parse().ok()?;
        let to_id: u32 = b.parse().ok()?;
        let from = self.node_ids.iter().position(|&id| id == from_id)?;
        let to = self.node_ids.iter().position(|&id| id == to_id)?;
        self.edge_index.get(&(from, to)).copied()
    }

    pub fn validate(&self) -> Vec<TopologyWarning> {
        let mut warnings = Vec::new();
        for &c in &self.commodities {
            if self.out_edges[c].is_empty() {
                warnings.push(TopologyWarning::NodeWithoutEgress(c));
            }
        }
        warnings
    }
}

/// Per-node demand, normalized units; zero at the destination.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandVector {
    per_node: Vec<f64>,
}

impl DemandVector {
    /// Demands given per commodity, in commodity-slot order.
    pub fn from_commodities(topo: &NetworkTopology, demands: &[f64]) -> Result<Self, NetError> {
        if demands.len() != topo.num_commodities() {
            return Err(NetError::DimensionMismatch(format!(
                "{} demands for {} commodities",
                demands.len(),
                topo.num_commodities()
            )));
        }
        if let Some(d) = demands.iter().find(|&&d| !(d > 0.0) || !d.is_finite()) {
            return Err(NetError::Topology(format!("demand {} is not positive and finite", d)));
        }
        let mut per_node = vec![0.0; topo.num_nodes()];
        for (slot, &node) in topo.commodities().iter().enumerate() {
            per_node[node] = demands[slot];
        }
        Ok(Self { per_node })
    }

    pub fn of_node(&self, node: usize) -> f64 {
        self.per_node[node]
    }
}

/// Per-edge capacity snapshot for a single time-step, normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacitySnapshot {
    per_edge: Vec<f64>,
}

impl CapacitySnapshot {
    pub fn new(per_edge: Vec<f64>) -> Self {
        debug_assert!(per_edge.iter().all(|&c| c >= 0.0));
        Self { per_edge }
    }

    pub fn uniform(topo: &NetworkTopology, value: f64) -> Self {
        Self::new(vec![value; topo.num_edges()])
    }

    pub fn get(&self, edge: usize) -> f64 {
        self.per_edge[edge]
    }

    pub fn len(&self) -> usize {
        self.per_edge.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_edge.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.per_edge
    }
}

/// Routing fractions per (commodity, edge): the share of a commodity's
/// admitted demand carried by each link.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingMatrix {
    n_comm: usize,
    n_edges: usize,
    fractions: Vec<f64>,
}

impl RoutingMatrix {
    pub fn zeros(topo: &NetworkTopology) -> Self {
        Self {
            n_comm: topo.num_commodities(),
            n_edges: topo.num_edges(),
            fractions: vec![0.0; topo.num_commodities() * topo.num_edges()],
        }
    }

    pub fn get(&self, commodity_slot: usize, edge: usize) -> f64 {
        self.fractions[commodity_slot * self.n_edges + edge]
    }

    pub fn set(&mut self, commodity_slot: usize, edge: usize, value: f64) {
        self.fractions[commodity_slot * self.n_edges + edge] = value;
    }

    pub fn num_commodities(&self) -> usize {
        self.n_comm
    }

    pub fn num_edges(&self) -> usize {
        self.n_edges
    }

    /// Largest absolute difference between two routings.
    pub fn max_abs_diff(&self, other: &RoutingMatrix) -> f64 {
        self.fractions
            .iter()
            .zip(&other.fractions)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Admitted fraction of each commodity's demand, in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissionVector {
    rates: Vec<f64>,
}

impl AdmissionVector {
    pub fn new(rates: Vec<f64>) -> Self {
        Self { rates }
    }

    pub fn zeros(topo: &NetworkTopology) -> Self {
        Self { rates: vec![0.0; topo.num_commodities()] }
    }

    pub fn get(&self, commodity_slot: usize) -> f64 {
        self.rates[commodity_slot]
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn sum(&self) -> f64 {
        self.rates.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }
}

/// One time-step's routing and admission decision.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfiguration {
    pub routing: RoutingMatrix,
    pub admission: AdmissionVector,
    pub time_step: i64,
}

/// Total flow on one edge under a configuration.
pub fn link_load(
    topo: &NetworkTopology,
    config: &NetworkConfiguration,
    d: &DemandVector,
    edge: usize,
) -> Result<f64, NetError> {
    if edge >= topo.num_edges() {
        return Err(NetError::EdgeIndex(edge));
    }
    Ok(load_on_edge(topo, config, d, edge))
}

fn load_on_edge(
    topo: &NetworkTopology,
    config: &NetworkConfiguration,
    d: &DemandVector,
    edge: usize,
) -> f64 {
    topo.commodities()
        .iter()
        .enumerate()
        .map(|(slot, &node)| {
            config.admission.get(slot) * d.of_node(node) * config.routing.get(slot, edge)
        })
        .sum()
}

/// Loads on every edge under a configuration.
pub fn link_loads(
    topo: &NetworkTopology,
    config: &NetworkConfiguration,
    d: &DemandVector,
) -> Vec<f64> {
    (0..topo.num_edges())
        .map(|e| load_on_edge(topo, config, d, e))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Routing fraction outside [0, 1].
    FractionRange { commodity: usize, edge: usize, value: f64 },
    /// Nonzero fraction on an edge the flow constraints force to zero
    /// (incoming at the commodity source, or outgoing at the destination).
    StructuralZero { commodity: usize, edge: usize, value: f64 },
    /// Flow conservation residual beyond tolerance at a node.
    Conservation { commodity: usize, node: usize, residual: f64 },
    /// Admission rate outside [0, 1].
    AdmissionRange { commodity: usize, value: f64 },
    /// Link load exceeding min(current, next) capacity.
    Capacity { edge: usize, load: f64, limit: f64 },
}

impl Violation {
    /// Signed slack of the violated constraint (negative = violated amount).
    pub fn slack(&self) -> f64 {
        match self {
            Violation::FractionRange { value, .. } => {
                if *value < 0.0 { *value } else { 1.0 - value }
            }
            Violation::StructuralZero { value, .. } => -value.abs(),
            Violation::Conservation { residual, .. } => -residual.abs(),
            Violation::AdmissionRange { value, .. } => {
                if *value < 0.0 { *value } else { 1.0 - value }
            }
            Violation::Capacity { load, limit, .. } => limit - load,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::FractionRange { commodity, edge, value } => {
                write!(f, "fraction[{}][{}] = {} outside [0,1]", commodity, edge, value)
            }
            Violation::StructuralZero { commodity, edge, value } => {
                write!(f, "fraction[{}][{}] = {} must be zero", commodity, edge, value)
            }
            Violation::Conservation { commodity, node, residual } => {
                write!(f, "conservation residual {} for commodity {} at node {}", residual, commodity, node)
            }
            Violation::AdmissionRange { commodity, value } => {
                write!(f, "admission[{}] = {} outside [0,1]", commodity, value)
            }
            Violation::Capacity { edge, load, limit } => {
                write!(f, "edge {} load {} exceeds limit {}", edge, load, limit)
            }
        }
    }
}

/// Outcome of a full feasibility check; lists every violated constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
    /// Edges whose capacity constraint holds with slack below tolerance.
    pub tight_edges: Vec<usize>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks flow constraints, conservation, admission ranges, and the
/// capacity constraint `load <= min(c_now, c_next)` on every edge.
///
/// Conservation is only meaningful for commodities that actually inject
/// flow; fractions of a commodity with zero admission still must satisfy it
/// when nonzero, but an all-zero fraction row with zero admission passes.
pub fn check_feasible(
    topo: &NetworkTopology,
    config: &NetworkConfiguration,
    d: &DemandVector,
    c_now: &CapacitySnapshot,
    c_next: &CapacitySnapshot,
) -> Result<FeasibilityReport, NetError> {
    if c_now.len() != topo.num_edges() || c_next.len() != topo.num_edges() {
        return Err(NetError::DimensionMismatch(format!(
            "capacity snapshots cover {}/{} edges, topology has {}",
            c_now.len(),
            c_next.len(),
            topo.num_edges()
        )));
    }
    if config.routing.num_commodities() != topo.num_commodities()
        || config.routing.num_edges() != topo.num_edges()
        || config.admission.len() != topo.num_commodities()
    {
        return Err(NetError::DimensionMismatch("configuration shaped for a different topology".into()));
    }

    let mut violations = Vec::new();
    for (slot, &node) in topo.commodities().iter().enumerate() {
        let z = config.admission.get(slot);
        if !(-FLOW_TOL..=1.0 + FLOW_TOL).contains(&z) {
            violations.push(Violation::AdmissionRange { commodity: node, value: z });
        }
        let mut all_zero = true;
        for e in 0..topo.num_edges() {
            let f = config.routing.get(slot, e);
            if f.abs() > FLOW_TOL {
                all_zero = false;
            }
            if !(-FLOW_TOL..=1.0 + FLOW_TOL).contains(&f) {
                violations.push(Violation::FractionRange { commodity: node, edge: e, value: f });
            }
        }
        for &e in topo.in_edges(node) {
            let f = config.routing.get(slot, e);
            if f.abs() > FLOW_TOL {
                violations.push(Violation::StructuralZero { commodity: node, edge: e, value: f });
            }
        }
        for &e in topo.out_edges(topo.destination()) {
            let f = config.routing.get(slot, e);
            if f.abs() > FLOW_TOL {
                violations.push(Violation::StructuralZero { commodity: node, edge: e, value: f });
            }
        }
        if all_zero && config.admission.get(slot).abs() <= FLOW_TOL {
            continue;
        }
        for l in 0..topo.num_nodes() {
            let inflow: f64 = topo.in_edges(l).iter().map(|&e| config.routing.get(slot, e)).sum();
            let outflow: f64 = topo.out_edges(l).iter().map(|&e| config.routing.get(slot, e)).sum();
            let expected = if l == node {
                -1.0
            } else if l == topo.destination() {
                1.0
            } else {
                0.0
            };
            let residual = inflow - outflow - expected;
            if residual.abs() > FLOW_TOL {
                violations.push(Violation::Conservation { commodity: node, node: l, residual });
            }
        }
    }

    let mut tight_edges = Vec::new();
    for e in 0..topo.num_edges() {
        let load = load_on_edge(topo, config, d, e);
        let limit = c_now.get(e).min(c_next.get(e));
        if load > limit + FLOW_TOL {
            violations.push(Violation::Capacity { edge: e, load, limit });
        } else if limit - load <= FLOW_TOL {
            tight_edges.push(e);
        }
    }

    Ok(FeasibilityReport { violations, tight_edges })
}

/// Largest uniform per-link headroom fraction left by the previous
/// configuration under the current capacities, clamped to [0, 1]. A loaded
/// edge with zero capacity yields 0 (re-route prohibited).
pub fn scratch_capacity(
    topo: &NetworkTopology,
    prev_config: &NetworkConfiguration,
    d: &DemandVector,
    c_now: &CapacitySnapshot,
) -> f64 {
    let mut worst = 0.0f64;
    for e in 0..topo.num_edges() {
        let load = load_on_edge(topo, prev_config, d, e);
        let cap = c_now.get(e);
        if load <= 0.0 {
            continue;
        }
        if cap <= 0.0 {
            return 0.0;
        }
        worst = worst.max(load / cap);
    }
    (1.0 - worst).clamp(0.0, 1.0)
}

/// Number of stages a congestion-free route update needs given scratch
/// capacity `s`: ceil(1/s) - 1.
pub fn swan_stage_bound(s: f64) -> Result<u32, NetError> {
    if !(s > 0.0) || s > 1.0 {
        return Err(NetError::NoScratch(s));
    }
    Ok(((1.0 / s).ceil() as u32).saturating_sub(1))
}

/// Effective capacity for window step `h`: per edge,
/// `min(cap[h], (1 - s_min * r[h+1]) * cap[h+1])`. A planned re-route at
/// `h+1` reserves scratch headroom one step ahead.
pub fn effective_capacity(
    h: usize,
    plan_bits: &[bool],
    caps: &[CapacitySnapshot],
    s_min: f64,
) -> Result<CapacitySnapshot, NetError> {
    let now = caps.get(h).ok_or(NetError::MissingSnapshot(h))?;
    let next = caps.get(h + 1).ok_or(NetError::MissingSnapshot(h + 1))?;
    let reroute_next = *plan_bits.get(h + 1).ok_or(NetError::MissingPlanEntry(h + 1))?;
    if now.len() != next.len() {
        return Err(NetError::DimensionMismatch(format!(
            "snapshot sizes {} vs {}",
            now.len(),
            next.len()
        )));
    }
    let factor = if reroute_next { 1.0 - s_min } else { 1.0 };
    let values = now
        .values()
        .iter()
        .zip(next.values())
        .map(|(&c_h, &c_next)| c_h.min(factor * c_next))
        .collect();
    Ok(CapacitySnapshot::new(values))
}

/// Example networks used across tests, documentation, and the CLI selftest.
pub mod examples {
    use super::*;

    /// Three nodes, two commodities (demands 1.0 and 0.5), three links
    /// (1,2), (2,3), (1,3), destination 3.
    pub fn toy_triangle() -> (NetworkTopology, DemandVector) {
        let meta = EdgeMeta::default();
        let topo = NetworkTopology::new(
            vec![1, 2, 3],
            3,
            vec![(1, 2, meta), (2, 3, meta), (1, 3, meta)],
        )
        .expect("static topology")
        .with_coords(vec![
            Some((0.0, 0.0)),
            Some((2.0, 0.0)),
            Some((1.0, 1.5)),
        ])
        .expect("static coords");
        let d = DemandVector::from_commodities(&topo, &[1.0, 0.5]).expect("static demands");
        (topo, d)
    }

    /// Representative 13-node / 17-link metro aggregation network. The
    /// adjacency is illustrative; real deployments load their own topology
    /// file.
    pub fn metro13() -> (NetworkTopology, DemandVector) {
        let m = |len: f64, freq: f64| EdgeMeta {
            length_km: Some(len),
            freq_ghz: Some(freq),
            ptx_dbm: Some(0.0),
        };
        let edges = vec![
            (1, 4, m(1.8, 38.0)),
            (2, 4, m(0.9, 40.0)),
            (3, 5, m(2.3, 28.0)),
            (4, 6, m(2.7, 23.0)),
            (5, 6, m(1.4, 38.0)),
            (5, 7, m(2.1, 28.0)),
            (6, 9, m(3.2, 18.0)),
            (7, 9, m(1.7, 38.0)),
            (8, 7, m(0.6, 40.0)),
            (8, 10, m(2.4, 28.0)),
            (9, 12, m(3.8, 18.0)),
            (10, 12, m(2.9, 23.0)),
            (11, 12, m(1.2, 38.0)),
            (12, 13, m(5.9, 18.0)),
            (9, 13, m(4.6, 18.0)),
            (10, 13, m(3.5, 23.0)),
            (1, 6, m(3.0, 23.0)),
        ];
        let coords = vec![
            Some((0.5, 8.6)),
            Some((2.2, 9.4)),
            Some((8.9, 9.1)),
            Some((1.6, 7.2)),
            Some((7.4, 7.8)),
            Some((3.9, 6.1)),
            Some((7.0, 5.2)),
            Some((8.8, 4.4)),
            Some((5.1, 3.9)),
            Some((7.9, 2.6)),
            Some((1.9, 2.8)),
            Some((4.4, 1.5)),
            Some((5.6, 0.4)),
        ];
        let topo = NetworkTopology::new((1..=13).collect(), 13, edges)
            .expect("static topology")
            .with_coords(coords)
            .expect("static coords");
        let demands = [
            1.111, 0.557, 1.124, 1.266, 0.174, 1.485, 0.947, 0.067, 0.140, 0.596, 1.413, 0.999,
        ];
        let d = DemandVector::from_commodities(&topo, &demands).expect("static demands");
        (topo, d)
    }
}

// ---------------------------------------------------------------------------
// Topology file (JSON, `format: 1`)
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct TopologyFileNode {
    id: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    x_km: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y_km: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TopologyFileEdge {
    from: u32,
    to: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    length_km: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    freq_ghz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ptx_dbm: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TopologyFile {
    format: u32,
    nodes: Vec<TopologyFileNode>,
    destination: u32,
    edges: Vec<TopologyFileEdge>,
    /// One positive demand per non-destination node, in node-list order.
    demands: Vec<f64>,
}

/// Parses a `format: 1` topology document.
pub fn topology_from_json(text: &str) -> Result<(NetworkTopology, DemandVector), NetError> {
    let file: TopologyFile = serde_json::from_str(text)?;
    if file.format != 1 {
        return Err(NetError::Topology(format!(
            "unsupported topology format {}",
            file.format
        )));
    }
    let node_ids: Vec<u32> = file.nodes.iter().map(|n| n.id).collect();
    let coords: Vec<Option<(f64, f64)>> = file
        .nodes
        .iter()
        .map(|n| match (n.x_km, n.y_km) {
            (Some(x), Some(y)) => Some((x, y)),
            _ => None,
        })
        .collect();
    let edges = file
        .edges
        .iter()
        .map(|e| {
            (
                e.from,
                e.to,
                EdgeMeta { length_km: e.length_km, freq_ghz: e.freq_ghz, ptx_dbm: e.ptx_dbm },
            )
        })
        .collect();
    let topo = NetworkTopology::new(node_ids, file.destination, edges)?.with_coords(coords)?;
    let d = DemandVector::from_commodities(&topo, &file.demands)?;
    Ok((topo, d))
}

pub fn load_topology(path: &Path) -> Result<(NetworkTopology, DemandVector), NetError> {
    let text = std::fs::read_to_string(path)?;
    topology_from_json(&text)
}

/// Serializes a topology (plus demands) back to the `format: 1` document.
pub fn topology_to_json(topo: &NetworkTopology, d: &DemandVector) -> String {
    let nodes = (0..topo.num_nodes())
        .map(|i| TopologyFileNode {
            id: topo.node_id(i),
            x_km: topo.node_coords(i).map(|c| c.0),
            y_km: topo.node_coords(i).map(|c| c.1),
        })
        .collect();
    let edges = topo
        .edges()
        .iter()
        .map(|e| TopologyFileEdge {
            from: topo.node_id(e.from),
            to: topo.node_id(e.to),
            length_km: e.meta.length_km,
            freq_ghz: e.meta.freq_ghz,
            ptx_dbm: e.meta.ptx_dbm,
        })
        .collect();
    let demands = topo
        .commodities()
        .iter()
        .map(|&node| d.of_node(node))
        .collect();
    let file = TopologyFile {
        format: 1,
        nodes,
        destination: topo.node_id(topo.destination()),
        edges,
        demands,
    };
    serde_json::to_string_pretty(&file).expect("topology serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The hand solution of the triangle instance at common rate 2/3:
    /// commodity 1 splits 3/4 on (1,3) and 1/4 via (1,2)+(2,3), commodity 2
    /// sends everything on (2,3).
    fn toy_solution(topo: &NetworkTopology) -> NetworkConfiguration {
        let mut routing = RoutingMatrix::zeros(topo);
        let e12 = topo.edge_id(0, 1).unwrap();
        let e23 = topo.edge_id(1, 2).unwrap();
        let e13 = topo.edge_id(0, 2).unwrap();
        routing.set(0, e13, 0.75);
        routing.set(0, e12, 0.25);
        routing.set(0, e23, 0.25);
        routing.set(1, e23, 1.0);
        NetworkConfiguration {
            routing,
            admission: AdmissionVector::new(vec![2.0 / 3.0, 2.0 / 3.0]),
            time_step: 0,
        }
    }

    #[test]
    fn toy_link_load() {
        let (topo, d) = examples::toy_triangle();
        let config = toy_solution(&topo);
        let e23 = topo.edge_id(1, 2).unwrap();
        let load = link_load(&topo, &config, &d, e23).unwrap();
        assert!((load - 0.5).abs() < 1e-12);
        let e13 = topo.edge_id(0, 2).unwrap();
        assert!((link_load(&topo, &config, &d, e13).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_admission_zero_load() {
        let (topo, d) = examples::toy_triangle();
        let mut config = toy_solution(&topo);
        config.admission = AdmissionVector::new(vec![0.0, 0.0]);
        for e in 0..topo.num_edges() {
            assert_eq!(link_load(&topo, &config, &d, e).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_path_identity_load() {
        let (topo, _) = examples::toy_triangle();
        let d = DemandVector::from_commodities(&topo, &[1.0, 1.0]).unwrap();
        let mut routing = RoutingMatrix::zeros(&topo);
        let e13 = topo.edge_id(0, 2).unwrap();
        routing.set(0, e13, 1.0);
        let config = NetworkConfiguration {
            routing,
            admission: AdmissionVector::new(vec![0.4, 0.0]),
            time_step: 0,
        };
        assert!((link_load(&topo, &config, &d, e13).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn unknown_edge_rejected() {
        let (topo, d) = examples::toy_triangle();
        let config = toy_solution(&topo);
        assert!(link_load(&topo, &config, &d, 99).is_err());
        assert!(topo.edge_id(1, 0).is_err());
    }

    #[test]
    fn toy_feasible_and_tight() {
        let (topo, d) = examples::toy_triangle();
        let config = toy_solution(&topo);
        let caps = CapacitySnapshot::uniform(&topo, 0.5);
        let report = check_feasible(&topo, &config, &d, &caps, &caps).unwrap();
        assert!(report.is_feasible(), "violations: {:?}", report.violations);
        let e23 = topo.edge_id(1, 2).unwrap();
        let e13 = topo.edge_id(0, 2).unwrap();
        assert!(report.tight_edges.contains(&e23));
        assert!(report.tight_edges.contains(&e13));
    }

    #[test]
    fn toy_capacity_drop_detected() {
        let (topo, d) = examples::toy_triangle();
        let config = toy_solution(&topo);
        let caps = CapacitySnapshot::uniform(&topo, 0.5);
        let e23 = topo.edge_id(1, 2).unwrap();
        let mut next = vec![0.5; topo.num_edges()];
        next[e23] = 0.4;
        let report =
            check_feasible(&topo, &config, &d, &caps, &CapacitySnapshot::new(next)).unwrap();
        assert!(!report.is_feasible());
        let excess = report
            .violations
            .iter()
            .find_map(|v| match v {
                Violation::Capacity { edge, load, limit } if *edge == e23 => Some(load - limit),
                _ => None,
            })
            .expect("capacity violation on (2,3)");
        assert!((excess - 0.1).abs() < 1e-9);
    }

    #[test]
    fn empty_config_feasible() {
        let (topo, d) = examples::toy_triangle();
        let config = NetworkConfiguration {
            routing: RoutingMatrix::zeros(&topo),
            admission: AdmissionVector::zeros(&topo),
            time_step: 0,
        };
        let caps = CapacitySnapshot::uniform(&topo, 0.5);
        let report = check_feasible(&topo, &config, &d, &caps, &caps).unwrap();
        assert!(report.is_feasible(), "violations: {:?}", report.violations);
    }

    #[test]
    fn mismatched_snapshot_rejected() {
        let (topo, d) = examples::toy_triangle();
        let config = toy_solution(&topo);
        let caps = CapacitySnapshot::uniform(&topo, 0.5);
        let short = CapacitySnapshot::new(vec![0.5]);
        assert!(check_feasible(&topo, &config, &d, &caps, &short).is_err());
    }

    #[test]
    fn scratch_examples() {
        let (topo, d) = examples::toy_triangle();
        let idle = NetworkConfiguration {
            routing: RoutingMatrix::zeros(&topo),
            admission: AdmissionVector::zeros(&topo),
            time_step: 0,
        };
        let caps = CapacitySnapshot::uniform(&topo, 0.5);
        assert_eq!(scratch_capacity(&topo, &idle, &d, &caps), 1.0);

        let config = toy_solution(&topo);
        assert!(scratch_capacity(&topo, &config, &d, &caps) < 1e-12);

        // Loads (0.25, 0.3, 0.1) against caps 0.5.
        let mut routing = RoutingMatrix::zeros(&topo);
        routing.set(0, 0, 0.25);
        routing.set(0, 1, 0.3);
        routing.set(0, 2, 0.1);
        let mixed = NetworkConfiguration {
            routing,
            admission: AdmissionVector::new(vec![1.0, 0.0]),
            time_step: 0,
        };
        let s = scratch_capacity(&topo, &mixed, &d, &caps);
        assert!((s - 0.4).abs() < 1e-12);

        let zero_caps = CapacitySnapshot::uniform(&topo, 0.0);
        assert_eq!(scratch_capacity(&topo, &mixed, &d, &zero_caps), 0.0);
    }

    #[test]
    fn swan_bound_examples() {
        assert_eq!(swan_stage_bound(1.0).unwrap(), 0);
        assert_eq!(swan_stage_bound(0.05).unwrap(), 19);
        assert_eq!(swan_stage_bound(0.34).unwrap(), 2);
        assert!(swan_stage_bound(0.0).is_err());
        assert!(swan_stage_bound(-0.1).is_err());
    }

    #[test]
    fn effective_capacity_examples() {
        let (topo, _) = examples::toy_triangle();
        let c = |v| CapacitySnapshot::uniform(&topo, v);
        let caps = vec![c(0.5), c(0.5)];
        let out = effective_capacity(0, &[false, false], &caps, 0.05).unwrap();
        assert!(out.values().iter().all(|&v| (v - 0.5).abs() < 1e-12));
        let out = effective_capacity(0, &[false, true], &caps, 0.05).unwrap();
        assert!(out.values().iter().all(|&v| (v - 0.475).abs() < 1e-12));
        let caps = vec![c(0.2), c(0.5)];
        let out = effective_capacity(0, &[false, true], &caps, 0.05).unwrap();
        assert!(out.values().iter().all(|&v| (v - 0.2).abs() < 1e-12));
        assert!(effective_capacity(1, &[false, true], &caps, 0.05).is_err());
        assert!(effective_capacity(0, &[false], &caps, 0.05).is_err());
    }

    #[test]
    fn effective_capacity_reroute_never_higher() {
        use rand::{Rng, SeedableRng};
        let (topo, _) = examples::toy_triangle();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let caps: Vec<CapacitySnapshot> = (0..2)
                .map(|_| {
                    CapacitySnapshot::new(
                        (0..topo.num_edges()).map(|_| rng.gen_range(0.0..1.0)).collect(),
                    )
                })
                .collect();
            let with = effective_capacity(0, &[false, true], &caps, 0.05).unwrap();
            let without = effective_capacity(0, &[false, false], &caps, 0.05).unwrap();
            for e in 0..topo.num_edges() {
                assert!(with.get(e) <= without.get(e) + 1e-15);
            }
        }
    }

    #[test]
    fn scratch_monotonicity() {
        use rand::{Rng, SeedableRng};
        let (topo, d) = examples::toy_triangle();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let mut routing = RoutingMatrix::zeros(&topo);
            for e in 0..topo.num_edges() {
                routing.set(0, e, rng.gen_range(0.0..0.8));
                routing.set(1, e, rng.gen_range(0.0..0.8));
            }
            let config = NetworkConfiguration {
                routing: routing.clone(),
                admission: AdmissionVector::new(vec![
                    rng.gen_range(0.1..1.0),
                    rng.gen_range(0.1..1.0),
                ]),
                time_step: 0,
            };
            let caps = CapacitySnapshot::new(
                (0..topo.num_edges()).map(|_| rng.gen_range(0.3..1.0)).collect(),
            );
            let s = scratch_capacity(&topo, &config, &d, &caps);

            // Scaling loads up can only shrink scratch.
            let bigger = NetworkConfiguration {
                routing: routing.clone(),
                admission: AdmissionVector::new(
                    config.admission.rates().iter().map(|z| (z * 1.2).min(1.0)).collect(),
                ),
                time_step: 0,
            };
            assert!(scratch_capacity(&topo, &bigger, &d, &caps) <= s + 1e-12);

            // Scaling capacity up can only grow scratch.
            let roomier = CapacitySnapshot::new(caps.values().iter().map(|c| c * 1.3).collect());
            assert!(scratch_capacity(&topo, &config, &d, &roomier) >= s - 1e-12);
        }
    }

    #[test]
    fn feasibility_stable_under_capacity_scaling() {
        let (topo, d) = examples::toy_triangle();
        let config = toy_solution(&topo);
        let caps = CapacitySnapshot::uniform(&topo, 0.5);
        for scale in [1.0, 1.5, 2.0, 10.0] {
            let scaled = CapacitySnapshot::new(caps.values().iter().map(|c| c * scale).collect());
            let report = check_feasible(&topo, &config, &d, &scaled, &scaled).unwrap();
            assert!(report.is_feasible());
        }
    }

    #[test]
    fn topology_json_round_trip() {
        let (topo, d) = examples::metro13();
        let text = topology_to_json(&topo, &d);
        let (topo2, d2) = topology_from_json(&text).unwrap();
        assert_eq!(topo.num_nodes(), topo2.num_nodes());
        assert_eq!(topo.num_edges(), topo2.num_edges());
        assert_eq!(topo.destination(), topo2.destination());
        for &node in topo.commodities() {
            assert_eq!(d.of_node(node), d2.of_node(node));
        }
        assert_eq!(topo.num_nodes(), 13);
        assert_eq!(topo.num_edges(), 17);
        assert!(topo.validate().is_empty());
    }

    #[test]
    fn topology_validation_errors() {
        assert!(NetworkTopology::new(vec![1], 1, vec![]).is_err());
        assert!(NetworkTopology::new(vec![1, 2], 3, vec![]).is_err());
        assert!(NetworkTopology::new(vec![1, 2], 2, vec![(1, 1, EdgeMeta::default())]).is_err());
        let bad = r#"{"format": 2, "nodes": [{"id":1},{"id":2}], "destination": 2, "edges": [], "demands": [1.0]}"#;
        assert!(topology_from_json(bad).is_err());
    }

    #[test]
    fn egress_warning() {
        let topo =
            NetworkTopology::new(vec![1, 2, 3], 3, vec![(1, 3, EdgeMeta::default())]).unwrap();
        let warnings = topo.validate();
        assert_eq!(warnings, vec![TopologyWarning::NodeWithoutEgress(1)]);
    }
}
