#![allow(dead_code)]

//! Shared helpers for the integration suites: random instances and small
//! assertion plumbing.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use xhaul_core::maxmin::{RoutingMode, Subdivision};
use xhaul_core::net::{CapacitySnapshot, DemandVector, EdgeMeta, NetworkTopology};

/// Random connected-ish digraph with the last node as destination; every
/// commodity keeps at least one outgoing edge.
pub fn random_topology(rng: &mut ChaCha8Rng, max_nodes: usize) -> (NetworkTopology, DemandVector) {
    let n = rng.gen_range(2..=max_nodes as u32);
    let ids: Vec<u32> = (1..=n).collect();
    let mut edges = Vec::new();
    for i in 1..=n {
        for j in 1..=n {
            if i != j && rng.gen_bool(0.45) {
                edges.push((i, j, EdgeMeta::default()));
            }
        }
    }
    for i in 1..n {
        if !edges.iter().any(|&(from, _, _)| from == i) {
            edges.push((i, n, EdgeMeta::default()));
        }
    }
    let topo = NetworkTopology::new(ids, n, edges).expect("valid random topology");
    let demands: Vec<f64> =
        (0..topo.num_commodities()).map(|_| rng.gen_range(0.2..1.5)).collect();
    let d = DemandVector::from_commodities(&topo, &demands).expect("positive demands");
    (topo, d)
}

/// Free-routing segment with random per-step capacities in [0, 1].
pub fn random_subdivision(
    rng: &mut ChaCha8Rng,
    topo: &NetworkTopology,
    max_steps: usize,
) -> Subdivision {
    let steps = rng.gen_range(1..=max_steps);
    let caps: Vec<CapacitySnapshot> = (0..steps)
        .map(|_| {
            CapacitySnapshot::new(
                (0..topo.num_edges()).map(|_| rng.gen_range(0.0..1.0)).collect(),
            )
        })
        .collect();
    Subdivision::new(0, steps - 1, caps, RoutingMode::Free).expect("valid segment")
}

/// Runs a named acceptance criterion, printing one PASS/FAIL line.
pub fn criterion<F>(number: u32, name: &str, body: F)
where
    F: FnOnce() -> Result<(), String>,
{
    match body() {
        Ok(()) => println!("acceptance {:02} {}: PASS", number, name),
        Err(message) => {
            println!("acceptance {:02} {}: FAIL - {}", number, name, message);
            panic!("acceptance criterion {} ({}) failed: {}", number, name, message);
        }
    }
}

#[allow(unused_macros)]
macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(format!($($arg)+));
        }
    };
}
#[allow(unused_imports)]
pub(crate) use ensure;
