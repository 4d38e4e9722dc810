//! Synthetic attenuation generators, trace files, and scenario descriptors.
//!
//! Traces hold per-link transmitted/received signal levels at a fixed 10 s
//! sampling interval. Two generators are provided: independent per-link
//! clipped random walks on the received level, and a spatio-temporally
//! correlated rain field that sweeps moving cells across the link geometry.
//! Randomness comes from a ChaCha8 stream cipher seeded with a single 64-bit
//! seed; every link draws from its own substream, so traces are reproducible
//! per seed within one build.

mod generate;
mod import;

pub use generate::{
    gen_rain_field, gen_random_walk, noisy_future_prx, RainCell, RainFieldParams,
    RandomWalkParams, PRX_MAX_DBM, PRX_MIN_DBM,
};
pub use import::{import_trace, import_trace_with_warnings, write_trace, GapPolicy, ImportWarning};

use crate::net::{DemandVector, NetError, NetworkTopology};
use crate::phy::AttenuationSample;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Sampling interval between consecutive trace steps.
pub const SAMPLE_INTERVAL_SECONDS: f64 = 10.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("trace i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("unknown link id {0:?}")]
    UnknownLink(String),
    #[error("trace length mismatch: link {0} has {1} samples, expected {2}")]
    LengthMismatch(String, usize, usize),
    #[error("horizon {0} at step {1} is beyond the trace ({2} steps)")]
    BeyondTrace(usize, usize, usize),
    #[error("links carry no geometry; the rain-field generator needs node coordinates")]
    MissingGeometry,
    #[error("scenario descriptor parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported scenario format {0}")]
    Format(u32),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Per-link time series of transmitted/received signal levels.
#[derive(Debug, Clone, PartialEq)]
pub struct AttenuationTrace {
    link_labels: Vec<String>,
    /// [step][link] transmitted level (dBm).
    ptx: Vec<Vec<f64>>,
    /// [step][link] received level (dBm).
    prx: Vec<Vec<f64>>,
    pub seed: Option<u64>,
    pub generator: String,
}

impl AttenuationTrace {
    pub fn new(
        link_labels: Vec<String>,
        ptx: Vec<Vec<f64>>,
        prx: Vec<Vec<f64>>,
        seed: Option<u64>,
        generator: String,
    ) -> Self {
        debug_assert_eq!(ptx.len(), prx.len());
        debug_assert!(ptx.iter().zip(&prx).all(|(a, b)| {
            a.len() == link_labels.len() && b.len() == link_labels.len()
        }));
        Self { link_labels, ptx, prx, seed, generator }
    }

    pub fn len(&self) -> usize {
        self.prx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prx.is_empty()
    }

    pub fn num_links(&self) -> usize {
        self.link_labels.len()
    }

    pub fn link_labels(&self) -> &[String] {
        &self.link_labels
    }

    pub fn sample(&self, step: usize, link: usize) -> AttenuationSample {
        AttenuationSample {
            ptx_dbm: self.ptx[step][link],
            prx_dbm: self.prx[step][link],
        }
    }

    pub fn prx_row(&self, step: usize) -> &[f64] {
        &self.prx[step]
    }

    pub fn ptx_row(&self, step: usize) -> &[f64] {
        &self.ptx[step]
    }

    /// Attenuation (dB) for one sample: transmitted minus received level.
    pub fn attenuation(&self, step: usize, link: usize) -> f64 {
        self.ptx[step][link] - self.prx[step][link]
    }

    pub fn attenuation_row(&self, step: usize) -> Vec<f64> {
        (0..self.num_links()).map(|l| self.attenuation(step, l)).collect()
    }

    /// Whether any link's received level sits exactly on a clip boundary at
    /// this step (the generators clip to [-100, -50] dBm).
    pub fn clipped_at(&self, step: usize) -> bool {
        self.prx[step].iter().any(|&p| p <= -100.0 || p >= -50.0)
    }
}

/// A bundled experiment input: network, demands, and an attenuation trace.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub topology: NetworkTopology,
    pub demands: DemandVector,
    pub trace: AttenuationTrace,
}

// ---------------------------------------------------------------------------
// Scenario descriptor file (JSON, `format: 1`)
// ---------------------------------------------------------------------------

/// Generator selection and parameters inside a scenario descriptor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    RandomWalk {
        #[serde(default = "default_sigma2")]
        sigma2: f64,
    },
    RainField {
        #[serde(default)]
        cells: Vec<RainCellSpec>,
        #[serde(default = "default_noise")]
        noise_db: f64,
        #[serde(default)]
        power_law_exponent: Option<f64>,
    },
    /// No generation; read the trace from a CSV file.
    File { path: String },
}

fn default_sigma2() -> f64 {
    6.25
}

fn default_noise() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RainCellSpec {
    pub x_km: f64,
    pub y_km: f64,
    pub vx_km_per_step: f64,
    pub vy_km_per_step: f64,
    pub peak: f64,
    pub radius_km: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioFile {
    format: u32,
    topology: String,
    generator: GeneratorSpec,
    seed: u64,
    steps: usize,
}

/// Loads a scenario descriptor, resolving the topology (and trace file)
/// paths relative to the descriptor's directory.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    let file: ScenarioFile = serde_json::from_str(&text)?;
    if file.format != 1 {
        return Err(ScenarioError::Format(file.format));
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let resolve = |p: &str| -> PathBuf {
        let pb = PathBuf::from(p);
        if pb.is_absolute() {
            pb
        } else {
            base.join(pb)
        }
    };
    let (topology, demands) = crate::net::load_topology(&resolve(&file.topology))?;
    let trace = match &file.generator {
        GeneratorSpec::RandomWalk { sigma2 } => gen_random_walk(
            &topology,
            file.steps,
            &RandomWalkParams { sigma2: *sigma2, ..RandomWalkParams::default() },
            file.seed,
        ),
        GeneratorSpec::RainField { cells, noise_db, power_law_exponent } => {
            let params = RainFieldParams {
                cells: cells
                    .iter()
                    .map(|c| RainCell {
                        center: (c.x_km, c.y_km),
                        velocity: (c.vx_km_per_step, c.vy_km_per_step),
                        peak: c.peak,
                        radius_km: c.radius_km,
                    })
                    .collect(),
                noise_db: *noise_db,
                power_law_exponent: *power_law_exponent,
                ..RainFieldParams::default()
            };
            gen_rain_field(&topology, file.steps, &params, file.seed)?
        }
        GeneratorSpec::File { path: trace_path } => {
            import_trace(&resolve(trace_path), &topology, GapPolicy::Reject)?
        }
    };
    Ok(Scenario { topology, demands, trace })
}
