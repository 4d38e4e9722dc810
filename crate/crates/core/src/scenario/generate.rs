//! Synthetic attenuation generators.

use super::{AttenuationTrace, ScenarioError};
use crate::net::NetworkTopology;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Received-level clip range (dBm) for the random-walk process.
pub const PRX_MIN_DBM: f64 = -100.0;
pub const PRX_MAX_DBM: f64 = -50.0;

/// Parameters of the per-link clipped random walk on the received level.
#[derive(Debug, Clone, Copy)]
pub struct RandomWalkParams {
    /// Variance of the per-step Gaussian increment (dB^2).
    pub sigma2: f64,
    /// Constant transmitted level (dBm).
    pub ptx_dbm: f64,
}

impl Default for RandomWalkParams {
    fn default() -> Self {
        Self { sigma2: 6.25, ptx_dbm: 0.0 }
    }
}

fn link_rng(seed: u64, link: usize, stream_group: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_group.wrapping_mul(1 << 32).wrapping_add(link as u64));
    rng
}

/// Independent per-link random walks: the received level starts uniform in
/// the clip range and each step adds a Gaussian increment, clipped back to
/// [-100, -50] dBm. Transmit power is constant, so attenuation is just its
/// negation shifted by `ptx_dbm`.
pub fn gen_random_walk(
    topo: &NetworkTopology,
    steps: usize,
    params: &RandomWalkParams,
    seed: u64,
) -> AttenuationTrace {
    let n_links = topo.num_edges();
    let sigma = params.sigma2.sqrt();
    let mut prx_per_link: Vec<Vec<f64>> = Vec::with_capacity(n_links);
    for link in 0..n_links {
        let mut rng = link_rng(seed, link, 0);
        let mut series = Vec::with_capacity(steps);
        let mut level = rng.gen_range(PRX_MIN_DBM..PRX_MAX_DBM);
        if sigma > 0.0 {
            let normal = Normal::new(0.0, sigma).expect("finite sigma");
            for _ in 0..steps {
                series.push(level);
                level = (level + normal.sample(&mut rng)).clamp(PRX_MIN_DBM, PRX_MAX_DBM);
            }
        } else {
            series.resize(steps, level);
        }
        prx_per_link.push(series);
    }
    let prx: Vec<Vec<f64>> = (0..steps)
        .map(|t| (0..n_links).map(|l| prx_per_link[l][t]).collect())
        .collect();
    let ptx = vec![vec![params.ptx_dbm; n_links]; steps];
    AttenuationTrace::new(
        (0..n_links).map(|e| topo.edge_label(e)).collect(),
        ptx,
        prx,
        Some(seed),
        "random_walk".into(),
    )
}

/// A circular rain cell with a Gaussian intensity footprint, drifting at
/// constant velocity.
#[derive(Debug, Clone, Copy)]
pub struct RainCell {
    pub center: (f64, f64),
    pub velocity: (f64, f64),
    pub peak: f64,
    pub radius_km: f64,
}

#[derive(Debug, Clone)]
pub struct RainFieldParams {
    pub cells: Vec<RainCell>,
    /// Per-link dry-weather attenuation offset (dB) added to the
    /// length/frequency baseline.
    pub baseline_db: f64,
    /// Measurement noise standard deviation (dB).
    pub noise_db: f64,
    /// Scale from path-integrated intensity to dB at the reference
    /// frequency.
    pub rain_coeff: f64,
    /// When set, attenuation grows as the path integral raised to this
    /// exponent instead of linearly.
    pub power_law_exponent: Option<f64>,
    /// Quadrature points along each link for the path integral.
    pub quadrature: usize,
}

impl Default for RainFieldParams {
    fn default() -> Self {
        Self {
            cells: Vec::new(),
            baseline_db: 55.0,
            noise_db: 0.1,
            rain_coeff: 1.0,
            power_law_exponent: None,
            quadrature: 24,
        }
    }
}

fn cell_intensity(cell: &RainCell, step: f64, point: (f64, f64)) -> f64 {
    let cx = cell.center.0 + cell.velocity.0 * step;
    let cy = cell.center.1 + cell.velocity.1 * step;
    let dx = point.0 - cx;
    let dy = point.1 - cy;
    let r2 = cell.radius_km * cell.radius_km;
    cell.peak * (-(dx * dx + dy * dy) / (2.0 * r2)).exp()
}

/// Spatio-temporally correlated attenuation: every link accumulates the
/// path integral of the moving cells' intensity along its segment, scaled
/// by a frequency factor, on top of a deterministic length/frequency
/// baseline plus small measurement noise. Nearby links see correlated
/// attenuation by construction.
pub fn gen_rain_field(
    topo: &NetworkTopology,
    steps: usize,
    params: &RainFieldParams,
    seed: u64,
) -> Result<AttenuationTrace, ScenarioError> {
    let n_links = topo.num_edges();
    let mut geometry = Vec::with_capacity(n_links);
    for e in 0..n_links {
        let edge = &topo.edges()[e];
        let a = topo.node_coords(edge.from).ok_or(ScenarioError::MissingGeometry)?;
        let b = topo.node_coords(edge.to).ok_or(ScenarioError::MissingGeometry)?;
        let length = edge
            .meta
            .length_km
            .unwrap_or_else(|| ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt());
        let freq = edge.meta.freq_ghz.unwrap_or(28.0);
        let ptx = edge.meta.ptx_dbm.unwrap_or(0.0);
        geometry.push((a, b, length, freq, ptx));
    }

    let mut noise_rngs: Vec<ChaCha8Rng> =
        (0..n_links).map(|l| link_rng(seed, l, 1)).collect();
    let noise = if params.noise_db > 0.0 {
        Some(Normal::new(0.0, params.noise_db).expect("finite noise"))
    } else {
        None
    };

    let mut ptx_rows = Vec::with_capacity(steps);
    let mut prx_rows = Vec::with_capacity(steps);
    for t in 0..steps {
        let mut ptx_row = Vec::with_capacity(n_links);
        let mut prx_row = Vec::with_capacity(n_links);
        for (l, &(a, b, length, freq, ptx)) in geometry.iter().enumerate() {
            // Midpoint quadrature of the summed cell intensities.
            let q = params.quadrature.max(1);
            let mut integral = 0.0;
            for k in 0..q {
                let s = (k as f64 + 0.5) / q as f64;
                let point = (a.0 + (b.0 - a.0) * s, a.1 + (b.1 - a.1) * s);
                let intensity: f64 =
                    params.cells.iter().map(|c| cell_intensity(c, t as f64, point)).sum();
                integral += intensity * (length / q as f64);
            }
            let shaped = match params.power_law_exponent {
                Some(exp) => integral.powf(exp),
                None => integral,
            };
            let freq_factor = freq / 20.0;
            let baseline = params.baseline_db + 0.2 * length * freq_factor;
            let mut attenuation = baseline + params.rain_coeff * freq_factor * shaped;
            if let Some(n) = &noise {
                attenuation += n.sample(&mut noise_rngs[l]);
            }
            ptx_row.push(ptx);
            prx_row.push(ptx - attenuation);
        }
        ptx_rows.push(ptx_row);
        prx_rows.push(prx_row);
    }
    Ok(AttenuationTrace::new(
        (0..n_links).map(|e| topo.edge_label(e)).collect(),
        ptx_rows,
        prx_rows,
        Some(seed),
        "rain_field".into(),
    ))
}

/// Fresh Gaussian noise added to the true future received level, clipped to
/// the generator range: a synthetic stand-in for an imperfect forecaster.
/// Zero variance reproduces the truth exactly.
pub fn noisy_future_prx(
    trace: &AttenuationTrace,
    t: usize,
    h: usize,
    noise: &mut Option<(Normal<f64>, Vec<ChaCha8Rng>)>,
) -> Result<Vec<f64>, ScenarioError> {
    if t + h >= trace.len() {
        return Err(ScenarioError::BeyondTrace(h, t, trace.len()));
    }
    let truth = trace.prx_row(t + h);
    match noise {
        None => Ok(truth.to_vec()),
        Some((normal, rngs)) => Ok(truth
            .iter()
            .zip(rngs.iter_mut())
            .map(|(&p, rng)| (p + normal.sample(rng)).clamp(PRX_MIN_DBM, PRX_MAX_DBM))
            .collect()),
    }
}
