//! Encoder-decoder recurrent network over per-link attenuation vectors.
//!
//! One LSTM layer encodes the input window into a state vector; a second
//! LSTM layer unrolls the prediction window from that state. The decoder's
//! first input is the last observation; later inputs are either its own
//! previous output (autoregressive, used at inference) or the ground-truth
//! targets (teacher forcing, used during training). Everything is f64 so
//! finite-difference gradient checks are meaningful.

use ndarray::{s, Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

/// Gate block order within the stacked weight matrices.
const GATES: usize = 4; // input, forget, candidate, output

/// One LSTM cell's parameters. Gate weights are stacked row-wise in the
/// order input/forget/candidate/output, so `wx` is (4*hidden, input) and
/// `wh` is (4*hidden, hidden).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCell {
    pub wx: Array2<f64>,
    pub wh: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct CellGrads {
    pub wx: Option<Array2<f64>>,
    pub wh: Option<Array2<f64>>,
    pub bias: Option<Array1<f64>>,
}

impl LstmCell {
    fn zeros_like(&self) -> (Array2<f64>, Array2<f64>, Array1<f64>) {
        (
            Array2::zeros(self.wx.raw_dim()),
            Array2::zeros(self.wh.raw_dim()),
            Array1::zeros(self.bias.raw_dim()),
        )
    }

    pub fn hidden(&self) -> usize {
        self.wh.ncols()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Forward cache for one cell step over a batch (columns = samples).
pub struct StepCache {
    x: Array2<f64>,
    h_prev: Array2<f64>,
    c_prev: Array2<f64>,
    gate_i: Array2<f64>,
    gate_f: Array2<f64>,
    gate_g: Array2<f64>,
    gate_o: Array2<f64>,
    tanh_c: Array2<f64>,
    pub h: Array2<f64>,
    pub c: Array2<f64>,
}

pub fn cell_forward(
    cell: &LstmCell,
    x: Array2<f64>,
    h_prev: Array2<f64>,
    c_prev: Array2<f64>,
) -> StepCache {
    let hidden = cell.hidden();
    let bias_col = cell.bias.view().insert_axis(Axis(1));
    let pre = cell.wx.dot(&x) + cell.wh.dot(&h_prev) + &bias_col;
    let gate_i = pre.slice(s![0..hidden, ..]).mapv(sigmoid);
    let gate_f = pre.slice(s![hidden..2 * hidden, ..]).mapv(sigmoid);
    let gate_g = pre.slice(s![2 * hidden..3 * hidden, ..]).mapv(f64::tanh);
    let gate_o = pre.slice(s![3 * hidden..4 * hidden, ..]).mapv(sigmoid);
    let c = &gate_f * &c_prev + &gate_i * &gate_g;
    let tanh_c = c.mapv(f64::tanh);
    let h = &gate_o * &tanh_c;
    StepCache { x, h_prev, c_prev, gate_i, gate_f, gate_g, gate_o, tanh_c, h, c }
}

/// One step of backpropagation through the cell. `dh`/`dc` are the loss
/// gradients flowing into this step's outputs; returns the gradients for
/// the step's input and incoming state.
pub fn cell_backward(
    cell: &LstmCell,
    cache: &StepCache,
    dh: &Array2<f64>,
    dc: &Array2<f64>,
    grads: &mut CellGrads,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let hidden = cell.hidden();
    let batch = dh.ncols();

    let d_tanh_c = dh * &cache.gate_o * cache.tanh_c.mapv(|v| 1.0 - v * v) + dc;
    let d_i = &d_tanh_c * &cache.gate_g;
    let d_f = &d_tanh_c * &cache.c_prev;
    let d_g = &d_tanh_c * &cache.gate_i;
    let d_o = dh * &cache.tanh_c;

    let mut da = Array2::zeros((GATES * hidden, batch));
    da.slice_mut(s![0..hidden, ..])
        .assign(&(&d_i * &cache.gate_i * cache.gate_i.mapv(|v| 1.0 - v)));
    da.slice_mut(s![hidden..2 * hidden, ..])
        .assign(&(&d_f * &cache.gate_f * cache.gate_f.mapv(|v| 1.0 - v)));
    da.slice_mut(s![2 * hidden..3 * hidden, ..])
        .assign(&(&d_g * cache.gate_g.mapv(|v| 1.0 - v * v)));
    da.slice_mut(s![3 * hidden..4 * hidden, ..])
        .assign(&(&d_o * &cache.gate_o * cache.gate_o.mapv(|v| 1.0 - v)));

    let (mut gwx, mut gwh, mut gb) = match (&grads.wx, &grads.wh, &grads.bias) {
        (Some(a), Some(b), Some(c)) => (a.clone(), b.clone(), c.clone()),
        _ => cell.zeros_like(),
    };
    gwx += &da.dot(&cache.x.t());
    gwh += &da.dot(&cache.h_prev.t());
    gb += &da.sum_axis(Axis(1));
    grads.wx = Some(gwx);
    grads.wh = Some(gwh);
    grads.bias = Some(gb);

    let dx = cell.wx.t().dot(&da);
    let dh_prev = cell.wh.t().dot(&da);
    let dc_prev = &d_tanh_c * &cache.gate_f;
    (dx, dh_prev, dc_prev)
}

/// Decoder input wiring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderMode {
    /// Feed back the previous prediction (inference behavior).
    Autoregressive,
    /// Feed the ground-truth target of the previous step (training).
    TeacherForcing,
}

/// Full forward pass over a batch in normalized space.
///
/// `inputs` has one (links, batch) matrix per window step; `targets` one per
/// horizon step. Returns the per-horizon outputs and the caches needed for
/// the backward pass.
pub struct ForwardPass {
    pub outputs: Vec<Array2<f64>>,
    encoder_caches: Vec<StepCache>,
    decoder_caches: Vec<StepCache>,
    mode: DecoderMode,
}

pub struct NetworkParams<'a> {
    pub encoder: &'a LstmCell,
    pub decoder: &'a LstmCell,
    pub proj_w: &'a Array2<f64>,
    pub proj_b: &'a Array1<f64>,
}

pub struct NetworkGrads {
    pub encoder: CellGrads,
    pub decoder: CellGrads,
    pub proj_w: Array2<f64>,
    pub proj_b: Array1<f64>,
}

pub fn forward(
    params: &NetworkParams<'_>,
    inputs: &[Array2<f64>],
    targets: &[Array2<f64>],
    horizon: usize,
    mode: DecoderMode,
) -> ForwardPass {
    let hidden = params.encoder.hidden();
    let batch = inputs[0].ncols();
    let mut h = Array2::zeros((hidden, batch));
    let mut c = Array2::zeros((hidden, batch));
    let mut encoder_caches = Vec::with_capacity(inputs.len());
    for x in inputs {
        let cache = cell_forward(params.encoder, x.clone(), h, c);
        h = cache.h.clone();
        c = cache.c.clone();
        encoder_caches.push(cache);
    }

    let mut decoder_caches = Vec::with_capacity(horizon);
    let mut outputs = Vec::with_capacity(horizon);
    let mut y = inputs.last().expect("non-empty window").clone();
    for k in 0..horizon {
        let cache = cell_forward(params.decoder, y, h, c);
        h = cache.h.clone();
        c = cache.c.clone();
        let bias_col = params.proj_b.view().insert_axis(Axis(1));
        let out = params.proj_w.dot(&cache.h) + &bias_col;
        y = match mode {
            DecoderMode::TeacherForcing if k + 1 < horizon => targets[k].clone(),
            _ => out.clone(),
        };
        outputs.push(out);
        decoder_caches.push(cache);
    }
    ForwardPass { outputs, encoder_caches, decoder_caches, mode }
}

/// Sum of squared prediction errors over the batch and horizon (normalized
/// space).
pub fn loss_of(outputs: &[Array2<f64>], targets: &[Array2<f64>]) -> f64 {
    outputs
        .iter()
        .zip(targets)
        .map(|(o, t)| (o - t).mapv(|v| v * v).sum())
        .sum()
}

/// Backpropagation through the whole unrolled network. In autoregressive
/// mode the gradient of step k's input flows into step k-1's output.
pub fn backward(
    params: &NetworkParams<'_>,
    pass: &ForwardPass,
    targets: &[Array2<f64>],
) -> NetworkGrads {
    let hidden = params.encoder.hidden();
    let batch = targets[0].ncols();
    let mut grads = NetworkGrads {
        encoder: CellGrads::default(),
        decoder: CellGrads::default(),
        proj_w: Array2::zeros(params.proj_w.raw_dim()),
        proj_b: Array1::zeros(params.proj_b.raw_dim()),
    };

    let mut dh = Array2::zeros((hidden, batch));
    let mut dc = Array2::zeros((hidden, batch));
    let mut d_feedback: Option<Array2<f64>> = None;
    for k in (0..pass.outputs.len()).rev() {
        let mut dout = (&pass.outputs[k] - &targets[k]).mapv(|v| 2.0 * v);
        if pass.mode == DecoderMode::Autoregressive {
            if let Some(dy) = d_feedback.take() {
                dout += &dy;
            }
        }
        grads.proj_w += &dout.dot(&pass.decoder_caches[k].h.t());
        grads.proj_b += &dout.sum_axis(Axis(1));
        let dh_total = dh + params.proj_w.t().dot(&dout);
        let (dx, dh_prev, dc_prev) =
            cell_backward(params.decoder, &pass.decoder_caches[k], &dh_total, &dc, &mut grads.decoder);
        dh = dh_prev;
        dc = dc_prev;
        d_feedback = Some(dx);
    }
    // The first decoder input is the last observation (data, not a
    // parameter), so its gradient is dropped.
    for cache in pass.encoder_caches.iter().rev() {
        let (_dx, dh_prev, dc_prev) =
            cell_backward(params.encoder, cache, &dh, &dc, &mut grads.encoder);
        dh = dh_prev;
        dc = dc_prev;
    }
    grads
}
