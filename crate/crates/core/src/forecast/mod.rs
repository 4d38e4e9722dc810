//! Attenuation forecasting: an encoder-decoder recurrent predictor trained
//! by backpropagation through time, plus naive and autoregressive
//! baselines.

mod baseline;
mod lstm;
mod train;

pub use baseline::{ar_predict, naive_predict, ArPredictor, LstmPredictor, NaivePredictor};
pub use lstm::DecoderMode;
pub use train::{train, Dataset, TrainConfig, TrainLog};

use lstm::{backward, forward, loss_of, LstmCell, NetworkGrads, NetworkParams};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("dataset too short: {0} steps, need at least {1}")]
    DatasetTooShort(usize, usize),
    #[error("empty {0} split")]
    EmptySplit(&'static str),
    #[error("checkpoint i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported checkpoint format {0}")]
    Format(u32),
}

/// Complete predictor state: network parameters, per-link normalization,
/// and the training hyperparameters it was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastModel {
    pub input_dim: usize,
    pub hidden: usize,
    pub window: usize,
    pub horizon: usize,
    encoder: LstmCell,
    decoder: LstmCell,
    proj_w: Array2<f64>,
    proj_b: Array1<f64>,
    norm_mean: Array1<f64>,
    norm_std: Array1<f64>,
    pub hyper: TrainConfig,
}

impl ForecastModel {
    /// Fresh model with uniform(-1/sqrt(hidden), 1/sqrt(hidden)) weights
    /// and forget-gate biases at 1.
    pub fn init(input_dim: usize, config: &TrainConfig) -> Self {
        let hidden = config.hidden;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut mat = |rows: usize, cols: usize| {
            Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..bound))
        };
        let cell = |mat: &mut dyn FnMut(usize, usize) -> Array2<f64>, input: usize| {
            let mut bias = Array1::zeros(4 * hidden);
            bias.slice_mut(ndarray::s![hidden..2 * hidden]).fill(1.0);
            LstmCell { wx: mat(4 * hidden, input), wh: mat(4 * hidden, hidden), bias }
        };
        let encoder = cell(&mut mat, input_dim);
        let decoder = cell(&mut mat, input_dim);
        let proj_w = mat(input_dim, hidden);
        let proj_b = Array1::zeros(input_dim);
        Self {
            input_dim,
            hidden,
            window: config.window,
            horizon: config.horizon,
            encoder,
            decoder,
            proj_w,
            proj_b,
            norm_mean: Array1::zeros(input_dim),
            norm_std: Array1::ones(input_dim),
            hyper: config.clone(),
        }
    }

    pub fn set_normalization(&mut self, mean: Array1<f64>, std: Array1<f64>) {
        debug_assert!(std.iter().all(|&s| s > 0.0));
        self.norm_mean = mean;
        self.norm_std = std;
    }

    pub fn normalize(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(l, &v)| (v - self.norm_mean[l]) / self.norm_std[l])
            .collect()
    }

    pub fn denormalize(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(l, &v)| v * self.norm_std[l] + self.norm_mean[l])
            .collect()
    }

    fn params(&self) -> NetworkParams<'_> {
        NetworkParams {
            encoder: &self.encoder,
            decoder: &self.decoder,
            proj_w: &self.proj_w,
            proj_b: &self.proj_b,
        }
    }

    /// Predicts the next `horizon` attenuation rows from a raw `(window,
    /// links)` matrix. Normalization happens internally; the decoder runs
    /// autoregressively.
    pub fn predict(&self, window: &Array2<f64>) -> Result<Array2<f64>, ForecastError> {
        if window.nrows() != self.window || window.ncols() != self.input_dim {
            return Err(ForecastError::Shape {
                expected: format!("({}, {})", self.window, self.input_dim),
                got: format!("({}, {})", window.nrows(), window.ncols()),
            });
        }
        if window.iter().any(|v| !v.is_finite()) {
            return Err(ForecastError::NonFinite("input window"));
        }
        let inputs: Vec<Array2<f64>> = (0..self.window)
            .map(|t| {
                let row: Vec<f64> =
                    self.normalize(&window.row(t).iter().copied().collect::<Vec<_>>());
                Array2::from_shape_vec((self.input_dim, 1), row).expect("row shape")
            })
            .collect();
        let dummy_targets: Vec<Array2<f64>> =
            (0..self.horizon).map(|_| Array2::zeros((self.input_dim, 1))).collect();
        let pass = forward(
            &self.params(),
            &inputs,
            &dummy_targets,
            self.horizon,
            DecoderMode::Autoregressive,
        );
        let mut out = Array2::zeros((self.horizon, self.input_dim));
        for (h, o) in pass.outputs.iter().enumerate() {
            let col: Vec<f64> = o.column(0).iter().copied().collect();
            let denorm = self.denormalize(&col);
            for (l, v) in denorm.into_iter().enumerate() {
                out[[h, l]] = v;
            }
        }
        Ok(out)
    }

    /// Loss over a normalized batch: sum of squared errors across samples
    /// and horizon steps.
    pub fn loss(
        &self,
        inputs: &[Array2<f64>],
        targets: &[Array2<f64>],
        mode: DecoderMode,
    ) -> f64 {
        let pass = forward(&self.params(), inputs, targets, self.horizon, mode);
        loss_of(&pass.outputs, targets)
    }

    /// Exact loss gradients for every parameter (through the decoder
    /// feedback path in autoregressive mode), flattened in the same order
    /// as [`ForecastModel::flat_params`].
    pub fn gradients(
        &self,
        inputs: &[Array2<f64>],
        targets: &[Array2<f64>],
        mode: DecoderMode,
    ) -> (f64, Vec<f64>) {
        let pass = forward(&self.params(), inputs, targets, self.horizon, mode);
        let loss = loss_of(&pass.outputs, targets);
        let grads = backward(&self.params(), &pass, targets);
        (loss, flatten_grads(&grads, self))
    }

    /// Parameters flattened in a stable order (encoder wx/wh/bias, decoder
    /// wx/wh/bias, projection weight/bias), row-major.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for cell in [&self.encoder, &self.decoder] {
            out.extend(cell.wx.iter());
            out.extend(cell.wh.iter());
            out.extend(cell.bias.iter());
        }
        out.extend(self.proj_w.iter());
        out.extend(self.proj_b.iter());
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        let mut cursor = 0usize;
        let mut take = |dst: &mut [f64]| {
            dst.copy_from_slice(&flat[cursor..cursor + dst.len()]);
            cursor += dst.len();
        };
        for cell in [&mut self.encoder, &mut self.decoder] {
            take(cell.wx.as_slice_mut().expect("contiguous"));
            take(cell.wh.as_slice_mut().expect("contiguous"));
            take(cell.bias.as_slice_mut().expect("contiguous"));
        }
        take(self.proj_w.as_slice_mut().expect("contiguous"));
        take(self.proj_b.as_slice_mut().expect("contiguous"));
        assert_eq!(cursor, flat.len());
    }

    pub fn num_params(&self) -> usize {
        self.flat_params().len()
    }

    /// Zeroes every parameter (diagnostic baseline: predictions collapse to
    /// the per-link means).
    pub fn zero_params(&mut self) {
        let n = self.num_params();
        self.set_flat_params(&vec![0.0; n]);
    }

    pub fn save(&self, path: &Path) -> Result<(), ForecastError> {
        #[derive(Serialize)]
        struct Checkpoint<'a> {
            format: u32,
            model: &'a ForecastModel,
        }
        let text = serde_json::to_string(&Checkpoint { format: 1, model: self })?;
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ForecastError> {
        #[derive(Deserialize)]
        struct Checkpoint {
            format: u32,
            model: ForecastModel,
        }
        let text = std::fs::read_to_string(path)?;
        let ckpt: Checkpoint = serde_json::from_str(&text)?;
        if ckpt.format != 1 {
            return Err(ForecastError::Format(ckpt.format));
        }
        Ok(ckpt.model)
    }
}

fn flatten_grads(grads: &NetworkGrads, model: &ForecastModel) -> Vec<f64> {
    let mut out = Vec::with_capacity(model.num_params());
    for cell in [&grads.encoder, &grads.decoder] {
        out.extend(cell.wx.as_ref().expect("gradient computed").iter());
        out.extend(cell.wh.as_ref().expect("gradient computed").iter());
        out.extend(cell.bias.as_ref().expect("gradient computed").iter());
    }
    out.extend(grads.proj_w.iter());
    out.extend(grads.proj_b.iter());
    out
}

/// Batches windows (rows = time) into per-step column matrices in
/// normalized space: `inputs[t]` and `targets[h]` are (links, batch).
pub fn batch_windows(
    model: &ForecastModel,
    windows: &[(Array2<f64>, Array2<f64>)],
) -> (Vec<Array2<f64>>, Vec<Array2<f64>>) {
    let batch = windows.len();
    let l = model.input_dim;
    let mut inputs = vec![Array2::zeros((l, batch)); model.window];
    let mut targets = vec![Array2::zeros((l, batch)); model.horizon];
    for (b, (win, tgt)) in windows.iter().enumerate() {
        for t in 0..model.window {
            let row: Vec<f64> = win.row(t).iter().copied().collect();
            for (li, v) in model.normalize(&row).into_iter().enumerate() {
                inputs[t][[li, b]] = v;
            }
        }
        for h in 0..model.horizon {
            let row: Vec<f64> = tgt.row(h).iter().copied().collect();
            for (li, v) in model.normalize(&row).into_iter().enumerate() {
                targets[h][[li, b]] = v;
            }
        }
    }
    (inputs, targets)
}
