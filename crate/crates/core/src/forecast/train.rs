//! Sliding-window dataset handling and the training loop.

use super::lstm::DecoderMode;
use super::{batch_windows, ForecastError, ForecastModel};
use crate::scenario::AttenuationTrace;
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Training hyperparameters. Defaults: Adam(1e-3, 0.9/0.999, 1e-8), batch
/// 150, early stopping with patience 10 on validation loss, at most 200
/// epochs, teacher forcing on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub window: usize,
    pub horizon: usize,
    pub hidden: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub teacher_forcing: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            window: 12,
            horizon: 5,
            hidden: 128,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 150,
            max_epochs: 200,
            patience: 10,
            seed: 0,
            teacher_forcing: true,
        }
    }
}

/// Attenuation series cut into overlapping (input window, target window)
/// pairs with a time-ordered 80-10-10 train/validation/test split.
#[derive(Debug, Clone)]
pub struct Dataset {
    data: Array2<f64>,
    window: usize,
    horizon: usize,
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
    norm_mean: Array1<f64>,
    norm_std: Array1<f64>,
}

impl Dataset {
    /// `data` is (steps, links) attenuation in dB.
    pub fn from_matrix(
        data: Array2<f64>,
        window: usize,
        horizon: usize,
    ) -> Result<Self, ForecastError> {
        let steps = data.nrows();
        if steps < window + horizon {
            return Err(ForecastError::DatasetTooShort(steps, window + horizon));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(ForecastError::NonFinite("dataset"));
        }
        let n_windows = steps - window - horizon + 1;
        let n_train = (n_windows as f64 * 0.8).floor() as usize;
        let n_val = (n_windows as f64 * 0.1).floor() as usize;
        if n_train == 0 {
            return Err(ForecastError::EmptySplit("train"));
        }
        if n_val == 0 {
            return Err(ForecastError::EmptySplit("validation"));
        }
        let train: Vec<usize> = (0..n_train).collect();
        let val: Vec<usize> = (n_train..n_train + n_val).collect();
        let test: Vec<usize> = (n_train + n_val..n_windows).collect();

        // Normalization statistics from the rows the training windows
        // cover, never from validation/test-only rows.
        let train_rows = (n_train - 1) + window + horizon;
        let links = data.ncols();
        let mut mean = Array1::zeros(links);
        let mut std = Array1::zeros(links);
        for l in 0..links {
            let column: Vec<f64> = (0..train_rows).map(|t| data[[t, l]]).collect();
            let m = column.iter().sum::<f64>() / column.len() as f64;
            let var =
                column.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / column.len() as f64;
            mean[l] = m;
            std[l] = var.sqrt().max(1e-9);
        }

        Ok(Self { data, window, horizon, train, val, test, norm_mean: mean, norm_std: std })
    }

    pub fn from_trace(
        trace: &AttenuationTrace,
        window: usize,
        horizon: usize,
    ) -> Result<Self, ForecastError> {
        let data = Array2::from_shape_fn((trace.len(), trace.num_links()), |(t, l)| {
            trace.attenuation(t, l)
        });
        Self::from_matrix(data, window, horizon)
    }

    pub fn links(&self) -> usize {
        self.data.ncols()
    }

    pub fn stats(&self) -> (Array1<f64>, Array1<f64>) {
        (self.norm_mean.clone(), self.norm_std.clone())
    }

    /// Raw (input, target) pair for a window start index.
    pub fn window_at(&self, start: usize) -> (Array2<f64>, Array2<f64>) {
        let links = self.links();
        let input = Array2::from_shape_fn((self.window, links), |(t, l)| {
            self.data[[start + t, l]]
        });
        let target = Array2::from_shape_fn((self.horizon, links), |(h, l)| {
            self.data[[start + self.window + h, l]]
        });
        (input, target)
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train
    }

    pub fn val_indices(&self) -> &[usize] {
        &self.val
    }

    pub fn test_indices(&self) -> &[usize] {
        &self.test
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone)]
pub struct TrainLog {
    /// Mean per-window training loss per epoch.
    pub train_losses: Vec<f64>,
    /// Mean per-window validation loss per epoch (autoregressive decoding).
    pub val_losses: Vec<f64>,
    pub best_epoch: usize,
}

struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    steps: u64,
}

impl Adam {
    fn new(config: &TrainConfig, n: usize) -> Self {
        Self {
            lr: config.learning_rate,
            beta1: config.beta1,
            beta2: config.beta2,
            epsilon: config.epsilon,
            m: vec![0.0; n],
            v: vec![0.0; n],
            steps: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.steps += 1;
        let bc1 = 1.0 - self.beta1.powi(self.steps as i32);
        let bc2 = 1.0 - self.beta2.powi(self.steps as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

fn split_loss(model: &ForecastModel, dataset: &Dataset, indices: &[usize], chunk: usize) -> f64 {
    let mut total = 0.0;
    for ids in indices.chunks(chunk) {
        let windows: Vec<_> = ids.iter().map(|&i| dataset.window_at(i)).collect();
        let (inputs, targets) = batch_windows(model, &windows);
        total += model.loss(&inputs, &targets, DecoderMode::Autoregressive);
    }
    total / indices.len() as f64
}

/// Trains a fresh model on the dataset's training split, early-stopping on
/// the validation split, and returns the best-validation checkpoint.
/// Deterministic per seed: batches are shuffled by a seeded generator and
/// gradients accumulate in a fixed order.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<(ForecastModel, TrainLog), ForecastError> {
    let mut model = ForecastModel::init(dataset.links(), config);
    let (mean, std) = dataset.stats();
    model.set_normalization(mean, std);

    let mode = if config.teacher_forcing {
        DecoderMode::TeacherForcing
    } else {
        DecoderMode::Autoregressive
    };
    let mut adam = Adam::new(config, model.num_params());
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = dataset.train_indices().to_vec();

    let mut train_losses = Vec::new();
    let mut val_losses = Vec::new();
    let mut best: (f64, Vec<f64>, usize) = (f64::INFINITY, model.flat_params(), 0);
    let mut stale_epochs = 0usize;

    for epoch in 0..config.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for ids in order.chunks(config.batch_size) {
            let windows: Vec<_> = ids.iter().map(|&i| dataset.window_at(i)).collect();
            let (inputs, targets) = batch_windows(&model, &windows);
            let (loss, grads) = model.gradients(&inputs, &targets, mode);
            epoch_loss += loss;
            let mut params = model.flat_params();
            adam.step(&mut params, &grads);
            model.set_flat_params(&params);
        }
        train_losses.push(epoch_loss / order.len() as f64);

        let val = split_loss(&model, dataset, dataset.val_indices(), config.batch_size);
        val_losses.push(val);
        if val < best.0 {
            best = (val, model.flat_params(), epoch);
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= config.patience {
                break;
            }
        }
    }

    model.set_flat_params(&best.1);
    Ok((model, TrainLog { train_losses, val_losses, best_epoch: best.2 }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_data(steps: usize, links: usize) -> Array2<f64> {
        Array2::from_shape_fn((steps, links), |(t, l)| {
            55.0 + l as f64 + 3.0 * ((t as f64) * 0.05).sin()
        })
    }

    #[test]
    fn dataset_split_and_shapes() {
        let data = ramp_data(200, 2);
        let ds = Dataset::from_matrix(data, 12, 5).unwrap();
        let n = 200 - 12 - 5 + 1;
        assert_eq!(ds.train_indices().len(), (n as f64 * 0.8) as usize);
        assert_eq!(ds.val_indices().len(), (n as f64 * 0.1) as usize);
        assert_eq!(
            ds.train_indices().len() + ds.val_indices().len() + ds.test_indices().len(),
            n
        );
        let (input, target) = ds.window_at(0);
        assert_eq!(input.dim(), (12, 2));
        assert_eq!(target.dim(), (5, 2));
    }

    #[test]
    fn dataset_too_short() {
        let data = ramp_data(10, 2);
        assert!(matches!(
            Dataset::from_matrix(data, 12, 5),
            Err(ForecastError::DatasetTooShort(10, 17))
        ));
    }

    #[test]
    fn training_learns_a_constant_series() {
        let data = Array2::from_elem((120, 1), 63.0);
        let ds = Dataset::from_matrix(data, 4, 2).unwrap();
        let config = TrainConfig {
            window: 4,
            horizon: 2,
            hidden: 6,
            max_epochs: 200,
            patience: 200,
            batch_size: 16,
            seed: 3,
            ..TrainConfig::default()
        };
        let (model, _) = train(&ds, &config).unwrap();
        let window = Array2::from_elem((4, 1), 63.0);
        let out = model.predict(&window).unwrap();
        for h in 0..2 {
            assert!((out[[h, 0]] - 63.0).abs() < 0.1, "h={} got {}", h, out[[h, 0]]);
        }
    }

    #[test]
    fn loss_decreases_early() {
        let data = ramp_data(300, 2);
        let ds = Dataset::from_matrix(data, 8, 3).unwrap();
        let config = TrainConfig {
            window: 8,
            horizon: 3,
            hidden: 8,
            max_epochs: 6,
            patience: 10,
            batch_size: 32,
            seed: 11,
            ..TrainConfig::default()
        };
        let (_, log) = train(&ds, &config).unwrap();
        assert!(log.train_losses.len() >= 5);
        assert!(
            log.train_losses[4] < log.train_losses[0],
            "losses: {:?}",
            log.train_losses
        );
    }

    #[test]
    fn training_is_deterministic() {
        let data = ramp_data(150, 2);
        let ds = Dataset::from_matrix(data, 6, 2).unwrap();
        let config = TrainConfig {
            window: 6,
            horizon: 2,
            hidden: 5,
            max_epochs: 3,
            patience: 10,
            batch_size: 16,
            seed: 21,
            ..TrainConfig::default()
        };
        let (a, _) = train(&ds, &config).unwrap();
        let (b, _) = train(&ds, &config).unwrap();
        for (x, y) in a.flat_params().iter().zip(b.flat_params()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
