//! Baseline predictors and the simulation-facing predictor adapters.

use super::ForecastModel;
use crate::planner::Predictor;
use ndarray::Array2;

/// Repeats the latest observation for every horizon step.
pub fn naive_predict(window: &Array2<f64>, horizon: usize) -> Array2<f64> {
    let links = window.ncols();
    let last = window.row(window.nrows() - 1);
    Array2::from_shape_fn((horizon, links), |(_, l)| last[l])
}

/// Per-link autoregressive prediction of order `p` with an intercept,
/// fitted on the window by ordinary least squares and applied recursively.
/// Links whose normal equations are singular (constant series, short
/// windows) fall back to the naive prediction; the returned flags mark
/// them.
pub fn ar_predict(window: &Array2<f64>, order: usize, horizon: usize) -> (Array2<f64>, Vec<bool>) {
    let links = window.ncols();
    let n = window.nrows();
    let mut out = Array2::zeros((horizon, links));
    let mut fallback = vec![false; links];
    for l in 0..links {
        let series: Vec<f64> = (0..n).map(|t| window[[t, l]]).collect();
        match fit_ar(&series, order) {
            Some(coeffs) => {
                let mut recent: Vec<f64> = series.clone();
                for h in 0..horizon {
                    let mut value = coeffs[0];
                    for j in 1..=order {
                        value += coeffs[j] * recent[recent.len() - j];
                    }
                    out[[h, l]] = value;
                    recent.push(value);
                }
            }
            None => {
                fallback[l] = true;
                let last = series[n - 1];
                for h in 0..horizon {
                    out[[h, l]] = last;
                }
            }
        }
    }
    (out, fallback)
}

/// Least-squares AR(p) fit with intercept: returns [a0, a1, .., ap] where
/// the prediction is a0 + sum_j aj * x[t-j]. None when the sample is too
/// short (fewer than 2p rows) or the normal equations are singular.
fn fit_ar(series: &[f64], order: usize) -> Option<Vec<f64>> {
    let n = series.len();
    if n < (2 * order).max(order + 1) {
        return None;
    }
    let dim = order + 1;
    let mut gram = vec![vec![0.0; dim]; dim];
    let mut rhs = vec![0.0; dim];
    for i in order..n {
        let mut row = Vec::with_capacity(dim);
        row.push(1.0);
        for j in 1..=order {
            row.push(series[i - j]);
        }
        for a in 0..dim {
            rhs[a] += row[a] * series[i];
            for b in 0..dim {
                gram[a][b] += row[a] * row[b];
            }
        }
    }
    solve_symmetric(gram, rhs)
}

fn solve_symmetric(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot_row][col].abs() < 1e-10 * scale {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for k in col..n {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn history_matrix(history: &[Vec<f64>]) -> Array2<f64> {
    let rows = history.len();
    let cols = history[0].len();
    Array2::from_shape_fn((rows, cols), |(t, l)| history[t][l])
}

fn repeat_last(history: &[Vec<f64>], horizon: usize) -> Vec<Vec<f64>> {
    let last = history.last().expect("non-empty history").clone();
    vec![last; horizon]
}

/// Naive adapter for the simulation loop.
pub struct NaivePredictor;

impl Predictor for NaivePredictor {
    fn predict(&mut self, _t: usize, history: &[Vec<f64>], horizon: usize) -> Vec<Vec<f64>> {
        repeat_last(history, horizon)
    }

    fn name(&self) -> &'static str {
        "naive"
    }
}

/// Autoregressive adapter; falls back to naive until the history is long
/// enough for the fit.
pub struct ArPredictor {
    pub order: usize,
}

impl Predictor for ArPredictor {
    fn predict(&mut self, _t: usize, history: &[Vec<f64>], horizon: usize) -> Vec<Vec<f64>> {
        if history.len() < (2 * self.order).max(self.order + 1) {
            return repeat_last(history, horizon);
        }
        let window = history_matrix(history);
        let (out, _) = ar_predict(&window, self.order, horizon);
        (0..horizon).map(|h| out.row(h).to_vec()).collect()
    }

    fn name(&self) -> &'static str {
        "ar"
    }
}

/// Trained-model adapter; falls back to naive until a full input window of
/// history is available.
pub struct LstmPredictor {
    pub model: ForecastModel,
}

impl Predictor for LstmPredictor {
    fn predict(&mut self, _t: usize, history: &[Vec<f64>], horizon: usize) -> Vec<Vec<f64>> {
        if history.len() < self.model.window {
            return repeat_last(history, horizon);
        }
        let start = history.len() - self.model.window;
        let window = history_matrix(&history[start..]);
        match self.model.predict(&window) {
            Ok(out) => {
                let rows: Vec<Vec<f64>> =
                    (0..self.model.horizon).map(|h| out.row(h).to_vec()).collect();
                if horizon <= self.model.horizon {
                    rows[..horizon].to_vec()
                } else {
                    // Extend past the trained horizon by holding the last
                    // prediction.
                    let mut extended = rows.clone();
                    let last = rows.last().expect("horizon >= 1").clone();
                    extended.resize(horizon, last);
                    extended
                }
            }
            Err(_) => repeat_last(history, horizon),
        }
    }

    fn name(&self) -> &'static str {
        "lstm"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_repeats_last_row() {
        let window = Array2::from_shape_fn((12, 2), |(t, l)| t as f64 + 10.0 * l as f64);
        let out = naive_predict(&window, 5);
        for h in 0..5 {
            assert_eq!(out[[h, 0]], 11.0);
            assert_eq!(out[[h, 1]], 21.0);
        }
    }

    #[test]
    fn naive_zero_error_on_constant() {
        let window = Array2::from_elem((6, 1), 7.0);
        let out = naive_predict(&window, 5);
        assert!(out.iter().all(|&v| v == 7.0));
    }

    #[test]
    fn ar_continues_geometric_series() {
        let window = Array2::from_shape_fn((10, 1), |(t, _)| 0.5f64.powi(t as i32));
        let (out, fallback) = ar_predict(&window, 1, 4);
        assert!(!fallback[0]);
        for h in 0..4 {
            let expected = 0.5f64.powi(10 + h as i32);
            assert!((out[[h, 0]] - expected).abs() < 1e-9, "h={} got {}", h, out[[h, 0]]);
        }
    }

    #[test]
    fn ar_constant_series_falls_back_to_naive() {
        let window = Array2::from_elem((12, 1), 4.5);
        let (out, fallback) = ar_predict(&window, 3, 5);
        assert!(fallback[0]);
        assert!(out.iter().all(|&v| v == 4.5));
    }

    #[test]
    fn ar_order_zero_is_window_mean() {
        let window = Array2::from_shape_fn((4, 1), |(t, _)| t as f64); // 0,1,2,3
        let (out, fallback) = ar_predict(&window, 0, 3);
        assert!(!fallback[0]);
        for h in 0..3 {
            assert!((out[[h, 0]] - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn ar_recursion_continued_exactly() {
        // Series generated by a fixed second-order recursion: the fit
        // recovers it and multi-step predictions follow the recursion.
        let (a0, a1, a2) = (0.5, 1.2, -0.4);
        let mut series = vec![2.0, 3.0];
        for i in 2..12 {
            series.push(a0 + a1 * series[i - 1] + a2 * series[i - 2]);
        }
        let window = Array2::from_shape_fn((12, 1), |(t, _)| series[t]);
        let (out, fallback) = ar_predict(&window, 2, 4);
        assert!(!fallback[0]);
        let mut extended = series.clone();
        for h in 0..4 {
            let i = extended.len();
            extended.push(a0 + a1 * extended[i - 1] + a2 * extended[i - 2]);
            assert!((out[[h, 0]] - extended[i]).abs() < 1e-6, "h={} got {}", h, out[[h, 0]]);
        }
    }

    #[test]
    fn ar_perfect_linear_trend_is_collinear() {
        // With an intercept, an exact linear trend makes the design
        // rank-deficient; the link falls back to naive.
        let window = Array2::from_shape_fn((12, 1), |(t, _)| 3.0 + 2.0 * t as f64);
        let (out, fallback) = ar_predict(&window, 2, 3);
        assert!(fallback[0]);
        assert!(out.iter().all(|&v| v == 25.0));
    }
}
