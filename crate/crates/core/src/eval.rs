//! Prediction-error and admission-gain metrics.

use ndarray::Array3;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("percentile level {0} outside (0, 100]")]
    BadPercentile(f64),
    #[error("horizon index {0} out of range ({1} horizons)")]
    BadHorizon(usize, usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("every reference entry is zero; gains are undefined")]
    AllZeroReference,
}

/// Root-mean-square prediction errors per horizon step.
///
/// `errors` is indexed (origin t, horizon step, link). The average variant
/// pools every link; the max variant takes each origin's worst link before
/// averaging over origins.
pub fn rmse_metrics(errors: &Array3<f64>) -> Result<(Vec<f64>, Vec<f64>), EvalError> {
    let (t_len, h_len, l_len) = errors.dim();
    if t_len == 0 || h_len == 0 || l_len == 0 {
        return Err(EvalError::Empty("error tensor"));
    }
    let mut avg = Vec::with_capacity(h_len);
    let mut max = Vec::with_capacity(h_len);
    for h in 0..h_len {
        let mut sum = 0.0;
        let mut sum_worst = 0.0;
        for t in 0..t_len {
            let mut worst = 0.0f64;
            for l in 0..l_len {
                let e2 = errors[[t, h, l]] * errors[[t, h, l]];
                sum += e2;
                worst = worst.max(e2);
            }
            sum_worst += worst;
        }
        avg.push((sum / (t_len * l_len) as f64).sqrt());
        max.push((sum_worst / t_len as f64).sqrt());
    }
    Ok((avg, max))
}

/// Nearest-rank percentile of |error| at one horizon step: the lowest
/// absolute error that is >= `eta` percent of all the values.
pub fn error_percentile(errors: &Array3<f64>, eta: f64, h: usize) -> Result<f64, EvalError> {
    let (t_len, h_len, l_len) = errors.dim();
    if t_len == 0 || l_len == 0 {
        return Err(EvalError::Empty("error tensor"));
    }
    if h >= h_len {
        return Err(EvalError::BadHorizon(h, h_len));
    }
    if !(eta > 0.0 && eta <= 100.0) {
        return Err(EvalError::BadPercentile(eta));
    }
    let mut values: Vec<f64> = (0..t_len)
        .flat_map(|t| (0..l_len).map(move |l| (t, l)))
        .map(|(t, l)| errors[[t, h, l]].abs())
        .collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite errors"));
    let rank = ((eta / 100.0) * values.len() as f64).ceil() as usize;
    Ok(values[rank.max(1) - 1])
}

/// Admission-gain triple of a candidate policy over a reference policy,
/// computed from per-step per-commodity admission rates.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMetrics {
    /// Whole-trace aggregate gain.
    pub time_average: f64,
    /// Worst-case per-step gain of the summed rates.
    pub max_node_average: f64,
    /// Worst-case per-entry gain.
    pub max_instantaneous: f64,
    /// Entries or steps skipped because the reference was zero.
    pub skipped: usize,
}

pub fn gain_metrics(
    candidate: &[Vec<f64>],
    reference: &[Vec<f64>],
) -> Result<GainMetrics, EvalError> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(EvalError::Empty("admission traces"));
    }
    if candidate.len() != reference.len()
        || candidate.iter().zip(reference).any(|(a, b)| a.len() != b.len())
    {
        return Err(EvalError::Shape(format!(
            "{} vs {} steps",
            candidate.len(),
            reference.len()
        )));
    }

    let mut total_candidate = 0.0;
    let mut total_reference = 0.0;
    let mut max_node_average = f64::NEG_INFINITY;
    let mut max_instantaneous = f64::NEG_INFINITY;
    let mut skipped = 0usize;
    let mut node_avg_defined = false;
    let mut instant_defined = false;

    for (row_c, row_r) in candidate.iter().zip(reference) {
        let step_c: f64 = row_c.iter().sum();
        let step_r: f64 = row_r.iter().sum();
        total_candidate += step_c;
        total_reference += step_r;
        if step_r > 0.0 {
            node_avg_defined = true;
            max_node_average = max_node_average.max((step_c - step_r) / step_r);
        } else {
            skipped += 1;
        }
        for (&c, &r) in row_c.iter().zip(row_r) {
            if r > 0.0 {
                instant_defined = true;
                max_instantaneous = max_instantaneous.max((c - r) / r);
            } else {
                skipped += 1;
            }
        }
    }

    if total_reference <= 0.0 || !node_avg_defined || !instant_defined {
        return Err(EvalError::AllZeroReference);
    }
    Ok(GainMetrics {
        time_average: (total_candidate - total_reference) / total_reference,
        max_node_average,
        max_instantaneous,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_errors_zero_rmse() {
        let errors = Array3::zeros((4, 3, 2));
        let (avg, max) = rmse_metrics(&errors).unwrap();
        assert!(avg.iter().all(|&v| v == 0.0));
        assert!(max.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_link_example() {
        let mut errors = Array3::zeros((1, 1, 2));
        errors[[0, 0, 0]] = 3.0;
        errors[[0, 0, 1]] = 4.0;
        let (avg, max) = rmse_metrics(&errors).unwrap();
        assert!((avg[0] - 12.5f64.sqrt()).abs() < 1e-12);
        assert!((max[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn max_rmse_dominates_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let errors =
                Array3::from_shape_fn((6, 4, 5), |_| rng.gen_range(-3.0..3.0));
            let (avg, max) = rmse_metrics(&errors).unwrap();
            for h in 0..4 {
                assert!(max[h] >= avg[h] - 1e-12);
            }
        }
    }

    #[test]
    fn percentile_nearest_rank() {
        let mut errors = Array3::zeros((4, 1, 1));
        for (t, v) in [1.0, 2.0, 3.0, 4.0].into_iter().enumerate() {
            errors[[t, 0, 0]] = v;
        }
        assert_eq!(error_percentile(&errors, 50.0, 0).unwrap(), 2.0);
        assert_eq!(error_percentile(&errors, 100.0, 0).unwrap(), 4.0);
        assert_eq!(error_percentile(&errors, 1.0, 0).unwrap(), 1.0);
        let equal = Array3::from_elem((5, 1, 1), 0.7);
        for eta in [10.0, 50.0, 95.0, 100.0] {
            assert_eq!(error_percentile(&equal, eta, 0).unwrap(), 0.7);
        }
        assert!(error_percentile(&errors, 0.0, 0).is_err());
        assert!(error_percentile(&errors, 101.0, 0).is_err());
        assert!(error_percentile(&errors, 50.0, 3).is_err());
    }

    #[test]
    fn percentile_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let errors = Array3::from_shape_fn((20, 3, 4), |_| rng.gen_range(-5.0..5.0));
        for h in 0..3 {
            for eta in [5.0, 37.0, 50.0, 90.0, 99.0, 100.0] {
                let got = error_percentile(&errors, eta, h).unwrap();
                // Brute force: smallest |e| such that at least eta% of all
                // values are <= it.
                let mut all: Vec<f64> = (0..20)
                    .flat_map(|t| (0..4).map(move |l| (t, l)))
                    .map(|(t, l)| errors[[t, h, l]].abs())
                    .collect();
                all.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let need = (eta / 100.0) * all.len() as f64;
                let expected = *all
                    .iter()
                    .find(|&&v| {
                        let count = all.iter().filter(|&&w| w <= v).count();
                        count as f64 >= need
                    })
                    .unwrap();
                assert_eq!(got, expected, "h={} eta={}", h, eta);
            }
        }
    }

    #[test]
    fn gain_identical_traces() {
        let z = vec![vec![0.5, 0.7], vec![0.4, 0.6]];
        let g = gain_metrics(&z, &z).unwrap();
        assert_eq!(g.time_average, 0.0);
        assert_eq!(g.max_node_average, 0.0);
        assert_eq!(g.max_instantaneous, 0.0);
        assert_eq!(g.skipped, 0);
    }

    #[test]
    fn gain_doubled_entry() {
        // Reference entry 0.1 within a total of 10; the candidate doubles
        // just that entry: instantaneous gain 100%.
        let reference = vec![vec![0.1, 9.9]];
        let candidate = vec![vec![0.2, 9.9]];
        let g = gain_metrics(&candidate, &reference).unwrap();
        assert!((g.max_instantaneous - 1.0).abs() < 1e-12);
        assert!((g.time_average - 0.01).abs() < 1e-12);
        assert!((g.max_node_average - 0.01).abs() < 1e-12);
    }

    #[test]
    fn gain_zero_reference_entries_skipped() {
        let reference = vec![vec![0.0, 0.5], vec![0.5, 0.5]];
        let candidate = vec![vec![0.3, 0.5], vec![1.0, 0.5]];
        let g = gain_metrics(&candidate, &reference).unwrap();
        assert_eq!(g.skipped, 1);
        assert!((g.max_instantaneous - 1.0).abs() < 1e-12);
        // Aggregate uses all entries including the skipped one's candidate
        // mass: (2.3 - 1.5) / 1.5.
        assert!((g.time_average - 0.8 / 1.5).abs() < 1e-12);
    }

    #[test]
    fn gain_rejects_mismatched_or_empty() {
        assert!(gain_metrics(&[], &[]).is_err());
        let a = vec![vec![0.1]];
        let b = vec![vec![0.1, 0.2]];
        assert!(gain_metrics(&a, &b).is_err());
        let zeros = vec![vec![0.0]];
        assert!(matches!(gain_metrics(&zeros, &zeros), Err(EvalError::AllZeroReference)));
    }
}
