//! Adaptive-modulation hysteresis state machine.
//!
//! Each link's radio picks a QAM constellation from a threshold table keyed
//! on received signal level: the constellation steps up once the level
//! reaches `limit_up` and steps down once it falls to `limit_down`. The two
//! thresholds of adjacent rows overlap, so within the gap the chosen
//! constellation depends on history. Capacity is the row bitrate normalized
//! by the top bitrate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Top bitrate used to normalize capacities and demands.
pub const TOP_BITRATE_MBPS: f64 = 225.0;

#[derive(Debug, Error)]
pub enum PhyError {
    #[error("modulation table must have at least one row")]
    Empty,
    #[error("row {0}: bitrates must be strictly increasing")]
    BitrateOrder(usize),
    #[error("row {0}: {1}")]
    Threshold(usize, String),
    #[error("modulation table parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported modulation table format {0}")]
    Format(u32),
    #[error("non-finite signal level")]
    NonFinite,
}

/// One constellation row: size, bitrate, and the hysteresis thresholds.
/// The top row has no `limit_up`, the bottom row no `limit_down`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationRow {
    pub constellation: u32,
    pub bitrate_mbps: f64,
    pub limit_up_dbm: Option<f64>,
    pub limit_down_dbm: Option<f64>,
}

/// Ordered modulation table (ascending bitrate).
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationTable {
    rows: Vec<ModulationRow>,
}

/// Index into a [`ModulationTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModulationState {
    row: usize,
}

/// Whether one call to [`am_step`] converges to the hysteresis fixed point
/// or moves at most one row. Radios converge fast relative to the 10 s
/// sampling interval, so fixed point is the default; single-transition mode
/// exists for sensitivity studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepMode {
    #[default]
    FixedPoint,
    SingleTransition,
}

impl ModulationTable {
    /// The stock table: 28 MHz channel, QAM 4..1024, 45..225 Mbps, with the
    /// hysteresis thresholds used by the field radios.
    pub fn standard() -> Self {
        let row = |constellation, bitrate_mbps, up: Option<f64>, down: Option<f64>| ModulationRow {
            constellation,
            bitrate_mbps,
            limit_up_dbm: up,
            limit_down_dbm: down,
        };
        Self {
            rows: vec![
                row(4, 45.0, Some(-72.0), None),
                row(16, 90.0, Some(-66.0), Some(-74.0)),
                row(64, 135.0, Some(-62.5), Some(-68.0)),
                row(128, 157.0, Some(-61.0), Some(-64.0)),
                row(256, 180.0, Some(-57.0), Some(-62.0)),
                row(512, 202.5, Some(-53.0), Some(-58.0)),
                row(1024, 225.0, None, Some(-54.0)),
            ],
        }
    }

    pub fn from_rows(rows: Vec<ModulationRow>) -> Result<Self, PhyError> {
        if rows.is_empty() {
            return Err(PhyError::Empty);
        }
        let last = rows.len() - 1;
        for (i, r) in rows.iter().enumerate() {
            if i > 0 && r.bitrate_mbps <= rows[i - 1].bitrate_mbps {
                return Err(PhyError::BitrateOrder(i));
            }
            if i < last && r.limit_up_dbm.is_none() {
                return Err(PhyError::Threshold(i, "missing limit_up".into()));
            }
            if i == last && r.limit_up_dbm.is_some() {
                return Err(PhyError::Threshold(i, "top row must not have limit_up".into()));
            }
            if i > 0 && r.limit_down_dbm.is_none() {
                return Err(PhyError::Threshold(i, "missing limit_down".into()));
            }
            if i == 0 && r.limit_down_dbm.is_some() {
                return Err(PhyError::Threshold(i, "bottom row must not have limit_down".into()));
            }
            if i > 0 {
                // Hysteresis gap: the level that drops out of row i must be
                // below the level that admitted it from row i-1.
                let down = r.limit_down_dbm.unwrap();
                let up_prev = rows[i - 1].limit_up_dbm.unwrap();
                if down >= up_prev {
                    return Err(PhyError::Threshold(
                        i,
                        format!("limit_down {} leaves no hysteresis gap below limit_up {}", down, up_prev),
                    ));
                }
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[ModulationRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Lowest-order state (used when a link powers up).
    pub fn initial_state(&self) -> ModulationState {
        ModulationState { row: 0 }
    }

    pub fn state_for_constellation(&self, constellation: u32) -> Option<ModulationState> {
        self.rows
            .iter()
            .position(|r| r.constellation == constellation)
            .map(|row| ModulationState { row })
    }

    pub fn constellation(&self, state: ModulationState) -> u32 {
        self.rows[state.row].constellation
    }

    pub fn top_bitrate(&self) -> f64 {
        self.rows.last().map(|r| r.bitrate_mbps).unwrap_or(TOP_BITRATE_MBPS)
    }

    pub fn from_json(text: &str) -> Result<Self, PhyError> {
        #[derive(Deserialize)]
        struct TableFile {
            format: u32,
            rows: Vec<ModulationRow>,
        }
        let file: TableFile = serde_json::from_str(text)?;
        if file.format != 1 {
            return Err(PhyError::Format(file.format));
        }
        Self::from_rows(file.rows)
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct TableFile<'a> {
            format: u32,
            rows: &'a [ModulationRow],
        }
        serde_json::to_string_pretty(&TableFile { format: 1, rows: &self.rows })
            .expect("table serializes")
    }
}

/// One attenuation measurement: transmitted and received signal levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttenuationSample {
    pub ptx_dbm: f64,
    pub prx_dbm: f64,
}

impl AttenuationSample {
    pub fn new(ptx_dbm: f64, prx_dbm: f64) -> Result<Self, PhyError> {
        if !ptx_dbm.is_finite() || !prx_dbm.is_finite() {
            return Err(PhyError::NonFinite);
        }
        Ok(Self { ptx_dbm, prx_dbm })
    }

    /// Link attenuation in dB: transmitted minus received level.
    pub fn attenuation_db(&self) -> f64 {
        self.ptx_dbm - self.prx_dbm
    }
}

/// Advances the modulation state for one received-signal measurement.
///
/// In fixed-point mode the thresholds are applied repeatedly until neither
/// fires; the hysteresis gap guarantees motion is monotone within a call, so
/// the fixed point is reached in at most `table.len()` moves.
pub fn am_step(
    table: &ModulationTable,
    state: ModulationState,
    prx_dbm: f64,
    mode: StepMode,
) -> ModulationState {
    let mut row = state.row;
    loop {
        let r = &table.rows()[row];
        if let Some(up) = r.limit_up_dbm {
            if prx_dbm >= up {
                row += 1;
                if mode == StepMode::SingleTransition {
                    break;
                }
                continue;
            }
        }
        if let Some(down) = r.limit_down_dbm {
            if prx_dbm <= down {
                row -= 1;
                if mode == StepMode::SingleTransition {
                    break;
                }
                continue;
            }
        }
        break;
    }
    ModulationState { row }
}

/// Normalized link capacity of a modulation state (bitrate / top bitrate).
pub fn capacity_of(table: &ModulationTable, state: ModulationState) -> f64 {
    table.rows()[state.row].bitrate_mbps / table.top_bitrate()
}

/// Folds [`am_step`] over a received-level sequence starting from `state`,
/// emitting the capacity after each step. Pure: the caller's live state is
/// untouched.
pub fn project_capacities(
    table: &ModulationTable,
    state: ModulationState,
    prx_sequence: &[f64],
    mode: StepMode,
) -> (Vec<f64>, ModulationState) {
    let mut current = state;
    let mut capacities = Vec::with_capacity(prx_sequence.len());
    for &prx in prx_sequence {
        current = am_step(table, current, prx, mode);
        capacities.push(capacity_of(table, current));
    }
    (capacities, current)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(table: &ModulationTable, m: u32) -> ModulationState {
        table.state_for_constellation(m).unwrap()
    }

    #[test]
    fn climbs_to_fixed_point() {
        let t = ModulationTable::standard();
        let s = am_step(&t, state(&t, 4), -60.0, StepMode::FixedPoint);
        assert_eq!(t.constellation(s), 256);
    }

    #[test]
    fn steps_down_once() {
        let t = ModulationTable::standard();
        let s = am_step(&t, state(&t, 1024), -55.0, StepMode::FixedPoint);
        assert_eq!(t.constellation(s), 512);
    }

    #[test]
    fn hysteresis_band_preserves_history() {
        let t = ModulationTable::standard();
        let from_high = am_step(&t, state(&t, 256), -61.5, StepMode::FixedPoint);
        let from_low = am_step(&t, state(&t, 128), -61.5, StepMode::FixedPoint);
        assert_eq!(t.constellation(from_high), 256);
        assert_eq!(t.constellation(from_low), 128);
    }

    #[test]
    fn capacity_values() {
        let t = ModulationTable::standard();
        assert!((capacity_of(&t, state(&t, 4)) - 0.2).abs() < 1e-12);
        assert!((capacity_of(&t, state(&t, 1024)) - 1.0).abs() < 1e-12);
        assert!((capacity_of(&t, state(&t, 128)) - 157.0 / 225.0).abs() < 1e-12);
    }

    #[test]
    fn single_transition_mode() {
        let t = ModulationTable::standard();
        let s = am_step(&t, state(&t, 4), -60.0, StepMode::SingleTransition);
        assert_eq!(t.constellation(s), 16);
    }

    #[test]
    fn projection_examples() {
        let t = ModulationTable::standard();
        // Saturating: any level above every limit_up tops out after one step.
        let (caps, end) = project_capacities(&t, state(&t, 4), &[-40.0, -40.0], StepMode::FixedPoint);
        assert_eq!(caps, vec![1.0, 1.0]);
        assert_eq!(t.constellation(end), 1024);

        let (caps, _) = project_capacities(&t, state(&t, 4), &[-60.0, -60.0], StepMode::FixedPoint);
        assert_eq!(caps, vec![0.8, 0.8]);

        let start = state(&t, 64);
        let (caps, end) = project_capacities(&t, start, &[], StepMode::FixedPoint);
        assert!(caps.is_empty());
        assert_eq!(end, start);
    }

    #[test]
    fn am_step_idempotent() {
        let t = ModulationTable::standard();
        for m in [4u32, 16, 64, 128, 256, 512, 1024] {
            for prx in (-110..=-40).map(|p| p as f64 / 1.0) {
                let once = am_step(&t, state(&t, m), prx, StepMode::FixedPoint);
                let twice = am_step(&t, once, prx, StepMode::FixedPoint);
                assert_eq!(once, twice, "m={} prx={}", m, prx);
            }
        }
    }

    #[test]
    fn capacity_monotone_in_signal() {
        let t = ModulationTable::standard();
        for m in [4u32, 64, 256, 1024] {
            let mut prev = f64::NEG_INFINITY;
            for prx in (-1050..=-400).map(|p| p as f64 / 10.0) {
                let c = capacity_of(&t, am_step(&t, state(&t, m), prx, StepMode::FixedPoint));
                assert!(c >= prev - 1e-15, "m={} prx={}", m, prx);
                prev = c;
            }
        }
    }

    #[test]
    fn capacities_stay_in_table() {
        let t = ModulationTable::standard();
        let allowed: Vec<f64> = t.rows().iter().map(|r| r.bitrate_mbps / 225.0).collect();
        let mut s = t.initial_state();
        for prx in [-80.0, -63.0, -55.0, -70.0, -52.0, -100.0, -45.0] {
            s = am_step(&t, s, prx, StepMode::FixedPoint);
            let c = capacity_of(&t, s);
            assert!(allowed.iter().any(|&a| (a - c).abs() < 1e-12));
        }
    }

    #[test]
    fn table_validation() {
        let mut rows = ModulationTable::standard().rows().to_vec();
        rows[1].bitrate_mbps = 40.0;
        assert!(matches!(ModulationTable::from_rows(rows).unwrap_err(), PhyError::BitrateOrder(1)));

        let mut rows = ModulationTable::standard().rows().to_vec();
        rows[1].limit_down_dbm = Some(-71.0); // at/above limit_up(4) = -72
        assert!(matches!(ModulationTable::from_rows(rows).unwrap_err(), PhyError::Threshold(1, _)));
    }

    #[test]
    fn table_json_round_trip() {
        let t = ModulationTable::standard();
        let text = t.to_json();
        let t2 = ModulationTable::from_json(&text).unwrap();
        assert_eq!(t, t2);
    }

    #[test]
    fn attenuation_sample() {
        let s = AttenuationSample::new(0.0, -63.5).unwrap();
        assert!((s.attenuation_db() - 63.5).abs() < 1e-12);
        assert!(AttenuationSample::new(f64::NAN, -60.0).is_err());
    }
}
