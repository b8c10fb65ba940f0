//! Per-node feature vectors for the augmentation function and their
//! min-max normalisation.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::FeatureError;
use crate::fcmodel::channel::{node_concentrations, Side};
use crate::fcmodel::state::{CellState, Var};
use crate::fcmodel::CellModel;

pub const NUM_FEATURES: usize = 8;

/// Column names in storage order.
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "x_h2o_ch_an",
    "t_ch_ca",
    "x_h2o_ch_ca",
    "lambda_cl_an",
    "c_cl_an_h2o",
    "lambda_cl_ca",
    "c_cl_ca_h2o",
    "lambda_mb",
];

/// Relative widening of the fitted range on each side.
pub const BOUND_MARGIN: f64 = 0.05;
/// Half-width of the range assigned to a constant column.
pub const DEGENERATE_HALF_WIDTH: f64 = 0.5;
/// Scaled features outside the training box are clamped to this interval.
pub const EXTRAPOLATION_CLAMP: (f64, f64) = (-0.25, 1.25);

pub type FeatureRow = [f64; NUM_FEATURES];

/// One feature row per channel node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: Vec<FeatureRow>,
}

impl FeatureMatrix {
    pub fn from_rows(rows: Vec<FeatureRow>) -> Result<Self, FeatureError> {
        for (node, row) in rows.iter().enumerate() {
            if let Some(column) = row.iter().position(|v| !v.is_finite()) {
                return Err(FeatureError::NonFinite { node, column });
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[FeatureRow] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[c]).collect()
    }
}

fn mole_fraction(state: &CellState, side: Side, node: usize, water: Var) -> f64 {
    let total: f64 = node_concentrations(state.values(), side, node).sum();
    let c = state.get(node, water);
    if total > 0.0 {
        c / total
    } else {
        0.0
    }
}

/// Features of every node of a converged state.
pub fn compute_features(model: &CellModel, state: &CellState) -> Result<FeatureMatrix, FeatureError> {
    let t = &model.context().profiles.t;
    let rows = (0..state.n_y())
        .map(|n| {
            [
                mole_fraction(state, Side::Anode, n, Var::CAnH2o),
                t[n],
                mole_fraction(state, Side::Cathode, n, Var::CCaH2o),
                state.get(n, Var::LambdaAn),
                state.get(n, Var::CClAn),
                state.get(n, Var::LambdaCa),
                state.get(n, Var::CClCa),
                state.get(n, Var::LambdaMb),
            ]
        })
        .collect();
    FeatureMatrix::from_rows(rows)
}

/// Per-column affine map of the training range onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationBounds {
    pub min: FeatureRow,
    pub max: FeatureRow,
}

/// Result of [`NormalizationBounds::fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct FittedBounds {
    pub bounds: NormalizationBounds,
    /// Columns that were constant over the data and got the fixed width.
    pub degenerate_columns: Vec<usize>,
}

impl Default for NormalizationBounds {
    fn default() -> Self {
        Self { min: [0.0; NUM_FEATURES], max: [1.0; NUM_FEATURES] }
    }
}

impl NormalizationBounds {
    /// Range of every column over all rows of all matrices, widened by
    /// [`BOUND_MARGIN`] of the span on each side.
    pub fn fit<'a, I>(matrices: I) -> Result<FittedBounds, FeatureError>
    where
        I: IntoIterator<Item = &'a FeatureMatrix>,
    {
        let mut lo = [f64::INFINITY; NUM_FEATURES];
        let mut hi = [f64::NEG_INFINITY; NUM_FEATURES];
        let mut any = false;
        for m in matrices {
            for row in m.rows() {
                any = true;
                for c in 0..NUM_FEATURES {
                    lo[c] = lo[c].min(row[c]);
                    hi[c] = hi[c].max(row[c]);
                }
            }
        }
        if !any {
            return Err(FeatureError::Empty);
        }
        let mut degenerate_columns = Vec::new();
        let mut bounds = NormalizationBounds::default();
        for c in 0..NUM_FEATURES {
            let span = hi[c] - lo[c];
            if span > 0.0 {
                bounds.min[c] = lo[c] - BOUND_MARGIN * span;
                bounds.max[c] = hi[c] + BOUND_MARGIN * span;
            } else {
                degenerate_columns.push(c);
                bounds.min[c] = lo[c] - DEGENERATE_HALF_WIDTH;
                bounds.max[c] = lo[c] + DEGENERATE_HALF_WIDTH;
            }
        }
        Ok(FittedBounds { bounds, degenerate_columns })
    }

    pub fn is_valid(&self) -> bool {
        (0..NUM_FEATURES).all(|c| self.min[c].is_finite() && self.max[c].is_finite() && self.max[c] > self.min[c])
    }

    pub fn apply(&self, row: &FeatureRow) -> FeatureRow {
        let mut out = [0.0; NUM_FEATURES];
        for c in 0..NUM_FEATURES {
            out[c] = (row[c] - self.min[c]) / (self.max[c] - self.min[c]);
        }
        out
    }

    /// [`apply`](Self::apply) followed by clamping to
    /// [`EXTRAPOLATION_CLAMP`]; returns the number of clamped entries.
    pub fn apply_clamped(&self, row: &FeatureRow) -> (FeatureRow, usize) {
        let mut out = self.apply(row);
        let mut clamped = 0;
        for v in &mut out {
            let c = v.clamp(EXTRAPOLATION_CLAMP.0, EXTRAPOLATION_CLAMP.1);
            if c != *v {
                clamped += 1;
                *v = c;
            }
        }
        (out, clamped)
    }

    pub fn invert(&self, scaled: &FeatureRow) -> FeatureRow {
        let mut out = [0.0; NUM_FEATURES];
        for c in 0..NUM_FEATURES {
            out[c] = self.min[c] + scaled[c] * (self.max[c] - self.min[c]);
        }
        out
    }
}
