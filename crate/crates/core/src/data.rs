//! Case records, manufactured reference data and the train/test split.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::augment::{fixed_point_solve, AugmentationFunction, FixedPointSettings};
use crate::dae::SolverSettings;
use crate::error::DataError;
use crate::exec::Executor;
use crate::features::{FeatureMatrix, NUM_FEATURES};
use crate::fcmodel::params::LAMBDA_MAX;
use crate::fcmodel::{CellModel, ModelParameters, OperatingConditions};
use crate::math::logistic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Synthetic,
    External,
}

/// One operating point with its reference profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub case_id: u32,
    pub conditions: OperatingConditions,
    /// Reference membrane water content per node.
    pub lambda_data: Vec<f64>,
    /// Reference local current density per node [A/m^2].
    pub j_data: Option<Vec<f64>>,
    pub provenance: Provenance,
}

impl CaseRecord {
    pub fn validate(&self, n_y: usize) -> Result<(), DataError> {
        let bad = |what| DataError::InvalidRecord { case_id: self.case_id, what };
        if self.conditions.case_id != self.case_id {
            return Err(bad("conditions carry a different case id"));
        }
        if self.lambda_data.len() != n_y {
            return Err(bad("lambda profile length does not match the grid"));
        }
        if self.lambda_data.iter().any(|l| !(0.0..=LAMBDA_MAX).contains(l)) {
            return Err(bad("lambda profile outside [0, 22]"));
        }
        if let Some(j) = &self.j_data {
            if j.len() != n_y {
                return Err(bad("current profile length does not match the grid"));
            }
            if j.iter().any(|v| !v.is_finite()) {
                return Err(bad("non-finite current profile"));
            }
        }
        self.conditions.validate().map_err(|_| bad("operating conditions out of range"))
    }
}

/// Closed-form augmentation used to manufacture reference data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HiddenAugmentation {
    Constant { value: f64 },
    /// `base + amplitude * logistic(slope * (feature - center))`.
    Logistic { base: f64, amplitude: f64, slope: f64, center: f64, feature: usize },
}

impl HiddenAugmentation {
    /// `0.8 + 0.4 logistic(2 (λ_mb - 8))`.
    pub fn reference() -> Self {
        HiddenAugmentation::Logistic { base: 0.8, amplitude: 0.4, slope: 2.0, center: 8.0, feature: NUM_FEATURES - 1 }
    }

    pub fn value(&self, row: &[f64; NUM_FEATURES]) -> f64 {
        match *self {
            HiddenAugmentation::Constant { value } => value,
            HiddenAugmentation::Logistic { base, amplitude, slope, center, feature } => {
                base + amplitude * logistic(slope * (row[feature] - center))
            }
        }
    }

    /// Nonnegative for every input.
    pub fn validate(&self) -> Result<(), DataError> {
        match *self {
            HiddenAugmentation::Constant { value } if !(value >= 0.0 && value.is_finite()) => {
                Err(DataError::Spec { name: "hidden.value", value })
            }
            HiddenAugmentation::Logistic { base, amplitude, slope, center, feature } => {
                if feature >= NUM_FEATURES {
                    return Err(DataError::Spec { name: "hidden.feature", value: feature as f64 });
                }
                for (name, v) in [("hidden.base", base), ("hidden.amplitude", amplitude), ("hidden.slope", slope), ("hidden.center", center)] {
                    if !v.is_finite() {
                        return Err(DataError::Spec { name, value: v });
                    }
                }
                if base.min(base + amplitude) < 0.0 {
                    return Err(DataError::Spec { name: "hidden.base", value: base });
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

impl AugmentationFunction for HiddenAugmentation {
    fn predict(&self, features: &FeatureMatrix) -> Vec<f64> {
        features.rows().iter().map(|r| self.value(r)).collect()
    }
}

/// Closed sampling interval `[lo, hi]`.
pub type Range = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingRanges {
    pub t_in: Range,
    pub dt: Range,
    pub p_in_an: Range,
    pub p_in_ca: Range,
    pub dp_an: Range,
    pub dp_ca: Range,
    pub rh_an_in: Range,
    pub rh_ca_in: Range,
    pub stoich_an: Range,
    pub stoich_ca: Range,
    pub i_cell: Range,
}

impl Default for SamplingRanges {
    fn default() -> Self {
        Self {
            t_in: [333.0, 353.0],
            dt: [0.0, 10.0],
            p_in_an: [110.0e3, 160.0e3],
            p_in_ca: [110.0e3, 160.0e3],
            dp_an: [-20.0e3, 0.0],
            dp_ca: [-20.0e3, 0.0],
            rh_an_in: [0.3, 1.0],
            rh_ca_in: [0.3, 1.0],
            stoich_an: [1.2, 3.0],
            stoich_ca: [1.2, 3.0],
            i_cell: [2.0e3, 15.0e3],
        }
    }
}

impl SamplingRanges {
    fn entries(&self) -> [(&'static str, Range); 11] {
        [
            ("t_in", self.t_in),
            ("dt", self.dt),
            ("p_in_an", self.p_in_an),
            ("p_in_ca", self.p_in_ca),
            ("dp_an", self.dp_an),
            ("dp_ca", self.dp_ca),
            ("rh_an_in", self.rh_an_in),
            ("rh_ca_in", self.rh_ca_in),
            ("stoich_an", self.stoich_an),
            ("stoich_ca", self.stoich_ca),
            ("i_cell", self.i_cell),
        ]
    }

    pub fn validate(&self) -> Result<(), DataError> {
        for (name, [lo, hi]) in self.entries() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(DataError::Spec { name, value: lo });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruthGeneratorSpec {
    pub hidden: HiddenAugmentation,
    pub ranges: SamplingRanges,
    pub n_cases: usize,
    pub seed: u64,
    /// Fresh draws tried for a case whose solve fails.
    pub max_retries: u32,
    /// Also record the local current profile.
    pub include_current: bool,
}

impl Default for TruthGeneratorSpec {
    /// 40 cases with the reference hidden augmentation.
    fn default() -> Self {
        Self::new(HiddenAugmentation::reference(), 40, 0)
    }
}

impl TruthGeneratorSpec {
    pub fn new(hidden: HiddenAugmentation, n_cases: usize, seed: u64) -> Self {
        Self { hidden, ranges: SamplingRanges::default(), n_cases, seed, max_retries: 5, include_current: true }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        self.hidden.validate()?;
        self.ranges.validate()
    }

    /// Conditions of case `index` (id `index + 1`) on draw `attempt`. Every
    /// (index, attempt) pair has its own random stream.
    pub fn sample(&self, index: usize, attempt: u32) -> OperatingConditions {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((index as u64) << 16) | attempt as u64);
        let mut draw = |[lo, hi]: Range| lo + (hi - lo) * ((rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64);
        let r = &self.ranges;
        OperatingConditions {
            case_id: index as u32 + 1,
            t_in: draw(r.t_in),
            dt: draw(r.dt),
            p_in_an: draw(r.p_in_an),
            dp_an: draw(r.dp_an),
            p_in_ca: draw(r.p_in_ca),
            dp_ca: draw(r.dp_ca),
            rh_an_in: draw(r.rh_an_in),
            rh_ca_in: draw(r.rh_ca_in),
            stoich_an: draw(r.stoich_an),
            stoich_ca: draw(r.stoich_ca),
            i_cell: draw(r.i_cell),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthSet {
    pub records: Vec<CaseRecord>,
    /// Case ids whose every draw failed to solve.
    pub dropped: Vec<u32>,
    /// Draws replaced after a failed solve.
    pub resamples: usize,
}

/// Reference profiles from fixed-point solves with the hidden augmentation.
pub fn generate_truth<E: Executor>(
    spec: &TruthGeneratorSpec,
    params: &ModelParameters,
    fp: &FixedPointSettings,
    solver: &SolverSettings,
    exec: &E,
) -> Result<TruthSet, DataError> {
    spec.validate()?;
    let results = exec.map(spec.n_cases, |k| {
        for attempt in 0..=spec.max_retries {
            let oc = spec.sample(k, attempt);
            let Ok(model) = CellModel::new(params, &oc) else { continue };
            if let Ok(out) = fixed_point_solve(&model, &spec.hidden, fp, solver, None) {
                let record = CaseRecord {
                    case_id: oc.case_id,
                    conditions: oc,
                    lambda_data: out.state.lambda_mb(),
                    j_data: spec.include_current.then(|| out.state.i_loc()),
                    provenance: Provenance::Synthetic,
                };
                return (Some(record), attempt as usize);
            }
        }
        (None, spec.max_retries as usize + 1)
    });
    let mut set = TruthSet { records: Vec::new(), dropped: Vec::new(), resamples: 0 };
    for (k, (record, failures)) in results.into_iter().enumerate() {
        set.resamples += failures;
        match record {
            Some(r) => set.records.push(r),
            None => set.dropped.push(k as u32 + 1),
        }
    }
    Ok(set)
}

/// Splits `cases` into the listed training cases (sorted by id) and the
/// remaining test cases (in input order).
pub fn select_training(cases: &[CaseRecord], ids: &[u32]) -> Result<(Vec<CaseRecord>, Vec<CaseRecord>), DataError> {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(DataError::DuplicateCase(w[0]));
        }
    }
    for id in &sorted {
        if !cases.iter().any(|c| c.case_id == *id) {
            return Err(DataError::UnknownCase(*id));
        }
    }
    let mut train: Vec<CaseRecord> = cases.iter().filter(|c| sorted.binary_search(&c.case_id).is_ok()).cloned().collect();
    train.sort_by_key(|c| c.case_id);
    let test = cases.iter().filter(|c| sorted.binary_search(&c.case_id).is_err()).cloned().collect();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn record(id: u32) -> CaseRecord {
        CaseRecord {
            case_id: id,
            conditions: OperatingConditions::nominal(id),
            lambda_data: vec![7.0; 20],
            j_data: None,
            provenance: Provenance::External,
        }
    }

    #[test]
    fn split_sizes_and_order() {
        let cases: Vec<CaseRecord> = (1..=1224).map(record).collect();
        let ids: Vec<u32> = vec![155, 40, 100, 125, 300, 410, 505, 612, 700, 810, 905, 1001, 1100, 1200];
        let (train, test) = select_training(&cases, &ids).unwrap();
        assert_eq!((train.len(), test.len()), (14, 1210));
        assert!(train.windows(2).all(|w| w[0].case_id < w[1].case_id));
        let all: Vec<u32> = (1..=5).collect();
        let (train, test) = select_training(&cases[..5], &all).unwrap();
        assert_eq!(train.len(), 5);
        assert!(test.is_empty());
    }

    #[test]
    fn split_rejects_bad_ids() {
        let cases: Vec<CaseRecord> = (1..=5).map(record).collect();
        assert_eq!(select_training(&cases, &[2, 2]).unwrap_err(), DataError::DuplicateCase(2));
        assert_eq!(select_training(&cases, &[9]).unwrap_err(), DataError::UnknownCase(9));
    }

    #[test]
    fn record_validation() {
        assert!(record(3).validate(20).is_ok());
        assert!(record(3).validate(21).is_err());
        let mut r = record(3);
        r.lambda_data[4] = 23.0;
        assert!(r.validate(20).is_err());
        let mut r = record(3);
        r.conditions.case_id = 4;
        assert!(r.validate(20).is_err());
    }

    #[test]
    fn sampling_is_reproducible_and_in_range() {
        let spec = TruthGeneratorSpec::new(HiddenAugmentation::reference(), 10, 42);
        for k in 0..10 {
            let a = spec.sample(k, 0);
            assert_eq!(a, spec.sample(k, 0));
            assert_ne!(a, spec.sample(k, 1));
            assert!(a.validate().is_ok());
            assert!((spec.ranges.i_cell[0]..=spec.ranges.i_cell[1]).contains(&a.i_cell));
            assert!(a.dp_an <= 0.0 && a.dp_ca <= 0.0);
        }
    }

    #[test]
    fn reference_hidden_function() {
        let h = HiddenAugmentation::reference();
        let mut row = [0.0; NUM_FEATURES];
        row[7] = 8.0;
        assert!((h.value(&row) - 1.0).abs() < 1e-15);
        row[7] = 30.0;
        assert!((h.value(&row) - 1.2).abs() < 1e-12);
        assert!(h.validate().is_ok());
        assert!(HiddenAugmentation::Constant { value: -1.0 }.validate().is_err());
    }
}
