//! Assembly of the full residual for one operating point.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::ModelError;
use crate::fcmodel::channel::{channel_residual, plate_residual, ChannelContext, CouplingFluxes, Side};
use crate::fcmodel::params::{ModelParameters, OperatingConditions};
use crate::fcmodel::state::{index, Var, ALL_VARS, NUM_VARS};
use crate::fcmodel::through_cell::{through_cell_residual, through_cell_storage, NodeConditions};

/// Counters collected while assembling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssemblyInfo {
    /// Nodes where a Butler-Volmer exponent was clamped.
    pub saturated_nodes: usize,
}

/// The discretised cell model at one operating point.
///
/// The semi-discrete system is `d M(u)/dt = F(u)` on the differential rows
/// and `0 = G(u)` on the algebraic rows. [`CellModel::rates`] writes `F` and
/// `G` into one vector; [`CellModel::storage`] writes `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellModel {
    params: ModelParameters,
    oc: OperatingConditions,
    ctx: ChannelContext,
}

impl CellModel {
    pub fn new(params: &ModelParameters, oc: &OperatingConditions) -> Result<Self, ModelError> {
        params.validate()?;
        oc.validate()?;
        let ctx = ChannelContext::new(oc, params)?;
        Ok(Self { params: params.clone(), oc: *oc, ctx })
    }

    pub fn params(&self) -> &ModelParameters {
        &self.params
    }

    pub fn conditions(&self) -> &OperatingConditions {
        &self.oc
    }

    pub fn context(&self) -> &ChannelContext {
        &self.ctx
    }

    pub fn n_y(&self) -> usize {
        self.params.geometry.n_y
    }

    pub fn n_unknowns(&self) -> usize {
        self.n_y() * NUM_VARS
    }

    /// Rejects augmentation fields of the wrong length or with negative or
    /// non-finite entries.
    pub fn check_field(&self, beta: &[f64]) -> Result<(), ModelError> {
        if beta.len() != self.n_y() {
            return Err(ModelError::FieldLength { expected: self.n_y(), got: beta.len() });
        }
        match beta.iter().position(|b| !(b.is_finite() && *b >= 0.0)) {
            Some(node) => Err(ModelError::InvalidAugmentation { node, value: beta[node] }),
            None => Ok(()),
        }
    }

    /// Right-hand sides `F` and algebraic residuals `G`. `beta = None` is the
    /// unaugmented model.
    pub fn rates(&self, u: &[f64], beta: Option<&[f64]>, out: &mut [f64]) -> Result<AssemblyInfo, ModelError> {
        let n_y = self.n_y();
        assert_eq!(u.len(), n_y * NUM_VARS);
        assert_eq!(out.len(), u.len());
        let mut info = AssemblyInfo::default();
        let mut coupling = vec![CouplingFluxes::default(); n_y];
        for (n, c) in coupling.iter_mut().enumerate() {
            let block = n * NUM_VARS..(n + 1) * NUM_VARS;
            let cond = NodeConditions {
                t: self.ctx.profiles.t[n],
                beta_aug: match beta {
                    Some(b) => b[n],
                    None => 1.0,
                },
            };
            let res = through_cell_residual(&u[block.clone()], &cond, &self.params, &mut out[block]);
            *c = res.coupling;
            if res.kinetics_saturated {
                info.saturated_nodes += 1;
            }
        }
        channel_residual(u, Side::Anode, &self.ctx, &self.params, &coupling, out);
        channel_residual(u, Side::Cathode, &self.ctx, &self.params, &coupling, out);
        plate_residual(u, self.oc.i_cell, &self.params.geometry, &self.params.materials, out);
        if let Some(k) = out.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFiniteResidual { field: ALL_VARS[k % NUM_VARS].name(), node: k / NUM_VARS });
        }
        Ok(info)
    }

    /// Conserved quantities `M(u)` of the differential rows; zero on
    /// algebraic rows.
    pub fn storage(&self, u: &[f64], out: &mut [f64]) {
        assert_eq!(out.len(), u.len());
        for n in 0..self.n_y() {
            let block = n * NUM_VARS..(n + 1) * NUM_VARS;
            let o = &mut out[block.clone()];
            o.fill(0.0);
            through_cell_storage(&u[block], &self.params, o);
            for var in [Var::CAnH2o, Var::SChAn, Var::CCaH2o, Var::CCaO2, Var::SChCa] {
                o[var.offset()] = u[index(n, var)];
            }
        }
    }

    /// Coupling fluxes at every node for a given state.
    pub fn coupling(&self, u: &[f64], beta: Option<&[f64]>) -> Vec<CouplingFluxes> {
        let mut scratch = vec![0.0; NUM_VARS];
        (0..self.n_y())
            .map(|n| {
                let cond = NodeConditions {
                    t: self.ctx.profiles.t[n],
                    beta_aug: beta.map_or(1.0, |b| b[n]),
                };
                through_cell_residual(&u[n * NUM_VARS..(n + 1) * NUM_VARS], &cond, &self.params, &mut scratch)
                    .coupling
            })
            .collect()
    }
}
