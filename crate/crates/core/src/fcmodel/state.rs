//! Unknown layout and the discretised cell state.
//!
//! Unknowns are stored node-major: the `NUM_VARS` values of node 0, then
//! node 1, and so on. Every residual row only couples a node to its two
//! neighbours, so the Jacobian is block-tridiagonal.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::fcmodel::params::{LAMBDA_MAX, S_MAX};

/// Per-node unknowns. The discriminant is the offset inside a node block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(usize)]
pub enum Var {
    /// Anode channel water vapour [mol/m^3].
    CAnH2o = 0,
    /// Anode channel hydrogen, closed by the ideal-gas law.
    CAnH2,
    /// Anode channel gas speed along its flow direction [m/s].
    VAn,
    /// Anode channel liquid saturation.
    SChAn,
    CCaH2o,
    CCaO2,
    /// Cathode channel nitrogen, closed by the ideal-gas law.
    CCaN2,
    VCa,
    SChCa,
    /// Catalyst-layer water vapour [mol/m^3].
    CClAn,
    CClCa,
    /// Catalyst-layer ionomer water content.
    LambdaAn,
    LambdaCa,
    /// Through-membrane average water content.
    LambdaMb,
    /// Catalyst-layer liquid saturation.
    SClAn,
    SClCa,
    /// Activation overpotentials [V].
    EtaAn,
    EtaCa,
    /// Local through-plane current density [A/m^2].
    ILoc,
    /// Cathode plate electron potential [V].
    PhiCh,
}

pub const NUM_VARS: usize = 20;

pub const ALL_VARS: [Var; NUM_VARS] = [
    Var::CAnH2o,
    Var::CAnH2,
    Var::VAn,
    Var::SChAn,
    Var::CCaH2o,
    Var::CCaO2,
    Var::CCaN2,
    Var::VCa,
    Var::SChCa,
    Var::CClAn,
    Var::CClCa,
    Var::LambdaAn,
    Var::LambdaCa,
    Var::LambdaMb,
    Var::SClAn,
    Var::SClCa,
    Var::EtaAn,
    Var::EtaCa,
    Var::ILoc,
    Var::PhiCh,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Channel,
    CatalystVapour,
    Ionomer,
    CatalystLiquid,
    Electrical,
}

impl Var {
    #[inline]
    pub const fn offset(self) -> usize {
        self as usize
    }

    pub const fn name(self) -> &'static str {
        match self {
            Var::CAnH2o => "c_ch_an_h2o",
            Var::CAnH2 => "c_ch_an_h2",
            Var::VAn => "v_ch_an",
            Var::SChAn => "s_ch_an",
            Var::CCaH2o => "c_ch_ca_h2o",
            Var::CCaO2 => "c_ch_ca_o2",
            Var::CCaN2 => "c_ch_ca_n2",
            Var::VCa => "v_ch_ca",
            Var::SChCa => "s_ch_ca",
            Var::CClAn => "c_cl_an_h2o",
            Var::CClCa => "c_cl_ca_h2o",
            Var::LambdaAn => "lambda_cl_an",
            Var::LambdaCa => "lambda_cl_ca",
            Var::LambdaMb => "lambda_mb",
            Var::SClAn => "s_cl_an",
            Var::SClCa => "s_cl_ca",
            Var::EtaAn => "eta_an",
            Var::EtaCa => "eta_ca",
            Var::ILoc => "i_loc",
            Var::PhiCh => "phi_e_ch_ca",
        }
    }

    /// Whether the row carries a time derivative.
    pub const fn is_differential(self) -> bool {
        matches!(
            self,
            Var::CAnH2o
                | Var::SChAn
                | Var::CCaH2o
                | Var::CCaO2
                | Var::SChCa
                | Var::CClAn
                | Var::CClCa
                | Var::LambdaAn
                | Var::LambdaCa
                | Var::SClAn
                | Var::SClCa
        )
    }

    pub const fn block(self) -> Block {
        match self {
            Var::CAnH2o
            | Var::CAnH2
            | Var::VAn
            | Var::SChAn
            | Var::CCaH2o
            | Var::CCaO2
            | Var::CCaN2
            | Var::VCa
            | Var::SChCa => Block::Channel,
            Var::CClAn | Var::CClCa => Block::CatalystVapour,
            Var::LambdaAn | Var::LambdaCa | Var::LambdaMb => Block::Ionomer,
            Var::SClAn | Var::SClCa => Block::CatalystLiquid,
            Var::EtaAn | Var::EtaCa | Var::ILoc | Var::PhiCh => Block::Electrical,
        }
    }

    /// Typical magnitude used to weight norms and size difference steps.
    pub const fn typical(self) -> f64 {
        match self {
            Var::CAnH2o | Var::CAnH2 | Var::CCaH2o | Var::CCaO2 | Var::CCaN2 | Var::CClAn | Var::CClCa => 1.0,
            Var::VAn | Var::VCa => 0.1,
            Var::SChAn | Var::SChCa | Var::SClAn | Var::SClCa => 0.01,
            Var::LambdaAn | Var::LambdaCa | Var::LambdaMb => 1.0,
            Var::EtaAn | Var::EtaCa | Var::PhiCh => 0.01,
            Var::ILoc => 100.0,
        }
    }

    /// Box enforced during Newton iterations. Water contents may pass
    /// `LAMBDA_MAX` there; a steady state that does is rejected afterwards.
    pub const fn solver_bounds(self) -> (f64, f64) {
        match self {
            Var::LambdaAn | Var::LambdaCa | Var::LambdaMb => (0.0, f64::INFINITY),
            _ => self.bounds(),
        }
    }

    /// Validity box of a steady state. Unbounded sides are infinite.
    pub const fn bounds(self) -> (f64, f64) {
        match self {
            Var::CAnH2o | Var::CAnH2 | Var::CCaH2o | Var::CCaO2 | Var::CCaN2 | Var::CClAn | Var::CClCa => {
                (0.0, f64::INFINITY)
            }
            Var::SChAn | Var::SChCa | Var::SClAn | Var::SClCa => (0.0, S_MAX),
            Var::LambdaAn | Var::LambdaCa | Var::LambdaMb => (0.0, LAMBDA_MAX),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

#[inline]
pub const fn index(node: usize, var: Var) -> usize {
    node * NUM_VARS + var as usize
}

/// All discretised fields of one cell on the channel grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellState {
    n_y: usize,
    values: Vec<f64>,
    /// Terminal voltage, `φ_e,ch` extrapolated to the `y = 0` plate end.
    pub v_cell: f64,
}

impl CellState {
    pub fn from_values(n_y: usize, values: Vec<f64>, v_cell: f64) -> Self {
        assert_eq!(values.len(), n_y * NUM_VARS);
        Self { n_y, values, v_cell }
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, node: usize, var: Var) -> f64 {
        self.values[index(node, var)]
    }

    #[inline]
    pub fn set(&mut self, node: usize, var: Var, v: f64) {
        self.values[index(node, var)] = v;
    }

    /// One field along the channel.
    pub fn field(&self, var: Var) -> Vec<f64> {
        (0..self.n_y).map(|n| self.get(n, var)).collect()
    }

    pub fn lambda_mb(&self) -> Vec<f64> {
        self.field(Var::LambdaMb)
    }

    pub fn i_loc(&self) -> Vec<f64> {
        self.field(Var::ILoc)
    }

    /// Largest weighted difference `|a - b| / max(|b|, typical)` over all unknowns.
    pub fn max_scaled_difference(&self, other: &CellState) -> f64 {
        assert_eq!(self.n_y, other.n_y);
        let mut worst: f64 = 0.0;
        for n in 0..self.n_y {
            for var in ALL_VARS {
                let a = self.get(n, var);
                let b = other.get(n, var);
                worst = worst.max((a - b).abs() / b.abs().max(var.typical()));
            }
        }
        worst
    }

    /// First unknown outside its admissible box, if any.
    pub fn box_violation(&self) -> Option<(usize, Var, f64)> {
        for n in 0..self.n_y {
            for var in ALL_VARS {
                let v = self.get(n, var);
                let (lo, hi) = var.bounds();
                if !v.is_finite() || v < lo || v > hi {
                    return Some((n, var, v));
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_are_dense_and_ordered() {
        for (k, v) in ALL_VARS.iter().enumerate() {
            assert_eq!(v.offset(), k);
        }
        assert_eq!(index(2, Var::PhiCh), 2 * NUM_VARS + NUM_VARS - 1);
    }

    #[test]
    fn box_violation_reports_first_offender() {
        let mut s = CellState::from_values(2, alloc::vec![0.5; 2 * NUM_VARS], 0.0);
        assert!(s.box_violation().is_none());
        s.set(1, Var::SClCa, 1.0);
        assert_eq!(s.box_violation(), Some((1, Var::SClCa, 1.0)));
    }
}
