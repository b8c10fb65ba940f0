use crate::error::ModelError;
use crate::fcmodel::state::{Block, Var, ALL_VARS, NUM_VARS};
use crate::fcmodel::CellModel;
use crate::linalg::Band;

/// Sparsity of a system: unknowns come in `n_blocks` blocks of `block`
/// entries, and rows of block `b` only depend on blocks `b - reach ..= b + reach`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockStructure {
    pub block: usize,
    pub n_blocks: usize,
    pub reach: usize,
}

impl BlockStructure {
    pub fn dense(n: usize) -> Self {
        Self { block: n, n_blocks: 1, reach: 0 }
    }

    pub fn band(&self) -> Band {
        let n = self.block * self.n_blocks;
        let w = (self.block * (self.reach + 1)).saturating_sub(1).min(n.saturating_sub(1));
        Band { lower: w, upper: w }
    }

    /// Number of column groups whose perturbations never touch the same row.
    pub fn n_colors(&self) -> usize {
        self.block * (2 * self.reach + 1).min(self.n_blocks)
    }

    /// Column group of unknown `i`.
    pub fn color(&self, i: usize) -> usize {
        let stride = (2 * self.reach + 1).min(self.n_blocks);
        (i / self.block % stride) * self.block + i % self.block
    }

    /// Rows that column `i` can touch.
    pub fn rows_of(&self, i: usize) -> core::ops::Range<usize> {
        let b = i / self.block;
        let lo = b.saturating_sub(self.reach);
        let hi = (b + self.reach + 1).min(self.n_blocks);
        lo * self.block..hi * self.block
    }
}

/// A semi-discrete system `d M(u)/dt = F(u)` on differential rows and
/// `0 = G(u)` on algebraic rows.
pub trait DaeSystem {
    fn dim(&self) -> usize;

    fn structure(&self) -> BlockStructure {
        BlockStructure::dense(self.dim())
    }

    /// Writes `F` on differential rows and `G` on algebraic rows. Returns the
    /// number of local warnings raised during assembly.
    fn rates(&self, u: &[f64], out: &mut [f64]) -> Result<usize, ModelError>;

    /// Writes `M(u)` on differential rows; algebraic rows are ignored.
    fn storage(&self, u: &[f64], out: &mut [f64]);

    fn is_differential(&self, i: usize) -> bool;

    /// Magnitude below which unknown `i` is weighted absolutely.
    fn typical(&self, i: usize) -> f64 {
        let _ = i;
        1.0
    }

    fn bounds(&self, i: usize) -> (f64, f64) {
        let _ = i;
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Largest change of unknown `i` allowed in one Newton update; larger
    /// corrections shrink the whole update.
    fn max_update(&self, i: usize) -> f64 {
        let _ = i;
        f64::INFINITY
    }

    /// Row group used for the residual history.
    fn group(&self, i: usize) -> usize {
        let _ = i;
        0
    }

    fn group_names(&self) -> &'static [&'static str] {
        &["all"]
    }

    fn case_id(&self) -> u32 {
        0
    }
}

/// The cell model with a frozen augmentation field.
#[derive(Debug, Clone, Copy)]
pub struct AugmentedCell<'a> {
    pub model: &'a CellModel,
    pub beta: Option<&'a [f64]>,
}

/// Potentials move by at most this much per Newton update [V]; the kinetics
/// are exponential in them.
pub const MAX_POTENTIAL_UPDATE: f64 = 0.05;

const GROUPS: [&str; 5] = ["channel", "cl_vapour", "ionomer", "cl_liquid", "electrical"];

impl DaeSystem for AugmentedCell<'_> {
    fn dim(&self) -> usize {
        self.model.n_unknowns()
    }

    fn structure(&self) -> BlockStructure {
        BlockStructure { block: NUM_VARS, n_blocks: self.model.n_y(), reach: 1 }
    }

    fn rates(&self, u: &[f64], out: &mut [f64]) -> Result<usize, ModelError> {
        self.model.rates(u, self.beta, out).map(|info| info.saturated_nodes)
    }

    fn storage(&self, u: &[f64], out: &mut [f64]) {
        self.model.storage(u, out)
    }

    fn is_differential(&self, i: usize) -> bool {
        ALL_VARS[i % NUM_VARS].is_differential()
    }

    fn typical(&self, i: usize) -> f64 {
        ALL_VARS[i % NUM_VARS].typical()
    }

    fn bounds(&self, i: usize) -> (f64, f64) {
        ALL_VARS[i % NUM_VARS].solver_bounds()
    }

    fn max_update(&self, i: usize) -> f64 {
        match ALL_VARS[i % NUM_VARS] {
            Var::EtaAn | Var::EtaCa | Var::PhiCh => MAX_POTENTIAL_UPDATE,
            _ => f64::INFINITY,
        }
    }

    fn group(&self, i: usize) -> usize {
        match ALL_VARS[i % NUM_VARS].block() {
            Block::Channel => 0,
            Block::CatalystVapour => 1,
            Block::Ionomer => 2,
            Block::CatalystLiquid => 3,
            Block::Electrical => 4,
        }
    }

    fn group_names(&self) -> &'static [&'static str] {
        &GROUPS
    }

    fn case_id(&self) -> u32 {
        self.model.conditions().case_id
    }
}
