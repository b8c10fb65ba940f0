//! Reduced 1+1D cell model: parameters, closures and residual assembly.

pub mod balance;
pub mod channel;
pub mod model;
pub mod params;
pub mod sources;
pub mod state;
pub mod through_cell;

pub use balance::{balance_report, BalanceReport};
pub use channel::{channel_profiles, channel_residual, inlet_states, ChannelProfiles, CouplingFluxes, Inlet, Inlets, Side};
pub use model::{AssemblyInfo, CellModel};
pub use params::{CellGeometry, Gas, MaterialFunctions, ModelParameters, OperatingConditions, PhysicalConstants};
pub use sources::{
    augmented_adsorption_source, butler_volmer, equilibrium_water_content, evap_cond_source, reaction_rates, Electrode,
    ReactionRates,
};
pub use state::{CellState, Var, ALL_VARS, NUM_VARS};
pub use through_cell::{through_cell_residual, NodeConditions};
