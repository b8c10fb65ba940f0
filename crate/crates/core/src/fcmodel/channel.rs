//! Along-channel transport: linear temperature and pressure profiles, inlet
//! states, and the finite-volume residuals of the gas, liquid and plate
//! potential equations.
//!
//! Faces sit halfway between nodes. `v` stored at a node is the speed on the
//! face downstream of it, so a node's outflow face carries its own velocity.
//! The anode flows from `y = 1` to `y = 0`; its flow position `k` maps to node
//! `N_y - 1 - k`.

use alloc::vec::Vec;

use crate::error::ModelError;
use crate::fcmodel::params::{CellGeometry, Gas, MaterialFunctions, ModelParameters, OperatingConditions};
use crate::fcmodel::state::{index, Var};

/// Oxygen mole fraction of dry air.
pub const X_O2_DRY_AIR: f64 = 0.21;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfiles {
    pub y: Vec<f64>,
    pub t: Vec<f64>,
    pub p_an: Vec<f64>,
    pub p_ca: Vec<f64>,
}

/// `T = T_in + dT (1 - y)`, `p_an = p_in_an + dp_an (1 - y)`, `p_ca = p_in_ca + dp_ca y`.
pub fn channel_profiles(oc: &OperatingConditions, y: &[f64]) -> ChannelProfiles {
    ChannelProfiles {
        y: y.to_vec(),
        t: y.iter().map(|&y| oc.t_in + oc.dt * (1.0 - y)).collect(),
        p_an: y.iter().map(|&y| oc.p_in_an + oc.dp_an * (1.0 - y)).collect(),
        p_ca: y.iter().map(|&y| oc.p_in_ca + oc.dp_ca * y).collect(),
    }
}

/// Gas state entering one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inlet {
    pub t: f64,
    pub p: f64,
    pub c_h2o: f64,
    /// H2 at the anode, O2 at the cathode.
    pub c_reactant: f64,
    /// N2 at the cathode, zero at the anode.
    pub c_inert: f64,
    pub velocity: f64,
}

impl Inlet {
    pub fn total(&self) -> f64 {
        self.c_h2o + self.c_reactant + self.c_inert
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inlets {
    pub anode: Inlet,
    pub cathode: Inlet,
}

/// Inlet compositions from humidity and pressure, and inlet speeds from the
/// stoichiometric ratios at the prescribed mean current.
pub fn inlet_states(oc: &OperatingConditions, params: &ModelParameters) -> Result<Inlets, ModelError> {
    let geom = &params.geometry;
    let mat = &params.materials;
    let r = params.constants.gas_constant;
    let f = params.constants.faraday;
    let bad = |name: &'static str, value: f64| ModelError::InvalidConditions { case_id: oc.case_id, name, value };

    let t_an = oc.t_in;
    let c_tot = oc.p_in_an / (r * t_an);
    let c_h2o = oc.rh_an_in * mat.p_sat(t_an) / (r * t_an);
    let c_h2 = c_tot - c_h2o;
    if c_h2 <= 0.0 {
        return Err(bad("rh_an_in", oc.rh_an_in));
    }
    let v_an = oc.stoich_an * oc.i_cell / (2.0 * f) * geom.source_factor() * geom.l_ch_an / c_h2;

    let t_ca = oc.t_in + oc.dt;
    let c_tot = oc.p_in_ca / (r * t_ca);
    let c_h2o_ca = oc.rh_ca_in * mat.p_sat(t_ca) / (r * t_ca);
    let dry = c_tot - c_h2o_ca;
    if dry <= 0.0 {
        return Err(bad("rh_ca_in", oc.rh_ca_in));
    }
    let c_o2 = X_O2_DRY_AIR * dry;
    let v_ca = oc.stoich_ca * oc.i_cell / (4.0 * f) * geom.source_factor() * geom.l_ch_ca / c_o2;

    Ok(Inlets {
        anode: Inlet { t: t_an, p: oc.p_in_an, c_h2o, c_reactant: c_h2, c_inert: 0.0, velocity: v_an },
        cathode: Inlet {
            t: t_ca,
            p: oc.p_in_ca,
            c_h2o: c_h2o_ca,
            c_reactant: c_o2,
            c_inert: dry - c_o2,
            velocity: v_ca,
        },
    })
}

/// Fluxes between the through-cell model and the channels at one node, per
/// unit active area, positive into the channel [mol/(m^2 s)].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CouplingFluxes {
    pub an_h2o: f64,
    pub an_h2: f64,
    pub an_liquid: f64,
    pub ca_h2o: f64,
    pub ca_o2: f64,
    pub ca_liquid: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Anode,
    Cathode,
}

pub(crate) struct SideLayout {
    pub species: &'static [(Var, Gas)],
    pub closure: Var,
    pub velocity: Var,
    pub liquid: Var,
    pub reversed: bool,
}

pub(crate) const ANODE: SideLayout = SideLayout {
    species: &[(Var::CAnH2o, Gas::H2O), (Var::CAnH2, Gas::H2)],
    closure: Var::CAnH2,
    velocity: Var::VAn,
    liquid: Var::SChAn,
    reversed: true,
};

pub(crate) const CATHODE: SideLayout = SideLayout {
    species: &[(Var::CCaH2o, Gas::H2O), (Var::CCaO2, Gas::O2), (Var::CCaN2, Gas::N2)],
    closure: Var::CCaN2,
    velocity: Var::VCa,
    liquid: Var::SChCa,
    reversed: false,
};

impl SideLayout {
    #[inline]
    pub fn node(&self, k: usize, n_y: usize) -> usize {
        if self.reversed {
            n_y - 1 - k
        } else {
            k
        }
    }
}

impl Side {
    pub(crate) fn layout(self) -> &'static SideLayout {
        match self {
            Side::Anode => &ANODE,
            Side::Cathode => &CATHODE,
        }
    }
}

/// Precomputed, state-independent channel data.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelContext {
    pub profiles: ChannelProfiles,
    pub inlets: Inlets,
    /// Cell widths in the normalised coordinate.
    pub widths: Vec<f64>,
    /// Gas diffusivities on the faces between flow positions `k` and `k+1`,
    /// indexed `[species][k]`.
    pub face_d_an: [Vec<f64>; 2],
    pub face_d_ca: [Vec<f64>; 3],
}

impl ChannelContext {
    pub fn new(oc: &OperatingConditions, params: &ModelParameters) -> Result<Self, ModelError> {
        let geom = &params.geometry;
        let y = geom.y_grid();
        let profiles = channel_profiles(oc, &y);
        let inlets = inlet_states(oc, params)?;
        let widths = (0..geom.n_y).map(|n| geom.cell_width(n)).collect();
        let faces = |layout: &SideLayout, gas: Gas| -> Vec<f64> {
            (0..geom.n_y - 1)
                .map(|k| {
                    let a = layout.node(k, geom.n_y);
                    let b = layout.node(k + 1, geom.n_y);
                    params.materials.d_gas(gas, 0.5 * (profiles.t[a] + profiles.t[b]))
                })
                .collect()
        };
        let face_d_an = [faces(&ANODE, Gas::H2O), faces(&ANODE, Gas::H2)];
        let face_d_ca = [faces(&CATHODE, Gas::H2O), faces(&CATHODE, Gas::O2), faces(&CATHODE, Gas::N2)];
        Ok(Self { profiles, inlets, widths, face_d_an, face_d_ca })
    }

    fn face_d(&self, side: Side, species: usize) -> &[f64] {
        match side {
            Side::Anode => &self.face_d_an[species],
            Side::Cathode => &self.face_d_ca[species],
        }
    }

    pub fn length(&self, side: Side, geom: &CellGeometry) -> f64 {
        match side {
            Side::Anode => geom.l_ch_an,
            Side::Cathode => geom.l_ch_ca,
        }
    }

    pub fn inlet(&self, side: Side) -> &Inlet {
        match side {
            Side::Anode => &self.inlets.anode,
            Side::Cathode => &self.inlets.cathode,
        }
    }

    pub fn pressure(&self, side: Side, node: usize) -> f64 {
        match side {
            Side::Anode => self.profiles.p_an[node],
            Side::Cathode => self.profiles.p_ca[node],
        }
    }

    fn inlet_concentration(&self, side: Side, species: usize) -> f64 {
        let inlet = self.inlet(side);
        match species {
            0 => inlet.c_h2o,
            1 => inlet.c_reactant,
            _ => inlet.c_inert,
        }
    }
}

fn coupling_species(side: Side, species: usize, c: &CouplingFluxes) -> f64 {
    match (side, species) {
        (Side::Anode, 0) => c.an_h2o,
        (Side::Anode, _) => c.an_h2,
        (Side::Cathode, 0) => c.ca_h2o,
        (Side::Cathode, 1) => c.ca_o2,
        (Side::Cathode, _) => 0.0,
    }
}

fn coupling_liquid(side: Side, c: &CouplingFluxes) -> f64 {
    match side {
        Side::Anode => c.an_liquid,
        Side::Cathode => c.ca_liquid,
    }
}

/// Molar flux of species `j` across the face downstream of flow position `k`
/// [mol/(m^2 s)] per unit channel cross-section. The last face is the outlet.
#[inline]
pub(crate) fn face_flux(
    u: &[f64],
    ctx: &ChannelContext,
    side: Side,
    species: usize,
    k: usize,
    length: f64,
    dy: f64,
) -> f64 {
    let layout = side.layout();
    let n_y = ctx.widths.len();
    let var = layout.species[species].0;
    let a = layout.node(k, n_y);
    let v = u[index(a, layout.velocity)];
    let ca = u[index(a, var)];
    if k + 1 == n_y {
        return v * ca;
    }
    let b = layout.node(k + 1, n_y);
    let cb = u[index(b, var)];
    let upwind = if v >= 0.0 { ca } else { cb };
    v * upwind - ctx.face_d(side, species)[k] * (cb - ca) / (length * dy)
}

#[inline]
fn liquid_face_flux(u: &[f64], side: Side, k: usize, n_y: usize) -> f64 {
    let layout = side.layout();
    let a = layout.node(k, n_y);
    let v = u[index(a, layout.velocity)];
    if k + 1 == n_y || v >= 0.0 {
        v * u[index(a, layout.liquid)]
    } else {
        v * u[index(layout.node(k + 1, n_y), layout.liquid)]
    }
}

/// Channel rows of one side. Species rows get their conservative rate of
/// change [mol/(m^3 s)]; the closure species row holds the ideal-gas
/// closure; the velocity row holds the summed species balance; the liquid
/// row gets the saturation rate [1/s].
pub fn channel_residual(
    u: &[f64],
    side: Side,
    ctx: &ChannelContext,
    params: &ModelParameters,
    coupling: &[CouplingFluxes],
    out: &mut [f64],
) {
    let geom = &params.geometry;
    let layout = side.layout();
    let n_y = ctx.widths.len();
    let length = ctx.length(side, geom);
    let dy = geom.dy();
    let factor = geom.source_factor();
    let r = params.constants.gas_constant;
    let inlet = ctx.inlet(side);
    let n_species = layout.species.len();

    let mut flux_in = [0.0_f64; 3];
    for (j, f) in flux_in.iter_mut().enumerate().take(n_species) {
        *f = inlet.velocity * ctx.inlet_concentration(side, j);
    }
    let mut liquid_in = 0.0;

    for k in 0..n_y {
        let n = layout.node(k, n_y);
        let vol = length * ctx.widths[n];
        let mut total_rate = 0.0;
        let mut total_c = 0.0;
        for j in 0..n_species {
            let var = layout.species[j].0;
            let f_out = face_flux(u, ctx, side, j, k, length, dy);
            let rate = (flux_in[j] - f_out) / vol + factor * coupling_species(side, j, &coupling[n]);
            flux_in[j] = f_out;
            total_rate += rate;
            total_c += u[index(n, var)];
            if var != layout.closure {
                out[index(n, var)] = rate;
            }
        }
        let t = ctx.profiles.t[n];
        out[index(n, layout.closure)] = total_c - ctx.pressure(side, n) / (r * t);
        out[index(n, layout.velocity)] = total_rate;

        let l_out = liquid_face_flux(u, side, k, n_y);
        out[index(n, layout.liquid)] =
            (liquid_in - l_out) / vol + factor * params.materials.v_w * coupling_liquid(side, &coupling[n]);
        liquid_in = l_out;
    }
}

/// Finite-volume Ohm's law in the cathode plate. Current leaves through the
/// `y = 0` end; the `y = 1` end is insulated. Rows are in [A/m^2].
pub fn plate_residual(u: &[f64], i_cell: f64, geom: &CellGeometry, mat: &MaterialFunctions, out: &mut [f64]) {
    let n_y = geom.n_y;
    let dy = geom.dy();
    let g = mat.sigma_ch / (geom.l_ch_ca * geom.l_ch_ca * dy);
    for n in 0..n_y {
        let phi = u[index(n, Var::PhiCh)];
        // in-plane current toward +y on the faces around node n
        let right = if n + 1 < n_y { -g * (u[index(n + 1, Var::PhiCh)] - phi) } else { 0.0 };
        let left = if n > 0 { -g * (phi - u[index(n - 1, Var::PhiCh)]) } else { -i_cell };
        out[index(n, Var::PhiCh)] = right - left - u[index(n, Var::ILoc)] * geom.cell_width(n);
    }
}

/// Molar flow leaving the outlet of species `j` per unit cross-section.
pub fn outlet_flux(u: &[f64], ctx: &ChannelContext, side: Side, species: usize, geom: &CellGeometry) -> f64 {
    let n_y = ctx.widths.len();
    face_flux(u, ctx, side, species, n_y - 1, ctx.length(side, geom), geom.dy())
}

/// Liquid volume flow leaving the outlet per unit cross-section [m/s].
pub fn outlet_liquid_flux(u: &[f64], side: Side, n_y: usize) -> f64 {
    liquid_face_flux(u, side, n_y - 1, n_y)
}

/// Concentration of every species of `side` at `node`, in layout order.
pub fn node_concentrations(u: &[f64], side: Side, node: usize) -> impl Iterator<Item = f64> + '_ {
    side.layout().species.iter().map(move |(v, _)| u[index(node, *v)])
}
