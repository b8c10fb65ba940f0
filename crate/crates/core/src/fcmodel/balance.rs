//! Global conservation checks on a steady state.
//!
//! Channel flows are converted to molar flow per unit active area by the
//! factor `h_ch / (w L)`, so both channels and the production term share one
//! unit [mol/(m^2 s)].

use crate::fcmodel::channel::{outlet_flux, outlet_liquid_flux, Side};
use crate::fcmodel::model::CellModel;
use crate::fcmodel::state::index;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceReport {
    /// `|H2 in - H2 out - i_cell/2F| / H2 in`.
    pub hydrogen: f64,
    /// `|water in + i_cell/2F - water out| / (water in + i_cell/2F)`.
    pub water: f64,
    /// Largest `|Σc - p/RT| / (p/RT)` over nodes and both channels.
    pub ideal_gas: f64,
}

fn relative(err: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        err.abs() / scale
    } else {
        err.abs()
    }
}

pub fn balance_report(model: &CellModel, u: &[f64]) -> BalanceReport {
    let p = model.params();
    let geom = &p.geometry;
    let f = p.constants.faraday;
    let r = p.constants.gas_constant;
    let ctx = model.context();
    let oc = model.conditions();
    let n_y = model.n_y();
    let per_area = |side: Side| geom.h_ch / (geom.w * ctx.length(side, geom));
    let k_an = per_area(Side::Anode);
    let k_ca = per_area(Side::Cathode);
    let an = &ctx.inlets.anode;
    let ca = &ctx.inlets.cathode;
    let produced = oc.i_cell / (2.0 * f);

    let h2_in = k_an * an.velocity * an.c_reactant;
    let h2_out = k_an * outlet_flux(u, ctx, Side::Anode, 1, geom);
    let hydrogen = relative(h2_in - h2_out - produced, h2_in);

    let water_in = k_an * an.velocity * an.c_h2o + k_ca * ca.velocity * ca.c_h2o + produced;
    let v_w = p.materials.v_w;
    let water_out = k_an * (outlet_flux(u, ctx, Side::Anode, 0, geom) + outlet_liquid_flux(u, Side::Anode, n_y) / v_w)
        + k_ca * (outlet_flux(u, ctx, Side::Cathode, 0, geom) + outlet_liquid_flux(u, Side::Cathode, n_y) / v_w);
    let water = relative(water_in - water_out, water_in);

    let mut ideal_gas: f64 = 0.0;
    for side in [Side::Anode, Side::Cathode] {
        for n in 0..n_y {
            let c: f64 = side.layout().species.iter().map(|(v, _)| u[index(n, *v)]).sum();
            let target = ctx.pressure(side, n) / (r * ctx.profiles.t[n]);
            ideal_gas = ideal_gas.max(relative(c - target, target));
        }
    }
    BalanceReport { hydrogen, water, ideal_gas }
}
