//! Reduced through-plane model at one channel node.
//!
//! Each catalyst layer is lumped into one control volume holding vapour,
//! ionomer water and liquid. The GDLs are pure diffusion resistances between
//! channel and catalyst layer, the membrane carries water by drag and by
//! diffusion on a linear λ profile, and the current closes through both
//! kinetic overpotentials in series with the ohmic drops. The anode plate is
//! the potential reference.

use crate::fcmodel::channel::CouplingFluxes;
use crate::fcmodel::params::{Gas, ModelParameters};
use crate::fcmodel::sources::{augmented_adsorption_source, butler_volmer_eta, evap_cond_source, reaction_rates};
use crate::fcmodel::state::Var;

/// Node-local inputs that do not depend on the unknowns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeConditions {
    pub t: f64,
    /// Augmentation multiplying λ_eq in both catalyst layers.
    pub beta_aug: f64,
}

/// Outputs besides the residual rows.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ThroughCellOutput {
    pub coupling: CouplingFluxes,
    /// Set when a Butler-Volmer exponent was clamped.
    pub kinetics_saturated: bool,
}

/// Reactant concentration at the catalyst layer after the GDL drop, with
/// `flux` the molar consumption per unit area.
#[inline]
fn behind_gdl(c_ch: f64, flux: f64, h_gdl: f64, d_eff: f64) -> f64 {
    c_ch - flux * h_gdl / d_eff
}

/// Through-cell residual rows at one node.
///
/// `u` is the node block (`NUM_VARS` values), `out` receives the rows of the
/// catalyst-layer vapour, ionomer, catalyst-layer liquid and electrical
/// unknowns except `PhiCh`. Differential rows hold rates per unit active
/// area [mol/(m^2 s)]; the algebraic rows are written so they vanish at
/// consistency.
pub fn through_cell_residual(
    u: &[f64],
    cond: &NodeConditions,
    params: &ModelParameters,
    out: &mut [f64],
) -> ThroughCellOutput {
    let geom = &params.geometry;
    let mat = &params.materials;
    let consts = &params.constants;
    let f = consts.faraday;
    let r = consts.gas_constant;
    let t = cond.t;
    let v = |var: Var| u[var.offset()];

    let i = v(Var::ILoc);
    let s_an = v(Var::SClAn);
    let s_ca = v(Var::SClCa);
    let c_cl_an = v(Var::CClAn);
    let c_cl_ca = v(Var::CClCa);
    let lam_an = v(Var::LambdaAn);
    let lam_ca = v(Var::LambdaCa);
    let lam_mb = v(Var::LambdaMb);
    let eta_an = v(Var::EtaAn);
    let eta_ca = v(Var::EtaCa);

    // vapour exchange with the channel through the GDL, positive into the CL
    let n_gdl_an = mat.d_eff(Gas::H2O, s_an, t, geom.eps_p) * (v(Var::CAnH2o) - c_cl_an) / geom.h_gdl;
    let n_gdl_ca = mat.d_eff(Gas::H2O, s_ca, t, geom.eps_p) * (v(Var::CCaH2o) - c_cl_ca) / geom.h_gdl;

    // kinetics with reactant depletion across the GDL
    let c_h2 = behind_gdl(v(Var::CAnH2), i / (2.0 * f), geom.h_gdl, mat.d_eff(Gas::H2, s_an, t, geom.eps_p));
    let c_o2 = behind_gdl(v(Var::CCaO2), i / (4.0 * f), geom.h_gdl, mat.d_eff(Gas::O2, s_ca, t, geom.eps_p));
    let k_an = butler_volmer_eta(mat.i0_an(c_h2, t, r), eta_an, t, mat, consts);
    let k_ca = butler_volmer_eta(mat.i0_ca(c_o2, t, r), eta_ca, t, mat, consts);
    let rates = reaction_rates(k_an.j, k_ca.j, geom, consts);

    // sorption
    let c_sat_rt = mat.p_sat(t) / (r * t);
    let lam_eq_an = mat.lambda_eq_unchecked(c_cl_an / c_sat_rt);
    let lam_eq_ca = mat.lambda_eq_unchecked(c_cl_ca / c_sat_rt);
    let ad_an = geom.h_cl * augmented_adsorption_source(lam_an, lam_eq_an, cond.beta_aug, geom, mat);
    let ad_ca = geom.h_cl * augmented_adsorption_source(lam_ca, lam_eq_ca, cond.beta_aug, geom, mat);

    // membrane water flux, anode to cathode; drag uses the upstream content
    let n_mb = mat.drag(lam_an) * i / f - mat.d_lambda(lam_mb, t) / mat.v_m * (lam_ca - lam_an) / geom.h_mb;

    // phase change and capillary liquid removal to the channel
    let ec_an = geom.h_cl * evap_cond_source(c_cl_an, t, s_an, mat, consts);
    let ec_ca = geom.h_cl * evap_cond_source(c_cl_ca, t, s_ca, mat, consts);
    let liq_an = mat.d_s(s_an, t, geom.eps_p) * (s_an - v(Var::SChAn)) / (mat.v_w * geom.h_gdl);
    let liq_ca = mat.d_s(s_ca, t, geom.eps_p) * (s_ca - v(Var::SChCa)) / (mat.v_w * geom.h_gdl);

    let produced = geom.h_cl * rates.r_h2o;
    let r_ohm = geom.h_mb / mat.sigma_p(lam_mb, t) + 2.0 * (geom.h_gdl + geom.h_cl) / mat.sigma_e;
    let u_ca = mat.u_ca(c_o2, t, consts);
    let ah = geom.a * geom.h_cl;

    out[Var::CClAn.offset()] = n_gdl_an - ad_an - ec_an;
    out[Var::CClCa.offset()] = n_gdl_ca - ad_ca - ec_ca;
    out[Var::LambdaAn.offset()] = ad_an - n_mb;
    out[Var::LambdaCa.offset()] = ad_ca + n_mb + produced;
    out[Var::LambdaMb.offset()] = lam_mb - 0.5 * (lam_an + lam_ca);
    out[Var::SClAn.offset()] = ec_an - liq_an;
    out[Var::SClCa.offset()] = ec_ca - liq_ca;
    out[Var::EtaAn.offset()] = ah * k_an.j - i;
    out[Var::EtaCa.offset()] = ah * k_ca.j + i;
    out[Var::ILoc.offset()] = v(Var::PhiCh) - (u_ca - eta_an + eta_ca - i * r_ohm);

    ThroughCellOutput {
        coupling: CouplingFluxes {
            an_h2o: -n_gdl_an,
            an_h2: geom.h_cl * rates.r_h2,
            an_liquid: liq_an,
            ca_h2o: -n_gdl_ca,
            ca_o2: geom.h_cl * rates.r_o2,
            ca_liquid: liq_ca,
        },
        kinetics_saturated: k_an.saturated || k_ca.saturated,
    }
}

/// Water stored per unit active area in the node's catalyst layers, per
/// unknown: the conserved quantity of each differential through-cell row.
pub fn through_cell_storage(u: &[f64], params: &ModelParameters, out: &mut [f64]) {
    let geom = &params.geometry;
    let mat = &params.materials;
    let gas = |s: f64| geom.eps_p * (1.0 - s) * geom.h_cl;
    out[Var::CClAn.offset()] = gas(u[Var::SClAn.offset()]) * u[Var::CClAn.offset()];
    out[Var::CClCa.offset()] = gas(u[Var::SClCa.offset()]) * u[Var::CClCa.offset()];
    let ionomer = geom.eps_i * geom.h_cl / mat.v_m;
    out[Var::LambdaAn.offset()] = ionomer * u[Var::LambdaAn.offset()];
    out[Var::LambdaCa.offset()] = ionomer * u[Var::LambdaCa.offset()];
    let liquid = geom.eps_p * geom.h_cl / mat.v_w;
    out[Var::SClAn.offset()] = liquid * u[Var::SClAn.offset()];
    out[Var::SClCa.offset()] = liquid * u[Var::SClCa.offset()];
}
