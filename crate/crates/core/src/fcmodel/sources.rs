//! Local source terms: sorption, electrochemical kinetics, reaction rates and
//! phase change.

use crate::error::ModelError;
use crate::fcmodel::params::{CellGeometry, MaterialFunctions, PhysicalConstants, T_MAX, T_MIN};
use crate::math::{exp, tanh};

/// Exponent arguments of the Butler-Volmer branches are clamped to this bound.
pub const BV_EXPONENT_LIMIT: f64 = 50.0;

/// Equilibrium ionomer water content λ_eq(T, RH).
///
/// The isotherm is a cubic in water activity; above `RH = 1` it is extended
/// linearly with matched slope so its derivative stays continuous.
pub fn equilibrium_water_content(t: f64, rh: f64, mat: &MaterialFunctions) -> Result<f64, ModelError> {
    if !(T_MIN..=T_MAX).contains(&t) {
        return Err(ModelError::TemperatureOutOfRange { t });
    }
    Ok(mat.lambda_eq_unchecked(rh))
}

/// Ionomer adsorption source `k_ad / (h_cl V_m) (β λ_eq − λ)` [mol/(m^3 s)].
#[inline]
pub fn augmented_adsorption_source(
    lambda: f64,
    lambda_eq: f64,
    beta_aug: f64,
    geom: &CellGeometry,
    mat: &MaterialFunctions,
) -> f64 {
    mat.k_ad / (geom.h_cl * mat.v_m) * (beta_aug * lambda_eq - lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Electrode {
    Anode,
    Cathode,
}

/// Butler-Volmer result; `saturated` is set when an exponent hit the clamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinetics {
    pub j: f64,
    pub saturated: bool,
}

/// Butler-Volmer current as a function of the overpotential η for a given
/// exchange current density.
pub fn butler_volmer_eta(i0: f64, eta: f64, t: f64, mat: &MaterialFunctions, consts: &PhysicalConstants) -> Kinetics {
    let f_rt = consts.faraday / (consts.gas_constant * t);
    let beta = mat.beta_bv;
    let fwd = 2.0 * beta * f_rt * eta;
    let bwd = -2.0 * (1.0 - beta) * f_rt * eta;
    let saturated = fwd.abs() > BV_EXPONENT_LIMIT || bwd.abs() > BV_EXPONENT_LIMIT;
    let fwd = fwd.clamp(-BV_EXPONENT_LIMIT, BV_EXPONENT_LIMIT);
    let bwd = bwd.clamp(-BV_EXPONENT_LIMIT, BV_EXPONENT_LIMIT);
    Kinetics { j: i0 * (exp(fwd) - exp(bwd)), saturated }
}

/// Interfacial current density `j_cl` at one catalyst layer, with
/// `η = φ_e − φ_p − U(c, T)`. Positive at the anode.
pub fn butler_volmer(
    c_reactant: f64,
    t: f64,
    phi_e: f64,
    phi_p: f64,
    side: Electrode,
    mat: &MaterialFunctions,
    consts: &PhysicalConstants,
) -> Kinetics {
    let r = consts.gas_constant;
    let (i0, u) = match side {
        Electrode::Anode => (mat.i0_an(c_reactant, t, r), 0.0),
        Electrode::Cathode => (mat.i0_ca(c_reactant, t, r), mat.u_ca(c_reactant, t, consts)),
    };
    butler_volmer_eta(i0, phi_e - phi_p - u, t, mat, consts)
}

/// Volumetric reaction rates [mol/(m^3 s)] for the anode and cathode
/// interfacial current densities. `j_an > 0`, `j_ca < 0` in operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReactionRates {
    /// Hydrogen production rate in the anode CL (negative: consumption).
    pub r_h2: f64,
    /// Oxygen production rate in the cathode CL (negative: consumption).
    pub r_o2: f64,
    /// Water production rate in the cathode CL ionomer.
    pub r_h2o: f64,
}

pub fn reaction_rates(j_an: f64, j_ca: f64, geom: &CellGeometry, consts: &PhysicalConstants) -> ReactionRates {
    let f = consts.faraday;
    ReactionRates {
        r_h2: -geom.a * j_an / (2.0 * f),
        r_o2: geom.a * j_ca / (4.0 * f),
        r_h2o: -geom.a * j_ca / (2.0 * f),
    }
}

/// Saturation concentration `p_sat(T) / (R T)` [mol/m^3].
pub fn saturation_concentration(t: f64, mat: &MaterialFunctions, consts: &PhysicalConstants) -> f64 {
    mat.p_sat(t) / (consts.gas_constant * t)
}

/// Evaporation/condensation source `γ_ec (c − c_sat)` [mol/(m^3 s)],
/// positive when vapour condenses.
///
/// The evaporating and condensing rate constants are blended with a tanh of
/// width `ec_switch_width`; outside a few widths the blend is exact.
pub fn evap_cond_source(c_h2o: f64, t: f64, s: f64, mat: &MaterialFunctions, consts: &PhysicalConstants) -> f64 {
    let c_sat = saturation_concentration(t, mat, consts);
    let s_red = mat.reduced_saturation(s);
    let excess = c_h2o - c_sat;
    let w = 0.5 * (1.0 + tanh(excess / mat.ec_switch_width));
    let gamma = w * mat.gamma_c(t) * (1.0 - s_red) + (1.0 - w) * mat.gamma_e(t) * s_red;
    gamma * excess
}
