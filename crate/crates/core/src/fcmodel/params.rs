//! Physical constants, cell geometry, material correlations and operating
//! conditions. Every coefficient of every closure lives in these structs so a
//! single constants file reproduces a run.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::math::{exp, powf, smooth_floor, sqrt};

/// Lower/upper temperature bound of the correlation validity box [K].
pub const T_MIN: f64 = 273.0;
pub const T_MAX: f64 = 373.0;
/// Upper bound of the ionomer water content box.
pub const LAMBDA_MAX: f64 = 22.0;
/// Saturations are kept strictly below one.
pub const S_MAX: f64 = 0.99;
pub const RH_MAX: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicalConstants {
    /// Faraday constant [C/mol].
    pub faraday: f64,
    /// Universal gas constant [J/(mol K)].
    pub gas_constant: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { faraday: 96485.33, gas_constant: 8.314 }
    }
}

/// Channel and through-plane geometry.
///
/// The channel source factor is `w / h_ch` [1/m]: `w` is the ratio of active
/// area served by one channel to the channel's own width, so a flux leaving
/// the GDL per unit active area becomes a volumetric source in the channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellGeometry {
    /// Anode channel length [m].
    pub l_ch_an: f64,
    /// Cathode channel length [m].
    pub l_ch_ca: f64,
    /// Active-area to channel-width ratio [-].
    pub w: f64,
    /// Channel height [m].
    pub h_ch: f64,
    pub h_gdl: f64,
    pub h_cl: f64,
    pub h_mb: f64,
    /// Specific interfacial area of the catalyst layers [1/m].
    pub a: f64,
    /// GDL/CL porosity [-].
    pub eps_p: f64,
    /// Ionomer volume fraction of the catalyst layers [-].
    pub eps_i: f64,
    /// Number of channel nodes.
    pub n_y: usize,
}

impl Default for CellGeometry {
    fn default() -> Self {
        Self {
            l_ch_an: 0.18,
            l_ch_ca: 0.20,
            w: 2.0,
            h_ch: 5.0e-4,
            h_gdl: 1.5e-4,
            h_cl: 1.0e-5,
            h_mb: 1.5e-5,
            a: 2.0e7,
            eps_p: 0.6,
            eps_i: 0.3,
            n_y: 20,
        }
    }
}

impl CellGeometry {
    pub fn h_tot(&self) -> f64 {
        2.0 * self.h_gdl + 2.0 * self.h_cl + self.h_mb
    }

    /// `w / h_ch`, the GDL-flux to channel-source conversion [1/m].
    pub fn source_factor(&self) -> f64 {
        self.w / self.h_ch
    }

    /// Node spacing in the normalised channel coordinate.
    pub fn dy(&self) -> f64 {
        1.0 / (self.n_y - 1) as f64
    }

    /// Normalised node coordinates `y_n = n / (N_y - 1)`, both ends included.
    pub fn y_grid(&self) -> alloc::vec::Vec<f64> {
        let dy = self.dy();
        (0..self.n_y).map(|n| n as f64 * dy).collect()
    }

    /// Finite-volume width of node `n`: half cells at both channel ends.
    pub fn cell_width(&self, n: usize) -> f64 {
        if n == 0 || n + 1 == self.n_y {
            0.5 * self.dy()
        } else {
            self.dy()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let lengths = [
            ("l_ch_an", self.l_ch_an),
            ("l_ch_ca", self.l_ch_ca),
            ("w", self.w),
            ("h_ch", self.h_ch),
            ("h_gdl", self.h_gdl),
            ("h_cl", self.h_cl),
            ("h_mb", self.h_mb),
            ("a", self.a),
        ];
        for (name, v) in lengths {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::InvalidParameter { name, value: v });
            }
        }
        for (name, v) in [("eps_p", self.eps_p), ("eps_i", self.eps_i)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(ModelError::InvalidParameter { name, value: v });
            }
        }
        if self.n_y < 2 {
            return Err(ModelError::InvalidParameter { name: "n_y", value: self.n_y as f64 });
        }
        Ok(())
    }
}

/// Gas species carried in the channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gas {
    H2O,
    H2,
    O2,
    N2,
}

/// Transport, sorption and kinetic closures with all of their coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialFunctions {
    /// Equivalent dry-membrane volume [m^3/mol].
    pub v_m: f64,
    /// Liquid water molar volume [m^3/mol].
    pub v_w: f64,
    /// Ionomer adsorption/desorption rate [m/s].
    pub k_ad: f64,
    /// Electron conductivity of the porous layers [S/m].
    pub sigma_e: f64,
    /// In-plane sheet conductance of the cathode plate [S].
    pub sigma_ch: f64,
    /// Immobile liquid saturation [-].
    pub s_im: f64,
    /// Butler-Volmer symmetry factor [-].
    pub beta_bv: f64,

    /// Proton conductivity `(a λ + b) exp(E (1/T_ref - 1/T))` [S/m].
    pub sigma_p_slope: f64,
    pub sigma_p_offset: f64,
    pub sigma_p_activation: f64,
    pub sigma_p_t_ref: f64,
    pub sigma_p_floor: f64,

    /// Membrane water diffusivity `scale * poly(λ) * exp(E (1/T_ref - 1/T))`.
    pub d_lambda_scale: f64,
    pub d_lambda_poly: [f64; 4],
    pub d_lambda_activation: f64,
    pub d_lambda_t_ref: f64,

    /// Electro-osmotic drag `n_d = slope * λ`.
    pub drag_slope: f64,

    /// Sorption isotherm cubic in water activity, valid on `[0, 1]`.
    pub lambda_eq_poly: [f64; 4],

    /// Free-gas diffusivities at `gas_t_ref` [m^2/s], scaled `(T/T_ref)^1.75`.
    pub d_gas_h2o: f64,
    pub d_gas_h2: f64,
    pub d_gas_o2: f64,
    pub d_gas_n2: f64,
    pub gas_t_ref: f64,

    /// Capillary diffusivity `D_s = (κ/μ) s_red^3 σ cosθ sqrt(ε/κ) J'(s) + floor`.
    pub permeability: f64,
    pub liquid_viscosity: f64,
    pub surface_tension_cos: f64,
    pub leverett_dj: [f64; 3],
    pub d_s_floor: f64,

    /// Exchange current densities per unit interfacial area [A/m^2].
    pub i0_an_ref: f64,
    pub i0_ca_ref: f64,
    pub c_ref_h2: f64,
    pub c_ref_o2: f64,
    pub i0_an_order: f64,
    pub i0_ca_order: f64,
    pub e_act_an: f64,
    pub e_act_ca: f64,
    pub kinetics_t_ref: f64,

    /// Reversible cathode potential at `u_t_ref` and 1 atm oxygen [V].
    pub u0_ca: f64,
    pub du_dt_ca: f64,
    pub u_t_ref: f64,
    pub p_ref: f64,

    /// `log10(p_sat / bar)` cubic in Celsius.
    pub p_sat_log10_poly: [f64; 4],

    /// Evaporation and condensation rate constants at `gamma_t_ref` [1/s].
    pub gamma_e0: f64,
    pub gamma_c0: f64,
    pub gamma_t_ref: f64,
    /// Width of the smoothed evaporation/condensation switch [mol/m^3].
    pub ec_switch_width: f64,

    /// Smallest reactant concentration fed to the kinetics [mol/m^3].
    pub c_reactant_floor: f64,
}

impl Default for MaterialFunctions {
    fn default() -> Self {
        Self {
            v_m: 5.56e-4,
            v_w: 1.8e-5,
            k_ad: 1.0e-5,
            sigma_e: 1.0e3,
            sigma_ch: 4.0e4,
            s_im: 0.05,
            beta_bv: 0.5,
            sigma_p_slope: 0.5139,
            sigma_p_offset: -0.326,
            sigma_p_activation: 1268.0,
            sigma_p_t_ref: 303.0,
            sigma_p_floor: 0.01,
            d_lambda_scale: 1.0e-10,
            d_lambda_poly: [2.563, -0.33, 0.0264, -0.000671],
            d_lambda_activation: 2416.0,
            d_lambda_t_ref: 303.0,
            drag_slope: 2.5 / 22.0,
            lambda_eq_poly: [0.043, 17.81, -39.85, 36.0],
            d_gas_h2o: 3.0e-5,
            d_gas_h2: 1.1e-4,
            d_gas_o2: 2.6e-5,
            d_gas_n2: 2.6e-5,
            gas_t_ref: 353.15,
            permeability: 1.0e-12,
            liquid_viscosity: 3.5e-4,
            surface_tension_cos: 0.0625 * 0.26,
            leverett_dj: [1.417, -4.24, 3.789],
            d_s_floor: 1.0e-8,
            i0_an_ref: 10.0,
            i0_ca_ref: 1.0e-4,
            c_ref_h2: 40.0,
            c_ref_o2: 10.0,
            i0_an_order: 0.5,
            i0_ca_order: 1.0,
            e_act_an: 16.0e3,
            e_act_ca: 66.0e3,
            kinetics_t_ref: 353.15,
            u0_ca: 1.229,
            du_dt_ca: -8.456e-4,
            u_t_ref: 298.15,
            p_ref: 101325.0,
            p_sat_log10_poly: [-2.1794, 0.02953, -9.1837e-5, 1.4454e-7],
            gamma_e0: 1.0e5,
            gamma_c0: 1.0e5,
            gamma_t_ref: 353.15,
            ec_switch_width: 1.0e-3,
            c_reactant_floor: 1.0e-3,
        }
    }
}

fn cubic(c: &[f64; 4], x: f64) -> f64 {
    c[0] + x * (c[1] + x * (c[2] + x * c[3]))
}

fn cubic_slope(c: &[f64; 4], x: f64) -> f64 {
    c[1] + x * (2.0 * c[2] + x * 3.0 * c[3])
}

impl MaterialFunctions {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("v_m", self.v_m),
            ("v_w", self.v_w),
            ("k_ad", self.k_ad),
            ("sigma_e", self.sigma_e),
            ("sigma_ch", self.sigma_ch),
            ("sigma_p_floor", self.sigma_p_floor),
            ("d_lambda_scale", self.d_lambda_scale),
            ("permeability", self.permeability),
            ("liquid_viscosity", self.liquid_viscosity),
            ("d_s_floor", self.d_s_floor),
            ("i0_an_ref", self.i0_an_ref),
            ("i0_ca_ref", self.i0_ca_ref),
            ("gamma_e0", self.gamma_e0),
            ("gamma_c0", self.gamma_c0),
            ("ec_switch_width", self.ec_switch_width),
            ("c_reactant_floor", self.c_reactant_floor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ModelError::InvalidParameter { name, value: v });
            }
        }
        if !(self.beta_bv > 0.0 && self.beta_bv < 1.0) {
            return Err(ModelError::InvalidParameter { name: "beta_bv", value: self.beta_bv });
        }
        if !(0.0..1.0).contains(&self.s_im) {
            return Err(ModelError::InvalidParameter { name: "s_im", value: self.s_im });
        }
        Ok(())
    }

    /// Proton conductivity σ_p(λ, T) [S/m], floored to stay positive for dry ionomer.
    pub fn sigma_p(&self, lambda: f64, t: f64) -> f64 {
        let lambda = lambda.clamp(0.0, LAMBDA_MAX);
        let raw = self.sigma_p_slope * lambda + self.sigma_p_offset;
        let arrhenius = exp(self.sigma_p_activation * (1.0 / self.sigma_p_t_ref - 1.0 / t));
        smooth_floor(raw, self.sigma_p_floor, self.sigma_p_floor) * arrhenius
    }

    /// Membrane water diffusivity D_λ(λ, T) [m^2/s].
    pub fn d_lambda(&self, lambda: f64, t: f64) -> f64 {
        let lambda = lambda.clamp(0.0, LAMBDA_MAX);
        let arrhenius = exp(self.d_lambda_activation * (1.0 / self.d_lambda_t_ref - 1.0 / t));
        self.d_lambda_scale * cubic(&self.d_lambda_poly, lambda) * arrhenius
    }

    /// Electro-osmotic drag coefficient n_d(λ) [-].
    pub fn drag(&self, lambda: f64) -> f64 {
        self.drag_slope * lambda.clamp(0.0, LAMBDA_MAX)
    }

    /// Sorption isotherm; above saturation it continues linearly with the
    /// slope it has at `RH = 1`.
    pub fn lambda_eq_unchecked(&self, rh: f64) -> f64 {
        let c = &self.lambda_eq_poly;
        if rh <= 1.0 {
            cubic(c, rh.max(0.0))
        } else {
            cubic(c, 1.0) + cubic_slope(c, 1.0) * (rh - 1.0)
        }
    }

    /// Free-gas diffusivity of `gas` at temperature `t`.
    pub fn d_gas(&self, gas: Gas, t: f64) -> f64 {
        let d = match gas {
            Gas::H2O => self.d_gas_h2o,
            Gas::H2 => self.d_gas_h2,
            Gas::O2 => self.d_gas_o2,
            Gas::N2 => self.d_gas_n2,
        };
        d * powf(t / self.gas_t_ref, 1.75)
    }

    /// Effective porous-media diffusivity with Bruggeman porosity and liquid blockage.
    pub fn d_eff(&self, gas: Gas, s: f64, t: f64, eps_p: f64) -> f64 {
        let open = eps_p * (1.0 - s.clamp(0.0, S_MAX));
        self.d_gas(gas, t) * powf(open, 1.5)
    }

    pub fn reduced_saturation(&self, s: f64) -> f64 {
        ((s - self.s_im) / (1.0 - self.s_im)).max(0.0)
    }

    /// Capillary liquid diffusivity D_s(s, T) [m^2/s].
    pub fn d_s(&self, s: f64, _t: f64, eps_p: f64) -> f64 {
        let s = s.clamp(0.0, S_MAX);
        let s_red = self.reduced_saturation(s);
        let j = &self.leverett_dj;
        let dj = j[0] + s * (j[1] + s * j[2]);
        let dpc_ds = self.surface_tension_cos * sqrt(eps_p / self.permeability) * dj;
        self.permeability / self.liquid_viscosity * s_red * s_red * s_red * dpc_ds + self.d_s_floor
    }

    /// Saturation pressure p_sat(T) [Pa].
    pub fn p_sat(&self, t: f64) -> f64 {
        let celsius = t - 273.15;
        1.0e5 * powf(10.0, cubic(&self.p_sat_log10_poly, celsius))
    }

    pub fn gamma_e(&self, t: f64) -> f64 {
        self.gamma_e0 * sqrt(t / self.gamma_t_ref)
    }

    pub fn gamma_c(&self, t: f64) -> f64 {
        self.gamma_c0 * sqrt(t / self.gamma_t_ref)
    }

    /// Anode exchange current density per unit interfacial area [A/m^2].
    pub fn i0_an(&self, c_h2: f64, t: f64, r: f64) -> f64 {
        let c = c_h2.max(self.c_reactant_floor);
        self.i0_an_ref
            * powf(c / self.c_ref_h2, self.i0_an_order)
            * exp(-self.e_act_an / r * (1.0 / t - 1.0 / self.kinetics_t_ref))
    }

    /// Cathode exchange current density per unit interfacial area [A/m^2].
    pub fn i0_ca(&self, c_o2: f64, t: f64, r: f64) -> f64 {
        let c = c_o2.max(self.c_reactant_floor);
        self.i0_ca_ref
            * powf(c / self.c_ref_o2, self.i0_ca_order)
            * exp(-self.e_act_ca / r * (1.0 / t - 1.0 / self.kinetics_t_ref))
    }

    /// Reversible cathode potential U(c_O2, T) relative to the hydrogen electrode [V].
    pub fn u_ca(&self, c_o2: f64, t: f64, consts: &PhysicalConstants) -> f64 {
        let r = consts.gas_constant;
        let p_o2 = c_o2.max(self.c_reactant_floor) * r * t;
        self.u0_ca + self.du_dt_ca * (t - self.u_t_ref)
            + r * t / (4.0 * consts.faraday) * crate::math::ln(p_o2 / self.p_ref)
    }
}

/// One operating point of the cell. Counter-flow: the anode enters at
/// `y = 1`, the cathode at `y = 0`. `dp_an` and `dp_ca` are signed changes
/// from inlet to outlet (`p_an = p_in_an + dp_an (1 - y)`,
/// `p_ca = p_in_ca + dp_ca y`), so a pressure drop is negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatingConditions {
    pub case_id: u32,
    /// Coolant inlet temperature [K].
    pub t_in: f64,
    /// Coolant temperature rise [K].
    pub dt: f64,
    pub p_in_an: f64,
    pub dp_an: f64,
    pub p_in_ca: f64,
    pub dp_ca: f64,
    pub rh_an_in: f64,
    pub rh_ca_in: f64,
    pub stoich_an: f64,
    pub stoich_ca: f64,
    /// Mean current density [A/m^2].
    pub i_cell: f64,
}

impl OperatingConditions {
    pub fn nominal(case_id: u32) -> Self {
        Self {
            case_id,
            t_in: 343.15,
            dt: 5.0,
            p_in_an: 150.0e3,
            dp_an: -10.0e3,
            p_in_ca: 140.0e3,
            dp_ca: -10.0e3,
            rh_an_in: 0.6,
            rh_ca_in: 0.5,
            stoich_an: 1.5,
            stoich_ca: 2.0,
            i_cell: 8000.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let id = self.case_id;
        let bad = |name: &'static str, value: f64| ModelError::InvalidConditions { case_id: id, name, value };
        for (name, t) in [("t_in", self.t_in), ("t_in + dt", self.t_in + self.dt)] {
            if !(T_MIN..=T_MAX).contains(&t) {
                return Err(bad(name, t));
            }
        }
        for (name, p) in [
            ("p_in_an", self.p_in_an),
            ("p_in_ca", self.p_in_ca),
            ("p_in_an + dp_an", self.p_in_an + self.dp_an),
            ("p_in_ca + dp_ca", self.p_in_ca + self.dp_ca),
        ] {
            if !(p > 0.0 && p.is_finite()) {
                return Err(bad(name, p));
            }
        }
        for (name, rh) in [("rh_an_in", self.rh_an_in), ("rh_ca_in", self.rh_ca_in)] {
            if !(0.0..=RH_MAX).contains(&rh) {
                return Err(bad(name, rh));
            }
        }
        for (name, s) in [("stoich_an", self.stoich_an), ("stoich_ca", self.stoich_ca)] {
            if !(s >= 1.0 && s.is_finite()) {
                return Err(bad(name, s));
            }
        }
        if !(self.i_cell >= 0.0 && self.i_cell.is_finite()) {
            return Err(bad("i_cell", self.i_cell));
        }
        Ok(())
    }
}

/// Everything that stays fixed across solves of one model.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParameters {
    #[serde(default)]
    pub constants: PhysicalConstants,
    #[serde(default)]
    pub geometry: CellGeometry,
    #[serde(default)]
    pub materials: MaterialFunctions,
}

impl ModelParameters {
    pub fn validate(&self) -> Result<(), ModelError> {
        let c = &self.constants;
        if !(c.faraday > 0.0 && c.gas_constant > 0.0) {
            return Err(ModelError::InvalidParameter { name: "constants", value: c.faraday.min(c.gas_constant) });
        }
        self.geometry.validate()?;
        self.materials.validate()
    }
}
