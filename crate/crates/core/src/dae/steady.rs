use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use super::newton::{newton_step, JacobianCache};
use super::system::{AugmentedCell, DaeSystem};
use super::{HistoryPoint, SolveReport, SolverSettings, WorkCounters};
use crate::error::SolverError;
use crate::fcmodel::channel::Side;
use crate::fcmodel::state::{index, CellState, Var};
use crate::fcmodel::CellModel;
use crate::math::asinh;

/// Starting state of a cold solve.
///
/// Channels hold the inlet composition with the inert (or hydrogen) closing
/// the ideal-gas law at the local pressure and temperature, every saturation
/// starts at the immobile value, and all three ionomer contents start at the
/// isotherm value for the inlet temperature and the mean inlet humidity.
/// The electrical unknowns start on the kinetic branch that carries the mean
/// current uniformly.
pub fn initial_condition(model: &CellModel) -> CellState {
    let p = model.params();
    let mat = &p.materials;
    let geom = &p.geometry;
    let consts = &p.constants;
    let oc = model.conditions();
    let ctx = model.context();
    let r = consts.gas_constant;
    let f = consts.faraday;
    let n_y = model.n_y();
    let an = ctx.inlets.anode;
    let ca = ctx.inlets.cathode;
    let lam0 = mat.lambda_eq_unchecked(0.5 * (oc.rh_an_in + oc.rh_ca_in));

    let mut s = CellState::from_values(n_y, vec![0.0; n_y * crate::fcmodel::NUM_VARS], 0.0);
    for n in 0..n_y {
        let t = ctx.profiles.t[n];
        let c_an = ctx.pressure(Side::Anode, n) / (r * t);
        let c_ca = ctx.pressure(Side::Cathode, n) / (r * t);
        s.set(n, Var::CAnH2o, an.c_h2o);
        s.set(n, Var::CAnH2, (c_an - an.c_h2o).max(0.0));
        s.set(n, Var::VAn, an.velocity);
        s.set(n, Var::CCaH2o, ca.c_h2o);
        s.set(n, Var::CCaO2, ca.c_reactant);
        s.set(n, Var::CCaN2, (c_ca - ca.c_h2o - ca.c_reactant).max(0.0));
        s.set(n, Var::VCa, ca.velocity);
        s.set(n, Var::CClAn, an.c_h2o);
        s.set(n, Var::CClCa, ca.c_h2o);
        for v in [Var::SChAn, Var::SChCa, Var::SClAn, Var::SClCa] {
            s.set(n, v, mat.s_im);
        }
        for v in [Var::LambdaAn, Var::LambdaCa, Var::LambdaMb] {
            s.set(n, v, lam0);
        }

        let i = oc.i_cell;
        let ah = geom.a * geom.h_cl;
        let rt_f = r * t / f;
        let i0_an = ah * mat.i0_an(s.get(n, Var::CAnH2), t, r);
        let i0_ca = ah * mat.i0_ca(ca.c_reactant, t, r);
        let eta_an = rt_f * asinh(i / (2.0 * i0_an));
        let eta_ca = -rt_f * asinh(i / (2.0 * i0_ca));
        let r_ohm = geom.h_mb / mat.sigma_p(lam0, t) + 2.0 * (geom.h_gdl + geom.h_cl) / mat.sigma_e;
        let phi = mat.u_ca(ca.c_reactant, t, consts) - eta_an + eta_ca - i * r_ohm;
        s.set(n, Var::EtaAn, eta_an);
        s.set(n, Var::EtaCa, eta_ca);
        s.set(n, Var::ILoc, i);
        s.set(n, Var::PhiCh, phi);
    }
    // the plate is close to equipotential
    let phi = (0..n_y).map(|n| s.get(n, Var::PhiCh) * geom.cell_width(n)).sum::<f64>();
    for n in 0..n_y {
        s.set(n, Var::PhiCh, phi);
    }
    s.v_cell = phi;
    s
}

fn weighted_rates<S: DaeSystem + ?Sized>(sys: &S, u: &[f64], u_old: &[f64], dt: f64, groups: &mut [f64]) -> f64 {
    groups.fill(0.0);
    let mut worst: f64 = 0.0;
    for i in 0..u.len() {
        let w = u_old[i].abs().max(sys.typical(i));
        let rate = (u[i] - u_old[i]).abs() / (dt * w);
        worst = worst.max(rate);
        let g = &mut groups[sys.group(i)];
        *g = g.max(rate);
    }
    worst
}

/// Integrates `sys` from `u0` until the weighted time derivative drops below
/// `steady_tol` or the horizon is reached. A warm start begins at `dt_max`.
pub fn solve_system<S: DaeSystem + ?Sized>(
    sys: &S,
    u0: Vec<f64>,
    warm: bool,
    settings: &SolverSettings,
) -> Result<(Vec<f64>, SolveReport), SolverError> {
    settings.validate()?;
    let names = sys.group_names();
    let mut report = SolveReport {
        converged: false,
        final_time: 0.0,
        final_rate: f64::INFINITY,
        steps_taken: 0,
        group_names: names.iter().map(|s| s.to_string()).collect(),
        residual_history: Vec::new(),
        work: WorkCounters::default(),
        wall_time: None,
    };
    let mut groups = vec![0.0; names.len()];
    let mut cache = JacobianCache::default();
    let mut u = u0;
    let mut t = 0.0;
    let mut dt = if warm { settings.dt_max } else { settings.dt_init };
    let mut halvings = 0;

    while t < settings.t_final {
        if report.steps_taken >= settings.max_steps {
            return Err(SolverError::StepLimit { case_id: sys.case_id(), steps: report.steps_taken, last_time: t });
        }
        let h = dt.min(settings.t_final - t);
        match newton_step(sys, &u, h, settings, report.steps_taken, &mut cache, &mut report.work) {
            Ok(out) => {
                let rate = weighted_rates(sys, &out.u, &u, h, &mut groups);
                t += h;
                report.steps_taken += 1;
                report.final_rate = rate;
                if settings.record_history {
                    report.residual_history.push(HistoryPoint { time: t, norms: groups.clone() });
                }
                u = out.u;
                halvings = 0;
                if rate < settings.steady_tol {
                    report.converged = true;
                    break;
                }
                if out.iterations <= settings.fast_newton_iters {
                    dt = (dt * settings.dt_growth).min(settings.dt_max);
                }
            }
            Err(_) => {
                report.work.rejected_steps += 1;
                cache.invalidate();
                halvings += 1;
                dt *= 0.5;
                if halvings > settings.max_halvings {
                    return Err(SolverError::SolverDiverged { case_id: sys.case_id(), last_time: t, halvings });
                }
            }
        }
    }
    report.final_time = t;
    Ok((u, report))
}

/// Steady state of the cell with augmentation field `beta` (`None` for the
/// unaugmented model), optionally warm-started from a previous state.
pub fn solve_steady(
    model: &CellModel,
    beta: Option<&[f64]>,
    settings: &SolverSettings,
    warm_start: Option<&CellState>,
) -> Result<(CellState, SolveReport), SolverError> {
    if let Some(b) = beta {
        model.check_field(b)?;
    }
    let sys = AugmentedCell { model, beta };
    let (u0, warm) = match warm_start {
        Some(s) if s.n_y() == model.n_y() => (s.values().to_vec(), true),
        _ => (initial_condition(model).into_values(), false),
    };
    let (u, report) = solve_system(&sys, u0, warm, settings)?;
    let v_cell = u[index(0, Var::PhiCh)];
    let state = CellState::from_values(model.n_y(), u, v_cell);
    if let Some((node, var, value)) = state.box_violation() {
        return Err(SolverError::OutsideValidity { case_id: model.conditions().case_id, node, var: var.name(), value });
    }
    Ok((state, report))
}

/// `n_steps` implicit-Euler steps of fixed size `dt` from `u0`.
pub fn integrate_fixed<S: DaeSystem + ?Sized>(
    sys: &S,
    u0: &[f64],
    dt: f64,
    n_steps: usize,
    settings: &SolverSettings,
) -> Result<Vec<f64>, SolverError> {
    let mut cache = JacobianCache::default();
    let mut work = WorkCounters::default();
    let mut u = u0.to_vec();
    for step in 0..n_steps {
        cache.invalidate();
        u = newton_step(sys, &u, dt, settings, step, &mut cache, &mut work)?.u;
    }
    Ok(u)
}
