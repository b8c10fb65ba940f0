use alloc::vec;
use alloc::vec::Vec;

use super::system::DaeSystem;
use super::{SolverSettings, WorkCounters};
use crate::error::{ModelError, SolverError};
use crate::linalg::{Band, LuFactor, Matrix};

/// Relative finite-difference step for the colored Jacobian.
const FD_REL_STEP: f64 = 1.5e-8;
/// Iterations on one Jacobian before it is refreshed regardless.
const STALE_AFTER: usize = 3;
/// Smallest Newton damping factor tried before the step is declared failed.
const MIN_DAMPING: f64 = 1.0 / 64.0;

/// Finite-difference derivatives of the storage `M` and of the rates `F, G`.
#[derive(Debug, Clone)]
pub struct StepJacobian {
    pub storage: Matrix,
    pub rates: Matrix,
}

impl StepJacobian {
    /// Implicit-Euler iteration matrix `dM/du / dt - dF/du` on differential
    /// rows and `dG/du` on algebraic rows.
    pub fn iteration_matrix<S: DaeSystem + ?Sized>(&self, sys: &S, dt: f64) -> Matrix {
        let n = sys.dim();
        let band = sys.structure().band();
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            let lo = i.saturating_sub(band.lower);
            let hi = (i + band.upper + 1).min(n);
            if sys.is_differential(i) {
                for j in lo..hi {
                    a.set(i, j, self.storage.get(i, j) / dt - self.rates.get(i, j));
                }
            } else {
                for j in lo..hi {
                    a.set(i, j, self.rates.get(i, j));
                }
            }
        }
        a
    }
}

/// Jacobian parts and factorisation carried between Newton iterations and
/// time steps.
#[derive(Debug, Clone, Default)]
pub struct JacobianCache {
    parts: Option<StepJacobian>,
    lu: Option<(LuFactor, f64)>,
    /// Set when `parts` was evaluated at the current Newton iterate.
    fresh: bool,
}

impl JacobianCache {
    pub fn invalidate(&mut self) {
        self.parts = None;
        self.lu = None;
        self.fresh = false;
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub u: Vec<f64>,
    pub iterations: usize,
}

#[inline]
fn weight<S: DaeSystem + ?Sized>(sys: &S, i: usize, x: f64) -> f64 {
    x.abs().max(sys.typical(i))
}

fn fd_step<S: DaeSystem + ?Sized>(sys: &S, i: usize, x: f64) -> f64 {
    let h = FD_REL_STEP * weight(sys, i, x);
    // representable step
    (x + h) - x
}

/// Colored forward-difference Jacobian of storage and rates at `u`.
pub(crate) fn evaluate_parts<S: DaeSystem + ?Sized>(
    sys: &S,
    u: &[f64],
    work: &mut WorkCounters,
) -> Result<StepJacobian, ModelError> {
    let n = sys.dim();
    let st = sys.structure();
    let mut f0 = vec![0.0; n];
    let mut m0 = vec![0.0; n];
    sys.rates(u, &mut f0)?;
    sys.storage(u, &mut m0);
    let mut jf = Matrix::zeros(n, n);
    let mut jm = Matrix::zeros(n, n);
    let mut up = u.to_vec();
    let mut f1 = vec![0.0; n];
    let mut m1 = vec![0.0; n];
    let mut steps = vec![0.0; n];
    let mut cols = Vec::with_capacity(n);
    for color in 0..st.n_colors() {
        cols.clear();
        cols.extend((0..n).filter(|&j| st.color(j) == color));
        for &j in &cols {
            steps[j] = fd_step(sys, j, u[j]);
            up[j] = u[j] + steps[j];
        }
        sys.rates(&up, &mut f1)?;
        sys.storage(&up, &mut m1);
        work.residual_evaluations += 1;
        for &j in &cols {
            let h = steps[j];
            for i in st.rows_of(j) {
                jf.set(i, j, (f1[i] - f0[i]) / h);
                jm.set(i, j, (m1[i] - m0[i]) / h);
            }
            up[j] = u[j];
        }
    }
    work.jacobian_evaluations += 1;
    Ok(StepJacobian { storage: jm, rates: jf })
}

/// The colored Jacobian parts the Newton iteration uses, evaluated at `u`.
pub fn colored_jacobian<S: DaeSystem + ?Sized>(sys: &S, u: &[f64]) -> Result<StepJacobian, ModelError> {
    evaluate_parts(sys, u, &mut WorkCounters::default())
}

/// Plain dense forward-difference Jacobian of the implicit-Euler residual,
/// one column per evaluation, with step `1e-6 (1 + |u_j|)`. Used to check
/// the colored Jacobian.
pub fn fd_jacobian_dense<S: DaeSystem + ?Sized>(sys: &S, u: &[f64], u_old: &[f64], dt: f64) -> Result<Matrix, ModelError> {
    let n = sys.dim();
    let mut m_old = vec![0.0; n];
    sys.storage(u_old, &mut m_old);
    let mut r0 = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    step_residual(sys, u, &m_old, dt, &mut r0, &mut scratch)?;
    let mut j = Matrix::zeros(n, n);
    let mut up = u.to_vec();
    let mut r1 = vec![0.0; n];
    for c in 0..n {
        let h = 1.0e-6 * (1.0 + u[c].abs());
        up[c] = u[c] + h;
        step_residual(sys, &up, &m_old, dt, &mut r1, &mut scratch)?;
        for i in 0..n {
            j.set(i, c, (r1[i] - r0[i]) / h);
        }
        up[c] = u[c];
    }
    Ok(j)
}

/// Implicit-Euler residual `(M(u) - M_old)/dt - F(u)` on differential rows,
/// `G(u)` on algebraic rows. An infinite `dt` gives the steady residual.
pub(crate) fn step_residual<S: DaeSystem + ?Sized>(
    sys: &S,
    u: &[f64],
    m_old: &[f64],
    dt: f64,
    out: &mut [f64],
    scratch: &mut [f64],
) -> Result<usize, ModelError> {
    let warnings = sys.rates(u, out)?;
    sys.storage(u, scratch);
    for i in 0..out.len() {
        if sys.is_differential(i) {
            out[i] = (scratch[i] - m_old[i]) / dt - out[i];
        }
    }
    Ok(warnings)
}

fn factor<S: DaeSystem + ?Sized>(
    sys: &S,
    parts: &StepJacobian,
    dt: f64,
    band: Band,
    step: usize,
    work: &mut WorkCounters,
) -> Result<LuFactor, SolverError> {
    work.factorizations += 1;
    LuFactor::factor(parts.iteration_matrix(sys, dt), band).map_err(|source| SolverError::SingularJacobian { step, source })
}

fn refresh<S: DaeSystem + ?Sized>(
    sys: &S,
    u: &[f64],
    dt: f64,
    step: usize,
    cache: &mut JacobianCache,
    work: &mut WorkCounters,
) -> Result<(), SolverError> {
    let parts = evaluate_parts(sys, u, work)?;
    let lu = factor(sys, &parts, dt, sys.structure().band(), step, work)?;
    cache.parts = Some(parts);
    cache.lu = Some((lu, dt));
    cache.fresh = true;
    Ok(())
}

fn scaled_max<S: DaeSystem + ?Sized>(sys: &S, delta: &[f64], u: &[f64]) -> f64 {
    delta
        .iter()
        .zip(u)
        .enumerate()
        .fold(0.0_f64, |m, (i, (d, x))| m.max(d.abs() / weight(sys, i, *x)))
}

/// Drops the parts of a correction that would push an unknown sitting on
/// its bound further out, so an active bound does not stall convergence.
fn project<S: DaeSystem + ?Sized>(sys: &S, u: &[f64], delta: &mut [f64]) {
    for (i, d) in delta.iter_mut().enumerate() {
        let (lo, hi) = sys.bounds(i);
        let x = u[i] - *d;
        if x < lo || x > hi {
            let c = x.clamp(lo, hi);
            if (c - u[i]).abs() < (x - u[i]).abs() {
                *d = u[i] - c;
            }
        }
    }
}

/// One implicit-Euler step of size `dt` from `u_old`, solved with damped
/// Newton iterations. The Jacobian in `cache` is reused while it keeps the
/// iteration contracting and refreshed otherwise.
pub fn newton_step<S: DaeSystem + ?Sized>(
    sys: &S,
    u_old: &[f64],
    dt: f64,
    settings: &SolverSettings,
    step: usize,
    cache: &mut JacobianCache,
    work: &mut WorkCounters,
) -> Result<NewtonOutcome, SolverError> {
    let n = sys.dim();
    let band = sys.structure().band();
    let mut m_old = vec![0.0; n];
    sys.storage(u_old, &mut m_old);
    let mut scratch = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut u = u_old.to_vec();
    work.saturated_assemblies += step_residual(sys, &u, &m_old, dt, &mut r, &mut scratch)?.min(1);
    work.residual_evaluations += 1;

    cache.fresh = false;
    match &cache.parts {
        None => refresh(sys, &u, dt, step, cache, work)?,
        Some(parts) if cache.lu.as_ref().is_none_or(|(_, d)| *d != dt) => {
            let lu = factor(sys, parts, dt, band, step, work)?;
            cache.lu = Some((lu, dt));
        }
        Some(_) => {}
    }

    let mut prev_norm = f64::INFINITY;
    let mut age = 0;
    let mut trial = vec![0.0; n];
    let mut r_trial = vec![0.0; n];
    for iter in 1..=settings.newton_max_iter {
        work.newton_iterations += 1;
        let mut delta = cache.lu.as_ref().unwrap().0.solve(&r);
        project(sys, &u, &mut delta);
        let mut norm = scaled_max(sys, &delta, &u);
        let slow = (iter > 1 && norm > 0.5 * prev_norm) || age >= STALE_AFTER;
        if !cache.fresh && (slow || !norm.is_finite()) {
            refresh(sys, &u, dt, step, cache, work)?;
            age = 0;
            delta = cache.lu.as_ref().unwrap().0.solve(&r);
            project(sys, &u, &mut delta);
            norm = scaled_max(sys, &delta, &u);
        }
        if !norm.is_finite() {
            return Err(SolverError::NonConvergence { step, iterations: iter });
        }

        let mut lambda = delta
            .iter()
            .enumerate()
            .fold(1.0_f64, |l, (i, d)| l.min(sys.max_update(i) / d.abs()));
        loop {
            let mut clamped = 0;
            for i in 0..n {
                let (lo, hi) = sys.bounds(i);
                let x = u[i] - lambda * delta[i];
                let c = x.clamp(lo, hi);
                if c != x {
                    clamped += 1;
                }
                trial[i] = c;
            }
            work.residual_evaluations += 1;
            match step_residual(sys, &trial, &m_old, dt, &mut r_trial, &mut scratch) {
                Ok(w) => {
                    work.clamp_events += clamped;
                    work.saturated_assemblies += w.min(1);
                    break;
                }
                Err(_) if lambda > MIN_DAMPING => lambda *= 0.5,
                Err(e) => return Err(e.into()),
            }
        }
        core::mem::swap(&mut u, &mut trial);
        core::mem::swap(&mut r, &mut r_trial);
        if lambda == 1.0 && norm <= settings.newton_tol {
            return Ok(NewtonOutcome { u, iterations: iter });
        }
        if cache.fresh && iter > 3 && norm > 2.0 * prev_norm {
            return Err(SolverError::NonConvergence { step, iterations: iter });
        }
        cache.fresh = false;
        age += 1;
        prev_norm = norm;
    }
    Err(SolverError::NonConvergence { step, iterations: settings.newton_max_iter })
}
