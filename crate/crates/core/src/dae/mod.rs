//! Implicit-Euler integration of the semi-discrete cell model to steady
//! state, with damped Newton iterations on each step.

mod newton;
mod steady;
mod system;

pub use newton::{colored_jacobian, fd_jacobian_dense, newton_step, JacobianCache, NewtonOutcome, StepJacobian};
pub use steady::{initial_condition, integrate_fixed, solve_steady, solve_system};
pub use system::{AugmentedCell, BlockStructure, DaeSystem};

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    /// First step of a cold start [s].
    pub dt_init: f64,
    pub dt_max: f64,
    /// Integration horizon [s].
    pub t_final: f64,
    /// Newton stops when the weighted correction max-norm falls below this.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Steady when the weighted time-derivative max-norm falls below this [1/s].
    pub steady_tol: f64,
    pub dt_growth: f64,
    /// Steps finishing in at most this many Newton iterations may grow `dt`.
    pub fast_newton_iters: usize,
    /// Consecutive step halvings before giving up.
    pub max_halvings: usize,
    /// Accepted steps before giving up on reaching a steady state.
    pub max_steps: usize,
    pub record_history: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            dt_init: 1.0e-2,
            dt_max: 10.0,
            t_final: 1000.0,
            newton_tol: 1.0e-8,
            newton_max_iter: 20,
            steady_tol: 1.0e-8,
            dt_growth: 1.5,
            fast_newton_iters: 5,
            max_halvings: 10,
            max_steps: 1000,
            record_history: true,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), crate::error::ModelError> {
        use crate::error::ModelError::InvalidParameter;
        for (name, v) in [
            ("dt_init", self.dt_init),
            ("dt_max", self.dt_max),
            ("t_final", self.t_final),
            ("newton_tol", self.newton_tol),
            ("steady_tol", self.steady_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(InvalidParameter { name, value: v });
            }
        }
        if self.dt_init > self.dt_max {
            return Err(InvalidParameter { name: "dt_init", value: self.dt_init });
        }
        if !(self.dt_growth >= 1.0) {
            return Err(InvalidParameter { name: "dt_growth", value: self.dt_growth });
        }
        if self.newton_max_iter == 0 {
            return Err(InvalidParameter { name: "newton_max_iter", value: 0.0 });
        }
        if self.max_steps == 0 {
            return Err(InvalidParameter { name: "max_steps", value: 0.0 });
        }
        Ok(())
    }
}

/// Weighted time-derivative norms of each row group after one accepted step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryPoint {
    pub time: f64,
    pub norms: Vec<f64>,
}

/// Deterministic work counters; they stand in for wall time inside the
/// core crate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkCounters {
    pub residual_evaluations: usize,
    pub jacobian_evaluations: usize,
    pub factorizations: usize,
    pub newton_iterations: usize,
    pub rejected_steps: usize,
    /// Unknowns pushed back into their admissible box after a Newton update.
    pub clamp_events: usize,
    /// Assemblies in which a Butler-Volmer exponent was clamped.
    pub saturated_assemblies: usize,
}

impl WorkCounters {
    pub fn add(&mut self, other: &WorkCounters) {
        self.residual_evaluations += other.residual_evaluations;
        self.jacobian_evaluations += other.jacobian_evaluations;
        self.factorizations += other.factorizations;
        self.newton_iterations += other.newton_iterations;
        self.rejected_steps += other.rejected_steps;
        self.clamp_events += other.clamp_events;
        self.saturated_assemblies += other.saturated_assemblies;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub final_time: f64,
    /// Weighted time-derivative max-norm of the last accepted step [1/s].
    pub final_rate: f64,
    pub steps_taken: usize,
    pub group_names: Vec<String>,
    pub residual_history: Vec<HistoryPoint>,
    pub work: WorkCounters,
    /// Filled in by callers that can read a clock.
    pub wall_time: Option<f64>,
}

