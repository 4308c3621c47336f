//! First-order solvers for the discrete relaxation.
//!
//! Two formulations share one preconditioned primal-dual engine:
//! the saddle-point form with cell-wise duals `φ ∈ K^α` (the φ-path) and
//! the conic form over group variables `ψ_J` with block shrinkage (the
//! ψ-path). The permutation driver for free source/sink pairings sits on top.

mod engine;
mod phi;
mod psi;
mod report;
mod wgw;

use std::fmt;
use std::sync::Arc;

pub use phi::{pd_step, solve_phi_path, SaddleProblem, SolverState};
pub use psi::{solve_psi_path, PsiProblem, PsiState};
pub use report::{energy_report, EnergyReport, Solution};
pub use wgw::{
    who_goes_where, Assignment, SolvedState, PairingResult, PermutationEnergy, DEFAULT_PERMUTATION_CAP,
};

use crate::error::Result;
pub(crate) use engine::{preconditioners, ConeRows, ConeSet, Engine, LinearRows};
use engine::check_magnitude;

/// Which formulation to iterate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Method {
    /// Saddle point with cell duals projected onto `K^α`.
    Phi,
    /// Group variables with block shrinkage.
    #[default]
    Psi,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StoppingRule {
    /// Bound on the constraint residual `‖Av − b‖∞`.
    pub eps_feas: f64,
    /// Bound on the relative energy change over `window` iterations.
    pub eps_rel: f64,
    pub window: usize,
    pub max_iters: usize,
    pub check_every: usize,
    /// Any iterate entry above this magnitude aborts the solve.
    pub divergence_cap: f64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule {
            eps_feas: 1e-5,
            eps_rel: 1e-6,
            window: 500,
            max_iters: 300_000,
            check_every: 100,
            divergence_cap: 1e8,
        }
    }
}

/// Called once per check with the freshly appended record.
pub type ProgressFn = Arc<dyn Fn(&CheckRecord) + Send + Sync>;

#[derive(Clone)]
pub struct SolverOptions {
    pub gamma: f64,
    /// `ω` in `T/ω`, `Σω`: trades primal against dual step length.
    pub step_ratio: f64,
    pub stop: StoppingRule,
    /// Inner projection tolerance, scaled by `1 + ‖φ_cell‖`.
    pub dykstra_tol: f64,
    pub dykstra_sweeps: usize,
    pub progress: Option<ProgressFn>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            gamma: 0.6,
            step_ratio: 1.0,
            stop: StoppingRule::default(),
            dykstra_tol: 1e-8,
            dykstra_sweeps: 50,
            progress: None,
        }
    }
}

impl fmt::Debug for SolverOptions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolverOptions")
            .field("gamma", &self.gamma)
            .field("step_ratio", &self.step_ratio)
            .field("stop", &self.stop)
            .field("dykstra_tol", &self.dykstra_tol)
            .field("dykstra_sweeps", &self.dykstra_sweeps)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
}

/// One line of the progress log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckRecord {
    pub iter: usize,
    /// Primal objective (ψ-path) or primal energy of the fields (φ-path).
    pub energy: f64,
    /// `⟨φ, BV⟩`.
    pub pairing: f64,
    /// Largest constraint residual.
    pub feasibility: f64,
    /// φ-path: largest `K^α` violation of a cell dual. ψ-path: 0.
    pub slack: f64,
}

impl CheckRecord {
    pub fn gap(&self) -> f64 {
        relative_gap(self.energy, self.pairing)
    }

    pub const LOG_HEADER: &'static str = "iter energy pairing feasibility gap slack";

    pub fn log_line(&self) -> String {
        format!(
            "{} {:.9e} {:.9e} {:.3e} {:.3e} {:.3e}",
            self.iter,
            self.energy,
            self.pairing,
            self.feasibility,
            self.gap(),
            self.slack
        )
    }
}

pub(crate) fn relative_gap(primal: f64, dual: f64) -> f64 {
    let scale = primal.abs().max(dual.abs());
    if scale == 0.0 {
        0.0
    } else {
        (primal - dual).abs() / scale
    }
}

pub(crate) struct Measure {
    pub energy: f64,
    pub pairing: f64,
    pub feasibility: f64,
    pub slack: f64,
}

/// Runs the engine until the stopping rule fires, appending one record per
/// check to `history`.
pub(crate) fn drive(
    engine: &mut Engine,
    x: &mut [f64],
    y_cone: &mut [f64],
    y_lin: &mut [f64],
    iter: &mut usize,
    history: &mut Vec<CheckRecord>,
    opts: &SolverOptions,
    mut measure: impl FnMut(&[f64], &[f64], &[f64]) -> Measure,
) -> Result<SolveStatus> {
    let stop = &opts.stop;
    let every = stop.check_every.max(1);
    let start = *iter;
    while *iter - start < stop.max_iters {
        engine.step(x, y_cone, y_lin);
        *iter += 1;
        let last = *iter - start == stop.max_iters;
        if *iter % every != 0 && !last {
            continue;
        }
        check_magnitude(*iter, stop.divergence_cap, &[x, y_cone, y_lin])?;
        let m = measure(x, y_cone, y_lin);
        let rec = CheckRecord {
            iter: *iter,
            energy: m.energy,
            pairing: m.pairing,
            feasibility: m.feasibility,
            slack: m.slack,
        };
        history.push(rec);
        if let Some(p) = &opts.progress {
            p(&rec);
        }
        if rec.feasibility < stop.eps_feas {
            let target = iter.saturating_sub(stop.window);
            let old = history.iter().rev().find(|r| r.iter <= target && r.iter > start);
            if let Some(old) = old {
                if (rec.energy - old.energy).abs() <= stop.eps_rel * rec.energy.abs().max(1e-300) {
                    return Ok(SolveStatus::Converged);
                }
            }
        }
    }
    Ok(SolveStatus::MaxIterations)
}
