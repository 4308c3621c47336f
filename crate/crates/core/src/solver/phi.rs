//! Saddle-point form: `min_V max_{φ ∈ K^α} ⟨φ, BV⟩` subject to `AV = b`.

use super::engine::{preconditioners, ConeRows, Engine, LinearRows};
use super::{drive, CheckRecord, Measure, SolveStatus, SolverOptions};
use crate::error::{Error, Result};
use crate::grid::{assemble_divergence, assemble_pairing, ConstraintSystem, DualStack, FieldDemand, FieldStack, QuadGrid};
use crate::kalpha::{max_violation_gray, Alpha};
use crate::sparse::Csr;

#[derive(Clone, Debug)]
pub struct SaddleProblem {
    pub n_fields: usize,
    pub n_cells: usize,
    pub alpha: Alpha,
    pub gamma: f64,
    pub pairing: Csr,
    pub divergence: ConstraintSystem,
    engine: Engine,
}

impl SaddleProblem {
    pub fn new(grid: &QuadGrid, demands: &[FieldDemand], alpha: Alpha, opts: &SolverOptions) -> Result<Self> {
        if demands.is_empty() {
            return Err(Error::InvalidInput("at least one field is required".into()));
        }
        if !(0.0..=2.0).contains(&opts.gamma) {
            return Err(Error::InvalidInput(format!("gamma must lie in [0, 2], got {}", opts.gamma)));
        }
        let n = demands.len();
        let pairing = assemble_pairing(grid, n);
        let divergence = assemble_divergence(grid, demands)?;
        let k = pairing.vstack(&divergence.a);
        let (tau, sigma) = preconditioners(&k, opts.gamma, opts.step_ratio);
        let nb = pairing.rows;
        let cone = ConeRows::kalpha(
            pairing.clone(),
            sigma[..nb].to_vec(),
            n,
            alpha,
            opts.dykstra_tol,
            opts.dykstra_sweeps,
        );
        let lin = LinearRows::new(divergence.a.clone(), sigma[nb..].to_vec(), divergence.b.clone());
        Ok(SaddleProblem {
            n_fields: n,
            n_cells: grid.n_cells(),
            alpha,
            gamma: opts.gamma,
            pairing,
            divergence,
            engine: Engine::new(tau, Some(cone), lin, None),
        })
    }

    /// Same operators with a different right-hand side (another pairing of
    /// sources and sinks on the same grid).
    pub fn with_rhs(&self, b: Vec<f64>) -> Result<Self> {
        if b.len() != self.divergence.b.len() {
            return Err(Error::DimensionMismatch("right-hand side length".into()));
        }
        let mut p = self.clone();
        p.engine.lin.rhs = b.clone();
        p.divergence.b = b;
        Ok(p)
    }

    pub fn tau(&self) -> &[f64] {
        &self.engine.tau
    }

    /// Per-cell primal energy density when it has a closed form (one field,
    /// or `α = 1`), otherwise `⟨φ, Ṽ⟩` per unit area.
    pub fn cell_energy(&self, grid: &QuadGrid, v: &FieldStack, phi: &DualStack) -> Vec<f64> {
        let bv = self.pairing.apply(&v.values);
        let w = 2 * self.n_fields;
        (0..self.n_cells)
            .map(|k| {
                let blk = &bv[k * w..(k + 1) * w];
                let e = closed_form_support(blk, self.n_fields, self.alpha)
                    .unwrap_or_else(|| blk.iter().zip(phi.block(k)).map(|(a, b)| a * b).sum());
                e / grid.area(k)
            })
            .collect()
    }

    fn measure(&self, v: &[f64], phi: &[f64], lambda: &[f64]) -> Measure {
        let _ = lambda;
        let bv = self.pairing.apply(v);
        let pairing: f64 = bv.iter().zip(phi).map(|(a, b)| a * b).sum();
        let w = 2 * self.n_fields;
        let mut primal = 0.0;
        let mut exact = true;
        let mut slack = 0.0f64;
        for (blk, pb) in bv.chunks_exact(w).zip(phi.chunks_exact(w)) {
            match closed_form_support(blk, self.n_fields, self.alpha) {
                Some(e) => primal += e,
                None => exact = false,
            }
            slack = slack.max(max_violation_gray(pb, 2, self.n_fields, self.alpha).1);
        }
        Measure {
            energy: if exact { primal } else { pairing },
            pairing,
            feasibility: self.divergence.residual_inf(v),
            slack: slack.max(0.0),
        }
    }
}

/// `sup_{p ∈ K^α} ⟨p, x⟩` for one cell block when a closed form exists.
pub(crate) fn closed_form_support(block: &[f64], n: usize, alpha: Alpha) -> Option<f64> {
    if n == 1 {
        Some(block[0].hypot(block[1]))
    } else if alpha.value() == 1.0 {
        Some(block.chunks_exact(2).map(|c| c[0].hypot(c[1])).sum())
    } else {
        None
    }
}

/// Iterates of the saddle-point scheme.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub v: FieldStack,
    pub phi: DualStack,
    pub lambda: Vec<f64>,
    pub iter: usize,
    pub history: Vec<CheckRecord>,
    pub status: SolveStatus,
}

impl SolverState {
    pub fn zeros(prob: &SaddleProblem) -> Self {
        let n_dofs = prob.pairing.cols / prob.n_fields;
        SolverState {
            v: FieldStack::zeros(prob.n_fields, n_dofs),
            phi: DualStack::zeros(prob.n_fields, prob.n_cells),
            lambda: vec![0.0; prob.divergence.b.len()],
            iter: 0,
            history: Vec::new(),
            status: SolveStatus::MaxIterations,
        }
    }

    fn check(&self, prob: &SaddleProblem) -> Result<()> {
        if self.v.values.len() != prob.pairing.cols
            || self.phi.values.len() != prob.pairing.rows
            || self.lambda.len() != prob.divergence.b.len()
        {
            return Err(Error::DimensionMismatch("state does not match the problem".into()));
        }
        Ok(())
    }
}

/// One iteration of the scheme.
pub fn pd_step(state: &mut SolverState, prob: &mut SaddleProblem) {
    prob.engine
        .step(&mut state.v.values, &mut state.phi.values, &mut state.lambda);
    state.iter += 1;
}

/// Iterates from `init` (or zero) until the stopping rule fires.
pub fn solve_phi_path(prob: &SaddleProblem, opts: &SolverOptions, init: Option<SolverState>) -> Result<SolverState> {
    let mut state = init.unwrap_or_else(|| SolverState::zeros(prob));
    state.check(prob)?;
    let mut engine = prob.engine.clone();
    let SolverState {
        v,
        phi,
        lambda,
        iter,
        history,
        status,
    } = &mut state;
    *status = drive(
        &mut engine,
        &mut v.values,
        &mut phi.values,
        lambda,
        iter,
        history,
        opts,
        |x, yc, yl| prob.measure(x, yc, yl),
    )?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_terminal(m: u32) -> (QuadGrid, Vec<FieldDemand>) {
        let g = QuadGrid::build_uniform(m).unwrap();
        let d = vec![FieldDemand {
            source: [0.25, 0.5],
            sink: [0.75, 0.5],
        }];
        (g, d)
    }

    #[test]
    fn zero_rhs_is_a_fixed_point() {
        let (g, d) = two_terminal(8);
        let opts = SolverOptions::default();
        let prob = SaddleProblem::new(&g, &d, Alpha::STEINER, &opts).unwrap();
        let mut prob = prob.with_rhs(vec![0.0; prob.divergence.b.len()]).unwrap();
        let mut s = SolverState::zeros(&prob);
        for _ in 0..5 {
            pd_step(&mut s, &mut prob);
        }
        assert!(s.v.values.iter().chain(&s.phi.values).chain(&s.lambda).all(|&x| x == 0.0));
    }

    #[test]
    fn first_step_moves_only_lambda() {
        let (g, d) = two_terminal(8);
        let mut prob = SaddleProblem::new(&g, &d, Alpha::STEINER, &SolverOptions::default()).unwrap();
        let mut s = SolverState::zeros(&prob);
        pd_step(&mut s, &mut prob);
        assert!(s.v.values.iter().all(|&x| x == 0.0));
        assert!(s.phi.values.iter().all(|&x| x == 0.0));
        assert!(s.lambda.iter().any(|&x| x != 0.0));
    }

    #[test]
    fn horizontal_segment_energy() {
        let (g, d) = two_terminal(16);
        let mut opts = SolverOptions::default();
        opts.stop.max_iters = 20_000;
        let prob = SaddleProblem::new(&g, &d, Alpha::STEINER, &opts).unwrap();
        let s = solve_phi_path(&prob, &opts, None).unwrap();
        let last = s.history.last().unwrap();
        assert!((last.energy - 0.5).abs() < 0.01, "{last:?}");
    }
}
