//! Conic form: minimize `Σ_cells Σ_J area·|J|^α ‖ψ_J‖` subject to the flux
//! constraints on `V` and the coupling `Ṽ_i = Σ_{J∋i} ψ_J` in every cell.
//!
//! The coupling multipliers are the cell duals `φ` of the saddle form, since
//! the coupling rows are scaled by the cell area.

use super::engine::{preconditioners, Engine, GroupNorm, LinearRows};
use super::{drive, CheckRecord, Measure, SolveStatus, SolverOptions};
use crate::error::{Error, Result};
use crate::grid::{
    assemble_divergence, assemble_pairing, assemble_psi_coupling, ConstraintSystem, DualStack, FieldDemand,
    FieldStack, PsiLayout, PsiStack, QuadGrid,
};
use crate::kalpha::Alpha;
use crate::sparse::Csr;

#[derive(Clone, Debug)]
pub struct PsiProblem {
    pub n_fields: usize,
    pub n_cells: usize,
    pub alpha: Alpha,
    pub layout: PsiLayout,
    pub divergence: ConstraintSystem,
    pub coupling: ConstraintSystem,
    pub pairing: Csr,
    /// `area · |J|^α` per group variable, in layout order.
    pub weights: Vec<f64>,
    engine: Engine,
}

impl PsiProblem {
    pub fn new(
        grid: &QuadGrid,
        demands: &[FieldDemand],
        layout: PsiLayout,
        alpha: Alpha,
        opts: &SolverOptions,
    ) -> Result<Self> {
        if demands.is_empty() {
            return Err(Error::InvalidInput("at least one field is required".into()));
        }
        if layout.n_fields != demands.len() {
            return Err(Error::DimensionMismatch(format!(
                "layout has {} fields, instance has {}",
                layout.n_fields,
                demands.len()
            )));
        }
        if !(0.0..=2.0).contains(&opts.gamma) {
            return Err(Error::InvalidInput(format!("gamma must lie in [0, 2], got {}", opts.gamma)));
        }
        let divergence = assemble_divergence(grid, demands)?;
        let coupling = assemble_psi_coupling(grid, &layout, demands)?;
        let pairing = assemble_pairing(grid, demands.len());
        let nv = divergence.a.cols;
        let ncols = coupling.a.cols;
        let k = divergence.a.embed_columns(ncols, 0).vstack(&coupling.a);
        let (tau, sigma) = preconditioners(&k, opts.gamma, opts.step_ratio);
        let mut rhs = divergence.b.clone();
        rhs.extend_from_slice(&coupling.b);
        let mut weights = Vec::with_capacity(layout.n_groups());
        for c in 0..grid.n_cells() {
            let area = grid.area(c);
            weights.extend(layout.active(c).iter().map(|m| area * alpha.pow(m.cardinality())));
        }
        let lin = LinearRows::new(k, sigma, rhs);
        let groups = GroupNorm {
            start: nv,
            weights: weights.clone(),
        };
        Ok(PsiProblem {
            n_fields: demands.len(),
            n_cells: grid.n_cells(),
            alpha,
            layout,
            divergence,
            coupling,
            pairing,
            weights,
            engine: Engine::new(tau, None, lin, Some(groups)),
        })
    }

    pub fn with_rhs(&self, b: Vec<f64>) -> Result<Self> {
        if b.len() != self.divergence.b.len() {
            return Err(Error::DimensionMismatch("right-hand side length".into()));
        }
        let mut p = self.clone();
        p.engine.lin.rhs[..b.len()].copy_from_slice(&b);
        p.divergence.b = b;
        Ok(p)
    }

    fn n_v(&self) -> usize {
        self.divergence.a.cols
    }

    pub fn objective(&self, psi: &[f64]) -> f64 {
        psi.chunks_exact(2)
            .zip(&self.weights)
            .map(|(p, w)| w * p[0].hypot(p[1]))
            .sum()
    }

    /// `Σ_J |J|^α ‖ψ_J‖` per cell.
    pub fn cell_energy(&self, grid: &QuadGrid, psi: &PsiStack) -> Vec<f64> {
        (0..self.n_cells)
            .map(|k| {
                let off = self.layout.offset(k);
                let n = self.layout.active(k).len();
                let e: f64 = (off..off + n)
                    .map(|g| self.weights[g] * psi.values[2 * g].hypot(psi.values[2 * g + 1]))
                    .sum();
                e / grid.area(k)
            })
            .collect()
    }

    fn measure(&self, x: &[f64], y: &[f64]) -> Measure {
        let nv = self.n_v();
        let nrow = self.divergence.b.len();
        let (v, psi) = x.split_at(nv);
        let mu = &y[nrow..];
        let bv = self.pairing.apply(v);
        let pairing = bv.iter().zip(mu).map(|(a, b)| a * b).sum();
        let cx = self.coupling.residual_inf(x);
        Measure {
            energy: self.objective(psi),
            pairing,
            feasibility: self.divergence.residual_inf(v).max(cx),
            slack: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PsiState {
    pub v: FieldStack,
    pub psi: PsiStack,
    pub lambda: Vec<f64>,
    /// Coupling multipliers, laid out like the cell duals.
    pub phi: DualStack,
    pub iter: usize,
    pub history: Vec<CheckRecord>,
    pub status: SolveStatus,
}

impl PsiState {
    pub fn zeros(prob: &PsiProblem) -> Self {
        PsiState {
            v: FieldStack::zeros(prob.n_fields, prob.n_v() / prob.n_fields),
            psi: PsiStack::zeros(prob.layout.clone()),
            lambda: vec![0.0; prob.divergence.b.len()],
            phi: DualStack::zeros(prob.n_fields, prob.n_cells),
            iter: 0,
            history: Vec::new(),
            status: SolveStatus::MaxIterations,
        }
    }

    fn check(&self, prob: &PsiProblem) -> Result<()> {
        if self.v.values.len() != prob.n_v()
            || self.psi.layout != prob.layout
            || self.lambda.len() != prob.divergence.b.len()
            || self.phi.values.len() != prob.coupling.b.len()
        {
            return Err(Error::DimensionMismatch("state does not match the problem".into()));
        }
        Ok(())
    }
}

pub fn solve_psi_path(prob: &PsiProblem, opts: &SolverOptions, init: Option<PsiState>) -> Result<PsiState> {
    let mut state = init.unwrap_or_else(|| PsiState::zeros(prob));
    state.check(prob)?;
    let nv = prob.n_v();
    let nrow = prob.divergence.b.len();
    let mut x = state.v.values.clone();
    x.extend_from_slice(&state.psi.values);
    let mut y = state.lambda.clone();
    y.extend_from_slice(&state.phi.values);
    let mut engine = prob.engine.clone();
    let result = drive(
        &mut engine,
        &mut x,
        &mut [],
        &mut y,
        &mut state.iter,
        &mut state.history,
        opts,
        |x, _, y| prob.measure(x, y),
    );
    state.v.values.copy_from_slice(&x[..nv]);
    state.psi.values.copy_from_slice(&x[nv..]);
    state.lambda.copy_from_slice(&y[..nrow]);
    state.phi.values.copy_from_slice(&y[nrow..]);
    state.status = result?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizontal_segment_energy() {
        let g = QuadGrid::build_uniform(16).unwrap();
        let d = [FieldDemand {
            source: [0.25, 0.5],
            sink: [0.75, 0.5],
        }];
        let mut opts = SolverOptions::default();
        opts.stop.max_iters = 20_000;
        let prob = PsiProblem::new(&g, &d, PsiLayout::full(1, g.n_cells()), Alpha::STEINER, &opts).unwrap();
        let s = solve_psi_path(&prob, &opts, None).unwrap();
        let last = s.history.last().unwrap();
        assert!((last.energy - 0.5).abs() < 0.01, "{last:?}");
    }
}
