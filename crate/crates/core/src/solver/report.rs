use super::phi::closed_form_support;
use super::{relative_gap, PsiProblem, PsiState, SaddleProblem, SolverState};
use crate::grid::QuadGrid;

/// A finished solve together with the problem it came from.
#[derive(Clone, Copy, Debug)]
pub enum Solution<'a> {
    Phi(&'a QuadGrid, &'a SaddleProblem, &'a SolverState),
    Psi(&'a QuadGrid, &'a PsiProblem, &'a PsiState),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    /// ψ-objective, or the closed-form primal energy of the fields on the
    /// φ-path (one field or `α = 1`).
    pub primal: Option<f64>,
    /// `⟨φ, BV⟩`.
    pub pairing: f64,
    /// `−⟨λ, b⟩`, the dual objective (a bound only at dual stationarity).
    pub dual_value: f64,
    pub feasibility: f64,
    /// Energy per unit area of every cell.
    pub density: Vec<f64>,
    /// Relative gap between `primal` and `pairing`.
    pub gap: Option<f64>,
}

impl EnergyReport {
    /// The energy a run reports: the primal value when known, the pairing
    /// otherwise.
    pub fn energy(&self) -> f64 {
        self.primal.unwrap_or(self.pairing)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn energy_report(sol: Solution<'_>) -> EnergyReport {
    match sol {
        Solution::Phi(grid, prob, st) => {
            let bv = prob.pairing.apply(&st.v.values);
            let pairing = dot(&bv, &st.phi.values);
            let w = 2 * prob.n_fields;
            let primal: Option<f64> = bv
                .chunks_exact(w)
                .map(|blk| closed_form_support(blk, prob.n_fields, prob.alpha))
                .sum();
            EnergyReport {
                primal,
                pairing,
                dual_value: -dot(&st.lambda, &prob.divergence.b),
                feasibility: prob.divergence.residual_inf(&st.v.values),
                density: prob.cell_energy(grid, &st.v, &st.phi),
                gap: primal.map(|p| relative_gap(p, pairing)),
            }
        }
        Solution::Psi(grid, prob, st) => {
            let primal = prob.objective(&st.psi.values);
            let pairing = dot(&prob.pairing.apply(&st.v.values), &st.phi.values);
            let mut x = st.v.values.clone();
            x.extend_from_slice(&st.psi.values);
            EnergyReport {
                primal: Some(primal),
                pairing,
                dual_value: -dot(&st.lambda, &prob.divergence.b),
                feasibility: prob.divergence.residual_inf(&st.v.values).max(prob.coupling.residual_inf(&x)),
                density: prob.cell_energy(grid, &st.psi),
                gap: Some(relative_gap(primal, pairing)),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{FieldDemand, PsiLayout};
    use crate::kalpha::Alpha;
    use crate::solver::SolverOptions;

    #[test]
    fn zero_state_reports_zeros() {
        let g = QuadGrid::build_uniform(4).unwrap();
        let d = [FieldDemand {
            source: [0.3, 0.3],
            sink: [0.7, 0.7],
        }];
        let opts = SolverOptions::default();
        let prob = SaddleProblem::new(&g, &d, Alpha::STEINER, &opts).unwrap();
        let st = SolverState::zeros(&prob);
        let r = energy_report(Solution::Phi(&g, &prob, &st));
        assert_eq!(r.primal, Some(0.0));
        assert_eq!(r.pairing, 0.0);
        assert_eq!(r.gap, Some(0.0));
        assert!(r.density.iter().all(|&x| x == 0.0));

        let prob = PsiProblem::new(&g, &d, PsiLayout::full(1, g.n_cells()), Alpha::STEINER, &opts).unwrap();
        let st = PsiState::zeros(&prob);
        let r = energy_report(Solution::Psi(&g, &prob, &st));
        assert_eq!(r.energy(), 0.0);
        assert_eq!(r.dual_value, 0.0);
    }
}
