//! Free source/sink pairing: solve one prescribed-pairing problem per
//! assignment of sinks to sources and keep the cheapest.

use std::collections::BTreeSet;

use rayon::prelude::*;

use super::{solve_phi_path, solve_psi_path, Method, SaddleProblem, SolveStatus, SolverOptions};
use super::{PsiProblem, PsiState, SolverState};
use crate::error::{Error, Result};
use crate::grid::{terminal_cells, FieldDemand, PsiLayout, QuadGrid};
use crate::kalpha::Alpha;

pub const DEFAULT_PERMUTATION_CAP: usize = 7;

/// `assignment[i]` is the sink index receiving the mass of source `i`.
pub type Assignment = Vec<usize>;

#[derive(Clone, Debug)]
pub struct PermutationEnergy {
    pub assignment: Assignment,
    pub energy: f64,
    pub status: SolveStatus,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub enum SolvedState {
    Phi(SolverState),
    Psi(PsiState),
}

#[derive(Clone, Debug)]
pub struct PairingResult {
    /// Index into `energies` of the cheapest assignment.
    pub best: usize,
    /// One entry per distinct assignment, in lexicographic order.
    pub energies: Vec<PermutationEnergy>,
    pub state: SolvedState,
}

impl PairingResult {
    pub fn best_assignment(&self) -> &Assignment {
        &self.energies[self.best].assignment
    }
}

/// All permutations of `0..m` in lexicographic order, keeping only the first
/// of those that send every source to the same sink points.
pub(crate) fn distinct_assignments(sinks: &[[f64; 2]]) -> Vec<Assignment> {
    let m = sinks.len();
    let mut perm: Vec<usize> = (0..m).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    loop {
        // canonical representative: the first sink index at the same point
        let canon: Vec<usize> = perm
            .iter()
            .map(|&s| (0..m).find(|&t| sinks[t] == sinks[s]).unwrap())
            .collect();
        if seen.insert(canon.clone()) {
            out.push(perm.clone());
        }
        // next lexicographic permutation
        let Some(i) = (0..m.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else {
            break;
        };
        let j = (i + 1..m).rev().find(|&j| perm[j] > perm[i]).unwrap();
        perm.swap(i, j);
        perm[i + 1..].reverse();
    }
    out
}

fn demands_for(sources: &[[f64; 2]], sinks: &[[f64; 2]], a: &Assignment) -> Vec<FieldDemand> {
    sources
        .iter()
        .zip(a)
        .map(|(&s, &t)| FieldDemand { source: s, sink: sinks[t] })
        .collect()
}

fn rhs_for(grid: &QuadGrid, demands: &[FieldDemand]) -> Result<Vec<f64>> {
    let nc = grid.n_cells();
    let mut b = vec![0.0; demands.len() * nc];
    for (i, (src, snk)) in terminal_cells(grid, demands)?.into_iter().enumerate() {
        b[i * nc + src] += 1.0;
        b[i * nc + snk] -= 1.0;
    }
    Ok(b)
}

/// Solves every distinct pairing on one grid (assembly is shared, only the
/// right-hand side changes) and returns the cheapest.
pub fn who_goes_where(
    grid: &QuadGrid,
    sources: &[[f64; 2]],
    sinks: &[[f64; 2]],
    alpha: Alpha,
    method: Method,
    opts: &SolverOptions,
    cap: usize,
) -> Result<PairingResult> {
    let m = sources.len();
    if m == 0 || m != sinks.len() {
        return Err(Error::InvalidInput(format!(
            "{m} sources and {} sinks: counts must match and be positive",
            sinks.len()
        )));
    }
    if m > cap {
        return Err(Error::CapExceeded {
            what: "permutation",
            got: m,
            cap,
        });
    }
    let assignments = distinct_assignments(sinks);
    let first = demands_for(sources, sinks, &assignments[0]);
    let solved: Vec<(PermutationEnergy, SolvedState)> = match method {
        Method::Psi => {
            let base = PsiProblem::new(grid, &first, PsiLayout::full(m, grid.n_cells()), alpha, opts)?;
            assignments
                .par_iter()
                .map(|a| {
                    let b = rhs_for(grid, &demands_for(sources, sinks, a))?;
                    let prob = base.with_rhs(b)?;
                    let st = solve_psi_path(&prob, opts, None)?;
                    let rec = st.history.last().copied();
                    Ok((
                        PermutationEnergy {
                            assignment: a.clone(),
                            energy: rec.map_or(0.0, |r| r.energy),
                            status: st.status,
                            iterations: st.iter,
                        },
                        SolvedState::Psi(st),
                    ))
                })
                .collect::<Result<_>>()?
        }
        Method::Phi => {
            let base = SaddleProblem::new(grid, &first, alpha, opts)?;
            assignments
                .par_iter()
                .map(|a| {
                    let b = rhs_for(grid, &demands_for(sources, sinks, a))?;
                    let prob = base.with_rhs(b)?;
                    let st = solve_phi_path(&prob, opts, None)?;
                    let rec = st.history.last().copied();
                    Ok((
                        PermutationEnergy {
                            assignment: a.clone(),
                            energy: rec.map_or(0.0, |r| r.energy),
                            status: st.status,
                            iterations: st.iter,
                        },
                        SolvedState::Phi(st),
                    ))
                })
                .collect::<Result<_>>()?
        }
    };
    let best = solved
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.energy.total_cmp(&b.1 .0.energy))
        .map(|(k, _)| k)
        .unwrap();
    let mut energies = Vec::with_capacity(solved.len());
    let mut best_state = None;
    for (k, (e, st)) in solved.into_iter().enumerate() {
        energies.push(e);
        if k == best {
            best_state = Some(st);
        }
    }
    Ok(PairingResult {
        best,
        energies,
        state: best_state.unwrap(),
    })
}
