//! Adaptive outer loop: solve, mark cells by energy concentration, subdivide
//! the used ones and merge the unused ones, restrict the group variables to
//! those that were active nearby, transfer the iterates, repeat.

use std::collections::{BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::grid::{
    covering, merge, subdivide, transfer_cell_values, transfer_fields, transfer_psi, CellAddr, DualStack,
    FieldDemand, FieldStack, PsiLayout, PsiStack, QuadGrid,
};
use crate::kalpha::{Alpha, SubsetMask};
use crate::solver::{
    energy_report, solve_phi_path, solve_psi_path, Method, PsiProblem, PsiState, SaddleProblem, Solution,
    SolveStatus, SolvedState, SolverOptions, SolverState,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefinePolicy {
    /// Cells with density at least this fraction of the maximum are used.
    pub used_threshold: f64,
    /// Cells with density at most this value are unused; also the floor
    /// below which a group variable counts as zero.
    pub unused_threshold: f64,
    pub max_rounds: usize,
    /// Neighbourhood, in rings of cells, searched by variable selection.
    pub selection_radius: usize,
    pub initial_size: u32,
}

impl Default for RefinePolicy {
    fn default() -> Self {
        RefinePolicy {
            used_threshold: 1e-2,
            unused_threshold: 1e-8,
            max_rounds: 5,
            selection_radius: 1,
            initial_size: 32,
        }
    }
}

impl RefinePolicy {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.used_threshold > 0.0 && self.used_threshold <= 1.0) {
            errs.push(format!("used_threshold must lie in (0, 1], got {}", self.used_threshold));
        }
        if !(self.unused_threshold > 0.0) {
            errs.push(format!("unused_threshold must be positive, got {}", self.unused_threshold));
        }
        if self.max_rounds > 12 {
            errs.push(format!("max_rounds must be at most 12, got {}", self.max_rounds));
        }
        if self.initial_size < 2 {
            errs.push(format!("initial grid size must be at least 2, got {}", self.initial_size));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Marking {
    pub used: Vec<usize>,
    pub unused: Vec<usize>,
}

/// Splits cells into used (density ≥ fraction of the maximum), unused
/// (density ≤ absolute floor) and neutral (neither).
pub fn mark_cells(density: &[f64], policy: &RefinePolicy) -> Marking {
    let max = density.iter().copied().fold(0.0, f64::max);
    let mut m = Marking::default();
    for (k, &d) in density.iter().enumerate() {
        if max > 0.0 && d >= policy.used_threshold * max {
            m.used.push(k);
        } else if d <= policy.unused_threshold {
            m.unused.push(k);
        }
    }
    m
}

/// Leaves meeting the square obtained by growing cell `k` by `radius` of its
/// own widths on every side.
pub fn neighborhood(grid: &QuadGrid, k: usize, radius: usize) -> Vec<usize> {
    let o = grid.origin(k);
    let h = grid.h(k);
    let r = radius as f64 * h;
    let (lo, hi) = ([o[0] - r, o[1] - r], [o[0] + h + r, o[1] + h + r]);
    let eps = 1e-12;
    let inside = |c: usize| {
        let (co, ch) = (grid.origin(c), grid.h(c));
        co[0] < hi[0] - eps && co[0] + ch > lo[0] + eps && co[1] < hi[1] - eps && co[1] + ch > lo[1] + eps
    };
    let mut seen: HashSet<usize> = HashSet::from([k]);
    let mut frontier = vec![k];
    let mut out = vec![k];
    while let Some(c) = frontier.pop() {
        for nb in grid.neighbors(c) {
            if inside(nb) && seen.insert(nb) {
                out.push(nb);
                frontier.push(nb);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Active subsets for the next solve on the same grid: the union of the
/// subsets whose group variable is nonzero anywhere in the neighbourhood.
pub fn select_variables(grid: &QuadGrid, psi: &PsiStack, policy: &RefinePolicy) -> Vec<Vec<SubsetMask>> {
    let live: Vec<Vec<SubsetMask>> = (0..grid.n_cells())
        .map(|k| {
            psi.cell_entries(k)
                .filter(|(_, v)| v[0].hypot(v[1]) > policy.unused_threshold)
                .map(|(m, _)| m)
                .collect()
        })
        .collect();
    (0..grid.n_cells())
        .map(|k| {
            let mut set = BTreeSet::new();
            for nb in neighborhood(grid, k, policy.selection_radius) {
                set.extend(live[nb].iter().copied());
            }
            // never drop a subset the cell already lacks: shrink only
            set.retain(|m| psi.layout.active(k).contains(m));
            set.into_iter().collect()
        })
        .collect()
}

/// Active subsets seeded from approximate fields: `J` is introduced in a
/// cell only if every field of `J` is nonzero somewhere in its
/// neighbourhood.
pub fn seed_from_fields(
    grid: &QuadGrid,
    fields: &FieldStack,
    floor: f64,
    radius: usize,
) -> Result<Vec<Vec<SubsetMask>>> {
    fields.check_grid(grid)?;
    let n = fields.n_fields;
    let nonzero: Vec<u32> = (0..grid.n_cells())
        .map(|k| {
            (0..n)
                .filter(|&i| {
                    let v = fields.cell_average(grid, k, i);
                    v[0].hypot(v[1]) > floor
                })
                .fold(0u32, |acc, i| acc | (1 << i))
        })
        .collect();
    Ok((0..grid.n_cells())
        .map(|k| {
            let bits = neighborhood(grid, k, radius).iter().fold(0u32, |acc, &c| acc | nonzero[c]);
            SubsetMask::all(n).filter(|m| m.bits() & !bits == 0).collect()
        })
        .collect())
}

/// Active lists carried to a new grid: a cell takes the union of the lists
/// of the old leaves covering it.
fn inherit_lists(old: &QuadGrid, lists: &[Vec<SubsetMask>], new: &QuadGrid) -> Vec<Vec<SubsetMask>> {
    (0..new.n_cells())
        .map(|k| {
            let mut set = BTreeSet::new();
            for (ok, _) in covering(old, new.cell(k)) {
                set.extend(lists[ok].iter().copied());
            }
            set.into_iter().collect()
        })
        .collect()
}

/// Makes sure every terminal cell offers a subset for each field that
/// starts or ends there.
fn ensure_terminal_subsets(grid: &QuadGrid, demands: &[FieldDemand], lists: &mut [Vec<SubsetMask>]) {
    for (i, d) in demands.iter().enumerate() {
        for p in [d.source, d.sink] {
            if let Some(k) = grid.locate(p) {
                if !lists[k].iter().any(|m| m.contains(i)) {
                    lists[k].push(SubsetMask::singleton(i));
                    lists[k].sort();
                }
            }
        }
    }
}

fn terminal_addrs(grid: &QuadGrid, demands: &[FieldDemand]) -> BTreeSet<CellAddr> {
    demands
        .iter()
        .flat_map(|d| [d.source, d.sink])
        .filter_map(|p| grid.locate(p))
        .map(|k| grid.cell(k))
        .collect()
}

/// New grid for the next round: used cells split, terminal cells brought
/// to the finest level, unused sibling quadruples merged.
pub fn adapt_grid(grid: &QuadGrid, marking: &Marking, demands: &[FieldDemand]) -> Result<QuadGrid> {
    let used: Vec<CellAddr> = marking.used.iter().map(|&k| grid.cell(k)).collect();
    let mut g = subdivide(grid, &used)?;
    loop {
        let coarse: Vec<CellAddr> = terminal_addrs(&g, demands)
            .into_iter()
            .filter(|c| c.level < g.max_level())
            .collect();
        if coarse.is_empty() {
            break;
        }
        g = subdivide(&g, &coarse)?;
    }
    let terminals = terminal_addrs(&g, demands);
    let unused: HashSet<CellAddr> = marking
        .unused
        .iter()
        .map(|&k| grid.cell(k))
        .filter(|c| g.index_of(*c).is_some() && !terminals.contains(c))
        .collect();
    let mut parents: BTreeSet<CellAddr> = BTreeSet::new();
    for c in &unused {
        if let Some(p) = c.parent() {
            if p.children().iter().all(|s| unused.contains(s)) {
                parents.insert(p);
            }
        }
    }
    if parents.is_empty() {
        return Ok(g);
    }
    let quads: Vec<CellAddr> = parents.iter().flat_map(|p| p.children()).collect();
    Ok(merge(&g, &quads)?.0)
}

/// Per-round summary.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub n_cells: usize,
    pub finest_h: f64,
    /// Group variables in the solve (zero on the φ-path).
    pub n_groups: usize,
    pub energy: f64,
    pub pairing: f64,
    pub feasibility: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    /// Energy of the transferred iterate on this round's grid, before
    /// solving (ψ-path, rounds after the first).
    pub transferred_energy: Option<f64>,
}

/// What the caller sees after every round, e.g. to write snapshot dumps.
pub struct RoundView<'a> {
    pub round: usize,
    pub grid: &'a QuadGrid,
    pub fields: &'a FieldStack,
    pub density: &'a [f64],
}

#[derive(Clone, Debug)]
pub struct RefineResult {
    pub grid: QuadGrid,
    pub state: SolvedState,
    pub density: Vec<f64>,
    pub rounds: Vec<RoundRecord>,
}

impl RefineResult {
    pub fn energy(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.energy)
    }

    pub fn fields(&self) -> &FieldStack {
        match &self.state {
            SolvedState::Phi(s) => &s.v,
            SolvedState::Psi(s) => &s.v,
        }
    }
}

/// Starting point of the loop: a grid and, for the ψ-path, the active lists.
#[derive(Clone, Debug)]
pub struct Seed {
    pub grid: QuadGrid,
    pub lists: Option<Vec<Vec<SubsetMask>>>,
}

fn field_major_to_cells(v: &[f64], n: usize, nc: usize) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for i in 0..n {
        for k in 0..nc {
            out[k * n + i] = v[i * nc + k];
        }
    }
    out
}

fn cells_to_field_major(v: &[f64], n: usize, nc: usize) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for i in 0..n {
        for k in 0..nc {
            out[i * nc + k] = v[k * n + i];
        }
    }
    out
}

fn transfer_lambda(old: &QuadGrid, lambda: &[f64], n: usize, new: &QuadGrid) -> Vec<f64> {
    let cells = field_major_to_cells(lambda, n, old.n_cells());
    let moved = transfer_cell_values(old, &cells, n, new);
    cells_to_field_major(&moved, n, new.n_cells())
}

/// Runs solve → mark → adapt → select → transfer for `policy.max_rounds`
/// refinement rounds (so `max_rounds + 1` solves).
pub fn refine_loop(
    demands: &[FieldDemand],
    alpha: Alpha,
    policy: &RefinePolicy,
    method: Method,
    opts: &SolverOptions,
    seed: Option<Seed>,
    mut on_round: impl FnMut(RoundView<'_>),
) -> Result<RefineResult> {
    policy.validate()?;
    let n = demands.len();
    let (mut grid, mut lists) = match seed {
        Some(s) => (s.grid, s.lists),
        None => (QuadGrid::build_uniform(policy.initial_size)?, None),
    };
    let mut rounds = Vec::new();
    let mut phi_state: Option<SolverState> = None;
    let mut psi_state: Option<PsiState> = None;
    let mut transferred_energy = None;
    for round in 0..=policy.max_rounds {
        let (density, record_base, state) = match method {
            Method::Psi => {
                let mut l = lists.take().unwrap_or_else(|| PsiLayout::full(n, grid.n_cells()).lists().to_vec());
                ensure_terminal_subsets(&grid, demands, &mut l);
                let layout = PsiLayout::new(n, l)?;
                let prob = PsiProblem::new(&grid, demands, layout, alpha, opts)?;
                let warm = psi_state.take();
                if let Some(w) = &warm {
                    transferred_energy = Some(prob.objective(&w.psi.values));
                }
                let st = solve_psi_path(&prob, opts, warm)?;
                let rep = energy_report(Solution::Psi(&grid, &prob, &st));
                let n_groups = prob.layout.n_groups();
                (rep.density.clone(), (rep, n_groups), SolvedState::Psi(st))
            }
            Method::Phi => {
                let prob = SaddleProblem::new(&grid, demands, alpha, opts)?;
                let st = solve_phi_path(&prob, opts, phi_state.take())?;
                let rep = energy_report(Solution::Phi(&grid, &prob, &st));
                (rep.density.clone(), (rep, 0), SolvedState::Phi(st))
            }
        };
        let (rep, n_groups) = record_base;
        let (iterations, status) = match &state {
            SolvedState::Phi(s) => (s.iter, s.status),
            SolvedState::Psi(s) => (s.iter, s.status),
        };
        rounds.push(RoundRecord {
            round,
            n_cells: grid.n_cells(),
            finest_h: grid.finest_h(),
            n_groups,
            energy: rep.energy(),
            pairing: rep.pairing,
            feasibility: rep.feasibility,
            iterations,
            status,
            transferred_energy: transferred_energy.take(),
        });
        let fields = match &state {
            SolvedState::Phi(s) => &s.v,
            SolvedState::Psi(s) => &s.v,
        };
        on_round(RoundView {
            round,
            grid: &grid,
            fields,
            density: &density,
        });
        if round == policy.max_rounds {
            return Ok(RefineResult {
                grid,
                state,
                density,
                rounds,
            });
        }
        let marking = mark_cells(&density, policy);
        if marking.used.is_empty() {
            return Err(Error::Degenerate(format!("no used cells after round {round}")));
        }
        let new_grid = adapt_grid(&grid, &marking, demands)?;
        match state {
            SolvedState::Psi(st) => {
                let selected = select_variables(&grid, &st.psi, policy);
                let mut next = inherit_lists(&grid, &selected, &new_grid);
                ensure_terminal_subsets(&new_grid, demands, &mut next);
                let layout = PsiLayout::new(n, next.clone())?;
                let psi = transfer_psi(&grid, &st.psi, &new_grid, layout);
                let phi_vals = transfer_cell_values(&grid, &st.phi.values, 2 * n, &new_grid);
                psi_state = Some(PsiState {
                    v: transfer_fields(&grid, &st.v, &new_grid),
                    psi,
                    lambda: transfer_lambda(&grid, &st.lambda, n, &new_grid),
                    phi: DualStack {
                        n_fields: n,
                        n_cells: new_grid.n_cells(),
                        values: phi_vals,
                    },
                    iter: st.iter,
                    history: st.history,
                    status: st.status,
                });
                lists = Some(next);
            }
            SolvedState::Phi(st) => {
                let phi_vals = transfer_cell_values(&grid, &st.phi.values, 2 * n, &new_grid);
                phi_state = Some(SolverState {
                    v: transfer_fields(&grid, &st.v, &new_grid),
                    phi: DualStack {
                        n_fields: n,
                        n_cells: new_grid.n_cells(),
                        values: phi_vals,
                    },
                    lambda: transfer_lambda(&grid, &st.lambda, n, &new_grid),
                    iter: st.iter,
                    history: st.history,
                    status: st.status,
                });
            }
        }
        grid = new_grid;
    }
    unreachable!("the last round returns")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marking_examples() {
        let p = RefinePolicy::default();
        let m = mark_cells(&[0.0; 4], &p);
        assert!(m.used.is_empty());
        assert_eq!(m.unused, vec![0, 1, 2, 3]);
        let m = mark_cells(&[0.0, 5.0, 0.0, 1e-3], &p);
        assert_eq!(m.used, vec![1]);
        assert_eq!(m.unused, vec![0, 2]);
    }

    #[test]
    fn neighborhood_is_one_ring() {
        let g = QuadGrid::build_uniform(8).unwrap();
        let k = g.index_of(CellAddr::new(3, 4, 4)).unwrap();
        assert_eq!(neighborhood(&g, k, 1).len(), 9);
        let corner = g.index_of(CellAddr::new(3, 0, 0)).unwrap();
        assert_eq!(neighborhood(&g, corner, 1).len(), 4);
        assert_eq!(neighborhood(&g, k, 0), vec![k]);
    }

    #[test]
    fn single_field_selection_is_trivial() {
        let g = QuadGrid::build_uniform(4).unwrap();
        let mut psi = PsiStack::zeros(PsiLayout::full(1, g.n_cells()));
        psi.values.iter_mut().for_each(|v| *v = 1.0);
        let sel = select_variables(&g, &psi, &RefinePolicy::default());
        assert!(sel.iter().all(|l| l == &vec![SubsetMask::singleton(0)]));
    }

    #[test]
    fn seeding_requires_every_field_nearby() {
        let g = QuadGrid::build_uniform(8).unwrap();
        let mut v = FieldStack::for_grid(&g, 2);
        // field 0 on the left column of faces, field 1 everywhere
        for d in 0..g.n_dofs() {
            let (mid, _) = g.dof_geometry(d);
            if mid[0] < 0.3 {
                v.field_mut(0)[d] = 1.0;
            }
            v.field_mut(1)[d] = 1.0;
        }
        let lists = seed_from_fields(&g, &v, 1e-8, 1).unwrap();
        let left = g.index_of(CellAddr::new(3, 0, 3)).unwrap();
        let right = g.index_of(CellAddr::new(3, 7, 3)).unwrap();
        assert_eq!(lists[left].len(), 3);
        assert_eq!(lists[right], vec![SubsetMask::singleton(1)]);
    }

    #[test]
    fn adapt_keeps_terminals_finest() {
        let g = QuadGrid::build_uniform(8).unwrap();
        let d = [FieldDemand {
            source: [0.3, 0.3],
            sink: [0.7, 0.7],
        }];
        let k = g.locate([0.5, 0.5]).unwrap();
        let marking = Marking {
            used: vec![k],
            unused: (0..g.n_cells()).filter(|&c| c != k).collect(),
        };
        let ng = adapt_grid(&g, &marking, &d).unwrap();
        assert!(ng.is_balanced());
        for p in [d[0].source, d[0].sink] {
            assert_eq!(ng.cell(ng.locate(p).unwrap()).level, ng.max_level());
        }
        assert!(ng.n_cells() <= 4 * marking.used.len() + g.n_cells() + 16);
    }
}
