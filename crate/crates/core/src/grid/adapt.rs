//! Subdivision and merging of quadtree leaves, and transfer of discrete data
//! between two grids over the same root cells.

use std::collections::{BTreeMap, HashSet};

use super::{Axis, CellAddr, FieldStack, PsiLayout, PsiStack, QuadGrid, BOTTOM, LEFT, RIGHT, TOP};
use crate::error::{Error, Result};

/// Splits every listed leaf into four children, then subdivides further
/// leaves until the grid is 2:1 balanced again. Repeated cells are split
/// once.
pub fn subdivide(grid: &QuadGrid, cells: &[CellAddr]) -> Result<QuadGrid> {
    let mut leaves: HashSet<CellAddr> = grid.cells().iter().copied().collect();
    let mut work = Vec::new();
    for &c in cells {
        if grid.index_of(c).is_none() {
            return Err(Error::InvalidInput(format!("{c:?} is not a leaf")));
        }
        if !leaves.remove(&c) {
            continue;
        }
        for child in c.children() {
            leaves.insert(child);
            work.push(child);
        }
    }
    rebalance(grid.base(), &mut leaves, work);
    QuadGrid::from_leaves(grid.base(), leaves.into_iter().collect())
}

/// Leaf of `leaves` containing `c` (an ancestor of `c` or `c` itself).
fn covering_leaf(leaves: &HashSet<CellAddr>, mut c: CellAddr) -> Option<CellAddr> {
    loop {
        if leaves.contains(&c) {
            return Some(c);
        }
        c = c.parent()?;
    }
}

fn rebalance(base: u32, leaves: &mut HashSet<CellAddr>, mut work: Vec<CellAddr>) {
    while let Some(c) = work.pop() {
        if !leaves.contains(&c) || c.level < 2 {
            continue;
        }
        let n = base as i64 * (1i64 << c.level);
        let (i, j) = (c.i as i64, c.j as i64);
        for (di, dj) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
            let (ni, nj) = (i + di, j + dj);
            if ni < 0 || nj < 0 || ni >= n || nj >= n {
                continue;
            }
            let probe = CellAddr::new(c.level, ni as u32, nj as u32);
            if let Some(cover) = covering_leaf(leaves, probe) {
                if cover.level + 1 < c.level {
                    leaves.remove(&cover);
                    for child in cover.children() {
                        leaves.insert(child);
                        work.push(child);
                    }
                    work.push(c);
                }
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MergeReport {
    pub merged: usize,
    /// Quadruples left alone because merging would break 2:1 balance.
    pub skipped: usize,
}

/// Replaces complete sibling quadruples by their father. The request must
/// consist of whole quadruples of leaves; quadruples whose father would
/// border a leaf two levels finer are skipped.
pub fn merge(grid: &QuadGrid, cells: &[CellAddr]) -> Result<(QuadGrid, MergeReport)> {
    let mut groups: BTreeMap<CellAddr, Vec<CellAddr>> = BTreeMap::new();
    for &c in cells {
        let parent = c.parent().ok_or(Error::NotSiblings)?;
        if grid.index_of(c).is_none() {
            return Err(Error::NotSiblings);
        }
        groups.entry(parent).or_default().push(c);
    }
    let mut report = MergeReport::default();
    let mut leaves: HashSet<CellAddr> = grid.cells().iter().copied().collect();
    for (parent, mut kids) in groups {
        kids.sort();
        kids.dedup();
        if kids.len() != 4 {
            return Err(Error::NotSiblings);
        }
        let finer_neighbor = kids.iter().any(|&kid| {
            let k = grid.index_of(kid).unwrap();
            grid.neighbors(k).iter().any(|&nb| grid.cell(nb).level > kid.level)
        });
        if finer_neighbor {
            report.skipped += 1;
            continue;
        }
        for kid in kids {
            leaves.remove(&kid);
        }
        leaves.insert(parent);
        report.merged += 1;
    }
    let g = QuadGrid::from_leaves(grid.base(), leaves.into_iter().collect())?;
    Ok((g, report))
}

/// Normal component of one old field at a lattice point of resolution `res`
/// lying on a line of the given axis. Inside a cell the component is
/// interpolated linearly between the two opposite faces.
fn sample_normal(grid: &QuadGrid, field: &[f64], axis: Axis, res: u8, line: u64, along: u64) -> f64 {
    let n = grid.base() as u64 * (1u64 << res);
    if line == 0 || line >= n {
        return 0.0;
    }
    let (x, y) = match axis {
        Axis::X => (line, along),
        Axis::Y => (along, line),
    };
    let Some(k) = grid.leaf_at(res, x, y) else {
        return 0.0;
    };
    let c = grid.cell(k);
    let size = 1u64 << (res - c.level);
    let s = grid.sides(k);
    let value = |side: usize| s[side].map_or(0.0, |d| field[d as usize]);
    let (lo, hi, start) = match axis {
        Axis::X => (value(LEFT), value(RIGHT), c.i as u64 * size),
        Axis::Y => (value(BOTTOM), value(TOP), c.j as u64 * size),
    };
    let t = (line - start) as f64 / size as f64;
    (1.0 - t) * lo + t * hi
}

/// Moves fields to a new grid over the same root cells: faces inside an
/// old face inherit its value, merged faces take the mean of their halves,
/// and faces created inside an old cell interpolate its opposite faces.
pub fn transfer_fields(old_grid: &QuadGrid, old: &FieldStack, new_grid: &QuadGrid) -> FieldStack {
    assert_eq!(old_grid.base(), new_grid.base(), "grids must share root cells");
    let res = old_grid.max_level().max(new_grid.max_level()) + 2;
    let mut out = FieldStack::for_grid(new_grid, old.n_fields);
    for d in 0..new_grid.n_dofs() {
        let f = new_grid.dof_key(d);
        let span = 1u64 << (res - f.level);
        let line = (match f.axis {
            Axis::X => f.i,
            Axis::Y => f.j,
        }) as u64
            * span;
        let start = (match f.axis {
            Axis::X => f.j,
            Axis::Y => f.i,
        }) as u64
            * span;
        let q1 = start + span / 4;
        let q3 = start + 3 * span / 4;
        for i in 0..old.n_fields {
            let src = old.field(i);
            let v = 0.5
                * (sample_normal(old_grid, src, f.axis, res, line, q1)
                    + sample_normal(old_grid, src, f.axis, res, line, q3));
            out.values[i * new_grid.n_dofs() + d] = v;
        }
    }
    out
}

/// Old leaves covering a new cell, with their area fraction of it.
pub(crate) fn covering(old_grid: &QuadGrid, c: CellAddr) -> Vec<(usize, f64)> {
    if let Some(k) = old_grid.index_of(c) {
        return vec![(k, 1.0)];
    }
    let mut a = c;
    while let Some(p) = a.parent() {
        if let Some(k) = old_grid.index_of(p) {
            return vec![(k, 1.0)];
        }
        a = p;
    }
    let mut out = Vec::new();
    let mut stack = c.children().to_vec();
    while let Some(x) = stack.pop() {
        if let Some(k) = old_grid.index_of(x) {
            out.push((k, 0.25f64.powi((x.level - c.level) as i32)));
        } else if x.level < old_grid.max_level() {
            stack.extend(x.children());
        }
    }
    out
}

/// Transfers per-cell blocks of `width` values: children copy their
/// father's block, merged cells take the area-weighted mean.
pub fn transfer_cell_values(old_grid: &QuadGrid, old: &[f64], width: usize, new_grid: &QuadGrid) -> Vec<f64> {
    let mut out = vec![0.0; width * new_grid.n_cells()];
    for k in 0..new_grid.n_cells() {
        let dst = &mut out[k * width..(k + 1) * width];
        for (ok, w) in covering(old_grid, new_grid.cell(k)) {
            for (o, v) in dst.iter_mut().zip(&old[ok * width..(ok + 1) * width]) {
                *o += w * v;
            }
        }
    }
    out
}

/// Transfers group variables into a new layout; subsets absent from the old
/// covering cells start at zero.
pub fn transfer_psi(old_grid: &QuadGrid, old: &PsiStack, new_grid: &QuadGrid, layout: PsiLayout) -> PsiStack {
    let mut out = PsiStack::zeros(layout);
    for k in 0..new_grid.n_cells() {
        let cover = covering(old_grid, new_grid.cell(k));
        let off = out.layout.offset(k);
        let active = out.layout.active(k).to_vec();
        for (g, m) in active.into_iter().enumerate() {
            let mut acc = [0.0; 2];
            for &(ok, w) in &cover {
                if let Some(pos) = old.layout.active(ok).iter().position(|x| *x == m) {
                    let v = old.get(ok, pos);
                    acc[0] += w * v[0];
                    acc[1] += w * v[1];
                }
            }
            out.values[2 * (off + g)] = acc[0];
            out.values[2 * (off + g) + 1] = acc[1];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{assemble_divergence, FieldDemand};

    #[test]
    fn subdivide_everything_gives_finer_uniform() {
        let g = QuadGrid::build_uniform(4).unwrap();
        let all: Vec<CellAddr> = g.cells().to_vec();
        let f = subdivide(&g, &all).unwrap();
        assert_eq!(f, QuadGrid::build_uniform(8).unwrap());
    }

    #[test]
    fn subdivide_rebalances() {
        let g = QuadGrid::build_uniform(4).unwrap();
        let c = CellAddr::new(2, 1, 1);
        let g1 = subdivide(&g, &[c]).unwrap();
        let deep = CellAddr::new(3, 3, 3);
        let g2 = subdivide(&g1, &[deep]).unwrap();
        assert!(g2.is_balanced());
        let g3 = subdivide(&g2, &[CellAddr::new(4, 7, 7)]).unwrap();
        assert!(g3.is_balanced());
        assert!((g3.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn subdivide_then_merge_round_trip() {
        let g = QuadGrid::build_uniform(4).unwrap();
        let c = CellAddr::new(2, 2, 1);
        let fine = subdivide(&g, &[c]).unwrap();
        let (back, rep) = merge(&fine, &c.children()).unwrap();
        assert_eq!(rep.merged, 1);
        assert_eq!(back, g);

        let mut v = FieldStack::for_grid(&g, 2);
        for (k, x) in v.values.iter_mut().enumerate() {
            *x = (k % 7) as f64 - 3.0;
        }
        let moved = transfer_fields(&fine, &transfer_fields(&g, &v, &fine), &back);
        assert_eq!(moved, v);
    }

    #[test]
    fn merge_rejects_non_siblings() {
        let g = QuadGrid::build_uniform(4).unwrap();
        let cells = [
            CellAddr::new(2, 1, 0),
            CellAddr::new(2, 2, 0),
            CellAddr::new(2, 1, 1),
            CellAddr::new(2, 2, 1),
        ];
        assert!(matches!(merge(&g, &cells), Err(Error::NotSiblings)));
        let g = QuadGrid::build_uniform(5).unwrap();
        assert!(matches!(merge(&g, &[CellAddr::new(0, 0, 0)]), Err(Error::NotSiblings)));
    }

    #[test]
    fn merge_skips_when_balance_would_break() {
        let g = QuadGrid::build_uniform(4).unwrap();
        let g = subdivide(&g, &[CellAddr::new(2, 1, 1)]).unwrap();
        let quad = CellAddr::new(1, 1, 1).children();
        let (_, rep) = merge(&g, &quad).unwrap();
        assert_eq!(rep.merged, 1);
        let kids = CellAddr::new(2, 1, 1).children();
        let (g2, _) = merge(&g, &kids).unwrap();
        assert_eq!(g2, QuadGrid::build_uniform(4).unwrap());
        let g3 = subdivide(&g, &[CellAddr::new(3, 3, 3)]).unwrap();
        let quad = CellAddr::new(1, 1, 1).children();
        let (_, rep) = merge(&g3, &quad).unwrap();
        assert_eq!(rep.skipped, 1);
    }

    #[test]
    fn transfer_keeps_flux_on_untouched_cells() {
        let g = QuadGrid::build_uniform(8).unwrap();
        let demand = [FieldDemand {
            source: [0.3, 0.3],
            sink: [0.7, 0.6],
        }];
        let mut v = FieldStack::for_grid(&g, 1);
        for (k, x) in v.values.iter_mut().enumerate() {
            *x = ((k * 13) % 5) as f64 * 0.3 - 0.4;
        }
        let marked = CellAddr::new(3, 2, 5);
        let fine = subdivide(&g, &[marked]).unwrap();
        let w = transfer_fields(&g, &v, &fine);
        let before = assemble_divergence(&g, &demand).unwrap().a.apply(&v.values);
        let after = assemble_divergence(&fine, &demand).unwrap().a.apply(&w.values);
        for k in 0..g.n_cells() {
            let c = g.cell(k);
            if let Some(k2) = fine.index_of(c) {
                assert!((before[k] - after[k2]).abs() < 1e-13, "{c:?}");
            }
        }
        // children split the father's flux evenly
        for child in marked.children() {
            let k2 = fine.index_of(child).unwrap();
            let k = g.index_of(marked).unwrap();
            assert!((after[k2] - before[k] / 4.0).abs() < 1e-13);
        }
    }

    #[test]
    fn cell_values_copy_and_average() {
        let g = QuadGrid::build_uniform(2).unwrap();
        let vals: Vec<f64> = (0..g.n_cells()).map(|k| k as f64).collect();
        let fine = subdivide(&g, &[CellAddr::new(1, 0, 0)]).unwrap();
        let moved = transfer_cell_values(&g, &vals, 1, &fine);
        let k00 = g.index_of(CellAddr::new(1, 0, 0)).unwrap();
        for child in CellAddr::new(1, 0, 0).children() {
            assert_eq!(moved[fine.index_of(child).unwrap()], vals[k00]);
        }
        let (back, _) = merge(&g, g.cells()).unwrap();
        let merged = transfer_cell_values(&g, &vals, 1, &back);
        assert_eq!(merged, vec![vals.iter().sum::<f64>() / 4.0]);
    }
}
