use super::{PsiLayout, QuadGrid, BOTTOM, LEFT, RIGHT, TOP};
use crate::error::{Error, Result};
use crate::sparse::{Csr, CsrBuilder};

/// Unit mass routed from `source` to `sink` by one field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldDemand {
    pub source: [f64; 2],
    pub sink: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RowMeta {
    pub field: usize,
    pub cell: usize,
    /// Vector component for coupling rows; `None` for flux rows.
    pub component: Option<usize>,
}

/// Linear constraints `A x = b`.
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub a: Csr,
    pub b: Vec<f64>,
    pub row_meta: Vec<RowMeta>,
}

impl ConstraintSystem {
    /// `‖A x − b‖∞`
    pub fn residual_inf(&self, x: &[f64]) -> f64 {
        let ax = self.a.apply(&x[..self.a.cols]);
        ax.iter().zip(&self.b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

const BOUNDARY_MARGIN: f64 = 1e-12;

/// Cell indices of every terminal, checked for boundary contact and for
/// distinct points sharing a cell.
pub(crate) fn terminal_cells(grid: &QuadGrid, demands: &[FieldDemand]) -> Result<Vec<(usize, usize)>> {
    let mut seen: Vec<([f64; 2], usize)> = Vec::new();
    let mut locate = |p: [f64; 2]| -> Result<usize> {
        if p.iter().any(|&x| !(x > BOUNDARY_MARGIN && x < 1.0 - BOUNDARY_MARGIN)) {
            return Err(Error::TerminalOnBoundary { point: p });
        }
        let k = grid.locate(p).ok_or(Error::TerminalOnBoundary { point: p })?;
        for &(q, kq) in &seen {
            let same_point = (q[0] - p[0]).abs() < 1e-12 && (q[1] - p[1]).abs() < 1e-12;
            if kq == k && !same_point {
                return Err(Error::TerminalCollision { a: q, b: p });
            }
        }
        seen.push((p, k));
        Ok(k)
    };
    demands
        .iter()
        .map(|d| Ok((locate(d.source)?, locate(d.sink)?)))
        .collect()
}

/// Discrete flux balance per field and cell:
/// `F = h (V_right − V_left) + h (V_top − V_bottom)` equals `+1` in the
/// source cell, `−1` in the sink cell and `0` elsewhere. Rows are field-major
/// (`row = i * n_cells + cell`), columns follow [`FieldStack`](super::FieldStack).
pub fn assemble_divergence(grid: &QuadGrid, demands: &[FieldDemand]) -> Result<ConstraintSystem> {
    let cells = terminal_cells(grid, demands)?;
    let (nc, nd, nf) = (grid.n_cells(), grid.n_dofs(), demands.len());
    let mut builder = CsrBuilder::new(nf * nd);
    let mut b = vec![0.0; nf * nc];
    let mut meta = Vec::with_capacity(nf * nc);
    let mut row = Vec::with_capacity(4);
    for i in 0..nf {
        for k in 0..nc {
            let h = grid.h(k);
            let s = grid.sides(k);
            for (side, sign) in [(LEFT, -1.0), (RIGHT, 1.0), (BOTTOM, -1.0), (TOP, 1.0)] {
                if let Some(d) = s[side] {
                    row.push((i * nd + d as usize, sign * h));
                }
            }
            builder.push_row(&mut row);
            meta.push(RowMeta {
                field: i,
                cell: k,
                component: None,
            });
        }
        let (src, snk) = cells[i];
        b[i * nc + src] += 1.0;
        b[i * nc + snk] -= 1.0;
    }
    Ok(ConstraintSystem {
        a: builder.finish(),
        b,
        row_meta: meta,
    })
}

/// Pairing operator of the discrete energy: row `(cell * n + i) * 2 + d` holds
/// `area(cell) / 2` on the two faces of the cell carrying component `d`, so
/// `⟨φ, B V⟩ = Σ_cells area Σ_i ⟨φ_i, Ṽ_i⟩`.
pub fn assemble_pairing(grid: &QuadGrid, n_fields: usize) -> Csr {
    let (nc, nd) = (grid.n_cells(), grid.n_dofs());
    let mut builder = CsrBuilder::new(n_fields * nd);
    let mut row = Vec::with_capacity(2);
    for k in 0..nc {
        let w = 0.5 * grid.area(k);
        let s = grid.sides(k);
        for i in 0..n_fields {
            for pair in [[LEFT, RIGHT], [BOTTOM, TOP]] {
                for side in pair {
                    if let Some(d) = s[side] {
                        row.push((i * nd + d as usize, w));
                    }
                }
                builder.push_row(&mut row);
            }
        }
    }
    builder.finish()
}

/// Coupling between fields and group variables, scaled by cell area:
/// `area · (Ṽ_{i,d} − Σ_{J∋i} ψ_{J,d}) = 0` for every cell, field and
/// component. Columns are the field DOFs followed by the group variables
/// (two per `(cell, J)` in layout order). Rows use the pairing layout.
///
/// Fails when a terminal cell of field `i` has no active subset containing
/// `i`: the flux of that field could not leave the cell.
pub fn assemble_psi_coupling(
    grid: &QuadGrid,
    layout: &PsiLayout,
    demands: &[FieldDemand],
) -> Result<ConstraintSystem> {
    let (nc, nd, nf) = (grid.n_cells(), grid.n_dofs(), layout.n_fields);
    if layout.n_cells() != nc {
        return Err(Error::DimensionMismatch(format!(
            "layout has {} cells, grid has {nc}",
            layout.n_cells()
        )));
    }
    if !demands.is_empty() {
        for (i, (src, snk)) in terminal_cells(grid, demands)?.into_iter().enumerate() {
            for k in [src, snk] {
                if !layout.active(k).iter().any(|m| m.contains(i)) {
                    return Err(Error::InfeasibleLayout { cell: k, field: i });
                }
            }
        }
    }
    let nv = nf * nd;
    let mut builder = CsrBuilder::new(nv + 2 * layout.n_groups());
    let mut meta = Vec::with_capacity(2 * nf * nc);
    let mut row = Vec::new();
    for k in 0..nc {
        let area = grid.area(k);
        let s = grid.sides(k);
        let off = layout.offset(k);
        for i in 0..nf {
            for (comp, pair) in [[LEFT, RIGHT], [BOTTOM, TOP]].into_iter().enumerate() {
                for side in pair {
                    if let Some(d) = s[side] {
                        row.push((i * nd + d as usize, 0.5 * area));
                    }
                }
                for (g, m) in layout.active(k).iter().enumerate() {
                    if m.contains(i) {
                        row.push((nv + 2 * (off + g) + comp, -area));
                    }
                }
                builder.push_row(&mut row);
                meta.push(RowMeta {
                    field: i,
                    cell: k,
                    component: Some(comp),
                });
            }
        }
    }
    Ok(ConstraintSystem {
        b: vec![0.0; meta.len()],
        a: builder.finish(),
        row_meta: meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FieldStack;
    use crate::kalpha::SubsetMask;

    fn two_by_two_demand() -> Vec<FieldDemand> {
        vec![FieldDemand {
            source: [0.25, 0.25],
            sink: [0.75, 0.75],
        }]
    }

    #[test]
    fn divergence_rhs_on_two_by_two() {
        let g = QuadGrid::build_uniform(2).unwrap();
        let sys = assemble_divergence(&g, &two_by_two_demand()).unwrap();
        assert_eq!(sys.a.rows, 4);
        // cell order is z-order: (0,0), (1,0), (0,1), (1,1)
        assert_eq!(sys.b, vec![1.0, 0.0, 0.0, -1.0]);
        for r in 0..4 {
            assert!(sys.a.row(r).all(|(_, v)| (v.abs() - 0.5).abs() < 1e-15));
            assert!(sys.a.row(r).count() <= 4);
        }
    }

    #[test]
    fn constant_field_is_divergence_free_inside() {
        let g = QuadGrid::build_uniform(6).unwrap();
        let sys = assemble_divergence(&g, &two_by_two_demand()).unwrap();
        let v = vec![0.7; g.n_dofs()];
        let f = sys.a.apply(&v);
        for k in 0..g.n_cells() {
            let interior = g.sides(k).iter().all(|s| s.is_some());
            if interior {
                assert!(f[k].abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rows_of_a_field_sum_to_zero() {
        let g = QuadGrid::build_uniform(7).unwrap();
        let sys = assemble_divergence(&g, &two_by_two_demand()).unwrap();
        let v: Vec<f64> = (0..g.n_dofs()).map(|d| ((d * 37) % 11) as f64 - 5.0).collect();
        let total: f64 = sys.a.apply(&v).iter().sum();
        assert!(total.abs() < 1e-12);
        assert_eq!(sys.b.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn terminal_errors() {
        let g = QuadGrid::build_uniform(4).unwrap();
        let on_edge = [FieldDemand {
            source: [0.0, 0.5],
            sink: [0.5, 0.5],
        }];
        assert!(matches!(
            assemble_divergence(&g, &on_edge),
            Err(Error::TerminalOnBoundary { .. })
        ));
        let clash = [FieldDemand {
            source: [0.51, 0.51],
            sink: [0.52, 0.52],
        }];
        assert!(matches!(
            assemble_divergence(&g, &clash),
            Err(Error::TerminalCollision { .. })
        ));
    }

    #[test]
    fn pairing_of_row_band() {
        let m = 4;
        let g = QuadGrid::build_uniform(m).unwrap();
        let h = 1.0 / m as f64;
        let mut v = FieldStack::for_grid(&g, 1);
        // V_2 = 1 on all horizontal faces touching row j = 1 (interior faces only)
        for k in 0..g.n_cells() {
            if g.cell(k).j == 1 {
                for side in [BOTTOM, TOP] {
                    if let Some(d) = g.sides(k)[side] {
                        v.values[d as usize] = 1.0;
                    }
                }
            }
        }
        let bv = assemble_pairing(&g, 1).apply(&v.values);
        for k in 0..g.n_cells() {
            if g.cell(k).j == 1 {
                assert!((bv[2 * k] - 0.0).abs() < 1e-15);
                assert!((bv[2 * k + 1] - h * h).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn coupling_rows_for_two_fields() {
        let g = QuadGrid::build_uniform(2).unwrap();
        let layout = PsiLayout::full(2, g.n_cells());
        let sys = assemble_psi_coupling(&g, &layout, &[]).unwrap();
        let nv = 2 * g.n_dofs();
        assert_eq!(sys.a.rows, 2 * 2 * g.n_cells());
        // rows for cell 0: (field 0, x), (field 0, y), (field 1, x), (field 1, y)
        let psi_coeffs = |r: usize| -> Vec<f64> {
            let mut c = vec![0.0; 3];
            for (col, v) in sys.a.row(r) {
                if col >= nv {
                    c[(col - nv) / 2] = v / -0.25;
                }
            }
            c
        };
        assert_eq!(psi_coeffs(0), vec![1.0, 0.0, 1.0]);
        assert_eq!(psi_coeffs(2), vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn coupling_flags_unreachable_terminal() {
        let g = QuadGrid::build_uniform(4).unwrap();
        let mut lists = vec![vec![SubsetMask::singleton(0)]; g.n_cells()];
        let src = g.locate([0.3, 0.3]).unwrap();
        lists[src].clear();
        let layout = PsiLayout::new(1, lists).unwrap();
        let demands = [FieldDemand {
            source: [0.3, 0.3],
            sink: [0.8, 0.8],
        }];
        assert!(matches!(
            assemble_psi_coupling(&g, &layout, &demands),
            Err(Error::InfeasibleLayout { field: 0, .. })
        ));
    }
}
