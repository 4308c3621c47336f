//! Numerical calibration certificate for a discrete dual field.
//!
//! A dual `φ` calibrates a field `V` when it is `K^α`-valued, curl-free and
//! attains the energy through the pairing `⟨φ, BV⟩`. On a grid each of the
//! three conditions holds only approximately, so the report carries the
//! three residuals and certifies when all fall below a tolerance.
//!
//! The curl residual is a cell-corner circulation: around every interior
//! vertex, `φ_i` is integrated along the closed polygon through the centres
//! of the (three or four) leaves meeting there, using the trapezoid rule,
//! and divided by the polygon area.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::grid::{assemble_pairing, DualStack, FieldStack, QuadGrid};
use crate::kalpha::{max_violation_gray, Alpha};

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationReport {
    /// Largest `‖Σ_{j∈J} φ_j‖ − |J|^α` over cells and subsets (0 if feasible).
    pub membership_violation: f64,
    /// Largest normalized circulation over interior vertices and fields.
    pub curl_residual: f64,
    pub pairing: f64,
    pub energy: f64,
    /// `|pairing − energy| / max(energy, 1e-300)`.
    pub relative_gap: f64,
    pub certified: bool,
}

/// Interior vertices of the finest lattice that are corners of some leaf,
/// with the leaves in the four quadrants around them (lower-left,
/// lower-right, upper-right, upper-left).
fn corner_stars(grid: &QuadGrid) -> Vec<[usize; 4]> {
    let res = grid.max_level();
    let n = grid.cells_per_side(res) as u64;
    let mut verts = BTreeSet::new();
    for c in grid.cells() {
        let s = (res - c.level) as u32;
        let (x0, y0) = ((c.i as u64) << s, (c.j as u64) << s);
        let w = 1u64 << s;
        for (x, y) in [(x0, y0), (x0 + w, y0), (x0, y0 + w), (x0 + w, y0 + w)] {
            if x > 0 && y > 0 && x < n && y < n {
                verts.insert((x, y));
            }
        }
    }
    verts
        .into_iter()
        .filter_map(|(x, y)| {
            Some([
                grid.leaf_at(res, x - 1, y - 1)?,
                grid.leaf_at(res, x, y - 1)?,
                grid.leaf_at(res, x, y)?,
                grid.leaf_at(res, x - 1, y)?,
            ])
        })
        .collect()
}

/// Circulation of each field per unit loop area, maximized over vertices.
pub fn curl_residual(grid: &QuadGrid, phi: &DualStack) -> Result<f64> {
    phi.check_grid(grid)?;
    let n = phi.n_fields;
    let mut worst = 0.0f64;
    for star in corner_stars(grid) {
        let mut loop_cells: Vec<usize> = Vec::with_capacity(4);
        for &k in &star {
            if loop_cells.last() != Some(&k) {
                loop_cells.push(k);
            }
        }
        if loop_cells.len() > 1 && loop_cells.first() == loop_cells.last() {
            loop_cells.pop();
        }
        if loop_cells.len() < 3 {
            continue;
        }
        let pts: Vec<[f64; 2]> = loop_cells.iter().map(|&k| grid.center(k)).collect();
        let m = pts.len();
        let area = 0.5
            * (0..m)
                .map(|a| {
                    let (p, q) = (pts[a], pts[(a + 1) % m]);
                    p[0] * q[1] - q[0] * p[1]
                })
                .sum::<f64>()
                .abs();
        if area <= 0.0 {
            continue;
        }
        for i in 0..n {
            let mut circ = 0.0;
            for a in 0..m {
                let (ka, kb) = (loop_cells[a], loop_cells[(a + 1) % m]);
                let (p, q) = (pts[a], pts[(a + 1) % m]);
                let fa = &phi.block(ka)[2 * i..2 * i + 2];
                let fb = &phi.block(kb)[2 * i..2 * i + 2];
                circ += 0.5 * ((fa[0] + fb[0]) * (q[0] - p[0]) + (fa[1] + fb[1]) * (q[1] - p[1]));
            }
            worst = worst.max(circ.abs() / area);
        }
    }
    Ok(worst)
}

/// Checks `φ` against the field `V` whose energy the solver reported.
pub fn check_calibration(
    grid: &QuadGrid,
    phi: &DualStack,
    field: &FieldStack,
    alpha: Alpha,
    energy: f64,
    tol: f64,
) -> Result<CalibrationReport> {
    phi.check_grid(grid)?;
    field.check_grid(grid)?;
    if phi.n_fields != field.n_fields {
        return Err(Error::DimensionMismatch(format!(
            "dual has {} fields, primal has {}",
            phi.n_fields, field.n_fields
        )));
    }
    let n = phi.n_fields;
    let membership_violation = (0..grid.n_cells())
        .map(|k| max_violation_gray(phi.block(k), 2, n, alpha).1)
        .fold(0.0f64, f64::max);
    let bv = assemble_pairing(grid, n).apply(&field.values);
    let pairing: f64 = bv.iter().zip(&phi.values).map(|(a, b)| a * b).sum();
    let curl = curl_residual(grid, phi)?;
    let relative_gap = (pairing - energy).abs() / energy.abs().max(1e-300);
    let relative_gap = if energy == 0.0 && pairing == 0.0 { 0.0 } else { relative_gap };
    Ok(CalibrationReport {
        membership_violation,
        curl_residual: curl,
        pairing,
        energy,
        relative_gap,
        certified: membership_violation <= tol && curl <= tol && relative_gap <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{subdivide, CellAddr};

    #[test]
    fn zero_pair_is_certified() {
        let g = QuadGrid::build_uniform(8).unwrap();
        let r = check_calibration(
            &g,
            &DualStack::zeros(2, g.n_cells()),
            &FieldStack::for_grid(&g, 2),
            Alpha::STEINER,
            0.0,
            1e-9,
        )
        .unwrap();
        assert!(r.certified);
        assert_eq!(r.pairing, 0.0);
    }

    #[test]
    fn constant_and_gradient_duals_are_curl_free() {
        let g = QuadGrid::build_uniform(8).unwrap();
        let g = subdivide(&g, &[CellAddr::new(3, 3, 3), CellAddr::new(3, 4, 4)]).unwrap();
        let mut phi = DualStack::zeros(1, g.n_cells());
        for k in 0..g.n_cells() {
            phi.block_mut(k).copy_from_slice(&[0.6, -0.8]);
        }
        assert!(curl_residual(&g, &phi).unwrap() < 1e-12);
        // rotation field (−y, x) has curl 2
        for k in 0..g.n_cells() {
            let c = g.center(k);
            phi.block_mut(k).copy_from_slice(&[-c[1], c[0]]);
        }
        let r = curl_residual(&g, &phi).unwrap();
        assert!((r - 2.0).abs() < 1e-9, "{r}");
    }
}
