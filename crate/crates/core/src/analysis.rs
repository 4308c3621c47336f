//! Reading network structure off a discrete solution.
//!
//! A unit-weight segment at `α = 0` has energy one per unit length, so the
//! integral of the energy density along a short probe crossing a branch
//! transversally measures the weight the branch carries: about 1 for a
//! branch of one tree, about 1/2 where two trees are superposed with equal
//! weights.

use crate::grid::{FieldStack, QuadGrid};
use crate::shapes::{dist, pentagon_star};

/// `density · h` per cell: the weight of an axis-aligned branch crossing it.
pub fn multiplicity_map(grid: &QuadGrid, density: &[f64]) -> Vec<f64> {
    (0..grid.n_cells()).map(|k| density[k] * grid.h(k)).collect()
}

/// Length of the part of `a → b` inside the axis-aligned box `[lo, lo + h]²`.
fn clipped_length(a: [f64; 2], b: [f64; 2], lo: [f64; 2], h: f64) -> f64 {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for ax in 0..2 {
        let d = b[ax] - a[ax];
        let (l, u) = (lo[ax] - a[ax], lo[ax] + h - a[ax]);
        if d == 0.0 {
            if l > 0.0 || u < 0.0 {
                return 0.0;
            }
        } else {
            let (p, q) = if d > 0.0 { (l / d, u / d) } else { (u / d, l / d) };
            t0 = t0.max(p);
            t1 = t1.min(q);
        }
    }
    (t1 - t0).max(0.0) * dist(a, b)
}

/// `∫ density ds` along the segment `a → b`.
pub fn line_mass(grid: &QuadGrid, density: &[f64], a: [f64; 2], b: [f64; 2]) -> f64 {
    let len = dist(a, b);
    // cells are found by sampling, lengths are exact
    let steps = ((16.0 * len / grid.finest_h()).ceil() as usize).max(1);
    let mut cells: Vec<usize> = (0..=steps)
        .filter_map(|s| {
            let t = s as f64 / steps as f64;
            grid.locate([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])])
        })
        .collect();
    cells.sort_unstable();
    cells.dedup();
    cells
        .into_iter()
        .map(|k| density[k] * clipped_length(a, b, grid.origin(k), grid.h(k)))
        .sum()
}

/// Mass on a probe of half-length `half` through `at`, perpendicular to
/// the direction `from → to`.
pub fn transversal_mass(
    grid: &QuadGrid,
    density: &[f64],
    from: [f64; 2],
    to: [f64; 2],
    at: [f64; 2],
    half: f64,
) -> f64 {
    let d = dist(from, to);
    let n = [-(to[1] - from[1]) / d, (to[0] - from[0]) / d];
    line_mass(
        grid,
        density,
        [at[0] - half * n[0], at[1] - half * n[1]],
        [at[0] + half * n[0], at[1] + half * n[1]],
    )
}

/// Weight carried by each of the five centre-to-side branches `O → Q_k` of
/// the star structure, probed at the branch midpoints.
pub fn pentagon_branch_masses(grid: &QuadGrid, density: &[f64], vertices: &[[f64; 2]]) -> Vec<f64> {
    let star = pentagon_star(vertices);
    let o = star.center;
    star.side_points
        .iter()
        .map(|&q| {
            let mid = [(o[0] + q[0]) / 2.0, (o[1] + q[1]) / 2.0];
            transversal_mass(grid, density, o, q, mid, 0.3 * dist(o, q))
        })
        .collect()
}

/// Weighted principal line through a point cloud: centroid and unit
/// direction.
fn principal_line(pts: &[([f64; 2], f64)]) -> Option<([f64; 2], [f64; 2])> {
    let w: f64 = pts.iter().map(|p| p.1).sum();
    if pts.len() < 2 || w <= 0.0 {
        return None;
    }
    let c = [
        pts.iter().map(|p| p.1 * p.0[0]).sum::<f64>() / w,
        pts.iter().map(|p| p.1 * p.0[1]).sum::<f64>() / w,
    ];
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (q, m) in pts {
        let (dx, dy) = (q[0] - c[0], q[1] - c[1]);
        sxx += m * dx * dx;
        sxy += m * dx * dy;
        syy += m * dy * dy;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Some((c, [theta.cos(), theta.sin()]))
}

/// Where the routes of fields `i` and `j` join, from the field alone.
///
/// Cells where either field carries at least `share` of the peak
/// multiplicity fall into three branches: both (the weaker field carries at
/// least half of the stronger), otherwise the stronger one. A weighted principal
/// line is fitted to each branch and the point closest (in least squares) to
/// the three lines is returned.
pub fn junction(grid: &QuadGrid, fields: &FieldStack, i: usize, j: usize, share: f64) -> Option<[f64; 2]> {
    let mag = |f: usize, k: usize| {
        let v = fields.cell_average(grid, k, f);
        v[0].hypot(v[1]) * grid.h(k)
    };
    let peak = (0..grid.n_cells())
        .map(|k| mag(i, k).max(mag(j, k)))
        .fold(0.0f64, f64::max);
    let mut branches: [Vec<([f64; 2], f64)>; 3] = Default::default();
    for k in 0..grid.n_cells() {
        let (a, b) = (mag(i, k), mag(j, k));
        let hi = a.max(b);
        if hi < share * peak {
            continue;
        }
        let slot = if a.min(b) >= 0.5 * hi {
            2
        } else if a > b {
            0
        } else {
            1
        };
        branches[slot].push((grid.center(k), hi * grid.area(k)));
    }
    // minimize Σ_lines dist² : (Σ I − n nᵀ) x = Σ (I − n nᵀ) c
    let (mut m, mut r) = ([[0.0f64; 2]; 2], [0.0f64; 2]);
    for pts in &branches {
        let (c, d) = principal_line(pts)?;
        let p = [[1.0 - d[0] * d[0], -d[0] * d[1]], [-d[0] * d[1], 1.0 - d[1] * d[1]]];
        for a in 0..2 {
            for b in 0..2 {
                m[a][b] += p[a][b];
            }
            r[a] += p[a][0] * c[0] + p[a][1] * c[1];
        }
    }
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.abs() < 1e-12 {
        return None;
    }
    Some([
        (r[0] * m[1][1] - r[1] * m[0][1]) / det,
        (m[0][0] * r[1] - m[1][0] * r[0]) / det,
    ])
}
