//! Staggered discretization on non-conformal quadtree grids over `[0,1]²`.
//!
//! The domain is split into `base × base` root cells, each the root of a
//! quadtree. A leaf at `(level, i, j)` has side `h = 1 / (base · 2^level)` and
//! covers `[i h, (i+1) h) × [j h, (j+1) h)`. Uniform grids whose size is a
//! power of two use `base = 1` so that merging can coarsen below the initial
//! resolution.
//!
//! Each leaf has four sides carrying the normal component of every field. A
//! side shared with a same-level neighbour is one degree of freedom; a coarse
//! side next to two finer cells is a single degree of freedom shared by all
//! three cell sides (hanging faces are identified with the coarse face).
//! Boundary sides carry no degree of freedom (zero flux).

mod adapt;
mod assembly;
mod dump;
mod fields;

pub use adapt::{merge, subdivide, transfer_cell_values, transfer_fields, transfer_psi, MergeReport};
pub use assembly::{
    assemble_divergence, assemble_pairing, assemble_psi_coupling, ConstraintSystem, FieldDemand, RowMeta,
};
pub(crate) use adapt::covering;
pub(crate) use assembly::terminal_cells;
pub use dump::{read_dump, write_dump, DumpCell, GridDump};
pub use fields::{DualStack, FieldStack, PsiLayout, PsiStack};

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Finest level supported by the integer coordinate system.
pub const MAX_LEVEL: u8 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellAddr {
    pub level: u8,
    pub i: u32,
    pub j: u32,
}

impl CellAddr {
    pub fn new(level: u8, i: u32, j: u32) -> Self {
        CellAddr { level, i, j }
    }

    pub fn children(self) -> [CellAddr; 4] {
        let (l, i, j) = (self.level + 1, 2 * self.i, 2 * self.j);
        [
            CellAddr::new(l, i, j),
            CellAddr::new(l, i + 1, j),
            CellAddr::new(l, i, j + 1),
            CellAddr::new(l, i + 1, j + 1),
        ]
    }

    pub fn parent(self) -> Option<CellAddr> {
        (self.level > 0).then(|| CellAddr::new(self.level - 1, self.i / 2, self.j / 2))
    }
}

/// Which normal component a face carries: `X` faces are vertical and carry
/// `V_{i,1}`, `Y` faces are horizontal and carry `V_{i,2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
}

/// An X face at `(level, i, j)` lies on `x = i h` and spans `y ∈ [j h, (j+1) h]`;
/// a Y face lies on `y = j h` and spans `x ∈ [i h, (i+1) h]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaceKey {
    pub axis: Axis,
    pub level: u8,
    pub i: u32,
    pub j: u32,
}

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;
pub const BOTTOM: usize = 2;
pub const TOP: usize = 3;

#[derive(Clone, Debug)]
pub struct QuadGrid {
    base: u32,
    cells: Vec<CellAddr>,
    lookup: HashMap<CellAddr, usize>,
    sides: Vec<[Option<u32>; 4]>,
    dofs: Vec<FaceKey>,
    max_level: u8,
    min_level: u8,
}

impl PartialEq for QuadGrid {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.cells == other.cells
    }
}

fn morton(x: u64, y: u64) -> u128 {
    let mut key = 0u128;
    for b in 0..40 {
        key |= (((x >> b) & 1) as u128) << (2 * b);
        key |= (((y >> b) & 1) as u128) << (2 * b + 1);
    }
    key
}

impl QuadGrid {
    /// Regular `m × m` grid with `h = 1/m`.
    pub fn build_uniform(m: u32) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidInput("uniform grid needs M ≥ 2".into()));
        }
        let (base, level) = if m.is_power_of_two() {
            (1, m.trailing_zeros() as u8)
        } else {
            (m, 0)
        };
        let cells = (0..m)
            .flat_map(|j| (0..m).map(move |i| CellAddr::new(level, i, j)))
            .collect();
        Self::from_leaves(base, cells)
    }

    /// Builds a grid from a leaf set, checking that the leaves tile the
    /// domain and are 2:1 balanced.
    pub fn from_leaves(base: u32, mut cells: Vec<CellAddr>) -> Result<Self> {
        if base == 0 || cells.is_empty() {
            return Err(Error::InvalidInput("empty grid".into()));
        }
        let max_level = cells.iter().map(|c| c.level).max().unwrap();
        let min_level = cells.iter().map(|c| c.level).min().unwrap();
        if max_level >= MAX_LEVEL {
            return Err(Error::InvalidInput(format!("level {max_level} exceeds {MAX_LEVEL}")));
        }
        // exact tiling check in integer area units of the finest level
        let mut area: u128 = 0;
        for c in &cells {
            let n = base as u64 * (1u64 << c.level);
            if c.i as u64 >= n || c.j as u64 >= n {
                return Err(Error::InvalidInput(format!("cell {c:?} outside the domain")));
            }
            area += 1u128 << (2 * (max_level - c.level) as u32);
        }
        let total = (base as u128 * base as u128) << (2 * max_level as u32);
        if area != total {
            return Err(Error::InvalidInput("cells do not tile the unit square".into()));
        }
        let shift = |c: &CellAddr| (max_level - c.level) as u32;
        cells.sort_by_key(|c| (morton((c.i as u64) << shift(c), (c.j as u64) << shift(c)), c.level));
        let lookup: HashMap<CellAddr, usize> = cells.iter().enumerate().map(|(k, c)| (*c, k)).collect();
        if lookup.len() != cells.len() {
            return Err(Error::InvalidInput("duplicate cells".into()));
        }
        let mut grid = QuadGrid {
            base,
            cells,
            lookup,
            sides: Vec::new(),
            dofs: Vec::new(),
            max_level,
            min_level,
        };
        grid.build_dofs()?;
        Ok(grid)
    }

    fn build_dofs(&mut self) -> Result<()> {
        let mut ids: HashMap<FaceKey, u32> = HashMap::new();
        let mut dofs = Vec::new();
        let mut sides = Vec::with_capacity(self.cells.len());
        for k in 0..self.cells.len() {
            let c = self.cells[k];
            let mut s = [None; 4];
            for (side, slot) in s.iter_mut().enumerate() {
                let Some(key) = self.side_face_key(c, side)? else {
                    continue;
                };
                let next = ids.len() as u32;
                let id = *ids.entry(key).or_insert_with(|| {
                    dofs.push(key);
                    next
                });
                *slot = Some(id);
            }
            sides.push(s);
        }
        self.sides = sides;
        self.dofs = dofs;
        Ok(())
    }

    /// Face key of a cell side, owned by the coarser of the two adjacent
    /// leaves; `None` on the domain boundary.
    fn side_face_key(&self, c: CellAddr, side: usize) -> Result<Option<FaceKey>> {
        let n = self.cells_per_side(c.level);
        let on_boundary = match side {
            LEFT => c.i == 0,
            RIGHT => c.i + 1 == n,
            BOTTOM => c.j == 0,
            _ => c.j + 1 == n,
        };
        if on_boundary {
            return Ok(None);
        }
        let nb = self.side_neighbor(c, side).ok_or_else(|| {
            Error::InvalidInput(format!("no neighbour found for {c:?} side {side}"))
        })?;
        if nb.level.abs_diff(c.level) > 1 {
            return Err(Error::InvalidInput(format!("2:1 balance violated between {c:?} and {nb:?}")));
        }
        let key = if nb.level < c.level {
            match side {
                LEFT => FaceKey { axis: Axis::X, level: nb.level, i: nb.i + 1, j: nb.j },
                RIGHT => FaceKey { axis: Axis::X, level: nb.level, i: nb.i, j: nb.j },
                BOTTOM => FaceKey { axis: Axis::Y, level: nb.level, i: nb.i, j: nb.j + 1 },
                _ => FaceKey { axis: Axis::Y, level: nb.level, i: nb.i, j: nb.j },
            }
        } else {
            match side {
                LEFT => FaceKey { axis: Axis::X, level: c.level, i: c.i, j: c.j },
                RIGHT => FaceKey { axis: Axis::X, level: c.level, i: c.i + 1, j: c.j },
                BOTTOM => FaceKey { axis: Axis::Y, level: c.level, i: c.i, j: c.j },
                _ => FaceKey { axis: Axis::Y, level: c.level, i: c.i, j: c.j + 1 },
            }
        };
        Ok(Some(key))
    }

    /// Leaf just across the midpoint of a side (any leaf when the neighbour
    /// is finer).
    pub(crate) fn side_neighbor(&self, c: CellAddr, side: usize) -> Option<CellAddr> {
        // work at resolution c.level + 1 so the side midpoint is integral
        let r = c.level + 1;
        let (x0, y0) = (2 * c.i as i64, 2 * c.j as i64);
        let (x, y) = match side {
            LEFT => (x0 - 1, y0 + 1),
            RIGHT => (x0 + 2, y0 + 1),
            BOTTOM => (x0 + 1, y0 - 1),
            _ => (x0 + 1, y0 + 2),
        };
        if x < 0 || y < 0 {
            return None;
        }
        self.leaf_at(r, x as u64, y as u64)
            .or_else(|| {
                // neighbour may be finer than r: any finer leaf adjacent to the side
                let (fx, fy) = match side {
                    LEFT => (2 * x as u64 + 1, 2 * y as u64),
                    RIGHT => (2 * x as u64, 2 * y as u64),
                    BOTTOM => (2 * x as u64, 2 * y as u64 + 1),
                    _ => (2 * x as u64, 2 * y as u64),
                };
                self.leaf_at(r + 1, fx, fy)
            })
            .map(|k| self.cells[k])
    }

    /// Leaf containing the cell `(res, x, y)` of the resolution-`res`
    /// lattice, provided that leaf is at level `≤ res`.
    pub(crate) fn leaf_at(&self, res: u8, x: u64, y: u64) -> Option<usize> {
        let n = self.base as u64 * (1u64 << res);
        if x >= n || y >= n {
            return None;
        }
        for l in self.min_level..=self.max_level.min(res) {
            let s = (res - l) as u32;
            let key = CellAddr::new(l, (x >> s) as u32, (y >> s) as u32);
            if let Some(&k) = self.lookup.get(&key) {
                return Some(k);
            }
        }
        None
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn cells_per_side(&self, level: u8) -> u32 {
        self.base * (1 << level)
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.len()
    }

    pub fn cells(&self) -> &[CellAddr] {
        &self.cells
    }

    pub fn cell(&self, k: usize) -> CellAddr {
        self.cells[k]
    }

    pub fn index_of(&self, c: CellAddr) -> Option<usize> {
        self.lookup.get(&c).copied()
    }

    pub fn sides(&self, k: usize) -> [Option<u32>; 4] {
        self.sides[k]
    }

    pub fn dof_key(&self, d: usize) -> FaceKey {
        self.dofs[d]
    }

    pub fn max_level(&self) -> u8 {
        self.max_level
    }

    pub fn min_level(&self) -> u8 {
        self.min_level
    }

    pub fn level_h(&self, level: u8) -> f64 {
        1.0 / self.cells_per_side(level) as f64
    }

    pub fn h(&self, k: usize) -> f64 {
        self.level_h(self.cells[k].level)
    }

    pub fn area(&self, k: usize) -> f64 {
        let h = self.h(k);
        h * h
    }

    pub fn finest_h(&self) -> f64 {
        self.level_h(self.max_level)
    }

    pub fn origin(&self, k: usize) -> [f64; 2] {
        let c = self.cells[k];
        let h = self.level_h(c.level);
        [c.i as f64 * h, c.j as f64 * h]
    }

    pub fn center(&self, k: usize) -> [f64; 2] {
        let c = self.cells[k];
        let h = self.level_h(c.level);
        [(c.i as f64 + 0.5) * h, (c.j as f64 + 0.5) * h]
    }

    /// Midpoint and length of the face behind a degree of freedom.
    pub fn dof_geometry(&self, d: usize) -> ([f64; 2], f64) {
        let f = self.dofs[d];
        let h = self.level_h(f.level);
        match f.axis {
            Axis::X => ([f.i as f64 * h, (f.j as f64 + 0.5) * h], h),
            Axis::Y => ([(f.i as f64 + 0.5) * h, f.j as f64 * h], h),
        }
    }

    /// Leaf containing `p`; points on grid lines go to the cell on the
    /// right/top. Returns `None` outside `[0,1)²`.
    pub fn locate(&self, p: [f64; 2]) -> Option<usize> {
        if !(0.0..1.0).contains(&p[0]) || !(0.0..1.0).contains(&p[1]) {
            return None;
        }
        for l in self.min_level..=self.max_level {
            let n = self.cells_per_side(l);
            let key = CellAddr::new(l, snap_floor(p[0] * n as f64), snap_floor(p[1] * n as f64));
            if let Some(&k) = self.lookup.get(&key) {
                return Some(k);
            }
        }
        None
    }

    /// Side neighbours of a leaf (up to two per side when they are finer).
    pub fn neighbors(&self, k: usize) -> Vec<usize> {
        let c = self.cells[k];
        let mut out = Vec::with_capacity(8);
        let r = c.level + 1;
        let (x0, y0) = (2 * c.i as i64, 2 * c.j as i64);
        let probes = [
            (x0 - 1, y0),
            (x0 - 1, y0 + 1),
            (x0 + 2, y0),
            (x0 + 2, y0 + 1),
            (x0, y0 - 1),
            (x0 + 1, y0 - 1),
            (x0, y0 + 2),
            (x0 + 1, y0 + 2),
        ];
        for (x, y) in probes {
            if x < 0 || y < 0 {
                continue;
            }
            if let Some(nb) = self.leaf_at_any(r, x as u64, y as u64) {
                if !out.contains(&nb) {
                    out.push(nb);
                }
            }
        }
        out
    }

    /// Like [`leaf_at`](Self::leaf_at) but also finds leaves finer than `res`
    /// (returns the one covering the lower-left corner of the probe cell).
    pub(crate) fn leaf_at_any(&self, res: u8, x: u64, y: u64) -> Option<usize> {
        if let Some(k) = self.leaf_at(res, x, y) {
            return Some(k);
        }
        let mut r = res;
        let (mut x, mut y) = (x, y);
        while r < self.max_level {
            r += 1;
            x *= 2;
            y *= 2;
            if let Some(k) = self.leaf_at(r, x, y) {
                return Some(k);
            }
        }
        None
    }

    /// Whether every pair of side-adjacent leaves differs by at most one level.
    pub fn is_balanced(&self) -> bool {
        (0..self.n_cells()).all(|k| {
            let l = self.cells[k].level;
            self.neighbors(k).iter().all(|&nb| self.cells[nb].level.abs_diff(l) <= 1)
        })
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_cells()).map(|k| self.area(k)).sum()
    }
}

/// `floor(s)`, except values within `1e-9` of an integer snap to it
/// (so grid-line points go right/top).
pub(crate) fn snap_floor(s: f64) -> u32 {
    let r = s.round();
    if (s - r).abs() < 1e-9 {
        r as u32
    } else {
        s.floor() as u32
    }
}
