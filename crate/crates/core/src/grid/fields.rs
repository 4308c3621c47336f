use super::{QuadGrid, BOTTOM, LEFT, RIGHT, TOP};
use crate::error::{Error, Result};
use crate::kalpha::{MatrixPoint, SubsetMask};

/// The `N−1` discrete fields: one normal component per free face, stored
/// field-major (`values[i * n_dofs + dof]`).
#[derive(Clone, Debug, PartialEq)]
pub struct FieldStack {
    pub n_fields: usize,
    pub n_dofs: usize,
    pub values: Vec<f64>,
}

impl FieldStack {
    pub fn zeros(n_fields: usize, n_dofs: usize) -> Self {
        FieldStack {
            n_fields,
            n_dofs,
            values: vec![0.0; n_fields * n_dofs],
        }
    }

    pub fn for_grid(grid: &QuadGrid, n_fields: usize) -> Self {
        Self::zeros(n_fields, grid.n_dofs())
    }

    pub fn field(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_dofs..(i + 1) * self.n_dofs]
    }

    pub fn field_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.n_dofs..(i + 1) * self.n_dofs]
    }

    /// Cell average `Ṽ_i = ((V_left + V_right)/2, (V_bottom + V_top)/2)`.
    pub fn cell_average(&self, grid: &QuadGrid, cell: usize, i: usize) -> [f64; 2] {
        let s = grid.sides(cell);
        let f = self.field(i);
        let val = |side: usize| s[side].map_or(0.0, |d| f[d as usize]);
        [0.5 * (val(LEFT) + val(RIGHT)), 0.5 * (val(BOTTOM) + val(TOP))]
    }

    /// All `N−1` cell averages of one cell as a `2 × (N−1)` matrix.
    pub fn cell_matrix(&self, grid: &QuadGrid, cell: usize) -> MatrixPoint {
        let data = (0..self.n_fields).flat_map(|i| self.cell_average(grid, cell, i)).collect();
        MatrixPoint::from_column_major(2, self.n_fields, data).expect("finite field values")
    }

    pub fn check_grid(&self, grid: &QuadGrid) -> Result<()> {
        if self.n_dofs != grid.n_dofs() || self.values.len() != self.n_fields * self.n_dofs {
            return Err(Error::DimensionMismatch(format!(
                "field stack has {} dofs, grid has {}",
                self.n_dofs,
                grid.n_dofs()
            )));
        }
        Ok(())
    }
}

/// One `2 × (N−1)` matrix per cell, stored `values[(cell * n + i) * 2 + d]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualStack {
    pub n_fields: usize,
    pub n_cells: usize,
    pub values: Vec<f64>,
}

impl DualStack {
    pub fn zeros(n_fields: usize, n_cells: usize) -> Self {
        DualStack {
            n_fields,
            n_cells,
            values: vec![0.0; 2 * n_fields * n_cells],
        }
    }

    pub fn block(&self, cell: usize) -> &[f64] {
        let w = 2 * self.n_fields;
        &self.values[cell * w..(cell + 1) * w]
    }

    pub fn block_mut(&mut self, cell: usize) -> &mut [f64] {
        let w = 2 * self.n_fields;
        &mut self.values[cell * w..(cell + 1) * w]
    }

    pub fn matrix(&self, cell: usize) -> MatrixPoint {
        MatrixPoint::from_column_major(2, self.n_fields, self.block(cell).to_vec()).expect("finite duals")
    }

    pub fn check_grid(&self, grid: &QuadGrid) -> Result<()> {
        if self.n_cells != grid.n_cells() || self.values.len() != 2 * self.n_fields * self.n_cells {
            return Err(Error::DimensionMismatch(format!(
                "dual stack has {} cells, grid has {}",
                self.n_cells,
                grid.n_cells()
            )));
        }
        Ok(())
    }
}

/// Which subsets `J` carry a group variable `ψ_J` in each cell.
#[derive(Clone, Debug, PartialEq)]
pub struct PsiLayout {
    pub n_fields: usize,
    active: Vec<Vec<SubsetMask>>,
    offsets: Vec<usize>,
}

impl PsiLayout {
    pub fn new(n_fields: usize, mut active: Vec<Vec<SubsetMask>>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(active.len() + 1);
        offsets.push(0);
        for list in active.iter_mut() {
            list.sort();
            list.dedup();
            if list.iter().any(|m| m.bits() >> n_fields != 0) {
                return Err(Error::InvalidInput("active subset references a missing field".into()));
            }
            offsets.push(offsets.last().unwrap() + list.len());
        }
        Ok(PsiLayout {
            n_fields,
            active,
            offsets,
        })
    }

    /// Every nonempty subset in every cell.
    pub fn full(n_fields: usize, n_cells: usize) -> Self {
        let all: Vec<SubsetMask> = SubsetMask::all(n_fields).collect();
        Self::new(n_fields, vec![all; n_cells]).expect("full layout is valid")
    }

    pub fn n_cells(&self) -> usize {
        self.active.len()
    }

    pub fn active(&self, cell: usize) -> &[SubsetMask] {
        &self.active[cell]
    }

    /// Index of the first group variable of a cell.
    pub fn offset(&self, cell: usize) -> usize {
        self.offsets[cell]
    }

    pub fn n_groups(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn lists(&self) -> &[Vec<SubsetMask>] {
        &self.active
    }
}

/// Group variables `ψ_J ∈ R²`, two entries per `(cell, J)` in layout order.
#[derive(Clone, Debug, PartialEq)]
pub struct PsiStack {
    pub layout: PsiLayout,
    pub values: Vec<f64>,
}

impl PsiStack {
    pub fn zeros(layout: PsiLayout) -> Self {
        let n = 2 * layout.n_groups();
        PsiStack {
            layout,
            values: vec![0.0; n],
        }
    }

    pub fn get(&self, cell: usize, k: usize) -> [f64; 2] {
        let g = self.layout.offset(cell) + k;
        [self.values[2 * g], self.values[2 * g + 1]]
    }

    /// `(J, ψ_J)` pairs of one cell.
    pub fn cell_entries(&self, cell: usize) -> impl Iterator<Item = (SubsetMask, [f64; 2])> + '_ {
        self.layout
            .active(cell)
            .iter()
            .enumerate()
            .map(move |(k, &m)| (m, self.get(cell, k)))
    }

    /// Reconstructed field average `Σ_{J∋i} ψ_J` in one cell.
    pub fn field_average(&self, cell: usize, i: usize) -> [f64; 2] {
        let mut v = [0.0; 2];
        for (m, p) in self.cell_entries(cell) {
            if m.contains(i) {
                v[0] += p[0];
                v[1] += p[1];
            }
        }
        v
    }
}
