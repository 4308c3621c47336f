//! Compressed sparse row matrices, just enough for operator assembly and the
//! primal-dual iterations.

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Csr {
    pub rows: usize,
    pub cols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

/// Row-by-row builder; rows must be pushed in order.
#[derive(Debug)]
pub struct CsrBuilder {
    m: Csr,
}

impl CsrBuilder {
    pub fn new(cols: usize) -> Self {
        CsrBuilder {
            m: Csr {
                rows: 0,
                cols,
                indptr: vec![0],
                indices: Vec::new(),
                values: Vec::new(),
            },
        }
    }

    /// Appends one row; duplicate columns are summed and zeros dropped.
    pub fn push_row(&mut self, entries: &mut Vec<(usize, f64)>) {
        entries.sort_by_key(|e| e.0);
        let mut last: Option<usize> = None;
        for &(c, v) in entries.iter() {
            debug_assert!(c < self.m.cols);
            if last == Some(c) {
                *self.m.values.last_mut().unwrap() += v;
            } else {
                self.m.indices.push(c);
                self.m.values.push(v);
                last = Some(c);
            }
        }
        // drop exact cancellations
        let start = *self.m.indptr.last().unwrap();
        let mut w = start;
        for r in start..self.m.indices.len() {
            if self.m.values[r] != 0.0 {
                self.m.indices[w] = self.m.indices[r];
                self.m.values[w] = self.m.values[r];
                w += 1;
            }
        }
        self.m.indices.truncate(w);
        self.m.values.truncate(w);
        self.m.indptr.push(w);
        self.m.rows += 1;
        entries.clear();
    }

    pub fn finish(self) -> Csr {
        self.m
    }
}

impl Csr {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *out = acc;
        }
    }

    /// `y += A x`
    pub fn mul_vec_add(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *out += acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.mul_vec(x, &mut y);
        y
    }

    pub fn transpose(&self) -> Csr {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.cols {
            counts[c + 1] += counts[c];
        }
        let mut next = counts.clone();
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.rows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k];
                let dst = next[c];
                indices[dst] = r;
                values[dst] = self.values[k];
                next[c] += 1;
            }
        }
        Csr {
            rows: self.cols,
            cols: self.rows,
            indptr: counts,
            indices,
            values,
        }
    }

    /// Stacks `self` on top of `other` (same column count).
    pub fn vstack(&self, other: &Csr) -> Csr {
        assert_eq!(self.cols, other.cols);
        let mut indptr = self.indptr.clone();
        let base = self.nnz();
        indptr.extend(other.indptr[1..].iter().map(|p| p + base));
        let mut indices = self.indices.clone();
        indices.extend_from_slice(&other.indices);
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Csr {
            rows: self.rows + other.rows,
            cols: self.cols,
            indptr,
            indices,
            values,
        }
    }

    /// Widens the matrix to `cols` columns, shifting existing ones by `offset`.
    pub fn embed_columns(&self, cols: usize, offset: usize) -> Csr {
        assert!(offset + self.cols <= cols);
        Csr {
            rows: self.rows,
            cols,
            indptr: self.indptr.clone(),
            indices: self.indices.iter().map(|c| c + offset).collect(),
            values: self.values.clone(),
        }
    }

    /// Row-wise concatenation `[self | other]`.
    pub fn hstack(&self, other: &Csr) -> Csr {
        assert_eq!(self.rows, other.rows);
        let mut b = CsrBuilder::new(self.cols + other.cols);
        let mut row = Vec::new();
        for r in 0..self.rows {
            row.extend(self.row(r));
            row.extend(other.row(r).map(|(c, v)| (c + self.cols, v)));
            b.push_row(&mut row);
        }
        b.finish()
    }

    /// `Σ_j |a_ij|^p` per row.
    pub fn row_power_sums(&self, p: f64) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r).map(|(_, v)| v.abs().powf(p)).sum()).collect()
    }

    /// `Σ_i |a_ij|^p` per column.
    pub fn col_power_sums(&self, p: f64) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for (c, v) in self.indices.iter().zip(&self.values) {
            s[*c] += v.abs().powf(p);
        }
        s
    }
}
