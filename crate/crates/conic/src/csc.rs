use serde::{Deserialize, Serialize};

/// Compressed sparse column matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub colptr: Vec<usize>,
    pub rowval: Vec<usize>,
    pub nzval: Vec<f64>,
}

/// Coordinate-format triplets, the interchange layout of exported programs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Triplets {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
    pub shape: [usize; 2],
}

impl CscMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CscMatrix { nrows, ncols, colptr: vec![0; ncols + 1], rowval: vec![], nzval: vec![] }
    }

    /// Build from triplets; duplicates are summed and explicit zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, rows: &[usize], cols: &[usize], vals: &[f64]) -> Self {
        assert!(rows.len() == cols.len() && cols.len() == vals.len());
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by_key(|&k| (cols[k], rows[k]));
        let mut colptr = vec![0usize; ncols + 1];
        let mut rowval = Vec::with_capacity(vals.len());
        let mut nzval: Vec<f64> = Vec::with_capacity(vals.len());
        let mut last: Option<(usize, usize)> = None;
        for &k in &order {
            let (r, c) = (rows[k], cols[k]);
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                *nzval.last_mut().unwrap() += vals[k];
            } else {
                rowval.push(r);
                nzval.push(vals[k]);
                colptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..ncols {
            colptr[c + 1] += colptr[c];
        }
        let mut m = CscMatrix { nrows, ncols, colptr, rowval, nzval };
        m.drop_zeros();
        m
    }

    fn drop_zeros(&mut self) {
        if self.nzval.iter().all(|v| *v != 0.0) {
            return;
        }
        let mut colptr = vec![0usize; self.ncols + 1];
        let mut rowval = Vec::with_capacity(self.rowval.len());
        let mut nzval = Vec::with_capacity(self.nzval.len());
        for j in 0..self.ncols {
            for p in self.colptr[j]..self.colptr[j + 1] {
                if self.nzval[p] != 0.0 {
                    rowval.push(self.rowval[p]);
                    nzval.push(self.nzval[p]);
                }
            }
            colptr[j + 1] = rowval.len();
        }
        self.colptr = colptr;
        self.rowval = rowval;
        self.nzval = nzval;
    }

    pub fn nnz(&self) -> usize {
        self.nzval.len()
    }

    pub fn to_triplets(&self) -> Triplets {
        let mut t = Triplets { shape: [self.nrows, self.ncols], ..Default::default() };
        for j in 0..self.ncols {
            for p in self.colptr[j]..self.colptr[j + 1] {
                t.rows.push(self.rowval[p]);
                t.cols.push(j);
                t.vals.push(self.nzval[p]);
            }
        }
        t
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (j, &xj) in x.iter().enumerate().take(self.ncols) {
            if xj == 0.0 {
                continue;
            }
            for p in self.colptr[j]..self.colptr[j + 1] {
                y[self.rowval[p]] += self.nzval[p] * xj;
            }
        }
    }

    /// `y = Aᵀ x`
    pub fn tmul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (j, yj) in y.iter_mut().enumerate().take(self.ncols) {
            let mut acc = 0.0;
            for p in self.colptr[j]..self.colptr[j + 1] {
                acc += self.nzval[p] * x[self.rowval[p]];
            }
            *yj = acc;
        }
    }

    /// Infinity norm of each column.
    pub fn col_norms_inf(&self) -> Vec<f64> {
        (0..self.ncols)
            .map(|j| self.nzval[self.colptr[j]..self.colptr[j + 1]].iter().fold(0.0f64, |a, v| a.max(v.abs())))
            .collect()
    }

    /// Infinity norm of each row.
    pub fn row_norms_inf(&self) -> Vec<f64> {
        let mut out = vec![0.0f64; self.nrows];
        for (r, v) in self.rowval.iter().zip(&self.nzval) {
            out[*r] = out[*r].max(v.abs());
        }
        out
    }

    /// `A ← diag(left) · A · diag(right)`
    pub fn scale(&mut self, left: &[f64], right: &[f64]) {
        for j in 0..self.ncols {
            for p in self.colptr[j]..self.colptr[j + 1] {
                self.nzval[p] *= left[self.rowval[p]] * right[j];
            }
        }
    }

    /// Number of stored entries in each row.
    pub fn row_counts(&self) -> Vec<usize> {
        let mut out = vec![0usize; self.nrows];
        for r in &self.rowval {
            out[*r] += 1;
        }
        out
    }
}

impl From<&Triplets> for CscMatrix {
    fn from(t: &Triplets) -> Self {
        CscMatrix::from_triplets(t.shape[0], t.shape[1], &t.rows, &t.cols, &t.vals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_multiply() {
        // [1 0 2; 0 3 0]
        let a = CscMatrix::from_triplets(2, 3, &[0, 0, 1, 0], &[0, 2, 1, 2], &[1.0, 1.5, 3.0, 0.5]);
        assert_eq!(a.nnz(), 3);
        let mut y = vec![0.0; 2];
        a.mul_vec(&[1.0, 1.0, 1.0], &mut y);
        assert_eq!(y, vec![3.0, 3.0]);
        let mut z = vec![0.0; 3];
        a.tmul_vec(&[1.0, 2.0], &mut z);
        assert_eq!(z, vec![1.0, 6.0, 2.0]);
        assert_eq!(CscMatrix::from(&a.to_triplets()), a);
    }

    #[test]
    fn explicit_zeros_are_dropped() {
        let a = CscMatrix::from_triplets(1, 2, &[0, 0, 0], &[0, 0, 1], &[1.0, -1.0, 4.0]);
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.row_counts(), vec![1]);
    }
}
