//! Quasi-definite KKT system
//!
//! ```text
//! [ σI    Aᵀ      ]
//! [ A   −diag(1/ρ) ]
//! ```
//!
//! The fill-reducing ordering and elimination tree are computed once; a change
//! of `ρ` only rewrites the lower-right diagonal and refactors numerically.

use crate::csc::CscMatrix;
use crate::error::ConicError;
use ldl::Marker;

pub(crate) struct KktSolver {
    n: usize,
    dim: usize,
    perm: Vec<usize>,
    // upper triangle of the permuted matrix
    colptr: Vec<usize>,
    rowval: Vec<usize>,
    nzval: Vec<f64>,
    rho_pos: Vec<usize>,
    etree: Vec<Option<usize>>,
    l_nz: Vec<usize>,
    l_p: Vec<usize>,
    l_i: Vec<usize>,
    l_x: Vec<f64>,
    d: Vec<f64>,
    d_inv: Vec<f64>,
    bwork: Vec<Marker>,
    iwork: Vec<usize>,
    fwork: Vec<f64>,
    buf: Vec<f64>,
}

impl KktSolver {
    pub(crate) fn new(a: &CscMatrix, sigma: f64, rho: &[f64]) -> Result<Self, ConicError> {
        let (m, n) = (a.nrows, a.ncols);
        let dim = n + m;

        // Upper-triangular triplets in the natural ordering.
        let mut tr: Vec<(usize, usize, f64)> = Vec::with_capacity(dim + a.nnz());
        for j in 0..n {
            tr.push((j, j, sigma));
        }
        for j in 0..n {
            for p in a.colptr[j]..a.colptr[j + 1] {
                tr.push((j, n + a.rowval[p], a.nzval[p]));
            }
        }
        for (i, r) in rho.iter().enumerate() {
            tr.push((n + i, n + i, -1.0 / r));
        }

        let (nat_p, nat_i) = pattern_csc(dim, &tr);
        let (perm, iperm) = match amd::order(dim, &nat_p, &nat_i, &amd::Control::default()) {
            Ok((p, pinv, _)) => (p, pinv),
            Err(status) => return Err(ConicError::Factorization(format!("ordering failed: {status:?}"))),
        };

        let permuted: Vec<(usize, usize, f64)> = tr
            .iter()
            .map(|&(r, c, v)| {
                let (r2, c2) = (iperm[r], iperm[c]);
                if r2 <= c2 {
                    (r2, c2, v)
                } else {
                    (c2, r2, v)
                }
            })
            .collect();
        let (colptr, rowval, nzval, src) = assemble(dim, &permuted);
        let mut rho_pos = vec![0usize; m];
        for (pos, &k) in src.iter().enumerate() {
            let (r, c, _) = tr[k];
            if r == c && r >= n {
                rho_pos[r - n] = pos;
            }
        }

        let mut work = vec![0usize; dim];
        let mut l_nz = vec![0usize; dim];
        let mut etree = vec![None; dim];
        let total = ldl::etree(dim, &colptr, &rowval, &mut work, &mut l_nz, &mut etree)
            .map_err(|e| ConicError::Factorization(format!("elimination tree error {e}")))?;

        let mut solver = KktSolver {
            n,
            dim,
            perm,
            colptr,
            rowval,
            nzval,
            rho_pos,
            etree,
            l_nz,
            l_p: vec![0; dim + 1],
            l_i: vec![0; total],
            l_x: vec![0.0; total],
            d: vec![0.0; dim],
            d_inv: vec![0.0; dim],
            bwork: vec![Marker::Unused; dim],
            iwork: vec![0; 3 * dim],
            fwork: vec![0.0; dim],
            buf: vec![0.0; dim],
        };
        solver.factor()?;
        Ok(solver)
    }

    fn factor(&mut self) -> Result<(), ConicError> {
        let positive = ldl::factor(
            self.dim,
            &self.colptr,
            &self.rowval,
            &self.nzval,
            &mut self.l_p,
            &mut self.l_i,
            &mut self.l_x,
            &mut self.d,
            &mut self.d_inv,
            &self.l_nz,
            &self.etree,
            &mut self.bwork,
            &mut self.iwork,
            &mut self.fwork,
        )
        .map_err(|_| ConicError::Factorization("zero pivot".into()))?;
        if positive != self.n {
            return Err(ConicError::Factorization(format!(
                "expected {} positive pivots, found {positive}",
                self.n
            )));
        }
        Ok(())
    }

    pub(crate) fn update_rho(&mut self, rho: &[f64]) -> Result<(), ConicError> {
        for (i, r) in rho.iter().enumerate() {
            self.nzval[self.rho_pos[i]] = -1.0 / r;
        }
        self.factor()
    }

    /// Solve in place; `rhs` is in the natural ordering `[x; y]`.
    pub(crate) fn solve(&mut self, rhs: &mut [f64]) {
        for (k, &old) in self.perm.iter().enumerate() {
            self.buf[k] = rhs[old];
        }
        ldl::solve(self.dim, &self.l_p, &self.l_i, &self.l_x, &self.d_inv, &mut self.buf);
        for (k, &old) in self.perm.iter().enumerate() {
            rhs[old] = self.buf[k];
        }
    }
}

fn pattern_csc(dim: usize, tr: &[(usize, usize, f64)]) -> (Vec<usize>, Vec<usize>) {
    let (p, i, _, _) = assemble(dim, tr);
    (p, i)
}

/// CSC assembly with rows sorted in each column; also returns, for every stored
/// entry, the index of the triplet it came from. Triplets must not repeat.
fn assemble(dim: usize, tr: &[(usize, usize, f64)]) -> (Vec<usize>, Vec<usize>, Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..tr.len()).collect();
    order.sort_by_key(|&k| (tr[k].1, tr[k].0));
    let mut colptr = vec![0usize; dim + 1];
    let mut rowval = Vec::with_capacity(tr.len());
    let mut nzval = Vec::with_capacity(tr.len());
    for &k in &order {
        let (r, c, v) = tr[k];
        colptr[c + 1] += 1;
        rowval.push(r);
        nzval.push(v);
    }
    for c in 0..dim {
        colptr[c + 1] += colptr[c];
    }
    (colptr, rowval, nzval, order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_quasidefinite_system() {
        // A = [1 2; 0 1; 3 0]
        let a = CscMatrix::from_triplets(3, 2, &[0, 2, 0, 1], &[0, 0, 1, 1], &[1.0, 3.0, 2.0, 1.0]);
        let sigma = 0.5;
        let rho = [1.0, 2.0, 4.0];
        let mut kkt = KktSolver::new(&a, sigma, &rho).unwrap();
        let x_true = [1.0, -2.0, 0.5, 0.25, -1.0];
        // K x
        let mut rhs = vec![0.0; 5];
        rhs[0] = sigma * x_true[0] + 1.0 * x_true[2] + 3.0 * x_true[4];
        rhs[1] = sigma * x_true[1] + 2.0 * x_true[2] + 1.0 * x_true[3];
        rhs[2] = x_true[0] + 2.0 * x_true[1] - x_true[2] / rho[0];
        rhs[3] = x_true[1] - x_true[3] / rho[1];
        rhs[4] = 3.0 * x_true[0] - x_true[4] / rho[2];
        kkt.solve(&mut rhs);
        for (a, b) in rhs.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }

        let rho2 = [10.0, 10.0, 10.0];
        kkt.update_rho(&rho2).unwrap();
        let mut rhs = vec![0.0; 5];
        rhs[0] = sigma * x_true[0] + x_true[2] + 3.0 * x_true[4];
        rhs[1] = sigma * x_true[1] + 2.0 * x_true[2] + x_true[3];
        rhs[2] = x_true[0] + 2.0 * x_true[1] - x_true[2] / 10.0;
        rhs[3] = x_true[1] - x_true[3] / 10.0;
        rhs[4] = 3.0 * x_true[0] - x_true[4] / 10.0;
        kkt.solve(&mut rhs);
        for (a, b) in rhs.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
