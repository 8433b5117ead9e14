//! Compressed sparse row matrices and a Jacobi-preconditioned conjugate
//! gradient solver.
//!
//! Every reduction runs in a fixed order so repeated solves on the same data
//! are bit-identical.

use crate::error::{Error, Result};

/// Sparse matrix in compressed row form. Column indices are strictly
/// ascending within each row and explicit zeros are dropped on assembly.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles from `(row, col, value)` triplets. Duplicates are summed in
    /// the order they appear.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::ShapeMismatch(format!(
                    "entry ({r}, {c}) outside {nrows}x{ncols}"
                )));
            }
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        // stable: duplicates keep insertion order
        order.sort_by_key(|&i| (triplets[i].0, triplets[i].1));

        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data = Vec::with_capacity(triplets.len());
        let mut pos = 0;
        while pos < order.len() {
            let (r, c, _) = triplets[order[pos]];
            let mut sum = 0.0;
            while pos < order.len() && triplets[order[pos]].0 == r && triplets[order[pos]].1 == c {
                sum += triplets[order[pos]].2;
                pos += 1;
            }
            if sum != 0.0 {
                indices.push(c);
                data.push(sum);
                indptr[r + 1] += 1;
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![1.0; n],
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for row in rows {
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    indices.push(c);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// Column indices and values of one row.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.data[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map_or(0.0, |i| vals[i])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, row) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        out
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::ShapeMismatch(format!(
                "spmv: {} columns, vector of length {}",
                self.ncols,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    pub(crate) fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            *yr = acc;
        }
    }

    /// `y = Aᵀ x` without forming the transpose. Contributions to each output
    /// entry are summed in ascending row order, matching `transpose().spmv(x)`.
    pub fn transpose_spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.nrows {
            return Err(Error::ShapeMismatch(format!(
                "transpose_spmv: {} rows, vector of length {}",
                self.nrows,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.ncols];
        for (r, &xr) in x.iter().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                y[c] += v * xr;
            }
        }
        Ok(y)
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0; self.nnz()];
        let mut data = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                indices[next[c]] = r;
                data[next[c]] = v;
                next[c] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr,
            indices,
            data,
        }
    }

    /// Sparse product `A B`.
    pub fn matmul(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if self.ncols != other.nrows {
            return Err(Error::ShapeMismatch(format!(
                "matmul: {}x{} times {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut triplets = Vec::new();
        let mut acc = vec![0.0; other.ncols];
        let mut touched = Vec::new();
        let mut mark = vec![false; other.ncols];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&k, &a) in cols.iter().zip(vals) {
                let (bcols, bvals) = other.row(k);
                for (&c, &b) in bcols.iter().zip(bvals) {
                    if !mark[c] {
                        mark[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                triplets.push((r, c, acc[c]));
                acc[c] = 0.0;
                mark[c] = false;
            }
            touched.clear();
        }
        CsrMatrix::from_triplets(self.nrows, other.ncols, &triplets)
    }

    /// Same row/column pattern as the transpose.
    pub fn is_structurally_symmetric(&self) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let t = self.transpose();
        t.indptr == self.indptr && t.indices == self.indices
    }

    pub fn quadratic_form(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let ay = self.spmv(y)?;
        Ok(dot(x, &ay))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub rel_tol: f64,
    /// `None` means `10 * n`.
    pub max_iter: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_iter: None,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            max_iter: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Solves `A x = b` for symmetric positive definite `A` with Jacobi
/// preconditioning.
pub fn cg_solve(a: &CsrMatrix, b: &[f64], opts: SolveOptions) -> Result<(Vec<f64>, SolveReport)> {
    cg_solve_traced(a, b, opts, |_, _| {})
}

/// As [`cg_solve`], calling `trace(iteration, x)` after every update of the
/// iterate.
pub fn cg_solve_traced<F>(
    a: &CsrMatrix,
    b: &[f64],
    opts: SolveOptions,
    mut trace: F,
) -> Result<(Vec<f64>, SolveReport)>
where
    F: FnMut(usize, &[f64]),
{
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "cg: {}x{} matrix, rhs of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    if !a.is_structurally_symmetric() {
        return Err(Error::NotSymmetric);
    }
    let inv_diag = a
        .diagonal()
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            if d == 0.0 {
                Err(Error::ZeroDiagonal { row: i })
            } else {
                Ok(1.0 / d)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));

    let mut x = vec![0.0; n];
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        ));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;

    for it in 1..=max_iter {
        a.spmv_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            // not positive definite along p
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        trace(it, &x);
        rel = norm(&r) / b_norm;
        let mut restart = false;
        if rel <= opts.rel_tol {
            // the recursive residual drifts below what x attains; confirm
            a.spmv_into(&x, &mut ap);
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            rel = norm(&r) / b_norm;
            if rel <= opts.rel_tol {
                return Ok((
                    x,
                    SolveReport {
                        iterations: it,
                        relative_residual: rel,
                        converged: true,
                    },
                ));
            }
            restart = true;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = if restart { 0.0 } else { rz_new / rz };
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged(SolveReport {
        iterations: max_iter,
        relative_residual: rel,
        converged: false,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dense(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                (0..m)
                    .map(|_| {
                        if rng.gen_bool(0.4) {
                            rng.gen_range(-5..=5) as f64
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn identity_solves_in_one_iteration() {
        let a = CsrMatrix::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 7.0];
        let (x, rep) = cg_solve(&a, &b, SolveOptions::default()).unwrap();
        assert_eq!(x, b);
        assert!(rep.iterations <= 1);
        assert!(rep.converged);
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[4,1],[1,3]]^{-1} (1,2) = (1/11, 7/11)
        let a = CsrMatrix::from_dense(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
        let (x, _) = cg_solve(&a, &[1.0, 2.0], SolveOptions::with_tol(1e-14)).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn zero_diagonal_is_rejected() {
        let a = CsrMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 2.0]]);
        assert!(matches!(
            cg_solve(&a, &[1.0, 1.0], SolveOptions::default()),
            Err(Error::ZeroDiagonal { row: 0 })
        ));
    }

    #[test]
    fn asymmetric_pattern_is_rejected() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 1.0], vec![0.0, 2.0]]);
        assert!(matches!(
            cg_solve(&a, &[1.0, 1.0], SolveOptions::default()),
            Err(Error::NotSymmetric)
        ));
    }

    #[test]
    fn non_convergence_is_reported() {
        let a = CsrMatrix::from_dense(&[
            vec![1.0, 0.9, 0.0],
            vec![0.9, 1.0, 0.9],
            vec![0.0, 0.9, 1.0],
        ]);
        let opts = SolveOptions {
            rel_tol: 1e-14,
            max_iter: Some(1),
        };
        match cg_solve(&a, &[1.0, 0.0, 1.0], opts) {
            Err(Error::NotConverged(rep)) => assert!(!rep.converged),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn spmv_matches_dense_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let dense = random_dense(&mut rng, 10, 10);
            let a = CsrMatrix::from_dense(&dense);
            let x: Vec<f64> = (0..10).map(|_| rng.gen_range(-4..=4) as f64).collect();
            let expect: Vec<f64> = dense.iter().map(|row| dot(row, &x)).collect();
            assert_eq!(a.spmv(&x).unwrap(), expect);
        }
    }

    #[test]
    fn transpose_spmv_is_bitwise_transpose_then_spmv() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dense = random_dense(&mut rng, 12, 9);
        let a = CsrMatrix::from_dense(&dense);
        let x: Vec<f64> = (0..12).map(|_| rng.gen::<f64>() - 0.5).collect();
        let direct = a.transpose_spmv(&x).unwrap();
        let via = a.transpose().spmv(&x).unwrap();
        assert_eq!(direct, via);
        assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn shape_mismatch() {
        let a = CsrMatrix::identity(3);
        assert!(a.spmv(&[1.0, 2.0]).is_err());
        assert!(a.transpose_spmv(&[1.0]).is_err());
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            &[(0, 1, 1.0), (0, 1, 2.0), (1, 0, 1.0), (1, 0, -1.0), (1, 1, 4.0)],
        )
        .unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.get(1, 0), 0.0);
    }

    #[test]
    fn error_decreases_monotonically_in_energy_norm() {
        // 1D Laplacian, SPD
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + 0.1 * i as f64));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let b: Vec<f64> = (0..n).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let (exact, _) = cg_solve(&a, &b, SolveOptions::with_tol(1e-14)).unwrap();
        let mut energies = Vec::new();
        cg_solve_traced(&a, &b, SolveOptions::with_tol(1e-12), |_, x| {
            let e: Vec<f64> = x.iter().zip(&exact).map(|(a, b)| a - b).collect();
            energies.push(a.quadratic_form(&e, &e).unwrap());
        })
        .unwrap();
        for w in energies.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-28);
        }
    }

    #[test]
    fn repeated_solves_are_identical() {
        let a = CsrMatrix::from_dense(&[
            vec![3.0, 1.0, 0.0],
            vec![1.0, 4.0, 1.0],
            vec![0.0, 1.0, 5.0],
        ]);
        let b = [0.3, -1.0, 2.0];
        let (x1, r1) = cg_solve(&a, &b, SolveOptions::default()).unwrap();
        let (x2, r2) = cg_solve(&a, &b, SolveOptions::default()).unwrap();
        assert_eq!(x1, x2);
        assert_eq!(r1, r2);
    }

    #[test]
    fn unattainable_tolerance_is_not_reported_as_converged() {
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.5));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        assert!(matches!(
            cg_solve(&a, &b, SolveOptions::with_tol(1e-30)),
            Err(Error::NotConverged(_))
        ));
    }
}
