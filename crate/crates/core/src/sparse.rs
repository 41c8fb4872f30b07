//! Compressed sparse row matrices and the direct solver used for every
//! saddle-point system.

use crate::{Error, Result};
use faer::prelude::*;
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, Triplet};

/// Real sparse matrix in CSR layout with sorted, duplicate-free columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from `(row, col, value)` entries; duplicates are summed
    /// and exact zeros after summation are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(i, j, _)) = entries.iter().find(|&&(i, j, _)| i >= nrows || j >= ncols) {
            return Err(Error::SpaceMismatch(format!(
                "entry ({i}, {j}) outside a {nrows}x{ncols} matrix"
            )));
        }
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut rows = Vec::with_capacity(entries.len());
        let mut iter = entries.into_iter().peekable();
        while let Some((i, j, mut v)) = iter.next() {
            while let Some(&(i2, j2, v2)) = iter.peek() {
                if (i2, j2) != (i, j) {
                    break;
                }
                v += v2;
                iter.next();
            }
            if v != 0.0 {
                rows.push(i);
                indices.push(j);
                values.push(v);
            }
        }
        for &i in &rows {
            indptr[i + 1] += 1;
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Ok(SparseMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        })
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let t = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        SparseMatrix::from_triplets(self.ncols, self.nrows, t).expect("transposed indices in range")
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension");
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `self^T x` without forming the transpose.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "matvec_t dimension");
        let mut y = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                y[j] += v * x[i];
            }
        }
        y
    }

    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.ncols != other.nrows {
            return Err(Error::SpaceMismatch(format!(
                "product of {}x{} and {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut entries = Vec::new();
        for i in 0..self.nrows {
            let mut cols = Vec::new();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        cols.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            entries.extend(cols.into_iter().map(|j| (i, j, acc[j])));
        }
        SparseMatrix::from_triplets(self.nrows, other.ncols, entries)
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &SparseMatrix, s: f64) -> Result<SparseMatrix> {
        if (self.nrows, self.ncols) != (other.nrows, other.ncols) {
            return Err(Error::SpaceMismatch("sum of differently sized matrices".into()));
        }
        let entries = self.triplets().chain(other.triplets().map(|(i, j, v)| (i, j, s * v))).collect();
        SparseMatrix::from_triplets(self.nrows, self.ncols, entries)
    }

    pub fn scale(&self, s: f64) -> SparseMatrix {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// Rows and columns selected by index maps (`keep_rows[k]` = old row of new row `k`).
    pub fn select(&self, keep_rows: &[usize], keep_cols: &[usize]) -> SparseMatrix {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (new, &old) in keep_cols.iter().enumerate() {
            col_map[old] = new;
        }
        let entries = keep_rows
            .iter()
            .enumerate()
            .flat_map(|(ni, &oi)| {
                let col_map = &col_map;
                self.row(oi)
                    .filter(move |&(j, _)| col_map[j] != usize::MAX)
                    .map(move |(j, v)| (ni, col_map[j], v))
            })
            .collect();
        SparseMatrix::from_triplets(keep_rows.len(), keep_cols.len(), entries).expect("selected indices in range")
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] = v;
        }
        d
    }

    /// Max-row-sum norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }
}

fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Sparse LU factorization with iterative refinement and a backward-error check.
pub struct DirectSolver {
    matrix: SparseMatrix,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl std::fmt::Debug for DirectSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirectSolver")
            .field("n", &self.matrix.nrows)
            .field("nnz", &self.matrix.nnz())
            .finish()
    }
}

impl DirectSolver {
    pub fn factor(matrix: SparseMatrix) -> Result<Self> {
        if matrix.nrows != matrix.ncols {
            return Err(Error::SpaceMismatch(format!(
                "cannot factor a {}x{} matrix",
                matrix.nrows, matrix.ncols
            )));
        }
        if matrix.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver("matrix has non-finite entries".into()));
        }
        let trip: Vec<Triplet<usize, usize, f64>> = matrix.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(matrix.nrows, matrix.ncols, &trip)
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        let lu = a.sp_lu().map_err(|e| match e {
            LuError::SymbolicSingular { index } => Error::SingularSystem { pivot: index },
            LuError::Generic(g) => Error::Solver(format!("{g:?}")),
        })?;
        Ok(DirectSolver { matrix, lu })
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        self.lu.solve_in_place(x.as_mut());
        (0..b.len()).map(|i| x[(i, 0)]).collect()
    }

    /// Normwise backward error `|b - A x| / (|A| |x| + |b|)` in the max norm.
    pub fn backward_error(&self, x: &[f64], b: &[f64]) -> f64 {
        let ax = self.matrix.matvec(x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let denom = self.matrix.norm_inf() * norm_inf(x) + norm_inf(b);
        if denom == 0.0 {
            0.0
        } else {
            norm_inf(&r) / denom
        }
    }

    /// Solves `A x = b` with up to `refine_steps` refinement sweeps and fails
    /// if the final backward error exceeds `tolerance`.
    pub fn solve(&self, b: &[f64], refine_steps: usize, tolerance: f64) -> Result<Vec<f64>> {
        if b.len() != self.matrix.nrows {
            return Err(Error::SpaceMismatch("right-hand side length".into()));
        }
        let mut x = self.raw_solve(b);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem {
                pivot: x.iter().position(|v| !v.is_finite()).unwrap_or(0),
            });
        }
        let mut err = self.backward_error(&x, b);
        for _ in 0..refine_steps {
            if err < 1e-16 {
                break;
            }
            let ax = self.matrix.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let dx = self.raw_solve(&r);
            let cand: Vec<f64> = x.iter().zip(&dx).map(|(x, d)| x + d).collect();
            let e = self.backward_error(&cand, b);
            if !(e < err) {
                break;
            }
            x = cand;
            err = e;
        }
        if !(err <= tolerance) {
            let ax = self.matrix.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            return Err(Error::Residual {
                residual: norm_inf(&r),
                tolerance,
                rhs_norm: norm_inf(b),
                solution_norm: norm_inf(&x),
            });
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SparseMatrix {
        SparseMatrix::from_triplets(
            3,
            3,
            vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0), (2, 2, 2.0), (2, 2, 0.5), (1, 2, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn triplet_assembly_sums_and_drops_zeros() {
        let a = sample();
        assert_eq!(a.nnz(), 5);
        assert_eq!(a.get(2, 2), 2.5);
        assert_eq!(a.get(1, 2), 0.0);
        assert_eq!(a.max_asymmetry(), 0.0);
        assert!(SparseMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn products_match_dense() {
        let a = sample();
        let b = SparseMatrix::from_triplets(3, 2, vec![(0, 1, 2.0), (2, 0, -1.0), (1, 1, 1.0)]).unwrap();
        let c = a.matmul(&b).unwrap();
        let d = a.to_dense() * b.to_dense();
        assert!((c.to_dense() - d).amax() < 1e-15);
        assert!((a.transpose().to_dense() - a.to_dense().transpose()).amax() == 0.0);
        let x = [1.0, -2.0, 0.5];
        assert_eq!(b.matvec_t(&x), b.transpose().matvec(&x));
        let s = a.add_scaled(&a, -1.0).unwrap();
        assert_eq!(s.nnz(), 0);
        let sel = a.select(&[1, 2], &[0, 2]);
        assert_eq!(sel.get(0, 0), 1.0);
        assert_eq!(sel.get(1, 1), 2.5);
    }

    #[test]
    fn direct_solve() {
        let a = sample();
        let b = [1.0, 2.0, 3.0];
        let s = DirectSolver::factor(a.clone()).unwrap();
        let x = s.solve(&b, 2, 1e-14).unwrap();
        let r = a.matvec(&x);
        for i in 0..3 {
            assert!((r[i] - b[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_system_detected() {
        let a = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 0, 1.0)]).unwrap();
        let res = DirectSolver::factor(a).and_then(|s| s.solve(&[1.0, 1.0], 1, 1e-12));
        assert!(matches!(res, Err(Error::SingularSystem { .. }) | Err(Error::Residual { .. })));
    }
}
