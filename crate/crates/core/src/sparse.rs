//! Compressed-row sparse matrices and the direct solver used by both
//! discretizations.
//!
//! Assembly goes through [`TripletBuilder`], which sums duplicate entries on
//! finalization. Factorization is delegated to faer's sparse LU; callers only
//! see the residual-based contract of [`solve`].

use crate::error::{Error, Result};
use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

/// Accumulates `(row, col, value)` contributions before compression.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::with_capacity(5 * n),
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    /// Sort, merge duplicates and compress. Explicit zeros produced by
    /// cancellation are kept so the sparsity pattern depends only on the
    /// assembly loop.
    pub fn build(mut self) -> SparseMatrix {
        self.entries
            .sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix {
            n: self.n,
            row_ptr,
            cols,
            vals,
        }
    }
}

/// Square CSR matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(col, value)` pairs of one row, ordered by column.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for (_, j, v) in self.triplets() {
            s[j] += v;
        }
        s
    }

    /// Largest number of stored entries in any row.
    pub fn max_row_nnz(&self) -> usize {
        (0..self.n)
            .map(|i| self.row_ptr[i + 1] - self.row_ptr[i])
            .max()
            .unwrap_or(0)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.triplets()
            .all(|(i, j, v)| (v - self.get(j, i)).abs() <= tol * v.abs().max(1.0))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, j, v) in self.triplets() {
            d[i][j] += v;
        }
        d
    }

    /// Checks the two ingredients of a column-wise diagonally dominant
    /// M-matrix: nonpositive off-diagonal entries, and a positive diagonal that
    /// dominates the absolute off-diagonal column sum. `tol` is relative to
    /// the diagonal.
    pub fn mmatrix_report(&self, tol: f64) -> MMatrixReport {
        let diag = self.diagonal();
        let mut off_col = vec![0.0; self.n];
        let mut worst_positive_offdiag = 0.0f64;
        for (i, j, v) in self.triplets() {
            if i != j {
                off_col[j] += v.abs();
                if v > 0.0 {
                    let scale = diag[i].abs().max(diag[j].abs()).max(f64::MIN_POSITIVE);
                    worst_positive_offdiag = worst_positive_offdiag.max(v / scale);
                }
            }
        }
        let mut worst_dominance = f64::INFINITY;
        let mut nonpositive_diag = false;
        for j in 0..self.n {
            if diag[j] <= 0.0 {
                nonpositive_diag = true;
            }
            let margin = (diag[j] - off_col[j]) / diag[j].abs().max(f64::MIN_POSITIVE);
            worst_dominance = worst_dominance.min(margin);
        }
        MMatrixReport {
            offdiag_nonpositive: worst_positive_offdiag <= tol,
            column_dominant: !nonpositive_diag && worst_dominance >= -tol,
            worst_positive_offdiag,
            worst_dominance_margin: worst_dominance,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MMatrixReport {
    pub offdiag_nonpositive: bool,
    pub column_dominant: bool,
    pub worst_positive_offdiag: f64,
    pub worst_dominance_margin: f64,
}

impl MMatrixReport {
    pub fn passes(&self) -> bool {
        self.offdiag_nonpositive && self.column_dominant
    }
}

/// `‖A x − b‖∞`.
pub fn residual_inf(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    a.mul_vec(x)
        .iter()
        .zip(b)
        .map(|(ax, bi)| (ax - bi).abs())
        .fold(0.0, f64::max)
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solves `A x = b` by sparse LU and verifies `‖A x − b‖∞ ≤ tol·max(‖b‖∞, ‖A‖·‖x‖)`.
///
/// A one-step iterative refinement is applied when the first residual misses
/// the bound.
pub fn solve(a: &SparseMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = a.size();
    if b.len() != n {
        return Err(Error::LinearSolve(format!(
            "right-hand side has length {} for a {n}x{n} system",
            b.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let trips: Vec<Triplet<usize, usize, f64>> = a
        .triplets()
        .map(|(i, j, v)| Triplet::new(i, j, v))
        .collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trips)
        .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
    let lu = mat
        .sp_lu()
        .map_err(|e| Error::LinearSolve(format!("factorization failed: {e:?}")))?;
    let rhs = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
    let sol = lu.solve(&rhs);
    let mut x: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::RankDeficient(
            "factorization produced non-finite values".into(),
        ));
    }
    let scale = |x: &[f64]| {
        let amax = a.triplets().fold(0.0f64, |m, (_, _, v)| m.max(v.abs()));
        norm_inf(b).max(amax * norm_inf(x)).max(f64::MIN_POSITIVE)
    };
    let mut res = residual_inf(a, &x, b);
    if res > tol * scale(&x) {
        let r: Vec<f64> = a.mul_vec(&x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
        let corr = lu.solve(&Mat::<f64>::from_fn(n, 1, |i, _| r[i]));
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += corr[(i, 0)];
        }
        res = residual_inf(a, &x, b);
    }
    if !(res <= tol * scale(&x)) {
        return Err(Error::LinearSolve(format!(
            "residual {res:.3e} exceeds tolerance {tol:.1e}"
        )));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut b = TripletBuilder::new(2);
        b.add(0, 0, 1.0);
        b.add(0, 0, 2.0);
        b.add(1, 0, -1.0);
        b.add(1, 1, 4.0);
        let m = b.build();
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.column_sums(), vec![2.0, 4.0]);
    }

    #[test]
    fn solves_small_system() {
        let mut b = TripletBuilder::new(3);
        for (i, j, v) in [
            (0, 0, 4.0),
            (0, 1, -1.0),
            (1, 0, -1.0),
            (1, 1, 4.0),
            (1, 2, -1.0),
            (2, 1, -1.0),
            (2, 2, 4.0),
        ] {
            b.add(i, j, v);
        }
        let m = b.build();
        let x = solve(&m, &[3.0, 2.0, 3.0], 1e-12).unwrap();
        for xi in x {
            assert!((xi - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn one_by_one() {
        let mut b = TripletBuilder::new(1);
        b.add(0, 0, 2.5);
        let x = solve(&b.build(), &[5.0], 1e-14).unwrap();
        assert_eq!(x, vec![2.0]);
    }

    #[test]
    fn mmatrix_report_detects_positive_offdiagonal() {
        let mut b = TripletBuilder::new(2);
        b.add(0, 0, 2.0);
        b.add(0, 1, 0.5);
        b.add(1, 1, 2.0);
        let r = b.build().mmatrix_report(0.0);
        assert!(!r.offdiag_nonpositive);
    }
}
