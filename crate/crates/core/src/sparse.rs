//! Compressed sparse row matrices and a symmetric positive-definite solver.
//!
//! The solver applies symmetric Jacobi scaling, a reverse Cuthill-McKee ordering and an
//! envelope (profile) Cholesky factorization. Fill is confined to the envelope of the
//! reordered matrix, which stays narrow for mesh-derived systems.

use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// General sparse real matrix in CSR form. Column indices within a row are strictly
/// increasing, so iteration order is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Assembles from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::argument(format!(
                    "entry ({r}, {c}) outside a {nrows}x{ncols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::argument(format!("entry ({r}, {c}) is not finite")));
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map(|k| vals[k]).unwrap_or(0.0)
    }

    /// Row-major (row, col, value) entries.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "dimension mismatch in mul_vec");
        (0..self.nrows)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t).expect("transpose keeps indices in range")
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(Error::argument(format!(
                "cannot multiply {}x{} by {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut acc = vec![0.0; other.ncols];
        let mut touched = vec![false; other.ncols];
        let mut pattern: Vec<usize> = Vec::new();
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&k, &a) in cols.iter().zip(vals) {
                let (ocols, ovals) = other.row(k);
                for (&c, &b) in ocols.iter().zip(ovals) {
                    if !touched[c] {
                        touched[c] = true;
                        pattern.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            pattern.sort_unstable();
            for &c in &pattern {
                col_idx.push(c);
                values.push(acc[c]);
                acc[c] = 0.0;
                touched[c] = false;
            }
            pattern.clear();
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: other.ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn add(&self, other: &SparseMatrix) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::argument("cannot add matrices of different shapes"));
        }
        let t: Vec<_> = self.triplets().chain(other.triplets()).collect();
        Self::from_triplets(self.nrows, self.ncols, &t)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            d[(r, c)] += v;
        }
        d
    }

    /// Largest |A_ij - A_ji|; panics-free for non-square input (returns infinity).
    pub fn max_asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        self.triplets()
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }
}

/// Reverse Cuthill-McKee ordering of a symmetric sparsity pattern.
/// `perm[new] = old`. Each component starts from its lowest-degree vertex
/// (lowest index on ties); neighbours are visited by increasing degree, then index.
pub fn reverse_cuthill_mckee(a: &SparseMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|r| a.row(r).0.iter().copied().filter(|&c| c != r).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree[u], u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope Cholesky factorization of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct SparseCholesky {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// Jacobi scaling, indexed by original row.
    scale: Vec<f64>,
    /// First column of the envelope in each (permuted) row.
    first: Vec<usize>,
    /// Offset of row i's envelope in `data`; row i occupies `first[i]..=i`.
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl SparseCholesky {
    /// Factors `a`, which must be square, symmetric and positive definite.
    /// Only the lower triangle is read.
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::argument("Cholesky needs a square matrix"));
        }
        let mut scale = vec![0.0; n];
        for (i, s) in scale.iter_mut().enumerate() {
            let d = a.get(i, i);
            if !(d > 0.0) {
                return Err(Error::Solver(format!(
                    "matrix is not positive definite: diagonal entry {i} is {d}"
                )));
            }
            *s = 1.0 / d.sqrt();
        }
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (r, c, _) in a.triplets() {
            let (i, j) = (inv[r], inv[c]);
            if j < i {
                first[i] = first[i].min(j);
            }
        }
        let mut offset = Vec::with_capacity(n);
        let mut len = 0;
        for i in 0..n {
            offset.push(len);
            len += i - first[i] + 1;
        }
        let mut data = vec![0.0; len];
        for (r, c, v) in a.triplets() {
            let (i, j) = (inv[r], inv[c]);
            if j <= i {
                data[offset[i] + j - first[i]] = v * scale[r] * scale[c];
            }
        }

        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = data[offset[i] + j - fi];
                let ri = offset[i] + k0 - fi;
                let rj = offset[j] + k0 - fj;
                for k in 0..(j - k0) {
                    s -= data[ri + k] * data[rj + k];
                }
                data[offset[i] + j - fi] = s / data[offset[j] + j - fj];
            }
            let row = &data[offset[i]..offset[i] + i - fi];
            let d = data[offset[i] + i - fi] - row.iter().map(|x| x * x).sum::<f64>();
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Solver(format!(
                    "matrix is not numerically positive definite at row {} (pivot {d:e})",
                    perm[i]
                )));
            }
            data[offset[i] + i - fi] = d.sqrt();
        }
        Ok(Self {
            n,
            perm,
            scale,
            first,
            offset,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored envelope entries.
    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "dimension mismatch in solve");
        let n = self.n;
        let mut y: Vec<f64> = (0..n).map(|i| b[self.perm[i]] * self.scale[self.perm[i]]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..=self.offset[i] + i - fi];
            let s: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(l, x)| l * x).sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..=self.offset[i] + i - fi];
            y[i] /= row[i - fi];
            let yi = y[i];
            for (k, l) in row[..i - fi].iter().enumerate() {
                y[fi + k] -= l * yi;
            }
        }
        let mut x = vec![0.0; n];
        for i in 0..n {
            let old = self.perm[i];
            x[old] = y[i] * self.scale[old];
        }
        x
    }
}

/// Euclidean norm helper.
pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `a x = b` with a factorization of `a`, applying iterative refinement while the
/// relative residual `|b - a x| / |b|` exceeds `target`. Fails if the best residual
/// reached is not below `limit`. Returns the solution and its relative residual.
pub fn solve_refined(
    a: &SparseMatrix,
    chol: &SparseCholesky,
    b: &[f64],
    target: f64,
    limit: f64,
) -> Result<(Vec<f64>, f64)> {
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; b.len()], 0.0));
    }
    let residual = |x: &[f64]| -> Vec<f64> {
        let ax = a.mul_vec(x);
        b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
    };
    let mut x = chol.solve(b);
    let mut r = residual(&x);
    let mut rel = norm(&r) / bnorm;
    for _ in 0..4 {
        if rel < target {
            break;
        }
        let dx = chol.solve(&r);
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(xi, d)| xi + d).collect();
        let rc = residual(&candidate);
        let rel_c = norm(&rc) / bnorm;
        if rel_c >= rel {
            break;
        }
        x = candidate;
        r = rc;
        rel = rel_c;
    }
    if rel < limit {
        Ok((x, rel))
    } else {
        Err(Error::Solver(format!(
            "relative residual {rel:e} of the normal equations exceeds {limit:e}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplacian_1d(n: usize, shift: f64) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + shift));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SparseMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn duplicates_are_summed_and_rows_sorted() {
        let m = SparseMatrix::from_triplets(2, 3, &[(1, 2, 1.0), (0, 1, 2.0), (1, 2, 3.0), (1, 0, 1.0)]).unwrap();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(1, 2), 4.0);
        assert_eq!(m.row(1).0, &[0, 2]);
        assert!(SparseMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn matmul_and_transpose_match_dense() {
        let a = SparseMatrix::from_triplets(3, 2, &[(0, 0, 1.0), (1, 1, 2.0), (2, 0, -3.0), (2, 1, 0.5)]).unwrap();
        let b = SparseMatrix::from_triplets(2, 3, &[(0, 2, 4.0), (1, 0, 1.0), (1, 1, -1.0)]).unwrap();
        let p = a.matmul(&b).unwrap();
        assert!((p.to_dense() - a.to_dense() * b.to_dense()).amax() < 1e-15);
        assert_eq!(a.transpose().to_dense(), a.to_dense().transpose());
    }

    #[test]
    fn rejects_indefinite() {
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]).unwrap();
        assert!(matches!(SparseCholesky::factor(&m), Err(Error::Solver(_))));
    }

    #[test]
    fn rcm_keeps_a_path_banded() {
        // a path graph numbered in a scrambled order
        let n = 30;
        let order: Vec<usize> = (0..n).map(|i| (i * 7) % n).collect();
        let mut t = Vec::new();
        for w in order.windows(2) {
            t.push((w[0], w[1], -1.0));
            t.push((w[1], w[0], -1.0));
        }
        for i in 0..n {
            t.push((i, i, 3.0));
        }
        let a = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let chol = SparseCholesky::factor(&a).unwrap();
        assert_eq!(chol.envelope_size(), 2 * n - 1);
    }

    proptest! {
        #[test]
        fn cholesky_solves_spd_systems(n in 2usize..40, shift in 1e-3f64..2.0, seed in 0u64..1000) {
            let a = laplacian_1d(n, shift);
            let b: Vec<f64> = (0..n).map(|i| ((i as u64 * 2654435761 + seed) % 97) as f64 - 48.0).collect();
            let chol = SparseCholesky::factor(&a).unwrap();
            let (x, rel) = solve_refined(&a, &chol, &b, 1e-14, 1e-12).unwrap();
            prop_assert!(rel < 1e-12);
            let dense = a.to_dense().lu().solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
            for i in 0..n {
                prop_assert!((x[i] - dense[i]).abs() <= 1e-9 * (1.0 + dense.amax()));
            }
        }
    }
}
