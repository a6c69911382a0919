//! Row-oriented sparse matrices and sparse echelon nullspaces.

use std::collections::BTreeMap;
use std::ops::{AddAssign, Mul};

use faer::traits::ComplexField;
use faer::Mat;
use num_traits::Zero;

/// Sparse matrix stored as per-row lists of `(column, value)` sorted by column.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    nrows: usize,
    ncols: usize,
    rows: Vec<Vec<(usize, T)>>,
}

impl<T: Copy + Zero + Mul<Output = T> + AddAssign> SparseMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix { nrows, ncols, rows: vec![Vec::new(); nrows] }
    }

    /// Builds from row lists; entries within a row are sorted and duplicates summed.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, T)>>) -> Self {
        let rows = rows
            .into_iter()
            .map(|mut r| {
                r.sort_by_key(|e| e.0);
                let mut out: Vec<(usize, T)> = Vec::with_capacity(r.len());
                for (c, v) in r {
                    assert!(c < ncols, "column {c} out of range {ncols}");
                    match out.last_mut() {
                        Some(last) if last.0 == c => last.1 += v,
                        _ => out.push((c, v)),
                    }
                }
                out
            })
            .collect::<Vec<_>>();
        SparseMatrix { nrows: rows.len(), ncols, rows }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[(usize, T)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<(usize, T)>] {
        &self.rows
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn max_row_nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.rows[i]
            .binary_search_by_key(&j, |e| e.0)
            .map(|k| self.rows[i][k].1)
            .unwrap_or_else(|_| T::zero())
    }

    pub fn transpose(&self) -> Self {
        let mut rows = vec![Vec::new(); self.ncols];
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                rows[j].push((i, v));
            }
        }
        SparseMatrix { nrows: self.ncols, ncols: self.nrows, rows }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.ncols);
        self.rows
            .iter()
            .map(|r| {
                let mut acc = T::zero();
                for &(j, v) in r {
                    acc += v * x[j];
                }
                acc
            })
            .collect()
    }

    /// Stacks matrices with equal column counts vertically.
    pub fn vstack(parts: &[SparseMatrix<T>]) -> Self {
        let ncols = parts.first().map_or(0, |p| p.ncols);
        let mut rows = Vec::new();
        for p in parts {
            assert_eq!(p.ncols, ncols);
            rows.extend(p.rows.iter().cloned());
        }
        SparseMatrix { nrows: rows.len(), ncols, rows }
    }

    pub fn map<U, F: Fn(T) -> U>(&self, f: F) -> SparseMatrix<U> {
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|&(j, v)| (j, f(v))).collect())
                .collect(),
        }
    }
}

impl<T: ComplexField + Copy + Zero + Mul<Output = T> + AddAssign> SparseMatrix<T> {
    pub fn to_dense(&self) -> Mat<T> {
        let mut m = Mat::<T>::zeros(self.nrows, self.ncols);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                m[(i, j)] = v;
            }
        }
        m
    }
}

/// Result of a sparse row-echelon reduction.
#[derive(Clone, Debug)]
pub struct Echelon {
    ncols: usize,
    /// pivot row per column, if any
    pivot_of: Vec<Option<usize>>,
    /// reduced rows; the last entry of each row is its pivot
    rows: Vec<Vec<(usize, f64)>>,
    /// input rows that reduced to zero
    pub dependent_rows: usize,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Basis of the nullspace: one vector per free column, with that column set to 1.
    pub fn nullspace(&self) -> Vec<Vec<f64>> {
        let mut pivot_cols: Vec<usize> =
            (0..self.ncols).filter(|&c| self.pivot_of[c].is_some()).collect();
        pivot_cols.sort_unstable();
        let free: Vec<usize> = (0..self.ncols).filter(|&c| self.pivot_of[c].is_none()).collect();
        free.iter()
            .map(|&f| {
                let mut x = vec![0.0; self.ncols];
                x[f] = 1.0;
                for &c in pivot_cols.iter().filter(|&&c| c > f) {
                    let row = &self.rows[self.pivot_of[c].unwrap()];
                    let (last, rest) = row.split_last().unwrap();
                    let s: f64 = rest.iter().map(|&(j, v)| v * x[j]).sum();
                    x[c] = -s / last.1;
                }
                x
            })
            .collect()
    }
}

/// Sparse row-echelon reduction. Rows are processed in order; each row is
/// reduced against earlier pivots at its largest column index until that
/// column has no pivot yet. Entries below `tol` times the largest magnitude
/// seen are dropped.
pub fn echelon(m: &SparseMatrix<f64>, tol: f64) -> Echelon {
    let mut scale = m
        .rows()
        .iter()
        .flat_map(|r| r.iter().map(|e| e.1.abs()))
        .fold(0.0, f64::max);
    let mut pivot_of: Vec<Option<usize>> = vec![None; m.ncols()];
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut dependent_rows = 0;
    for r in m.rows() {
        let mut work: BTreeMap<usize, f64> = r.iter().copied().filter(|e| e.1 != 0.0).collect();
        loop {
            let Some((&c, &v)) = work.iter().next_back() else {
                dependent_rows += 1;
                break;
            };
            if v.abs() <= tol * scale {
                work.remove(&c);
                continue;
            }
            match pivot_of[c] {
                Some(p) => {
                    let prow = &rows[p];
                    let factor = v / prow.last().unwrap().1;
                    work.remove(&c);
                    for &(j, pv) in &prow[..prow.len() - 1] {
                        let e = work.entry(j).or_insert(0.0);
                        *e -= factor * pv;
                        scale = scale.max(e.abs());
                    }
                }
                None => {
                    pivot_of[c] = Some(rows.len());
                    rows.push(work.into_iter().filter(|e| e.1 != 0.0).collect());
                    break;
                }
            }
        }
    }
    Echelon { ncols: m.ncols(), pivot_of, rows, dependent_rows }
}
