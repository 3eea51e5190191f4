//! Exact sparse Gaussian elimination over the rationals.
//!
//! Rows are inserted one at a time into an echelon basis keyed by pivot
//! column. This is all the rank and null-space machinery needs, and keeps
//! constraint systems with thousands of unknowns sparse.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// A sparse row: `(column, value)` pairs sorted by column, no zeros stored.
pub type SparseRow = Vec<(usize, BigRational)>;

pub fn sparse_from_ints(row: &[i64]) -> SparseRow {
    row.iter()
        .enumerate()
        .filter(|(_, &v)| v != 0)
        .map(|(c, &v)| (c, BigRational::from_integer(BigInt::from(v))))
        .collect()
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Clone> Matrix<T> {
    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let data = (0..rows * cols).map(|i| f(i / cols, i % cols)).collect();
        Self { rows, cols, data }
    }

    pub fn get(&self, r: usize, c: usize) -> &T {
        &self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

impl Matrix<i64> {
    pub fn to_rational(&self) -> Matrix<BigRational> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|&v| BigRational::from_integer(BigInt::from(v)))
                .collect(),
        }
    }
}

impl Matrix<BigRational> {
    /// The matrix flattened row-major into one sparse row.
    pub fn vectorized(&self) -> SparseRow {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, v)| (i, v.clone()))
            .collect()
    }
}

/// `a - factor * b` for sorted sparse rows.
fn axpy(a: &SparseRow, factor: &BigRational, b: &SparseRow) -> SparseRow {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some((ca, va)), Some((cb, vb))) if ca == cb => {
                i += 1;
                j += 1;
                (*ca, va - factor * vb)
            }
            (Some((ca, va)), Some((cb, _))) if ca < cb => {
                i += 1;
                (*ca, va.clone())
            }
            (Some((ca, va)), None) => {
                i += 1;
                (*ca, va.clone())
            }
            (_, Some((cb, vb))) => {
                j += 1;
                (*cb, -(factor * vb))
            }
            (None, None) => unreachable!(),
        };
        if !next.1.is_zero() {
            out.push(next);
        }
    }
    out
}

/// Row-echelon basis of the span of all inserted rows.
#[derive(Debug, Clone, Default)]
pub struct Echelon {
    pivots: BTreeMap<usize, SparseRow>,
}

impl Echelon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a row to the span. Returns `true` when it increased the rank.
    pub fn insert(&mut self, mut row: SparseRow) -> bool {
        loop {
            let Some((lead, value)) = row.first().cloned() else {
                return false;
            };
            match self.pivots.get(&lead) {
                Some(pivot_row) => row = axpy(&row, &value, pivot_row),
                None => {
                    let inv = value.recip();
                    for (_, v) in row.iter_mut() {
                        *v *= &inv;
                    }
                    self.pivots.insert(lead, row);
                    return true;
                }
            }
        }
    }

    /// Whether `row` already lies in the span.
    pub fn contains(&self, row: &SparseRow) -> bool {
        let mut row = row.clone();
        loop {
            let Some((lead, value)) = row.first().cloned() else {
                return true;
            };
            match self.pivots.get(&lead) {
                Some(pivot_row) => row = axpy(&row, &value, pivot_row),
                None => return false,
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivot_columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.pivots.keys().copied()
    }

    /// Reduces every pivot row so no other pivot column appears in it.
    fn reduced(&self) -> BTreeMap<usize, SparseRow> {
        let mut done: BTreeMap<usize, SparseRow> = BTreeMap::new();
        for (&p, row) in self.pivots.iter().rev() {
            let mut row = row.clone();
            // Entries right of the pivot that sit in pivot columns are cleared
            // with already-reduced rows, which only carry free columns.
            let hits: Vec<(usize, BigRational)> = row
                .iter()
                .filter(|(c, _)| *c != p && done.contains_key(c))
                .cloned()
                .collect();
            for (c, v) in hits {
                row = axpy(&row, &v, &done[&c]);
            }
            done.insert(p, row);
        }
        done
    }

    /// Basis of `{x : r . x = 0 for every inserted row r}` in `ncols` unknowns,
    /// one vector per free column in increasing column order.
    pub fn nullspace(&self, ncols: usize) -> Vec<Vec<BigRational>> {
        let reduced = self.reduced();
        let free: Vec<usize> = (0..ncols).filter(|c| !reduced.contains_key(c)).collect();
        let mut slot = vec![usize::MAX; ncols];
        let mut basis: Vec<Vec<BigRational>> = free
            .iter()
            .enumerate()
            .map(|(i, &f)| {
                slot[f] = i;
                let mut v = vec![BigRational::zero(); ncols];
                v[f] = BigRational::one();
                v
            })
            .collect();
        for (&p, row) in &reduced {
            for (c, value) in row.iter().filter(|(c, _)| *c != p) {
                basis[slot[*c]][p] = -value.clone();
            }
        }
        basis
    }
}

/// Exact rank of a set of integer rows.
pub fn rank_of<'a>(rows: impl IntoIterator<Item = &'a [i64]>) -> usize {
    let mut e = Echelon::new();
    for row in rows {
        e.insert(sparse_from_ints(row));
    }
    e.rank()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    #[test]
    fn rank_of_small_matrices() {
        assert_eq!(rank_of([&[1, 0][..], &[0, 1][..]]), 2);
        assert_eq!(rank_of([&[1, 2][..], &[2, 4][..]]), 1);
        assert_eq!(rank_of([&[0, 0][..]]), 0);
        assert_eq!(
            rank_of([&[1, 1, 0][..], &[0, 1, 1][..], &[1, 0, -1][..]]),
            2
        );
    }

    #[test]
    fn nullspace_of_difference_constraints() {
        // x0 = x1 = x2, x3 free.
        let mut e = Echelon::new();
        e.insert(sparse_from_ints(&[1, -1, 0, 0]));
        e.insert(sparse_from_ints(&[0, 1, -1, 0]));
        let ns = e.nullspace(4);
        assert_eq!(ns.len(), 2);
        assert_eq!(ns[0], vec![q(1), q(1), q(1), q(0)]);
        assert_eq!(ns[1], vec![q(0), q(0), q(0), q(1)]);
    }

    #[test]
    fn nullspace_vectors_satisfy_rows() {
        let rows = [[2, 3, -1, 0, 5], [1, 0, 4, -2, 0], [3, 3, 3, 3, 3]];
        let mut e = Echelon::new();
        for r in &rows {
            e.insert(sparse_from_ints(r));
        }
        let ns = e.nullspace(5);
        assert_eq!(ns.len(), 5 - e.rank());
        for v in &ns {
            for r in &rows {
                let dot: BigRational = r.iter().zip(v).map(|(&a, x)| q(a) * x).sum();
                assert!(dot.is_zero());
            }
        }
    }

    #[test]
    fn contains_checks_membership() {
        let mut e = Echelon::new();
        e.insert(sparse_from_ints(&[1, 1, 0]));
        assert!(e.contains(&sparse_from_ints(&[2, 2, 0])));
        assert!(!e.contains(&sparse_from_ints(&[1, 0, 0])));
    }
}
