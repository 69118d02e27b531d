//! Sparse integer matrices and Smith normal form.
//!
//! Boundary operators are integer matrices; their kernels, images and
//! quotients are computed exactly. Elimination runs on arbitrary-precision
//! integers so no intermediate value can overflow, and pivots are chosen to
//! keep fill-in low (smallest magnitude first, then smallest Markowitz
//! count). The decomposition tracks both transforms and their inverses:
//! `p * a * q = d` with `p`, `q` unimodular and `d` diagonal with each
//! diagonal entry dividing the next.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};

/// Row-major sparse integer matrix with a column occupancy index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseIntMat {
    pub rows: usize,
    pub cols: usize,
    row_data: Vec<BTreeMap<usize, BigInt>>,
    col_rows: Vec<BTreeSet<usize>>,
}

impl SparseIntMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseIntMat {
            rows,
            cols,
            row_data: vec![BTreeMap::new(); rows],
            col_rows: vec![BTreeSet::new(); cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_i64_rows(data: &[Vec<i64>]) -> Self {
        let rows = data.len();
        let cols = data.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows, cols);
        for (i, row) in data.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0 {
                    m.set(i, j, BigInt::from(v));
                }
            }
        }
        m
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        if v.is_zero() {
            if self.row_data[i].remove(&j).is_some() {
                self.col_rows[j].remove(&i);
            }
        } else {
            self.row_data[i].insert(j, v);
            self.col_rows[j].insert(i);
        }
    }

    pub fn get(&self, i: usize, j: usize) -> BigInt {
        self.row_data[i].get(&j).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn is_zero_at(&self, i: usize, j: usize) -> bool {
        !self.row_data[i].contains_key(&j)
    }

    pub fn add_to(&mut self, i: usize, j: usize, delta: &BigInt) {
        if delta.is_zero() {
            return;
        }
        let v = self.get(i, j) + delta;
        self.set(i, j, v);
    }

    pub fn nnz(&self) -> usize {
        self.row_data.iter().map(|r| r.len()).sum()
    }

    pub fn row(&self, i: usize) -> &BTreeMap<usize, BigInt> {
        &self.row_data[i]
    }

    pub fn col_occupancy(&self, j: usize) -> &BTreeSet<usize> {
        &self.col_rows[j]
    }

    /// Column `j` as a dense vector of length `rows`.
    pub fn col_vec(&self, j: usize) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); self.rows];
        for &i in &self.col_rows[j] {
            out[i] = self.row_data[i][&j].clone();
        }
        out
    }

    /// `row_i += c * row_j` (i != j).
    pub fn row_axpy(&mut self, i: usize, j: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        let src: Vec<(usize, BigInt)> =
            self.row_data[j].iter().map(|(k, v)| (*k, v.clone())).collect();
        for (k, v) in src {
            self.add_to(i, k, &(c * v));
        }
    }

    /// `col_j += c * col_i` (i != j).
    pub fn col_axpy(&mut self, j: usize, i: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        let src: Vec<(usize, BigInt)> = self.col_rows[i]
            .iter()
            .map(|&r| (r, self.row_data[r][&i].clone()))
            .collect();
        for (r, v) in src {
            self.add_to(r, j, &(c * v));
        }
    }

    pub fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        let cols: BTreeSet<usize> = self.row_data[i]
            .keys()
            .chain(self.row_data[j].keys())
            .copied()
            .collect();
        self.row_data.swap(i, j);
        for c in cols {
            let has_i = self.row_data[i].contains_key(&c);
            let has_j = self.row_data[j].contains_key(&c);
            if has_i {
                self.col_rows[c].insert(i);
            } else {
                self.col_rows[c].remove(&i);
            }
            if has_j {
                self.col_rows[c].insert(j);
            } else {
                self.col_rows[c].remove(&j);
            }
        }
    }

    pub fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        let rows: Vec<usize> = self.col_rows[i].union(&self.col_rows[j]).copied().collect();
        for r in rows {
            let vi = self.row_data[r].remove(&i);
            let vj = self.row_data[r].remove(&j);
            self.col_rows[i].remove(&r);
            self.col_rows[j].remove(&r);
            if let Some(v) = vi {
                self.row_data[r].insert(j, v);
                self.col_rows[j].insert(r);
            }
            if let Some(v) = vj {
                self.row_data[r].insert(i, v);
                self.col_rows[i].insert(r);
            }
        }
    }

    pub fn negate_row(&mut self, i: usize) {
        for v in self.row_data[i].values_mut() {
            *v = -v.clone();
        }
    }

    pub fn negate_col(&mut self, j: usize) {
        let rows: Vec<usize> = self.col_rows[j].iter().copied().collect();
        for r in rows {
            let v = self.row_data[r].get_mut(&j).expect("occupied");
            *v = -v.clone();
        }
    }

    pub fn mul(&self, other: &SparseIntMat) -> SparseIntMat {
        assert_eq!(self.cols, other.rows);
        let mut out = SparseIntMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for (k, a) in &self.row_data[i] {
                for (j, b) in &other.row_data[*k] {
                    out.add_to(i, *j, &(a * b));
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> SparseIntMat {
        let mut out = SparseIntMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for (j, v) in &self.row_data[i] {
                out.set(*j, i, v.clone());
            }
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        self.nnz() == self.rows
            && (0..self.rows).all(|i| self.row_data[i].get(&i).is_some_and(|v| v.is_one()))
    }

    /// Apply to a dense integer vector: `self * x`.
    pub fn apply(&self, x: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row_data[i]
                    .iter()
                    .map(|(j, v)| v * &x[*j])
                    .sum::<BigInt>()
            })
            .collect()
    }
}

/// Smith normal form `p * a * q = d` with tracked transform inverses.
#[derive(Debug, Clone)]
pub struct Snf {
    pub d: SparseIntMat,
    pub p: SparseIntMat,
    pub p_inv: SparseIntMat,
    pub q: SparseIntMat,
    pub q_inv: SparseIntMat,
    pub rank: usize,
}

impl Snf {
    /// Nonzero diagonal entries `d_1 | d_2 | ... | d_rank`.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        (0..self.rank).map(|i| self.d.get(i, i)).collect()
    }
}

/// Compute the Smith normal form of `a`.
pub fn smith_normal_form(a: &SparseIntMat) -> Snf {
    let mut d = a.clone();
    let mut p = SparseIntMat::identity(a.rows);
    let mut p_inv = SparseIntMat::identity(a.rows);
    let mut q = SparseIntMat::identity(a.cols);
    let mut q_inv = SparseIntMat::identity(a.cols);

    let mut t = 0usize;
    while t < d.rows.min(d.cols) {
        // Pivot: smallest |value| in the active submatrix, then smallest
        // Markowitz count, then smallest (row, col).
        let mut pivot: Option<(usize, usize, BigInt, usize)> = None;
        for i in t..d.rows {
            for (j, v) in d.row(i).range(t..) {
                let mark = (d.row(i).range(t..).count() - 1)
                    * (d.col_occupancy(*j).range(t..).count() - 1);
                let better = match &pivot {
                    None => true,
                    Some((_, _, bv, bm)) => {
                        let am = v.abs();
                        let bva = bv.abs();
                        am < bva || (am == bva && mark < *bm)
                    }
                };
                if better {
                    pivot = Some((i, *j, v.clone(), mark));
                }
            }
        }
        let Some((pi, pj, _, _)) = pivot else {
            break; // active submatrix is zero
        };
        swap_rows(&mut d, &mut p, &mut p_inv, t, pi);
        swap_cols(&mut d, &mut q, &mut q_inv, t, pj);

        // Clear row t and column t; a nonzero remainder becomes the new,
        // strictly smaller pivot, so this loop terminates.
        loop {
            let mut dirty = false;
            let col_entries: Vec<usize> = d
                .col_occupancy(t)
                .range(t + 1..)
                .copied()
                .collect();
            for i in col_entries {
                let val = d.get(i, t);
                if val.is_zero() {
                    continue;
                }
                let piv = d.get(t, t);
                let quo = &val / &piv;
                row_axpy(&mut d, &mut p, &mut p_inv, i, t, &-quo);
                if !d.is_zero_at(i, t) {
                    // remainder smaller than pivot: promote it
                    swap_rows(&mut d, &mut p, &mut p_inv, t, i);
                    dirty = true;
                }
            }
            let row_entries: Vec<usize> = d.row(t).range(t + 1..).map(|(j, _)| *j).collect();
            for j in row_entries {
                let val = d.get(t, j);
                if val.is_zero() {
                    continue;
                }
                let piv = d.get(t, t);
                let quo = &val / &piv;
                col_axpy(&mut d, &mut q, &mut q_inv, j, t, &-quo);
                if !d.is_zero_at(t, j) {
                    swap_cols(&mut d, &mut q, &mut q_inv, t, j);
                    dirty = true;
                }
            }
            if !dirty
                && d.col_occupancy(t).range(t + 1..).next().is_none()
                && d.row(t).range(t + 1..).next().is_none()
            {
                break;
            }
        }
        if d.get(t, t).is_negative() {
            negate_row(&mut d, &mut p, &mut p_inv, t);
        }
        t += 1;
    }
    let rank = t;

    // Enforce the divisibility chain d_i | d_{i+1} by folding offending
    // pairs: add column j into column i, then re-reduce the 2x2 block.
    loop {
        let mut fixed = true;
        for i in 0..rank.saturating_sub(1) {
            let di = d.get(i, i);
            let dj = d.get(i + 1, i + 1);
            if (&dj % &di).is_zero() {
                continue;
            }
            fixed = false;
            col_axpy(&mut d, &mut q, &mut q_inv, i, i + 1, &BigInt::one());
            // 2x2 gcd dance on rows/cols i, i+1.
            loop {
                let a = d.get(i, i);
                let b = d.get(i + 1, i);
                if b.is_zero() {
                    break;
                }
                let quo = &b / &a;
                row_axpy(&mut d, &mut p, &mut p_inv, i + 1, i, &-quo);
                if !d.is_zero_at(i + 1, i) {
                    swap_rows(&mut d, &mut p, &mut p_inv, i, i + 1);
                }
            }
            // Row i may now have an entry at column i+1; clear it.
            loop {
                let b = d.get(i, i + 1);
                if b.is_zero() {
                    break;
                }
                let a = d.get(i, i);
                let quo = &b / &a;
                col_axpy(&mut d, &mut q, &mut q_inv, i + 1, i, &-quo);
                if !d.is_zero_at(i, i + 1) {
                    swap_cols(&mut d, &mut q, &mut q_inv, i, i + 1);
                }
            }
            if d.get(i, i).is_negative() {
                negate_row(&mut d, &mut p, &mut p_inv, i);
            }
            if d.get(i + 1, i + 1).is_negative() {
                negate_row(&mut d, &mut p, &mut p_inv, i + 1);
            }
        }
        if fixed {
            break;
        }
    }

    Snf {
        d,
        p,
        p_inv,
        q,
        q_inv,
        rank,
    }
}

fn swap_rows(d: &mut SparseIntMat, p: &mut SparseIntMat, p_inv: &mut SparseIntMat, i: usize, j: usize) {
    d.swap_rows(i, j);
    p.swap_rows(i, j);
    p_inv.swap_cols(i, j);
}

fn swap_cols(d: &mut SparseIntMat, q: &mut SparseIntMat, q_inv: &mut SparseIntMat, i: usize, j: usize) {
    d.swap_cols(i, j);
    q.swap_cols(i, j);
    q_inv.swap_rows(i, j);
}

fn row_axpy(d: &mut SparseIntMat, p: &mut SparseIntMat, p_inv: &mut SparseIntMat, i: usize, j: usize, c: &BigInt) {
    d.row_axpy(i, j, c);
    p.row_axpy(i, j, c);
    p_inv.col_axpy(j, i, &-c); // right-multiply by inverse elementary op
}

fn col_axpy(d: &mut SparseIntMat, q: &mut SparseIntMat, q_inv: &mut SparseIntMat, j: usize, i: usize, c: &BigInt) {
    d.col_axpy(j, i, c);
    q.col_axpy(j, i, c);
    q_inv.row_axpy(i, j, &-c);
}

fn negate_row(d: &mut SparseIntMat, p: &mut SparseIntMat, p_inv: &mut SparseIntMat, i: usize) {
    d.negate_row(i);
    p.negate_row(i);
    p_inv.negate_col(i);
}

/// Determinant of a small dense integer matrix (Bareiss fraction-free
/// elimination; exact).
pub fn det_dense(m: &[Vec<i64>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    assert!(m.iter().all(|r| r.len() == n), "determinant needs a square matrix");
    let mut a: Vec<Vec<BigInt>> = m
        .iter()
        .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
        .collect();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            let Some(swap) = (k + 1..n).find(|&i| !a[i][k].is_zero()) else {
                return BigInt::zero();
            };
            a.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = num / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * a[n - 1][n - 1].clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn check_decomposition(a: &SparseIntMat, snf: &Snf) {
        assert!(snf.p.mul(&snf.p_inv).is_identity(), "p * p_inv != I");
        assert!(snf.q.mul(&snf.q_inv).is_identity(), "q * q_inv != I");
        let paq = snf.p.mul(a).mul(&snf.q);
        assert_eq!(paq, snf.d, "p*a*q != d");
        // Diagonal, non-negative, divisibility chain.
        for i in 0..snf.d.rows {
            for (j, v) in snf.d.row(i) {
                assert!(*j == i && !v.is_negative(), "off-diagonal or negative entry");
            }
        }
        let facs = snf.invariant_factors();
        for w in facs.windows(2) {
            assert!((&w[1] % &w[0]).is_zero(), "divisibility chain broken: {facs:?}");
        }
    }

    #[test]
    fn classic_three_by_three() {
        // Textbook example with invariant factors 2, 6, 12.
        let a = SparseIntMat::from_i64_rows(&[
            vec![2, 4, 4],
            vec![-6, 6, 12],
            vec![10, -4, -16],
        ]);
        let snf = smith_normal_form(&a);
        check_decomposition(&a, &snf);
        assert_eq!(
            snf.invariant_factors(),
            vec![BigInt::from(2), BigInt::from(6), BigInt::from(12)]
        );
    }

    #[test]
    fn triangle_boundary() {
        // Vertex-edge incidence of a 3-cycle: rank 2, factors (1, 1).
        let a = SparseIntMat::from_i64_rows(&[
            vec![-1, 0, 1],
            vec![1, -1, 0],
            vec![0, 1, -1],
        ]);
        let snf = smith_normal_form(&a);
        check_decomposition(&a, &snf);
        assert_eq!(snf.rank, 2);
        assert_eq!(snf.invariant_factors(), vec![BigInt::one(), BigInt::one()]);
    }

    #[test]
    fn zero_matrix() {
        let a = SparseIntMat::zeros(3, 2);
        let snf = smith_normal_form(&a);
        check_decomposition(&a, &snf);
        assert_eq!(snf.rank, 0);
    }

    #[test]
    fn torsion_factor() {
        let a = SparseIntMat::from_i64_rows(&[vec![2, 0], vec![0, 3]]);
        let snf = smith_normal_form(&a);
        check_decomposition(&a, &snf);
        assert_eq!(
            snf.invariant_factors(),
            vec![BigInt::one(), BigInt::from(6)]
        );
    }

    #[test]
    fn determinant_bareiss() {
        assert_eq!(det_dense(&[vec![0, 1], vec![-1, 0]]), BigInt::one());
        assert_eq!(
            det_dense(&[vec![2, 0, 1], vec![1, 1, 0], vec![0, 3, 1]]),
            BigInt::from(5)
        );
        assert_eq!(det_dense(&[vec![1, 2], vec![2, 4]]), BigInt::zero());
    }

    proptest! {
        #[test]
        fn random_matrices_decompose(rows in 1usize..5, cols in 1usize..5,
                                     seed in proptest::collection::vec(-9i64..10, 25)) {
            let data: Vec<Vec<i64>> = (0..rows)
                .map(|i| (0..cols).map(|j| seed[i * 5 + j]).collect())
                .collect();
            let a = SparseIntMat::from_i64_rows(&data);
            let snf = smith_normal_form(&a);
            check_decomposition(&a, &snf);
        }
    }
}
