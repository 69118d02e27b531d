//! Sparse floating-point linear algebra: CSR matrices, conjugate gradients
//! for symmetric positive (semi-)definite systems, and BiCGSTAB for the
//! nonsymmetric systems produced by mean-value embeddings. Both solvers use
//! Jacobi preconditioning and report the achieved relative residual.

use std::collections::BTreeMap;

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n_rows: usize,
    pub n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Triplet accumulator; duplicate entries sum.
#[derive(Debug, Clone)]
pub struct CooBuilder {
    n_rows: usize,
    n_cols: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl CooBuilder {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        CooBuilder {
            n_rows,
            n_cols,
            entries: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.n_rows && j < self.n_cols);
        if v != 0.0 {
            *self.entries.entry((i, j)).or_insert(0.0) += v;
        }
    }

    pub fn build(self) -> Csr {
        let mut row_ptr = vec![0usize; self.n_rows + 1];
        for &(i, _) in self.entries.keys() {
            row_ptr[i + 1] += 1;
        }
        for i in 0..self.n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values = Vec::with_capacity(self.entries.len());
        for ((_, j), v) in self.entries {
            col_idx.push(j);
            values.push(v);
        }
        Csr {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

impl Csr {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[a..b]
            .iter()
            .zip(&self.values[a..b])
            .map(|(&j, &v)| (j, v))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        let mut y = vec![0.0; self.n_rows];
        for i in 0..self.n_rows {
            let mut acc = 0.0;
            for (j, v) in self.row(i) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_rows.min(self.n_cols)];
        for i in 0..d.len() {
            for (j, v) in self.row(i) {
                if j == i {
                    d[i] = v;
                }
            }
        }
        d
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn jacobi_inverse(a: &Csr) -> Vec<f64> {
    a.diagonal()
        .iter()
        .map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
        .collect()
}

/// Preconditioned conjugate gradients for symmetric positive
/// (semi-)definite systems. The residual target is relative to `|b|`.
pub fn cg_solve(
    a: &Csr,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, SolveStats) {
    let n = b.len();
    assert_eq!(a.n_rows, n);
    let m_inv = jacobi_inverse(a);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let b_norm = norm(b).max(f64::MIN_POSITIVE);
    let mut r = b.to_vec();
    axpy(&mut r, -1.0, &a.mul_vec(&x));
    let mut z: Vec<f64> = r.iter().zip(&m_inv).map(|(ri, mi)| ri * mi).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = norm(&r) / b_norm;
    let mut it = 0;
    while res > tol && it < max_iter {
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if pap.abs() < f64::MIN_POSITIVE {
            break;
        }
        let alpha = rz / pap;
        axpy(&mut x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        for ((zi, ri), mi) in z.iter_mut().zip(&r).zip(&m_inv) {
            *zi = ri * mi;
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        res = norm(&r) / b_norm;
        it += 1;
    }
    (
        x,
        SolveStats {
            iterations: it,
            relative_residual: res,
            converged: res <= tol,
        },
    )
}

/// Jacobi-preconditioned BiCGSTAB for general square systems.
pub fn bicgstab_solve(
    a: &Csr,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, SolveStats) {
    let n = b.len();
    assert_eq!(a.n_rows, n);
    let m_inv = jacobi_inverse(a);
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&m_inv).map(|(x, m)| x * m).collect() };
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let b_norm = norm(b).max(f64::MIN_POSITIVE);
    let mut r = b.to_vec();
    axpy(&mut r, -1.0, &a.mul_vec(&x));
    let r_hat = r.clone();
    let mut rho = 1.0f64;
    let mut alpha = 1.0f64;
    let mut omega = 1.0f64;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut res = norm(&r) / b_norm;
    let mut it = 0;
    while res > tol && it < max_iter {
        let rho_next = dot(&r_hat, &r);
        if rho_next.abs() < 1e-300 {
            break;
        }
        let beta = (rho_next / rho) * (alpha / omega);
        rho = rho_next;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let p_hat = precond(&p);
        v = a.mul_vec(&p_hat);
        let denom = dot(&r_hat, &v);
        if denom.abs() < 1e-300 {
            break;
        }
        alpha = rho / denom;
        let mut s = r.clone();
        axpy(&mut s, -alpha, &v);
        if norm(&s) / b_norm <= tol {
            axpy(&mut x, alpha, &p_hat);
            r = s;
            res = norm(&r) / b_norm;
            it += 1;
            break;
        }
        let s_hat = precond(&s);
        let t = a.mul_vec(&s_hat);
        let tt = dot(&t, &t);
        if tt.abs() < 1e-300 {
            break;
        }
        omega = dot(&t, &s) / tt;
        axpy(&mut x, alpha, &p_hat);
        axpy(&mut x, omega, &s_hat);
        r = s;
        axpy(&mut r, -omega, &t);
        res = norm(&r) / b_norm;
        it += 1;
    }
    (
        x,
        SolveStats {
            iterations: it,
            relative_residual: res,
            converged: res <= tol,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn laplacian_1d(n: usize) -> Csr {
        let mut b = CooBuilder::new(n, n);
        for i in 0..n {
            b.add(i, i, 2.0);
            if i > 0 {
                b.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                b.add(i, i + 1, -1.0);
            }
        }
        b.build()
    }

    #[test]
    fn coo_sums_duplicates() {
        let mut b = CooBuilder::new(2, 2);
        b.add(0, 0, 1.0);
        b.add(0, 0, 2.5);
        b.add(1, 0, -1.0);
        let m = b.build();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.mul_vec(&[1.0, 0.0]), vec![3.5, -1.0]);
    }

    #[test]
    fn cg_matches_dense_solution() {
        let n = 50;
        let a = laplacian_1d(n);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x_true: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = a.mul_vec(&x_true);
        let (x, stats) = cg_solve(&a, &b, None, 1e-12, 10 * n);
        assert!(stats.converged, "cg failed: {stats:?}");
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-8);
        }
    }

    #[test]
    fn bicgstab_solves_nonsymmetric() {
        let n = 40;
        let mut builder = CooBuilder::new(n, n);
        for i in 0..n {
            builder.add(i, i, 4.0);
            if i > 0 {
                builder.add(i, i - 1, -1.5);
            }
            if i + 1 < n {
                builder.add(i, i + 1, -0.5);
            }
        }
        let a = builder.build();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x_true: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = a.mul_vec(&x_true);
        let (x, stats) = bicgstab_solve(&a, &b, None, 1e-12, 10 * n);
        assert!(stats.converged, "bicgstab failed: {stats:?}");
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-8);
        }
    }

    #[test]
    fn warm_start_converges_immediately() {
        let n = 30;
        let a = laplacian_1d(n);
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let b = a.mul_vec(&x_true);
        let (_, stats) = cg_solve(&a, &b, Some(&x_true), 1e-10, 100);
        assert_eq!(stats.iterations, 0);
        assert!(stats.converged);
    }
}
