//! Period matrices and conformal-equivalence verification.
//!
//! Periods of holomorphic forms over a homology basis are the conformal
//! invariants of the surface. Two tables are produced: the square table of
//! the dual holomorphic set (whose real parts reproduce the intersection
//! matrix and whose imaginary parts form the symmetric positive-definite
//! matrix S), and the tall table of the complex-independent forms over all
//! basis cycles. For genus one the single column ratio is the modulus τ.

use crate::error::{Error, Result};
use crate::hodge::{HolomorphicForm, StarOperator};
use crate::mesh::Mesh;
use crate::simplicial::{Chain, OneForm};
use crate::snf::det_dense;
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

/// Tolerance for the equivalence residuals on R and C conjugation.
pub const EQUIVALENCE_TOL: f64 = 1e-3;

/// Recombine the holomorphic pairs so the real parts of their periods
/// reproduce the intersection matrix: the `j`-th output is the sum of
/// `C[k][j]` times the `k`-th pair.
pub fn dual_holomorphic_basis(
    basis: &[OneForm],
    star: &StarOperator,
    intersection: &[Vec<i64>],
) -> Result<Vec<HolomorphicForm>> {
    let n = basis.len();
    if det_dense(intersection).is_zero() {
        return Err(Error::SingularMatrix {
            what: "intersection matrix".into(),
        });
    }
    Ok((0..n)
        .map(|j| {
            let re_coeffs: Vec<f64> = (0..n).map(|k| intersection[k][j] as f64).collect();
            let alpha: Vec<f64> = (0..n)
                .map(|l| {
                    (0..n)
                        .map(|k| star.coeffs[(l, k)] * intersection[k][j] as f64)
                        .sum()
                })
                .collect();
            HolomorphicForm {
                re: OneForm::linear_combination(basis, &re_coeffs),
                im: OneForm::linear_combination(basis, &alpha),
                alpha,
            }
        })
        .collect())
}

/// Complex periods of each form over each basis chain: entry (i, j) is the
/// period of form `j` over chain `i`.
pub fn period_table(mesh: &Mesh, chains: &[Chain], forms: &[HolomorphicForm]) -> DMatrix<Complex64> {
    DMatrix::from_fn(chains.len(), forms.len(), |i, j| {
        forms[j].period(mesh, &chains[i])
    })
}

/// R solves C·R = S; the caller checks how far R² is from -identity.
pub fn period_matrix_r(intersection: &[Vec<i64>], s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = s.nrows();
    let c = DMatrix::from_fn(n, n, |i, j| intersection[i][j] as f64);
    c.lu().solve(s).ok_or(Error::SingularMatrix {
        what: "intersection matrix".into(),
    })
}

/// Diagnostics accompanying a period computation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodResiduals {
    /// ‖S − Sᵀ‖_F relative to ‖S‖_F.
    pub s_asymmetry: f64,
    /// Smallest eigenvalue of the symmetrized S.
    pub s_min_eigenvalue: f64,
    /// ‖R² + I‖_F.
    pub r_squared_gap: f64,
    /// ‖C·R − S‖_F.
    pub cr_gap: f64,
    /// Largest gap between the real part of the dual period table and the
    /// integer intersection matrix.
    pub duality_gap: f64,
}

/// Period data of one surface: the conformal invariants plus diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodData {
    pub genus: usize,
    /// Intersection matrix of the basis (canonical bases give the standard
    /// symplectic form).
    pub c: Vec<Vec<i64>>,
    /// Imaginary parts of the dual period table; symmetric positive
    /// definite.
    pub s: Vec<Vec<f64>>,
    /// Solution of C·R = S; squares to -identity up to discretization.
    pub r: Vec<Vec<f64>>,
    /// Square period table of the dual holomorphic set, C + iS.
    pub p_full_re: Vec<Vec<f64>>,
    pub p_full_im: Vec<Vec<f64>>,
    /// Tall period table of the complex-independent forms (2g × g).
    pub p_re: Vec<Vec<f64>>,
    pub p_im: Vec<Vec<f64>>,
    /// Indices of the complex-independent forms among the 2g pairs.
    pub selected: Vec<usize>,
    /// Genus-one modulus: ratio of the two periods of the selected form.
    pub tau: Option<Complex64>,
    pub residuals: PeriodResiduals,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Assemble the full period data from the harmonic basis and its star.
pub fn compute_periods(
    mesh: &Mesh,
    chains: &[Chain],
    intersection: &[Vec<i64>],
    basis: &[OneForm],
    star: &StarOperator,
    pairs: &[HolomorphicForm],
    selected: &[usize],
) -> Result<PeriodData> {
    let n = basis.len();
    let genus = n / 2;
    let dual_set = dual_holomorphic_basis(basis, star, intersection)?;
    let full = period_table(mesh, chains, &dual_set);
    let mut duality_gap = 0.0f64;
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            duality_gap = duality_gap.max((full[(i, j)].re - intersection[i][j] as f64).abs());
            s[(i, j)] = full[(i, j)].im;
        }
    }
    let r = period_matrix_r(intersection, &s)?;
    let c_f = DMatrix::from_fn(n, n, |i, j| intersection[i][j] as f64);
    let r_squared_gap = (&r * &r + DMatrix::<f64>::identity(n, n)).norm();
    let cr_gap = (&c_f * &r - &s).norm();
    let s_norm = s.norm();
    let s_asymmetry = if s_norm > 0.0 {
        (&s - s.transpose()).norm() / s_norm
    } else {
        0.0
    };
    let sym = (&s + s.transpose()) * 0.5;
    let s_min_eigenvalue = if n > 0 {
        sym.symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };

    let picked: Vec<HolomorphicForm> = selected.iter().map(|&k| pairs[k].clone()).collect();
    let tall = period_table(mesh, chains, &picked);
    let tau = if genus == 1 && !selected.is_empty() {
        let a = tall[(0, 0)];
        let b = tall[(1, 0)];
        if a.norm() == 0.0 {
            None
        } else {
            Some(b / a)
        }
    } else {
        None
    };

    let split =
        |m: &DMatrix<Complex64>, im: bool| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| {
                    (0..m.ncols())
                        .map(|j| if im { m[(i, j)].im } else { m[(i, j)].re })
                        .collect()
                })
                .collect()
        };
    Ok(PeriodData {
        genus,
        c: intersection.to_vec(),
        s: to_rows(&s),
        r: to_rows(&r),
        p_full_re: split(&full, false),
        p_full_im: split(&full, true),
        p_re: split(&tall, false),
        p_im: split(&tall, true),
        selected: selected.to_vec(),
        tau,
        residuals: PeriodResiduals {
            s_asymmetry,
            s_min_eigenvalue,
            r_squared_gap,
            cr_gap,
            duality_gap,
        },
    })
}

/// Integer Gauss reduction of a genus-one period lattice basis: returns
/// symplectic rows N (new basis = N · old basis) bringing the pair to its
/// shortest form. Determinant is +1, so the intersection number is kept.
pub fn gauss_reduce_periods(a_period: Complex64, b_period: Complex64) -> [[i64; 2]; 2] {
    let mut a = a_period;
    let mut b = b_period;
    let mut na = [1i64, 0];
    let mut nb = [0i64, 1];
    for _ in 0..64 {
        let k = ((b * a.conj()).re / a.norm_sqr()).round();
        if k != 0.0 {
            b -= Complex64::from(k) * a;
            nb[0] -= k as i64 * na[0];
            nb[1] -= k as i64 * na[1];
        }
        if b.norm_sqr() < a.norm_sqr() {
            std::mem::swap(&mut a, &mut b);
            b = -b;
            let prev = na;
            na = nb;
            nb = [-prev[0], -prev[1]];
        } else {
            break;
        }
    }
    [na, nb]
}

/// Replace a genus-one conformal basis by its lattice-reduced equivalent,
/// transforming the basis chains, their harmonic duals and the star
/// coefficients in place (a pure recombination, no new solves). Returns
/// whether anything changed. Without this step the canonical basis can be
/// an arbitrary shear of the natural one and the reported modulus an
/// arbitrary modular image.
pub fn reduce_genus_one_basis(
    mesh: &Mesh,
    chains: &mut [Chain],
    harmonic: &mut [OneForm],
    star: &mut StarOperator,
) -> bool {
    if chains.len() != 2 {
        return false;
    }
    let alpha = vec![star.coeffs[(0, 0)], star.coeffs[(1, 0)]];
    let zeta = HolomorphicForm {
        re: harmonic[0].clone(),
        im: OneForm::linear_combination(harmonic, &alpha),
        alpha,
    };
    let pa = zeta.period(mesh, &chains[0]);
    let pb = zeta.period(mesh, &chains[1]);
    if pa.norm_sqr() == 0.0 {
        return false;
    }
    let n = gauss_reduce_periods(pa, pb);
    if n == [[1, 0], [0, 1]] {
        return false;
    }
    let (c0, c1) = (chains[0].clone(), chains[1].clone());
    for (i, row) in n.iter().enumerate() {
        let mut c = Chain::new(1);
        c.add_chain(&c0, row[0]);
        c.add_chain(&c1, row[1]);
        chains[i] = c;
    }
    // Duality requires the forms to recombine by the inverse: with the new
    // cycles N·e, the forms ω·N⁻¹ keep the pairing at identity.
    let [[p, q], [r, s]] = n;
    debug_assert_eq!(p * s - q * r, 1, "reduction must be unimodular");
    let inv = [[s as f64, -q as f64], [-r as f64, p as f64]];
    let (h0, h1) = (harmonic[0].clone(), harmonic[1].clone());
    for (j, form) in harmonic.iter_mut().enumerate() {
        *form = OneForm::linear_combination(
            &[h0.clone(), h1.clone()],
            &[inv[0][j], inv[1][j]],
        );
    }
    // The star operator conjugates: G' = N·G·N⁻¹.
    let nf = DMatrix::from_fn(2, 2, |i, j| n[i][j] as f64);
    let nf_inv = DMatrix::from_fn(2, 2, |i, j| inv[i][j]);
    star.coeffs = &nf * &star.coeffs * &nf_inv;
    true
}

/// Outcome of comparing two surfaces' period data under a proposed basis
/// change.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub equivalent: bool,
    /// ‖N⁻¹·R₁·N − R₂‖_F.
    pub r_residual: f64,
    /// max |Nᵀ·C₁·N − C₂| entrywise.
    pub c_residual: f64,
    /// max |Nᵀ·J·N − J| when both bases are canonical (None otherwise).
    pub symplectic_residual: Option<f64>,
}

/// Check whether an integer basis change N identifies the conformal
/// structures of two period computations: N must conjugate R₁ into R₂ and
/// transform C₁ into C₂.
pub fn verify_equivalence(
    p1: &PeriodData,
    p2: &PeriodData,
    n_mat: &[Vec<i64>],
) -> Result<EquivalenceReport> {
    let n = p1.c.len();
    if p2.c.len() != n || n_mat.len() != n {
        return Err(Error::Config(format!(
            "equivalence check needs matching sizes, got {n}, {}, {}",
            p2.c.len(),
            n_mat.len()
        )));
    }
    let det = det_dense(n_mat);
    if det.is_zero() {
        return Err(Error::SingularMatrix {
            what: "basis change".into(),
        });
    }
    let nf = DMatrix::from_fn(n, n, |i, j| n_mat[i][j] as f64);
    let r1 = DMatrix::from_fn(n, n, |i, j| p1.r[i][j]);
    let r2 = DMatrix::from_fn(n, n, |i, j| p2.r[i][j]);
    let conj = nf
        .clone()
        .lu()
        .solve(&(&r1 * &nf))
        .ok_or(Error::SingularMatrix {
            what: "basis change".into(),
        })?;
    let r_residual = (&conj - &r2).norm();

    let mut c_residual = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0i64;
            for k in 0..n {
                for l in 0..n {
                    acc += n_mat[k][i] * p1.c[k][l] * n_mat[l][j];
                }
            }
            c_residual = c_residual.max((acc - p2.c[i][j]).abs() as f64);
        }
    }

    let canonical = |c: &[Vec<i64>]| {
        let g = c.len() / 2;
        let j_std = crate::homology::standard_symplectic(g);
        c == j_std.as_slice()
    };
    let symplectic_residual = if canonical(&p1.c) && canonical(&p2.c) {
        let g = n / 2;
        let j_std = crate::homology::standard_symplectic(g);
        let mut gap = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0i64;
                for k in 0..n {
                    for l in 0..n {
                        acc += n_mat[k][i] * j_std[k][l] * n_mat[l][j];
                    }
                }
                gap = gap.max((acc - j_std[i][j]).abs() as f64);
            }
        }
        Some(gap)
    } else {
        None
    };

    let equivalent = r_residual < EQUIVALENCE_TOL
        && c_residual < EQUIVALENCE_TOL
        && symplectic_residual.is_none_or(|g| g < EQUIVALENCE_TOL);
    Ok(EquivalenceReport {
        equivalent,
        r_residual,
        c_residual,
        symplectic_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hodge::{holomorphic_pairs, select_complex_independent, star_operator};
    use crate::meshgen;
    use crate::testkit::{conformal_setup, Setup};

    fn periods_of(setup: &Setup) -> PeriodData {
        let mut chains = setup.canonical.chains.clone();
        let mut harmonic = setup.harmonic.clone();
        let mut star = star_operator(
            &setup.mesh,
            &setup.charts,
            &harmonic,
            &setup.canonical.intersection,
        )
        .unwrap();
        if setup.canonical.genus == 1 {
            reduce_genus_one_basis(&setup.mesh, &mut chains, &mut harmonic, &mut star);
        }
        let pairs = holomorphic_pairs(&harmonic, &star);
        let selected = select_complex_independent(&star, setup.canonical.genus).unwrap();
        compute_periods(
            &setup.mesh,
            &chains,
            &setup.canonical.intersection,
            &harmonic,
            &star,
            &pairs,
            &selected,
        )
        .unwrap()
    }

    #[test]
    fn flat_unit_torus_modulus_is_i() {
        let setup = conformal_setup(meshgen::flat_torus(8, 1.0).unwrap());
        let data = periods_of(&setup);
        let tau = data.tau.unwrap();
        assert!(
            (tau - Complex64::new(0.0, 1.0)).norm() < 0.02,
            "tau = {tau}"
        );
        // S is the identity for the unit modulus.
        assert!((data.s[0][0] - 1.0).abs() < 1e-2);
        assert!((data.s[1][1] - 1.0).abs() < 1e-2);
        assert!(data.s[0][1].abs() < 1e-2);
        assert!(data.residuals.s_asymmetry < 1e-6);
        assert!(data.residuals.s_min_eigenvalue > 0.0);
        assert!(data.residuals.r_squared_gap < 1e-3);
        assert!(data.residuals.duality_gap < 1e-6);
        assert!(data.residuals.cr_gap < 1e-10);
    }

    #[test]
    fn rectangle_torus_modulus_scales() {
        let setup = conformal_setup(meshgen::flat_torus(8, 2.0).unwrap());
        let data = periods_of(&setup);
        let tau = data.tau.unwrap();
        let target = Complex64::new(0.0, 2.0);
        let direct = (tau - target).norm() / target.norm();
        let reciprocal = (-tau.inv() - target).norm() / target.norm();
        assert!(
            direct < 0.02 || reciprocal < 0.02,
            "tau = {tau} matches neither 2i nor its reciprocal"
        );
    }

    #[test]
    fn genus_two_periods_satisfy_riemann_relations() {
        let setup = conformal_setup(meshgen::genus2_plate(3, 0.25).unwrap());
        let data = periods_of(&setup);
        assert_eq!(data.genus, 2);
        assert_eq!(data.selected.len(), 2);
        assert!(data.residuals.s_asymmetry < 1e-6);
        assert!(data.residuals.s_min_eigenvalue > 0.0, "{}", data.residuals.s_min_eigenvalue);
        // Discretization-limited; the acceptance suite tracks the trend on
        // finer meshes.
        assert!(data.residuals.r_squared_gap < 0.1, "{}", data.residuals.r_squared_gap);
        assert!(data.tau.is_none());
    }

    #[test]
    fn periods_are_scale_invariant() {
        let mesh = meshgen::torus_of_revolution(2.0, 0.7, 12, 10).unwrap();
        let mut scaled_positions = mesh.positions().to_vec();
        for p in &mut scaled_positions {
            *p *= 3.0;
        }
        let scaled = Mesh::new(scaled_positions, mesh.faces().to_vec()).unwrap();
        let d1 = periods_of(&conformal_setup(mesh));
        let d2 = periods_of(&conformal_setup(scaled));
        for i in 0..2 {
            for j in 0..2 {
                assert!((d1.s[i][j] - d2.s[i][j]).abs() < 1e-6);
            }
        }
        let t1 = d1.tau.unwrap();
        let t2 = d2.tau.unwrap();
        assert!((t1 - t2).norm() < 1e-6, "{t1} vs {t2}");
    }

    #[test]
    fn equivalence_identity_and_modular_swap() {
        let setup = conformal_setup(meshgen::flat_torus(8, 1.0).unwrap());
        let data = periods_of(&setup);
        let identity = vec![vec![1, 0], vec![0, 1]];
        let rep = verify_equivalence(&data, &data, &identity).unwrap();
        assert!(rep.equivalent, "{rep:?}");
        assert_eq!(rep.symplectic_residual, Some(0.0));

        // The symplectic swap fixes the square torus (tau -> -1/tau = tau).
        let swap = vec![vec![0, 1], vec![-1, 0]];
        let rep = verify_equivalence(&data, &data, &swap).unwrap();
        assert!(rep.equivalent, "{rep:?}");

        // A different modulus is not equivalent under the identity.
        let other = periods_of(&conformal_setup(meshgen::flat_torus(8, 2.0).unwrap()));
        let rep = verify_equivalence(&data, &other, &identity).unwrap();
        assert!(!rep.equivalent);
        assert!(rep.r_residual > EQUIVALENCE_TOL);
    }

    #[test]
    fn genus_zero_is_empty() {
        let mesh = meshgen::icosphere(1).unwrap();
        let charts = crate::mesh::all_charts(&mesh);
        let star = StarOperator {
            coeffs: DMatrix::zeros(0, 0),
            wedge_gap: 0.0,
        };
        let data = compute_periods(&mesh, &[], &[], &[], &star, &[], &[]).unwrap();
        assert_eq!(data.genus, 0);
        assert!(data.tau.is_none());
        assert!(data.s.is_empty());
        let _ = charts;
    }
}

