//! Discrete Hodge star on the harmonic span and holomorphic 1-forms.
//!
//! The star of a harmonic form is again harmonic, so it is a linear
//! combination of the harmonic basis. Its coefficients solve a small
//! linear system whose matrix is the (integer) intersection matrix of the
//! homology basis the forms are dual to, and whose right-hand side comes
//! from metric wedge integrals of the per-face form vectors. Pairing each
//! basis form with its star yields the holomorphic pairs; a pivoted
//! complex Gram reduction on their period vectors picks out a maximal
//! complex-independent subset.

use crate::error::{Error, Result};
use crate::mesh::{LocalChart, Mesh};
use crate::simplicial::{gamma, integrate_chain, Chain, FaceForm, OneForm};
use nalgebra::{DMatrix, DVector, Vector2};
use num_complex::Complex64;

/// Largest tolerated gap between the wedge-integral pairing and the
/// integer intersection matrix (diagnostic cross-check).
pub const WEDGE_CROSS_CHECK_TOL: f64 = 1e-3;

/// Rotate every per-face vector a quarter turn: (f, g) -> (-g, f).
pub fn star_faceform(ff: &FaceForm) -> FaceForm {
    FaceForm {
        comps: ff
            .comps
            .iter()
            .map(|c| Vector2::new(-c.y, c.x))
            .collect(),
    }
}

/// Integrate a wedge product of two piecewise-constant form fields. With
/// `starred` the second factor is rotated first, which turns the integrand
/// into the pointwise inner product; without it this is the ordinary
/// oriented wedge.
pub fn wedge_integral(charts: &[LocalChart], a: &FaceForm, b: &FaceForm, starred: bool) -> f64 {
    let mut total = 0.0;
    for (chart, (u, v)) in charts.iter().zip(a.comps.iter().zip(b.comps.iter())) {
        let area = chart.signed_area();
        let density = if starred {
            u.x * v.x + u.y * v.y
        } else {
            u.x * v.y - u.y * v.x
        };
        total += density * area;
    }
    total
}

/// Wedge integral evaluated directly on edge cochains via linear
/// interpolation over each face; an independent route used to cross-check
/// the face-vector wedge against topology.
pub fn whitney_wedge(mesh: &Mesh, omega: &OneForm, eta: &OneForm) -> f64 {
    let mut total = 0.0;
    for f in 0..mesh.n_faces() {
        let h = 3 * f;
        let w: Vec<f64> = (0..3).map(|c| omega.on_halfedge(mesh, h + c)).collect();
        let e: Vec<f64> = (0..3).map(|c| eta.on_halfedge(mesh, h + c)).collect();
        total += (w[0] * e[1] - w[1] * e[0] + w[1] * e[2] - w[2] * e[1] + w[2] * e[0]
            - w[0] * e[2])
            / 6.0;
    }
    total
}

/// Coefficients of the Hodge star of `omega` over the harmonic basis:
/// solves the intersection-matrix system whose right-hand side is the
/// metric pairing of `omega` with each basis form.
pub fn hodge_star_coeffs(
    mesh: &Mesh,
    charts: &[LocalChart],
    basis: &[OneForm],
    intersection: &[Vec<i64>],
    omega: &OneForm,
) -> Result<Vec<f64>> {
    let n = basis.len();
    let a = DMatrix::from_fn(n, n, |i, j| intersection[i][j] as f64);
    let target = gamma(mesh, charts, omega);
    let b = DVector::from_fn(n, |i, _| {
        wedge_integral(charts, &gamma(mesh, charts, &basis[i]), &target, true)
    });
    let lu = a.lu();
    let alpha = lu.solve(&b).ok_or(Error::SingularMatrix {
        what: "intersection matrix".into(),
    })?;
    Ok(alpha.iter().copied().collect())
}

/// The Hodge star restricted to the harmonic span, plus diagnostics.
#[derive(Debug, Clone)]
pub struct StarOperator {
    /// Column `j` holds the coefficients of the star of basis form `j`.
    pub coeffs: DMatrix<f64>,
    /// Largest gap between wedge-integral pairings and the integer
    /// intersection matrix, over both evaluation routes.
    pub wedge_gap: f64,
}

/// Assemble the star operator for the whole harmonic basis at once.
pub fn star_operator(
    mesh: &Mesh,
    charts: &[LocalChart],
    basis: &[OneForm],
    intersection: &[Vec<i64>],
) -> Result<StarOperator> {
    let n = basis.len();
    let face_forms: Vec<FaceForm> = basis.iter().map(|w| gamma(mesh, charts, w)).collect();
    let a = DMatrix::from_fn(n, n, |i, j| intersection[i][j] as f64);
    let mut wedge_gap = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let metric = wedge_integral(charts, &face_forms[i], &face_forms[j], false);
            let cochain = whitney_wedge(mesh, &basis[i], &basis[j]);
            let target = intersection[i][j] as f64;
            wedge_gap = wedge_gap.max((metric - target).abs());
            wedge_gap = wedge_gap.max((cochain - target).abs());
        }
    }
    if wedge_gap > WEDGE_CROSS_CHECK_TOL {
        return Err(Error::Unsupported {
            context: "hodge".into(),
            msg: format!(
                "wedge pairing deviates from the intersection matrix by {wedge_gap:.3e}"
            ),
        });
    }
    let b = DMatrix::from_fn(n, n, |i, j| {
        wedge_integral(charts, &face_forms[i], &face_forms[j], true)
    });
    let coeffs = a.lu().solve(&b).ok_or(Error::SingularMatrix {
        what: "intersection matrix".into(),
    })?;
    Ok(StarOperator { coeffs, wedge_gap })
}

/// A holomorphic 1-form: a harmonic real part paired with its star as the
/// imaginary part, the latter kept both as basis coefficients and as an
/// assembled cochain.
#[derive(Debug, Clone)]
pub struct HolomorphicForm {
    pub re: OneForm,
    pub im: OneForm,
    /// Coefficients of `im` over the harmonic basis.
    pub alpha: Vec<f64>,
}

impl HolomorphicForm {
    /// Complex period over an integer 1-chain.
    pub fn period(&self, mesh: &Mesh, chain: &Chain) -> Complex64 {
        Complex64::new(
            integrate_chain(mesh, &self.re, chain),
            integrate_chain(mesh, &self.im, chain),
        )
    }
}

/// Pair every harmonic basis form with its star.
pub fn holomorphic_pairs(basis: &[OneForm], star: &StarOperator) -> Vec<HolomorphicForm> {
    let n = basis.len();
    (0..n)
        .map(|j| {
            let alpha: Vec<f64> = (0..n).map(|k| star.coeffs[(k, j)]).collect();
            HolomorphicForm {
                re: basis[j].clone(),
                im: OneForm::linear_combination(basis, &alpha),
                alpha,
            }
        })
        .collect()
}

/// Select a maximal complex-independent subset of the holomorphic pairs by
/// pivoted Gram reduction on their period vectors over the basis cycles:
/// the period vector of pair `j` is the `j`-th column of I + i·coeffs.
pub fn select_complex_independent(star: &StarOperator, genus: usize) -> Result<Vec<usize>> {
    let n = star.coeffs.nrows();
    let mut residual: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| Complex64::new(f64::from(u8::from(i == j)), star.coeffs[(i, j)]))
                .collect()
        })
        .collect();
    let norm2 = |v: &[Complex64]| -> f64 { v.iter().map(num_complex::Complex::norm_sqr).sum() };
    let mut selected = Vec::with_capacity(genus);
    for _ in 0..genus {
        let (best, best_norm) = (0..n)
            .filter(|j| !selected.contains(j))
            .map(|j| (j, norm2(&residual[j])))
            .max_by(|x, y| x.1.partial_cmp(&y.1).expect("finite"))
            .ok_or(Error::SingularMatrix {
                what: "period span".into(),
            })?;
        if best_norm < 1e-16 {
            return Err(Error::SingularMatrix {
                what: "period span".into(),
            });
        }
        let pivot = residual[best].clone();
        selected.push(best);
        for j in 0..n {
            if selected.contains(&j) {
                continue;
            }
            let proj: Complex64 = pivot
                .iter()
                .zip(&residual[j])
                .map(|(p, r)| p.conj() * r)
                .sum::<Complex64>()
                / best_norm;
            for (r, p) in residual[j].iter_mut().zip(&pivot) {
                *r -= proj * p;
            }
        }
    }
    selected.sort_unstable();
    Ok(selected)
}

/// One-call holomorphic basis: runs the default pipeline and returns the
/// `g` complex-independent forms first, then all `2g` conjugate pairs.
/// Genus zero has no holomorphic 1-forms, so both lists are empty.
pub fn holomorphic_basis(
    mesh: &Mesh,
) -> Result<(Vec<HolomorphicForm>, Vec<HolomorphicForm>)> {
    let (_, genus) = mesh.euler_genus();
    if genus == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let result =
        crate::pipeline::run_pipeline(mesh, &crate::pipeline::Config::default())?;
    let chosen = result
        .selected
        .iter()
        .map(|&k| result.pairs[k].clone())
        .collect();
    Ok((chosen, result.pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshgen;
    use crate::testkit::conformal_setup;
    use approx::assert_relative_eq;

    #[test]
    fn star_rotates_face_vectors() {
        let ff = FaceForm {
            comps: vec![Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0)],
        };
        let starred = star_faceform(&ff);
        assert_eq!(starred.comps[0], Vector2::new(0.0, 1.0));
        assert_eq!(starred.comps[1], Vector2::new(-1.0, 0.0));
        let twice = star_faceform(&starred);
        assert_eq!(twice.comps[0], -ff.comps[0]);
        assert_eq!(twice.comps[1], -ff.comps[1]);
    }

    #[test]
    fn wedge_of_form_with_itself_vanishes() {
        let mesh = meshgen::icosphere(1).unwrap();
        let charts = crate::mesh::all_charts(&mesh);
        let ff = FaceForm {
            comps: (0..mesh.n_faces())
                .map(|f| Vector2::new(f as f64 * 0.3 + 1.0, 0.7 - f as f64 * 0.1))
                .collect(),
        };
        assert_eq!(wedge_integral(&charts, &ff, &ff, false), 0.0);
        assert!(wedge_integral(&charts, &ff, &ff, true) > 0.0);
    }

    #[test]
    fn constant_unit_fields_wedge_to_total_area() {
        let mesh = meshgen::flat_torus(6, 1.0).unwrap();
        let charts = crate::mesh::all_charts(&mesh);
        let ex = FaceForm {
            comps: vec![Vector2::new(1.0, 0.0); mesh.n_faces()],
        };
        let ey = FaceForm {
            comps: vec![Vector2::new(0.0, 1.0); mesh.n_faces()],
        };
        let total_area: f64 = charts.iter().map(LocalChart::signed_area).sum();
        assert_relative_eq!(
            wedge_integral(&charts, &ex, &ey, false),
            total_area,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            wedge_integral(&charts, &ex, &ex, true),
            total_area,
            max_relative = 1e-12
        );
    }

    #[test]
    fn flat_torus_star_swaps_the_dual_pair() {
        let setup = conformal_setup(meshgen::flat_torus(8, 1.0).unwrap());
        let star = star_operator(
            &setup.mesh,
            &setup.charts,
            &setup.harmonic,
            &setup.canonical.intersection,
        )
        .unwrap();
        // On the unit-modulus torus the star sends the first dual form to
        // the second and the second to minus the first.
        let expected = [[0.0, -1.0], [1.0, 0.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (star.coeffs[(i, j)] - expected[i][j]).abs() < 1e-6,
                    "star coeffs {:?}",
                    star.coeffs
                );
            }
        }
    }

    #[test]
    fn zero_form_has_zero_star_coefficients() {
        let setup = conformal_setup(meshgen::flat_torus(4, 1.0).unwrap());
        let alpha = hodge_star_coeffs(
            &setup.mesh,
            &setup.charts,
            &setup.harmonic,
            &setup.canonical.intersection,
            &OneForm::zeros(&setup.mesh),
        )
        .unwrap();
        assert!(alpha.iter().all(|a| a.abs() < 1e-12));
    }

    #[test]
    fn star_applied_twice_negates() {
        for (mesh, tol) in [
            (meshgen::flat_torus(8, 1.0).unwrap(), 1e-3),
            (meshgen::torus_of_revolution(2.0, 0.8, 16, 12).unwrap(), 5e-2),
        ] {
            let setup = conformal_setup(mesh);
            let star = star_operator(
                &setup.mesh,
                &setup.charts,
                &setup.harmonic,
                &setup.canonical.intersection,
            )
            .unwrap();
            let squared = &star.coeffs * &star.coeffs;
            let n = squared.nrows();
            let gap = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| (squared[(i, j)] + f64::from(u8::from(i == j))).abs())
                .fold(0.0f64, f64::max);
            assert!(gap < tol, "star squared deviates from -identity by {gap}");
        }
    }

    #[test]
    fn wedge_pairings_match_intersection_numbers() {
        let setup = conformal_setup(meshgen::torus_of_revolution(2.0, 0.8, 12, 10).unwrap());
        let star = star_operator(
            &setup.mesh,
            &setup.charts,
            &setup.harmonic,
            &setup.canonical.intersection,
        )
        .unwrap();
        assert!(star.wedge_gap < WEDGE_CROSS_CHECK_TOL);
        // The cochain-route pairing is antisymmetric by construction.
        let w01 = whitney_wedge(&setup.mesh, &setup.harmonic[0], &setup.harmonic[1]);
        let w10 = whitney_wedge(&setup.mesh, &setup.harmonic[1], &setup.harmonic[0]);
        assert_eq!(w01, -w10);
    }

    #[test]
    fn holomorphic_pairs_and_selection() {
        for (mesh, genus) in [
            (meshgen::flat_torus(6, 1.0).unwrap(), 1usize),
            (meshgen::genus2_plate(1, 0.25).unwrap(), 2),
        ] {
            let setup = conformal_setup(mesh);
            let star = star_operator(
                &setup.mesh,
                &setup.charts,
                &setup.harmonic,
                &setup.canonical.intersection,
            )
            .unwrap();
            let pairs = holomorphic_pairs(&setup.harmonic, &star);
            assert_eq!(pairs.len(), 2 * genus);
            let selected = select_complex_independent(&star, genus).unwrap();
            assert_eq!(selected.len(), genus);
            // Each selected pair has unit real period over its own cycle.
            for &k in &selected {
                let p = pairs[k].period(&setup.mesh, &setup.canonical.chains[k]);
                assert!((p.re - 1.0).abs() < 1e-6, "period {p}");
            }
        }
    }

    #[test]
    fn positive_metric_norm_for_nonzero_forms() {
        let setup = conformal_setup(meshgen::flat_torus(4, 1.0).unwrap());
        for w in &setup.harmonic {
            let ff = gamma(&setup.mesh, &setup.charts, w);
            assert!(wedge_integral(&setup.charts, &ff, &ff, true) > 0.0);
        }
    }
}
