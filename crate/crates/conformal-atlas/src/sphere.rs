//! Spherical embeddings for genus-zero meshes.
//!
//! A closed genus-zero surface is mapped onto the unit sphere by heat flow:
//! starting from the Gauss map, vertex positions follow the negative
//! tangential Laplacian until the string energy stops decreasing.  With unit
//! edge weights the limit is the barycentric (Tuette) embedding; with
//! cotangent weights and a centroid-shift normalization after every step the
//! limit is the conformal embedding, unique up to Möbius transformations of
//! the sphere.

use nalgebra::{Matrix2, Vector2, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::harmonic::string_energy_points;
use crate::mesh::{cotan_weights, local_chart, EdgeWeights, Mesh};

/// Every vertex image must sit on the unit sphere to within this norm gap.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Area-weighted centroid bound enforced by the normalized flows.
pub const CENTROID_TOL: f64 = 1e-4;

/// Denominators smaller than this are treated as poles or degeneracies.
const POLE_TOL: f64 = 1e-12;

/// A map from mesh vertices onto the unit sphere.
#[derive(Debug, Clone)]
pub struct SphereMap {
    /// Image of each vertex; unit length up to [`UNIT_NORM_TOL`].
    pub positions: Vec<Vector3<f64>>,
    /// String energy after every accepted descent step (index 0 = start).
    pub energy_trace: Vec<f64>,
    /// Number of accepted descent steps.
    pub iterations: usize,
}

impl SphereMap {
    /// Largest deviation `| |h(v)| - 1 |` over all vertices.
    pub fn max_norm_deviation(&self) -> f64 {
        self.positions
            .iter()
            .map(|p| (p.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Area-weighted centroid of the image, with one third of each incident
    /// face area attributed to a vertex and the weights normalized to sum 1.
    pub fn weighted_centroid(&self, mesh: &Mesh) -> Vector3<f64> {
        let areas = vertex_areas(mesh);
        let total: f64 = areas.iter().sum();
        let mut c = Vector3::zeros();
        for (p, a) in self.positions.iter().zip(&areas) {
            c += *p * *a;
        }
        c / total
    }

    /// Final string energy reached by the flow.
    pub fn energy(&self) -> f64 {
        *self.energy_trace.last().expect("trace is never empty")
    }
}

/// Step-size and stopping controls shared by both embedding flows.
#[derive(Debug, Clone)]
pub struct FlowOptions {
    /// Descent step.  `None` sizes the step from the weighted vertex degree
    /// and halves it whenever a step would increase energy; an explicit
    /// value is used as-is and an energy increase is reported as divergence.
    pub dt: Option<f64>,
    /// Stop once the relative energy decrease of an accepted step falls
    /// below this threshold.
    pub eps: f64,
    /// Abort with a solver error after this many descent attempts.
    pub max_iterations: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            dt: None,
            eps: 1e-7,
            max_iterations: 50_000,
        }
    }
}

/// One third of the incident face areas, the mass lumped at each vertex.
pub fn vertex_areas(mesh: &Mesh) -> Vec<f64> {
    let mut areas = vec![0.0; mesh.n_vertices()];
    for f in 0..mesh.n_faces() {
        let a = mesh.face_area(f) / 3.0;
        for &v in &mesh.faces()[f] {
            areas[v] += a;
        }
    }
    areas
}

/// Remove from `x` its component along `v`: `x - v (v.x)/(v.v)`.
pub fn project_tangent(v: &Vector3<f64>, x: &Vector3<f64>) -> Vector3<f64> {
    x - v * (v.dot(x) / v.dot(v))
}

/// Unit weight on every edge; drives the barycentric flow.
pub fn unit_weights(mesh: &Mesh) -> EdgeWeights {
    EdgeWeights {
        values: vec![1.0; mesh.n_edges()],
        non_positive: Vec::new(),
    }
}

fn require_genus_zero(mesh: &Mesh) -> Result<()> {
    let (_, genus) = mesh.euler_genus();
    if genus != 0 {
        return Err(Error::GenusMismatch {
            expected: 0,
            actual: genus,
        });
    }
    Ok(())
}

/// Normalized area-weighted vertex normals.
///
/// Each vertex receives the sum of incident face normals scaled by face
/// area; for a convex or near-round mesh this is already close to the
/// final sphere map and serves as the flow's starting point.
pub fn gauss_map(mesh: &Mesh) -> Result<SphereMap> {
    require_genus_zero(mesh)?;
    let mut normals = vec![Vector3::zeros(); mesh.n_vertices()];
    let pos = mesh.positions();
    for (f, face) in mesh.faces().iter().enumerate() {
        let cross =
            (pos[face[1]] - pos[face[0]]).cross(&(pos[face[2]] - pos[face[0]]));
        for &v in face {
            normals[v] += cross;
        }
        let _ = f;
    }
    for (v, n) in normals.iter_mut().enumerate() {
        let len = n.norm();
        if len < POLE_TOL {
            return Err(Error::Unsupported {
                context: "gauss map".into(),
                msg: format!("vertex {v} has a vanishing area-weighted normal"),
            });
        }
        *n /= len;
    }
    let weights = unit_weights(mesh);
    let energy = string_energy_points(mesh, &weights, &normals);
    Ok(SphereMap {
        positions: normals,
        energy_trace: vec![energy],
        iterations: 0,
    })
}

fn laplacian_points(
    mesh: &Mesh,
    weights: &EdgeWeights,
    h: &[Vector3<f64>],
) -> Vec<Vector3<f64>> {
    let mut lap = vec![Vector3::zeros(); mesh.n_vertices()];
    for e in 0..mesh.n_edges() {
        let he = mesh.edge_halfedge(e);
        let (u, v) = (mesh.tail(he), mesh.head(he));
        let d = (h[u] - h[v]) * weights.values[e];
        lap[u] += d;
        lap[v] -= d;
    }
    lap
}

/// Tangential-Laplacian descent constrained to the unit sphere.
///
/// Each step moves every vertex against the component of the Laplacian
/// tangent to the sphere at its current image, optionally re-centers the
/// area-weighted centroid at the origin, and projects back onto the sphere.
fn sphere_flow(
    mesh: &Mesh,
    weights: &EdgeWeights,
    start: Vec<Vector3<f64>>,
    opts: &FlowOptions,
    recenter: bool,
) -> Result<SphereMap> {
    let areas = if recenter {
        vertex_areas(mesh)
    } else {
        Vec::new()
    };
    let total_area: f64 = areas.iter().sum();

    let auto_dt = 0.1 / weights.max_weighted_degree(mesh).max(POLE_TOL);
    let adaptive = opts.dt.is_none();
    let mut dt = opts.dt.unwrap_or(auto_dt);

    let mut h = start;
    let mut energy = string_energy_points(mesh, weights, &h);
    let mut trace = vec![energy];
    let mut iterations = 0usize;
    let mut last_rel_drop = f64::INFINITY;

    for attempt in 0..opts.max_iterations {
        let lap = laplacian_points(mesh, weights, &h);
        let mut cand: Vec<Vector3<f64>> = h
            .iter()
            .zip(&lap)
            .map(|(p, l)| p - project_tangent(p, l) * dt)
            .collect();
        if recenter {
            let mut c = Vector3::zeros();
            for (p, a) in cand.iter().zip(&areas) {
                c += *p * *a;
            }
            c /= total_area;
            for p in &mut cand {
                *p -= c;
            }
        }
        let mut degenerate = false;
        for p in &mut cand {
            let len = p.norm();
            if len < POLE_TOL {
                degenerate = true;
                break;
            }
            *p /= len;
        }
        let e_new = if degenerate {
            f64::INFINITY
        } else {
            string_energy_points(mesh, weights, &cand)
        };

        if e_new > energy {
            // A rise within the convergence tolerance is measurement noise
            // at a stationary point (symmetric meshes start there): stop
            // with the current map instead of shrinking the step forever.
            let rel_rise = (e_new - energy) / energy.max(f64::MIN_POSITIVE);
            if rel_rise <= opts.eps {
                return Ok(SphereMap {
                    positions: h,
                    energy_trace: trace,
                    iterations,
                });
            }
            if adaptive {
                dt *= 0.5;
                if dt < auto_dt * 1e-12 {
                    return Err(Error::SolverStalled {
                        target: opts.eps,
                        achieved: last_rel_drop,
                        iterations: attempt,
                    });
                }
                continue;
            }
            trace.push(e_new);
            return Err(Error::Divergence {
                iteration: attempt,
                trace,
            });
        }

        let drop = energy - e_new;
        h = cand;
        energy = e_new;
        trace.push(energy);
        iterations += 1;
        last_rel_drop = drop / energy.max(f64::MIN_POSITIVE);
        if last_rel_drop <= opts.eps {
            return Ok(SphereMap {
                positions: h,
                energy_trace: trace,
                iterations,
            });
        }
    }
    Err(Error::SolverStalled {
        target: opts.eps,
        achieved: last_rel_drop,
        iterations: opts.max_iterations,
    })
}

/// Barycentric (unit-weight) embedding onto the sphere.
///
/// Flows the Gauss map by the tangential graph Laplacian with every edge
/// weight equal to one.  The limit is the unique minimizer of the unit
/// string energy and gives a bijective starting sphere for the conformal
/// flow.
pub fn barycentric_embed(mesh: &Mesh, opts: &FlowOptions) -> Result<SphereMap> {
    require_genus_zero(mesh)?;
    let start = gauss_map(mesh)?;
    let weights = unit_weights(mesh);
    sphere_flow(mesh, &weights, start.positions, opts, false)
}

/// Conformal embedding onto the sphere via cotangent heat flow.
///
/// Starts from the barycentric embedding and descends the harmonic energy
/// with cotangent weights.  After every step the area-weighted centroid is
/// shifted back to the origin — the Möbius normalization that pins down the
/// sphere's conformal group — and the positions are renormalized.  Meshes
/// with non-positive cotangent weights must be repaired first (see the mesh
/// preprocessing options).
pub fn conformal_embed(mesh: &Mesh, opts: &FlowOptions) -> Result<SphereMap> {
    let start = barycentric_embed(mesh, opts)?;
    conformal_embed_from(mesh, start.positions, opts)
}

/// Conformal flow from a caller-supplied spherical starting position.
///
/// Re-running the flow on its own output converges immediately, which makes
/// this the natural entry point for refinement or warm restarts.
pub fn conformal_embed_from(
    mesh: &Mesh,
    start: Vec<Vector3<f64>>,
    opts: &FlowOptions,
) -> Result<SphereMap> {
    require_genus_zero(mesh)?;
    let weights = cotan_weights(mesh);
    if !weights.non_positive.is_empty() {
        return Err(Error::Unsupported {
            context: "conformal embedding".into(),
            msg: format!(
                "{} edges have non-positive cotangent weight; preprocess the mesh first",
                weights.non_positive.len()
            ),
        });
    }
    sphere_flow(mesh, &weights, start, opts, true)
}

/// Stereographic projection from the south pole `(0, 0, -1)`.
///
/// `(x0, x1, x2)` on the unit sphere maps to `(x0 + i x1) / (1 + x2)`; the
/// south pole itself has no image and is rejected.
pub fn stereographic(p: &Vector3<f64>) -> Result<Complex64> {
    let denom = 1.0 + p[2];
    if denom.abs() < POLE_TOL {
        return Err(Error::Unsupported {
            context: "stereographic projection".into(),
            msg: "the south pole (0, 0, -1) has no image in the plane".into(),
        });
    }
    Ok(Complex64::new(p[0] / denom, p[1] / denom))
}

/// Inverse stereographic projection; `z = x + iy` returns to the sphere as
/// `(2x, 2y, 1 - |z|^2) / (1 + |z|^2)`.
pub fn stereographic_inverse(z: Complex64) -> Vector3<f64> {
    let s = z.norm_sqr();
    Vector3::new(2.0 * z.re, 2.0 * z.im, 1.0 - s) / (1.0 + s)
}

/// Möbius transformation `z -> (az + b) / (cz + d)` with `ad - bc != 0`.
pub fn mobius(z: Complex64, coeffs: &[Complex64; 4]) -> Result<Complex64> {
    let [a, b, c, d] = *coeffs;
    if (a * d - b * c).norm() < POLE_TOL {
        return Err(Error::SingularMatrix {
            what: "möbius coefficient matrix".into(),
        });
    }
    let denom = c * z + d;
    if denom.norm() < POLE_TOL {
        return Err(Error::Unsupported {
            context: "möbius transformation".into(),
            msg: format!("input {z} is the pole of the map"),
        });
    }
    Ok((a * z + b) / denom)
}

/// Signed solid angle subtended by the spherical triangle `(a, b, c)`.
pub fn signed_solid_angle(
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    c: &Vector3<f64>,
) -> f64 {
    let num = a.dot(&b.cross(c));
    let den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * num.atan2(den)
}

/// Topological degree of a map to the sphere: total signed spherical area
/// of the face images divided by the sphere area.  An embedding has degree
/// one; the value is returned unrounded so callers can also inspect how far
/// from an integer it lands.
pub fn map_degree(mesh: &Mesh, positions: &[Vector3<f64>]) -> f64 {
    assert_eq!(positions.len(), mesh.n_vertices());
    let mut total = 0.0;
    for face in mesh.faces() {
        total += signed_solid_angle(
            &positions[face[0]],
            &positions[face[1]],
            &positions[face[2]],
        );
    }
    total / (4.0 * std::f64::consts::PI)
}

/// Per-face quasi-conformal distortion of the map sending each source
/// triangle to its (chordal) image triangle.
///
/// For each face the 2x2 Jacobian between the source chart and an
/// orthonormal chart of the image plane has singular values
/// `sigma1 >= sigma2`; the returned ratio `sigma1 / sigma2` is 1 exactly
/// when the face is mapped conformally and infinite when the image
/// degenerates.
pub fn quasi_conformal_distortion(
    mesh: &Mesh,
    positions: &[Vector3<f64>],
) -> Vec<f64> {
    assert_eq!(positions.len(), mesh.n_vertices());
    let mut ratios = Vec::with_capacity(mesh.n_faces());
    for (f, face) in mesh.faces().iter().enumerate() {
        let chart = local_chart(mesh, f);
        let s1 = chart.points[1] - chart.points[0];
        let s2 = chart.points[2] - chart.points[0];
        let source = Matrix2::from_columns(&[s1, s2]);

        let q0 = positions[face[0]];
        let e1 = positions[face[1]] - q0;
        let e2 = positions[face[2]] - q0;
        let normal = e1.cross(&e2);
        if normal.norm() < POLE_TOL || e1.norm() < POLE_TOL {
            ratios.push(f64::INFINITY);
            continue;
        }
        let u1 = e1 / e1.norm();
        let u2 = normal.cross(&e1).normalize();
        let image = Matrix2::from_columns(&[
            Vector2::new(e1.dot(&u1), e1.dot(&u2)),
            Vector2::new(e2.dot(&u1), e2.dot(&u2)),
        ]);

        let inv = match source.try_inverse() {
            Some(inv) => inv,
            None => {
                ratios.push(f64::INFINITY);
                continue;
            }
        };
        let j = image * inv;
        // Singular values of a 2x2 matrix from the eigenvalues of J^T J.
        let jtj = j.transpose() * j;
        let tr = jtj[(0, 0)] + jtj[(1, 1)];
        let det = jtj.determinant().max(0.0);
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        let hi = tr / 2.0 + disc;
        let lo = tr / 2.0 - disc;
        if lo <= 0.0 {
            ratios.push(f64::INFINITY);
        } else {
            ratios.push((hi / lo).sqrt());
        }
    }
    ratios
}
