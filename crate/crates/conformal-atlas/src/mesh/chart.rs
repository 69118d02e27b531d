//! Per-face isometric charts.
//!
//! Every face carries constant one-form coefficients expressed in a local
//! orthonormal frame. The chart places the face in the plane isometrically:
//! corner 0 at the origin, corner 1 on the positive x-axis, corner 2 in the
//! upper half plane. Charts are right-handed with respect to the face
//! winding, so plane orientation agrees with surface orientation.

use crate::mesh::Mesh;
use nalgebra::Vector2;

/// Isometric planar coordinates of one face's corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalChart {
    /// Face id this chart belongs to.
    pub face: usize,
    /// Planar positions of corners 0, 1, 2 (same order as the face).
    pub points: [Vector2<f64>; 3],
}

impl LocalChart {
    /// Planar edge vector from corner `i` to corner `(i + 1) % 3`.
    pub fn edge_vector(&self, i: usize) -> Vector2<f64> {
        self.points[(i + 1) % 3] - self.points[i]
    }

    /// Signed area of the chart triangle (positive: right-handed chart).
    pub fn signed_area(&self) -> f64 {
        let u = self.points[1] - self.points[0];
        let v = self.points[2] - self.points[0];
        0.5 * (u.x * v.y - u.y * v.x)
    }
}

/// Isometric chart of face `f`: corner 0 at (0, 0), corner 1 at (|e01|, 0),
/// corner 2 at positive y. Pairwise planar distances equal the embedded
/// distances to round-off.
pub fn local_chart(mesh: &Mesh, f: usize) -> LocalChart {
    let [a, b, c] = mesh.face(f);
    let pa = mesh.position(a);
    let u = mesh.position(b) - pa;
    let v = mesh.position(c) - pa;
    let lu = u.norm();
    // x: component of v along u; y: remaining (positive) height.
    let x = v.dot(&u) / lu;
    let y = (v - (x / lu) * u).norm();
    LocalChart {
        face: f,
        points: [
            Vector2::new(0.0, 0.0),
            Vector2::new(lu, 0.0),
            Vector2::new(x, y),
        ],
    }
}

/// Charts for every face, indexed by face id.
pub fn all_charts(mesh: &Mesh) -> Vec<LocalChart> {
    (0..mesh.n_faces()).map(|f| local_chart(mesh, f)).collect()
}
