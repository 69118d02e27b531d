//! Halfedge mesh for closed oriented triangle surfaces.
//!
//! [`Mesh`] owns vertex positions and triangles and derives the halfedge
//! connectivity once at construction, validating that the input is a closed,
//! consistently oriented, manifold triangle surface with no degenerate faces.
//! All downstream stages rely on those guarantees and never re-check them.
//!
//! Halfedge `h` of face `f = h / 3` runs from `faces[f][h % 3]` to
//! `faces[f][(h + 1) % 3]`. Every halfedge has a twin (the surface is
//! closed). Undirected edges are numbered in first-encounter order; each
//! edge stores its canonical halfedge, the one from the smaller vertex id to
//! the larger, so one-form values have a fixed reference direction.

mod chart;
pub mod io;
mod weights;

pub use chart::{all_charts, local_chart, LocalChart};
pub use weights::{
    cotan_weights, preprocess_negative_weights, EdgeWeights, PreprocessMode, PreprocessReport,
};

use crate::error::{Error, Result};
use nalgebra::Vector3;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

/// Degenerate-face threshold: a face whose area is below
/// `DEGENERATE_AREA_FACTOR * bbox_diagonal^2` is rejected at load time.
pub const DEGENERATE_AREA_FACTOR: f64 = 1e-12;

/// A closed, oriented, manifold triangle mesh with halfedge connectivity.
#[derive(Debug, Clone)]
pub struct Mesh {
    positions: Vec<Vector3<f64>>,
    faces: Vec<[usize; 3]>,
    /// Twin halfedge of each halfedge.
    twin: Vec<usize>,
    /// Canonical halfedge of each undirected edge (tail id < head id).
    edge_he: Vec<usize>,
    /// Edge id of each halfedge.
    edge_of_he: Vec<usize>,
    /// One outgoing halfedge per vertex.
    vertex_he: Vec<usize>,
    /// Directed edge lookup: (tail, head) -> halfedge.
    he_lookup: BTreeMap<(usize, usize), usize>,
    bbox_diag: f64,
}

impl Mesh {
    /// Build and validate a mesh from positions and triangles.
    ///
    /// Checks, in order: non-emptiness, triangle sanity (distinct in-range
    /// vertices), consistent orientation (each directed edge appears once),
    /// closedness (every halfedge has a twin), vertex-star manifoldness,
    /// non-degenerate face areas, and an even Euler characteristic.
    pub fn new(positions: Vec<Vector3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if positions.is_empty() || faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let nv = positions.len();
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= nv {
                    return Err(Error::VertexOutOfRange {
                        face: fi,
                        vertex: v,
                        vertex_count: nv,
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::DegenerateFace {
                    face: fi,
                    area: 0.0,
                    threshold: 0.0,
                });
            }
        }

        // Directed-edge table; a repeat means two faces traverse the same
        // directed edge, i.e. inconsistent winding.
        let mut he_lookup = BTreeMap::new();
        for (fi, f) in faces.iter().enumerate() {
            for corner in 0..3 {
                let (u, v) = (f[corner], f[(corner + 1) % 3]);
                if he_lookup.insert((u, v), 3 * fi + corner).is_some() {
                    return Err(Error::InconsistentOrientation { u, v });
                }
            }
        }

        let nh = 3 * faces.len();
        let mut twin = vec![usize::MAX; nh];
        let mut edge_he = Vec::with_capacity(nh / 2);
        let mut edge_of_he = vec![usize::MAX; nh];
        for (fi, f) in faces.iter().enumerate() {
            for corner in 0..3 {
                let h = 3 * fi + corner;
                let (u, v) = (f[corner], f[(corner + 1) % 3]);
                match he_lookup.get(&(v, u)) {
                    Some(&t) => twin[h] = t,
                    None => {
                        return Err(Error::NonManifoldEdge { u, v, count: 1 });
                    }
                }
                if u < v {
                    edge_of_he[h] = edge_he.len();
                    edge_he.push(h);
                }
            }
        }
        for (fi, f) in faces.iter().enumerate() {
            for corner in 0..3 {
                let h = 3 * fi + corner;
                if edge_of_he[h] == usize::MAX {
                    edge_of_he[h] = edge_of_he[twin[h]];
                }
                debug_assert!(twin[twin[h]] == h, "twin involution broken");
                let _ = (fi, f);
            }
        }

        let mut vertex_he = vec![usize::MAX; nv];
        let mut star_count = vec![0usize; nv];
        for (fi, f) in faces.iter().enumerate() {
            for corner in 0..3 {
                let u = f[corner];
                star_count[u] += 1;
                if vertex_he[u] == usize::MAX {
                    vertex_he[u] = 3 * fi + corner;
                }
            }
        }
        for v in 0..nv {
            if vertex_he[v] == usize::MAX {
                return Err(Error::NonManifoldVertex { vertex: v });
            }
        }

        let mesh = Mesh {
            bbox_diag: bbox_diagonal(&positions),
            positions,
            faces,
            twin,
            edge_he,
            edge_of_he,
            vertex_he,
            he_lookup,
        };

        // A vertex star must be a single fan: rotating from any outgoing
        // halfedge must visit every incident face exactly once.
        for v in 0..nv {
            let mut seen = 0usize;
            let start = mesh.vertex_he[v];
            let mut h = start;
            loop {
                seen += 1;
                if seen > star_count[v] {
                    return Err(Error::NonManifoldVertex { vertex: v });
                }
                h = mesh.rotate_ccw(h);
                if h == start {
                    break;
                }
            }
            if seen != star_count[v] {
                return Err(Error::NonManifoldVertex { vertex: v });
            }
        }

        let threshold = DEGENERATE_AREA_FACTOR * mesh.bbox_diag * mesh.bbox_diag;
        for fi in 0..mesh.faces.len() {
            let area = mesh.face_area(fi);
            if !(area > threshold) {
                return Err(Error::DegenerateFace {
                    face: fi,
                    area,
                    threshold,
                });
            }
        }

        let chi = mesh.euler_characteristic();
        if chi.rem_euclid(2) != 0 {
            return Err(Error::OddEulerCharacteristic { chi });
        }
        Ok(mesh)
    }

    pub fn n_vertices(&self) -> usize {
        self.positions.len()
    }
    pub fn n_edges(&self) -> usize {
        self.edge_he.len()
    }
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }
    pub fn n_halfedges(&self) -> usize {
        3 * self.faces.len()
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }
    pub fn position(&self, v: usize) -> Vector3<f64> {
        self.positions[v]
    }
    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }
    pub fn face(&self, f: usize) -> [usize; 3] {
        self.faces[f]
    }

    /// Diagonal of the axis-aligned bounding box; the global length scale.
    pub fn bbox_diag(&self) -> f64 {
        self.bbox_diag
    }

    // ----- halfedge accessors -------------------------------------------

    pub fn tail(&self, h: usize) -> usize {
        self.faces[h / 3][h % 3]
    }
    pub fn head(&self, h: usize) -> usize {
        self.faces[h / 3][(h + 1) % 3]
    }
    pub fn next(&self, h: usize) -> usize {
        3 * (h / 3) + (h + 1) % 3
    }
    pub fn prev(&self, h: usize) -> usize {
        3 * (h / 3) + (h + 2) % 3
    }
    pub fn twin(&self, h: usize) -> usize {
        self.twin[h]
    }
    pub fn face_of(&self, h: usize) -> usize {
        h / 3
    }
    pub fn edge_of(&self, h: usize) -> usize {
        self.edge_of_he[h]
    }

    /// Canonical halfedge of edge `e`; its tail id is smaller than its head id.
    pub fn edge_halfedge(&self, e: usize) -> usize {
        self.edge_he[e]
    }

    /// Endpoints of edge `e` in canonical order (small id, large id).
    pub fn edge_endpoints(&self, e: usize) -> (usize, usize) {
        let h = self.edge_he[e];
        (self.tail(h), self.head(h))
    }

    /// The two faces incident to edge `e` (canonical side first).
    pub fn edge_faces(&self, e: usize) -> [usize; 2] {
        let h = self.edge_he[e];
        [self.face_of(h), self.face_of(self.twin[h])]
    }

    /// Directed halfedge from `u` to `v`, if the edge exists.
    pub fn halfedge_between(&self, u: usize, v: usize) -> Option<usize> {
        self.he_lookup.get(&(u, v)).copied()
    }

    /// Undirected edge id between `u` and `v`, if present.
    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        self.halfedge_between(u, v)
            .or_else(|| self.halfedge_between(v, u))
            .map(|h| self.edge_of_he[h])
    }

    /// Whether halfedge `h` runs along its edge's canonical direction.
    pub fn is_canonical(&self, h: usize) -> bool {
        self.tail(h) < self.head(h)
    }

    /// One outgoing halfedge of vertex `v`.
    pub fn vertex_halfedge(&self, v: usize) -> usize {
        self.vertex_he[v]
    }

    /// Next outgoing halfedge counter-clockwise around the tail vertex
    /// (counter-clockwise with respect to the face winding).
    pub fn rotate_ccw(&self, h: usize) -> usize {
        self.twin[self.prev(h)]
    }

    /// Next outgoing halfedge clockwise around the tail vertex.
    pub fn rotate_cw(&self, h: usize) -> usize {
        self.next(self.twin[h])
    }

    /// Outgoing halfedges of `v` in counter-clockwise order, starting at the
    /// stored reference halfedge. The order is deterministic.
    pub fn outgoing_halfedges(&self, v: usize) -> Vec<usize> {
        let start = self.vertex_he[v];
        let mut out = Vec::new();
        let mut h = start;
        loop {
            out.push(h);
            h = self.rotate_ccw(h);
            if h == start {
                break;
            }
        }
        out
    }

    /// Vertex degree (number of incident edges).
    pub fn degree(&self, v: usize) -> usize {
        self.outgoing_halfedges(v).len()
    }

    // ----- geometry -------------------------------------------------------

    /// Edge vector of halfedge `h` (head position minus tail position).
    pub fn he_vector(&self, h: usize) -> Vector3<f64> {
        self.positions[self.head(h)] - self.positions[self.tail(h)]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        self.he_vector(self.edge_he[e]).norm()
    }

    /// Area of face `f` from the embedded positions.
    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        let u = self.positions[b] - self.positions[a];
        let v = self.positions[c] - self.positions[a];
        0.5 * u.cross(&v).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_faces()).map(|f| self.face_area(f)).sum()
    }

    /// Unit normal of face `f` following the winding order.
    pub fn face_normal(&self, f: usize) -> Vector3<f64> {
        let [a, b, c] = self.faces[f];
        let u = self.positions[b] - self.positions[a];
        let v = self.positions[c] - self.positions[a];
        let n = u.cross(&v);
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            n
        }
    }

    /// Interior angle at corner `corner` (0..3) of face `f`.
    pub fn corner_angle(&self, f: usize, corner: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        let ids = [a, b, c];
        let p = self.positions[ids[corner]];
        let q = self.positions[ids[(corner + 1) % 3]];
        let r = self.positions[ids[(corner + 2) % 3]];
        let u = q - p;
        let v = r - p;
        let cos = u.dot(&v);
        let sin = u.cross(&v).norm();
        sin.atan2(cos)
    }

    /// Euler characteristic `V - E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_faces() as i64
    }

    /// `(V - E + F, genus)` of the closed surface.
    pub fn euler_genus(&self) -> (i64, usize) {
        let chi = self.euler_characteristic();
        let genus = ((2 - chi) / 2).max(0) as usize;
        (chi, genus)
    }

    /// Content hash of positions and faces; keys the pipeline cache.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for p in &self.positions {
            for k in 0..3 {
                hasher.update(p[k].to_le_bytes());
            }
        }
        for f in &self.faces {
            for &v in f {
                hasher.update((v as u64).to_le_bytes());
            }
        }
        let digest = hasher.finalize();
        let mut s = String::with_capacity(64);
        for b in digest {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }
}

fn bbox_diagonal(positions: &[Vector3<f64>]) -> f64 {
    let mut lo = positions[0];
    let mut hi = positions[0];
    for p in positions {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (hi - lo).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshgen;
    use nalgebra::Vector3;

    fn tetra_cells() -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
        let positions = vec![
            Vector3::new(1.0, 1.0, 1.0),
            Vector3::new(1.0, -1.0, -1.0),
            Vector3::new(-1.0, 1.0, -1.0),
            Vector3::new(-1.0, -1.0, 1.0),
        ];
        // Outward-oriented regular tetrahedron.
        let faces = vec![[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]];
        (positions, faces)
    }

    #[test]
    fn tetrahedron_counts_and_genus() {
        let (p, f) = tetra_cells();
        let m = Mesh::new(p, f).unwrap();
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.n_edges(), 6);
        assert_eq!(m.n_faces(), 4);
        assert_eq!(m.euler_genus(), (2, 0));
    }

    #[test]
    fn grid_torus_counts_and_genus() {
        // 4x4 unit-square grid torus: 16 vertices, 48 edges, 32 faces.
        let m = meshgen::flat_torus(4, 1.0).unwrap();
        assert_eq!(m.n_vertices(), 16);
        assert_eq!(m.n_edges(), 48);
        assert_eq!(m.n_faces(), 32);
        assert_eq!(m.euler_genus(), (0, 1));
    }

    #[test]
    fn genus_two_plate() {
        let m = meshgen::genus2_plate(2, 0.0).unwrap();
        assert_eq!(m.euler_genus(), (-2, 2));
    }

    #[test]
    fn boundary_edge_rejected() {
        // A single triangle has three boundary edges.
        let positions = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
        ];
        let err = Mesh::new(positions, vec![[0, 1, 2]]).unwrap_err();
        assert!(matches!(err, Error::NonManifoldEdge { count: 1, .. }));
    }

    #[test]
    fn inconsistent_orientation_rejected() {
        let (p, mut f) = tetra_cells();
        f[3] = [1, 2, 3]; // flipped winding: edge (1,2) now traversed twice forward
        let err = Mesh::new(p, f).unwrap_err();
        assert!(matches!(err, Error::InconsistentOrientation { .. }));
    }

    #[test]
    fn degenerate_face_rejected() {
        let mut positions = vec![
            Vector3::new(1.0, 1.0, 1.0),
            Vector3::new(1.0, -1.0, -1.0),
            Vector3::new(-1.0, 1.0, -1.0),
            Vector3::new(-1.0, -1.0, 1.0),
        ];
        // Collapse vertex 3 onto the line through 0 and 1: face (0,3,1)
        // becomes a sliver of near-zero area.
        positions[3] = positions[0] + 0.5 * (positions[1] - positions[0]);
        let faces = vec![[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]];
        let err = Mesh::new(positions, faces).unwrap_err();
        assert!(matches!(err, Error::DegenerateFace { .. }));
    }

    #[test]
    fn rotation_visits_full_star() {
        let m = meshgen::icosphere(1).unwrap();
        for v in 0..m.n_vertices() {
            let ring = m.outgoing_halfedges(v);
            assert!(ring.len() == 5 || ring.len() == 6);
            for &h in &ring {
                assert_eq!(m.tail(h), v);
            }
        }
    }

    #[test]
    fn angles_sum_to_pi() {
        let m = meshgen::icosphere(2).unwrap();
        for f in 0..m.n_faces() {
            let s: f64 = (0..3).map(|c| m.corner_angle(f, c)).sum();
            assert!((s - std::f64::consts::PI).abs() < 1e-12);
        }
    }

    #[test]
    fn content_hash_is_stable() {
        let a = meshgen::flat_torus(4, 1.0).unwrap();
        let b = meshgen::flat_torus(4, 1.0).unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
        let c = meshgen::flat_torus(8, 1.0).unwrap();
        assert_ne!(a.content_hash(), c.content_hash());
    }
}
