//! Cutting a closed mesh open along a set of edges.
//!
//! Cutting duplicates vertices: around each vertex the fan of incident
//! corners is split into wedges wherever a spoke lies on a cut edge, and
//! each wedge receives its own vertex copy. Faces keep their index and
//! corner order, so halfedge `3*f + c` in the cut mesh corresponds to the
//! same halfedge in the original mesh. Twins across cut edges are severed,
//! producing boundary loops.

use crate::mesh::Mesh;
use nalgebra::Vector3;
use std::collections::{BTreeMap, BTreeSet};

/// A mesh cut open along edges. Not necessarily closed; faces and halfedge
/// numbering coincide with the source mesh.
#[derive(Debug, Clone)]
pub struct CutMesh {
    pub positions: Vec<Vector3<f64>>,
    pub faces: Vec<[usize; 3]>,
    /// Original vertex id for each vertex copy.
    pub orig_vertex: Vec<usize>,
    /// Twin halfedge, `None` on the cut boundary.
    twin: Vec<Option<usize>>,
    /// Boundary loops as directed halfedge sequences (face on the left),
    /// each starting at its smallest halfedge id, sorted by that id.
    pub boundary_loops: Vec<Vec<usize>>,
    copies: BTreeMap<usize, Vec<usize>>,
    vertex_he: Vec<usize>,
}

impl CutMesh {
    pub fn n_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_halfedges(&self) -> usize {
        3 * self.faces.len()
    }

    pub fn n_boundary_halfedges(&self) -> usize {
        self.twin.iter().filter(|t| t.is_none()).count()
    }

    pub fn n_edges(&self) -> usize {
        let b = self.n_boundary_halfedges();
        (self.n_halfedges() - b) / 2 + b
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_faces() as i64
    }

    pub fn tail(&self, h: usize) -> usize {
        self.faces[h / 3][h % 3]
    }

    pub fn head(&self, h: usize) -> usize {
        self.faces[h / 3][(h % 3 + 1) % 3]
    }

    pub fn next(&self, h: usize) -> usize {
        3 * (h / 3) + (h % 3 + 1) % 3
    }

    pub fn prev(&self, h: usize) -> usize {
        3 * (h / 3) + (h % 3 + 2) % 3
    }

    pub fn twin(&self, h: usize) -> Option<usize> {
        self.twin[h]
    }

    pub fn face_of(&self, h: usize) -> usize {
        h / 3
    }

    pub fn is_boundary_halfedge(&self, h: usize) -> bool {
        self.twin[h].is_none()
    }

    /// Copies of an original vertex, in creation (fan) order.
    pub fn copies_of(&self, orig: usize) -> &[usize] {
        self.copies.get(&orig).map_or(&[], Vec::as_slice)
    }

    /// One outgoing halfedge per vertex copy; for boundary copies this is
    /// the leading boundary spoke of the wedge.
    pub fn vertex_halfedge(&self, v: usize) -> usize {
        self.vertex_he[v]
    }

    /// Outgoing halfedges of a vertex copy in counterclockwise order,
    /// starting from `vertex_halfedge`. Terminates at the wedge boundary.
    pub fn outgoing_halfedges(&self, v: usize) -> Vec<usize> {
        let start = self.vertex_he[v];
        let mut out = vec![start];
        let mut h = start;
        loop {
            let Some(t) = self.twin[self.prev(h)] else {
                break;
            };
            if t == start {
                break;
            }
            out.push(t);
            h = t;
        }
        out
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        let spokes = self.outgoing_halfedges(v);
        // Interior iff the fan closes up: rotating once more returns home.
        self.twin[self.prev(*spokes.last().expect("nonempty fan"))] != Some(self.vertex_he[v])
    }

    /// Vertices along each boundary loop, parallel to `boundary_loops`
    /// (entry `k` is the tail of halfedge `k` in the loop).
    pub fn boundary_vertex_loops(&self) -> Vec<Vec<usize>> {
        self.boundary_loops
            .iter()
            .map(|l| l.iter().map(|&h| self.tail(h)).collect())
            .collect()
    }
}

/// Cut a closed mesh along the given edge set.
pub fn cut_along_edges(mesh: &Mesh, cut_edges: &BTreeSet<usize>) -> CutMesh {
    let nf = mesh.n_faces();
    let mut faces: Vec<[usize; 3]> = vec![[usize::MAX; 3]; nf];
    let mut positions = Vec::new();
    let mut orig_vertex = Vec::new();
    let mut copies: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut vertex_he = Vec::new();

    for v in 0..mesh.n_vertices() {
        let spokes = mesh.outgoing_halfedges(v);
        let d = spokes.len();
        let cut_positions: Vec<usize> = (0..d)
            .filter(|&i| cut_edges.contains(&mesh.edge_of(spokes[i])))
            .collect();
        // Wedges of corner indices; corner i is the face of spokes[i], lying
        // counterclockwise between spokes[i] and spokes[i+1].
        let wedges: Vec<Vec<usize>> = if cut_positions.is_empty() {
            vec![(0..d).collect()]
        } else {
            cut_positions
                .iter()
                .enumerate()
                .map(|(k, &start)| {
                    let end = cut_positions[(k + 1) % cut_positions.len()];
                    let len = (end + d - start - 1) % d + 1;
                    (0..len).map(|j| (start + j) % d).collect()
                })
                .collect()
        };
        for wedge in wedges {
            let id = positions.len();
            positions.push(mesh.positions()[v]);
            orig_vertex.push(v);
            copies.entry(v).or_default().push(id);
            vertex_he.push(spokes[wedge[0]]);
            for &i in &wedge {
                let h = spokes[i];
                faces[mesh.face_of(h)][h % 3] = id;
            }
        }
    }
    debug_assert!(faces.iter().all(|f| f.iter().all(|&v| v != usize::MAX)));

    let twin: Vec<Option<usize>> = (0..3 * nf)
        .map(|h| {
            if cut_edges.contains(&mesh.edge_of(h)) {
                None
            } else {
                Some(mesh.twin(h))
            }
        })
        .collect();

    let mut cut = CutMesh {
        positions,
        faces,
        orig_vertex,
        twin,
        boundary_loops: Vec::new(),
        copies,
        vertex_he,
    };
    cut.boundary_loops = trace_boundary_loops(&cut);
    cut
}

fn trace_boundary_loops(cut: &CutMesh) -> Vec<Vec<usize>> {
    let mut seen = vec![false; cut.n_halfedges()];
    let mut loops = Vec::new();
    for h0 in 0..cut.n_halfedges() {
        if seen[h0] || !cut.is_boundary_halfedge(h0) {
            continue;
        }
        let mut cycle = Vec::new();
        let mut h = h0;
        loop {
            seen[h] = true;
            cycle.push(h);
            // Rotate clockwise around head(h) until the next boundary edge.
            let mut g = cut.next(h);
            while let Some(t) = cut.twin(g) {
                g = cut.next(t);
            }
            h = g;
            if h == h0 {
                break;
            }
        }
        loops.push(cycle);
    }
    loops
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshgen;

    #[test]
    fn single_edge_cut_gives_disk() {
        let mesh = meshgen::tetrahedron().unwrap();
        let cuts = BTreeSet::from([0usize]);
        let cut = cut_along_edges(&mesh, &cuts);
        assert_eq!(cut.n_vertices(), 4);
        assert_eq!(cut.euler_characteristic(), 1);
        assert_eq!(cut.boundary_loops.len(), 1);
        assert_eq!(cut.boundary_loops[0].len(), 2);
    }

    #[test]
    fn ring_cut_turns_torus_into_cylinder() {
        let mesh = meshgen::flat_torus(4, 1.0).unwrap();
        // Vertical ring through column 0: vertices 0, 4, 8, 12.
        let ring = [0usize, 4, 8, 12];
        let cuts: BTreeSet<usize> = (0..4)
            .map(|i| {
                mesh.edge_between(ring[i], ring[(i + 1) % 4])
                    .expect("ring edge present")
            })
            .collect();
        let cut = cut_along_edges(&mesh, &cuts);
        assert_eq!(cut.n_vertices(), mesh.n_vertices() + 4);
        assert_eq!(cut.euler_characteristic(), 0);
        assert_eq!(cut.boundary_loops.len(), 2);
        for l in &cut.boundary_loops {
            assert_eq!(l.len(), 4);
        }
        // Every ring vertex has exactly two copies; off-ring vertices one.
        for v in 0..mesh.n_vertices() {
            let expected = if ring.contains(&v) { 2 } else { 1 };
            assert_eq!(cut.copies_of(v).len(), expected, "vertex {v}");
        }
    }

    #[test]
    fn boundary_walk_is_closed_and_consistent() {
        let mesh = meshgen::icosphere(1).unwrap();
        // Cut along the three edges of face 0: detaches a triangular flap
        // at one vertex? No: the three edges form a closed triangle, so the
        // sphere splits into two disks sharing no vertices.
        let cuts: BTreeSet<usize> = (0..3).map(|c| mesh.edge_of(c)).collect();
        let cut = cut_along_edges(&mesh, &cuts);
        // Sphere cut along a simple closed curve: two components, each a
        // disk; total chi = 2 per component count.
        assert_eq!(cut.euler_characteristic(), 2);
        assert_eq!(cut.boundary_loops.len(), 2);
        for l in &cut.boundary_loops {
            assert_eq!(l.len(), 3);
            for (k, &h) in l.iter().enumerate() {
                let next = l[(k + 1) % l.len()];
                assert_eq!(cut.head(h), cut.tail(next), "loop halfedges chain");
            }
        }
    }

    #[test]
    fn interior_structure_preserved_off_cut() {
        let mesh = meshgen::flat_torus(4, 2.0).unwrap();
        let cuts = BTreeSet::from([mesh.edge_of(0)]);
        let cut = cut_along_edges(&mesh, &cuts);
        for h in 0..cut.n_halfedges() {
            if let Some(t) = cut.twin(h) {
                assert_eq!(t, mesh.twin(h));
                assert_eq!(cut.orig_vertex[cut.tail(h)], mesh.tail(h));
                assert_eq!(cut.orig_vertex[cut.head(h)], mesh.head(h));
            }
        }
        // Interior vertex fans close up.
        for v in 0..cut.n_vertices() {
            let deg = cut.outgoing_halfedges(v).len();
            if !cut.is_boundary_vertex(v) {
                assert_eq!(deg, mesh.degree(cut.orig_vertex[v]));
            }
        }
    }
}
