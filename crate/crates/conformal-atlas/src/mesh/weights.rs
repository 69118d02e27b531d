//! Cotangent edge weights and negative-weight repair.
//!
//! The weight of edge `(u, v)` is `(cot a + cot b) / 2` where `a`, `b` are
//! the angles opposite the edge in its two faces. Weights depend only on the
//! intrinsic metric (edge lengths), so they are invariant under rigid motion
//! and uniform scaling.
//!
//! Obtuse opposite-angle pairs make weights negative, which degrades the
//! diffusion operators downstream. [`preprocess_negative_weights`] repairs
//! them by diagonal swaps (with midpoint splits as fallback when a swap
//! would duplicate an existing edge) or by splits alone, and reports any
//! edges it could not fix.

use crate::error::Result;
use crate::mesh::{Mesh, DEGENERATE_AREA_FACTOR};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Per-edge cotangent weights, indexed by edge id.
#[derive(Debug, Clone)]
pub struct EdgeWeights {
    pub values: Vec<f64>,
    /// Edge ids with non-positive weight.
    pub non_positive: Vec<usize>,
}

impl EdgeWeights {
    pub fn value(&self, e: usize) -> f64 {
        self.values[e]
    }

    /// Largest weighted vertex degree `max_u sum_v |k_uv|`; the natural
    /// scale of the diffusion operator, used to size descent steps.
    pub fn max_weighted_degree(&self, mesh: &Mesh) -> f64 {
        let mut deg = vec![0.0f64; mesh.n_vertices()];
        for e in 0..mesh.n_edges() {
            let (u, v) = mesh.edge_endpoints(e);
            deg[u] += self.values[e].abs();
            deg[v] += self.values[e].abs();
        }
        deg.into_iter().fold(0.0, f64::max)
    }
}

/// Cotangent weights of every edge.
pub fn cotan_weights(mesh: &Mesh) -> EdgeWeights {
    let mut values = Vec::with_capacity(mesh.n_edges());
    let mut non_positive = Vec::new();
    for e in 0..mesh.n_edges() {
        let h = mesh.edge_halfedge(e);
        let k = 0.5 * (opposite_cot(mesh, h) + opposite_cot(mesh, mesh.twin(h)));
        if !(k > 0.0) {
            non_positive.push(e);
        }
        values.push(k);
    }
    EdgeWeights {
        values,
        non_positive,
    }
}

/// Cotangent of the angle opposite halfedge `h` inside its face.
fn opposite_cot(mesh: &Mesh, h: usize) -> f64 {
    let apex = mesh.head(mesh.next(h));
    let u = mesh.position(mesh.tail(h)) - mesh.position(apex);
    let v = mesh.position(mesh.head(h)) - mesh.position(apex);
    u.dot(&v) / u.cross(&v).norm()
}

/// Strategy for repairing negative cotangent weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PreprocessMode {
    /// Diagonal swaps, falling back to a midpoint split when the swap would
    /// duplicate an existing edge or create a degenerate face.
    #[default]
    Swap,
    /// Midpoint splits only.
    Split,
    /// Leave the mesh untouched; only report.
    None,
}

impl std::str::FromStr for PreprocessMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "swap" => Ok(PreprocessMode::Swap),
            "split" => Ok(PreprocessMode::Split),
            "none" => Ok(PreprocessMode::None),
            other => Err(format!("unknown preprocess mode '{other}'")),
        }
    }
}

/// Outcome of [`preprocess_negative_weights`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub mode: PreprocessMode,
    /// Edges (endpoints, weight) that were negative before processing.
    pub initial_negative: Vec<(usize, usize, f64)>,
    pub swaps: usize,
    pub splits: usize,
    /// Edges still non-positive afterwards (endpoints, weight). Zero-weight
    /// edges (right-angle opposite pairs) are listed too: no local operation
    /// improves them, and they are harmless for the positive-semidefinite
    /// operators downstream.
    pub residual: Vec<(usize, usize, f64)>,
}

/// Repair negative cotangent weights. Returns the (possibly rebuilt) mesh
/// and a report. Vertex positions of the input are never moved; splits
/// append midpoints.
pub fn preprocess_negative_weights(
    mesh: &Mesh,
    mode: PreprocessMode,
) -> Result<(Mesh, PreprocessReport)> {
    let mut edit = EditMesh::from_mesh(mesh);
    let initial_negative: Vec<(usize, usize, f64)> = edit
        .edges()
        .filter_map(|(u, v)| {
            let k = edit.weight(u, v);
            (k < 0.0).then_some((u, v, k))
        })
        .collect();

    let mut swaps = 0usize;
    let mut splits = 0usize;
    if mode != PreprocessMode::None {
        // Bounded sweeps: each pass visits the currently negative edges in
        // deterministic order; an operation can create new negative edges,
        // so iterate until a pass changes nothing.
        let max_passes = 32;
        for _ in 0..max_passes {
            let negatives: Vec<(usize, usize)> = edit
                .edges()
                .filter(|&(u, v)| edit.weight(u, v) < 0.0)
                .collect();
            if negatives.is_empty() {
                break;
            }
            let mut changed = false;
            for (u, v) in negatives {
                if !edit.has_edge(u, v) || edit.weight(u, v) >= 0.0 {
                    continue; // already fixed by a neighbouring operation
                }
                match mode {
                    PreprocessMode::Swap => {
                        if edit.try_swap(u, v) {
                            swaps += 1;
                            changed = true;
                        } else if edit.split(u, v) {
                            splits += 1;
                            changed = true;
                        }
                    }
                    PreprocessMode::Split => {
                        if edit.split(u, v) {
                            splits += 1;
                            changed = true;
                        }
                    }
                    PreprocessMode::None => unreachable!(),
                }
            }
            if !changed {
                break;
            }
        }
    }

    let residual: Vec<(usize, usize, f64)> = edit
        .edges()
        .filter_map(|(u, v)| {
            let k = edit.weight(u, v);
            (!(k > 0.0)).then_some((u, v, k))
        })
        .collect();

    let out = if swaps + splits > 0 {
        Mesh::new(edit.positions, edit.faces.into_iter().flatten().collect())?
    } else {
        mesh.clone()
    };
    Ok((
        out,
        PreprocessReport {
            mode,
            initial_negative,
            swaps,
            splits,
            residual,
        },
    ))
}

/// Lightweight editable triangle soup with an undirected edge-to-face map.
/// Used only during preprocessing; the result is re-validated by `Mesh::new`.
struct EditMesh {
    positions: Vec<Vector3<f64>>,
    /// `None` marks a deleted face slot.
    faces: Vec<Option<[usize; 3]>>,
    edge_faces: BTreeMap<(usize, usize), Vec<usize>>,
    degenerate_threshold: f64,
}

fn key(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl EditMesh {
    fn from_mesh(mesh: &Mesh) -> Self {
        let mut edge_faces: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (fi, f) in mesh.faces().iter().enumerate() {
            for c in 0..3 {
                edge_faces
                    .entry(key(f[c], f[(c + 1) % 3]))
                    .or_default()
                    .push(fi);
            }
        }
        EditMesh {
            positions: mesh.positions().to_vec(),
            faces: mesh.faces().iter().map(|f| Some(*f)).collect(),
            edge_faces,
            degenerate_threshold: DEGENERATE_AREA_FACTOR * mesh.bbox_diag() * mesh.bbox_diag(),
        }
    }

    fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edge_faces.keys().copied()
    }

    fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_faces.contains_key(&key(u, v))
    }

    fn apex(&self, f: usize, u: usize, v: usize) -> usize {
        let face = self.faces[f].expect("live face");
        *face.iter().find(|&&w| w != u && w != v).expect("apex")
    }

    fn cot_at(&self, apex: usize, u: usize, v: usize) -> f64 {
        let a = self.positions[u] - self.positions[apex];
        let b = self.positions[v] - self.positions[apex];
        a.dot(&b) / a.cross(&b).norm()
    }

    fn weight(&self, u: usize, v: usize) -> f64 {
        let fs = &self.edge_faces[&key(u, v)];
        0.5 * fs
            .iter()
            .map(|&f| self.cot_at(self.apex(f, u, v), u, v))
            .sum::<f64>()
    }

    fn area(&self, a: usize, b: usize, c: usize) -> f64 {
        let u = self.positions[b] - self.positions[a];
        let v = self.positions[c] - self.positions[a];
        0.5 * u.cross(&v).norm()
    }

    fn remove_face(&mut self, f: usize) {
        let face = self.faces[f].take().expect("live face");
        for c in 0..3 {
            let k = key(face[c], face[(c + 1) % 3]);
            let list = self.edge_faces.get_mut(&k).expect("edge of face");
            list.retain(|&g| g != f);
            if list.is_empty() {
                self.edge_faces.remove(&k);
            }
        }
    }

    fn add_face(&mut self, face: [usize; 3]) {
        let fi = self.faces.len();
        self.faces.push(Some(face));
        for c in 0..3 {
            self.edge_faces
                .entry(key(face[c], face[(c + 1) % 3]))
                .or_default()
                .push(fi);
        }
    }

    /// Oriented face of the directed edge `u -> v`, plus its apex.
    fn directed_face(&self, u: usize, v: usize) -> Option<(usize, usize)> {
        for &f in self.edge_faces.get(&key(u, v))? {
            let face = self.faces[f].expect("live face");
            for c in 0..3 {
                if face[c] == u && face[(c + 1) % 3] == v {
                    return Some((f, face[(c + 2) % 3]));
                }
            }
        }
        None
    }

    /// Diagonal swap of edge `(u, v)`: faces `(u, v, a)` and `(v, u, b)`
    /// become `(a, u, b)` and `(b, v, a)`. Only performed when the new
    /// diagonal does not already exist, both new faces are non-degenerate,
    /// and the new diagonal's weight is positive.
    fn try_swap(&mut self, u: usize, v: usize) -> bool {
        let Some((f1, a)) = self.directed_face(u, v) else {
            return false;
        };
        let Some((f2, b)) = self.directed_face(v, u) else {
            return false;
        };
        if a == b || self.has_edge(a, b) {
            return false;
        }
        if self.area(a, u, b) <= self.degenerate_threshold
            || self.area(b, v, a) <= self.degenerate_threshold
        {
            return false;
        }
        // New diagonal (a, b) is opposite u in (a, u, b) and v in (b, v, a).
        let new_weight = 0.5 * (self.cot_at(u, a, b) + self.cot_at(v, a, b));
        if !(new_weight > 0.0) {
            return false;
        }
        self.remove_face(f1);
        self.remove_face(f2);
        self.add_face([a, u, b]);
        self.add_face([b, v, a]);
        true
    }

    /// Midpoint split of edge `(u, v)`: inserts the midpoint `w` and
    /// replaces the two incident faces with four.
    fn split(&mut self, u: usize, v: usize) -> bool {
        let Some((f1, a)) = self.directed_face(u, v) else {
            return false;
        };
        let Some((f2, b)) = self.directed_face(v, u) else {
            return false;
        };
        let w = self.positions.len();
        let mid = 0.5 * (self.positions[u] + self.positions[v]);
        self.positions.push(mid);
        if self.area(u, w, a) <= self.degenerate_threshold
            || self.area(w, v, a) <= self.degenerate_threshold
            || self.area(v, w, b) <= self.degenerate_threshold
            || self.area(w, u, b) <= self.degenerate_threshold
        {
            self.positions.pop();
            return false;
        }
        self.remove_face(f1);
        self.remove_face(f2);
        self.add_face([u, w, a]);
        self.add_face([w, v, a]);
        self.add_face([v, w, b]);
        self.add_face([w, u, b]);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshgen;
    use nalgebra::Vector3;

    const INV_SQRT3: f64 = 0.577_350_269_189_625_8;

    #[test]
    fn equilateral_weights() {
        // Regular tetrahedron: every opposite angle is 60 degrees, so every
        // weight is cot(60) = 1/sqrt(3).
        let m = meshgen::tetrahedron().unwrap();
        let w = cotan_weights(&m);
        for e in 0..m.n_edges() {
            assert!((w.value(e) - INV_SQRT3).abs() < 1e-14);
        }
        assert!(w.non_positive.is_empty());
    }

    /// Tetrahedron whose edge (0, 1) has both opposite angles equal to 120
    /// degrees, giving weight -1/sqrt(3).
    fn obtuse_tetra() -> Mesh {
        let h = 0.5 / 3.0f64.sqrt();
        let positions = vec![
            Vector3::new(-0.5, 0.0, 0.0),
            Vector3::new(0.5, 0.0, 0.0),
            Vector3::new(0.0, h, 0.0),
            Vector3::new(0.0, -h * 0.5, h * 0.75f64.sqrt()),
        ];
        let faces = vec![[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]];
        Mesh::new(positions, faces).unwrap()
    }

    #[test]
    fn obtuse_pair_weight() {
        let m = obtuse_tetra();
        let w = cotan_weights(&m);
        let e = m.edge_between(0, 1).unwrap();
        assert!((w.value(e) + INV_SQRT3).abs() < 1e-13);
        assert!(w.non_positive.contains(&e));
    }

    #[test]
    fn swap_falls_back_to_split_on_duplicate_diagonal() {
        // In a tetrahedron the swap diagonal (2, 3) already exists, so the
        // swap is illegal and the midpoint split must be applied instead.
        let m = obtuse_tetra();
        let (fixed, report) = preprocess_negative_weights(&m, PreprocessMode::Swap).unwrap();
        assert_eq!(report.swaps, 0);
        assert!(report.splits >= 1);
        assert_eq!(report.initial_negative.len(), 1);
        assert!(report.residual.is_empty(), "residual: {:?}", report.residual);
        let w = cotan_weights(&fixed);
        assert!(w.non_positive.is_empty());
        assert_eq!(fixed.euler_genus(), (2, 0));
    }

    #[test]
    fn split_mode_fixes_obtuse_pair() {
        let m = obtuse_tetra();
        let (fixed, report) = preprocess_negative_weights(&m, PreprocessMode::Split).unwrap();
        assert!(report.splits >= 1);
        let w = cotan_weights(&fixed);
        assert!(w.non_positive.is_empty());
    }

    #[test]
    fn none_mode_reports_only() {
        let m = obtuse_tetra();
        let (same, report) = preprocess_negative_weights(&m, PreprocessMode::None).unwrap();
        assert_eq!(report.swaps + report.splits, 0);
        assert_eq!(report.residual.len(), 1);
        assert_eq!(same.n_vertices(), m.n_vertices());
    }

    #[test]
    fn flat_grid_diagonals_have_zero_weight() {
        // Right-isosceles grid cells: diagonals see two right angles, so
        // their weight is exactly zero and no local operation improves it.
        let m = meshgen::flat_torus(4, 1.0).unwrap();
        let w = cotan_weights(&m);
        let zero = w.values.iter().filter(|&&k| k.abs() < 1e-12).count();
        assert_eq!(zero, m.n_faces() / 2 * 1); // one diagonal per square cell
        let (_, report) = preprocess_negative_weights(&m, PreprocessMode::Swap).unwrap();
        assert!(report.initial_negative.is_empty());
        assert_eq!(report.residual.len(), zero);
    }

    #[test]
    fn weights_invariant_under_rigid_motion() {
        let m = meshgen::icosphere(1).unwrap();
        let w0 = cotan_weights(&m);
        let axis = nalgebra::Unit::new_normalize(Vector3::new(0.3, -1.0, 0.7));
        let rot = nalgebra::Rotation3::from_axis_angle(&axis, 1.234);
        let shift = Vector3::new(5.0, -2.0, 0.5);
        let moved: Vec<Vector3<f64>> = m.positions().iter().map(|p| rot * p + shift).collect();
        let m2 = Mesh::new(moved, m.faces().to_vec()).unwrap();
        let w1 = cotan_weights(&m2);
        for e in 0..m.n_edges() {
            assert!((w0.value(e) - w1.value(e)).abs() < 1e-12);
        }
    }
}
