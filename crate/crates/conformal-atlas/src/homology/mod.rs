//! First homology of a closed oriented surface: generator cycles, per-edge
//! annotation vectors for exact class computations, cycle shortening,
//! intersection numbers, canonical (symplectic) bases, fundamental domains
//! and bounded-domain recovery.
//!
//! The generators come from a unit-pivot elimination of the two incidence
//! matrices: a spanning tree of the vertex graph contracts the vertex
//! boundary operator, a spanning cotree of the dual graph contracts the face
//! boundary operator, and the `2g` leftover edges close tree loops that
//! generate homology. Because every pivot of an incidence matrix is a unit,
//! this elimination reaches the same diagonal form as the general integer
//! reduction in [`crate::snf`] while touching only graph structure; the
//! general routine stays available as an independent cross-check.

mod domain;
mod intersect;
mod shorten;

pub use domain::{curve_class, flood_bounded_domain, fundamental_domain, CutSystem};
pub use intersect::{
    canonicalize_basis, intersection_matrix, perturb_transversal, standard_symplectic,
    CanonicalBasis,
};
pub use shorten::shorten_cycle;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::simplicial::Chain;
use std::collections::{BTreeSet, VecDeque};

/// A closed directed loop of halfedges: `head(h_k) = tail(h_{k+1})`,
/// cyclically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cycle {
    pub halfedges: Vec<usize>,
}

impl Cycle {
    pub fn new(mesh: &Mesh, halfedges: Vec<usize>) -> Result<Self> {
        let c = Cycle { halfedges };
        if let Some(k) = (0..c.halfedges.len())
            .find(|&k| mesh.head(c.halfedges[k]) != mesh.tail(c.halfedges[(k + 1) % c.halfedges.len()]))
        {
            return Err(Error::NotACycle {
                vertex: mesh.head(c.halfedges[k]),
            });
        }
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.halfedges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.halfedges.is_empty()
    }

    /// Tail vertex of each halfedge, in loop order.
    pub fn vertices(&self, mesh: &Mesh) -> Vec<usize> {
        self.halfedges.iter().map(|&h| mesh.tail(h)).collect()
    }

    /// No vertex visited twice.
    pub fn is_simple(&self, mesh: &Mesh) -> bool {
        let vs = self.vertices(mesh);
        let set: BTreeSet<usize> = vs.iter().copied().collect();
        set.len() == vs.len()
    }

    pub fn to_chain(&self, mesh: &Mesh) -> Chain {
        let mut c = Chain::new(1);
        for &h in &self.halfedges {
            let sign = if mesh.is_canonical(h) { 1 } else { -1 };
            c.add(mesh.edge_of(h), sign);
        }
        c
    }

    pub fn length(&self, mesh: &Mesh) -> f64 {
        self.halfedges
            .iter()
            .map(|&h| mesh.edge_length(mesh.edge_of(h)))
            .sum()
    }

    /// Edge ids used by the loop (ignoring direction and multiplicity).
    pub fn edge_set(&self, mesh: &Mesh) -> BTreeSet<usize> {
        self.halfedges.iter().map(|&h| mesh.edge_of(h)).collect()
    }

    /// Rotate so the loop starts at its smallest halfedge id; keeps output
    /// independent of construction order.
    pub fn normalize_start(&mut self) {
        if self.halfedges.is_empty() {
            return;
        }
        let k = self
            .halfedges
            .iter()
            .enumerate()
            .min_by_key(|(_, &h)| h)
            .map(|(k, _)| k)
            .expect("nonempty");
        self.halfedges.rotate_left(k);
    }
}

/// Per-edge integer vectors expressing the homology class of any cycle in
/// generator coordinates: the class of a cycle is the signed sum of its
/// edges' vectors, and tree/cotree edges carry the zero vector.
#[derive(Debug, Clone)]
pub struct Annotations {
    pub genus: usize,
    vectors: Vec<Vec<i64>>,
}

impl Annotations {
    pub fn vector(&self, e: usize) -> &[i64] {
        &self.vectors[e]
    }

    /// Class of an integer edge chain; the chain must be a cycle for the
    /// result to be meaningful.
    pub fn class_of_chain(&self, chain: &Chain) -> Vec<i64> {
        let mut out = vec![0i64; 2 * self.genus];
        for (e, c) in chain.iter() {
            for (o, a) in out.iter_mut().zip(&self.vectors[e]) {
                *o += c * a;
            }
        }
        out
    }

    pub fn class_of_cycle(&self, mesh: &Mesh, cycle: &Cycle) -> Vec<i64> {
        self.class_of_chain(&cycle.to_chain(mesh))
    }

    /// Class of a directed halfedge path (need not be closed); useful for
    /// comparing two paths with common endpoints.
    pub fn class_of_path(&self, mesh: &Mesh, path: &[usize]) -> Vec<i64> {
        let mut out = vec![0i64; 2 * self.genus];
        for &h in path {
            let sign = if mesh.is_canonical(h) { 1 } else { -1 };
            for (o, a) in out.iter_mut().zip(&self.vectors[mesh.edge_of(h)]) {
                *o += sign * a;
            }
        }
        out
    }
}

/// Spanning structures of the elimination: primal tree, dual cotree and the
/// `2g` generator edges, plus the loops and annotations derived from them.
#[derive(Debug, Clone)]
pub struct HomologyBasis {
    pub genus: usize,
    /// `2g` simple generator loops; loop `i` has class `e_i`.
    pub cycles: Vec<Cycle>,
    pub annotations: Annotations,
    pub tree_edges: BTreeSet<usize>,
    pub cotree_edges: BTreeSet<usize>,
    /// Leftover edges, one per generator, in generator order.
    pub generator_edges: Vec<usize>,
}

struct SpanningTree {
    parent_he: Vec<Option<usize>>, // halfedge parent -> vertex
    depth: Vec<usize>,
    edges: BTreeSet<usize>,
}

fn primal_tree(mesh: &Mesh) -> SpanningTree {
    let n = mesh.n_vertices();
    let mut parent_he = vec![None; n];
    let mut depth = vec![0usize; n];
    let mut seen = vec![false; n];
    let mut edges = BTreeSet::new();
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for h in mesh.outgoing_halfedges(v) {
            let w = mesh.head(h);
            if !seen[w] {
                seen[w] = true;
                parent_he[w] = Some(h);
                depth[w] = depth[v] + 1;
                edges.insert(mesh.edge_of(h));
                queue.push_back(w);
            }
        }
    }
    assert!(seen.iter().all(|&s| s), "mesh validation guarantees connectivity");
    SpanningTree {
        parent_he,
        depth,
        edges,
    }
}

struct DualCotree {
    /// Primal edge crossed from the parent face, per face (root: none).
    parent_edge: Vec<Option<usize>>,
    /// Faces in breadth-first discovery order.
    order: Vec<usize>,
    edges: BTreeSet<usize>,
}

fn dual_cotree(mesh: &Mesh, blocked: &BTreeSet<usize>) -> DualCotree {
    let n = mesh.n_faces();
    let mut parent_edge = vec![None; n];
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut edges = BTreeSet::new();
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(f) = queue.pop_front() {
        order.push(f);
        for c in 0..3 {
            let h = 3 * f + c;
            let e = mesh.edge_of(h);
            if blocked.contains(&e) {
                continue;
            }
            let g = mesh.face_of(mesh.twin(h));
            if !seen[g] {
                seen[g] = true;
                parent_edge[g] = Some(e);
                edges.insert(e);
                queue.push_back(g);
            }
        }
    }
    assert!(
        seen.iter().all(|&s| s),
        "dual graph stays connected off a spanning tree"
    );
    DualCotree {
        parent_edge,
        order,
        edges,
    }
}

fn tree_loop(mesh: &Mesh, tree: &SpanningTree, x: usize) -> Cycle {
    let h_uv = mesh.edge_halfedge(x);
    let (u, v) = (mesh.tail(h_uv), mesh.head(h_uv));
    // Walk both endpoints up to their lowest common ancestor.
    let (mut a, mut b) = (v, u);
    let mut up_v = Vec::new(); // halfedges v -> lca
    let mut up_u = Vec::new(); // halfedges lca -> u, built backwards
    while tree.depth[a] > tree.depth[b] {
        let p = tree.parent_he[a].expect("non-root has parent");
        up_v.push(mesh.twin(p));
        a = mesh.tail(p);
    }
    while tree.depth[b] > tree.depth[a] {
        let p = tree.parent_he[b].expect("non-root has parent");
        up_u.push(p);
        b = mesh.tail(p);
    }
    while a != b {
        let pa = tree.parent_he[a].expect("non-root has parent");
        up_v.push(mesh.twin(pa));
        a = mesh.tail(pa);
        let pb = tree.parent_he[b].expect("non-root has parent");
        up_u.push(pb);
        b = mesh.tail(pb);
    }
    let mut halfedges = Vec::with_capacity(1 + up_v.len() + up_u.len());
    halfedges.push(h_uv);
    halfedges.extend(up_v);
    halfedges.extend(up_u.into_iter().rev());
    let mut cycle = Cycle::new(mesh, halfedges).expect("tree loop closes");
    cycle.normalize_start();
    cycle
}

/// Compute generator loops and edge annotations for a closed mesh.
pub fn homology_basis(mesh: &Mesh) -> Result<HomologyBasis> {
    let (_, genus) = mesh.euler_genus();
    let tree = primal_tree(mesh);
    let cotree = dual_cotree(mesh, &tree.edges);
    let generator_edges: Vec<usize> = (0..mesh.n_edges())
        .filter(|e| !tree.edges.contains(e) && !cotree.edges.contains(e))
        .collect();
    if generator_edges.len() != 2 * genus {
        return Err(Error::GenusMismatch {
            expected: 2 * genus,
            actual: generator_edges.len(),
        });
    }

    let cycles: Vec<Cycle> = generator_edges
        .iter()
        .map(|&x| tree_loop(mesh, &tree, x))
        .collect();

    // Annotations: generators get unit vectors (for their canonical edge
    // direction), tree edges zero, and cotree edges follow from demanding
    // zero circulation around every face, resolved leaves-first along the
    // dual tree.
    let mut vectors = vec![vec![0i64; 2 * genus]; mesh.n_edges()];
    for (i, &x) in generator_edges.iter().enumerate() {
        vectors[x][i] = 1;
    }
    for &f in cotree.order.iter().rev() {
        let Some(e_p) = cotree.parent_edge[f] else {
            continue; // root
        };
        let mut acc = vec![0i64; 2 * genus];
        let mut parent_sign = 0i64;
        for c in 0..3 {
            let h = 3 * f + c;
            let e = mesh.edge_of(h);
            let sign = if mesh.is_canonical(h) { 1 } else { -1 };
            if e == e_p {
                parent_sign = sign;
            } else {
                for (a, v) in acc.iter_mut().zip(&vectors[e]) {
                    *a += sign * v;
                }
            }
        }
        assert!(parent_sign != 0, "parent edge borders its face");
        for (slot, a) in vectors[e_p].iter_mut().zip(&acc) {
            *slot = -parent_sign * a;
        }
    }
    // Global consistency: the root face circulation must close for free.
    {
        let f = cotree.order[0];
        let mut acc = vec![0i64; 2 * genus];
        for c in 0..3 {
            let h = 3 * f + c;
            let sign = if mesh.is_canonical(h) { 1 } else { -1 };
            for (a, v) in acc.iter_mut().zip(&vectors[mesh.edge_of(h)]) {
                *a += sign * v;
            }
        }
        assert!(
            acc.iter().all(|&a| a == 0),
            "annotation back-substitution must close at the root"
        );
    }

    Ok(HomologyBasis {
        genus,
        cycles,
        annotations: Annotations {
            genus,
            vectors,
        },
        tree_edges: tree.edges,
        cotree_edges: cotree.edges,
        generator_edges,
    })
}
