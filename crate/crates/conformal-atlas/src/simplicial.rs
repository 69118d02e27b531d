//! Simplicial chains, cochains and their boundary/coboundary operators.
//!
//! Edges carry a canonical orientation (from the lower vertex id to the
//! higher); a [`OneForm`] stores one value per edge for that orientation and
//! flips sign when evaluated against a halfedge running the other way. The
//! [`Gamma`] realization turns an edge cochain into a constant 1-form per
//! face, expressed in each face's local chart, by least-squares over the
//! three edge constraints; for closed cochains the fit is exact.

use crate::mesh::{LocalChart, Mesh};
use crate::snf::SparseIntMat;
use nalgebra::{Matrix2, Vector2};
use num_bigint::BigInt;
use std::collections::BTreeMap;

/// Integer chain of simplices of a fixed dimension (vertices, edges or
/// faces), indexed by mesh id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    pub dim: usize,
    coeffs: BTreeMap<usize, i64>,
}

impl Chain {
    pub fn new(dim: usize) -> Self {
        Chain {
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (usize, i64)>) -> Self {
        let mut c = Chain::new(dim);
        for (i, v) in entries {
            c.add(i, v);
        }
        c
    }

    pub fn coeff(&self, i: usize) -> i64 {
        self.coeffs.get(&i).copied().unwrap_or(0)
    }

    pub fn add(&mut self, i: usize, v: i64) {
        if v == 0 {
            return;
        }
        let entry = self.coeffs.entry(i).or_insert(0);
        *entry += v;
        if *entry == 0 {
            self.coeffs.remove(&i);
        }
    }

    pub fn add_chain(&mut self, other: &Chain, scale: i64) {
        assert_eq!(self.dim, other.dim);
        for (&i, &v) in &other.coeffs {
            self.add(i, v * scale);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.coeffs.iter().map(|(&i, &v)| (i, v))
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// Edge cochain: one value per edge in its canonical orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm {
    values: Vec<f64>,
}

impl OneForm {
    pub fn zeros(mesh: &Mesh) -> Self {
        OneForm {
            values: vec![0.0; mesh.n_edges()],
        }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        OneForm { values }
    }

    pub fn from_fn(mesh: &Mesh, mut f: impl FnMut(usize) -> f64) -> Self {
        OneForm {
            values: (0..mesh.n_edges()).map(&mut f).collect(),
        }
    }

    pub fn n_edges(&self) -> usize {
        self.values.len()
    }

    pub fn on_edge(&self, e: usize) -> f64 {
        self.values[e]
    }

    pub fn set_on_edge(&mut self, e: usize, v: f64) {
        self.values[e] = v;
    }

    /// Value against a directed halfedge: canonical direction keeps the sign.
    pub fn on_halfedge(&self, mesh: &Mesh, h: usize) -> f64 {
        let v = self.values[mesh.edge_of(h)];
        if mesh.is_canonical(h) {
            v
        } else {
            -v
        }
    }

    pub fn set_on_halfedge(&mut self, mesh: &Mesh, h: usize, v: f64) {
        let e = mesh.edge_of(h);
        self.values[e] = if mesh.is_canonical(h) { v } else { -v };
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn axpy(&mut self, c: f64, other: &OneForm) {
        assert_eq!(self.values.len(), other.values.len());
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    pub fn linear_combination(forms: &[OneForm], coeffs: &[f64]) -> OneForm {
        assert_eq!(forms.len(), coeffs.len());
        assert!(!forms.is_empty());
        let mut out = OneForm {
            values: vec![0.0; forms[0].values.len()],
        };
        for (f, &c) in forms.iter().zip(coeffs) {
            out.axpy(c, f);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Coboundary of a vertex function: `(df)(u -> v) = f(v) - f(u)`.
pub fn coboundary_0(mesh: &Mesh, f: &[f64]) -> OneForm {
    assert_eq!(f.len(), mesh.n_vertices());
    OneForm::from_fn(mesh, |e| {
        let (u, v) = mesh.edge_endpoints(e);
        f[v] - f[u]
    })
}

/// Sum of a one-form over the directed boundary of face `f`; zero iff the
/// cochain is closed on that face.
pub fn face_circulation(mesh: &Mesh, omega: &OneForm, f: usize) -> f64 {
    (0..3).map(|c| omega.on_halfedge(mesh, 3 * f + c)).sum()
}

/// Vertex-edge incidence matrix: column `e` has -1 at the tail and +1 at the
/// head of the canonical orientation.
pub fn boundary_1(mesh: &Mesh) -> SparseIntMat {
    let mut m = SparseIntMat::zeros(mesh.n_vertices(), mesh.n_edges());
    for e in 0..mesh.n_edges() {
        let (u, v) = mesh.edge_endpoints(e);
        m.set(u, e, BigInt::from(-1));
        m.set(v, e, BigInt::from(1));
    }
    m
}

/// Edge-face incidence matrix: column `f` has +1 where the face traverses an
/// edge canonically and -1 where it runs against it.
pub fn boundary_2(mesh: &Mesh) -> SparseIntMat {
    let mut m = SparseIntMat::zeros(mesh.n_edges(), mesh.n_faces());
    for f in 0..mesh.n_faces() {
        for c in 0..3 {
            let h = 3 * f + c;
            let sign = if mesh.is_canonical(h) { 1 } else { -1 };
            m.set(mesh.edge_of(h), f, BigInt::from(sign));
        }
    }
    m
}

/// Boundary of a face chain as an edge chain.
pub fn boundary_of_faces(mesh: &Mesh, faces: &Chain) -> Chain {
    assert_eq!(faces.dim, 2);
    let mut out = Chain::new(1);
    for (f, c) in faces.iter() {
        for corner in 0..3 {
            let h = 3 * f + corner;
            let sign = if mesh.is_canonical(h) { 1 } else { -1 };
            out.add(mesh.edge_of(h), sign * c);
        }
    }
    out
}

/// Boundary of an edge chain as a vertex chain.
pub fn boundary_of_edges(mesh: &Mesh, edges: &Chain) -> Chain {
    assert_eq!(edges.dim, 1);
    let mut out = Chain::new(0);
    for (e, c) in edges.iter() {
        let (u, v) = mesh.edge_endpoints(e);
        out.add(u, -c);
        out.add(v, c);
    }
    out
}

/// Integral of a one-form over an integer edge chain, compensated summation.
pub fn integrate_chain(mesh: &Mesh, omega: &OneForm, chain: &Chain) -> f64 {
    assert_eq!(chain.dim, 1);
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (e, c) in chain.iter() {
        let _ = mesh; // orientation already canonical per edge
        let term = c as f64 * omega.on_edge(e);
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Integral of a one-form along a directed halfedge path.
pub fn integrate_path(mesh: &Mesh, omega: &OneForm, path: &[usize]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &h in path {
        let term = omega.on_halfedge(mesh, h);
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// A 1-form realized as a constant covector per face, written in that face's
/// local chart: `omega = comps.x * dx + comps.y * dy`.
#[derive(Debug, Clone)]
pub struct FaceForm {
    pub comps: Vec<Vector2<f64>>,
}

impl FaceForm {
    pub fn zeros(mesh: &Mesh) -> Self {
        FaceForm {
            comps: vec![Vector2::zeros(); mesh.n_faces()],
        }
    }

    /// Integral along a chart displacement within face `f`.
    pub fn pair(&self, f: usize, displacement: Vector2<f64>) -> f64 {
        self.comps[f].dot(&displacement)
    }

    pub fn axpy(&mut self, c: f64, other: &FaceForm) {
        assert_eq!(self.comps.len(), other.comps.len());
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            *a += c * b;
        }
    }
}

/// Realize an edge cochain as a per-face constant form: for each face solve
/// the three edge constraints `comps . edge_vec(k) = omega(h_k)` in the
/// least-squares sense via the 2x2 normal equations. Exact whenever the
/// cochain is closed on the face.
pub fn gamma(mesh: &Mesh, charts: &[LocalChart], omega: &OneForm) -> FaceForm {
    let mut out = FaceForm::zeros(mesh);
    for f in 0..mesh.n_faces() {
        let chart = &charts[f];
        let mut ata = Matrix2::<f64>::zeros();
        let mut atb = Vector2::<f64>::zeros();
        for k in 0..3 {
            let ev = chart.edge_vector(k);
            let b = omega.on_halfedge(mesh, 3 * f + k);
            ata += ev * ev.transpose();
            atb += ev * b;
        }
        let inv = ata.try_inverse().unwrap_or_else(|| {
            panic!("face {f} has a rank-deficient chart; mesh validation should prevent this")
        });
        out.comps[f] = inv * atb;
    }
    out
}

/// Integrate a face form back over each edge (using the chart of one
/// incident face). For closed cochains `gamma` and this are mutually
/// inverse.
pub fn face_form_to_cochain(mesh: &Mesh, charts: &[LocalChart], w: &FaceForm) -> OneForm {
    OneForm::from_fn(mesh, |e| {
        let h = mesh.edge_halfedge(e);
        let f = mesh.face_of(h);
        let corner = h - 3 * f;
        w.pair(f, charts[f].edge_vector(corner))
    })
}

/// Maximum over faces of the 2-norm gap between realizing `df` via `gamma`
/// and differentiating the linear interpolant of `f` directly in each chart.
pub fn check_gamma_commutes(mesh: &Mesh, charts: &[LocalChart], f: &[f64]) -> f64 {
    let df = coboundary_0(mesh, f);
    let realized = gamma(mesh, charts, &df);
    let mut worst = 0.0f64;
    for face in 0..mesh.n_faces() {
        let [v0, v1, v2] = mesh.face(face);
        let chart = &charts[face];
        let e1 = chart.points[1] - chart.points[0];
        let e2 = chart.points[2] - chart.points[0];
        let m = Matrix2::from_columns(&[e1, e2]).transpose();
        let rhs = Vector2::new(f[v1] - f[v0], f[v2] - f[v0]);
        let direct = m
            .try_inverse()
            .expect("non-degenerate face")
            * rhs;
        worst = worst.max((realized.comps[face] - direct).norm());
    }
    worst
}
