//! Global conformal parametrization.
//!
//! Integrating a holomorphic 1-form over a fundamental domain maps the cut
//! surface into the plane; the real part supplies `u`, the imaginary part
//! `v`.  Because the domain is a disk the integral is path independent, so
//! the flattening is conformal away from the form's zeros.  The zeros are
//! located combinatorially, as vertices around which the form's coefficient
//! field winds.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hodge::HolomorphicForm;
use crate::homology::CutSystem;
use crate::mesh::{LocalChart, Mesh};
use crate::simplicial::{face_circulation, OneForm};

/// Per-face circulation bound under which integration is path independent.
pub const PATH_INDEPENDENCE_TOL: f64 = 1e-9;

/// Faces whose coefficient vector is smaller than this factor times the
/// median magnitude are flagged as near-singular for winding purposes.
pub const ZERO_MAGNITUDE_FACTOR: f64 = 1e-6;

/// One seam edge of the fundamental domain: the original edge and its two
/// boundary copies on the cut disk, both listed tail-to-head along the
/// original orientation.
#[derive(Debug, Clone, Copy)]
pub struct Seam {
    pub edge: usize,
    pub first: (usize, usize),
    pub second: (usize, usize),
}

/// Zeros of a holomorphic form located by star winding.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroReport {
    /// Vertices with nonzero index, in vertex order.
    pub zeros: Vec<(usize, i64)>,
    /// Sum of the indices; `2g - 2` for a generic form.
    pub total_index: i64,
    /// Vertices whose star contains a face with near-vanishing coefficient
    /// vector; their winding is unreliable.
    pub ambiguous: Vec<usize>,
}

/// A flattened fundamental domain.
#[derive(Debug, Clone)]
pub struct FlatParam {
    /// Planar image of every cut-mesh vertex.
    pub uv: Vec<Vector2<f64>>,
    /// The integrated form.
    pub form: HolomorphicForm,
    /// Correspondence between the two boundary copies of each cut edge.
    pub seams: Vec<Seam>,
    /// Zero report for the form; `None` when the form is too degenerate to
    /// classify (for example the zero form).
    pub zeros: Option<ZeroReport>,
}

/// Integrate `zeta` over the fundamental domain, rooted at cut vertex 0.
pub fn integrate_over_domain(
    mesh: &Mesh,
    charts: &[LocalChart],
    fd: &CutSystem,
    zeta: &HolomorphicForm,
) -> Result<FlatParam> {
    integrate_from(mesh, charts, fd, zeta, 0)
}

/// Integrate `zeta` over the fundamental domain starting from `root`.
///
/// Changing the root translates the image; nothing else moves.
pub fn integrate_from(
    mesh: &Mesh,
    charts: &[LocalChart],
    fd: &CutSystem,
    zeta: &HolomorphicForm,
    root: usize,
) -> Result<FlatParam> {
    let cut = &fd.cut;
    let chi = cut.euler_characteristic();
    if chi != 1 {
        return Err(Error::NotADisk { chi });
    }

    let worst = (0..mesh.n_faces())
        .map(|f| {
            face_circulation(mesh, &zeta.re, f)
                .abs()
                .max(face_circulation(mesh, &zeta.im, f).abs())
        })
        .fold(0.0, f64::max);
    if worst > PATH_INDEPENDENCE_TOL {
        return Err(Error::Unsupported {
            context: "parametrization".into(),
            msg: format!(
                "form has face circulation {worst:.3e}, above the path-independence bound"
            ),
        });
    }

    // Breadth-first integration over the disk; halfedge ids agree between
    // the cut mesh and the original, so form values transfer directly.
    let n = cut.n_vertices();
    let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); n];
    for h in 0..3 * cut.n_faces() {
        outgoing[cut.tail(h)].push(h);
    }
    let mut uv = vec![Vector2::zeros(); n];
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    let mut visited = 1usize;
    while let Some(u) = queue.pop_front() {
        for &h in &outgoing[u] {
            let w = cut.head(h);
            if !seen[w] {
                seen[w] = true;
                visited += 1;
                uv[w] = uv[u]
                    + Vector2::new(
                        zeta.re.on_halfedge(mesh, h),
                        zeta.im.on_halfedge(mesh, h),
                    );
                queue.push_back(w);
            }
        }
    }
    if visited != n {
        return Err(Error::Unsupported {
            context: "parametrization".into(),
            msg: format!("cut domain is disconnected: reached {visited} of {n} vertices"),
        });
    }

    let mut seams = Vec::with_capacity(fd.edges.len());
    for &e in &fd.edges {
        let h = mesh.edge_halfedge(e);
        let t = mesh.twin(h);
        seams.push(Seam {
            edge: e,
            first: (cut.tail(h), cut.head(h)),
            second: (cut.head(t), cut.tail(t)),
        });
    }

    let zeros = detect_zeros(mesh, charts, zeta).ok();
    Ok(FlatParam {
        uv,
        form: zeta.clone(),
        seams,
        zeros,
    })
}

/// Locate the zeros of `zeta` as vertices with nonzero star winding.
///
/// The star of each vertex is flattened so its corner angles sum to `2pi`;
/// the per-face coefficient vectors of the real part are carried into this
/// flattened frame and their total turning, in full revolutions, is the
/// winding.  Regular vertices wind zero times; a zero of order `k` winds
/// `-k` times, so the index is the negated winding and generic forms have
/// total index `2g - 2`.
pub fn detect_zeros(
    mesh: &Mesh,
    charts: &[LocalChart],
    zeta: &HolomorphicForm,
) -> Result<ZeroReport> {
    let field = crate::simplicial::gamma(mesh, charts, &zeta.re);
    let mut mags: Vec<f64> = field.comps.iter().map(|w| w.norm()).collect();
    let mut sorted = mags.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    if median <= f64::MIN_POSITIVE {
        return Err(Error::Unsupported {
            context: "zero detection".into(),
            msg: "form coefficients vanish on at least half the faces".into(),
        });
    }
    let threshold = ZERO_MAGNITUDE_FACTOR * median;
    for m in &mut mags {
        if *m < threshold {
            *m = 0.0;
        }
    }

    let mut zeros = Vec::new();
    let mut ambiguous = Vec::new();
    let mut total = 0i64;
    let two_pi = 2.0 * std::f64::consts::PI;
    for v in 0..mesh.n_vertices() {
        let star = mesh.outgoing_halfedges(v);
        let degree = star.len();
        let mut angles = Vec::with_capacity(degree);
        let mut psis = Vec::with_capacity(degree);
        let mut unreliable = false;
        for &h in &star {
            let f = mesh.face_of(h);
            if mags[f] == 0.0 {
                unreliable = true;
            }
            let corner = h - 3 * f;
            let chart = &charts[f];
            let p = chart.points[corner];
            let d1 = chart.points[(corner + 1) % 3] - p;
            let d2 = chart.points[(corner + 2) % 3] - p;
            angles.push(d1.perp(&d2).atan2(d1.dot(&d2)));
            let w = field.comps[f];
            psis.push(d1.perp(&w).atan2(d1.dot(&w)));
        }
        if unreliable {
            ambiguous.push(v);
            continue;
        }
        // Total turning of the field around the flattened star: the field is
        // constant inside each face, so all rotation happens at the edge
        // crossings (each jump assumed under a half turn), plus the exact
        // angle-deficit correction from flattening the cone to 2pi.
        let cone_angle: f64 = angles.iter().sum();
        let mut turning = two_pi - cone_angle;
        for i in 0..degree {
            let raw = psis[(i + 1) % degree] - psis[i] + angles[i];
            let mut jump = raw.rem_euclid(two_pi);
            if jump > std::f64::consts::PI {
                jump -= two_pi;
            }
            turning += jump;
        }
        let winding = (turning / two_pi).round() as i64;
        if winding != 0 {
            zeros.push((v, -winding));
            total -= winding;
        }
    }
    Ok(ZeroReport {
        zeros,
        total_index: total,
        ambiguous,
    })
}

/// Combine holomorphic pairs with real coefficients, keeping the conjugate
/// part consistent: the real parts and star coefficients mix linearly and
/// the imaginary part is rebuilt from the given harmonic basis.
pub fn combine_pairs(
    basis: &[OneForm],
    pairs: &[HolomorphicForm],
    coeffs: &[f64],
) -> HolomorphicForm {
    assert_eq!(pairs.len(), coeffs.len());
    let mut re = OneForm::from_values(vec![0.0; pairs[0].re.n_edges()]);
    for (p, &c) in pairs.iter().zip(coeffs) {
        re.axpy(c, &p.re);
    }
    let mut alpha = vec![0.0; pairs[0].alpha.len()];
    for (p, &c) in pairs.iter().zip(coeffs) {
        for (a, pa) in alpha.iter_mut().zip(&p.alpha) {
            *a += c * pa;
        }
    }
    let im = OneForm::linear_combination(basis, &alpha);
    HolomorphicForm { re, im, alpha }
}

/// Search for a combination of the holomorphic pairs whose zeros stay off
/// the star of `vertex`.
///
/// Zeros move when the form changes within the holomorphic span, so a small
/// family of integer combinations is scanned and the first report that
/// leaves `vertex` and its neighbors untouched wins.
pub fn form_avoiding_vertex(
    mesh: &Mesh,
    charts: &[LocalChart],
    basis: &[OneForm],
    pairs: &[HolomorphicForm],
    vertex: usize,
) -> Result<(HolomorphicForm, ZeroReport)> {
    if vertex >= mesh.n_vertices() {
        return Err(Error::Config(format!(
            "vertex {vertex} out of range ({} vertices)",
            mesh.n_vertices()
        )));
    }
    let mut forbidden: Vec<usize> = vec![vertex];
    for h in mesh.outgoing_halfedges(vertex) {
        forbidden.push(mesh.head(h));
    }

    let mut candidates: Vec<Vec<f64>> = Vec::new();
    for k in 0..pairs.len() {
        let mut c = vec![0.0; pairs.len()];
        c[k] = 1.0;
        candidates.push(c);
    }
    for k in 1..pairs.len() {
        for sign in [1.0, -1.0] {
            let mut c = vec![0.0; pairs.len()];
            c[0] = 1.0;
            c[k] = sign;
            candidates.push(c);
            let mut c = vec![0.0; pairs.len()];
            c[0] = 1.0;
            c[k] = 2.0 * sign;
            candidates.push(c);
        }
    }

    for coeffs in candidates {
        let form = combine_pairs(basis, pairs, &coeffs);
        let Ok(report) = detect_zeros(mesh, charts, &form) else {
            continue;
        };
        let hits = |v: &usize| forbidden.contains(v);
        if report.zeros.iter().any(|(v, _)| hits(v))
            || report.ambiguous.iter().any(hits)
        {
            continue;
        }
        return Ok((form, report));
    }
    Err(Error::Unsupported {
        context: "avoid-vertex".into(),
        msg: format!("no scanned combination kept its zeros away from vertex {vertex}"),
    })
}

/// Output formats for [`export_uv`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UvFormat {
    /// Wavefront OBJ with `vt` records per cut-mesh vertex.
    Obj,
    /// Flat drawing of the parametrized triangulation.
    Svg,
}

/// Write the flattened domain to `path`.
///
/// OBJ output keeps the original 3D vertices and attaches one `vt` per cut
/// vertex, so seams show up as corners with distinct texture indices.  SVG
/// output draws every triangle in the plane and overdraws the seam edges.
pub fn export_uv(
    mesh: &Mesh,
    fd: &CutSystem,
    fp: &FlatParam,
    path: impl AsRef<Path>,
    format: UvFormat,
) -> Result<()> {
    let path = path.as_ref();
    let body = match format {
        UvFormat::Obj => obj_text(mesh, fd, fp),
        UvFormat::Svg => svg_text(fd, fp),
    };
    std::fs::write(path, body).map_err(|e| Error::io(path.display().to_string(), e))
}

fn obj_text(mesh: &Mesh, fd: &CutSystem, fp: &FlatParam) -> String {
    let cut = &fd.cut;
    let mut out = String::new();
    for p in mesh.positions() {
        let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
    }
    for uv in &fp.uv {
        let _ = writeln!(out, "vt {} {}", uv.x, uv.y);
    }
    for f in 0..cut.n_faces() {
        let _ = write!(out, "f");
        for c in 0..3 {
            let h = 3 * f + c;
            let cv = cut.tail(h);
            let _ = write!(out, " {}/{}", cut.orig_vertex[cv] + 1, cv + 1);
        }
        let _ = writeln!(out);
    }
    out
}

fn svg_text(fd: &CutSystem, fp: &FlatParam) -> String {
    let cut = &fd.cut;
    let (mut lo, mut hi) = (Vector2::repeat(f64::INFINITY), Vector2::repeat(f64::NEG_INFINITY));
    for uv in &fp.uv {
        lo = lo.inf(uv);
        hi = hi.sup(uv);
    }
    let span = (hi - lo).amax().max(f64::MIN_POSITIVE);
    let margin = 0.02 * span;

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}">"#,
        lo.x - margin,
        lo.y - margin,
        (hi.x - lo.x) + 2.0 * margin,
        (hi.y - lo.y) + 2.0 * margin,
    );
    let _ = writeln!(
        out,
        r##"<g fill="none" stroke="#666" stroke-width="{}">"##,
        0.0015 * span
    );
    let _ = write!(out, r#"<path d=""#);
    for f in 0..cut.n_faces() {
        let [a, b, c] = [cut.tail(3 * f), cut.tail(3 * f + 1), cut.tail(3 * f + 2)];
        let _ = write!(
            out,
            "M{} {} L{} {} L{} {} Z",
            fp.uv[a].x, fp.uv[a].y, fp.uv[b].x, fp.uv[b].y, fp.uv[c].x, fp.uv[c].y
        );
    }
    let _ = writeln!(out, r#""/></g>"#);
    let _ = writeln!(
        out,
        r##"<g stroke="#c0392b" stroke-width="{}">"##,
        0.005 * span
    );
    for seam in &fp.seams {
        for (t, h) in [seam.first, seam.second] {
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
                fp.uv[t].x, fp.uv[t].y, fp.uv[h].x, fp.uv[h].y
            );
        }
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, "</svg>");
    out
}
