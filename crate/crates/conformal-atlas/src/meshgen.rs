//! Procedural test surfaces.
//!
//! Every generator returns a validated [`Mesh`] and is fully deterministic,
//! so tests and examples can rely on exact vertex ids and bitwise-stable
//! geometry.

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use nalgebra::Vector3;
use std::collections::BTreeMap;

/// Regular tetrahedron inscribed in the cube `[-1, 1]^3`, oriented outward.
pub fn tetrahedron() -> Result<Mesh> {
    let positions = vec![
        Vector3::new(1.0, 1.0, 1.0),
        Vector3::new(1.0, -1.0, -1.0),
        Vector3::new(-1.0, 1.0, -1.0),
        Vector3::new(-1.0, -1.0, 1.0),
    ];
    let faces = vec![[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]];
    Mesh::new(positions, faces)
}

/// Icosahedron subdivided `subdiv` times, vertices projected to the unit
/// sphere. `20 * 4^subdiv` faces.
pub fn icosphere(subdiv: usize) -> Result<Mesh> {
    let t = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut positions: Vec<Vector3<f64>> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdiv {
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut mid = |a: usize, b: usize, positions: &mut Vec<Vector3<f64>>| -> usize {
            let k = if a < b { (a, b) } else { (b, a) };
            *midpoint.entry(k).or_insert_with(|| {
                let p = (0.5 * (positions[a] + positions[b])).normalize();
                positions.push(p);
                positions.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut positions);
            let bc = mid(b, c, &mut positions);
            let ca = mid(c, a, &mut positions);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    Mesh::new(positions, faces)
}

/// Axis-aligned ellipsoid with semi-axes `(rx, ry, rz)`: an icosphere scaled
/// anisotropically.
pub fn ellipsoid(rx: f64, ry: f64, rz: f64, subdiv: usize) -> Result<Mesh> {
    let sphere = icosphere(subdiv)?;
    let positions = sphere
        .positions()
        .iter()
        .map(|p| Vector3::new(rx * p.x, ry * p.y, rz * p.z))
        .collect();
    Mesh::new(positions, sphere.faces().to_vec())
}

/// Unit cube surface, each side split into `cells x cells` quads and
/// triangulated. A convex genus-0 shape with sharp corners.
pub fn cube(cells: usize) -> Result<Mesh> {
    let solid = |i: i64, j: i64, k: i64| i == 0 && j == 0 && k == 0;
    voxel_surface(&solid, &[(0, 0, 0)], cells, 1.0, |p| p)
}

/// Intrinsically flat torus with x-period `aspect` and y-period 1, realized
/// as a doubled prism.
///
/// A flat cylinder of circumference `aspect` and height 1/2 embeds
/// isometrically in space as a regular prism (bending a flat sheet along
/// straight vertical lines). Gluing two copies along both boundary rings
/// closes the surface; the two sheets coincide in space, but every triangle
/// is congruent to its counterpart in the flat `aspect x 1` grid, so all
/// intrinsic quantities (lengths, angles, weights, areas) are exactly those
/// of the flat torus.
///
/// `n` is the number of grid rows (must be even, at least 4); the grid has
/// `round(aspect * n)` columns of the same spacing, `aspect * n^2` square
/// cells, and `2 * aspect * n^2` triangles. `flat_torus(n, 1.0)` is the
/// `n x n` unit-square grid torus with `n^2` vertices.
pub fn flat_torus(n: usize, aspect: f64) -> Result<Mesh> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::Config(format!(
            "flat_torus needs an even row count of at least 4, got {n}"
        )));
    }
    let rows = n; // torus rows; rows 0..m on sheet A, m..2m back down sheet B
    let m = n / 2;
    let cols = (aspect * n as f64).round() as usize;
    if cols < 3 {
        return Err(Error::Config(format!(
            "flat_torus needs at least 3 columns, got {cols} (aspect {aspect})"
        )));
    }
    let s = aspect / cols as f64; // column spacing; equals 1/n when aspect*n is integral
    let sy = 0.5 / m as f64; // row spacing
    let circum_r = s / (2.0 * (std::f64::consts::PI / cols as f64).sin());

    let vid = |col: usize, row: usize| (row % rows) * cols + (col % cols);
    let mut positions = vec![Vector3::zeros(); rows * cols];
    for row in 0..rows {
        // Sheet A climbs the prism, sheet B descends it in space.
        let ring = if row <= m { row } else { rows - row };
        for col in 0..cols {
            let ang = 2.0 * std::f64::consts::PI * col as f64 / cols as f64;
            positions[vid(col, row)] = Vector3::new(
                circum_r * ang.cos(),
                circum_r * ang.sin(),
                ring as f64 * sy,
            );
        }
    }
    let mut faces = Vec::with_capacity(2 * rows * cols);
    for row in 0..rows {
        for col in 0..cols {
            let v00 = vid(col, row);
            let v10 = vid(col + 1, row);
            let v11 = vid(col + 1, row + 1);
            let v01 = vid(col, row + 1);
            faces.push([v00, v10, v11]);
            faces.push([v00, v11, v01]);
        }
    }
    Mesh::new(positions, faces)
}

/// Torus of revolution: tube radius `small_r` swept at distance `big_r`
/// around the z-axis, on an `nu x nv` quad grid (tube x sweep).
pub fn torus_of_revolution(big_r: f64, small_r: f64, nu: usize, nv: usize) -> Result<Mesh> {
    if nu < 3 || nv < 3 {
        return Err(Error::Config(format!(
            "torus_of_revolution needs nu, nv >= 3, got {nu}, {nv}"
        )));
    }
    let vid = |i: usize, j: usize| (j % nv) * nu + (i % nu);
    let mut positions = vec![Vector3::zeros(); nu * nv];
    for j in 0..nv {
        let phi = 2.0 * std::f64::consts::PI * j as f64 / nv as f64;
        for i in 0..nu {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / nu as f64;
            let rad = big_r + small_r * theta.cos();
            positions[vid(i, j)] = Vector3::new(
                rad * phi.cos(),
                rad * phi.sin(),
                small_r * theta.sin(),
            );
        }
    }
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for j in 0..nv {
        for i in 0..nu {
            let v00 = vid(i, j);
            let v10 = vid(i + 1, j);
            let v11 = vid(i + 1, j + 1);
            let v01 = vid(i, j + 1);
            faces.push([v00, v10, v11]);
            faces.push([v00, v11, v01]);
        }
    }
    Mesh::new(positions, faces)
}

/// Genus-2 surface: the boundary of a one-voxel-thick 9x4 plate with two
/// square holes, smoothly warped to break symmetry and add curvature.
///
/// `cells` subdivides every unit quad into `cells x cells` sub-quads
/// (`204 * cells^2` triangles). `warp` scales the deformation; 0 keeps the
/// axis-aligned plate.
pub fn genus2_plate(cells: usize, warp: f64) -> Result<Mesh> {
    const W: i64 = 9;
    const H: i64 = 4;
    let hole = |i: i64, j: i64| (i == 2 && j == 1) || (i == 6 && j == 2);
    let solid = move |i: i64, j: i64, k: i64| {
        k == 0 && (0..W).contains(&i) && (0..H).contains(&j) && !hole(i, j)
    };
    let mut cells_list = Vec::new();
    for i in 0..W {
        for j in 0..H {
            if solid(i, j, 0) {
                cells_list.push((i, j, 0));
            }
        }
    }
    let scale = 1.0 / W as f64;
    let deform = move |p: Vector3<f64>| {
        let q = p * scale;
        Vector3::new(
            q.x + warp * 0.05 * (1.6 * q.y * W as f64 + 2.0 * q.z * W as f64).sin(),
            q.y + warp * 0.06 * (1.3 * q.x * W as f64).cos() * (2.1 * q.z * W as f64 + 0.4).sin(),
            q.z + warp * (0.08 * (1.9 * q.x * W as f64 + 0.7).sin() * (1.1 * q.y * W as f64).cos()
                + 0.35 * q.x * q.x),
        )
    };
    voxel_surface(&solid, &cells_list, cells, 1.0, deform)
}

/// Boundary surface of a voxel solid, subdivided and deformed.
///
/// `solid` answers occupancy; `cells_list` enumerates the occupied voxels;
/// `sub` splits each exposed unit quad into `sub x sub` quads of two
/// triangles; `deform` maps final vertex positions.
fn voxel_surface(
    solid: &dyn Fn(i64, i64, i64) -> bool,
    cells_list: &[(i64, i64, i64)],
    sub: usize,
    voxel: f64,
    deform: impl Fn(Vector3<f64>) -> Vector3<f64>,
) -> Result<Mesh> {
    if sub == 0 {
        return Err(Error::Config("subdivision must be at least 1".into()));
    }
    let sub_i = sub as i64;
    // Outward quad frames: (axis offset, edge1, edge2) with edge1 x edge2
    // pointing along the outward normal.
    const DIRS: [([i64; 3], [i64; 3], [i64; 3]); 6] = [
        ([1, 0, 0], [0, 1, 0], [0, 0, 1]),   // +x
        ([-1, 0, 0], [0, 0, 1], [0, 1, 0]),  // -x
        ([0, 1, 0], [0, 0, 1], [1, 0, 0]),   // +y
        ([0, -1, 0], [1, 0, 0], [0, 0, 1]),  // -y
        ([0, 0, 1], [1, 0, 0], [0, 1, 0]),   // +z
        ([0, 0, -1], [0, 1, 0], [1, 0, 0]),  // -z
    ];

    let mut vert_ids: BTreeMap<(i64, i64, i64), usize> = BTreeMap::new();
    let mut positions: Vec<Vector3<f64>> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    let fine = voxel / sub as f64;
    let mut vertex = |g: (i64, i64, i64),
                      positions: &mut Vec<Vector3<f64>>|
     -> usize {
        *vert_ids.entry(g).or_insert_with(|| {
            positions.push(Vector3::new(
                g.0 as f64 * fine,
                g.1 as f64 * fine,
                g.2 as f64 * fine,
            ));
            positions.len() - 1
        })
    };

    for &(i, j, k) in cells_list {
        for (n, e1, e2) in DIRS {
            if solid(i + n[0], j + n[1], k + n[2]) {
                continue;
            }
            // The quad spans e1 and e2 from the cell corner at the minimal
            // position along both, on the exposed side of the voxel.
            let corner = [
                i * sub_i + if n[0] > 0 { sub_i } else { 0 },
                j * sub_i + if n[1] > 0 { sub_i } else { 0 },
                k * sub_i + if n[2] > 0 { sub_i } else { 0 },
            ];
            for a in 0..sub_i {
                for b in 0..sub_i {
                    let at = |da: i64, db: i64| {
                        (
                            corner[0] + (a + da) * e1[0] + (b + db) * e2[0],
                            corner[1] + (a + da) * e1[1] + (b + db) * e2[1],
                            corner[2] + (a + da) * e1[2] + (b + db) * e2[2],
                        )
                    };
                    let v00 = vertex(at(0, 0), &mut positions);
                    let v10 = vertex(at(1, 0), &mut positions);
                    let v11 = vertex(at(1, 1), &mut positions);
                    let v01 = vertex(at(0, 1), &mut positions);
                    faces.push([v00, v10, v11]);
                    faces.push([v00, v11, v01]);
                }
            }
        }
    }
    let positions = positions.into_iter().map(deform).collect();
    Mesh::new(positions, faces)
}
