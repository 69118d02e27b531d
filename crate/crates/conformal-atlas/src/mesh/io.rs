//! Mesh file loading (OBJ, PLY) and OBJ writing.
//!
//! OBJ: `v` and `f` records, 1-based or negative (relative) indices,
//! `v/vt/vn` references; everything else is ignored. PLY: ascii,
//! binary_little_endian and binary_big_endian, with a `vertex` element
//! carrying `x y z` and a `face` element carrying a vertex-index list.
//! Non-triangular faces are rejected with the offending cell id.

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use nalgebra::Vector3;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Supported mesh file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
}

impl MeshFormat {
    /// Guess the format from a file extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("obj") => Ok(MeshFormat::Obj),
            Some("ply") => Ok(MeshFormat::Ply),
            other => Err(Error::Unsupported {
                context: format!("{}", path.display()),
                msg: format!("unknown mesh extension {other:?}; expected .obj or .ply"),
            }),
        }
    }
}

/// Load and validate a mesh, guessing the format from the extension.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    load_mesh_format(path, MeshFormat::from_path(path)?)
}

/// Load and validate a mesh with an explicit format.
pub fn load_mesh_format(path: impl AsRef<Path>, format: MeshFormat) -> Result<Mesh> {
    let path = path.as_ref();
    let bytes =
        std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let name = path.display().to_string();
    let (positions, faces) = match format {
        MeshFormat::Obj => parse_obj(&name, &bytes)?,
        MeshFormat::Ply => parse_ply(&name, &bytes)?,
    };
    Mesh::new(positions, faces)
}

type Cells = (Vec<Vector3<f64>>, Vec<[usize; 3]>);

fn parse_obj(name: &str, bytes: &[u8]) -> Result<Cells> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::parse(name, 0, format!("not valid UTF-8: {e}")))?;
    let mut positions: Vec<Vector3<f64>> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in &mut coords {
                    let tok = tokens
                        .next()
                        .ok_or_else(|| Error::parse(name, line_no, "vertex needs 3 coordinates"))?;
                    *c = tok.parse().map_err(|_| {
                        Error::parse(name, line_no, format!("bad coordinate '{tok}'"))
                    })?;
                }
                positions.push(Vector3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut ids = Vec::with_capacity(4);
                for tok in tokens {
                    // v, v/vt, v/vt/vn, v//vn: the vertex id is the first field.
                    let vtok = tok.split('/').next().unwrap_or(tok);
                    let raw: i64 = vtok.parse().map_err(|_| {
                        Error::parse(name, line_no, format!("bad face index '{tok}'"))
                    })?;
                    let id = if raw > 0 {
                        (raw - 1) as usize
                    } else if raw < 0 {
                        // Negative indices are relative to the vertices seen so far.
                        let n = positions.len() as i64 + raw;
                        if n < 0 {
                            return Err(Error::parse(
                                name,
                                line_no,
                                format!("relative index {raw} underflows"),
                            ));
                        }
                        n as usize
                    } else {
                        return Err(Error::parse(name, line_no, "face index 0 is invalid"));
                    };
                    ids.push(id);
                }
                if ids.len() != 3 {
                    return Err(Error::NonTriangularFace {
                        face: faces.len(),
                        arity: ids.len(),
                    });
                }
                faces.push([ids[0], ids[1], ids[2]]);
            }
            _ => {} // vt, vn, usemtl, o, g, s, mtllib, ...
        }
    }
    Ok((positions, faces))
}

// ---------------------------------------------------------------------------
// PLY
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum PlyEncoding {
    Ascii,
    BinaryLe,
    BinaryBe,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PlyType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl PlyType {
    fn parse(tok: &str) -> Option<Self> {
        Some(match tok {
            "char" | "int8" => PlyType::I8,
            "uchar" | "uint8" => PlyType::U8,
            "short" | "int16" => PlyType::I16,
            "ushort" | "uint16" => PlyType::U16,
            "int" | "int32" => PlyType::I32,
            "uint" | "uint32" => PlyType::U32,
            "float" | "float32" => PlyType::F32,
            "double" | "float64" => PlyType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            PlyType::I8 | PlyType::U8 => 1,
            PlyType::I16 | PlyType::U16 => 2,
            PlyType::I32 | PlyType::U32 | PlyType::F32 => 4,
            PlyType::F64 => 8,
        }
    }
}

#[derive(Debug, Clone)]
enum PlyProp {
    Scalar { ty: PlyType, name: String },
    List { count: PlyType, item: PlyType, name: String },
}

#[derive(Debug, Clone)]
struct PlyElement {
    name: String,
    count: usize,
    props: Vec<PlyProp>,
}

fn parse_ply(name: &str, bytes: &[u8]) -> Result<Cells> {
    // The header is ASCII lines up to and including "end_header".
    let mut pos = 0usize;
    let mut lines: Vec<(usize, String)> = Vec::new();
    let mut line_no = 0usize;
    while pos < bytes.len() {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|i| pos + i)
            .unwrap_or(bytes.len());
        line_no += 1;
        let line = String::from_utf8_lossy(&bytes[pos..end])
            .trim_end_matches('\r')
            .trim()
            .to_string();
        pos = end + 1;
        let is_end = line == "end_header";
        lines.push((line_no, line));
        if is_end {
            break;
        }
    }
    let body_start = pos;

    let mut it = lines.iter();
    let (ln, magic) = it
        .next()
        .ok_or_else(|| Error::parse(name, 0, "empty file"))?;
    if magic != "ply" {
        return Err(Error::parse(name, *ln, "missing 'ply' magic"));
    }
    let mut encoding = None;
    let mut elements: Vec<PlyElement> = Vec::new();
    for (ln, line) in it {
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("format") => {
                encoding = Some(match toks.next() {
                    Some("ascii") => PlyEncoding::Ascii,
                    Some("binary_little_endian") => PlyEncoding::BinaryLe,
                    Some("binary_big_endian") => PlyEncoding::BinaryBe,
                    other => {
                        return Err(Error::parse(name, *ln, format!("bad format {other:?}")))
                    }
                });
            }
            Some("comment") | Some("obj_info") => {}
            Some("element") => {
                let ename = toks
                    .next()
                    .ok_or_else(|| Error::parse(name, *ln, "element needs a name"))?;
                let count: usize = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::parse(name, *ln, "element needs a count"))?;
                elements.push(PlyElement {
                    name: ename.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(name, *ln, "property before element"))?;
                let first = toks
                    .next()
                    .ok_or_else(|| Error::parse(name, *ln, "property needs a type"))?;
                if first == "list" {
                    let count = toks
                        .next()
                        .and_then(PlyType::parse)
                        .ok_or_else(|| Error::parse(name, *ln, "bad list count type"))?;
                    let item = toks
                        .next()
                        .and_then(PlyType::parse)
                        .ok_or_else(|| Error::parse(name, *ln, "bad list item type"))?;
                    let pname = toks
                        .next()
                        .ok_or_else(|| Error::parse(name, *ln, "list property needs a name"))?;
                    el.props.push(PlyProp::List {
                        count,
                        item,
                        name: pname.to_string(),
                    });
                } else {
                    let ty = PlyType::parse(first)
                        .ok_or_else(|| Error::parse(name, *ln, format!("bad type '{first}'")))?;
                    let pname = toks
                        .next()
                        .ok_or_else(|| Error::parse(name, *ln, "property needs a name"))?;
                    el.props.push(PlyProp::Scalar {
                        ty,
                        name: pname.to_string(),
                    });
                }
            }
            Some("end_header") => break,
            other => return Err(Error::parse(name, *ln, format!("unexpected '{other:?}'"))),
        }
    }
    let encoding =
        encoding.ok_or_else(|| Error::parse(name, 0, "missing 'format' line in header"))?;

    let mut positions: Vec<Vector3<f64>> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();

    match encoding {
        PlyEncoding::Ascii => {
            let body = std::str::from_utf8(&bytes[body_start..])
                .map_err(|e| Error::parse(name, line_no, format!("body not UTF-8: {e}")))?;
            let mut toks = body.split_whitespace();
            let mut next_f64 = |what: &str| -> Result<f64> {
                toks.next()
                    .ok_or_else(|| Error::parse(name, line_no, format!("missing {what}")))?
                    .parse()
                    .map_err(|_| Error::parse(name, line_no, format!("bad {what}")))
            };
            for el in &elements {
                for row in 0..el.count {
                    let mut xyz = [f64::NAN; 3];
                    let mut list: Vec<usize> = Vec::new();
                    for p in &el.props {
                        match p {
                            PlyProp::Scalar { name: pname, .. } => {
                                let v = next_f64(pname)?;
                                match pname.as_str() {
                                    "x" => xyz[0] = v,
                                    "y" => xyz[1] = v,
                                    "z" => xyz[2] = v,
                                    _ => {}
                                }
                            }
                            PlyProp::List { name: pname, .. } => {
                                let n = next_f64("list count")? as usize;
                                list.clear();
                                for _ in 0..n {
                                    list.push(next_f64("list item")? as usize);
                                }
                                if !is_index_list(pname) {
                                    list.clear();
                                }
                            }
                        }
                    }
                    store_row(el, row, &xyz, &list, &mut positions, &mut faces)?;
                }
            }
        }
        PlyEncoding::BinaryLe | PlyEncoding::BinaryBe => {
            let le = encoding == PlyEncoding::BinaryLe;
            let mut cur = body_start;
            let read_scalar = |cur: &mut usize, ty: PlyType| -> Result<f64> {
                let sz = ty.size();
                if *cur + sz > bytes.len() {
                    return Err(Error::parse(name, line_no, "unexpected end of binary body"));
                }
                let raw = &bytes[*cur..*cur + sz];
                *cur += sz;
                Ok(decode_scalar(raw, ty, le))
            };
            for el in &elements {
                for row in 0..el.count {
                    let mut xyz = [f64::NAN; 3];
                    let mut list: Vec<usize> = Vec::new();
                    for p in &el.props {
                        match p {
                            PlyProp::Scalar { ty, name: pname } => {
                                let v = read_scalar(&mut cur, *ty)?;
                                match pname.as_str() {
                                    "x" => xyz[0] = v,
                                    "y" => xyz[1] = v,
                                    "z" => xyz[2] = v,
                                    _ => {}
                                }
                            }
                            PlyProp::List { count, item, name: pname } => {
                                let n = read_scalar(&mut cur, *count)? as usize;
                                list.clear();
                                for _ in 0..n {
                                    list.push(read_scalar(&mut cur, *item)? as usize);
                                }
                                if !is_index_list(pname) {
                                    list.clear();
                                }
                            }
                        }
                    }
                    store_row(el, row, &xyz, &list, &mut positions, &mut faces)?;
                }
            }
        }
    }
    Ok((positions, faces))
}

fn is_index_list(name: &str) -> bool {
    name == "vertex_indices" || name == "vertex_index"
}

fn decode_scalar(raw: &[u8], ty: PlyType, le: bool) -> f64 {
    macro_rules! get {
        ($t:ty) => {{
            let mut buf = [0u8; std::mem::size_of::<$t>()];
            buf.copy_from_slice(raw);
            if le {
                <$t>::from_le_bytes(buf) as f64
            } else {
                <$t>::from_be_bytes(buf) as f64
            }
        }};
    }
    match ty {
        PlyType::I8 => raw[0] as i8 as f64,
        PlyType::U8 => raw[0] as f64,
        PlyType::I16 => get!(i16),
        PlyType::U16 => get!(u16),
        PlyType::I32 => get!(i32),
        PlyType::U32 => get!(u32),
        PlyType::F32 => get!(f32),
        PlyType::F64 => get!(f64),
    }
}

fn store_row(
    el: &PlyElement,
    row: usize,
    xyz: &[f64; 3],
    list: &[usize],
    positions: &mut Vec<Vector3<f64>>,
    faces: &mut Vec<[usize; 3]>,
) -> Result<()> {
    match el.name.as_str() {
        "vertex" => positions.push(Vector3::new(xyz[0], xyz[1], xyz[2])),
        "face" => {
            if !list.is_empty() {
                if list.len() != 3 {
                    return Err(Error::NonTriangularFace {
                        face: row,
                        arity: list.len(),
                    });
                }
                faces.push([list[0], list[1], list[2]]);
            }
        }
        _ => {}
    }
    Ok(())
}

/// Write a mesh as OBJ. Optional per-vertex texture coordinates are written
/// as `vt` records referenced one-to-one (`f v/vt`).
pub fn save_obj(mesh: &Mesh, path: impl AsRef<Path>, uv: Option<&[[f64; 2]]>) -> Result<()> {
    let path = path.as_ref();
    let file =
        std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path.display().to_string(), e);
    for p in mesh.positions() {
        writeln!(w, "v {} {} {}", p.x, p.y, p.z).map_err(io_err)?;
    }
    if let Some(uv) = uv {
        for t in uv {
            writeln!(w, "vt {} {}", t[0], t[1]).map_err(io_err)?;
        }
        for f in mesh.faces() {
            writeln!(
                w,
                "f {}/{} {}/{} {}/{}",
                f[0] + 1,
                f[0] + 1,
                f[1] + 1,
                f[1] + 1,
                f[2] + 1,
                f[2] + 1
            )
            .map_err(io_err)?;
        }
    } else {
        for f in mesh.faces() {
            writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}
