//! Binary little-endian PLY with an `anat_label` vertex property, plus OBJ
//! export with a `.labels` sidecar.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::{LabeledMesh, VertexLabel};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Scalar> {
        Some(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn read(self, r: &mut impl Read) -> std::io::Result<f64> {
        macro_rules! rd {
            ($t:ty) => {{
                let mut b = [0u8; std::mem::size_of::<$t>()];
                r.read_exact(&mut b)?;
                <$t>::from_le_bytes(b) as f64
            }};
        }
        Ok(match self {
            Scalar::I8 => rd!(i8),
            Scalar::U8 => rd!(u8),
            Scalar::I16 => rd!(i16),
            Scalar::U16 => rd!(u16),
            Scalar::I32 => rd!(i32),
            Scalar::U32 => rd!(u32),
            Scalar::F32 => rd!(f32),
            Scalar::F64 => rd!(f64),
        })
    }
}

#[derive(Debug)]
enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::MeshFormat {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn read_header(path: &Path, r: &mut impl BufRead) -> Result<Vec<Element>> {
    let mut line = String::new();
    let mut next = |r: &mut dyn BufRead| -> Result<String> {
        line.clear();
        let n = r.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Err(format_err(path, "unexpected end of header"));
        }
        Ok(line.trim_end().to_string())
    };
    if next(r)? != "ply" {
        return Err(format_err(path, "missing `ply` magic"));
    }
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let l = next(r)?;
        let tok: Vec<&str> = l.split_whitespace().collect();
        match tok.as_slice() {
            ["end_header"] => break,
            ["format", "binary_little_endian", _] => {}
            ["format", other, ..] => {
                return Err(format_err(path, format!("unsupported format `{other}`")));
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| format_err(path, format!("bad element count `{count}`")))?,
                props: Vec::new(),
            }),
            ["property", "list", c, i, name] => {
                let (c, i) = Scalar::parse(c)
                    .zip(Scalar::parse(i))
                    .ok_or_else(|| format_err(path, format!("bad list types in `{l}`")))?;
                elements
                    .last_mut()
                    .ok_or_else(|| format_err(path, "property before element"))?
                    .props
                    .push(Property::List(name.to_string(), c, i));
            }
            ["property", t, name] => {
                let t = Scalar::parse(t).ok_or_else(|| format_err(path, format!("bad type in `{l}`")))?;
                elements
                    .last_mut()
                    .ok_or_else(|| format_err(path, "property before element"))?
                    .props
                    .push(Property::Scalar(name.to_string(), t));
            }
            _ => return Err(format_err(path, format!("unrecognized header line `{l}`"))),
        }
    }
    Ok(elements)
}

fn load_ply(path: &Path) -> Result<LabeledMesh> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let elements = read_header(path, &mut r)?;
    let mut vertices = Vec::new();
    let mut labels = Vec::new();
    let mut faces = Vec::new();
    let io = |e| Error::io(path, e);
    for el in &elements {
        match el.name.as_str() {
            "vertex" => {
                let has = |n: &str| el.props.iter().any(|p| matches!(p, Property::Scalar(s, _) if s == n));
                for n in ["x", "y", "z"] {
                    if !has(n) {
                        return Err(format_err(path, format!("vertex property `{n}` missing")));
                    }
                }
                if !has("anat_label") {
                    return Err(format_err(path, "vertex property `anat_label` missing"));
                }
                for i in 0..el.count {
                    let mut v = Vec3::zeros();
                    let mut label = 0.0;
                    for p in &el.props {
                        match p {
                            Property::Scalar(name, t) => {
                                let x = t.read(&mut r).map_err(io)?;
                                match name.as_str() {
                                    "x" => v.x = x,
                                    "y" => v.y = x,
                                    "z" => v.z = x,
                                    "anat_label" => label = x,
                                    _ => {}
                                }
                            }
                            Property::List(_, c, t) => {
                                let n = c.read(&mut r).map_err(io)? as usize;
                                for _ in 0..n {
                                    t.read(&mut r).map_err(io)?;
                                }
                            }
                        }
                    }
                    let l = VertexLabel::from_u8(label as u8)
                        .filter(|_| label.fract() == 0.0 && (0.0..=255.0).contains(&label))
                        .ok_or_else(|| format_err(path, format!("vertex {i} has label {label}")))?;
                    vertices.push(v);
                    labels.push(l);
                }
            }
            "face" => {
                for i in 0..el.count {
                    for p in &el.props {
                        match p {
                            Property::List(name, c, t) if name == "vertex_indices" || name == "vertex_index" => {
                                let n = c.read(&mut r).map_err(io)? as usize;
                                if n != 3 {
                                    return Err(format_err(path, format!("face {i} has {n} vertices; only triangles are supported")));
                                }
                                let mut f = [0u32; 3];
                                for slot in &mut f {
                                    *slot = t.read(&mut r).map_err(io)? as u32;
                                }
                                faces.push(f);
                            }
                            Property::List(_, c, t) => {
                                let n = c.read(&mut r).map_err(io)? as usize;
                                for _ in 0..n {
                                    t.read(&mut r).map_err(io)?;
                                }
                            }
                            Property::Scalar(_, t) => {
                                t.read(&mut r).map_err(io)?;
                            }
                        }
                    }
                }
            }
            other => return Err(format_err(path, format!("unexpected element `{other}`"))),
        }
    }
    if labels.len() != vertices.len() || vertices.is_empty() {
        return Err(format_err(path, "no vertex element"));
    }
    LabeledMesh::new(vertices, faces, labels)
}

fn save_ply(path: &Path, m: &LabeledMesh) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    write!(
        w,
        "ply\nformat binary_little_endian 1.0\n\
         comment anat_label 0=lv_endo 1=rv_endo 2=lv_epi 3=rv_epi 4=valve\n\
         element vertex {}\nproperty float x\nproperty float y\nproperty float z\n\
         property uchar anat_label\nelement face {}\n\
         property list uchar uint vertex_indices\nend_header\n",
        m.num_vertices(),
        m.num_faces()
    )
    .map_err(io)?;
    for (v, l) in m.vertices().iter().zip(m.labels()) {
        for c in v.iter() {
            w.write_all(&(*c as f32).to_le_bytes()).map_err(io)?;
        }
        w.write_all(&[*l as u8]).map_err(io)?;
    }
    for f in m.faces() {
        w.write_all(&[3u8]).map_err(io)?;
        for i in f {
            w.write_all(&i.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Path of the label sidecar written next to an OBJ file.
pub fn labels_path(obj: &Path) -> PathBuf {
    obj.with_extension("labels")
}

/// Writes `v`/`f` lines and a sidecar with one label code per vertex.
pub fn save_obj(path: impl AsRef<Path>, m: &LabeledMesh) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
    for v in m.vertices() {
        writeln!(w, "v {:?} {:?} {:?}", v.x, v.y, v.z).map_err(io)?;
    }
    for f in m.faces() {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).map_err(io)?;
    }
    w.flush().map_err(io)?;
    let side = labels_path(path);
    let text: String = m.labels().iter().map(|l| format!("{}\n", *l as u8)).collect();
    fs::write(&side, text).map_err(|e| Error::io(&side, e))
}

fn load_obj(path: &Path) -> Result<LabeledMesh> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let mut tok = line.split_whitespace();
        let bad = || format_err(path, format!("line {}: `{line}`", n + 1));
        match tok.next() {
            Some("v") => {
                let c: Vec<f64> = tok.map(|t| t.parse().map_err(|_| bad())).collect::<Result<_>>()?;
                if c.len() < 3 {
                    return Err(bad());
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<u32> = tok
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        head.parse::<u32>().ok().and_then(|i| i.checked_sub(1)).ok_or_else(bad)
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(format_err(path, format!("line {}: only triangles are supported", n + 1)));
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    let side = labels_path(path);
    let labels_text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let labels = labels_text
        .split_whitespace()
        .map(|t| {
            t.parse::<u8>()
                .ok()
                .and_then(VertexLabel::from_u8)
                .ok_or_else(|| format_err(&side, format!("bad label `{t}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    LabeledMesh::new(vertices, faces, labels)
}

/// Loads a `.ply` mesh (or an `.obj` with its `.labels` sidecar).
pub fn load_mesh(path: impl AsRef<Path>) -> Result<LabeledMesh> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("obj") => load_obj(path),
        _ => load_ply(path),
    }
}

/// Saves as PLY, or as OBJ plus sidecar when the extension is `.obj`.
/// PLY coordinates are stored as 32-bit floats.
pub fn save_mesh(path: impl AsRef<Path>, m: &LabeledMesh) -> Result<()> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("obj") => save_obj(path, m),
        _ => save_ply(path, m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::fixtures::*;

    fn f32_exact(m: &LabeledMesh) -> LabeledMesh {
        m.map_vertices(|v| v.map(|c| c as f32 as f64))
    }

    #[test]
    fn ply_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.ply");
        let m = f32_exact(&tetrahedron().map_vertices(|v| v * 0.731));
        save_mesh(&p, &m).unwrap();
        let back = load_mesh(&p).unwrap();
        assert_eq!(back, m);
        let q = dir.path().join("u.ply");
        save_mesh(&q, &back).unwrap();
        assert_eq!(fs::read(&p).unwrap(), fs::read(&q).unwrap());
    }

    #[test]
    fn obj_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.obj");
        let m = triangle().map_vertices(|v| v * (1.0 / 3.0));
        save_obj(&p, &m).unwrap();
        assert!(labels_path(&p).exists());
        assert_eq!(load_mesh(&p).unwrap(), m);
    }

    fn write_raw(path: &Path, header: &str, body: &[u8]) {
        let mut b = header.as_bytes().to_vec();
        b.extend_from_slice(body);
        fs::write(path, b).unwrap();
    }

    fn vertex_bytes(label: bool) -> Vec<u8> {
        let mut b = Vec::new();
        for v in [[0.0f32, 0.0, 0.0], [0.5, 0.0, 0.0], [0.0, 0.5, 0.0], [0.5, 0.5, 0.0]] {
            for c in v {
                b.extend_from_slice(&c.to_le_bytes());
            }
            if label {
                b.push(2);
            }
        }
        b
    }

    #[test]
    fn missing_label_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nolabel.ply");
        let mut body = vertex_bytes(false);
        body.push(3);
        for i in [0u32, 1, 2] {
            body.extend_from_slice(&i.to_le_bytes());
        }
        write_raw(
            &p,
            "ply\nformat binary_little_endian 1.0\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar uint vertex_indices\nend_header\n",
            &body,
        );
        let e = load_mesh(&p).unwrap_err();
        assert!(e.to_string().contains("anat_label"), "{e}");
    }

    #[test]
    fn quad_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("quad.ply");
        let mut body = vertex_bytes(true);
        body.push(4);
        for i in [0u32, 1, 3, 2] {
            body.extend_from_slice(&i.to_le_bytes());
        }
        write_raw(
            &p,
            "ply\nformat binary_little_endian 1.0\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\nproperty uchar anat_label\nelement face 1\nproperty list uchar uint vertex_indices\nend_header\n",
            &body,
        );
        let e = load_mesh(&p).unwrap_err();
        assert!(e.to_string().contains("triangles"), "{e}");
    }

    #[test]
    fn ascii_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.ply");
        write_raw(&p, "ply\nformat ascii 1.0\nend_header\n", &[]);
        assert!(load_mesh(&p).is_err());
    }
}
