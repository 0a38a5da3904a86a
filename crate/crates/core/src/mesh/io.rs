//! OBJ and OFF readers plus an OBJ writer. Only vertex positions and
//! triangular faces are honoured; normals are always recomputed from the
//! winding.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use super::{Mesh, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Off,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "obj" => Some(MeshFormat::Obj),
            "off" => Some(MeshFormat::Off),
            _ => None,
        }
    }
}

impl FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "obj" => Ok(MeshFormat::Obj),
            "off" => Ok(MeshFormat::Off),
            other => Err(Error::InvalidInput(format!("unknown mesh format {other:?}"))),
        }
    }
}

/// Loads a mesh, taking the format from `format` or else the extension.
pub fn load_mesh(path: impl AsRef<Path>, format: Option<MeshFormat>) -> Result<Mesh> {
    let path = path.as_ref();
    let format = format
        .or_else(|| MeshFormat::from_path(path))
        .ok_or_else(|| {
            Error::InvalidInput(format!("cannot infer mesh format of {}", path.display()))
        })?;
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        MeshFormat::Obj => parse_obj(&text),
        MeshFormat::Off => parse_off(&text),
    }
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::parse(line, "missing coordinate"))?;
    tok.parse::<f64>()
        .map_err(|_| Error::parse(line, format!("bad number {tok:?}")))
}

pub fn parse_obj(text: &str) -> Result<Mesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut toks = content.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = parse_f64(toks.next(), line)?;
                let y = parse_f64(toks.next(), line)?;
                let z = parse_f64(toks.next(), line)?;
                vertices.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let idx = toks
                    .map(|t| obj_index(t, vertices.len(), line))
                    .collect::<Result<Vec<_>>>()?;
                if idx.len() != 3 {
                    return Err(Error::parse(
                        line,
                        format!("face has {} vertices, only triangles are supported", idx.len()),
                    ));
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    Mesh::new(vertices, faces)
}

fn obj_index(tok: &str, n_vertices: usize, line: usize) -> Result<usize> {
    let head = tok.split('/').next().unwrap_or("");
    let i: i64 = head
        .parse()
        .map_err(|_| Error::parse(line, format!("bad face index {tok:?}")))?;
    let resolved = match i {
        0 => None,
        i if i > 0 => Some(i as usize - 1),
        i => n_vertices.checked_sub(i.unsigned_abs() as usize),
    };
    resolved.ok_or_else(|| Error::parse(line, format!("face index {i} out of range")))
}

pub fn parse_off(text: &str) -> Result<Mesh> {
    // (line number, token) stream without comments
    let mut toks = text.lines().enumerate().flat_map(|(i, l)| {
        l.split('#')
            .next()
            .unwrap_or("")
            .split_whitespace()
            .map(move |t| (i + 1, t))
            .collect::<Vec<_>>()
    });
    let (line, head) = toks.next().ok_or_else(|| Error::parse(1, "empty file"))?;
    if !head.eq_ignore_ascii_case("OFF") {
        return Err(Error::parse(line, format!("expected OFF header, found {head:?}")));
    }
    let mut next_usize = |what: &str| -> Result<(usize, usize)> {
        let (line, t) = toks
            .next()
            .ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
        t.parse::<usize>()
            .map(|v| (line, v))
            .map_err(|_| Error::parse(line, format!("bad {what} {t:?}")))
    };
    let (_, nv) = next_usize("vertex count")?;
    let (_, nf) = next_usize("face count")?;
    let (_, _ne) = next_usize("edge count")?;

    // The rest is parsed line by line so trailing per-face colours can be
    // skipped.
    let body: Vec<(usize, Vec<&str>)> = {
        let mut seen = 0usize;
        let mut out = Vec::new();
        for (i, l) in text.lines().enumerate() {
            let toks: Vec<&str> = l.split('#').next().unwrap_or("").split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            // skip header tokens (OFF + three counts) which may span lines
            if seen < 4 {
                let take = (4 - seen).min(toks.len());
                seen += take;
                if take < toks.len() {
                    out.push((i + 1, toks[take..].to_vec()));
                }
                continue;
            }
            out.push((i + 1, toks));
        }
        out
    };
    if body.len() < nv + nf {
        return Err(Error::parse(
            body.last().map(|b| b.0).unwrap_or(1),
            format!("expected {} vertex and face lines, found {}", nv + nf, body.len()),
        ));
    }
    let mut vertices = Vec::with_capacity(nv);
    for (line, t) in &body[..nv] {
        let mut it = t.iter().copied();
        vertices.push(Vec3::new(
            parse_f64(it.next(), *line)?,
            parse_f64(it.next(), *line)?,
            parse_f64(it.next(), *line)?,
        ));
    }
    let mut faces = Vec::with_capacity(nf);
    for (line, t) in &body[nv..nv + nf] {
        let n: usize = t[0]
            .parse()
            .map_err(|_| Error::parse(*line, format!("bad face size {:?}", t[0])))?;
        if n != 3 {
            return Err(Error::parse(
                *line,
                format!("face has {n} vertices, only triangles are supported"),
            ));
        }
        if t.len() < 4 {
            return Err(Error::parse(*line, "truncated face"));
        }
        let mut idx = [0usize; 3];
        for k in 0..3 {
            idx[k] = t[k + 1]
                .parse()
                .map_err(|_| Error::parse(*line, format!("bad face index {:?}", t[k + 1])))?;
            if idx[k] >= nv {
                return Err(Error::parse(*line, format!("face index {} out of range", idx[k])));
            }
        }
        faces.push(idx);
    }
    Mesh::new(vertices, faces)
}

/// Writes `v`/`f` records with 1-based indices.
pub fn write_obj<W: Write>(mesh: &Mesh, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# {} vertices, {} faces", mesh.n_vertices(), mesh.n_faces())?;
    for v in mesh.vertices() {
        writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for f in mesh.faces() {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_triangle_obj() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1\n").unwrap();
        assert_eq!((m.n_vertices(), m.n_faces()), (3, 1));
        assert_eq!(m.normal(0), Vec3::z());
    }

    #[test]
    fn negative_indices() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n").unwrap();
        assert_eq!(m.face(0), [0, 1, 2]);
    }

    #[test]
    fn quad_is_rejected() {
        let err = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }));
    }

    #[test]
    fn malformed_vertex() {
        assert!(matches!(
            parse_obj("v 0 zero 0\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn empty_is_rejected() {
        assert!(matches!(parse_obj("# nothing\n"), Err(Error::EmptyMesh)));
    }

    #[test]
    fn off_with_colours() {
        let m = parse_off("OFF\n# comment\n4 2 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n3 0 1 2 255 0 0\n3 0 2 3\n")
            .unwrap();
        assert_eq!((m.n_vertices(), m.n_faces()), (4, 2));
    }

    #[test]
    fn off_header_on_one_line() {
        let m = parse_off("OFF 3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
        assert_eq!(m.n_faces(), 1);
    }

    #[test]
    fn off_rejects_quads() {
        assert!(parse_off("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n").is_err());
    }

    #[test]
    fn obj_round_trip() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0.5\nf 1 2 3\nf 2 4 3\n").unwrap();
        let mut buf = Vec::new();
        write_obj(&m, &mut buf).unwrap();
        let back = parse_obj(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.faces(), m.faces());
        assert_eq!(back.vertices(), m.vertices());
    }
}
