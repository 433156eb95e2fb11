//! Mesh file formats: a versioned native JSON document and the FVCA5 benchmark text layout.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{regularity_report, PolyMesh};
use crate::error::{Error, Result};

pub const NATIVE_FORMAT_TAG: &str = "biot-hho-mesh";
pub const NATIVE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshFormat {
    NativeJson,
    Fvca5,
}

impl std::str::FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "native-json" | "json" => Ok(MeshFormat::NativeJson),
            "fvca5" | "typ1" => Ok(MeshFormat::Fvca5),
            _ => Err(Error::Config(format!("unknown mesh format `{s}`"))),
        }
    }
}

/// On-disk layout of the native mesh format.
///
/// ```json
/// { "format": "biot-hho-mesh", "version": 1,
///   "vertices": [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
///   "elements": [[0, 1, 2]],
///   "regions": [0] }
/// ```
///
/// Element loops are counterclockwise, zero-based vertex indices. `regions`
/// is optional and defaults to region 0 for every element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NativeMesh {
    pub format: String,
    pub version: u32,
    pub vertices: Vec<[f64; 2]>,
    pub elements: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regions: Option<Vec<usize>>,
}

impl From<&PolyMesh> for NativeMesh {
    fn from(mesh: &PolyMesh) -> Self {
        let regions: Vec<usize> = mesh.elements().iter().map(|e| e.region).collect();
        Self {
            format: NATIVE_FORMAT_TAG.into(),
            version: NATIVE_FORMAT_VERSION,
            vertices: mesh.vertices().iter().map(|v| [v.x, v.y]).collect(),
            elements: mesh.loops(),
            regions: regions.iter().any(|&r| r != 0).then_some(regions),
        }
    }
}

pub fn save_native(mesh: &PolyMesh, path: impl AsRef<Path>) -> Result<()> {
    let doc = NativeMesh::from(mesh);
    fs::write(path, serde_json::to_string(&doc)?)?;
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>, format: MeshFormat) -> Result<PolyMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let parse_err = |message: String| Error::MeshParse { path: path.to_path_buf(), message };
    match format {
        MeshFormat::NativeJson => {
            let doc: NativeMesh = serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?;
            if doc.format != NATIVE_FORMAT_TAG {
                return Err(parse_err(format!("unexpected format tag `{}`", doc.format)));
            }
            if doc.version != NATIVE_FORMAT_VERSION {
                return Err(parse_err(format!("unsupported version {}", doc.version)));
            }
            PolyMesh::from_polygons(doc.vertices, doc.elements, doc.regions)
        }
        MeshFormat::Fvca5 => {
            let (vertices, loops) = parse_fvca5(&text).map_err(parse_err)?;
            PolyMesh::from_polygons(vertices, loops, None)
        }
    }
}

fn polygon_size(header: &str) -> Option<Option<usize>> {
    Some(match header {
        "triangles" => Some(3),
        "quadrangles" => Some(4),
        "pentagons" => Some(5),
        "hexagons" => Some(6),
        "heptagons" => Some(7),
        "octagons" => Some(8),
        "cells" | "polygons" => None,
        _ => return None,
    })
}

/// Vertex coordinates and counter-clockwise element loops.
pub(crate) type VertexLoops = (Vec<[f64; 2]>, Vec<Vec<usize>>);

/// Parses the FVCA5 layout: a `vertices` section followed by per-shape element
/// sections (`triangles`, `quadrangles`, ...) or a generic `cells` section whose
/// rows start with their vertex count. Indices are one-based. Parsing stops at
/// the edge sections, which are rebuilt from the element loops.
pub(crate) fn parse_fvca5(text: &str) -> std::result::Result<VertexLoops, String> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty()).peekable();
    let mut vertices = Vec::new();
    let mut loops = Vec::new();
    let count = |line: Option<&str>| -> std::result::Result<usize, String> {
        line.and_then(|l| l.split_whitespace().next())
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| "expected an entry count".to_string())
    };
    let index = |tok: &str, nv: usize| -> std::result::Result<usize, String> {
        let i: usize = tok.parse().map_err(|_| format!("bad vertex index `{tok}`"))?;
        if i == 0 || i > nv {
            return Err(format!("vertex index {i} out of range"));
        }
        Ok(i - 1)
    };
    while let Some(header) = lines.next() {
        let header = header.to_ascii_lowercase();
        if header.starts_with("vertices") {
            let n = count(lines.next())?;
            for _ in 0..n {
                let l = lines.next().ok_or("truncated vertex section")?;
                let xy: Vec<f64> = l
                    .split_whitespace()
                    .take(2)
                    .map(|t| t.replace(['D', 'd'], "E").parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| format!("bad coordinate in `{l}`: {e}"))?;
                if xy.len() != 2 {
                    return Err(format!("expected two coordinates in `{l}`"));
                }
                vertices.push([xy[0], xy[1]]);
            }
        } else if let Some(size) = polygon_size(&header) {
            let n = count(lines.next())?;
            for _ in 0..n {
                let l = lines.next().ok_or("truncated element section")?;
                let toks: Vec<&str> = l.split_whitespace().collect();
                let ids = match size {
                    Some(s) => toks.get(..s).ok_or_else(|| format!("expected {s} indices in `{l}`"))?,
                    None => {
                        let s: usize = toks.first().and_then(|t| t.parse().ok()).ok_or("missing vertex count")?;
                        toks.get(1..=s).ok_or_else(|| format!("expected {s} indices in `{l}`"))?
                    }
                };
                loops.push(ids.iter().map(|t| index(t, vertices.len())).collect::<std::result::Result<_, _>>()?);
            }
        } else if header.starts_with("edges") || header.starts_with("all edges") {
            break;
        } else {
            return Err(format!("unexpected section `{header}`"));
        }
    }
    if vertices.is_empty() || loops.is_empty() {
        return Err("no vertices or elements found".into());
    }
    Ok((vertices, loops))
}

/// Writes one CSV row of mesh statistics (with header) to `out`.
pub fn write_stats_csv(mesh: &PolyMesh, name: &str, out: impl Write) -> Result<()> {
    let report = regularity_report(mesh)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "mesh",
        "elements",
        "faces",
        "interior_faces",
        "boundary_faces",
        "h",
        "max_faces_per_element",
        "min_inradius_ratio",
        "min_subtriangle_size_ratio",
    ])?;
    w.write_record([
        name.to_string(),
        mesh.num_elements().to_string(),
        mesh.num_faces().to_string(),
        mesh.num_interior_faces().to_string(),
        mesh.num_boundary_faces().to_string(),
        report.h.to_string(),
        report.max_faces_per_element.to_string(),
        report.min_inradius_ratio.to_string(),
        report.min_size_ratio.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}
