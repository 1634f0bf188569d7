//! OBJ and PLY writers for [`MeshE31`].

use std::collections::BTreeMap;
use std::io::{self, Write};

use super::mesh::{MeshE31, VertexFlag};
use crate::format::f17;

/// Non-regular vertex flags keyed by vertex index.
pub fn flags_json(mesh: &MeshE31) -> serde_json::Value {
    let map: BTreeMap<String, serde_json::Value> = mesh
        .vertex_flags
        .iter()
        .enumerate()
        .filter(|(_, f)| **f != VertexFlag::Regular)
        .map(|(i, f)| (i.to_string(), serde_json::json!({"flag": f, "sing_class": f.code()})))
        .collect();
    serde_json::json!({ "vertex_count": mesh.vertices.len(), "flags": map })
}

fn header_comments<W: Write>(w: &mut W, prefix: &str, manifest: Option<&serde_json::Value>) -> io::Result<()> {
    if let Some(m) = manifest {
        writeln!(w, "{prefix} manifest {}", serde_json::to_string(m).map_err(io::Error::other)?)?;
    }
    Ok(())
}

/// Positions as `v x1 x2 x3`, faces 1-based.
pub fn write_obj<W: Write>(mesh: &MeshE31, manifest: Option<&serde_json::Value>, mut w: W) -> io::Result<()> {
    writeln!(w, "# maxface mesh in Lorentz-Minkowski coordinates (x3 timelike)")?;
    header_comments(&mut w, "#", manifest)?;
    for p in &mesh.vertices {
        writeln!(w, "v {} {} {}", f17(p[0]), f17(p[1]), f17(p[2]))?;
    }
    for f in &mesh.faces {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

/// ASCII PLY with a per-vertex `sing_class` property.
pub fn write_ply<W: Write>(mesh: &MeshE31, manifest: Option<&serde_json::Value>, mut w: W) -> io::Result<()> {
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    header_comments(&mut w, "comment", manifest)?;
    writeln!(w, "element vertex {}", mesh.vertices.len())?;
    for axis in ["x", "y", "z"] {
        writeln!(w, "property double {axis}")?;
    }
    writeln!(w, "property int sing_class")?;
    writeln!(w, "element face {}", mesh.faces.len())?;
    writeln!(w, "property list uchar int vertex_indices")?;
    writeln!(w, "end_header")?;
    for (p, f) in mesh.vertices.iter().zip(&mesh.vertex_flags) {
        writeln!(w, "{} {} {} {}", f17(p[0]), f17(p[1]), f17(p[2]), f.code())?;
    }
    for f in &mesh.faces {
        writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}
