//! Triangulated immersion: log-polar grids on the neck annuli, constrained
//! Delaunay triangulations of the level domains.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::immerse::SurfaceAtlas;
use super::paths::to_coordinates;
use super::{Side, Surface};
use crate::config::NeckId;
use crate::quad::{gauss_legendre, QuadValue, Triple};
use crate::{MaxfaceError, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexFlag {
    Regular,
    SingularCurve,
    Swallowtail,
}

impl VertexFlag {
    /// Integer class used in PLY output.
    pub fn code(self) -> i32 {
        match self {
            VertexFlag::Regular => 0,
            VertexFlag::SingularCurve => 1,
            VertexFlag::Swallowtail => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "chart", rename_all = "snake_case")]
pub enum VertexChart {
    Level { level: usize, z: C64 },
    Neck { neck: NeckId, side: Side, coord: C64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshOptions {
    /// Angular count on each annulus; radial and level counts scale with it.
    pub resolution: usize,
    /// Truncation radius of the level domains; `20 · max(1, max|p|)` if unset.
    pub outer_radius: Option<f64>,
    /// Waist angles (in the lower chart) that carry swallowtail markers.
    pub markers: BTreeMap<NeckId, Vec<f64>>,
    /// Largest accepted seam offset relative to the mesh diameter.
    pub seam_tolerance: f64,
}

impl Default for MeshOptions {
    fn default() -> Self {
        MeshOptions { resolution: 64, outer_radius: None, markers: BTreeMap::new(), seam_tolerance: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub diameter: f64,
    /// Offset between the two sides of each waist.
    pub seam_gaps: Vec<(NeckId, f64)>,
    /// Largest disagreement between tree paths and other edges inside a level region.
    pub max_closure_gap: f64,
    pub euler_characteristic: i64,
    /// Genus implied by the Euler characteristic with one boundary circle per end.
    pub genus: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshE31 {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    pub vertex_flags: Vec<VertexFlag>,
    pub provenance: Vec<VertexChart>,
    pub stats: MeshStats,
}

impl MeshE31 {
    /// Vertices on the waist of `neck` carrying a given flag.
    pub fn waist_vertices(&self, neck: NeckId, flag: VertexFlag) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&i| {
                self.vertex_flags[i] == flag && matches!(self.provenance[i], VertexChart::Neck { neck: n, .. } if n == neck)
            })
            .collect()
    }

    pub fn swallowtail_count(&self, neck: NeckId) -> usize {
        self.waist_vertices(neck, VertexFlag::Swallowtail).len()
    }
}

#[derive(Default)]
struct Builder {
    /// Level charts `(level, z)` of each vertex.
    charts: Vec<Vec<(usize, C64)>>,
    provenance: Vec<VertexChart>,
    flags: Vec<VertexFlag>,
    faces: Vec<[usize; 3]>,
}

impl Builder {
    fn push(&mut self, charts: Vec<(usize, C64)>, provenance: VertexChart, flag: VertexFlag) -> usize {
        self.charts.push(charts);
        self.provenance.push(provenance);
        self.flags.push(flag);
        self.charts.len() - 1
    }

    fn chart_on(&self, v: usize, level: usize) -> Option<C64> {
        self.charts[v].iter().find(|(l, _)| *l == level).map(|(_, z)| *z)
    }
}

fn marker_angles(markers: &[f64], count: usize) -> (Vec<f64>, Vec<bool>) {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut angles: Vec<(f64, bool)> = (0..count).map(|j| (two_pi * j as f64 / count as f64, false)).collect();
    for m in markers {
        let m = m.rem_euclid(two_pi);
        if let Some(a) = angles.iter_mut().find(|(a, _)| {
            let d = (a.to_owned() - m).abs();
            d.min(two_pi - d) < 1e-9
        }) {
            a.1 = true;
        } else {
            angles.push((m, true));
        }
    }
    angles.sort_by(|a, b| a.0.total_cmp(&b.0));
    angles.into_iter().unzip()
}

/// Rings of the neck annuli; returns the hole polygon (vertex ids) on each side.
fn build_annulus(
    surface: &Surface,
    neck: NeckId,
    options: &MeshOptions,
    b: &mut Builder,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let (eps, t) = (surface.chart_radius(), surface.t());
    let n_theta = options.resolution.max(8);
    let n_r = (options.resolution / 8).max(2);
    let (angles, marked) = marker_angles(options.markers.get(&neck).map(Vec::as_slice).unwrap_or(&[]), n_theta);
    let radii: Vec<f64> = (0..=n_r).map(|i| eps * (t / eps).powf(i as f64 / n_r as f64)).collect();
    let lower_level = neck.level;
    let upper_level = neck.level + 1;
    let mut rings: Vec<Vec<usize>> = Vec::with_capacity(2 * n_r + 1);
    for i in 0..=(2 * n_r) {
        let mut ring = Vec::with_capacity(angles.len());
        for (j, th) in angles.iter().enumerate() {
            let id = if i < n_r {
                let coord = C64::from_polar(radii[i], *th);
                let z = surface.chart_to_level(neck, Side::Lower, coord)?;
                b.push(vec![(lower_level, z)], VertexChart::Neck { neck, side: Side::Lower, coord }, VertexFlag::Regular)
            } else if i == n_r {
                let v = C64::from_polar(t, *th);
                let w = t * t / v;
                let z_low = surface.chart_to_level(neck, Side::Lower, v)?;
                let z_up = surface.chart_to_level(neck, Side::Upper, w)?;
                let check = surface.local_coordinate(neck, Side::Lower, z_low)? * surface.local_coordinate(neck, Side::Upper, z_up)?;
                if (check - t * t).norm() > 1e-12 * t * t {
                    return Err(MaxfaceError::SeamMismatch { gap: (check - t * t).norm(), tolerance: 1e-12 * t * t });
                }
                let flag = if marked[j] { VertexFlag::Swallowtail } else { VertexFlag::SingularCurve };
                b.push(vec![(lower_level, z_low), (upper_level, z_up)], VertexChart::Neck { neck, side: Side::Lower, coord: v }, flag)
            } else {
                let coord = C64::from_polar(radii[2 * n_r - i], -th);
                let z = surface.chart_to_level(neck, Side::Upper, coord)?;
                b.push(vec![(upper_level, z)], VertexChart::Neck { neck, side: Side::Upper, coord }, VertexFlag::Regular)
            };
            ring.push(id);
        }
        rings.push(ring);
    }
    let n = angles.len();
    for i in 0..(2 * n_r) {
        for j in 0..n {
            let (a, bb) = (rings[i][j], rings[i][(j + 1) % n]);
            let (c, d) = (rings[i + 1][(j + 1) % n], rings[i + 1][j]);
            b.faces.push([a, bb, c]);
            b.faces.push([a, c, d]);
        }
    }
    Ok((rings[0].clone(), rings[2 * n_r].clone()))
}

fn inside_polygon(p: C64, poly: &[C64]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.im > p.im) != (b.im > p.im) {
            let x = a.re + (p.im - a.im) * (b.re - a.re) / (b.im - a.im);
            if p.re < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Constrained Delaunay triangulation of one level domain. Returns the id of
/// the vertex at the level's base point.
fn build_level(
    surface: &Surface,
    atlas: &SurfaceAtlas,
    level: usize,
    holes: &[(C64, Vec<usize>)],
    outer_radius: f64,
    options: &MeshOptions,
    b: &mut Builder,
) -> Result<usize> {
    let insert_err = |e: spade::InsertionError| MaxfaceError::InvalidInput(format!("triangulation failed: {e:?}"));
    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let mut ids: Vec<Option<usize>> = Vec::new();
    let record = |ids: &mut Vec<Option<usize>>, h: spade::handles::FixedVertexHandle, id: usize| {
        if ids.len() <= h.index() {
            ids.resize(h.index() + 1, None);
        }
        ids[h.index()].get_or_insert(id);
    };

    let hole_polys: Vec<Vec<C64>> = holes
        .iter()
        .map(|(_, ring)| ring.iter().map(|v| b.chart_on(*v, level).expect("hole ring lies on its level")).collect())
        .collect();
    for ((_, ring), poly) in holes.iter().zip(&hole_polys) {
        let mut handles = Vec::with_capacity(ring.len());
        for (v, z) in ring.iter().zip(poly) {
            let h = cdt.insert(Point2::new(z.re, z.im)).map_err(insert_err)?;
            record(&mut ids, h, *v);
            handles.push(h);
        }
        for i in 0..handles.len() {
            cdt.add_constraint(handles[i], handles[(i + 1) % handles.len()]);
        }
    }
    let n_out = (2 * options.resolution).max(64);
    let outer: Vec<C64> = (0..n_out)
        .map(|i| C64::from_polar(outer_radius, 2.0 * std::f64::consts::PI * i as f64 / n_out as f64))
        .collect();
    let mut outer_handles = Vec::with_capacity(n_out);
    for z in &outer {
        let h = cdt.insert(Point2::new(z.re, z.im)).map_err(insert_err)?;
        let id = b.push(vec![(level, *z)], VertexChart::Level { level, z: *z }, VertexFlag::Regular);
        record(&mut ids, h, id);
        outer_handles.push(h);
    }
    for i in 0..n_out {
        cdt.add_constraint(outer_handles[i], outer_handles[(i + 1) % n_out]);
    }

    // Fill points: polar rings around each node, log-polar background elsewhere.
    let centers: Vec<C64> = holes.iter().map(|(c, _)| *c).collect();
    let reach: Vec<f64> = centers
        .iter()
        .enumerate()
        .map(|(i, c)| {
            centers
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, d)| (c - d).norm())
                .fold(0.5 * outer_radius, f64::min)
        })
        .collect();
    let mut fill = Vec::new();
    let n_polar = (options.resolution / 2).max(16);
    let growth = 1.0 + 1.6 * std::f64::consts::PI / n_polar as f64;
    for (i, (c, poly)) in centers.iter().zip(&hole_polys).enumerate() {
        let mut r = 1.3 * poly.iter().map(|z| (z - c).norm()).fold(0.0, f64::max);
        let mut k = 0;
        while r < 0.45 * reach[i] {
            let phase = if k % 2 == 0 { 0.0 } else { 0.5 };
            for j in 0..n_polar {
                fill.push(c + C64::from_polar(r, 2.0 * std::f64::consts::PI * (j as f64 + phase) / n_polar as f64));
            }
            r *= growth;
            k += 1;
        }
    }
    let n_back = (options.resolution / 2).max(24);
    let back_growth = 1.0 + 2.0 * std::f64::consts::PI / n_back as f64;
    let mut r = 0.05 * surface.scale();
    let mut k = 0;
    while r < 0.97 * outer_radius * (std::f64::consts::PI / n_out as f64).cos() {
        let phase = if k % 2 == 0 { 0.0 } else { 0.5 };
        for j in 0..n_back {
            let z = C64::from_polar(r, 2.0 * std::f64::consts::PI * (j as f64 + phase) / n_back as f64);
            if centers.iter().zip(&reach).all(|(c, d)| (z - c).norm() >= 0.5 * d) {
                fill.push(z);
            }
        }
        r *= back_growth;
        k += 1;
    }
    let base = atlas.base_point(level);
    fill.push(base);
    let mut base_id = None;
    for z in fill {
        if hole_polys.iter().any(|p| inside_polygon(z, p)) || !inside_polygon(z, &outer) {
            continue;
        }
        let h = cdt.insert(Point2::new(z.re, z.im)).map_err(insert_err)?;
        if ids.get(h.index()).copied().flatten().is_none() {
            let id = b.push(vec![(level, z)], VertexChart::Level { level, z }, VertexFlag::Regular);
            record(&mut ids, h, id);
        }
        if z == base {
            base_id = ids[h.index()];
        }
    }

    for face in cdt.inner_faces() {
        let vs = face.vertices();
        let zs = vs.map(|v| C64::new(v.position().x, v.position().y));
        let centroid = (zs[0] + zs[1] + zs[2]) / 3.0;
        if !inside_polygon(centroid, &outer) || hole_polys.iter().any(|p| inside_polygon(centroid, p)) {
            continue;
        }
        let tri = vs.map(|v| ids[v.fix().index()].expect("every vertex is recorded"));
        b.faces.push(tri);
    }
    base_id.ok_or_else(|| MaxfaceError::InvalidInput(format!("base point of level {level} was not meshed")))
}

fn edge_integral(surface: &Surface, level: usize, za: C64, zb: C64) -> Result<[f64; 3]> {
    let d = zb - za;
    let mut err = None;
    let v: Triple = gauss_legendre(
        |s| match surface.weierstrass(level, za + d * s) {
            Ok(w) => w * d,
            Err(e) => {
                err.get_or_insert(e);
                <Triple as QuadValue>::zero()
            }
        },
        0.0,
        1.0,
    );
    match err {
        Some(e) => Err(e),
        None => Ok(to_coordinates(v)),
    }
}

/// Meshes the surface and maps every vertex into `E³₁`.
pub fn build_mesh(surface: &Surface, atlas: &SurfaceAtlas, options: &MeshOptions) -> Result<MeshE31> {
    if options.resolution < 8 {
        return Err(MaxfaceError::InvalidInput(format!("mesh resolution {} is below 8", options.resolution)));
    }
    let outer_radius = options.outer_radius.unwrap_or(20.0 * surface.scale());
    let mut b = Builder::default();
    let mut holes: Vec<Vec<(C64, Vec<usize>)>> = vec![Vec::new(); surface.levels()];
    let necks = surface.params().neck_ids();
    for neck in &necks {
        let (lower, upper) = build_annulus(surface, *neck, options, &mut b)?;
        holes[neck.level - 1].push((surface.node(*neck, Side::Lower)?.position, lower));
        holes[neck.level].push((surface.node(*neck, Side::Upper)?.position, upper));
    }
    let mut bases = Vec::with_capacity(surface.levels());
    for level in 1..=surface.levels() {
        bases.push(build_level(surface, atlas, level, &holes[level - 1], outer_radius, options, &mut b)?);
    }

    let nv = b.charts.len();
    let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for f in &b.faces {
        for (x, y) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            neighbours[x].push(y);
            neighbours[y].push(x);
        }
    }
    for n in &mut neighbours {
        n.sort_unstable();
        n.dedup();
    }
    let edge_count: usize = neighbours.iter().map(Vec::len).sum::<usize>() / 2;

    // Breadth-first integration inside each level region, in parallel.
    let regions: Vec<(Vec<Option<[f64; 3]>>, f64)> = (1..=surface.levels())
        .into_par_iter()
        .map(|level| -> Result<(Vec<Option<[f64; 3]>>, f64)> {
            let mut x: Vec<Option<[f64; 3]>> = vec![None; nv];
            let start = bases[level - 1];
            x[start] = Some(atlas.base_images[level - 1]);
            let mut queue = VecDeque::from([start]);
            let mut tree_edges = std::collections::HashSet::new();
            while let Some(u) = queue.pop_front() {
                let zu = b.chart_on(u, level).expect("queued vertices lie on the level");
                let xu = x[u].expect("queued vertices are placed");
                for &w in &neighbours[u] {
                    if x[w].is_some() {
                        continue;
                    }
                    let Some(zw) = b.chart_on(w, level) else { continue };
                    let d = edge_integral(surface, level, zu, zw)?;
                    x[w] = Some([xu[0] + d[0], xu[1] + d[1], xu[2] + d[2]]);
                    tree_edges.insert((u.min(w), u.max(w)));
                    queue.push_back(w);
                }
            }
            let mut worst: f64 = 0.0;
            for u in 0..nv {
                let (Some(xu), Some(zu)) = (x[u], b.chart_on(u, level)) else { continue };
                for &w in neighbours[u].iter().filter(|w| **w > u) {
                    if tree_edges.contains(&(u, w)) {
                        continue;
                    }
                    let (Some(xw), Some(zw)) = (x[w], b.chart_on(w, level)) else { continue };
                    let d = edge_integral(surface, level, zu, zw)?;
                    let gap = (0..3).map(|i| (xu[i] + d[i] - xw[i]).powi(2)).sum::<f64>().sqrt();
                    worst = worst.max(gap);
                }
            }
            Ok((x, worst))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut vertices = vec![[0.0; 3]; nv];
    for (v, out) in vertices.iter_mut().enumerate() {
        let level = b.charts[v][0].0;
        *out = regions[level - 1].0[v].ok_or_else(|| MaxfaceError::UnreachablePoint(format!("vertex {v} was not reached")))?;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in &vertices {
        for i in 0..3 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    let diameter = (0..3).map(|i| (hi[i] - lo[i]).powi(2)).sum::<f64>().sqrt();

    let mut seam_gaps = Vec::new();
    for neck in &necks {
        let mut gap: f64 = 0.0;
        for v in 0..nv {
            if b.charts[v].len() == 2 && matches!(b.provenance[v], VertexChart::Neck { neck: n, .. } if n == *neck) {
                let low = vertices[v];
                let up = regions[neck.level].0[v].expect("waist vertices are reached from above");
                gap = gap.max((0..3).map(|i| (low[i] - up[i]).powi(2)).sum::<f64>().sqrt());
            }
        }
        seam_gaps.push((*neck, gap));
    }
    let worst_seam = seam_gaps.iter().map(|(_, g)| *g).fold(0.0, f64::max);
    if worst_seam > options.seam_tolerance * diameter {
        return Err(MaxfaceError::SeamMismatch { gap: worst_seam, tolerance: options.seam_tolerance * diameter });
    }
    let euler = nv as i64 - edge_count as i64 + b.faces.len() as i64;
    let ends = surface.levels() as i64;
    let stats = MeshStats {
        diameter,
        seam_gaps,
        max_closure_gap: regions.iter().map(|r| r.1).fold(0.0, f64::max),
        euler_characteristic: euler,
        genus: (2 - ends - euler) / 2,
    };
    Ok(MeshE31 { vertices, faces: b.faces, vertex_flags: b.flags, provenance: b.provenance, stats })
}

#[cfg(test)]
mod tests {
    use super::super::initial_params;
    use super::*;
    use crate::config::neck_sizes;
    use crate::preset::{catenoid, chm};

    fn mesh_of(cfg: &crate::config::Configuration, t: f64, resolution: usize) -> MeshE31 {
        let s = Surface::new(initial_params(cfg, &neck_sizes(cfg).unwrap(), t, None).unwrap()).unwrap();
        let atlas = SurfaceAtlas::new(&s).unwrap();
        build_mesh(&s, &atlas, &MeshOptions { resolution, ..Default::default() }).unwrap()
    }

    #[test]
    fn marker_angles_are_merged_into_the_grid() {
        let (angles, marked) = marker_angles(&[0.0, 1.0], 8);
        assert_eq!(angles.len(), 9);
        assert!(marked[0]);
        assert_eq!(marked.iter().filter(|m| **m).count(), 2);
    }

    #[test]
    fn catenoid_mesh_is_an_annulus_with_a_cone_point() {
        let m = mesh_of(&catenoid(), 0.1, 32);
        assert_eq!(m.stats.genus, 0);
        let waist = m.waist_vertices(NeckId::new(1, 1), VertexFlag::SingularCurve);
        assert_eq!(waist.len(), 32);
        let p0 = m.vertices[waist[0]];
        for v in waist {
            for i in 0..3 {
                assert!((m.vertices[v][i] - p0[i]).abs() < 1e-6 * m.stats.diameter);
            }
        }
        assert!(m.faces.iter().all(|f| f.iter().all(|v| *v < m.vertices.len())));
    }

    #[test]
    fn costa_mesh_has_genus_one() {
        let m = mesh_of(&chm(2).unwrap(), 0.05, 16);
        assert_eq!(m.stats.genus, 1, "{:?}", m.stats);
    }
}
