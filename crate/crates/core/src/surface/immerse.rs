//! Immersion into Lorentz–Minkowski space by path integration from a base
//! point on each level.

use serde::{Deserialize, Serialize};

use super::divisor::level_zeros;
use super::paths::{integrate_path, level_path, to_coordinates, Obstacle, Piece};
use super::{Side, Surface};
use crate::config::NeckId;
use crate::quad::Triple;
use crate::{MaxfaceError, Result, C64};

/// A point of the surface given in one of its charts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "chart", rename_all = "snake_case")]
pub enum ChartPoint {
    Level { level: usize, z: C64 },
    /// `coord` is `v` on the lower side and `w` on the upper side.
    Neck { neck: NeckId, side: Side, coord: C64 },
}

/// Base points, obstacles and the images of the base points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceAtlas {
    pub base_points: Vec<C64>,
    pub obstacles: Vec<Vec<Obstacle>>,
    pub base_images: Vec<[f64; 3]>,
    pub tolerance: f64,
}

fn node_obstacles(surface: &Surface, level: usize) -> Vec<Obstacle> {
    let eps = surface.chart_radius();
    let nodes = surface.nodes(level);
    nodes
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let mut factor: f64 = 1.25;
            for (j, m) in nodes.iter().enumerate() {
                if i != j {
                    let d = (n.position - m.position).norm();
                    let sum = eps * (n.coefficient.norm() + m.coefficient.norm());
                    factor = factor.min(0.5 * (1.0 + d / sum));
                }
            }
            Obstacle { center: n.position, radius: factor * eps * n.coefficient.norm() }
        })
        .collect()
}

fn zero_obstacles(surface: &Surface, level: usize, nodes: &[Obstacle]) -> Result<Vec<Obstacle>> {
    let zeros = level_zeros(surface, level)?;
    let base = 0.5 * surface.chart_radius() * surface.nodes(level).iter().map(|n| n.coefficient.norm()).fold(f64::INFINITY, f64::min);
    // Nearly coincident zeros (split multiple zeros) share one obstacle.
    let mut clusters: Vec<Vec<C64>> = Vec::new();
    for z in zeros {
        match clusters.iter_mut().find(|c| c.iter().any(|w| (z - w).norm() < 1e-3 * base.max(surface.scale()))) {
            Some(c) => c.push(z),
            None => clusters.push(vec![z]),
        }
    }
    let centers: Vec<(C64, f64)> = clusters
        .iter()
        .map(|c| {
            let mean = c.iter().sum::<C64>() / c.len() as f64;
            (mean, c.iter().map(|z| (z - mean).norm()).fold(0.0, f64::max))
        })
        .collect();
    let mut out = Vec::new();
    for (i, (z, spread)) in centers.iter().enumerate() {
        let mut radius = base;
        for o in nodes {
            radius = radius.min(0.45 * ((z - o.center).norm() - o.radius));
        }
        for (j, (w, _)) in centers.iter().enumerate() {
            if i != j {
                radius = radius.min(0.45 * (z - w).norm());
            }
        }
        if radius > 2.0 * spread {
            out.push(Obstacle { center: *z, radius });
        }
    }
    Ok(out)
}

fn base_point(surface: &Surface, obstacles: &[Obstacle]) -> C64 {
    let origin = C64::new(0.0, 0.0);
    let clear = |z: C64| obstacles.iter().all(|o| (z - o.center).norm() > 1.05 * o.radius);
    if clear(origin) {
        return origin;
    }
    let step = 0.37 * surface.scale();
    (1..)
        .map(|k| C64::from_polar(step * k as f64, 0.3))
        .find(|z| clear(*z))
        .expect("some point along the ray is clear")
}

impl SurfaceAtlas {
    pub fn new(surface: &Surface) -> Result<SurfaceAtlas> {
        if surface.t() >= surface.chart_radius() {
            return Err(MaxfaceError::DisksOverlap(format!(
                "t = {} reaches the injectivity radius {} of the neck charts",
                surface.t(),
                surface.chart_radius()
            )));
        }
        let mut obstacles = Vec::new();
        let mut base_points = Vec::new();
        for level in 1..=surface.levels() {
            let mut obs = node_obstacles(surface, level);
            let zeros = zero_obstacles(surface, level, &obs)?;
            obs.extend(zeros);
            base_points.push(base_point(surface, &obs));
            obstacles.push(obs);
        }
        let tolerance = 1e-11 * surface.scale();
        let mut atlas = SurfaceAtlas { base_points, obstacles, base_images: vec![[0.0; 3]], tolerance };
        let mut acc = [0.0; 3];
        for level in 1..surface.levels() {
            let pieces = atlas.chain_path(surface, level)?;
            let step = to_coordinates(integrate_path(surface, &pieces, tolerance)?);
            for i in 0..3 {
                acc[i] += step[i];
            }
            atlas.base_images.push(acc);
        }
        Ok(atlas)
    }

    pub fn base_point(&self, level: usize) -> C64 {
        self.base_points[level - 1]
    }

    pub fn obstacles(&self, level: usize) -> &[Obstacle] {
        &self.obstacles[level - 1]
    }

    /// Level path from the base point to `z`.
    pub(crate) fn from_base(&self, level: usize, z: C64) -> Vec<Piece> {
        level_path(level, self.obstacles(level), self.base_point(level), z)
    }

    /// Level path between two points.
    pub(crate) fn between(&self, level: usize, from: C64, to: C64) -> Vec<Piece> {
        level_path(level, self.obstacles(level), from, to)
    }

    /// Crossing of `neck` at angle 0 from the outer ring on `from` to the
    /// outer ring on the other side.
    pub(crate) fn crossing(&self, surface: &Surface, neck: NeckId, from: Side) -> Vec<Piece> {
        let (eps, t) = (surface.chart_radius(), surface.t());
        vec![
            Piece::NeckRadial { neck, side: from, angle: 0.0, from: eps, to: t },
            Piece::NeckRadial { neck, side: from.other(), angle: 0.0, from: t, to: eps },
        ]
    }

    /// Outer ring point of a neck chart at angle 0.
    pub(crate) fn ring_point(&self, surface: &Surface, neck: NeckId, side: Side) -> Result<C64> {
        surface.chart_to_level(neck, side, C64::new(surface.chart_radius(), 0.0))
    }

    /// Path from base point `0_l` to `0_{l+1}` through neck `(l,1)`.
    fn chain_path(&self, surface: &Surface, level: usize) -> Result<Vec<Piece>> {
        let neck = NeckId::new(level, 1);
        let mut pieces = self.from_base(level, self.ring_point(surface, neck, Side::Lower)?);
        pieces.extend(self.crossing(surface, neck, Side::Lower));
        pieces.extend(self.between(level + 1, self.ring_point(surface, neck, Side::Upper)?, self.base_point(level + 1)));
        Ok(pieces)
    }

    /// Normalizes a chart point so that neck coordinates satisfy
    /// `t ≤ |coord| ≤ ε` and level points lie outside every node disk.
    pub fn canonical(&self, surface: &Surface, point: ChartPoint) -> Result<ChartPoint> {
        let (eps, t) = (surface.chart_radius(), surface.t());
        match point {
            ChartPoint::Level { level, z } => {
                if level == 0 || level > surface.levels() {
                    return Err(MaxfaceError::UnreachablePoint(format!("level {level} does not exist")));
                }
                for n in surface.nodes(level) {
                    if (z - n.position).norm() < 2.0 * eps * n.coefficient.norm() {
                        let coord = surface.local_coordinate(n.neck, n.side, z)?;
                        if coord.norm() < eps {
                            return self.canonical(surface, ChartPoint::Neck { neck: n.neck, side: n.side, coord });
                        }
                    }
                }
                Ok(point)
            }
            ChartPoint::Neck { neck, side, coord } => {
                surface.node_index(neck, side)?;
                let rho = coord.norm();
                if rho > eps * (1.0 + 1e-12) || rho < t * t / eps * (1.0 - 1e-12) {
                    return Err(MaxfaceError::UnreachablePoint(format!("|coord| = {rho} is outside the annulus of {neck}")));
                }
                if rho < t * (1.0 - 1e-14) {
                    return Ok(ChartPoint::Neck { neck, side: side.other(), coord: t * t / coord });
                }
                Ok(point)
            }
        }
    }

    /// Deterministic integration path from the base point of the chart's level.
    pub(crate) fn path_to(&self, surface: &Surface, point: ChartPoint) -> Result<(usize, Vec<Piece>)> {
        match self.canonical(surface, point)? {
            ChartPoint::Level { level, z } => Ok((level, self.from_base(level, z))),
            ChartPoint::Neck { neck, side, coord } => {
                let level = side.level(neck);
                let mut pieces = self.from_base(level, self.ring_point(surface, neck, side)?);
                let rho = coord.norm().min(surface.chart_radius());
                if rho < surface.chart_radius() {
                    pieces.push(Piece::NeckRadial { neck, side, angle: 0.0, from: surface.chart_radius(), to: rho });
                }
                let theta = coord.arg();
                if theta != 0.0 {
                    pieces.push(Piece::NeckArc { neck, side, radius: rho, start: 0.0, end: theta });
                }
                Ok((level, pieces))
            }
        }
    }
}

/// `Re ∫ (½(g⁻¹+g), (i/2)(g⁻¹-g), 1) dh` from `0_1` to the point.
pub fn immerse(surface: &Surface, atlas: &SurfaceAtlas, point: ChartPoint) -> Result<[f64; 3]> {
    let (level, pieces) = atlas.path_to(surface, point)?;
    let v: Triple = integrate_path(surface, &pieces, atlas.tolerance)?;
    let x = to_coordinates(v);
    let b = atlas.base_images[level - 1];
    Ok([b[0] + x[0], b[1] + x[1], b[2] + x[2]])
}
