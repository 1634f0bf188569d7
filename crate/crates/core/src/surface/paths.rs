//! Integration paths on the levels and through the neck annuli.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use super::{Side, Surface};
use crate::config::NeckId;
use crate::quad::{gauss_kronrod, QuadValue, Triple};
use crate::{MaxfaceError, Result, C64};

/// Disk that level paths go around.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub center: C64,
    pub radius: f64,
}

impl Obstacle {
    pub fn contains(&self, z: C64) -> bool {
        (z - self.center).norm() < self.radius * (1.0 - 1e-12)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Piece {
    Segment { level: usize, from: C64, to: C64 },
    Arc { level: usize, center: C64, radius: f64, start: f64, end: f64 },
    /// Radial move at a fixed angle in a neck chart, radii `from → to`.
    NeckRadial { neck: NeckId, side: Side, angle: f64, from: f64, to: f64 },
    /// Circular move at a fixed radius in a neck chart, angles `start → end`.
    NeckArc { neck: NeckId, side: Side, radius: f64, start: f64, end: f64 },
}

fn wrap(a: f64) -> f64 {
    let mut x = a.rem_euclid(2.0 * std::f64::consts::PI);
    if x > std::f64::consts::PI {
        x -= 2.0 * std::f64::consts::PI;
    }
    x
}

/// Straight path from `from` to `to` on a level, replacing every chord
/// through an obstacle by the shorter arc of its boundary. Endpoints inside
/// an obstacle are joined to its boundary radially.
pub(crate) fn level_path(level: usize, obstacles: &[Obstacle], from: C64, to: C64) -> Vec<Piece> {
    let mut pieces = Vec::new();
    let mut start = from;
    if let Some(o) = obstacles.iter().find(|o| o.contains(from)) {
        let d = from - o.center;
        let exit = if d.norm() > 0.0 { o.center + d * (o.radius / d.norm()) } else { o.center + o.radius };
        pieces.push(Piece::Segment { level, from, to: exit });
        start = exit;
    }
    let mut end = to;
    let mut tail = None;
    if let Some(o) = obstacles.iter().find(|o| o.contains(to)) {
        let d = to - o.center;
        let entry = if d.norm() > 0.0 { o.center + d * (o.radius / d.norm()) } else { o.center + o.radius };
        tail = Some(Piece::Segment { level, from: entry, to });
        end = entry;
    }
    let dir = end - start;
    let a = dir.norm_sqr();
    let mut hits: Vec<(f64, f64, Obstacle)> = Vec::new();
    if a > 0.0 {
        for o in obstacles {
            let rel = start - o.center;
            let b = 2.0 * (dir.conj() * rel).re;
            let c = rel.norm_sqr() - o.radius * o.radius;
            let disc = b * b - 4.0 * a * c;
            if disc <= 0.0 {
                continue;
            }
            let sq = disc.sqrt();
            let s1 = ((-b - sq) / (2.0 * a)).max(0.0);
            let s2 = ((-b + sq) / (2.0 * a)).min(1.0);
            if s2 - s1 > 1e-9 && s2 > 1e-9 && s1 < 1.0 - 1e-9 {
                hits.push((s1, s2, *o));
            }
        }
    }
    hits.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut cur = start;
    for (s1, s2, o) in hits {
        let p1 = start + dir * s1;
        let p2 = start + dir * s2;
        if (p1 - cur).norm() > 0.0 {
            pieces.push(Piece::Segment { level, from: cur, to: p1 });
        }
        let th1 = (p1 - o.center).arg();
        let mut delta = wrap((p2 - o.center).arg() - th1);
        if (delta.abs() - std::f64::consts::PI).abs() < 1e-12 {
            delta = std::f64::consts::PI;
        }
        pieces.push(Piece::Arc { level, center: o.center, radius: o.radius, start: th1, end: th1 + delta });
        cur = p2;
    }
    if (end - cur).norm() > 0.0 {
        pieces.push(Piece::Segment { level, from: cur, to: end });
    }
    pieces.extend(tail);
    pieces
}

/// Integrates `(g⁻¹, g, 1) dh` along one piece.
pub(crate) fn integrate_piece(surface: &Surface, piece: &Piece, tol: f64) -> Result<Triple> {
    let failure: RefCell<Option<MaxfaceError>> = RefCell::new(None);
    let guard = |r: Result<Triple>| -> Triple {
        match r {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                Triple::zero()
            }
        }
    };
    let value = match *piece {
        Piece::Segment { level, from, to } => {
            let d = to - from;
            gauss_kronrod(&|s: f64| guard(surface.weierstrass(level, from + d * s).map(|w| w * d)), 0.0, 1.0, tol).0
        }
        Piece::Arc { level, center, radius, start, end } => {
            let f = |th: f64| {
                let e = C64::from_polar(radius, th);
                guard(surface.weierstrass(level, center + e).map(|w| w * (C64::i() * e)))
            };
            gauss_kronrod(&f, start, end, tol).0
        }
        Piece::NeckRadial { neck, side, angle, from, to } => {
            let f = |s: f64| {
                let coord = C64::from_polar(s.exp(), angle);
                guard(surface.weierstrass_in_chart(neck, side, coord).map(|(_, w)| w * coord))
            };
            gauss_kronrod(&f, from.ln(), to.ln(), tol).0
        }
        Piece::NeckArc { neck, side, radius, start, end } => {
            let f = |th: f64| {
                let coord = C64::from_polar(radius, th);
                guard(surface.weierstrass_in_chart(neck, side, coord).map(|(_, w)| w * (C64::i() * coord)))
            };
            gauss_kronrod(&f, start, end, tol).0
        }
    };
    if let Some(e) = failure.into_inner() {
        return Err(match e {
            MaxfaceError::PoleEvaluation { .. } => MaxfaceError::PathThroughPole,
            other => other,
        });
    }
    Ok(value)
}

pub(crate) fn integrate_path(surface: &Surface, pieces: &[Piece], tol: f64) -> Result<Triple> {
    pieces.iter().try_fold(Triple::zero(), |acc, p| Ok(acc + integrate_piece(surface, p, tol)?))
}

/// Re of the immersion integrand: `(½(I₁+I₂), (i/2)(I₁-I₂), I₃)`.
pub(crate) fn to_coordinates(v: Triple) -> [f64; 3] {
    let [a, b, h] = v.0;
    [(0.5 * (a + b)).re, (0.5 * C64::i() * (a - b)).re, h.re]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_detours_around_obstacle() {
        let obs = [Obstacle { center: C64::new(0.0, 0.0), radius: 0.5 }];
        let pieces = level_path(1, &obs, C64::new(-2.0, 0.0), C64::new(2.0, 0.1));
        assert_eq!(pieces.len(), 3);
        assert!(matches!(pieces[1], Piece::Arc { .. }));
        if let Piece::Segment { to, .. } = pieces[2] {
            assert!((to - C64::new(2.0, 0.1)).norm() < 1e-15);
        }
    }

    #[test]
    fn endpoints_inside_obstacles_leave_radially() {
        let obs = [Obstacle { center: C64::new(0.0, 0.0), radius: 0.5 }, Obstacle { center: C64::new(3.0, 0.0), radius: 0.5 }];
        let pieces = level_path(1, &obs, C64::new(0.2, 0.0), C64::new(2.7, 0.0));
        match pieces[0] {
            Piece::Segment { to, .. } => assert!((to - C64::new(0.5, 0.0)).norm() < 1e-15),
            _ => panic!("expected radial exit"),
        }
        assert!(matches!(pieces.last(), Some(Piece::Segment { .. })));
    }
}
