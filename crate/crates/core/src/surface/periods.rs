//! Horizontal and vertical periods on the cycles `γ_{l,k}` (small circles
//! around the lower nodes) and `Γ_{l,k}` (through neck `(l,1)` and back
//! through neck `(l,k)`).

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::immerse::SurfaceAtlas;
use super::paths::{integrate_path, Piece};
use super::{Side, Surface, SurfaceParams};
use crate::config::NeckId;
use crate::quad::{periodic_trapezoid, QuadValue, Triple};
use crate::{MaxfaceError, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cycle {
    /// Clockwise circle around `a_{l,k}`.
    Small { neck: NeckId },
    /// Through neck `(l,1)` to level `l+1` and back through neck `(l,k)`, `k ≥ 2`.
    Through { neck: NeckId },
}

impl fmt::Display for Cycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cycle::Small { neck } => write!(f, "gamma{neck}"),
            Cycle::Through { neck } => write!(f, "Gamma{neck}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleDefect {
    pub cycle_id: String,
    pub horizontal: [f64; 2],
    pub vertical: f64,
}

/// Every `γ_{l,k}` followed by every `Γ_{l,k}` with `k ≥ 2`.
pub fn all_cycles(params: &SurfaceParams) -> Vec<Cycle> {
    let ids = params.neck_ids();
    let mut out: Vec<Cycle> = ids.iter().map(|n| Cycle::Small { neck: *n }).collect();
    out.extend(ids.iter().filter(|n| n.index > 1).map(|n| Cycle::Through { neck: *n }));
    out
}

fn through_path(surface: &Surface, atlas: &SurfaceAtlas, neck: NeckId) -> Result<Vec<Piece>> {
    let first = NeckId::new(neck.level, 1);
    let start = atlas.ring_point(surface, first, Side::Lower)?;
    let mut pieces = atlas.crossing(surface, first, Side::Lower);
    pieces.extend(atlas.between(
        neck.level + 1,
        atlas.ring_point(surface, first, Side::Upper)?,
        atlas.ring_point(surface, neck, Side::Upper)?,
    ));
    pieces.extend(atlas.crossing(surface, neck, Side::Upper));
    pieces.extend(atlas.between(neck.level, atlas.ring_point(surface, neck, Side::Lower)?, start));
    Ok(pieces)
}

/// `∮ (g⁻¹, g, 1) dh` along the cycle.
pub(crate) fn cycle_integral(surface: &Surface, atlas: &SurfaceAtlas, cycle: Cycle) -> Result<Triple> {
    match cycle {
        Cycle::Small { neck } => {
            let node = surface.node(neck, Side::Lower)?;
            let rho = node.coefficient.norm() * surface.epsilon();
            let f = |th: f64| {
                let e = C64::from_polar(rho, -th);
                match surface.weierstrass(neck.level, node.position + e) {
                    Ok(w) => w * (-C64::i() * e),
                    Err(_) => Triple([C64::new(f64::NAN, 0.0); 3]),
                }
            };
            let v = periodic_trapezoid(&f, atlas.tolerance);
            if v.magnitude().is_finite() {
                Ok(v)
            } else {
                Err(MaxfaceError::PathThroughPole)
            }
        }
        Cycle::Through { neck } => {
            if neck.index < 2 {
                return Err(MaxfaceError::InvalidInput(format!("Gamma cycles need k >= 2, got {neck}")));
            }
            integrate_path(surface, &through_path(surface, atlas, neck)?, atlas.tolerance)
        }
    }
}

/// Horizontal period `conj(∮ g⁻¹dh) + ∮ g dh` and vertical period `Re ∮ dh`.
pub fn period_defect(surface: &Surface, atlas: &SurfaceAtlas, cycle: Cycle) -> Result<(C64, f64)> {
    let v = cycle_integral(surface, atlas, cycle)?;
    Ok((v.0[0].conj() + v.0[1], v.0[2].re))
}

/// Period defects on all cycles, computed in parallel.
pub fn defect_report(surface: &Surface, atlas: &SurfaceAtlas) -> Result<Vec<CycleDefect>> {
    all_cycles(surface.params())
        .par_iter()
        .map(|c| {
            let (h, v) = period_defect(surface, atlas, *c)?;
            Ok(CycleDefect { cycle_id: c.to_string(), horizontal: [h.re, h.im], vertical: v })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::initial_params;
    use super::*;
    use crate::config::neck_sizes;
    use crate::preset::{catenoid, chm};

    fn costa(t: f64) -> Surface {
        let cfg = chm(2).unwrap();
        Surface::new(initial_params(&cfg, &neck_sizes(&cfg).unwrap(), t, None).unwrap()).unwrap()
    }

    #[test]
    fn vertical_small_cycle_periods_vanish() {
        let s = costa(0.1);
        let atlas = SurfaceAtlas::new(&s).unwrap();
        for c in all_cycles(s.params()).into_iter().filter(|c| matches!(c, Cycle::Small { .. })) {
            let (_, v) = period_defect(&s, &atlas, c).unwrap();
            assert!(v.abs() < 1e-9, "{c}: {v}");
        }
    }

    #[test]
    fn catenoid_small_cycle_is_closed() {
        let cfg = catenoid();
        let s = Surface::new(initial_params(&cfg, &neck_sizes(&cfg).unwrap(), 0.1, None).unwrap()).unwrap();
        let atlas = SurfaceAtlas::new(&s).unwrap();
        let (h, v) = period_defect(&s, &atlas, Cycle::Small { neck: NeckId::new(1, 1) }).unwrap();
        assert!(h.norm() < 1e-9 && v.abs() < 1e-9);
    }

    #[test]
    fn costa_small_cycle_defects_decay() {
        let ts = [0.2, 0.1, 0.05, 0.025];
        let d: Vec<f64> = ts
            .iter()
            .map(|t| {
                let s = costa(*t);
                let atlas = SurfaceAtlas::new(&s).unwrap();
                all_cycles(s.params())
                    .into_iter()
                    .filter(|c| matches!(c, Cycle::Small { .. }))
                    .map(|c| period_defect(&s, &atlas, c).unwrap().0.norm())
                    .fold(0.0, f64::max)
            })
            .collect();
        for w in d.windows(2) {
            assert!(w[1] < w[0], "{d:?}");
        }
    }
}
