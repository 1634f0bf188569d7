//! Finite-`t` Weierstrass data on the node-opened surface.
//!
//! Level `l` is a copy of the Riemann sphere carrying the nodes `a_{l,k}`
//! (opened towards level `l+1`) and `b_{l-1,k}` (opened towards level
//! `l-1`). Near a node the local coordinate is `1/g_l`, and the two sides of
//! a neck are glued by `v w = t²`.

mod divisor;
mod export;
mod immerse;
mod laurent;
mod mesh;
mod paths;
mod periods;
mod refine;

use serde::{Deserialize, Serialize};

use crate::config::{Configuration, NeckId, NeckSizes};
use crate::quad::Triple;
use crate::{MaxfaceError, Result, C64};

pub use divisor::{divisor_defect, level_zeros, solve_divisor, DivisorReport};
pub use export::{flags_json, write_obj, write_ply};
pub use immerse::{immerse, ChartPoint, SurfaceAtlas};
pub use mesh::{build_mesh, MeshE31, MeshOptions, MeshStats, VertexChart, VertexFlag};
pub use paths::Obstacle;
pub use periods::{all_cycles, defect_report, period_defect, Cycle, CycleDefect};
pub use refine::{refine_params, RefineOutcome};

/// Default number of Laurent modes per node in the height differential.
pub const LAURENT_ORDER: usize = 12;

/// Parameters of the opened surface, indexed like the neck positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceParams {
    pub t: f64,
    pub epsilon: f64,
    pub a: Vec<Vec<C64>>,
    pub b: Vec<Vec<C64>>,
    pub alpha: Vec<Vec<C64>>,
    pub beta: Vec<Vec<C64>>,
    pub r: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub end_residues: Vec<f64>,
}

/// Which side of a neck a node sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `a_{l,k}` on level `l`, coordinate `v`.
    Lower,
    /// `b_{l,k}` on level `l+1`, coordinate `w`.
    Upper,
}

impl Side {
    pub fn level(self, neck: NeckId) -> usize {
        match self {
            Side::Lower => neck.level,
            Side::Upper => neck.level + 1,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Lower => Side::Upper,
            Side::Upper => Side::Lower,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub neck: NeckId,
    pub side: Side,
    pub position: C64,
    /// Residue of `g_l` at the node.
    pub coefficient: C64,
    /// Residue of `dh` at the node.
    pub residue: f64,
}

impl SurfaceParams {
    pub fn levels(&self) -> usize {
        self.end_residues.len()
    }

    pub fn neck_ids(&self) -> Vec<NeckId> {
        self.a
            .iter()
            .enumerate()
            .flat_map(|(i, row)| (1..=row.len()).map(move |k| NeckId::new(i + 1, k)))
            .collect()
    }

    /// Nodes on level `l`: the `a_{l,·}` first, then the `b_{l-1,·}`.
    pub fn level_nodes(&self, l: usize) -> Vec<Node> {
        let mut out = Vec::new();
        if l < self.levels() {
            for (k, pos) in self.a[l - 1].iter().enumerate() {
                out.push(Node {
                    neck: NeckId::new(l, k + 1),
                    side: Side::Lower,
                    position: *pos,
                    coefficient: self.alpha[l - 1][k],
                    residue: -self.r[l - 1][k],
                });
            }
        }
        if l >= 2 {
            for (k, pos) in self.b[l - 2].iter().enumerate() {
                out.push(Node {
                    neck: NeckId::new(l - 1, k + 1),
                    side: Side::Upper,
                    position: *pos,
                    coefficient: self.beta[l - 2][k],
                    residue: self.r[l - 2][k],
                });
            }
        }
        out
    }

    /// Residue sum `Σ r_{l-1,·} - Σ r_{l,·}` implied by the neck residues.
    pub(crate) fn implied_end_residue(&self, l: usize) -> f64 {
        let below: f64 = if l >= 2 { self.r[l - 2].iter().sum() } else { 0.0 };
        let above: f64 = if l < self.levels() { self.r[l - 1].iter().sum() } else { 0.0 };
        below - above
    }

    pub fn validate(&self) -> Result<()> {
        let levels = self.levels();
        if levels < 2 {
            return Err(MaxfaceError::InvalidInput("surface needs at least two levels".into()));
        }
        let rows = levels - 1;
        if [self.a.len(), self.b.len(), self.alpha.len(), self.beta.len(), self.r.len()].iter().any(|n| *n != rows) {
            return Err(MaxfaceError::InvalidInput(format!("parameter lists must have {rows} rows")));
        }
        for i in 0..rows {
            let n = self.a[i].len();
            if n == 0 || [self.b[i].len(), self.alpha[i].len(), self.beta[i].len(), self.r[i].len()].iter().any(|m| *m != n)
            {
                return Err(MaxfaceError::InvalidInput(format!("ragged row {} has inconsistent lengths", i + 1)));
            }
        }
        if !(self.t.is_finite() && self.t > 0.0 && self.epsilon.is_finite()) {
            return Err(MaxfaceError::InvalidInput(format!("t = {} must be positive and finite", self.t)));
        }
        if self.t >= self.epsilon {
            return Err(MaxfaceError::DisksOverlap(format!("t = {} is not below epsilon = {}", self.t, self.epsilon)));
        }
        let sum: f64 = self.end_residues.iter().sum();
        let scale: f64 = self.end_residues.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        if sum.abs() > 1e-9 * scale {
            return Err(MaxfaceError::NonZeroGrowthSum { sum });
        }
        for l in 1..=levels {
            let implied = self.implied_end_residue(l);
            if (implied - self.end_residues[l - 1]).abs() > 1e-9 * scale {
                return Err(MaxfaceError::InvalidInput(format!(
                    "end residue R_{l} = {} does not match the neck residues ({implied})",
                    self.end_residues[l - 1]
                )));
            }
            let nodes = self.level_nodes(l);
            for n in &nodes {
                if !(n.coefficient.norm() > 0.0) || !n.position.is_finite() {
                    return Err(MaxfaceError::InvalidInput(format!("node {} has a degenerate coefficient", n.neck)));
                }
            }
            for (i, p) in nodes.iter().enumerate() {
                for q in &nodes[i + 1..] {
                    let d = (p.position - q.position).norm();
                    if d <= self.epsilon * (p.coefficient.norm() + q.coefficient.norm()) {
                        return Err(MaxfaceError::DisksOverlap(format!(
                            "disks around nodes {} and {} on level {l} overlap at epsilon = {}",
                            p.neck, q.neck, self.epsilon
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `0.3 · min |q_i - q_j| / max(|γ_i|, |γ_j|)` over node pairs sharing a level.
pub fn default_epsilon(params: &SurfaceParams) -> f64 {
    let mut best = f64::INFINITY;
    let mut largest: f64 = 0.0;
    for l in 1..=params.levels() {
        let nodes = params.level_nodes(l);
        for (i, p) in nodes.iter().enumerate() {
            largest = largest.max(p.coefficient.norm());
            for q in &nodes[i + 1..] {
                let d = (p.position - q.position).norm() / p.coefficient.norm().max(q.coefficient.norm());
                best = best.min(d);
            }
        }
    }
    if best.is_finite() {
        0.3 * best
    } else {
        0.3 / largest.max(f64::MIN_POSITIVE)
    }
}

/// Initial values at `t = 0`: `a = conj(p)` on odd levels and `p` on even
/// ones, `b = conj(a)`, `α = -c`, `β = r = c`, `R = Q`.
pub fn initial_params(config: &Configuration, sizes: &NeckSizes, t: f64, epsilon: Option<f64>) -> Result<SurfaceParams> {
    let levels = config.levels();
    let mut params = SurfaceParams {
        t,
        epsilon: 0.0,
        a: Vec::new(),
        b: Vec::new(),
        alpha: Vec::new(),
        beta: Vec::new(),
        r: Vec::new(),
        end_residues: config.growth().to_vec(),
    };
    for l in 1..levels {
        let c = sizes.get(l);
        if c == 0.0 {
            return Err(MaxfaceError::InvalidConfiguration(format!("neck size c_{l} vanishes; the nodes cannot be opened")));
        }
        let a: Vec<C64> = config.positions(l).iter().map(|p| if l % 2 == 1 { p.conj() } else { *p }).collect();
        let n = a.len();
        params.b.push(a.iter().map(|z| z.conj()).collect());
        params.a.push(a);
        params.alpha.push(vec![C64::new(-c, 0.0); n]);
        params.beta.push(vec![C64::new(c, 0.0); n]);
        params.r.push(vec![c; n]);
    }
    params.epsilon = epsilon.unwrap_or_else(|| default_epsilon(&params));
    params.validate()?;
    Ok(params)
}

/// Height differential of the `t → 0` limit, `Σ -r/(z-a) + Σ r/(z-b)`.
pub fn height_diff_limit(params: &SurfaceParams, level: usize, z: C64) -> Result<C64> {
    let mut out = C64::new(0.0, 0.0);
    for n in params.level_nodes(level) {
        let u = z - n.position;
        if u.norm() == 0.0 {
            return Err(MaxfaceError::PoleEvaluation { level, z });
        }
        out += n.residue / u;
    }
    Ok(out)
}

/// Weierstrass data of the opened surface with a Laurent-matched height
/// differential.
#[derive(Debug, Clone)]
pub struct Surface {
    params: SurfaceParams,
    nodes: Vec<Vec<Node>>,
    /// Per level and node: `X_1..X_{K+1}`, the coefficients of `(z-q)^{-j}` in `dh/dz`.
    laurent: Vec<Vec<Vec<C64>>>,
    scale: f64,
    chart_radius: f64,
}

impl Surface {
    pub fn new(params: SurfaceParams) -> Result<Surface> {
        Surface::with_order(params, LAURENT_ORDER)
    }

    pub fn with_order(params: SurfaceParams, order: usize) -> Result<Surface> {
        params.validate()?;
        let nodes: Vec<Vec<Node>> = (1..=params.levels()).map(|l| params.level_nodes(l)).collect();
        let laurent = laurent::solve(&params, &nodes, order)?;
        let scale = nodes
            .iter()
            .flatten()
            .map(|n| n.position.norm())
            .fold(1.0, f64::max);
        let mut critical = f64::INFINITY;
        for level in &nodes {
            critical = critical.min(divisor::critical_radius(level)?);
        }
        let chart_radius = params.epsilon.min(0.8 * critical);
        Ok(Surface { params, nodes, laurent, scale, chart_radius })
    }

    pub fn params(&self) -> &SurfaceParams {
        &self.params
    }

    pub fn levels(&self) -> usize {
        self.params.levels()
    }

    pub fn t(&self) -> f64 {
        self.params.t
    }

    pub fn epsilon(&self) -> f64 {
        self.params.epsilon
    }

    /// Outer radius of the neck charts: `epsilon`, shrunk if needed so that
    /// the local coordinate stays injective.
    pub fn chart_radius(&self) -> f64 {
        self.chart_radius
    }

    /// `max(1, max |q|)` over all nodes.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn nodes(&self, level: usize) -> &[Node] {
        &self.nodes[level - 1]
    }

    pub fn laurent_coefficients(&self, level: usize) -> &[Vec<C64>] {
        &self.laurent[level - 1]
    }

    pub fn node_index(&self, neck: NeckId, side: Side) -> Result<(usize, usize)> {
        let level = side.level(neck);
        if level == 0 || level > self.levels() {
            return Err(MaxfaceError::InvalidInput(format!("neck {neck} is not on this surface")));
        }
        self.nodes[level - 1]
            .iter()
            .position(|n| n.neck == neck && n.side == side)
            .map(|i| (level, i))
            .ok_or_else(|| MaxfaceError::InvalidInput(format!("neck {neck} is not on this surface")))
    }

    pub fn node(&self, neck: NeckId, side: Side) -> Result<&Node> {
        let (level, i) = self.node_index(neck, side)?;
        Ok(&self.nodes[level - 1][i])
    }

    /// `g_l(z) = Σ γ_q/(z - q)`.
    pub fn level_gauss(&self, level: usize, z: C64) -> Result<C64> {
        let mut out = C64::new(0.0, 0.0);
        for n in self.nodes(level) {
            let u = z - n.position;
            if u.norm() <= 1e-300 {
                return Err(MaxfaceError::PoleEvaluation { level, z });
            }
            out += n.coefficient / u;
        }
        Ok(out)
    }

    /// Gauss map: `t g_l` on odd levels, `1/(t g_l)` on even levels.
    pub fn gauss_map(&self, level: usize, z: C64) -> Result<C64> {
        let gl = self.level_gauss(level, z)?;
        let g = if level % 2 == 1 { self.t() * gl } else { 1.0 / (self.t() * gl) };
        if !g.is_finite() {
            return Err(MaxfaceError::PoleEvaluation { level, z });
        }
        Ok(g)
    }

    /// `dh/dz` on level `level`.
    pub fn height_diff(&self, level: usize, z: C64) -> Result<C64> {
        let mut out = C64::new(0.0, 0.0);
        for (n, coeffs) in self.nodes(level).iter().zip(&self.laurent[level - 1]) {
            let u = z - n.position;
            if u.norm() <= 1e-300 {
                return Err(MaxfaceError::PoleEvaluation { level, z });
            }
            let w = 1.0 / u;
            let mut acc = C64::new(0.0, 0.0);
            for x in coeffs.iter().rev() {
                acc = acc * w + x;
            }
            out += acc * w;
        }
        Ok(out)
    }

    /// `(g⁻¹, g, 1) · dh/dz` on a level.
    pub fn weierstrass(&self, level: usize, z: C64) -> Result<Triple> {
        let gl = self.level_gauss(level, z)?;
        let dh = self.height_diff(level, z)?;
        let tg = self.t() * gl;
        let (g, ginv) = if level % 2 == 1 { (tg, 1.0 / tg) } else { (1.0 / tg, tg) };
        let out = Triple([ginv * dh, g * dh, dh]);
        if out.0.iter().any(|c| !c.is_finite()) {
            return Err(MaxfaceError::PoleEvaluation { level, z });
        }
        Ok(out)
    }

    /// Splits `g_l` near a node as `φ(u)/u` with `u = z - q` and returns
    /// `(φ, φ')`.
    fn local_phi(&self, level: usize, index: usize, z: C64) -> (C64, C64) {
        let nodes = self.nodes(level);
        let q = nodes[index];
        let u = z - q.position;
        let mut h = C64::new(0.0, 0.0);
        let mut dh = C64::new(0.0, 0.0);
        for (i, n) in nodes.iter().enumerate() {
            if i != index {
                let d = z - n.position;
                h += n.coefficient / d;
                dh -= n.coefficient / (d * d);
            }
        }
        (q.coefficient + u * h, h + u * dh)
    }

    /// Local coordinate `1/g_l(z)` of the node on `side` of `neck`.
    pub fn local_coordinate(&self, neck: NeckId, side: Side, z: C64) -> Result<C64> {
        let (level, i) = self.node_index(neck, side)?;
        let (phi, _) = self.local_phi(level, i, z);
        Ok((z - self.nodes(level)[i].position) / phi)
    }

    /// Solves `1/g_l(z) = coord` near the node by Newton's method.
    pub fn chart_to_level(&self, neck: NeckId, side: Side, coord: C64) -> Result<C64> {
        if coord.norm() > 1.5 * self.epsilon() {
            return Err(MaxfaceError::OutsideAnnulus { neck });
        }
        let (level, i) = self.node_index(neck, side)?;
        let q = self.nodes(level)[i];
        let mut u = q.coefficient * coord;
        let tol = 1e-15 * (q.coefficient * coord).norm();
        for _ in 0..60 {
            let (phi, dphi) = self.local_phi(level, i, q.position + u);
            let f = u / phi - coord;
            let df = (phi - u * dphi) / (phi * phi);
            let step = f / df;
            u -= step;
            if !u.is_finite() {
                break;
            }
            if step.norm() <= tol {
                return Ok(q.position + u);
            }
        }
        // Accept a stagnated iterate only if it solves the equation.
        let (phi, _) = self.local_phi(level, i, q.position + u);
        if u.is_finite() && (u / phi - coord).norm() <= 1e-13 * coord.norm().max(1e-300) {
            return Ok(q.position + u);
        }
        Err(MaxfaceError::OutsideAnnulus { neck })
    }

    /// `dz/d(coord)` at the level point `z` of a neck chart.
    pub fn chart_jacobian(&self, neck: NeckId, side: Side, z: C64) -> Result<C64> {
        let (level, i) = self.node_index(neck, side)?;
        let u = z - self.nodes(level)[i].position;
        let (phi, dphi) = self.local_phi(level, i, z);
        Ok(phi * phi / (phi - u * dphi))
    }

    /// `(g⁻¹, g, 1) · dh/d(coord)` in a neck chart.
    pub fn weierstrass_in_chart(&self, neck: NeckId, side: Side, coord: C64) -> Result<(C64, Triple)> {
        let z = self.chart_to_level(neck, side, coord)?;
        let jac = self.chart_jacobian(neck, side, z)?;
        let level = side.level(neck);
        Ok((z, self.weierstrass(level, z)? * jac))
    }

    /// Governing function `v · dh/dv` at `v = t e^{iθ}` in the lower chart of `neck`.
    pub fn governing_a(&self, neck: NeckId, theta: f64) -> Result<C64> {
        let v = C64::from_polar(self.t(), theta);
        let z = self.chart_to_level(neck, Side::Lower, v)?;
        let jac = self.chart_jacobian(neck, Side::Lower, z)?;
        Ok(v * self.height_diff(neck.level, z)? * jac)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::neck_sizes;
    use crate::preset::{catenoid, chm};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn costa(t: f64) -> Surface {
        let cfg = chm(2).unwrap();
        let sizes = neck_sizes(&cfg).unwrap();
        Surface::new(initial_params(&cfg, &sizes, t, None).unwrap()).unwrap()
    }

    #[test]
    fn catenoid_initial_values() {
        let cfg = catenoid();
        let p = initial_params(&cfg, &neck_sizes(&cfg).unwrap(), 0.1, None).unwrap();
        assert_eq!(p.a, vec![vec![C64::new(0.0, 0.0)]]);
        assert_eq!(p.b, p.a);
        assert_eq!(p.alpha[0][0], C64::new(-1.0, 0.0));
        assert_eq!(p.beta[0][0], C64::new(1.0, 0.0));
        assert_eq!(p.r, vec![vec![1.0]]);
        assert_eq!(p.end_residues, vec![-1.0, 1.0]);
        let s = Surface::new(p).unwrap();
        assert_abs_diff_eq!(s.gauss_map(1, C64::new(1.0, 0.0)).unwrap().re, -0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(s.height_diff(1, C64::new(1.0, 0.0)).unwrap().re, -1.0, epsilon = 1e-15);
        assert!(s.laurent_coefficients(1)[0][1..].iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn costa_initial_values_follow_conjugation() {
        let cfg = chm(2).unwrap();
        let sizes = neck_sizes(&cfg).unwrap();
        let p = initial_params(&cfg, &sizes, 0.05, None).unwrap();
        assert_eq!(p.a[1], cfg.positions(2).to_vec());
        assert_eq!(p.b[1][0], cfg.positions(2)[0].conj());
        assert_eq!(p.r, vec![vec![1.0], vec![1.0, 1.0]]);
        assert_abs_diff_eq!(p.epsilon, 0.3, epsilon = 1e-15);
    }

    #[test]
    fn t_at_epsilon_is_rejected() {
        let cfg = chm(2).unwrap();
        let sizes = neck_sizes(&cfg).unwrap();
        let err = initial_params(&cfg, &sizes, 0.3, Some(0.3)).unwrap_err();
        assert!(matches!(err, MaxfaceError::DisksOverlap(_)));
    }

    #[test]
    fn even_level_gauss_map_is_reciprocal() {
        let s = costa(0.05);
        for z in [C64::new(0.3, 0.7), C64::new(-2.0, 0.1)] {
            let prod = s.gauss_map(2, z).unwrap() * s.t() * s.level_gauss(2, z).unwrap();
            assert_abs_diff_eq!((prod - 1.0).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn gauss_map_has_unit_modulus_on_the_waist() {
        let s = costa(0.05);
        for k in 0..8 {
            let v = C64::from_polar(0.05, k as f64 * PI / 4.0 + 0.1);
            let z = s.chart_to_level(NeckId::new(2, 1), Side::Lower, v).unwrap();
            assert_abs_diff_eq!(s.gauss_map(2, z).unwrap().norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn charts_agree_across_the_seam() {
        let s = costa(0.05);
        let neck = NeckId::new(1, 1);
        let v = C64::from_polar(0.1, 0.4);
        let w = s.t() * s.t() / v;
        // The same point seen from both levels has matching dh in the v coordinate.
        let (_, lower) = s.weierstrass_in_chart(neck, Side::Lower, v).unwrap();
        let (_, upper) = s.weierstrass_in_chart(neck, Side::Upper, w).unwrap();
        let dw_dv = -w / v;
        let diff = (lower.0[2] - upper.0[2] * dw_dv).norm();
        assert!(diff < 1e-9 * lower.0[2].norm(), "dh mismatch {diff}");
        // g on level 1 is t g_1 = t/v; on level 2 it is 1/(t g_2) = w/t = t/v.
        let z1 = s.chart_to_level(neck, Side::Lower, v).unwrap();
        let z2 = s.chart_to_level(neck, Side::Upper, w).unwrap();
        let g1 = s.gauss_map(1, z1).unwrap();
        let g2 = s.gauss_map(2, z2).unwrap();
        assert_abs_diff_eq!((g1 - g2).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn residue_of_dh_is_minus_r() {
        let s = costa(0.05);
        let q = s.node(NeckId::new(2, 1), Side::Lower).unwrap().position;
        let rho = 0.05;
        let v = crate::quad::periodic_trapezoid(
            &|th: f64| {
                let e = C64::from_polar(rho, th);
                s.height_diff(2, q + e).unwrap() * C64::i() * e
            },
            1e-13,
        );
        assert_abs_diff_eq!((v / (2.0 * PI * C64::i()) + 1.0).norm(), 0.0, epsilon = 1e-11);
    }

    #[test]
    fn catenoid_governing_function_is_real() {
        let cfg = catenoid();
        let s = Surface::new(initial_params(&cfg, &neck_sizes(&cfg).unwrap(), 0.1, None).unwrap()).unwrap();
        for k in 0..12 {
            let a = s.governing_a(NeckId::new(1, 1), k as f64 * 0.5).unwrap();
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(a.re, -1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn costa_governing_function_tends_to_minus_c() {
        for t in [0.02, 0.01] {
            let s = costa(t);
            let worst = (0..32)
                .map(|k| (s.governing_a(NeckId::new(1, 1), k as f64 * PI / 16.0).unwrap() + 1.0).norm())
                .fold(0.0, f64::max);
            assert!(worst < 40.0 * t * t, "t = {t}: {worst}");
        }
    }

    #[test]
    fn limit_height_diff_matches_single_term() {
        let cfg = catenoid();
        let p = initial_params(&cfg, &neck_sizes(&cfg).unwrap(), 0.1, None).unwrap();
        assert_eq!(height_diff_limit(&p, 1, C64::new(1.0, 0.0)).unwrap(), C64::new(-1.0, 0.0));
    }
}
