//! Zeros of `g_l` against zeros of `dh` on each level.

use nalgebra::{DMatrix, Schur};
use serde::{Deserialize, Serialize};

use super::{Node, Surface, SurfaceParams};
use crate::quad::periodic_trapezoid;
use crate::{MaxfaceError, Result, C64};

/// Divisor mismatch per level; `None` marks a count mismatch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivisorReport {
    pub per_level: Vec<Option<f64>>,
}

impl DivisorReport {
    /// Largest mismatch, infinite if any level failed to match.
    pub fn max(&self) -> f64 {
        self.per_level.iter().map(|d| d.unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
    }
}

pub(super) fn poly_mul_linear(p: &[C64], root: C64) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); p.len() + 1];
    for (i, c) in p.iter().enumerate() {
        out[i + 1] += c;
        out[i] -= root * c;
    }
    out
}

/// Roots of a polynomial given by ascending coefficients.
pub(super) fn poly_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let top = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut deg = coeffs.len().saturating_sub(1);
    while deg > 0 && coeffs[deg].norm() <= 1e-12 * top {
        deg -= 1;
    }
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    let mut comp = DMatrix::<C64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -coeffs[i] / lead;
    }
    let schur = Schur::try_new(comp, 1e-15, 10_000).ok_or(MaxfaceError::NoConvergence { iterations: 10_000, residual: f64::NAN })?;
    let vals = schur.eigenvalues().ok_or(MaxfaceError::NoConvergence { iterations: 0, residual: f64::NAN })?;
    Ok(vals.iter().copied().collect())
}

fn newton<F: Fn(C64) -> Result<(C64, C64)>>(f: F, start: C64, scale: f64) -> Option<C64> {
    let mut z = start;
    for _ in 0..80 {
        let (v, d) = f(z).ok()?;
        let step = v / d;
        if !step.is_finite() {
            return None;
        }
        z -= step;
        if step.norm() <= 1e-14 * scale {
            return Some(z);
        }
    }
    None
}

/// Smallest `|1/g|` over the critical points of `g = Σ γ/(z-q)`; the local
/// coordinate `1/g` is injective on the disk of that radius around each node.
pub(super) fn critical_radius(nodes: &[Node]) -> Result<f64> {
    if nodes.len() < 2 {
        return Ok(f64::INFINITY);
    }
    let mut numerator = vec![C64::new(0.0, 0.0); 2 * nodes.len() - 1];
    for (i, n) in nodes.iter().enumerate() {
        let mut p = vec![-n.coefficient];
        for (j, m) in nodes.iter().enumerate() {
            if i != j {
                p = poly_mul_linear(&p, m.position);
                p = poly_mul_linear(&p, m.position);
            }
        }
        for (acc, c) in numerator.iter_mut().zip(p) {
            *acc += c;
        }
    }
    let mut out = f64::INFINITY;
    for c in poly_roots(&numerator)? {
        let g: C64 = nodes.iter().map(|n| n.coefficient / (c - n.position)).sum();
        let v = 1.0 / g.norm();
        if v.is_finite() {
            out = out.min(v);
        }
    }
    Ok(out)
}

/// Zeros of `g_l` on level `level`, polished by Newton's method.
pub fn level_zeros(surface: &Surface, level: usize) -> Result<Vec<C64>> {
    let nodes = surface.nodes(level);
    let mut numerator = vec![C64::new(0.0, 0.0); nodes.len()];
    for (i, n) in nodes.iter().enumerate() {
        let mut p = vec![n.coefficient];
        for (j, m) in nodes.iter().enumerate() {
            if i != j {
                p = poly_mul_linear(&p, m.position);
            }
        }
        for (acc, c) in numerator.iter_mut().zip(p) {
            *acc += c;
        }
    }
    let scale = surface.scale();
    let g = |z: C64| gauss_value(surface, level, z);
    let roots = poly_roots(&numerator)?;
    Ok(roots.into_iter().map(|r| newton(g, r, scale.max(r.norm())).unwrap_or(r)).collect())
}

impl Surface {
    /// `d²h/dz²` on a level.
    pub fn height_diff_derivative(&self, level: usize, z: C64) -> Result<C64> {
        let mut out = C64::new(0.0, 0.0);
        for (n, coeffs) in self.nodes(level).iter().zip(self.laurent_coefficients(level)) {
            let u = z - n.position;
            if u.norm() <= 1e-300 {
                return Err(MaxfaceError::PoleEvaluation { level, z });
            }
            let w = 1.0 / u;
            let mut p = w * w;
            for (j, x) in coeffs.iter().enumerate() {
                out -= (j + 1) as f64 * x * p;
                p *= w;
            }
        }
        Ok(out)
    }
}

/// Nearly coincident zeros of `g_l` treated together; multiple zeros split
/// under rounding and are only meaningful through their symmetric functions.
#[derive(Debug, Clone)]
struct ZeroCluster {
    center: C64,
    radius: f64,
    size: usize,
}

fn zero_clusters(surface: &Surface, level: usize, zeros: &[C64]) -> Vec<ZeroCluster> {
    let merge = 0.1 * surface.scale();
    let mut groups: Vec<Vec<C64>> = Vec::new();
    for z in zeros {
        match groups.iter_mut().find(|g| g.iter().any(|w| (z - w).norm() < merge)) {
            Some(g) => g.push(*z),
            None => groups.push(vec![*z]),
        }
    }
    let centers: Vec<C64> = groups.iter().map(|g| g.iter().sum::<C64>() / g.len() as f64).collect();
    groups
        .iter()
        .zip(&centers)
        .enumerate()
        .map(|(i, (g, c))| {
            let mut radius = surface.scale();
            for n in surface.nodes(level) {
                radius = radius.min(0.4 * (c - n.position).norm());
            }
            for (j, d) in centers.iter().enumerate() {
                if i != j {
                    radius = radius.min(0.4 * (c - d).norm());
                }
            }
            ZeroCluster { center: *c, radius, size: g.len() }
        })
        .collect()
}

/// Power sums `Σ (ζ-c)^p`, `p = 0..=count`, over the zeros of `f` inside the
/// circle, from `f'/f` by the trapezoid rule.
fn power_sums<F: Fn(C64) -> Result<(C64, C64)>>(f: F, center: C64, radius: f64, count: usize) -> Result<Vec<C64>> {
    (0..=count)
        .map(|p| {
            let v = periodic_trapezoid(
                &|th: f64| {
                    let e = C64::from_polar(radius, th);
                    match f(center + e) {
                        Ok((v, d)) => e.powi(p as i32 + 1) * d / v,
                        Err(_) => C64::new(f64::NAN, 0.0),
                    }
                },
                1e-13 * radius.powi(p as i32).max(1e-300),
            ) / (2.0 * std::f64::consts::PI);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(MaxfaceError::PathThroughPole)
            }
        })
        .collect()
}

/// Elementary symmetric functions `e_0..e_m` from power sums `p_1..p_m`.
fn elementary(power: &[C64]) -> Vec<C64> {
    let m = power.len();
    let mut e = vec![C64::new(1.0, 0.0)];
    for k in 1..=m {
        let mut acc = C64::new(0.0, 0.0);
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[k - i] * power[i - 1];
        }
        e.push(acc / k as f64);
    }
    e
}

/// `Π (z - ζ)` over a cluster whose zeros have elementary functions `e` in `z - center`.
fn cluster_product(e: &[C64], center: C64, z: C64) -> C64 {
    let x = z - center;
    let m = e.len() - 1;
    (0..=m).fold(C64::new(0.0, 0.0), |acc, k| {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc + sign * e[k] * x.powi((m - k) as i32)
    })
}

fn gauss_value(surface: &Surface, level: usize, z: C64) -> Result<(C64, C64)> {
    let mut v = C64::new(0.0, 0.0);
    let mut d = C64::new(0.0, 0.0);
    for n in surface.nodes(level) {
        let u = z - n.position;
        v += n.coefficient / u;
        d -= n.coefficient / (u * u);
    }
    Ok((v, d))
}

fn height_value(surface: &Surface, level: usize, z: C64) -> Result<(C64, C64)> {
    Ok((surface.height_diff(level, z)?, surface.height_diff_derivative(level, z)?))
}

/// Net winding of `f` along a closed curve sampled by `curve(θ)`.
fn winding<C: Fn(f64) -> Result<C64>, F: Fn(C64) -> Result<C64>>(curve: C, f: F) -> Result<i64> {
    let mut n = 256;
    loop {
        let mut total = 0.0;
        let mut worst: f64 = 0.0;
        let mut prev = f(curve(0.0)?)?.arg();
        for i in 1..=n {
            let th = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let a = f(curve(th)?)?.arg();
            let mut d = a - prev;
            d -= 2.0 * std::f64::consts::PI * (d / (2.0 * std::f64::consts::PI)).round();
            worst = worst.max(d.abs());
            total += d;
            prev = a;
        }
        if worst < 0.5 || n >= 1 << 16 {
            return Ok((total / (2.0 * std::f64::consts::PI)).round() as i64);
        }
        n *= 2;
    }
}

/// Number of zeros of `dh/dz` in the level domain inside radius `radius`.
fn height_zero_count(surface: &Surface, level: usize, radius: f64) -> Result<i64> {
    let dh = |z: C64| surface.height_diff(level, z);
    let mut count = winding(|th| Ok(C64::from_polar(radius, th)), dh)?;
    for node in surface.nodes(level) {
        let eps = surface.chart_radius();
        let curve = |th: f64| surface.chart_to_level(node.neck, node.side, C64::from_polar(eps, th));
        count -= winding(curve, dh)?;
    }
    Ok(count)
}

/// Per cluster: the `(g, dh)` elementary functions of the zeros inside it.
/// `None` if the zero counts of `g_l` and `dh` disagree anywhere.
#[allow(clippy::type_complexity)]
fn matched_clusters(surface: &Surface, level: usize) -> Result<Option<Vec<(ZeroCluster, Vec<C64>, Vec<C64>)>>> {
    let zeros = level_zeros(surface, level)?;
    let radius = 4.0 * zeros.iter().map(|z| z.norm()).fold(surface.scale(), f64::max);
    if height_zero_count(surface, level, radius)? != zeros.len() as i64 {
        return Ok(None);
    }
    let mut out = Vec::new();
    for c in zero_clusters(surface, level, &zeros) {
        let pg = power_sums(|z| gauss_value(surface, level, z), c.center, c.radius, c.size)?;
        let ph = power_sums(|z| height_value(surface, level, z), c.center, c.radius, c.size)?;
        if (ph[0].re - c.size as f64).abs() > 0.25 || ph[0].im.abs() > 0.25 {
            return Ok(None);
        }
        let eg = elementary(&pg[1..]);
        let eh = elementary(&ph[1..]);
        out.push((c, eg, eh));
    }
    Ok(Some(out))
}

fn level_defect(surface: &Surface, level: usize) -> Result<Option<f64>> {
    let Some(clusters) = matched_clusters(surface, level)? else {
        return Ok(None);
    };
    // For a simple zero this is the distance between the two zeros.
    let mut worst: f64 = 0.0;
    for (c, eg, eh) in &clusters {
        for k in 1..=c.size {
            worst = worst.max((eg[k] - eh[k]).norm() / c.radius.powi(k as i32 - 1));
        }
    }
    Ok(Some(worst))
}

/// Distance between the zeros of `g_l` and the zeros of `dh` on every level.
pub fn divisor_defect(surface: &Surface) -> Result<DivisorReport> {
    let per_level = (1..=surface.levels()).map(|l| level_defect(surface, l)).collect::<Result<Vec<_>>>()?;
    Ok(DivisorReport { per_level })
}

/// Adjusts the Gauss-map coefficients so that `g_l` vanishes exactly where
/// `dh` does: `g_l = R_l Π(z-ζ)/Π(z-q)` with `ζ` the zeros of `dh`, iterated
/// to a fixed point. Levels with a vanishing end residue are left alone.
pub fn solve_divisor(params: &SurfaceParams, max_iter: usize) -> Result<SurfaceParams> {
    let mut p = params.clone();
    for iteration in 0..max_iter {
        let surface = Surface::new(p.clone())?;
        let mut change: f64 = 0.0;
        let mut next = p.clone();
        for level in 1..=p.levels() {
            let big_r = p.end_residues[level - 1];
            let nodes = surface.nodes(level);
            if big_r.abs() <= 1e-12 || nodes.len() < 2 {
                continue;
            }
            let clusters = matched_clusters(&surface, level)?
                .ok_or(MaxfaceError::NoConvergence { iterations: iteration, residual: f64::INFINITY })?;
            if clusters.iter().map(|c| c.0.size).sum::<usize>() != nodes.len() - 1 {
                continue;
            }
            for n in nodes {
                let mut gamma = C64::new(big_r, 0.0);
                for (c, _, eh) in &clusters {
                    gamma *= cluster_product(eh, c.center, n.position);
                }
                for m in nodes {
                    if m.position != n.position {
                        gamma /= n.position - m.position;
                    }
                }
                change = change.max((gamma - n.coefficient).norm());
                let k = n.neck.index - 1;
                match n.side {
                    super::Side::Lower => next.alpha[n.neck.level - 1][k] = gamma,
                    super::Side::Upper => next.beta[n.neck.level - 1][k] = gamma,
                }
            }
        }
        p = next;
        let size = p.alpha.iter().chain(&p.beta).flatten().map(|g| g.norm()).fold(1.0, f64::max);
        if change <= 1e-12 * size {
            return Ok(p);
        }
    }
    Err(MaxfaceError::NoConvergence { iterations: max_iter, residual: f64::NAN })
}
