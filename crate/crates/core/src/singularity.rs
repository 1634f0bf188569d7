//! Singularity prediction from configuration data, symmetry detection and
//! classification of singular points from samples of the governing function.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::config::{bisect, r_function, residue_scale, Configuration, NeckId, NeckSizes, TrigPolynomial};
use crate::{MaxfaceError, Result, C64};

/// Largest order searched for a non-vanishing residue function.
pub const R_MAX: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationalOrder {
    Finite(usize),
    /// Every neck sits on the rotation axis.
    Unbounded,
}

impl RotationalOrder {
    pub fn admits(&self, m: usize) -> bool {
        match self {
            RotationalOrder::Finite(r) => *r == m,
            RotationalOrder::Unbounded => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryEvidence {
    pub neck: NeckId,
    pub rotational_order: RotationalOrder,
    /// Axes of vertical mirror planes through the neck, in `[0, π)`.
    pub vertical_mirror_angles: Vec<f64>,
    pub horizontal_mirror: bool,
}

fn set_equal(a: &[C64], b: &[C64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    'outer: for p in a {
        for (j, q) in b.iter().enumerate() {
            if !used[j] && (p - q).norm() <= tol {
                used[j] = true;
                continue 'outer;
            }
        }
        return false;
    }
    true
}

fn wrap_pi(x: f64) -> f64 {
    let r = x.rem_euclid(PI);
    if PI - r < 1e-12 {
        0.0
    } else {
        r
    }
}

pub fn detect_symmetries(config: &Configuration, sizes: &NeckSizes, neck: NeckId) -> SymmetryEvidence {
    let tol = 1e-10 * config.scale();
    let center = config.position(neck);
    let levels: Vec<Vec<C64>> = config.all_positions().iter().map(|lv| lv.iter().map(|p| p - center).collect()).collect();
    let maps_to_itself = |map: &dyn Fn(C64) -> C64| {
        levels.iter().all(|lv| {
            let image: Vec<C64> = lv.iter().map(|z| map(*z)).collect();
            set_equal(&image, lv, tol)
        })
    };

    let all_on_axis = levels.iter().flatten().all(|z| z.norm() <= tol);
    let rotational_order = if all_on_axis {
        RotationalOrder::Unbounded
    } else {
        let n_max = config.neck_counts().into_iter().max().unwrap_or(1);
        let r = (1..=n_max)
            .rev()
            .find(|r| {
                let rot = C64::from_polar(1.0, 2.0 * PI / *r as f64);
                maps_to_itself(&|z| rot * z)
            })
            .unwrap_or(1);
        RotationalOrder::Finite(r)
    };

    let mut vertical = Vec::new();
    if !all_on_axis {
        let mut candidates = Vec::new();
        for lv in &levels {
            for (i, z) in lv.iter().enumerate() {
                if z.norm() <= tol {
                    continue;
                }
                candidates.push(wrap_pi(z.arg()));
                for w in &lv[i + 1..] {
                    if w.norm() > tol && (z.norm() - w.norm()).abs() <= tol {
                        candidates.push(wrap_pi(0.5 * (z.arg() + w.arg())));
                    }
                }
            }
        }
        candidates.sort_by(f64::total_cmp);
        candidates.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        for phi in candidates {
            let rot = C64::from_polar(1.0, 2.0 * phi);
            if maps_to_itself(&|z| rot * z.conj()) && !vertical.iter().any(|v: &f64| (v - phi).abs() < 1e-9) {
                vertical.push(phi);
            }
        }
    }

    let horizontal_mirror = horizontal_mirror(config, sizes, neck, tol);
    SymmetryEvidence { neck, rotational_order, vertical_mirror_angles: vertical, horizontal_mirror }
}

/// Level-reversing symmetry through a neck on the middle level.
fn horizontal_mirror(config: &Configuration, sizes: &NeckSizes, neck: NeckId, tol: f64) -> bool {
    let big_l = config.levels();
    if 2 * neck.level != big_l {
        return false;
    }
    let q = config.growth();
    let qtol = 1e-12 * q.iter().map(|v| v.abs()).fold(1.0, f64::max);
    for l in 1..big_l {
        let mirror = big_l - l;
        if config.neck_count(l) != config.neck_count(mirror) {
            return false;
        }
        if (sizes.get(l) - sizes.get(mirror)).abs() > qtol {
            return false;
        }
        if !set_equal(config.positions(l), config.positions(mirror), tol) {
            return false;
        }
    }
    (0..big_l).all(|i| (q[i] + q[big_l - 1 - i]).abs() <= qtol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionKind {
    ConeLike,
    Discrete,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeClaim {
    Swallowtail,
    Unverified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Justification {
    GenericR1,
    RotationalSymmetry,
    HorizontalMirror,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityPrediction {
    pub neck: NeckId,
    pub kind: PredictionKind,
    /// Smallest `m` with `R^{(m-1)}` not identically zero.
    pub leading_order: Option<usize>,
    pub count: usize,
    pub angles: Vec<f64>,
    /// Coefficient of the leading residue function at frequency `m`.
    pub leading_coefficient: Option<C64>,
    pub type_claim: Option<TypeClaim>,
    pub justification: Justification,
    pub symmetry: SymmetryEvidence,
}

/// First residue function that does not vanish, searching `r = 1..=R_MAX`.
pub fn leading_residue(config: &Configuration, sizes: &NeckSizes, neck: NeckId) -> Option<(usize, TrigPolynomial)> {
    (1..=R_MAX).find_map(|r| {
        let poly = r_function(config, sizes, neck, r);
        let tol = 1e-10 * residue_scale(config, sizes, r + 2);
        (!poly.is_zero(tol)).then_some((r, poly))
    })
}

pub fn predict(config: &Configuration, sizes: &NeckSizes, neck: NeckId) -> SingularityPrediction {
    let symmetry = detect_symmetries(config, sizes, neck);
    let mut out = SingularityPrediction {
        neck,
        kind: PredictionKind::Undetermined,
        leading_order: None,
        count: 0,
        angles: Vec::new(),
        leading_coefficient: None,
        type_claim: None,
        justification: Justification::None,
        symmetry: symmetry.clone(),
    };
    if symmetry.horizontal_mirror {
        out.kind = PredictionKind::ConeLike;
        out.justification = Justification::HorizontalMirror;
        return out;
    }
    if let Some((r, poly)) = leading_residue(config, sizes, neck) {
        let m = r + 1;
        out.kind = PredictionKind::Discrete;
        out.leading_order = Some(m);
        out.count = 2 * m;
        out.angles = poly.zeros();
        out.leading_coefficient = Some(poly.coefficient(m as u32));
        let (claim, why) = if m == 2 {
            (TypeClaim::Swallowtail, Justification::GenericR1)
        } else if symmetry.rotational_order == RotationalOrder::Finite(m) {
            (TypeClaim::Swallowtail, Justification::RotationalSymmetry)
        } else {
            (TypeClaim::Unverified, Justification::None)
        };
        out.type_claim = Some(claim);
        out.justification = why;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    CuspidalEdge,
    Swallowtail,
    /// Generalized `A_k`; `k = 7` means no derivative up to order 4 was
    /// distinguishable from zero.
    GeneralizedA(u32),
    DegenerateFrontViolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularPoint {
    pub theta: f64,
    pub class: PointClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteTClassification {
    pub theta_grid: Vec<f64>,
    pub values: Vec<C64>,
    /// Non-cuspidal points and front violations, sorted by angle.
    pub points: Vec<SingularPoint>,
    /// Class of every grid sample.
    pub grid_classes: Vec<PointClass>,
    pub cone_like: bool,
}

impl FiniteTClassification {
    /// Angles where `Im 𝒜` vanishes.
    pub fn zero_angles(&self) -> Vec<f64> {
        self.points
            .iter()
            .filter(|p| matches!(p.class, PointClass::Swallowtail | PointClass::GeneralizedA(_)))
            .map(|p| p.theta)
            .collect()
    }
}

/// Minimum number of samples accepted by [`classify_at_t`].
pub const MIN_SAMPLES: usize = 512;
const FD_STEP: f64 = 1e-3;

fn central_difference<F: Fn(f64) -> f64>(f: &F, x: f64, order: u32, h: f64) -> f64 {
    match order {
        1 => (f(x + h) - f(x - h)) / (2.0 * h),
        2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
        3 => (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h.powi(3)),
        4 => (f(x + 2.0 * h) - 4.0 * f(x + h) + 6.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h)) / h.powi(4),
        _ => unreachable!("derivative ladder stops at order 4"),
    }
}

/// Richardson-extrapolated central difference.
pub fn derivative<F: Fn(f64) -> f64>(f: &F, x: f64, order: u32) -> f64 {
    let coarse = central_difference(f, x, order, FD_STEP);
    let fine = central_difference(f, x, order, 0.5 * FD_STEP);
    (4.0 * fine - coarse) / 3.0
}

/// Classifies singular points on one waist from samples of `𝒜` on a uniform
/// angle grid covering `[θ_0, θ_0 + 2π)`.
pub fn classify_at_t(
    theta_grid: &[f64],
    values: &[C64],
    evaluator: &(dyn Fn(f64) -> C64 + Sync),
    tol: f64,
) -> Result<FiniteTClassification> {
    let n = theta_grid.len();
    if n < MIN_SAMPLES || values.len() != n {
        return Err(MaxfaceError::InvalidInput(format!(
            "need at least {MIN_SAMPLES} matching samples, got {n} angles and {} values",
            values.len()
        )));
    }
    let max_abs = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let max_im = values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    let cone_like = max_im <= tol * max_abs;
    let degenerate = |v: C64| v.re.abs() <= tol * max_abs;

    let mut grid_classes = Vec::with_capacity(n);
    let mut points = Vec::new();
    for (th, v) in theta_grid.iter().zip(values) {
        if degenerate(*v) {
            grid_classes.push(PointClass::DegenerateFrontViolation);
            points.push(SingularPoint { theta: *th, class: PointClass::DegenerateFrontViolation });
        } else if cone_like || v.im == 0.0 {
            grid_classes.push(PointClass::GeneralizedA(7));
        } else {
            grid_classes.push(PointClass::CuspidalEdge);
        }
    }
    if !cone_like {
        let im = |th: f64| evaluator(th).im;
        let period = 2.0 * PI;
        let threshold = 1e-4 * max_im;
        for i in 0..n {
            let a = theta_grid[i];
            let b = if i + 1 < n { theta_grid[i + 1] } else { theta_grid[0] + period };
            let (fa, fb) = (values[i].im, values[(i + 1) % n].im);
            let root = if fa == 0.0 {
                Some(a)
            } else if fb != 0.0 && fa.signum() != fb.signum() {
                Some(bisect(&im, a, b, fa, 1e-12))
            } else {
                let mid = im(0.5 * (a + b));
                if fb != 0.0 && mid != 0.0 && mid.signum() != fa.signum() {
                    return Err(MaxfaceError::GridTooCoarse(format!(
                        "two zeros of Im A between {a:.6} and {b:.6}"
                    )));
                }
                None
            };
            let Some(theta) = root else { continue };
            if degenerate(evaluator(theta)) {
                points.push(SingularPoint { theta, class: PointClass::DegenerateFrontViolation });
                continue;
            }
            let class = (1..=4u32)
                .find(|k| derivative(&im, theta, *k).abs() > threshold)
                .map(|k| if k == 1 { PointClass::Swallowtail } else { PointClass::GeneralizedA(k + 2) })
                .unwrap_or(PointClass::GeneralizedA(7));
            points.push(SingularPoint { theta: theta.rem_euclid(period), class });
        }
    }
    points.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    Ok(FiniteTClassification { theta_grid: theta_grid.to_vec(), values: values.to_vec(), points, grid_classes, cone_like })
}

/// Uniform grid of `n` angles on `[0, 2π)` with a small offset so that
/// symmetric zeros do not sit on grid nodes.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    let h = 2.0 * PI / n as f64;
    (0..n).map(|i| (i as f64 + 0.382_683_432_365_089_8) * h).collect()
}

/// Waist angles fixed by the mirrors, in the waist's own angle coordinate.
///
/// On odd levels the waist coordinate sees positions through a conjugation,
/// so a mirror at physical angle `φ` fixes `-φ` and `π - φ`; on even levels
/// it fixes `φ` and `φ + π`.
pub fn mirror_fixed_angles(evidence: &SymmetryEvidence) -> Vec<f64> {
    let mut out = Vec::new();
    for phi in &evidence.vertical_mirror_angles {
        let base = if evidence.neck.level % 2 == 1 { -phi } else { *phi };
        out.push(base.rem_euclid(2.0 * PI));
        out.push((base + PI).rem_euclid(2.0 * PI));
    }
    out.sort_by(f64::total_cmp);
    out
}

/// True iff every mirror-fixed waist angle is a zero of `Im 𝒜`.
pub fn vertical_mirror_noncuspidal_check(evidence: &SymmetryEvidence, classification: &FiniteTClassification) -> Result<bool> {
    if evidence.vertical_mirror_angles.is_empty() {
        return Err(MaxfaceError::NoMirror);
    }
    let tol = 2.0 * 2.0 * PI / classification.theta_grid.len().max(1) as f64;
    let zeros = classification.zero_angles();
    let circ = |a: f64, b: f64| {
        let d = (a - b).rem_euclid(2.0 * PI);
        d.min(2.0 * PI - d)
    };
    Ok(mirror_fixed_angles(evidence).iter().all(|f| zeros.iter().any(|z| circ(*f, *z) <= tol)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::neck_sizes;
    use crate::preset::{catenoid, chm};

    #[test]
    fn chm4_center_symmetry() {
        let cfg = chm(4).unwrap();
        let s = neck_sizes(&cfg).unwrap();
        let ev = detect_symmetries(&cfg, &s, NeckId::new(1, 1));
        assert_eq!(ev.rotational_order, RotationalOrder::Finite(4));
        assert_eq!(ev.vertical_mirror_angles.len(), 4);
        assert!(!ev.horizontal_mirror);
    }

    #[test]
    fn catenoid_is_cone_like() {
        let cfg = catenoid();
        let s = neck_sizes(&cfg).unwrap();
        let ev = detect_symmetries(&cfg, &s, NeckId::new(1, 1));
        assert_eq!(ev.rotational_order, RotationalOrder::Unbounded);
        assert!(ev.horizontal_mirror);
        assert_eq!(predict(&cfg, &s, NeckId::new(1, 1)).kind, PredictionKind::ConeLike);
    }

    #[test]
    fn costa_prediction() {
        let cfg = chm(2).unwrap();
        let s = neck_sizes(&cfg).unwrap();
        let p = predict(&cfg, &s, NeckId::new(1, 1));
        assert_eq!(p.kind, PredictionKind::Discrete);
        assert_eq!((p.leading_order, p.count), (Some(2), 4));
        assert_eq!(p.type_claim, Some(TypeClaim::Swallowtail));
    }

    #[test]
    fn synthetic_sine_gives_four_swallowtails() {
        let eval = |th: f64| C64::new(-1.0, 1e-3 * (2.0 * th).sin());
        let grid = uniform_grid(512);
        let vals: Vec<C64> = grid.iter().map(|t| eval(*t)).collect();
        let out = classify_at_t(&grid, &vals, &eval, 1e-8).unwrap();
        assert!(!out.cone_like);
        assert_eq!(out.points.len(), 4);
        for (p, want) in out.points.iter().zip([0.0, PI / 2.0, PI, 1.5 * PI]) {
            assert_eq!(p.class, PointClass::Swallowtail);
            assert!((p.theta - want).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_is_cone_like() {
        let eval = |_: f64| C64::new(-2.0, 0.0);
        let grid = uniform_grid(512);
        let vals: Vec<C64> = grid.iter().map(|t| eval(*t)).collect();
        let out = classify_at_t(&grid, &vals, &eval, 1e-8).unwrap();
        assert!(out.cone_like && out.points.is_empty());
    }

    #[test]
    fn cubic_tangency_is_a5() {
        // Im vanishes to third order at π/2.
        let eval = |th: f64| C64::new(-1.0, (th - PI / 2.0).powi(3));
        let grid = uniform_grid(512);
        let vals: Vec<C64> = grid.iter().map(|t| eval(*t)).collect();
        let out = classify_at_t(&grid, &vals, &eval, 1e-8).unwrap();
        let at = out.points.iter().find(|p| (p.theta - PI / 2.0).abs() < 1e-3).unwrap();
        assert_eq!(at.class, PointClass::GeneralizedA(5));
    }

    #[test]
    fn close_zero_pair_is_too_coarse() {
        let eval = |th: f64| C64::new(-1.0, (th - 1.0) * (th - 1.001) + 1e-9);
        let grid: Vec<f64> = (0..512).map(|i| 1.0005 - PI / 512.0 + 2.0 * PI * i as f64 / 512.0).collect();
        let vals: Vec<C64> = grid.iter().map(|t| eval(*t)).collect();
        assert!(matches!(classify_at_t(&grid, &vals, &eval, 1e-8), Err(MaxfaceError::GridTooCoarse(_))));
    }

    #[test]
    fn mirror_check_needs_a_mirror() {
        let ev = SymmetryEvidence {
            neck: NeckId::new(1, 1),
            rotational_order: RotationalOrder::Finite(1),
            vertical_mirror_angles: vec![],
            horizontal_mirror: false,
        };
        let eval = |th: f64| C64::new(-1.0, th.sin());
        let grid = uniform_grid(512);
        let vals: Vec<C64> = grid.iter().map(|t| eval(*t)).collect();
        let cls = classify_at_t(&grid, &vals, &eval, 1e-8).unwrap();
        assert!(matches!(vertical_mirror_noncuspidal_check(&ev, &cls), Err(MaxfaceError::NoMirror)));
        let ev = SymmetryEvidence { vertical_mirror_angles: vec![0.0], ..ev };
        assert!(vertical_mirror_noncuspidal_check(&ev, &cls).unwrap());
    }
}
