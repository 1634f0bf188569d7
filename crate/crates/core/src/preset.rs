//! Preset balanced configurations: catenoid, Costa–Hoffman–Meeks, dihedral
//! stacks and configurations assembled from polynomial roots.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::balance::polynomial_check;
use crate::config::{max_force, neck_sizes, Configuration};
use crate::{MaxfaceError, Result, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Preset {
    Catenoid,
    Chm { m: usize },
    /// `sizes` are `c_2..c_{L-1}`; `c_1` is fixed by `W = 0`.
    Dihedral { levels: usize, m: usize, sizes: Vec<f64> },
    Polynomial { roots: Vec<Vec<C64>>, sizes: Vec<f64> },
}

pub fn preset(kind: &Preset) -> Result<Configuration> {
    match kind {
        Preset::Catenoid => Ok(catenoid()),
        Preset::Chm { m } => chm(*m),
        Preset::Dihedral { levels, m, sizes } => Ok(dihedral(*levels, *m, sizes)?.config),
        Preset::Polynomial { roots, sizes } => polynomial(roots, sizes),
    }
}

pub fn catenoid() -> Configuration {
    Configuration::new(2, vec![vec![C64::new(0.0, 0.0)]], vec![-1.0, 1.0]).expect("catenoid data is valid")
}

/// The `m`-th roots of unity `e^{2πik/m}`, `k = 1..m`.
fn ring(m: usize, radius: f64, phase: f64) -> Vec<C64> {
    (1..=m).map(|k| C64::from_polar(radius, (phase + 2.0 * PI * k as f64) / m as f64)).collect()
}

/// Costa–Hoffman–Meeks configuration; `m = 2` is the Costa surface.
pub fn chm(m: usize) -> Result<Configuration> {
    if m < 2 {
        return Err(MaxfaceError::InvalidInput(format!("chm needs m >= 2, got {m}")));
    }
    let m_f = m as f64;
    let mut cfg = Configuration::new(3, vec![vec![C64::new(0.0, 0.0)], ring(m, 1.0, 0.0)], vec![1.0 - m_f, -1.0, m_f])?;
    // Snap the last ring point to exactly 1.
    let mut necks = cfg.all_positions().to_vec();
    necks[1][m - 1] = C64::new(1.0, 0.0);
    cfg = cfg.with_positions(necks)?;
    Ok(cfg)
}

/// Default sizes `c_2..c_{L-1}` for the dihedral family.
pub fn dihedral_default_sizes(levels: usize) -> Vec<f64> {
    (2..levels).map(|l| 1.0 - 0.2 * (l - 2) as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DihedralSolution {
    pub config: Configuration,
    /// `s_l` with ring `l` equal to `{z : z^m = s_l}`, for `l = 2..L-1`.
    pub ring_values: Vec<f64>,
    pub iterations: usize,
    /// Genus-versus-embeddability hint: `m > 2(L-2)`.
    pub embeddable_hint: bool,
}

/// Dihedral configuration: one neck at the origin on level 1 and rings of `m`
/// necks above, each ring aligned or staggered with its neighbours.
pub fn dihedral(levels: usize, m: usize, sizes: &[f64]) -> Result<DihedralSolution> {
    if levels < 3 || m < 2 {
        return Err(MaxfaceError::InvalidInput(format!("dihedral needs L >= 3 and m >= 2, got L={levels}, m={m}")));
    }
    if sizes.len() != levels - 2 {
        return Err(MaxfaceError::InvalidInput(format!("dihedral needs {} sizes, got {}", levels - 2, sizes.len())));
    }
    if sizes[0] == 0.0 {
        return Err(MaxfaceError::InvalidInput("c_2 must be non-zero".into()));
    }
    let mf = m as f64;
    // c indexed by level, c[0] = c_1 placeholder, c[L-1] = 0.
    let mut c = vec![0.0; levels + 1];
    for (i, v) in sizes.iter().enumerate() {
        c[i + 2] = *v;
    }
    let sq: f64 = (2..levels).map(|l| c[l] * c[l]).sum();
    let cross: f64 = (2..levels).map(|l| c[l] * c[l + 1]).sum();
    c[1] = ((mf - 1.0) * sq - mf * cross) / c[2];

    // Unknown s_3..s_{L-1}; s_2 = 1.
    let nu = levels - 3;
    let residual = |s_free: &[f64]| -> Vec<f64> {
        let mut s = vec![0.0; levels];
        s[2] = 1.0;
        s[3..levels].copy_from_slice(s_free);
        (3..levels)
            .map(|l| {
                let mut g = c[l] * (mf - 1.0) - mf * c[l - 1] * s[l] / (s[l] - s[l - 1]);
                if l + 1 < levels {
                    g -= mf * c[l + 1] * s[l] / (s[l] - s[l + 1]);
                }
                g
            })
            .collect()
    };
    let mut x: Vec<f64> = Vec::with_capacity(nu);
    let mut prev = 1.0;
    for _ in 0..nu {
        prev *= -1.5;
        x.push(prev);
    }
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut iterations = 0;
    let mut f = residual(&x);
    while nu > 0 && norm(&f) > 1e-14 {
        if iterations >= 100 {
            return Err(MaxfaceError::NoConvergence { iterations, residual: norm(&f) });
        }
        iterations += 1;
        let mut jac = nalgebra::DMatrix::<f64>::zeros(nu, nu);
        for j in 0..nu {
            let h = 1e-7 * x[j].abs().max(1.0);
            let mut xp = x.clone();
            xp[j] += h;
            let mut xm = x.clone();
            xm[j] -= h;
            let (fp, fm) = (residual(&xp), residual(&xm));
            for i in 0..nu {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let rhs = nalgebra::DVector::from_iterator(nu, f.iter().map(|v| -v));
        let step = jac
            .lu()
            .solve(&rhs)
            .ok_or(MaxfaceError::SingularJacobian { rank: 0, expected: nu })?;
        let mut lambda = 1.0;
        let current = norm(&f);
        let mut moved = false;
        for _ in 0..=20 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, d)| a + lambda * d).collect();
            let ft = residual(&trial);
            if ft.iter().all(|v| v.is_finite()) && norm(&ft) < current {
                x = trial;
                f = ft;
                moved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !moved {
            return Err(MaxfaceError::NoConvergence { iterations, residual: current });
        }
    }
    let mut s = vec![1.0];
    s.extend_from_slice(&x);
    let mut necks = vec![vec![C64::new(0.0, 0.0)]];
    for sl in &s {
        let phase = if *sl < 0.0 { PI } else { 0.0 };
        necks.push(ring(m, sl.abs().powf(1.0 / mf), phase));
    }
    let config = Configuration::from_sizes(necks, &c[1..levels])?;
    let sizes_out = neck_sizes(&config)?;
    let res = max_force(&config, &sizes_out);
    if res > 1e-10 {
        return Err(MaxfaceError::NoConvergence { iterations, residual: res });
    }
    Ok(DihedralSolution { config, ring_values: s, iterations, embeddable_hint: m > 2 * (levels - 2) })
}

/// Configuration with the given roots as neck positions, checked for balance
/// through the polynomial identity.
pub fn polynomial(roots: &[Vec<C64>], sizes: &[f64]) -> Result<Configuration> {
    let config = Configuration::from_sizes(roots.to_vec(), sizes)?;
    let scale = config.scale();
    let csum: f64 = sizes.iter().map(|c| c.abs()).sum::<f64>().max(1.0);
    let n_total = roots.iter().map(Vec::len).sum::<usize>() as i32;
    let residual = polynomial_check(roots, sizes)?;
    if residual > 1e-9 * csum * csum * scale.powi(n_total) {
        return Err(MaxfaceError::NotBalanced { residual });
    }
    Ok(config)
}
