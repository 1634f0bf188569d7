//! Damped Newton (Levenberg–Marquardt) on the stacked divisor and period
//! defects, with finite-difference Jacobians.
//!
//! Free variables are the node positions, modulo the gauge: the first two
//! `a` positions and `r_{1,1}` are held fixed and `b_{l,1} = conj(a_{l,1})`.
//! The end residues follow the neck residues, and the Gauss-map coefficients
//! follow everything else through [`solve_divisor`].

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::divisor::{divisor_defect, solve_divisor};
use super::immerse::SurfaceAtlas;
use super::periods::{period_defect, Cycle};
use super::{Surface, SurfaceParams};
use crate::{MaxfaceError, Result, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineOutcome {
    pub params: SurfaceParams,
    pub initial_defect: f64,
    pub final_defect: f64,
    pub steps: usize,
    /// Defect norm after each accepted step, starting with the initial one.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    A(usize, usize),
    B(usize, usize),
    Residue(usize, usize),
}

fn free_slots(params: &SurfaceParams) -> Vec<Slot> {
    let mut out = Vec::new();
    let mut fixed = 0;
    for (l, row) in params.a.iter().enumerate() {
        for k in 0..row.len() {
            if fixed < 2 {
                fixed += 1;
            } else {
                out.push(Slot::A(l, k));
            }
        }
    }
    for (l, row) in params.b.iter().enumerate() {
        for k in 1..row.len() {
            out.push(Slot::B(l, k));
        }
    }
    // r_{1,1} sets the scale.
    for (l, row) in params.r.iter().enumerate() {
        for k in 0..row.len() {
            if l + k > 0 {
                out.push(Slot::Residue(l, k));
            }
        }
    }
    out
}

fn apply(params: &SurfaceParams, slots: &[Slot], x: &[f64]) -> SurfaceParams {
    let mut p = params.clone();
    let mut i = 0;
    for slot in slots {
        match *slot {
            Slot::A(l, k) => {
                let z = C64::new(x[i], x[i + 1]);
                p.a[l][k] = z;
                if k == 0 {
                    p.b[l][0] = z.conj();
                }
                i += 2;
            }
            Slot::B(l, k) => {
                p.b[l][k] = C64::new(x[i], x[i + 1]);
                i += 2;
            }
            Slot::Residue(l, k) => {
                p.r[l][k] = x[i];
                i += 1;
            }
        }
    }
    for l in 1..=p.levels() {
        p.end_residues[l - 1] = p.implied_end_residue(l);
    }
    p
}

fn read(params: &SurfaceParams, slots: &[Slot]) -> Vec<f64> {
    let mut out = Vec::new();
    for s in slots {
        match *s {
            Slot::A(l, k) => out.extend([params.a[l][k].re, params.a[l][k].im]),
            Slot::B(l, k) => out.extend([params.b[l][k].re, params.b[l][k].im]),
            Slot::Residue(l, k) => out.push(params.r[l][k]),
        }
    }
    out
}

/// Divisor-projected parameters and the stacked residual vector.
fn residuals(params: &SurfaceParams, cycles: &[Cycle]) -> Result<(SurfaceParams, DVector<f64>)> {
    let p = solve_divisor(params, 60)?;
    let surface = Surface::new(p.clone())?;
    let atlas = SurfaceAtlas::new(&surface)?;
    let mut out = Vec::new();
    for d in divisor_defect(&surface)?.per_level {
        out.push(d.ok_or(MaxfaceError::NoConvergence { iterations: 0, residual: f64::INFINITY })?);
    }
    let periods = cycles.par_iter().map(|c| period_defect(&surface, &atlas, *c)).collect::<Result<Vec<_>>>()?;
    for (h, v) in periods {
        out.extend([h.re, h.im, v]);
    }
    Ok((p, DVector::from_vec(out)))
}

/// Runs up to `max_steps` damped Newton steps. Fails with `NoImprovement`
/// unless the defect norm strictly decreases; an input with no defect is
/// returned unchanged.
pub fn refine_params(params: &SurfaceParams, cycles: &[Cycle], max_steps: usize) -> Result<RefineOutcome> {
    let slots = free_slots(params);
    let (mut current, mut f) = residuals(params, cycles)?;
    let initial = f.norm();
    let mut history = vec![initial];
    if initial <= 1e-13 || slots.is_empty() {
        return Ok(RefineOutcome { params: params.clone(), initial_defect: initial, final_defect: initial, steps: 0, history });
    }
    let scale = params.a.iter().chain(&params.b).flatten().map(|z| z.norm()).fold(1.0, f64::max);
    let h = 1e-7 * scale;
    let mut x = read(&current, &slots);
    let mut lambda = 1e-3;
    let mut steps = 0;
    for _ in 0..max_steps {
        let columns = (0..x.len())
            .into_par_iter()
            .map(|j| {
                let mut xp = x.clone();
                xp[j] += h;
                residuals(&apply(&current, &slots, &xp), cycles).map(|(_, fp)| (fp - &f) / h)
            })
            .collect::<Result<Vec<_>>>()?;
        let jac = DMatrix::from_columns(&columns);
        if jac.iter().all(|v| *v == 0.0 || !v.is_finite()) {
            return Err(MaxfaceError::SingularJacobian { rank: 0, expected: x.len() });
        }
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &f;
        let floor = 1e-12 * jtj.diagonal().max();
        let mut accepted = false;
        for _ in 0..12 {
            let mut damped = jtj.clone();
            for i in 0..x.len() {
                damped[(i, i)] += lambda * jtj[(i, i)].max(floor);
            }
            let Ok(delta) = damped.svd(true, true).solve(&(-&grad), 1e-14) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
            match residuals(&apply(&current, &slots, &trial), cycles) {
                Ok((p, ft)) if ft.norm() < f.norm() => {
                    current = p;
                    f = ft;
                    x = trial;
                    lambda = (lambda / 3.0).max(1e-9);
                    accepted = true;
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if !accepted {
            break;
        }
        steps += 1;
        history.push(f.norm());
    }
    let final_defect = f.norm();
    if final_defect < initial {
        Ok(RefineOutcome { params: current, initial_defect: initial, final_defect, steps, history })
    } else {
        Err(MaxfaceError::NoImprovement { initial, best: final_defect })
    }
}

#[cfg(test)]
mod tests {
    use super::super::{all_cycles, initial_params};
    use super::*;
    use crate::config::neck_sizes;
    use crate::preset::{catenoid, chm};

    #[test]
    fn gauge_leaves_two_positions_fixed() {
        let cfg = chm(2).unwrap();
        let p = initial_params(&cfg, &neck_sizes(&cfg).unwrap(), 0.05, None).unwrap();
        let slots = free_slots(&p);
        assert_eq!(slots.len(), 4);
        let x = read(&p, &slots);
        assert_eq!(apply(&p, &slots, &x), p);
    }

    #[test]
    fn catenoid_is_returned_unchanged() {
        let cfg = catenoid();
        let p = initial_params(&cfg, &neck_sizes(&cfg).unwrap(), 0.1, None).unwrap();
        let out = refine_params(&p, &all_cycles(&p), 3).unwrap();
        assert_eq!(out.steps, 0);
        assert_eq!(out.params, p);
    }
}
