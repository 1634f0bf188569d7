//! Balance solver: force Jacobian, gauge-fixed Newton iteration, rigidity,
//! the `Q ↦ W` rank test, the polynomial balance check and topology.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::{all_forces, closed_form_w, neck_sizes, Configuration, NeckId, NeckSizes};
use crate::{MaxfaceError, Result, C64};

/// Relative singular-value threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-8;

/// `∂F_{l,k}/∂p_{l',k'}` as a complex `N×N` matrix in level-major order.
pub fn balance_jacobian(config: &Configuration, sizes: &NeckSizes) -> DMatrix<C64> {
    let ids = config.neck_ids();
    let n = ids.len();
    let mut jac = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    // Each term a/(x - y) contributes -a/(x-y)^2 to ∂/∂x and +a/(x-y)^2 to ∂/∂y.
    let mut add = |row: usize, col_other: usize, a: f64, d: C64| {
        let v = a / (d * d);
        jac[(row, row)] -= v;
        jac[(row, col_other)] += v;
    };
    for (row, id) in ids.iter().enumerate() {
        let l = id.level;
        let p = config.position(*id);
        let cl = sizes.get(l);
        for (i, q) in config.positions(l).iter().enumerate() {
            if i + 1 != id.index {
                add(row, config.flat_index(NeckId::new(l, i + 1)), 2.0 * cl * cl, p - q);
            }
        }
        for (i, q) in config.positions(l + 1).iter().enumerate() {
            add(row, config.flat_index(NeckId::new(l + 1, i + 1)), -cl * sizes.get(l + 1), p - q);
        }
        if l > 1 {
            for (i, q) in config.positions(l - 1).iter().enumerate() {
                add(row, config.flat_index(NeckId::new(l - 1, i + 1)), -cl * sizes.get(l - 1), p - q);
            }
        }
    }
    jac
}

/// Pinned neck positions removing the translation and scaling freedom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeFixing {
    pub pinned: Vec<(NeckId, C64)>,
}

impl GaugeFixing {
    /// First neck of the lowest level plus the neck of largest modulus,
    /// both at their current positions.
    pub fn default_for(config: &Configuration) -> Self {
        let ids = config.neck_ids();
        let first = ids[0];
        let mut pinned = vec![(first, config.position(first))];
        if ids.len() > 1 {
            let mut best = ids[1];
            let mut best_d = -1.0;
            for id in &ids[1..] {
                let d = (config.position(*id) - config.position(first)).norm();
                if d > best_d {
                    best_d = d;
                    best = *id;
                }
            }
            pinned.push((best, config.position(best)));
        }
        GaugeFixing { pinned }
    }

    fn validate(&self, config: &Configuration) -> Result<()> {
        let need = config.total_necks().min(2);
        if self.pinned.len() != need {
            return Err(MaxfaceError::InvalidInput(format!(
                "gauge must pin {need} necks, got {}",
                self.pinned.len()
            )));
        }
        for (id, _) in &self.pinned {
            config.check_neck(*id)?;
        }
        if self.pinned.len() == 2 && self.pinned[0].0 == self.pinned[1].0 {
            return Err(MaxfaceError::InvalidInput("pinned necks must be distinct".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonOutcome {
    pub config: Configuration,
    pub iterations: usize,
    pub residual: f64,
}

/// Damped Gauss–Newton on the free neck positions.
pub fn newton_balance(initial: &Configuration, gauge: &GaugeFixing, max_iter: usize, tol: f64) -> Result<NewtonOutcome> {
    gauge.validate(initial)?;
    let sizes = neck_sizes(initial)?;
    let mut necks = initial.all_positions().to_vec();
    for (id, z) in &gauge.pinned {
        necks[id.level - 1][id.index - 1] = *z;
    }
    let mut config = initial.with_positions(necks)?;
    let pinned: Vec<usize> = gauge.pinned.iter().map(|(id, _)| config.flat_index(*id)).collect();
    let ids = config.neck_ids();
    let free: Vec<usize> = (0..ids.len()).filter(|i| !pinned.contains(i)).collect();

    let norm2 = |f: &[C64]| f.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let maxabs = |f: &[C64]| f.iter().map(|z| z.norm()).fold(0.0, f64::max);

    let mut forces = all_forces(&config, &sizes);
    for iter in 0..=max_iter {
        let res = maxabs(&forces);
        if res <= tol {
            return Ok(NewtonOutcome { config, iterations: iter, residual: res });
        }
        if iter == max_iter || free.is_empty() {
            return Err(MaxfaceError::NoConvergence { iterations: iter, residual: res });
        }
        let jac = balance_jacobian(&config, &sizes);
        let reduced = jac.select_columns(free.iter());
        let svd = reduced.clone().svd(true, true);
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let rank = svd.singular_values.iter().filter(|s| **s > 1e-10 * smax && **s > 0.0).count();
        if rank < free.len() {
            return Err(MaxfaceError::SingularJacobian { rank, expected: free.len() });
        }
        let rhs = DVector::from_iterator(forces.len(), forces.iter().map(|f| -f));
        let step = svd
            .solve(&rhs, 1e-14 * smax)
            .map_err(|e| MaxfaceError::InvalidInput(e.to_string()))?;
        let current = norm2(&forces);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=20 {
            let mut trial = config.all_positions().to_vec();
            for (j, &col) in free.iter().enumerate() {
                let id = ids[col];
                trial[id.level - 1][id.index - 1] += step[j] * lambda;
            }
            if let Ok(cand) = config.with_positions(trial) {
                let f = all_forces(&cand, &sizes);
                if norm2(&f) < current {
                    accepted = Some((cand, f));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((c, f)) => {
                config = c;
                forces = f;
            }
            None => return Err(MaxfaceError::NoConvergence { iterations: iter + 1, residual: res }),
        }
    }
    unreachable!("loop returns on its last iteration")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub jacobian_rank: usize,
    pub expected_rank: usize,
    pub singular_values: Vec<f64>,
    pub is_rigid: bool,
    /// False when the configuration is not balanced to `1e-8`.
    pub balanced: bool,
    pub max_force: f64,
}

impl RigidityReport {
    /// Ratio between the smallest kept and the largest dropped singular value.
    pub fn gap(&self) -> f64 {
        let kept = self.jacobian_rank;
        if kept == 0 || kept >= self.singular_values.len() {
            return f64::INFINITY;
        }
        let dropped = self.singular_values[kept];
        if dropped == 0.0 {
            f64::INFINITY
        } else {
            self.singular_values[kept - 1] / dropped
        }
    }
}

pub fn rigidity(config: &Configuration, sizes: &NeckSizes) -> RigidityReport {
    let jac = balance_jacobian(config, sizes);
    let mut sv: Vec<f64> = jac.singular_values().iter().cloned().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let smax = sv.first().copied().unwrap_or(0.0);
    let rank = if smax > 0.0 { sv.iter().filter(|s| **s > RANK_TOL * smax).count() } else { 0 };
    let expected = config.total_necks().saturating_sub(2);
    let max_force = crate::config::max_force(config, sizes);
    RigidityReport {
        jacobian_rank: rank,
        expected_rank: expected,
        singular_values: sv,
        is_rigid: rank == expected,
        balanced: max_force <= 1e-8,
        max_force,
    }
}

/// Gradient of the closed-form `W` with respect to `Q_1..Q_{L-1}` (with `Q_L`
/// absorbing the constraint `ΣQ = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WGradient {
    pub gradient: Vec<f64>,
    pub rank: usize,
}

pub fn dw_dq(config: &Configuration) -> Result<WGradient> {
    let sizes = neck_sizes(config)?;
    let counts = config.neck_counts();
    let lv = counts.len();
    let n = |l: usize| if l == 0 || l > lv { 0.0 } else { counts[l - 1] as f64 };
    // ∂W/∂c_l
    let dw_dc: Vec<f64> = (1..=lv)
        .map(|l| {
            2.0 * n(l) * (n(l) - 1.0) * sizes.get(l)
                - n(l) * n(l + 1) * sizes.get(l + 1)
                - n(l - 1) * n(l) * sizes.get(l - 1)
        })
        .collect();
    let mut gradient = Vec::with_capacity(lv);
    for j in 1..=lv {
        // c_l = (n_{l-1} c_{l-1} - Q_l)/n_l, differentiated in Q_j.
        let mut dc_prev = 0.0;
        let mut g = 0.0;
        for l in 1..=lv {
            let dq = if l == j { 1.0 } else { 0.0 };
            let dc = (n(l - 1) * dc_prev - dq) / n(l);
            g += dw_dc[l - 1] * dc;
            dc_prev = dc;
        }
        gradient.push(g);
    }
    let scale = sizes.c.iter().map(|c| c.abs()).fold(1.0, f64::max) * counts.iter().copied().max().unwrap_or(1) as f64;
    let norm = gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
    let rank = usize::from(norm > 1e-10 * scale * scale);
    Ok(WGradient { gradient, rank })
}

pub fn dw_dq_rank(config: &Configuration) -> Result<usize> {
    Ok(dw_dq(config)?.rank)
}

/// Closed-form `W` as a function of growths, for finite-difference checks.
pub fn w_of_growth(counts: &[usize], growth: &[f64]) -> f64 {
    let mut c = Vec::with_capacity(counts.len());
    let mut prev = 0.0;
    let mut n_prev = 0.0;
    for (l, &n) in counts.iter().enumerate() {
        let cl = (n_prev * prev - growth[l]) / n as f64;
        c.push(cl);
        prev = cl;
        n_prev = n as f64;
    }
    closed_form_w(counts, &c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndType {
    Catenoid,
    Planar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub genus: i64,
    pub end_count: usize,
    pub embeddable: bool,
    pub end_types: Vec<EndType>,
}

pub fn topology(config: &Configuration) -> TopologyReport {
    let q = config.growth();
    TopologyReport {
        genus: config.total_necks() as i64 - config.levels() as i64 + 1,
        end_count: config.levels(),
        embeddable: q.windows(2).all(|w| w[0] < w[1]),
        end_types: q
            .iter()
            .map(|v| if v.abs() <= 1e-12 { EndType::Planar } else { EndType::Catenoid })
            .collect(),
    }
}

/// Complex polynomial with ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
struct Poly(Vec<C64>);

impl Poly {
    fn from_roots(roots: &[C64]) -> Poly {
        let mut c = vec![C64::new(1.0, 0.0)];
        for r in roots {
            let mut next = vec![C64::new(0.0, 0.0); c.len() + 1];
            for (i, a) in c.iter().enumerate() {
                next[i + 1] += a;
                next[i] -= a * r;
            }
            c = next;
        }
        Poly(c)
    }

    fn mul(&self, o: &Poly) -> Poly {
        let mut c = vec![C64::new(0.0, 0.0); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly(c)
    }

    fn deriv(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![C64::new(0.0, 0.0)]);
        }
        Poly(self.0.iter().enumerate().skip(1).map(|(i, a)| a * i as f64).collect())
    }

    fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|a| a * s).collect())
    }

    fn add_assign(&mut self, o: &Poly) {
        if o.0.len() > self.0.len() {
            self.0.resize(o.0.len(), C64::new(0.0, 0.0));
        }
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            *a += b;
        }
    }
}

/// Max coefficient of `Σ c_l² (P/P_l) P_l'' - Σ c_l c_{l+1} (P/(P_l P_{l+1})) P_l' P_{l+1}'`,
/// where `P_l` has the neck positions of level `l` as roots.
pub fn polynomial_check(roots: &[Vec<C64>], sizes: &[f64]) -> Result<f64> {
    if roots.len() != sizes.len() {
        return Err(MaxfaceError::InvalidInput("one neck size per root list required".into()));
    }
    let all: Vec<C64> = roots.iter().flatten().copied().collect();
    let scale = all.iter().map(|z| z.norm()).fold(1.0, f64::max);
    for (i, a) in all.iter().enumerate() {
        for b in &all[i + 1..] {
            if (a - b).norm() <= 1e-12 * scale {
                return Err(MaxfaceError::RepeatedRoot { root: *a });
            }
        }
    }
    let polys: Vec<Poly> = roots.iter().map(|r| Poly::from_roots(r)).collect();
    // Product of all levels except the listed ones.
    let others = |skip: &[usize]| {
        polys
            .iter()
            .enumerate()
            .filter(|(i, _)| !skip.contains(i))
            .fold(Poly(vec![C64::new(1.0, 0.0)]), |acc, (_, p)| acc.mul(p))
    };
    let mut lhs = Poly(vec![C64::new(0.0, 0.0)]);
    for (l, p) in polys.iter().enumerate() {
        let c = sizes[l];
        lhs.add_assign(&others(&[l]).mul(&p.deriv().deriv()).scale(c * c));
        if l + 1 < polys.len() {
            let q = &polys[l + 1];
            let term = others(&[l, l + 1]).mul(&p.deriv()).mul(&q.deriv());
            lhs.add_assign(&term.scale(-c * sizes[l + 1]));
        }
    }
    Ok(lhs.0.iter().map(|a| a.norm()).fold(0.0, f64::max))
}
