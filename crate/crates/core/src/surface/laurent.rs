//! Height differential whose Laurent expansions in the two neck coordinates
//! agree under `v w = t²`.
//!
//! On each level `dh/dz = Σ_q Σ_{j=1}^{K+1} X_{q,j} (z-q)^{-j}` with
//! `X_{q,1}` the prescribed residue. Writing `dh = Σ A_n v^n dv` near a lower
//! node and `Σ B_n w^n dw` near the matching upper node, gluing requires
//! `A_{-n-2} = -t^{2n+2} B_n` and `B_{-n-2} = -t^{2n+2} A_n` for `n ≥ 0`.
//! Keeping `n < K` gives a square linear system for the `X_{q,j}`, `j ≥ 2`.

use nalgebra::{DMatrix, DVector};

use super::{Node, Side, SurfaceParams};
use crate::series::Series;
use crate::{MaxfaceError, Result, C64};

struct NodeSeries {
    /// Powers `φ^{m+1}` for `m = 0..K-1`, where `φ = (z-q) g_l`.
    pos: Vec<Series>,
    /// Powers `φ^{-k}` for `k = 1..K`.
    neg: Vec<Series>,
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn node_series(nodes: &[Node], index: usize, order: usize) -> NodeSeries {
    let len = 2 * order + 2;
    let q = nodes[index];
    let mut phi = vec![C64::new(0.0, 0.0); len];
    phi[0] = q.coefficient;
    for (i, n) in nodes.iter().enumerate() {
        if i == index {
            continue;
        }
        let d = n.position - q.position;
        let inv = 1.0 / d;
        let mut p = inv;
        for coeff in phi.iter_mut().skip(1) {
            *coeff -= n.coefficient * p;
            p *= inv;
        }
    }
    let phi = Series(phi);
    let mut pos = Vec::with_capacity(order);
    let mut acc = phi.clone();
    for _ in 0..order {
        pos.push(acc.clone());
        acc = acc.mul(&phi);
    }
    let inv = Series(phi.0[..order + 1].to_vec()).recip();
    let mut neg = Vec::with_capacity(order);
    let mut acc = inv.clone();
    for _ in 0..order {
        neg.push(acc.clone());
        acc = acc.mul(&inv);
    }
    NodeSeries { pos, neg }
}

struct System<'a> {
    nodes: &'a [Vec<Node>],
    series: Vec<Vec<NodeSeries>>,
    offsets: Vec<Vec<usize>>,
    order: usize,
    t2: f64,
}

impl System<'_> {
    /// Unknown index of `X_{q,j}` for `j ≥ 2`; the unknown is scaled by `(γ_q t²)^{j-1}`.
    fn var(&self, level: usize, node: usize, j: usize) -> usize {
        self.offsets[level][node] + j - 2
    }

    fn scale(&self, level: usize, node: usize, j: usize) -> C64 {
        (self.nodes[level][node].coefficient * self.t2).powi(j as i32 - 1)
    }

    /// Adds `w · A_{-k-1}` at the node.
    fn add_negative(&self, row: &mut [C64], level: usize, node: usize, k: usize, w: C64) {
        let s = &self.series[level][node].neg[k - 1];
        for j in (k + 1)..=(self.order + 1) {
            row[self.var(level, node, j)] += w * s.coeff(j - k - 1) * self.scale(level, node, j);
        }
    }

    /// Adds `w · A_m` (`m ≥ 0`) at the node; known residue terms go to `rhs`.
    fn add_positive(&self, row: &mut [C64], rhs: &mut C64, level: usize, node: usize, m: usize, w: C64) {
        let p = &self.series[level][node].pos[m];
        let here = &self.nodes[level][node];
        *rhs -= w * here.residue * p.coeff(m + 1);
        for j in 2..=(self.order + 1) {
            row[self.var(level, node, j)] += w * p.coeff(m + j) * self.scale(level, node, j);
        }
        for (other, n) in self.nodes[level].iter().enumerate() {
            if other == node {
                continue;
            }
            let d = n.position - here.position;
            let dinv = 1.0 / d;
            for i in 0..=m {
                let weight = w * p.coeff(m - i);
                for j in 1..=(self.order + 1) {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    let h = dinv.powi((j + i) as i32) * (sign * binom(i + j - 1, i));
                    if j == 1 {
                        *rhs -= weight * h * n.residue;
                    } else {
                        row[self.var(level, other, j)] += weight * h * self.scale(level, other, j);
                    }
                }
            }
        }
    }
}

/// Solves for the Laurent coefficients `X_{q,1..K+1}` of every node.
pub(super) fn solve(params: &SurfaceParams, nodes: &[Vec<Node>], order: usize) -> Result<Vec<Vec<Vec<C64>>>> {
    let t2 = params.t * params.t;
    let mut offsets = Vec::with_capacity(nodes.len());
    let mut count = 0;
    for level in nodes {
        offsets.push(
            level
                .iter()
                .map(|_| {
                    let o = count;
                    count += order;
                    o
                })
                .collect(),
        );
    }
    let series: Vec<Vec<NodeSeries>> = nodes
        .iter()
        .map(|level| (0..level.len()).map(|i| node_series(level, i, order)).collect())
        .collect();
    let sys = System { nodes, series, offsets, order, t2 };

    let find = |neck, side: Side| -> (usize, usize) {
        let level = side.level(neck) - 1;
        let idx = nodes[level].iter().position(|n| n.neck == neck && n.side == side).expect("node exists");
        (level, idx)
    };

    let mut mat = DMatrix::<C64>::zeros(count, count);
    let mut rhs = DVector::<C64>::zeros(count);
    let mut row_index = 0;
    let one = C64::new(1.0, 0.0);
    for neck in params.neck_ids() {
        let (la, ia) = find(neck, Side::Lower);
        let (lb, ib) = find(neck, Side::Upper);
        // Rows are divided by t^{2n+2} so that the leading unknown enters with weight one.
        let mut tp = t2;
        for n in 0..order {
            let w = C64::new(1.0 / tp, 0.0);
            for (lx, ix, ly, iy) in [(la, ia, lb, ib), (lb, ib, la, ia)] {
                let mut row = vec![C64::new(0.0, 0.0); count];
                let mut b = C64::new(0.0, 0.0);
                sys.add_negative(&mut row, lx, ix, n + 1, w);
                sys.add_positive(&mut row, &mut b, ly, iy, n, one);
                for (c, v) in row.into_iter().enumerate() {
                    mat[(row_index, c)] = v;
                }
                rhs[row_index] = b;
                row_index += 1;
            }
            tp *= t2;
        }
    }
    debug_assert_eq!(row_index, count);

    let sol = if count == 0 {
        DVector::zeros(0)
    } else {
        mat.lu().solve(&rhs).ok_or(MaxfaceError::SingularJacobian { rank: 0, expected: count })?
    };
    if sol.iter().any(|x| !x.is_finite()) {
        return Err(MaxfaceError::SingularJacobian { rank: 0, expected: count });
    }
    let mut out = Vec::with_capacity(nodes.len());
    for (l, level) in nodes.iter().enumerate() {
        let mut lv = Vec::with_capacity(level.len());
        for (i, n) in level.iter().enumerate() {
            let mut xs = vec![C64::new(n.residue, 0.0)];
            for j in 2..=(order + 1) {
                xs.push(sol[sys.var(l, i, j)] * sys.scale(l, i, j));
            }
            lv.push(xs);
        }
        out.push(lv);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use crate::config::neck_sizes;
    use crate::preset::chm;

    /// Laurent coefficients of `dh` in the local coordinate, computed by
    /// contour integrals in `z` as an independent check of the matching.
    fn coordinate_coefficient(s: &Surface, neck: NeckId, side: Side, n: i32) -> C64 {
        let rho = 0.5 * s.epsilon();
        crate::quad::periodic_trapezoid(
            &|th: f64| {
                let v = C64::from_polar(rho, th);
                let (_, w) = s.weierstrass_in_chart(neck, side, v).unwrap();
                w.0[2] * v.powi(-n - 1) * v * C64::i()
            },
            1e-14,
        ) / (2.0 * std::f64::consts::PI * C64::i())
    }

    #[test]
    fn matched_coefficients_satisfy_gluing() {
        let cfg = chm(2).unwrap();
        let sizes = neck_sizes(&cfg).unwrap();
        let t = 0.1;
        let s = Surface::new(initial_params(&cfg, &sizes, t, None).unwrap()).unwrap();
        for neck in s.params().neck_ids() {
            for n in 0..3 {
                let a_neg = coordinate_coefficient(&s, neck, Side::Lower, -n - 2);
                let b_pos = coordinate_coefficient(&s, neck, Side::Upper, n);
                let scale = t.powi(2 * n + 2);
                assert!(
                    (a_neg + scale * b_pos).norm() < 1e-10 * (1.0 + scale * b_pos.norm()),
                    "neck {neck} n {n}: {a_neg} vs {b_pos}"
                );
            }
        }
    }
}
