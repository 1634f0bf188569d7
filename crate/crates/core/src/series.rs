//! Truncated complex power series and the local expansions of sums of
//! pole terms that residue calculus needs.

use crate::C64;

/// Power series `Σ c_i u^i` truncated after `len` coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Series(pub Vec<C64>);

impl Series {
    pub fn one(len: usize) -> Self {
        let mut c = vec![C64::new(0.0, 0.0); len];
        if len > 0 {
            c[0] = C64::new(1.0, 0.0);
        }
        Series(c)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coeff(&self, i: usize) -> C64 {
        self.0.get(i).copied().unwrap_or_default()
    }

    /// Product truncated to the shorter of the two lengths.
    pub fn mul(&self, other: &Series) -> Series {
        let len = self.len().min(other.len());
        let mut out = vec![C64::new(0.0, 0.0); len];
        for (i, a) in self.0.iter().enumerate().take(len) {
            if *a == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, b) in other.0.iter().enumerate().take(len - i) {
                out[i + j] += a * b;
            }
        }
        Series(out)
    }

    pub fn pow(&self, k: usize) -> Series {
        let mut acc = Series::one(self.len());
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Multiplicative inverse; the constant term must be non-zero.
    pub fn recip(&self) -> Series {
        let len = self.len();
        let mut out = vec![C64::new(0.0, 0.0); len];
        if len == 0 {
            return Series(out);
        }
        let inv0 = 1.0 / self.0[0];
        out[0] = inv0;
        for n in 1..len {
            let mut s = C64::new(0.0, 0.0);
            for k in 1..=n {
                s += self.0[k] * out[n - k];
            }
            out[n] = -s * inv0;
        }
        Series(out)
    }
}

/// Taylor coefficients at `center` of `Σ_q w_q / (z - q)^order`, summed over
/// simple-order pole terms located away from `center`.
///
/// Uses `(u - d)^{-j} = (-d)^{-j} Σ_n C(n+j-1, n) (u/d)^n` with `d = q - center`.
pub fn pole_term_taylor(center: C64, pole: C64, order: usize, weight: C64, len: usize) -> Series {
    let d = pole - center;
    let mut out = vec![C64::new(0.0, 0.0); len];
    if order == 0 {
        if len > 0 {
            out[0] = weight;
        }
        return Series(out);
    }
    let inv_d = 1.0 / d;
    // (-d)^{-j}
    let mut lead = weight;
    for _ in 0..order {
        lead *= -inv_d;
    }
    let mut binom = 1.0f64; // C(n+j-1, n)
    let mut dpow = C64::new(1.0, 0.0);
    for (n, slot) in out.iter_mut().enumerate() {
        if n > 0 {
            binom *= (n + order - 1) as f64 / n as f64;
            dpow *= inv_d;
        }
        *slot = lead * binom * dpow;
    }
    Series(out)
}

/// Adds `other` into `acc` coefficient-wise.
pub fn accumulate(acc: &mut Series, other: &Series) {
    for (a, b) in acc.0.iter_mut().zip(other.0.iter()) {
        *a += b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn recip_of_one_minus_u() {
        let s = Series(vec![c(1.0), c(-1.0), c(0.0), c(0.0)]);
        let r = s.recip();
        for i in 0..4 {
            assert!((r.coeff(i) - c(1.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn pow_matches_binomial() {
        let s = Series(vec![c(1.0), c(1.0), c(0.0), c(0.0), c(0.0)]);
        let p = s.pow(4);
        let expect = [1.0, 4.0, 6.0, 4.0, 1.0];
        for (i, e) in expect.iter().enumerate() {
            assert!((p.coeff(i) - c(*e)).norm() < 1e-14);
        }
    }

    #[test]
    fn pole_term_expansion_matches_direct_evaluation() {
        let center = C64::new(0.2, -0.1);
        let pole = C64::new(1.0, 0.5);
        let w = C64::new(0.7, 0.3);
        let s = pole_term_taylor(center, pole, 3, w, 30);
        let u = C64::new(0.05, 0.02);
        let mut sum = C64::new(0.0, 0.0);
        let mut up = C64::new(1.0, 0.0);
        for i in 0..30 {
            sum += s.coeff(i) * up;
            up *= u;
        }
        let direct = w / (center + u - pole).powi(3);
        assert!((sum - direct).norm() < 1e-13);
    }
}
