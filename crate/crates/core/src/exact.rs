//! Exact rational evaluation of the two combinatorial sums behind the
//! derivative expansion of the governing function.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 || n < 0 || k > n {
        return BigInt::zero();
    }
    let mut out = BigInt::one();
    for i in 0..k {
        out = out * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    out
}

/// Descending factorial `(a)_j = a(a-1)...(a-j+1)`, `(a)_0 = 1`.
pub fn falling(a: i64, j: i64) -> BigInt {
    (0..j).fold(BigInt::one(), |acc, i| acc * BigInt::from(a - i))
}

pub fn factorial(n: i64) -> BigInt {
    falling(n, n)
}

/// `Σ_{j=0}^{l} C(m,j) (n+1)_j / m! · C(m-j, l-j) (-2n-2)_{l-j}`.
pub fn identity1(m: i64, n: i64, l: i64) -> BigRational {
    let mut num = BigInt::zero();
    for j in 0..=l {
        num += binomial(m, j) * falling(n + 1, j) * binomial(m - j, l - j) * falling(-2 * n - 2, l - j);
    }
    BigRational::new(num, factorial(m))
}

/// Closed form of [`identity1`] from the Vandermonde convolution:
/// `C(m,l) (-n-1)_l / m!`.
///
/// This is `1/(m+n+1)!` at `l = -n-1` and vanishes for `l > -n-1`.
pub fn identity1_closed_form(m: i64, n: i64, l: i64) -> BigRational {
    BigRational::new(binomial(m, l) * falling(-n - 1, l), factorial(m))
}

/// `Σ_{j=0}^{m} C(m,j) (-m)_j (2m)_{m-j} / m!`, identically 1.
pub fn identity2(m: i64) -> BigRational {
    let mut num = BigInt::zero();
    for j in 0..=m {
        num += binomial(m, j) * falling(-m, j) * falling(2 * m, m - j);
    }
    BigRational::new(num, factorial(m))
}

/// Every valid `(m, n, l)` with `1 ≤ m ≤ max_m`, `-m ≤ n ≤ -2`, `0 ≤ l ≤ m`.
pub fn identity1_domain(max_m: i64) -> Vec<(i64, i64, i64)> {
    let mut out = Vec::new();
    for m in 1..=max_m {
        for n in -m..=-2 {
            for l in 0..=m {
                out.push((m, n, l));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn identity2_small_cases() {
        assert_eq!(identity2(1), q(1, 1));
        assert_eq!(identity2(2), q(1, 1));
        assert_eq!(identity2(8), q(1, 1));
    }

    #[test]
    fn identity1_at_the_diagonal() {
        // l = -n-1 gives 1/(m+n+1)!
        assert_eq!(identity1(3, -2, 1), q(1, 2));
        assert_eq!(identity1(2, -2, 1), q(1, 1));
        assert_eq!(identity1(5, -3, 2), q(1, 6));
    }

    #[test]
    fn identity1_vanishes_past_the_diagonal() {
        assert_eq!(identity1(4, -2, 2), q(0, 1));
        assert_eq!(identity1(6, -3, 4), q(0, 1));
    }

    #[test]
    fn identity1_below_the_diagonal_is_not_zero() {
        assert_eq!(identity1(4, -3, 1), q(1, 3));
        assert_eq!(identity1(4, -3, 1), identity1_closed_form(4, -3, 1));
    }

    #[test]
    fn falling_factorials() {
        assert_eq!(falling(5, 0), BigInt::one());
        assert_eq!(falling(-2, 3), BigInt::from(-24));
        assert_eq!(falling(2, 3), BigInt::zero());
    }
}
