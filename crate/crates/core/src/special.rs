//! Gamma-family special functions for positive real arguments.

use crate::num::Real;

// Shift threshold for the asymptotic expansions. Ten keeps the truncated
// series below double-precision rounding.
const SHIFT: f64 = 10.0;

/// Digamma function for `x > 0`.
pub fn digamma<T: Real>(x: T) -> T {
    debug_assert!(x > T::zero());
    let mut x = x;
    let mut acc = T::zero();
    while x < T::lit(SHIFT) {
        acc = acc - x.recip();
        x = x + T::one();
    }
    let inv = x.recip();
    let inv2 = inv * inv;
    // ln x - 1/(2x) - sum B_{2n} / (2n x^{2n})
    let series = inv2
        * (T::lit(1.0 / 12.0)
            - inv2
                * (T::lit(1.0 / 120.0)
                    - inv2
                        * (T::lit(1.0 / 252.0)
                            - inv2
                                * (T::lit(1.0 / 240.0)
                                    - inv2
                                        * (T::lit(1.0 / 132.0)
                                            - inv2 * T::lit(691.0 / 32760.0))))));
    acc + x.ln() - T::lit(0.5) * inv - series
}

/// Trigamma function for `x > 0`.
pub fn trigamma<T: Real>(x: T) -> T {
    debug_assert!(x > T::zero());
    let mut x = x;
    let mut acc = T::zero();
    while x < T::lit(SHIFT) {
        acc = acc + (x * x).recip();
        x = x + T::one();
    }
    let inv = x.recip();
    let inv2 = inv * inv;
    // 1/x + 1/(2x^2) + sum B_{2n} / x^{2n+1}
    let series = inv
        * inv2
        * (T::lit(1.0 / 6.0)
            - inv2
                * (T::lit(1.0 / 30.0)
                    - inv2
                        * (T::lit(1.0 / 42.0)
                            - inv2 * (T::lit(1.0 / 30.0) - inv2 * T::lit(5.0 / 66.0)))));
    acc + inv + T::lit(0.5) * inv2 + series
}

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma<T: Real>(x: T) -> T {
    debug_assert!(x > T::zero());
    let mut x = x;
    let mut shift = T::zero();
    while x < T::lit(SHIFT) {
        shift = shift + x.ln();
        x = x + T::one();
    }
    let inv = x.recip();
    let inv2 = inv * inv;
    let series = inv
        * (T::lit(1.0 / 12.0)
            - inv2
                * (T::lit(1.0 / 360.0)
                    - inv2
                        * (T::lit(1.0 / 1260.0)
                            - inv2 * (T::lit(1.0 / 1680.0) - inv2 * T::lit(1.0 / 1188.0)))));
    (x - T::lit(0.5)) * x.ln() - x + T::lit(0.918_938_533_204_672_8) + series - shift
}

/// Natural log of the beta function.
pub fn ln_beta<T: Real>(a: T, b: T) -> T {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `E[ln J]` and `E[ln(1 - J)]` for `J ~ Beta(a, b)`.
pub fn beta_log_moments<T: Real>(a: T, b: T) -> (T, T) {
    let total = digamma(a + b);
    (digamma(a) - total, digamma(b) - total)
}
