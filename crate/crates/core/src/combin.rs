//! Exact and logarithmic binomial coefficients.

use num_bigint::BigUint;
use num_traits::{One, Zero};

/// `C(n, k)` as an arbitrary-precision integer (zero when `k > n`).
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `ln C(n, k)` for real `n ≥ k ≥ 0`, accumulated term by term.
pub fn ln_binomial(n: f64, k: u64) -> f64 {
    (0..k).map(|i| ((n - i as f64) / (i as f64 + 1.0)).ln()).sum()
}

/// Natural log of a big integer (exact to double precision).
pub fn ln_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        let f: f64 = x.to_string().parse().unwrap_or(f64::INFINITY);
        if f.is_finite() {
            return f.ln();
        }
    }
    let shift = bits.saturating_sub(64);
    let top = (x >> shift).to_u64_digits().first().copied().unwrap_or(0) as f64;
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        assert_eq!(binomial(17, 7), BigUint::from(19448u32));
        assert_eq!(binomial(3, 5), BigUint::zero());
        assert_eq!(binomial(0, 0), BigUint::one());
    }

    #[test]
    fn pascal_rule_holds() {
        for n in 1..60u64 {
            for k in 1..n {
                assert_eq!(binomial(n, k), binomial(n - 1, k - 1) + binomial(n - 1, k));
            }
        }
    }

    #[test]
    fn logs_agree() {
        let exact = ln_big(&binomial(400, 123));
        assert!((exact - ln_binomial(400.0, 123)).abs() < 1e-9 * exact);
    }
}
