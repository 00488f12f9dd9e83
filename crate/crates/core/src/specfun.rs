//! Special functions used by the channel model and the averaged BER terms.
//!
//! Only the real-argument zeroth-order Bessel function `J0` and the
//! exponential integral `E1` are needed. Every averaged BER term pairs
//! `exp(x)` with `E1(x)`, and `x` can be far beyond the range where the two
//! factors are representable separately, so the scaled product `exp(x)·E1(x)`
//! and its complement `1 - x·exp(x)·E1(x)` are evaluated directly.

use crate::error::{domain, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_EPS: f64 = 1e-17;

/// A special-function value together with an a-priori absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialValue {
    pub value: f64,
    pub abs_error_bound: f64,
}

impl SpecialValue {
    pub fn bessel_j0(x: f64) -> Result<Self> {
        Ok(Self {
            value: bessel_j0(x)?,
            abs_error_bound: 1e-13,
        })
    }

    pub fn exp_e1(x: f64) -> Result<Self> {
        let value = exp_e1(x)?;
        Ok(Self {
            value,
            abs_error_bound: 1e-13 * value,
        })
    }

    pub fn exp_scaled_e1(x: f64) -> Result<Self> {
        let value = exp_scaled_e1(x)?;
        Ok(Self {
            value,
            abs_error_bound: 1e-13 * value,
        })
    }
}

/// Zeroth-order Bessel function of the first kind for `x >= 0`.
///
/// Power series below 8, Miller's backward recurrence on `[8, 40)` and the
/// Hankel asymptotic expansion from 40 upward.
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(domain("bessel_j0 argument", x));
    }
    Ok(if x < 8.0 {
        j0_series(x)
    } else if x < 40.0 {
        j0_miller(x)
    } else {
        j0_hankel(x)
    })
}

fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut k = 1.0;
    while term.abs() > SERIES_EPS * sum.abs().max(1e-300) || k < 2.0 {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
        if k > 200.0 {
            break;
        }
    }
    sum
}

fn j0_miller(x: f64) -> f64 {
    // Start well above x so J_N(x) is negligible; N even.
    let start = (x + 30.0 + 8.0 * x.sqrt()).ceil() as usize;
    let start = start + (start % 2);
    let mut next = 0.0_f64; // J_{n+1}
    let mut cur = 1e-30_f64; // J_n
    let mut norm = 0.0_f64;
    let mut j0 = 0.0;
    for n in (1..=start).rev() {
        let prev = (2.0 * n as f64 / x) * cur - next;
        next = cur;
        cur = prev;
        let idx = n - 1;
        if idx == 0 {
            j0 = cur;
            norm += cur;
        } else if idx % 2 == 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
        }
    }
    j0 / norm
}

fn j0_hankel(x: f64) -> f64 {
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0_f64;
    let mut k = 1usize;
    loop {
        let odd = (2 * k - 1) as f64;
        let next = term * (-(odd * odd)) / (k as f64 * 8.0 * x);
        if next.abs() >= term.abs() || next.abs() < SERIES_EPS {
            break;
        }
        term = next;
        // a_k / x^k enters P (k even) or Q (k odd) with alternating signs.
        let sign = if (k / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
        if k.is_multiple_of(2) {
            p += sign * term;
        } else {
            q += sign * term;
        }
        k += 1;
    }
    let (s, c) = x.sin_cos();
    let cos_chi = (c + s) * std::f64::consts::FRAC_1_SQRT_2;
    let sin_chi = (s - c) * std::f64::consts::FRAC_1_SQRT_2;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

/// Exponential integral `E1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
///
/// Underflows to zero for `x` beyond roughly 745.
pub fn exp_e1(x: f64) -> Result<f64> {
    check_positive("exp_e1 argument", x)?;
    Ok(if x <= 1.0 {
        e1_series(x)
    } else {
        (-x).exp() * scaled_e1_cf(x)
    })
}

/// `exp(x)·E1(x)` evaluated without forming either factor.
pub fn exp_scaled_e1(x: f64) -> Result<f64> {
    check_positive("exp_scaled_e1 argument", x)?;
    Ok(if x <= 1.0 {
        x.exp() * e1_series(x)
    } else {
        scaled_e1_cf(x)
    })
}

/// `1 - x·exp(x)·E1(x)`, which tends to `1/x` for large `x`.
///
/// The direct difference cancels badly once `x` is large, so the asymptotic
/// series `Σ (-1)^{k+1} k!/x^k` takes over above 50.
pub fn scaled_e1_remainder(x: f64) -> Result<f64> {
    check_positive("scaled_e1_remainder argument", x)?;
    if x <= 50.0 {
        return Ok(1.0 - x * exp_scaled_e1(x)?);
    }
    let mut term = 1.0 / x;
    let mut sum = term;
    let mut k = 1.0;
    loop {
        k += 1.0;
        let next = -term * k / x;
        if next.abs() < SERIES_EPS * sum || next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
    }
    Ok(sum)
}

fn check_positive(what: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(domain(what, x))
    }
}

fn e1_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut acc = 0.0;
    let mut k = 1.0;
    loop {
        term *= -x / k;
        let contrib = -term / k;
        acc += contrib;
        if contrib.abs() < SERIES_EPS * acc.abs().max(1e-300) {
            break;
        }
        k += 1.0;
    }
    -EULER_GAMMA - x.ln() + acc
}

// Modified Lentz evaluation of the continued fraction
// exp(x)E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...))), valid for x > 1.
fn scaled_e1_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j0_at_zero_is_one() {
        assert_eq!(bessel_j0(0.0).unwrap(), 1.0);
    }

    #[test]
    fn j0_first_zero() {
        assert!(bessel_j0(2.404_825_557_695_77).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn j0_small_argument() {
        let x = 2.0 * std::f64::consts::PI * 0.001;
        let approx = 1.0 - x * x / 4.0 + x.powi(4) / 64.0;
        assert!((bessel_j0(x).unwrap() - approx).abs() < 1e-15);
        assert!((bessel_j0(x).unwrap() - 0.999_990_13).abs() < 1e-8);
    }

    #[test]
    fn j0_branches_agree_at_boundaries() {
        assert!((j0_series(8.0) - j0_miller(8.0)).abs() < 1e-13);
        assert!((j0_miller(40.0) - j0_hankel(40.0)).abs() < 1e-13);
        assert!((bessel_j0(8.0).unwrap() - 0.171_650_807_137_553_9).abs() < 1e-14);
        assert!((j0_series(7.9) - j0_miller(7.9)).abs() < 1e-13);
        assert!((j0_miller(39.5) - j0_hankel(39.5)).abs() < 1e-13);
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_j0(f64::NAN).is_err());
        assert!(bessel_j0(-1.0).is_err());
        assert!(exp_e1(0.0).is_err());
        assert!(exp_e1(-2.0).is_err());
        assert!(exp_scaled_e1(0.0).is_err());
        assert!(exp_scaled_e1(f64::INFINITY).is_err());
        assert!(scaled_e1_remainder(-1.0).is_err());
    }

    #[test]
    fn e1_underflows_gracefully() {
        assert!(exp_e1(700.0).unwrap() > 0.0);
        assert_eq!(exp_e1(800.0).unwrap(), 0.0);
    }

    #[test]
    fn scaled_e1_large_argument() {
        let x = 1e10;
        let expect = 1.0 / x - 1.0 / (x * x);
        assert!((exp_scaled_e1(x).unwrap() - expect).abs() / expect < 1e-12);
        assert!((500.0 * exp_scaled_e1(500.0).unwrap() - 1.0).abs() < 2.1e-3);
    }

    #[test]
    fn remainder_is_continuous_at_switch() {
        for x in [50.0, 50.1, 60.0] {
            let a = 1.0 - x * exp_scaled_e1(x).unwrap();
            let b = scaled_e1_remainder(x).unwrap();
            assert!((a - b).abs() / b < 1e-13, "x={x}");
        }
        let r = scaled_e1_remainder(50.0).unwrap();
        assert!((r - 0.019_244_503_494_256_48).abs() / r < 1e-14);
        let x = 1e8;
        assert!((scaled_e1_remainder(x).unwrap() * x - 1.0).abs() < 3e-8);
    }
}
