//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use daf_core::analysis::OperatingPoint;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_3,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod 7/15 integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    let mut pieces = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..20_000 {
        let total: f64 = pieces.iter().map(|p| p.2 .0).sum();
        let err: f64 = pieces.iter().map(|p| p.2 .1).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return total;
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        pieces.push((lo, mid, gk15(&f, lo, mid)));
        pieces.push((mid, hi, gk15(&f, mid, hi)));
    }
    panic!("quadrature did not converge on [{a}, {b}]");
}

/// `J0(x) = (1/π) ∫_0^π cos(x sin θ) dθ` by the trapezoid rule, which is
/// spectrally accurate for this periodic integrand.
pub fn j0_oracle(x: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let n = 64 + 4 * x.ceil() as usize;
    let h = pi / n as f64;
    let f = |t: f64| (x * t.sin()).cos();
    let mut s = 0.5 * (f(0.0) + f(pi));
    for k in 1..n {
        s += f(k as f64 * h);
    }
    s * h / pi
}

/// `exp(x) E1(x) = ∫_0^∞ e^{-t} / (x + t) dt`, integrated in `u = ln t`.
pub fn scaled_e1_oracle(x: f64) -> f64 {
    let f = |u: f64| {
        let t = u.exp();
        (-t).exp() * t / (x + t)
    };
    integrate(f, -60.0, 4.0, 0.0, 1e-14)
}

/// `E1(x)` from its convergent series, summed in long form.
pub fn e1_series_oracle(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..400 {
        term *= x / k as f64;
        let t = term / k as f64;
        sum += if k % 2 == 1 { t } else { -t };
        if t < 1e-20 {
            break;
        }
    }
    -0.577_215_664_901_532_9 - x.ln() + sum
}

/// Average of the conditional BER over `λ ~ Exp(σ2²)` by quadrature in `u = ln(λ/σ2²)`.
pub fn ber_quadrature(op: &OperatingPoint) -> f64 {
    let s = op.sigma2_sq;
    let f = |u: f64| {
        let t = u.exp();
        op.conditional_ber(s * t) * (-t).exp() * t
    };
    // Below u = -60 the mass is below 1e-26; above t = 50 below 2e-22.
    let body = integrate(f, -60.0, 50f64.ln(), 0.0, 1e-13);
    body + op.conditional_ber(50.0 * s) * (-50.0f64).exp()
}
