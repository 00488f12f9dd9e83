//! Closed-form BER of selection combining over time-varying Rayleigh links.
//!
//! Conditioned on `λ = |h2|²` both decision variables have two-sided
//! exponential densities, and the conditional BER is
//!
//! ```text
//! P(E|λ) = b0 b2/(c0 c2) + b0 b2/(c0 (c0 - d2)) + b0 b2/(c2 (c2 - d0))
//! ```
//!
//! Averaging the three terms over the exponential law of `λ` gives
//! `I1 + I2 + I3`. Each term is a rational function of `λ`; after partial
//! fractions every pole contributes `(1/σ2²)·exp(p/σ2²)·E1(p/σ2²)`, so the
//! result needs nothing beyond the scaled exponential integral.
//!
//! The second and third terms have two distinct poles. [`ber_single_pole`]
//! collapses each pair into a single pole and is kept for comparison; it
//! is an approximation and drifts by tens of percent at moderate SNR.

use crate::channel::ChannelSpec;
use crate::error::{domain, DafError, Result};
use crate::relaylink::{PowerSpec, SnrSummary};
use crate::specfun::{exp_scaled_e1, scaled_e1_remainder};

/// Density parameters `(b, c, d)` of a decision variable:
/// `f(β) = b e^{cβ}` for `β ≤ 0` and `b e^{dβ}` for `β ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConstants {
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

pub type DirectLinkConstants = LinkConstants;
pub type CascadedLinkConstants = LinkConstants;

impl LinkConstants {
    pub fn pdf(&self, beta: f64) -> f64 {
        if beta <= 0.0 {
            self.b * (self.c * beta).exp()
        } else {
            self.b * (self.d * beta).exp()
        }
    }

    pub fn cdf(&self, beta: f64) -> f64 {
        if beta <= 0.0 {
            self.b / self.c * (self.c * beta).exp()
        } else {
            1.0 + self.b / self.d * (self.d * beta).exp()
        }
    }

    /// Distribution function of `|ζ|`.
    pub fn cdf_abs(&self, beta: f64) -> Result<f64> {
        if !(beta >= 0.0) {
            return Err(domain("cdf_abs argument", beta));
        }
        Ok(1.0 + self.b / self.d * (self.d * beta).exp() - self.b / self.c * (-self.c * beta).exp())
    }

    /// `Pr(ζ < 0)`, the single-branch error probability.
    pub fn negative_mass(&self) -> f64 {
        self.b / self.c
    }

    /// `b/c - b/d`, which equals one for a proper density.
    pub fn total_mass(&self) -> f64 {
        self.b / self.c - self.b / self.d
    }
}

/// Constants of the direct-link density.
pub fn direct_constants(rho0: f64, alpha0: f64, n0: f64) -> Result<LinkConstants> {
    check_snr("rho0", rho0)?;
    check_alpha("alpha0", alpha0)?;
    check_positive("N0", n0)?;
    Ok(LinkConstants {
        b: 1.0 / (n0 * (1.0 + rho0)),
        c: 2.0 / (n0 * (1.0 + (1.0 - alpha0) * rho0)),
        d: -2.0 / (n0 * (1.0 + (1.0 + alpha0) * rho0)),
    })
}

/// Constants of the cascaded-link density conditioned on `λ`.
pub fn cascaded_constants(
    lambda: f64,
    rho1: f64,
    alpha: f64,
    gain: f64,
    n0: f64,
) -> Result<LinkConstants> {
    check_snr("lambda", lambda)?;
    check_snr("rho1", rho1)?;
    check_alpha("alpha", alpha)?;
    check_positive("N0", n0)?;
    let x = gain * gain * lambda;
    let sw = n0 * (1.0 + x);
    let rho2 = rho1 * x / (1.0 + x);
    Ok(LinkConstants {
        b: 1.0 / (sw * (1.0 + rho2)),
        c: 2.0 / (sw * (1.0 + (1.0 - alpha) * rho2)),
        d: -2.0 / (sw * (1.0 + (1.0 + alpha) * rho2)),
    })
}

/// Conditional mean and variance of a decision variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

/// Moments of `ζ0` given `|y0[k-1]|²` and `v[k] = +1`.
pub fn conditional_moments_direct(y0_mag_sq: f64, rho0: f64, alpha0: f64, n0: f64) -> Result<Moments> {
    check_snr("|y0|^2", y0_mag_sq)?;
    check_snr("rho0", rho0)?;
    Ok(gaussian_moments(y0_mag_sq, rho0, alpha0, n0))
}

/// Moments of `ζ2` given `|y2[k-1]|²`, `λ = |h2[k-1]|²` and `v[k] = +1`.
pub fn conditional_moments_cascaded(
    y2_mag_sq: f64,
    lambda: f64,
    rho1: f64,
    alpha: f64,
    gain: f64,
    n0: f64,
) -> Result<Moments> {
    check_snr("|y2|^2", y2_mag_sq)?;
    check_snr("lambda", lambda)?;
    let x = gain * gain * lambda;
    let rho2 = if x.is_infinite() { rho1 } else { rho1 * x / (1.0 + x) };
    Ok(gaussian_moments(y2_mag_sq, rho2, alpha, n0 * (1.0 + x)))
}

fn gaussian_moments(mag_sq: f64, rho: f64, alpha: f64, noise: f64) -> Moments {
    let ratio = if rho.is_infinite() { 1.0 } else { rho / (rho + 1.0) };
    let excess = if alpha == 1.0 { 0.0 } else { (1.0 - alpha * alpha) * rho };
    Moments {
        mean: alpha * ratio * mag_sq,
        variance: 0.5 * noise * (1.0 + alpha * alpha * ratio + excess) * mag_sq,
    }
}

/// Selection-combining BER conditioned on `λ`.
pub fn conditional_ber(direct: &LinkConstants, cascaded: &LinkConstants) -> f64 {
    let (b0, c0, d0) = (direct.b, direct.c, direct.d);
    let (b2, c2, d2) = (cascaded.b, cascaded.c, cascaded.d);
    let bb = b0 * b2;
    bb / (c0 * c2) + bb / (c0 * (c0 - d2)) + bb / (c2 * (c2 - d0))
}

/// Everything the averaged BER depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub rho0: f64,
    pub rho1: f64,
    pub gain_sq: f64,
    pub alpha0: f64,
    /// Cascaded-channel autocorrelation `α1 α2`.
    pub alpha: f64,
    /// Relay–destination variance, the scale of the `λ` distribution.
    pub sigma2_sq: f64,
}

impl OperatingPoint {
    pub fn new(spec: &ChannelSpec, power: &PowerSpec) -> Result<Self> {
        spec.validate()?;
        power.validate()?;
        let snr = SnrSummary::new(power, spec.sigma2);
        let op = Self {
            rho0: snr.rho0,
            rho1: snr.rho1,
            gain_sq: snr.gain_sq,
            alpha0: spec.alpha(0)?,
            alpha: spec.cascaded_alpha()?,
            sigma2_sq: spec.sigma2[2],
        };
        op.validate()?;
        Ok(op)
    }

    pub fn validate(&self) -> Result<()> {
        check_snr("rho0", self.rho0)?;
        check_snr("rho1", self.rho1)?;
        check_positive("A^2", self.gain_sq)?;
        check_alpha("alpha0", self.alpha0)?;
        check_alpha("alpha", self.alpha)?;
        check_positive("sigma2^2", self.sigma2_sq)
    }

    pub fn direct(&self) -> LinkConstants {
        LinkConstants {
            b: 1.0 / (1.0 + self.rho0),
            c: 2.0 / (1.0 + (1.0 - self.alpha0) * self.rho0),
            d: -2.0 / (1.0 + (1.0 + self.alpha0) * self.rho0),
        }
    }

    pub fn cascaded(&self, lambda: f64) -> LinkConstants {
        let x = self.gain_sq * lambda;
        let rho2 = self.rho1 * x / (1.0 + x);
        let sw = 1.0 + x;
        LinkConstants {
            b: 1.0 / (sw * (1.0 + rho2)),
            c: 2.0 / (sw * (1.0 + (1.0 - self.alpha) * rho2)),
            d: -2.0 / (sw * (1.0 + (1.0 + self.alpha) * rho2)),
        }
    }

    /// `P(E|λ)` at this operating point (unit noise variance).
    pub fn conditional_ber(&self, lambda: f64) -> f64 {
        conditional_ber(&self.direct(), &self.cascaded(lambda))
    }

    /// `E{1/(λ+p)}` for `λ ~ Exp(mean σ2²)`.
    fn inv_shift_mean(&self, p: f64) -> f64 {
        let s = self.sigma2_sq;
        exp_scaled_e1(p / s).expect("pole is positive") / s
    }

    /// `(K(a) - K(b)) / (b - a)` with `K = inv_shift_mean`, `0 < a < b`.
    fn inv_shift_slope(&self, a: f64, b: f64) -> f64 {
        if b - a > 1e-4 * b {
            return (self.inv_shift_mean(a) - self.inv_shift_mean(b)) / (b - a);
        }
        // Third-order expansion about b; the remainder is O(((b-a)/b)^3).
        let s = self.sigma2_sq;
        let y = b / s;
        let h = scaled_e1_remainder(y).expect("pole is positive");
        let g1 = -h / y;
        let g2 = g1 + 1.0 / (y * y);
        let g3 = g2 - 2.0 / (y * y * y);
        let delta = (a - b) / s;
        -(g1 + g2 * delta / 2.0 + g3 * delta * delta / 6.0) / (s * s)
    }
}

/// Polynomial constants of the single-pole closed form and the floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormConstants {
    pub b1: f64,
    pub b2: f64,
    pub b2_tilde: f64,
    pub b3_tilde: f64,
    pub b1_breve: f64,
    pub b2_breve: f64,
    pub b3_breve: f64,
}

impl ClosedFormConstants {
    pub fn new(op: &OperatingPoint) -> Self {
        let (r0, r1, a2) = (op.rho0, op.rho1, op.gain_sq);
        let (a0, a) = (op.alpha0, op.alpha);
        let g0 = 1.0 + (1.0 - a0) * r0;
        let h0 = 1.0 + (1.0 + a0) * r0;
        let plus = 1.0 + (2.0 + a) * r1 + (1.0 + a) * r1 * r1;
        let minus = 1.0 + (2.0 - a) * r1 + (1.0 - a) * r1 * r1;
        Self {
            b1: 1.0 / (a2 * (1.0 + (1.0 - a) * r1)),
            b2: 1.0 / (a2 * (1.0 + r1)),
            b2_tilde: ((3.0 + a + (1.0 - a0) * r0) * r1 + 3.0 + (1.0 - a0) * r0) / (a2 * plus),
            b3_tilde: (1.0 + (1.0 + a) * r1) * g0 / (2.0 * a2 * plus),
            b1_breve: 2.0 / (a2 * (1.0 + (1.0 - a) * r1)),
            b2_breve: ((3.0 - a + (1.0 + a0) * r0) * r1 + 3.0 + (1.0 + a0) * r0) / (a2 * minus),
            b3_breve: (1.0 + (1.0 - a) * r1).powi(2) * h0 / (4.0 * (1.0 + r0) * minus),
        }
    }
}

/// The averaged BER and its three constituents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerBreakdown {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub total: f64,
    pub constants: ClosedFormConstants,
}

/// Exact average BER of selection combining with one relay.
pub fn ber_closed_form(spec: &ChannelSpec, power: &PowerSpec) -> Result<BerBreakdown> {
    Ok(ber_at(&OperatingPoint::new(spec, power)?))
}

/// [`ber_closed_form`] for an explicit operating point.
pub fn ber_at(op: &OperatingPoint) -> BerBreakdown {
    let (r0, r1, a2) = (op.rho0, op.rho1, op.gain_sq);
    let (a0, a) = (op.alpha0, op.alpha);
    let s = op.sigma2_sq;

    let g0 = 1.0 + (1.0 - a0) * r0;
    let h0 = 1.0 + (1.0 + a0) * r0;
    let neg0 = g0 / (2.0 * (1.0 + r0)); // b0/c0

    // Products of A² with the λ-coefficients of the cascaded constants.
    let bn = a2 * (1.0 + r1);
    let cm = a2 * (1.0 + (1.0 - a) * r1);
    let dp = a2 * (1.0 + (1.0 + a) * r1);
    // 1/cm - 1/bn, formed without cancellation.
    let pole_gap = a2 * a * r1 / (cm * bn);

    // I1: E{b2/c2} = (B2/2B1) E{(λ+B1)/(λ+B2)}.
    let i1 = neg0 * (cm / (2.0 * bn)) * (1.0 + pole_gap * op.inv_shift_mean(1.0 / bn));

    // I2: E{b2/(c0-d2)} = (g0/2bn) E{(λ+e)/((λ+pa)(λ+pb))}.
    let pa = 1.0 / bn;
    let pb = (1.0 + g0) / dp;
    let e_minus_a = -a2 * a * r1 / (bn * dp);
    let j2 = op.inv_shift_mean(pb) + e_minus_a * op.inv_shift_slope(pa, pb);
    let i2 = neg0 * g0 / (2.0 * bn) * j2;

    // I3: E{b0 b2/(c2(c2-d0))} = B3 E{(λ+u)²/((λ+v)(λ+w))}.
    let u = 1.0 / cm;
    let v = 1.0 / bn;
    let w = (1.0 + h0) * u;
    let w_minus_v = a2 * (h0 + (h0 + a) * r1) / (cm * bn);
    let w_minus_u = h0 * u;
    let lead = a2 * (h0 + ((1.0 + h0) * (1.0 + a) - 1.0) * r1) / (cm * cm * bn);
    let j3 = lead / (w * w_minus_v)
        + w_minus_u * w_minus_u / (w * w_minus_v) * scaled_e1_remainder(w / s).expect("w > 0")
        + pole_gap * pole_gap / w_minus_v * op.inv_shift_mean(v);
    let b3 = cm * h0 / (4.0 * (1.0 + r0) * bn);
    let i3 = b3 * j3;

    BerBreakdown {
        i1,
        i2,
        i3,
        total: i1 + i2 + i3,
        constants: ClosedFormConstants::new(op),
    }
}

/// One-pole rendering of the averaged BER.
pub fn ber_single_pole(spec: &ChannelSpec, power: &PowerSpec) -> Result<BerBreakdown> {
    let op = OperatingPoint::new(spec, power)?;
    let k = ClosedFormConstants::new(&op);
    let s = op.sigma2_sq;
    let neg0 = op.direct().negative_mass();
    let i1 = neg0 * k.b2 / (2.0 * k.b1) * (1.0 + (k.b1 - k.b2) * op.inv_shift_mean(k.b2));
    let i2 = neg0 * k.b3_tilde * exp_scaled_e1(k.b2_tilde / s)? / s;
    let i3 = k.b3_breve * (1.0 + (k.b1_breve - k.b2_breve) * op.inv_shift_mean(k.b2_breve));
    Ok(BerBreakdown {
        i1,
        i2,
        i3,
        total: i1 + i2 + i3,
        constants: k,
    })
}

/// BER of the direct link alone, `b0/c0`.
pub fn direct_only_ber(spec: &ChannelSpec, power: &PowerSpec) -> Result<f64> {
    Ok(OperatingPoint::new(spec, power)?.direct().negative_mass())
}

/// High-SNR limit of the BER and its constituents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloorBreakdown {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub total: f64,
}

/// Error floor `lim_{P→∞} P_b(E)`; depends on the channel statistics and `q` only.
pub fn error_floor(spec: &ChannelSpec, q: f64) -> Result<FloorBreakdown> {
    spec.validate()?;
    if !(q > 0.0 && q < 1.0) {
        return Err(domain("power allocation factor q", q));
    }
    let a0 = spec.alpha(0)?;
    let a = spec.cascaded_alpha()?;
    check_alpha("alpha0", a0)?;
    check_alpha("alpha", a)?;
    let s = spec.sigma2[2];
    let sd = spec.sigma2[0];
    let ratio = q * sd / (1.0 - q);

    let i1 = 0.25 * (1.0 - a0) * (1.0 - a);
    let i2 = if a0 == 1.0 {
        0.0
    } else {
        let b2 = ratio * (1.0 - a0) / (1.0 + a);
        let b3 = 0.5 * ratio * (1.0 - a0);
        (1.0 - a0) / (2.0 * s) * b3 * exp_scaled_e1(b2 / s)?
    };
    let i3 = if a == 1.0 {
        0.0
    } else {
        let b2 = ratio * (1.0 + a0) / (1.0 - a);
        let b3 = 0.25 * (1.0 - a) * (1.0 + a0);
        b3 * scaled_e1_remainder(b2 / s)?
    };
    Ok(FloorBreakdown {
        i1,
        i2,
        i3,
        total: i1 + i2 + i3,
    })
}

/// Minimizer of the closed-form BER over the power allocation factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QOptimum {
    pub q: f64,
    pub ber: f64,
}

pub const Q_GRID_MIN: f64 = 0.01;
pub const Q_GRID_MAX: f64 = 0.99;
pub const Q_GRID_STEP: f64 = 0.005;
pub const Q_TOLERANCE: f64 = 1e-4;

/// The coarse search grid over `q`.
pub fn q_grid() -> Vec<f64> {
    let n = ((Q_GRID_MAX - Q_GRID_MIN) / Q_GRID_STEP).round() as usize;
    (0..=n).map(|i| Q_GRID_MIN + i as f64 * Q_GRID_STEP).collect()
}

/// BER at every point of [`q_grid`].
pub fn ber_vs_q(spec: &ChannelSpec, p_over_n0: f64) -> Result<Vec<(f64, f64)>> {
    q_grid()
        .into_iter()
        .map(|q| Ok((q, ber_closed_form(spec, &PowerSpec::new(p_over_n0, q)?)?.total)))
        .collect()
}

/// Grid search followed by golden-section refinement to `|Δq| ≤ 1e-4`.
pub fn optimize_q(spec: &ChannelSpec, p_over_n0: f64) -> Result<QOptimum> {
    let curve = ber_vs_q(spec, p_over_n0)?;
    let best = curve
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .ok_or_else(|| DafError::Config("empty q grid".into()))?;
    let lo = curve[best.saturating_sub(1)].0;
    let hi = curve[(best + 1).min(curve.len() - 1)].0;
    let f = |q: f64| -> Result<f64> { Ok(ber_closed_form(spec, &PowerSpec::new(p_over_n0, q)?)?.total) };
    let (q, ber) = golden_section(f, lo, hi, Q_TOLERANCE)?;
    // The refined point can only improve on the grid minimum.
    if ber <= curve[best].1 {
        Ok(QOptimum { q, ber })
    } else {
        Ok(QOptimum {
            q: curve[best].0,
            ber: curve[best].1,
        })
    }
}

/// Golden-section minimization of `f` on `[lo, hi]` down to width `tol`.
pub fn golden_section<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Number of strict interior local minima of a sampled curve.
pub fn local_minima(curve: &[(f64, f64)]) -> usize {
    curve
        .windows(3)
        .filter(|w| w[1].1 < w[0].1 && w[1].1 < w[2].1)
        .count()
}

fn check_alpha(what: &'static str, a: f64) -> Result<()> {
    if a > -1.0 && a <= 1.0 {
        Ok(())
    } else {
        Err(domain(what, a))
    }
}

fn check_snr(what: &'static str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(domain(what, x))
    }
}

fn check_positive(what: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(domain(what, x))
    }
}
