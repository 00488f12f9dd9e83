//! The D-AF signal chain: differential encoding, broadcast from the source,
//! fixed-gain amplification at the relays and reception at the destination.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, DafError, Result};

/// Power budget relative to the noise floor.
///
/// `P_0 = qP` goes to the source and `P_1 = (1-q)P` to the relays; with
/// several relays each one transmits `P_1 / L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSpec {
    pub total_power_over_noise: f64,
    pub q: f64,
    pub noise_variance: f64,
}

impl PowerSpec {
    pub fn new(total_power_over_noise: f64, q: f64) -> Result<Self> {
        let p = Self {
            total_power_over_noise,
            q,
            noise_variance: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_db(p_over_n0_db: f64, q: f64) -> Result<Self> {
        Self::new(db_to_linear(p_over_n0_db), q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.total_power_over_noise.is_finite() && self.total_power_over_noise > 0.0) {
            return Err(domain("P/N0", self.total_power_over_noise));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(domain("power allocation factor q", self.q));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance > 0.0) {
            return Err(domain("noise variance", self.noise_variance));
        }
        Ok(())
    }

    pub fn total_power(&self) -> f64 {
        self.total_power_over_noise * self.noise_variance
    }

    pub fn source_power(&self) -> f64 {
        self.q * self.total_power()
    }

    pub fn relay_power(&self) -> f64 {
        (1.0 - self.q) * self.total_power()
    }

    pub fn snr(&self, sigma2: [f64; 3]) -> SnrSummary {
        SnrSummary::new(self, sigma2)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `A = sqrt(P_1 / (P_0 σ1² + N_0))`.
pub fn amplification_factor(power: &PowerSpec, sigma1_sq: f64) -> Result<f64> {
    power.validate()?;
    relay_gain(power.source_power(), power.relay_power(), sigma1_sq, power.noise_variance)
}

fn relay_gain(p0: f64, p1: f64, sigma1_sq: f64, n0: f64) -> Result<f64> {
    if !(sigma1_sq.is_finite() && sigma1_sq > 0.0) {
        return Err(domain("source-relay variance", sigma1_sq));
    }
    Ok((p1 / (p0 * sigma1_sq + n0)).sqrt())
}

/// Average SNRs of the direct link, at the relay, and (conditioned on
/// `λ = |h2|²`) of the cascaded link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSummary {
    pub rho0: f64,
    pub rho1: f64,
    /// Squared amplification factor, which fixes `rho2(λ)`.
    pub gain_sq: f64,
}

impl SnrSummary {
    pub fn new(power: &PowerSpec, sigma2: [f64; 3]) -> Self {
        let n0 = power.noise_variance;
        let p0 = power.source_power();
        Self {
            rho0: p0 * sigma2[0] / n0,
            rho1: p0 * sigma2[1] / n0,
            gain_sq: power.relay_power() / (p0 * sigma2[1] + n0),
        }
    }

    /// `A²ρ1λ / (1 + A²λ)`.
    pub fn rho2(&self, lambda: f64) -> f64 {
        let x = self.gain_sq * lambda;
        if x.is_infinite() {
            return self.rho1;
        }
        self.rho1 * x / (1.0 + x)
    }
}

/// `N_0 (1 + A²λ)`, the variance of `A h2 w1 + w2` for fixed `h2`.
pub fn conditional_noise_variance(lambda: f64, gain: f64, n0: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(domain("lambda", lambda));
    }
    Ok(n0 * (1.0 + gain * gain * lambda))
}

/// `s[0] = 1`, `s[k] = v[k] s[k-1]`.
pub fn differential_encode(symbols: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(symbols.len() + 1);
    out.push(1.0);
    let mut prev = 1.0;
    for (index, &v) in symbols.iter().enumerate() {
        if v != 1.0 && v != -1.0 {
            return Err(DafError::NotBpsk { index, value: v });
        }
        prev *= v;
        out.push(prev);
    }
    Ok(out)
}

/// Channel samples seen during one frame, one entry per channel use
/// (reference symbol included).
#[derive(Debug, Clone, Default)]
pub struct FrameChannels {
    pub direct: Vec<Complex64>,
    /// `(h1, h2)` per relay.
    pub relays: Vec<(Vec<Complex64>, Vec<Complex64>)>,
}

impl FrameChannels {
    pub fn constant(direct: Complex64, relays: &[(Complex64, Complex64)], uses: usize) -> Self {
        Self {
            direct: vec![direct; uses],
            relays: relays
                .iter()
                .map(|&(a, b)| (vec![a; uses], vec![b; uses]))
                .collect(),
        }
    }
}

/// Source of the receiver noise samples.
pub trait NoiseSource {
    fn sample(&mut self, variance: f64) -> Complex64;
}

/// Circularly-symmetric complex Gaussian noise drawn from an RNG.
pub struct GaussianNoise<'a, R: Rng + ?Sized>(pub &'a mut R);

impl<R: Rng + ?Sized> NoiseSource for GaussianNoise<'_, R> {
    #[inline]
    fn sample(&mut self, variance: f64) -> Complex64 {
        let sd = (0.5 * variance).sqrt();
        let re: f64 = self.0.sample(StandardNormal);
        let im: f64 = self.0.sample(StandardNormal);
        Complex64::new(re * sd, im * sd)
    }
}

/// No noise at all; for loop-back checks.
pub struct Silent;

impl NoiseSource for Silent {
    fn sample(&mut self, _variance: f64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
}

/// Everything transmitted and received during one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTrace {
    pub symbols: Vec<f64>,
    pub encoded: Vec<f64>,
    pub y0: Vec<Complex64>,
    /// Destination samples relayed by each relay.
    pub y2: Vec<Vec<Complex64>>,
    pub frame_length: usize,
}

/// Simulates one frame of `symbols.len()` data symbols plus the reference.
///
/// `y0 = √P0 h0 s + w0`, `y1 = √P0 h1 s + w1`, `y2 = A h2 y1 + w2`, with every
/// relay given power `P_1 / L`.
pub fn simulate_frame<N: NoiseSource>(
    sigma1_sq: f64,
    power: &PowerSpec,
    symbols: &[f64],
    channels: &FrameChannels,
    noise: &mut N,
) -> Result<FrameTrace> {
    power.validate()?;
    let encoded = differential_encode(symbols)?;
    let uses = encoded.len();
    check_len("direct channel", uses, channels.direct.len())?;
    for (h1, h2) in &channels.relays {
        check_len("source-relay channel", uses, h1.len())?;
        check_len("relay-destination channel", uses, h2.len())?;
    }

    let n0 = power.noise_variance;
    let amp = power.source_power().sqrt();
    let relays = channels.relays.len().max(1) as f64;
    let gain = relay_gain(
        power.source_power(),
        power.relay_power() / relays,
        sigma1_sq,
        n0,
    )?;

    let y0 = encoded
        .iter()
        .zip(&channels.direct)
        .map(|(&s, &h)| h * (amp * s) + noise.sample(n0))
        .collect();
    let y2 = channels
        .relays
        .iter()
        .map(|(h1, h2)| {
            encoded
                .iter()
                .zip(h1.iter().zip(h2))
                .map(|(&s, (&a, &b))| {
                    let y1 = a * (amp * s) + noise.sample(n0);
                    b * y1 * gain + noise.sample(n0)
                })
                .collect()
        })
        .collect();

    Ok(FrameTrace {
        symbols: symbols.to_vec(),
        encoded,
        y0,
        y2,
        frame_length: symbols.len(),
    })
}

fn check_len(what: &'static str, needed: usize, got: usize) -> Result<()> {
    if got < needed {
        Err(DafError::Length { what, needed, got })
    } else {
        Ok(())
    }
}
