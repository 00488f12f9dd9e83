//! Time-correlated Rayleigh fading.
//!
//! The default generator is a sum-of-sinusoids (SoS) model with 16 oscillators
//! per quadrature branch. Arrival angles are spread evenly over a quarter
//! circle with a random common offset and every oscillator gets a random
//! phase, which makes the time autocorrelation follow `J0(2π f n)`. An AR(1)
//! innovation model is available as well; it matches the lag-one correlation
//! only, which is all the BER analysis uses.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, DafError, Result};
use crate::specfun::bessel_j0;

/// Oscillators per quadrature branch.
pub const SOS_OSCILLATORS: usize = 16;

// Exact phasors are recomputed this often to stop rotation drift.
const REANCHOR_EVERY: u64 = 1024;

/// Variances and normalized Doppler rates of the source–destination (0),
/// source–relay (1) and relay–destination (2) links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    pub sigma2: [f64; 3],
    pub doppler: [f64; 3],
    /// Channel-use spacing in symbols: 1 for frame-by-frame, 2 for
    /// symbol-by-symbol transmission.
    pub spacing_n: u32,
}

impl ChannelSpec {
    pub fn new(sigma2: [f64; 3], doppler: [f64; 3], spacing_n: u32) -> Result<Self> {
        let spec = Self {
            sigma2,
            doppler,
            spacing_n,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for &v in &self.sigma2 {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain("channel variance", v));
            }
        }
        for &f in &self.doppler {
            if !(f.is_finite() && (0.0..=0.5).contains(&f)) {
                return Err(domain("normalized Doppler", f));
            }
        }
        if self.spacing_n == 0 {
            return Err(domain("channel-use spacing", 0.0));
        }
        Ok(())
    }

    pub fn link(&self, index: usize) -> LinkSpec {
        LinkSpec {
            variance: self.sigma2[index],
            doppler: self.doppler[index],
        }
    }

    /// Lag-`spacing_n` autocorrelation coefficient of link `index`.
    pub fn alpha(&self, index: usize) -> Result<f64> {
        ar1_alpha(self, index)
    }

    /// Autocorrelation of the cascaded source–relay–destination channel.
    pub fn cascaded_alpha(&self) -> Result<f64> {
        Ok(self.alpha(1)? * self.alpha(2)?)
    }
}

/// Variance and Doppler of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSpec {
    pub variance: f64,
    pub doppler: f64,
}

/// First-order autoregressive description of a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Params {
    pub alpha: f64,
    pub innovation_variance: f64,
}

impl Ar1Params {
    pub fn for_link(link: LinkSpec, spacing_n: u32) -> Result<Self> {
        let alpha = bessel_j0(2.0 * PI * link.doppler * spacing_n as f64)?;
        Ok(Self {
            alpha,
            innovation_variance: link.variance,
        })
    }

    /// Product law for the cascaded channel.
    pub fn cascade(first: Self, second: Self) -> Self {
        Self {
            alpha: first.alpha * second.alpha,
            innovation_variance: first.innovation_variance * second.innovation_variance,
        }
    }
}

/// `σ² J0(2π f lag)`.
pub fn jakes_autocorr(link: LinkSpec, lag: i64) -> Result<f64> {
    if lag < 0 {
        return Err(domain("autocorrelation lag", lag as f64));
    }
    Ok(link.variance * bessel_j0(2.0 * PI * link.doppler * lag as f64)?)
}

pub fn ar1_alpha(spec: &ChannelSpec, channel_index: usize) -> Result<f64> {
    if channel_index > 2 {
        return Err(domain("channel index", channel_index as f64));
    }
    if spec.doppler[channel_index] == 0.0 {
        return Ok(1.0);
    }
    bessel_j0(2.0 * PI * spec.doppler[channel_index] * spec.spacing_n as f64)
}

pub fn cascaded_alpha(spec: &ChannelSpec) -> Result<f64> {
    spec.cascaded_alpha()
}

/// A realization of a fading process.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingProcess {
    pub coefficients: Vec<Complex64>,
    pub target_variance: f64,
    pub target_doppler: f64,
    pub seed: u64,
}

impl FadingProcess {
    pub fn mean_power(&self) -> f64 {
        self.coefficients.iter().map(|h| h.norm_sqr()).sum::<f64>() / self.coefficients.len() as f64
    }

    /// Empirical `E{h[k] h*[k+lag]}` normalized by the sample power.
    pub fn normalized_autocorr(&self, lag: usize) -> f64 {
        let h = &self.coefficients;
        if lag >= h.len() {
            return 0.0;
        }
        let n = h.len() - lag;
        let acc: Complex64 = (0..n).map(|k| h[k] * h[k + lag].conj()).sum();
        (acc.re / n as f64) / self.mean_power()
    }

    /// Writes `index,re,im` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "re", "im"])?;
        for (k, h) in self.coefficients.iter().enumerate() {
            w.write_record([k.to_string(), format!("{:.8e}", h.re), format!("{:.8e}", h.im)])?;
        }
        w.flush()
    }
}

/// A source of fading samples that can be restarted with a fresh realization.
pub trait Fader {
    /// Draws a new independent realization and rewinds to sample zero.
    fn redraw<R: Rng + ?Sized>(&mut self, rng: &mut R);
    /// Fills `out` with consecutive samples, continuing from the last call.
    fn fill<R: Rng + ?Sized>(&mut self, out: &mut [Complex64], rng: &mut R);
}

/// Sum-of-sinusoids Rayleigh fader.
///
/// The Doppler angles `(2πn - π)/(4M)` are fixed; each realization draws
/// fresh oscillator phases. Fixed angles make the time-average
/// autocorrelation of every single realization a midpoint rule for the
/// Jakes integral, accurate to rounding for `2πf·lag` well below `4M`.
#[derive(Debug, Clone)]
pub struct SosFader {
    scale: f64,
    frozen: bool,
    // Per-oscillator angular step and initial phase, I branch then Q branch.
    step: [f64; 2 * SOS_OSCILLATORS],
    phase0: [f64; 2 * SOS_OSCILLATORS],
    rot: [Complex64; 2 * SOS_OSCILLATORS],
    cur: [Complex64; 2 * SOS_OSCILLATORS],
    constant: Complex64,
    time: u64,
}

impl SosFader {
    pub fn new(link: LinkSpec, spacing_n: u32) -> Self {
        let omega = 2.0 * PI * link.doppler * spacing_n as f64;
        let mut step = [0.0; 2 * SOS_OSCILLATORS];
        let m = SOS_OSCILLATORS as f64;
        for n in 0..SOS_OSCILLATORS {
            let angle = (2.0 * PI * (n as f64 + 1.0) - PI) / (4.0 * m);
            step[n] = omega * angle.cos();
            step[SOS_OSCILLATORS + n] = omega * angle.sin();
        }
        Self {
            scale: (link.variance / m).sqrt(),
            frozen: omega == 0.0,
            step,
            phase0: [0.0; 2 * SOS_OSCILLATORS],
            rot: step.map(|w| Complex64::from_polar(1.0, w)),
            cur: [Complex64::new(1.0, 0.0); 2 * SOS_OSCILLATORS],
            constant: Complex64::new(0.0, 0.0),
            time: 0,
        }
    }

    fn anchor(&mut self) {
        let t = self.time as f64;
        for i in 0..2 * SOS_OSCILLATORS {
            self.cur[i] = Complex64::from_polar(1.0, self.step[i] * t + self.phase0[i]);
        }
    }
}

impl Fader for SosFader {
    fn redraw<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.time = 0;
        if self.frozen {
            // Zero Doppler: a single complex Gaussian draw held for the whole realization.
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            self.constant = Complex64::new(re, im) * (self.scale * self.scale * SOS_OSCILLATORS as f64 / 2.0).sqrt();
            return;
        }
        for p in self.phase0.iter_mut() {
            *p = rng.random_range(-PI..PI);
        }
        self.anchor();
    }

    fn fill<R: Rng + ?Sized>(&mut self, out: &mut [Complex64], _rng: &mut R) {
        if self.frozen {
            out.fill(self.constant);
            self.time += out.len() as u64;
            return;
        }
        for slot in out.iter_mut() {
            if self.time.is_multiple_of(REANCHOR_EVERY) && self.time > 0 {
                self.anchor();
            }
            let (mut re, mut im) = (0.0, 0.0);
            for n in 0..SOS_OSCILLATORS {
                re += self.cur[n].re;
                im += self.cur[SOS_OSCILLATORS + n].re;
            }
            *slot = Complex64::new(re, im) * self.scale;
            for (c, r) in self.cur.iter_mut().zip(self.rot.iter()) {
                *c *= r;
            }
            self.time += 1;
        }
    }
}

/// AR(1) innovation-form fader: `h[k] = α h[k-1] + sqrt(1-α²) e[k]`.
#[derive(Debug, Clone)]
pub struct Ar1Fader {
    params: Ar1Params,
    state: Complex64,
    fresh: bool,
}

impl Ar1Fader {
    pub fn new(link: LinkSpec, spacing_n: u32) -> Result<Self> {
        Ok(Self {
            params: Ar1Params::for_link(link, spacing_n)?,
            state: Complex64::new(0.0, 0.0),
            fresh: true,
        })
    }

    pub fn params(&self) -> Ar1Params {
        self.params
    }

    fn innovation<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let sd = (self.params.innovation_variance / 2.0).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * sd, im * sd)
    }
}

impl Fader for Ar1Fader {
    fn redraw<R: Rng + ?Sized>(&mut self, _rng: &mut R) {
        self.fresh = true;
    }

    fn fill<R: Rng + ?Sized>(&mut self, out: &mut [Complex64], rng: &mut R) {
        let a = self.params.alpha;
        let b = (1.0 - a * a).max(0.0).sqrt();
        for slot in out.iter_mut() {
            self.state = if self.fresh {
                self.fresh = false;
                self.innovation(rng)
            } else if b == 0.0 {
                self.state * a
            } else {
                self.state * a + self.innovation(rng) * b
            };
            *slot = self.state;
        }
    }
}

/// Selects the generator used for simulated channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GeneratorKind {
    #[default]
    SumOfSinusoids,
    Ar1,
}

/// Either generator behind one type, so links can be stored uniformly.
#[derive(Debug, Clone)]
pub enum AnyFader {
    Sos(SosFader),
    Ar1(Ar1Fader),
}

impl AnyFader {
    pub fn new(kind: GeneratorKind, link: LinkSpec, spacing_n: u32) -> Result<Self> {
        Ok(match kind {
            GeneratorKind::SumOfSinusoids => AnyFader::Sos(SosFader::new(link, spacing_n)),
            GeneratorKind::Ar1 => AnyFader::Ar1(Ar1Fader::new(link, spacing_n)?),
        })
    }
}

impl Fader for AnyFader {
    fn redraw<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        match self {
            AnyFader::Sos(f) => f.redraw(rng),
            AnyFader::Ar1(f) => f.redraw(rng),
        }
    }

    fn fill<R: Rng + ?Sized>(&mut self, out: &mut [Complex64], rng: &mut R) {
        match self {
            AnyFader::Sos(f) => f.fill(out, rng),
            AnyFader::Ar1(f) => f.fill(out, rng),
        }
    }
}

/// Fixed offsets separating the per-link sub-seeds of one master seed.
pub const LINK_SEED_OFFSETS: [u64; 3] = [0x0000_0000, 0x0100_0000, 0x0200_0000];

/// One SoS realization of `length` samples at unit channel-use spacing.
pub fn generate_jakes(link: LinkSpec, length: usize, seed: u64) -> Result<FadingProcess> {
    generate_with(GeneratorKind::SumOfSinusoids, link, 1, length, seed)
}

/// Like [`generate_jakes`] but with a chosen generator and spacing.
pub fn generate_with(
    kind: GeneratorKind,
    link: LinkSpec,
    spacing_n: u32,
    length: usize,
    seed: u64,
) -> Result<FadingProcess> {
    if length == 0 {
        return Err(DafError::Length {
            what: "fading process",
            needed: 1,
            got: 0,
        });
    }
    if !(link.variance.is_finite() && link.variance > 0.0) {
        return Err(domain("channel variance", link.variance));
    }
    if !(0.0..=0.5).contains(&link.doppler) {
        return Err(domain("normalized Doppler", link.doppler));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fader = AnyFader::new(kind, link, spacing_n)?;
    fader.redraw(&mut rng);
    let mut coefficients = vec![Complex64::new(0.0, 0.0); length];
    fader.fill(&mut coefficients, &mut rng);
    Ok(FadingProcess {
        coefficients,
        target_variance: link.variance,
        target_doppler: link.doppler,
        seed,
    })
}

/// `h[k] = h1[k]·h2[k]` from two independent SoS realizations.
///
/// The returned process carries `σ1²σ2²` as its target variance; its
/// `target_doppler` is the source–relay Doppler.
pub fn generate_cascaded(spec: &ChannelSpec, length: usize, seed: u64) -> Result<FadingProcess> {
    spec.validate()?;
    let h1 = generate_with(
        GeneratorKind::SumOfSinusoids,
        spec.link(1),
        spec.spacing_n,
        length,
        seed.wrapping_add(LINK_SEED_OFFSETS[1]),
    )?;
    let h2 = generate_with(
        GeneratorKind::SumOfSinusoids,
        spec.link(2),
        spec.spacing_n,
        length,
        seed.wrapping_add(LINK_SEED_OFFSETS[2]),
    )?;
    Ok(FadingProcess {
        coefficients: h1
            .coefficients
            .iter()
            .zip(&h2.coefficients)
            .map(|(a, b)| a * b)
            .collect(),
        target_variance: spec.sigma2[1] * spec.sigma2[2],
        target_doppler: spec.doppler[1],
        seed,
    })
}
