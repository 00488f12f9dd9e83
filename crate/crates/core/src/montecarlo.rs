//! Monte Carlo BER estimation.
//!
//! Frames of `frame_length` data symbols follow one reference symbol. Every
//! frame sees a fresh channel realization. Frames are grouped into chunks
//! whose random streams derive only from the master seed and the chunk
//! index; chunks are evaluated in parallel and folded in index order, and
//! the run stops at the first chunk where either stopping rule is met. The
//! result is therefore independent of the number of worker threads.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analysis;
use crate::channel::{AnyFader, ChannelSpec, Fader, GeneratorKind};
use crate::detect::{decide, decision_variable, sc_combine, semi_mrc_combine};
use crate::error::{DafError, Result};
use crate::relaylink::PowerSpec;

/// Environment variable that sets the worker count when none is configured.
pub const THREADS_ENV: &str = "DAF_THREADS";

/// How the destination combines the branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Combiner {
    #[default]
    Selection,
    SemiMrc,
    DirectOnly,
}

impl Combiner {
    pub fn name(self) -> &'static str {
        match self {
            Combiner::Selection => "sc",
            Combiner::SemiMrc => "smrc",
            Combiner::DirectOnly => "direct",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sc" => Some(Combiner::Selection),
            "smrc" => Some(Combiner::SemiMrc),
            "direct" => Some(Combiner::DirectOnly),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub min_bit_errors: u64,
    pub max_bits: u64,
    pub frame_length: usize,
    pub seed: u64,
    pub combiner: Combiner,
    pub relays: usize,
    pub generator: GeneratorKind,
    /// Worker threads; `None` reads [`THREADS_ENV`], then uses all cores.
    pub threads: Option<usize>,
    /// Drop all receiver noise.
    pub noiseless: bool,
    pub chunk_frames: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            min_bit_errors: 200,
            max_bits: 100_000_000,
            frame_length: 100,
            seed: 1,
            combiner: Combiner::Selection,
            relays: 1,
            generator: GeneratorKind::SumOfSinusoids,
            threads: None,
            noiseless: false,
            chunk_frames: 64,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frame_length == 0 {
            return Err(DafError::Config("frame_length must be positive".into()));
        }
        if self.relays == 0 && self.combiner != Combiner::DirectOnly {
            return Err(DafError::Config("at least one relay is required".into()));
        }
        if self.chunk_frames == 0 {
            return Err(DafError::Config("chunk_frames must be positive".into()));
        }
        if self.max_bits == 0 {
            return Err(DafError::Config("max_bits must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(DafError::Config("threads must be positive".into()));
        }
        Ok(())
    }

    fn worker_count(&self) -> usize {
        self.threads
            .or_else(|| std::env::var(THREADS_ENV).ok()?.trim().parse().ok())
            .filter(|&n| n > 0)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

/// The settings two reports must share to be merged.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTag {
    pub spec: ChannelSpec,
    pub p_over_n0: f64,
    pub q: f64,
    pub combiner: Combiner,
    pub relays: usize,
    pub frame_length: usize,
    pub generator: GeneratorKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerReport {
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    /// Half-width of the normal-approximation 95% interval.
    pub confidence_radius_95: f64,
    /// Closed-form prediction, where one exists for the configuration.
    pub theory_ber: Option<f64>,
    pub floor: Option<f64>,
    /// No errors were observed.
    pub below_resolution: bool,
    /// The bit budget ran out before the error target was reached.
    pub budget_exhausted: bool,
    pub tag: RunTag,
}

impl BerReport {
    fn from_counts(bits: u64, errors: u64, min_errors: u64, tag: RunTag, theory: (Option<f64>, Option<f64>)) -> Self {
        let ber = if bits == 0 { 0.0 } else { errors as f64 / bits as f64 };
        Self {
            bits,
            errors,
            ber,
            confidence_radius_95: confidence_radius(ber, bits),
            theory_ber: theory.0,
            floor: theory.1,
            below_resolution: errors == 0,
            budget_exhausted: errors < min_errors,
            tag,
        }
    }

    /// Pools the counts of two runs with the same settings and different seeds.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.tag != other.tag {
            return Err(DafError::Merge(format!("{:?} vs {:?}", self.tag, other.tag)));
        }
        let bits = self.bits + other.bits;
        let errors = self.errors + other.errors;
        let ber = if bits == 0 { 0.0 } else { errors as f64 / bits as f64 };
        Ok(Self {
            bits,
            errors,
            ber,
            confidence_radius_95: confidence_radius(ber, bits),
            theory_ber: self.theory_ber,
            floor: self.floor,
            below_resolution: errors == 0,
            budget_exhausted: self.budget_exhausted && other.budget_exhausted,
            tag: self.tag.clone(),
        })
    }
}

/// `1.96 sqrt(p(1-p)/n)`.
pub fn confidence_radius(ber: f64, bits: u64) -> f64 {
    if bits == 0 {
        return f64::INFINITY;
    }
    1.96 * (ber * (1.0 - ber) / bits as f64).sqrt()
}

/// Estimates the BER at one operating point.
pub fn estimate_ber(spec: &ChannelSpec, power: &PowerSpec, cfg: &McConfig) -> Result<BerReport> {
    spec.validate()?;
    power.validate()?;
    cfg.validate()?;
    let sim = Simulator::new(spec, power, cfg)?;

    let bits_per_frame = cfg.frame_length as u64;
    let total_frames = cfg.max_bits.div_ceil(bits_per_frame);
    let chunks = total_frames.div_ceil(cfg.chunk_frames as u64);
    let workers = cfg.worker_count();
    let wave = (workers * 4) as u64;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| DafError::Config(format!("thread pool: {e}")))?;

    let (mut bits, mut errors) = (0u64, 0u64);
    let mut next = 0u64;
    'outer: while next < chunks {
        let end = (next + wave).min(chunks);
        let counts: Vec<(u64, u64)> = pool.install(|| {
            (next..end)
                .into_par_iter()
                .map(|c| {
                    let first = c * cfg.chunk_frames as u64;
                    let frames = (cfg.chunk_frames as u64).min(total_frames - first);
                    sim.run_chunk(c, frames as usize)
                })
                .collect()
        });
        for (b, e) in counts {
            bits += b;
            errors += e;
            if errors >= cfg.min_bit_errors || bits >= cfg.max_bits {
                break 'outer;
            }
        }
        next = end;
    }

    let tag = RunTag {
        spec: *spec,
        p_over_n0: power.total_power_over_noise,
        q: power.q,
        combiner: cfg.combiner,
        relays: cfg.relays,
        frame_length: cfg.frame_length,
        generator: cfg.generator,
    };
    let theory = theory_for(spec, power, cfg)?;
    Ok(BerReport::from_counts(bits, errors, cfg.min_bit_errors, tag, theory))
}

fn theory_for(spec: &ChannelSpec, power: &PowerSpec, cfg: &McConfig) -> Result<(Option<f64>, Option<f64>)> {
    Ok(match cfg.combiner {
        Combiner::Selection if cfg.relays == 1 => (
            Some(analysis::ber_closed_form(spec, power)?.total),
            Some(analysis::error_floor(spec, power.q)?.total),
        ),
        Combiner::DirectOnly => (
            Some(analysis::direct_only_ber(spec, power)?),
            Some(0.5 * (1.0 - spec.alpha(0)?)),
        ),
        _ => (None, None),
    })
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of chunk `index` under master seed `seed`.
pub fn chunk_seed(seed: u64, index: u64) -> u64 {
    mix(mix(seed) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

// Stream ids within one chunk.
const DATA_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;
const CHANNEL_STREAM: u64 = 2;

struct Simulator {
    spec: ChannelSpec,
    cfg: McConfig,
    amp: f64,
    gain: f64,
    relay_gain_var: Vec<f64>,
    noise_sd: f64,
    relays: usize,
}

impl Simulator {
    fn new(spec: &ChannelSpec, power: &PowerSpec, cfg: &McConfig) -> Result<Self> {
        let relays = if cfg.combiner == Combiner::DirectOnly { 0 } else { cfg.relays };
        let n0 = power.noise_variance;
        let p0 = power.source_power();
        let p1 = power.relay_power() / relays.max(1) as f64;
        let gain = (p1 / (p0 * spec.sigma2[1] + n0)).sqrt();
        Ok(Self {
            spec: *spec,
            cfg: cfg.clone(),
            amp: p0.sqrt(),
            gain,
            relay_gain_var: vec![gain * gain * spec.sigma2[2]; relays],
            noise_sd: if cfg.noiseless { 0.0 } else { (0.5 * n0).sqrt() },
            relays,
        })
    }

    fn faders(&self) -> Vec<AnyFader> {
        let mut out = Vec::with_capacity(1 + 2 * self.relays);
        let n = self.spec.spacing_n;
        out.push(AnyFader::new(self.cfg.generator, self.spec.link(0), n).expect("validated spec"));
        for _ in 0..self.relays {
            out.push(AnyFader::new(self.cfg.generator, self.spec.link(1), n).expect("validated spec"));
            out.push(AnyFader::new(self.cfg.generator, self.spec.link(2), n).expect("validated spec"));
        }
        out
    }

    /// Returns `(bits, errors)` for `frames` frames of chunk `index`.
    fn run_chunk(&self, index: u64, frames: usize) -> (u64, u64) {
        let seed = chunk_seed(self.cfg.seed, index);
        let stream = |id: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(id);
            r
        };
        let mut data_rng = stream(DATA_STREAM);
        let mut noise_rng = stream(NOISE_STREAM);
        let mut chan_rng = stream(CHANNEL_STREAM);

        let uses = self.cfg.frame_length + 1;
        let mut faders = self.faders();
        let mut h: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); uses]; faders.len()];
        let mut data = vec![0.0f64; uses];
        let mut tx = vec![0.0f64; uses];
        let mut y0 = vec![Complex64::new(0.0, 0.0); uses];
        let mut y2 = vec![vec![Complex64::new(0.0, 0.0); uses]; self.relays];
        let mut zr = vec![0.0f64; self.relays];
        let mut errors = 0u64;

        for _ in 0..frames {
            for (f, buf) in faders.iter_mut().zip(h.iter_mut()) {
                f.redraw(&mut chan_rng);
                f.fill(buf, &mut chan_rng);
            }
            tx[0] = 1.0;
            for k in 1..uses {
                data[k] = if data_rng.random::<bool>() { 1.0 } else { -1.0 };
                tx[k] = tx[k - 1] * data[k];
            }
            for k in 0..uses {
                y0[k] = h[0][k] * (self.amp * tx[k]) + self.noise(&mut noise_rng);
            }
            for (l, out) in y2.iter_mut().enumerate() {
                let (h1, h2) = (&h[1 + 2 * l], &h[2 + 2 * l]);
                for k in 0..uses {
                    let y1 = h1[k] * (self.amp * tx[k]) + self.noise(&mut noise_rng);
                    out[k] = h2[k] * y1 * self.gain + self.noise(&mut noise_rng);
                }
            }
            for k in 1..uses {
                let z0 = decision_variable(y0[k - 1], y0[k]);
                for (z, y) in zr.iter_mut().zip(&y2) {
                    *z = decision_variable(y[k - 1], y[k]);
                }
                let combined = match self.cfg.combiner {
                    Combiner::Selection => sc_combine(z0, &zr).0,
                    Combiner::SemiMrc => semi_mrc_combine(z0, &zr, 1.0, &self.relay_gain_var),
                    Combiner::DirectOnly => z0,
                };
                if decide(combined) != data[k] {
                    errors += 1;
                }
            }
        }
        ((frames * self.cfg.frame_length) as u64, errors)
    }

    #[inline]
    fn noise(&self, rng: &mut ChaCha8Rng) -> Complex64 {
        if self.noise_sd == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * self.noise_sd, im * self.noise_sd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn static_spec() -> ChannelSpec {
        ChannelSpec::new([1.0; 3], [0.0; 3], 1).unwrap()
    }

    fn small(seed: u64) -> McConfig {
        McConfig {
            min_bit_errors: 100,
            max_bits: 200_000,
            seed,
            threads: Some(1),
            ..McConfig::default()
        }
    }

    #[test]
    fn noiseless_static_channel_is_error_free() {
        let cfg = McConfig {
            noiseless: true,
            max_bits: 50_000,
            ..small(3)
        };
        let r = estimate_ber(&static_spec(), &PowerSpec::from_db(10.0, 0.5).unwrap(), &cfg).unwrap();
        assert_eq!(r.errors, 0);
        assert_eq!(r.bits, 50_000);
        assert!(r.below_resolution && r.budget_exhausted);
    }

    #[test]
    fn zero_power_is_a_coin_flip() {
        let cfg = McConfig {
            min_bit_errors: 5_000,
            ..small(4)
        };
        let r = estimate_ber(&static_spec(), &PowerSpec::new(1e-12, 0.5).unwrap(), &cfg).unwrap();
        assert!((r.ber - 0.5).abs() < 0.03, "{}", r.ber);
    }

    #[test]
    fn seed_reproducible_and_thread_independent() {
        let spec = ChannelSpec::new([1.0; 3], [0.01; 3], 1).unwrap();
        let p = PowerSpec::from_db(15.0, 0.6).unwrap();
        let a = estimate_ber(&spec, &p, &small(9)).unwrap();
        let b = estimate_ber(&spec, &p, &McConfig { threads: Some(3), ..small(9) }).unwrap();
        let c = estimate_ber(&spec, &p, &small(10)).unwrap();
        assert_eq!(a, b);
        assert_ne!((a.bits, a.errors), (c.bits, c.errors));
    }

    #[test]
    fn merge_pools_counts() {
        let p = PowerSpec::from_db(10.0, 0.6).unwrap();
        let a = estimate_ber(&static_spec(), &p, &small(1)).unwrap();
        let b = estimate_ber(&static_spec(), &p, &small(2)).unwrap();
        let m = a.merge(&b).unwrap();
        assert_eq!(m.bits, a.bits + b.bits);
        assert_eq!(m.errors, a.errors + b.errors);
        let other = estimate_ber(&static_spec(), &PowerSpec::from_db(11.0, 0.6).unwrap(), &small(2)).unwrap();
        assert!(matches!(a.merge(&other), Err(DafError::Merge(_))));
    }

    #[test]
    fn config_validation() {
        let bad = McConfig { frame_length: 0, ..McConfig::default() };
        assert!(bad.validate().is_err());
        let bad = McConfig { relays: 0, ..McConfig::default() };
        assert!(bad.validate().is_err());
        let ok = McConfig { relays: 0, combiner: Combiner::DirectOnly, ..McConfig::default() };
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn chunk_seeds_differ() {
        let s: std::collections::HashSet<u64> = (0..1000).map(|i| chunk_seed(7, i)).collect();
        assert_eq!(s.len(), 1000);
        assert_ne!(chunk_seed(7, 0), chunk_seed(8, 0));
    }

    #[test]
    fn combiner_names_round_trip() {
        for c in [Combiner::Selection, Combiner::SemiMrc, Combiner::DirectOnly] {
            assert_eq!(Combiner::parse(c.name()), Some(c));
        }
        assert_eq!(Combiner::parse("mrc"), None);
    }
}
