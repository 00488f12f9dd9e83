//! C interface to `daf-core`.
//!
//! Every function returns a [`DafStatus`]. On anything other than
//! `DAF_STATUS_OK` a description is available from
//! [`daf_last_error_message`] on the same thread. Channels live behind an
//! opaque [`DafChannel`] handle created by [`daf_channel_new`] and released
//! with [`daf_channel_free`]. Powers are given as `P/N0` in dB.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use daf_core::analysis;
use daf_core::channel::{ChannelSpec, GeneratorKind};
use daf_core::montecarlo::{self, Combiner, McConfig};
use daf_core::relaylink::{db_to_linear, PowerSpec};
use daf_core::{specfun, DafError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DafStatus {
    Ok = 0,
    NullPointer = 1,
    /// An argument is outside its domain.
    Domain = 2,
    /// A buffer or sequence is too short.
    Length = 3,
    /// Invalid settings, such as a zero frame length.
    Config = 4,
    /// The library panicked; this is a bug.
    Internal = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DafCombiner {
    Selection = 0,
    SemiMrc = 1,
    DirectOnly = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DafGenerator {
    SumOfSinusoids = 0,
    Ar1 = 1,
}

/// Opaque channel description: three link variances, three normalized
/// Doppler rates and the symbol spacing.
pub struct DafChannel {
    spec: ChannelSpec,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DafBerBreakdown {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub total: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DafQOptimum {
    pub q: f64,
    pub ber: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DafMcOptions {
    pub min_bit_errors: u64,
    pub max_bits: u64,
    pub frame_length: usize,
    pub seed: u64,
    pub combiner: DafCombiner,
    pub relays: usize,
    pub generator: DafGenerator,
    /// Worker threads; 0 reads `DAF_THREADS`, then uses all cores.
    pub threads: usize,
    pub noiseless: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DafBerReport {
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    pub confidence_radius_95: f64,
    /// NaN when no closed form applies.
    pub theory_ber: f64,
    /// NaN when no closed form applies.
    pub floor: f64,
    pub below_resolution: bool,
    pub budget_exhausted: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &DafError) -> DafStatus {
    match e {
        DafError::Domain { .. } | DafError::NotBpsk { .. } => DafStatus::Domain,
        DafError::Length { .. } => DafStatus::Length,
        DafError::Merge(_) | DafError::Config(_) => DafStatus::Config,
    }
}

/// Runs `f`, recording any error or panic for [`daf_last_error_message`].
fn guard<F>(f: F) -> DafStatus
where
    F: FnOnce() -> Result<(), (DafStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DafStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            DafStatus::Internal
        }
    }
}

fn core(e: DafError) -> (DafStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (DafStatus, String) {
    (DafStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
///
/// `channel` must be null or a live handle from [`daf_channel_new`].
unsafe fn channel_ref<'a>(channel: *const DafChannel) -> Result<&'a ChannelSpec, (DafStatus, String)> {
    unsafe { channel.as_ref() }.map(|c| &c.spec).ok_or_else(|| null("channel"))
}

/// # Safety
///
/// `out` must be null or valid for a write of `T`.
unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), (DafStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    unsafe { out.write(value) };
    Ok(())
}

/// Message of the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn daf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn daf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a channel handle.
///
/// # Safety
///
/// `sigma2` and `doppler` must each point to three readable doubles and
/// `out` must be valid for a pointer write. On success `*out` owns a handle
/// that must be passed to [`daf_channel_free`] exactly once.
#[no_mangle]
pub unsafe extern "C" fn daf_channel_new(
    sigma2: *const f64,
    doppler: *const f64,
    spacing: u32,
    out: *mut *mut DafChannel,
) -> DafStatus {
    guard(|| {
        if sigma2.is_null() {
            return Err(null("sigma2"));
        }
        if doppler.is_null() {
            return Err(null("doppler"));
        }
        let (s, f) = unsafe { (ptr::read_unaligned(sigma2.cast::<[f64; 3]>()), ptr::read_unaligned(doppler.cast::<[f64; 3]>())) };
        let spec = ChannelSpec::new(s, f, spacing).map_err(core)?;
        unsafe { write_out(out, Box::into_raw(Box::new(DafChannel { spec }))) }
    })
}

/// Releases a channel handle. Null is ignored.
///
/// # Safety
///
/// `channel` must be null or a handle from [`daf_channel_new`] that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn daf_channel_free(channel: *mut DafChannel) {
    if !channel.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(unsafe { Box::from_raw(channel) })));
    }
}

/// Lag-spacing correlation coefficients of the direct link and the cascaded
/// relay link.
///
/// # Safety
///
/// `channel` must be a live handle; `alpha0` and `alpha` must be valid for
/// a double write.
#[no_mangle]
pub unsafe extern "C" fn daf_channel_correlations(channel: *const DafChannel, alpha0: *mut f64, alpha: *mut f64) -> DafStatus {
    guard(|| {
        let spec = unsafe { channel_ref(channel) }?;
        let a0 = spec.alpha(0).map_err(core)?;
        let a = spec.cascaded_alpha().map_err(core)?;
        unsafe {
            write_out(alpha0, a0)?;
            write_out(alpha, a)
        }
    })
}

/// Averaged BER of selection combining with one relay.
///
/// # Safety
///
/// `channel` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn daf_ber_closed_form(
    channel: *const DafChannel,
    p_over_n0_db: f64,
    q: f64,
    out: *mut DafBerBreakdown,
) -> DafStatus {
    guard(|| {
        let spec = unsafe { channel_ref(channel) }?;
        let p = PowerSpec::from_db(p_over_n0_db, q).map_err(core)?;
        let b = analysis::ber_closed_form(spec, &p).map_err(core)?;
        unsafe {
            write_out(
                out,
                DafBerBreakdown {
                    i1: b.i1,
                    i2: b.i2,
                    i3: b.i3,
                    total: b.total,
                },
            )
        }
    })
}

/// BER limit as the power grows without bound.
///
/// # Safety
///
/// `channel` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn daf_error_floor(channel: *const DafChannel, q: f64, out: *mut DafBerBreakdown) -> DafStatus {
    guard(|| {
        let spec = unsafe { channel_ref(channel) }?;
        let f = analysis::error_floor(spec, q).map_err(core)?;
        unsafe {
            write_out(
                out,
                DafBerBreakdown {
                    i1: f.i1,
                    i2: f.i2,
                    i3: f.i3,
                    total: f.total,
                },
            )
        }
    })
}

/// Power allocation factor minimizing the closed-form BER.
///
/// # Safety
///
/// `channel` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn daf_optimize_q(channel: *const DafChannel, p_over_n0_db: f64, out: *mut DafQOptimum) -> DafStatus {
    guard(|| {
        let spec = unsafe { channel_ref(channel) }?;
        let best = analysis::optimize_q(spec, db_to_linear(p_over_n0_db)).map_err(core)?;
        unsafe { write_out(out, DafQOptimum { q: best.q, ber: best.ber }) }
    })
}

/// Default Monte Carlo settings.
#[no_mangle]
pub extern "C" fn daf_mc_options_default() -> DafMcOptions {
    let d = McConfig::default();
    DafMcOptions {
        min_bit_errors: d.min_bit_errors,
        max_bits: d.max_bits,
        frame_length: d.frame_length,
        seed: d.seed,
        combiner: DafCombiner::Selection,
        relays: d.relays,
        generator: DafGenerator::SumOfSinusoids,
        threads: 0,
        noiseless: d.noiseless,
    }
}

/// Monte Carlo BER estimate. A report with `budget_exhausted` set is still
/// `DAF_STATUS_OK`.
///
/// # Safety
///
/// `channel` must be a live handle, `options` null (defaults) or readable,
/// and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn daf_simulate(
    channel: *const DafChannel,
    p_over_n0_db: f64,
    q: f64,
    options: *const DafMcOptions,
    out: *mut DafBerReport,
) -> DafStatus {
    guard(|| {
        let spec = unsafe { channel_ref(channel) }?;
        let o = unsafe { options.as_ref() }.copied().unwrap_or_else(|| daf_mc_options_default());
        let cfg = McConfig {
            min_bit_errors: o.min_bit_errors,
            max_bits: o.max_bits,
            frame_length: o.frame_length,
            seed: o.seed,
            combiner: match o.combiner {
                DafCombiner::Selection => Combiner::Selection,
                DafCombiner::SemiMrc => Combiner::SemiMrc,
                DafCombiner::DirectOnly => Combiner::DirectOnly,
            },
            relays: o.relays,
            generator: match o.generator {
                DafGenerator::SumOfSinusoids => GeneratorKind::SumOfSinusoids,
                DafGenerator::Ar1 => GeneratorKind::Ar1,
            },
            threads: (o.threads > 0).then_some(o.threads),
            noiseless: o.noiseless,
            ..McConfig::default()
        };
        let p = PowerSpec::from_db(p_over_n0_db, q).map_err(core)?;
        let r = montecarlo::estimate_ber(spec, &p, &cfg).map_err(core)?;
        unsafe {
            write_out(
                out,
                DafBerReport {
                    bits: r.bits,
                    errors: r.errors,
                    ber: r.ber,
                    confidence_radius_95: r.confidence_radius_95,
                    theory_ber: r.theory_ber.unwrap_or(f64::NAN),
                    floor: r.floor.unwrap_or(f64::NAN),
                    below_resolution: r.below_resolution,
                    budget_exhausted: r.budget_exhausted,
                },
            )
        }
    })
}

/// Bessel function of the first kind, order zero.
///
/// # Safety
///
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn daf_bessel_j0(x: f64, out: *mut f64) -> DafStatus {
    guard(|| {
        let v = specfun::bessel_j0(x).map_err(core)?;
        unsafe { write_out(out, v) }
    })
}

/// `e^x E1(x)` for `x > 0`.
///
/// # Safety
///
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn daf_exp_scaled_e1(x: f64, out: *mut f64) -> DafStatus {
    guard(|| {
        let v = specfun::exp_scaled_e1(x).map_err(core)?;
        unsafe { write_out(out, v) }
    })
}
