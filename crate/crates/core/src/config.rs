//! Scenario files and the built-in presets.
//!
//! A scenario file is TOML with one table per scenario:
//!
//! ```toml
//! [fast-source]
//! variances = [1, 1, 1]
//! doppler = [0.02, 0.02, 0.001]
//! q = "optimize"              # or a number in (0, 1)
//! snr_grid_db = [0, 10, 20, 30]
//! methods = ["sc", "smrc"]
//! relays = 1
//! spacing = 1
//! ```
//!
//! Instead of `snr_grid_db` a scenario may give `snr_start_db`,
//! `snr_stop_db` and `snr_step_db`. `q = "optimize"` is resolved by
//! minimizing the closed-form BER at [`OPTIMIZE_AT_DB`].

use std::collections::BTreeMap;
use std::ops::Range;

use serde::Deserialize;
use toml::Spanned;

use crate::analysis;
use crate::channel::ChannelSpec;
use crate::error::{DafError, Result};
use crate::montecarlo::Combiner;
use crate::relaylink::db_to_linear;

/// SNR at which `q = "optimize"` is resolved.
pub const OPTIMIZE_AT_DB: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QChoice {
    Fixed(f64),
    Optimize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub spec: ChannelSpec,
    pub q: QChoice,
    pub snr_grid_db: Vec<f64>,
    pub methods: Vec<Combiner>,
    pub relays: usize,
}

impl Scenario {
    /// The power allocation factor, optimizing if requested.
    pub fn resolve_q(&self) -> Result<f64> {
        match self.q {
            QChoice::Fixed(q) => Ok(q),
            QChoice::Optimize => Ok(analysis::optimize_q(&self.spec, db_to_linear(OPTIMIZE_AT_DB))?.q),
        }
    }

    /// Canonical TOML rendering; hashed into CSV provenance lines.
    pub fn to_toml(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let q = match self.q {
            QChoice::Fixed(q) => format!("{q:?}"),
            QChoice::Optimize => "\"optimize\"".into(),
        };
        let methods = self
            .methods
            .iter()
            .map(|m| format!("\"{}\"", m.name()))
            .collect::<Vec<_>>()
            .join(", ");
        format!(
            "[{}]\nvariances = [{}]\ndoppler = [{}]\nq = {}\nsnr_grid_db = [{}]\nmethods = [{}]\nrelays = {}\nspacing = {}\n",
            self.name,
            list(&self.spec.sigma2),
            list(&self.spec.doppler),
            q,
            list(&self.snr_grid_db),
            methods,
            self.relays,
            self.spec.spacing_n,
        )
    }
}

/// Channel variances of the three channel-quality scenarios.
pub const SCENARIO_VARIANCES: [(&str, [f64; 3]); 3] = [
    ("symmetric", [1.0, 1.0, 1.0]),
    ("strong-sr", [1.0, 10.0, 1.0]),
    ("strong-rd", [1.0, 1.0, 10.0]),
];

/// Optimum power allocation at 25 dB for each channel-quality scenario.
pub const SCENARIO_Q: [f64; 3] = [0.67, 0.58, 0.85];

/// Normalized Doppler rates `(f0, f1, f2)` of the three fading cases.
pub const FADING_CASES: [(&str, [f64; 3]); 3] = [
    ("case1", [0.001, 0.001, 0.001]),
    ("case2", [0.02, 0.02, 0.001]),
    ("case3", [0.05, 0.01, 0.05]),
];

/// Names of all presets, `<scenario>-<case>`.
pub fn preset_names() -> Vec<String> {
    SCENARIO_VARIANCES
        .iter()
        .flat_map(|(s, _)| FADING_CASES.iter().map(move |(c, _)| format!("{s}-{c}")))
        .collect()
}

/// A built-in scenario: reference variances, Doppler rates and `q`, a
/// 0–40 dB grid in 1 dB steps, both combiners and one relay.
pub fn preset(name: &str) -> Option<Scenario> {
    let (s, c) = name.rsplit_once('-')?;
    let i = SCENARIO_VARIANCES.iter().position(|(n, _)| *n == s)?;
    let (_, doppler) = FADING_CASES.iter().find(|(n, _)| *n == c)?;
    Some(Scenario {
        name: name.to_string(),
        spec: ChannelSpec::new(SCENARIO_VARIANCES[i].1, *doppler, 1).ok()?,
        q: QChoice::Fixed(SCENARIO_Q[i]),
        snr_grid_db: (0..=40).map(f64::from).collect(),
        methods: vec![Combiner::Selection, Combiner::SemiMrc],
        relays: 1,
    })
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawQ {
    Value(f64),
    Word(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    variances: Spanned<Vec<f64>>,
    doppler: Spanned<Vec<f64>>,
    q: Spanned<RawQ>,
    snr_grid_db: Option<Spanned<Vec<f64>>>,
    snr_start_db: Option<Spanned<f64>>,
    snr_stop_db: Option<Spanned<f64>>,
    snr_step_db: Option<Spanned<f64>>,
    methods: Option<Spanned<Vec<String>>>,
    relays: Option<Spanned<i64>>,
    spacing: Option<Spanned<i64>>,
}

/// Scenarios parsed from one file, sorted by name.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub scenarios: Vec<Scenario>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, RawScenario> =
            toml::from_str(text).map_err(|e| DafError::Config(e.to_string().trim_end().to_string()))?;
        let scenarios = raw
            .into_iter()
            .map(|(name, r)| build(text, name, r))
            .collect::<Result<Vec<_>>>()?;
        if scenarios.is_empty() {
            return Err(DafError::Config("no scenarios defined".into()));
        }
        Ok(Self { scenarios })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DafError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            DafError::Config(m) => DafError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn get(&self, name: &str) -> Option<&Scenario> {
        self.scenarios.iter().find(|s| s.name == name)
    }
}

fn line_of(text: &str, span: Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

fn build(text: &str, name: String, r: RawScenario) -> Result<Scenario> {
    let fail = |span: Range<usize>, field: &str, msg: String| {
        DafError::Config(format!(
            "line {}: scenario `{name}`, field `{field}`: {msg}",
            line_of(text, span)
        ))
    };
    let triple = |v: &Spanned<Vec<f64>>, field: &str| -> Result<[f64; 3]> {
        <[f64; 3]>::try_from(v.get_ref().as_slice())
            .map_err(|_| fail(v.span(), field, format!("expected 3 values, got {}", v.get_ref().len())))
    };
    let sigma2 = triple(&r.variances, "variances")?;
    if let Some(bad) = sigma2.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(fail(r.variances.span(), "variances", format!("{bad} is not a positive variance")));
    }
    let doppler = triple(&r.doppler, "doppler")?;
    if let Some(bad) = doppler.iter().find(|f| !(0.0..=0.5).contains(*f)) {
        return Err(fail(r.doppler.span(), "doppler", format!("{bad} is outside [0, 0.5]")));
    }
    let spacing = match &r.spacing {
        None => 1,
        Some(s) => u32::try_from(*s.get_ref())
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| fail(s.span(), "spacing", format!("{} is not a positive integer", s.get_ref())))?,
    };
    let spec = ChannelSpec::new(sigma2, doppler, spacing)?;

    let q = match r.q.get_ref() {
        RawQ::Value(q) if *q > 0.0 && *q < 1.0 => QChoice::Fixed(*q),
        RawQ::Value(q) => return Err(fail(r.q.span(), "q", format!("{q} is outside (0, 1)"))),
        RawQ::Word(w) if w == "optimize" => QChoice::Optimize,
        RawQ::Word(w) => return Err(fail(r.q.span(), "q", format!("expected a number or \"optimize\", got \"{w}\""))),
    };

    let snr_grid_db = match (&r.snr_grid_db, &r.snr_start_db, &r.snr_stop_db, &r.snr_step_db) {
        (Some(g), None, None, None) => {
            let grid = g.get_ref().clone();
            if grid.is_empty() {
                return Err(fail(g.span(), "snr_grid_db", "grid is empty".into()));
            }
            if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
                return Err(fail(g.span(), "snr_grid_db", "grid must be finite and strictly increasing".into()));
            }
            grid
        }
        (None, Some(a), Some(b), Some(s)) => {
            let (a0, b0, s0) = (*a.get_ref(), *b.get_ref(), *s.get_ref());
            if !(s0 > 0.0) || !(b0 >= a0) || !a0.is_finite() || !b0.is_finite() {
                return Err(fail(s.span(), "snr_step_db", format!("cannot step from {a0} to {b0} by {s0}")));
            }
            let n = ((b0 - a0) / s0 + 1e-9).floor() as usize;
            (0..=n).map(|i| a0 + i as f64 * s0).collect()
        }
        (None, None, None, None) => {
            return Err(DafError::Config(format!(
                "line {}: scenario `{name}`: missing `snr_grid_db`",
                line_of(text, r.variances.span())
            )))
        }
        _ => {
            return Err(DafError::Config(format!(
                "line {}: scenario `{name}`: give either `snr_grid_db` or all of `snr_start_db`, `snr_stop_db`, `snr_step_db`",
                line_of(text, r.variances.span())
            )))
        }
    };

    let methods = match &r.methods {
        None => vec![Combiner::Selection],
        Some(m) => {
            if m.get_ref().is_empty() {
                return Err(fail(m.span(), "methods", "list is empty".into()));
            }
            m.get_ref()
                .iter()
                .map(|s| {
                    Combiner::parse(s).ok_or_else(|| {
                        fail(m.span(), "methods", format!("unknown method \"{s}\" (expected sc, smrc or direct)"))
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };

    let relays = match &r.relays {
        None => 1,
        Some(l) => usize::try_from(*l.get_ref())
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| fail(l.span(), "relays", format!("{} is not a positive integer", l.get_ref())))?,
    };

    Ok(Scenario {
        name,
        spec,
        q,
        snr_grid_db,
        methods,
        relays,
    })
}
