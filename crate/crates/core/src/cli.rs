//! The `dafsim` batch driver.
//!
//! Every command writes CSV: a `# provenance:` comment, a header line, then
//! one row per data point. Exit status is [`EXIT_OK`], [`EXIT_CONFIG`] for
//! bad input, or [`EXIT_BUDGET`] when a simulation hit its bit budget before
//! collecting the requested errors.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use crate::analysis;
use crate::channel::{ChannelSpec, GeneratorKind};
use crate::config::{self, ConfigFile, Scenario, SCENARIO_Q, SCENARIO_VARIANCES};
use crate::error::DafError;
use crate::montecarlo::{self, Combiner, McConfig};
use crate::relaylink::{db_to_linear, PowerSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

pub const DEFAULT_SCENARIO: &str = "symmetric-case1";

#[derive(Debug, Parser)]
#[command(name = "dafsim", version, about = "D-AF relaying with DBPSK: closed-form BER, error floors and Monte Carlo")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form BER and its three terms over the SNR grid.
    Theory(TheoryArgs),
    /// Error floor against the fade rate of the first two links.
    Floor(FloorArgs),
    /// Optimum power allocation at each SNR.
    OptimizeQ(OptimizeArgs),
    /// Monte Carlo BER over the SNR grid.
    Simulate(SimulateArgs),
    /// Print the built-in scenarios as a config file.
    Presets(OutArgs),
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Write CSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// TOML scenario file; without it `--scenario` names a preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_SCENARIO)]
    pub scenario: String,
    /// Replace the scenario's SNR grid (dB, comma separated).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub snr: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Args)]
pub struct FloorArgs {
    #[arg(long, default_value_t = 0.001)]
    pub f_min: f64,
    #[arg(long, default_value_t = 0.1)]
    pub f_max: f64,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// Fade rate of the relay-destination link.
    #[arg(long, default_value_t = 0.001)]
    pub f2: f64,
    #[arg(long, value_enum, default_value_t = Spacing::Log)]
    pub spacing: Spacing,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Also write the BER over the whole q grid for each SNR.
    #[arg(long)]
    pub grid_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Sc,
    Smrc,
    Direct,
}

impl From<Method> for Combiner {
    fn from(m: Method) -> Self {
        match m {
            Method::Sc => Combiner::Selection,
            Method::Smrc => Combiner::SemiMrc,
            Method::Direct => Combiner::DirectOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Sos,
    Ar1,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 200)]
    pub min_errors: u64,
    #[arg(long, default_value_t = 100_000_000)]
    pub max_bits: u64,
    /// Overrides the scenario's relay count.
    #[arg(long)]
    pub relays: Option<usize>,
    /// Overrides the scenario's method list.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub method: Option<Vec<Method>>,
    #[arg(long, default_value_t = 100)]
    pub frame_length: usize,
    #[arg(long, value_enum, default_value_t = Generator::Sos)]
    pub generator: Generator,
    #[arg(long, env = montecarlo::THREADS_ENV)]
    pub threads: Option<usize>,
    /// Remove all receiver noise.
    #[arg(long)]
    pub noiseless: bool,
}

/// Errors that end a command, mapped onto exit codes.
#[derive(Debug)]
enum Failure {
    Config(String),
    Io(io::Error),
}

impl From<DafError> for Failure {
    fn from(e: DafError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(io::Error::other(e))
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                EXIT_CONFIG
            } else {
                let _ = write!(stdout, "{}", e.render());
                EXIT_OK
            };
            return code;
        }
    };
    match execute(&cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(Failure::Config(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_CONFIG
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_IO
        }
    }
}

fn execute(cmd: &Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    match cmd {
        Command::Theory(a) => theory(a, stdout),
        Command::Floor(a) => floor(a, stdout),
        Command::OptimizeQ(a) => optimize(a, stdout),
        Command::Simulate(a) => simulate(a, stdout, stderr),
        Command::Presets(a) => {
            let text: String = config::preset_names()
                .iter()
                .filter_map(|n| config::preset(n))
                .map(|s| s.to_toml())
                .collect::<Vec<_>>()
                .join("\n");
            let mut sink = open(&a.out, stdout)?;
            sink.write_all(text.as_bytes())?;
            Ok(EXIT_OK)
        }
    }
}

/// Formats a float with nine significant digits.
pub fn fmt(x: f64) -> String {
    format!("{x:.8e}")
}

fn load_scenario(a: &ScenarioArgs) -> Result<Scenario, Failure> {
    let mut s = match &a.config {
        Some(path) => {
            let file = ConfigFile::load(path)?;
            let names = file.scenarios.iter().map(|s| s.name.as_str()).collect::<Vec<_>>().join(", ");
            file.get(&a.scenario).cloned().ok_or_else(|| {
                Failure::Config(format!("{}: no scenario `{}` (have: {names})", path.display(), a.scenario))
            })?
        }
        None => config::preset(&a.scenario).ok_or_else(|| {
            Failure::Config(format!(
                "unknown preset `{}` (have: {})",
                a.scenario,
                config::preset_names().join(", ")
            ))
        })?,
    };
    if let Some(grid) = &a.snr {
        if grid.is_empty() {
            return Err(Failure::Config("--snr: grid is empty".into()));
        }
        if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Failure::Config("--snr: grid must be finite and strictly increasing".into()));
        }
        s.snr_grid_db = grid.clone();
    }
    Ok(s)
}

fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn provenance(hash: &str, scenario: &str, seed: u64) -> String {
    format!(
        "# provenance: config_sha256={hash} scenario={scenario} seed={seed} version={}\n",
        env!("CARGO_PKG_VERSION")
    )
}

fn open<'a>(path: &Option<PathBuf>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>, Failure> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(stdout),
    })
}

fn write_csv(
    out: &Option<PathBuf>,
    stdout: &mut dyn Write,
    provenance: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), Failure> {
    let mut sink = open(out, stdout)?;
    sink.write_all(provenance.as_bytes())?;
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn theory(a: &TheoryArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let s = load_scenario(&a.scenario)?;
    let q = s.resolve_q()?;
    let floor = analysis::error_floor(&s.spec, q)?.total;
    let rows = s
        .snr_grid_db
        .iter()
        .map(|&db| {
            let b = analysis::ber_closed_form(&s.spec, &PowerSpec::from_db(db, q)?)?;
            Ok(vec![fmt(db), fmt(b.total), fmt(b.i1), fmt(b.i2), fmt(b.i3), fmt(floor)])
        })
        .collect::<Result<Vec<_>, DafError>>()?;
    write_csv(
        &a.scenario.out.out,
        stdout,
        &provenance(&sha256_hex(&s.to_toml()), &s.name, a.scenario.seed),
        &["snr_db", "ber_theory", "i1", "i2", "i3", "floor"],
        &rows,
    )?;
    Ok(EXIT_OK)
}

/// The fade-rate grid of the floor sweep.
pub fn floor_grid(f_min: f64, f_max: f64, points: usize, spacing: Spacing) -> Result<Vec<f64>, DafError> {
    let bad = |m: &str| DafError::Config(format!("floor sweep: {m}"));
    if !(0.0..=0.5).contains(&f_min) || !(0.0..=0.5).contains(&f_max) {
        return Err(bad("fade rates must lie in [0, 0.5]"));
    }
    if f_max < f_min {
        return Err(bad("--f-max is below --f-min"));
    }
    if points == 0 {
        return Err(bad("--points must be positive"));
    }
    if points == 1 {
        return Ok(vec![f_min]);
    }
    let t = |i: usize| i as f64 / (points - 1) as f64;
    Ok(match spacing {
        Spacing::Linear => (0..points).map(|i| f_min + (f_max - f_min) * t(i)).collect(),
        Spacing::Log => {
            if f_min <= 0.0 {
                return Err(bad("log spacing needs --f-min > 0"));
            }
            let (a, b) = (f_min.ln(), f_max.ln());
            (0..points).map(|i| (a + (b - a) * t(i)).exp()).collect()
        }
    })
}

fn floor(a: &FloorArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    if !(0.0..=0.5).contains(&a.f2) {
        return Err(Failure::Config(format!("floor sweep: --f2 {} is outside [0, 0.5]", a.f2)));
    }
    let grid = floor_grid(a.f_min, a.f_max, a.points, a.spacing)?;
    let mut rows = Vec::with_capacity(grid.len());
    for &f in &grid {
        let mut row = vec![fmt(f)];
        for (i, (_, sigma2)) in SCENARIO_VARIANCES.iter().enumerate() {
            let spec = ChannelSpec::new(*sigma2, [f, f, a.f2], 1)?;
            row.push(fmt(analysis::error_floor(&spec, SCENARIO_Q[i])?.total));
        }
        rows.push(row);
    }
    let desc = format!(
        "f_min={} f_max={} points={} f2={} spacing={:?}",
        a.f_min, a.f_max, a.points, a.f2, a.spacing
    );
    write_csv(
        &a.out.out,
        stdout,
        &provenance(&sha256_hex(&desc), "floor-sweep", 0),
        &["f", "floor_symmetric", "floor_strong_sr", "floor_strong_rd"],
        &rows,
    )?;
    Ok(EXIT_OK)
}

fn optimize(a: &OptimizeArgs, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let mut s = load_scenario(&a.scenario)?;
    if a.scenario.snr.is_none() {
        s.snr_grid_db = vec![20.0, 25.0, 30.0];
    }
    let hash = sha256_hex(&s.to_toml());
    let prov = provenance(&hash, &s.name, a.scenario.seed);
    let mut rows = Vec::new();
    let mut grid_rows = Vec::new();
    for &db in &s.snr_grid_db {
        let p = db_to_linear(db);
        let best = analysis::optimize_q(&s.spec, p)?;
        rows.push(vec![fmt(db), fmt(best.q), fmt(best.ber)]);
        if a.grid_out.is_some() {
            for (q, ber) in analysis::ber_vs_q(&s.spec, p)? {
                grid_rows.push(vec![fmt(db), fmt(q), fmt(ber)]);
            }
        }
    }
    if let Some(path) = &a.grid_out {
        let mut sink = io::sink();
        write_csv(&Some(path.clone()), &mut sink, &prov, &["snr_db", "q", "ber"], &grid_rows)?;
    }
    write_csv(&a.scenario.out.out, stdout, &prov, &["snr_db", "q_opt", "ber_at_opt"], &rows)?;
    Ok(EXIT_OK)
}

fn simulate(a: &SimulateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let mut s = load_scenario(&a.scenario)?;
    if let Some(l) = a.relays {
        s.relays = l;
    }
    if let Some(m) = &a.method {
        if m.is_empty() {
            return Err(Failure::Config("--method: list is empty".into()));
        }
        s.methods = m.iter().map(|&m| m.into()).collect();
    }
    let q = s.resolve_q()?;
    let generator = match a.generator {
        Generator::Sos => GeneratorKind::SumOfSinusoids,
        Generator::Ar1 => GeneratorKind::Ar1,
    };
    let base = McConfig {
        min_bit_errors: a.min_errors,
        max_bits: a.max_bits,
        frame_length: a.frame_length,
        seed: a.scenario.seed,
        relays: s.relays,
        generator,
        threads: a.threads,
        noiseless: a.noiseless,
        ..McConfig::default()
    };
    base.validate()?;
    // The run settings go into the hash so two files agree only if rerunning
    // one reproduces the other.
    let hash = sha256_hex(&format!(
        "{}min_errors={} max_bits={} frame_length={} generator={:?} noiseless={}\n",
        s.to_toml(),
        a.min_errors,
        a.max_bits,
        a.frame_length,
        a.generator,
        a.noiseless
    ));

    let mut rows = Vec::new();
    let mut exhausted = false;
    for &db in &s.snr_grid_db {
        let power = PowerSpec::from_db(db, q)?;
        for &combiner in &s.methods {
            let cfg = McConfig { combiner, ..base.clone() };
            let r = montecarlo::estimate_ber(&s.spec, &power, &cfg)?;
            if r.budget_exhausted {
                exhausted = true;
                let _ = writeln!(
                    stderr,
                    "warning: {} dB {}: {} errors in {} bits, budget exhausted",
                    db,
                    combiner.name(),
                    r.errors,
                    r.bits
                );
            }
            rows.push(vec![
                fmt(db),
                combiner.name().to_string(),
                s.relays.to_string(),
                r.bits.to_string(),
                r.errors.to_string(),
                fmt(r.ber),
                fmt(r.confidence_radius_95),
                r.theory_ber.map(fmt).unwrap_or_default(),
                r.budget_exhausted.to_string(),
            ]);
        }
    }
    write_csv(
        &a.scenario.out.out,
        stdout,
        &provenance(&hash, &s.name, a.scenario.seed),
        &[
            "snr_db",
            "method",
            "relays",
            "bits",
            "errors",
            "ber",
            "ci95",
            "theory_ber",
            "budget_exhausted",
        ],
        &rows,
    )?;
    Ok(if exhausted { EXIT_BUDGET } else { EXIT_OK })
}
