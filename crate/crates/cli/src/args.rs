//! Command-line and config-file parameters. Every command record derives both
//! clap and serde, so `--config` files and flags describe the same run.

use std::path::PathBuf;

use blowlab_core::certificate::Amplitude;
use blowlab_core::data::Schedule;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "blowlab", version, about = "Blowup experiments for u_t = Δu + u^b on the torus")]
pub struct Cli {
    /// JSON run config `{"format_version": 1, "command": {...}}`; replaces the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "blowlab-out")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Sample the bump ŵ on a grid.
    Bump(BumpArgs),
    /// Build the oscillatory data u_{0,N}.
    Data(DataArgs),
    /// Littlewood-Paley blocks and the Besov norm of u_{0,N}.
    Besov(BesovArgs),
    /// Lemma-1 sequence and divergence verdict for u0 >= A w.
    Certificate(CertificateArgs),
    /// Smallest N whose constant c(N, δ) certifies blowup (gridless).
    Threshold(ThresholdArgs),
    /// Time-integrate from A·w or u_{0,N}.
    Simulate(SimulateArgs),
    /// Simulate from A·w and check the Lemma-1 lower bounds.
    Verify(VerifyArgs),
    /// Parameter sweeps written as long-format CSV.
    Sweep(SweepArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Bump(_) => "bump",
            Command::Data(_) => "data",
            Command::Besov(_) => "besov",
            Command::Certificate(_) => "certificate",
            Command::Threshold(_) => "threshold",
            Command::Simulate(_) => "simulate",
            Command::Verify(_) => "verify",
            Command::Sweep(_) => "sweep",
        }
    }
}

#[derive(Parser)]
struct DefaultsOf<T: Args> {
    #[command(flatten)]
    inner: T,
}

/// The clap defaults of an argument group, reused as serde defaults.
fn clap_defaults<T: Args>() -> T {
    DefaultsOf::<T>::parse_from(["blowlab"]).inner
}

macro_rules! defaults_from_clap {
    ($($ty:ty),*) => {
        $(impl Default for $ty {
            fn default() -> Self {
                clap_defaults()
            }
        })*
    };
}

defaults_from_clap!(
    GridSpec, DataSpec, SolverSpec, BumpArgs, DataArgs, BesovArgs, CertificateArgs,
    ThresholdArgs, SimulateArgs, VerifyArgs, SweepArgs
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleMode {
    /// η_k = (1+k)^{−1/b}, ε_N = 1/log(log(3+N)).
    Paper,
    /// Paper η_k with a constant ε.
    Constant,
}

/// Explicit grid: period exponents `r` (period 2π·2^r) and mode counts `m`.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub r: Option<Vec<i32>>,
    #[arg(long, value_delimiter = ',')]
    pub m: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSpec {
    /// Space dimension.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Nonlinearity exponent.
    #[arg(long, default_value_t = 4)]
    pub b: u32,
    /// Number of modulated terms minus one.
    #[arg(long = "N", default_value_t = 6)]
    #[serde(rename = "N")]
    pub n_terms: u32,
    #[arg(long, value_enum, default_value_t = ScheduleMode::Paper)]
    pub schedule: ScheduleMode,
    /// ε for `--schedule constant`.
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    #[command(flatten)]
    pub grid: GridSpec,
}

impl DataSpec {
    pub fn schedule(&self) -> blowlab_core::Result<Schedule> {
        match self.schedule {
            ScheduleMode::Paper => Ok(Schedule::paper(self.b)),
            ScheduleMode::Constant => Schedule::constant(self.b, self.eps),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    #[arg(long, default_value_t = 0.6)]
    pub t_end: f64,
    #[arg(long, default_value_t = blowlab_core::solver::DEFAULT_DT_MAX)]
    pub dt_max: f64,
    #[arg(long, default_value_t = blowlab_core::solver::DEFAULT_DT_MIN)]
    pub dt_min: f64,
    /// C in dt = min(dt_max, C/(1 + sup^{b−1})).
    #[arg(long, default_value_t = blowlab_core::solver::DEFAULT_DT_SAFETY)]
    pub dt_safety: f64,
    #[arg(long, default_value_t = blowlab_core::solver::DEFAULT_BLOWUP_CAP)]
    pub cap: f64,
    /// Oversampling factor; defaults to (b+1)/2.
    #[arg(long)]
    pub pad: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub record_every: usize,
    /// Exponent p of the weighted norm t^{σ/2}‖u‖_p.
    #[arg(long)]
    pub p: Option<f64>,
    /// Drop the u^b term.
    #[arg(long)]
    pub linear: bool,
}

impl SolverSpec {
    pub fn config(&self, b: u32) -> blowlab_core::solver::SolverConfig {
        let mut cfg = blowlab_core::solver::SolverConfig::new(b, self.t_end);
        cfg.dt_max = self.dt_max;
        cfg.dt_min = self.dt_min;
        cfg.dt_safety = self.dt_safety;
        cfg.blowup_cap = self.cap;
        if let Some(pad) = self.pad {
            cfg.dealias_pad = pad;
        }
        cfg.record_every = self.record_every;
        cfg.z_exponent = self.p;
        cfg.nonlinear = !self.linear;
        cfg
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BumpArgs {
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub b: u32,
    /// Support radius of ŵ; defaults to 1/(2b).
    #[arg(long)]
    pub rho: Option<f64>,
    /// ŵ(0).
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[command(flatten)]
    pub grid: GridSpec,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataArgs {
    #[command(flatten)]
    pub data: DataSpec,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BesovArgs {
    #[command(flatten)]
    pub data: DataSpec,
    /// Summation exponent (`inf` allowed).
    #[arg(long, default_value_t = 8.0)]
    pub q: f64,
    /// Regularity; defaults to −2/b.
    #[arg(long, allow_negative_numbers = true)]
    pub s: Option<f64>,
    /// Integrability; defaults to nb(b−1)/2.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub j_min: i32,
    /// Defaults to max(N, j_min + 1).
    #[arg(long, allow_negative_numbers = true)]
    pub j_max: Option<i32>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificateArgs {
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub b: u32,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Amplitude: absolute (`12.5`) or a multiple of A_min (`2x`).
    #[arg(long = "A", default_value = "2x")]
    #[serde(rename = "A")]
    pub amplitude: String,
    /// Σ|ŵ|; defaults to the default bump.
    #[arg(long)]
    pub w_l1: Option<f64>,
    #[arg(long, default_value_t = 60)]
    pub k_max: u32,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdArgs {
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub b: u32,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = ScheduleMode::Paper)]
    pub schedule: ScheduleMode,
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    #[arg(long)]
    pub w_l1: Option<f64>,
    /// Largest N searched.
    #[arg(long, default_value_t = 1_000_000_000)]
    pub cap: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialData {
    /// u0 = A·w.
    Bump,
    /// u0 = A·u_{0,N}; `--A` must be absolute.
    Data,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = InitialData::Bump)]
    pub init: InitialData,
    #[command(flatten)]
    pub data: DataSpec,
    #[arg(long = "A", default_value = "2x")]
    #[serde(rename = "A")]
    pub amplitude: String,
    /// δ used to resolve `--A kx`.
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[command(flatten)]
    pub solver: SolverSpec,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub b: u32,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long = "A", default_value = "2x")]
    #[serde(rename = "A")]
    pub amplitude: String,
    #[arg(long, default_value_t = 2)]
    pub k_max: u32,
    /// Probe at t_k + offset; defaults to 0.01·δ.
    #[arg(long)]
    pub offset: Option<f64>,
    #[command(flatten)]
    pub grid: GridSpec,
    #[command(flatten)]
    pub solver: SolverSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// ε_N(Σ_{j<=N} η_j^q)^{1/q} over q and N.
    BesovSeries,
    /// log c(N, δ) over δ and N.
    TheoremConstant,
    /// T*_num from A·w over an amplitude ladder.
    Amplitude,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value_t = SweepKind::BesovSeries)]
    pub kind: SweepKind,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub b: u32,
    #[arg(long, value_enum, default_value_t = ScheduleMode::Paper)]
    pub schedule: ScheduleMode,
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    #[arg(long, value_delimiter = ',', default_value = "4,8")]
    pub q: Vec<f64>,
    #[arg(long = "N", value_delimiter = ',', default_value = "10,100,1000,10000")]
    #[serde(rename = "N")]
    pub n_values: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub delta: Vec<f64>,
    #[arg(long = "A", value_delimiter = ',', default_value = "0.5x,1x,2x,4x")]
    #[serde(rename = "A")]
    pub amplitudes: Vec<String>,
    #[command(flatten)]
    pub grid: GridSpec,
    #[command(flatten)]
    pub solver: SolverSpec,
}

impl SweepArgs {
    pub fn schedule(&self) -> blowlab_core::Result<Schedule> {
        match self.schedule {
            ScheduleMode::Paper => Ok(Schedule::paper(self.b)),
            ScheduleMode::Constant => Schedule::constant(self.b, self.eps),
        }
    }
}

/// `"2x"` is a multiple of A_min, anything else an absolute value.
pub fn parse_amplitude(text: &str) -> Result<Amplitude, String> {
    let t = text.trim();
    let (body, relative) = match t.strip_suffix(['x', 'X']) {
        Some(body) => (body, true),
        None => (t, false),
    };
    let v: f64 = body
        .parse()
        .map_err(|_| format!("amplitude must be a number or a multiple like 2x, got {text:?}"))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(format!("amplitude must be positive, got {text:?}"));
    }
    Ok(if relative {
        Amplitude::RelativeToThreshold(v)
    } else {
        Amplitude::Absolute(v)
    })
}
