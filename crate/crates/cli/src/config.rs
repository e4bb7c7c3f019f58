//! JSON experiment configuration.
//!
//! Frequencies are given as ν = ω/2π in MHz and times in ns; conversion to
//! rad/ns happens when a config is turned into core parameters. Unknown keys
//! are rejected.

use std::fmt;
use std::path::PathBuf;

use ffscale_core::integrator::Tolerances;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    RampTrajectory,
    FfResonator,
    LinDetuning,
    FfTsResonator,
    CdCheck,
    KpoSweep,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::RampTrajectory,
        ExperimentKind::FfResonator,
        ExperimentKind::LinDetuning,
        ExperimentKind::FfTsResonator,
        ExperimentKind::CdCheck,
        ExperimentKind::KpoSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::RampTrajectory => "ramp-trajectory",
            ExperimentKind::FfResonator => "ff-resonator",
            ExperimentKind::LinDetuning => "lin-detuning",
            ExperimentKind::FfTsResonator => "ff-ts-resonator",
            ExperimentKind::CdCheck => "cd-check",
            ExperimentKind::KpoSweep => "kpo-sweep",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolConfig {
    pub rel: f64,
    pub abs: f64,
}

impl Default for TolConfig {
    fn default() -> Self {
        let t = Tolerances::default();
        Self { rel: t.rel, abs: t.abs }
    }
}

impl TolConfig {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            rel: self.rel,
            abs: self.abs,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("tol.rel", self.rel), ("tol.abs", self.abs)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::config(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Drive used in an `ff-resonator` run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveSchedule {
    Ff,
    Reference,
}

/// Detuning schedule used in `ff-ts-resonator` and `kpo-sweep` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetuningSchedule {
    FfTs,
    Linear,
}

impl DriveSchedule {
    pub fn name(self) -> &'static str {
        match self {
            DriveSchedule::Ff => "ff",
            DriveSchedule::Reference => "reference",
        }
    }
}

impl DetuningSchedule {
    pub fn name(self) -> &'static str {
        match self {
            DetuningSchedule::FfTs => "ff_ts",
            DetuningSchedule::Linear => "linear",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RampConfig {
    pub delta_mhz: f64,
    pub omega_i_mhz: f64,
    pub omega_f_mhz: f64,
    pub t_ramp: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FfResonatorConfig {
    pub delta_mhz: f64,
    pub omega_i_mhz: f64,
    pub omega_f_mhz: f64,
    pub t_ramp: Vec<f64>,
    pub schedules: Vec<DriveSchedule>,
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinDetuningConfig {
    pub delta_i_mhz: f64,
    pub delta_f_mhz: f64,
    pub omega_i_mhz: f64,
    pub t_final: Vec<f64>,
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FfTsConfig {
    pub delta_i_mhz: f64,
    pub delta_f_mhz: f64,
    pub omega_i_mhz: f64,
    pub t_ramp: Vec<f64>,
    pub schedules: Vec<DetuningSchedule>,
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdCheckConfig {
    pub delta_mhz: f64,
    pub omega_i_mhz: f64,
    pub omega_f_mhz: f64,
    pub t_ramp: f64,
    pub n: usize,
    pub samples: usize,
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KpoDims {
    pub kpo1: Option<usize>,
    pub kpo2: Option<usize>,
    pub coupler: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KpoSweepConfig {
    pub kerr_mhz: [f64; 2],
    pub pump_mhz: [f64; 2],
    pub g_1c_mhz: f64,
    pub g_2c_mhz: f64,
    pub g_12_mhz: f64,
    pub delta_i_mhz: f64,
    pub delta_f_mhz: f64,
    pub t_final: Vec<f64>,
    pub schedules: Vec<DetuningSchedule>,
    pub dims: KpoDims,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Ramp(RampConfig),
    FfResonator(FfResonatorConfig),
    LinDetuning(LinDetuningConfig),
    FfTs(FfTsConfig),
    CdCheck(CdCheckConfig),
    KpoSweep(KpoSweepConfig),
}

/// A validated configuration with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub tol: TolConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub params: Params,
}

/// Sweep grid used by `kpo-sweep` when none is given.
pub const DEFAULT_KPO_T_FINAL: [f64; 6] = [22.0, 33.0, 44.0, 55.0, 66.0, 88.0];

const DEFAULT_RAMP_SAMPLES: usize = 201;
const DEFAULT_CD_SAMPLES: usize = 100;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRamp {
    delta_mhz: Option<f64>,
    omega_i_mhz: Option<f64>,
    omega_f_mhz: Option<f64>,
    t_ramp: Option<f64>,
    samples: Option<i64>,
    tol: Option<TolConfig>,
    output: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFfResonator {
    delta_mhz: Option<f64>,
    omega_i_mhz: Option<f64>,
    omega_f_mhz: Option<f64>,
    t_ramp: Option<OneOrMany>,
    schedules: Option<Vec<DriveSchedule>>,
    dim: Option<i64>,
    tol: Option<TolConfig>,
    output: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLinDetuning {
    delta_i_mhz: Option<f64>,
    delta_f_mhz: Option<f64>,
    omega_i_mhz: Option<f64>,
    t_final: Option<OneOrMany>,
    dim: Option<i64>,
    tol: Option<TolConfig>,
    output: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFfTs {
    delta_i_mhz: Option<f64>,
    delta_f_mhz: Option<f64>,
    omega_i_mhz: Option<f64>,
    t_ramp: Option<OneOrMany>,
    schedules: Option<Vec<DetuningSchedule>>,
    dim: Option<i64>,
    tol: Option<TolConfig>,
    output: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCdCheck {
    delta_mhz: Option<f64>,
    omega_i_mhz: Option<f64>,
    omega_f_mhz: Option<f64>,
    t_ramp: Option<f64>,
    n: Option<i64>,
    samples: Option<i64>,
    dim: Option<i64>,
    tol: Option<TolConfig>,
    output: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKpoDims {
    kpo1: Option<i64>,
    kpo2: Option<i64>,
    coupler: Option<i64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKpoSweep {
    kerr_mhz: Option<[f64; 2]>,
    pump_mhz: Option<[f64; 2]>,
    g_1c_mhz: Option<f64>,
    g_2c_mhz: Option<f64>,
    g_12_mhz: Option<f64>,
    delta_i_mhz: Option<f64>,
    delta_f_mhz: Option<f64>,
    t_final: Option<OneOrMany>,
    schedules: Option<Vec<DetuningSchedule>>,
    dims: Option<RawKpoDims>,
    tol: Option<TolConfig>,
    output: Option<PathBuf>,
}

fn required<T>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| CliError::config(format!("{name} required")))
}

fn finite(v: f64, name: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::config(format!("{name} must be finite, got {v}")))
    }
}

fn positive(v: f64, name: &str) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::config(format!("{name} must be finite and > 0, got {v}")))
    }
}

fn nonzero(v: f64, name: &str) -> Result<f64> {
    if v.is_finite() && v != 0.0 {
        Ok(v)
    } else {
        Err(CliError::config(format!("{name} must be finite and nonzero, got {v}")))
    }
}

fn count(v: i64, name: &str, min: i64) -> Result<usize> {
    if v < min {
        return Err(CliError::config(format!("{name} must be >= {min}, got {v}")));
    }
    Ok(v as usize)
}

fn truncation(v: Option<i64>, name: &str) -> Result<Option<usize>> {
    v.map(|d| count(d, name, 2)).transpose()
}

fn sweep(v: Option<OneOrMany>, name: &str) -> Result<Vec<f64>> {
    let values = required(v, name)?.into_vec();
    if values.is_empty() {
        return Err(CliError::config(format!("{name} must not be empty")));
    }
    for (i, &t) in values.iter().enumerate() {
        positive(t, &format!("{name}[{i}]"))?;
    }
    Ok(values)
}

fn non_empty<T: Clone>(v: Option<Vec<T>>, default: &[T], name: &str) -> Result<Vec<T>> {
    let v = v.unwrap_or_else(|| default.to_vec());
    if v.is_empty() {
        return Err(CliError::config(format!("{name} must not be empty")));
    }
    Ok(v)
}

fn tol(v: Option<TolConfig>) -> Result<TolConfig> {
    let t = v.unwrap_or_default();
    t.validate()?;
    Ok(t)
}

fn from_value<T: for<'de> Deserialize<'de>>(body: Map<String, Value>, kind: ExperimentKind) -> Result<T> {
    serde_json::from_value(Value::Object(body)).map_err(|e| CliError::config(format!("{kind} config: {e}")))
}

/// Parses and validates a config document.
///
/// `expected` is the kind implied by the subcommand; the document's
/// `experiment` key may be omitted but must agree when present.
pub fn parse_config(text: &str, expected: Option<ExperimentKind>) -> Result<ExperimentConfig> {
    let doc: Value = serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid JSON: {e}")))?;
    let Value::Object(mut body) = doc else {
        return Err(CliError::config("config must be a JSON object"));
    };
    let named = match body.remove("experiment") {
        None => None,
        Some(Value::String(s)) => Some(ExperimentKind::from_name(&s).ok_or_else(|| {
            let names: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            CliError::config(format!("experiment must be one of {}, got {s:?}", names.join(", ")))
        })?),
        Some(other) => return Err(CliError::config(format!("experiment must be a string, got {other}"))),
    };
    let kind = match (named, expected) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::config(format!(
                "config is for experiment {a} but the subcommand runs {b}"
            )))
        }
        (Some(k), _) | (None, Some(k)) => k,
        (None, None) => return Err(CliError::config("experiment required")),
    };

    let (tol, output, params) = match kind {
        ExperimentKind::RampTrajectory => {
            let r: RawRamp = from_value(body, kind)?;
            let params = Params::Ramp(RampConfig {
                delta_mhz: nonzero(required(r.delta_mhz, "delta_mhz")?, "delta_mhz")?,
                omega_i_mhz: finite(required(r.omega_i_mhz, "omega_i_mhz")?, "omega_i_mhz")?,
                omega_f_mhz: finite(required(r.omega_f_mhz, "omega_f_mhz")?, "omega_f_mhz")?,
                t_ramp: positive(required(r.t_ramp, "t_ramp")?, "t_ramp")?,
                samples: count(r.samples.unwrap_or(DEFAULT_RAMP_SAMPLES as i64), "samples", 2)?,
            });
            (tol(r.tol)?, r.output, params)
        }
        ExperimentKind::FfResonator => {
            let r: RawFfResonator = from_value(body, kind)?;
            let params = Params::FfResonator(FfResonatorConfig {
                delta_mhz: nonzero(required(r.delta_mhz, "delta_mhz")?, "delta_mhz")?,
                omega_i_mhz: finite(required(r.omega_i_mhz, "omega_i_mhz")?, "omega_i_mhz")?,
                omega_f_mhz: finite(required(r.omega_f_mhz, "omega_f_mhz")?, "omega_f_mhz")?,
                t_ramp: sweep(r.t_ramp, "t_ramp")?,
                schedules: non_empty(r.schedules, &[DriveSchedule::Ff, DriveSchedule::Reference], "schedules")?,
                dim: truncation(r.dim, "dim")?,
            });
            (tol(r.tol)?, r.output, params)
        }
        ExperimentKind::LinDetuning => {
            let r: RawLinDetuning = from_value(body, kind)?;
            let params = Params::LinDetuning(LinDetuningConfig {
                delta_i_mhz: nonzero(required(r.delta_i_mhz, "delta_i_mhz")?, "delta_i_mhz")?,
                delta_f_mhz: nonzero(required(r.delta_f_mhz, "delta_f_mhz")?, "delta_f_mhz")?,
                omega_i_mhz: finite(required(r.omega_i_mhz, "omega_i_mhz")?, "omega_i_mhz")?,
                t_final: sweep(r.t_final, "t_final")?,
                dim: truncation(r.dim, "dim")?,
            });
            (tol(r.tol)?, r.output, params)
        }
        ExperimentKind::FfTsResonator => {
            let r: RawFfTs = from_value(body, kind)?;
            let params = Params::FfTs(FfTsConfig {
                delta_i_mhz: nonzero(required(r.delta_i_mhz, "delta_i_mhz")?, "delta_i_mhz")?,
                delta_f_mhz: nonzero(required(r.delta_f_mhz, "delta_f_mhz")?, "delta_f_mhz")?,
                omega_i_mhz: nonzero(required(r.omega_i_mhz, "omega_i_mhz")?, "omega_i_mhz")?,
                t_ramp: sweep(r.t_ramp, "t_ramp")?,
                schedules: non_empty(r.schedules, &[DetuningSchedule::FfTs, DetuningSchedule::Linear], "schedules")?,
                dim: truncation(r.dim, "dim")?,
            });
            (tol(r.tol)?, r.output, params)
        }
        ExperimentKind::CdCheck => {
            let r: RawCdCheck = from_value(body, kind)?;
            let params = Params::CdCheck(CdCheckConfig {
                delta_mhz: nonzero(required(r.delta_mhz, "delta_mhz")?, "delta_mhz")?,
                omega_i_mhz: finite(required(r.omega_i_mhz, "omega_i_mhz")?, "omega_i_mhz")?,
                omega_f_mhz: finite(required(r.omega_f_mhz, "omega_f_mhz")?, "omega_f_mhz")?,
                t_ramp: positive(required(r.t_ramp, "t_ramp")?, "t_ramp")?,
                n: count(r.n.unwrap_or(0), "n", 0)?,
                samples: count(r.samples.unwrap_or(DEFAULT_CD_SAMPLES as i64), "samples", 1)?,
                dim: truncation(r.dim, "dim")?,
            });
            (tol(r.tol)?, r.output, params)
        }
        ExperimentKind::KpoSweep => {
            let r: RawKpoSweep = from_value(body, kind)?;
            let dims = match r.dims {
                Some(d) => KpoDims {
                    kpo1: truncation(d.kpo1, "dims.kpo1")?,
                    kpo2: truncation(d.kpo2, "dims.kpo2")?,
                    coupler: truncation(d.coupler, "dims.coupler")?,
                },
                None => KpoDims::default(),
            };
            let kerr = r.kerr_mhz.unwrap_or([2.0, 2.0]);
            let pump = r.pump_mhz.unwrap_or([8.0, 8.0]);
            for j in 0..2 {
                positive(kerr[j], &format!("kerr_mhz[{j}]"))?;
                finite(pump[j], &format!("pump_mhz[{j}]"))?;
            }
            let t_final = match r.t_final {
                None => DEFAULT_KPO_T_FINAL.to_vec(),
                v => sweep(v, "t_final")?,
            };
            let params = Params::KpoSweep(KpoSweepConfig {
                kerr_mhz: kerr,
                pump_mhz: pump,
                g_1c_mhz: finite(r.g_1c_mhz.unwrap_or(2.0), "g_1c_mhz")?,
                g_2c_mhz: finite(r.g_2c_mhz.unwrap_or(2.0), "g_2c_mhz")?,
                g_12_mhz: finite(r.g_12_mhz.unwrap_or(0.02), "g_12_mhz")?,
                delta_i_mhz: nonzero(r.delta_i_mhz.unwrap_or(200.0), "delta_i_mhz")?,
                delta_f_mhz: nonzero(r.delta_f_mhz.unwrap_or(20.0), "delta_f_mhz")?,
                t_final,
                schedules: non_empty(r.schedules, &[DetuningSchedule::FfTs, DetuningSchedule::Linear], "schedules")?,
                dims,
            });
            (tol(r.tol)?, r.output, params)
        }
    };
    Ok(ExperimentConfig {
        experiment: kind,
        tol,
        output,
        params,
    })
}

/// Truncation modes accepted by `--dim-override`.
pub const DIM_MODES: [&str; 4] = ["resonator", "kpo1", "kpo2", "coupler"];

impl ExperimentConfig {
    /// Applies `MODE=N` truncation overrides.
    pub fn override_dim(&mut self, spec: &str) -> Result<()> {
        let (mode, n) = spec
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("--dim-override expects MODE=N, got {spec:?}")))?;
        let n: i64 = n
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("--dim-override {mode}: {n:?} is not an integer")))?;
        let n = Some(count(n, &format!("--dim-override {mode}"), 2)?);
        let slot = match (&mut self.params, mode.trim()) {
            (Params::FfResonator(c), "resonator") => &mut c.dim,
            (Params::LinDetuning(c), "resonator") => &mut c.dim,
            (Params::FfTs(c), "resonator") => &mut c.dim,
            (Params::CdCheck(c), "resonator") => &mut c.dim,
            (Params::KpoSweep(c), "kpo1") => &mut c.dims.kpo1,
            (Params::KpoSweep(c), "kpo2") => &mut c.dims.kpo2,
            (Params::KpoSweep(c), "coupler") => &mut c.dims.coupler,
            (_, m) => {
                return Err(CliError::config(format!(
                    "--dim-override: mode {m:?} does not apply to {} (modes: {})",
                    self.experiment,
                    DIM_MODES.join(", ")
                )))
            }
        };
        *slot = n;
        Ok(())
    }

    /// Applies `REL[,ABS]` tolerances.
    pub fn override_tol(&mut self, spec: &str) -> Result<()> {
        let mut parts = spec.split(',');
        let parse = |s: Option<&str>, name: &str| -> Result<Option<f64>> {
            s.map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::config(format!("--tol {name}: {v:?} is not a number")))
            })
            .transpose()
        };
        let rel = parse(parts.next(), "REL")?.ok_or_else(|| CliError::config("--tol expects REL[,ABS]"))?;
        let abs = parse(parts.next(), "ABS")?;
        if parts.next().is_some() {
            return Err(CliError::config("--tol expects REL[,ABS]"));
        }
        let t = TolConfig {
            rel,
            abs: abs.unwrap_or(self.tol.abs),
        };
        t.validate()?;
        self.tol = t;
        Ok(())
    }
}
