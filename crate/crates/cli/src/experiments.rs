//! Runs a validated config and collects a result table.

use std::sync::Arc;

use ffscale_core::integrator::Tolerances;
use ffscale_core::kpo::{self, KpoSystemSpec, ScheduleKind};
use ffscale_core::propagator::{self, DriveKind, RealFn};
use ffscale_core::pulses::RampSpec;
use ffscale_core::timescaling::{ScaledClock, DEFAULT_SOLVER_TOL};
use ffscale_core::units::{mhz, to_mhz};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::config::{
    CdCheckConfig, DetuningSchedule, DriveSchedule, ExperimentConfig, FfResonatorConfig, FfTsConfig,
    KpoSweepConfig, LinDetuningConfig, Params, RampConfig,
};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Truncation used for each row, in mode order.
    pub truncations: Vec<Vec<usize>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
            truncations: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>, dims: Vec<usize>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
        self.truncations.push(dims);
    }
}

/// Runs `f` over `items` on `pool`, keeping input order.
fn par_map<T, R, F>(pool: &ThreadPool, items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    pool.install(|| items.par_iter().map(&f).collect())
}

pub fn run(config: &ExperimentConfig, pool: &ThreadPool) -> Result<Table> {
    let tol = config.tol.tolerances();
    match &config.params {
        Params::Ramp(c) => ramp_trajectory(c),
        Params::FfResonator(c) => ff_resonator(c, tol, pool),
        Params::LinDetuning(c) => lin_detuning(c, tol, pool),
        Params::FfTs(c) => ff_ts(c, tol, pool),
        Params::CdCheck(c) => cd_check(c, tol),
        Params::KpoSweep(c) => kpo_sweep(c, tol, pool),
    }
}

fn ramp_trajectory(c: &RampConfig) -> Result<Table> {
    let spec = RampSpec::from_mhz(c.omega_i_mhz, c.omega_f_mhz, c.t_ramp, c.delta_mhz)?;
    let mut table = Table::new(&[
        "t_ns",
        "alpha0",
        "alpha0_dot_over_delta",
        "alpha0_ddot_over_delta2",
        "alpha_ff",
        "omega0_mhz",
        "omega_ff_mhz",
    ]);
    let last = (c.samples - 1) as f64;
    for k in 0..c.samples {
        let t = if k + 1 == c.samples {
            c.t_ramp
        } else {
            c.t_ramp * k as f64 / last
        };
        let s = spec.sample(t)?;
        table.push(
            vec![
                Cell::Float(t),
                Cell::Float(s.alpha0),
                Cell::Float(s.alpha0_dot_over_delta),
                Cell::Float(s.alpha0_ddot_over_delta2),
                Cell::Float(s.alpha_ff),
                Cell::Float(to_mhz(s.omega0)),
                Cell::Float(to_mhz(s.omega_ff)),
            ],
            Vec::new(),
        );
    }
    Ok(table)
}

fn ff_resonator(c: &FfResonatorConfig, tol: Tolerances, pool: &ThreadPool) -> Result<Table> {
    let points: Vec<(f64, DriveSchedule)> = c
        .t_ramp
        .iter()
        .flat_map(|&t| c.schedules.iter().map(move |&s| (t, s)))
        .collect();
    let results = par_map(pool, &points, |&(t, schedule)| {
        let spec = RampSpec::from_mhz(c.omega_i_mhz, c.omega_f_mhz, t, c.delta_mhz)?;
        let dim = match c.dim {
            Some(d) => d,
            None => propagator::ramp_dim(&spec)?,
        };
        let kind = match schedule {
            DriveSchedule::Ff => DriveKind::FastForward,
            DriveSchedule::Reference => DriveKind::Reference,
        };
        Ok((propagator::drive_ramp_infidelity(&spec, kind, dim, tol)?, dim))
    })?;
    let mut table = Table::new(&["t_ramp_ns", "schedule", "infidelity"]);
    for ((t, schedule), (inf, dim)) in points.iter().zip(results) {
        table.push(
            vec![Cell::Float(*t), Cell::Text(schedule.name()), Cell::Float(inf)],
            vec![dim],
        );
    }
    Ok(table)
}

fn lin_detuning(c: &LinDetuningConfig, tol: Tolerances, pool: &ThreadPool) -> Result<Table> {
    let (di, df, om) = (mhz(c.delta_i_mhz), mhz(c.delta_f_mhz), mhz(c.omega_i_mhz));
    let results = par_map(pool, &c.t_final, |&t_f| {
        let delta = propagator::linear_detuning(di, df, t_f);
        let dim = match c.dim {
            Some(d) => d,
            None => propagator::detuning_dim(&delta, om, di, df, t_f)?,
        };
        Ok((propagator::linear_infidelity(di, df, om, t_f, dim, tol)?, dim))
    })?;
    let mut table = Table::new(&["t_f_ns", "schedule", "infidelity"]);
    for (t, (inf, dim)) in c.t_final.iter().zip(results) {
        table.push(
            vec![Cell::Float(*t), Cell::Text("linear"), Cell::Float(inf)],
            vec![dim],
        );
    }
    Ok(table)
}

fn ff_ts(c: &FfTsConfig, tol: Tolerances, pool: &ThreadPool) -> Result<Table> {
    let (di, df, om) = (mhz(c.delta_i_mhz), mhz(c.delta_f_mhz), mhz(c.omega_i_mhz));
    let clocks = c
        .t_ramp
        .iter()
        .map(|&t| ScaledClock::new(di, df, om, t, DEFAULT_SOLVER_TOL).map_err(CliError::from))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(ScaledClock, DetuningSchedule)> = clocks
        .iter()
        .flat_map(|&clock| c.schedules.iter().map(move |&s| (clock, s)))
        .collect();
    let results = par_map(pool, &points, |&(clock, schedule)| {
        let t_f = clock.t_final;
        let delta: RealFn = match schedule {
            DetuningSchedule::FfTs => Arc::new(move |t| clock.delta_ff_ts_clamped(t)),
            DetuningSchedule::Linear => propagator::linear_detuning(di, df, t_f),
        };
        let dim = match c.dim {
            Some(d) => d,
            None => propagator::detuning_dim(&delta, om, di, df, t_f)?,
        };
        Ok((
            propagator::detuning_sweep_infidelity(delta, om, di, df, t_f, dim, tol)?,
            dim,
        ))
    })?;
    let mut table = Table::new(&["t_ramp_ns", "t_f_ns", "schedule", "infidelity"]);
    for ((clock, schedule), (inf, dim)) in points.iter().zip(results) {
        table.push(
            vec![
                Cell::Float(clock.t_ramp),
                Cell::Float(clock.t_final),
                Cell::Text(schedule.name()),
                Cell::Float(inf),
            ],
            vec![dim],
        );
    }
    Ok(table)
}

fn cd_check(c: &CdCheckConfig, tol: Tolerances) -> Result<Table> {
    let spec = RampSpec::from_mhz(c.omega_i_mhz, c.omega_f_mhz, c.t_ramp, c.delta_mhz)?;
    let dim = match c.dim {
        Some(d) => d,
        None => ffscale_core::fockspace::default_dim(spec.max_displacement()) + 2 * c.n,
    };
    let report = propagator::cd_drive_check(&spec, c.n, dim, c.samples, tol)?;
    let mut table = Table::new(&["n", "max_infidelity", "t_at_max_ns", "norm_drift"]);
    table.push(
        vec![
            Cell::Int(c.n as u64),
            Cell::Float(report.max_infidelity),
            Cell::Float(report.t_at_max),
            Cell::Float(report.norm_drift),
        ],
        vec![dim],
    );
    Ok(table)
}

pub fn kpo_spec(c: &KpoSweepConfig) -> Result<KpoSystemSpec> {
    Ok(KpoSystemSpec::from_mhz(
        c.kerr_mhz,
        c.pump_mhz,
        c.g_1c_mhz,
        c.g_2c_mhz,
        c.g_12_mhz,
        c.delta_i_mhz,
        c.delta_f_mhz,
    )?
    .with_dims([c.dims.kpo1, c.dims.kpo2, c.dims.coupler]))
}

fn kpo_sweep(c: &KpoSweepConfig, tol: Tolerances, pool: &ThreadPool) -> Result<Table> {
    let spec = kpo_spec(c)?;
    let points: Vec<(f64, DetuningSchedule)> = c
        .t_final
        .iter()
        .flat_map(|&t| c.schedules.iter().map(move |&s| (t, s)))
        .collect();
    let results = par_map(pool, &points, |&(t_f, schedule)| {
        let kind = match schedule {
            DetuningSchedule::FfTs => ScheduleKind::FfTs,
            DetuningSchedule::Linear => ScheduleKind::Linear,
        };
        Ok(kpo::run_displacement_point(&spec, t_f, kind, tol)?)
    })?;
    let mut table = Table::new(&["t_f_ns", "schedule", "infidelity"]);
    for ((t, schedule), out) in points.iter().zip(results) {
        table.push(
            vec![Cell::Float(*t), Cell::Text(schedule.name()), Cell::Float(out.infidelity)],
            out.dims.to_vec(),
        );
    }
    Ok(table)
}
