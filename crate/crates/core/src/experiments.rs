//! Scenario presets, trajectories with steady-state detection, and
//! steady-state sweeps over pulse width and delay.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hierarchy::{self, InitialState, Options, StoreReport, SystemParams};
use crate::oracle::{self, TimeBinConfig};
use crate::pulse::{Envelope, PulseSpec};
use crate::timegrid::TimeGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Hierarchy,
    Markov,
    Oracle,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Hierarchy => "hierarchy",
            Self::Markov => "markov",
            Self::Oracle => "oracle",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub population: Vec<f64>,
    pub params: SystemParams,
    pub pulse: Option<PulseSpec>,
    pub grid: TimeGrid,
    pub steady_state: Option<f64>,
    pub source: Source,
    /// Element-store layout of hierarchy runs.
    pub report: Option<StoreReport>,
}

impl Trajectory {
    pub fn peak(&self) -> f64 {
        self.population.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest excursion of the population outside `[0, 1]`.
    pub fn bound_excess(&self) -> f64 {
        self.population.iter().map(|&p| (-p).max(p - 1.0).max(0.0)).fold(0.0, f64::max)
    }

    /// Whether every sample lies in `[-10dt², 1+10dt²]`.
    pub fn within_bounds(&self) -> bool {
        self.bound_excess() <= 10.0 * self.grid.dt * self.grid.dt
    }
}

/// Steady-state window for a delay: `5τ`, or `5/Γ` without delay.
pub fn default_window(params: &SystemParams) -> f64 {
    if params.tau > 0.0 {
        5.0 * params.tau
    } else {
        5.0 / params.gamma
    }
}

pub const DEFAULT_REL_TOL: f64 = 1e-2;

/// Mean of the population over the final `window`, when it is flat to within
/// `rel_tol` of that mean.
pub fn detect_steady_state(times: &[f64], population: &[f64], window: f64, rel_tol: f64) -> Option<f64> {
    let (mean, spread) = final_window(times, population, window)?;
    (spread < rel_tol * mean.max(1e-6)).then_some(mean)
}

/// Mean and `max - min` over the final `window`.
fn final_window(times: &[f64], population: &[f64], window: f64) -> Option<(f64, f64)> {
    let end = *times.last()?;
    if end - times[0] < window * (1.0 - 1e-12) {
        return None;
    }
    let start = end - window * (1.0 + 1e-12);
    let tail: Vec<f64> = times.iter().zip(population).filter(|(t, _)| **t >= start).map(|(_, &p)| p).collect();
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| (a.min(p), b.max(p)));
    Some((mean, hi - lo))
}

fn envelope(pulse: Option<&PulseSpec>) -> Envelope {
    pulse.map_or_else(Envelope::zero, |p| Envelope::new(p.clone()))
}

fn check_pulse(params: &SystemParams, pulse: Option<&PulseSpec>) -> Result<()> {
    if let Some(p) = pulse {
        p.validate()?;
    }
    if params.initial == InitialState::GroundWithPulse && params.n_photons > 0 && pulse.is_none() {
        return Err(Error::InvalidParams("a pulsed initial state needs a pulse shape".into()));
    }
    Ok(())
}

/// Integrates the hierarchy for one configuration.
pub fn run_scenario(params: &SystemParams, pulse: Option<&PulseSpec>, grid: &TimeGrid, opts: &Options) -> Result<Trajectory> {
    check_pulse(params, pulse)?;
    let sol = hierarchy::simulate(params, &envelope(pulse), grid, opts)?;
    let steady_state = detect_steady_state(&sol.times, &sol.population, default_window(params), DEFAULT_REL_TOL);
    Ok(Trajectory {
        times: sol.times,
        population: sol.population,
        params: *params,
        pulse: pulse.cloned(),
        grid: *grid,
        steady_state,
        source: Source::Hierarchy,
        report: Some(sol.report),
    })
}

/// Feedback-free recursion on the same grid.
pub fn run_markov(params: &SystemParams, pulse: Option<&PulseSpec>, grid: &TimeGrid) -> Result<Trajectory> {
    check_pulse(params, pulse)?;
    let population = hierarchy::markov(params, &envelope(pulse), grid)?;
    Ok(Trajectory {
        times: grid.times(),
        population,
        params: *params,
        pulse: pulse.cloned(),
        grid: *grid,
        steady_state: None,
        source: Source::Markov,
        report: None,
    })
}

/// Collision-model reference sampled once per bin.
pub fn run_oracle(params: &SystemParams, pulse: Option<&PulseSpec>, bin_dt: f64, horizon: f64) -> Result<Trajectory> {
    check_pulse(params, pulse)?;
    let r = oracle::brute_force_timebin(params, &envelope(pulse), &TimeBinConfig { bin_dt, horizon })?;
    let grid = TimeGrid {
        dt: bin_dt,
        n_steps: r.times.len() - 1,
        k_half_tau: (0.5 * params.tau / bin_dt).round() as usize,
        requested_dt: bin_dt,
    };
    let steady_state = detect_steady_state(&r.times, &r.population, default_window(params), DEFAULT_REL_TOL);
    Ok(Trajectory {
        times: r.times,
        population: r.population,
        params: *params,
        pulse: pulse.cloned(),
        grid,
        steady_state,
        source: Source::Oracle,
        report: None,
    })
}

/// Sup-norm and L² norm (rectangle rule in time) of the difference of two
/// trajectories on their common sample times before `until`. The coarser
/// spacing must be a whole multiple of the finer one.
pub fn discrepancy(a: &Trajectory, b: &Trajectory, until: f64) -> Result<(f64, f64)> {
    let (fine, coarse) = if a.grid.dt <= b.grid.dt { (a, b) } else { (b, a) };
    let ratio = coarse.grid.dt / fine.grid.dt;
    let stride = ratio.round() as usize;
    if stride == 0 || (ratio - stride as f64).abs() > 1e-6 * ratio {
        return Err(Error::InvalidGrid(format!(
            "sample spacings {} and {} are not commensurate",
            fine.grid.dt, coarse.grid.dt
        )));
    }
    let mut sup: f64 = 0.0;
    let mut sq = 0.0;
    for (k, (&t, &pc)) in coarse.times.iter().zip(&coarse.population).enumerate() {
        if t >= until {
            break;
        }
        let Some(&pf) = fine.population.get(k * stride) else { break };
        let d = (pf - pc).abs();
        sup = sup.max(d);
        sq += d * d;
    }
    Ok((sup, (sq * coarse.grid.dt).sqrt()))
}

/// A named, fully specified run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub params: SystemParams,
    pub pulse: Option<PulseSpec>,
    pub dt: f64,
    pub horizon: f64,
}

impl Scenario {
    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::build(self.dt, self.horizon, self.params.tau)
    }

    pub fn run(&self, opts: &Options) -> Result<Trajectory> {
        run_scenario(&self.params, self.pulse.as_ref(), &self.grid()?, opts)
    }
}

pub const PRESETS: &[&str] = &[
    "benchmark-n1",
    "benchmark-n2",
    "benchmark-n3",
    "bound-state-rectangular",
    "bound-state-gaussian",
    "bound-state-exponential",
    "dephasing-vacuum",
    "dephasing-two-photon",
    "dephasing-one-photon",
    "dephasing-vacuum-antiphase",
];

/// Built-in scenarios. Pulses start at `t = 0`; the Gaussian is centred at
/// `4σ` so that its truncated weight before `t = 0` is negligible.
pub fn preset(name: &str) -> Option<Scenario> {
    let rect = |td: f64| PulseSpec::Rectangular { t0: 0.0, t_d: td };
    let mk = |params: SystemParams, pulse: Option<PulseSpec>, dt: f64, horizon: f64| Scenario {
        name: name.to_string(),
        params,
        pulse,
        dt,
        horizon,
    };
    Some(match name {
        "benchmark-n1" => mk(SystemParams::pulsed(1, 2.0, 0.0), Some(rect(2.0)), 0.01, 10.0),
        "benchmark-n2" => mk(SystemParams::pulsed(2, 2.0, 0.0), Some(rect(2.0)), 0.01, 10.0),
        "benchmark-n3" => mk(SystemParams::pulsed(3, 2.0, 0.0), Some(rect(2.0)), 0.05, 12.0),
        "bound-state-rectangular" => mk(SystemParams::pulsed(2, 2.0, 0.0), Some(rect(2.0)), 0.02, 30.0),
        "bound-state-gaussian" => mk(
            SystemParams::pulsed(2, 2.0, 0.0),
            Some(PulseSpec::Gaussian { mu: 4.0, sigma: 1.0 }),
            0.02,
            30.0,
        ),
        "bound-state-exponential" => mk(
            SystemParams::pulsed(2, 2.0, 0.0),
            Some(PulseSpec::Exponential { t0: 0.0, gamma_pulse: 1.0 }),
            0.02,
            30.0,
        ),
        "dephasing-vacuum" => mk(SystemParams::excited(1.2, 0.0), None, 0.01, 12.0),
        "dephasing-two-photon" => mk(SystemParams::pulsed(2, 1.2, 0.0), Some(rect(1.0)), 0.01, 12.0),
        "dephasing-one-photon" => mk(SystemParams::pulsed(1, 1.2, 0.0), Some(rect(1.0)), 0.01, 12.0),
        "dephasing-vacuum-antiphase" => mk(SystemParams::excited(1.2, PI), None, 0.01, 12.0),
        _ => return None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseFamily {
    Rectangular,
    Gaussian,
    Exponential,
}

impl PulseFamily {
    /// Pulse of the family at width `w` starting at label `start`: `tD = w`,
    /// `σ = w` (centred at `start + 4σ`), or `Γ_pulse = Γ/w`.
    pub fn pulse(&self, w: f64, gamma: f64, start: f64) -> Result<PulseSpec> {
        match self {
            Self::Rectangular => PulseSpec::rectangular(start, w),
            Self::Gaussian => PulseSpec::gaussian(start + 4.0 * w, w),
            Self::Exponential => PulseSpec::exponential(start, gamma / w),
        }
    }

    /// Label span after which the pulse has essentially passed.
    pub fn extent(&self, w: f64) -> f64 {
        match self {
            Self::Rectangular => w,
            Self::Gaussian => 8.0 * w,
            Self::Exponential => 8.0 * w,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Rectangular => "rectangular",
            Self::Gaussian => "gaussian",
            Self::Exponential => "exponential",
        }
    }
}

/// Where a sweep places the pulse relative to the delay.
///
/// The emitter at time `t` meets the incoming pulse at label `t + τ/2`, so a
/// pulse starting at label 0 has already partly passed the emitter, without
/// interacting, by the time the simulation starts. `Arrival` shifts the pulse
/// to start at label `τ/2`, so that its leading edge reaches the emitter at
/// `t = 0` for every delay of the sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Onset {
    #[default]
    Arrival,
    Origin,
}

impl Onset {
    pub fn start(&self, tau: f64) -> f64 {
        match self {
            Self::Arrival => 0.5 * tau,
            Self::Origin => 0.0,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Arrival => "arrival",
            Self::Origin => "origin",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub family: PulseFamily,
    pub onset: Onset,
    pub widths: Vec<f64>,
    pub taus: Vec<f64>,
    /// Photon number, phase and rates; `tau` is overridden per cell.
    pub base: SystemParams,
    /// Largest step; cells use `min(dt_max, τ/points_per_tau)`.
    pub dt_max: f64,
    pub points_per_tau: f64,
    /// Time simulated after the pulse has passed, in units of `1/Γ` and of `τ`.
    pub settle: f64,
    pub settle_taus: f64,
    pub rel_tol: f64,
}

impl SweepSpec {
    pub fn new(family: PulseFamily, widths: Vec<f64>, taus: Vec<f64>, base: SystemParams) -> Self {
        Self { family, onset: Onset::default(), widths, taus, base, dt_max: 0.02, points_per_tau: 40.0, settle: 10.0, settle_taus: 10.0, rel_tol: DEFAULT_REL_TOL }
    }

    pub fn cell_dt(&self, tau: f64) -> f64 {
        self.dt_max.min(tau / self.points_per_tau)
    }

    pub fn cell_horizon(&self, width: f64, tau: f64) -> f64 {
        self.onset.start(tau) + self.family.extent(width) + self.settle / self.base.gamma + self.settle_taus * tau
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub width: f64,
    pub tau: f64,
    /// Mean over the final window, reported even when not flat.
    pub steady_state: f64,
    pub converged: bool,
    pub dt: f64,
    pub horizon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub family: PulseFamily,
    pub widths: Vec<f64>,
    pub taus: Vec<f64>,
    /// Row-major over `(width, tau)`.
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, iw: usize, it: usize) -> &SweepCell {
        &self.cells[iw * self.taus.len() + it]
    }
}

/// Steady-state population over a width × delay grid. Cells run in parallel;
/// results are ordered by index.
pub fn sweep_steady_state(spec: &SweepSpec, opts: &Options) -> Result<SweepResult> {
    if spec.base.n_photons != 2 || spec.base.initial != InitialState::GroundWithPulse {
        return Err(Error::InvalidParams("sweeps are defined for two-photon pulses".into()));
    }
    let wrapped = spec.base.phi.rem_euclid(2.0 * PI);
    if wrapped.min(2.0 * PI - wrapped) > 1e-9 {
        return Err(Error::InvalidParams("sweeps require a feedback phase of 2πm".into()));
    }
    if spec.widths.is_empty() || spec.taus.is_empty() {
        return Err(Error::InvalidParams("sweep axes must not be empty".into()));
    }
    if spec.taus.iter().any(|&t| !(t > 0.0)) || spec.widths.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::InvalidParams("sweep axes must be positive".into()));
    }
    let nt = spec.taus.len();
    let cells: Vec<Result<SweepCell>> = (0..spec.widths.len() * nt)
        .into_par_iter()
        .map(|c| {
            let (width, tau) = (spec.widths[c / nt], spec.taus[c % nt]);
            let mut params = spec.base;
            params.tau = tau;
            let pulse = spec.family.pulse(width, params.gamma, spec.onset.start(tau))?;
            let grid = TimeGrid::build(spec.cell_dt(tau), spec.cell_horizon(width, tau), tau)?;
            let sol = hierarchy::simulate(&params, &Envelope::new(pulse), &grid, opts)?;
            let (mean, spread) = final_window(&sol.times, &sol.population, default_window(&params))
                .ok_or_else(|| Error::InvalidGrid("horizon shorter than the steady-state window".into()))?;
            Ok(SweepCell {
                width,
                tau,
                steady_state: mean,
                converged: spread < spec.rel_tol * mean.max(1e-6),
                dt: grid.dt,
                horizon: grid.horizon(),
            })
        })
        .collect();
    Ok(SweepResult {
        family: spec.family,
        widths: spec.widths.clone(),
        taus: spec.taus.clone(),
        cells: cells.into_iter().collect::<Result<_>>()?,
    })
}

/// `n` values from `lo` to `hi`, evenly spaced on a log scale.
pub fn log_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}
