//! Subcommand bodies: compute, write outputs, and return a short summary.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use wqed_core::experiments::{self, detect_steady_state, Source, Trajectory};
use wqed_core::hierarchy::{InitialState, SystemParams};
use wqed_core::oracle;
use wqed_core::timegrid::TimeGrid;

use crate::config::{Mode, RunConfig};
use crate::emit::{self, fmt_num, Meta};

#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

pub fn execute(mode: Mode, cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    match mode {
        Mode::Run => run(cfg, out),
        Mode::Sweep => sweep(cfg, out),
        Mode::Benchmark => benchmark(cfg, out),
        Mode::OracleCompare => oracle_compare(cfg, out),
    }
}

fn grid(cfg: &RunConfig) -> Result<TimeGrid> {
    cfg.grid.ok_or_else(|| anyhow!("grid.dt and grid.horizon are required"))
}

fn base_meta(cfg: &RunConfig, mode: Mode) -> Meta {
    let mut m = Meta::new();
    m.put("mode", mode.as_str());
    m.pulse(cfg.pulse.as_ref(), cfg.pulse_file.as_deref());
    m.solver(&cfg.options);
    m
}

fn with_window(cfg: &RunConfig, mut t: Trajectory) -> Trajectory {
    let window = cfg.window.unwrap_or_else(|| experiments::default_window(&t.params));
    t.steady_state = detect_steady_state(&t.times, &t.population, window, cfg.rel_tol);
    t
}

fn write_trajectory(cfg: &RunConfig, mut meta: Meta, t: &Trajectory, base: &Path) -> Result<Vec<PathBuf>> {
    meta.trajectory(t);
    let window = cfg.window.unwrap_or_else(|| experiments::default_window(&t.params));
    meta.num("steadyWindow", window);
    meta.num("steadyRelTol", cfg.rel_tol);
    emit::write(base, cfg.format, || emit::trajectory_csv(&meta, t), || emit::trajectory_json(&meta, t))
        .with_context(|| format!("writing {}", base.display()))
}

fn suffixed(base: &Path, suffix: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn steady_line(t: &Trajectory) -> String {
    match t.steady_state {
        Some(s) => format!("steady state {}", fmt_num(s)),
        None => "no steady state detected".into(),
    }
}

fn run(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let g = grid(cfg)?;
    let t = with_window(cfg, experiments::run_scenario(&cfg.params, cfg.pulse.as_ref(), &g, &cfg.options)?);
    let files = write_trajectory(cfg, base_meta(cfg, Mode::Run), &t, out)?;
    let mut summary = vec![
        format!("{} steps at dt = {}", g.n_steps, fmt_num(g.dt)),
        format!("peak population {}", fmt_num(t.peak())),
        steady_line(&t),
    ];
    if let Some(r) = &t.report {
        summary.push(format!("{} elements per step, {} bytes of history", r.elements_per_step, r.bytes));
    }
    if !t.within_bounds() {
        summary.push(format!("warning: population leaves [0, 1] by {}", fmt_num(t.bound_excess())));
    }
    Ok(Outcome { files, summary })
}

fn sweep(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let spec = cfg.sweep.as_ref().ok_or_else(|| anyhow!("sweep.widths and sweep.taus are required"))?;
    let r = experiments::sweep_steady_state(spec, &cfg.options)?;
    let mut m = Meta::new();
    m.put("mode", "sweep");
    m.put("source", Source::Hierarchy.as_str());
    m.params(&spec.base);
    m.put("family", spec.family.as_str());
    m.put("onset", spec.onset.as_str());
    m.put("widthAxis", if spec.family == experiments::PulseFamily::Exponential { "Gamma/gammaPulse" } else { "width" });
    m.num("dtMax", spec.dt_max);
    m.num("pointsPerTau", spec.points_per_tau);
    m.num("settle", spec.settle);
    m.num("settleTaus", spec.settle_taus);
    m.num("steadyRelTol", spec.rel_tol);
    m.put("steadyWindow", "5tau");
    m.put("nWidths", r.widths.len());
    m.put("nTaus", r.taus.len());
    let converged = r.cells.iter().filter(|c| c.converged).count();
    m.put("nConverged", converged);
    m.solver(&cfg.options);
    let files = emit::write(out, cfg.format, || emit::sweep_csv(&m, &r), || emit::sweep_json(&m, &r))
        .with_context(|| format!("writing {}", out.display()))?;
    let best = r.cells.iter().max_by(|a, b| a.steady_state.total_cmp(&b.steady_state)).expect("non-empty sweep");
    Ok(Outcome {
        files,
        summary: vec![
            format!("{} cells, {} converged", r.cells.len(), converged),
            format!("largest steady state {} at width {} and tau {}", fmt_num(best.steady_state), fmt_num(best.width), fmt_num(best.tau)),
        ],
    })
}

fn benchmark(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let g = grid(cfg)?;
    let h = with_window(cfg, experiments::run_scenario(&cfg.params, cfg.pulse.as_ref(), &g, &cfg.options)?);
    let o = with_window(cfg, experiments::run_oracle(&cfg.params, cfg.pulse.as_ref(), cfg.bin_dt, g.horizon())?);
    let k = experiments::run_markov(&cfg.params, cfg.pulse.as_ref(), &g)?;
    let (sup, l2) = experiments::discrepancy(&h, &o, f64::INFINITY)?;
    let peak = h.peak();
    let mut files = Vec::new();
    for (t, name) in [(&h, "hierarchy"), (&o, "oracle"), (&k, "markov")] {
        let mut m = base_meta(cfg, Mode::Benchmark);
        m.num("binDt", cfg.bin_dt);
        m.num("supNorm", sup);
        m.num("l2Norm", l2);
        m.num("supNormOverPeak", sup / peak);
        files.extend(write_trajectory(cfg, m, t, &suffixed(out, &format!("_{name}")))?);
    }
    Ok(Outcome {
        files,
        summary: vec![
            format!("hierarchy dt = {}, oracle bin = {}", fmt_num(g.dt), fmt_num(cfg.bin_dt)),
            format!("sup-norm discrepancy {} ({}% of peak {})", fmt_num(sup), fmt_num(100.0 * sup / peak), fmt_num(peak)),
            format!("L2-norm discrepancy {}", fmt_num(l2)),
        ],
    })
}

/// Closed-form or recursion reference on the hierarchy grid, with the time
/// up to which it applies.
fn reference(p: &SystemParams, cfg: &RunConfig, g: &TimeGrid) -> Result<(Trajectory, f64, &'static str)> {
    let times = g.times();
    let make = |population: Vec<f64>, source| Trajectory {
        times: times.clone(),
        population,
        params: *p,
        pulse: cfg.pulse.clone(),
        grid: *g,
        steady_state: None,
        source,
        report: None,
    };
    if p.initial == InitialState::ExcitedVacuum {
        if !p.feedback {
            let pop = times.iter().map(|&t| oracle::ww_decay(p.gamma, t)).collect();
            return Ok((make(pop, Source::Oracle), f64::INFINITY, "ww_decay"));
        }
        if p.gamma_pd > 0.0 {
            bail!("no closed-form reference for a dephased emitter with feedback; use `benchmark`");
        }
        let pop = times
            .iter()
            .map(|&t| oracle::vacuum_feedback_exact(p.gamma, p.tau, p.phi, t).map(|c| c.norm_sqr()))
            .collect::<wqed_core::Result<Vec<f64>>>()?;
        return Ok((make(pop, Source::Oracle), f64::INFINITY, "vacuum_feedback_exact"));
    }
    if p.feedback && p.tau == 0.0 {
        bail!("no reference for a pulsed emitter with feedback at tau = 0; use `benchmark`");
    }
    let k = experiments::run_markov(p, cfg.pulse.as_ref(), g)?;
    let until = if p.feedback { p.tau } else { f64::INFINITY };
    Ok((k, until, "markov"))
}

fn oracle_compare(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let g = grid(cfg)?;
    let h = with_window(cfg, experiments::run_scenario(&cfg.params, cfg.pulse.as_ref(), &g, &cfg.options)?);
    let (r, until, name) = reference(&cfg.params, cfg, &g)?;
    let (sup, l2) = experiments::discrepancy(&h, &r, until)?;
    let mut files = Vec::new();
    for (t, suffix) in [(&h, "hierarchy"), (&r, "reference")] {
        let mut m = base_meta(cfg, Mode::OracleCompare);
        m.put("reference", name);
        m.put("comparedUntil", if until.is_finite() { fmt_num(until) } else { "horizon".into() });
        m.num("supNorm", sup);
        m.num("l2Norm", l2);
        files.extend(write_trajectory(cfg, m, t, &suffixed(out, &format!("_{suffix}")))?);
    }
    let mut summary = vec![format!("reference {name}"), format!("sup-norm discrepancy {}", fmt_num(sup)), format!("L2-norm discrepancy {}", fmt_num(l2))];
    let p = &cfg.params;
    if p.initial == InitialState::ExcitedVacuum && p.feedback && p.tau > 0.0 {
        summary.push(format!("bound-state limit {}", fmt_num(oracle::bound_state_population(p.gamma, p.tau, p.phi))));
    }
    Ok(Outcome { files, summary })
}
