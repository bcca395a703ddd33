//! Run configuration: `key = value` lines, optionally grouped under
//! `[section]` headers. A key is addressed by its full path, so `tau = 2`
//! under `[system]` and a bare `system.tau = 2` are the same entry.
//! `#` starts a comment.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use wqed_core::experiments::{log_axis, Onset, PulseFamily, SweepSpec, DEFAULT_REL_TOL};
use wqed_core::hierarchy::{InitialState, Kernel, MapStorage, Options, SystemParams};
use wqed_core::pulse::{PulseSpec, Tabulated};
use wqed_core::timegrid::TimeGrid;
use wqed_core::{Error as CoreError, C64};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line of the offending entry, 0 when the key is missing.
    pub line: usize,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: {}: {}", self.line, self.key, self.message)
        } else {
            write!(f, "{}: {}", self.key, self.message)
        }
    }
}

/// Every violation found in one configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Run,
    Sweep,
    Benchmark,
    OracleCompare,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Run => "run",
            Self::Sweep => "sweep",
            Self::Benchmark => "benchmark",
            Self::OracleCompare => "oracle-compare",
        }
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "run" => Ok(Self::Run),
            "sweep" => Ok(Self::Sweep),
            "benchmark" => Ok(Self::Benchmark),
            "oracle-compare" => Ok(Self::OracleCompare),
            _ => Err("expected one of run, sweep, benchmark, oracle-compare".into()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub params: SystemParams,
    pub pulse: Option<PulseSpec>,
    pub pulse_file: Option<PathBuf>,
    /// Present when both `grid.dt` and `grid.horizon` are given.
    pub grid: Option<TimeGrid>,
    pub sweep: Option<SweepSpec>,
    pub options: Options,
    pub bin_dt: f64,
    pub window: Option<f64>,
    pub rel_tol: f64,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub warnings: Vec<String>,
}

const KEYS: &[&str] = &[
    "mode",
    "system.Gamma",
    "system.tau",
    "system.phi",
    "system.gammaPD",
    "system.nPhotons",
    "system.initialState",
    "system.feedback",
    "pulse.kind",
    "pulse.t0",
    "pulse.tD",
    "pulse.mu",
    "pulse.sigma",
    "pulse.gammaPulse",
    "pulse.file",
    "grid.dt",
    "grid.horizon",
    "sweep.family",
    "sweep.onset",
    "sweep.widths",
    "sweep.taus",
    "sweep.dtMax",
    "sweep.pointsPerTau",
    "sweep.settle",
    "sweep.settleTaus",
    "solver.kernel",
    "solver.mapStorage",
    "solver.dephasingForm",
    "solver.memoryLimit",
    "oracle.binDt",
    "steady.window",
    "steady.relTol",
    "output.path",
    "output.format",
];

struct Reader {
    entries: HashMap<String, (usize, String)>,
    errors: Vec<ConfigError>,
}

impl Reader {
    fn lex(text: &str) -> Self {
        let mut r = Self { entries: HashMap::new(), errors: Vec::new() };
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.split('#').next().unwrap_or("").trim();
            if s.is_empty() {
                continue;
            }
            if let Some(rest) = s.strip_prefix('[') {
                match rest.strip_suffix(']') {
                    Some(name) if !name.trim().is_empty() && !name.contains('.') => section = name.trim().to_string(),
                    _ => r.err(line, s, "malformed section header"),
                }
                continue;
            }
            let Some((k, v)) = s.split_once('=') else {
                r.err(line, s, "expected `key = value`");
                continue;
            };
            let (k, v) = (k.trim(), v.trim());
            let key = if section.is_empty() || k.contains('.') { k.to_string() } else { format!("{section}.{k}") };
            if !KEYS.contains(&key.as_str()) {
                r.err(line, &key, "unknown key");
            } else if v.is_empty() {
                r.err(line, &key, "empty value");
            } else if let Some((first, _)) = r.entries.get(&key) {
                let msg = format!("duplicate key (first set on line {first})");
                r.err(line, &key, &msg);
            } else {
                r.entries.insert(key, (line, v.to_string()));
            }
        }
        r
    }

    fn err(&mut self, line: usize, key: &str, message: &str) {
        self.errors.push(ConfigError { line, key: key.to_string(), message: message.to_string() });
    }

    /// Reports an error against `key`, at its line when it was set.
    fn fail(&mut self, key: &str, message: impl Into<String>) {
        let line = self.line(key);
        self.err(line, key, &message.into());
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.0)
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn raw(&self, key: &str) -> Option<String> {
        self.entries.get(key).map(|e| e.1.clone())
    }

    fn parsed<T>(&mut self, key: &str, what: &str, f: impl Fn(&str) -> Option<T>) -> Option<T> {
        let v = self.raw(key)?;
        let out = f(&v);
        if out.is_none() {
            self.fail(key, format!("expected {what}, got `{v}`"));
        }
        out
    }

    fn real(&mut self, key: &str) -> Option<f64> {
        self.parsed(key, "a real number", parse_real)
    }

    fn boolean(&mut self, key: &str) -> Option<bool> {
        self.parsed(key, "true or false", |s| match s {
            "true" => Some(true),
            "false" => Some(false),
            _ => None,
        })
    }

    fn count(&mut self, key: &str) -> Option<usize> {
        self.parsed(key, "a non-negative integer", |s| s.parse().ok())
    }

    fn positive(&mut self, key: &str) -> Option<f64> {
        let v = self.real(key)?;
        if v > 0.0 && v.is_finite() {
            Some(v)
        } else {
            self.fail(key, format!("must be positive, got {v}"));
            None
        }
    }

    fn require(&mut self, key: &str) -> bool {
        let ok = self.has(key);
        if !ok {
            self.fail(key, "missing");
        }
        ok
    }

    fn forbid(&mut self, key: &str, why: &str) {
        if self.has(key) {
            self.fail(key, format!("not used {why}"));
        }
    }
}

/// Accepts plain reals and multiples of π written as `pi`, `2pi` or `0.5*pi`.
pub fn parse_real(s: &str) -> Option<f64> {
    if let Some(m) = s.strip_suffix("pi") {
        let m = m.trim().trim_end_matches('*').trim();
        let k = if m.is_empty() {
            1.0
        } else if m == "-" {
            -1.0
        } else {
            m.parse::<f64>().ok()?
        };
        return Some(k * std::f64::consts::PI);
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// `log(lo, hi, n)`, `lin(lo, hi, n)` or an explicit comma-separated list.
pub fn parse_axis(s: &str) -> Option<Vec<f64>> {
    let call = |name: &str| -> Option<(f64, f64, usize)> {
        let inner = s.strip_prefix(name)?.trim().strip_prefix('(')?.strip_suffix(')')?;
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return None;
        }
        let n: usize = parts[2].parse().ok()?;
        (n >= 1).then_some((parse_real(parts[0])?, parse_real(parts[1])?, n))
    };
    if let Some((lo, hi, n)) = call("log") {
        return (lo > 0.0 && hi > 0.0).then(|| log_axis(lo, hi, n));
    }
    if let Some((lo, hi, n)) = call("lin") {
        let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
        return Some((0..n).map(|i| lo + step * i as f64).collect());
    }
    s.split(',').map(|p| parse_real(p.trim())).collect::<Option<Vec<_>>>().filter(|v| !v.is_empty())
}

/// Reads a two-column (time, real amplitude) or three-column (time, re, im)
/// pulse table separated by whitespace or commas.
pub fn read_pulse_table(text: &str) -> Result<Vec<(f64, C64)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        let cols: Vec<&str> = s.split(|c: char| c == ',' || c.is_whitespace()).filter(|c| !c.is_empty()).collect();
        let nums: Option<Vec<f64>> = cols.iter().map(|c| c.parse::<f64>().ok()).collect();
        match nums.as_deref() {
            Some(&[t, re]) => out.push((t, C64::new(re, 0.0))),
            Some(&[t, re, im]) => out.push((t, C64::new(re, im))),
            _ => return Err(format!("line {}: expected 2 or 3 numeric columns", i + 1)),
        }
    }
    Ok(out)
}

/// Parses a configuration; relative pulse files resolve against the
/// working directory.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    parse_config_in(text, Path::new("."), None)
}

/// Parses a configuration for `mode` (overriding the file's own `mode` key,
/// which must agree when present). Relative pulse files resolve against `base`.
pub fn parse_config_in(text: &str, base: &Path, mode: Option<Mode>) -> Result<RunConfig, ConfigErrors> {
    let mut r = Reader::lex(text);
    let file_mode = r.parsed("mode", "a mode", |s| s.parse::<Mode>().ok());
    if let (Some(a), Some(b)) = (mode, file_mode) {
        if a != b {
            r.fail("mode", format!("config is for `{}` but `{}` was requested", b.as_str(), a.as_str()));
        }
    }
    let mode = mode.or(file_mode);

    let params = read_system(&mut r, mode);
    let (pulse, pulse_file) = read_pulse(&mut r, &params, base, mode);
    let mut warnings = Vec::new();
    let grid = read_grid(&mut r, &params, mode, &mut warnings);
    let sweep = read_sweep(&mut r, &params, mode);
    let options = read_solver(&mut r);

    let bin_dt = r.positive("oracle.binDt").unwrap_or(0.05);
    if mode == Some(Mode::Benchmark) {
        if let Some(g) = &grid {
            let ratio = bin_dt / g.dt;
            if (ratio - ratio.round()).abs() > 1e-6 * ratio || ratio.round() < 1.0 {
                r.fail("oracle.binDt", format!("must be a whole multiple of the grid step {}", g.dt));
            }
        }
    }
    let window = r.positive("steady.window");
    let rel_tol = r.positive("steady.relTol").unwrap_or(DEFAULT_REL_TOL);
    if let (Some(w), true) = (window, params.tau > 0.0) {
        if w < 2.0 * params.tau && mode != Some(Mode::Sweep) {
            r.fail("steady.window", format!("must span at least 2·tau = {}", 2.0 * params.tau));
        }
    }
    let output_path = r.raw("output.path").map(PathBuf::from);
    let format = r
        .parsed("output.format", "csv, json or both", |s| match s {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            "both" => Some(Format::Both),
            _ => None,
        })
        .unwrap_or(Format::Csv);

    if !r.errors.is_empty() {
        r.errors.sort_by_key(|e| e.line);
        return Err(ConfigErrors(r.errors));
    }
    Ok(RunConfig {
        mode,
        params,
        pulse,
        pulse_file,
        grid,
        sweep,
        options,
        bin_dt,
        window,
        rel_tol,
        output_path,
        format,
        warnings,
    })
}

fn read_system(r: &mut Reader, mode: Option<Mode>) -> SystemParams {
    let initial = r
        .parsed("system.initialState", "ground_with_pulse or excited_vacuum", |s| match s {
            "ground_with_pulse" => Some(InitialState::GroundWithPulse),
            "excited_vacuum" => Some(InitialState::ExcitedVacuum),
            _ => None,
        })
        .unwrap_or(InitialState::GroundWithPulse);
    let n_photons = r.count("system.nPhotons").unwrap_or(0);
    let mut p = SystemParams {
        gamma: r.positive("system.Gamma").unwrap_or(1.0),
        tau: r.real("system.tau").unwrap_or(0.0),
        phi: r.real("system.phi").unwrap_or(0.0),
        gamma_pd: r.real("system.gammaPD").unwrap_or(0.0),
        n_photons,
        initial,
        feedback: r.boolean("system.feedback").unwrap_or(true),
    };
    if p.tau < 0.0 {
        r.fail("system.tau", format!("must be non-negative, got {}", p.tau));
        p.tau = 0.0;
    }
    if p.gamma_pd < 0.0 {
        r.fail("system.gammaPD", format!("must be non-negative, got {}", p.gamma_pd));
        p.gamma_pd = 0.0;
    }
    if n_photons > 3 {
        r.fail("system.nPhotons", CoreError::UnsupportedExcitation(n_photons).to_string());
    } else if p.gamma_pd > 0.0 && n_photons == 3 {
        r.fail("system.gammaPD", CoreError::DephasingUnsupported.to_string());
    }
    if initial == InitialState::ExcitedVacuum && n_photons != 0 {
        r.fail("system.initialState", "excited_vacuum requires system.nPhotons = 0");
    }
    if initial == InitialState::GroundWithPulse && n_photons == 0 && mode != Some(Mode::Sweep) {
        r.fail("system.nPhotons", "a ground-state emitter needs at least one photon (or use excited_vacuum)");
    }
    p
}

fn read_pulse(r: &mut Reader, params: &SystemParams, base: &Path, mode: Option<Mode>) -> (Option<PulseSpec>, Option<PathBuf>) {
    const FIELDS: &[&str] = &["pulse.t0", "pulse.tD", "pulse.mu", "pulse.sigma", "pulse.gammaPulse", "pulse.file"];
    let kind = r.raw("pulse.kind");
    let Some(kind) = kind else {
        for f in FIELDS {
            r.forbid(f, "without pulse.kind");
        }
        if params.initial == InitialState::GroundWithPulse && params.n_photons > 0 && mode != Some(Mode::Sweep) {
            r.fail("pulse.kind", "missing (required for a pulsed initial state)");
        }
        return (None, None);
    };
    if mode == Some(Mode::Sweep) {
        return (None, None);
    }
    if params.initial == InitialState::ExcitedVacuum {
        r.fail("pulse.kind", "a pulse cannot be combined with system.initialState = excited_vacuum");
        return (None, None);
    }
    let used: &[&str] = match kind.as_str() {
        "rectangular" => &["pulse.t0", "pulse.tD"],
        "gaussian" => &["pulse.mu", "pulse.sigma"],
        "exponential" => &["pulse.t0", "pulse.gammaPulse"],
        "tabulated" => &["pulse.file"],
        _ => {
            r.fail("pulse.kind", format!("expected rectangular, gaussian, exponential or tabulated, got `{kind}`"));
            return (None, None);
        }
    };
    for f in FIELDS.iter().filter(|f| !used.contains(f)) {
        r.forbid(f, &format!("by pulse.kind = {kind}"));
    }
    let attribute = |r: &mut Reader, res: wqed_core::Result<PulseSpec>, key: &str| match res {
        Ok(p) => Some(p),
        Err(e) => {
            r.fail(key, e.to_string());
            None
        }
    };
    let spec = match kind.as_str() {
        "rectangular" => {
            let t0 = r.real("pulse.t0").unwrap_or(0.0);
            match r.require("pulse.tD").then(|| r.real("pulse.tD")).flatten() {
                Some(td) => attribute(r, PulseSpec::rectangular(t0, td), "pulse.tD"),
                None => None,
            }
        }
        "gaussian" => {
            let ok = r.require("pulse.mu") & r.require("pulse.sigma");
            match (ok, r.real("pulse.mu"), r.real("pulse.sigma")) {
                (true, Some(mu), Some(sigma)) => attribute(r, PulseSpec::gaussian(mu, sigma), "pulse.sigma"),
                _ => None,
            }
        }
        "exponential" => {
            let t0 = r.real("pulse.t0").unwrap_or(0.0);
            match r.require("pulse.gammaPulse").then(|| r.real("pulse.gammaPulse")).flatten() {
                Some(g) => attribute(r, PulseSpec::exponential(t0, g), "pulse.gammaPulse"),
                None => None,
            }
        }
        _ => {
            if !r.require("pulse.file") {
                return (None, None);
            }
            let path = base.join(r.raw("pulse.file").unwrap_or_default());
            let table = std::fs::read_to_string(&path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))
                .and_then(|t| read_pulse_table(&t).map_err(|e| format!("{}: {e}", path.display())))
                .and_then(|s| Tabulated::new(s).map_err(|e| e.to_string()));
            return match table {
                Ok(t) => (Some(PulseSpec::Tabulated(t)), Some(path)),
                Err(e) => {
                    r.fail("pulse.file", e);
                    (None, Some(path))
                }
            };
        }
    };
    (spec, None)
}

fn read_grid(r: &mut Reader, params: &SystemParams, mode: Option<Mode>, warnings: &mut Vec<String>) -> Option<TimeGrid> {
    let needs = matches!(mode, Some(Mode::Run | Mode::Benchmark | Mode::OracleCompare));
    if mode == Some(Mode::Sweep) {
        r.forbid("grid.dt", "by sweeps (see sweep.dtMax)");
        r.forbid("grid.horizon", "by sweeps (see sweep.settle)");
        return None;
    }
    if needs {
        r.require("grid.dt");
        r.require("grid.horizon");
    }
    let dt = r.positive("grid.dt");
    let horizon = r.positive("grid.horizon");
    let (dt, horizon) = (dt?, horizon?);
    match TimeGrid::build(dt, horizon, params.tau) {
        Ok(g) => {
            if g.adjusted() {
                warnings.push(format!(
                    "grid.dt = {dt} adjusted to {} so that tau/2 = {} spans {} whole steps",
                    g.dt,
                    0.5 * params.tau,
                    g.k_half_tau
                ));
            }
            Some(g)
        }
        Err(e) => {
            r.fail("grid.dt", e.to_string());
            None
        }
    }
}

fn read_sweep(r: &mut Reader, params: &SystemParams, mode: Option<Mode>) -> Option<SweepSpec> {
    const KEYS: &[&str] = &["sweep.family", "sweep.onset", "sweep.widths", "sweep.taus", "sweep.dtMax", "sweep.pointsPerTau", "sweep.settle", "sweep.settleTaus"];
    if mode != Some(Mode::Sweep) {
        if mode.is_some() {
            for k in KEYS {
                r.forbid(k, "outside sweep mode");
            }
        }
        return None;
    }
    if params.initial != InitialState::GroundWithPulse || params.n_photons != 2 {
        r.fail("system.nPhotons", "sweeps are defined for two-photon pulses (system.nPhotons = 2)");
    }
    let wrapped = params.phi.rem_euclid(2.0 * std::f64::consts::PI);
    if wrapped.min(2.0 * std::f64::consts::PI - wrapped) > 1e-9 {
        r.fail("system.phi", "sweeps require a feedback phase of 2πm");
    }
    if params.gamma_pd > 0.0 {
        r.fail("system.gammaPD", "sweeps are defined without dephasing");
    }
    for k in ["system.tau", "pulse.kind", "pulse.t0", "pulse.tD", "pulse.mu", "pulse.sigma", "pulse.gammaPulse", "pulse.file"] {
        r.forbid(k, "by sweeps (the axes set them)");
    }
    let family = r
        .parsed("sweep.family", "rectangular, gaussian or exponential", |s| match s {
            "rectangular" => Some(PulseFamily::Rectangular),
            "gaussian" => Some(PulseFamily::Gaussian),
            "exponential" => Some(PulseFamily::Exponential),
            _ => None,
        })
        .unwrap_or(PulseFamily::Rectangular);
    let ok = r.require("sweep.widths") & r.require("sweep.taus");
    let axis = |r: &mut Reader, key: &str| {
        let v = r.parsed(key, "log(lo, hi, n), lin(lo, hi, n) or a comma-separated list", parse_axis)?;
        if v.iter().all(|&x| x > 0.0) {
            Some(v)
        } else {
            r.fail(key, "values must be positive");
            None
        }
    };
    let widths = axis(r, "sweep.widths");
    let taus = axis(r, "sweep.taus");
    let mut base = *params;
    base.tau = 0.0;
    let mut spec = SweepSpec::new(family, widths.clone().unwrap_or_default(), taus.clone().unwrap_or_default(), base);
    if let Some(o) = r.parsed("sweep.onset", "arrival or origin", |s| match s {
        "arrival" => Some(Onset::Arrival),
        "origin" => Some(Onset::Origin),
        _ => None,
    }) {
        spec.onset = o;
    }
    if let Some(v) = r.positive("sweep.dtMax") {
        spec.dt_max = v;
    }
    if let Some(v) = r.positive("sweep.pointsPerTau") {
        if v < 2.0 {
            r.fail("sweep.pointsPerTau", "must be at least 2 (tau/2 needs a whole step)");
        }
        spec.points_per_tau = v;
    }
    if let Some(v) = r.positive("sweep.settle") {
        spec.settle = v;
    }
    if let Some(v) = r.real("sweep.settleTaus") {
        if v < 5.0 {
            r.fail("sweep.settleTaus", "must be at least 5 so the steady-state window fits");
        }
        spec.settle_taus = v;
    }
    if let Some(v) = r.positive("steady.relTol") {
        spec.rel_tol = v;
    }
    r.forbid("steady.window", "by sweeps (the window is 5·tau per cell)");
    (ok && widths.is_some() && taus.is_some()).then_some(spec)
}

fn read_solver(r: &mut Reader) -> Options {
    let mut o = Options::default();
    if let Some(k) = r.parsed("solver.kernel", "factored or dense", |s| match s {
        "factored" => Some(Kernel::Factored),
        "dense" => Some(Kernel::Dense),
        _ => None,
    }) {
        o.kernel = k;
    }
    if let Some(m) = r.parsed("solver.mapStorage", "propagator or direct", |s| match s {
        "propagator" => Some(MapStorage::Propagator),
        "direct" => Some(MapStorage::Direct),
        _ => None,
    }) {
        o.map_storage = m;
    }
    if let Some(b) = r.boolean("solver.dephasingForm") {
        o.dephasing_form = b;
    }
    if let Some(m) = r.positive("solver.memoryLimit") {
        o.memory_limit = m as usize;
    }
    o
}

#[cfg(test)]
mod tests {
    use super::*;

    const DECAY: &str = "[system]\ninitialState = excited_vacuum\nfeedback = false\n[grid]\ndt = 0.001\nhorizon = 10\n";

    #[test]
    fn minimal_decay_config() {
        let c = parse_config_in(DECAY, Path::new("."), Some(Mode::Run)).unwrap();
        assert_eq!(c.params.initial, InitialState::ExcitedVacuum);
        assert!(!c.params.feedback);
        assert_eq!(c.grid.unwrap().n_steps, 10_000);
        assert!(c.warnings.is_empty());
    }

    #[test]
    fn too_many_photons() {
        let e = parse_config("system.nPhotons = 4\npulse.kind = rectangular\npulse.tD = 2\n").unwrap_err();
        assert_eq!(e.0.len(), 1, "{e}");
        assert_eq!(e.0[0].line, 1);
        assert_eq!(e.0[0].key, "system.nPhotons");
        assert!(e.to_string().contains("unsupported excitation number"), "{e}");
    }

    #[test]
    fn adjusted_step_is_echoed() {
        let c = parse_config("system.tau = 2.0\nsystem.initialState = excited_vacuum\ngrid.dt = 0.013\ngrid.horizon = 5\n").unwrap();
        let g = c.grid.unwrap();
        assert_eq!(g.k_half_tau, 77);
        assert_eq!(c.warnings.len(), 1);
        assert!(c.warnings[0].contains("0.013") && c.warnings[0].contains(&g.dt.to_string()), "{:?}", c.warnings);
    }

    #[test]
    fn every_violation_is_listed_with_its_line() {
        let text = "[system]\nnPhotons = 2\ntau = -1\nfoo = 3\n[pulse]\nkind = rectangular\ntD = abc\nsigma = 1\n";
        let e = parse_config(text).unwrap_err();
        let got: Vec<(usize, &str)> = e.0.iter().map(|e| (e.line, e.key.as_str())).collect();
        assert_eq!(got, vec![(3, "system.tau"), (4, "system.foo"), (7, "pulse.tD"), (8, "pulse.sigma")]);
    }

    #[test]
    fn sections_and_dotted_keys_agree() {
        let a = parse_config("[system]\ntau = 2\ninitialState = excited_vacuum\n").unwrap();
        let b = parse_config("system.tau = 2\nsystem.initialState = excited_vacuum\n").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicate_and_malformed_lines() {
        let e = parse_config("system.tau = 1\nsystem.tau = 2\njunk\n[bad\nsystem.initialState = excited_vacuum\n").unwrap_err();
        assert_eq!(e.0.iter().map(|e| e.line).collect::<Vec<_>>(), vec![2, 3, 4]);
    }

    #[test]
    fn mode_mismatch() {
        let e = parse_config_in(&format!("mode = sweep\n{DECAY}"), Path::new("."), Some(Mode::Run)).unwrap_err();
        assert!(e.0.iter().any(|e| e.key == "mode" && e.line == 1), "{e}");
    }

    #[test]
    fn pi_multiples() {
        assert_eq!(parse_real("pi"), Some(std::f64::consts::PI));
        assert_eq!(parse_real("2*pi"), Some(2.0 * std::f64::consts::PI));
        assert_eq!(parse_real("0.5pi"), Some(0.5 * std::f64::consts::PI));
        assert_eq!(parse_real("x"), None);
    }

    #[test]
    fn axes() {
        assert_eq!(parse_axis("1, 2,3"), Some(vec![1.0, 2.0, 3.0]));
        assert_eq!(parse_axis("lin(0, 1, 3)"), Some(vec![0.0, 0.5, 1.0]));
        assert_eq!(parse_axis("log(1, 100, 3)").unwrap().len(), 3);
        assert_eq!(parse_axis("log(0, 1, 3)"), None);
    }

    #[test]
    fn sweep_config() {
        let text = "mode = sweep\nsystem.nPhotons = 2\n[sweep]\nwidths = log(0.5, 5, 4)\ntaus = 1, 2\n";
        let c = parse_config(text).unwrap();
        let s = c.sweep.unwrap();
        assert_eq!((s.widths.len(), s.taus.len()), (4, 2));
        let e = parse_config("mode = sweep\nsystem.nPhotons = 1\nsystem.tau = 2\nsweep.widths = 1\nsweep.taus = 1\n").unwrap_err();
        let keys: Vec<&str> = e.0.iter().map(|e| e.key.as_str()).collect();
        assert_eq!(keys, vec!["system.nPhotons", "system.tau"]);
    }

    #[test]
    fn pulse_table_columns() {
        let t = read_pulse_table("# t re im\n0 1\n1, 0.5, 0.25\n").unwrap();
        assert_eq!(t[1], (1.0, C64::new(0.5, 0.25)));
        assert!(read_pulse_table("0 1 2 3\n").unwrap_err().starts_with("line 1"));
    }
}
