//! Output files. CSV files start with one `# meta:` line of space-separated
//! `key=value` pairs, followed by a header row and data rows. Numbers are
//! written in decimal with 12 significant digits (scientific notation only
//! outside `1e-5 ≤ |x| < 1e12`), lines end in LF. JSON files carry the same
//! metadata as an object next to the data arrays.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use wqed_core::experiments::{SweepResult, Trajectory};
use wqed_core::hierarchy::{InitialState, Options, StoreReport, SystemParams};
use wqed_core::pulse::PulseSpec;
use wqed_core::timegrid::TimeGrid;

use crate::config::Format;

/// Formats `x` with 12 significant digits, trailing zeros removed.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        trim_zeros(&format!("{:.*}", (11 - exp) as usize, x))
    } else {
        format!("{}e{exp}", trim_zeros(mant))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Ordered metadata; values never contain whitespace.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Meta(Vec<(String, String)>);

impl Meta {
    pub fn new() -> Self {
        let mut m = Self::default();
        m.put("tool", "wqed");
        m.put("version", env!("CARGO_PKG_VERSION"));
        m
    }

    pub fn put(&mut self, key: &str, value: impl ToString) {
        let v = value.to_string().replace(char::is_whitespace, "_");
        match self.0.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = v,
            None => self.0.push((key.to_string(), v)),
        }
    }

    pub fn num(&mut self, key: &str, x: f64) {
        self.put(key, fmt_num(x));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn line(&self) -> String {
        let pairs: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("# meta: {}\n", pairs.join(" "))
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        for (k, v) in &self.0 {
            m.insert(k.clone(), Value::String(v.clone()));
        }
        Value::Object(m)
    }

    pub fn params(&mut self, p: &SystemParams) {
        self.num("Gamma", p.gamma);
        self.num("tau", p.tau);
        self.num("phi", p.phi);
        self.num("gammaPD", p.gamma_pd);
        self.put("nPhotons", p.n_photons);
        self.put(
            "initialState",
            match p.initial {
                InitialState::GroundWithPulse => "ground_with_pulse",
                InitialState::ExcitedVacuum => "excited_vacuum",
            },
        );
        self.put("feedback", p.feedback);
    }

    pub fn pulse(&mut self, pulse: Option<&PulseSpec>, file: Option<&Path>) {
        match pulse {
            None => self.put("pulse.kind", "none"),
            Some(PulseSpec::Rectangular { t0, t_d }) => {
                self.put("pulse.kind", "rectangular");
                self.num("pulse.t0", *t0);
                self.num("pulse.tD", *t_d);
            }
            Some(PulseSpec::Gaussian { mu, sigma }) => {
                self.put("pulse.kind", "gaussian");
                self.num("pulse.mu", *mu);
                self.num("pulse.sigma", *sigma);
            }
            Some(PulseSpec::Exponential { t0, gamma_pulse }) => {
                self.put("pulse.kind", "exponential");
                self.num("pulse.t0", *t0);
                self.num("pulse.gammaPulse", *gamma_pulse);
            }
            Some(PulseSpec::Tabulated(t)) => {
                self.put("pulse.kind", "tabulated");
                self.put("pulse.samples", t.times().len());
                if let Some(f) = file {
                    self.put("pulse.file", f.display());
                }
            }
        }
    }

    pub fn grid(&mut self, g: &TimeGrid) {
        self.num("dt", g.dt);
        self.num("requestedDt", g.requested_dt);
        self.put("dtAdjusted", g.adjusted());
        self.num("horizon", g.horizon());
        self.put("nSteps", g.n_steps);
        self.put("kHalfTau", g.k_half_tau);
    }

    pub fn solver(&mut self, o: &Options) {
        self.put("kernel", format!("{:?}", o.kernel).to_lowercase());
        self.put("mapStorage", format!("{:?}", o.map_storage).to_lowercase());
        self.put("dephasingForm", o.dephasing_form);
    }

    pub fn report(&mut self, r: &StoreReport) {
        self.put("elementsPerStep", r.elements_per_step);
        self.put("nAux", r.n_aux);
        self.put("quadratureNodes", r.nodes);
        self.put("storeBytes", r.bytes);
        self.num("flopsPerStep", r.flops_per_step);
        let fams: Vec<String> = r.families.iter().map(|f| format!("{}:{}:{}", f.name, f.rank, f.elements)).collect();
        self.put("families", fams.join(";"));
    }

    pub fn trajectory(&mut self, t: &Trajectory) {
        self.put("source", t.source.as_str());
        self.params(&t.params);
        self.grid(&t.grid);
        match t.steady_state {
            Some(s) => self.num("steadyState", s),
            None => self.put("steadyState", "none"),
        }
        self.num("peak", t.peak());
        self.num("boundExcess", t.bound_excess());
        if let Some(r) = &t.report {
            self.report(r);
        }
    }
}

pub fn trajectory_csv(meta: &Meta, t: &Trajectory) -> String {
    let mut s = meta.line();
    s.push_str("t,population\n");
    for (x, p) in t.times.iter().zip(&t.population) {
        let _ = writeln!(s, "{},{}", fmt_num(*x), fmt_num(*p));
    }
    s
}

pub fn trajectory_json(meta: &Meta, t: &Trajectory) -> String {
    let v = json!({ "meta": meta.to_json(), "t": t.times, "population": t.population });
    format!("{v}\n")
}

pub fn sweep_csv(meta: &Meta, r: &SweepResult) -> String {
    let mut s = meta.line();
    s.push_str("width,tau,steady_state,converged\n");
    for c in &r.cells {
        let _ = writeln!(s, "{},{},{},{}", fmt_num(c.width), fmt_num(c.tau), fmt_num(c.steady_state), c.converged);
    }
    s
}

pub fn sweep_json(meta: &Meta, r: &SweepResult) -> String {
    let v = json!({ "meta": meta.to_json(), "widths": r.widths, "taus": r.taus, "cells": r.cells });
    format!("{v}\n")
}

/// Writes `<base>.csv` and/or `<base>.json`, creating parent directories.
pub fn write(base: &Path, format: Format, csv: impl FnOnce() -> String, json: impl FnOnce() -> String) -> io::Result<Vec<PathBuf>> {
    if let Some(dir) = base.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut out = Vec::new();
    let mut emit = |ext: &str, body: String| -> io::Result<()> {
        let mut p = base.as_os_str().to_owned();
        p.push(ext);
        let p = PathBuf::from(p);
        fs::write(&p, body)?;
        out.push(p);
        Ok(())
    };
    if matches!(format, Format::Csv | Format::Both) {
        emit(".csv", csv())?;
    }
    if matches!(format, Format::Json | Format::Both) {
        emit(".json", json())?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(-2.5), "-2.5");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(2.0 / 3.0 * 1e-3), "0.000666666666667");
        assert_eq!(fmt_num(123456.789), "123456.789");
        assert_eq!(fmt_num(1e-7 / 3.0), "3.33333333333e-8");
        assert_eq!(fmt_num(9.9999999999999e5), "1000000");
        assert_eq!(fmt_num(1.5e13), "1.5e13");
    }

    #[test]
    fn meta_values_have_no_spaces() {
        let mut m = Meta::new();
        m.put("file", "a b.txt");
        assert_eq!(m.get("file"), Some("a_b.txt"));
        assert!(m.line().starts_with("# meta: tool=wqed version="));
        assert!(m.line().ends_with("file=a_b.txt\n"));
    }
}
