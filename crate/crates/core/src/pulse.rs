//! Normalized pulse envelopes `f(t)` and the mirror-folded envelope
//! `f_τ(t) = f(t-τ/2)e^{iφ/2} - f(t+τ/2)e^{-iφ/2}`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Which one-sided value to return at a jump of the envelope.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Mid,
}

/// Tabulated envelope, linearly interpolated between samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tabulated {
    times: Vec<f64>,
    amps: Vec<C64>,
}

impl Tabulated {
    /// Builds a tabulated pulse and rescales it so that the trapezoid sum of
    /// `|f|²` over the samples is one.
    pub fn new(samples: Vec<(f64, C64)>) -> Result<Self> {
        let mut tab = Self::raw(samples)?;
        let norm = tab.trapezoid_norm_sq();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidPulse("tabulated pulse has zero norm".into()));
        }
        let scale = 1.0 / norm.sqrt();
        tab.amps.iter_mut().for_each(|a| *a *= scale);
        Ok(tab)
    }

    /// Builds a tabulated envelope without renormalizing it.
    pub fn raw(samples: Vec<(f64, C64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidPulse("tabulated pulse needs at least two samples".into()));
        }
        if samples.iter().any(|(t, a)| !t.is_finite() || !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidPulse("non-finite sample".into()));
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidPulse("sample times must be strictly increasing".into()));
        }
        let (times, amps) = samples.into_iter().unzip();
        Ok(Self { times, amps })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self { times: self.times.clone(), amps: self.amps.iter().map(|a| a * c).collect() }
    }

    fn trapezoid_norm_sq(&self) -> f64 {
        self.times
            .windows(2)
            .zip(self.amps.windows(2))
            .map(|(t, a)| 0.5 * (t[1] - t[0]) * (a[0].norm_sqr() + a[1].norm_sqr()))
            .sum()
    }

    fn interior(&self, t: f64) -> C64 {
        let i = self.times.partition_point(|&x| x <= t).saturating_sub(1);
        let i = i.min(self.times.len() - 2);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let u = (t - t0) / (t1 - t0);
        self.amps[i] * (1.0 - u) + self.amps[i + 1] * u
    }

    fn eval_side(&self, t: f64, side: Side) -> C64 {
        let (first, last) = (self.times[0], *self.times.last().unwrap());
        let zero = C64::new(0.0, 0.0);
        if t < first || t > last {
            return zero;
        }
        let inner = self.interior(t);
        let at_first = t == first;
        let at_last = t == last;
        match side {
            Side::Left if at_first => zero,
            Side::Right if at_last => zero,
            Side::Mid if at_first || at_last => 0.5 * inner,
            _ => inner,
        }
    }
}

/// Declarative pulse shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseSpec {
    Rectangular { t0: f64, t_d: f64 },
    Gaussian { mu: f64, sigma: f64 },
    Exponential { t0: f64, gamma_pulse: f64 },
    Tabulated(Tabulated),
}

impl PulseSpec {
    pub fn rectangular(t0: f64, t_d: f64) -> Result<Self> {
        let p = Self::Rectangular { t0, t_d };
        p.validate()?;
        Ok(p)
    }

    pub fn gaussian(mu: f64, sigma: f64) -> Result<Self> {
        let p = Self::Gaussian { mu, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn exponential(t0: f64, gamma_pulse: f64) -> Result<Self> {
        let p = Self::Exponential { t0, gamma_pulse };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidPulse(m.into()));
        match *self {
            Self::Rectangular { t0, t_d } => {
                if !t0.is_finite() || !(t_d > 0.0) || !t_d.is_finite() {
                    return bad("rectangular pulse needs finite t0 and tD > 0");
                }
            }
            Self::Gaussian { mu, sigma } => {
                if !mu.is_finite() || !(sigma > 0.0) || !sigma.is_finite() {
                    return bad("gaussian pulse needs finite mu and sigma > 0");
                }
            }
            Self::Exponential { t0, gamma_pulse } => {
                if !t0.is_finite() || !(gamma_pulse > 0.0) || !gamma_pulse.is_finite() {
                    return bad("exponential pulse needs finite t0 and gammaPulse > 0");
                }
            }
            Self::Tabulated(_) => {}
        }
        Ok(())
    }

    /// Normalization constant of the analytic shapes.
    pub fn amplitude(&self) -> Option<f64> {
        match *self {
            Self::Rectangular { t_d, .. } => Some(1.0 / t_d.sqrt()),
            Self::Gaussian { sigma, .. } => Some((PI * sigma * sigma).powf(-0.25)),
            Self::Exponential { gamma_pulse, .. } => Some((2.0 * gamma_pulse).sqrt()),
            Self::Tabulated(_) => None,
        }
    }

    /// `f(t)`, with the right-continuous convention `Θ(0) = 1` at hard edges.
    pub fn evaluate(&self, t: f64) -> C64 {
        match self {
            Self::Rectangular { t0, t_d } => {
                let on = t >= *t0 && t <= t0 + t_d;
                C64::new(if on { self.amplitude().unwrap() } else { 0.0 }, 0.0)
            }
            Self::Gaussian { mu, sigma } => {
                let x = (t - mu) / sigma;
                C64::new(self.amplitude().unwrap() * (-0.5 * x * x).exp(), 0.0)
            }
            Self::Exponential { t0, gamma_pulse } => {
                if t < *t0 {
                    C64::new(0.0, 0.0)
                } else {
                    C64::new(self.amplitude().unwrap() * (-gamma_pulse * (t - t0)).exp(), 0.0)
                }
            }
            Self::Tabulated(tab) => {
                // at a table end one of the two limits is zero; keep the other
                let (l, r) = (tab.eval_side(t, Side::Left), tab.eval_side(t, Side::Right));
                if r.norm_sqr() >= l.norm_sqr() { r } else { l }
            }
        }
    }

    /// One-sided value of `f` at `t`.
    pub fn evaluate_side(&self, t: f64, side: Side) -> C64 {
        match self {
            Self::Rectangular { t0, t_d } => {
                let a = self.amplitude().unwrap();
                let t1 = t0 + t_d;
                let v = match side {
                    Side::Left => (t > *t0 && t <= t1) as u8 as f64,
                    Side::Right => (t >= *t0 && t < t1) as u8 as f64,
                    Side::Mid => {
                        0.5 * ((t > *t0 && t <= t1) as u8 as f64 + (t >= *t0 && t < t1) as u8 as f64)
                    }
                };
                C64::new(a * v, 0.0)
            }
            Self::Gaussian { .. } => self.evaluate(t),
            Self::Exponential { t0, .. } => {
                if t == *t0 {
                    let a = C64::new(self.amplitude().unwrap(), 0.0);
                    match side {
                        Side::Left => C64::new(0.0, 0.0),
                        Side::Right => a,
                        Side::Mid => 0.5 * a,
                    }
                } else {
                    self.evaluate(t)
                }
            }
            Self::Tabulated(tab) => tab.eval_side(t, side),
        }
    }

    /// Times at which `f` may jump.
    pub fn edges(&self) -> Vec<f64> {
        match self {
            Self::Rectangular { t0, t_d } => vec![*t0, t0 + t_d],
            Self::Gaussian { .. } => vec![],
            Self::Exponential { t0, .. } => vec![*t0],
            Self::Tabulated(tab) => vec![tab.times[0], *tab.times.last().unwrap()],
        }
    }

    /// `f_τ(t)` evaluated with the right-continuous convention.
    pub fn evaluate_ftau(&self, t: f64, tau: f64, phi: f64) -> C64 {
        let e = C64::from_polar(1.0, 0.5 * phi);
        self.evaluate(t - 0.5 * tau) * e - self.evaluate(t + 0.5 * tau) * e.conj()
    }
}

/// The envelope as seen by the integrators: support before `t = 0` is dropped.
#[derive(Clone, Debug)]
pub struct Envelope {
    spec: PulseSpec,
    scale: C64,
}

impl Envelope {
    pub fn new(spec: PulseSpec) -> Self {
        Self { spec, scale: C64::new(1.0, 0.0) }
    }

    /// An envelope that vanishes identically.
    pub fn zero() -> Self {
        Self { spec: PulseSpec::Rectangular { t0: 0.0, t_d: 1.0 }, scale: C64::new(0.0, 0.0) }
    }

    pub fn scaled(spec: PulseSpec, scale: C64) -> Self {
        Self { spec, scale }
    }

    pub fn spec(&self) -> &PulseSpec {
        &self.spec
    }

    pub fn is_zero(&self) -> bool {
        self.scale == C64::new(0.0, 0.0)
    }

    pub fn at(&self, t: f64, side: Side) -> C64 {
        if t < 0.0 {
            return C64::new(0.0, 0.0);
        }
        let v = self.spec.evaluate_side(t, side);
        let v = if t == 0.0 {
            match side {
                Side::Left => C64::new(0.0, 0.0),
                Side::Right => v,
                Side::Mid => 0.5 * self.spec.evaluate_side(0.0, Side::Right),
            }
        } else {
            v
        };
        v * self.scale
    }

    pub fn ftau(&self, t: f64, tau: f64, phi: f64, side: Side) -> C64 {
        let e = C64::from_polar(1.0, 0.5 * phi);
        self.at(t - 0.5 * tau, side) * e - self.at(t + 0.5 * tau, side) * e.conj()
    }

    /// Label times where the envelope has a jump.
    pub fn jumps(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.spec.edges().into_iter().filter(|&t| t > 0.0).collect();
        out.push(0.0);
        out.retain(|&t| self.at(t, Side::Left) != self.at(t, Side::Right));
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}
