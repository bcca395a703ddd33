//! Uniform time grid aligned with the delay, and the auxiliary label axis
//! `s ∈ [-τ/2, T+τ/2]` over which field-label integrals are taken.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulse::Side;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub n_steps: usize,
    pub k_half_tau: usize,
    /// Step requested by the caller before delay alignment.
    pub requested_dt: f64,
}

impl TimeGrid {
    /// Builds a grid with `τ = 2·kHalfTau·dt` exactly. The step is adjusted to
    /// `τ / (2·round(τ/2dt))` when `τ > 0`; the horizon is rounded up to a
    /// whole number of steps.
    pub fn build(dt: f64, horizon: f64, tau: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidGrid(format!("dt must be positive, got {dt}")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidGrid(format!("horizon must be positive, got {horizon}")));
        }
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::InvalidGrid(format!("tau must be non-negative, got {tau}")));
        }
        let (k, h) = if tau == 0.0 {
            (0, dt)
        } else {
            if 0.5 * tau < dt {
                return Err(Error::DelayUnresolvable { half_tau: 0.5 * tau, dt });
            }
            let k = (0.5 * tau / dt).round() as usize;
            (k, 0.5 * tau / k as f64)
        };
        let n_steps = ((horizon / h) - 1e-9).ceil().max(1.0) as usize;
        Ok(Self { dt: h, n_steps, k_half_tau: k, requested_dt: dt })
    }

    pub fn adjusted(&self) -> bool {
        self.dt != self.requested_dt
    }

    pub fn tau(&self) -> f64 {
        2.0 * self.k_half_tau as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|n| self.time(n)).collect()
    }

    pub fn aux_min(&self) -> f64 {
        -(self.k_half_tau as f64) * self.dt
    }

    pub fn aux_max(&self) -> f64 {
        (self.n_steps + self.k_half_tau) as f64 * self.dt
    }

    pub fn n_aux(&self) -> usize {
        self.n_steps + 2 * self.k_half_tau + 1
    }

    /// Label of auxiliary index `i`.
    pub fn aux_time(&self, i: usize) -> f64 {
        (i as f64 - self.k_half_tau as f64) * self.dt
    }

    /// History index of `t_n - τ`, if it lies at or after `t = 0`.
    pub fn delayed(&self, n: usize) -> Option<usize> {
        n.checked_sub(2 * self.k_half_tau)
    }

    /// Trapezoid weights over the auxiliary grid.
    pub fn quad_weights(&self) -> Vec<f64> {
        trapezoid(self.n_aux(), self.dt)
    }
}

pub(crate) fn trapezoid(n: usize, h: f64) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h }).collect(),
    }
}

/// Quadrature nodes over the label axis.
///
/// A label at which the integrands have a persistent jump is represented by
/// two nodes carrying the left and right limits, each with half the trapezoid
/// weight. This keeps the quadrature second order across such labels.
#[derive(Clone, Debug)]
pub struct AuxNodes {
    /// Auxiliary index of each node.
    pub index: Vec<usize>,
    /// Which limit the node represents.
    pub side: Vec<Side>,
    pub weight: Vec<f64>,
    pub label: Vec<f64>,
    start: Vec<usize>,
}

impl AuxNodes {
    /// `split` lists label times that should carry separate one-sided nodes.
    /// Times that do not sit on a grid label, or sit on the boundary, are ignored.
    pub fn build(grid: &TimeGrid, split: &[f64]) -> Self {
        let n_aux = grid.n_aux();
        let w = grid.quad_weights();
        let mut is_split = vec![false; n_aux];
        for &s in split {
            let x = (s - grid.aux_min()) / grid.dt;
            let i = x.round();
            if (x - i).abs() < 1e-9 && i > 0.0 && (i as usize) < n_aux - 1 {
                is_split[i as usize] = true;
            }
        }
        let mut out = Self { index: vec![], side: vec![], weight: vec![], label: vec![], start: vec![] };
        for i in 0..n_aux {
            out.start.push(out.index.len());
            let sides: &[Side] = if is_split[i] {
                &[Side::Left, Side::Right]
            } else if i == 0 && n_aux > 1 {
                &[Side::Right]
            } else if i == n_aux - 1 && n_aux > 1 {
                &[Side::Left]
            } else {
                &[Side::Mid]
            };
            for &sd in sides {
                out.index.push(i);
                out.side.push(sd);
                out.weight.push(w[i] / sides.len() as f64);
                out.label.push(grid.aux_time(i));
            }
        }
        out.start.push(out.index.len());
        out
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Node positions carrying auxiliary index `i`.
    pub fn at(&self, i: usize) -> std::ops::Range<usize> {
        if i + 1 >= self.start.len() {
            return 0..0;
        }
        self.start[i]..self.start[i + 1]
    }
}
