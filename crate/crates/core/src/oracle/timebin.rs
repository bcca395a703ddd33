//! Collision-model state-vector propagation.
//!
//! The waveguide is cut into bins of width `Δ` labelled like the field
//! coordinate `s`. During step `k` the emitter meets bin `k + L` on its way
//! in and bin `k` on its way back from the mirror, `L = τ/Δ`, through
//! `R = e^{iφ/2}a_k - e^{-iφ/2}a_{k+L}`. Each step applies
//! `exp(√(ΓΔ)(R†σ - σ†R))` exactly on the emitter and the two bins.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{InitialState, SystemParams};
use crate::pulse::{Envelope, Side};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Largest state dimension the oracle will allocate.
pub const MAX_DIMENSION: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeBinConfig {
    pub bin_dt: f64,
    pub horizon: f64,
}

/// Amplitudes over `{g,e} ⊗ {bin occupations}` with at most two excitations,
/// grouped by excitation number.
#[derive(Clone, Debug)]
pub struct TimeBinState {
    /// `|e, vac⟩`.
    pub e0: C64,
    /// `|g, 1_j⟩`.
    pub g1: Vec<C64>,
    /// `|e, 1_j⟩`.
    pub e1: Vec<C64>,
    /// `|g, 1_i 1_j⟩` for `i < j` and `|g, 2_i⟩` on the diagonal, packed.
    pub g2: Vec<C64>,
    pub n_bins: usize,
    pub feedback_offset: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BinTrajectory {
    pub times: Vec<f64>,
    pub population: Vec<f64>,
    pub bin_dt: f64,
    pub n_bins: usize,
    pub dimension: usize,
    /// Largest deviation of either excitation sector's norm from its start value.
    pub max_norm_drift: f64,
}

fn pair(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl TimeBinState {
    fn new(n_bins: usize, feedback_offset: usize) -> Self {
        Self {
            e0: ZERO,
            g1: vec![ZERO; n_bins],
            e1: vec![ZERO; n_bins],
            g2: vec![ZERO; n_bins * (n_bins + 1) / 2],
            n_bins,
            feedback_offset,
        }
    }

    pub fn dimension(n_bins: usize) -> usize {
        1 + 2 * n_bins + n_bins * (n_bins + 1) / 2
    }

    /// Norms of the one- and two-excitation sectors.
    pub fn sector_norms(&self) -> (f64, f64) {
        let one = self.e0.norm_sqr() + self.g1.iter().map(|a| a.norm_sqr()).sum::<f64>();
        let two = self.e1.iter().chain(&self.g2).map(|a| a.norm_sqr()).sum::<f64>();
        (one, two)
    }

    pub fn excited_population(&self) -> f64 {
        self.e0.norm_sqr() + self.e1.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    /// Applies the step unitary to the emitter and bins `r` (returning) and
    /// `d` (incoming).
    fn collide(&mut self, u: &Collision, r: usize, d: usize) {
        let n = self.n_bins;
        let one = |v: [C64; 3]| u.apply1(v);
        let [a, b, c] = one([self.e0, self.g1[r], self.g1[d]]);
        self.e0 = a;
        self.g1[r] = b;
        self.g1[d] = c;

        let idx = [pair(n, r, r), pair(n, d, d), pair(n, r, d)];
        let v = u.apply2([self.e1[r], self.e1[d], self.g2[idx[0]], self.g2[idx[1]], self.g2[idx[2]]]);
        self.e1[r] = v[0];
        self.e1[d] = v[1];
        self.g2[idx[0]] = v[2];
        self.g2[idx[1]] = v[3];
        self.g2[idx[2]] = v[4];

        // a spectator photon in any other bin
        for o in 0..n {
            if o == r || o == d {
                continue;
            }
            let (pr, pd) = (pair(n, r, o), pair(n, d, o));
            let [a, b, c] = one([self.e1[o], self.g2[pr], self.g2[pd]]);
            self.e1[o] = a;
            self.g2[pr] = b;
            self.g2[pd] = c;
        }
    }
}

/// The two excitation-conserving blocks of the step unitary.
struct Collision {
    /// Basis `|e,0,0⟩, |g,1,0⟩, |g,0,1⟩` (emitter, returning bin, incoming bin).
    u1: [[C64; 3]; 3],
    /// Basis `|e,1,0⟩, |e,0,1⟩, |g,2,0⟩, |g,0,2⟩, |g,1,1⟩`.
    u2: [[C64; 5]; 5],
}

impl Collision {
    fn new(kappa: f64, phi: f64) -> Self {
        // |q, nr, nd⟩ with q ∈ {g, e}, n ≤ 2
        let id = |q: usize, nr: usize, nd: usize| q * 9 + nr * 3 + nd;
        let cr = C64::from_polar(1.0, 0.5 * phi);
        let cd = -C64::from_polar(1.0, -0.5 * phi);
        let mut g = DMatrix::<C64>::zeros(18, 18);
        for nr in 0..3 {
            for nd in 0..3 {
                // σ†R: |g,nr,nd⟩ → |e,nr-1,nd⟩ √nr c_r + |e,nr,nd-1⟩ √nd c_d
                if nr > 0 {
                    let v = cr * (nr as f64).sqrt() * kappa;
                    g[(id(1, nr - 1, nd), id(0, nr, nd))] -= v;
                    g[(id(0, nr, nd), id(1, nr - 1, nd))] += v.conj();
                }
                if nd > 0 {
                    let v = cd * (nd as f64).sqrt() * kappa;
                    g[(id(1, nr, nd - 1), id(0, nr, nd))] -= v;
                    g[(id(0, nr, nd), id(1, nr, nd - 1))] += v.conj();
                }
            }
        }
        let u = g.exp();
        let b1 = [id(1, 0, 0), id(0, 1, 0), id(0, 0, 1)];
        let b2 = [id(1, 1, 0), id(1, 0, 1), id(0, 2, 0), id(0, 0, 2), id(0, 1, 1)];
        let mut u1 = [[ZERO; 3]; 3];
        let mut u2 = [[ZERO; 5]; 5];
        for (i, &p) in b1.iter().enumerate() {
            for (j, &q) in b1.iter().enumerate() {
                u1[i][j] = u[(p, q)];
            }
        }
        for (i, &p) in b2.iter().enumerate() {
            for (j, &q) in b2.iter().enumerate() {
                u2[i][j] = u[(p, q)];
            }
        }
        Self { u1, u2 }
    }

    fn apply1(&self, v: [C64; 3]) -> [C64; 3] {
        let mut o = [ZERO; 3];
        for (i, row) in self.u1.iter().enumerate() {
            o[i] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
        }
        o
    }

    fn apply2(&self, v: [C64; 5]) -> [C64; 5] {
        let mut o = [ZERO; 5];
        for (i, row) in self.u2.iter().enumerate() {
            o[i] = (0..5).map(|j| row[j] * v[j]).sum();
        }
        o
    }
}

/// Bin amplitudes `F_b ∝ ∫_bin f(s) ds / √Δ` of the pulse, normalized to one.
fn bin_amplitudes(env: &Envelope, s0: f64, dt: f64, n: usize) -> Result<Vec<C64>> {
    const SUB: usize = 64;
    let h = dt / SUB as f64;
    let amps: Vec<C64> = (0..n)
        .map(|b| {
            let lo = s0 + b as f64 * dt;
            let sum: C64 = (0..SUB).map(|i| env.at(lo + (i as f64 + 0.5) * h, Side::Mid)).sum();
            sum * h / dt.sqrt()
        })
        .collect();
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 1e-12) {
        return Err(Error::InvalidPulse("pulse has no weight inside the bin window".into()));
    }
    Ok(amps.into_iter().map(|a| a / norm).collect())
}

/// Emitter population from the collision model, sampled after every bin step.
pub fn brute_force_timebin(params: &SystemParams, env: &Envelope, cfg: &TimeBinConfig) -> Result<BinTrajectory> {
    params.validate()?;
    let dt = cfg.bin_dt;
    if !(dt > 0.0) || !(cfg.horizon > 0.0) {
        return Err(Error::InvalidGrid("bin width and horizon must be positive".into()));
    }
    let l = params.tau / dt;
    let offset = l.round() as usize;
    if (l - offset as f64).abs() > 1e-9 * l.max(1.0) || (params.feedback && offset == 0) {
        return Err(Error::InvalidGrid(format!("tau = {} is not a positive multiple of the bin width {dt}", params.tau)));
    }
    let pulsed = params.initial == InitialState::GroundWithPulse && params.n_photons > 0;
    if params.n_photons > 2 {
        return Err(Error::UnsupportedExcitation(params.n_photons));
    }
    if params.gamma_pd > 0.0 {
        return Err(Error::InvalidParams("the time-bin oracle has no dephasing channel".into()));
    }
    if !params.feedback && pulsed {
        return Err(Error::InvalidParams("the time-bin oracle needs the mirror when a pulse is present".into()));
    }
    let steps = ((cfg.horizon / dt) - 1e-9).ceil() as usize;
    // label bins cover [-τ/2, T + τ/2]; without the mirror the returning
    // bins are a separate, never revisited set
    let field_bins = steps + offset;
    let n_bins = if params.feedback { field_bins } else { field_bins + steps };
    let dimension = TimeBinState::dimension(n_bins);
    if dimension > MAX_DIMENSION {
        return Err(Error::TooLarge(format!(
            "time-bin state dimension {dimension} exceeds {MAX_DIMENSION}; increase binDt or shorten the horizon"
        )));
    }

    let mut st = TimeBinState::new(n_bins, offset);
    match (params.initial, params.n_photons) {
        (InitialState::ExcitedVacuum, _) => st.e0 = C64::new(1.0, 0.0),
        (InitialState::GroundWithPulse, 0) => {}
        (InitialState::GroundWithPulse, n) => {
            let f = bin_amplitudes(env, -0.5 * params.tau, dt, field_bins)?;
            if n == 1 {
                st.g1[..field_bins].copy_from_slice(&f);
            } else {
                for i in 0..field_bins {
                    st.g2[pair(n_bins, i, i)] = f[i] * f[i];
                    for j in i + 1..field_bins {
                        st.g2[pair(n_bins, i, j)] = std::f64::consts::SQRT_2 * f[i] * f[j];
                    }
                }
            }
        }
    }

    let u = Collision::new((params.gamma * dt).sqrt(), params.phi);
    let (n1, n2) = st.sector_norms();
    let mut drift: f64 = 0.0;
    let mut times = vec![0.0];
    let mut population = vec![st.excited_population()];
    for k in 0..steps {
        let r = if params.feedback { k } else { field_bins + k };
        st.collide(&u, r, k + offset);
        let (m1, m2) = st.sector_norms();
        drift = drift.max((m1 - n1).abs()).max((m2 - n2).abs());
        assert!(drift < 1e-8, "collision model lost unitarity: norm drift {drift}");
        times.push((k + 1) as f64 * dt);
        population.push(st.excited_population());
    }
    Ok(BinTrajectory { times, population, bin_dt: dt, n_bins, dimension, max_norm_drift: drift })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::ww_decay;
    use crate::pulse::PulseSpec;

    #[test]
    fn step_unitary_is_unitary() {
        let c = Collision::new(0.3, 0.9);
        for i in 0..3 {
            for j in 0..3 {
                let dot: C64 = (0..3).map(|k| c.u1[k][i].conj() * c.u1[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).norm() < 1e-13);
            }
        }
        for i in 0..5 {
            for j in 0..5 {
                let dot: C64 = (0..5).map(|k| c.u2[k][i].conj() * c.u2[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn empty_pulse_stays_dark() {
        let p = SystemParams::pulsed(0, 1.0, 0.0);
        let env = Envelope::new(PulseSpec::rectangular(0.0, 2.0).unwrap());
        let r = brute_force_timebin(&p, &env, &TimeBinConfig { bin_dt: 0.1, horizon: 3.0 }).unwrap();
        assert!(r.population.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn free_decay_without_mirror() {
        let p = SystemParams::excited(1.0, 0.0).without_feedback();
        let r = brute_force_timebin(&p, &Envelope::zero(), &TimeBinConfig { bin_dt: 0.05, horizon: 10.0 }).unwrap();
        let err = r.times.iter().zip(&r.population).map(|(&t, &p)| (p - ww_decay(1.0, t)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-2, "{err}");
    }

    #[test]
    fn dimension_guard() {
        let p = SystemParams::pulsed(2, 1.0, 0.0);
        let env = Envelope::new(PulseSpec::rectangular(0.0, 2.0).unwrap());
        let r = brute_force_timebin(&p, &env, &TimeBinConfig { bin_dt: 0.001, horizon: 10.0 });
        assert!(matches!(r, Err(Error::TooLarge(_))));
    }
}
