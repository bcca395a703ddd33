//! Independent references for the hierarchy integrator: closed forms, the
//! exact delay solution for the vacuum problem, and a brute-force time-bin
//! collision model. Nothing here shares code with [`crate::hierarchy`].

mod timebin;

use num_complex::Complex64 as C64;
use std::f64::consts::TAU;

use crate::error::{Error, Result};

pub use timebin::{brute_force_timebin, BinTrajectory, TimeBinConfig, TimeBinState};

/// Most delay intervals [`vacuum_feedback_exact`] will sum.
pub const MAX_INTERVALS: usize = 50;

/// Free decay of the excited population, `e^{-2Γt}`.
pub fn ww_decay(gamma: f64, t: f64) -> f64 {
    (-2.0 * gamma * t).exp()
}

/// Exact amplitude `c(t)` of `c' = -Γc + Γe^{iφ}c(t-τ)`, `c(0) = 1`,
/// `c = 0` before `t = 0`.
///
/// Integrating interval by interval, the solution on `[jτ, (j+1)τ)` is the
/// previous one plus the term `(Γe^{iφ})^j (t-jτ)^j/j! e^{-Γ(t-jτ)}`; terms
/// are evaluated in log space so large `Γt` does not overflow.
pub fn vacuum_feedback_exact(gamma: f64, tau: f64, phi: f64, t: f64) -> Result<C64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParams(format!("t must be non-negative, got {t}")));
    }
    if tau == 0.0 {
        // the delayed term equals the present one: c' = Γ(e^{iφ} - 1)c
        return Ok((C64::from_polar(gamma, phi) - gamma).scale(t).exp());
    }
    let intervals = (t / tau).floor() as usize;
    if intervals > MAX_INTERVALS {
        return Err(Error::Refused(format!(
            "t/tau = {intervals} intervals exceeds {MAX_INTERVALS}; use bound_state_population for the long-time limit"
        )));
    }
    let mut sum = C64::new(0.0, 0.0);
    let mut ln_fact = 0.0;
    for j in 0..=intervals {
        if j > 0 {
            ln_fact += (j as f64).ln();
        }
        let x = gamma * (t - j as f64 * tau);
        if x < 0.0 {
            break;
        }
        let ln_mag = if j == 0 { -x } else { j as f64 * x.ln() - ln_fact - x };
        sum += C64::from_polar(ln_mag.exp(), j as f64 * phi);
    }
    Ok(sum)
}

/// Long-time population of the excited emitter with feedback, from the pole of
/// `ĉ(s) = 1/(s + Γ - Γe^{iφ}e^{-sτ})` on the imaginary axis.
///
/// A pole at `s = 0` exists only for `φ = 2πm`; its residue is
/// `1/(1+Γτ)`. Otherwise every pole has negative real part and the result is 0.
pub fn bound_state_population(gamma: f64, tau: f64, phi: f64) -> f64 {
    let wrapped = phi.rem_euclid(TAU);
    if wrapped.min(TAU - wrapped) > 1e-12 {
        return 0.0;
    }
    // d/ds (s + Γ - Γe^{-sτ}) at s = 0
    let slope = 1.0 + gamma * tau;
    (1.0 / slope).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ww_values() {
        assert_eq!(ww_decay(1.0, 0.0), 1.0);
        assert!((ww_decay(1.0, 1.0) - 0.135335283236613).abs() < 1e-14);
        assert!((ww_decay(1.0, 10.0) - 2.061153622438558e-9).abs() < 1e-20);
    }

    #[test]
    fn exact_before_first_round_trip() {
        for t in [0.0, 0.5, 1.99] {
            let c = vacuum_feedback_exact(1.0, 2.0, 0.7, t).unwrap();
            assert!((c - C64::new((-t).exp(), 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn satisfies_delay_equation() {
        // central difference of c against the right-hand side
        let (g, tau, phi) = (1.0, 1.3, 0.4);
        let c = |t: f64| vacuum_feedback_exact(g, tau, phi, t).unwrap();
        let eps = 1e-5;
        for t in [1.7, 3.1, 5.55, 9.2] {
            let dc = (c(t + eps) - c(t - eps)) / (2.0 * eps);
            let rhs = -g * c(t) + C64::from_polar(g, phi) * c(t - tau);
            assert!((dc - rhs).norm() < 1e-8, "t={t}: {dc} vs {rhs}");
        }
    }

    #[test]
    fn zero_delay_in_phase_freezes() {
        let c = vacuum_feedback_exact(1.0, 0.0, 0.0, 5.0).unwrap();
        assert!((c - 1.0).norm() < 1e-15);
    }

    #[test]
    fn refuses_many_intervals() {
        assert!(matches!(vacuum_feedback_exact(1.0, 2.0, 0.0, 200.0), Err(Error::Refused(_))));
    }

    #[test]
    fn residue_limits() {
        assert!((bound_state_population(1.0, 2.0, 0.0) - 1.0 / 9.0).abs() < 1e-15);
        assert!((bound_state_population(1.0, 2.0, 4.0 * std::f64::consts::PI) - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(bound_state_population(1.0, 2.0, std::f64::consts::PI), 0.0);
        // the method-of-steps sum approaches the residue
        let c = vacuum_feedback_exact(1.0, 0.5, 0.0, 24.0).unwrap();
        assert!((c.norm_sqr() - bound_state_population(1.0, 0.5, 0.0)).abs() < 1e-6);
    }
}
