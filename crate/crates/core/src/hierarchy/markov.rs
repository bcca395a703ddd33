use num_complex::Complex64 as C64;

use super::{InitialState, SystemParams};
use crate::error::{Error, Result};
use crate::pulse::{Envelope, Side};
use crate::timegrid::TimeGrid;

/// Population of a Fock pulse driving the emitter without feedback, from the
/// closed recursion over photon number `k = 1..n`:
///
/// `y_k' = -(Γ+γ)y_k - √(kΓ) f_τ (1 - 2P_{k-1})`,
/// `P_k' = -2ΓP_k - 2√(kΓ) Re(f_τ* y_k)`,
///
/// with `P_0 = 0`. Before the first round trip this coincides with the full
/// feedback dynamics, which makes it a reference on `[0, τ)`.
pub fn markov(params: &SystemParams, env: &Envelope, grid: &TimeGrid) -> Result<Vec<f64>> {
    params.validate()?;
    if params.initial != InitialState::GroundWithPulse {
        return Err(Error::InvalidParams("the recursion needs a pulsed initial state".into()));
    }
    let n = params.n_photons;
    let h = grid.dt;
    let g = params.gamma;
    let e1 = (-(g + params.gamma_pd) * h).exp();
    let e2 = (-2.0 * g * h).exp();
    let steps = grid.n_steps;
    let mut y = vec![vec![C64::new(0.0, 0.0); steps + 1]; n + 1];
    let mut p = vec![vec![0.0; steps + 1]; n + 1];
    for s in 0..steps {
        let f0 = env.ftau(grid.time(s), params.tau, params.phi, Side::Right);
        let f1 = env.ftau(grid.time(s + 1), params.tau, params.phi, Side::Left);
        for k in 1..=n {
            let r = (k as f64 * g).sqrt();
            let a0 = -r * f0 * (1.0 - 2.0 * p[k - 1][s]);
            let a1 = -r * f1 * (1.0 - 2.0 * p[k - 1][s + 1]);
            y[k][s + 1] = e1 * y[k][s] + 0.5 * h * (e1 * a0 + a1);
            let b0 = -2.0 * r * (f0.conj() * y[k][s]).re;
            let b1 = -2.0 * r * (f1.conj() * y[k][s + 1]).re;
            p[k][s + 1] = e2 * p[k][s] + 0.5 * h * (e2 * b0 + b1);
        }
    }
    Ok(p.swap_remove(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::PulseSpec;

    #[test]
    fn vanishes_without_photons() {
        let grid = TimeGrid::build(0.01, 5.0, 2.0).unwrap();
        let env = Envelope::new(PulseSpec::rectangular(0.0, 2.0).unwrap());
        let p = markov(&SystemParams::pulsed(0, 2.0, 0.0), &env, &grid).unwrap();
        assert!(p.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_photon_second_order() {
        // with τ = 4 and t < 2 only the mirrored copy f(t+τ/2) = a reaches the
        // emitter: y' = -y + a, P' = -2P + 2a Re y  (φ = 0, Γ = 1)
        let td: f64 = 6.0;
        let a = 1.0 / td.sqrt();
        let exact = |t: f64| {
            // P = 2a² ∫ e^{-2(t-s)} (1 - e^{-s}) ds
            2.0 * a * a * (0.5 * (1.0 - (-2.0 * t).exp()) - ((-t).exp() - (-2.0 * t).exp()))
        };
        let env = Envelope::new(PulseSpec::rectangular(0.0, td).unwrap());
        let err = |dt: f64| {
            let grid = TimeGrid::build(dt, 1.5, 4.0).unwrap();
            let p = markov(&SystemParams::pulsed(1, 4.0, 0.0), &env, &grid).unwrap();
            (0..=grid.n_steps).map(|n| (p[n] - exact(grid.time(n))).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.02), err(0.01));
        assert!(e1 < 1e-4, "{e1}");
        assert!(e1 / e2 > 3.5, "{e1} {e2}");
    }
}
