use num_complex::Complex64 as C64;

use super::SystemParams;
use crate::timegrid::TimeGrid;

/// Update of `Δ = ⟨E⟩ - |y|²` for a coherence `y` that decays at `Γ+γ` while
/// the population decays at `2Γ`: `Δ' = -2ΓΔ + 2γ|y|²`.
///
/// The part of `|y|²` that follows pure exponential decay over the step is
/// integrated exactly; the remainder uses the trapezoid rule.
pub(crate) fn delta_step(delta: f64, y0: f64, y1: f64, gamma: f64, gamma_pd: f64, h: f64) -> f64 {
    let e2 = (-2.0 * gamma * h).exp();
    let ed = (-2.0 * gamma_pd * h).exp();
    let exact = y0 * e2 * (1.0 - ed);
    let rest = gamma_pd * h * (y1 - e2 * ed * y0);
    e2 * delta + exact + rest
}

/// `|e,0⟩`: `c' = -(Γ+γ)c + Γe^{iφ}c(t-τ)`, with `c(0) = 1` and zero history.
pub(crate) fn run(params: &SystemParams, grid: &TimeGrid, dephasing_form: bool) -> Vec<f64> {
    let h = grid.dt;
    let k2 = 2 * grid.k_half_tau;
    let g = params.gamma;
    let e1 = (-(g + params.gamma_pd) * h).exp();
    let eip = if params.feedback { C64::from_polar(g, params.phi) } else { C64::new(0.0, 0.0) };
    let n_steps = grid.n_steps;
    let mut c = vec![C64::new(0.0, 0.0); n_steps + 1];
    c[0] = C64::new(1.0, 0.0);
    // left limit at t = 0 is zero: the initial value acts as a jump
    let right = |c: &[C64], m: Option<usize>| m.map_or(C64::new(0.0, 0.0), |m| c[m]);
    let left = |c: &[C64], m: Option<usize>| match m {
        Some(0) | None => C64::new(0.0, 0.0),
        Some(m) => c[m],
    };
    let mut pop = vec![0.0; n_steps + 1];
    pop[0] = 1.0;
    let mut delta = 0.0;
    for n in 0..n_steps {
        let d0 = eip * right(&c, n.checked_sub(k2));
        let d1 = eip * left(&c, (n + 1).checked_sub(k2));
        c[n + 1] = e1 * c[n] + 0.5 * h * (e1 * d0 + d1);
        if dephasing_form {
            delta = delta_step(delta, c[n].norm_sqr(), c[n + 1].norm_sqr(), g, params.gamma_pd, h);
            pop[n + 1] = c[n + 1].norm_sqr() + delta;
        } else {
            pop[n + 1] = c[n + 1].norm_sqr();
        }
    }
    pop
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_exact_for_pure_decay() {
        // y(t) = e^{-(Γ+γ)t}: Δ(t) = e^{-2Γt} - e^{-2(Γ+γ)t}
        let (g, gp, h) = (1.0, 0.7, 0.05);
        let mut d = 0.0;
        for n in 0..40 {
            let y0 = (-2.0 * (g + gp) * h * n as f64).exp();
            let y1 = (-2.0 * (g + gp) * h * (n + 1) as f64).exp();
            d = delta_step(d, y0, y1, g, gp, h);
        }
        let t = 40.0 * h;
        let expect = (-2.0 * g * t).exp() - (-2.0 * (g + gp) * t).exp();
        assert!((d - expect).abs() < 1e-14);
    }

    #[test]
    fn no_feedback_is_exact_exponential() {
        let grid = TimeGrid::build(0.01, 3.0, 0.0).unwrap();
        let p = SystemParams::excited(0.0, 0.0).without_feedback();
        let pop = run(&p, &grid, false);
        for (n, v) in pop.iter().enumerate() {
            assert!((v - (-2.0 * grid.time(n)).exp()).abs() < 1e-13);
        }
    }
}
