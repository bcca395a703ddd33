use proptest::prelude::*;
use wqed_core::experiments;
use wqed_core::hierarchy::{simulate, Options, SystemParams};
use wqed_core::pulse::{Envelope, PulseSpec, Tabulated};
use wqed_core::timegrid::TimeGrid;
use wqed_core::C64;

/// Composite Simpson rule for `|f|²` on `[a, b]` with `n` (even) panels.
fn simpson_norm(p: &PulseSpec, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let g = |t: f64| p.evaluate(t).norm_sqr();
    let mut s = g(a) + g(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(a + i as f64 * h);
    }
    s * h / 3.0
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + b.norm())
}

proptest! {
    #[test]
    fn gaussian_is_normalized(mu in -2.0f64..6.0, sigma in 0.1f64..3.0) {
        let p = PulseSpec::gaussian(mu, sigma).unwrap();
        let n = simpson_norm(&p, mu - 12.0 * sigma, mu + 12.0 * sigma, 4000);
        prop_assert!((n - 1.0).abs() < 1e-6, "{n}");
    }

    #[test]
    fn exponential_is_normalized(t0 in 0.0f64..3.0, g in 0.2f64..5.0) {
        let p = PulseSpec::exponential(t0, g).unwrap();
        let n = simpson_norm(&p, t0, t0 + 40.0 / g, 20000);
        prop_assert!((n - 1.0).abs() < 1e-6, "{n}");
    }

    #[test]
    fn rectangular_is_normalized(t0 in 0.0f64..3.0, td in 0.05f64..6.0) {
        let p = PulseSpec::rectangular(t0, td).unwrap();
        // Simpson on the support itself, where the integrand is constant
        let n = simpson_norm(&p, t0 + 1e-12, t0 + td - 1e-12, 2);
        prop_assert!((n - 1.0).abs() < 1e-6, "{n}");
    }

    #[test]
    fn ftau_is_linear(
        re in -2.0f64..2.0, im in -2.0f64..2.0,
        t in -1.0f64..5.0, tau in 0.0f64..3.0, phi in -7.0f64..7.0,
        samples in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3..12),
    ) {
        let pts: Vec<(f64, C64)> = samples.iter().enumerate().map(|(i, (a, b))| (0.3 * i as f64, C64::new(*a, *b))).collect();
        let Ok(tab) = Tabulated::raw(pts) else { return Ok(()) };
        let c = C64::new(re, im);
        let base = PulseSpec::Tabulated(tab.clone()).evaluate_ftau(t, tau, phi);
        let scaled = PulseSpec::Tabulated(tab.scaled(c)).evaluate_ftau(t, tau, phi);
        prop_assert!(close(scaled, c * base, 1e-12));
    }

    #[test]
    fn ftau_conjugates_under_phase_reversal(t in -1.0f64..8.0, tau in 0.0f64..4.0, phi in -7.0f64..7.0, which in 0usize..3) {
        let p = match which {
            0 => PulseSpec::rectangular(0.0, 2.0).unwrap(),
            1 => PulseSpec::gaussian(3.0, 0.7).unwrap(),
            _ => PulseSpec::exponential(0.5, 1.3).unwrap(),
        };
        let a = p.evaluate_ftau(t, tau, phi);
        let b = p.evaluate_ftau(t, tau, -phi);
        prop_assert!(close(b, a.conj(), 1e-14));
    }

    #[test]
    fn grid_invariants(dt in 0.001f64..0.2, horizon in 0.5f64..20.0, tau in 0.0f64..6.0) {
        match TimeGrid::build(dt, horizon, tau) {
            Ok(g) => {
                prop_assert!((2.0 * g.k_half_tau as f64 * g.dt - tau).abs() <= 1e-12 * tau.max(1.0));
                prop_assert_eq!(g.n_aux(), g.n_steps + 2 * g.k_half_tau + 1);
                prop_assert!(g.horizon() >= horizon - 1e-9 && g.horizon() < horizon + g.dt + 1e-9);
                let total: f64 = g.quad_weights().iter().sum();
                prop_assert!((total - (g.aux_max() - g.aux_min())).abs() < 1e-9);
                for n in [0, g.n_steps / 2, g.n_steps] {
                    match g.delayed(n) {
                        Some(k) => prop_assert_eq!(k + 2 * g.k_half_tau, n),
                        None => prop_assert!(n < 2 * g.k_half_tau),
                    }
                }
            }
            Err(_) => prop_assert!(tau > 0.0 && 0.5 * tau < dt),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn population_stays_bounded(
        n in 1usize..=2, tau in 0.4f64..3.0, td in 0.3f64..3.0,
        phi in 0.0f64..6.3, gamma_pd in prop::sample::select(vec![0.0, 0.3]),
    ) {
        let params = SystemParams::pulsed(n, tau, phi).with_dephasing(gamma_pd);
        let grid = TimeGrid::build(0.05, 8.0, tau).unwrap();
        let env = Envelope::new(PulseSpec::rectangular(0.0, td).unwrap());
        let sol = simulate(&params, &env, &grid, &Options::default()).unwrap();
        let eps = 10.0 * grid.dt * grid.dt;
        for p in &sol.population {
            prop_assert!(*p >= -eps && *p <= 1.0 + eps, "{p}");
        }
    }

    #[test]
    fn feedback_is_invisible_before_one_round_trip(
        n in 1usize..=2, tau in 0.5f64..3.0, td in 0.3f64..3.0, phi in 0.0f64..6.3,
    ) {
        let grid = TimeGrid::build(0.05, tau + 1.0, tau).unwrap();
        let env = Envelope::new(PulseSpec::rectangular(0.0, td).unwrap());
        let with = simulate(&SystemParams::pulsed(n, tau, phi), &env, &grid, &Options::default()).unwrap();
        let without = simulate(&SystemParams::pulsed(n, tau, phi).without_feedback(), &env, &grid, &Options::default()).unwrap();
        let eps = 10.0 * grid.dt * grid.dt;
        for (i, t) in grid.times().iter().enumerate().filter(|(_, t)| **t < tau) {
            prop_assert!((with.population[i] - without.population[i]).abs() <= eps, "t = {t}");
        }
    }
}

#[test]
fn independent_of_worker_count() {
    let params = SystemParams::pulsed(2, 2.0, 0.0);
    let pulse = PulseSpec::rectangular(0.0, 2.0).unwrap();
    let grid = TimeGrid::build(0.02, 8.0, 2.0).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| experiments::run_scenario(&params, Some(&pulse), &grid, &Options::default()).unwrap())
    };
    let a = run(1);
    let b = run(4);
    let c = run(1);
    assert_eq!(a.population, b.population);
    assert_eq!(a.population, c.population);
}

#[test]
fn three_photon_run_is_deterministic() {
    let params = SystemParams::pulsed(3, 1.0, 0.0);
    let env = Envelope::new(PulseSpec::rectangular(0.0, 1.0).unwrap());
    let grid = TimeGrid::build(0.05, 3.0, 1.0).unwrap();
    let a = simulate(&params, &env, &grid, &Options::default()).unwrap();
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap()
        .install(|| simulate(&params, &env, &grid, &Options::default()).unwrap());
    assert_eq!(a.population, b.population);
}
