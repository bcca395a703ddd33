use wqed_core::experiments::{self, detect_steady_state, Onset, PulseFamily, SweepSpec, DEFAULT_REL_TOL};
use wqed_core::hierarchy::{Options, SystemParams};
use wqed_core::oracle;
use wqed_core::timegrid::TimeGrid;

#[test]
fn bound_state_plateau_is_stable_under_longer_horizon() {
    let mut sc = experiments::preset("bound-state-rectangular").unwrap();
    assert!(sc.horizon >= 30.0);
    let a = sc.run(&Options::default()).unwrap();
    sc.horizon *= 2.0;
    let b = sc.run(&Options::default()).unwrap();
    let (sa, sb) = (a.steady_state.unwrap(), b.steady_state.unwrap());
    assert!(sa > 0.05);
    assert!((sa - sb).abs() <= DEFAULT_REL_TOL * sa, "{sa} vs {sb}");
}

#[test]
fn free_decay_scenario_matches_closed_form() {
    let p = SystemParams::excited(0.0, 0.0).without_feedback();
    let grid = TimeGrid::build(1e-3, 10.0, 0.0).unwrap();
    let t = experiments::run_scenario(&p, None, &grid, &Options::default()).unwrap();
    let sup = t.times.iter().zip(&t.population).map(|(s, x)| (x - oracle::ww_decay(1.0, *s)).abs()).fold(0.0, f64::max);
    assert!(sup < 1e-4);
    let tail = detect_steady_state(&t.times, &t.population, 5.0, DEFAULT_REL_TOL);
    assert!(tail.is_none_or(|s| s < 1e-3));
}

#[test]
fn single_photon_leaves_nothing_behind() {
    let tau = 2.0;
    let start = Onset::Arrival.start(tau);
    let p = SystemParams::pulsed(1, tau, 0.0);
    for family in [PulseFamily::Rectangular, PulseFamily::Gaussian, PulseFamily::Exponential] {
        let pulse = family.pulse(1.0, 1.0, start).unwrap();
        let grid = TimeGrid::build(0.02, 30.0, tau).unwrap();
        let t = experiments::run_scenario(&p, Some(&pulse), &grid, &Options::default()).unwrap();
        let s = t.steady_state.unwrap_or(*t.population.last().unwrap());
        assert!(s.abs() < 1e-3, "{}: {s}", family.as_str());
    }
}

#[test]
fn vacuum_steady_state_falls_with_delay() {
    let mut prev = f64::INFINITY;
    for tau in [0.5, 1.0, 2.0, 3.0] {
        let grid = TimeGrid::build(0.01, 150.0, tau).unwrap();
        let t = experiments::run_scenario(&SystemParams::excited(tau, 0.0), None, &grid, &Options::default()).unwrap();
        let s = t.steady_state.expect("converged");
        let limit = (1.0 + tau).powi(-2);
        assert!((s - limit).abs() < 1e-3, "τ = {tau}: {s} vs {limit}");
        assert!(s < prev);
        prev = s;
    }
}

#[test]
fn small_sweep_has_the_requested_shape() {
    let widths = vec![0.5, 1.0, 2.0];
    let taus = experiments::log_axis(0.1, 2.0, 4);
    let spec = SweepSpec::new(PulseFamily::Rectangular, widths.clone(), taus.clone(), SystemParams::pulsed(2, 1.0, 0.0));
    let r = experiments::sweep_steady_state(&spec, &Options::default()).unwrap();
    assert_eq!(r.cells.len(), widths.len() * taus.len());
    for (iw, w) in widths.iter().enumerate() {
        for (it, tau) in taus.iter().enumerate() {
            let c = r.cell(iw, it);
            assert_eq!((c.width, c.tau), (*w, *tau));
            assert!((-1e-6..=1.0 + 1e-6).contains(&c.steady_state));
        }
    }
    let again = experiments::sweep_steady_state(&spec, &Options::default()).unwrap();
    assert_eq!(r.cells, again.cells);
}

#[test]
fn sweep_rejects_single_photons() {
    let spec = SweepSpec::new(PulseFamily::Gaussian, vec![1.0], vec![1.0], SystemParams::pulsed(1, 1.0, 0.0));
    assert!(experiments::sweep_steady_state(&spec, &Options::default()).is_err());
}

#[test]
fn scenarios_are_deterministic() {
    for name in ["benchmark-n2", "dephasing-two-photon"] {
        let sc = experiments::preset(name).unwrap();
        let a = sc.run(&Options::default()).unwrap();
        let b = sc.run(&Options::default()).unwrap();
        assert_eq!(a.population, b.population, "{name}");
        assert_eq!(a.steady_state, b.steady_state);
    }
}
