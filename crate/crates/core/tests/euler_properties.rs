use std::f64::consts::PI;

use brlx::euler::{
    desymmetrize_value, dispersion_roots, functional_run, symmetrize_value, EulerState,
    InitialData, RelaxConfig, Solver,
};
use brlx::spectral::TorusGrid;
use proptest::prelude::*;

#[test]
fn slow_root_approaches_the_diffusion_rate() {
    // λ_slow/τ → −ψ̄²|k|² as τ → 0.
    let (psi, k) = (1.2, 3.0);
    let mut last = f64::INFINITY;
    for j in 3..12 {
        let tau = 2f64.powi(-j);
        let slow = dispersion_roots(tau, psi, k)
            .iter()
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let gap = (slow / tau + psi * psi * k * k).abs();
        assert!(gap < last);
        last = gap;
    }
    assert!(last < 1e-2);
}

#[test]
fn equilibrium_stays_put() {
    let g = TorusGrid::<f64>::new(2, 16, 2.0 * PI).unwrap();
    let cfg = RelaxConfig::default();
    let mut solver = Solver::new(&cfg, &g).unwrap();
    let out = solver
        .advance(&EulerState::equilibrium(&g), 0.5, |_| Ok(()))
        .unwrap();
    assert_eq!(out.varrho.sup_norm(), 0.0);
    assert_eq!(out.v.sup_magnitude(), 0.0);
}

#[test]
fn single_precision_run_tracks_double() {
    let cfg = RelaxConfig {
        t_final: 0.2,
        ..RelaxConfig::default()
    };
    let g64 = TorusGrid::<f64>::new(2, 16, 2.0 * PI).unwrap();
    let g32 = TorusGrid::<f32>::new(2, 16, 2.0 * std::f32::consts::PI).unwrap();
    let data = InitialData::default();
    let a = Solver::new(&cfg, &g64)
        .unwrap()
        .advance(&data.state(&g64, &cfg).unwrap(), 0.2, |_| Ok(()))
        .unwrap();
    let b = Solver::new(&cfg, &g32)
        .unwrap()
        .advance(&data.state(&g32, &cfg).unwrap(), 0.2, |_| Ok(()))
        .unwrap();
    let gap = a
        .varrho
        .samples()
        .iter()
        .zip(b.varrho.samples())
        .map(|(x, y)| (x - f64::from(*y)).abs())
        .fold(0.0, f64::max);
    assert!(gap < 1e-5 * a.varrho.sup_norm().max(1e-3), "{gap}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn symmetrization_round_trips(rho in 0.05f64..20.0, gamma in 1.0f64..3.0, a in 0.1f64..5.0) {
        let cfg = RelaxConfig { gamma, pressure_constant: a, ..RelaxConfig::default() };
        let back = desymmetrize_value(symmetrize_value(rho, &cfg), &cfg);
        prop_assert!((back - rho).abs() <= 1e-11 * rho);
    }

    #[test]
    fn mass_is_conserved(seed in any::<u64>(), gamma in 1.0f64..2.5, tau in 0.05f64..1.0) {
        let g = TorusGrid::<f64>::new(2, 16, 2.0 * PI).unwrap();
        let cfg = RelaxConfig { gamma, tau, ..RelaxConfig::default() };
        let data = InitialData { seed, epsilon: 0.05, ..InitialData::default() };
        let s0 = data.state(&g, &cfg).unwrap();
        let m0 = s0.density(&cfg).unwrap().integral();
        let mut solver = Solver::new(&cfg, &g).unwrap();
        let out = solver.advance(&s0, 0.2, |_| Ok(())).unwrap();
        let m1 = out.density(&cfg).unwrap().integral();
        prop_assert!((m1 - m0).abs() <= 1e-11 * m0);
    }

    #[test]
    fn velocity_decays_without_pressure_gradients(seed in any::<u64>(), tau in 0.1f64..1.0) {
        // Uniform density and a spatially constant velocity: pure friction.
        let g = TorusGrid::<f64>::new(2, 16, 2.0 * PI).unwrap();
        let cfg = RelaxConfig { tau, ..RelaxConfig::default() };
        let c = (seed % 1000) as f64 / 1000.0 - 0.5;
        let v = brlx::VectorField64::from_components(vec![
            brlx::Field64::constant(&g, c),
            brlx::Field64::constant(&g, -c),
        ]).unwrap();
        let s0 = EulerState::new(brlx::Field64::zeros(&g), v).unwrap();
        let out = Solver::new(&cfg, &g).unwrap().advance(&s0, 0.4, |_| Ok(())).unwrap();
        let want = c * (-0.4 / tau).exp();
        prop_assert!((out.v.component(0).mean() - want).abs() < 1e-12);
    }
}

#[test]
fn functional_is_stable_under_step_halving() {
    let grid = TorusGrid::<f64>::new(2, 32, 2.0 * PI).unwrap();
    let data = InitialData::default();
    let run = |dt: f64| {
        let cfg = RelaxConfig {
            tau: 0.25,
            dt,
            t_final: 1.0,
            resolve_layer: true,
            ..RelaxConfig::default()
        };
        functional_run(&cfg, &grid, &data).unwrap()
    };
    let (coarse, fine) = (run(0.02), run(0.01));
    let change = (coarse.ratio - fine.ratio).abs() / fine.ratio;
    assert!(change < 1e-2, "relative change {change:.3e}");
}
