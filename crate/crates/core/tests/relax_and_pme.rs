use std::f64::consts::PI;

use brlx::euler::{InitialData, RelaxConfig};
use brlx::pme::{default_ds, PmeSolver, PmeState};
use brlx::relax::{sweep, SweepConfig};
use brlx::spectral::{Field, TorusGrid};
use proptest::prelude::*;

fn coarse(taus: Vec<f64>, epsilon: f64) -> SweepConfig {
    SweepConfig {
        taus,
        grid_n: 16,
        data: InitialData {
            epsilon,
            ..InitialData::default()
        },
        ..SweepConfig::default()
    }
}

#[test]
fn error_decreases_between_two_relaxation_times() {
    let r = sweep(&coarse(vec![0.125, 0.0625], 1e-2)).unwrap();
    assert!(r.strictly_decreasing(), "{:?}", r.sup_errors());
}

#[test]
fn linear_regime_rate_is_near_one() {
    let r = sweep(&coarse(vec![0.0625, 0.03125, 0.015625], 1e-4)).unwrap();
    assert!((0.7..=1.3).contains(&r.fitted_order), "{}", r.fitted_order);
}

#[test]
fn equilibrium_sweep_has_no_error() {
    let r = sweep(&coarse(vec![0.5, 0.25], 0.0)).unwrap();
    assert!(r.sup_errors().iter().all(|&e| e == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn porous_medium_conserves_mass_and_contracts(seed in any::<u64>(), gamma in 1.0f64..3.0) {
        let g = TorusGrid::<f64>::new(2, 16, 2.0 * PI).unwrap();
        let cfg = RelaxConfig { gamma, ..RelaxConfig::default() };
        let e = brlx::ensemble::GaussianEnsemble { seed, band: 4, rms: 0.1, ..Default::default() };
        let n0 = e.field(&g, 0).unwrap().map(|x| 1.0 + x);
        let m0 = n0.integral();
        let dev0 = (&n0 - &Field::constant(&g, n0.mean())).l2_norm();
        let mut solver = PmeSolver::new(&cfg, &g).unwrap();
        let out = solver.advance(&PmeState::new(n0).unwrap(), 0.3, default_ds(&cfg, &g), |_| {}).unwrap();
        prop_assert!((out.n.integral() - m0).abs() <= 1e-12 * m0);
        let dev1 = (&out.n - &Field::constant(&g, out.n.mean())).l2_norm();
        prop_assert!(dev1 < dev0);
    }
}
