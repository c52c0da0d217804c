use std::f64::consts::PI;

use brlx::besov::critical_regularity;
use brlx::commutator::{
    six_term_residual, verify_critical_commutator, verify_critical_commutator_time,
    verify_general_commutator, verify_time_commutator, Clause, CommutatorExponents, Operator,
    SeriesPair, TimeSplit,
};
use brlx::ensemble::GaussianEnsemble;
use brlx::golden::golden;
use brlx::spectral::TorusGrid;
use proptest::prelude::*;

#[test]
fn fitted_constants_match_frozen_values() {
    let g = TorusGrid::new(2, 64, 2.0 * PI).unwrap();
    let ens = GaussianEnsemble::default();
    let members: Vec<_> = (0..ens.members)
        .map(|i| (ens.field(&g, i).unwrap(), ens.vector(&g, i).unwrap()))
        .collect();
    let times: Vec<f64> = (0..=10).map(|i| f64::from(i) / 10.0).collect();
    let series: Vec<_> = (0..5)
        .map(|i| {
            SeriesPair::new(
                ens.series(&g, i, &times).unwrap(),
                ens.vector_series(&g, i, &times).unwrap(),
            )
            .unwrap()
        })
        .collect();
    let ts = TimeSplit {
        theta: 1.0,
        theta1: 2.0,
        theta2: 2.0,
    };
    let ex = CommutatorExponents {
        s: critical_regularity(2),
        p: 2.0,
        p1: f64::INFINITY,
        p2: 2.0,
        r: 1.0,
    };
    let reports = [
        verify_general_commutator(&members, &ex, false).unwrap(),
        verify_critical_commutator(&members, Clause::DensityDivergence, false).unwrap(),
        verify_critical_commutator(&members, Clause::VelocityTransport, false).unwrap(),
        verify_critical_commutator_time(&series, &ts, Clause::DensityDivergence).unwrap(),
        verify_time_commutator(&series, 2.0, &ts, Operator::Div).unwrap(),
    ];
    let frozen = &golden().commutator_n64;
    for r in &reports {
        let want = frozen[&r.estimate.name];
        assert!(
            (r.constant() - want).abs() <= 1e-9 * want,
            "{}: {} vs {}",
            r.estimate.name,
            r.constant(),
            want
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn six_terms_sum_to_the_commutator(seed in any::<u64>(), q in -1i32..=4) {
        let g = TorusGrid::new(2, 32, 2.0 * PI).unwrap();
        let e = GaussianEnsemble { seed, band: 7, ..GaussianEnsemble::default() };
        let (f, v) = (e.field(&g, 0).unwrap(), e.vector(&g, 0).unwrap());
        prop_assert!(six_term_residual(&f, &v, q).unwrap() < 1e-10);
    }
}
