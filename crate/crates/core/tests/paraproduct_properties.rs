use std::f64::consts::PI;

use brlx::ensemble::GaussianEnsemble;
use brlx::paraproduct::{bony_decompose, bony_reconstruction_error, paraproduct};
use brlx::spectral::TorusGrid;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bony_sum_is_the_product(seed in any::<u64>(), dim in 1usize..=3) {
        let n = if dim == 3 { 16 } else { 32 };
        let g = TorusGrid::new(dim, n, 2.0 * PI).unwrap();
        let e = GaussianEnsemble { seed, band: 5, ..GaussianEnsemble::default() };
        let (f, h) = (e.field(&g, 0).unwrap(), e.field(&g, 1).unwrap());
        prop_assert!(bony_reconstruction_error(&f, &h).unwrap() < 1e-10);
        let split = bony_decompose(&f, &h).unwrap();
        let swapped = bony_decompose(&h, &f).unwrap();
        prop_assert!((&split.remainder - &swapped.remainder).l2_norm() < 1e-12 * split.remainder.l2_norm().max(1.0));
    }

    #[test]
    fn paraproduct_is_bilinear(seed in any::<u64>(), a in -2.0f64..2.0) {
        let g = TorusGrid::new(2, 32, 2.0 * PI).unwrap();
        let e = GaussianEnsemble { seed, band: 8, ..GaussianEnsemble::default() };
        let (f, h, k) = (e.field(&g, 0).unwrap(), e.field(&g, 1).unwrap(), e.field(&g, 2).unwrap());
        let lhs = paraproduct(&f, &h.axpy(a, &k)).unwrap();
        let rhs = paraproduct(&f, &h).unwrap().axpy(a, &paraproduct(&f, &k).unwrap());
        prop_assert!((&lhs - &rhs).l2_norm() < 1e-11 * lhs.l2_norm().max(1.0));
    }
}
