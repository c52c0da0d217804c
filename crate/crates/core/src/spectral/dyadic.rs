//! Nonhomogeneous dyadic blocks Δ_q, low-frequency cut-offs S_q and the
//! almost-orthogonality checks that go with them.

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::field::{padded_from_spectrum, Field, PaddedSum};
use crate::spectral::grid::TorusGrid;

/// Δ_q f: `q = -1` is the ball piece χ(D)f, `q ≥ 0` the shell piece φ(2^{-q}D)f.
pub fn dyadic_block<T: Real>(f: &Field<T>, q: i32) -> Result<Field<T>> {
    let m = f.grid().block_multiplier(q)?;
    Ok(f.multiply_spectrum(m))
}

/// Lattice multiplier of `S_q = Σ_{p ≤ q-1} Δ_p`, summed block by block.
///
/// Accepts any `q`; `q ≤ -1` gives the zero multiplier.
pub(crate) fn low_pass_multiplier<T: Real>(grid: &TorusGrid<T>, q: i32) -> Vec<T> {
    let top = (q - 1).min(grid.q_max());
    let mut acc = vec![T::zero(); grid.len()];
    for p in -1..=top {
        let m = grid.block_multiplier(p).expect("index within range");
        acc.iter_mut().zip(m).for_each(|(a, &b)| *a += b);
    }
    acc
}

/// S_q f = Σ_{p ≤ q-1} Δ_p f for `q ≥ 0`, as the literal block sum.
pub fn low_freq_cutoff<T: Real>(f: &Field<T>, q: i32) -> Result<Field<T>> {
    if q < 0 {
        return Err(Error::BlockIndex {
            q,
            min: 0,
            max: i32::MAX,
        });
    }
    Ok(f.multiply_spectrum(&low_pass_multiplier(f.grid(), q)))
}

impl<T: Real> Field<T> {
    /// Shorthand for [`dyadic_block`].
    pub fn block(&self, q: i32) -> Result<Field<T>> {
        dyadic_block(self, q)
    }

    /// Shorthand for [`low_freq_cutoff`].
    pub fn low_pass(&self, q: i32) -> Result<Field<T>> {
        low_freq_cutoff(self, q)
    }

    /// `‖Δ_q f‖_{L^p}` for every `q = -1..=q_max`.
    pub fn block_norms(&self, p: T) -> Vec<T> {
        (-1..=self.grid().q_max())
            .map(|q| dyadic_block(self, q).expect("in range").lp_norm(p))
            .collect()
    }
}

/// The family {Δ_q f}, q = -1..=q_max.
#[derive(Clone, Debug)]
pub struct DyadicDecomposition<T: Real> {
    blocks: Vec<(i32, Field<T>)>,
    q_max: i32,
}

impl<T: Real> DyadicDecomposition<T> {
    pub fn new(f: &Field<T>) -> Self {
        let q_max = f.grid().q_max();
        let blocks = (-1..=q_max)
            .map(|q| (q, dyadic_block(f, q).expect("in range")))
            .collect();
        Self { blocks, q_max }
    }

    pub fn q_max(&self) -> i32 {
        self.q_max
    }

    pub fn blocks(&self) -> &[(i32, Field<T>)] {
        &self.blocks
    }

    pub fn block(&self, q: i32) -> Option<&Field<T>> {
        self.blocks.get((q + 1) as usize).map(|(_, f)| f)
    }

    /// Σ_q Δ_q f.
    pub fn reconstruct(&self) -> Field<T> {
        let mut acc = Field::zeros(self.blocks[0].1.grid());
        for (_, b) in &self.blocks {
            acc += b;
        }
        acc
    }
}

/// Convenience wrapper for [`DyadicDecomposition::new`].
pub fn decompose<T: Real>(f: &Field<T>) -> DyadicDecomposition<T> {
    DyadicDecomposition::new(f)
}

/// Largest violations of the two almost-orthogonality identities.
#[derive(Clone, Debug)]
pub struct OrthogonalityReport<T> {
    /// max over |p-q| ≥ 2 of ‖Δ_p Δ_q f‖_{L²}.
    pub block_products: T,
    /// max over |p-q| ≥ 5 of ‖Δ_q(S_{p-1} f · Δ_p g)‖_{L²}.
    pub paraproduct_leak: T,
    /// Worst (p, q) for the second clause.
    pub worst_pair: (i32, i32),
}

/// Checks Δ_pΔ_q f ≡ 0 for |p-q| ≥ 2 and Δ_q(S_{p-1}f Δ_p g) ≡ 0 for |p-q| ≥ 5.
pub fn check_almost_orthogonality<T: Real>(
    f: &Field<T>,
    g: &Field<T>,
) -> Result<OrthogonalityReport<T>> {
    f.grid().ensure_same(g.grid())?;
    let grid = f.grid();
    let q_max = grid.q_max();
    let mut block_products = T::zero();
    for p in -1..=q_max {
        let fp = dyadic_block(f, p)?;
        for q in -1..=q_max {
            if (p - q).abs() >= 2 {
                block_products = block_products.max(dyadic_block(&fp, q)?.l2_norm());
            }
        }
    }
    let mut paraproduct_leak = T::zero();
    let mut worst_pair = (0, 0);
    for p in 0..=q_max {
        let low = padded_from_spectrum(grid, f.spectrum(), Some(&low_pass_multiplier(grid, p - 1)));
        let high = padded_from_spectrum(grid, g.spectrum(), Some(grid.block_multiplier(p)?));
        let mut acc = PaddedSum::new(grid);
        acc.add_product(&low, &high, T::one());
        let prod = acc.finish();
        for q in -1..=q_max {
            if (p - q).abs() >= 5 {
                let leak = dyadic_block(&prod, q)?.l2_norm();
                if leak > paraproduct_leak {
                    paraproduct_leak = leak;
                    worst_pair = (p, q);
                }
            }
        }
    }
    Ok(OrthogonalityReport {
        block_products,
        paraproduct_leak,
        worst_pair,
    })
}

/// Maximum of |χ + Σ_q φ(2^{-q}·) − 1| over all lattice radii of `grid`.
pub fn partition_residual<T: Real>(grid: &TorusGrid<T>) -> T {
    let mut sum = vec![T::zero(); grid.len()];
    for q in -1..=grid.q_max() {
        let m = grid.block_multiplier(q).expect("in range");
        sum.iter_mut().zip(m).for_each(|(a, &b)| *a += b);
    }
    sum.iter()
        .fold(T::zero(), |w, &s| w.max((s - T::one()).abs()))
}

/// Exact zero test on a spectrum restricted to a multiplier's zero set.
pub fn spectrum_outside_support<T: Real>(f: &Field<T>, multiplier: &[T]) -> T {
    f.spectrum()
        .iter()
        .zip(multiplier)
        .filter(|(_, &m)| m == T::zero())
        .map(|(c, _): (&Complex<T>, _)| c.norm())
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid2() -> TorusGrid<f64> {
        TorusGrid::new(2, 32, 2.0 * PI).unwrap()
    }

    #[test]
    fn single_mode_blocks() {
        let g = grid2();
        let f = Field::from_fn(&g, |x| (2.0 * x[0]).cos());
        let c = g.cutoffs();
        assert!(dyadic_block(&f, -1).unwrap().sup_norm() < 1e-15);
        for q in 0..=g.q_max() {
            let b = dyadic_block(&f, q).unwrap();
            let expect = f.scale(c.phi(2f64.powi(1 - q)));
            assert!((&b - &expect).sup_norm() < 1e-14);
            if q >= 2 {
                assert!(b.sup_norm() < 1e-14);
            }
        }
    }

    #[test]
    fn constant_lives_in_low_block() {
        let g = grid2();
        let f = Field::constant(&g, 2.5);
        assert!((&dyadic_block(&f, -1).unwrap() - &f).sup_norm() < 1e-14);
        for q in 0..=g.q_max() {
            assert_eq!(dyadic_block(&f, q).unwrap().sup_norm(), 0.0);
        }
    }

    #[test]
    fn s0_equals_low_block_bitwise() {
        let g = grid2();
        let f = Field::from_fn(&g, |x| (x[0] + 2.0 * x[1]).sin() + 0.3 * (5.0 * x[0]).cos());
        let s0 = low_freq_cutoff(&f, 0).unwrap();
        let d = dyadic_block(&f, -1).unwrap();
        assert_eq!(s0.samples(), d.samples());
    }

    #[test]
    fn s3_of_low_mode_is_identity() {
        let g = grid2();
        let f = Field::from_fn(&g, |x| (2.0 * x[1]).cos());
        let s3 = low_freq_cutoff(&f, 3).unwrap();
        assert!((&s3 - &f).sup_norm() < 1e-14);
        assert!(low_freq_cutoff(&f, -1).is_err());
    }

    #[test]
    fn out_of_range_block() {
        let g = grid2();
        let f = Field::zeros(&g);
        assert!(matches!(
            dyadic_block(&f, -2),
            Err(Error::BlockIndex { .. })
        ));
        assert!(dyadic_block(&f, g.q_max() + 1).is_err());
    }

    #[test]
    fn blocks_vanish_outside_their_annulus() {
        let g = grid2();
        let f = Field::from_fn(&g, |x| (x[0] * 3.0).sin() * (x[1] * 7.0).cos() + x[0].cos());
        for q in -1..=g.q_max() {
            let m = g.block_multiplier(q).unwrap();
            assert_eq!(
                spectrum_outside_support(&dyadic_block(&f, q).unwrap(), m),
                0.0
            );
        }
    }

    #[test]
    fn zero_field_orthogonality() {
        let g = grid2();
        let z = Field::zeros(&g);
        let r = check_almost_orthogonality(&z, &z).unwrap();
        assert_eq!(r.block_products, 0.0);
        assert_eq!(r.paraproduct_leak, 0.0);
    }

    #[test]
    fn partition_is_exact_on_lattice() {
        for (d, n) in [(1, 64), (2, 32), (3, 16)] {
            let g = TorusGrid::<f64>::new(d, n, 2.0 * PI).unwrap();
            assert!(partition_residual(&g) < 1e-12);
        }
    }
}
