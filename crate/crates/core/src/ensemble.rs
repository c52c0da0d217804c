//! Seeded Gaussian random fields with power-law spectra.
//!
//! Coefficients are drawn mode by mode over a fixed integer box
//! `|m_i| ≤ band`, in an order that does not depend on the grid resolution.
//! The same member therefore describes the same continuous function on every
//! grid that resolves the box, which is what refinement studies need.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::besov::TimeSeriesField;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{Field, TorusGrid, VectorField};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GaussianEnsemble {
    pub seed: u64,
    pub members: usize,
    /// Largest integer mode per axis.
    pub band: usize,
    /// Spectral weight exponent `a` in `(1 + |k|²)^{-a/2}`.
    pub decay: f64,
    /// Root-mean-square value every member is normalized to.
    pub rms: f64,
}

impl Default for GaussianEnsemble {
    fn default() -> Self {
        Self {
            seed: 1729,
            members: 20,
            band: 10,
            decay: 1.0 + 1.0 + 0.1,
            rms: 1.0,
        }
    }
}

impl GaussianEnsemble {
    /// Ensemble whose spectrum decays like `|k|^{-(s + d/2 + 0.1)}`.
    pub fn for_regularity(seed: u64, members: usize, band: usize, s: f64, dim: usize) -> Self {
        Self {
            seed,
            members,
            band,
            decay: s + dim as f64 / 2.0 + 0.1,
            rms: 1.0,
        }
    }

    fn stream(&self, index: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(
            self.seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(index as u64),
        )
    }

    /// Member `index` sampled on `grid`.
    pub fn field<T: Real>(&self, grid: &TorusGrid<T>, index: usize) -> Result<Field<T>> {
        let f = band_limited_field(grid, self.band, self.decay, &mut self.stream(index))?;
        let rms = (f.inner(&f) / grid.volume()).sqrt();
        if rms == T::zero() {
            return Ok(f);
        }
        Ok(f.scale(T::of(self.rms) / rms))
    }

    pub fn fields<T: Real>(&self, grid: &TorusGrid<T>) -> Result<Vec<Field<T>>> {
        (0..self.members).map(|i| self.field(grid, i)).collect()
    }

    /// Pairs `(f_i, g_i)` drawn from disjoint streams.
    pub fn pairs<T: Real>(&self, grid: &TorusGrid<T>) -> Result<Vec<(Field<T>, Field<T>)>> {
        (0..self.members)
            .map(|i| Ok((self.field(grid, 2 * i)?, self.field(grid, 2 * i + 1)?)))
            .collect()
    }

    /// A `d`-component vector member.
    pub fn vector<T: Real>(&self, grid: &TorusGrid<T>, index: usize) -> Result<VectorField<T>> {
        let d = grid.dim();
        VectorField::from_components(
            (0..d)
                .map(|c| self.field(grid, 1000 + index * d + c))
                .collect::<Result<_>>()?,
        )
    }

    /// Time series `u(t) = cos(πt) f_a + sin(πt) f_b` sampled at `times`.
    pub fn series<T: Real>(
        &self,
        grid: &TorusGrid<T>,
        index: usize,
        times: &[T],
    ) -> Result<TimeSeriesField<T>> {
        let a = self.field(grid, 5000 + 2 * index)?;
        let b = self.field(grid, 5001 + 2 * index)?;
        let snapshots = times
            .iter()
            .map(|&t| {
                let (s, c) = (T::PI() * t).sin_cos();
                a.scale(c).axpy(s, &b)
            })
            .collect();
        TimeSeriesField::new(times.to_vec(), snapshots)
    }

    /// Vector-valued analogue of [`Self::series`].
    pub fn vector_series<T: Real>(
        &self,
        grid: &TorusGrid<T>,
        index: usize,
        times: &[T],
    ) -> Result<Vec<TimeSeriesField<T>>> {
        (0..grid.dim())
            .map(|c| self.series(grid, 100 + index * grid.dim() + c, times))
            .collect()
    }
}

/// Random real field with modes `|m_i| ≤ band`, weights `(1+|k|²)^{-decay/2}`.
pub fn band_limited_field<T: Real>(
    grid: &TorusGrid<T>,
    band: usize,
    decay: f64,
    rng: &mut impl rand::Rng,
) -> Result<Field<T>> {
    let n = grid.side();
    if 2 * band >= n {
        return Err(Error::Contract(format!(
            "band {band} does not fit below the Nyquist mode of N = {n}"
        )));
    }
    let d = grid.dim();
    let unit = 2.0 * std::f64::consts::PI / grid.length().as_f64();
    let width = 2 * band + 1;
    let mut coeffs = vec![Complex::<T>::default(); grid.len()];
    let flat = |m: &[i64]| -> usize {
        m.iter().fold(0usize, |acc, &mi| {
            acc * n + mi.rem_euclid(n as i64) as usize
        })
    };
    for code in 0..width.pow(d as u32) {
        let mut m = [0i64; 3];
        let mut rem = code;
        for axis in (0..d).rev() {
            m[axis] = (rem % width) as i64 - band as i64;
            rem /= width;
        }
        let m = &m[..d];
        let leading = m.iter().find(|&&x| x != 0).copied().unwrap_or(0);
        if leading < 0 {
            continue;
        }
        let k2: f64 = m.iter().map(|&x| (unit * x as f64).powi(2)).sum();
        let w = (1.0 + k2).powf(-decay / 2.0);
        let a: f64 = StandardNormal.sample(rng);
        if leading == 0 {
            coeffs[flat(m)] = Complex::new(T::of(w * a), T::zero());
            continue;
        }
        let b: f64 = StandardNormal.sample(rng);
        let c = Complex::new(T::of(w * a / 2f64.sqrt()), T::of(w * b / 2f64.sqrt()));
        coeffs[flat(m)] = c;
        let neg: Vec<i64> = m.iter().map(|x| -x).collect();
        coeffs[flat(&neg)] = c.conj();
    }
    Ok(Field::from_spectrum(grid, coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn members_are_resolution_independent() {
        let e = GaussianEnsemble {
            band: 6,
            ..GaussianEnsemble::default()
        };
        let coarse = TorusGrid::<f64>::new(2, 16, 2.0 * PI).unwrap();
        let fine = TorusGrid::<f64>::new(2, 32, 2.0 * PI).unwrap();
        let a = e.field(&coarse, 3).unwrap();
        let b = e.field(&fine, 3).unwrap();
        // Coarse grid points are every other fine point.
        for i in 0..16 {
            for j in 0..16 {
                let x = a.samples()[i * 16 + j];
                let y = b.samples()[2 * i * 32 + 2 * j];
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn members_are_normalized_and_distinct() {
        let g = TorusGrid::<f64>::new(2, 32, 2.0 * PI).unwrap();
        let e = GaussianEnsemble::default();
        let fs = e.fields(&g).unwrap();
        assert_eq!(fs.len(), 20);
        for f in &fs {
            let rms = (f.inner(f) / g.volume()).sqrt();
            assert!((rms - 1.0).abs() < 1e-12);
        }
        assert!((&fs[0] - &fs[1]).l2_norm() > 1e-3);
    }

    #[test]
    fn band_must_fit() {
        let g = TorusGrid::<f64>::new(1, 16, 1.0).unwrap();
        let e = GaussianEnsemble {
            band: 8,
            ..GaussianEnsemble::default()
        };
        assert!(e.field(&g, 0).is_err());
    }

    #[test]
    fn same_seed_same_field() {
        let g = TorusGrid::<f64>::new(1, 32, 1.0).unwrap();
        let e = GaussianEnsemble::default();
        assert_eq!(
            e.field(&g, 2).unwrap().samples(),
            e.field(&g, 2).unwrap().samples()
        );
    }
}
