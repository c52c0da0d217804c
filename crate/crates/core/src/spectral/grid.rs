use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::cutoff::{CutoffPair, SHELL_INNER};
use crate::spectral::transform::{RustFftTransform, Transform};

/// Periodic box `[0, L)^d` sampled with `N` points per side.
///
/// Lattice frequencies are `k = (2π/L)·m` with integer `m`, `-N/2 ≤ m_i < N/2`.
/// The handle is cheap to clone; plans, wavenumbers and block multipliers are
/// computed once and shared.
#[derive(Clone)]
pub struct TorusGrid<T: Real> {
    inner: Arc<GridInner<T>>,
}

struct GridInner<T: Real> {
    dim: usize,
    side: usize,
    length: T,
    cutoffs: CutoffPair<T>,
    transform: Arc<dyn Transform<T>>,
    padded: Arc<dyn Transform<T>>,
    /// Integer mode of every flat index, per axis.
    modes: Vec<[i64; 3]>,
    /// Physical wavenumber per axis, zero on the Nyquist plane of that axis.
    wavenumbers: Vec<Vec<T>>,
    /// `|k|` at every flat index (Nyquist modes included).
    radius: Vec<T>,
    /// Position in the 3/2-padded array, `None` when any component is Nyquist.
    pad_index: Vec<Option<usize>>,
    q_max: i32,
    blocks: OnceLock<Vec<Arc<[T]>>>,
}

impl<T: Real> TorusGrid<T> {
    /// Grid with the default cutoff pair (sharpness 1).
    pub fn new(dim: usize, side: usize, length: T) -> Result<Self> {
        Self::with_cutoffs(dim, side, length, CutoffPair::default())
    }

    pub fn with_cutoffs(
        dim: usize,
        side: usize,
        length: T,
        cutoffs: CutoffPair<T>,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if side < 16 || !side.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "samples per side {side} must be a power of two >= 16"
            )));
        }
        if !(length > T::zero() && length.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "side length {length} must be > 0"
            )));
        }
        let total = side.pow(dim as u32);
        let half = (side / 2) as i64;
        let pad_side = side * 3 / 2;
        let unit = T::of(2.0) * T::PI() / length;

        let mut modes = Vec::with_capacity(total);
        let mut pad_index = Vec::with_capacity(total);
        for flat in 0..total {
            let mut m = [0i64; 3];
            let mut rem = flat;
            let mut padded = 0usize;
            let mut nyquist = false;
            for axis in (0..dim).rev() {
                let j = (rem % side) as i64;
                rem /= side;
                let mode = if j >= half { j - side as i64 } else { j };
                m[axis] = mode;
                nyquist |= mode == -half;
            }
            for &mode in m.iter().take(dim) {
                let pj = if mode < 0 {
                    mode + pad_side as i64
                } else {
                    mode
                };
                padded = padded * pad_side + pj as usize;
            }
            modes.push(m);
            pad_index.push(if nyquist { None } else { Some(padded) });
        }
        let wavenumbers = (0..dim)
            .map(|axis| {
                modes
                    .iter()
                    .map(|m| {
                        if m[axis] == -half {
                            T::zero()
                        } else {
                            unit * T::from_i64(m[axis]).unwrap()
                        }
                    })
                    .collect()
            })
            .collect();
        let radius: Vec<T> = modes
            .iter()
            .map(|m| {
                let s: i64 = m.iter().take(dim).map(|x| x * x).sum();
                unit * T::from_i64(s).unwrap().sqrt()
            })
            .collect();
        let k_max = radius.iter().copied().fold(T::zero(), T::max);
        // Largest q whose shell (3/4·2^q, 8/3·2^q) still meets the lattice;
        // with it the blocks q ≤ q_max cover every lattice frequency.
        let mut q_max = 0;
        while T::of(SHELL_INNER) * T::exp2i(q_max + 1) < k_max {
            q_max += 1;
        }

        Ok(Self {
            inner: Arc::new(GridInner {
                dim,
                side,
                length,
                cutoffs,
                transform: Arc::new(RustFftTransform::new(side, dim)),
                padded: Arc::new(RustFftTransform::new(pad_side, dim)),
                modes,
                wavenumbers,
                radius,
                pad_index,
                q_max,
                blocks: OnceLock::new(),
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Samples per side `N`.
    pub fn side(&self) -> usize {
        self.inner.side
    }

    /// Side length `L`.
    pub fn length(&self) -> T {
        self.inner.length
    }

    /// Total number of samples `N^d`.
    pub fn len(&self) -> usize {
        self.inner.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> T {
        self.inner.length / T::of_usize(self.inner.side)
    }

    /// Volume of one sampling cell, the rectangle-rule weight.
    pub fn cell_volume(&self) -> T {
        self.spacing().powi(self.inner.dim as i32)
    }

    pub fn volume(&self) -> T {
        self.inner.length.powi(self.inner.dim as i32)
    }

    /// Nyquist frequency `πN/L`.
    pub fn nyquist(&self) -> T {
        T::PI() * T::of_usize(self.inner.side) / self.inner.length
    }

    pub fn cutoffs(&self) -> &CutoffPair<T> {
        &self.inner.cutoffs
    }

    pub fn transform(&self) -> &dyn Transform<T> {
        self.inner.transform.as_ref()
    }

    pub(crate) fn padded_transform(&self) -> &dyn Transform<T> {
        self.inner.padded.as_ref()
    }

    pub(crate) fn padded_len(&self) -> usize {
        (self.inner.side * 3 / 2).pow(self.inner.dim as u32)
    }

    pub(crate) fn pad_index(&self) -> &[Option<usize>] {
        &self.inner.pad_index
    }

    /// Integer modes `m` of every flat spectral index.
    pub fn modes(&self) -> &[[i64; 3]] {
        &self.inner.modes
    }

    /// Physical wavenumbers along `axis` (Nyquist plane set to zero).
    pub fn wavenumbers(&self, axis: usize) -> &[T] {
        &self.inner.wavenumbers[axis]
    }

    /// `|k|` at every flat spectral index.
    pub fn radius(&self) -> &[T] {
        &self.inner.radius
    }

    pub fn is_nyquist(&self, flat: usize) -> bool {
        self.inner.pad_index[flat].is_none()
    }

    /// Largest block index with nonempty lattice support.
    pub fn q_max(&self) -> i32 {
        self.inner.q_max
    }

    /// Physical coordinates of sample `flat`.
    pub fn point(&self, flat: usize) -> [T; 3] {
        let h = self.spacing();
        let mut x = [T::zero(); 3];
        let mut rem = flat;
        for axis in (0..self.inner.dim).rev() {
            x[axis] = h * T::of_usize(rem % self.inner.side);
            rem /= self.inner.side;
        }
        x
    }

    /// Lattice multiplier of block `q` (χ(|k|) for `q = -1`, φ(2^{-q}|k|) otherwise).
    pub fn block_multiplier(&self, q: i32) -> Result<&[T]> {
        if q < -1 || q > self.q_max() {
            return Err(Error::BlockIndex {
                q,
                min: -1,
                max: self.q_max(),
            });
        }
        let blocks = self.inner.blocks.get_or_init(|| {
            (-1..=self.q_max())
                .map(|q| {
                    self.inner
                        .radius
                        .iter()
                        .map(|&r| self.inner.cutoffs.block_profile(q, r))
                        .collect::<Vec<T>>()
                        .into()
                })
                .collect()
        });
        Ok(&blocks[(q + 1) as usize])
    }

    /// Whether two handles describe the same discretization.
    pub fn same_as(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.side == other.inner.side
                && self.inner.length == other.inner.length
                && self.inner.cutoffs.sharpness() == other.inner.cutoffs.sharpness())
    }

    pub(crate) fn ensure_same(&self, other: &Self) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

impl<T: Real> fmt::Debug for TorusGrid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TorusGrid(d={}, N={}, L={})",
            self.inner.dim, self.inner.side, self.inner.length
        )
    }
}

impl<T: Real> PartialEq for TorusGrid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(TorusGrid::<f64>::new(4, 16, 1.0).is_err());
        assert!(TorusGrid::<f64>::new(2, 24, 1.0).is_err());
        assert!(TorusGrid::<f64>::new(2, 8, 1.0).is_err());
        assert!(TorusGrid::<f64>::new(2, 16, -1.0).is_err());
        assert!(TorusGrid::<f64>::new(2, 16, f64::NAN).is_err());
    }

    #[test]
    fn q_max_covers_the_lattice() {
        for (d, n) in [(1, 16), (2, 64), (2, 128), (3, 16)] {
            let g = TorusGrid::<f64>::new(d, n, 2.0 * std::f64::consts::PI).unwrap();
            let k_max = g.radius().iter().copied().fold(0.0, f64::max);
            let q = g.q_max();
            assert!(0.75 * 2f64.powi(q) < k_max);
            assert!(0.75 * 2f64.powi(q + 1) >= k_max);
        }
        let g = TorusGrid::<f64>::new(2, 64, 2.0 * std::f64::consts::PI).unwrap();
        assert_eq!(g.q_max(), 5);
    }

    #[test]
    fn block_index_out_of_range() {
        let g = TorusGrid::<f64>::new(1, 16, 1.0).unwrap();
        assert!(g.block_multiplier(-2).is_err());
        assert!(g.block_multiplier(g.q_max() + 1).is_err());
        assert!(g.block_multiplier(g.q_max()).is_ok());
    }

    #[test]
    fn modes_and_padding_are_consistent() {
        let g = TorusGrid::<f64>::new(2, 16, 1.0).unwrap();
        assert_eq!(g.modes()[1], [0, 1, 0]);
        assert_eq!(g.modes()[15], [0, -1, 0]);
        assert!(g.is_nyquist(8));
        assert_eq!(g.pad_index()[15], Some(23));
        assert_eq!(g.pad_index()[16], Some(24));
        assert_eq!(g.padded_len(), 24 * 24);
    }
}
