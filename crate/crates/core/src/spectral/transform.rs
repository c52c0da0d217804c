//! Multidimensional discrete Fourier transforms on cubic arrays.
//!
//! The grid talks to its transform only through [`Transform`], so a different
//! backend (a real-to-complex one, or one with SIMD plans) can be swapped in
//! without touching the spectral operators.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

/// Unnormalized forward and backward transforms of a `side^dim` row-major array.
///
/// Implementations must be callable concurrently from several threads.
pub trait Transform<T: Real>: Send + Sync {
    fn side(&self) -> usize;
    fn dim(&self) -> usize;
    /// `X_k = Σ_j x_j e^{-2πi j·k/side}`.
    fn forward(&self, data: &mut [Complex<T>]);
    /// `x_j = Σ_k X_k e^{+2πi j·k/side}` (no `1/side^dim` factor).
    fn backward(&self, data: &mut [Complex<T>]);
}

/// [`Transform`] backed by `rustfft`, applying 1-D plans axis by axis.
pub struct RustFftTransform<T: Real> {
    side: usize,
    dim: usize,
    forward: Arc<dyn Fft<T>>,
    backward: Arc<dyn Fft<T>>,
}

impl<T: Real> RustFftTransform<T> {
    pub fn new(side: usize, dim: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            side,
            dim,
            forward: planner.plan_fft_forward(side),
            backward: planner.plan_fft_inverse(side),
        }
    }

    fn apply(&self, plan: &dyn Fft<T>, data: &mut [Complex<T>]) {
        let n = self.side;
        assert_eq!(
            data.len(),
            n.pow(self.dim as u32),
            "array size does not match plan"
        );
        let mut scratch = vec![Complex::default(); plan.get_inplace_scratch_len()];
        // Last axis is contiguous.
        plan.process_with_scratch(data, &mut scratch);
        if self.dim == 1 {
            return;
        }
        let mut line = vec![Complex::default(); n];
        for axis in 0..self.dim - 1 {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = stride * n;
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (i, slot) in line.iter_mut().enumerate() {
                        *slot = data[start + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, value) in line.iter().enumerate() {
                        data[start + i * stride] = *value;
                    }
                }
            }
        }
    }
}

impl<T: Real> Transform<T> for RustFftTransform<T> {
    fn side(&self) -> usize {
        self.side
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn forward(&self, data: &mut [Complex<T>]) {
        self.apply(self.forward.as_ref(), data);
    }

    fn backward(&self, data: &mut [Complex<T>]) {
        self.apply(self.backward.as_ref(), data);
    }
}
