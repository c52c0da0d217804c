use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::grid::TorusGrid;

/// Real scalar function sampled on a [`TorusGrid`].
///
/// The spectrum is stored as normalized Fourier coefficients,
/// `f(x) = Σ_m c_m e^{i k_m·x}`, and computed lazily on first use.
#[derive(Clone)]
pub struct Field<T: Real> {
    grid: TorusGrid<T>,
    samples: Vec<T>,
    spectrum: OnceLock<Arc<[Complex<T>]>>,
}

impl<T: Real> Field<T> {
    /// Wraps samples in row-major order. Fails on length mismatch or non-finite data.
    pub fn new(grid: &TorusGrid<T>, samples: Vec<T>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {}",
                samples.len(),
                grid.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sample {i}")));
        }
        Ok(Self::from_parts(grid, samples))
    }

    fn from_parts(grid: &TorusGrid<T>, samples: Vec<T>) -> Self {
        Self {
            grid: grid.clone(),
            samples,
            spectrum: OnceLock::new(),
        }
    }

    pub fn zeros(grid: &TorusGrid<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: &TorusGrid<T>, value: T) -> Self {
        Self::from_parts(grid, vec![value; grid.len()])
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: &TorusGrid<T>, f: impl Fn([T; 3]) -> T) -> Self {
        let samples = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self::from_parts(grid, samples)
    }

    /// Builds a field from normalized Fourier coefficients (assumed Hermitian).
    pub fn from_spectrum(grid: &TorusGrid<T>, coeffs: Vec<Complex<T>>) -> Self {
        assert_eq!(coeffs.len(), grid.len(), "spectrum length mismatch");
        let mut buf = coeffs.clone();
        grid.transform().backward(&mut buf);
        let samples = buf.iter().map(|c| c.re).collect();
        let field = Self::from_parts(grid, samples);
        let _ = field.spectrum.set(coeffs.into());
        field
    }

    pub fn grid(&self) -> &TorusGrid<T> {
        &self.grid
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn has_cached_spectrum(&self) -> bool {
        self.spectrum.get().is_some()
    }

    /// Normalized Fourier coefficients.
    pub fn spectrum(&self) -> &[Complex<T>] {
        self.spectrum.get_or_init(|| {
            let mut buf: Vec<Complex<T>> = self
                .samples
                .iter()
                .map(|&v| Complex::new(v, T::zero()))
                .collect();
            self.grid.transform().forward(&mut buf);
            let scale = T::of_usize(self.grid.len()).recip();
            buf.iter_mut().for_each(|c| *c = *c * scale);
            buf.into()
        })
    }

    /// Applies a real Fourier multiplier.
    pub fn multiply_spectrum(&self, multiplier: &[T]) -> Self {
        let coeffs = self
            .spectrum()
            .iter()
            .zip(multiplier)
            .map(|(c, &m)| {
                if m == T::zero() {
                    Complex::default()
                } else {
                    *c * m
                }
            })
            .collect();
        Self::from_spectrum(&self.grid, coeffs)
    }

    /// Applies an index-dependent complex map to the spectrum.
    pub fn map_spectrum(&self, f: impl Fn(usize, Complex<T>) -> Complex<T>) -> Self {
        let coeffs = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(i, &c)| f(i, c))
            .collect();
        Self::from_spectrum(&self.grid, coeffs)
    }

    /// Removes the Nyquist modes, the band every product and derivative lives in.
    pub fn project(&self) -> Self {
        let grid = self.grid.clone();
        self.map_spectrum(|i, c| {
            if grid.is_nyquist(i) {
                Complex::default()
            } else {
                c
            }
        })
    }

    /// Spectral derivative `∂_axis`.
    pub fn derivative(&self, axis: usize) -> Self {
        assert!(axis < self.grid.dim(), "axis out of range");
        let k = self.grid.wavenumbers(axis).to_vec();
        self.map_spectrum(|i, c| Complex::new(-c.im * k[i], c.re * k[i]))
    }

    pub fn gradient(&self) -> VectorField<T> {
        VectorField::from_components((0..self.grid.dim()).map(|a| self.derivative(a)).collect())
            .expect("gradient components share a grid")
    }

    /// Spectral Laplacian (Nyquist modes removed).
    pub fn laplacian(&self) -> Self {
        let grid = self.grid.clone();
        let r = grid.radius();
        self.map_spectrum(|i, c| {
            if grid.is_nyquist(i) {
                Complex::default()
            } else {
                c * (-r[i] * r[i])
            }
        })
    }

    /// Values of the (Nyquist-free) band-limited interpolant on the 3/2-padded grid.
    pub(crate) fn to_padded(&self) -> Vec<T> {
        padded_from_spectrum(&self.grid, self.spectrum(), None)
    }

    /// Dealiased product: the exact product projected back onto the grid band.
    pub fn product(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let mut acc = PaddedSum::new(&self.grid);
        acc.add_product(&self.to_padded(), &other.to_padded(), T::one());
        Ok(acc.finish())
    }

    /// Pointwise image `F(f)` on the sampling grid (no projection).
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::from_parts(&self.grid, self.samples.iter().map(|&v| f(v)).collect())
    }

    /// `F(f)` evaluated on the padded grid and projected back onto the band.
    pub fn map_dealiased(&self, f: impl Fn(T) -> T) -> Self {
        let mut values = self.to_padded();
        values.iter_mut().for_each(|v| *v = f(*v));
        from_padded(&self.grid, &values)
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: T, other: &Self) -> Self {
        debug_assert!(self.grid.same_as(&other.grid));
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&x, &y)| x + a * y)
            .collect();
        Self::from_parts(&self.grid, samples)
    }

    /// Rectangle-rule integral over the torus.
    pub fn integral(&self) -> T {
        self.samples.iter().copied().sum::<T>() * self.grid.cell_volume()
    }

    pub fn mean(&self) -> T {
        self.samples.iter().copied().sum::<T>() / T::of_usize(self.samples.len())
    }

    /// `∫ f g` by the rectangle rule (exact for band-limited pairs).
    pub fn inner(&self, other: &Self) -> T {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| a * b)
            .sum::<T>()
            * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> T {
        self.inner(self).sqrt()
    }

    pub fn sup_norm(&self) -> T {
        self.samples.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `L^p` norm by the rectangle rule; `p = ∞` gives the lattice maximum.
    pub fn lp_norm(&self, p: T) -> T {
        if p.is_infinite() {
            self.sup_norm()
        } else if p == T::one() {
            self.samples.iter().map(|v| v.abs()).sum::<T>() * self.grid.cell_volume()
        } else if p == T::of(2.0) {
            self.l2_norm()
        } else {
            let s: T = self.samples.iter().map(|v| v.abs().powf(p)).sum();
            (s * self.grid.cell_volume()).powf(p.recip())
        }
    }

    pub fn min(&self) -> T {
        self.samples.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.samples.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    /// Relative L² distance `‖self − other‖ / max(‖other‖, tiny)`.
    pub fn relative_l2_error(&self, reference: &Self) -> T {
        let diff = (self - reference).l2_norm();
        let scale = reference.l2_norm();
        if scale == T::zero() {
            diff
        } else {
            diff / scale
        }
    }
}

impl<T: Real> fmt::Debug for Field<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Field({:?}, ‖·‖₂ = {})", self.grid, self.l2_norm())
    }
}

/// Values on the padded grid of the band-limited function with the given
/// coefficients, optionally filtered by a real multiplier first.
pub(crate) fn padded_from_spectrum<T: Real>(
    grid: &TorusGrid<T>,
    coeffs: &[Complex<T>],
    multiplier: Option<&[T]>,
) -> Vec<T> {
    let mut buf = vec![Complex::default(); grid.padded_len()];
    for (i, slot) in grid.pad_index().iter().enumerate() {
        if let Some(p) = *slot {
            buf[p] = match multiplier {
                Some(m) => coeffs[i] * m[i],
                None => coeffs[i],
            };
        }
    }
    grid.padded_transform().backward(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

/// Projects padded-grid samples back onto the grid band (Nyquist removed).
pub(crate) fn from_padded<T: Real>(grid: &TorusGrid<T>, values: &[T]) -> Field<T> {
    let mut buf: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
    grid.padded_transform().forward(&mut buf);
    let scale = T::of_usize(grid.padded_len()).recip();
    let coeffs = grid
        .pad_index()
        .iter()
        .map(|slot| match *slot {
            Some(p) => buf[p] * scale,
            None => Complex::default(),
        })
        .collect();
    Field::from_spectrum(grid, coeffs)
}

/// Accumulates pointwise products on the padded grid; one projection at the end.
pub(crate) struct PaddedSum<T: Real> {
    grid: TorusGrid<T>,
    acc: Vec<T>,
}

impl<T: Real> PaddedSum<T> {
    pub(crate) fn new(grid: &TorusGrid<T>) -> Self {
        Self {
            grid: grid.clone(),
            acc: vec![T::zero(); grid.padded_len()],
        }
    }

    /// `acc += weight · a · b`.
    pub(crate) fn add_product(&mut self, a: &[T], b: &[T], weight: T) {
        for ((s, &x), &y) in self.acc.iter_mut().zip(a).zip(b) {
            *s += weight * x * y;
        }
    }

    pub(crate) fn finish(self) -> Field<T> {
        from_padded(&self.grid, &self.acc)
    }
}

impl<T: Real> Add for &Field<T> {
    type Output = Field<T>;
    fn add(self, rhs: Self) -> Field<T> {
        self.axpy(T::one(), rhs)
    }
}

impl<T: Real> Sub for &Field<T> {
    type Output = Field<T>;
    fn sub(self, rhs: Self) -> Field<T> {
        self.axpy(-T::one(), rhs)
    }
}

impl<T: Real> Mul<T> for &Field<T> {
    type Output = Field<T>;
    fn mul(self, rhs: T) -> Field<T> {
        self.scale(rhs)
    }
}

impl<T: Real> Neg for &Field<T> {
    type Output = Field<T>;
    fn neg(self) -> Field<T> {
        self.scale(-T::one())
    }
}

impl<T: Real> AddAssign<&Field<T>> for Field<T> {
    fn add_assign(&mut self, rhs: &Field<T>) {
        for (a, &b) in self.samples.iter_mut().zip(&rhs.samples) {
            *a += b;
        }
        self.spectrum = OnceLock::new();
    }
}

impl<T: Real> SubAssign<&Field<T>> for Field<T> {
    fn sub_assign(&mut self, rhs: &Field<T>) {
        for (a, &b) in self.samples.iter_mut().zip(&rhs.samples) {
            *a -= b;
        }
        self.spectrum = OnceLock::new();
    }
}

/// Vector-valued field: one [`Field`] per component, all on one grid.
#[derive(Clone, Debug)]
pub struct VectorField<T: Real> {
    components: Vec<Field<T>>,
}

impl<T: Real> VectorField<T> {
    pub fn from_components(components: Vec<Field<T>>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::Contract("vector field needs a component".into()));
        };
        for c in &components[1..] {
            first.grid().ensure_same(c.grid())?;
        }
        Ok(Self { components })
    }

    /// `d` zero components.
    pub fn zeros(grid: &TorusGrid<T>) -> Self {
        Self {
            components: vec![Field::zeros(grid); grid.dim()],
        }
    }

    pub fn grid(&self) -> &TorusGrid<T> {
        self.components[0].grid()
    }

    pub fn components(&self) -> &[Field<T>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Field<T> {
        &self.components[i]
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn map_components(&self, f: impl Fn(&Field<T>) -> Field<T>) -> Self {
        Self {
            components: self.components.iter().map(f).collect(),
        }
    }

    /// `Σ_j ∂_j g^j`; requires `d` components.
    pub fn divergence(&self) -> Result<Field<T>> {
        if self.len() != self.grid().dim() {
            return Err(Error::Contract(format!(
                "divergence of a {}-component field in dimension {}",
                self.len(),
                self.grid().dim()
            )));
        }
        let mut div = self.components[0].derivative(0);
        for (axis, c) in self.components.iter().enumerate().skip(1) {
            div += &c.derivative(axis);
        }
        Ok(div)
    }

    /// Dealiased `Σ_i a_i b_i`.
    pub fn dot(&self, other: &Self) -> Result<Field<T>> {
        if self.len() != other.len() {
            return Err(Error::Contract("dot product of mismatched vectors".into()));
        }
        self.grid().ensure_same(other.grid())?;
        let mut acc = PaddedSum::new(self.grid());
        for (a, b) in self.components.iter().zip(&other.components) {
            acc.add_product(&a.to_padded(), &b.to_padded(), T::one());
        }
        Ok(acc.finish())
    }

    /// Dealiased `f · g` componentwise.
    pub fn scaled_by(&self, f: &Field<T>) -> Result<Self> {
        let fp = f.to_padded();
        let components = self
            .components
            .iter()
            .map(|c| {
                f.grid().ensure_same(c.grid())?;
                let mut acc = PaddedSum::new(c.grid());
                acc.add_product(&fp, &c.to_padded(), T::one());
                Ok(acc.finish())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { components })
    }

    pub fn axpy(&self, a: T, other: &Self) -> Self {
        Self {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(x, y)| x.axpy(a, y))
                .collect(),
        }
    }

    pub fn scale(&self, c: T) -> Self {
        self.map_components(|f| f.scale(c))
    }

    /// `Σ_i ‖g^i‖_{L²}` (sum over components).
    pub fn l2_norm(&self) -> T {
        self.components.iter().map(Field::l2_norm).sum()
    }

    /// `(Σ_i ‖g^i‖²_{L²})^{1/2}`, the Euclidean energy norm.
    pub fn energy_norm(&self) -> T {
        self.components.iter().map(|c| c.inner(c)).sum::<T>().sqrt()
    }

    pub fn lp_norm(&self, p: T) -> T {
        self.components.iter().map(|c| c.lp_norm(p)).sum()
    }

    /// Pointwise Euclidean magnitude maximum.
    pub fn sup_magnitude(&self) -> T {
        let n = self.grid().len();
        (0..n)
            .map(|i| {
                self.components
                    .iter()
                    .map(|c| c.samples()[i] * c.samples()[i])
                    .sum::<T>()
                    .sqrt()
            })
            .fold(T::zero(), T::max)
    }

    /// `Σ_i ∫ a_i b_i`.
    pub fn inner(&self, other: &Self) -> T {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.inner(b))
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(Field::is_finite)
    }
}

impl<T: Real> Add for &VectorField<T> {
    type Output = VectorField<T>;
    fn add(self, rhs: Self) -> VectorField<T> {
        self.axpy(T::one(), rhs)
    }
}

impl<T: Real> Sub for &VectorField<T> {
    type Output = VectorField<T>;
    fn sub(self, rhs: Self) -> VectorField<T> {
        self.axpy(-T::one(), rhs)
    }
}
