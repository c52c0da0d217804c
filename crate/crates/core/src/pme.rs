//! Porous medium equation `∂_s N = ΔP(N)` near a constant state.
//!
//! The linear part `P′(ρ̄)ΔN` is integrated exactly in Fourier space and the
//! remainder `Δ(P(N) − P′(ρ̄)N)` explicitly (first-order integrating factor).

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::euler::RelaxConfig;
use crate::scalar::Real;
use crate::spectral::{Field, TorusGrid};

#[derive(Clone, Debug)]
pub struct PmeState<T: Real> {
    pub n: Field<T>,
    /// Slow time.
    pub s: T,
}

impl<T: Real> PmeState<T> {
    pub fn new(n: Field<T>) -> Result<Self> {
        check_positive(&n)?;
        Ok(Self { n, s: T::zero() })
    }
}

fn check_positive<T: Real>(n: &Field<T>) -> Result<()> {
    match n.samples().iter().position(|&x| !(x > T::zero())) {
        Some(i) => Err(Error::Domain(format!(
            "density {} at sample {i} is not positive",
            n.samples()[i]
        ))),
        None => Ok(()),
    }
}

/// `ds = Δx²/(4P′(ρ̄))`.
pub fn default_ds<T: Real>(cfg: &RelaxConfig, grid: &TorusGrid<T>) -> f64 {
    grid.spacing().as_f64().powi(2) / (4.0 * cfg.pressure_slope(cfg.rho_bar))
}

/// Integrating-factor stepper with a cached decay factor.
#[derive(Clone, Debug)]
pub struct PmeSolver<T: Real> {
    cfg: RelaxConfig,
    grid: TorusGrid<T>,
    cached: Option<(T, Vec<T>)>,
}

impl<T: Real> PmeSolver<T> {
    pub fn new(cfg: &RelaxConfig, grid: &TorusGrid<T>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: cfg.clone(),
            grid: grid.clone(),
            cached: None,
        })
    }

    fn decay(&mut self, ds: T) -> &[T] {
        let stale = !matches!(&self.cached, Some((h, _)) if *h == ds);
        if stale {
            let slope = T::of(self.cfg.pressure_slope(self.cfg.rho_bar));
            let factors = self
                .grid
                .radius()
                .iter()
                .enumerate()
                .map(|(i, &k)| {
                    if self.grid.is_nyquist(i) {
                        T::zero()
                    } else {
                        (-slope * k * k * ds).exp()
                    }
                })
                .collect();
            self.cached = Some((ds, factors));
        }
        &self.cached.as_ref().expect("set above").1
    }

    /// `N̂ ← e^{−P′|k|²ds}(N̂ − ds|k|² R̂)` with `R = P(N) − P′(ρ̄)N` dealiased.
    pub fn step(&mut self, state: &PmeState<T>, ds: T) -> Result<PmeState<T>> {
        check_positive(&state.n)?;
        let cfg = self.cfg.clone();
        let slope = cfg.pressure_slope(cfg.rho_bar);
        let remainder = state
            .n
            .map_dealiased(|x| T::of(cfg.pressure(x.as_f64()) - slope * x.as_f64()));
        let radius = self.grid.radius().to_vec();
        let n_hat = state.n.spectrum().to_vec();
        let r_hat = remainder.spectrum();
        let decay = self.decay(ds);
        let coeffs: Vec<Complex<T>> = n_hat
            .iter()
            .zip(r_hat)
            .zip(decay)
            .zip(&radius)
            .map(|(((&n, &r), &e), &k)| (n - r * (ds * k * k)) * e)
            .collect();
        let n = Field::from_spectrum(&self.grid, coeffs);
        if !n.is_finite() {
            return Err(Error::NonFinite(format!(
                "PME state at s = {}",
                state.s + ds
            )));
        }
        check_positive(&n)?;
        Ok(PmeState { n, s: state.s + ds })
    }

    /// Integrates to `s_end` with steps of at most `ds`, landing on `s_end` exactly.
    pub fn advance(
        &mut self,
        state: &PmeState<T>,
        s_end: f64,
        ds: f64,
        mut observe: impl FnMut(&PmeState<T>),
    ) -> Result<PmeState<T>> {
        let span = s_end - state.s.as_f64();
        if span < 0.0 {
            return Err(Error::Contract(format!(
                "target {s_end} precedes s = {}",
                state.s
            )));
        }
        let steps = (span / ds * (1.0 - 1e-12)).ceil().max(0.0) as usize;
        let mut cur = state.clone();
        observe(&cur);
        if steps == 0 {
            return Ok(cur);
        }
        let h = T::of(span / steps as f64);
        let start = state.s.as_f64();
        for j in 1..=steps {
            cur = self.step(&cur, h)?;
            cur.s = T::of(start + span * j as f64 / steps as f64);
            observe(&cur);
        }
        Ok(cur)
    }
}

/// One step of size `ds`.
pub fn pme_step<T: Real>(state: &PmeState<T>, cfg: &RelaxConfig, ds: f64) -> Result<PmeState<T>> {
    PmeSolver::new(cfg, state.n.grid())?.step(state, T::of(ds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_is_fixed() {
        let g = TorusGrid::<f64>::new(2, 16, 2.0 * PI).unwrap();
        let cfg = RelaxConfig::default();
        let s = PmeState::new(Field::constant(&g, cfg.rho_bar)).unwrap();
        let next = pme_step(&s, &cfg, 0.01).unwrap();
        assert!((&next.n - &s.n).sup_norm() < 1e-15);
    }

    #[test]
    fn single_mode_decay() {
        let g = TorusGrid::<f64>::new(2, 32, 2.0 * PI).unwrap();
        let cfg = RelaxConfig::default();
        let amp = 1e-4;
        let n0 = Field::from_fn(&g, |x| 1.0 + amp * (2.0 * x[0] + x[1]).cos());
        let mut solver = PmeSolver::new(&cfg, &g).unwrap();
        let ds = default_ds(&cfg, &g);
        let out = solver
            .advance(&PmeState::new(n0).unwrap(), 0.2, ds, |_| {})
            .unwrap();
        let k2 = 5.0;
        let predicted = amp * (-cfg.pressure_slope(1.0) * k2 * 0.2).exp();
        let measured = 2.0 * out.n.spectrum()[2 * 32 + 1].re;
        assert!(
            (measured / predicted - 1.0).abs() < 1e-3,
            "{measured} {predicted}"
        );
    }

    #[test]
    fn mass_is_conserved_and_positivity_checked() {
        let g = TorusGrid::<f64>::new(2, 16, 2.0 * PI).unwrap();
        let cfg = RelaxConfig::default();
        let n0 = Field::from_fn(&g, |x| 1.0 + 0.3 * x[0].sin() * x[1].cos());
        let m0 = n0.integral();
        let mut solver = PmeSolver::new(&cfg, &g).unwrap();
        let out = solver
            .advance(
                &PmeState::new(n0).unwrap(),
                0.5,
                default_ds(&cfg, &g),
                |_| {},
            )
            .unwrap();
        assert!((out.n.integral() - m0).abs() < 1e-12 * m0);
        assert!(PmeState::new(Field::constant(&g, -1.0)).is_err());
    }
}
