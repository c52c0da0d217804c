use rustfft::num_complex::Complex;

use super::{EulerState, RelaxConfig};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::field::PaddedSum;
use crate::spectral::{Field, TorusGrid, VectorField};

/// Time derivative split by stiffness.
#[derive(Clone, Debug)]
pub struct Tendency<T: Real> {
    /// `−ψ̄ div v − v·∇ϱ − (γ−1)/2·ϱ div v`.
    pub varrho: Field<T>,
    /// `−ψ̄ ∇ϱ − v·∇v − (γ−1)/2·ϱ∇ϱ`, without relaxation.
    pub v: VectorField<T>,
    /// The stiff term `−v/τ`.
    pub relaxation: VectorField<T>,
}

/// Full right-hand side of the symmetrized system at `state`.
pub fn rhs<T: Real>(state: &EulerState<T>, cfg: &RelaxConfig) -> Result<Tendency<T>> {
    cfg.validate()?;
    guard(state, cfg)?;
    let psi = T::of(cfg.psi_bar());
    let (nr, nv) = quadratic_terms(state, T::of(cfg.coupling()), cfg.dealias)?;
    let varrho = nr.axpy(-psi, &state.v.divergence()?);
    let v = nv.axpy(-psi, &state.varrho.gradient());
    Ok(Tendency {
        varrho,
        v,
        relaxation: state.v.scale(-T::of(cfg.tau).recip()),
    })
}

fn guard<T: Real>(state: &EulerState<T>, cfg: &RelaxConfig) -> Result<()> {
    if !state.is_finite() {
        return Err(Error::NonFinite(format!("state at t = {}", state.t)));
    }
    let min_speed = state.min_sound_speed(cfg).as_f64();
    let threshold = 0.1 * cfg.psi_bar();
    if min_speed < threshold {
        return Err(Error::Vacuum {
            t: state.t.as_f64(),
            min_speed,
            threshold,
        });
    }
    Ok(())
}

/// Samples on which quadratic terms are formed: padded or plain grid.
struct Lift<'a, T: Real> {
    grid: &'a TorusGrid<T>,
    dealias: bool,
}

impl<T: Real> Lift<'_, T> {
    fn values(&self, f: &Field<T>) -> Vec<T> {
        if self.dealias {
            f.to_padded()
        } else {
            f.samples().to_vec()
        }
    }

    fn sum(&self, terms: &[(&[T], &[T], T)]) -> Result<Field<T>> {
        if self.dealias {
            let mut acc = PaddedSum::new(self.grid);
            for (a, b, w) in terms {
                acc.add_product(a, b, *w);
            }
            Ok(acc.finish())
        } else {
            let mut acc = vec![T::zero(); self.grid.len()];
            for (a, b, w) in terms {
                for ((s, &x), &y) in acc.iter_mut().zip(*a).zip(*b) {
                    *s += *w * x * y;
                }
            }
            Field::new(self.grid, acc)
        }
    }
}

/// `(−v·∇ϱ − c ϱ div v, −v·∇v − c ϱ∇ϱ)`.
fn quadratic_terms<T: Real>(
    state: &EulerState<T>,
    c: T,
    dealias: bool,
) -> Result<(Field<T>, VectorField<T>)> {
    let grid = state.grid();
    let d = grid.dim();
    let lift = Lift { grid, dealias };
    let vs: Vec<Vec<T>> = state
        .v
        .components()
        .iter()
        .map(|f| lift.values(f))
        .collect();
    let r = lift.values(&state.varrho);
    let grad_r: Vec<Vec<T>> = (0..d)
        .map(|j| lift.values(&state.varrho.derivative(j)))
        .collect();
    let div = lift.values(&state.v.divergence()?);
    let one = -T::one();

    let mut terms: Vec<(&[T], &[T], T)> =
        (0..d).map(|j| (&vs[j][..], &grad_r[j][..], one)).collect();
    terms.push((&r, &div, -c));
    let nr = lift.sum(&terms)?;

    let mut comps = Vec::with_capacity(d);
    for i in 0..d {
        let grad_vi: Vec<Vec<T>> = (0..d)
            .map(|j| lift.values(&state.v.component(i).derivative(j)))
            .collect();
        let mut terms: Vec<(&[T], &[T], T)> =
            (0..d).map(|j| (&vs[j][..], &grad_vi[j][..], one)).collect();
        terms.push((&r, &grad_r[i], -c));
        comps.push(lift.sum(&terms)?);
    }
    Ok((nr, VectorField::from_components(comps)?))
}

/// Exact flow of `∂_t ϱ = −ψ̄ div v`, `∂_t v = −ψ̄∇ϱ − v/τ` over a fixed step.
///
/// Per mode, with `u = k̂·v̂` and `w = i u`, the pair `(ϱ̂, w)` obeys the real
/// system `[[0, −a], [a, −b]]` with `a = ψ̄|k|`, `b = 1/τ`; the transverse part
/// of `v̂` only decays like `e^{−bt}`.
#[derive(Clone, Debug)]
pub struct LinearPropagator<T: Real> {
    h: T,
    /// `[E11, E12, E21, E22, e^{−bh}]` per flat index; zero on the Nyquist planes.
    coeffs: Vec<[T; 5]>,
}

impl<T: Real> LinearPropagator<T> {
    pub fn new(grid: &TorusGrid<T>, psi_bar: T, tau: T, h: T) -> Self {
        let b = tau.recip().as_f64();
        let hf = h.as_f64();
        let coeffs = grid
            .radius()
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                if grid.is_nyquist(i) {
                    return [T::zero(); 5];
                }
                let a = (psi_bar * k).as_f64();
                let e = exp_companion(a, b, hf);
                [e[0], e[1], e[2], e[3], (-b * hf).exp()].map(T::of)
            })
            .collect();
        Self { h, coeffs }
    }

    pub fn step_size(&self) -> T {
        self.h
    }

    pub fn apply(&self, state: &EulerState<T>) -> EulerState<T> {
        let grid = state.grid();
        let d = grid.dim();
        let r_hat = state.varrho.spectrum();
        let v_hat: Vec<&[Complex<T>]> = state.v.components().iter().map(|c| c.spectrum()).collect();
        let radius = grid.radius();
        let ks: Vec<&[T]> = (0..d).map(|j| grid.wavenumbers(j)).collect();
        let mut r_out = vec![Complex::default(); grid.len()];
        let mut v_out = vec![vec![Complex::default(); grid.len()]; d];
        let i_unit = Complex::new(T::zero(), T::one());
        for (idx, e) in self.coeffs.iter().enumerate() {
            if grid.is_nyquist(idx) {
                continue;
            }
            let k = radius[idx];
            let r = r_hat[idx];
            if k == T::zero() {
                r_out[idx] = r * e[0];
                for j in 0..d {
                    v_out[j][idx] = v_hat[j][idx] * e[4];
                }
                continue;
            }
            let khat: Vec<T> = (0..d).map(|j| ks[j][idx] / k).collect();
            let u: Complex<T> = (0..d).map(|j| v_hat[j][idx] * khat[j]).sum();
            let w = i_unit * u;
            r_out[idx] = r * e[0] + w * e[1];
            let w_new = r * e[2] + w * e[3];
            let u_new = -i_unit * w_new;
            for j in 0..d {
                let perp = v_hat[j][idx] - u * khat[j];
                v_out[j][idx] = perp * e[4] + u_new * khat[j];
            }
        }
        let v = VectorField::from_components(
            v_out
                .into_iter()
                .map(|c| Field::from_spectrum(grid, c))
                .collect(),
        )
        .expect("components share a grid");
        EulerState {
            varrho: Field::from_spectrum(grid, r_out),
            v,
            t: state.t + self.h,
        }
    }
}

/// `exp(h·[[0, −a], [a, −b]])` as `[E11, E12, E21, E22]`, `a, b ≥ 0`.
fn exp_companion(a: f64, b: f64, h: f64) -> [f64; 4] {
    // M = −b/2·I + K with K² = Δ·I, Δ = b²/4 − a²; exp(hM) = e^{−bh/2}(C + S K).
    let delta = b * b / 4.0 - a * a;
    let x = delta * h * h;
    let (ec, es) = if x.abs() < 1.0 {
        let mut c = 0.0;
        let mut s = 0.0;
        let mut term = 1.0;
        for n in 0..30 {
            c += term;
            let t_s = term / (2 * n + 1) as f64;
            s += t_s;
            term *= x / ((2 * n + 1) as f64 * (2 * n + 2) as f64);
            if term.abs() < 1e-18 * c.abs() {
                break;
            }
        }
        let damp = (-b * h / 2.0).exp();
        (damp * c, damp * s * h)
    } else if delta > 0.0 {
        let omega = delta.sqrt();
        // Slow root written without cancellation.
        let slow = -a * a / (b / 2.0 + omega);
        let fast = -b / 2.0 - omega;
        let (ep, em) = ((slow * h).exp(), (fast * h).exp());
        ((ep + em) / 2.0, (ep - em) / (2.0 * omega))
    } else {
        let omega = (-delta).sqrt();
        let damp = (-b * h / 2.0).exp();
        (damp * (omega * h).cos(), damp * (omega * h).sin() / omega)
    };
    [ec + es * b / 2.0, -es * a, es * a, ec - es * b / 2.0]
}

/// Strang-split integrator owning the cached linear propagator.
#[derive(Clone, Debug)]
pub struct Solver<T: Real> {
    cfg: RelaxConfig,
    grid: TorusGrid<T>,
    half: Option<LinearPropagator<T>>,
    steps: usize,
}

impl<T: Real> Solver<T> {
    pub fn new(cfg: &RelaxConfig, grid: &TorusGrid<T>) -> Result<Self> {
        cfg.validate()?;
        if grid.dim() != cfg.dim {
            return Err(Error::Config(format!(
                "grid dimension {} differs from configured {}",
                grid.dim(),
                cfg.dim
            )));
        }
        Ok(Self {
            cfg: cfg.clone(),
            grid: grid.clone(),
            half: None,
            steps: 0,
        })
    }

    pub fn config(&self) -> &RelaxConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &TorusGrid<T> {
        &self.grid
    }

    /// Steps taken so far.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Largest step the CFL rule admits at `state`.
    pub fn cfl_limit(&self, state: &EulerState<T>) -> f64 {
        let dx = self.grid.spacing().as_f64();
        self.cfg.cfl * dx / (self.cfg.psi_bar() + state.v.sup_magnitude().as_f64())
    }

    /// Step size the schedule picks at time `t` (before clipping to a target).
    pub fn scheduled_dt(&self, t: f64) -> f64 {
        if self.cfg.resolve_layer && t < 5.0 * self.cfg.tau {
            self.cfg.dt.min(self.cfg.tau / 8.0)
        } else {
            self.cfg.dt
        }
    }

    /// One Strang step of size `h`.
    pub fn step(&mut self, state: &EulerState<T>, h: T) -> Result<EulerState<T>> {
        guard(state, &self.cfg)?;
        let limit = self.cfl_limit(state);
        if h.as_f64() > limit * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "dt = {} exceeds the CFL limit {limit:.6e} at t = {}",
                h, state.t
            )));
        }
        let half_h = h / T::of(2.0);
        let reuse = matches!(&self.half, Some(p) if p.step_size() == half_h);
        if !reuse {
            self.half = Some(LinearPropagator::new(
                &self.grid,
                T::of(self.cfg.psi_bar()),
                T::of(self.cfg.tau),
                half_h,
            ));
        }
        let prop = self.half.as_ref().expect("propagator set above");
        let mut s = prop.apply(state);
        s = self.ssp_rk3(&s, h)?;
        s = prop.apply(&s);
        s.t = state.t + h;
        if self.cfg.mass_fix {
            let target = mass_mean(&state.varrho, &self.cfg);
            s.varrho = fix_mass(&s.varrho, target, &self.cfg)?;
        }
        if !s.is_finite() {
            return Err(Error::NonFinite(format!("state after step to t = {}", s.t)));
        }
        self.steps += 1;
        Ok(s)
    }

    fn ssp_rk3(&self, s0: &EulerState<T>, h: T) -> Result<EulerState<T>> {
        let c = T::of(self.cfg.coupling());
        let dealias = self.cfg.dealias;
        let euler = |s: &EulerState<T>| -> Result<EulerState<T>> {
            let (nr, nv) = quadratic_terms(s, c, dealias)?;
            Ok(EulerState {
                varrho: s.varrho.axpy(h, &nr),
                v: s.v.axpy(h, &nv),
                t: s.t,
            })
        };
        let blend = |a: &EulerState<T>, wa: T, b: &EulerState<T>, wb: T| EulerState {
            varrho: a.varrho.scale(wa).axpy(wb, &b.varrho),
            v: a.v.scale(wa).axpy(wb, &b.v),
            t: a.t,
        };
        let s1 = euler(s0)?;
        let s2 = blend(s0, T::of(0.75), &euler(&s1)?, T::of(0.25));
        let third = T::one() / T::of(3.0);
        Ok(blend(s0, third, &euler(&s2)?, T::one() - third))
    }

    /// Integrates to `t_end`, calling `observe` on the initial state and after every step.
    pub fn advance(
        &mut self,
        state: &EulerState<T>,
        t_end: f64,
        mut observe: impl FnMut(&EulerState<T>) -> Result<()>,
    ) -> Result<EulerState<T>> {
        let mut s = state.clone();
        observe(&s)?;
        loop {
            let t = s.t.as_f64();
            let remaining = t_end - t;
            if remaining <= 1e-12 * t_end.abs().max(1.0) {
                break;
            }
            let mut h = self.scheduled_dt(t).min(remaining);
            // Avoid a sliver of a final step.
            if remaining - h < 1e-9 * h {
                h = remaining;
            }
            s = self.step(&s, T::of(h))?;
            observe(&s)?;
        }
        Ok(s)
    }
}

/// Mean density `ρ(ϱ)` over the lattice.
fn mass_mean<T: Real>(varrho: &Field<T>, cfg: &RelaxConfig) -> f64 {
    let n = varrho.samples().len() as f64;
    varrho
        .samples()
        .iter()
        .map(|&s| super::desymmetrize_value(s.as_f64(), cfg))
        .sum::<f64>()
        / n
}

/// Shifts the mean of `ϱ` by Newton iteration so that `mean ρ(ϱ) = target`.
fn fix_mass<T: Real>(varrho: &Field<T>, target: f64, cfg: &RelaxConfig) -> Result<Field<T>> {
    let samples: Vec<f64> = varrho.samples().iter().map(|s| s.as_f64()).collect();
    let n = samples.len() as f64;
    let mut shift = 0.0;
    for _ in 0..20 {
        let (mut m, mut dm) = (0.0, 0.0);
        for &s in &samples {
            let rho = super::desymmetrize_value(s + shift, cfg);
            let psi = if cfg.gamma == 1.0 {
                cfg.psi_bar()
            } else {
                cfg.psi_bar() + cfg.coupling() * (s + shift)
            };
            m += rho;
            // dρ/dϱ = ρ/ψ for every γ ≥ 1.
            dm += rho / psi;
        }
        let (m, dm) = (m / n, dm / n);
        if !m.is_finite() || dm <= 0.0 {
            return Err(Error::NonFinite("mass correction diverged".into()));
        }
        let delta = (target - m) / dm;
        shift += delta;
        if delta.abs() <= 1e-16 * target.abs().max(1.0) {
            break;
        }
    }
    let shift = T::of(shift);
    Ok(varrho.map(|s| s + shift))
}

/// One step of size `cfg.dt` from `state`.
pub fn step<T: Real>(state: &EulerState<T>, cfg: &RelaxConfig) -> Result<EulerState<T>> {
    Solver::new(cfg, state.grid())?.step(state, T::of(cfg.dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler::InitialData;
    use std::f64::consts::PI;

    fn grid(n: usize) -> TorusGrid<f64> {
        TorusGrid::new(2, n, 2.0 * PI).unwrap()
    }

    #[test]
    fn companion_exponential_matches_series() {
        // Brute-force Taylor series of the 2×2 exponential.
        for &(a, b, h) in &[
            (1.0, 1.0, 0.3),
            (0.1, 64.0, 0.05),
            (3.0, 0.5, 2.0),
            (1.0, 2.0, 0.5),
        ] {
            let m = [[0.0, -a * h], [a * h, -b * h]];
            let mut term = [[1.0, 0.0], [0.0, 1.0]];
            let mut sum = term;
            for n in 1..200 {
                let mut next = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        next[i][j] = (0..2).map(|k| term[i][k] * m[k][j]).sum::<f64>() / n as f64;
                    }
                }
                term = next;
                for i in 0..2 {
                    for j in 0..2 {
                        sum[i][j] += term[i][j];
                    }
                }
            }
            let e = exp_companion(a, b, h);
            let flat = [sum[0][0], sum[0][1], sum[1][0], sum[1][1]];
            for (x, y) in e.iter().zip(flat) {
                assert!((x - y).abs() < 1e-12, "{a} {b} {h}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn equilibrium_is_fixed() {
        let g = grid(16);
        let cfg = RelaxConfig::default();
        let s = EulerState::equilibrium(&g);
        let t = rhs(&s, &cfg).unwrap();
        assert_eq!(t.varrho.sup_norm(), 0.0);
        assert_eq!(t.v.sup_magnitude(), 0.0);
        let next = step(&s, &cfg).unwrap();
        assert_eq!(next.varrho.sup_norm(), 0.0);
        assert_eq!(next.v.sup_magnitude(), 0.0);
    }

    #[test]
    fn linearized_velocity_tendency() {
        let g = grid(32);
        let cfg = RelaxConfig::default();
        let eps = 1e-6;
        let r = Field::from_fn(&g, |x| eps * (2.0 * x[0] + x[1]).cos());
        let s = EulerState::new(r.clone(), VectorField::zeros(&g)).unwrap();
        let t = rhs(&s, &cfg).unwrap();
        let expect = r.gradient().scale(-cfg.psi_bar());
        let err = (&t.v - &expect).l2_norm() / expect.l2_norm();
        assert!(err < 10.0 * eps, "{err}");
    }

    #[test]
    fn pure_relaxation_is_exact() {
        let g = grid(16);
        let v = VectorField::from_components(vec![
            Field::from_fn(&g, |x| x[0].sin()),
            Field::from_fn(&g, |x| (2.0 * x[1]).cos()),
        ])
        .unwrap();
        let s = EulerState::new(Field::zeros(&g), v.clone()).unwrap();
        let (tau, h) = (0.01, 0.3);
        let out = LinearPropagator::new(&g, 0.0, tau, h).apply(&s);
        let expect = v.scale((-h / tau).exp());
        assert!((&out.v - &expect).l2_norm() < 1e-14);
        assert!(out.varrho.sup_norm() < 1e-14);
    }

    #[test]
    fn cfl_violation_is_a_configuration_error() {
        let g = grid(16);
        let cfg = RelaxConfig {
            dt: 1.0,
            ..RelaxConfig::default()
        };
        let s = EulerState::equilibrium(&g);
        assert!(matches!(step(&s, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn vacuum_guard_trips() {
        let g = grid(16);
        let cfg = RelaxConfig::default();
        let deep = -0.95 * cfg.psi_bar() / cfg.coupling();
        let s = EulerState::new(Field::constant(&g, deep), VectorField::zeros(&g)).unwrap();
        assert!(matches!(step(&s, &cfg), Err(Error::Vacuum { .. })));
    }

    #[test]
    fn mass_is_conserved() {
        let g = grid(32);
        let cfg = RelaxConfig {
            t_final: 1.0,
            ..RelaxConfig::default()
        };
        let data = InitialData {
            epsilon: 0.1,
            ..InitialData::default()
        };
        let s0 = data.state(&g, &cfg).unwrap();
        let m0 = s0.density(&cfg).unwrap().integral();
        let mut solver = Solver::new(&cfg, &g).unwrap();
        let mut worst: f64 = 0.0;
        solver
            .advance(&s0, cfg.t_final, |s| {
                let m = s.density(&cfg).unwrap().integral();
                worst = worst.max((m - m0).abs() / m0);
                Ok(())
            })
            .unwrap();
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn rhs_agrees_with_a_small_step() {
        let g = grid(32);
        let cfg = RelaxConfig {
            mass_fix: false,
            ..RelaxConfig::default()
        };
        let s0 = InitialData {
            epsilon: 0.05,
            ..InitialData::default()
        }
        .state(&g, &cfg)
        .unwrap();
        let t = rhs(&s0, &cfg).unwrap();
        let full = t.v.axpy(1.0, &t.relaxation);
        let mut solver = Solver::new(&cfg, &g).unwrap();
        let errs: Vec<f64> = [1e-3, 5e-4]
            .iter()
            .map(|&h| {
                let s1 = solver.step(&s0, h).unwrap();
                let fd = (&s1.varrho - &s0.varrho).scale(1.0 / h);
                let fv = (&s1.v - &s0.v).scale(1.0 / h);
                (&fd - &t.varrho).l2_norm() + (&fv - &full).l2_norm()
            })
            .collect();
        // First-order difference quotient: error halves with h.
        let ratio = errs[0] / errs[1];
        assert!((ratio - 2.0).abs() < 0.1, "{errs:?}");
    }
}
