use rayon::prelude::*;
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{EulerState, RelaxConfig};
use crate::besov::time_norm;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::field::{padded_from_spectrum, PaddedSum};
use crate::spectral::{Field, TorusGrid};

/// Names of the right-hand-side integrals of the block energy identity.
pub const RHS_TERM_NAMES: [&str; 6] = [
    "div_weighted_energy",
    "transport_commutator_density",
    "transport_commutator_velocity",
    "gradient_coupling",
    "pressure_commutator_velocity",
    "pressure_commutator_density",
];

/// `L²` norms of the blocks of `ϱ`, `v_i` and `∂_j ϱ` at one instant.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
struct BlockNorms {
    varrho: Vec<f64>,
    v: Vec<Vec<f64>>,
    grad: Vec<Vec<f64>>,
}

/// Energy diagnostics of a trajectory, accumulated snapshot by snapshot.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EnergyLedger {
    pub tau: f64,
    pub sigma: f64,
    pub q_max: i32,
    pub times: Vec<f64>,
    /// `‖(ϱ, v)‖_{B^σ_{2,1}}` per snapshot.
    pub besov_norm: Vec<f64>,
    /// `½(‖Δ_q ϱ‖² + ‖Δ_q v‖²)`, indexed `[snapshot][q + 1]`.
    pub block_energy: Vec<Vec<f64>>,
    /// `(1/τ)‖Δ_q v‖²`, indexed like `block_energy`.
    pub dissipation: Vec<Vec<f64>>,
    /// Right-hand-side integrals in the order of [`RHS_TERM_NAMES`]; empty
    /// when the identity is not tracked.
    pub rhs_terms: Vec<Vec<[f64; 6]>>,
    blocks: Vec<BlockNorms>,
    #[serde(skip)]
    coupling: f64,
}

/// The three pieces of the uniform energy functional.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct FunctionalParts {
    /// `‖(ϱ, v)‖_{L̃^∞_T(B^σ_{2,1})}`.
    pub sup: f64,
    /// `τ^{-1/2}‖v‖_{L̃²_T(B^σ_{2,1})}`.
    pub velocity_dissipation: f64,
    /// `τ^{1/2}‖∇ϱ‖_{L̃²_T(B^{σ−1}_{2,1})}`.
    pub gradient_dissipation: f64,
}

impl FunctionalParts {
    pub fn total(&self) -> f64 {
        self.sup + self.velocity_dissipation + self.gradient_dissipation
    }
}

impl EnergyLedger {
    pub fn new(cfg: &RelaxConfig, q_max: i32) -> Self {
        Self {
            tau: cfg.tau,
            sigma: cfg.sigma(),
            q_max,
            times: Vec::new(),
            besov_norm: Vec::new(),
            block_energy: Vec::new(),
            dissipation: Vec::new(),
            rhs_terms: Vec::new(),
            blocks: Vec::new(),
            coupling: cfg.coupling(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Whether the right-hand-side terms were recorded.
    pub fn tracks_identity(&self) -> bool {
        !self.rhs_terms.is_empty() && self.rhs_terms.len() == self.times.len()
    }

    /// Records norms at `state`; with `identity` also the block-identity terms.
    pub fn record<T: Real>(&mut self, state: &EulerState<T>, identity: bool) -> Result<()> {
        let t = state.t.as_f64();
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(Error::Contract(format!(
                    "snapshot time {t} not after {last}"
                )));
            }
        }
        if identity != self.tracks_identity() && !self.is_empty() {
            return Err(Error::Contract("identity tracking must be uniform".into()));
        }
        let grid = state.grid();
        if grid.q_max() != self.q_max {
            return Err(Error::GridMismatch(format!(
                "ledger for q_max = {}, state has {}",
                self.q_max,
                grid.q_max()
            )));
        }
        let norms = block_norms(state);
        let weight = |q: i32, s: f64| 2f64.powi(q).powf(s);
        let besov: f64 = (-1..=self.q_max)
            .map(|q| {
                let i = (q + 1) as usize;
                weight(q, self.sigma)
                    * (norms.varrho[i] + norms.v.iter().map(|c| c[i]).sum::<f64>())
            })
            .sum();
        let energy: Vec<f64> = (0..norms.varrho.len())
            .map(|i| {
                0.5 * (norms.varrho[i].powi(2) + norms.v.iter().map(|c| c[i] * c[i]).sum::<f64>())
            })
            .collect();
        let dissipation: Vec<f64> = (0..norms.varrho.len())
            .map(|i| norms.v.iter().map(|c| c[i] * c[i]).sum::<f64>() / self.tau)
            .collect();
        if identity {
            self.rhs_terms
                .push(identity_terms(state, T::of(self.coupling))?);
        }
        self.times.push(t);
        self.besov_norm.push(besov);
        self.block_energy.push(energy);
        self.dissipation.push(dissipation);
        self.blocks.push(norms);
        if !besov.is_finite() {
            return Err(Error::NonFinite(format!("ledger entry at t = {t}")));
        }
        Ok(())
    }

    /// `‖(ϱ₀, v₀)‖_{B^σ_{2,1}}` of the first snapshot.
    pub fn initial_norm(&self) -> f64 {
        self.besov_norm.first().copied().unwrap_or(0.0)
    }

    /// The functional over the snapshots recorded so far.
    pub fn functional(&self) -> FunctionalParts {
        if self.is_empty() {
            return FunctionalParts {
                sup: 0.0,
                velocity_dissipation: 0.0,
                gradient_dissipation: 0.0,
            };
        }
        let n_blocks = (self.q_max + 2) as usize;
        let d = self.blocks[0].v.len();
        let series = |pick: &dyn Fn(&BlockNorms) -> f64| -> Vec<f64> {
            self.blocks.iter().map(pick).collect()
        };
        let (mut sup, mut vel, mut grad) = (0.0, 0.0, 0.0);
        for i in 0..n_blocks {
            let q = i as i32 - 1;
            let w = 2f64.powi(q).powf(self.sigma);
            let w1 = 2f64.powi(q).powf(self.sigma - 1.0);
            sup += w * time_norm(&self.times, &series(&|b| b.varrho[i]), f64::INFINITY);
            for c in 0..d {
                sup += w * time_norm(&self.times, &series(&|b| b.v[c][i]), f64::INFINITY);
                vel += w * l2_in_time(&self.times, &series(&|b| b.v[c][i]));
                grad += w1 * l2_in_time(&self.times, &series(&|b| b.grad[c][i]));
            }
        }
        FunctionalParts {
            sup,
            velocity_dissipation: vel / self.tau.sqrt(),
            gradient_dissipation: grad * self.tau.sqrt(),
        }
    }

    /// `E_q(t_n) − E_q(0) + ∫(1/τ)‖Δ_q v‖² − ∫ RHS_q` by the trapezoid rule,
    /// indexed `[snapshot][q + 1]`.
    pub fn identity_residual(&self) -> Result<Vec<Vec<f64>>> {
        if !self.tracks_identity() {
            return Err(Error::Contract(
                "ledger was recorded without identity terms".into(),
            ));
        }
        let n_blocks = (self.q_max + 2) as usize;
        let mut acc = vec![0.0; n_blocks];
        let mut out = Vec::with_capacity(self.len());
        for n in 0..self.len() {
            if n > 0 {
                let h = self.times[n] - self.times[n - 1];
                for (i, a) in acc.iter_mut().enumerate() {
                    let net = |m: usize| {
                        self.dissipation[m][i] - self.rhs_terms[m][i].iter().sum::<f64>()
                    };
                    *a += 0.5 * h * (net(n - 1) + net(n));
                }
            }
            out.push(
                (0..n_blocks)
                    .map(|i| self.block_energy[n][i] - self.block_energy[0][i] + acc[i])
                    .collect(),
            );
        }
        Ok(out)
    }

    /// Time integrals (trapezoid) of each right-hand-side term per block.
    pub fn integrated_terms(&self) -> Result<Vec<[f64; 6]>> {
        if !self.tracks_identity() {
            return Err(Error::Contract(
                "ledger was recorded without identity terms".into(),
            ));
        }
        let n_blocks = (self.q_max + 2) as usize;
        let mut acc = vec![[0.0; 6]; n_blocks];
        for n in 1..self.len() {
            let h = self.times[n] - self.times[n - 1];
            for (i, a) in acc.iter_mut().enumerate() {
                for k in 0..6 {
                    a[k] += 0.5 * h * (self.rhs_terms[n - 1][i][k] + self.rhs_terms[n][i][k]);
                }
            }
        }
        Ok(acc)
    }

    /// Whether every recorded number is finite and every norm nonnegative.
    pub fn is_consistent(&self) -> bool {
        let norms_ok = self
            .besov_norm
            .iter()
            .chain(self.block_energy.iter().flatten())
            .chain(self.dissipation.iter().flatten())
            .all(|v| v.is_finite() && *v >= 0.0);
        norms_ok
            && self
                .rhs_terms
                .iter()
                .flatten()
                .flatten()
                .all(|v| v.is_finite())
    }
}

fn l2_in_time(times: &[f64], values: &[f64]) -> f64 {
    if times.len() < 2 {
        return 0.0;
    }
    time_norm(times, values, 2.0)
}

/// Ledger of a stored trajectory with the block identity tracked.
pub fn energy_budget<T: Real>(
    trajectory: &[EulerState<T>],
    cfg: &RelaxConfig,
) -> Result<EnergyLedger> {
    let first = trajectory
        .first()
        .ok_or_else(|| Error::Contract("empty trajectory".into()))?;
    let mut ledger = EnergyLedger::new(cfg, first.grid().q_max());
    for s in trajectory {
        ledger.record(s, true)?;
    }
    Ok(ledger)
}

/// `∫ Δ_q a · Δ_q b` with Δ_q weights `m`, by Parseval (Nyquist planes skipped).
fn pairing<T: Real>(grid: &TorusGrid<T>, a: &[Complex<T>], b: &[Complex<T>], m: &[T]) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .zip(m)
        .enumerate()
        .filter(|(i, _)| !grid.is_nyquist(*i))
        .map(|(_, ((x, y), w))| (*w * *w * (x.re * y.re + x.im * y.im)).as_f64())
        .sum();
    s * grid.volume().as_f64()
}

/// Exact `∫ a b c` of three band-limited functions from padded samples.
fn triple<T: Real>(grid: &TorusGrid<T>, a: &[T], b: &[T], c: &[T]) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .zip(c)
        .map(|((x, y), z)| (*x * *y * *z).as_f64())
        .sum();
    s * grid.volume().as_f64() / grid.padded_len() as f64
}

fn block_norms<T: Real>(state: &EulerState<T>) -> BlockNorms {
    let grid = state.grid();
    let d = grid.dim();
    let r = state.varrho.spectrum();
    let norm = |spec: &[Complex<T>], m: &[T], k: Option<&[T]>| -> f64 {
        let s: f64 = spec
            .iter()
            .enumerate()
            .filter(|(i, _)| !grid.is_nyquist(*i))
            .map(|(i, c)| {
                let w = m[i] * k.map_or(T::one(), |k| k[i]);
                (w * w * c.norm_sqr()).as_f64()
            })
            .sum();
        (s * grid.volume().as_f64()).sqrt()
    };
    let mut out = BlockNorms {
        varrho: Vec::new(),
        v: vec![Vec::new(); d],
        grad: vec![Vec::new(); d],
    };
    for q in -1..=grid.q_max() {
        let m = grid.block_multiplier(q).expect("in range");
        out.varrho.push(norm(r, m, None));
        for j in 0..d {
            out.v[j].push(norm(state.v.component(j).spectrum(), m, None));
            out.grad[j].push(norm(r, m, Some(grid.wavenumbers(j))));
        }
    }
    out
}

/// Right-hand-side integrals of the block identity at one instant, per block.
fn identity_terms<T: Real>(state: &EulerState<T>, c: T) -> Result<Vec<[f64; 6]>> {
    let grid = state.grid();
    let d = grid.dim();
    let cf = c.as_f64();
    let pad = |f: &Field<T>| f.to_padded();
    let v: Vec<Vec<T>> = state.v.components().iter().map(pad).collect();
    let r = pad(&state.varrho);
    let grad_r_f: Vec<Field<T>> = (0..d).map(|j| state.varrho.derivative(j)).collect();
    let grad_r: Vec<Vec<T>> = grad_r_f.iter().map(pad).collect();
    let div_f = state.v.divergence()?;
    let div = pad(&div_f);
    let grad_v_f: Vec<Vec<Field<T>>> = (0..d)
        .map(|i| (0..d).map(|j| state.v.component(i).derivative(j)).collect())
        .collect();
    let grad_v: Vec<Vec<Vec<T>>> = grad_v_f
        .iter()
        .map(|row| row.iter().map(pad).collect())
        .collect();

    let dealiased = |terms: &[(&[T], &[T])]| {
        let mut acc = PaddedSum::new(grid);
        for (a, b) in terms {
            acc.add_product(a, b, T::one());
        }
        acc.finish()
    };
    // P(v·∇ϱ), P(v·∇v_i), P(ϱ ∂_j ϱ), P(ϱ div v).
    let x_r = dealiased(
        &(0..d)
            .map(|j| (&v[j][..], &grad_r[j][..]))
            .collect::<Vec<_>>(),
    );
    let x_v: Vec<Field<T>> = (0..d)
        .map(|i| {
            dealiased(
                &(0..d)
                    .map(|j| (&v[j][..], &grad_v[i][j][..]))
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let y: Vec<Field<T>> = (0..d)
        .map(|j| dealiased(&[(&r[..], &grad_r[j][..])]))
        .collect();
    let z = dealiased(&[(&r[..], &div[..])]);

    let r_hat = state.varrho.spectrum();
    let v_hat: Vec<&[Complex<T>]> = state.v.components().iter().map(|f| f.spectrum()).collect();

    (-1..=grid.q_max())
        .into_par_iter()
        .map(|q| {
            let m = grid.block_multiplier(q)?;
            let blk = |f: &Field<T>| padded_from_spectrum(grid, f.spectrum(), Some(m));
            let b_r = blk(&state.varrho);
            let b_v: Vec<Vec<T>> = state.v.components().iter().map(blk).collect();
            let b_gr: Vec<Vec<T>> = grad_r_f.iter().map(blk).collect();
            let b_div = blk(&div_f);

            let mut t = [0.0; 6];
            t[0] = 0.5 * triple(grid, &div, &b_r, &b_r)
                + 0.5
                    * (0..d)
                        .map(|i| triple(grid, &div, &b_v[i], &b_v[i]))
                        .sum::<f64>();
            t[1] = (0..d)
                .map(|j| triple(grid, &v[j], &b_gr[j], &b_r))
                .sum::<f64>()
                - pairing(grid, x_r.spectrum(), r_hat, m);
            for i in 0..d {
                let b_gvi: Vec<Vec<T>> = grad_v_f[i].iter().map(blk).collect();
                t[2] += (0..d)
                    .map(|j| triple(grid, &v[j], &b_gvi[j], &b_v[i]))
                    .sum::<f64>()
                    - pairing(grid, x_v[i].spectrum(), v_hat[i], m);
            }
            t[3] = cf
                * (0..d)
                    .map(|j| triple(grid, &b_r, &grad_r[j], &b_v[j]))
                    .sum::<f64>();
            t[4] = cf
                * (0..d)
                    .map(|j| {
                        triple(grid, &r, &b_gr[j], &b_v[j])
                            - pairing(grid, y[j].spectrum(), v_hat[j], m)
                    })
                    .sum::<f64>();
            t[5] = cf * (triple(grid, &r, &b_div, &b_r) - pairing(grid, z.spectrum(), r_hat, m));
            Ok(t)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler::{InitialData, Solver};
    use std::f64::consts::PI;

    #[test]
    fn zero_trajectory_has_zero_ledger() {
        let g = TorusGrid::<f64>::new(2, 16, 2.0 * PI).unwrap();
        let cfg = RelaxConfig::default();
        let mut s = EulerState::equilibrium(&g);
        let mut traj = vec![s.clone()];
        s.t = 0.1;
        traj.push(s);
        let ledger = energy_budget(&traj, &cfg).unwrap();
        assert!(ledger.besov_norm.iter().all(|&x| x == 0.0));
        assert!(ledger
            .rhs_terms
            .iter()
            .flatten()
            .flatten()
            .all(|&x| x == 0.0));
        assert_eq!(ledger.functional().total(), 0.0);
        assert!(ledger
            .identity_residual()
            .unwrap()
            .iter()
            .flatten()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn besov_entry_matches_besov_module() {
        use crate::besov::{besov_norm, besov_norm_vector, BesovIndex};
        let g = TorusGrid::<f64>::new(2, 32, 2.0 * PI).unwrap();
        let cfg = RelaxConfig::default();
        let s = InitialData::default().state(&g, &cfg).unwrap();
        let mut ledger = EnergyLedger::new(&cfg, g.q_max());
        ledger.record(&s, false).unwrap();
        let idx = BesovIndex::critical(2);
        let direct = besov_norm(&s.varrho, &idx) + besov_norm_vector(&s.v, &idx);
        assert!((ledger.initial_norm() - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn one_small_step_closes_the_identity() {
        let g = TorusGrid::<f64>::new(2, 32, 2.0 * PI).unwrap();
        let cfg = RelaxConfig {
            tau: 0.25,
            ..RelaxConfig::default()
        };
        let s0 = InitialData {
            epsilon: 0.05,
            ..InitialData::default()
        }
        .state(&g, &cfg)
        .unwrap();
        let s1 = Solver::new(&cfg, &g).unwrap().step(&s0, 1e-3).unwrap();
        let ledger = energy_budget(&[s0, s1], &cfg).unwrap();
        let res = ledger.identity_residual().unwrap();
        let work: f64 = ledger.dissipation[0].iter().sum::<f64>() * 1e-3;
        for r in &res[1] {
            assert!(r.abs() < 1e-5 * work, "{r} vs {work}");
        }
    }
}
