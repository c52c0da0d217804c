//! Diffusive relaxation limit: Euler runs in the slow time `s = τt` compared
//! against the porous medium equation started from the same density.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::besov::{besov_norm, besov_norm_vector, time_norm, BesovIndex};
use crate::error::{Error, Result};
use crate::euler::{desymmetrize_value, EulerState, InitialData, RelaxConfig, Solver};
use crate::fit::log_log_slope;
use crate::pme::{default_ds, PmeSolver, PmeState};
use crate::spectral::{Field, TorusGrid, VectorField};

/// Parameters of a τ-sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    /// Strictly decreasing relaxation times in `(0, 1]`.
    pub taus: Vec<f64>,
    /// Slow-time horizon `S`.
    pub horizon: f64,
    /// Spacing of the comparison instants in slow time.
    pub output_interval: f64,
    /// Regularity loss `δ` of the comparison norm `B^{σ−δ}_{2,1}`.
    pub delta: f64,
    pub grid_n: usize,
    pub length: f64,
    /// Largest number of Euler steps one τ run may take.
    pub step_budget: usize,
    pub data: InitialData,
    /// Physical constants and step controls shared by every run.
    pub euler: RelaxConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            taus: (1..=7).map(|k| 2f64.powi(-k)).collect(),
            horizon: 1.0,
            output_interval: 0.05,
            delta: 0.5,
            grid_n: 64,
            length: 2.0 * std::f64::consts::PI,
            step_budget: 200_000,
            data: InitialData::default(),
            euler: RelaxConfig {
                dt: 0.035,
                resolve_layer: true,
                ..RelaxConfig::default()
            },
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.taus.is_empty() {
            return Err(Error::Config("empty τ list".into()));
        }
        if self.taus.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return Err(Error::Config(format!(
                "τ values {:?} must lie in (0, 1]",
                self.taus
            )));
        }
        if self.taus.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config(format!(
                "τ values {:?} must strictly decrease",
                self.taus
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("δ = {} not in (0, 1)", self.delta)));
        }
        if !(self.horizon > 0.0 && self.output_interval > 0.0) {
            return Err(Error::Config(
                "horizon and output interval must be > 0".into(),
            ));
        }
        let intervals = self.horizon / self.output_interval;
        if (intervals - intervals.round()).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "output interval {} does not divide horizon {}",
                self.output_interval, self.horizon
            )));
        }
        self.euler.validate()
    }

    pub fn grid(&self) -> Result<TorusGrid<f64>> {
        TorusGrid::new(self.euler.dim, self.grid_n, self.length)
    }

    /// Comparison instants `0, Δs, …, S`.
    pub fn output_times(&self) -> Vec<f64> {
        let n = (self.horizon / self.output_interval).round() as usize;
        (0..=n)
            .map(|j| self.horizon * j as f64 / n as f64)
            .collect()
    }

    fn euler_for(&self, tau: f64) -> RelaxConfig {
        RelaxConfig {
            tau,
            t_final: self.horizon / tau,
            ..self.euler.clone()
        }
    }
}

/// Shared initial state `(ρ₀, v₀)`; `ρ₀` is recovered from the projected `ϱ₀`.
pub fn initial_state(cfg: &SweepConfig, grid: &TorusGrid<f64>) -> Result<EulerState<f64>> {
    cfg.data.state(grid, &cfg.euler)
}

/// Euler run reindexed to slow time.
#[derive(Clone, Debug)]
pub struct ScaledRun {
    pub tau: f64,
    /// Slow comparison instants reached.
    pub s: Vec<f64>,
    /// `ρ^τ(s, ·)`.
    pub rho: Vec<Field<f64>>,
    pub v: Vec<VectorField<f64>>,
    /// `ρ^τ v^τ / τ`.
    pub flux: Vec<VectorField<f64>>,
    /// `sup_s ‖ρ^τ − ρ̄‖_{B^σ_{2,1}}` over every step.
    pub density_bound: f64,
    /// `(∫ ‖ρ^τ v^τ/τ‖²_{B^σ_{2,1}} ds)^{1/2}` over every step.
    pub flux_bound: f64,
    /// `‖ρ^τ v^τ/τ + ∇P(ρ^τ)‖_{L²((0,S)×T^d)}`.
    pub flux_balance: f64,
    /// `sup_s ‖∫_0^s (ρ^τ v^τ/τ + ∇P(ρ^τ)) ds′‖_{L²}`.
    pub flux_balance_weak: f64,
    pub steps: usize,
    /// Set when the step budget ran out before the horizon.
    pub partial: bool,
}

struct StepDiagnostics {
    s: f64,
    density: f64,
    flux_sq: f64,
    balance: VectorField<f64>,
}

fn diagnostics(
    state: &EulerState<f64>,
    cfg: &RelaxConfig,
    idx: &BesovIndex<f64>,
) -> Result<(Field<f64>, VectorField<f64>, StepDiagnostics)> {
    let rho = state.density(cfg)?;
    let rho_bar = cfg.rho_bar;
    let rho_smooth = state.varrho.map_dealiased(|x| desymmetrize_value(x, cfg));
    let pressure = state
        .varrho
        .map_dealiased(|x| cfg.pressure(desymmetrize_value(x, cfg)));
    let flux = state.v.scaled_by(&rho_smooth)?.scale(1.0 / cfg.tau);
    let balance = &flux + &pressure.gradient();
    let density = besov_norm(&rho.map(|x| x - rho_bar), idx);
    let flux_norm = besov_norm_vector(&flux, idx);
    Ok((
        rho,
        flux,
        StepDiagnostics {
            s: cfg.tau * state.t,
            density,
            flux_sq: flux_norm * flux_norm,
            balance,
        },
    ))
}

/// Integrates the Euler system to fast time `S/τ` and samples it at the slow instants.
pub fn run_scaled(tau: f64, cfg: &SweepConfig, grid: &TorusGrid<f64>) -> Result<ScaledRun> {
    cfg.validate()?;
    let ecfg = cfg.euler_for(tau);
    ecfg.validate()?;
    let idx = BesovIndex::critical(grid.dim());
    let mut solver = Solver::new(&ecfg, grid)?;
    let mut state = initial_state(cfg, grid)?;

    let mut out = ScaledRun {
        tau,
        s: Vec::new(),
        rho: Vec::new(),
        v: Vec::new(),
        flux: Vec::new(),
        density_bound: 0.0,
        flux_bound: 0.0,
        flux_balance: 0.0,
        flux_balance_weak: 0.0,
        steps: 0,
        partial: false,
    };
    let mut prev: Option<StepDiagnostics> = None;
    let mut flux_integral = 0.0;
    let mut balance_sq_integral = 0.0;
    let mut balance_running = VectorField::zeros(grid);

    let mut absorb = |st: &EulerState<f64>, keep: bool, out: &mut ScaledRun| -> Result<()> {
        let (rho, flux, diag) = diagnostics(st, &ecfg, &idx)?;
        out.density_bound = out.density_bound.max(diag.density);
        if let Some(p) = &prev {
            let h = diag.s - p.s;
            flux_integral += 0.5 * h * (p.flux_sq + diag.flux_sq);
            balance_sq_integral +=
                0.5 * h * (p.balance.inner(&p.balance) + diag.balance.inner(&diag.balance));
            balance_running = balance_running
                .axpy(0.5 * h, &p.balance)
                .axpy(0.5 * h, &diag.balance);
            out.flux_balance_weak = out.flux_balance_weak.max(balance_running.energy_norm());
        }
        if keep {
            out.s.push(diag.s);
            out.rho.push(rho);
            out.v.push(st.v.clone());
            out.flux.push(flux);
        }
        prev = Some(diag);
        Ok(())
    };

    absorb(&state, true, &mut out)?;
    let times = cfg.output_times();
    'outer: for &s_target in &times[1..] {
        let t_target = s_target / tau;
        loop {
            let t = state.t;
            let remaining = t_target - t;
            if remaining <= 1e-12 * t_target.max(1.0) {
                break;
            }
            if out.steps >= cfg.step_budget {
                out.partial = true;
                break 'outer;
            }
            let mut h = solver.scheduled_dt(t).min(remaining);
            if remaining - h < 1e-9 * h {
                h = remaining;
            }
            state = solver.step(&state, h)?;
            out.steps += 1;
            let at_output = (t_target - state.t).abs() <= 1e-12 * t_target.max(1.0);
            if at_output {
                state.t = t_target;
            }
            absorb(&state, at_output, &mut out)?;
        }
    }
    out.flux_bound = flux_integral.sqrt();
    out.flux_balance = balance_sq_integral.sqrt();
    Ok(out)
}

/// Porous medium reference at the slow instants.
#[derive(Clone, Debug)]
pub struct PmeReference {
    pub s: Vec<f64>,
    pub n: Vec<Field<f64>>,
    /// `sup_s ‖N(s) − ρ̄‖_{B^σ_{2,1}}`.
    pub density_bound: f64,
}

pub fn pme_reference(cfg: &SweepConfig, grid: &TorusGrid<f64>) -> Result<PmeReference> {
    cfg.validate()?;
    let rho0 = initial_state(cfg, grid)?.density(&cfg.euler)?;
    let mut solver = PmeSolver::new(&cfg.euler, grid)?;
    let ds = default_ds(&cfg.euler, grid);
    let idx = BesovIndex::critical(grid.dim());
    let rho_bar = cfg.euler.rho_bar;
    let mut state = PmeState::new(rho0)?;
    let mut out = PmeReference {
        s: vec![0.0],
        n: vec![state.n.clone()],
        density_bound: 0.0,
    };
    let mut bound = besov_norm(&state.n.map(|x| x - rho_bar), &idx);
    for &s in &cfg.output_times()[1..] {
        state = solver.advance(&state, s, ds, |st| {
            bound = bound.max(besov_norm(&st.n.map(|x| x - rho_bar), &idx));
        })?;
        out.s.push(s);
        out.n.push(state.n.clone());
    }
    out.density_bound = bound;
    Ok(out)
}

/// Error curve and bounds of one τ.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TauSummary {
    pub tau: f64,
    pub errors: Vec<f64>,
    pub sup_error: f64,
    /// `sup_s ‖ρ^τ − ρ̄‖_{B^σ_{2,1}} / ‖(ρ₀ − ρ̄, v₀)‖_{B^σ_{2,1}}`.
    pub density_ratio: f64,
    /// `‖ρ^τ v^τ/τ‖_{L²_s(B^σ_{2,1})} / ‖(ρ₀ − ρ̄, v₀)‖_{B^σ_{2,1}}`.
    pub flux_ratio: f64,
    pub flux_balance: f64,
    pub flux_balance_weak: f64,
    pub steps: usize,
    pub partial: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ConvergenceReport {
    pub s: Vec<f64>,
    pub delta: f64,
    pub initial_norm: f64,
    pub per_tau: Vec<TauSummary>,
    /// Least-squares slope of `ln sup e_τ` against `ln τ` (reported, not asserted).
    pub fitted_order: f64,
    /// `sup_s ‖N(s) − ρ̄‖_{B^σ_{2,1}} / ‖(ρ₀ − ρ̄, v₀)‖_{B^σ_{2,1}}`.
    pub pme_ratio: f64,
}

impl ConvergenceReport {
    pub fn sup_errors(&self) -> Vec<f64> {
        self.per_tau.iter().map(|t| t.sup_error).collect()
    }

    /// Whether the sup errors strictly decrease along the τ list.
    pub fn strictly_decreasing(&self) -> bool {
        self.sup_errors().windows(2).all(|w| w[1] < w[0])
    }

    /// `sup e` of the last τ over that of the first.
    pub fn final_over_initial(&self) -> f64 {
        let e = self.sup_errors();
        match (e.first(), e.last()) {
            (Some(&a), Some(&b)) if a > 0.0 => b / a,
            _ => 0.0,
        }
    }

    pub fn max_density_ratio(&self) -> f64 {
        self.per_tau
            .iter()
            .map(|t| t.density_ratio)
            .fold(0.0, f64::max)
    }

    pub fn max_flux_ratio(&self) -> f64 {
        self.per_tau
            .iter()
            .map(|t| t.flux_ratio)
            .fold(0.0, f64::max)
    }

    /// Long-format rows `(τ, s, e_τ(s))`.
    pub fn long_rows(&self) -> Vec<(f64, f64, f64)> {
        self.per_tau
            .iter()
            .flat_map(|t| {
                self.s
                    .iter()
                    .zip(&t.errors)
                    .map(move |(&s, &e)| (t.tau, s, e))
            })
            .collect()
    }
}

/// Compares every run against the reference in `B^{σ−δ}_{2,1}`.
pub fn compare(
    runs: &[ScaledRun],
    reference: &PmeReference,
    cfg: &SweepConfig,
    initial: &EulerState<f64>,
) -> Result<ConvergenceReport> {
    let idx = BesovIndex::critical(cfg.euler.dim);
    let weak = idx.with_s(idx.s - cfg.delta);
    let rho_bar = cfg.euler.rho_bar;
    let rho0 = initial.density(&cfg.euler)?;
    let initial_norm =
        besov_norm(&rho0.map(|x| x - rho_bar), &idx) + besov_norm_vector(&initial.v, &idx);
    let scale = if initial_norm > 0.0 {
        initial_norm
    } else {
        1.0
    };
    let n0 = reference
        .n
        .first()
        .ok_or_else(|| Error::Contract("empty reference".into()))?;
    let tol = 1e-10 * n0.l2_norm().max(1.0);
    let mut per_tau = Vec::with_capacity(runs.len());
    for run in runs {
        let r0 = run
            .rho
            .first()
            .ok_or_else(|| Error::Contract(format!("τ = {} run is empty", run.tau)))?;
        if (r0 - n0).l2_norm() > tol {
            return Err(Error::Contract(format!(
                "τ = {}: initial density differs from the reference",
                run.tau
            )));
        }
        let errors: Vec<f64> = run
            .rho
            .iter()
            .zip(&reference.n)
            .map(|(r, n)| besov_norm(&(r - n), &weak))
            .collect();
        let sup_error = time_norm(&run.s, &errors, f64::INFINITY);
        per_tau.push(TauSummary {
            tau: run.tau,
            errors,
            sup_error,
            density_ratio: run.density_bound / scale,
            flux_ratio: run.flux_bound / scale,
            flux_balance: run.flux_balance,
            flux_balance_weak: run.flux_balance_weak,
            steps: run.steps,
            partial: run.partial,
        });
    }
    let taus: Vec<f64> = per_tau.iter().map(|t| t.tau).collect();
    let sups: Vec<f64> = per_tau.iter().map(|t| t.sup_error).collect();
    Ok(ConvergenceReport {
        s: reference.s.clone(),
        delta: cfg.delta,
        initial_norm,
        fitted_order: log_log_slope(&taus, &sups),
        pme_ratio: reference.density_bound / scale,
        per_tau,
    })
}

/// Runs every τ (in parallel) and the reference, then compares.
pub fn sweep(cfg: &SweepConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let initial = initial_state(cfg, &grid)?;
    let reference = pme_reference(cfg, &grid)?;
    let runs = cfg
        .taus
        .par_iter()
        .map(|&tau| run_scaled(tau, cfg, &grid))
        .collect::<Result<Vec<_>>>()?;
    compare(&runs, &reference, cfg, &initial)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepConfig {
        SweepConfig {
            taus: vec![0.5, 0.25],
            horizon: 0.2,
            output_interval: 0.1,
            grid_n: 16,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn validation() {
        assert!(SweepConfig::default().validate().is_ok());
        let mut c = small();
        c.taus = vec![0.25, 0.5];
        assert!(c.validate().is_err());
        let mut c = small();
        c.delta = 1.0;
        assert!(c.validate().is_err());
        let mut c = small();
        c.output_interval = 0.07;
        assert!(c.validate().is_err());
    }

    #[test]
    fn equilibrium_data_gives_zero_error() {
        let mut c = small();
        c.data.epsilon = 0.0;
        let r = sweep(&c).unwrap();
        assert!(r.sup_errors().iter().all(|&e| e == 0.0));
        assert_eq!(r.initial_norm, 0.0);
    }

    #[test]
    fn unit_tau_is_the_unscaled_run() {
        let mut c = small();
        c.taus = vec![1.0];
        let g = c.grid().unwrap();
        let run = run_scaled(1.0, &c, &g).unwrap();
        let ecfg = RelaxConfig {
            tau: 1.0,
            ..c.euler.clone()
        };
        let mut solver = Solver::new(&ecfg, &g).unwrap();
        let s0 = initial_state(&c, &g).unwrap();
        let mid = solver.advance(&s0, 0.1, |_| Ok(())).unwrap();
        let direct = solver.advance(&mid, 0.2, |_| Ok(())).unwrap();
        let rho = direct.density(&ecfg).unwrap();
        assert!((&rho - run.rho.last().unwrap()).l2_norm() < 1e-12);
        assert_eq!(run.s, vec![0.0, 0.1, 0.2]);
    }

    #[test]
    fn mismatched_reference_is_rejected() {
        let c = small();
        let g = c.grid().unwrap();
        let s0 = initial_state(&c, &g).unwrap();
        let run = run_scaled(0.5, &c, &g).unwrap();
        let mut reference = pme_reference(&c, &g).unwrap();
        reference.n[0] = reference.n[0].map(|x| x + 1e-3);
        assert!(matches!(
            compare(&[run], &reference, &c, &s0),
            Err(Error::Contract(_))
        ));
    }
}
