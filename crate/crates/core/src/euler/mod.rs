//! Relaxed compressible Euler equations in symmetrized variables.
//!
//! With `ψ(ρ) = √P′(ρ)` and `ϱ = 2/(γ−1)·(ψ(ρ) − ψ̄)` (logarithmic for
//! `γ = 1`) the system for `(ϱ, v)` reads
//!
//! ```text
//! ∂_t ϱ + ψ̄ div v       = −v·∇ϱ − (γ−1)/2 · ϱ div v
//! ∂_t v + ψ̄ ∇ϱ + v / τ  = −v·∇v − (γ−1)/2 · ϱ ∇ϱ
//! ```
//!
//! The linear part is integrated exactly mode by mode, the quadratic part by
//! SSP-RK3, combined by Strang splitting.

mod campaign;
mod dispersion;
mod ledger;
mod stepper;

pub use campaign::{functional_run, identity_refinement, FunctionalRun, IdentityRefinement};
pub use dispersion::{dispersion_roots, measure_dispersion, DispersionReport};
pub use ledger::{energy_budget, EnergyLedger, FunctionalParts, RHS_TERM_NAMES};
pub use stepper::{rhs, step, LinearPropagator, Solver, Tendency};

use serde::{Deserialize, Serialize};

use crate::ensemble::GaussianEnsemble;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{Field, TorusGrid, VectorField};

/// Physical and numerical parameters of one Euler run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelaxConfig {
    /// Relaxation time, `0 < τ ≤ 1`.
    pub tau: f64,
    /// Adiabatic exponent, `γ ≥ 1`.
    pub gamma: f64,
    /// `A` in `P(ρ) = Aρ^γ`.
    pub pressure_constant: f64,
    pub rho_bar: f64,
    pub dim: usize,
    /// Largest time step.
    pub dt: f64,
    pub t_final: f64,
    /// Evaluate quadratic terms on the padded grid.
    pub dealias: bool,
    /// Courant number for `dt ≤ cfl·Δx/(ψ̄ + max|v|)`.
    pub cfl: f64,
    /// Shift the mean of `ϱ` after each step so that `∫ρ` is conserved.
    pub mass_fix: bool,
    /// Cap the step at `τ/8` while `t < 5τ`.
    pub resolve_layer: bool,
    /// Permit `d = 1` (outside the small-data theory; for debugging).
    pub allow_one_dim: bool,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        Self {
            tau: 0.5,
            gamma: 1.4,
            pressure_constant: 1.0,
            rho_bar: 1.0,
            dim: 2,
            dt: 0.02,
            t_final: 2.0,
            dealias: true,
            cfl: 0.5,
            mass_fix: true,
            resolve_layer: false,
            allow_one_dim: false,
        }
    }
}

impl RelaxConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad(format!("tau = {} not in (0, 1]", self.tau));
        }
        if !(self.gamma >= 1.0 && self.gamma.is_finite()) {
            return bad(format!("gamma = {} must be >= 1", self.gamma));
        }
        if !(self.pressure_constant > 0.0 && self.pressure_constant.is_finite()) {
            return bad(format!(
                "pressure constant {} must be > 0",
                self.pressure_constant
            ));
        }
        if !(self.rho_bar > 0.0 && self.rho_bar.is_finite()) {
            return bad(format!("reference density {} must be > 0", self.rho_bar));
        }
        match self.dim {
            2 | 3 => {}
            1 if self.allow_one_dim => {}
            d => {
                return bad(format!(
                    "dimension {d} unsupported (2 or 3; 1 needs allow_one_dim)"
                ))
            }
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be > 0", self.dt));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final = {} must be >= 0", self.t_final));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl = {} not in (0, 1]", self.cfl));
        }
        Ok(())
    }

    /// Background sound speed `ψ̄ = √(Aγ)·ρ̄^{(γ−1)/2}`.
    pub fn psi_bar(&self) -> f64 {
        (self.pressure_constant * self.gamma).sqrt() * self.rho_bar.powf((self.gamma - 1.0) / 2.0)
    }

    /// `(γ−1)/2`.
    pub fn coupling(&self) -> f64 {
        (self.gamma - 1.0) / 2.0
    }

    /// Critical regularity `σ = 1 + d/2`.
    pub fn sigma(&self) -> f64 {
        1.0 + self.dim as f64 / 2.0
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        self.pressure_constant * rho.powf(self.gamma)
    }

    /// `P′(ρ) = Aγρ^{γ−1}`.
    pub fn pressure_slope(&self, rho: f64) -> f64 {
        self.pressure_constant * self.gamma * rho.powf(self.gamma - 1.0)
    }
}

/// `ϱ` as a pointwise function of `ρ`.
pub fn symmetrize_value(rho: f64, cfg: &RelaxConfig) -> f64 {
    if cfg.gamma == 1.0 {
        cfg.pressure_constant.sqrt() * (rho / cfg.rho_bar).ln()
    } else {
        let psi = (cfg.pressure_constant * cfg.gamma).sqrt() * rho.powf((cfg.gamma - 1.0) / 2.0);
        (psi - cfg.psi_bar()) / cfg.coupling()
    }
}

/// Inverse of [`symmetrize_value`]; `NaN` outside the physical range.
pub fn desymmetrize_value(varrho: f64, cfg: &RelaxConfig) -> f64 {
    if cfg.gamma == 1.0 {
        cfg.rho_bar * (varrho / cfg.pressure_constant.sqrt()).exp()
    } else {
        let psi = cfg.psi_bar() + cfg.coupling() * varrho;
        if psi <= 0.0 {
            return f64::NAN;
        }
        (psi / (cfg.pressure_constant * cfg.gamma).sqrt()).powf(2.0 / (cfg.gamma - 1.0))
    }
}

/// Maps a density field to the symmetrized variable `ϱ`.
pub fn symmetrize<T: Real>(rho: &Field<T>, cfg: &RelaxConfig) -> Result<Field<T>> {
    if let Some(i) = rho.samples().iter().position(|&r| !(r > T::zero())) {
        return Err(Error::Domain(format!(
            "density {} at sample {i} is not positive",
            rho.samples()[i]
        )));
    }
    let samples = rho
        .samples()
        .iter()
        .map(|&r| T::of(symmetrize_value(r.as_f64(), cfg)))
        .collect();
    Field::new(rho.grid(), samples)
}

/// Recovers `ρ` from `ϱ`; fails where `(γ−1)/2·ϱ + ψ̄ ≤ 0`.
pub fn desymmetrize<T: Real>(varrho: &Field<T>, cfg: &RelaxConfig) -> Result<Field<T>> {
    let samples: Vec<T> = varrho
        .samples()
        .iter()
        .map(|&s| T::of(desymmetrize_value(s.as_f64(), cfg)))
        .collect();
    if let Some(i) = samples.iter().position(|r| !r.is_finite()) {
        return Err(Error::Domain(format!(
            "ϱ = {} at sample {i} lies beyond vacuum",
            varrho.samples()[i]
        )));
    }
    Field::new(varrho.grid(), samples)
}

/// Solution snapshot in symmetrized variables.
#[derive(Clone, Debug)]
pub struct EulerState<T: Real> {
    pub varrho: Field<T>,
    pub v: VectorField<T>,
    pub t: T,
}

impl<T: Real> EulerState<T> {
    /// The constant state `(ϱ, v) = (0, 0)`.
    pub fn equilibrium(grid: &TorusGrid<T>) -> Self {
        Self {
            varrho: Field::zeros(grid),
            v: VectorField::zeros(grid),
            t: T::zero(),
        }
    }

    pub fn new(varrho: Field<T>, v: VectorField<T>) -> Result<Self> {
        if v.len() != varrho.grid().dim() {
            return Err(Error::Contract(format!(
                "velocity has {} components in dimension {}",
                v.len(),
                varrho.grid().dim()
            )));
        }
        varrho.grid().ensure_same(v.grid())?;
        Ok(Self {
            varrho,
            v,
            t: T::zero(),
        })
    }

    /// State from physical density and velocity.
    pub fn from_density(rho: &Field<T>, v: VectorField<T>, cfg: &RelaxConfig) -> Result<Self> {
        Self::new(symmetrize(rho, cfg)?, v)
    }

    pub fn grid(&self) -> &TorusGrid<T> {
        self.varrho.grid()
    }

    pub fn density(&self, cfg: &RelaxConfig) -> Result<Field<T>> {
        desymmetrize(&self.varrho, cfg)
    }

    /// Smallest local sound speed `(γ−1)/2·ϱ + ψ̄`.
    pub fn min_sound_speed(&self, cfg: &RelaxConfig) -> T {
        if cfg.gamma == 1.0 {
            return T::of(cfg.psi_bar());
        }
        T::of(cfg.coupling()) * self.varrho.min() + T::of(cfg.psi_bar())
    }

    pub fn is_finite(&self) -> bool {
        self.varrho.is_finite() && self.v.is_finite()
    }
}

/// Small perturbation of the constant state supported in the shells `q ≤ 3`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitialData {
    pub epsilon: f64,
    pub seed: u64,
    /// Spectral decay of the random perturbations.
    pub decay: f64,
    /// Draw a velocity perturbation as well as a density one.
    pub with_velocity: bool,
}

impl Default for InitialData {
    fn default() -> Self {
        Self {
            epsilon: 1e-2,
            seed: 1729,
            decay: 2.1,
            with_velocity: true,
        }
    }
}

/// Highest shell the initial perturbation may touch.
pub const INITIAL_TOP_SHELL: i32 = 3;

impl InitialData {
    /// Largest integer mode per axis keeping `|k| < 3/4·2^{top+1}`.
    pub fn band<T: Real>(grid: &TorusGrid<T>) -> usize {
        let unit = 2.0 * std::f64::consts::PI / grid.length().as_f64();
        let radius = 0.75 * 2f64.powi(INITIAL_TOP_SHELL + 1);
        let per_axis = radius / (unit * (grid.dim() as f64).sqrt());
        (per_axis.ceil() as usize)
            .saturating_sub(1)
            .min(grid.side() / 2 - 1)
    }

    /// `ρ₀ = ρ̄(1 + ε f)`, `v₀ = ε g` with unit-RMS band-limited `f`, `g`.
    pub fn physical<T: Real>(
        &self,
        grid: &TorusGrid<T>,
        cfg: &RelaxConfig,
    ) -> Result<(Field<T>, VectorField<T>)> {
        let ens = GaussianEnsemble {
            seed: self.seed,
            members: 1,
            band: Self::band(grid),
            decay: self.decay,
            rms: 1.0,
        };
        let eps = T::of(self.epsilon);
        let rho_bar = T::of(cfg.rho_bar);
        let rho = ens.field(grid, 0)?.map(|f| rho_bar * (T::one() + eps * f));
        let v = if self.with_velocity {
            ens.vector(grid, 0)?.scale(eps)
        } else {
            VectorField::zeros(grid)
        };
        Ok((rho, v))
    }

    /// Symmetrized initial state (band-projected `ϱ₀`).
    pub fn state<T: Real>(&self, grid: &TorusGrid<T>, cfg: &RelaxConfig) -> Result<EulerState<T>> {
        let (rho, v) = self.physical(grid, cfg)?;
        EulerState::new(symmetrize(&rho, cfg)?.project(), v)
    }
}
