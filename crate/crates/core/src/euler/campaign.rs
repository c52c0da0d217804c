//! Whole-run drivers shared by the command line and the test suites.

use serde::{Deserialize, Serialize};

use super::{EnergyLedger, FunctionalParts, InitialData, RelaxConfig, Solver};
use crate::error::{Error, Result};
use crate::fit::richardson_order;
use crate::spectral::TorusGrid;

/// The energy functional of one run, normalized by the initial norm.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FunctionalRun {
    pub tau: f64,
    pub horizon: f64,
    pub parts: FunctionalParts,
    pub initial_norm: f64,
    /// `parts.total() / initial_norm`.
    pub ratio: f64,
    pub steps: usize,
}

/// Integrates `data` to `cfg.t_final`, recording block norms after every step.
pub fn functional_run(
    cfg: &RelaxConfig,
    grid: &TorusGrid<f64>,
    data: &InitialData,
) -> Result<FunctionalRun> {
    let state = data.state(grid, cfg)?;
    let mut solver = Solver::new(cfg, grid)?;
    let mut ledger = EnergyLedger::new(cfg, grid.q_max());
    solver.advance(&state, cfg.t_final, |s| ledger.record(s, false))?;
    let parts = ledger.functional();
    let initial_norm = ledger.initial_norm();
    if !(initial_norm > 0.0) {
        return Err(Error::Contract(
            "initial data vanish; the ratio is undefined".into(),
        ));
    }
    Ok(FunctionalRun {
        tau: cfg.tau,
        horizon: cfg.t_final,
        ratio: parts.total() / initial_norm,
        parts,
        initial_norm,
        steps: solver.steps(),
    })
}

/// Final-time residual of the block identity under step refinement.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct IdentityRefinement {
    pub horizon: f64,
    pub steps: Vec<usize>,
    /// Signed residual at the horizon, `[level][q + 1]`.
    pub residual: Vec<Vec<f64>>,
    /// Observed order for each consecutive triple of levels, `[triple][q + 1]`.
    pub orders: Vec<Vec<f64>>,
}

impl IdentityRefinement {
    pub fn order_range(&self) -> (f64, f64) {
        self.orders
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &o| {
                (lo.min(o), hi.max(o))
            })
    }
}

/// Runs with `n, 2n, 4n, …` uniform steps up to `horizon` and tracks the identity.
pub fn identity_refinement(
    cfg: &RelaxConfig,
    grid: &TorusGrid<f64>,
    data: &InitialData,
    horizon: f64,
    coarsest_steps: usize,
    levels: usize,
) -> Result<IdentityRefinement> {
    if levels < 3 || coarsest_steps == 0 {
        return Err(Error::Config(
            "refinement needs at least three levels and one step".into(),
        ));
    }
    let steps: Vec<usize> = (0..levels).map(|l| coarsest_steps << l).collect();
    let residual = steps
        .iter()
        .map(|&n| {
            let run_cfg = RelaxConfig {
                dt: horizon / n as f64,
                t_final: horizon,
                resolve_layer: false,
                ..cfg.clone()
            };
            let state = data.state(grid, &run_cfg)?;
            let mut solver = Solver::new(&run_cfg, grid)?;
            let mut ledger = EnergyLedger::new(&run_cfg, grid.q_max());
            solver.advance(&state, horizon, |s| ledger.record(s, true))?;
            Ok(ledger.identity_residual()?.pop().unwrap_or_default())
        })
        .collect::<Result<Vec<_>>>()?;
    let orders = residual
        .windows(3)
        .map(|w| {
            (0..w[0].len())
                .map(|i| richardson_order(w[0][i], w[1][i], w[2][i]))
                .collect()
        })
        .collect();
    Ok(IdentityRefinement {
        horizon,
        steps,
        residual,
        orders,
    })
}
