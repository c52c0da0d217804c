//! Constants frozen from reference runs, shipped with the crate.
//!
//! `energy_functional_constant` is the geometric mean of the smallest and
//! largest normalized energy functional over `τ = 2^-1..2^-6` (default data,
//! `N = 64`, `d = 2`, horizon 2). `relax_uniform_bound` covers both uniform
//! diagnostics of the default sweep with 10% headroom. Commutator entries are
//! the fitted constants of the default ensemble at `N = 64`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Golden {
    pub cutoff_chi_at_one: f64,
    pub energy_functional_constant: f64,
    pub relax_uniform_bound: f64,
    pub commutator_n64: BTreeMap<String, f64>,
}

const SOURCE: &str = include_str!("../golden/constants.json");

pub fn golden() -> &'static Golden {
    static CELL: OnceLock<Golden> = OnceLock::new();
    CELL.get_or_init(|| serde_json::from_str(SOURCE).expect("embedded constants parse"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_constants_load() {
        let g = golden();
        assert!(g.energy_functional_constant > 1.0);
        assert_eq!(g.commutator_n64.len(), 5);
    }
}
