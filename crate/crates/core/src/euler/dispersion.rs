use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{EulerState, RelaxConfig, Solver};
use crate::error::{Error, Result};
use crate::spectral::{Field, TorusGrid, VectorField};

/// Roots of `λ² + λ/τ + ψ̄²|k|² = 0`, slow (or positive-frequency) root first.
pub fn dispersion_roots(tau: f64, psi_bar: f64, k: f64) -> [Complex<f64>; 2] {
    let b = 1.0 / tau;
    let a2 = psi_bar * psi_bar * k * k;
    let disc = b * b / 4.0 - a2;
    if disc >= 0.0 {
        let root = disc.sqrt();
        let fast = -b / 2.0 - root;
        [
            Complex::new(-a2 / (b / 2.0 + root), 0.0),
            Complex::new(fast, 0.0),
        ]
    } else {
        let w = (-disc).sqrt();
        [Complex::new(-b / 2.0, w), Complex::new(-b / 2.0, -w)]
    }
}

/// Measured against predicted linear rates of one Fourier mode.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DispersionReport {
    pub tau: f64,
    pub wavenumber: f64,
    pub amplitude: f64,
    /// `[re, im]` of the two predicted roots.
    pub predicted: [[f64; 2]; 2],
    pub measured: [[f64; 2]; 2],
    /// `|λ_measured − λ_predicted| / |λ_predicted|` per root.
    pub relative_error: [f64; 2],
}

impl DispersionReport {
    pub fn max_error(&self) -> f64 {
        self.relative_error[0].max(self.relative_error[1])
    }
}

fn order(mut roots: [Complex<f64>; 2]) -> [Complex<f64>; 2] {
    roots.sort_by(|x, y| {
        y.im.partial_cmp(&x.im)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(y.re.partial_cmp(&x.re).unwrap_or(std::cmp::Ordering::Equal))
    });
    roots
}

/// Runs the full solver from `ϱ₀ = amplitude·cos(k·x)`, `v₀ = 0` and fits the
/// two-dimensional linear map advancing `(ϱ̂_k, i k̂·v̂_k)` between snapshots.
pub fn measure_dispersion(
    cfg: &RelaxConfig,
    grid: &TorusGrid<f64>,
    mode: [i64; 3],
    amplitude: f64,
    steps: usize,
) -> Result<DispersionReport> {
    let d = grid.dim();
    let flat = grid
        .modes()
        .iter()
        .position(|m| m[..d] == mode[..d])
        .ok_or_else(|| Error::Contract(format!("mode {mode:?} not on the lattice")))?;
    if grid.is_nyquist(flat) || grid.radius()[flat] == 0.0 {
        return Err(Error::Contract(format!(
            "mode {mode:?} must be a nonzero non-Nyquist mode"
        )));
    }
    let k = grid.radius()[flat];
    let predicted = order(dispersion_roots(cfg.tau, cfg.psi_bar(), k));
    let fastest = predicted.iter().map(|l| l.norm()).fold(0.0, f64::max);

    let kvec: Vec<f64> = (0..d).map(|j| grid.wavenumbers(j)[flat]).collect();
    let rho = Field::from_fn(grid, |x| {
        amplitude * (0..d).map(|j| kvec[j] * x[j]).sum::<f64>().cos()
    });
    let state = EulerState::new(rho, VectorField::zeros(grid))?;
    let mut solver = Solver::new(cfg, grid)?;
    let h = (0.5 / fastest)
        .min(0.9 * solver.cfl_limit(&state))
        .min(cfg.dt);

    let mut samples: Vec<[f64; 2]> = Vec::with_capacity(steps + 1);
    let probe = |s: &EulerState<f64>| -> [f64; 2] {
        let r = s.varrho.spectrum()[flat];
        let u: Complex<f64> = (0..d)
            .map(|j| s.v.component(j).spectrum()[flat] * (kvec[j] / k))
            .sum();
        [r.re, (Complex::<f64>::i() * u).re]
    };
    let mut s = state;
    samples.push(probe(&s));
    for _ in 0..steps {
        s = solver.step(&s, h)?;
        samples.push(probe(&s));
    }

    // Least squares M = (Σ x_{n+1} x_nᵀ)(Σ x_n x_nᵀ)^{-1}.
    let mut a = [[0.0; 2]; 2];
    let mut g = [[0.0; 2]; 2];
    for w in samples.windows(2) {
        for i in 0..2 {
            for j in 0..2 {
                a[i][j] += w[1][i] * w[0][j];
                g[i][j] += w[0][i] * w[0][j];
            }
        }
    }
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    if det.abs() <= f64::MIN_POSITIVE {
        return Err(Error::NonFinite("degenerate mode history".into()));
    }
    let inv = [
        [g[1][1] / det, -g[0][1] / det],
        [-g[1][0] / det, g[0][0] / det],
    ];
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = a[i][0] * inv[0][j] + a[i][1] * inv[1][j];
        }
    }
    let tr = m[0][0] + m[1][1];
    let dt_m = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = Complex::new(tr * tr / 4.0 - dt_m, 0.0).sqrt();
    let mu = [tr / 2.0 + disc, tr / 2.0 - disc];
    let measured = order(mu.map(|z| z.ln() / h));

    let err = |i: usize| (measured[i] - predicted[i]).norm() / predicted[i].norm();
    Ok(DispersionReport {
        tau: cfg.tau,
        wavenumber: k,
        amplitude,
        predicted: predicted.map(|z| [z.re, z.im]),
        measured: measured.map(|z| [z.re, z.im]),
        relative_error: [err(0), err(1)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn roots_solve_the_quadratic() {
        for &(tau, psi, k) in &[(1.0, 1.2, 2.0), (0.01, 1.0, 1.0), (0.3, 0.0, 5.0)] {
            for l in dispersion_roots(tau, psi, k) {
                let p = l * l + l / tau + psi * psi * k * k;
                assert!(
                    p.norm() < 1e-9 * (1.0 / tau).powi(2),
                    "{tau} {psi} {k}: {p}"
                );
            }
        }
    }

    #[test]
    fn single_mode_rates() {
        let g = TorusGrid::new(2, 16, 2.0 * PI).unwrap();
        let cfg = RelaxConfig {
            tau: 0.125,
            ..RelaxConfig::default()
        };
        let r = measure_dispersion(&cfg, &g, [2, 1, 0], 1e-4, 120).unwrap();
        assert!(r.max_error() < 5e-3, "{r:?}");
    }
}
