//! Suite implementations. Each writes its tables into the run directory and
//! returns the asserted invariants.

use std::f64::consts::PI;
use std::path::Path;

use brlx::besov::{
    besov_norm, bochner_norm, chemin_lerner_norm, critical_regularity, embedding_constant,
    BesovIndex, NormTarget, TimeSeriesField,
};
use brlx::commutator::{
    six_term_residual, verify_critical_commutator, verify_critical_commutator_time,
    verify_general_commutator, verify_time_commutator, Clause, CommutatorExponents,
    CommutatorReport, Operator, SeriesPair, TimeSplit,
};
use brlx::ensemble::GaussianEnsemble;
use brlx::euler::{EnergyLedger, InitialData, RelaxConfig, Solver};
use brlx::fit::{EstimateReport, RefinementReport};
use brlx::golden::golden;
use brlx::io::{save_field, save_state};
use brlx::paraproduct::{
    bony_reconstruction_error, composition_estimate_check, product_estimate_check,
    remainder_estimate_check, sound_speed_perturbation, HolderSplit, RemainderExponents,
};
use brlx::pme::{default_ds, PmeSolver, PmeState};
use brlx::relax::{sweep, SweepConfig};
use brlx::report::{write_csv, write_dat, write_dat_blocks, write_json, Assertion};
use brlx::spectral::{check_almost_orthogonality, decompose, dyadic_block, partition_residual};
use brlx::spectral::{Field, TorusGrid};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::run::SuiteResult;
use crate::CliError;

/// Grid and ensemble shared by the verification suites.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct VerifyParams {
    pub grid_n: usize,
    pub dim: usize,
    pub length: f64,
    pub seed: u64,
    pub members: usize,
    /// Largest integer mode per axis of the ensemble.
    pub band: usize,
    /// Commutator suite only: tolerated relative change of a fitted constant
    /// when the grid is doubled.
    pub drift_tolerance: f64,
}

impl Default for VerifyParams {
    fn default() -> Self {
        Self {
            grid_n: 64,
            dim: 2,
            length: 2.0 * PI,
            seed: 1729,
            members: 20,
            band: 10,
            drift_tolerance: 0.1,
        }
    }
}

impl VerifyParams {
    pub fn spectral_default() -> Self {
        Self {
            grid_n: 128,
            ..Self::default()
        }
    }

    fn grid(&self) -> Result<TorusGrid<f64>, CliError> {
        Ok(TorusGrid::new(self.dim, self.grid_n, self.length)?)
    }

    fn ensemble(&self) -> GaussianEnsemble {
        GaussianEnsemble {
            seed: self.seed,
            members: self.members,
            band: self.band.min(self.grid_n / 2 - 1),
            ..GaussianEnsemble::default()
        }
    }
}

#[derive(Serialize)]
struct BlockRow {
    member: usize,
    q: i32,
    block_l2: f64,
    /// `‖∇Δ_q f‖ / (2^q ‖Δ_q f‖)`; zero for empty blocks.
    bernstein_ratio: f64,
}

pub fn verify_spectral(p: &VerifyParams, dir: &Path) -> Result<SuiteResult, CliError> {
    let g = p.grid()?;
    let partition = partition_residual(&g);
    let fields = p.ensemble().fields(&g)?;
    let (mut recon, mut ortho) = (0.0f64, 0.0f64);
    let (mut low, mut high) = (f64::INFINITY, 0.0f64);
    let mut rows = Vec::new();
    for (i, f) in fields.iter().enumerate() {
        recon = recon.max(decompose(f).reconstruct().relative_l2_error(f));
        let h = &fields[(i + 1) % fields.len()];
        let rep = check_almost_orthogonality(f, h)?;
        ortho = ortho
            .max(rep.block_products / f.l2_norm())
            .max(rep.paraproduct_leak / (f.sup_norm() * h.l2_norm()));
        for q in 0..=g.q_max() {
            let b = dyadic_block(f, q)?;
            let n = b.l2_norm();
            let mut r = 0.0;
            if n > 0.0 {
                r = b.gradient().l2_norm() / n / 2f64.powi(q);
                low = low.min(r);
                high = high.max(r);
            }
            rows.push(BlockRow {
                member: i,
                q,
                block_l2: n,
                bernstein_ratio: r,
            });
        }
    }
    write_csv(&dir.join("report.csv"), &rows)?;
    Ok(SuiteResult {
        assertions: vec![
            Assertion::at_most("partition_residual", partition, 1e-12),
            Assertion::at_most("reconstruction_residual", recon, 1e-12),
            Assertion::at_most("orthogonality_residual", ortho, 1e-10),
            Assertion::at_least("bernstein_lower", low, 0.75),
            Assertion::at_most("bernstein_upper", high, 8.0 / 3.0),
        ],
        extras: json!({ "q_max": g.q_max(), "members": fields.len() }),
    })
}

#[derive(Serialize)]
struct NormTableRow {
    member: usize,
    norm_name: &'static str,
    s: f64,
    p: f64,
    r: f64,
    /// Time exponent; empty for purely spatial norms.
    theta: Option<f64>,
    value: f64,
}

/// `Σ_q e^{-t 2^q} Δ_q f` on `[0, 1]`: each block decays at its own rate, so the
/// Chemin-Lerner and Bochner norms differ.
fn dyadic_decay(f: &Field<f64>, samples: usize) -> Result<TimeSeriesField<f64>, CliError> {
    let q_max = f.grid().q_max();
    let blocks = (-1..=q_max)
        .map(|q| dyadic_block(f, q))
        .collect::<Result<Vec<_>, _>>()?;
    let times: Vec<f64> = (0..samples)
        .map(|i| i as f64 / (samples - 1) as f64)
        .collect();
    let snapshots = times
        .iter()
        .map(|&t| {
            blocks
                .iter()
                .enumerate()
                .fold(Field::zeros(f.grid()), |acc, (i, b)| {
                    acc.axpy((-t * 2f64.powi(i as i32 - 1)).exp(), b)
                })
        })
        .collect();
    Ok(TimeSeriesField::new(times, snapshots)?)
}

pub fn verify_besov(p: &VerifyParams, dir: &Path) -> Result<SuiteResult, CliError> {
    let g = p.grid()?;
    let fields = p.ensemble().fields(&g)?;
    let sigma: f64 = critical_regularity(p.dim);
    let inf = f64::INFINITY;
    let indices = [
        BesovIndex::new(sigma, 2.0, 1.0)?,
        BesovIndex::new(sigma - 1.0, 2.0, 1.0)?,
        BesovIndex::new(sigma, 2.0, 2.0)?,
        BesovIndex::new(sigma, 2.0, inf)?,
        BesovIndex::new(0.0, inf, 1.0)?,
    ];
    let mut rows = Vec::new();
    let (mut r_monotone, mut triangle, mut homogeneity) = (true, true, 0.0f64);
    let mut minkowski = f64::INFINITY;
    for (m, f) in fields.iter().enumerate() {
        for idx in &indices {
            let value = besov_norm(f, idx);
            rows.push(NormTableRow {
                member: m,
                norm_name: "besov",
                s: idx.s,
                p: idx.p,
                r: idx.r,
                theta: None,
                value,
            });
        }
        let u = dyadic_decay(f, 21)?;
        let idx = &indices[0];
        for theta in [1.0, 2.0, inf] {
            let cl = chemin_lerner_norm(&u, idx, theta)?;
            let bo = bochner_norm(&u, idx, theta)?;
            // θ ≥ r = 1, so Minkowski puts the Chemin-Lerner norm above the Bochner one.
            minkowski = minkowski.min(cl / bo);
            for (norm_name, value) in [("chemin_lerner", cl), ("bochner", bo)] {
                rows.push(NormTableRow {
                    member: m,
                    norm_name,
                    s: idx.s,
                    p: idx.p,
                    r: idx.r,
                    theta: Some(theta),
                    value,
                });
            }
        }
        let n1 = besov_norm(f, &indices[0]);
        let n2 = besov_norm(f, &indices[2]);
        let ninf = besov_norm(f, &indices[3]);
        r_monotone &= n1 >= n2 * (1.0 - 1e-12) && n2 >= ninf * (1.0 - 1e-12);
        let h = &fields[(m + 1) % fields.len()];
        let sum = besov_norm(&f.axpy(1.0, h), &indices[0]);
        triangle &= sum <= (n1 + besov_norm(h, &indices[0])) * (1.0 + 1e-12);
        homogeneity =
            homogeneity.max((besov_norm(&f.scale(-2.5), &indices[0]) - 2.5 * n1).abs() / n1);
    }
    write_csv(&dir.join("report.csv"), &rows)?;
    let embed_source = BesovIndex::new(p.dim as f64 / 2.0, 2.0, 1.0)?;
    let embed = embedding_constant(&fields, &embed_source, &NormTarget::Lebesgue(inf))?;
    Ok(SuiteResult {
        assertions: vec![
            Assertion::holds(
                "summability_monotone",
                r_monotone,
                "r = 1 >= r = 2 >= r = inf",
            ),
            Assertion::holds("triangle_inequality", triangle, "on consecutive members"),
            Assertion::at_most("homogeneity_residual", homogeneity, 1e-12),
            Assertion::at_least("chemin_lerner_over_bochner", minkowski, 1.0 - 1e-12),
            Assertion::holds(
                "critical_embedding_finite",
                embed.is_finite() && embed > 0.0,
                format!("sup |f| / |f|_(d/2, 2, 1) = {embed:.6e}"),
            ),
        ],
        extras: json!({ "critical_embedding_constant": embed }),
    })
}

/// Bony residual and the remainder, product and composition fits on an `n`-grid.
/// The ensemble is drawn from `p`, so it is the same for every `n`.
fn paraproduct_fits(p: &VerifyParams, n: usize) -> Result<(f64, Vec<EstimateReport>), CliError> {
    let g = TorusGrid::new(p.dim, n, p.length)?;
    let ens = p.ensemble();
    let pairs = ens.pairs(&g)?;
    let mut bony = 0.0f64;
    for (f, h) in &pairs {
        bony = bony.max(bony_reconstruction_error(f, h)?);
    }
    let one = BesovIndex::new(1.0, 2.0, 1.0)?;
    let remainder = remainder_estimate_check(
        &pairs,
        &RemainderExponents {
            first: one,
            second: one,
            p: 2.0,
            r: 1.0,
        },
    )?;
    let times: Vec<f64> = (0..=10).map(|i| f64::from(i) / 10.0).collect();
    let series = (0..p.members.min(5))
        .map(|i| Ok(ens.series(&g, i, &times)?.map(|f| f.scale(0.1))))
        .collect::<Result<Vec<_>, CliError>>()?;
    let series_pairs: Vec<_> = series
        .iter()
        .zip(series.iter().cycle().skip(1))
        .map(|(a, b)| (a.clone(), b.clone()))
        .collect();
    let crit = BesovIndex::critical(p.dim);
    let product = product_estimate_check(&series_pairs, &crit, &HolderSplit::sup_times(2.0))?;
    let cfg = RelaxConfig::default();
    let speed = sound_speed_perturbation(cfg.gamma, cfg.pressure_constant, cfg.rho_bar);
    let composition = composition_estimate_check(&series, &speed, &crit, 2.0)?;
    Ok((bony, vec![remainder, product, composition]))
}

pub fn verify_paraproduct(p: &VerifyParams, dir: &Path) -> Result<SuiteResult, CliError> {
    let fine_n = 2 * p.grid_n;
    let (bony_c, coarse) = paraproduct_fits(p, p.grid_n)?;
    let (bony_f, fine) = paraproduct_fits(p, fine_n)?;
    let rows: Vec<RefinementReport> = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| RefinementReport::new(&c.name, (p.grid_n, c), (fine_n, f)))
        .collect();
    write_csv(&dir.join("report.csv"), &rows)?;
    let mut assertions = vec![Assertion::at_most(
        "bony_reconstruction",
        bony_c.max(bony_f),
        1e-10,
    )];
    for (r, row) in coarse.iter().zip(&rows) {
        assertions.push(Assertion::holds(
            &format!("{}_constant_finite", r.name),
            r.constant.is_finite(),
            format!("C = {:.6e} over {} members", r.constant, r.ratios.len()),
        ));
        assertions.push(Assertion::at_most(
            &format!("{}_drift", r.name),
            row.refinement_drift,
            p.drift_tolerance,
        ));
    }
    Ok(SuiteResult {
        assertions,
        extras: json!({ "refinement": rows }),
    })
}

fn commutator_fits(p: &VerifyParams, n: usize) -> Result<(Vec<CommutatorReport>, f64), CliError> {
    let g = TorusGrid::new(p.dim, n, p.length)?;
    let ens = p.ensemble();
    let members = (0..p.members)
        .map(|i| Ok((ens.field(&g, i)?, ens.vector(&g, i)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut split = 0.0f64;
    for (f, v) in &members {
        for q in -1..=g.q_max() {
            split = split.max(six_term_residual(f, v, q)?);
        }
    }
    let times: Vec<f64> = (0..=10).map(|i| f64::from(i) / 10.0).collect();
    let series = (0..p.members.min(5))
        .map(|i| {
            Ok(SeriesPair::new(
                ens.series(&g, i, &times)?,
                ens.vector_series(&g, i, &times)?,
            )?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let ts = TimeSplit {
        theta: 1.0,
        theta1: 2.0,
        theta2: 2.0,
    };
    let ex = CommutatorExponents {
        s: critical_regularity(p.dim),
        p: 2.0,
        p1: f64::INFINITY,
        p2: 2.0,
        r: 1.0,
    };
    Ok((
        vec![
            verify_general_commutator(&members, &ex, false)?,
            verify_critical_commutator(&members, Clause::DensityDivergence, true)?,
            verify_critical_commutator(&members, Clause::VelocityTransport, false)?,
            verify_critical_commutator_time(&series, &ts, Clause::DensityDivergence)?,
            verify_time_commutator(&series, 2.0, &ts, Operator::Div)?,
        ],
        split,
    ))
}

pub fn verify_commutator(p: &VerifyParams, dir: &Path) -> Result<SuiteResult, CliError> {
    let fine_n = 2 * p.grid_n;
    let (coarse, split_c) = commutator_fits(p, p.grid_n)?;
    let (fine, split_f) = commutator_fits(p, fine_n)?;
    let rows: Vec<RefinementReport> = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| {
            RefinementReport::new(
                &c.estimate.name,
                (p.grid_n, &c.estimate),
                (fine_n, &f.estimate),
            )
        })
        .collect();
    write_csv(&dir.join("report.csv"), &rows)?;
    // Six-term breakdown of the worst member of the critical divergence fit.
    let breakdown: Vec<Vec<f64>> = coarse[1]
        .breakdown
        .iter()
        .enumerate()
        .map(|(i, terms)| {
            std::iter::once(i as f64 - 1.0)
                .chain(terms.iter().copied())
                .collect()
        })
        .collect();
    let mut columns = vec!["q".to_string()];
    columns.extend((1..=6).map(|i| format!("F{i}")));
    let columns: Vec<&str> = columns.iter().map(String::as_str).collect();
    write_dat(&dir.join("breakdown.dat"), &columns, &breakdown)?;
    let mut assertions = vec![Assertion::at_most(
        "six_term_split",
        split_c.max(split_f),
        1e-10,
    )];
    for r in &rows {
        assertions.push(Assertion::at_most(
            &format!("{}_drift", r.check_name),
            r.refinement_drift,
            p.drift_tolerance,
        ));
    }
    Ok(SuiteResult {
        assertions,
        extras: json!({ "refinement": rows }),
    })
}

/// Parameters of a single Euler run.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct EulerParams {
    pub grid_n: usize,
    pub length: f64,
    #[serde(flatten)]
    pub euler: RelaxConfig,
    pub data: InitialData,
    /// Also record the right-hand side of the block energy identity.
    pub track_identity: bool,
    /// Time between field checkpoints; zero keeps only the first and last.
    pub checkpoint_interval: f64,
}

impl Default for EulerParams {
    fn default() -> Self {
        Self {
            grid_n: 64,
            length: 2.0 * PI,
            euler: RelaxConfig::default(),
            data: InitialData::default(),
            track_identity: false,
            checkpoint_interval: 0.0,
        }
    }
}

#[derive(Serialize)]
struct EulerRow {
    step: usize,
    t: f64,
    besov_norm: f64,
    mass: f64,
    min_sound_speed: f64,
}

pub fn run_euler(p: &EulerParams, dir: &Path) -> Result<SuiteResult, CliError> {
    let cfg = &p.euler;
    let g = TorusGrid::new(cfg.dim, p.grid_n, p.length)?;
    let s0 = p.data.state(&g, cfg)?;
    let mass0 = s0.density(cfg)?.integral();
    let mut solver = Solver::new(cfg, &g)?;
    let mut ledger = EnergyLedger::new(cfg, g.q_max());
    let mut rows = Vec::new();
    let fields = dir.join("fields");
    let mut next_checkpoint = 0.0;
    let mut checkpoints = 0usize;
    let last = solver.advance(&s0, cfg.t_final, |s| {
        ledger.record(s, p.track_identity)?;
        rows.push(EulerRow {
            step: rows.len(),
            t: s.t,
            besov_norm: *ledger.besov_norm.last().expect("just recorded"),
            mass: s.density(cfg)?.integral(),
            min_sound_speed: s.min_sound_speed(cfg),
        });
        if p.checkpoint_interval > 0.0 && s.t >= next_checkpoint - 1e-12 {
            save_state(&fields, &format!("snap{checkpoints:04}"), s)?;
            checkpoints += 1;
            next_checkpoint += p.checkpoint_interval;
        }
        Ok(())
    })?;
    save_state(&fields, "initial", &s0)?;
    save_state(&fields, "final", &last)?;
    write_csv(&dir.join("report.csv"), &rows)?;
    write_json(&dir.join("ledger.json"), &ledger)?;

    let mass_drift = rows
        .iter()
        .map(|r| (r.mass - mass0).abs())
        .fold(0.0, f64::max)
        / mass0;
    let functional = ledger.functional();
    let mut extras = json!({
        "steps": solver.steps(),
        "functional": functional,
        "functional_ratio": functional.total() / ledger.initial_norm(),
        "initial_norm": ledger.initial_norm(),
    });
    if p.track_identity {
        let residual = ledger.identity_residual()?;
        let worst = residual
            .iter()
            .flatten()
            .fold(0.0f64, |w, r| w.max(r.abs()));
        extras["identity_residual_max"] = json!(worst);
    }
    Ok(SuiteResult {
        assertions: vec![
            Assertion::holds("finite_state", last.is_finite(), format!("t = {}", last.t)),
            Assertion::at_most(
                "mass_conservation",
                mass_drift,
                1e-10 * cfg.t_final.max(1.0),
            ),
            Assertion::holds(
                "ledger_consistent",
                ledger.is_consistent(),
                "finite, nonnegative norms",
            ),
        ],
        extras,
    })
}

/// Parameters of a porous medium run started from the Euler initial density.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct PmeParams {
    pub grid_n: usize,
    pub length: f64,
    #[serde(flatten)]
    pub euler: RelaxConfig,
    pub data: InitialData,
    pub s_final: f64,
    pub output_interval: f64,
    /// Step size; the stability default when absent.
    pub ds: Option<f64>,
}

impl Default for PmeParams {
    fn default() -> Self {
        Self {
            grid_n: 64,
            length: 2.0 * PI,
            euler: RelaxConfig::default(),
            data: InitialData::default(),
            s_final: 1.0,
            output_interval: 0.05,
            ds: None,
        }
    }
}

#[derive(Serialize)]
struct PmeRow {
    s: f64,
    deviation_l2: f64,
    deviation_besov: f64,
    min: f64,
    max: f64,
    mass: f64,
}

pub fn run_pme(p: &PmeParams, dir: &Path) -> Result<SuiteResult, CliError> {
    let cfg = &p.euler;
    cfg.validate()?;
    if !(p.s_final > 0.0 && p.output_interval > 0.0) {
        return Err(CliError::Usage(
            "s_final and output_interval must be > 0".into(),
        ));
    }
    let g = TorusGrid::new(cfg.dim, p.grid_n, p.length)?;
    let (rho0, v0) = p.data.physical(&g, cfg)?;
    let crit = BesovIndex::critical(cfg.dim);
    let bar = Field::constant(&g, cfg.rho_bar);
    let data_norm = besov_norm(&(&rho0 - &bar), &crit)
        + v0.components()
            .iter()
            .map(|c| besov_norm(c, &crit))
            .sum::<f64>();
    let ds = p.ds.unwrap_or_else(|| default_ds(cfg, &g));
    let mut solver = PmeSolver::new(cfg, &g)?;
    let row = |st: &PmeState<f64>| {
        let dev = &st.n - &bar;
        PmeRow {
            s: st.s,
            deviation_l2: dev.l2_norm(),
            deviation_besov: besov_norm(&dev, &crit),
            min: st.n.min(),
            max: st.n.max(),
            mass: st.n.integral(),
        }
    };
    let mut state = PmeState::new(rho0)?;
    let mut rows = vec![row(&state)];
    let segments = (p.s_final / p.output_interval).round().max(1.0) as usize;
    for k in 1..=segments {
        let target = p.s_final * k as f64 / segments as f64;
        state = solver.advance(&state, target, ds, |_| {})?;
        rows.push(row(&state));
    }
    save_field(&dir.join("fields").join("final_n.bin"), &state.n)?;
    write_csv(&dir.join("report.csv"), &rows)?;
    let m0 = rows[0].mass;
    let mass_drift = rows.iter().map(|r| (r.mass - m0).abs()).fold(0.0, f64::max) / m0;
    let contracting = rows
        .windows(2)
        .all(|w| w[1].deviation_l2 <= w[0].deviation_l2 * (1.0 + 1e-12));
    let positive = rows.iter().map(|r| r.min).fold(f64::INFINITY, f64::min);
    let sup_besov = rows.iter().map(|r| r.deviation_besov).fold(0.0, f64::max);
    Ok(SuiteResult {
        assertions: vec![
            Assertion::at_most("mass_conservation", mass_drift, 1e-12),
            Assertion::holds(
                "l2_deviation_non_increasing",
                contracting,
                "sampled at every output",
            ),
            Assertion::at_least("positivity", positive, f64::MIN_POSITIVE),
        ],
        extras: json!({
            "ds": ds,
            "bound_ratio": if data_norm > 0.0 { sup_besov / data_norm } else { 0.0 },
        }),
    })
}

/// A τ sweep and the frozen constant its uniform diagnostics are held to.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SweepParams {
    #[serde(flatten)]
    pub sweep: SweepConfig,
    pub uniform_bound: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            sweep: SweepConfig::default(),
            uniform_bound: golden().relax_uniform_bound,
        }
    }
}

#[derive(Serialize)]
struct LongRow {
    tau: f64,
    s: f64,
    error: f64,
}

#[derive(Serialize)]
struct TauRow {
    tau: f64,
    sup_error: f64,
    density_ratio: f64,
    flux_ratio: f64,
    flux_balance: f64,
    flux_balance_weak: f64,
    steps: usize,
    partial: bool,
}

pub fn relax_sweep(p: &SweepParams, dir: &Path) -> Result<SuiteResult, CliError> {
    let r = sweep(&p.sweep)?;
    let long: Vec<LongRow> = r
        .long_rows()
        .into_iter()
        .map(|(tau, s, error)| LongRow { tau, s, error })
        .collect();
    write_csv(&dir.join("report.csv"), &long)?;
    let per_tau: Vec<TauRow> = r
        .per_tau
        .iter()
        .map(|t| TauRow {
            tau: t.tau,
            sup_error: t.sup_error,
            density_ratio: t.density_ratio,
            flux_ratio: t.flux_ratio,
            flux_balance: t.flux_balance,
            flux_balance_weak: t.flux_balance_weak,
            steps: t.steps,
            partial: t.partial,
        })
        .collect();
    write_csv(&dir.join("per_tau.csv"), &per_tau)?;
    let blocks: Vec<(String, Vec<Vec<f64>>)> = r
        .per_tau
        .iter()
        .map(|t| {
            let rows =
                r.s.iter()
                    .zip(&t.errors)
                    .map(|(&s, &e)| vec![s, e])
                    .collect();
            (format!("tau = {}", t.tau), rows)
        })
        .collect();
    write_dat_blocks(&dir.join("convergence.dat"), &["s", "error"], &blocks)?;

    let errors = r.sup_errors();
    let monotone = errors.windows(2).all(|w| w[1] <= w[0]);
    let weak: Vec<f64> = per_tau.iter().map(|t| t.flux_balance_weak).collect();
    let balance = weak.windows(2).all(|w| w[1] <= w[0]);
    let uniform = r.max_density_ratio().max(r.max_flux_ratio());
    let partial: Vec<String> = per_tau
        .iter()
        .filter(|t| t.partial)
        .map(|t| t.tau.to_string())
        .collect();
    if !partial.is_empty() {
        eprintln!(
            "warning: step budget exhausted for τ = {}",
            partial.join(", ")
        );
    }
    Ok(SuiteResult {
        assertions: vec![
            Assertion::holds("sup_error_non_increasing", monotone, format!("{errors:?}")),
            Assertion::at_most("uniform_bound", uniform, p.uniform_bound),
            Assertion::holds("flux_balance_decreasing", balance, format!("{weak:?}")),
            Assertion::holds(
                "within_step_budget",
                partial.is_empty(),
                format!("partial: [{}]", partial.join(", ")),
            ),
        ],
        extras: json!({
            "fitted_order": r.fitted_order,
            "strictly_decreasing": r.strictly_decreasing(),
            "final_over_initial": r.final_over_initial(),
            "max_density_ratio": r.max_density_ratio(),
            "max_flux_ratio": r.max_flux_ratio(),
            "pme_ratio": r.pme_ratio,
            "initial_norm": r.initial_norm,
            "delta": r.delta,
        }),
    })
}
