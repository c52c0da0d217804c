//! `brlx`: verification suites and simulation campaigns.
//!
//! Exit status: 0 when every asserted invariant holds, 1 when one fails,
//! 2 on usage errors (bad flags, malformed or unknown configuration),
//! 3 when a run aborts (vacuum, non-finite state, I/O).

mod config;
mod run;
mod suites;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::{Table, Value};

use run::{RunManifest, SuiteResult, Summary};
use suites::{EulerParams, PmeParams, SweepParams, VerifyParams};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<brlx::Error> for CliError {
    fn from(e: brlx::Error) -> Self {
        match e {
            brlx::Error::Config(m) => CliError::Usage(format!("configuration error: {m}")),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "brlx",
    version,
    about = "Littlewood-Paley verification suites and relaxation-limit campaigns"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Partition of unity, block reconstruction, orthogonality and Bernstein bounds.
    #[command(alias = "verify-partition")]
    VerifySpectral,
    /// Besov norm axioms, summability monotonicity and the critical embedding.
    VerifyBesov,
    /// Bony reconstruction and fitted product, remainder and composition constants.
    VerifyParaproduct,
    /// Six-term commutator split and fitted constants under grid doubling.
    VerifyCommutator,
    /// One relaxed Euler run with energy ledger and field checkpoints.
    RunEuler,
    /// One porous medium run from the Euler initial density.
    RunPme,
    /// Relaxation-time sweep compared against the porous medium limit.
    RelaxSweep,
    /// Prints the summary of a finished run directory and exits with its status.
    Report {
        /// Run directory containing summary.json.
        dir: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::VerifySpectral => "verify-spectral",
            Command::VerifyBesov => "verify-besov",
            Command::VerifyParaproduct => "verify-paraproduct",
            Command::VerifyCommutator => "verify-commutator",
            Command::RunEuler => "run-euler",
            Command::RunPme => "run-pme",
            Command::RelaxSweep => "relax-sweep",
            Command::Report { .. } => "report",
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// TOML file; the section named after the subcommand holds its parameters.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root of the output tree.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Run directory name (default: UTC timestamp).
    #[arg(long, global = true)]
    run_id: Option<String>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Wall-clock budget in seconds; exceeding it fails the run.
    #[arg(long, global = true)]
    budget: Option<f64>,
    /// Override any parameter: `--set key=value` (dotted keys for nested tables).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,

    /// Random seed [default: 1729].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Samples per side [default: 64; 128 for verify-spectral].
    #[arg(long, global = true)]
    grid_n: Option<usize>,
    /// Spatial dimension [default: 2].
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Relaxation time; for relax-sweep, a single-τ sweep [default: 0.5].
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Adiabatic exponent [default: 1.4].
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Side length of the periodic box [default: 2π].
    #[arg(long, global = true)]
    length: Option<f64>,

    /// `A` in the pressure law `P = Aρ^γ`.
    #[arg(long, global = true)]
    pressure_constant: Option<f64>,
    /// Reference density of the equilibrium state.
    #[arg(long, global = true)]
    rho_bar: Option<f64>,
    /// Largest time step.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Final time of run-euler.
    #[arg(long, global = true)]
    t_final: Option<f64>,
    /// Evaluate quadratic terms on the padded grid.
    #[arg(long, global = true)]
    dealias: Option<bool>,
    /// Courant number.
    #[arg(long, global = true)]
    cfl: Option<f64>,
    /// Restore the mean density after every step.
    #[arg(long, global = true)]
    mass_fix: Option<bool>,
    /// Cap the step at τ/8 while t < 5τ.
    #[arg(long, global = true)]
    resolve_layer: Option<bool>,
    /// Permit d = 1 (debugging only).
    #[arg(long, global = true)]
    allow_one_dim: Option<bool>,

    /// Comma-separated, strictly decreasing relaxation times.
    #[arg(long, global = true, value_delimiter = ',')]
    taus: Option<Vec<f64>>,
    /// Slow-time horizon of the sweep.
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Spacing of the recorded instants (slow time for relax-sweep and run-pme).
    #[arg(long, global = true)]
    output_interval: Option<f64>,
    /// Regularity loss of the comparison norm, in (0, 1).
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Largest number of Euler steps per τ run.
    #[arg(long, global = true)]
    step_budget: Option<usize>,
    /// Frozen bound on the τ-uniform density and flux ratios.
    #[arg(long, global = true)]
    uniform_bound: Option<f64>,
    /// Final slow time of run-pme.
    #[arg(long, global = true)]
    s_final: Option<f64>,
    /// Porous medium step (default from the diffusive stability limit).
    #[arg(long, global = true)]
    ds: Option<f64>,
    /// Also record the per-block energy identity residual.
    #[arg(long, global = true)]
    track_identity: Option<bool>,
    /// Time between field checkpoints (0 = initial and final only).
    #[arg(long, global = true)]
    checkpoint_interval: Option<f64>,

    /// Perturbation amplitude of the initial data.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Spectral decay exponent of the random perturbations.
    #[arg(long, global = true)]
    decay: Option<f64>,
    /// Perturb the velocity as well as the density.
    #[arg(long, global = true)]
    with_velocity: Option<bool>,

    /// Ensemble size.
    #[arg(long, global = true)]
    members: Option<usize>,
    /// Largest lattice index `|m_i|` excited in the ensemble fields.
    #[arg(long, global = true)]
    band: Option<usize>,
    /// Largest relative drift of a fitted constant when N doubles.
    #[arg(long, global = true)]
    drift_tolerance: Option<f64>,
}

const RELAX_KEYS: [&str; 12] = [
    "tau",
    "gamma",
    "pressure_constant",
    "rho_bar",
    "dim",
    "dt",
    "t_final",
    "dealias",
    "cfl",
    "mass_fix",
    "resolve_layer",
    "allow_one_dim",
];
const DATA_KEYS: [&str; 4] = ["seed", "epsilon", "decay", "with_velocity"];

impl Common {
    /// Flags that were given, as `(key, value)`.
    fn given(&self) -> Vec<(&'static str, Value)> {
        fn put<T: Clone + Into<Value>>(
            out: &mut Vec<(&'static str, Value)>,
            k: &'static str,
            v: &Option<T>,
        ) {
            if let Some(v) = v {
                out.push((k, v.clone().into()));
            }
        }
        let int = |v: &Option<usize>| v.map(|x| x as i64);
        let mut out = Vec::new();
        put(&mut out, "seed", &self.seed.map(|s| s as i64));
        put(&mut out, "grid_n", &int(&self.grid_n));
        put(&mut out, "dim", &int(&self.dim));
        put(&mut out, "tau", &self.tau);
        put(&mut out, "gamma", &self.gamma);
        put(&mut out, "length", &self.length);
        put(&mut out, "pressure_constant", &self.pressure_constant);
        put(&mut out, "rho_bar", &self.rho_bar);
        put(&mut out, "dt", &self.dt);
        put(&mut out, "t_final", &self.t_final);
        put(&mut out, "dealias", &self.dealias);
        put(&mut out, "cfl", &self.cfl);
        put(&mut out, "mass_fix", &self.mass_fix);
        put(&mut out, "resolve_layer", &self.resolve_layer);
        put(&mut out, "allow_one_dim", &self.allow_one_dim);
        put(&mut out, "taus", &self.taus);
        put(&mut out, "horizon", &self.horizon);
        put(&mut out, "output_interval", &self.output_interval);
        put(&mut out, "delta", &self.delta);
        put(&mut out, "step_budget", &int(&self.step_budget));
        put(&mut out, "uniform_bound", &self.uniform_bound);
        put(&mut out, "s_final", &self.s_final);
        put(&mut out, "ds", &self.ds);
        put(&mut out, "track_identity", &self.track_identity);
        put(&mut out, "checkpoint_interval", &self.checkpoint_interval);
        put(&mut out, "epsilon", &self.epsilon);
        put(&mut out, "decay", &self.decay);
        put(&mut out, "with_velocity", &self.with_velocity);
        put(&mut out, "members", &int(&self.members));
        put(&mut out, "band", &int(&self.band));
        put(&mut out, "drift_tolerance", &self.drift_tolerance);
        out
    }
}

/// Where a flag lands in a suite's parameter table, or `None` if it does not apply.
fn route(suite: &str, key: &'static str) -> Option<Vec<&'static str>> {
    match suite {
        "verify-spectral" | "verify-besov" | "verify-paraproduct" | "verify-commutator" => {
            let ok = ["seed", "grid_n", "dim", "length", "members", "band"].contains(&key)
                || (suite == "verify-commutator" && key == "drift_tolerance");
            ok.then(|| vec![key])
        }
        "run-euler" | "run-pme" => {
            if DATA_KEYS.contains(&key) {
                return Some(vec!["data", key]);
            }
            let own: &[&str] = if suite == "run-euler" {
                &["grid_n", "length", "track_identity", "checkpoint_interval"]
            } else {
                &["grid_n", "length", "s_final", "ds", "output_interval"]
            };
            (RELAX_KEYS.contains(&key) || own.contains(&key)).then(|| vec![key])
        }
        "relax-sweep" => {
            if DATA_KEYS.contains(&key) {
                return Some(vec!["data", key]);
            }
            if key == "tau" {
                return Some(vec!["taus"]);
            }
            if RELAX_KEYS.contains(&key) {
                return Some(vec!["euler", key]);
            }
            let own = [
                "taus",
                "horizon",
                "output_interval",
                "delta",
                "grid_n",
                "length",
                "step_budget",
                "uniform_bound",
            ];
            own.contains(&key).then(|| vec![key])
        }
        _ => None,
    }
}

fn build_table(suite: &str, common: &Common) -> Result<Table, CliError> {
    let mut table = match &common.config {
        Some(path) => config::load_section(path, suite)?,
        None => Table::new(),
    };
    for (key, value) in common.given() {
        let path = route(suite, key).ok_or_else(|| {
            CliError::Usage(format!(
                "--{} does not apply to {suite}",
                key.replace('_', "-")
            ))
        })?;
        let value = if suite == "relax-sweep" && key == "tau" {
            Value::Array(vec![value])
        } else {
            value
        };
        config::set_path(&mut table, &path, value)?;
    }
    for s in &common.sets {
        let (path, value) = config::parse_assignment(s)?;
        let path: Vec<&str> = path.iter().map(String::as_str).collect();
        config::set_path(&mut table, &path, value)?;
    }
    Ok(table)
}

fn params<P: DeserializeOwned + Serialize>(
    suite: &str,
    common: &Common,
    base: P,
    optional: &[&str],
) -> Result<P, CliError> {
    let mut merged = match Value::try_from(&base) {
        Ok(Value::Table(t)) => t,
        _ => Table::new(),
    };
    for (k, v) in build_table(suite, common)? {
        merge(&mut merged, k, v);
    }
    config::resolve(merged, optional)
}

/// Recursive merge so that partial nested tables keep their other defaults.
fn merge(into: &mut Table, key: String, value: Value) {
    match (into.get_mut(&key), value) {
        (Some(Value::Table(dst)), Value::Table(src)) => {
            for (k, v) in src {
                merge(dst, k, v);
            }
        }
        (_, v) => {
            into.insert(key, v);
        }
    }
}

fn execute<P: Serialize>(
    suite: &str,
    common: &Common,
    p: &P,
    seed: u64,
    body: impl FnOnce(&P, &Path) -> Result<SuiteResult, CliError>,
) -> Result<bool, CliError> {
    let run_id = common.run_id.clone().unwrap_or_else(run::timestamp_id);
    let dir = run::prepare_dir(&common.out, suite, &run_id)?;
    let manifest = RunManifest {
        suite: suite.to_string(),
        parameters: serde_json::to_value(p).map_err(|e| CliError::Runtime(e.to_string()))?,
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        output_dir: dir.clone(),
        wall_clock_budget_seconds: common.budget,
        threads: common.threads,
        created: chrono::Utc::now().to_rfc3339(),
    };
    run::write_manifest(&dir, &manifest)?;
    let t0 = Instant::now();
    let result = body(p, &dir)?;
    let elapsed = t0.elapsed().as_secs_f64();
    let mut assertions = result.assertions;
    if let Some(b) = common.budget {
        assertions.push(brlx::report::Assertion::at_most(
            "wall_clock_budget",
            elapsed,
            b,
        ));
    }
    let summary = Summary {
        suite: suite.to_string(),
        passed: assertions.iter().all(|a| a.passed),
        elapsed_seconds: elapsed,
        assertions: assertions.into_iter().map(Into::into).collect(),
        extras: result.extras,
    };
    brlx::report::write_csv(&dir.join("assertions.csv"), &summary.assertions)?;
    run::write_summary(&dir, &summary)?;
    run::print_summary(&summary);
    let _ = writeln!(std::io::stdout(), "output: {}", dir.display());
    Ok(summary.passed)
}

fn report(dir: &Path) -> Result<bool, CliError> {
    let path = dir.join("summary.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let summary: Summary = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("malformed {}: {e}", path.display())))?;
    run::print_summary(&summary);
    let _ = writeln!(
        std::io::stdout(),
        "extras: {}",
        serde_json::to_string_pretty(&summary.extras)
            .map_err(|e| CliError::Runtime(e.to_string()))?
    );
    Ok(summary.passed)
}

fn dispatch(cli: &Cli) -> Result<bool, CliError> {
    let c = &cli.common;
    if c.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(c.threads)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let suite = cli.command.name();
    match &cli.command {
        Command::VerifySpectral
        | Command::VerifyBesov
        | Command::VerifyParaproduct
        | Command::VerifyCommutator => {
            let base = if matches!(cli.command, Command::VerifySpectral) {
                VerifyParams::spectral_default()
            } else {
                VerifyParams::default()
            };
            let p: VerifyParams = params(suite, c, base, &[])?;
            let body = match cli.command {
                Command::VerifySpectral => suites::verify_spectral,
                Command::VerifyBesov => suites::verify_besov,
                Command::VerifyParaproduct => suites::verify_paraproduct,
                _ => suites::verify_commutator,
            };
            execute(suite, c, &p, p.seed, body)
        }
        Command::RunEuler => {
            let p: EulerParams = params(suite, c, EulerParams::default(), &[])?;
            p.euler.validate()?;
            execute(suite, c, &p, p.data.seed, suites::run_euler)
        }
        Command::RunPme => {
            let p: PmeParams = params(suite, c, PmeParams::default(), &["ds"])?;
            execute(suite, c, &p, p.data.seed, suites::run_pme)
        }
        Command::RelaxSweep => {
            let p: SweepParams = params(suite, c, SweepParams::default(), &[])?;
            p.sweep.validate()?;
            execute(suite, c, &p, p.sweep.data.seed, suites::relax_sweep)
        }
        Command::Report { dir } => report(dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
