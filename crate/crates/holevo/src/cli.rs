//! Command-line front end: load models and priors, compute bound reports,
//! emit curve data, and run simulations. All numeric output is formatted to
//! a fixed precision so a given configuration and seed reproduce the same
//! bytes.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::bayes::{
    bayes_optimal_single, covariant_mixed_qubit_cost, covariant_pure_qubit_cost,
    van_trees_bound, CovariantQubitSpec, Prior,
};
use crate::bounds::{
    compatibility_report, d_invariance_check, hgm_bound, rld_bound, sld_cr_bound, sld_set,
    BoundReport,
};
use crate::error::{Error, Result};
use crate::gaussian::{
    gaussian_hcr, gaussian_qfi, heisenberg_margin, optimal_linear_measurement,
    GaussianShiftModel,
};
use crate::hcr::hcr_bound_with;
use crate::matrix::{c64, CMatrix, RMatrix};
use crate::model::{
    builtin_family, pure_qubit, qubit_bloch_cartesian, qubit_bloch_spherical, qubit_r_theta,
    CostMatrix, ModelPoint, ParametricModel,
};
use crate::qlan::{lam_bures, lam_frobenius, limit_model};
use crate::sdp::SdpOptions;
use crate::sim::{collective_estimation_run, write_curves_csv, CurveRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_PRECISION: i32 = 4;

/// Maps library errors onto the documented process exit codes.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::SolverStalled { .. }
        | Error::SolverInfeasible(_)
        | Error::ConstraintViolation { .. } => EXIT_SOLVER,
        Error::Precision(_) => EXIT_PRECISION,
        _ => EXIT_VALIDATION,
    }
}

const AFTER_HELP: &str = "conventions:
  hbar = 1 and [Q, P] = i, so the vacuum quadrature variance is 1/2.
  Qubit states are rho = (I + v.sigma)/2 with |v| <= 1, Pauli order (x, y, z).
  Cost matrices are symmetric positive semidefinite weights on the
  estimator covariance; scalar bounds are trace(C Cov) lower bounds.
  Complex matrix files: JSON nested rows of [re, im] pairs.
  Real matrix files: JSON nested rows of numbers.

exit codes:
  0 success | 2 invalid input | 3 solver non-convergence | 4 precision loss

environment:
  HOLEVO_THREADS caps the worker thread count (default: all cores).";

#[derive(Parser)]
#[command(
    name = "holevo",
    version,
    about = "Multi-parameter quantum estimation bounds and simulations",
    after_help = AFTER_HELP
)]
pub struct Cli {
    /// JSON run configuration file; mutually exclusive with a subcommand.
    /// Unknown keys are rejected.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Human-readable aligned table.
    Table,
    /// Machine-readable `name = value` lines.
    Structured,
    /// Comma-separated values.
    Csv,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// SLD, RLD, HGM and Holevo Cramer-Rao bounds at one model point.
    Bounds {
        /// Builtin family (pure-qubit, qubit-bloch, qubit-spherical,
        /// qubit-r-theta, phase:B) or a JSON model-point file.
        #[arg(long)]
        model: String,
        /// identity | diag:W1,W2,... | JSON real-matrix file.
        #[arg(long, default_value = "identity")]
        cost: String,
        /// Parameter point for a builtin family (comma-separated).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Option<Vec<f64>>,
        /// Relative duality-gap target for the interior-point solver.
        #[arg(long)]
        tol_gap: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gaussian shift-model bounds and the optimal linear measurement.
    Gaussian {
        /// JSON file: {"q_modes": .., "c_vars": .., "a": [[..]], "v": [[..]]}.
        #[arg(long)]
        model: PathBuf,
        /// identity | diag:W1,W2,... | JSON real-matrix file.
        #[arg(long, default_value = "identity")]
        cost: String,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Asymptotic limit-model costs for an i.i.d. qudit spectrum.
    Qlan {
        /// Full eigenvalue list, strictly decreasing, summing to 1.
        #[arg(long, value_delimiter = ',')]
        spectrum: Option<Vec<f64>>,
        /// Qubit shorthand: spectrum ((1+r)/2, (1-r)/2).
        #[arg(long)]
        r: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bayesian estimation costs: covariant qubit families or a custom
    /// one-parameter prior.
    Bayes {
        /// covariant-pure | covariant-mixed.
        #[arg(long, conflicts_with = "model")]
        family: Option<String>,
        /// Copy count for a covariant family.
        #[arg(long)]
        n: Option<usize>,
        /// Radial prior weight for covariant-mixed: uniform | ball.
        #[arg(long, default_value = "uniform")]
        weight: String,
        /// Quadrature nodes for covariant-mixed radial integrals.
        #[arg(long, default_value_t = 96)]
        nodes: usize,
        /// One-parameter builtin model (e.g. phase:0.8) for a custom prior.
        #[arg(long)]
        model: Option<String>,
        /// gaussian:MEAN,SIGMA[,NODES] | uniform:A,B[,NODES].
        #[arg(long, allow_hyphen_values = true)]
        prior: Option<String>,
        /// Scalar cost weight for the custom-prior path.
        #[arg(long, default_value = "identity")]
        cost: String,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo collective estimation of (r, theta) on n qubit copies.
    Simulate {
        /// Copy counts, comma-separated.
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 8])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        r: f64,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3)]
        theta: f64,
        /// Radial cost weight; the angular weight is r^2.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Six-column bound summary for the three qubit families and their
    /// Gaussian shift twins, with the column-wise agreement check.
    Table1 {
        #[arg(long, default_value_t = 0.5)]
        r: f64,
        /// Radial cost weight c(r).
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Agreement tolerance between qubit and Gaussian columns.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        tol_gap: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Curve data over an r-grid: bounds_vs_r.csv (3-parameter SLD/HCR/HGM)
    /// and simulation_vs_r.csv (2-parameter HCR/HGM plus scaled simulated
    /// costs for each copy count).
    Figures {
        /// Output directory for the CSV files.
        #[arg(long)]
        out: PathBuf,
        /// Number of interior grid points in (0, 1).
        #[arg(long, default_value_t = 25)]
        grid: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 8])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 20_000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3)]
        theta: f64,
        /// Radial cost weight for the 2-parameter family.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
}

// --- Strict JSON run configuration ---

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(usize),
    Many(Vec<usize>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<usize> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

/// File form of a run: the subcommand name plus its inputs. Unknown keys
/// are a hard error so typos cannot silently fall back to defaults.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    command: String,
    #[serde(default)]
    model: Option<String>,
    #[serde(default)]
    cost: Option<String>,
    #[serde(default)]
    point: Option<Vec<f64>>,
    #[serde(default)]
    prior: Option<String>,
    #[serde(default)]
    family: Option<String>,
    #[serde(default)]
    weight: Option<String>,
    #[serde(default)]
    nodes: Option<usize>,
    #[serde(default)]
    spectrum: Option<Vec<f64>>,
    #[serde(default)]
    r: Option<f64>,
    #[serde(default)]
    theta: Option<f64>,
    #[serde(default)]
    c: Option<f64>,
    #[serde(default)]
    n: Option<OneOrMany>,
    #[serde(default)]
    grid: Option<usize>,
    #[serde(default)]
    trials: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    out: Option<PathBuf>,
    #[serde(default)]
    format: Option<String>,
    #[serde(default)]
    tol_gap: Option<f64>,
    #[serde(default)]
    tol: Option<f64>,
}

fn parse_format(s: &str) -> Result<Format> {
    match s {
        "table" => Ok(Format::Table),
        "structured-text" | "structured" => Ok(Format::Structured),
        "csv" => Ok(Format::Csv),
        other => Err(Error::Parse(format!(
            "format {other:?} is not one of table, structured-text, csv"
        ))),
    }
}

impl RunConfig {
    fn into_command(self) -> Result<Command> {
        let format = match self.format.as_deref() {
            Some(s) => parse_format(s)?,
            None => Format::Table,
        };
        let ns = self.n.map(OneOrMany::into_vec);
        match self.command.as_str() {
            "bounds" => Ok(Command::Bounds {
                model: self
                    .model
                    .ok_or_else(|| Error::Parse("bounds needs a model".into()))?,
                cost: self.cost.unwrap_or_else(|| "identity".into()),
                point: self.point,
                tol_gap: self.tol_gap,
                format,
                out: self.out,
            }),
            "gaussian" => Ok(Command::Gaussian {
                model: PathBuf::from(
                    self.model
                        .ok_or_else(|| Error::Parse("gaussian needs a model file".into()))?,
                ),
                cost: self.cost.unwrap_or_else(|| "identity".into()),
                format,
                out: self.out,
            }),
            "qlan" => Ok(Command::Qlan {
                spectrum: self.spectrum,
                r: self.r,
                format,
                out: self.out,
            }),
            "bayes" => Ok(Command::Bayes {
                family: self.family,
                n: ns.as_deref().and_then(|v| v.first().copied()),
                weight: self.weight.unwrap_or_else(|| "uniform".into()),
                nodes: self.nodes.unwrap_or(96),
                model: self.model,
                prior: self.prior,
                cost: self.cost.unwrap_or_else(|| "identity".into()),
                format,
                out: self.out,
            }),
            "simulate" => Ok(Command::Simulate {
                n: ns.unwrap_or_else(|| vec![2, 4, 8]),
                r: self.r.unwrap_or(0.5),
                theta: self.theta.unwrap_or(std::f64::consts::FRAC_PI_3),
                c: self.c.unwrap_or(1.0),
                trials: self.trials.unwrap_or(100_000),
                seed: self.seed.unwrap_or(1),
                format,
                out: self.out,
            }),
            "table1" => Ok(Command::Table1 {
                r: self.r.unwrap_or(0.5),
                c: self.c.unwrap_or(1.0),
                tol: self.tol.unwrap_or(1e-6),
                tol_gap: self.tol_gap,
                format,
                out: self.out,
            }),
            "figures" => Ok(Command::Figures {
                out: self
                    .out
                    .ok_or_else(|| Error::Parse("figures needs an output directory".into()))?,
                grid: self.grid.unwrap_or(25),
                n: ns.unwrap_or_else(|| vec![2, 4, 8]),
                trials: self.trials.unwrap_or(20_000),
                seed: self.seed.unwrap_or(1),
                theta: self.theta.unwrap_or(std::f64::consts::FRAC_PI_3),
                c: self.c.unwrap_or(1.0),
            }),
            other => Err(Error::Parse(format!(
                "command {other:?} is not one of bounds, gaussian, qlan, bayes, \
                 simulate, table1, figures"
            ))),
        }
    }
}

// --- Entry point ---

/// Parses arguments, dispatches, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                EXIT_OK
            } else {
                EXIT_VALIDATION
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn configure_threads() -> Result<()> {
    match std::env::var("HOLEVO_THREADS") {
        Ok(s) => {
            let k: usize = s.trim().parse().map_err(|_| {
                Error::Parse(format!("HOLEVO_THREADS must be a positive integer, got {s:?}"))
            })?;
            if k == 0 {
                return Err(Error::Parse(
                    "HOLEVO_THREADS must be a positive integer, got 0".into(),
                ));
            }
            // Fails harmlessly if a pool already exists (repeated calls).
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global();
            Ok(())
        }
        Err(std::env::VarError::NotPresent) => Ok(()),
        Err(e) => Err(Error::Parse(format!("HOLEVO_THREADS: {e}"))),
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    configure_threads()?;
    let command = match (cli.config, cli.command) {
        (Some(_), Some(_)) => {
            return Err(Error::Parse(
                "--config and a subcommand are mutually exclusive".into(),
            ))
        }
        (None, None) => {
            return Err(Error::Parse(
                "nothing to do: pass a subcommand or --config (see --help)".into(),
            ))
        }
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path)?;
            let config: RunConfig = serde_json::from_str(&text)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            config.into_command()?
        }
        (None, Some(cmd)) => cmd,
    };
    execute(command)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Bounds {
            model,
            cost,
            point,
            tol_gap,
            format,
            out,
        } => {
            let text = cmd_bounds(&model, &cost, point.as_deref(), tol_gap, format)?;
            emit(out.as_deref(), &text)
        }
        Command::Gaussian {
            model,
            cost,
            format,
            out,
        } => {
            let text = cmd_gaussian(&model, &cost, format)?;
            emit(out.as_deref(), &text)
        }
        Command::Qlan {
            spectrum,
            r,
            format,
            out,
        } => {
            let text = cmd_qlan(spectrum.as_deref(), r, format)?;
            emit(out.as_deref(), &text)
        }
        Command::Bayes {
            family,
            n,
            weight,
            nodes,
            model,
            prior,
            cost,
            format,
            out,
        } => {
            let text = cmd_bayes(
                family.as_deref(),
                n,
                &weight,
                nodes,
                model.as_deref(),
                prior.as_deref(),
                &cost,
                format,
            )?;
            emit(out.as_deref(), &text)
        }
        Command::Simulate {
            n,
            r,
            theta,
            c,
            trials,
            seed,
            format,
            out,
        } => {
            let text = cmd_simulate(&n, r, theta, c, trials, seed, format)?;
            emit(out.as_deref(), &text)
        }
        Command::Table1 {
            r,
            c,
            tol,
            tol_gap,
            format,
            out,
        } => {
            let text = cmd_table1(r, c, tol, tol_gap, format)?;
            emit(out.as_deref(), &text)
        }
        Command::Figures {
            out,
            grid,
            n,
            trials,
            seed,
            theta,
            c,
        } => {
            let text = cmd_figures(&out, grid, &n, trials, seed, theta, c)?;
            emit(None, &text)
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text)?;
            Ok(())
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

// --- Input parsing ---

fn fmt(v: f64) -> String {
    format!("{v:.12}")
}

fn parse_float_list(what: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("{what}: {tok:?} is not a number")))
        })
        .collect()
}

/// Resolves a builtin family name to (model, default point).
fn builtin_model(name: &str) -> Result<(ParametricModel, Vec<f64>)> {
    builtin_family(name)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelPointFile {
    #[serde(default)]
    theta: Option<Vec<f64>>,
    rho: Vec<Vec<[f64; 2]>>,
    grads: Vec<Vec<Vec<[f64; 2]>>>,
}

fn cmatrix_from_rows(what: &str, rows: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!("{what}: expected a square matrix")));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| c64(rows[i][j][0], rows[i][j][1])))
}

fn rmatrix_from_rows(what: &str, rows: &[Vec<f64>]) -> Result<RMatrix> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Parse(format!("{what}: empty matrix")));
    }
    let m = rows[0].len();
    if m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(Error::Parse(format!("{what}: ragged matrix rows")));
    }
    Ok(RMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// A model argument is either a builtin name (with optional --point) or a
/// JSON model-point file with rho and its gradients baked in.
fn resolve_model_point(model: &str, point: Option<&[f64]>) -> Result<ModelPoint> {
    if let Ok((family, default_point)) = builtin_model(model) {
        let theta = point.map(<[f64]>::to_vec).unwrap_or(default_point);
        return family.evaluate(&theta);
    }
    let path = Path::new(model);
    if !path.exists() {
        return Err(Error::Parse(format!(
            "model {model:?} is not a builtin family and no file exists at that \
             path; builtins are pure-qubit, qubit-bloch, qubit-spherical, \
             qubit-r-theta, phase:B"
        )));
    }
    if point.is_some() {
        return Err(Error::Parse(
            "--point applies to builtin families; a model file carries its own point".into(),
        ));
    }
    let text = std::fs::read_to_string(path)?;
    let file: ModelPointFile = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let rho = cmatrix_from_rows("rho", &file.rho)?;
    let grads = file
        .grads
        .iter()
        .map(|g| cmatrix_from_rows("gradient", g))
        .collect::<Result<Vec<_>>>()?;
    let theta = file.theta.unwrap_or_else(|| vec![0.0; grads.len()]);
    ModelPoint::from_parts(theta, rho, grads)
}

/// identity | diag:W1,W2,... | path to a JSON real matrix.
fn resolve_cost(spec: &str, p: usize) -> Result<CostMatrix> {
    if spec == "identity" {
        return Ok(CostMatrix::identity(p));
    }
    if let Some(arg) = spec.strip_prefix("diag:") {
        let w = parse_float_list("cost weights", arg)?;
        if w.len() != p {
            return Err(Error::DimensionMismatch {
                context: "cost weights vs parameter count",
                expected: p,
                got: w.len(),
            });
        }
        return CostMatrix::from_diagonal(&w);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::Parse(format!(
            "cost {spec:?} is not identity, diag:..., or an existing file"
        )));
    }
    let text = std::fs::read_to_string(path)?;
    let rows: Vec<Vec<f64>> = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    CostMatrix::new(rmatrix_from_rows("cost matrix", &rows)?)
}

/// gaussian:MEAN,SIGMA[,NODES] | uniform:A,B[,NODES].
fn resolve_prior(spec: &str) -> Result<Prior> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("prior {spec:?} needs the form kind:args")))?;
    let args = parse_float_list("prior arguments", rest)?;
    match kind {
        "gaussian" => {
            if args.len() < 2 || args.len() > 3 {
                return Err(Error::Parse(
                    "gaussian prior takes mean,sigma and an optional node count".into(),
                ));
            }
            let nodes = args.get(2).map(|&v| v as usize).unwrap_or(96);
            Prior::gaussian_1d(args[0], args[1], nodes)
        }
        "uniform" => {
            if args.len() < 2 || args.len() > 3 {
                return Err(Error::Parse(
                    "uniform prior takes a,b and an optional node count".into(),
                ));
            }
            let nodes = args.get(2).map(|&v| v as usize).unwrap_or(96);
            Prior::uniform_1d(args[0], args[1], nodes)
        }
        other => Err(Error::Parse(format!(
            "unknown prior kind {other:?}; use gaussian:... or uniform:..."
        ))),
    }
}

// --- Report rendering ---

struct Report {
    fields: Vec<(String, String)>,
}

impl Report {
    fn new() -> Self {
        Report { fields: Vec::new() }
    }

    fn push(&mut self, name: &str, value: impl Into<String>) {
        self.fields.push((name.to_string(), value.into()));
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Table => {
                let width = self.fields.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
                let mut s = String::new();
                for (name, value) in &self.fields {
                    s.push_str(&format!("{name:<width$}  {value}\n"));
                }
                s
            }
            Format::Structured => {
                let mut s = String::new();
                for (name, value) in &self.fields {
                    s.push_str(&format!("{name} = {value}\n"));
                }
                s
            }
            Format::Csv => {
                let mut s = String::from("name,value\n");
                for (name, value) in &self.fields {
                    s.push_str(&format!("{name},{value}\n"));
                }
                s
            }
        }
    }
}

fn curves_csv_string(rows: &[CurveRow]) -> String {
    let mut s = String::from("n,r,bound_name,value,stderr\n");
    for row in rows {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            row.n.map(|n| n.to_string()).unwrap_or_default(),
            fmt(row.r),
            row.bound,
            fmt(row.value),
            row.stderr.map(fmt).unwrap_or_default(),
        ));
    }
    s
}

// --- Commands ---

fn sdp_options(tol_gap: Option<f64>) -> Result<SdpOptions> {
    let mut options = SdpOptions::default();
    if let Some(tol) = tol_gap {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::Parse(format!(
                "tol-gap must lie in (0, 1), got {tol}"
            )));
        }
        options.gap_tol = tol;
    }
    Ok(options)
}

/// Assembles the full pointwise bound report: SLD and RLD scalar bounds,
/// the qubit HGM bound where applicable, and the Holevo bound by SDP.
pub fn bound_report(pt: &ModelPoint, c: &CostMatrix, options: &SdpOptions) -> Result<BoundReport> {
    let slds = sld_set(pt)?;
    let sld = sld_cr_bound(&slds, c)?;
    let rld = match rld_bound(pt, c) {
        Ok(v) => Some(v),
        Err(Error::RldUndefined { .. }) => None,
        Err(e) => return Err(e),
    };
    let hgm = if pt.dim() == 2 {
        Some(hgm_bound(&slds, c)?)
    } else {
        None
    };
    let hcr = hcr_bound_with(pt, c, options)?;
    let compat = compatibility_report(&slds, c);
    let d_invariant = match d_invariance_check(pt) {
        Ok(dinv) => Some(dinv.invariant),
        Err(Error::Domain(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(BoundReport {
        sld,
        rld,
        hgm,
        hcr: hcr.value,
        max_mean_commutator: compat.max_mean_commutator,
        d_invariant,
        sdp_gap: hcr.sdp_diag.gap,
        sdp_iterations: hcr.sdp_diag.iterations,
    })
}

fn cmd_bounds(
    model: &str,
    cost: &str,
    point: Option<&[f64]>,
    tol_gap: Option<f64>,
    format: Format,
) -> Result<String> {
    let pt = resolve_model_point(model, point)?;
    let c = resolve_cost(cost, pt.param_count())?;
    let options = sdp_options(tol_gap)?;
    let report = bound_report(&pt, &c, &options)?;
    if format == Format::Structured {
        return Ok(report.structured());
    }
    let mut out = Report::new();
    let opt = |v: Option<f64>| v.map(fmt).unwrap_or_else(|| "undefined".into());
    out.push("model", model);
    out.push(
        "point",
        pt.theta
            .iter()
            .map(|&t| format!("{t:.6}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    out.push("sld", fmt(report.sld));
    out.push("rld", opt(report.rld));
    out.push("hgm", opt(report.hgm));
    out.push("hcr", fmt(report.hcr));
    out.push(
        "max_mean_commutator",
        format!("{:.3e}", report.max_mean_commutator),
    );
    out.push(
        "d_invariant",
        match report.d_invariant {
            Some(b) => b.to_string(),
            None => "undefined".into(),
        },
    );
    out.push("sdp_gap", format!("{:.3e}", report.sdp_gap));
    out.push("sdp_iterations", report.sdp_iterations.to_string());
    Ok(out.render(format))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussianModelFile {
    q_modes: usize,
    c_vars: usize,
    a: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

fn load_gaussian_model(path: &Path) -> Result<GaussianShiftModel> {
    let text = std::fs::read_to_string(path)?;
    let file: GaussianModelFile = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    GaussianShiftModel::new(
        file.q_modes,
        file.c_vars,
        rmatrix_from_rows("encoding a", &file.a)?,
        rmatrix_from_rows("covariance v", &file.v)?,
    )
}

fn cmd_gaussian(model: &Path, cost: &str, format: Format) -> Result<String> {
    let g = load_gaussian_model(model)?;
    let c = resolve_cost(cost, g.param_count())?;
    let f = gaussian_qfi(&g)?;
    let finv = f.clone().try_inverse().ok_or(Error::Unidentifiable { weight: 0.0 })?;
    let sld = (c.matrix() * finv).trace();
    let (hcr, _) = gaussian_hcr(&g, &c)?;
    let meas = optimal_linear_measurement(&g, &c)?;
    let mut out = Report::new();
    out.push("q_modes", g.q_modes().to_string());
    out.push("c_vars", g.c_vars().to_string());
    out.push("parameters", g.param_count().to_string());
    out.push("sld", fmt(sld));
    out.push("hcr", fmt(hcr));
    out.push("hcr_minus_sld", fmt(hcr - sld));
    out.push("linear_measurement_cost", fmt(meas.measured_cost(&g, &c)));
    out.push(
        "heisenberg_margin",
        fmt(heisenberg_margin(g.covariance(), g.symplectic())),
    );
    out.push("ancilla_regularized", meas.regularized.to_string());
    Ok(out.render(format))
}

fn cmd_qlan(spectrum: Option<&[f64]>, r: Option<f64>, format: Format) -> Result<String> {
    let mu: Vec<f64> = match (spectrum, r) {
        (Some(_), Some(_)) => {
            return Err(Error::Parse(
                "--spectrum and --r are mutually exclusive".into(),
            ))
        }
        (Some(mu), None) => mu.to_vec(),
        (None, Some(r)) => {
            if !(0.0 < r && r < 1.0) {
                return Err(Error::Parse(format!(
                    "qubit radius must lie in (0, 1), got {r}"
                )));
            }
            vec![(1.0 + r) / 2.0, (1.0 - r) / 2.0]
        }
        (None, None) => {
            return Err(Error::Parse(
                "qlan needs --spectrum mu1,mu2,... or --r RADIUS".into(),
            ))
        }
    };
    let limit = limit_model(&mu)?;
    let bures = lam_bures(&mu)?;
    let frob = lam_frobenius(&mu)?;
    let mut out = Report::new();
    out.push("dim", limit.dim().to_string());
    out.push(
        "spectrum",
        mu.iter().map(|&m| format!("{m:.6}")).collect::<Vec<_>>().join(","),
    );
    out.push("quantum_modes", limit.modes().len().to_string());
    out.push("classical_dim", (limit.dim() - 1).to_string());
    out.push("lam_bures", fmt(bures));
    out.push("lam_frobenius", fmt(frob));
    Ok(out.render(format))
}

#[allow(clippy::too_many_arguments)]
fn cmd_bayes(
    family: Option<&str>,
    n: Option<usize>,
    weight: &str,
    nodes: usize,
    model: Option<&str>,
    prior: Option<&str>,
    cost: &str,
    format: Format,
) -> Result<String> {
    match (family, model) {
        (Some(family), None) => {
            let n = n.ok_or_else(|| {
                Error::Parse("a covariant family needs --n COPIES".into())
            })?;
            let mut out = Report::new();
            out.push("family", family);
            out.push("n", n.to_string());
            match family {
                "covariant-pure" => {
                    let cost = covariant_pure_qubit_cost(n)?;
                    out.push("cost", fmt(cost));
                    out.push("scaled_cost", fmt(n as f64 * cost));
                }
                "covariant-mixed" => {
                    let w: Box<dyn Fn(f64) -> f64> = match weight {
                        "uniform" => Box::new(|_| 1.0),
                        "ball" => Box::new(|r: f64| 3.0 * r * r),
                        other => {
                            return Err(Error::Parse(format!(
                                "unknown radial weight {other:?}; use uniform or ball"
                            )))
                        }
                    };
                    let spec = CovariantQubitSpec::normalized(n, nodes, w)?;
                    let (exact, asymptotic) = covariant_mixed_qubit_cost(&spec)?;
                    out.push("weight", weight);
                    out.push("cost", fmt(exact));
                    out.push("scaled_cost", fmt(n as f64 * exact));
                    out.push("asymptotic_cost", fmt(asymptotic));
                    out.push("asymptotic_scaled_cost", fmt(n as f64 * asymptotic));
                }
                other => {
                    return Err(Error::Parse(format!(
                        "unknown family {other:?}; use covariant-pure or covariant-mixed"
                    )))
                }
            }
            Ok(out.render(format))
        }
        (None, Some(model)) => {
            let prior = prior.ok_or_else(|| {
                Error::Parse("a custom Bayes run needs --prior kind:args".into())
            })?;
            let prior = resolve_prior(prior)?;
            let (family, _) = builtin_model(model)?;
            if family.param_count() != 1 {
                return Err(Error::Parse(
                    "custom priors are one-dimensional; use a one-parameter model \
                     such as phase:B"
                        .into(),
                ));
            }
            let c = resolve_cost(cost, 1)?;
            let solution = bayes_optimal_single(&family, &prior)?;
            let scale = c.matrix()[(0, 0)];
            let mut out = Report::new();
            out.push("model", model);
            out.push("prior_variance", fmt(scale * prior.quadratic_moment(&CostMatrix::identity(1))));
            out.push("optimal_cost", fmt(scale * solution.cost));
            match van_trees_bound(&family, &prior, &c) {
                Ok(v) => out.push("van_trees", fmt(v)),
                Err(Error::Domain(_)) => out.push("van_trees", "undefined"),
                Err(e) => return Err(e),
            }
            Ok(out.render(format))
        }
        (Some(_), Some(_)) => Err(Error::Parse(
            "--family and --model are mutually exclusive".into(),
        )),
        (None, None) => Err(Error::Parse(
            "bayes needs --family covariant-pure|covariant-mixed or --model with --prior".into(),
        )),
    }
}

fn simulation_rows(
    ns: &[usize],
    r: f64,
    theta: f64,
    c: f64,
    trials: usize,
    seed: u64,
    with_bounds: bool,
) -> Result<Vec<CurveRow>> {
    let mut rows = Vec::new();
    if with_bounds {
        let pt = qubit_r_theta().evaluate(&[r, std::f64::consts::FRAC_PI_2])?;
        let cost = CostMatrix::from_diagonal(&[c, r * r])?;
        let slds = sld_set(&pt)?;
        let report = bound_report(&pt, &cost, &SdpOptions::default())?;
        rows.push(CurveRow {
            n: None,
            r,
            bound: "hcr".into(),
            value: report.hcr,
            stderr: None,
        });
        rows.push(CurveRow {
            n: None,
            r,
            bound: "hgm".into(),
            value: hgm_bound(&slds, &cost)?,
            stderr: None,
        });
    }
    for &n in ns {
        let summary = collective_estimation_run(n, r, theta, c, trials, seed)?;
        rows.push(CurveRow {
            n: Some(n),
            r,
            bound: "simulated".into(),
            value: summary.scaled_cost,
            stderr: Some(summary.scaled_stderr),
        });
    }
    Ok(rows)
}

fn cmd_simulate(
    ns: &[usize],
    r: f64,
    theta: f64,
    c: f64,
    trials: usize,
    seed: u64,
    format: Format,
) -> Result<String> {
    let rows = simulation_rows(ns, r, theta, c, trials, seed, true)?;
    if format == Format::Csv {
        return Ok(curves_csv_string(&rows));
    }
    let mut out = Report::new();
    out.push("r", fmt(r));
    out.push("theta", fmt(theta));
    out.push("c", fmt(c));
    out.push("trials", trials.to_string());
    out.push("seed", seed.to_string());
    for row in &rows {
        match row.n {
            Some(n) => {
                out.push(
                    &format!("scaled_cost_n{n}"),
                    format!(
                        "{} (stderr {})",
                        fmt(row.value),
                        fmt(row.stderr.unwrap_or(0.0))
                    ),
                );
            }
            None => out.push(&row.bound.clone(), fmt(row.value)),
        }
    }
    Ok(out.render(format))
}

/// One column of the six-column summary: the scalar bounds plus the two
/// qualitative diagnostics.
struct SummaryColumn {
    label: &'static str,
    sld: f64,
    hcr: f64,
    incompatible: bool,
    collective_gain: bool,
}

fn qubit_column(
    label: &'static str,
    pt: &ModelPoint,
    c: &CostMatrix,
    options: &SdpOptions,
    tol: f64,
) -> Result<SummaryColumn> {
    let slds = sld_set(pt)?;
    let sld = sld_cr_bound(&slds, c)?;
    let hcr = hcr_bound_with(pt, c, options)?.value;
    let hgm = hgm_bound(&slds, c)?;
    Ok(SummaryColumn {
        label,
        sld,
        hcr,
        incompatible: hcr - sld > tol * (1.0 + sld.abs()),
        collective_gain: hgm - hcr > tol * (1.0 + hcr.abs()),
    })
}

fn gaussian_column(
    label: &'static str,
    g: &GaussianShiftModel,
    c: &CostMatrix,
    tol: f64,
) -> Result<SummaryColumn> {
    let f = gaussian_qfi(g)?;
    let finv = f.clone().try_inverse().ok_or(Error::Unidentifiable { weight: 0.0 })?;
    let sld = (c.matrix() * finv).trace();
    let (hcr, _) = gaussian_hcr(g, c)?;
    let linear = optimal_linear_measurement(g, c)?.measured_cost(g, c);
    Ok(SummaryColumn {
        label,
        sld,
        hcr,
        incompatible: hcr - sld > tol * (1.0 + sld.abs()),
        // A single-copy linear measurement attaining the bound means
        // collective strategies cannot improve on it.
        collective_gain: linear - hcr > tol * (1.0 + hcr.abs()),
    })
}

fn cmd_table1(
    r: f64,
    c: f64,
    tol: f64,
    tol_gap: Option<f64>,
    format: Format,
) -> Result<String> {
    use std::f64::consts::FRAC_PI_2;
    if !(0.0 < r && r < 1.0) {
        return Err(Error::Parse(format!(
            "radius must lie in (0, 1), got {r}"
        )));
    }
    if c <= 0.0 {
        return Err(Error::Parse(format!(
            "radial cost weight must be positive, got {c}"
        )));
    }
    let options = sdp_options(tol_gap)?;

    // Qubit columns, bounds by SDP. Costs follow diag(c(r), r^2, r^2
    // sin^2 theta) in spherical parameters, evaluated on the equator.
    let pure_pt = pure_qubit().evaluate(&[FRAC_PI_2, 0.0])?;
    let pure_c = CostMatrix::identity(2);
    let rt_pt = qubit_r_theta().evaluate(&[r, FRAC_PI_2])?;
    let rt_c = CostMatrix::from_diagonal(&[c, r * r])?;
    let full_pt = qubit_bloch_spherical().evaluate(&[r, FRAC_PI_2, 0.0])?;
    let full_c = CostMatrix::from_diagonal(&[c, r * r, r * r])?;
    let qubit = [
        qubit_column("qubit(theta,phi)", &pure_pt, &pure_c, &options, tol)?,
        qubit_column("qubit(r,theta)", &rt_pt, &rt_c, &options, tol)?,
        qubit_column("qubit(r,theta,phi)", &full_pt, &full_c, &options, tol)?,
    ];

    // Gaussian twins: variances 1/(2r) on the quadratures and 1 - r^2 on
    // the classical variable, quadrature encodings scaled by 1/sqrt(2r).
    // The two-quadrature model is the pure-state limit r = 1 (vacuum).
    let s = 1.0 / (2.0 * r).sqrt();
    let sq = 1.0 / (2.0 * r);
    let sz = 1.0 - r * r;
    let vac = GaussianShiftModel::new(
        1,
        0,
        RMatrix::identity(2, 2) * std::f64::consts::FRAC_1_SQRT_2,
        RMatrix::identity(2, 2) * 0.5,
    )?;
    let qz = GaussianShiftModel::new(
        1,
        1,
        RMatrix::from_row_slice(3, 2, &[s, 0.0, 0.0, 0.0, 0.0, 1.0]),
        RMatrix::from_diagonal(&crate::matrix::RVector::from_column_slice(&[sq, sq, sz])),
    )?;
    let qpz = GaussianShiftModel::new(
        1,
        1,
        RMatrix::from_diagonal(&crate::matrix::RVector::from_column_slice(&[s, s, 1.0])),
        RMatrix::from_diagonal(&crate::matrix::RVector::from_column_slice(&[sq, sq, sz])),
    )?;
    let gauss = [
        gaussian_column("gauss(q,p)", &vac, &CostMatrix::identity(2), tol)?,
        gaussian_column("gauss(q,z)", &qz, &CostMatrix::identity(2), tol)?,
        gaussian_column("gauss(q,p,z)", &qpz, &CostMatrix::identity(3), tol)?,
    ];

    // Column-wise agreement between each qubit model and its twin.
    let mut max_dev = 0.0f64;
    let mut mismatches = Vec::new();
    for (q, g) in qubit.iter().zip(&gauss) {
        for (what, a, b) in [("sld", q.sld, g.sld), ("hcr", q.hcr, g.hcr)] {
            let dev = (a - b).abs();
            max_dev = max_dev.max(dev);
            if dev > tol {
                mismatches.push(format!(
                    "  {:<22} {:<14} qubit {}  gaussian {}  |diff| {:.3e}",
                    q.label, what, fmt(a), fmt(b), dev
                ));
            }
        }
    }
    if !mismatches.is_empty() {
        return Err(Error::Precision(format!(
            "qubit and Gaussian columns disagree beyond {tol:.1e}:\n{}",
            mismatches.join("\n")
        )));
    }

    let flag = |b: bool| if b { "+" } else { "-" };
    match format {
        Format::Table => {
            let mut s = String::new();
            s.push_str(&format!(
                "bound summary at r = {}, c = {}  (agreement tolerance {tol:.1e})\n\n",
                fmt(r),
                fmt(c)
            ));
            let cols: Vec<&SummaryColumn> = qubit.iter().chain(gauss.iter()).collect();
            s.push_str(&format!("{:<16}", "column"));
            for col in &cols {
                s.push_str(&format!("{:>20}", col.label));
            }
            s.push('\n');
            s.push_str(&format!("{:<16}", "sld"));
            for col in &cols {
                s.push_str(&format!("{:>20.6}", col.sld));
            }
            s.push('\n');
            s.push_str(&format!("{:<16}", "hcr_minus_sld"));
            for col in &cols {
                s.push_str(&format!("{:>20.6}", col.hcr - col.sld));
            }
            s.push('\n');
            s.push_str(&format!("{:<16}", "incompatible"));
            for col in &cols {
                s.push_str(&format!("{:>20}", flag(col.incompatible)));
            }
            s.push('\n');
            s.push_str(&format!("{:<16}", "collective_gain"));
            for col in &cols {
                s.push_str(&format!("{:>20}", flag(col.collective_gain)));
            }
            s.push('\n');
            s.push_str(&format!(
                "\ncolumn-wise agreement: OK (max deviation {max_dev:.3e})\n"
            ));
            Ok(s)
        }
        Format::Structured | Format::Csv => {
            let mut out = Report::new();
            out.push("r", fmt(r));
            out.push("c", fmt(c));
            let keys = ["qubit_pure", "qubit_r_theta", "qubit_full"];
            for (key, col) in keys.iter().zip(&qubit) {
                out.push(&format!("{key}_sld"), fmt(col.sld));
                out.push(&format!("{key}_hcr"), fmt(col.hcr));
                out.push(&format!("{key}_incompatible"), flag(col.incompatible));
                out.push(&format!("{key}_collective_gain"), flag(col.collective_gain));
            }
            let keys = ["gauss_qp", "gauss_qz", "gauss_qpz"];
            for (key, col) in keys.iter().zip(&gauss) {
                out.push(&format!("{key}_sld"), fmt(col.sld));
                out.push(&format!("{key}_hcr"), fmt(col.hcr));
                out.push(&format!("{key}_incompatible"), flag(col.incompatible));
                out.push(&format!("{key}_collective_gain"), flag(col.collective_gain));
            }
            out.push("max_column_deviation", format!("{max_dev:.3e}"));
            Ok(out.render(format))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_figures(
    out_dir: &Path,
    grid: usize,
    ns: &[usize],
    trials: usize,
    seed: u64,
    theta: f64,
    c: f64,
) -> Result<String> {
    use std::f64::consts::FRAC_PI_2;
    if grid < 2 {
        return Err(Error::Parse(format!(
            "grid needs at least 2 points, got {grid}"
        )));
    }
    std::fs::create_dir_all(out_dir)?;
    let radii: Vec<f64> = (1..=grid).map(|i| i as f64 / (grid + 1) as f64).collect();

    // Three-parameter Euclidean family: SLD, HCR, HGM over the radius.
    let full = qubit_bloch_cartesian();
    let c3 = CostMatrix::identity(3);
    let mut bounds_rows = Vec::new();
    for &r in &radii {
        let pt = full.evaluate(&[0.0, 0.0, r])?;
        let slds = sld_set(&pt)?;
        let report = bound_report(&pt, &c3, &SdpOptions::default())?;
        for (name, value) in [
            ("sld", report.sld),
            ("hcr", report.hcr),
            ("hgm", hgm_bound(&slds, &c3)?),
        ] {
            bounds_rows.push(CurveRow {
                n: None,
                r,
                bound: name.into(),
                value,
                stderr: None,
            });
        }
    }
    let bounds_path = out_dir.join("bounds_vs_r.csv");
    write_curves_csv(&bounds_path, &bounds_rows)?;

    // Two-parameter (r, theta) family: HCR (= SLD), HGM, and the scaled
    // simulated cost of the collective protocol for each copy count.
    let two = qubit_r_theta();
    let mut sim_rows = Vec::new();
    for &r in &radii {
        let pt = two.evaluate(&[r, FRAC_PI_2])?;
        let cost = CostMatrix::from_diagonal(&[c, r * r])?;
        let slds = sld_set(&pt)?;
        let report = bound_report(&pt, &cost, &SdpOptions::default())?;
        sim_rows.push(CurveRow {
            n: None,
            r,
            bound: "hcr".into(),
            value: report.hcr,
            stderr: None,
        });
        sim_rows.push(CurveRow {
            n: None,
            r,
            bound: "hgm".into(),
            value: hgm_bound(&slds, &cost)?,
            stderr: None,
        });
        for &n in ns {
            let summary = collective_estimation_run(n, r, theta, c, trials, seed)?;
            sim_rows.push(CurveRow {
                n: Some(n),
                r,
                bound: "simulated".into(),
                value: summary.scaled_cost,
                stderr: Some(summary.scaled_stderr),
            });
        }
    }
    let sim_path = out_dir.join("simulation_vs_r.csv");
    write_curves_csv(&sim_path, &sim_rows)?;

    Ok(format!(
        "wrote {} ({} rows)\nwrote {} ({} rows)\n",
        bounds_path.display(),
        bounds_rows.len(),
        sim_path.display(),
        sim_rows.len()
    ))
}
