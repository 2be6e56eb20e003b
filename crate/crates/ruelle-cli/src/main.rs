//! Batch front end for the toolkit: one experiment per invocation.
//!
//! Every subcommand prints a human summary on stdout and, when `--out DIR`
//! is given, writes a flat `result.kv` file plus CSV tables into DIR. All
//! numbers in the key-value file carry 17 significant digits, all randomness
//! is a pure function of `--seed`, and repeated runs with the same inputs
//! produce byte-identical artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use ruelle::stats;
use ruelle::transfer::{self, DiscretizedOperator};
use ruelle::zeta;
use ruelle::{
    dimension, toral, CylinderPotential, Error as CoreError, Symbol, ToralAutomorphism,
    TransitionMatrix, DEFAULT_EIGEN_TOL, DEFAULT_ENUM_CAP, DEFAULT_MAX_ITER, DEFAULT_METRIC_BASE,
};

#[derive(Parser)]
#[command(
    name = "ruelle",
    version,
    about = "Thermodynamic-formalism experiments on subshifts of finite type",
    long_about = "Thermodynamic-formalism experiments on subshifts of finite type.\n\n\
        Options may also come from a flat `key = value` config file passed with\n\
        --config; command-line flags win over file entries, and unknown keys in\n\
        the file are rejected. Exit codes: 0 success, 1 input error, 2 numerical\n\
        non-convergence."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Topological entropy and periodic-point counts of an SFT
    Entropy(Opts),
    /// Topological pressure of a cylinder potential
    Pressure(Opts),
    /// Gibbs cylinder weights and the spectral data behind them
    Gibbs(Opts),
    /// Correlation decay between two observables under the Gibbs measure
    Mix(Opts),
    /// Monte Carlo central-limit check for normalized Birkhoff sums
    Clt(Opts),
    /// Pressure derivatives compared against their closed forms
    Derivatives(Opts),
    /// Dynamical zeta coefficients and the pole at the inverse eigenvalue
    Zeta(Opts),
    /// Dimension of a conformal repeller from the zero of s -> P(-s l)
    Bowen(Opts),
    /// Response of the equilibrium state to potential perturbations
    Stability(Opts),
    /// Summary table for a hyperbolic 2x2 toral automorphism
    CatmapReport(Opts),
}

#[derive(Args, Clone, Default)]
struct Opts {
    /// Flat `key = value` config file; explicit flags win
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Transition-matrix file
    #[arg(long, value_name = "PATH")]
    sft: Option<PathBuf>,
    /// Cylinder-potential file
    #[arg(long, value_name = "PATH")]
    potential: Option<PathBuf>,
    /// Observable file (same format as potentials)
    #[arg(long = "obs-g", value_name = "PATH")]
    obs_g: Option<PathBuf>,
    /// Second observable for mix; defaults to the first
    #[arg(long = "obs-h", value_name = "PATH")]
    obs_h: Option<PathBuf>,
    /// Coding-matrix file for catmap-report
    #[arg(long, value_name = "PATH")]
    coding: Option<PathBuf>,
    /// Row-major 2x2 integer matrix "a,b,c,d" for catmap-report
    #[arg(long, value_name = "A,B,C,D")]
    matrix: Option<String>,
    /// Discretization depth (cylinder length)
    #[arg(long, value_name = "M")]
    depth: Option<usize>,
    /// Series length / enumeration cutoff / metric depth, per subcommand
    #[arg(long, value_name = "N")]
    nmax: Option<usize>,
    /// Monte Carlo trial count
    #[arg(long, value_name = "T")]
    trials: Option<usize>,
    /// Birkhoff sum length for clt
    #[arg(long, value_name = "N")]
    n: Option<usize>,
    /// Master RNG seed
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    /// Worker threads for sampling; results never depend on this
    #[arg(long, value_name = "W")]
    workers: Option<usize>,
    /// Solver tolerance (eigen residual, or Bowen root width)
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
    /// Iteration cap for the power method
    #[arg(long, value_name = "K")]
    maxiter: Option<usize>,
    /// Finite-difference step for derivatives
    #[arg(long, value_name = "H")]
    step: Option<f64>,
    /// Ultrametric base for Wasserstein distances
    #[arg(long, value_name = "THETA")]
    theta: Option<f64>,
    /// Sup bound on the perturbed differential, for the Holder exponent
    #[arg(long, value_name = "D")]
    dg: Option<f64>,
    /// Comma-separated perturbation sizes for stability
    #[arg(long, value_name = "LIST")]
    deltas: Option<String>,
    /// Pressure-curve grid "lo,hi,steps" for bowen
    #[arg(long, value_name = "LO,HI,K")]
    grid: Option<String>,
    /// Directory receiving result.kv and CSV tables
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

enum RunError {
    Input(String),
    Core { op: &'static str, source: CoreError },
}

impl RunError {
    fn code(&self) -> u8 {
        match self {
            RunError::Input(_) => 1,
            RunError::Core { source, .. } => {
                if source.is_convergence_failure() {
                    2
                } else {
                    1
                }
            }
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Input(m) => write!(f, "{m}"),
            RunError::Core { op, source } => write!(f, "{op}: {source}"),
        }
    }
}

trait CoreCtx<T> {
    fn ctx(self, op: &'static str) -> Result<T, RunError>;
}

impl<T> CoreCtx<T> for ruelle::Result<T> {
    fn ctx(self, op: &'static str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Core { op, source })
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), RunError> {
    let (mut opts, f): (Opts, fn(&Opts) -> Result<(), RunError>) = match cli.cmd {
        Cmd::Entropy(o) => (o, cmd_entropy),
        Cmd::Pressure(o) => (o, cmd_pressure),
        Cmd::Gibbs(o) => (o, cmd_gibbs),
        Cmd::Mix(o) => (o, cmd_mix),
        Cmd::Clt(o) => (o, cmd_clt),
        Cmd::Derivatives(o) => (o, cmd_derivatives),
        Cmd::Zeta(o) => (o, cmd_zeta),
        Cmd::Bowen(o) => (o, cmd_bowen),
        Cmd::Stability(o) => (o, cmd_stability),
        Cmd::CatmapReport(o) => (o, cmd_catmap_report),
    };
    if let Some(cfg) = opts.config.clone() {
        merge_config(&mut opts, &cfg)?;
    }
    let workers = opts.workers.unwrap_or(1).max(1);
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global();
    f(&opts)
}

// Config file: one `key = value` per line, `#` comments, keys named after
// the long flags (dashes become underscores). Flags already set stay.
fn merge_config(o: &mut Opts, path: &Path) -> Result<(), RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| RunError::Input(format!("config {}: {e}", path.display())))?;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = idx + 1;
        let Some((k, v)) = line.split_once('=') else {
            return Err(RunError::Input(format!(
                "config {} line {lineno}: expected `key = value`",
                path.display()
            )));
        };
        let (k, v) = (k.trim(), v.trim());
        macro_rules! slot {
            ($field:ident) => {
                if o.$field.is_none() {
                    o.$field = Some(parsed(k, v, lineno)?);
                }
            };
        }
        match k {
            "sft" => slot!(sft),
            "potential" => slot!(potential),
            "obs_g" => slot!(obs_g),
            "obs_h" => slot!(obs_h),
            "coding" => slot!(coding),
            "matrix" => slot!(matrix),
            "depth" => slot!(depth),
            "nmax" => slot!(nmax),
            "trials" => slot!(trials),
            "n" => slot!(n),
            "seed" => slot!(seed),
            "workers" => slot!(workers),
            "tol" => slot!(tol),
            "maxiter" => slot!(maxiter),
            "step" => slot!(step),
            "theta" => slot!(theta),
            "dg" => slot!(dg),
            "deltas" => slot!(deltas),
            "grid" => slot!(grid),
            "out" => slot!(out),
            other => {
                return Err(RunError::Input(format!(
                    "config {} line {lineno}: unknown key `{other}`",
                    path.display()
                )));
            }
        }
    }
    Ok(())
}

fn parsed<T: std::str::FromStr>(key: &str, v: &str, lineno: usize) -> Result<T, RunError> {
    v.parse()
        .map_err(|_| RunError::Input(format!("config line {lineno}: bad value for `{key}`: {v}")))
}

/// Collects the summary: stdout gets readable lines, `result.kv` gets the
/// same keys with floats at full precision.
struct Out {
    dir: Option<PathBuf>,
    kv: String,
}

impl Out {
    fn new(dir: Option<PathBuf>) -> Result<Self, RunError> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)
                .map_err(|e| RunError::Input(format!("out dir {}: {e}", d.display())))?;
        }
        Ok(Out { dir, kv: String::new() })
    }

    // Stdout writes swallow errors so a closed pipe (e.g. `| head`) ends the
    // run quietly instead of panicking; result files still get everything.
    fn line(&self, s: &str) {
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), "{s}");
    }

    fn num(&mut self, key: &str, x: f64) {
        self.line(&format!("{key} = {x}"));
        let _ = writeln!(self.kv, "{key} = {x:.16e}");
    }

    /// Rounded headline on stdout, full precision in the result file.
    fn num_rounded(&mut self, key: &str, x: f64, decimals: usize) {
        self.line(&format!("{key} = {x:.decimals$}"));
        let _ = writeln!(self.kv, "{key} = {x:.16e}");
    }

    fn int(&mut self, key: &str, x: impl std::fmt::Display) {
        self.line(&format!("{key} = {x}"));
        let _ = writeln!(self.kv, "{key} = {x}");
    }

    fn csv(&self, name: &str, header: &str, rows: &[String]) -> Result<(), RunError> {
        let Some(d) = &self.dir else { return Ok(()) };
        let mut s = String::with_capacity(header.len() + 1 + rows.len() * 40);
        s.push_str(header);
        s.push('\n');
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        let path = d.join(name);
        fs::write(&path, s).map_err(|e| RunError::Input(format!("{}: {e}", path.display())))
    }

    fn finish(self) -> Result<(), RunError> {
        let Some(d) = &self.dir else { return Ok(()) };
        let path = d.join("result.kv");
        fs::write(&path, self.kv)
            .map_err(|e| RunError::Input(format!("{}: {e}", path.display())))
    }
}

fn load_sft(path: &Option<PathBuf>, flag: &str) -> Result<Arc<TransitionMatrix>, RunError> {
    let p = path
        .as_ref()
        .ok_or_else(|| RunError::Input(format!("missing --{flag}")))?;
    let text =
        fs::read_to_string(p).map_err(|e| RunError::Input(format!("{}: {e}", p.display())))?;
    TransitionMatrix::from_text(&text)
        .map(Arc::new)
        .ctx("transition-matrix parse")
}

fn load_potential(
    path: &Option<PathBuf>,
    flag: &str,
    sft: &Arc<TransitionMatrix>,
) -> Result<CylinderPotential, RunError> {
    let p = path
        .as_ref()
        .ok_or_else(|| RunError::Input(format!("missing --{flag}")))?;
    let text =
        fs::read_to_string(p).map_err(|e| RunError::Input(format!("{}: {e}", p.display())))?;
    CylinderPotential::from_text(sft.clone(), &text).ctx("potential parse")
}

fn parse_f64_list(spec: &str, flag: &str) -> Result<Vec<f64>, RunError> {
    spec.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| RunError::Input(format!("--{flag}: bad number `{}`", t.trim())))
        })
        .collect()
}

fn word_label(w: &[Symbol]) -> String {
    let mut s = String::with_capacity(w.len() * 2);
    for (i, sym) in w.iter().enumerate() {
        if i > 0 {
            s.push('-');
        }
        let _ = write!(s, "{sym}");
    }
    s
}

fn eigen_tol(o: &Opts) -> f64 {
    o.tol.unwrap_or(DEFAULT_EIGEN_TOL)
}

fn max_iter(o: &Opts) -> usize {
    o.maxiter.unwrap_or(DEFAULT_MAX_ITER)
}

fn cmd_entropy(o: &Opts) -> Result<(), RunError> {
    let sft = load_sft(&o.sft, "sft")?;
    let mut out = Out::new(o.out.clone())?;
    let (primitive, exponent) = sft.is_primitive();
    let rho = sft.spectral_radius().ctx("spectral radius")?;
    let h = sft.topological_entropy().ctx("entropy")?;
    out.num("entropy", h);
    out.num("spectral_radius", rho);
    out.int("alphabet_size", sft.alphabet_size());
    out.int("primitive", u8::from(primitive));
    if let Some(e) = exponent {
        out.int("primitivity_exponent", e);
    }
    let n_max = o.nmax.unwrap_or(8).min(64);
    let rows: Vec<String> = (1..=n_max)
        .map(|n| format!("{n},{}", sft.count_fixed(n)))
        .collect();
    out.csv("fixed_points.csv", "n,fixed_points", &rows)?;
    out.finish()
}

fn cmd_pressure(o: &Opts) -> Result<(), RunError> {
    let sft = load_sft(&o.sft, "sft")?;
    let phi = match &o.potential {
        Some(_) => load_potential(&o.potential, "potential", &sft)?,
        None => CylinderPotential::constant(sft.clone(), 0.0),
    };
    let depth = o.depth.unwrap_or_else(|| transfer::default_depth(&phi));
    let mut out = Out::new(o.out.clone())?;
    let mut rows = Vec::new();
    let mut headline = None;
    // Scan from the minimal faithful depth up: the pressure of a finite-range
    // potential is depth-exact, so the column doubles as a consistency table.
    for d in transfer::default_depth(&phi)..=depth.max(transfer::default_depth(&phi)) {
        let op = DiscretizedOperator::build(phi.clone(), d).ctx("operator build")?;
        let lambda = op.leading_lambda(eigen_tol(o), max_iter(o)).ctx("spectral solve")?;
        rows.push(format!("{d},{:.16e},{:.16e}", lambda, lambda.ln()));
        headline = Some((d, op.dim(), lambda));
    }
    let (d, dim, lambda) = headline.expect("depth range is never empty");
    out.num("pressure", lambda.ln());
    out.num("lambda", lambda);
    out.int("depth", d);
    out.int("dim", dim);
    out.csv("pressure.csv", "depth,lambda,pressure", &rows)?;
    out.finish()
}

fn cmd_gibbs(o: &Opts) -> Result<(), RunError> {
    let sft = load_sft(&o.sft, "sft")?;
    let phi = load_potential(&o.potential, "potential", &sft)?;
    let depth = o.depth.unwrap_or_else(|| transfer::default_depth(&phi));
    let op = DiscretizedOperator::build(phi, depth).ctx("operator build")?;
    let triple = op
        .leading_triple(eigen_tol(o), max_iter(o))
        .ctx("spectral solve")?;
    let gibbs = op.gibbs_weights(&triple).ctx("gibbs weights")?;
    let mut out = Out::new(o.out.clone())?;
    out.num("pressure", triple.lambda.ln());
    out.num("lambda", triple.lambda);
    out.num("lambda2_mag", triple.lambda2_mag);
    out.num("ratio", triple.ratio);
    out.num("spectral_gap", -triple.ratio.ln());
    out.num("residual", triple.residual);
    out.int("iterations", triple.iterations);
    out.int("depth", depth);
    out.int("dim", op.dim());
    let rows: Vec<String> = gibbs
        .words()
        .iter()
        .zip(gibbs.weights())
        .map(|(w, x)| format!("{},{:.16e}", word_label(w), x))
        .collect();
    out.csv("weights.csv", "word,weight", &rows)?;
    out.finish()
}

fn cmd_mix(o: &Opts) -> Result<(), RunError> {
    let sft = load_sft(&o.sft, "sft")?;
    let phi = load_potential(&o.potential, "potential", &sft)?;
    let g = load_potential(&o.obs_g, "obs-g", &sft)?;
    let h = match &o.obs_h {
        Some(_) => load_potential(&o.obs_h, "obs-h", &sft)?,
        None => g.clone(),
    };
    let depth = o.depth.unwrap_or_else(|| {
        transfer::default_depth(&phi).max(g.range()).max(h.range())
    });
    let n_max = o.nmax.unwrap_or(30);
    let op = DiscretizedOperator::build(phi, depth).ctx("operator build")?;
    let triple = op
        .leading_triple(eigen_tol(o), max_iter(o))
        .ctx("spectral solve")?;
    let rep = stats::correlation(&op, &triple, &g, &h, n_max).ctx("correlation")?;
    let mut out = Out::new(o.out.clone())?;
    out.num("mean_g", rep.mean_g);
    out.num("mean_h", rep.mean_h);
    out.num("fitted_rate", rep.fitted_rate);
    out.num("predicted_rate", rep.predicted_rate);
    out.int("n_max", n_max);
    out.int("depth", depth);
    let rows: Vec<String> = rep
        .lags
        .iter()
        .zip(&rep.values)
        .map(|(l, v)| format!("{l},{v:.16e}"))
        .collect();
    out.csv("correlations.csv", "lag,covariance", &rows)?;
    out.finish()
}

fn cmd_clt(o: &Opts) -> Result<(), RunError> {
    let sft = load_sft(&o.sft, "sft")?;
    let phi = load_potential(&o.potential, "potential", &sft)?;
    let g = load_potential(&o.obs_g, "obs-g", &sft)?;
    let depth = o
        .depth
        .unwrap_or_else(|| transfer::default_depth(&phi).max(g.range()));
    let n = o.n.unwrap_or(10_000);
    let trials = o.trials.unwrap_or(2_000);
    let seed = o.seed.unwrap_or(1);
    let op = DiscretizedOperator::build(phi, depth).ctx("operator build")?;
    let triple = op
        .leading_triple(eigen_tol(o), max_iter(o))
        .ctx("spectral solve")?;
    let gk = stats::green_kubo(&op, &triple, &g).ctx("green-kubo sum")?;
    let gibbs = op.gibbs_weights(&triple).ctx("gibbs weights")?;
    let rep = stats::clt_monte_carlo(&gibbs, &g, n, trials, seed, gk.sigma2)
        .ctx("clt sampling")?;
    let mut out = Out::new(o.out.clone())?;
    out.num("sigma2", gk.sigma2);
    out.num("var0", gk.var0);
    out.num("tail_bound", gk.tail_bound);
    out.num("mean", gk.mean);
    out.int("truncation_k", gk.truncation_k);
    out.num("sample_mean", rep.sample_mean);
    out.num("sample_var", rep.sample_var);
    out.num("frac_exceeding_1p96", rep.frac_exceeding_1p96);
    out.int("n", rep.n);
    out.int("trials", rep.trials);
    out.int("seed", rep.seed);
    let mut rows = vec![format!("0,{:.16e}", gk.var0)];
    rows.extend(
        gk.covariances
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{},{c:.16e}", i + 1)),
    );
    out.csv("covariances.csv", "k,covariance", &rows)?;
    out.finish()
}

fn cmd_derivatives(o: &Opts) -> Result<(), RunError> {
    let sft = load_sft(&o.sft, "sft")?;
    let phi = load_potential(&o.potential, "potential", &sft)?;
    let psi = load_potential(&o.obs_g, "obs-g", &sft)?;
    let depth = o
        .depth
        .unwrap_or_else(|| transfer::default_depth(&phi).max(psi.range()));
    let step = o.step.unwrap_or(1e-4);
    let rep = stats::pressure_derivative_check(&phi, &psi, step, depth)
        .ctx("derivative check")?;
    let mut out = Out::new(o.out.clone())?;
    out.num("numeric_first", rep.numeric_first);
    out.num("analytic_first", rep.analytic_first);
    out.num("first_abs_error", (rep.numeric_first - rep.analytic_first).abs());
    out.num("numeric_second", rep.numeric_second);
    out.num("analytic_second", rep.analytic_second);
    out.num(
        "second_abs_error",
        (rep.numeric_second - rep.analytic_second).abs(),
    );
    out.num("step", rep.step);
    out.num("second_step", rep.second_step);
    out.int("depth", depth);
    let rows = vec![
        format!(
            "1,{:.16e},{:.16e},{:.16e}",
            rep.numeric_first,
            rep.analytic_first,
            (rep.numeric_first - rep.analytic_first).abs()
        ),
        format!(
            "2,{:.16e},{:.16e},{:.16e}",
            rep.numeric_second,
            rep.analytic_second,
            (rep.numeric_second - rep.analytic_second).abs()
        ),
    ];
    out.csv("derivatives.csv", "order,numeric,analytic,abs_error", &rows)?;
    out.finish()
}

fn cmd_zeta(o: &Opts) -> Result<(), RunError> {
    let sft = load_sft(&o.sft, "sft")?;
    let phi = load_potential(&o.potential, "potential", &sft)?;
    let n_max = o.nmax.unwrap_or(12);
    let trunc = zeta::orbit_sums_capped(&phi, n_max, DEFAULT_ENUM_CAP).ctx("orbit sums")?;
    let depth = o.depth.unwrap_or_else(|| transfer::default_depth(&phi));
    let op = DiscretizedOperator::build(phi.clone(), depth).ctx("operator build")?;
    let pole = zeta::pole_locate(&op, eigen_tol(o), max_iter(o)).ctx("pole search")?;
    let mut out = Out::new(o.out.clone())?;
    out.num("z_star", pole.z_star);
    out.num("implied_lambda", pole.implied_lambda);
    out.num("log_inv_z_star", (1.0 / pole.z_star).ln());
    out.num("det_at_pole", pole.det_at_pole);
    out.num("bracket_width", pole.bracket_width);
    out.num("radius_estimate", trunc.radius_estimate);
    out.int("n_max", trunc.n_max);
    // Interior consistency: zeta times the determinant is 1 up to the
    // truncation remainder of the exponentiated orbit series.
    let z_in = 0.8 * pole.z_star;
    let (zeta_val, remainder) = zeta::zeta_eval(&trunc, Complex64::new(z_in, 0.0));
    let det_in = zeta::fredholm_det(&op, z_in);
    out.num("z_interior", z_in);
    out.num("zeta_at_interior", zeta_val.re);
    out.num("det_at_interior", det_in);
    out.num("zeta_times_det", zeta_val.re * det_in);
    out.num("truncation_remainder", remainder);
    if phi.range() <= 2 {
        let defect = zeta::trace_identity_check(&phi, n_max.min(8), DEFAULT_ENUM_CAP)
            .ctx("trace identity")?;
        out.num("trace_defect", defect);
    }
    let rows: Vec<String> = trunc
        .coefficients
        .iter()
        .enumerate()
        .map(|(i, a)| format!("{},{a:.16e}", i + 1))
        .collect();
    out.csv("coefficients.csv", "n,a_n", &rows)?;
    out.finish()
}

fn cmd_bowen(o: &Opts) -> Result<(), RunError> {
    let sft = load_sft(&o.sft, "sft")?;
    let ell = load_potential(&o.potential, "potential", &sft)?;
    let rep = dimension::ConformalRepeller::new(ell).ctx("repeller build")?;
    let tol = o.tol.unwrap_or(dimension::DEFAULT_BOWEN_TOL);
    let br = dimension::bowen_dimension(&rep, tol).ctx("Bowen solve")?;
    let mut out = Out::new(o.out.clone())?;
    out.num_rounded("dimension", br.s_star, 6);
    out.num("pressure_residual", br.pressure_residual);
    out.num("s_residual", br.s_residual);
    out.int("bisection_steps", br.bisection_steps);
    out.int("newton_steps", br.newton_steps);
    out.num("bracket_lo", br.bracket.0);
    out.num("bracket_hi", br.bracket.1);
    if let Some(spec) = &o.grid {
        let parts = parse_f64_list(spec, "grid")?;
        let [lo, hi, steps] = parts[..] else {
            return Err(RunError::Input("--grid wants `lo,hi,steps`".into()));
        };
        if !(steps >= 1.0 && steps.fract() == 0.0 && steps <= 10_000.0) {
            return Err(RunError::Input("--grid steps must be an integer in 1..=10000".into()));
        }
        let k = steps as usize;
        let s_grid: Vec<f64> = (0..=k)
            .map(|i| lo + (hi - lo) * i as f64 / k as f64)
            .collect();
        let curve = dimension::pressure_curve(&rep, &s_grid).ctx("pressure curve")?;
        out.int("strictly_decreasing", u8::from(curve.strictly_decreasing));
        let rows: Vec<String> = curve
            .rows
            .iter()
            .map(|(s, p)| format!("{s:.16e},{p:.16e}"))
            .collect();
        out.csv("curve.csv", "s,pressure", &rows)?;
    }
    out.finish()
}

fn cmd_stability(o: &Opts) -> Result<(), RunError> {
    let sft = load_sft(&o.sft, "sft")?;
    let phi = load_potential(&o.potential, "potential", &sft)?;
    let sizes = match &o.deltas {
        Some(spec) => parse_f64_list(spec, "deltas")?,
        None => vec![0.32, 0.16, 0.08, 0.04, 0.02, 0.01],
    };
    for &s in &sizes {
        if !(s > 0.0 && s.is_finite()) {
            return Err(RunError::Input(format!("--deltas: sizes must be positive, got {s}")));
        }
    }
    // The probe direction is a fixed alternating-sign letter potential, so a
    // size s perturbation has sup norm exactly s.
    let direction = CylinderPotential::from_fn(sft.clone(), 1, |w| {
        if w[0] % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    })
    .ctx("probe direction")?;
    let deltas: Vec<CylinderPotential> = sizes.iter().map(|&s| direction.scale(s)).collect();
    let depth = o.depth.unwrap_or_else(|| transfer::default_depth(&phi));
    let w_depth = o.nmax.unwrap_or(8);
    let theta = o.theta.unwrap_or(DEFAULT_METRIC_BASE);
    let rep = stats::equilibrium_stability_probe(&phi, &deltas, depth, w_depth, theta)
        .ctx("stability probe")?;
    let mut out = Out::new(o.out.clone())?;
    out.num("fitted_constant", rep.fitted_constant);
    out.num("theta", theta);
    out.int("metric_depth", w_depth);
    out.int("depth", depth);
    for (i, (d, dist)) in rep.rows.iter().enumerate() {
        out.num(&format!("delta_{i}"), *d);
        out.num(&format!("distance_{i}"), *dist);
    }
    let rows: Vec<String> = rep
        .rows
        .iter()
        .map(|(d, dist)| format!("{d:.16e},{dist:.16e}"))
        .collect();
    out.csv("stability.csv", "delta,distance", &rows)?;
    out.finish()
}

fn cmd_catmap_report(o: &Opts) -> Result<(), RunError> {
    let spec = o.matrix.as_deref().unwrap_or("2,1,1,1");
    let entries: Vec<i64> = spec
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| RunError::Input(format!("--matrix: bad integer `{}`", t.trim())))
        })
        .collect::<Result<_, _>>()?;
    let [a, b, c, d] = entries[..] else {
        return Err(RunError::Input("--matrix wants four integers `a,b,c,d`".into()));
    };
    let auto = ToralAutomorphism::new([[a, b], [c, d]]);
    let data = auto.analyze().ctx("hyperbolicity analysis")?;
    let (h_top, chi, defect) = toral::pesin_check(&auto, &data);
    let coding = load_sft(&o.coding, "coding")?;
    let phi_u = toral::geometric_potential_symbolic(&data, coding.clone())
        .ctx("coding validation")?;
    let pressure = transfer::pressure_default(&phi_u).ctx("pressure")?;
    let dg_sup = o.dg.unwrap_or(3.0);
    let est = toral::holder_exponent(data.lambda_s, dg_sup).ctx("Holder exponent")?;
    let mut out = Out::new(o.out.clone())?;
    out.line("quantity = value");
    out.int("dimension", 2);
    out.int("alphabet_size", coding.alphabet_size());
    out.num("lambda_u", data.lambda_u);
    out.num("lambda_s", data.lambda_s);
    out.num("h_top", h_top);
    out.num("phi_u", data.phi_u);
    out.num("pressure_phi_u", pressure);
    out.num("pesin_chi", chi);
    out.num("pesin_defect", defect);
    out.num("dg_sup", est.dg_sup);
    out.num("gamma", est.gamma);
    let rows = vec![
        format!("dimension,{}", 2),
        format!("alphabet_size,{}", coding.alphabet_size()),
        format!("lambda_u,{:.16e}", data.lambda_u),
        format!("lambda_s,{:.16e}", data.lambda_s),
        format!("h_top,{h_top:.16e}"),
        format!("phi_u,{:.16e}", data.phi_u),
        format!("pressure_phi_u,{pressure:.16e}"),
        format!("pesin_defect,{defect:.16e}"),
        format!("gamma,{:.16e}", est.gamma),
    ];
    out.csv("table.csv", "quantity,value", &rows)?;
    out.finish()
}
