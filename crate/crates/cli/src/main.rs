//! `tpds`: classification, compounds, simulation, Floquet and entrainment
//! runs from matrix and system files.
//!
//! Exit codes: 0 success, 2 parse or usage error, 3 analysis failure,
//! 4 numerically suspect result.

mod reproduce;

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};
use tpds::compound::{add_compound, mult_compound};
use tpds::floquet::{
    floquet, floquet_mode_evolution, poincare_analysis, simulate_nonlinear, FloquetError, DEFAULT_POINCARE_TOL,
    DEFAULT_Q_MAX,
};
use tpds::matrix::DenseMatrix;
use tpds::ode::{default_step, simulate_linear, transition_matrix, uniform_grid, OdeError, SimOptions};
use tpds::specfile::{shipped, Model, SystemSpec};
use tpds::total_positivity::classify;
use tpds::tpds::{classify_time_varying, in_m, in_m_plus, Verdict, DEFAULT_DELTA_FLOOR, DEFAULT_POINTS_PER_SEGMENT};

pub const OUT_DIR_ENV: &str = "TPDS_OUT_DIR";

#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Analysis(String),
    Suspect(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Analysis(_) => 3,
            CliError::Suspect(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Parse(m) | CliError::Analysis(m) | CliError::Suspect(m) => m,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "tpds", version, about = "Total positivity and sign-variation analysis of linear and cooperative systems")]
#[command(args_override_self = true, allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a matrix: TN, TP, SSR, oscillatory, M, M+.
    Check { matrix: PathBuf },
    /// Print the p-th multiplicative or additive compound.
    #[command(group(ArgGroup::new("kind").args(["additive", "multiplicative"])))]
    Compound {
        matrix: PathBuf,
        p: usize,
        #[arg(long)]
        additive: bool,
        #[arg(long)]
        multiplicative: bool,
    },
    /// Simulate a system and write the trajectory CSV.
    Simulate {
        spec: String,
        /// Initial state, comma separated (overrides the spec).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, alias = "x0")]
        z0: Option<Vec<f64>>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        step: Option<f64>,
        /// Output CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Nonlinear systems: write the state instead of its derivative.
        #[arg(long)]
        states: bool,
    },
    /// Monodromy matrix, characteristic multipliers and Floquet vectors.
    Floquet {
        spec: String,
        /// Mode coefficients for a sign-count run, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        coeffs: Option<Vec<f64>>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Iterate the period map and detect the asymptotic period.
    Entrain {
        spec: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        q_max: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate the data behind a figure or table.
    Reproduce {
        /// One of sigma-switched, floquet-sinusoidal, takac, spectrum-tp3.
        figure: String,
        /// Output directory; defaults to $TPDS_OUT_DIR, then ./out.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn load_matrix(path: &Path) -> CliResult<DenseMatrix> {
    DenseMatrix::parse_text(&read_file(path)?).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Reads a spec file; a name of a shipped spec is accepted when no such
/// file exists.
pub fn load_spec(name: &str) -> CliResult<SystemSpec> {
    let path = Path::new(name);
    let src = if path.exists() {
        read_file(path)?
    } else if let Some(s) = path.file_name().and_then(|f| f.to_str()).and_then(shipped) {
        s.to_string()
    } else {
        return Err(CliError::Parse(format!("{name}: no such file or shipped spec")));
    };
    SystemSpec::parse(&src).map_err(|e| CliError::Parse(format!("{name}: {e}")))
}

/// Relative output paths are placed under `$TPDS_OUT_DIR` when it is set.
fn output_path(p: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if p.is_relative() => PathBuf::from(dir).join(p),
        _ => p.to_path_buf(),
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Analysis(e.to_string())),
                _ => Ok(()),
            }
        }
        Some(p) => {
            let p = output_path(p);
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| CliError::Analysis(format!("{}: {e}", dir.display())))?;
            }
            fs::write(&p, text).map_err(|e| CliError::Analysis(format!("{}: {e}", p.display())))?;
            eprintln!("wrote {}", p.display());
            Ok(())
        }
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn cmd_check(path: &Path) -> CliResult<()> {
    let a = load_matrix(path)?;
    let c = classify(&a).map_err(|e| CliError::Analysis(e.to_string()))?;
    let mut out = format!(
        "TN {}, TP {}, SSR {}, oscillatory {}\n",
        yes_no(c.is_tn),
        yes_no(c.is_tp),
        yes_no(c.is_ssr),
        yes_no(c.is_oscillatory)
    );
    let _ = writeln!(out, "M {}, M+ {}", yes_no(in_m(&a)), yes_no(in_m_plus(&a)));
    if let Some(w) = &c.witness {
        let kind = if c.is_tn { "first non-positive minor" } else { "first negative minor" };
        let _ = writeln!(out, "{kind}: A({}|{}) = {}", w.alpha, w.beta, w.value);
    }
    if let Some(p) = c.power_is_tp {
        let _ = writeln!(out, "A^(n-1) TP {}", yes_no(p));
    }
    print!("{out}");
    Ok(())
}

fn cmd_compound(path: &Path, p: usize, additive: bool) -> CliResult<()> {
    let a = load_matrix(path)?;
    let c = if additive { add_compound(&a, p) } else { mult_compound(&a, p) };
    let c = c.map_err(|e| CliError::Analysis(e.to_string()))?;
    print!("{}", c.matrix.to_text());
    Ok(())
}

fn ode_error(e: OdeError) -> CliError {
    CliError::Analysis(e.to_string())
}

fn floquet_error(e: FloquetError) -> CliError {
    CliError::Analysis(e.to_string())
}

fn cmd_simulate(
    name: &str,
    z0: Option<Vec<f64>>,
    samples: Option<usize>,
    step: Option<f64>,
    out: Option<&Path>,
    states: bool,
) -> CliResult<()> {
    let spec = load_spec(name)?;
    let exp = &spec.experiment;
    let samples = samples.or(exp.samples).unwrap_or(1001);
    if samples < 2 {
        return Err(CliError::Parse("--samples must be at least 2".into()));
    }
    let (a, b) = spec.meta.interval;
    let grid = uniform_grid(a, b, samples);
    match &spec.model {
        Model::Linear(sys) => {
            let z0 = z0
                .or_else(|| exp.z0.clone())
                .ok_or_else(|| CliError::Parse("no initial state: pass --z0 or set experiment.z0".into()))?;
            let step = step.or(exp.step).unwrap_or_else(|| default_step(sys));
            let cls = classify_time_varying(
                sys,
                exp.points_per_segment.unwrap_or(DEFAULT_POINTS_PER_SEGMENT),
                exp.delta_floor.unwrap_or(DEFAULT_DELTA_FLOOR),
            )
            .map_err(|e| CliError::Analysis(e.to_string()))?;
            eprintln!("verdict: {}", cls.verdict);
            let opts = SimOptions {
                step,
                assert_monotone: cls.verdict == Verdict::Tpds,
            };
            let traj = simulate_linear(sys, &z0, &grid, opts).map_err(ode_error)?;
            emit(out, &traj.to_csv())?;
            let rec = transition_matrix(sys, a, b, step).map_err(ode_error)?;
            if rec.suspect {
                return Err(CliError::Suspect(format!(
                    "det of the transition matrix {:e} differs from exp of the integrated trace {:e}",
                    rec.det_phi, rec.det_predicted
                )));
            }
            Ok(())
        }
        Model::Nonlinear(sys) => {
            let x0 = z0
                .or_else(|| exp.x0.clone())
                .ok_or_else(|| CliError::Parse("no initial state: pass --z0 or set experiment.x0".into()))?;
            let step = step.or(exp.step).unwrap_or(1e-3 * (b - a));
            let run = simulate_nonlinear(sys, &x0, &grid, step).map_err(floquet_error)?;
            if !run.sigma_asserted {
                eprintln!("sign counts of dx/dt not asserted: Jacobian leaves M+ or the system is not autonomous");
            }
            if run.finite_difference_jacobian {
                eprintln!("Jacobian by central differences");
            }
            let traj = if states { &run.states } else { &run.derivative };
            emit(out, &traj.to_csv())
        }
    }
}

fn cmd_floquet(name: &str, coeffs: Option<Vec<f64>>, horizon: Option<f64>, out: Option<&Path>) -> CliResult<()> {
    let spec = load_spec(name)?;
    let sys = spec
        .linear()
        .ok_or_else(|| CliError::Parse("floquet needs a [linear] system".into()))?;
    let exp = &spec.experiment;
    let step = exp.step.unwrap_or_else(|| default_step(sys));
    let fd = floquet(sys, step).map_err(floquet_error)?;
    let mut report = String::new();
    let _ = writeln!(report, "period {}", fd.period);
    for (k, (m, s)) in fd.multipliers.iter().zip(&fd.sign_counts).enumerate() {
        let _ = writeln!(report, "multiplier {} = {m:.12e}, sign changes {s}", k + 1);
    }
    print!("{report}");
    emit(out, &fd.to_csv())?;
    if let Some(c) = coeffs.or_else(|| exp.coeffs.clone()) {
        let horizon = horizon.or(exp.horizon).unwrap_or(10.0 * fd.period);
        let samples = exp.samples.unwrap_or(2001);
        let run = floquet_mode_evolution(sys, &fd, &c, horizon, samples, step).map_err(floquet_error)?;
        let sigma0 = run.trajectory.sigma()[0].map_or("undefined".to_string(), |s| s.to_string());
        println!(
            "mode run: sigma(z(0)) = {sigma0}, band [{}, {}], terminal sigma {}",
            run.band.0, run.band.1, run.terminal_sigma
        );
    }
    Ok(())
}

fn cmd_entrain(
    name: &str,
    x0: Option<Vec<f64>>,
    max_iters: Option<usize>,
    q_max: Option<usize>,
    tol: Option<f64>,
    out: Option<&Path>,
) -> CliResult<()> {
    let spec = load_spec(name)?;
    let sys = spec
        .nonlinear()
        .ok_or_else(|| CliError::Parse("entrain needs a [nonlinear] system".into()))?;
    let exp = &spec.experiment;
    let period = sys
        .period
        .ok_or_else(|| CliError::Parse("entrain needs meta.period".into()))?;
    let x0 = x0
        .or_else(|| exp.x0.clone())
        .ok_or_else(|| CliError::Parse("no initial state: pass --x0 or set experiment.x0".into()))?;
    let res = poincare_analysis(
        sys,
        &x0,
        max_iters.or(exp.max_iters).unwrap_or(200),
        q_max.or(exp.q_max).unwrap_or(DEFAULT_Q_MAX),
        tol.or(exp.tol).unwrap_or(DEFAULT_POINCARE_TOL),
        exp.step.unwrap_or(period / 400.0),
    )
    .map_err(floquet_error)?;
    let q = res.detected_period.expect("analysis returns a period on success");
    println!("detected period {q} (x{q} of T = {period})");
    let tail: Vec<String> = res.residuals.iter().rev().take(5).rev().map(|r| format!("{r:.3e}")).collect();
    println!("residual tail {}", tail.join(" "));
    if let Some(p) = out {
        emit(Some(p), &res.to_csv())?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Check { matrix } => cmd_check(&matrix),
        Command::Compound {
            matrix, p, additive, ..
        } => cmd_compound(&matrix, p, additive),
        Command::Simulate {
            spec,
            z0,
            samples,
            step,
            out,
            states,
        } => cmd_simulate(&spec, z0, samples, step, out.as_deref(), states),
        Command::Floquet {
            spec,
            coeffs,
            horizon,
            out,
        } => cmd_floquet(&spec, coeffs, horizon, out.as_deref()),
        Command::Entrain {
            spec,
            x0,
            max_iters,
            q_max,
            tol,
            out,
        } => cmd_entrain(&spec, x0, max_iters, q_max, tol, out.as_deref()),
        Command::Reproduce { figure, out_dir } => {
            let dir = out_dir
                .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out"));
            reproduce::run(&figure, &dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
