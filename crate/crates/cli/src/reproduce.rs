//! Data behind the figures: each id writes `<id>.csv` and a
//! whitespace-separated `<id>.dat` for plotting.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use tpds::floquet::{floquet, floquet_mode_evolution, poincare_analysis, DEFAULT_POINCARE_TOL, DEFAULT_Q_MAX};
use tpds::matrix::{format_float, DenseMatrix};
use tpds::ode::{default_step, simulate_linear, uniform_grid, SimOptions, Trajectory};
use tpds::total_positivity::oscillatory_spectrum;

use crate::{load_spec, CliError, CliResult};

pub const FIGURES: [&str; 4] = ["sigma-switched", "floquet-sinusoidal", "takac", "spectrum-tp3"];

pub fn run(figure: &str, dir: &Path) -> CliResult<()> {
    let (csv, dat) = match figure {
        "sigma-switched" => sigma_switched()?,
        "floquet-sinusoidal" => floquet_sinusoidal()?,
        "takac" => takac()?,
        "spectrum-tp3" => spectrum_tp3()?,
        _ => {
            return Err(CliError::Parse(format!(
                "unknown figure {figure:?}; expected one of {}",
                FIGURES.join(", ")
            )))
        }
    };
    fs::create_dir_all(dir).map_err(|e| CliError::Analysis(format!("{}: {e}", dir.display())))?;
    for (ext, body) in [("csv", csv), ("dat", dat)] {
        let p = dir.join(format!("{figure}.{ext}"));
        fs::write(&p, body).map_err(|e| CliError::Analysis(format!("{}: {e}", p.display())))?;
        println!("{}", p.display());
    }
    Ok(())
}

fn analysis<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Analysis(e.to_string())
}

fn sign_dat(traj: &Trajectory) -> String {
    let mut out = String::from("# t s_minus s_plus sigma\n");
    for (k, t) in traj.times.iter().enumerate() {
        let sigma = traj.sigma()[k].map_or(-1, |s| s as i64);
        let _ = writeln!(out, "{} {} {} {sigma}", format_float(*t), traj.s_minus[k], traj.s_plus[k]);
    }
    out
}

fn sigma_switched() -> CliResult<(String, String)> {
    let spec = load_spec("switched")?;
    let sys = spec.linear().expect("switched spec is linear");
    let exp = &spec.experiment;
    let (a, b) = spec.meta.interval;
    let grid = uniform_grid(a, b, exp.samples.unwrap_or(1001));
    let opts = SimOptions {
        step: exp.step.unwrap_or_else(|| default_step(sys)),
        assert_monotone: true,
    };
    let z0 = exp.z0.clone().expect("switched spec sets z0");
    let traj = simulate_linear(sys, &z0, &grid, opts).map_err(analysis)?;
    Ok((traj.to_csv(), sign_dat(&traj)))
}

fn floquet_sinusoidal() -> CliResult<(String, String)> {
    let spec = load_spec("sinusoidal2")?;
    let sys = spec.linear().expect("sinusoidal2 spec is linear");
    let exp = &spec.experiment;
    let step = exp.step.unwrap_or_else(|| default_step(sys));
    let fd = floquet(sys, step).map_err(analysis)?;
    let coeffs = exp.coeffs.clone().expect("sinusoidal2 spec sets coeffs");
    let horizon = exp.horizon.unwrap_or(10.0 * fd.period);
    let run = floquet_mode_evolution(sys, &fd, &coeffs, horizon, exp.samples.unwrap_or(2001), step)
        .map_err(analysis)?;
    Ok((run.trajectory.to_csv(), sign_dat(&run.trajectory)))
}

fn takac() -> CliResult<(String, String)> {
    let spec = load_spec("takac")?;
    let sys = spec.nonlinear().expect("takac spec is nonlinear");
    let exp = &spec.experiment;
    let period = sys.period.expect("takac spec sets a period");
    let res = poincare_analysis(
        sys,
        exp.x0.as_deref().expect("takac spec sets x0"),
        exp.max_iters.unwrap_or(200),
        exp.q_max.unwrap_or(DEFAULT_Q_MAX),
        exp.tol.unwrap_or(DEFAULT_POINCARE_TOL),
        exp.step.unwrap_or(period / 400.0),
    )
    .map_err(analysis)?;
    let mut dat = String::from("# k x1 .. xn\n");
    for (k, x) in res.iterates.iter().enumerate() {
        let cols: Vec<String> = x.iter().map(|v| format_float(*v)).collect();
        let _ = writeln!(dat, "{k} {}", cols.join(" "));
    }
    Ok((res.to_csv(), dat))
}

fn spectrum_tp3() -> CliResult<(String, String)> {
    let a = DenseMatrix::from_int_rows(&[[5, 4, 1], [4, 6, 4], [1, 4, 5]]);
    let pairs = oscillatory_spectrum(&a).map_err(analysis)?;
    let mut csv = String::from("k,lambda,sign_changes,v1,v2,v3\n");
    let mut dat = String::from("# i v1(i) v2(i) v3(i)\n");
    for (k, p) in pairs.iter().enumerate() {
        let v: Vec<String> = p.vector.iter().map(|x| format_float(*x)).collect();
        let _ = writeln!(csv, "{},{},{},{}", k + 1, format_float(p.value), p.sign_count, v.join(","));
    }
    for i in 0..3 {
        let row: Vec<String> = pairs.iter().map(|p| format_float(p.vector[i])).collect();
        let _ = writeln!(dat, "{} {}", i + 1, row.join(" "));
    }
    Ok((csv, dat))
}
