//! Monodromy analysis of periodic linear systems and experiments on
//! periodically forced nonlinear systems.

use std::fmt::Write as _;

use thiserror::Error;

use crate::expr::{EvalContext, Expr, ExprError};
use crate::matrix::DenseMatrix;
use crate::ode::{rk4_step, simulate_linear, OdeError, SimOptions, Trajectory, uniform_grid};
use crate::system::TimeVaryingSystem;
use crate::total_positivity::{ordered_sign_structure, real_spectrum};
use crate::tpds::{classify_time_varying, in_m, in_m_plus, off_diagonal_zeros_isolated, Verdict, DEFAULT_DELTA_FLOOR};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FloquetError {
    #[error("system has no period")]
    NotPeriodic,
    #[error("system is not TPDS on one period (sampled verdict: {0})")]
    NotTpds(Verdict),
    #[error("Floquet structure violated: {0}")]
    FloquetViolation(String),
    #[error("all mode coefficients are zero")]
    LeadingCoefficientZero,
    #[error("σ = {sigma:?} at t = {t} outside the band [{lo}, {hi}]")]
    BandViolation {
        t: f64,
        sigma: Option<usize>,
        lo: usize,
        hi: usize,
    },
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("invalid nonlinear system: {0}")]
    Invalid(String),
    #[error("evaluation failed at t = {t}: {source}")]
    Eval { t: f64, source: ExprError },
    #[error("trajectory left the domain box at t = {t}: x = {x:?}")]
    LeftDomain { t: f64, x: Vec<f64> },
    #[error("initial states coincide")]
    SameStart,
    #[error("line-integral Jacobian not in M⁺ at t = {t}: {detail}")]
    AssumptionViolated { t: f64, detail: String },
    #[error("first-coordinate difference has no sign-definite tail up to t = {resolved_until}")]
    NoMonotoneTail { resolved_until: f64 },
    #[error("no period q <= {q_max} detected within {iters} iterations (best residual {best:e})")]
    NoConvergence { q_max: usize, iters: usize, best: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloquetData {
    pub period: f64,
    pub monodromy: DenseMatrix,
    /// Characteristic multipliers, strictly decreasing.
    pub multipliers: Vec<f64>,
    /// Unit eigenvectors, first nonzero entry positive.
    pub eigvecs: Vec<Vec<f64>>,
    pub sign_counts: Vec<usize>,
}

impl FloquetData {
    pub fn to_csv(&self) -> String {
        let n = self.multipliers.len();
        let mut out = String::from("k,multiplier");
        for i in 1..=n {
            let _ = write!(out, ",p{i}");
        }
        out.push_str(",sign_count\n");
        for k in 0..n {
            let _ = write!(out, "{},{}", k + 1, self.multipliers[k]);
            for v in &self.eigvecs[k] {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",{}", self.sign_counts[k]);
        }
        out
    }
}

/// Monodromy matrix `B = Φ(a + T, a)` and its spectral structure.
pub fn floquet(sys: &TimeVaryingSystem, step: f64) -> Result<FloquetData, FloquetError> {
    let period = sys.period().ok_or(FloquetError::NotPeriodic)?;
    let cls = classify_time_varying(sys, 1000, DEFAULT_DELTA_FLOOR).map_err(|e| match e {
        crate::tpds::ClassifyError::System(s) => FloquetError::Ode(OdeError::System(s)),
        other => FloquetError::Invalid(other.to_string()),
    })?;
    let strict = match cls.verdict {
        Verdict::Tpds => true,
        Verdict::TndsOnly => off_diagonal_zeros_isolated(sys, 1000, DEFAULT_DELTA_FLOOR)
            .map_err(|e| FloquetError::Invalid(e.to_string()))?,
        Verdict::Neither => false,
    };
    if !strict {
        return Err(FloquetError::NotTpds(cls.verdict));
    }
    let (a, _) = sys.interval();
    let rec = crate::ode::transition_matrix(sys, a, a + period, step)?;
    let b = rec.phi;
    let radius = b
        .to_nalgebra()
        .complex_eigenvalues()
        .iter()
        .fold(0.0f64, |m, z| m.max(z.norm()));
    let pairs = real_spectrum(&b, 1e-8 * radius).map_err(|e| FloquetError::FloquetViolation(e.to_string()))?;
    let ordered = ordered_sign_structure(pairs, 1e-8).map_err(FloquetError::FloquetViolation)?;
    Ok(FloquetData {
        period,
        monodromy: b,
        multipliers: ordered.iter().map(|p| p.value).collect(),
        sign_counts: ordered.iter().map(|p| p.sign_count).collect(),
        eigvecs: ordered.into_iter().map(|p| p.vector).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeRun {
    pub trajectory: Trajectory,
    /// `(i - 1, j - 1)` for the first and last nonzero coefficients.
    pub band: (usize, usize),
    /// `σ` over the last 10% of the horizon (all samples agreed).
    pub terminal_sigma: usize,
}

/// Simulates `z(0) = Σ c_k p^k` and checks `i-1 <= σ <= j-1`, at most
/// `j - i` clusters outside `V`, and `σ = i-1` over the last 10% of the
/// horizon.
pub fn floquet_mode_evolution(
    sys: &TimeVaryingSystem,
    fd: &FloquetData,
    coeffs: &[f64],
    horizon: f64,
    samples: usize,
    step: f64,
) -> Result<ModeRun, FloquetError> {
    let n = fd.multipliers.len();
    if coeffs.len() != n {
        return Err(FloquetError::Invalid(format!("{} coefficients for dimension {n}", coeffs.len())));
    }
    let i = coeffs.iter().position(|&c| c != 0.0).ok_or(FloquetError::LeadingCoefficientZero)?;
    let j = coeffs.iter().rposition(|&c| c != 0.0).expect("some coefficient nonzero");
    let mut z0 = vec![0.0; n];
    for (c, p) in coeffs.iter().zip(&fd.eigvecs) {
        for (z, v) in z0.iter_mut().zip(p) {
            *z += c * v;
        }
    }
    let (a, _) = sys.interval();
    let grid = uniform_grid(a, a + horizon, samples);
    let traj = simulate_linear(sys, &z0, &grid, SimOptions { step, assert_monotone: false })?;
    for (k, s) in traj.sigma().into_iter().enumerate() {
        match s {
            Some(v) if v < i || v > j => {
                return Err(FloquetError::BandViolation {
                    t: traj.times[k],
                    sigma: s,
                    lo: i,
                    hi: j,
                })
            }
            None if i == j => {
                return Err(FloquetError::BandViolation {
                    t: traj.times[k],
                    sigma: None,
                    lo: i,
                    hi: j,
                })
            }
            _ => {}
        }
    }
    if traj.exceptional_times.len() > j - i {
        return Err(FloquetError::BandViolation {
            t: traj.exceptional_times[j - i],
            sigma: None,
            lo: i,
            hi: j,
        });
    }
    let tail_start = a + 0.9 * horizon;
    for (k, s) in traj.sigma().into_iter().enumerate() {
        if traj.times[k] >= tail_start && s != Some(i) {
            return Err(FloquetError::BandViolation {
                t: traj.times[k],
                sigma: s,
                lo: i,
                hi: i,
            });
        }
    }
    Ok(ModeRun {
        trajectory: traj,
        band: (i, j),
        terminal_sigma: i,
    })
}

/// `ẋ = f(t, x, u(t))` with an optional analytic Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearSystem {
    pub n: usize,
    pub rhs: Vec<Expr>,
    pub input: Option<Expr>,
    /// Row-major `n x n`; central differences when absent.
    pub jacobian: Option<Vec<Expr>>,
    pub period: Option<f64>,
    pub domain_box: Vec<(f64, f64)>,
}

impl NonlinearSystem {
    pub fn new(
        rhs: Vec<Expr>,
        input: Option<Expr>,
        jacobian: Option<Vec<Expr>>,
        period: Option<f64>,
        domain_box: Vec<(f64, f64)>,
    ) -> Result<Self, FloquetError> {
        let n = rhs.len();
        let bad = |m: String| Err(FloquetError::Invalid(m));
        if n == 0 {
            return bad("empty right-hand side".into());
        }
        let all = rhs.iter().chain(jacobian.iter().flatten());
        for e in all {
            if e.max_state_index() > n {
                return bad(format!("`{e}` refers to x{} but n = {n}", e.max_state_index()));
            }
            if e.uses_input() && input.is_none() {
                return bad(format!("`{e}` uses u but no input is given"));
            }
        }
        if let Some(u) = &input {
            if !u.is_time_only() {
                return bad("input must depend on t only".into());
            }
        }
        if jacobian.as_ref().is_some_and(|j| j.len() != n * n) {
            return bad(format!("jacobian needs {} entries", n * n));
        }
        if domain_box.len() != n || domain_box.iter().any(|(lo, hi)| !(lo < hi)) {
            return bad("domain box needs one nonempty interval per coordinate".into());
        }
        if let Some(tp) = period {
            if !(tp > 0.0 && tp.is_finite()) {
                return bad(format!("invalid period {tp}"));
            }
        }
        Ok(NonlinearSystem {
            n,
            rhs,
            input,
            jacobian,
            period,
            domain_box,
        })
    }

    /// Parses the right-hand side, input and Jacobian from strings.
    pub fn from_strs(
        rhs: &[&str],
        input: Option<&str>,
        jacobian: Option<&[&str]>,
        period: Option<f64>,
        domain_box: Vec<(f64, f64)>,
    ) -> Result<Self, FloquetError> {
        let p = |s: &&str| Expr::parse(s).map_err(|e| FloquetError::Invalid(format!("`{s}`: {e}")));
        Self::new(
            rhs.iter().map(p).collect::<Result<_, _>>()?,
            input.map(|s| p(&s)).transpose()?,
            jacobian.map(|j| j.iter().map(p).collect::<Result<_, _>>()).transpose()?,
            period,
            domain_box,
        )
    }

    /// No explicit time dependence and no input.
    pub fn is_autonomous(&self) -> bool {
        self.input.is_none() && self.rhs.iter().all(|e| !mentions_t(e))
    }

    fn input_at(&self, t: f64) -> Result<Option<f64>, FloquetError> {
        self.input
            .as_ref()
            .map(|u| u.eval(&EvalContext::time(t)))
            .transpose()
            .map_err(|source| FloquetError::Eval { t, source })
    }

    pub fn f(&self, t: f64, x: &[f64]) -> Result<Vec<f64>, FloquetError> {
        let u = self.input_at(t)?;
        let ctx = EvalContext::state(t, x, u);
        self.rhs
            .iter()
            .map(|e| e.eval(&ctx).map_err(|source| FloquetError::Eval { t, source }))
            .collect()
    }

    pub fn jacobian_at(&self, t: f64, x: &[f64]) -> Result<DenseMatrix, FloquetError> {
        let n = self.n;
        if let Some(jac) = &self.jacobian {
            let u = self.input_at(t)?;
            let ctx = EvalContext::state(t, x, u);
            let data = jac
                .iter()
                .map(|e| e.eval(&ctx).map_err(|source| FloquetError::Eval { t, source }))
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(DenseMatrix::new(n, n, data).expect("n*n entries"));
        }
        let mut m = DenseMatrix::zeros(n, n).as_float();
        for j in 0..n {
            let h = 1e-6 * x[j].abs().max(1.0);
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[j] += h;
            xm[j] -= h;
            let (fp, fm) = (self.f(t, &xp)?, self.f(t, &xm)?);
            for i in 0..n {
                m.set(i, j, (fp[i] - fm[i]) / (2.0 * h));
            }
        }
        Ok(m)
    }

    pub fn uses_finite_differences(&self) -> bool {
        self.jacobian.is_none()
    }

    pub fn in_box(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.domain_box)
            .all(|(v, (lo, hi))| *v >= lo - 1e-9 && *v <= hi + 1e-9)
    }

    /// Integrates from `t0` to `t1` with steps of at most `step`.
    pub fn flow(&self, t0: f64, t1: f64, x: &[f64], step: f64) -> Result<Vec<f64>, FloquetError> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(OdeError::BadStep(step).into());
        }
        let steps = ((t1 - t0) / step).ceil().max(1.0) as usize;
        let h = (t1 - t0) / steps as f64;
        let f = |t: f64, y: &[f64]| self.f(t, y);
        let mut y = x.to_vec();
        for s in 0..steps {
            let t = t0 + s as f64 * h;
            y = rk4_step(&f, t, &y, h)?;
            if !self.in_box(&y) {
                return Err(FloquetError::LeftDomain { t: t + h, x: y });
            }
        }
        Ok(y)
    }
}

fn mentions_t(e: &Expr) -> bool {
    match e {
        Expr::Var(crate::expr::Var::T) => true,
        Expr::Num(_) | Expr::Var(_) => false,
        Expr::Neg(a) | Expr::Call(_, a) => mentions_t(a),
        Expr::Bin(_, a, b) => mentions_t(a) || mentions_t(b),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearRun {
    pub states: Trajectory,
    /// `z(t) = f(t, x(t))`.
    pub derivative: Trajectory,
    /// Jacobian sampled in `M⁺` at every grid point.
    pub jacobian_in_m_plus: bool,
    pub finite_difference_jacobian: bool,
    /// Monotone sign counts were enforced on `z` (autonomous system
    /// with Jacobian in `M⁺`).
    pub sigma_asserted: bool,
}

/// Integrates `ẋ = f(t, x)` and tracks `σ(ẋ)`. For autonomous systems whose
/// Jacobian stays in `M⁺`, `ẋ` solves a TPDS variational equation and its
/// sign counts are checked for monotonicity.
pub fn simulate_nonlinear(
    sys: &NonlinearSystem,
    x0: &[f64],
    grid: &[f64],
    step: f64,
) -> Result<NonlinearRun, FloquetError> {
    if x0.len() != sys.n {
        return Err(OdeError::Dimension { got: x0.len(), n: sys.n }.into());
    }
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(OdeError::BadGrid.into());
    }
    if !sys.in_box(x0) {
        return Err(FloquetError::LeftDomain { t: grid[0], x: x0.to_vec() });
    }
    let mut x = x0.to_vec();
    let mut states = vec![x.clone()];
    for w in grid.windows(2) {
        x = sys.flow(w[0], w[1], &x, step)?;
        states.push(x.clone());
    }
    let mut derivs = Vec::with_capacity(states.len());
    let mut jac_ok = true;
    for (t, s) in grid.iter().zip(&states) {
        derivs.push(sys.f(*t, s)?);
        jac_ok &= in_m_plus(&sys.jacobian_at(*t, s)?);
    }
    let derivative = Trajectory::from_states(grid.to_vec(), derivs);
    let sigma_asserted = jac_ok && sys.is_autonomous() && derivative.states.iter().any(|z| z.iter().any(|&v| v != 0.0));
    if sigma_asserted {
        derivative.check_monotone()?;
    }
    Ok(NonlinearRun {
        states: Trajectory::from_states(grid.to_vec(), states),
        derivative,
        jacobian_in_m_plus: jac_ok,
        finite_difference_jacobian: sys.uses_finite_differences(),
        sigma_asserted,
    })
}

/// 16-point Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_16() -> Vec<(f64, f64)> {
    let n = 16;
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (x + 1.0), 0.5 * w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// `∫₀¹ J(t, b + r (a - b)) dr`.
pub fn line_jacobian(sys: &NonlinearSystem, t: f64, a: &[f64], b: &[f64]) -> Result<DenseMatrix, FloquetError> {
    let n = sys.n;
    let mut acc = DenseMatrix::zeros(n, n).as_float();
    for (r, w) in gauss_legendre_16() {
        let p: Vec<f64> = b.iter().zip(a).map(|(bi, ai)| bi + r * (ai - bi)).collect();
        acc.axpy(w, &sys.jacobian_at(t, &p)?);
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneTail {
    /// Last sampled time at which the sign of `x₁(t,a) − x₁(t,b)` changed
    /// (the first sample when it never changed).
    pub switch_time: f64,
    pub sign: i8,
    /// Samples after this time have `|x₁(t,a) − x₁(t,b)|` at the noise
    /// floor and carry no sign information.
    pub resolved_until: f64,
}

/// Absolute level below which a coordinate difference is treated as
/// numerically zero.
pub const DIFFERENCE_FLOOR: f64 = 1e-12;

/// Locates the time after which `x₁(t, a0) − x₁(t, b0)` keeps one strict
/// sign, after checking that the line-integral Jacobian stays in `M⁺`.
pub fn eventual_monotonicity(
    sys: &NonlinearSystem,
    a0: &[f64],
    b0: &[f64],
    horizon: f64,
    samples: usize,
    step: f64,
) -> Result<MonotoneTail, FloquetError> {
    if a0 == b0 {
        return Err(FloquetError::SameStart);
    }
    for x in [a0, b0] {
        if !sys.in_box(x) {
            return Err(FloquetError::LeftDomain { t: 0.0, x: x.to_vec() });
        }
    }
    let grid = uniform_grid(0.0, horizon, samples);
    let (mut xa, mut xb) = (a0.to_vec(), b0.to_vec());
    let mut diffs = Vec::with_capacity(samples);
    for (k, &t) in grid.iter().enumerate() {
        if k > 0 {
            xa = sys.flow(grid[k - 1], t, &xa, step)?;
            xb = sys.flow(grid[k - 1], t, &xb, step)?;
        }
        if xa != xb {
            let lj = line_jacobian(sys, t, &xa, &xb)?;
            if !in_m_plus(&lj) {
                let detail = if in_m(&lj) {
                    "a sub/super-diagonal entry vanishes".to_string()
                } else {
                    format!("entries outside M: {lj:?}")
                };
                return Err(FloquetError::AssumptionViolated { t, detail });
            }
        }
        diffs.push(xa[0] - xb[0]);
    }
    let resolved = diffs
        .iter()
        .position(|d| d.abs() <= DIFFERENCE_FLOOR)
        .unwrap_or(diffs.len());
    let resolved_until = grid[resolved.saturating_sub(1)];
    if resolved < 2 {
        return Err(FloquetError::NoMonotoneTail { resolved_until });
    }
    let sgn = |d: f64| if d > 0.0 { 1i8 } else { -1 };
    let last_change = (1..resolved)
        .rev()
        .find(|&k| sgn(diffs[k]) != sgn(diffs[k - 1]))
        .unwrap_or(0);
    if last_change + 1 >= resolved {
        return Err(FloquetError::NoMonotoneTail { resolved_until });
    }
    Ok(MonotoneTail {
        switch_time: grid[last_change],
        sign: sgn(diffs[resolved - 1]),
        resolved_until,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareResult {
    /// `x(kT)`, `k = 0, 1, ...`.
    pub iterates: Vec<Vec<f64>>,
    pub detected_period: Option<usize>,
    /// `‖x((k+q)T) − x(kT)‖∞` for the detected `q`.
    pub residuals: Vec<f64>,
}

impl PoincareResult {
    pub fn to_csv(&self) -> String {
        let n = self.iterates.first().map_or(0, Vec::len);
        let mut out = String::from("k");
        for i in 1..=n {
            let _ = write!(out, ",x{i}");
        }
        out.push_str(",residual\n");
        for (k, x) in self.iterates.iter().enumerate() {
            let _ = write!(out, "{k}");
            for v in x {
                let _ = write!(out, ",{v}");
            }
            match self.residuals.get(k) {
                Some(r) => {
                    let _ = writeln!(out, ",{r}");
                }
                None => out.push_str(",\n"),
            }
        }
        out
    }
}

pub const PERSISTENCE: usize = 5;
pub const DEFAULT_POINCARE_TOL: f64 = 1e-6;
pub const DEFAULT_Q_MAX: usize = 8;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Iterates the period map and reports the smallest `q <= q_max` with
/// `‖x((k+q)T) − x(kT)‖∞ < tol` for the last [`PERSISTENCE`] values of `k`.
pub fn poincare_analysis(
    sys: &NonlinearSystem,
    x0: &[f64],
    max_iters: usize,
    q_max: usize,
    tol: f64,
    step: f64,
) -> Result<PoincareResult, FloquetError> {
    let tp = sys.period.ok_or(FloquetError::NotPeriodic)?;
    if x0.len() != sys.n {
        return Err(OdeError::Dimension { got: x0.len(), n: sys.n }.into());
    }
    if !sys.in_box(x0) {
        return Err(FloquetError::LeftDomain { t: 0.0, x: x0.to_vec() });
    }
    let mut iterates = vec![x0.to_vec()];
    let mut best = f64::INFINITY;
    for k in 0..max_iters {
        let next = sys.flow(k as f64 * tp, (k + 1) as f64 * tp, &iterates[k], step)?;
        iterates.push(next);
        let len = iterates.len();
        for q in 1..=q_max {
            if len < q + PERSISTENCE {
                break;
            }
            let worst = (len - q - PERSISTENCE..len - q)
                .map(|j| max_diff(&iterates[j + q], &iterates[j]))
                .fold(0.0f64, f64::max);
            best = best.min(worst);
            if worst < tol {
                let residuals = (0..len - q).map(|j| max_diff(&iterates[j + q], &iterates[j])).collect();
                return Ok(PoincareResult {
                    iterates,
                    detected_period: Some(q),
                    residuals,
                });
            }
        }
    }
    Err(FloquetError::NoConvergence {
        q_max,
        iters: max_iters,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let gl = gauss_legendre_16();
        assert_eq!(gl.len(), 16);
        for d in 0..32 {
            let q: f64 = gl.iter().map(|(x, w)| w * x.powi(d)).sum();
            assert!((q - 1.0 / (d + 1) as f64).abs() < 1e-14, "degree {d}");
        }
    }

    #[test]
    fn scalar_floquet() {
        let sys = TimeVaryingSystem::from_exprs(1, (0.0, 1.0), &["1"], Some(1.0)).unwrap();
        let fd = floquet(&sys, 1e-3).unwrap();
        assert!((fd.multipliers[0] - 1f64.exp()).abs() < 1e-12);
        assert_eq!(fd.sign_counts, vec![0]);
    }

    #[test]
    fn floquet_guards() {
        let sys = TimeVaryingSystem::from_exprs(2, (0.0, 1.0), &["0", "1", "1", "0"], None).unwrap();
        assert_eq!(floquet(&sys, 1e-3), Err(FloquetError::NotPeriodic));
        let tn = TimeVaryingSystem::from_exprs(2, (0.0, 1.0), &["0", "1", "0", "0"], Some(1.0)).unwrap();
        assert_eq!(floquet(&tn, 1e-3), Err(FloquetError::NotTpds(Verdict::TndsOnly)));
    }

    #[test]
    fn zero_rhs_is_constant() {
        let sys = NonlinearSystem::from_strs(&["0", "0"], None, None, None, vec![(-1.0, 1.0); 2]).unwrap();
        let grid = uniform_grid(0.0, 1.0, 11);
        let run = simulate_nonlinear(&sys, &[0.5, -0.25], &grid, 0.01).unwrap();
        assert!(run.states.states.iter().all(|x| x == &vec![0.5, -0.25]));
    }

    #[test]
    fn equilibrium_has_period_one() {
        let sys = NonlinearSystem::from_strs(&["-x1", "-x2 + x1"], None, None, Some(1.0), vec![(-1.0, 1.0); 2]).unwrap();
        let res = poincare_analysis(&sys, &[0.0, 0.0], 20, 8, 1e-6, 0.01).unwrap();
        assert_eq!(res.detected_period, Some(1));
        assert!(res.residuals.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn leaving_the_box_is_reported() {
        let sys = NonlinearSystem::from_strs(&["1"], None, None, None, vec![(0.0, 1.0)]).unwrap();
        let err = simulate_nonlinear(&sys, &[0.5], &[0.0, 2.0], 0.01).unwrap_err();
        assert!(matches!(err, FloquetError::LeftDomain { t, .. } if (t - 0.5).abs() < 0.011));
        assert!(NonlinearSystem::from_strs(&["u"], None, None, None, vec![(0.0, 1.0)]).is_err());
        assert!(NonlinearSystem::from_strs(&["x2"], None, None, None, vec![(0.0, 1.0)]).is_err());
    }

    #[test]
    fn finite_difference_jacobian_matches_analytic() {
        let rhs = ["-x1 + tanh(x2)", "-x2 + tanh(x1) + sin(t)"];
        let jac = ["-1", "1 - tanh(x2)^2", "1 - tanh(x1)^2", "-1"];
        let fd = NonlinearSystem::from_strs(&rhs, None, None, Some(2.0 * PI), vec![(-3.0, 3.0); 2]).unwrap();
        let an = NonlinearSystem::from_strs(&rhs, None, Some(&jac), Some(2.0 * PI), vec![(-3.0, 3.0); 2]).unwrap();
        let x = [0.3, -1.2];
        let d = fd.jacobian_at(0.7, &x).unwrap().sub(&an.jacobian_at(0.7, &x).unwrap());
        assert!(d.max_abs() < 1e-8);
        assert!(!fd.is_autonomous());
    }

    #[test]
    fn mode_guards() {
        let tp = 2.0 * PI;
        let sys = TimeVaryingSystem::from_exprs(2, (0.0, tp), &["0", "1 + sin(t)", "1 + sin(t)", "0"], Some(tp)).unwrap();
        let fd = floquet(&sys, tp / 4000.0).unwrap();
        assert_eq!(
            floquet_mode_evolution(&sys, &fd, &[0.0, 0.0], tp, 100, 1e-3),
            Err(FloquetError::LeadingCoefficientZero)
        );
    }
}
