//! Fixed-step RK4 for `Ẏ = A(t) Y`, vector solutions with sign-variation
//! bookkeeping, and the compound dynamics `Ẏ^(p) = A^[p] Y^(p)`.
//!
//! Steps are shrunk so that every segment boundary is hit exactly; the
//! formula of the segment being crossed is used on the whole step, so
//! switching systems are integrated without smoothing across the jump.

use std::fmt::Write as _;

use thiserror::Error;

use crate::compound::{add_compound, mult_compound};
use crate::matrix::DenseMatrix;
use crate::sign_variation::{pattern_in_v, pattern_s_minus, pattern_s_plus, sign_pattern};
use crate::system::{SystemError, TimeVaryingSystem};

/// Relative mismatch between `det Φ` and `exp ∫ trace A` that marks a
/// transition record as suspect.
pub const DET_REL_TOL: f64 = 1e-6;
/// Zero tolerance along trajectories, relative to the sample's max-norm.
pub const TRAJECTORY_ZERO_REL: f64 = 1e-8;
/// Flagged (non-`V`) samples at most this many samples apart form one
/// cluster.
pub const CLUSTER_GAP: usize = 3;
/// Relative tolerance between the two routes to `Φ^(p)`.
pub const COMPOUND_ROUTE_TOL: f64 = 1e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("time {t} outside [{a}, {b}]")]
    OutOfInterval { t: f64, a: f64, b: f64 },
    #[error("sample times must be increasing")]
    BadGrid,
    #[error("initial state has {got} entries, system dimension is {n}")]
    Dimension { got: usize, n: usize },
    #[error("initial state is zero: the trivial solution carries no sign information")]
    TrivialSolution,
    #[error("sign-variation monotonicity violated at t = {times:?}: {detail}")]
    MonotonicityViolation { times: Vec<f64>, detail: String },
    #[error("compound order {p}: integrated and multiplicative routes differ by {rel:e}")]
    RouteMismatch { p: usize, rel: f64 },
    #[error("compound order {p} outside 1..={n}")]
    OrderOutOfRange { p: usize, n: usize },
    #[error("no sample pair with a vanishing first coordinate followed by a nonzero one")]
    NoApplicablePair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRecord {
    pub t0: f64,
    pub t: f64,
    pub phi: DenseMatrix,
    /// `det Φ` as the product of the per-step propagator determinants.
    /// Unlike `det_direct` it does not lose digits when `Φ` is badly
    /// conditioned.
    pub det_phi: f64,
    /// LU determinant of the stored `phi`.
    pub det_direct: f64,
    /// `exp ∫ trace A`, Simpson's rule on the RK nodes.
    pub det_predicted: f64,
    /// Set when `det_phi` and `det_predicted` disagree beyond
    /// [`DET_REL_TOL`].
    pub suspect: bool,
}

impl TransitionRecord {
    pub fn det_rel_error(&self) -> f64 {
        (self.det_phi - self.det_predicted).abs() / self.det_predicted.abs()
    }
}

pub fn default_step(sys: &TimeVaryingSystem) -> f64 {
    let (a, b) = sys.interval();
    1e-3 * (b - a)
}

fn check_step(step: f64) -> Result<(), OdeError> {
    if step > 0.0 && step.is_finite() {
        Ok(())
    } else {
        Err(OdeError::BadStep(step))
    }
}

fn check_range(sys: &TimeVaryingSystem, t0: f64, t: f64) -> Result<(), OdeError> {
    let (a, b) = sys.interval();
    let slack = |x: f64| 1e-12 * (1.0 + x.abs());
    let upper_ok = sys.period().is_some() || t <= b + slack(b);
    if t0 < a - slack(a) || !upper_ok || t < t0 {
        let bad = if t0 < a - slack(a) { t0 } else { t };
        return Err(OdeError::OutOfInterval { t: bad, a, b });
    }
    Ok(())
}

/// Integrates `Ẏ = G(A(t)) Y` from `t0` to `t1`; returns `Y(t1)` and
/// `∫ trace A`. With `det` set, each RK step is formed as an explicit
/// propagator `R` (so `Y ← R Y`) and `det R` is multiplied into it.
fn integrate_linear(
    sys: &TimeVaryingSystem,
    t0: f64,
    t1: f64,
    step: f64,
    mut y: DenseMatrix,
    generator: &dyn Fn(&DenseMatrix) -> DenseMatrix,
    mut det: Option<&mut f64>,
) -> Result<(DenseMatrix, f64), OdeError> {
    let mut trace_integral = 0.0;
    for piece in sys.pieces(t0, t1)? {
        let len = piece.hi - piece.lo;
        if len <= 0.0 {
            continue;
        }
        let steps = (len / step).ceil().max(1.0) as usize;
        let h = len / steps as f64;
        let eval = |t: f64| sys.eval_segment(piece.segment, t - piece.shift);
        let mut a0 = eval(piece.lo)?;
        let mut g0 = generator(&a0);
        for s in 0..steps {
            let t = piece.lo + s as f64 * h;
            let t_next = if s + 1 == steps {
                piece.hi
            } else {
                piece.lo + (s + 1) as f64 * h
            };
            let hs = t_next - t;
            let am = eval(t + 0.5 * hs)?;
            let a1 = eval(t_next)?;
            let gm = generator(&am);
            let g1 = generator(&a1);
            let rk4 = |y: &DenseMatrix| {
                let k1 = g0.mul(y);
                let mut tmp = y.clone();
                tmp.axpy(0.5 * hs, &k1);
                let k2 = gm.mul(&tmp);
                let mut tmp = y.clone();
                tmp.axpy(0.5 * hs, &k2);
                let k3 = gm.mul(&tmp);
                let mut tmp = y.clone();
                tmp.axpy(hs, &k3);
                let k4 = g1.mul(&tmp);
                let mut out = y.clone();
                out.axpy(hs / 6.0, &k1);
                out.axpy(hs / 3.0, &k2);
                out.axpy(hs / 3.0, &k3);
                out.axpy(hs / 6.0, &k4);
                out
            };
            y = match det.as_deref_mut() {
                Some(d) => {
                    let r = rk4(&DenseMatrix::identity(g0.rows()).as_float());
                    *d *= r.det();
                    r.mul(&y)
                }
                None => rk4(&y),
            };
            trace_integral += hs / 6.0 * (a0.trace() + 4.0 * am.trace() + a1.trace());
            a0 = a1;
            g0 = g1;
        }
    }
    Ok((y, trace_integral))
}

/// `Φ(t, t0)` with the determinant identity checked.
pub fn transition_matrix(
    sys: &TimeVaryingSystem,
    t0: f64,
    t: f64,
    step: f64,
) -> Result<TransitionRecord, OdeError> {
    check_step(step)?;
    check_range(sys, t0, t)?;
    let n = sys.n();
    let mut det_phi = 1.0;
    let (phi, trace_integral) = integrate_linear(
        sys,
        t0,
        t,
        step,
        DenseMatrix::identity(n).as_float(),
        &|a| a.clone(),
        Some(&mut det_phi),
    )?;
    Ok(record(t0, t, phi, det_phi, trace_integral))
}

fn record(t0: f64, t: f64, phi: DenseMatrix, det_phi: f64, trace_integral: f64) -> TransitionRecord {
    let det_direct = phi.det();
    let det_predicted = trace_integral.exp();
    let suspect = !((det_phi - det_predicted).abs() <= DET_REL_TOL * det_predicted.abs());
    TransitionRecord {
        t0,
        t,
        phi,
        det_phi,
        det_direct,
        det_predicted,
        suspect,
    }
}

/// `Φ(t_k, t0)` for increasing `times`, integrated in one sweep.
pub fn transition_series(
    sys: &TimeVaryingSystem,
    t0: f64,
    times: &[f64],
    step: f64,
) -> Result<Vec<TransitionRecord>, OdeError> {
    check_step(step)?;
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(OdeError::BadGrid);
    }
    let n = sys.n();
    let mut out = Vec::with_capacity(times.len());
    let mut y = DenseMatrix::identity(n).as_float();
    let mut at = t0;
    let mut trace_integral = 0.0;
    let mut det_phi = 1.0;
    for &t in times {
        check_range(sys, t0, t)?;
        let (y_next, ti) = integrate_linear(sys, at, t, step, y, &|a| a.clone(), Some(&mut det_phi))?;
        y = y_next;
        trace_integral += ti;
        at = t;
        out.push(record(t0, t, y.clone(), det_phi, trace_integral));
    }
    Ok(out)
}

/// `Φ^(p)(t, t0)` by integrating the compound system, cross-checked
/// against the multiplicative compound of `Φ(t, t0)`.
pub fn compound_transition(
    sys: &TimeVaryingSystem,
    p: usize,
    t0: f64,
    t: f64,
    step: f64,
) -> Result<DenseMatrix, OdeError> {
    let n = sys.n();
    if p == 0 || p > n {
        return Err(OdeError::OrderOutOfRange { p, n });
    }
    check_step(step)?;
    check_range(sys, t0, t)?;
    let m = crate::matrix::binomial(n, p);
    let gen = |a: &DenseMatrix| add_compound(a, p).expect("order checked").matrix;
    let (y, _) = integrate_linear(sys, t0, t, step, DenseMatrix::identity(m).as_float(), &gen, None)?;
    let phi = transition_matrix(sys, t0, t, step)?.phi;
    let other = mult_compound(&phi, p).expect("order checked").matrix;
    let rel = y.rel_diff(&other);
    if !(rel <= COMPOUND_ROUTE_TOL) {
        return Err(OdeError::RouteMismatch { p, rel });
    }
    Ok(y)
}

/// TN / TP status of `Φ(t, t0)` read off the integrated compounds. Each
/// minor is an entry of some `Φ^(p)`; entries within `1e-13` of the
/// compound's largest entry count as zero.
pub fn transition_minor_signs(
    sys: &TimeVaryingSystem,
    t0: f64,
    t: f64,
    step: f64,
) -> Result<crate::tpds::MinorSigns, OdeError> {
    let mut out = crate::tpds::MinorSigns {
        is_tn: true,
        is_tp: true,
    };
    for p in 1..=sys.n() {
        let y = compound_transition(sys, p, t0, t, step)?;
        let tol = 1e-13 * y.max_abs();
        for &v in y.data() {
            out.is_tn &= v >= -tol;
            out.is_tp &= v > tol;
        }
    }
    Ok(out)
}

/// Sampled solution with per-sample sign counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub s_minus: Vec<usize>,
    pub s_plus: Vec<usize>,
    pub in_v: Vec<bool>,
    /// Representative time (first sample) of each cluster of non-`V`
    /// samples.
    pub exceptional_times: Vec<f64>,
}

impl Trajectory {
    pub fn from_states(times: Vec<f64>, states: Vec<Vec<f64>>) -> Trajectory {
        let mut s_minus = Vec::with_capacity(states.len());
        let mut s_plus = Vec::with_capacity(states.len());
        let mut in_v = Vec::with_capacity(states.len());
        for z in &states {
            let tol = TRAJECTORY_ZERO_REL * z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let p = sign_pattern(z, tol);
            s_minus.push(pattern_s_minus(&p));
            s_plus.push(pattern_s_plus(&p));
            in_v.push(pattern_in_v(&p));
        }
        let mut exceptional_times = Vec::new();
        let mut last_flag: Option<usize> = None;
        for (k, &v) in in_v.iter().enumerate() {
            if !v {
                if last_flag.is_none_or(|j| k - j > CLUSTER_GAP) {
                    exceptional_times.push(times[k]);
                }
                last_flag = Some(k);
            }
        }
        Trajectory {
            times,
            states,
            s_minus,
            s_plus,
            in_v,
            exceptional_times,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    /// `σ(z(t_k))` where the sample is in `V`.
    pub fn sigma(&self) -> Vec<Option<usize>> {
        self.in_v
            .iter()
            .zip(&self.s_minus)
            .map(|(&v, &s)| v.then_some(s))
            .collect()
    }

    /// First sample index where `seq` increases, if any.
    fn first_increase(seq: &[usize]) -> Option<usize> {
        seq.windows(2).position(|w| w[1] > w[0]).map(|k| k + 1)
    }

    /// Sampled monotonicity check: `s⁻` and `s⁺`
    /// non-increasing, and at most `n - 1` clusters of non-`V` samples
    /// after the initial one.
    pub fn check_monotone(&self) -> Result<(), OdeError> {
        let mut times = Vec::new();
        let mut detail = Vec::new();
        if let Some(k) = Self::first_increase(&self.s_plus) {
            times.push(self.times[k]);
            detail.push(format!("s+ rose from {} to {}", self.s_plus[k - 1], self.s_plus[k]));
        }
        if let Some(k) = Self::first_increase(&self.s_minus) {
            times.push(self.times[k]);
            detail.push(format!("s- rose from {} to {}", self.s_minus[k - 1], self.s_minus[k]));
        }
        let n = self.dim();
        let clusters: Vec<f64> = self
            .exceptional_times
            .iter()
            .copied()
            .filter(|&t| Some(t) != self.times.first().copied())
            .collect();
        if clusters.len() > n.saturating_sub(1) {
            detail.push(format!("{} exceptional clusters exceed n - 1 = {}", clusters.len(), n - 1));
            times.extend(clusters);
        }
        if detail.is_empty() {
            Ok(())
        } else {
            Err(OdeError::MonotonicityViolation {
                times,
                detail: detail.join("; "),
            })
        }
    }

    /// CSV with header `t,z1..zn,s_minus,s_plus,in_V`.
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let mut out = String::from("t");
        for i in 1..=n {
            let _ = write!(out, ",z{i}");
        }
        out.push_str(",s_minus,s_plus,in_V\n");
        for k in 0..self.len() {
            let _ = write!(out, "{}", self.times[k]);
            for v in &self.states[k] {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(
                out,
                ",{},{},{}",
                self.s_minus[k],
                self.s_plus[k],
                u8::from(self.in_v[k])
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub step: f64,
    /// Enforce monotone sign counts (for systems classified TPDS).
    pub assert_monotone: bool,
}

/// Evenly spaced grid including both ends.
pub fn uniform_grid(t0: f64, t1: f64, samples: usize) -> Vec<f64> {
    assert!(samples >= 2, "grid needs at least two samples");
    (0..samples)
        .map(|k| {
            if k + 1 == samples {
                t1
            } else {
                t0 + (t1 - t0) * k as f64 / (samples - 1) as f64
            }
        })
        .collect()
}

/// Solve `ż = A(t) z`, `z(grid[0]) = z0`, sampling at every grid time.
pub fn simulate_linear(
    sys: &TimeVaryingSystem,
    z0: &[f64],
    grid: &[f64],
    opts: SimOptions,
) -> Result<Trajectory, OdeError> {
    check_step(opts.step)?;
    let n = sys.n();
    if z0.len() != n {
        return Err(OdeError::Dimension { got: z0.len(), n });
    }
    if z0.iter().all(|&v| v == 0.0) {
        return Err(OdeError::TrivialSolution);
    }
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(OdeError::BadGrid);
    }
    check_range(sys, grid[0], *grid.last().unwrap())?;
    let mut z = DenseMatrix::column(z0);
    let mut states = vec![z0.to_vec()];
    for w in grid.windows(2) {
        z = integrate_linear(sys, w[0], w[1], opts.step, z, &|a| a.clone(), None)?.0;
        states.push(z.data().to_vec());
    }
    let traj = Trajectory::from_states(grid.to_vec(), states);
    if opts.assert_monotone {
        traj.check_monotone()?;
    }
    Ok(traj)
}

/// For every run of samples with `z_1 ≈ 0`, compares `s⁺` at the run's
/// first sample with `s⁺` at the next sample where `z_1 ≠ 0`, requiring a
/// strict drop.
pub fn tn_weak_svdp_check(traj: &Trajectory) -> Result<bool, OdeError> {
    let zero_first: Vec<bool> = traj
        .states
        .iter()
        .map(|z| {
            let tol = TRAJECTORY_ZERO_REL * z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            z[0].abs() <= tol
        })
        .collect();
    let mut pairs = 0;
    let mut holds = true;
    let mut k = 0;
    while k < zero_first.len() {
        if !zero_first[k] {
            k += 1;
            continue;
        }
        let r = k;
        while k < zero_first.len() && zero_first[k] {
            k += 1;
        }
        if k < zero_first.len() {
            pairs += 1;
            holds &= traj.s_plus[k] < traj.s_plus[r];
        }
    }
    if pairs == 0 {
        return Err(OdeError::NoApplicablePair);
    }
    Ok(holds)
}

/// One classical RK4 step for `ẏ = f(t, y)`.
pub fn rk4_step<E>(
    f: &dyn Fn(f64, &[f64]) -> Result<Vec<f64>, E>,
    t: f64,
    y: &[f64],
    h: f64,
) -> Result<Vec<f64>, E> {
    let shifted = |k: &[f64], c: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + c * b).collect() };
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &shifted(&k1, 0.5 * h))?;
    let k3 = f(t + 0.5 * h, &shifted(&k2, 0.5 * h))?;
    let k4 = f(t + h, &shifted(&k3, h))?;
    Ok((0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::Segment;

    fn cosh_system(a: f64, b: f64) -> TimeVaryingSystem {
        TimeVaryingSystem::from_exprs(2, (a, b), &["0", "t", "t", "0"], None).unwrap()
    }

    #[test]
    fn closed_form_transition() {
        let sys = cosh_system(0.0, 1.0);
        let rec = transition_matrix(&sys, 0.0, 1.0, 1e-3).unwrap();
        let (c, s) = (0.5f64.cosh(), 0.5f64.sinh());
        let expect = DenseMatrix::from_rows(&[[c, s], [s, c]]);
        assert!(rec.phi.sub(&expect).max_abs() < 1e-9);
        assert!((rec.det_phi - 1.0).abs() < 1e-10 && !rec.suspect);

        let zero = TimeVaryingSystem::constant(&DenseMatrix::zeros(3, 3), (0.0, 1.0)).unwrap();
        let rec = transition_matrix(&zero, 0.0, 1.0, 1e-2).unwrap();
        assert_eq!(rec.phi, DenseMatrix::identity(3));

        let up = TimeVaryingSystem::from_exprs(2, (0.0, 1.0), &["0", "t", "0", "0"], None).unwrap();
        let rec = transition_matrix(&up, 0.0, 1.0, 1e-3).unwrap();
        assert!(rec.phi.sub(&DenseMatrix::from_rows(&[[1.0, 0.5], [0.0, 1.0]])).max_abs() < 1e-9);
    }

    #[test]
    fn fourth_order_convergence() {
        let sys = cosh_system(0.0, 1.0);
        let (c, s) = (0.5f64.cosh(), 0.5f64.sinh());
        let expect = DenseMatrix::from_rows(&[[c, s], [s, c]]);
        let err = |h: f64| transition_matrix(&sys, 0.0, 1.0, h).unwrap().phi.sub(&expect).max_abs();
        let ratio = err(0.1) / err(0.05);
        assert!(ratio > 14.0 && ratio < 18.0, "{ratio}");
    }

    #[test]
    fn guards() {
        let sys = cosh_system(0.0, 1.0);
        assert!(matches!(transition_matrix(&sys, 0.0, 2.0, 1e-3), Err(OdeError::OutOfInterval { .. })));
        assert!(matches!(transition_matrix(&sys, 0.0, 1.0, 0.0), Err(OdeError::BadStep(_))));
        let opts = SimOptions { step: 1e-3, assert_monotone: false };
        assert_eq!(
            simulate_linear(&sys, &[0.0, 0.0], &[0.0, 1.0], opts),
            Err(OdeError::TrivialSolution)
        );
        assert!(matches!(compound_transition(&sys, 3, 0.0, 1.0, 1e-3), Err(OdeError::OrderOutOfRange { .. })));
    }

    #[test]
    fn compound_routes_agree() {
        let sys = cosh_system(0.0, 1.0);
        let det = compound_transition(&sys, 2, 0.0, 1.0, 1e-3).unwrap();
        assert!((det.get(0, 0) - 1.0).abs() < 1e-10);
        let p1 = compound_transition(&sys, 1, 0.0, 1.0, 1e-3).unwrap();
        assert!(p1.rel_diff(&transition_matrix(&sys, 0.0, 1.0, 1e-3).unwrap().phi) < 1e-13);
    }

    #[test]
    fn weak_svdp_pairs() {
        let sys = TimeVaryingSystem::constant(&DenseMatrix::from_int_rows(&[[0, 1], [0, 0]]), (0.0, 1.0)).unwrap();
        let opts = SimOptions { step: 1e-3, assert_monotone: false };
        let traj = simulate_linear(&sys, &[0.0, 1.0], &uniform_grid(0.0, 1.0, 11), opts).unwrap();
        assert_eq!(traj.s_plus[0], 1);
        assert_eq!(traj.s_plus[1], 0);
        assert_eq!(tn_weak_svdp_check(&traj), Ok(true));
        let traj = simulate_linear(&sys, &[1.0, 1.0], &uniform_grid(0.0, 1.0, 11), opts).unwrap();
        assert_eq!(tn_weak_svdp_check(&traj), Err(OdeError::NoApplicablePair));
    }

    #[test]
    fn clusters_merge_nearby_samples() {
        let times: Vec<f64> = (0..12).map(f64::from).collect();
        let mut states = vec![vec![1.0, 1.0]; 12];
        states[2] = vec![0.0, 1.0];
        states[4] = vec![0.0, 1.0];
        states[9] = vec![1.0, 0.0];
        let traj = Trajectory::from_states(times, states);
        assert_eq!(traj.exceptional_times, vec![2.0, 9.0]);
        assert!(traj.to_csv().starts_with("t,z1,z2,s_minus,s_plus,in_V\n0,1,1,0,0,1\n"));
    }

    #[test]
    fn switched_boundaries_are_hit() {
        let c = DenseMatrix::from_int_rows(&[[-1, 2], [2, -1]]);
        let sys = TimeVaryingSystem::new(
            2,
            (0.0, 1.0),
            vec![Segment::constant(0.0, 0.3, &c), Segment::constant(0.3, 1.0, &c.scale(2.0))],
            None,
        )
        .unwrap();
        let rec = transition_matrix(&sys, 0.0, 1.0, 0.25).unwrap();
        let exact = crate::matrix::expm(&c.scale(1.4)).mul(&crate::matrix::expm(&c.scale(0.3)));
        assert!(rec.phi.rel_diff(&exact) < 1e-3);
        let fine = transition_matrix(&sys, 0.0, 1.0, 1e-3).unwrap();
        assert!(fine.phi.rel_diff(&exact) < 1e-11);
    }
}
