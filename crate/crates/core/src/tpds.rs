//! The classes `M` / `M⁺` and TNDS / TPDS verdicts for linear systems.

use std::fmt;

use thiserror::Error;

use crate::compound::add_compound;
use crate::matrix::{expm, expm_metzler, DenseMatrix, IndexTuple};
use crate::system::{SystemError, TimeVaryingSystem};
use crate::total_positivity::minor_value;

pub const DEFAULT_DELTA_FLOOR: f64 = 1e-6;
pub const DEFAULT_POINTS_PER_SEGMENT: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("system has no segments")]
    EmptySegments,
    #[error("sampling needs at least one point per segment")]
    EmptyGrid,
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Tridiagonal with nonnegative sub- and super-diagonal.
pub fn in_m(a: &DenseMatrix) -> bool {
    m_violation(a, false).is_none()
}

/// Tridiagonal with positive sub- and super-diagonal.
pub fn in_m_plus(a: &DenseMatrix) -> bool {
    m_violation(a, true).is_none()
}

/// First entry breaking membership, 1-based.
fn m_violation(a: &DenseMatrix, strict: bool) -> Option<(usize, usize, f64)> {
    let n = a.rows();
    if !a.is_square() {
        return Some((0, 0, f64::NAN));
    }
    for i in 0..n {
        for j in 0..n {
            let v = a.get(i, j);
            let d = i.abs_diff(j);
            let bad = (d > 1 && v != 0.0) || (d == 1 && (v < 0.0 || (strict && v <= 0.0)));
            if bad {
                return Some((i + 1, j + 1, v));
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Tpds,
    TndsOnly,
    Neither,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Tpds => "TPDS",
            Verdict::TndsOnly => "TNDS only",
            Verdict::Neither => "neither",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Sample time; `None` for constant systems.
    pub t: Option<f64>,
    pub row: usize,
    pub col: usize,
    pub value: f64,
    pub reason: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemClass {
    pub verdict: Verdict,
    /// Smallest sub/super-diagonal value over all strictness samples.
    pub delta: Option<f64>,
    pub violations: Vec<Violation>,
    /// Sampling density used (points per segment); 0 for constant systems.
    pub points_per_segment: usize,
    pub samples: usize,
}

fn off_diagonal_min(a: &DenseMatrix) -> Option<f64> {
    let n = a.rows();
    (0..n.saturating_sub(1))
        .flat_map(|i| [a.get(i, i + 1), a.get(i + 1, i)])
        .reduce(f64::min)
}

fn entry_violation(a: &DenseMatrix, t: Option<f64>, strict: bool) -> Option<Violation> {
    m_violation(a, strict).map(|(row, col, value)| Violation {
        t,
        row,
        col,
        value,
        reason: if row.abs_diff(col) > 1 {
            "nonzero entry off the tridiagonal band"
        } else if value < 0.0 {
            "negative sub/super-diagonal entry"
        } else {
            "zero sub/super-diagonal entry"
        },
    })
}

/// Constant `A`: TPDS iff `A ∈ M⁺`, TNDS iff `A ∈ M`.
pub fn classify_constant(a: &DenseMatrix) -> SystemClass {
    let verdict = if in_m_plus(a) {
        Verdict::Tpds
    } else if in_m(a) {
        Verdict::TndsOnly
    } else {
        Verdict::Neither
    };
    let violations = match verdict {
        Verdict::Tpds => vec![],
        Verdict::TndsOnly => entry_violation(a, None, true).into_iter().collect(),
        Verdict::Neither => entry_violation(a, None, false).into_iter().collect(),
    };
    SystemClass {
        verdict,
        delta: (verdict == Verdict::Tpds).then(|| off_diagonal_min(a).unwrap_or(f64::INFINITY)),
        violations,
        points_per_segment: 0,
        samples: 1,
    }
}

/// Sign summary of all minors of one transition matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinorSigns {
    pub is_tn: bool,
    pub is_tp: bool,
}

/// Signs of every minor of `exp(At)`.
///
/// When every additive compound of `A` is Metzler the order-`p` minors
/// are the entries of `exp(t A^[p])`, computed with entrywise relative
/// accuracy, so minors of size `t^(n-1)` keep their sign. Otherwise the
/// minors of `expm(At)` are taken directly with the usual cutoff.
pub fn exponential_minor_signs(a: &DenseMatrix, t: f64) -> MinorSigns {
    let n = a.rows();
    let compounds: Vec<DenseMatrix> = (1..=n)
        .map(|p| add_compound(a, p).expect("valid order").matrix)
        .collect();
    if compounds.iter().all(|c| c.is_metzler()) {
        let mut is_tp = true;
        for c in &compounds {
            let e = expm_metzler(&c.scale(t));
            is_tp &= e.data().iter().all(|&v| v > 0.0);
        }
        return MinorSigns { is_tn: true, is_tp };
    }
    let phi = expm(&a.scale(t));
    let cls = crate::total_positivity::classify(&phi).expect("n within limit");
    MinorSigns {
        is_tn: cls.is_tn,
        is_tp: cls.is_tp,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegativeMinor {
    pub t: f64,
    pub alpha: IndexTuple,
    pub beta: IndexTuple,
    pub value: f64,
    /// First-order prediction `-t a_ij`.
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantCheck {
    pub class: SystemClass,
    pub samples: Vec<(f64, MinorSigns)>,
    /// Verdict implied by the samples alone.
    pub sampled_verdict: Verdict,
    pub agrees: bool,
    /// One witness per entry `a_ij > 0` with `|i - j| > 1`.
    pub negative_minors: Vec<NegativeMinor>,
}

pub const SAMPLE_TIMES: [f64; 3] = [0.01, 0.1, 1.0];

/// 2x2 minor of `exp(At)` that is `-t a_ij + o(t)`.
pub fn small_time_negative_minor(a: &DenseMatrix, i: usize, j: usize, t: f64) -> NegativeMinor {
    debug_assert!(i.abs_diff(j) > 1);
    let (rows, cols) = if i > j {
        (vec![j + 1, i], vec![j, j + 1])
    } else {
        (vec![i, i + 1], vec![i + 1, j])
    };
    let phi = expm(&a.scale(t));
    let value = minor_value(&phi, &rows, &cols);
    let tup = |v: &[usize]| IndexTuple::new(v.iter().map(|x| x + 1).collect()).expect("increasing");
    NegativeMinor {
        t,
        alpha: tup(&rows),
        beta: tup(&cols),
        value,
        predicted: -t * a.get(i, j),
    }
}

/// Cross-check of [`classify_constant`] against the transition matrices
/// `exp(At)` at `t ∈ {0.01, 0.1, 1}·t_scale`.
pub fn verify_constant(a: &DenseMatrix, t_scale: f64) -> ConstantCheck {
    let class = classify_constant(a);
    let samples: Vec<(f64, MinorSigns)> = SAMPLE_TIMES
        .iter()
        .map(|&s| (s * t_scale, exponential_minor_signs(a, s * t_scale)))
        .collect();
    let sampled_verdict = if samples.iter().all(|(_, m)| m.is_tp) {
        Verdict::Tpds
    } else if samples.iter().all(|(_, m)| m.is_tn) {
        Verdict::TndsOnly
    } else {
        Verdict::Neither
    };
    let n = a.rows();
    let small_t = 1e-3 * t_scale;
    let mut negative_minors = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i.abs_diff(j) > 1 && a.get(i, j) > 0.0 {
                negative_minors.push(small_time_negative_minor(a, i, j, small_t));
            }
        }
    }
    ConstantCheck {
        agrees: class.verdict == sampled_verdict,
        class,
        samples,
        sampled_verdict,
        negative_minors,
    }
}

/// Sampled verdict for a piecewise system: every sample must lie in `M`
/// for TNDS; TPDS additionally needs every sub/super-diagonal sample at or
/// above `delta_floor`. Samples are `start + k h`, `k < points`, per
/// segment; the interval start is checked for `M` but not for strictness.
pub fn classify_time_varying(
    sys: &TimeVaryingSystem,
    points_per_segment: usize,
    delta_floor: f64,
) -> Result<SystemClass, ClassifyError> {
    if sys.segments().is_empty() {
        return Err(ClassifyError::EmptySegments);
    }
    if points_per_segment == 0 {
        return Err(ClassifyError::EmptyGrid);
    }
    let (a0, _) = sys.interval();
    let mut violations = Vec::new();
    let mut in_m_all = true;
    let mut strict_all = true;
    let mut delta = f64::INFINITY;
    let mut samples = 0;
    for (k, seg) in sys.segments().iter().enumerate() {
        let h = (seg.end - seg.start) / points_per_segment as f64;
        for s in 0..points_per_segment {
            let t = seg.start + s as f64 * h;
            let m = sys.eval_segment(k, t)?;
            samples += 1;
            if let Some(v) = entry_violation(&m, Some(t), false) {
                in_m_all = false;
                violations.push(v);
                continue;
            }
            if t == a0 {
                continue;
            }
            if let Some(d) = off_diagonal_min(&m) {
                delta = delta.min(d);
                if d < delta_floor {
                    if strict_all {
                        let (row, col, value) = (0..m.rows() - 1)
                            .flat_map(|i| [(i + 1, i + 2, m.get(i, i + 1)), (i + 2, i + 1, m.get(i + 1, i))])
                            .find(|x| x.2 < delta_floor)
                            .expect("minimum below floor");
                        violations.push(Violation {
                            t: Some(t),
                            row,
                            col,
                            value,
                            reason: "sub/super-diagonal entry below delta floor",
                        });
                    }
                    strict_all = false;
                }
            }
        }
    }
    let verdict = if !in_m_all {
        Verdict::Neither
    } else if strict_all {
        Verdict::Tpds
    } else {
        Verdict::TndsOnly
    };
    Ok(SystemClass {
        verdict,
        delta: (verdict == Verdict::Tpds).then_some(delta),
        violations,
        points_per_segment,
        samples,
    })
}

/// Refinement for continuous entries: every sub/super-diagonal entry
/// stays at or above `delta_floor` except at isolated samples (never on
/// two consecutive samples of a segment). A zero confined to isolated
/// points does not stop `Φ` from being TP, while a zero on an interval
/// does; the grid only resolves this down to its spacing.
pub fn off_diagonal_zeros_isolated(
    sys: &TimeVaryingSystem,
    points_per_segment: usize,
    delta_floor: f64,
) -> Result<bool, ClassifyError> {
    if sys.segments().is_empty() {
        return Err(ClassifyError::EmptySegments);
    }
    if points_per_segment == 0 {
        return Err(ClassifyError::EmptyGrid);
    }
    let n = sys.n();
    for (k, seg) in sys.segments().iter().enumerate() {
        let h = (seg.end - seg.start) / points_per_segment as f64;
        let mut prev_low = vec![false; 2 * n.saturating_sub(1)];
        for s in 0..=points_per_segment {
            let t = if s == points_per_segment { seg.end } else { seg.start + s as f64 * h };
            let m = sys.eval_segment(k, t)?;
            if !in_m(&m) {
                return Ok(false);
            }
            for i in 0..n.saturating_sub(1) {
                for (slot, v) in [(2 * i, m.get(i, i + 1)), (2 * i + 1, m.get(i + 1, i))] {
                    let low = v < delta_floor;
                    if low && prev_low[slot] {
                        return Ok(false);
                    }
                    prev_low[slot] = low;
                }
            }
        }
    }
    Ok(true)
}

/// Metzler status of every `A^[p]`, used to confirm `A ∈ M` implies
/// Metzler compounds.
pub fn compounds_metzler(a: &DenseMatrix) -> bool {
    (1..=a.rows()).all(|p| add_compound(a, p).expect("valid order").matrix.is_metzler())
}
