//! Piecewise descriptions of `t ↦ A(t)`.

use thiserror::Error;

use crate::expr::{parse_time_only, EvalContext, Expr, ExprError};
use crate::matrix::DenseMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("system has no segments")]
    EmptySegments,
    #[error("invalid interval [{0}, {1}]")]
    BadInterval(f64, f64),
    #[error("segments do not tile the interval: {0}")]
    BadTiling(String),
    #[error("segment {segment} has {got} entries, expected {expected}")]
    EntryCount {
        segment: usize,
        got: usize,
        expected: usize,
    },
    #[error("matrix entries may depend on t only: {0}")]
    StateDependentEntry(String),
    #[error("invalid period {0}")]
    BadPeriod(f64),
    #[error("A(t) and A(t + T) differ by {diff:e} at t = {t}")]
    NotPeriodic { t: f64, diff: f64 },
    #[error("time {t} outside [{a}, {b}]")]
    OutOfInterval { t: f64, a: f64, b: f64 },
    #[error("entry ({row}, {col}) at t = {t}: {source}")]
    Eval {
        row: usize,
        col: usize,
        t: f64,
        source: ExprError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Entry {
    Const(f64),
    Expr(Expr),
}

impl Entry {
    pub fn parse(src: &str) -> Result<Entry, ExprError> {
        let e = parse_time_only(src)?;
        Ok(match e.as_constant() {
            Some(v) => Entry::Const(v),
            None => Entry::Expr(e),
        })
    }

    fn eval(&self, t: f64) -> Result<f64, ExprError> {
        match self {
            Entry::Const(v) => Ok(*v),
            Entry::Expr(e) => e.eval(&EvalContext::time(t)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    /// Row-major `n x n` entries.
    pub entries: Vec<Entry>,
}

impl Segment {
    pub fn constant(start: f64, end: f64, a: &DenseMatrix) -> Segment {
        Segment {
            start,
            end,
            entries: a.data().iter().map(|&v| Entry::Const(v)).collect(),
        }
    }

    /// Entries given as expression strings, row-major.
    pub fn from_exprs(start: f64, end: f64, entries: &[&str]) -> Result<Segment, ExprError> {
        Ok(Segment {
            start,
            end,
            entries: entries.iter().map(|s| Entry::parse(s)).collect::<Result<_, _>>()?,
        })
    }

    pub fn is_constant(&self) -> bool {
        self.entries.iter().all(|e| matches!(e, Entry::Const(_)))
    }
}

/// Interval of integration on which one segment formula applies,
/// evaluated at `t - shift`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub segment: usize,
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeVaryingSystem {
    n: usize,
    a: f64,
    b: f64,
    segments: Vec<Segment>,
    period: Option<f64>,
}

pub const PERIOD_CHECK_POINTS: usize = 100;
pub const PERIOD_CHECK_TOL: f64 = 1e-10;

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs()))
}

impl TimeVaryingSystem {
    pub fn new(
        n: usize,
        interval: (f64, f64),
        segments: Vec<Segment>,
        period: Option<f64>,
    ) -> Result<Self, SystemError> {
        let (a, b) = interval;
        if !(a.is_finite() && b.is_finite() && a < b) || n == 0 {
            return Err(SystemError::BadInterval(a, b));
        }
        if segments.is_empty() {
            return Err(SystemError::EmptySegments);
        }
        let mut cursor = a;
        for (k, s) in segments.iter().enumerate() {
            if s.entries.len() != n * n {
                return Err(SystemError::EntryCount {
                    segment: k,
                    got: s.entries.len(),
                    expected: n * n,
                });
            }
            if !close(s.start, cursor) || !(s.end > s.start) {
                return Err(SystemError::BadTiling(format!(
                    "segment {k} is [{}, {}], expected to start at {cursor}",
                    s.start, s.end
                )));
            }
            for e in &s.entries {
                if let Entry::Expr(x) = e {
                    if !x.is_time_only() {
                        return Err(SystemError::StateDependentEntry(x.to_string()));
                    }
                }
            }
            cursor = s.end;
        }
        if !close(cursor, b) {
            return Err(SystemError::BadTiling(format!("segments end at {cursor}, interval at {b}")));
        }
        let sys = TimeVaryingSystem {
            n,
            a,
            b,
            segments,
            period,
        };
        if let Some(tp) = period {
            if !(tp.is_finite() && tp > 0.0) || b - a < tp * (1.0 - 1e-12) {
                return Err(SystemError::BadPeriod(tp));
            }
            sys.check_period(tp)?;
        }
        Ok(sys)
    }

    pub fn constant(a: &DenseMatrix, interval: (f64, f64)) -> Result<Self, SystemError> {
        let n = a.square_dim().map_err(|_| SystemError::EntryCount {
            segment: 0,
            got: a.rows() * a.cols(),
            expected: a.rows() * a.rows(),
        })?;
        Self::new(n, interval, vec![Segment::constant(interval.0, interval.1, a)], None)
    }

    /// One expression per entry on a single segment.
    pub fn from_exprs(
        n: usize,
        interval: (f64, f64),
        entries: &[&str],
        period: Option<f64>,
    ) -> Result<Self, SystemError> {
        let seg = Segment::from_exprs(interval.0, interval.1, entries).map_err(|source| {
            SystemError::Eval {
                row: 0,
                col: 0,
                t: interval.0,
                source,
            }
        })?;
        Self::new(n, interval, vec![seg], period)
    }

    /// With a period longer than one period's worth of data, samples
    /// `A(t)` against `A(t + T)`. With exactly one period on a single
    /// segment, the segment formula is compared with itself shifted by `T`.
    /// Several segments spanning exactly one period define the periodic
    /// extension and need no check.
    fn check_period(&self, tp: f64) -> Result<(), SystemError> {
        let span = self.b - self.a;
        let compare = |t: f64, lhs: DenseMatrix, rhs: DenseMatrix| {
            let diff = lhs.sub(&rhs).max_abs();
            if diff > PERIOD_CHECK_TOL * lhs.max_abs().max(1.0) {
                Err(SystemError::NotPeriodic { t, diff })
            } else {
                Ok(())
            }
        };
        if span > tp * (1.0 + 1e-9) {
            let room = span - tp;
            for k in 0..PERIOD_CHECK_POINTS {
                let t = self.a + room * k as f64 / (PERIOD_CHECK_POINTS - 1) as f64;
                compare(t, self.direct_at(t)?, self.direct_at(t + tp)?)?;
            }
        } else if self.segments.len() == 1 {
            for k in 0..PERIOD_CHECK_POINTS {
                let t = self.a + span * k as f64 / PERIOD_CHECK_POINTS as f64;
                compare(t, self.eval_segment(0, t)?, self.eval_segment(0, t + tp)?)?;
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Evaluate segment `k`'s formula at `t` (no range check, so the
    /// one-sided limit at a switching time is available).
    pub fn eval_segment(&self, k: usize, t: f64) -> Result<DenseMatrix, SystemError> {
        let n = self.n;
        let mut data = Vec::with_capacity(n * n);
        for (idx, e) in self.segments[k].entries.iter().enumerate() {
            data.push(e.eval(t).map_err(|source| SystemError::Eval {
                row: idx / n + 1,
                col: idx % n + 1,
                t,
                source,
            })?);
        }
        Ok(DenseMatrix::new(n, n, data).expect("n*n entries"))
    }

    fn segment_index(&self, t: f64) -> usize {
        self.segments
            .iter()
            .position(|s| t < s.end)
            .unwrap_or(self.segments.len() - 1)
    }

    fn direct_at(&self, t: f64) -> Result<DenseMatrix, SystemError> {
        if t < self.a - 1e-12 * (1.0 + self.a.abs()) || t > self.b + 1e-12 * (1.0 + self.b.abs()) {
            return Err(SystemError::OutOfInterval {
                t,
                a: self.a,
                b: self.b,
            });
        }
        self.eval_segment(self.segment_index(t), t)
    }

    /// `A(t)`; segments are right-open except the last. Periodic systems
    /// are defined for every `t >= a`.
    pub fn matrix_at(&self, t: f64) -> Result<DenseMatrix, SystemError> {
        match self.period {
            Some(tp) if t > self.b || t < self.a => {
                if t < self.a {
                    return Err(SystemError::OutOfInterval {
                        t,
                        a: self.a,
                        b: self.b,
                    });
                }
                let tau = self.a + (t - self.a).rem_euclid(tp);
                self.direct_at(tau)
            }
            _ => self.direct_at(t),
        }
    }

    /// Split `[t0, t1]` into pieces on which a single segment formula
    /// applies.
    pub fn pieces(&self, t0: f64, t1: f64) -> Result<Vec<Piece>, SystemError> {
        let slack = |x: f64| 1e-12 * (1.0 + x.abs());
        let (a, b) = (self.a, self.b);
        if t0 < a - slack(a) || t1 < t0 {
            return Err(SystemError::OutOfInterval { t: t0, a, b });
        }
        let within = t1 <= b + slack(b);
        let mut out = Vec::new();
        let push = |out: &mut Vec<Piece>, lo: f64, hi: f64, segment: usize, shift: f64| {
            let (lo, hi) = (lo.max(t0), hi.min(t1));
            if hi > lo {
                out.push(Piece { lo, hi, segment, shift });
            }
        };
        match self.period {
            _ if within => {
                for (k, s) in self.segments.iter().enumerate() {
                    push(&mut out, s.start, s.end, k, 0.0);
                }
            }
            None => return Err(SystemError::OutOfInterval { t: t1, a, b }),
            Some(tp) => {
                let first = ((t0 - a) / tp).floor().max(0.0) as usize;
                let last = ((t1 - a) / tp).ceil() as usize;
                for c in first..=last {
                    let shift = c as f64 * tp;
                    for (k, s) in self.segments.iter().enumerate() {
                        let (lo, hi) = (s.start.max(a), s.end.min(a + tp));
                        if hi > lo {
                            push(&mut out, lo + shift, hi + shift, k, shift);
                        }
                    }
                }
            }
        }
        if out.is_empty() && t1 == t0 {
            out.push(Piece {
                lo: t0,
                hi: t0,
                segment: self.segment_index(t0.min(b)),
                shift: 0.0,
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn switched() -> TimeVaryingSystem {
        let c = DenseMatrix::from_int_rows(&[[-1, 2, 0, 0], [2, -6, 3, 0], [0, 5, -1, 6], [0, 0, 4, -1]]);
        let b = ["0", "t", "0", "0", "t", "0", "t", "0", "0", "t", "0", "t", "0", "0", "t", "0"];
        TimeVaryingSystem::new(
            4,
            (0.0, 1.0),
            vec![
                Segment::constant(0.0, 0.25, &c),
                Segment::from_exprs(0.25, 0.5, &b).unwrap(),
                Segment::constant(0.5, 1.0, &c.transpose()),
            ],
            None,
        )
        .unwrap()
    }

    #[test]
    fn segment_lookup() {
        let s = switched();
        assert_eq!(s.matrix_at(0.1).unwrap().get(0, 1), 2.0);
        assert_eq!(s.matrix_at(0.25).unwrap().get(0, 1), 0.25);
        assert_eq!(s.matrix_at(0.3).unwrap().get(1, 0), 0.3);
        assert_eq!(s.matrix_at(0.5).unwrap().get(2, 1), 3.0);
        assert_eq!(s.matrix_at(1.0).unwrap().get(2, 1), 3.0);
        assert!(s.matrix_at(1.5).is_err());
        let p = s.pieces(0.1, 0.7).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!((p[0].lo, p[0].hi, p[2].lo, p[2].hi), (0.1, 0.25, 0.5, 0.7));
    }

    #[test]
    fn tiling_errors() {
        let c = DenseMatrix::identity(2);
        let gap = TimeVaryingSystem::new(
            2,
            (0.0, 1.0),
            vec![Segment::constant(0.0, 0.4, &c), Segment::constant(0.5, 1.0, &c)],
            None,
        );
        assert!(matches!(gap, Err(SystemError::BadTiling(_))));
        assert_eq!(
            TimeVaryingSystem::new(2, (0.0, 1.0), vec![], None),
            Err(SystemError::EmptySegments)
        );
        let short = TimeVaryingSystem::new(2, (0.0, 1.0), vec![Segment::constant(0.0, 0.5, &c)], None);
        assert!(matches!(short, Err(SystemError::BadTiling(_))));
        let state = TimeVaryingSystem::from_exprs(1, (0.0, 1.0), &["x1"], None);
        assert!(state.is_err());
    }

    #[test]
    fn periodicity() {
        let tp = 2.0 * std::f64::consts::PI;
        let entries = ["0", "1 + sin(t)", "1 + sin(t)", "0"];
        let s = TimeVaryingSystem::from_exprs(2, (0.0, tp), &entries, Some(tp)).unwrap();
        let t = 20.0;
        assert!((s.matrix_at(t).unwrap().get(0, 1) - (1.0 + t.sin())).abs() < 1e-12);
        let long = TimeVaryingSystem::from_exprs(2, (0.0, 3.0 * tp), &entries, Some(tp));
        assert!(long.is_ok());
        let bad = TimeVaryingSystem::from_exprs(2, (0.0, 3.0 * tp), &entries, Some(2.0));
        assert!(matches!(bad, Err(SystemError::NotPeriodic { .. })));
        let bad_one = TimeVaryingSystem::from_exprs(1, (0.0, 1.0), &["t"], Some(1.0));
        assert!(matches!(bad_one, Err(SystemError::NotPeriodic { .. })));
        let p = s.pieces(0.0, 2.5 * tp).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p[2].shift, 2.0 * tp);
    }
}
