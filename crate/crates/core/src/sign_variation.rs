//! Sign-variation counts `s⁻`, `s⁺`, `σ` and membership in the set `V`.
//!
//! All counts work on a sign pattern (`-1`, `0`, `+1` per entry). A
//! [`SignVector`] turns real entries into a pattern using its zero
//! tolerance: `|y_i| <= tol` is classified as zero.

use thiserror::Error;

/// Default zero tolerance for floating-point inputs.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignError {
    #[error("sign vectors need at least two entries, got {0}")]
    TooShort(usize),
    #[error("zero tolerance must be a nonnegative finite number, got {0}")]
    BadTolerance(f64),
    #[error("vector is not in V: {0}")]
    NotInV(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignVector {
    entries: Vec<f64>,
    zero_tolerance: f64,
}

impl SignVector {
    pub fn new(entries: Vec<f64>, zero_tolerance: f64) -> Result<Self, SignError> {
        if entries.len() < 2 {
            return Err(SignError::TooShort(entries.len()));
        }
        if !(zero_tolerance >= 0.0 && zero_tolerance.is_finite()) {
            return Err(SignError::BadTolerance(zero_tolerance));
        }
        Ok(Self {
            entries,
            zero_tolerance,
        })
    }

    /// Exact classification: only literal zeros are zero.
    pub fn exact(entries: Vec<f64>) -> Result<Self, SignError> {
        Self::new(entries, 0.0)
    }

    /// Floating-point input with the default tolerance.
    pub fn float(entries: Vec<f64>) -> Result<Self, SignError> {
        Self::new(entries, DEFAULT_ZERO_TOL)
    }

    pub fn from_ints(entries: &[i64]) -> Result<Self, SignError> {
        Self::exact(entries.iter().map(|&v| v as f64).collect())
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn zero_tolerance(&self) -> f64 {
        self.zero_tolerance
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn pattern(&self) -> Vec<i8> {
        sign_pattern(&self.entries, self.zero_tolerance)
    }

    pub fn s_minus(&self) -> usize {
        pattern_s_minus(&self.pattern())
    }

    pub fn s_plus(&self) -> usize {
        pattern_s_plus(&self.pattern())
    }

    pub fn in_v(&self) -> bool {
        let p = self.pattern();
        let structural = pattern_in_v(&p);
        debug_assert_eq!(structural, pattern_s_minus(&p) == pattern_s_plus(&p));
        structural
    }

    /// `σ(y)`; defined only on `V`.
    pub fn sigma(&self) -> Result<usize, SignError> {
        pattern_sigma(&self.pattern())
    }
}

pub fn s_minus(y: &SignVector) -> usize {
    y.s_minus()
}

pub fn s_plus(y: &SignVector) -> usize {
    y.s_plus()
}

pub fn in_v(y: &SignVector) -> bool {
    y.in_v()
}

pub fn sigma(y: &SignVector) -> Result<usize, SignError> {
    y.sigma()
}

/// Classify entries into `-1 / 0 / +1` with an absolute zero tolerance.
pub fn sign_pattern(y: &[f64], tol: f64) -> Vec<i8> {
    y.iter()
        .map(|&v| {
            if v.abs() <= tol {
                0
            } else if v > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect()
}

/// Zero tolerance scaled to the vector: `rel * max|y_i|`.
pub fn relative_tol(y: &[f64], rel: f64) -> f64 {
    rel * y.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Sign changes after deleting zeros.
pub fn pattern_s_minus(p: &[i8]) -> usize {
    let mut count = 0;
    let mut last = 0i8;
    for &s in p.iter().filter(|&&s| s != 0) {
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

/// Maximal sign changes over all `±1` replacements of the zeros, computed
/// run by run in linear time.
pub fn pattern_s_plus(p: &[i8]) -> usize {
    let n = p.len();
    if n == 0 {
        return 0;
    }
    let nonzero: Vec<usize> = (0..n).filter(|&i| p[i] != 0).collect();
    let Some(&first) = nonzero.first() else {
        return n - 1;
    };
    let last = *nonzero.last().unwrap();
    // leading and trailing zero runs: every position can alternate
    let mut count = first + (n - 1 - last);
    for w in nonzero.windows(2) {
        let (i, j) = (w[0], w[1]);
        let run = j - i - 1;
        let same = p[i] == p[j];
        // run+1 transitions; parity is fixed by the flanking signs
        let slots = run + 1;
        count += match (same, slots % 2 == 0) {
            (true, true) | (false, false) => slots,
            _ => slots - 1,
        };
    }
    count
}

/// Structural test for `V`: nonzero ends, and every interior zero sits
/// between a strict sign change.
pub fn pattern_in_v(p: &[i8]) -> bool {
    let n = p.len();
    if n == 0 || p[0] == 0 || p[n - 1] == 0 {
        return false;
    }
    (1..n - 1).all(|i| p[i] != 0 || (p[i - 1] as i32) * (p[i + 1] as i32) < 0)
}

pub fn pattern_sigma(p: &[i8]) -> Result<usize, SignError> {
    if !pattern_in_v(p) {
        return Err(SignError::NotInV(format!("{p:?}")));
    }
    Ok(pattern_s_minus(p))
}

/// Signs, counts and `V` flag for one sample, with a tolerance relative to
/// the vector's max-norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignSummary {
    pub s_minus: usize,
    pub s_plus: usize,
    pub in_v: bool,
}

impl SignSummary {
    pub fn of(y: &[f64], tol: f64) -> Self {
        let p = sign_pattern(y, tol);
        Self {
            s_minus: pattern_s_minus(&p),
            s_plus: pattern_s_plus(&p),
            in_v: pattern_in_v(&p),
        }
    }

    /// `σ` when the sample lies in `V`.
    pub fn sigma(&self) -> Option<usize> {
        self.in_v.then_some(self.s_minus)
    }
}
