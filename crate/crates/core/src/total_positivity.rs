//! Minors and the TN / TP / SSR / oscillatory classes.
//!
//! Minor signs on floating-point matrices use a scale-aware cutoff: a
//! minor is zero when the selected submatrix, scaled to unit row and
//! column max-norms, has `σ_min <= MINOR_REL_TOL * σ_max`. Exact-integer
//! matrices use fraction-free elimination and need no cutoff.

use nalgebra::DMatrix;
use rand::Rng;
use thiserror::Error;

use crate::matrix::{subsets, DenseMatrix, IndexTuple, MatrixError};
use crate::sign_variation::{pattern_s_minus, pattern_s_plus, relative_tol, sign_pattern};

pub const MINOR_REL_TOL: f64 = 1e-10;
/// Largest size accepted by exhaustive minor enumeration.
pub const EXHAUSTIVE_LIMIT: usize = 10;
/// Zero tolerance for eigenvector sign counts after unit normalization.
pub const EIGVEC_ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TpError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("exhaustive minor enumeration is limited to n <= {EXHAUSTIVE_LIMIT}, got n = {0}")]
    SizeLimitExceeded(usize),
    #[error("matrix is not tridiagonal: nonzero entry at ({0}, {1})")]
    NotTridiagonal(usize, usize),
    #[error("matrix is not totally nonnegative (minor {alpha}|{beta} = {value})")]
    NotTn {
        alpha: IndexTuple,
        beta: IndexTuple,
        value: f64,
    },
    #[error("Neville elimination broke down at {stage} ({row}, {col})")]
    PivotBreakdown {
        stage: &'static str,
        row: usize,
        col: usize,
    },
    #[error("matrix is not oscillatory")]
    NotOscillatory,
    #[error("spectral structure violated: {0}")]
    SpectralViolation(String),
    #[error("input vector is zero")]
    ZeroVector,
    #[error("columns are linearly dependent (rank {rank} < {cols})")]
    RankDeficient { rank: usize, cols: usize },
}

fn check_tuple(t: &IndexTuple, bound: usize, what: &str) -> Result<(), TpError> {
    if t.max() > bound {
        return Err(TpError::DimensionMismatch(format!(
            "{what} index {} exceeds dimension {bound}",
            t.max()
        )));
    }
    Ok(())
}

/// Minor `A(alpha|beta)` with 1-based index tuples.
pub fn minor(a: &DenseMatrix, alpha: &IndexTuple, beta: &IndexTuple) -> Result<f64, TpError> {
    if alpha.len() != beta.len() {
        return Err(TpError::DimensionMismatch(format!(
            "|alpha| = {} but |beta| = {}",
            alpha.len(),
            beta.len()
        )));
    }
    check_tuple(alpha, a.rows(), "row")?;
    check_tuple(beta, a.cols(), "column")?;
    Ok(minor_value(a, &alpha.zero_based(), &beta.zero_based()))
}

/// Minor with zero-based selections; exact for integer matrices.
pub(crate) fn minor_value(a: &DenseMatrix, rows: &[usize], cols: &[usize]) -> f64 {
    if a.is_integral() {
        if let Some(v) = bareiss_det(a, rows, cols) {
            return v as f64;
        }
    }
    float_det(a, rows, cols)
}

/// Sign of a minor (`-1`, `0`, `+1`) and its value.
pub(crate) fn minor_sign(a: &DenseMatrix, rows: &[usize], cols: &[usize]) -> (i8, f64) {
    if a.is_integral() {
        if let Some(v) = bareiss_det(a, rows, cols) {
            return (v.signum() as i8, v as f64);
        }
    }
    let det = float_det(a, rows, cols);
    if det == 0.0 || (rows.len() > 1 && numerically_singular(a, rows, cols)) {
        (0, det)
    } else if det > 0.0 {
        (1, det)
    } else {
        (-1, det)
    }
}

/// Whether the block is numerically singular: after scaling rows and then
/// columns to unit max-norm, `σ_min <= MINOR_REL_TOL · σ_max`. Positive
/// scaling does not change the sign of a minor, and above this ratio the
/// sign of the LU determinant is reliable.
fn numerically_singular(a: &DenseMatrix, rows: &[usize], cols: &[usize]) -> bool {
    let k = rows.len();
    let mut block = a.select(rows, cols).to_nalgebra();
    for i in 0..k {
        let m = block.row(i).amax();
        if m == 0.0 {
            return true;
        }
        block.row_mut(i).scale_mut(1.0 / m);
    }
    for j in 0..k {
        let m = block.column(j).amax();
        if m == 0.0 {
            return true;
        }
        block.column_mut(j).scale_mut(1.0 / m);
    }
    let sv = block.singular_values();
    sv.min() <= MINOR_REL_TOL * sv.max()
}

fn float_det(a: &DenseMatrix, rows: &[usize], cols: &[usize]) -> f64 {
    let g = |r: usize, c: usize| a.get(rows[r], cols[c]);
    match rows.len() {
        1 => g(0, 0),
        2 => g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0),
        3 => {
            g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1))
                - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
                + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0))
        }
        _ => a.select(rows, cols).det(),
    }
}

/// Fraction-free Gaussian elimination; `None` on overflow.
fn bareiss_det(a: &DenseMatrix, rows: &[usize], cols: &[usize]) -> Option<i128> {
    let n = rows.len();
    let mut m: Vec<Vec<i128>> = rows
        .iter()
        .map(|&i| cols.iter().map(|&j| a.get(i, j) as i128).collect())
        .collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k][k] == 0 {
            let Some(swap) = (k + 1..n).find(|&i| m[i][k] != 0) else {
                return Some(0);
            };
            m.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = m[i][j]
                    .checked_mul(m[k][k])?
                    .checked_sub(m[i][k].checked_mul(m[k][j])?)?;
                m[i][j] = v / prev;
            }
        }
        prev = m[k][k];
    }
    Some(sign * m[n - 1][n - 1])
}

/// A minor violating the tested property.
#[derive(Debug, Clone, PartialEq)]
pub struct MinorWitness {
    pub alpha: IndexTuple,
    pub beta: IndexTuple,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub is_tn: bool,
    pub is_tp: bool,
    pub is_ssr: bool,
    pub is_oscillatory: bool,
    /// First negative minor if not TN, otherwise first non-positive minor
    /// if not TP.
    pub witness: Option<MinorWitness>,
    /// For oscillatory input: whether `A^(n-1)` classified as TP.
    pub power_is_tp: Option<bool>,
}

struct MinorScan {
    is_tn: bool,
    is_tp: bool,
    is_ssr: bool,
    det_sign: i8,
    negative: Option<MinorWitness>,
    nonpositive: Option<MinorWitness>,
}

fn scan_minors(a: &DenseMatrix) -> MinorScan {
    let n = a.rows();
    let mut scan = MinorScan {
        is_tn: true,
        is_tp: true,
        is_ssr: true,
        det_sign: 0,
        negative: None,
        nonpositive: None,
    };
    for p in 1..=n {
        let tuples = subsets(n, p);
        let mut order_sign = 0i8;
        for alpha in &tuples {
            let rows = alpha.zero_based();
            for beta in &tuples {
                let cols = beta.zero_based();
                let (s, v) = minor_sign(a, &rows, &cols);
                if p == n {
                    scan.det_sign = s;
                }
                if s < 0 {
                    scan.is_tn = false;
                    if scan.negative.is_none() {
                        scan.negative = Some(MinorWitness {
                            alpha: alpha.clone(),
                            beta: beta.clone(),
                            value: v,
                        });
                    }
                }
                if s <= 0 {
                    scan.is_tp = false;
                    if scan.nonpositive.is_none() {
                        scan.nonpositive = Some(MinorWitness {
                            alpha: alpha.clone(),
                            beta: beta.clone(),
                            value: v,
                        });
                    }
                }
                if s == 0 || (order_sign != 0 && s != order_sign) {
                    scan.is_ssr = false;
                }
                if order_sign == 0 {
                    order_sign = s;
                }
            }
        }
    }
    scan
}

/// Strong connectivity of the directed graph of nonzero off-diagonal
/// entries.
pub fn is_irreducible(a: &DenseMatrix) -> bool {
    let n = a.rows();
    if n <= 1 {
        return true;
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let w = if forward { a.get(i, j) } else { a.get(j, i) };
                if i != j && w != 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

/// Exhaustive TN / TP / SSR / oscillatory classification.
pub fn classify(a: &DenseMatrix) -> Result<Classification, TpError> {
    let n = a.square_dim()?;
    if n > EXHAUSTIVE_LIMIT {
        return Err(TpError::SizeLimitExceeded(n));
    }
    let scan = scan_minors(a);
    let is_oscillatory = scan.is_tn && scan.det_sign != 0 && is_irreducible(a);
    let power_is_tp = if is_oscillatory && n > 1 {
        let power = a.powi((n - 1) as u32);
        Some(scan_minors(&power).is_tp)
    } else {
        None
    };
    let witness = if scan.is_tn {
        scan.nonpositive
    } else {
        scan.negative
    };
    Ok(Classification {
        is_tn: scan.is_tn,
        is_tp: scan.is_tp,
        is_ssr: scan.is_ssr,
        is_oscillatory,
        witness,
        power_is_tp,
    })
}

/// TP test through initial minors only: contiguous row and column blocks
/// where at least one of the blocks starts at index 1. `O(n^3)` minors
/// instead of `C(2n, n)`.
pub fn is_tp_initial_minors(a: &DenseMatrix) -> Result<bool, TpError> {
    let n = a.square_dim()?;
    for p in 1..=n {
        for start in 0..=n - p {
            let block: Vec<usize> = (start..start + p).collect();
            let lead: Vec<usize> = (0..p).collect();
            if minor_sign(a, &block, &lead).0 <= 0 || minor_sign(a, &lead, &block).0 <= 0 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Sufficient TN test for tridiagonal matrices: nonnegative off-diagonals
/// and `a_i >= b_i + c_{i-1}` on every row.
pub fn is_dominant_tridiagonal_tn(a: &DenseMatrix) -> Result<bool, TpError> {
    let n = a.square_dim()?;
    for i in 0..n {
        for j in 0..n {
            if i.abs_diff(j) > 1 && a.get(i, j) != 0.0 {
                return Err(TpError::NotTridiagonal(i + 1, j + 1));
            }
        }
    }
    for i in 0..n {
        let b = if i + 1 < n { a.get(i, i + 1) } else { 0.0 };
        let c_prev = if i > 0 { a.get(i, i - 1) } else { 0.0 };
        if b < 0.0 || c_prev < 0.0 || a.get(i, i) < b + c_prev {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone)]
pub struct GebFactorization {
    /// Lower-type factors, then the diagonal factor, then upper-type
    /// factors; their ordered product reconstructs the input.
    pub factors: Vec<DenseMatrix>,
    pub residual_error: f64,
}

impl GebFactorization {
    pub fn product(&self, n: usize) -> DenseMatrix {
        self.factors
            .iter()
            .fold(DenseMatrix::identity(n).as_float(), |acc, f| acc.mul(f))
    }
}

/// A diagonal matrix plus at most one entry on the first sub- or
/// super-diagonal, with everything nonnegative.
pub fn is_tn_geb(m: &DenseMatrix) -> bool {
    let Ok(n) = m.square_dim() else {
        return false;
    };
    let mut off = 0;
    for i in 0..n {
        for j in 0..n {
            let v = m.get(i, j);
            if i == j {
                if v < 0.0 {
                    return false;
                }
            } else if v != 0.0 {
                if i.abs_diff(j) != 1 || v < 0.0 {
                    return false;
                }
                off += 1;
            }
        }
    }
    off <= 1
}

fn eb(n: usize, i: usize, j: usize, p: f64) -> DenseMatrix {
    let mut m = DenseMatrix::identity(n).as_float();
    m.set(i, j, p);
    m
}

/// Bidiagonal factorization of a TN matrix by Neville elimination
/// without pivoting. Zero rows (columns) met during elimination are moved
/// by a GEB factor with a zero diagonal entry.
pub fn geb_factorize(a: &DenseMatrix) -> Result<GebFactorization, TpError> {
    let n = a.square_dim()?;
    let cls = classify(a)?;
    if !cls.is_tn {
        let w = cls.witness.expect("non-TN matrices carry a witness");
        return Err(TpError::NotTn {
            alpha: w.alpha,
            beta: w.beta,
            value: w.value,
        });
    }
    let tiny = 1e-13 * a.max_abs().max(f64::MIN_POSITIVE);
    let mut cur = a.clone().as_float();
    let mut lower: Vec<DenseMatrix> = Vec::new();
    let mut upper: Vec<DenseMatrix> = Vec::new();

    for k in 0..n.saturating_sub(1) {
        for i in (k + 1..n).rev() {
            let target = cur.get(i, k);
            if target.abs() <= tiny {
                cur.set(i, k, 0.0);
                continue;
            }
            let pivot = cur.get(i - 1, k);
            if pivot.abs() <= tiny {
                if (k..n).all(|j| cur.get(i - 1, j).abs() <= tiny) {
                    // move row i up; factor D + E_{i,i-1} with d_{i-1} = 0
                    let mut g = DenseMatrix::identity(n).as_float();
                    g.set(i - 1, i - 1, 0.0);
                    g.set(i, i - 1, 1.0);
                    for j in 0..n {
                        let v = cur.get(i, j);
                        cur.set(i - 1, j, v);
                        cur.set(i, j, 0.0);
                    }
                    lower.push(g);
                    continue;
                }
                return Err(TpError::PivotBreakdown {
                    stage: "row elimination",
                    row: i + 1,
                    col: k + 1,
                });
            }
            let m = target / pivot;
            if m < 0.0 {
                return Err(TpError::PivotBreakdown {
                    stage: "negative row multiplier",
                    row: i + 1,
                    col: k + 1,
                });
            }
            for j in 0..n {
                let v = cur.get(i, j) - m * cur.get(i - 1, j);
                cur.set(i, j, v);
            }
            cur.set(i, k, 0.0);
            lower.push(eb(n, i, i - 1, m));
        }
    }

    for k in 0..n.saturating_sub(1) {
        for j in (k + 1..n).rev() {
            let target = cur.get(k, j);
            if target.abs() <= tiny {
                cur.set(k, j, 0.0);
                continue;
            }
            let pivot = cur.get(k, j - 1);
            if pivot.abs() <= tiny {
                if (k..n).all(|i| cur.get(i, j - 1).abs() <= tiny) {
                    let mut g = DenseMatrix::identity(n).as_float();
                    g.set(j - 1, j - 1, 0.0);
                    g.set(j - 1, j, 1.0);
                    for i in 0..n {
                        let v = cur.get(i, j);
                        cur.set(i, j - 1, v);
                        cur.set(i, j, 0.0);
                    }
                    upper.insert(0, g);
                    continue;
                }
                return Err(TpError::PivotBreakdown {
                    stage: "column elimination",
                    row: k + 1,
                    col: j + 1,
                });
            }
            let m = target / pivot;
            if m < 0.0 {
                return Err(TpError::PivotBreakdown {
                    stage: "negative column multiplier",
                    row: k + 1,
                    col: j + 1,
                });
            }
            for i in 0..n {
                let v = cur.get(i, j) - m * cur.get(i, j - 1);
                cur.set(i, j, v);
            }
            cur.set(k, j, 0.0);
            upper.insert(0, eb(n, j - 1, j, m));
        }
    }

    let diag: Vec<f64> = (0..n).map(|i| cur.get(i, i)).collect();
    if diag.iter().any(|&d| d < -tiny) {
        return Err(TpError::PivotBreakdown {
            stage: "negative diagonal pivot",
            row: diag.iter().position(|&d| d < -tiny).unwrap() + 1,
            col: 0,
        });
    }
    let mut factors = lower;
    if diag.iter().any(|&d| d != 1.0) {
        factors.push(DenseMatrix::diagonal(
            &diag.iter().map(|d| d.max(0.0)).collect::<Vec<_>>(),
        ));
    }
    factors.extend(upper);
    let mut out = GebFactorization {
        factors,
        residual_error: 0.0,
    };
    let target = a.clone().as_float();
    out.residual_error = if target.frobenius_norm() == 0.0 {
        out.product(n).frobenius_norm()
    } else {
        out.product(n).rel_diff(&target)
    };
    Ok(out)
}

/// One eigenpair of an oscillatory matrix (or a monodromy matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPair {
    pub value: f64,
    /// Unit Euclidean norm, first nonzero entry positive.
    pub vector: Vec<f64>,
    pub sign_count: usize,
}

/// Real spectrum with unit eigenvectors, sorted by decreasing eigenvalue.
/// Imaginary parts up to `imag_tol` are discarded; larger ones are an
/// error.
pub fn real_spectrum(a: &DenseMatrix, imag_tol: f64) -> Result<Vec<(f64, Vec<f64>)>, TpError> {
    let n = a.square_dim()?;
    let na = a.to_nalgebra();
    let eig = na.clone().complex_eigenvalues();
    let mut values = Vec::with_capacity(n);
    for z in eig.iter() {
        if z.im.abs() > imag_tol {
            return Err(TpError::SpectralViolation(format!(
                "eigenvalue {} + {}i is not real",
                z.re, z.im
            )));
        }
        values.push(z.re);
    }
    values.sort_by(|x, y| y.partial_cmp(x).expect("finite eigenvalues"));
    let mut out = Vec::with_capacity(n);
    for &lambda in &values {
        out.push((lambda, null_vector(&na, lambda)));
    }
    Ok(out)
}

fn null_vector(a: &DMatrix<f64>, lambda: f64) -> Vec<f64> {
    let n = a.nrows();
    let shifted = a - DMatrix::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let k = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.partial_cmp(y.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let mut v: Vec<f64> = v_t.row(k).iter().copied().collect();
    normalize_signed(&mut v);
    v
}

/// Unit Euclidean norm with the first clearly nonzero entry positive.
pub fn normalize_signed(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
    if let Some(first) = v.iter().find(|x| x.abs() > EIGVEC_ZERO_TOL) {
        if *first < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
}

/// Checks distinct positive real eigenvalues and sign counts `k - 1`.
pub(crate) fn ordered_sign_structure(
    pairs: Vec<(f64, Vec<f64>)>,
    separation: f64,
) -> Result<Vec<SpectralPair>, String> {
    let mut out = Vec::with_capacity(pairs.len());
    for (k, (value, vector)) in pairs.into_iter().enumerate() {
        if value <= 0.0 {
            return Err(format!("eigenvalue {k} = {value} is not positive"));
        }
        if let Some(prev) = out.last().map(|p: &SpectralPair| p.value) {
            if prev - value <= separation * prev.abs() {
                return Err(format!("eigenvalues {prev} and {value} are not distinct"));
            }
        }
        let pat = sign_pattern(&vector, EIGVEC_ZERO_TOL);
        let (lo, hi) = if vector.len() >= 2 {
            (pattern_s_minus(&pat), pattern_s_plus(&pat))
        } else {
            (0, 0)
        };
        if lo != k || hi != k {
            return Err(format!(
                "eigenvector {} has s- = {lo}, s+ = {hi}, expected {k}",
                k + 1
            ));
        }
        out.push(SpectralPair {
            value,
            vector,
            sign_count: k,
        });
    }
    Ok(out)
}

/// Eigen-decomposition of an oscillatory matrix with its sign structure
/// asserted: `λ1 > ... > λn > 0` and `s⁻(u^k) = s⁺(u^k) = k - 1`.
pub fn oscillatory_spectrum(a: &DenseMatrix) -> Result<Vec<SpectralPair>, TpError> {
    if !classify(a)?.is_oscillatory {
        return Err(TpError::NotOscillatory);
    }
    let radius = a.to_nalgebra().complex_eigenvalues().iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let pairs = real_spectrum(a, 1e-8 * radius)?;
    ordered_sign_structure(pairs, 1e-12).map_err(TpError::SpectralViolation)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SvdpOutcome {
    pub s_minus_in: usize,
    pub s_plus_out: usize,
    pub holds: bool,
}

/// Zero tolerance of `Ax` relative to `|A|_inf |x|_inf`.
fn image_tol(a: &DenseMatrix, x: &[f64]) -> f64 {
    if a.is_integral() && x.iter().all(|v| v.fract() == 0.0) {
        0.0
    } else {
        1e-9 * a.norm_inf() * x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

fn input_tol(x: &[f64]) -> f64 {
    if x.iter().all(|v| v.fract() == 0.0) {
        0.0
    } else {
        relative_tol(x, 1e-9)
    }
}

/// Strong sign-variation diminishing test `s⁺(Ax) <= s⁻(x)`.
pub fn svdp_check(a: &DenseMatrix, x: &[f64]) -> Result<SvdpOutcome, TpError> {
    if a.cols() != x.len() {
        return Err(TpError::DimensionMismatch(format!(
            "matrix has {} columns, vector has {} entries",
            a.cols(),
            x.len()
        )));
    }
    if x.iter().all(|&v| v == 0.0) {
        return Err(TpError::ZeroVector);
    }
    let y = a.mul_vec(x);
    let s_minus_in = pattern_s_minus(&sign_pattern(x, input_tol(x)));
    let s_plus_out = pattern_s_plus(&sign_pattern(&y, image_tol(a, x)));
    Ok(SvdpOutcome {
        s_minus_in,
        s_plus_out,
        holds: s_plus_out <= s_minus_in,
    })
}

/// Weak form `s⁻(Ax) <= s⁻(x)`, valid for every TN matrix.
pub fn weak_svdp_check(a: &DenseMatrix, x: &[f64]) -> Result<SvdpOutcome, TpError> {
    let strong = svdp_check(a, x)?;
    let y = a.mul_vec(x);
    let out = pattern_s_minus(&sign_pattern(&y, image_tol(a, x)));
    Ok(SvdpOutcome {
        s_minus_in: strong.s_minus_in,
        s_plus_out: out,
        holds: out <= strong.s_minus_in,
    })
}

/// Vector on which `s⁺(Ax) <= s⁻(x)` fails.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdpViolation {
    pub x: Vec<f64>,
    pub s_minus_in: usize,
    pub s_plus_out: usize,
}

fn rank(a: &DMatrix<f64>) -> usize {
    let sv = a.clone().svd(false, false).singular_values;
    let top = sv.iter().fold(0.0f64, |m, v| m.max(*v));
    sv.iter().filter(|&&v| v > 1e-12 * top.max(f64::MIN_POSITIVE)).count()
}

/// Unit vector spanning the kernel of a `(k-1) x k` matrix (padded square
/// so the SVD exposes the last right singular vector).
fn kernel_vector(rows: &[Vec<f64>], k: usize) -> Vec<f64> {
    let mut data = Vec::with_capacity(k * k);
    for r in rows {
        data.extend_from_slice(r);
    }
    data.resize(k * k, 0.0);
    let m = DMatrix::from_row_slice(k, k, &data);
    null_vector(&m, 0.0)
}

/// Vectors of `R^cols` whose image under `a` vanishes on `|support| - 1`
/// chosen rows, for every support set and every such row set.
fn zero_forcing_candidates(a: &DenseMatrix, max_support: usize) -> Vec<Vec<f64>> {
    let (n_rows, n_cols) = (a.rows(), a.cols());
    let mut out = Vec::new();
    for k in 1..=max_support.min(n_cols) {
        for support in subsets(n_cols, k) {
            let cols = support.zero_based();
            let zero_row_sets = if k == 1 {
                vec![vec![]]
            } else if k - 1 > n_rows {
                continue;
            } else {
                subsets(n_rows, k - 1).into_iter().map(|t| t.zero_based()).collect()
            };
            for zr in zero_row_sets {
                let block: Vec<Vec<f64>> = zr
                    .iter()
                    .map(|&i| cols.iter().map(|&j| a.get(i, j)).collect())
                    .collect();
                let local = if k == 1 { vec![1.0] } else { kernel_vector(&block, k) };
                let mut x = vec![0.0; n_cols];
                for (&j, v) in cols.iter().zip(local) {
                    x[j] = v;
                }
                out.push(x);
            }
        }
    }
    out
}

fn sign_patterns(n: usize) -> Vec<Vec<i8>> {
    let mut out: Vec<Vec<i8>> = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v| {
                [-1i8, 0, 1].into_iter().map(move |s| {
                    let mut w = v.clone();
                    w.push(s);
                    w
                })
            })
            .collect();
    }
    out.retain(|p| p.iter().any(|&s| s != 0));
    out
}

fn random_with_pattern<R: Rng>(pattern: &[i8], rng: &mut R) -> Vec<f64> {
    pattern
        .iter()
        .map(|&s| s as f64 * rng.gen_range(0.05..1.0))
        .collect()
}

/// Search for a strong-SVDP violation of a square matrix by enumerating
/// sign patterns: zero-forcing vectors for every support and zero-row set,
/// random vectors for every input sign pattern, and (when `a` is
/// nonsingular) preimages of random vectors for every output pattern.
pub fn strong_svdp_search<R: Rng>(
    a: &DenseMatrix,
    samples_per_pattern: usize,
    rng: &mut R,
) -> Result<Option<SvdpViolation>, TpError> {
    let n = a.square_dim()?;
    let check = |x: Vec<f64>| -> Option<SvdpViolation> {
        let out = svdp_check(a, &x).ok()?;
        (!out.holds).then_some(SvdpViolation {
            x,
            s_minus_in: out.s_minus_in,
            s_plus_out: out.s_plus_out,
        })
    };
    for x in zero_forcing_candidates(a, n) {
        if let Some(v) = check(x) {
            return Ok(Some(v));
        }
    }
    let patterns = sign_patterns(n);
    for p in &patterns {
        for _ in 0..samples_per_pattern {
            if let Some(v) = check(random_with_pattern(p, rng)) {
                return Ok(Some(v));
            }
        }
    }
    let na = a.to_nalgebra();
    if rank(&na) == n {
        let lu = na.lu();
        for p in &patterns {
            for _ in 0..samples_per_pattern {
                let y = nalgebra::DVector::from_vec(random_with_pattern(p, rng));
                if let Some(x) = lu.solve(&y) {
                    if let Some(v) = check(x.iter().copied().collect()) {
                        return Ok(Some(v));
                    }
                }
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSetReport {
    /// Order-`m` minors `U(i_1..i_m | 1..m)` in lexicographic row order.
    pub minors: Vec<f64>,
    pub minors_same_sign: bool,
    pub sampled_bound_holds: bool,
    /// Coefficients `c` with `s⁺(Uc) > m - 1`, when one was found.
    pub violating_coefficients: Option<Vec<f64>>,
}

/// Compares the two equivalent conditions on an `n x m` column set:
/// all order-`m` minors nonzero with one sign, and `s⁺(Uc) <= m - 1` for
/// every nonzero `c` (sampled: zero-forcing candidates plus `trials`
/// random coefficient vectors).
pub fn column_set_equivalence<R: Rng>(
    u: &DenseMatrix,
    trials: usize,
    rng: &mut R,
) -> Result<ColumnSetReport, TpError> {
    let (n, m) = (u.rows(), u.cols());
    if m >= n {
        return Err(TpError::DimensionMismatch(format!(
            "need fewer columns than rows, got {n}x{m}"
        )));
    }
    let r = rank(&u.to_nalgebra());
    if r < m {
        return Err(TpError::RankDeficient { rank: r, cols: m });
    }
    let all_cols: Vec<usize> = (0..m).collect();
    let mut minors = Vec::new();
    let mut signs = Vec::new();
    for rows in subsets(n, m) {
        let (s, v) = minor_sign(u, &rows.zero_based(), &all_cols);
        minors.push(v);
        signs.push(s);
    }
    let minors_same_sign = signs.iter().all(|&s| s != 0 && s == signs[0]);

    let bound_fails = |c: &[f64]| {
        let y = u.mul_vec(c);
        pattern_s_plus(&sign_pattern(&y, image_tol(u, c))) > m - 1
    };
    let mut violating = None;
    let structured = zero_forcing_rows(u);
    for c in structured {
        if bound_fails(&c) {
            violating = Some(c);
            break;
        }
    }
    if violating.is_none() {
        for _ in 0..trials {
            let c: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if c.iter().all(|&v| v == 0.0) {
                continue;
            }
            if bound_fails(&c) {
                violating = Some(c);
                break;
            }
        }
    }
    Ok(ColumnSetReport {
        minors,
        minors_same_sign,
        sampled_bound_holds: violating.is_none(),
        violating_coefficients: violating,
    })
}

/// Coefficient vectors making `Uc` vanish on `m - 1` chosen rows.
fn zero_forcing_rows(u: &DenseMatrix) -> Vec<Vec<f64>> {
    let (n, m) = (u.rows(), u.cols());
    if m == 1 {
        return vec![vec![1.0]];
    }
    subsets(n, m - 1)
        .into_iter()
        .map(|rows| {
            let block: Vec<Vec<f64>> = rows
                .zero_based()
                .iter()
                .map(|&i| u.row(i).to_vec())
                .collect();
            kernel_vector(&block, m)
        })
        .collect()
}
