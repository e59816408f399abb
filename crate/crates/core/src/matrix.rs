//! Dense real matrices, lexicographic index tuples and the plain-text
//! matrix file format shared with the command line tool.

use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("invalid index tuple: {0}")]
    InvalidIndex(String),
    #[error("line {line}, column {column}: {message}")]
    Format {
        line: usize,
        column: usize,
        message: String,
    },
}

/// Row-major real matrix.
///
/// `integral` records that every entry is an exact integer coming from an
/// integer source (text file or integer constructor). Minors of integral
/// matrices are computed exactly.
#[derive(Clone)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    integral: bool,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, MatrixError> {
        if rows == 0 || cols == 0 {
            return Err(MatrixError::DimensionMismatch(
                "matrix needs at least one row and one column".into(),
            ));
        }
        if data.len() != rows * cols {
            return Err(MatrixError::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            data,
            integral: false,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let r = rows.len();
        let c = rows.first().map(|x| x.as_ref().len()).unwrap_or(0);
        assert!(r > 0 && c > 0, "empty matrix");
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.as_ref().len(), c, "ragged rows");
            data.extend_from_slice(row.as_ref());
        }
        Self {
            rows: r,
            cols: c,
            data,
            integral: false,
        }
    }

    /// Matrix with exact integer entries.
    pub fn from_int_rows<R: AsRef<[i64]>>(rows: &[R]) -> Self {
        let float_rows: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&v| v as f64).collect())
            .collect();
        let mut m = Self::from_rows(&float_rows);
        m.integral = true;
        m
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
            integral: true,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        m.integral = false;
        for (i, &v) in d.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn column(v: &[f64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
            integral: false,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Size of a square matrix, or `NotSquare`.
    pub fn square_dim(&self) -> Result<usize, MatrixError> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(MatrixError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    /// True when every entry is an exact integer from an integer source.
    pub fn is_integral(&self) -> bool {
        self.integral && self.data.iter().all(|v| v.fract() == 0.0 && v.abs() < 9.0e15)
    }

    /// Mark the matrix as exact-integer if all entries are integers.
    pub fn with_integral_flag(mut self) -> Self {
        self.integral = self.data.iter().all(|v| v.fract() == 0.0 && v.abs() < 9.0e15);
        self
    }

    pub fn as_float(mut self) -> Self {
        self.integral = false;
        self
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Zero-based access.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        if v.fract() != 0.0 {
            self.integral = false;
        }
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col_vec(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
            integral: self.integral,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = vec![0.0; self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Self {
            rows: self.rows,
            cols: other.cols,
            data: out,
            integral: self.integral && other.integral,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "vector length differs from column count");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
            integral: self.integral && other.integral,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
            integral: self.integral && other.integral,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
            integral: self.integral && s.fract() == 0.0,
        }
    }

    /// `self += s * other`, in place.
    pub fn axpy(&mut self, s: f64, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        self.integral = false;
    }

    pub fn powi(&self, k: u32) -> Self {
        let n = self.rows;
        let mut acc = Self::identity(n);
        acc.integral = self.integral;
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Induced infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Relative Frobenius distance `|self - other| / max(|other|, tiny)`.
    pub fn rel_diff(&self, other: &Self) -> f64 {
        let denom = other.frobenius_norm().max(f64::MIN_POSITIVE);
        self.sub(other).frobenius_norm() / denom
    }

    /// Submatrix with zero-based row and column selections.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            for &j in cols {
                data.push(self.get(i, j));
            }
        }
        Self {
            rows: rows.len(),
            cols: cols.len(),
            data,
            integral: self.integral,
        }
    }

    pub fn is_metzler(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self.get(i, j) >= 0.0))
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
            integral: false,
        }
    }

    /// Determinant by partial-pivoting LU. Square matrices only.
    pub fn det(&self) -> f64 {
        assert!(self.is_square(), "determinant of a non-square matrix");
        lu_det(self.rows, self.data.clone())
    }

    /// Parse the plain-text matrix format.
    ///
    /// ```text
    /// # comment lines start with '#'
    /// 3 3
    /// 2 1 0
    /// 1 2 1
    /// 0 1 2
    /// ```
    ///
    /// The first non-comment line holds `rows cols`; each following line is
    /// one row. Tokens without a decimal point or exponent are integers; a
    /// matrix whose tokens are all integers is stored as exact-integer.
    pub fn parse_text(src: &str) -> Result<Self, MatrixError> {
        let mut header: Option<(usize, usize)> = None;
        let mut data = Vec::new();
        let mut all_int = true;
        let mut rows_seen = 0usize;
        for (lineno, raw) in src.lines().enumerate() {
            let line_no = lineno + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let tokens = tokenize_line(content);
            match header {
                None => {
                    if tokens.len() != 2 {
                        return Err(MatrixError::Format {
                            line: line_no,
                            column: tokens.first().map(|t| t.0).unwrap_or(1),
                            message: "expected header `rows cols`".into(),
                        });
                    }
                    let parse_dim = |(col, tok): &(usize, &str)| {
                        tok.parse::<usize>()
                            .ok()
                            .filter(|&d| d > 0)
                            .ok_or_else(|| MatrixError::Format {
                                line: line_no,
                                column: *col,
                                message: format!("invalid dimension `{tok}`"),
                            })
                    };
                    header = Some((parse_dim(&tokens[0])?, parse_dim(&tokens[1])?));
                }
                Some((r, c)) => {
                    if rows_seen == r {
                        return Err(MatrixError::Format {
                            line: line_no,
                            column: tokens[0].0,
                            message: format!("more than the declared {r} rows"),
                        });
                    }
                    if tokens.len() != c {
                        return Err(MatrixError::Format {
                            line: line_no,
                            column: tokens.get(c).map(|t| t.0).unwrap_or(content.len() + 1),
                            message: format!("expected {c} entries, found {}", tokens.len()),
                        });
                    }
                    for (col, tok) in tokens {
                        if let Ok(v) = tok.parse::<i64>() {
                            data.push(v as f64);
                        } else if let Ok(v) = tok.parse::<f64>() {
                            if !v.is_finite() {
                                return Err(MatrixError::Format {
                                    line: line_no,
                                    column: col,
                                    message: format!("non-finite entry `{tok}`"),
                                });
                            }
                            all_int = false;
                            data.push(v);
                        } else {
                            return Err(MatrixError::Format {
                                line: line_no,
                                column: col,
                                message: format!("invalid number `{tok}`"),
                            });
                        }
                    }
                    rows_seen += 1;
                }
            }
        }
        let (r, c) = header.ok_or(MatrixError::Format {
            line: 1,
            column: 1,
            message: "empty matrix file".into(),
        })?;
        if rows_seen != r {
            return Err(MatrixError::Format {
                line: src.lines().count().max(1),
                column: 1,
                message: format!("expected {r} rows, found {rows_seen}"),
            });
        }
        let mut m = Self::new(r, c, data)?;
        m.integral = all_int;
        Ok(m)
    }

    /// Serialize in the plain-text format. Exact-integer matrices are
    /// written as integers; float entries always carry a decimal point or
    /// exponent so they read back as floats.
    pub fn to_text(&self) -> String {
        let exact = self.is_integral();
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            let row: Vec<String> = self
                .row(i)
                .iter()
                .map(|&v| if exact { format!("{}", v as i64) } else { format_float(v) })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Shortest round-trip representation that always reads back as a float.
pub fn format_float(v: f64) -> String {
    let s = format!("{v}");
    if s.contains(['.', 'e', 'E', 'N', 'i']) {
        s
    } else {
        format!("{s}.0")
    }
}

fn tokenize_line(content: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in content.char_indices() {
        let sep = ch.is_whitespace() || ch == ',';
        match (sep, start) {
            (true, Some(s)) => {
                out.push((s + 1, &content[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &content[s..]));
    }
    out
}

fn lu_det(n: usize, mut a: Vec<f64>) -> f64 {
    let mut det = 1.0;
    for k in 0..n {
        let mut piv = k;
        let mut best = a[k * n + k].abs();
        for i in k + 1..n {
            let v = a[i * n + k].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            det = -det;
        }
        let p = a[k * n + k];
        det *= p;
        for i in k + 1..n {
            let f = a[i * n + k] / p;
            if f != 0.0 {
                for j in k + 1..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
    }
    det
}

// The integral flag is a representation detail, not part of the value.
impl PartialEq for DenseMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.data == other.data
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Strictly increasing tuple of 1-based indices addressing rows or columns
/// of a minor `A(alpha|beta)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexTuple(Vec<usize>);

impl IndexTuple {
    pub fn new(indices: Vec<usize>) -> Result<Self, MatrixError> {
        if indices.is_empty() {
            return Err(MatrixError::InvalidIndex("empty index tuple".into()));
        }
        if indices[0] == 0 {
            return Err(MatrixError::InvalidIndex("indices are 1-based".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MatrixError::InvalidIndex(format!(
                "{indices:?} is not strictly increasing"
            )));
        }
        Ok(Self(indices))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn zero_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i - 1).collect()
    }

    pub fn max(&self) -> usize {
        *self.0.last().expect("non-empty tuple")
    }
}

impl fmt::Display for IndexTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// All `p`-subsets of `{1..n}` in lexicographic order.
pub fn subsets(n: usize, p: usize) -> Vec<IndexTuple> {
    let mut out = Vec::new();
    if p == 0 || p > n {
        return out;
    }
    let mut cur: Vec<usize> = (1..=p).collect();
    loop {
        out.push(IndexTuple(cur.clone()));
        // advance to the next combination
        let mut k = p;
        while k > 0 && cur[k - 1] == n - p + k {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        cur[k - 1] += 1;
        for m in k..p {
            cur[m] = cur[m - 1] + 1;
        }
    }
    out
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant (nalgebra's implementation).
pub fn expm(a: &DenseMatrix) -> DenseMatrix {
    assert!(a.is_square());
    DenseMatrix::from_nalgebra(&a.to_nalgebra().exp())
}

/// Exponential of a Metzler matrix computed with only nonnegative
/// arithmetic: `exp(A) = e^{-c} exp(A + cI)` with `A + cI >= 0`, a Taylor
/// series on the scaled matrix and repeated squaring. Entries keep
/// componentwise relative accuracy and structural zeros stay exactly zero.
pub fn expm_metzler(a: &DenseMatrix) -> DenseMatrix {
    let n = a.square_dim().expect("square matrix");
    assert!(a.is_metzler(), "expm_metzler needs a Metzler matrix");
    let shift = (0..n).map(|i| -a.get(i, i)).fold(0.0, f64::max);
    let mut b = a.clone().as_float();
    for i in 0..n {
        b.set(i, i, a.get(i, i) + shift);
    }
    let norm = b.norm_inf();
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let bs = b.scale(scale);
    let mut term = DenseMatrix::identity(n).as_float();
    let mut sum = term.clone();
    for k in 1..=30 {
        term = term.mul(&bs).scale(1.0 / k as f64);
        sum = sum.add(&term);
        if term.max_abs() <= f64::EPSILON * 1e-3 * sum.max_abs() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.mul(&sum);
    }
    sum.scale((-shift).exp())
}
