//! Random TN / TP matrices built as products of elementary bidiagonal
//! factors in Neville order, so the class holds by construction, and
//! random TPDS systems.

use rand::Rng;

use crate::matrix::DenseMatrix;
use crate::system::{Entry, Segment, TimeVaryingSystem};

/// Number of sub-diagonal (equivalently super-diagonal) parameters in a
/// full bidiagonal factorization of an `n x n` matrix.
pub fn eb_parameter_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// `[L_n..L_2][L_n..L_3]..[L_n] · D · [U_n][U_{n-1} U_n]..[U_2..U_n]`.
pub fn eb_product(n: usize, lower: &[f64], diag: &[f64], upper: &[f64]) -> DenseMatrix {
    assert_eq!(lower.len(), eb_parameter_count(n));
    assert_eq!(upper.len(), eb_parameter_count(n));
    assert_eq!(diag.len(), n);
    let mut out = DenseMatrix::identity(n).as_float();
    let mut l = lower.iter();
    for k in 0..n.saturating_sub(1) {
        for i in (k + 1..n).rev() {
            let p = *l.next().unwrap();
            // right-multiplying by I + p E_{i,i-1} adds p * column i to column i-1
            for r in 0..n {
                let v = out.get(r, i - 1) + p * out.get(r, i);
                out.set(r, i - 1, v);
            }
        }
    }
    for r in 0..n {
        for c in 0..n {
            out.set(r, c, out.get(r, c) * diag[c]);
        }
    }
    let mut u = upper.iter();
    for k in (0..n.saturating_sub(1)).rev() {
        for j in k + 1..n {
            let p = *u.next().unwrap();
            // right-multiplying by I + p E_{j-1,j} adds p * column j-1 to column j
            for r in 0..n {
                let v = out.get(r, j) + p * out.get(r, j - 1);
                out.set(r, j, v);
            }
        }
    }
    out
}

/// TP: all parameters positive.
pub fn random_tp<R: Rng>(n: usize, rng: &mut R) -> DenseMatrix {
    let m = eb_parameter_count(n);
    let lower: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..1.5)).collect();
    let upper: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..1.5)).collect();
    let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    eb_product(n, &lower, &diag, &upper)
}

/// TN: nonnegative parameters with roughly a third exactly zero, positive
/// diagonal.
pub fn random_tn<R: Rng>(n: usize, rng: &mut R) -> DenseMatrix {
    let m = eb_parameter_count(n);
    let mut param = || {
        if rng.gen_bool(0.35) {
            0.0
        } else {
            rng.gen_range(0.2..1.5)
        }
    };
    let lower: Vec<f64> = (0..m).map(|_| param()).collect();
    let upper: Vec<f64> = (0..m).map(|_| param()).collect();
    let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    eb_product(n, &lower, &diag, &upper)
}

/// Tridiagonal, diagonally dominant in the TN sense, with positive
/// off-diagonals and strict dominance: oscillatory.
pub fn random_oscillatory_tridiagonal<R: Rng>(n: usize, rng: &mut R) -> DenseMatrix {
    let mut a = DenseMatrix::zeros(n, n).as_float();
    for i in 0..n.saturating_sub(1) {
        a.set(i, i + 1, rng.gen_range(0.2..1.5));
        a.set(i + 1, i, rng.gen_range(0.2..1.5));
    }
    for i in 0..n {
        let b = if i + 1 < n { a.get(i, i + 1) } else { 0.0 };
        let c = if i > 0 { a.get(i, i - 1) } else { 0.0 };
        a.set(i, i, b + c + rng.gen_range(0.1..1.0));
    }
    a
}

/// Entries uniform in `±[lo, hi]` with random signs.
pub fn random_signed<R: Rng>(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut R) -> DenseMatrix {
    let data = (0..rows * cols)
        .map(|_| {
            let v = rng.gen_range(lo..hi);
            if rng.gen_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect();
    DenseMatrix::new(rows, cols, data).expect("sizes match")
}

/// Random smooth tridiagonal `A(t)` on `[0, period]`, periodic with that
/// period. Off-diagonal entries are `c + d sin(2πkt/T + φ)` with
/// `c >= |d| + 0.1`, so they stay at least 0.1; diagonal entries are
/// arbitrary trigonometric polynomials.
pub fn random_tpds_system<R: Rng>(n: usize, period: f64, rng: &mut R) -> TimeVaryingSystem {
    let w = 2.0 * std::f64::consts::PI / period;
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let k = rng.gen_range(1..=3) as f64;
            let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let entry = match i.abs_diff(j) {
                0 => {
                    let (m, d) = (rng.gen_range(-2.0..1.0), rng.gen_range(-1.0..1.0));
                    format!("{m} + {d}*cos({}*t + {phase})", k * w)
                }
                1 => {
                    let d: f64 = rng.gen_range(-1.0..1.0);
                    let c = d.abs() + rng.gen_range(0.1..1.0);
                    format!("{c} + {d}*sin({}*t + {phase})", k * w)
                }
                _ => "0".to_string(),
            };
            entries.push(Entry::parse(&entry).expect("generated expression parses"));
        }
    }
    let seg = Segment {
        start: 0.0,
        end: period,
        entries,
    };
    TimeVaryingSystem::new(n, (0.0, period), vec![seg], Some(period)).expect("generated system is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::total_positivity::classify;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn product_order_matches_explicit_factors() {
        let n = 3;
        let lower = [0.5, 0.7, 0.3];
        let upper = [0.2, 0.4, 0.9];
        let diag = [1.0, 2.0, 3.0];
        let eb = |i: usize, j: usize, p: f64| {
            let mut m = DenseMatrix::identity(n).as_float();
            m.set(i, j, p);
            m
        };
        let expected = eb(2, 1, 0.5)
            .mul(&eb(1, 0, 0.7))
            .mul(&eb(2, 1, 0.3))
            .mul(&DenseMatrix::diagonal(&diag))
            .mul(&eb(1, 2, 0.2))
            .mul(&eb(0, 1, 0.4))
            .mul(&eb(1, 2, 0.9));
        let got = eb_product(n, &lower, &diag, &upper);
        assert!(got.rel_diff(&expected) < 1e-15);
    }

    #[test]
    fn generated_classes_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=6 {
            for _ in 0..10 {
                assert!(classify(&random_tp(n, &mut rng)).unwrap().is_tp);
                assert!(classify(&random_tn(n, &mut rng)).unwrap().is_tn);
                assert!(classify(&random_oscillatory_tridiagonal(n, &mut rng)).unwrap().is_oscillatory);
            }
        }
    }
}
