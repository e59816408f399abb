use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tpds::compound::{add_compound, mult_compound};
use tpds::generators::random_signed;
use tpds::matrix::{expm, subsets, DenseMatrix};

/// Cofactor expansion, kept independent of the library's determinant.
fn cofactor_det(m: &[Vec<f64>]) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    (0..m.len())
        .map(|j| {
            let sub: Vec<Vec<f64>> = m[1..]
                .iter()
                .map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| *v).collect())
                .collect();
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            s * m[0][j] * cofactor_det(&sub)
        })
        .sum()
}

fn sub(a: &DenseMatrix, rows: &[usize], cols: &[usize]) -> Vec<Vec<f64>> {
    rows.iter().map(|&r| cols.iter().map(|&c| a.get(r, c)).collect()).collect()
}

/// `d/dh det((I + hA)(α|β))` at 0: sum over rows of the determinant with
/// that row of `I(α|β)` replaced by the row of `A(α|β)`.
fn additive_oracle(a: &DenseMatrix, p: usize) -> DenseMatrix {
    let n = a.rows();
    let idx = subsets(n, p);
    let id = DenseMatrix::identity(n);
    let mut out = DenseMatrix::zeros(idx.len(), idx.len()).as_float();
    for (r, al) in idx.iter().enumerate() {
        for (c, be) in idx.iter().enumerate() {
            let (al, be) = (al.zero_based(), be.zero_based());
            let base = sub(&id, &al, &be);
            let rows_a = sub(a, &al, &be);
            let v: f64 = (0..p)
                .map(|k| {
                    let mut m = base.clone();
                    m[k] = rows_a[k].clone();
                    cofactor_det(&m)
                })
                .sum();
            out.set(r, c, v);
        }
    }
    out
}

fn int_matrix(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let rows: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-9..=9)).collect()).collect();
    DenseMatrix::from_int_rows(&rows)
}

#[test]
fn multiplicative_compound_matches_cofactor_minors() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_signed(4, 4, 0.1, 3.0, &mut rng);
    for p in 1..=4 {
        let c = mult_compound(&a, p).unwrap();
        let idx = subsets(4, p);
        for (r, al) in idx.iter().enumerate() {
            for (k, be) in idx.iter().enumerate() {
                let want = cofactor_det(&sub(&a, &al.zero_based(), &be.zero_based()));
                assert!((c.matrix.get(r, k) - want).abs() <= 1e-12 * want.abs().max(1.0));
            }
        }
    }
}

#[test]
fn additive_compound_matches_derivative_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 2..=5 {
        let a = random_signed(n, n, 0.1, 3.0, &mut rng);
        for p in 1..=n {
            let got = add_compound(&a, p).unwrap().matrix;
            assert!(got.sub(&additive_oracle(&a, p)).max_abs() < 1e-12, "n = {n}, p = {p}");
        }
    }
}

#[test]
fn four_by_four_displays() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_signed(4, 4, 0.1, 3.0, &mut rng);
    let e = |i: usize, j: usize| a.get(i - 1, j - 1);
    let two = DenseMatrix::from_rows(&[
        [e(1, 1) + e(2, 2), e(2, 3), e(2, 4), -e(1, 3), -e(1, 4), 0.0],
        [e(3, 2), e(1, 1) + e(3, 3), e(3, 4), e(1, 2), 0.0, -e(1, 4)],
        [e(4, 2), e(4, 3), e(1, 1) + e(4, 4), 0.0, e(1, 2), e(1, 3)],
        [-e(3, 1), e(2, 1), 0.0, e(2, 2) + e(3, 3), e(3, 4), -e(2, 4)],
        [-e(4, 1), 0.0, e(2, 1), e(4, 3), e(2, 2) + e(4, 4), e(2, 3)],
        [0.0, -e(4, 1), e(3, 1), -e(4, 2), e(3, 2), e(3, 3) + e(4, 4)],
    ]);
    let three = DenseMatrix::from_rows(&[
        [e(1, 1) + e(2, 2) + e(3, 3), e(3, 4), -e(2, 4), e(1, 4)],
        [e(4, 3), e(1, 1) + e(2, 2) + e(4, 4), e(2, 3), -e(1, 3)],
        [-e(4, 2), e(3, 2), e(1, 1) + e(3, 3) + e(4, 4), e(1, 2)],
        [e(4, 1), -e(3, 1), e(2, 1), e(2, 2) + e(3, 3) + e(4, 4)],
    ]);
    assert_eq!(add_compound(&a, 2).unwrap().matrix, two);
    assert_eq!(add_compound(&a, 3).unwrap().matrix, three);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cauchy_binet(seed in any::<u64>(), p in 2usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_signed(5, 5, 0.1, 2.0, &mut rng);
        let b = random_signed(5, 5, 0.1, 2.0, &mut rng);
        let lhs = mult_compound(&a.mul(&b), p).unwrap().matrix;
        let rhs = mult_compound(&a, p).unwrap().matrix.mul(&mult_compound(&b, p).unwrap().matrix);
        prop_assert!(lhs.rel_diff(&rhs) <= 1e-9);
        let (ai, bi) = (int_matrix(5, &mut rng), int_matrix(5, &mut rng));
        let lhs = mult_compound(&ai.mul(&bi), p).unwrap().matrix;
        let rhs = mult_compound(&ai, p).unwrap().matrix.mul(&mult_compound(&bi, p).unwrap().matrix);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn additivity(seed in any::<u64>(), p in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (int_matrix(5, &mut rng), int_matrix(5, &mut rng));
        let lhs = add_compound(&a.add(&b), p).unwrap().matrix;
        let rhs = add_compound(&a, p).unwrap().matrix.add(&add_compound(&b, p).unwrap().matrix);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn exponential_link(seed in any::<u64>(), n in 2usize..=5, p in 1usize..=5) {
        prop_assume!(p <= n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_signed(n, n, 0.0, 1.0, &mut rng);
        let lhs = expm(&add_compound(&a, p).unwrap().matrix);
        let rhs = mult_compound(&expm(&a), p).unwrap().matrix;
        prop_assert!(lhs.rel_diff(&rhs) <= 1e-6);
    }
}
