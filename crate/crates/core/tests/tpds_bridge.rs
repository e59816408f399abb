use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tpds::compound::{add_compound, irreducible_compound_profile};
use tpds::matrix::{expm, DenseMatrix};
use tpds::tpds::{classify_constant, in_m, in_m_plus, verify_constant, Verdict};

/// Random constant matrix drawn to land in each of the three classes.
fn random_constant(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let kind = rng.gen_range(0..4);
    let mut a = DenseMatrix::zeros(n, n).as_float();
    for i in 0..n {
        for j in 0..n {
            let v = match (i.abs_diff(j), kind) {
                (0, _) => rng.gen_range(-2.0..2.0),
                (1, 0) => rng.gen_range(0.1..2.0),
                (1, 1) => if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.1..2.0) },
                (1, _) => rng.gen_range(-1.0..2.0),
                (_, 3) => if rng.gen_bool(0.2) { rng.gen_range(-1.0..1.0) } else { 0.0 },
                _ => 0.0,
            };
            a.set(i, j, v);
        }
    }
    a
}

#[test]
fn constant_verdict_matches_sampled_transitions() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut seen = [0usize; 3];
    for _ in 0..200 {
        let n = rng.gen_range(2..=5);
        let a = random_constant(n, &mut rng);
        let check = verify_constant(&a, 1.0);
        assert!(check.agrees, "{a:?}: {:?} vs {:?}", check.class.verdict, check.sampled_verdict);
        seen[check.class.verdict as usize] += 1;
        for w in &check.negative_minors {
            assert!(w.value < 0.0);
            assert!((w.value / w.predicted - 1.0).abs() < 0.05, "{w:?}");
        }
    }
    assert!(seen.iter().all(|&c| c > 10), "{seen:?}");
}

#[test]
fn metzler_bridge() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let n = rng.gen_range(2..=5);
        let mut a = DenseMatrix::zeros(n, n).as_float();
        for i in 0..n {
            for j in 0..n {
                a.set(i, j, if i == j { rng.gen_range(-3.0..1.0) } else { rng.gen_range(0.0..1.0) });
            }
        }
        for t in [0.01, 0.1, 1.0] {
            assert!(expm(&a.scale(t)).data().iter().all(|&v| v >= 0.0));
        }
        let (i, j) = (0, n - 1);
        a.set(i, j, -0.5);
        let phi = expm(&a.scale(1e-3));
        assert!(phi.get(i, j) < 0.0);
    }
}

#[test]
fn compound_bridge() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let n = rng.gen_range(2..=6);
        let a = random_constant(n, &mut rng);
        if in_m(&a) {
            for p in 1..=n {
                assert!(add_compound(&a, p).unwrap().matrix.is_metzler());
            }
        }
        if in_m_plus(&a) {
            assert!(irreducible_compound_profile(&a).unwrap().iter().all(|(_, irr)| *irr));
        }
    }
}

#[test]
fn verdicts_for_fixed_examples() {
    let tp = DenseMatrix::from_rows(&[[-1.0, 2.0, 0.0], [1.0, 0.0, 3.0], [0.0, 0.5, -4.0]]);
    assert_eq!(classify_constant(&tp).verdict, Verdict::Tpds);
    let tn = DenseMatrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]);
    assert_eq!(classify_constant(&tn).verdict, Verdict::TndsOnly);
    let neither = DenseMatrix::from_rows(&[[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]);
    let c = verify_constant(&neither, 1.0);
    assert_eq!(c.class.verdict, Verdict::Neither);
    assert_eq!(c.negative_minors.len(), 1);
}
