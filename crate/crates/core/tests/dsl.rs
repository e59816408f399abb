use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tpds::expr::{BinOp, EvalContext, Expr, Func};

type Oracle = fn(f64, &[f64], f64) -> f64;

fn table() -> Vec<(&'static str, Oracle)> {
    vec![
        ("1 + sin(t)", |t, _, _| 1.0 + t.sin()),
        ("3/2 - cos(t)", |t, _, _| 1.5 - t.cos()),
        ("3/2 + cos(t)", |t, _, _| 1.5 + t.cos()),
        ("t", |t, _, _| t),
        ("-t^2 + 2*t - 1", |t, _, _| -t * t + 2.0 * t - 1.0),
        ("2^3^t", |t, _, _| 2f64.powf(3f64.powf(t))),
        ("exp(-t) * cosh(t)", |t, _, _| (-t).exp() * t.cosh()),
        ("sinh(t) / (1 + t^2)", |t, _, _| t.sinh() / (1.0 + t * t)),
        ("tanh(x1) + tanh(x3)", |_, x, _| x[0].tanh() + x[2].tanh()),
        ("-x1 + tanh(x2) + sin(t)", |t, x, _| -x[0] + x[1].tanh() + t.sin()),
        ("x1 + x4 - 2*x1^3 + x1*u", |_, x, u| x[0] + x[3] - 2.0 * x[0].powi(3) + x[0] * u),
        ("x3 + x4 - 2*x4^3 - x4*u", |_, x, u| x[2] + x[3] - 2.0 * x[3].powi(3) - x[3] * u),
        ("1 - tanh(x2)^2", |_, x, _| 1.0 - x[1].tanh().powi(2)),
        ("sqrt(1 + x1^2)", |_, x, _| (1.0 + x[0] * x[0]).sqrt()),
        ("log(2 + cos(t))", |t, _, _| (2.0 + t.cos()).ln()),
        ("abs(x2 - x1) * u", |_, x, u| (x[1] - x[0]).abs() * u),
        ("tan(t / 4)", |t, _, _| (t / 4.0).tan()),
        ("cos(2*t) - (2*cos(t)^2 - 1)", |t, _, _| (2.0 * t).cos() - (2.0 * t.cos().powi(2) - 1.0)),
        ("-(x1 - x2) / (2 + x3^2)", |_, x, _| -(x[0] - x[1]) / (2.0 + x[2] * x[2])),
        ("0.5*t*exp(sin(x4))", |t, x, _| 0.5 * t * x[3].sin().exp()),
    ]
}

#[test]
fn evaluation_matches_closures() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let table = table();
    assert_eq!(table.len(), 20);
    for (src, oracle) in table {
        let e = Expr::parse(src).unwrap();
        for _ in 0..100 {
            let t = rng.gen_range(-3.0..3.0);
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let u = rng.gen_range(-1.0..1.0);
            let got = e.eval(&EvalContext::state(t, &x, Some(u))).unwrap();
            let want = oracle(t, &x, u);
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{src} at t = {t}: {got} vs {want}");
        }
    }
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0.0..100.0f64).prop_map(Expr::num),
        Just(Expr::t()),
        Just(Expr::Var(tpds::expr::Var::U)),
        (1usize..5).prop_map(|i| Expr::Var(tpds::expr::Var::X(i))),
    ]
}

fn tree() -> impl Strategy<Value = Expr> {
    let ops = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow];
    let funcs = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
    ];
    leaf().prop_recursive(5, 48, 2, move |inner| {
        prop_oneof![
            inner.clone().prop_map(Expr::neg),
            (prop::sample::select(funcs.to_vec()), inner.clone()).prop_map(|(f, a)| Expr::call(f, a)),
            (prop::sample::select(ops.to_vec()), inner.clone(), inner).prop_map(|(op, a, b)| Expr::bin(op, a, b)),
        ]
    })
}

proptest! {
    #[test]
    fn printed_form_reparses_to_the_same_tree(e in tree()) {
        let printed = e.to_string();
        let back = Expr::parse(&printed).unwrap();
        prop_assert_eq!(&back, &e, "{}", printed);
        prop_assert_eq!(back.to_string(), printed);
    }
}
