use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn tpds(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tpds"))
        .args(args)
        .env_remove("TPDS_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

/// Rows of a CSV body as floats, header dropped.
fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn parse_matrix(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn check_oscillatory_matrix() {
    let d = TempDir::new().unwrap();
    let f = write(&d, "a.txt", "3 3\n5 4 1\n4 6 4\n1 4 5\n");
    let o = tpds(&["check", &f]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.starts_with("TN yes, TP yes, SSR yes, oscillatory yes\n"), "{out}");
    assert!(out.contains("M no, M+ no"));
}

#[test]
fn check_identity() {
    let d = TempDir::new().unwrap();
    let f = write(&d, "i.txt", "# identity\n3 3\n1 0 0\n0 1 0\n0 0 1\n");
    let out = stdout(&tpds(&["check", &f]));
    assert!(out.starts_with("TN yes, TP no, SSR no, oscillatory no\n"), "{out}");
    assert!(out.contains("M yes, M+ no"));
    assert!(out.contains("first non-positive minor: A({1}|{2}) = 0"));
}

#[test]
fn check_ssr_but_not_tn() {
    let d = TempDir::new().unwrap();
    let f = write(&d, "b.txt", "2 2\n1 2\n3 1\n");
    let o = tpds(&["check", &f]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.starts_with("TN no, TP no, SSR yes, oscillatory no\n"), "{out}");
    // det = 1 - 6
    assert!(out.contains("first negative minor: A({1,2}|{1,2}) = -5"));
}

#[test]
fn malformed_matrix_reports_position() {
    let d = TempDir::new().unwrap();
    let f = write(&d, "c.txt", "2 2\n1 2\n3 x\n");
    let o = tpds(&["check", &f]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 3, column 3"), "{err}");
}

#[test]
fn non_square_check_is_an_analysis_failure() {
    let d = TempDir::new().unwrap();
    let f = write(&d, "r.txt", "2 3\n1 2 3\n4 5 6\n");
    assert_eq!(code(&tpds(&["check", &f])), 3);
}

#[test]
fn compounds_match_hand_expansion() {
    let d = TempDir::new().unwrap();
    let rows = [[5.0, 4.0, 1.0], [4.0, 6.0, 4.0], [1.0, 4.0, 5.0]];
    let f = write(&d, "a.txt", "3 3\n5 4 1\n4 6 4\n1 4 5\n");
    let pairs = [(0, 1), (0, 2), (1, 2)];

    let o = tpds(&["compound", &f, "2", "--multiplicative"]);
    assert_eq!(code(&o), 0);
    let m = parse_matrix(&stdout(&o));
    for (r, &(i, j)) in pairs.iter().enumerate() {
        for (c, &(k, l)) in pairs.iter().enumerate() {
            let minor = rows[i][k] * rows[j][l] - rows[i][l] * rows[j][k];
            assert_eq!(m[r][c], minor);
        }
    }

    // Additive compound of a 3x3 matrix, entry by entry.
    let a = parse_matrix(&stdout(&tpds(&["compound", &f, "2", "--additive"])));
    let want = [[11.0, 4.0, -1.0], [4.0, 10.0, 4.0], [-1.0, 4.0, 11.0]];
    for r in 0..3 {
        assert_eq!(a[r], want[r]);
    }
}

#[test]
fn compound_order_out_of_range() {
    let d = TempDir::new().unwrap();
    let f = write(&d, "a.txt", "2 2\n1 0\n0 1\n");
    assert_eq!(code(&tpds(&["compound", &f, "3"])), 3);
}

#[test]
fn switched_simulation_sign_counts() {
    let d = TempDir::new().unwrap();
    let out = d.path().join("sw.csv");
    let o = tpds(&["simulate", "switched", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,z1,z2,z3,z4,s_minus,s_plus,in_V");
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 1001);
    assert_eq!(rows[0][5], 3.0);
    let mut last = 3.0;
    for r in &rows {
        assert!(r[5] <= last);
        last = r[5];
    }
    assert!(last < 3.0);
}

#[test]
fn zero_system_keeps_initial_state() {
    let o = tpds(&["simulate", "zero_rhs", "--samples", "5"]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 5);
    for r in rows {
        assert_eq!(&r[1..4], &[1.0, -2.0, 3.0]);
    }
}

#[test]
fn z0_override_changes_initial_row() {
    let o = tpds(&["simulate", "zero_rhs", "--samples", "2", "--z0", "-1,0.5,2"]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(&rows[0][1..4], &[-1.0, 0.5, 2.0]);
}

#[test]
fn schwarz_trajectory_has_one_sign_change() {
    let o = tpds(&["simulate", "schwarz3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 629);
    for r in rows {
        let t = r[0];
        assert!((r[1] - (2.0 + t.cos())).abs() < 1e-8);
        assert_eq!((r[4], r[5], r[6]), (1.0, 1.0, 1.0));
    }
}

#[test]
fn floquet_multipliers_and_vectors() {
    let o = tpds(&["floquet", "sinusoidal2"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[1].ends_with("sign changes 0"));
    assert!(lines[2].ends_with("sign changes 1"));
    let rows = csv_rows(&lines[3..].iter().take_while(|l| !l.starts_with("mode")).cloned().collect::<Vec<_>>().join("\n"));
    // Multipliers exp(±∫(1 + sin t)) over one period.
    assert!((rows[0][1] / (2.0 * PI).exp() - 1.0).abs() < 1e-8);
    assert!((rows[1][1] / (-2.0 * PI).exp() - 1.0).abs() < 1e-6);
    let s = 0.5f64.sqrt();
    assert!((rows[0][2] - s).abs() < 1e-8 && (rows[0][3] - s).abs() < 1e-8);
    assert!(out.contains("mode run: sigma(z(0)) = 1, band [0, 1], terminal sigma 0"));
}

#[test]
fn takac_settles_on_period_two() {
    let o = tpds(&["entrain", "takac"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("detected period 2 "));
}

#[test]
fn demo_entrains_with_period_one() {
    let o = tpds(&["entrain", "entrain_demo"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("detected period 1 "));
    let o = tpds(&["entrain", "entrain_demo", "--x0", "-2,2.5,-1"]);
    assert!(stdout(&o).starts_with("detected period 1 "));
}

#[test]
fn entrain_without_convergence_fails() {
    assert_eq!(code(&tpds(&["entrain", "takac", "--max-iters", "3"])), 3);
}

#[test]
fn reproduce_is_idempotent() {
    let d = TempDir::new().unwrap();
    for fig in ["sigma-switched", "floquet-sinusoidal", "takac", "spectrum-tp3"] {
        let dir = d.path().to_str().unwrap();
        assert_eq!(code(&tpds(&["reproduce", fig, "--out-dir", dir])), 0, "{fig}");
        let read = |ext: &str| fs::read(d.path().join(format!("{fig}.{ext}"))).unwrap();
        let (csv, dat) = (read("csv"), read("dat"));
        assert!(!csv.is_empty() && !dat.is_empty());
        assert_eq!(code(&tpds(&["reproduce", fig, "--out-dir", dir])), 0);
        assert_eq!(csv, read("csv"), "{fig}");
        assert_eq!(dat, read("dat"), "{fig}");
    }
    let spectrum = fs::read_to_string(d.path().join("spectrum-tp3.csv")).unwrap();
    let counts: Vec<f64> = csv_rows(&spectrum).iter().map(|r| r[2]).collect();
    assert_eq!(counts, [0.0, 1.0, 2.0]);
}

#[test]
fn reproduce_honours_out_dir_env() {
    let d = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_tpds"))
        .args(["reproduce", "spectrum-tp3"])
        .env("TPDS_OUT_DIR", d.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(Path::new(&d.path().join("spectrum-tp3.dat")).exists());
}

#[test]
fn unknown_figure_is_a_usage_error() {
    assert_eq!(code(&tpds(&["reproduce", "nope"])), 2);
}

#[test]
fn spec_errors_exit_two() {
    let d = TempDir::new().unwrap();
    let f = write(&d, "bad.spec", "[meta]\nname = \"x\"\nn = 2\ninterval = [0.0, 1.0\n");
    let o = tpds(&["simulate", &f]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8(o.stderr).unwrap().contains("line 4"));
    assert_eq!(code(&tpds(&["simulate", "no-such.spec"])), 2);
    assert_eq!(code(&tpds(&["floquet", "takac"])), 2);
    assert_eq!(code(&tpds(&["bogus"])), 2);
}

#[test]
fn coarse_step_is_flagged_suspect() {
    let d = TempDir::new().unwrap();
    let f = write(
        &d,
        "stiff.spec",
        r#"[meta]
name = "stiff"
n = 2
interval = [0.0, 1.0]

[[linear.segments]]
start = 0.0
end = 1.0
matrix = [[-50, 0], [0, -50]]

[experiment]
z0 = [1.0, -1.0]
samples = 11
"#,
    );
    assert_eq!(code(&tpds(&["simulate", &f, "--step", "0.1"])), 4);
    assert_eq!(code(&tpds(&["simulate", &f, "--step", "0.0001"])), 0);
}

#[test]
fn nonlinear_simulation_writes_derivative_or_state() {
    let o = tpds(&["simulate", "entrain_demo", "--samples", "3", "--states"]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(&rows[0][1..4], &[0.0, 0.0, 0.0]);
    let states = csv_rows(&stdout(&tpds(&["simulate", "takac", "--samples", "2", "--states"])));
    assert_eq!(&states[0][1..5], &[1.001, 0.0, -1.0, 0.0]);
    let deriv = csv_rows(&stdout(&tpds(&["simulate", "takac", "--samples", "2"])));
    assert_ne!(&deriv[0][1..5], &states[0][1..5]);
}
