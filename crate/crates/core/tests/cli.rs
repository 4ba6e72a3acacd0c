use std::path::Path;
use std::process::{Command, Output};

fn fracrk(args: &[&str], workers: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fracrk"));
    c.args(args);
    match workers {
        Some(w) => c.env("FRACRK_WORKERS", w),
        None => c.env_remove("FRACRK_WORKERS"),
    };
    c.output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = fracrk(args, None);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn numbers(text: &str) -> Vec<f64> {
    fracrk::linalg::read_vector(text.as_bytes()).unwrap()
}

#[test]
fn poles_then_certify() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("z.poles");
    let f = file.to_str().unwrap();
    ok(&["poles", "--interval", "1,1000", "--strategy", "Z", "--k", "6", "--out", f]);
    let cert = ok(&["certify", "--poles", f]);
    assert!(cert.starts_with("# fracrk-csv v1 certify\npoint,lambda,abs_r\n"));
    assert_eq!(cert.lines().filter(|l| l.starts_with("extremum")).count(), 5);
    let delta: f64 = cert.lines().last().unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!(delta > 0.0 && delta < 2.0 * (-0.4 * 6.0f64).exp());
}

#[test]
fn apply_powers_on_fem1d() {
    let out = ok(&["apply", "--generator", "fem1d:50", "--strategy", "A", "--k", "12", "--function", "pow:-0.5", "--rhs", "ones"]);
    let u = numbers(&out);
    assert_eq!(u.len(), 50);
    assert!(u.iter().all(|x| x.is_finite() && *x > 0.0));
}

#[test]
fn fode_modes_agree() {
    let base = ["fode", "--generator", "fd2d:10", "--alpha", "0.7", "--s", "0.6", "--t", "0.8", "--u0", "ones", "--forcing", "0:constant"];
    let a = numbers(&ok(&[&base[..], &["--mode", "oracle"]].concat()));
    let b = numbers(&ok(&[&base[..], &["--mode", "rkm", "--strategy", "Z", "--k", "20"]].concat()));
    assert_eq!(a.len(), 100);
    let d = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(d < 1e-7, "{d}");
}

#[test]
fn sweeps_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "[operator]\ngenerator = \"fd2d:10\"\n[function]\nalpha = [0.5, 1]\ns = \"0.25:0.25:0.75\"\n[poles]\nstrategies = \"Z,E,A\"\nk = \"1:6\"\n",
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    for cmd in ["paramstudy", "converge", "certcmp"] {
        let one = fracrk(&[cmd, "--config", c], Some("1"));
        let four = fracrk(&[cmd, "--config", c], Some("4"));
        assert!(one.status.success() && four.status.success(), "{}", String::from_utf8_lossy(&one.stderr));
        assert_eq!(one.stdout, four.stdout, "{cmd}");
        assert!(String::from_utf8_lossy(&one.stdout).starts_with(&format!("# fracrk-csv v1 {cmd}\n")));
    }
}

#[test]
fn export_writes_matrix_market() {
    let dir = tempfile::tempdir().unwrap();
    let (a, m) = (dir.path().join("a.mtx"), dir.path().join("m.mtx"));
    ok(&["export", "--generator", "fem2d:3", "--a", a.to_str().unwrap(), "--m", m.to_str().unwrap()]);
    for p in [&a, &m] {
        let text = std::fs::read_to_string(Path::new(p)).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real"));
    }
}

#[test]
fn bad_input_fails() {
    for args in [
        &["poles", "--interval", "5,1", "--k", "3"][..],
        &["apply", "--generator", "fd9d:3"],
        &["apply", "--generator", "fd2d:5", "--function", "exp:1"],
        &["fode", "--generator", "fd2d:5", "--mode", "exact"],
        &["paramstudy", "--config", "/nonexistent/c.toml"],
        &["certify", "--poles", "/nonexistent/p"],
    ] {
        let o = fracrk(args, None);
        assert!(!o.status.success(), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    let o = fracrk(&["certcmp", "--generator", "fd2d:5"], Some("zero"));
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("FRACRK_WORKERS"));
}
