//! Golden checks over the example corpus: canonical equations, frozen reports and the binary.

mod common;

use std::path::PathBuf;
use std::process::Command;

use bianchi::cli::{run, Job, JobSpec, Mode, Overrides};
use bianchi::expr::{Assignment, Expr};
use common::{expr_fn, p, real, Canonical, PointFn, Worked};
use num_complex::Complex64;

fn canonical(n: usize) -> Canonical {
    Canonical::new(&Worked::run(n).solved().transformation, &common::ode(n))
}

fn constant(c: f64) -> PointFn<'static> {
    Box::new(move |_| Some(Complex64::new(c, 0.0)))
}

fn anywhere(_: &Assignment) -> bool {
    true
}

fn assert_form(n: usize, rhs: &str) {
    let outcome = canonical(n).matches(&Expr::zero(), &expr_fn(Expr::one()), &expr_fn(p(rhs)), &anywhere);
    if let Err(e) = outcome {
        panic!("example {n}: {e}");
    }
}

#[test]
fn abelian_fourth_order() {
    assert_form(1, "x + y3^2");
}

#[test]
fn third_order_forms() {
    assert_form(2, "y2^3 + 1");
    assert_form(4, "exp(-x)*(-3 + ln(exp(x)*y2 - 2))");
    assert_form(6, "1/(x^3*y2)");
    assert_form(7, "(3*y1^3 - 1)/y1^4*y2^2");
    assert_form(10, "x^3*y2^2/2");
}

#[test]
fn fourth_order_form() {
    // The fourth prolongation divides by speed^7, so stay well away from its zeros.
    let c8 = canonical(8);
    let outcome = c8.matches(&Expr::zero(), &expr_fn(Expr::one()), &expr_fn(p("x*y2^2/y3")), &|a| c8.speed_at(a).abs() > 0.5);
    if let Err(e) = outcome {
        panic!("example 8: {e}");
    }
}

#[test]
fn spiral_constant() {
    let c = (0.5f64).atan();
    let expected = -(3.0 * c).exp() / 5f64.sqrt();
    let scale = expr_fn(p("(1 + y1^2)^(3/2)*exp(-3*arctan(y1))"));
    // Holds where u increases along the curve; there y' > -1/3 and
    // arctan((2z - 1)/(z + 2)) = arctan z - c.
    let c11 = canonical(11);
    let outcome = c11.matches(&Expr::zero(), &scale, &constant(expected), &|a| c11.speed_at(a) > 0.0);
    if let Err(e) = outcome {
        panic!("example 11: {e}");
    }
}

fn spiral_third_order(sign: f64, region: &dyn Fn(&Assignment) -> bool) -> Result<(), String> {
    let k = (sign * 4.0 * std::f64::consts::PI).exp();
    let expected: PointFn = Box::new(move |a| {
        let (x, y2) = (a["x"], a["y2"]);
        let z = y2 * (x * x + 1.0).powf(1.5) * (-4.0 * x.atan()).exp();
        Some(y2 / (1.0 + x * x) * (-k / (z * z) - 3.0 * x))
    });
    canonical(12).matches(&Expr::zero(), &expr_fn(Expr::one()), &expected, region)
}

#[test]
fn spiral_third_order_negative_axis() {
    // arctan(1/x) = −π/2 − arctan x, giving f(z) = −e^(4π)/z².
    spiral_third_order(1.0, &|a| real(a, "x") < 0.0).unwrap();
}

#[test]
fn spiral_third_order_positive_axis() {
    // arctan(1/x) = π/2 − arctan x, giving f(z) = −e^(−4π)/z².
    spiral_third_order(-1.0, &|a| real(a, "x") > 0.0).unwrap();
}

#[test]
fn reference_maps() {
    let cases = [
        (1, "y", "x"),
        (2, "ln(x)", "y"),
        (3, "-y/3", "x - 2*y/3"),
        (10, "ln(x)", "1 + y - 2*ln(x)"),
        (11, "x/5 + 3*y/5", "x"),
        (16, "-2/y", "x"),
        (17, "-arccot(y)", "x"),
    ];
    for (n, phi, psi) in cases {
        let worked = Worked::run(n);
        let t = &worked.solved().transformation;
        assert_eq!((t.phi.clone(), t.psi.clone()), (p(phi), p(psi)), "example {n}");
    }
}

// ----- frozen reports -----

fn golden_path(n: usize) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("tests/golden/ex{n:02}.json"))
}

fn verify_job(n: usize) -> Job {
    let text = std::fs::read_to_string(common::corpus_path(n)).unwrap();
    let overrides = Overrides { mode: Some(Mode::Verify), ..Overrides::default() };
    Job::from_spec(JobSpec::from_json(&text).unwrap(), &overrides).unwrap()
}

/// Set `BIANCHI_BLESS=1` to rewrite the golden files.
#[test]
fn golden_reports() {
    let bless = std::env::var_os("BIANCHI_BLESS").is_some();
    for n in 1..=17 {
        let job = verify_job(n);
        let render = || serde_json::to_string_pretty(&run(&job).unwrap().to_json()).unwrap() + "\n";
        let (first, second) = (render(), render());
        assert_eq!(first, second, "example {n} report is not deterministic");
        let path = golden_path(n);
        if bless {
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(&path, &first).unwrap();
            continue;
        }
        let frozen = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
        assert_eq!(first, frozen, "example {n} differs from {}", path.display());
    }
}

#[test]
fn every_report_verifies() {
    for n in 1..=17 {
        let report = run(&verify_job(n)).unwrap();
        let v = report.verification.as_ref().unwrap();
        assert_eq!(v.symmetries, Some([true; 3]), "example {n}");
        assert_eq!(v.correspondence, Some([true; 3]), "example {n}");
        assert_eq!(v.canonical_form, Some(true), "example {n}");
    }
}

// ----- binary -----

fn bianchi(args: &[&str], stdin: Option<&str>) -> (i32, String, String) {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_bianchi"))
        .args(args)
        .env_remove("BIANCHI_SEED")
        .env_remove("BIANCHI_TOL")
        .env_remove("BIANCHI_POINTS")
        .env_remove("BIANCHI_FORMAT")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn binary_json_is_byte_identical() {
    let path = common::corpus_path(13);
    let args = ["verify", "--format", "json", path.to_str().unwrap()];
    let (code, first, _) = bianchi(&args, None);
    let (_, second, _) = bianchi(&args, None);
    assert_eq!(code, 0);
    assert_eq!(first, second);
    let value: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(value["classification"]["tag"], "L3:8/I");
}

#[test]
fn binary_reads_stdin() {
    let job = std::fs::read_to_string(common::corpus_path(3)).unwrap();
    let (code, out, _) = bianchi(&["verify", "--format", "json", "-"], Some(&job));
    assert_eq!(code, 0);
    let value: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(value["classification"]["tag"], "L3:3/I");
    assert_eq!(value["transformation"]["phi"], "-y/3");
    assert_eq!(value["transformation"]["psi"], "x - 2*y/3");
    assert_eq!(value["verification"]["canonical_form"], true);
}

#[test]
fn binary_abelian_job() {
    let job = r#"{
        "name": "abelian",
        "variables": ["u", "v"],
        "generators": [
            {"xi": "0", "eta": "1"},
            {"xi": "0", "eta": "u"},
            {"xi": "0", "eta": "u^2"}
        ],
        "options": {"mode": "transform"}
    }"#;
    let (code, out, _) = bianchi(&["transform", "--format", "json", "-"], Some(job));
    assert_eq!(code, 0, "{out}");
    let value: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(value["classification"]["tag"], "L3:1");
    assert_eq!(value["transformation"]["residuals"]["f"], "x^2");
}

#[test]
fn binary_rejects_malformed_job() {
    let job = r#"{"name": "bad", "variables": ["u", "v"], "generators": [
        {"xi": "1", "eta": "0"}, {"xi": "0", "eta": "1"}, {"xi": "u +* v", "eta": "0"}]}"#;
    let (code, _, err) = bianchi(&["classify", "-"], Some(job));
    assert_eq!(code, 2);
    assert!(err.contains("generators[2].xi"), "{err}");
}

#[test]
fn binary_missing_file() {
    let (code, _, err) = bianchi(&["classify", "/nonexistent/job.json"], None);
    assert_eq!(code, 2);
    assert!(err.starts_with("error:"), "{err}");
}
