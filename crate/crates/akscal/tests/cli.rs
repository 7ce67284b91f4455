use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn akscal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_akscal")).args(args).env_remove("AKSCAL_OUT").output().expect("spawn akscal")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value_of(csv: &str, quantity: &str) -> String {
    let line = csv.lines().find(|l| l.starts_with(&format!("{quantity},"))).unwrap_or_else(|| panic!("no {quantity} row in\n{csv}"));
    line.rsplit(',').next().unwrap().to_string()
}

#[test]
fn exact_kt_curvature_table() {
    let o = akscal(&["curvature", data("kt.spec").to_str().unwrap(), "--exact"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("quantity,i,j,k,value\n"));
    assert!(out.lines().any(|l| l == "sectional,1,2,,-3/4"), "{out}");
    assert!(out.lines().any(|l| l == "gamma,1,2,3,1/2"));
    assert!(out.lines().any(|l| l == "ricci_anti,4,4,,1/4"));
    assert_eq!(value_of(&out, "scalar"), "-1/2");
    assert_eq!(value_of(&out, "norm_nabla_j_sq"), "2");

    let float = stdout(&akscal(&["curvature", data("kt.spec").to_str().unwrap()]));
    assert_eq!(value_of(&float, "scalar"), "-5.0000000000000000e-1");
}

#[test]
fn cp2_zbound_value() {
    let o = akscal(&["zbound", data("cp2.model").to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: f64 = value_of(&stdout(&o), "value").parse().unwrap();
    assert!((v - 12.0 * 2f64.sqrt() * PI).abs() < 1e-9, "{v}");
}

#[test]
fn barlow_certificate_and_seed_override() {
    let o = akscal(&["zbound", data("barlow.model").to_str().unwrap(), "--certify"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let v: f64 = value_of(&out, "value").parse().unwrap();
    assert!((v + 12.0 * PI).abs() < 1e-6);
    assert_eq!(value_of(&out, "sign_ok"), "true");
    assert_eq!(value_of(&out, "value_below_bound"), "true");

    let o = akscal(&["zbound", data("r8.model").to_str().unwrap()]);
    assert_eq!(value_of(&stdout(&o), "value"), "inf");
    let o = akscal(&["zbound", data("r8.model").to_str().unwrap(), "--seed", "-3,1,1,1,1,1,1,1,1,1"]);
    let v: f64 = value_of(&stdout(&o), "value").parse().unwrap();
    assert!((v + 12.0 * PI).abs() < 1e-6, "{v}");
}

#[test]
fn parse_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.spec");
    std::fs::write(&empty, "").unwrap();
    let o = akscal(&["curvature", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("curvature") && err.contains("empty"), "{err}");

    let o = akscal(&["zbound", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let bad = dir.path().join("bad.spec");
    std::fs::write(&bad, std::fs::read_to_string(data("kt.spec")).unwrap().replace("c 1 2 3 1", "c 1 2 3 x")).unwrap();
    let o = akscal(&["curvature", bad.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 5"));

    assert_eq!(akscal(&["operator", "--N", "3"]).status.code(), Some(2));
    assert_eq!(akscal(&["curvature", "/no/such/file.spec"]).status.code(), Some(2));
    let o = akscal(&["rearrange", "--f", "sin(x)", "--f1", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rearrange"));
}

#[test]
fn out_dir_from_environment_and_byte_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let target = dir.path().join(sub);
        let o = Command::new(env!("CARGO_BIN_EXE_akscal"))
            .args(["rearrange", "--f", "sin(x)", "--f1", "0.3*cos(x)", "--eps", "0.2", "--emit-phi", "phi.csv"])
            .env("AKSCAL_OUT", &target)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        ["rearrange.csv", "rearrange_nodes.csv", "phi.csv"].map(|f| std::fs::read(target.join(f)).unwrap())
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    let summary = String::from_utf8(a[0].clone()).unwrap();
    assert_eq!(value_of(&summary, "error_below_epsilon"), "true");
    let phi = String::from_utf8(a[2].clone()).unwrap();
    assert!(phi.starts_with("t,x,phi_t,derivative\n"));
    assert_eq!(phi.lines().count(), 1 + 5 * 256);
}

#[test]
fn operator_tables() {
    let o = akscal(&["operator", "--variant", "kt", "--N", "4", "--kernel-gap", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let first = out.lines().nth(1).unwrap();
    let lambda: f64 = first.split(',').nth(1).unwrap().parse().unwrap();
    assert!((lambda - 0.625).abs() < 1e-8, "{out}");

    let o = akscal(&["operator", "--variant", "flat", "--N", "8", "--symbol-sweep"]);
    let out = stdout(&o);
    assert!(out.starts_with("mx,my,mz,mt,xi_norm,ratio,flat_ratio,excess\n"));
    assert_eq!(out.lines().count(), 3);
}

#[test]
fn paper_suite_subset_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = akscal(&["--out", dir.path().to_str().unwrap(), "paper-suite", "--only", "1,2,5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 3);
    let summary = std::fs::read_to_string(dir.path().join("paper_suite.csv")).unwrap();
    assert!(summary.starts_with("id,check,anchor,status,limit_seconds,detail\n"));
    assert_eq!(summary.lines().count(), 4);
}
