use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_weier-mnv");

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("weier-mnv-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn read(path: &PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn surface(dir: &PathBuf, torus: &str, n: &str) -> PathBuf {
    let out = dir.join("surface.json");
    let o = run(&["surface", "--torus", torus, "--n", n, "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn surface_reports_closed_form_willmore() {
    let dir = scratch("surface");
    let v = read(&surface(&dir, "R=2,r=1", "64"));
    let t = v["summary"]["willmore"].as_f64().unwrap();
    let want = 4.0 * std::f64::consts::PI.powi(2) / 3f64.sqrt();
    assert!((t - want).abs() < 1e-9 * want, "{t} vs {want}");
    assert!(v["immersion"].is_object());
}

#[test]
fn degenerate_torus_is_an_input_error() {
    assert_eq!(run(&["surface", "--torus", "R=1,r=1"]).status.code(), Some(2));
}

#[test]
fn invariants_round_trip_through_files() {
    let dir = scratch("invariants");
    let s = surface(&dir, "R=2,r=1", "64");
    let out = dir.join("inv.json");
    let o = run(&["invariants", "-i", s.to_str().unwrap(), "--K", "6", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = read(&out);
    let h = v["invariants"]["h"].as_array().unwrap();
    assert_eq!(h.len(), 6);
    for k in [1, 3, 5] {
        let re = h[k][0].as_f64().unwrap();
        let im = h[k][1].as_f64().unwrap();
        assert!(re.abs() < 1e-8 && im.abs() < 1e-8, "h{} = {re} + {im}i", k + 1);
    }
    assert!(v["energy"]["rel_err"].as_f64().unwrap() < 1e-9);
    assert_eq!(run(&["invariants", "-i", "/nonexistent/x.json"]).status.code(), Some(2));
}

#[test]
fn verify_conformal_passes_and_rejects_bad_centres() {
    let dir = scratch("verify");
    let s = surface(&dir, "R=2,r=1", "64");
    let out = dir.join("v.json");
    let o = run(&["verify-conformal", "-i", s.to_str().unwrap(), "--transform", "inversion:0,0,5", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(read(&out)["pass"], Value::Bool(true));
    // centre inside the tube
    let o = run(&["verify-conformal", "-i", s.to_str().unwrap(), "--transform", "inversion:2,0,0.1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bloch_free_operator_has_exponential_roots() {
    let dir = scratch("bloch");
    let out = dir.join("b.json");
    let o = run(&["bloch", "--u", "zero", "--tau", "0+1i", "--w1", "1.5+0i", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v = read(&out);
    let lam = 1.5f64.ln();
    let roots: Vec<(f64, f64)> =
        v["slice"]["points"].as_array().unwrap().iter().map(|p| (p["w2"][0].as_f64().unwrap(), p["w2"][1].as_f64().unwrap())).collect();
    for want in [(lam.cos(), -lam.sin()), (lam.cos(), lam.sin())] {
        assert!(roots.iter().any(|r| (r.0 - want.0).hypot(r.1 - want.1) < 1e-10), "{want:?} not in {roots:?}");
    }
}

#[test]
fn bloch_compare_accepts_its_own_output() {
    let dir = scratch("compare");
    let s = surface(&dir, "R=2,r=1", "64");
    let first = dir.join("first.json");
    let csv = dir.join("first.csv");
    let base = ["bloch", "-i", s.to_str().unwrap(), "--w1", "1.2+0.3i", "--window", "0.3,3,16"];
    let o = run(&[&base[..], &["-o", first.to_str().unwrap(), "--csv", csv.to_str().unwrap()]].concat());
    assert_eq!(o.status.code(), Some(0), "{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("k,re_w2,im_w2,residual,M,nx,ny"));
    let o = run(&[&base[..], &["--compare", first.to_str().unwrap()]].concat());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn flow_conserves_h1_and_is_deterministic() {
    let dir = scratch("flow");
    let s = surface(&dir, "R=2,r=1", "64");
    let out = dir.join("flow.json");
    let args = ["flow", "-i", s.to_str().unwrap(), "--c", "24", "--T", "0.0002", "-o", out.to_str().unwrap()];
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read(&out).unwrap();
    let v: Value = serde_json::from_slice(&first).unwrap();
    assert!(v["config"].is_object());
    assert_eq!(run(&args).status.code(), Some(0));
    assert_eq!(first, std::fs::read(&out).unwrap());
}

#[test]
fn bloch_slice_survives_the_flow() {
    let dir = scratch("flowslice");
    let s = surface(&dir, "R=2,r=1", "64");
    let flowed = dir.join("flowed.json");
    let o = run(&["flow", "-i", s.to_str().unwrap(), "--c", "24", "--T", "0.0002", "-o", flowed.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["bloch", "-i", s.to_str().unwrap(), "--w1", "1.2+0.3i", "--window", "0.3,3,16", "--compare", flowed.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
}
