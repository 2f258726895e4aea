use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nilfourier::coadjoint::Functional;
use nilfourier::{GroupSpec, LayeredBasis};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nilfourier")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn error_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nilfourier-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn functional_file(dir: &Path, d: usize, n: usize, triples: &[(usize, usize, f64)]) -> PathBuf {
    let basis = LayeredBasis::lyndon(GroupSpec::new(d, n).unwrap()).unwrap();
    let ell = Functional::from_triples(&basis, triples).unwrap();
    let path = dir.join("functional.json");
    fs::write(&path, ell.to_json(&basis).to_string()).unwrap();
    path
}

#[test]
fn dims_of_small_groups() {
    let v = json_of(&run(&["dims", "--spec", "2,5"]));
    assert_eq!(v["layer_dims"], serde_json::json!([2, 1, 2, 3, 6]));
    assert_eq!(v["dim"], 14);
    let v = json_of(&run(&["dims", "--spec", "3,3", "--flavor", "full-tensor"]));
    assert_eq!(v["layer_dims"], serde_json::json!([3, 9, 27]));
}

#[test]
fn jump_sets_of_the_three_step_group() {
    let v = json_of(&run(&["jump-sets", "--spec", "3,3"]));
    assert_eq!(v["S_size"], 6);
    assert_eq!(v["T_size"], 8);
}

#[test]
fn generic_test_on_the_heisenberg_centre() {
    let dir = scratch("generic");
    let path = functional_file(&dir, 2, 2, &[(2, 1, 1.0)]);
    let v = json_of(&run(&["generic-test", path.to_str().unwrap()]));
    assert_eq!(v["generic"], true);
    let path = functional_file(&dir, 2, 2, &[(1, 1, 1.0)]);
    let v = json_of(&run(&["generic-test", path.to_str().unwrap()]));
    assert_eq!(v["generic"], false);
}

#[test]
fn polarization_and_orbit_dims() {
    let dir = scratch("polarization");
    let path = functional_file(&dir, 2, 2, &[(2, 1, 2.0)]);
    let v = json_of(&run(&["polarization", path.to_str().unwrap()]));
    assert_eq!(v["report"]["pass"], true);
    let v = json_of(&run(&["orbit-dims", path.to_str().unwrap(), "--samples", "2"]));
    assert_eq!(v["full_orbit_dim"], 2);
}

#[test]
fn signature_of_a_csv_path() {
    let dir = scratch("signature");
    let path = dir.join("path.csv");
    fs::write(&path, "x,y\n0,0\n1,0\n1,1\n").unwrap();
    let out = dir.join("out");
    let v = json_of(&run(&["signature", "--spec", "2,2", path.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    assert_eq!(v["signature"][2], serde_json::json!([0.5, 1.0, 0.0, 0.5]));
    assert!(out.join("log_signature.csv").exists());
}

#[test]
fn fourier_demo_reconstructs_the_gaussian() {
    let v = json_of(&run(&["fourier-demo"]));
    let err = v["max_relative_error"].as_f64().unwrap();
    assert!(err <= 0.02, "{err}");
    assert!(v.get("seconds").is_none());
}

#[test]
fn malformed_input_is_a_usage_error() {
    let out = run(&["dims", "--spec", "two,3"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_of(&out)["error"], "Usage");

    let out = run(&["dims", "--spec", "0,3"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_of(&out)["error"], "InvalidSpec");

    let dir = scratch("malformed");
    let bad = dir.join("bad.json");
    fs::write(&bad, "{\"quadrature\": {\"h_nodes\": 48, \"unknown\": 1}}").unwrap();
    let out = run(&["fourier-demo", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_of(&out)["error"], "Json");
}

#[test]
fn non_convergence_exits_with_code_three() {
    let dir = scratch("nonconvergence");
    let config = dir.join("config.json");
    fs::write(&config, "{\"quadrature\": {\"t_nodes\": 8}, \"convergence_nodes\": [12]}").unwrap();
    let out = run(&["fourier-demo", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_of(&out)["error"], "NonConvergence");
}

#[test]
fn outputs_are_reproducible() {
    let dir = scratch("determinism");
    let path = functional_file(&dir, 3, 3, &[(3, 1, 1.0), (3, 4, -0.5), (3, 8, 2.0), (3, 6, 0.7), (3, 2, 0.3)]);
    let (a, b) = (dir.join("a"), dir.join("b"));
    for out in [&a, &b] {
        let o = run(&["orbit-dims", path.to_str().unwrap(), "--seed", "9", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        let o = run(&["basis", "--spec", "3,3", "--paper-basis", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
    }
    for name in ["orbit_dims.json", "basis.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}
