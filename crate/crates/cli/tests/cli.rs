use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multibump")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn help_lists_config_defaults() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("newton_tol = 1e-10") && text.contains("verify"));
}

#[test]
fn usage_and_config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["sweep"]).status.code(), Some(1));
    assert_eq!(run(&["bogus", "--config", "x"]).status.code(), Some(1));
    let cfg = write_config(dir.path(), "m = 0.5\n");
    let out = run(&["sweep", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("m > 1"));
}

#[test]
fn energy_refuses_too_many_bumps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "k = 12\n");
    let out = run(&["energy", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fit"));
}

#[test]
fn reduce_with_vanishing_neighbor_interaction_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("o");
    fs::create_dir_all(&out_dir).unwrap();
    let cfg_text = "k = 20\n";
    let cfg = write_config(dir.path(), cfg_text);
    // constants with C_beta = 0 stored under the live config hash
    let first = run(&["constants", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(first.status.code(), Some(0));
    let text = fs::read_to_string(out_dir.join("constants.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["constants"]["c_beta"] = serde_json::json!(0.0);
    fs::write(out_dir.join("fit_constants.json"), v.to_string()).unwrap();
    let out = run(&["reduce", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no critical point"));
}

#[test]
fn sweep_twice_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "k_list = 10, 20, 40\nseed = 3\n");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = run(&["sweep", "--config", &cfg, "--out", d.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["sweep.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let csv = fs::read_to_string(a.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash="));
    assert_eq!(lines.next().unwrap(), "k,r_star,h_star,rho_star,grad_norm,iters,in_window,curvature");
    assert_eq!(lines.count(), 3);
}

#[test]
fn ground_state_and_residual_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mu1 = 2\nk = 4\nr_grid = 20\nh_grid = 0.4\n");
    let out_dir = dir.path().join("o");
    let out = run(&["ground-state", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("ground_state_mu1.csv").is_file() && out_dir.join("ground_state_mu2.json").is_file());
    let out = run(&["residual", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("residual.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "k,r,h,rho,ell_u,ell_v,total,err,in_window");
    let manifest = fs::read_to_string(out_dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"subcommand\": \"residual\"") && manifest.contains("residual.csv"));
}
