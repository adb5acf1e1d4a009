use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::Value;
use tempfile::TempDir;

fn vortex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vortex")).args(args).output().expect("binary runs")
}

fn vortex_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vortex")).args(args).env(key, value).output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn error_json(out: &Output, code: i32) -> Value {
    assert_eq!(out.status.code(), Some(code), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stderr).expect("stderr is one JSON object")
}

fn config(dir: &Path, name: &str, charge: i32, depth: f64, extra: &str) -> PathBuf {
    let path = dir.join(name);
    let text = format!("[grating]\nperiod_nm = 2000.0\ncharge = {charge}\ndepth_nm = {depth}\n{extra}");
    fs::write(&path, text).unwrap();
    path
}

fn json(path: PathBuf) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const PI_DEPTH: f64 = 3794.0;

#[test]
fn forked_grating_pattern_has_donut_at_first_order() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "m1.toml", 1, PI_DEPTH, "");
    let out = dir.path().join("run");
    ok(&vortex(&["diffract", "--config", s(&cfg), "--out", s(&out)]));

    let summary = json(out.join("summary.json"));
    let first = &summary["orders"][0];
    assert_eq!(first["n"], 1);
    assert_eq!(first["donut"], true);
    assert!((first["centre_qx_per_nm"].as_f64().unwrap() - PI / 1000.0).abs() < 1e-15);
    let centre = first["centre_intensity"].as_f64().unwrap();
    let peak = first["profile_peak_intensity"].as_f64().unwrap();
    assert!(centre < 0.05 * peak, "{centre} vs {peak}");
    assert!(summary["parseval_residual"].as_f64().unwrap() < 1e-6);

    let (nx, ny) = (summary["grid"]["nx"].as_u64().unwrap(), summary["grid"]["ny"].as_u64().unwrap());
    assert_eq!(fs::metadata(out.join("pattern.bin")).unwrap().len(), 40 + 8 * nx * ny);

    let manifest = json(out.join("manifest.json"));
    assert_eq!(manifest["command"], "diffract");
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 4);
    for o in outputs {
        assert!(Path::new(o.as_str().unwrap()).exists());
    }
    let radial = fs::read_to_string(out.join("radial_n3.csv")).unwrap();
    assert!(radial.starts_with("q_prime,intensity,count\n"));
}

#[test]
fn ordinary_grating_reports_not_a_donut() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "m0.toml", 0, PI_DEPTH, "hole_radius_nm = 0.0\n");
    let out = dir.path().join("run");
    ok(&vortex(&["diffract", "--config", s(&cfg), "--out", s(&out), "--pad", "4", "--samples-per-period", "16"]));
    let summary = json(out.join("summary.json"));
    for order in summary["orders"].as_array().unwrap() {
        assert_eq!(order["donut"], false);
        assert!(order["peak_radius_per_nm"].is_null());
    }
}

#[test]
fn missing_config_exits_with_code_two() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("absent.toml");
    let out = vortex(&["diffract", "--config", s(&missing), "--out", s(dir.path())]);
    let err = error_json(&out, 2);
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"].as_str().unwrap().contains("absent.toml"));
}

#[test]
fn malformed_inputs_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    let typo = dir.path().join("typo.toml");
    fs::write(&typo, "[grating]\nperiod_nm = 2000.0\ncharge = 1\ndepth_nm = 100.0\ndepht = 3\n").unwrap();
    error_json(&vortex(&["sesans", "--config", s(&typo), "--out", s(dir.path())]), 2);

    let bad = config(dir.path(), "bad.toml", 1, 100.0, "duty = 1.5\n");
    let err = error_json(&vortex(&["sesans", "--config", s(&bad), "--out", s(dir.path())]), 2);
    assert!(err["error"]["message"].as_str().unwrap().contains("duty"));

    error_json(&vortex(&["sesans", "--bogus"]), 2);
    let good = config(dir.path(), "good.toml", 1, 100.0, "");
    error_json(&vortex_env(&["xi", "--config", s(&good)], "VORTEX_THREADS", "zero"), 2);
}

#[test]
fn empty_or_short_data_files_are_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "fit.toml", 1, 4200.0, "");
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let out = dir.path().join("run");
    let err = error_json(&vortex(&["fit", "--config", s(&cfg), "--data", s(&empty), "--out", s(&out)]), 2);
    assert_eq!(err["error"]["kind"], "input");

    let short = dir.path().join("short.csv");
    fs::write(&short, "xi_nm,pol\n2000,0.9\n3000,0.8\n").unwrap();
    error_json(&vortex(&["fit", "--config", s(&cfg), "--data", s(&short), "--out", s(&out)]), 2);
}

#[test]
fn contrast_free_template_is_a_numerical_failure() {
    let dir = TempDir::new().unwrap();
    let data_cfg = config(dir.path(), "data.toml", 1, 4200.0, "");
    let data_out = dir.path().join("data");
    ok(&vortex(&["sesans", "--config", s(&data_cfg), "--out", s(&data_out), "--n-lambda", "32"]));
    let flat = config(dir.path(), "flat.toml", 1, 4200.0, "sld_per_nm2 = 0.0\n");
    let out = vortex(&["fit", "--config", s(&flat), "--data", s(&data_out.join("curve.csv")), "--out", s(dir.path())]);
    let err = error_json(&out, 3);
    assert_eq!(err["error"]["kind"], "numerical");
}

/// Synthetic TOF data at `depth` for charge `m`, plus seeded Gaussian noise
/// of width `sigma`, written with foreign column names.
fn synthetic_data(dir: &Path, charge: i32, depth: f64, sigma: f64, seed: u64) -> PathBuf {
    let cfg = config(dir, &format!("truth_{charge}.toml"), charge, depth, "");
    let out = dir.join(format!("truth_{charge}"));
    ok(&vortex(&["sesans", "--config", s(&cfg), "--out", s(&out), "--mode", "tof"]));
    let text = fs::read_to_string(out.join("curve.csv")).unwrap();
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = String::from("spin_echo_length,polarisation\n");
    for line in text.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let p = if sigma > 0.0 { cols[1] + noise.sample(&mut rng) } else { cols[1] };
        csv.push_str(&format!("{},{}\n", cols[0], p));
    }
    let path = dir.join(format!("measured_{charge}.csv"));
    fs::write(&path, csv).unwrap();
    path
}

fn fit(dir: &Path, cfg: &Path, data: &Path, name: &str) -> Value {
    let out = dir.join(name);
    ok(&vortex(&[
        "fit", "--config", s(cfg), "--data", s(data), "--out", s(&out),
        "--xi-column", "spin_echo_length", "--pol-column", "polarisation",
    ]));
    json(out.join("fit_report.json"))
}

#[test]
fn fit_recovers_synthetic_depth() {
    let dir = TempDir::new().unwrap();
    let data = synthetic_data(dir.path(), 1, 4200.0, 0.01, 42);
    let template = config(dir.path(), "template.toml", 1, 1000.0, "");
    let report = fit(dir.path(), &template, &data, "fit");
    let d = report["d_best_nm"].as_f64().unwrap();
    assert!((d - 4200.0).abs() <= 50.0, "{d}");
    assert_eq!(report["spec"]["depth_nm"].as_f64().unwrap(), d);

    let overlay = fs::read_to_string(dir.path().join("fit/fit_overlay.csv")).unwrap();
    assert!(overlay.starts_with("xi_nm,data,model\n"));
    assert_eq!(overlay.lines().count(), 1 + 96);
}

#[test]
fn wrong_charge_fits_markedly_worse() {
    let dir = TempDir::new().unwrap();
    let data = synthetic_data(dir.path(), 2, 4200.0, 0.0, 7);
    let matched = fit(dir.path(), &config(dir.path(), "m2.toml", 2, 1000.0, ""), &data, "matched");
    let wrong = fit(dir.path(), &config(dir.path(), "m1.toml", 1, 1000.0, ""), &data, "wrong");
    let (a, b) = (matched["sse"].as_f64().unwrap(), wrong["sse"].as_f64().unwrap());
    assert!(b >= 5.0 * a, "matched {a}, mismatched {b}");
}

#[test]
fn outputs_are_bit_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "c.toml", 2, 5500.0, "[simulation]\nsamples_per_period = 16\npad = 4\n");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&vortex(&["diffract", "--config", s(&cfg), "--out", s(out)]));
        ok(&vortex(&["sesans", "--config", s(&cfg), "--out", s(out), "--mode", "tof"]));
    }
    for name in ["radial_n1.csv", "radial_n3.csv", "pattern.bin", "curve.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    // thread count does not change results
    let c = dir.path().join("c");
    ok(&vortex_env(&["sesans", "--config", s(&cfg), "--out", s(&c), "--mode", "tof"], "VORTEX_THREADS", "1"));
    assert_eq!(fs::read(a.join("curve.csv")).unwrap(), fs::read(c.join("curve.csv")).unwrap());
}

#[test]
fn manifest_hash_tracks_input_contents() {
    let dir = TempDir::new().unwrap();
    let hash = |cfg: &Path, out: &str, extra: &[&str]| {
        let out = dir.path().join(out);
        let mut args = vec!["sesans", "--config", s(cfg), "--out", s(&out), "--mode", "slice"];
        args.extend_from_slice(extra);
        ok(&vortex(&args));
        json(out.join("manifest.json"))["content_hash"].as_str().unwrap().to_string()
    };
    let cfg = config(dir.path(), "c.toml", 1, 2000.0, "[simulation]\nsamples_per_period = 8\nxi_points = 11\n");
    let first = hash(&cfg, "r1", &[]);
    assert_eq!(first, hash(&cfg, "r2", &["--orientation", "90"]));
    let copy = dir.path().join("copy.toml");
    fs::copy(&cfg, &copy).unwrap();
    assert_eq!(first, hash(&copy, "r3", &[]));
    fs::write(&copy, fs::read_to_string(&cfg).unwrap() + "# note\n").unwrap();
    assert_ne!(first, hash(&copy, "r4", &[]));
    assert_eq!(first.len(), 64);
}

#[test]
fn flags_override_config_values() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "c.toml", 1, 2000.0, "[simulation]\nmode = \"slice\"\nsamples_per_period = 8\n");
    let out = dir.path().join("run");
    ok(&vortex(&["sesans", "--config", s(&cfg), "--out", s(&out), "--charge", "-2", "--orientation", "90"]));
    let meta = json(out.join("curve.json"));
    assert_eq!(meta["spec"]["charge"], -2);
    assert!((meta["orientation_rad"].as_f64().unwrap() - PI / 2.0).abs() < 1e-15);
    assert_eq!(meta["mode"]["kind"], "monochromatic");
    assert_eq!(meta["resolution_applied"], true);
}

#[test]
fn stacked_curve_is_product_of_singles() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "c.toml", 1, 5500.0, "[simulation]\nsamples_per_period = 16\nn_lambda = 24\n");
    let (one, two) = (dir.path().join("one"), dir.path().join("two"));
    ok(&vortex(&["sesans", "--config", s(&cfg), "--out", s(&one), "--resolution", "off"]));
    ok(&vortex(&["sesans", "--config", s(&cfg), "--out", s(&two), "--resolution", "off", "--stack", "2"]));
    let read = |p: &Path| -> Vec<f64> {
        fs::read_to_string(p.join("curve.csv"))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    let (single, stacked) = (read(&one), read(&two));
    for (a, b) in single.iter().zip(&stacked) {
        assert_eq!((a * a).to_bits(), b.to_bits());
    }
    assert_eq!(json(two.join("curve.json"))["stack"], 2);
}

#[test]
fn map_mode_writes_square_table() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "c.toml", 2, 38_000.0, "[simulation]\nsamples_per_period = 8\n");
    let out = dir.path().join("run");
    ok(&vortex(&["sesans", "--config", s(&cfg), "--out", s(&out), "--mode", "map"]));
    let meta = json(out.join("map.json"));
    let n = meta["nx"].as_u64().unwrap() * meta["ny"].as_u64().unwrap();
    let text = fs::read_to_string(out.join("map.csv")).unwrap();
    assert!(text.starts_with("xi_x_nm,xi_y_nm,pol\n"));
    assert_eq!(text.lines().count() as u64, n + 1);
}

#[test]
fn donut_and_xi_run_without_config() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("donut");
    ok(&vortex(&["donut", "--out", s(&out), "--charge", "3", "--side", "minus", "--points", "101"]));
    let meta = json(out.join("donut.json"));
    assert_eq!(meta["winding"], 3);
    assert_eq!(fs::read_to_string(out.join("donut.csv")).unwrap().lines().count(), 102);

    let xi = vortex(&["xi", "--lambda", "0.3", "1.05"]);
    ok(&xi);
    let v: Value = serde_json::from_slice(&xi.stdout).unwrap();
    assert_eq!(v["points"][0]["xi_nm"].as_f64().unwrap(), 1233.0);
    assert!(v["relative_difference"].as_f64().unwrap().abs() < 0.1);

    let err = error_json(&vortex(&["donut", "--out", s(&out), "--charge", "0"]), 2);
    assert_eq!(err["error"]["kind"], "input");
}
