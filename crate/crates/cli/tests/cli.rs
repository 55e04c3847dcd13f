use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hypodist::io::{load_function, save_function};
use serde_json::{json, Value};
use tempfile::TempDir;

fn hypodist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypodist"))
        .args(args)
        .env("HYPODIST_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn run_config(sub: &str, cfg: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--quiet"];
    args.extend_from_slice(extra);
    hypodist(&args)
}

fn write_json(dir: &Path, name: &str, v: &Value) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn uniform(lower: &[f64], upper: &[f64]) -> Value {
    json!({"source": "cdf", "spec": {"kind": "uniform_box", "lower": lower, "upper": upper}})
}

fn dirac(at: &[f64]) -> Value {
    json!({"source": "cdf", "spec": {"kind": "dirac_point", "location": at}})
}

/// Two-uniforms setup on a coarse grid so runs stay short.
fn small_estimate(delta: f64) -> Value {
    json!({
        "version": 1,
        "domain": {"lower": [0.0, 0.0], "upper": [3.0, 3.0]},
        "cells_per_axis": 6,
        "f0": uniform(&[0.0, 0.0], &[1.0, 1.0]),
        "g0": uniform(&[2.0, 2.0], &[3.0, 3.0]),
        "delta": delta,
        "seed": 3
    })
}

fn strip_timings(v: &mut Value) {
    let obj = v.as_object_mut().unwrap();
    obj.remove("wall_seconds");
    for step in obj["history"].as_array_mut().unwrap() {
        step.as_object_mut().unwrap().remove("seconds");
    }
}

#[test]
fn uuv_generation_is_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let o = hypodist(&["generate", "uuv-synthetic", "--seed", "7", "--out", dir.path().to_str().unwrap(), "--quiet"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for name in ["uuv_f_samples.csv", "uuv_g_samples.csv", "uuv_delta_0p9.json", "uuv_delta_0p1.json", "uuv_delta_0p01.json"] {
        let x = fs::read(a.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let c = TempDir::new().unwrap();
    hypodist(&["generate", "uuv-synthetic", "--seed", "8", "--out", c.path().to_str().unwrap(), "--quiet"]);
    assert_ne!(fs::read(a.path().join("uuv_f_samples.csv")).unwrap(), fs::read(c.path().join("uuv_f_samples.csv")).unwrap());
}

#[test]
fn two_uniforms_configs_describe_the_scenario() {
    let dir = TempDir::new().unwrap();
    let o = hypodist(&["generate", "two-uniforms", "--out", dir.path().to_str().unwrap(), "--quiet"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cfg = read_json(&dir.path().join("two_uniforms_delta_0p7.json"));
    assert_eq!(cfg["domain"], json!({"lower": [0.0, 0.0], "upper": [3.0, 3.0]}));
    assert_eq!(cfg["f0"]["spec"], json!({"kind": "uniform_box", "lower": [0.0, 0.0], "upper": [1.0, 1.0]}));
    assert_eq!(cfg["g0"]["spec"], json!({"kind": "uniform_box", "lower": [2.0, 2.0], "upper": [3.0, 3.0]}));
    assert_eq!(cfg["delta"], json!(0.7));
    assert!(dir.path().join("two_uniforms_study.json").exists());
    assert!(dir.path().join("two_uniforms_distance.json").exists());
}

#[test]
fn generate_into_unwritable_location_exits_1() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("plain_file");
    fs::write(&file, "x").unwrap();
    let target = file.join("sub");
    let o = hypodist(&["generate", "two-uniforms", "--out", target.to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn unknown_scenario_exits_nonzero() {
    let o = hypodist(&["generate", "three-uniforms", "--quiet"]);
    assert!(!o.status.success());
}

#[test]
fn malformed_config_reports_line_and_exits_1() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(&p, "{\n  \"version\": 1,\n  \"domain\": {\"lower\": [0], \"upper\": [1]},\n  \"cells_per_axis\": 4,,\n}\n").unwrap();
    let o = run_config("estimate", &p, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_and_versions_exit_1() {
    let dir = TempDir::new().unwrap();
    let mut cfg = small_estimate(0.7);
    cfg["detla"] = json!(0.7);
    let o = run_config("estimate", &write_json(dir.path(), "typo.json", &cfg), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("detla"), "{}", stderr(&o));

    let mut cfg = small_estimate(0.7);
    cfg["version"] = json!(2);
    let o = run_config("estimate", &write_json(dir.path(), "v2.json", &cfg), &[]);
    assert_eq!(o.status.code(), Some(1));

    let mut cfg = small_estimate(0.7);
    cfg["delta"] = json!(-0.1);
    let o = run_config("estimate", &write_json(dir.path(), "neg.json", &cfg), &[]);
    assert_eq!(o.status.code(), Some(1));

    let mut cfg = small_estimate(0.7);
    cfg["f0"] = json!({"source": "samples", "path": "missing.csv"});
    let o = run_config("estimate", &write_json(dir.path(), "missing.json", &cfg), &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn estimate_writes_outputs_that_round_trip() {
    let dir = TempDir::new().unwrap();
    let mut cfg = small_estimate(0.7);
    cfg["output_dir"] = json!("run");
    let p = write_json(dir.path(), "est.json", &cfg);
    let o = run_config("estimate", &p, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("run");
    let result = read_json(&out.join("result.json"));
    let eta = result["eta"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&eta));
    assert!(result["slack"].as_f64().unwrap() <= 1e-6);
    assert!(!result["history"].as_array().unwrap().is_empty());
    assert_eq!(result["expected_value"].as_array().unwrap().len(), 2);
    for f in ["surface.dat", "heatmap.dat", "solution.csv", "solution.json"] {
        assert!(out.join(f).exists(), "{f}");
    }

    let sol = load_function(&out.join("solution.csv"), &out.join("solution.json")).unwrap();
    let again = TempDir::new().unwrap();
    save_function(&sol, again.path(), "solution").unwrap();
    assert_eq!(fs::read(out.join("solution.csv")).unwrap(), fs::read(again.path().join("solution.csv")).unwrap());
    let back = load_function(&again.path().join("solution.csv"), &again.path().join("solution.json")).unwrap();
    let bits = |f: &hypodist::GridFunction| f.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&sol), bits(&back));

    // The written solution is accepted as a source and sits at distance zero from itself.
    let dist = json!({
        "version": 1,
        "domain": {"lower": [0.0, 0.0], "upper": [3.0, 3.0]},
        "cells_per_axis": 6,
        "f": {"source": "grid_function", "csv": "run/solution.csv", "meta": "run/solution.json"},
        "g": {"source": "grid_function", "csv": "run/solution.csv", "meta": "run/solution.json"},
        "rho_values": [0.5, 2.0],
        "output_dir": "dist"
    });
    let o = run_config("distance", &write_json(dir.path(), "dist.json", &dist), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let d = read_json(&dir.path().join("dist/distance.json"));
    for r in d["per_rho"].as_array().unwrap() {
        assert_eq!(r["hat"].as_f64().unwrap(), 0.0);
        assert_eq!(r["oracle"].as_f64().unwrap(), 0.0);
    }
    assert_eq!(d["hypo_distance"]["value"].as_f64().unwrap(), 0.0);
}

#[test]
fn estimate_is_deterministic_modulo_timings() {
    let dir = TempDir::new().unwrap();
    let p = write_json(dir.path(), "est.json", &small_estimate(0.4));
    let mut results = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = run_config("estimate", &p, &["--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        let mut v = read_json(&out.join("result.json"));
        strip_timings(&mut v);
        results.push((v, fs::read(out.join("solution.csv")).unwrap()));
    }
    assert_eq!(results[0], results[1]);
}

#[test]
fn impossible_growth_bound_exits_2() {
    let dir = TempDir::new().unwrap();
    let mut cfg = small_estimate(0.7);
    cfg["shape"] = json!({"bounded_growth": 0.0});
    let o = run_config("estimate", &write_json(dir.path(), "flat.json", &cfg), &["--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn iteration_cap_exits_3() {
    let dir = TempDir::new().unwrap();
    let mut cfg = small_estimate(0.7);
    cfg["max_lp_iterations"] = json!(1);
    let o = run_config("estimate", &write_json(dir.path(), "cap.json", &cfg), &["--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

fn distance_config(dim: usize, cells: usize, f: Value, g: Value, rho: &[f64]) -> Value {
    json!({
        "version": 1,
        "domain": {"lower": vec![0.0; dim], "upper": vec![if dim == 1 { 1.0 } else { 3.0 }; dim]},
        "cells_per_axis": cells,
        "f": f,
        "g": g,
        "rho_values": rho,
        "oracle_samples": 41
    })
}

fn distance_report(cfg: &Value) -> Value {
    let dir = TempDir::new().unwrap();
    let o = run_config("distance", &write_json(dir.path(), "d.json", cfg), &["--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    read_json(&dir.path().join("distance.json"))
}

#[test]
fn distance_between_identical_sources_is_zero() {
    let same = dirac(&[0.0, 0.0]);
    let d = distance_report(&distance_config(2, 8, same.clone(), same, &[0.5, 1.0, 3.0]));
    for r in d["per_rho"].as_array().unwrap() {
        for key in ["hat", "eta_minus", "eta_plus", "oracle"] {
            assert_eq!(r[key].as_f64().unwrap(), 0.0, "{key}");
        }
    }
    let h = &d["hypo_distance"];
    assert_eq!(h["value"].as_f64().unwrap(), 0.0);

    let u = uniform(&[0.0, 0.0], &[1.0, 1.0]);
    let d = distance_report(&distance_config(2, 8, u.clone(), u, &[0.5, 3.0]));
    for r in d["per_rho"].as_array().unwrap() {
        assert_eq!(r["hat"].as_f64().unwrap(), 0.0);
        assert_eq!(r["oracle"].as_f64().unwrap(), 0.0);
        assert_eq!(r["eta_minus"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn dirac_pair_distances_follow_the_piecewise_form() {
    let d = distance_report(&distance_config(1, 1000, dirac(&[1.0]), dirac(&[0.5]), &[0.2, 0.4, 0.8]));
    let rows = d["per_rho"].as_array().unwrap();
    for (r, expect) in rows.iter().zip([0.0, 0.3, 0.5]) {
        let got = r["oracle"].as_f64().unwrap();
        assert!((got - expect).abs() <= 0.01, "rho {}: {got} vs {expect}", r["rho"]);
    }
}

#[test]
fn disjoint_uniforms_saturate_at_one() {
    let d = distance_report(&distance_config(
        2,
        30,
        uniform(&[0.0, 0.0], &[1.0, 1.0]),
        uniform(&[2.0, 2.0], &[3.0, 3.0]),
        &[1.0, 2.0, 4.0],
    ));
    for r in d["per_rho"].as_array().unwrap() {
        let hat = r["hat"].as_f64().unwrap();
        assert!((hat - 1.0).abs() <= 1e-6, "rho {}: {hat}", r["rho"]);
    }
}

#[test]
fn study_needs_two_levels() {
    let dir = TempDir::new().unwrap();
    let mut cfg = small_estimate(0.7);
    let obj = cfg.as_object_mut().unwrap();
    obj.remove("cells_per_axis");
    obj.insert("levels".into(), json!([6]));
    let o = run_config("study", &write_json(dir.path(), "one.json", &cfg), &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn study_reports_every_level_without_sandwich_violations() {
    let dir = TempDir::new().unwrap();
    let mut cfg = small_estimate(0.7);
    let obj = cfg.as_object_mut().unwrap();
    obj.remove("cells_per_axis");
    obj.insert("levels".into(), json!([3, 6]));
    obj.insert("rectangle_budget".into(), json!(20000));
    obj.insert("output_dir".into(), json!("study"));
    let o = run_config("study", &write_json(dir.path(), "two.json", &cfg), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = read_json(&dir.path().join("study/study.json"));
    let levels = s["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 2);
    assert!(levels[0]["distance_to_previous"].is_null());
    assert!(levels[1]["distance_to_previous"]["value"].as_f64().unwrap() >= 0.0);
    assert_eq!(s["sandwich_violations"].as_u64(), Some(0));
}

#[test]
fn validate_small_suite_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({"version": 1, "pairs": 3, "lipschitz_pairs": 3, "cells_per_axis": 5, "output_dir": "v"});
    let o = run_config("validate", &write_json(dir.path(), "v.json", &cfg), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = read_json(&dir.path().join("v/validation.json"));
    assert_eq!(v["sandwich_violations"].as_u64(), Some(0));
    assert_eq!(v["lipschitz_gap_violations"].as_u64(), Some(0));
    assert!(v["failures"].as_array().unwrap().is_empty());
}
