//! End-to-end runs of the `tat` binary on small grids.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn tat(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tat")).args(args).current_dir(cwd).output().expect("tat runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn base(name: &str, arcs: Value) -> Value {
    json!({
        "name": name,
        "output": format!("runs/{name}"),
        "seed": 3,
        "grid": { "lower": -1.5, "upper": 1.5, "cells": 48 },
        "speed": { "kind": "constant", "value": 1.0 },
        "region": { "kind": "disk", "center": [0.0, 0.0], "radius": 1.0 },
        "patch": { "arcs": arcs },
        "phantom": { "bumps": [{ "center": [0.2, 0.1], "radius": 0.35, "amplitude": 1.0 }] },
        "solver": { "t_max": 1.2 },
        "inversion": { "iterations": 8 }
    })
}

fn write_config(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

/// Every file under `dir` except the wall-clock timings, with contents.
fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "timings.json" {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn full_boundary_coverage_prints_the_summary_line() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "full", &base("full", json!([[0.0, 1.0]])));
    let o = tat(&["coverage", cfg.to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("property_p: satisfied, tMin = "), "{}", stdout(&o));
    let manifest: Value =
        serde_json::from_slice(&fs::read(tmp.path().join("runs/full/coverage/manifest.json")).unwrap()).unwrap();
    assert!(manifest["inputs"].as_object().unwrap().len() == 1);
    assert!(manifest["outputs"].get("report.json").is_some());
}

#[test]
fn empty_patch_is_violated() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "empty", &base("empty", json!([])));
    let o = tat(&["coverage", cfg.to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("property_p: violated"), "{}", stdout(&o));
}

#[test]
fn config_errors_name_the_key_and_exit_2() {
    let tmp = TempDir::new().unwrap();
    let mut v = base("bad", json!([[0.0, 0.5]]));
    v["solver"]["cfl"] = json!(0.5);
    let cfg = write_config(tmp.path(), "bad", &v);
    let o = tat(&["simulate", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("solver.cfl"), "{}", stderr(&o));

    fs::write(&cfg, "{\n  \"name\": \"x\",\n  oops\n}").unwrap();
    let o = tat(&["simulate", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let good = write_config(tmp.path(), "good", &base("good", json!([[0.0, 0.5]])));
    let o = tat(&["coverage", good.to_str().unwrap(), "novalue"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn downstream_commands_ask_for_simulate_first() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "fresh", &base("fresh", json!([[0.0, 0.75]])));
    for command in ["reconstruct", "verify-dod"] {
        let o = tat(&[command, cfg.to_str().unwrap()], tmp.path());
        assert_eq!(o.status.code(), Some(2));
        assert!(stderr(&o).contains("run `tat simulate`"), "{}", stderr(&o));
    }
}

#[test]
fn corrupted_distance_file_fails_the_lipschitz_check() {
    let tmp = TempDir::new().unwrap();
    let mut v = base("dist", json!([[0.0, 1.0]]));
    v["distance"] = json!({ "sources": [[0.0, 0.0]], "oracle": true });
    let cfg = write_config(tmp.path(), "dist", &v);
    let o = tat(&["distance", cfg.to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("lipschitz: pass"), "{text}");
    let line = text.lines().find(|l| l.starts_with("oracle: max discrepancy = ")).expect("oracle line");
    let value: f64 = line["oracle: max discrepancy = ".len()..].split_whitespace().next().unwrap().parse().unwrap();
    assert!(value > 0.0 && value < 3.0 * 3.0 / 48.0, "{line}");

    // Spike one node of the stored field and run the check-only mode on it.
    let stem = tmp.path().join("runs/dist/distance/distance");
    let data = stem.with_extension("f64");
    let mut bytes = fs::read(&data).unwrap();
    let k = 8 * (30 * 49 + 30);
    let spiked = f64::from_le_bytes(bytes[k..k + 8].try_into().unwrap()) + 0.5;
    bytes[k..k + 8].copy_from_slice(&spiked.to_le_bytes());
    let copy = tmp.path().join("corrupt");
    fs::create_dir_all(&copy).unwrap();
    fs::write(copy.join("distance.f64"), &bytes).unwrap();
    let mut meta: Value = serde_json::from_slice(&fs::read(stem.with_extension("json")).unwrap()).unwrap();
    meta["checksum"] = json!(tat_core::field::io::sha256_hex(&bytes));
    fs::write(copy.join("distance.json"), serde_json::to_string(&meta).unwrap()).unwrap();

    let o = tat(
        &["distance", cfg.to_str().unwrap(), "distance.check=corrupt/distance", "distance.oracle=false"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stdout(&o).contains("lipschitz: fail at ("), "{}", stdout(&o));
}

#[test]
fn pipeline_is_deterministic_and_report_orders_by_residual() {
    let tmp = TempDir::new().unwrap();
    let wide = write_config(tmp.path(), "wide", &base("wide", json!([[0.0, 0.625], [0.875, 1.0]])));
    let narrow = write_config(tmp.path(), "narrow", &base("narrow", json!([[0.125, 0.375]])));
    let run = |cfg: &Path| {
        for command in ["coverage", "simulate", "verify-dod", "uc", "reconstruct"] {
            let o = tat(&[command, cfg.to_str().unwrap()], tmp.path());
            assert!(o.status.success(), "{command}: {}{}", stdout(&o), stderr(&o));
        }
    };
    run(&wide);
    let first = snapshot(&tmp.path().join("runs/wide"));
    run(&wide);
    assert_eq!(first, snapshot(&tmp.path().join("runs/wide")));
    run(&narrow);

    let o = tat(&["report", narrow.to_str().unwrap(), wide.to_str().unwrap(), "--out", "cmp"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("cmp/report.csv")).unwrap();
    let rows: Vec<(String, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_owned(), f[6].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].1 <= rows[1].1, "{csv}");
    assert!(tmp.path().join("cmp/manifest.json").is_file());
}
