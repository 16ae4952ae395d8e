//! The `halo` binary end to end: configs in, manifests and exit codes out.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn halo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halo")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

/// Runs `kind` on `config` into `dir/out` and returns the manifest.
fn run_ok(kind: &str, dir: &Path, config: &str, out: &str, extra: &[&str]) -> Value {
    let cfg = write_config(dir, &format!("{out}.json"), config);
    let out = dir.join(out);
    let mut args = vec![kind, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = halo(&args);
    assert!(o.status.success(), "{kind}: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap()
}

fn checksums(manifest: &Value) -> Vec<(String, String)> {
    manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| (f["path"].as_str().unwrap().into(), f["sha256"].as_str().unwrap().into()))
        .collect()
}

const INTERVAL_HALO: &str = r#"{"kind":"halo","window":{"n":1,"lo":-3.5,"hi":4.5,"cells":1024},
    "basis":{"family":"strong_rects"},"set":{"kind":"rect","lo":[0],"hi":[1]},"alphas":[0.5,0.8]}"#;

const CUBE_TABLE: &str = r#"{"kind":"tauberian","seed":3,"window":{"n":2,"lo":-1,"hi":2,"cells":48},
    "basis":{"family":"strong_rects"},"alphas":[0.5,0.6,0.7,0.8,0.9],
    "family":{"generator":"cube_union","k":2,"side":0.2},"budget":3,"fit_alpha_min":0.5}"#;

#[test]
fn halo_of_an_interval() {
    let tmp = TempDir::new().unwrap();
    let m = run_ok("halo", tmp.path(), INTERVAL_HALO, "interval", &[]);
    assert_eq!(m["kind"], "halo");
    let csv = fs::read_to_string(tmp.path().join("interval/halo.csv")).unwrap();
    let ratios: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(7).unwrap().parse().unwrap())
        .collect();
    assert!((ratios[0] - 3.0).abs() <= 2.0 / 128.0);
    assert!((ratios[1] - 1.5).abs() <= 2.0 / 128.0);
}

#[test]
fn invalid_parameters_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        r#"{"kind":"embed","theorem":"rect","window":{"n":2,"lo":-1,"hi":2,"cells":64},
            "corpus":{"generator":"random_rects","count":2,"max_rects":3},
            "alpha":0.6,"delta":0.2,"xi":0.7}"#,
    );
    let out = tmp.path().join("bad");
    let o = halo(&["embed", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("α < 1−δ < ξ < 1"));
    assert!(!out.join("manifest.json").exists());

    let o = halo(&["tauberian", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reruns_reproduce_every_output() {
    let tmp = TempDir::new().unwrap();
    let a = run_ok("tauberian", tmp.path(), CUBE_TABLE, "a", &[]);
    let b = run_ok("tauberian", tmp.path(), CUBE_TABLE, "b", &["--threads", "1"]);
    assert_eq!(checksums(&a), checksums(&b));
    assert_eq!(a["summary"], b["summary"]);
    let again = run_ok("tauberian", tmp.path(), CUBE_TABLE, "a", &[]);
    assert_eq!(checksums(&a), checksums(&again));
    let reseeded = run_ok("tauberian", tmp.path(), CUBE_TABLE, "c", &["--seed", "4"]);
    assert_eq!(reseeded["seed"], 4);
}

#[test]
fn report_sections_runs_by_kind() {
    let tmp = TempDir::new().unwrap();
    let o = halo(&["report", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    run_ok("halo", tmp.path(), INTERVAL_HALO, "interval", &[]);
    run_ok("tauberian", tmp.path(), CUBE_TABLE, "table", &[]);
    let out = tmp.path().join("summary");
    let o = halo(&["report", tmp.path().to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("== halo (1 run) ==") && text.contains("== tauberian (1 run) =="));
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(csv.starts_with("kind,run,key,value\n") && csv.contains("tauberian,table,"));
}

#[test]
fn the_remaining_subcommands_run() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();

    let table = run_ok("tauberian", dir, CUBE_TABLE, "table", &[]);
    assert!(table["summary"]["rows"].as_u64().unwrap() >= 1);
    let fit = run_ok(
        "fit",
        dir,
        r#"{"kind":"fit","points":[[0.5,2.0],[0.6,1.8],[0.7,1.6],[0.8,1.4],[0.9,1.2]],
            "holder":{"p":1,"k":[0.5,0.9]},"phi_at":[0.3,1.0,2.0]}"#,
        "fit",
        &[],
    );
    let p_hat = fit["summary"]["p_hat"].as_f64().unwrap();
    assert!((p_hat - 1.0).abs() < 1e-9, "p̂ = {p_hat}");

    let cz = run_ok(
        "czdec",
        dir,
        r#"{"kind":"czdec","window":{"n":2,"lo":0,"hi":1,"cells":32},
            "set":{"kind":"ball","center":[0.3,0.3],"radius":0.2},
            "root":{"lo":[0,0],"hi":[1,1]},"xi":0.5}"#,
        "cz",
        &[],
    );
    assert!(cz["summary"]["selected"].as_u64().unwrap() >= 1);

    let john = run_ok(
        "john",
        dir,
        r#"{"kind":"john","seed":1,"samples":500,
            "bodies":{"generator":"random_polygons","count":3,"min_vertices":3,"max_vertices":8}}"#,
        "john",
        &[],
    );
    assert_eq!(john["summary"]["bodies"], 3);

    let embed = run_ok(
        "embed",
        dir,
        r#"{"kind":"embed","theorem":"rect","seed":2,"window":{"n":2,"lo":-1.5,"hi":2.5,"cells":64},
            "corpus":{"generator":"random_rects","count":3,"max_rects":4},
            "alpha":0.6,"delta":0.2,"xi":0.85}"#,
        "embed",
        &[],
    );
    assert_eq!(embed["summary"]["instances"], 3);

    let cal = run_ok(
        "calibrate",
        dir,
        r#"{"kind":"calibrate","seed":2,"c_min":0.001,"c_max":1.0,"iterations":3,
            "embed":{"theorem":"ball","window":{"n":2,"lo":-1.5,"hi":2.5,"cells":64},
                "corpus":{"generator":"random_rects","count":2,"max_rects":3},
                "alpha":0.7,"delta_fraction":0.5}}"#,
        "calibrate",
        &[],
    );
    assert_eq!(cal["kind"], "calibrate");
}
