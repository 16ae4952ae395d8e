use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::Value;

use super::manifest::Manifest;
use crate::error::{Error, Result};

/// Aggregated view of the experiment directories under one directory.
#[derive(Clone, Debug)]
pub struct Report {
    /// `kind,run,key,value` rows, one per summary entry.
    pub csv: String,
    /// Plain-text tables, one section per experiment kind.
    pub text: String,
    pub runs: usize,
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn get(m: &Manifest, key: &str) -> String {
    m.summary.get(key).map(scalar).unwrap_or_default()
}

/// Reads `dir/manifest.json` and `dir/*/manifest.json`.
pub fn report(dir: &Path) -> Result<Report> {
    if !dir.is_dir() {
        return Err(Error::Format(format!("{} is not a directory", dir.display())));
    }
    let mut runs: Vec<(String, Manifest)> = Vec::new();
    if dir.join("manifest.json").exists() {
        runs.push((".".into(), Manifest::read(dir)?));
    }
    let mut subdirs: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.join("manifest.json").exists())
        .collect();
    subdirs.sort();
    for p in subdirs {
        let name = p
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        runs.push((name, Manifest::read(&p)?));
    }
    if runs.is_empty() {
        return Err(Error::Format(format!("no manifests under {}", dir.display())));
    }

    let mut csv = String::from("kind,run,key,value\n");
    let mut by_kind: BTreeMap<&str, Vec<&(String, Manifest)>> = BTreeMap::new();
    for r in &runs {
        by_kind.entry(r.1.kind.as_str()).or_default().push(r);
        for (k, v) in &r.1.summary {
            let value = scalar(v).replace('"', "\"\"");
            writeln!(csv, "{},{},{},\"{}\"", r.1.kind, r.0, k, value).expect("writing to a String");
        }
    }

    let mut text = String::new();
    for (kind, rs) in &by_kind {
        writeln!(text, "== {kind} ({} run{}) ==", rs.len(), if rs.len() == 1 { "" } else { "s" })
            .expect("writing to a String");
        match *kind {
            "tauberian" | "fit" => {
                writeln!(text, "{:<16} {:<14} {:>3} {:>10} {:>8} {:>8}", "run", "basis", "n", "p_hat", "target", "r2")
                    .expect("writing to a String");
                for (name, m) in rs {
                    writeln!(
                        text,
                        "{:<16} {:<14} {:>3} {:>10} {:>8} {:>8}",
                        name,
                        get(m, "basis"),
                        get(m, "n"),
                        fmt_num(m.summary.get("p_hat")),
                        fmt_num(m.summary.get("target_exponent")),
                        fmt_num(m.summary.get("r2")),
                    )
                    .expect("writing to a String");
                }
            }
            "embed" => {
                writeln!(text, "{:<16} {:<8} {:>9} {:>10} {:>8} {:>8} {:>7}", "run", "theorem", "instances", "inclusion", "refined", "witness", "errors")
                    .expect("writing to a String");
                for (name, m) in rs {
                    let total: f64 = get(m, "instances").parse().unwrap_or(0.0);
                    let pass: f64 = get(m, "inclusion_pass").parse().unwrap_or(0.0);
                    let rate = if total > 0.0 { format!("{:.1}%", 100.0 * pass / total) } else { "-".into() };
                    writeln!(
                        text,
                        "{:<16} {:<8} {:>9} {:>10} {:>8} {:>8} {:>7}",
                        name,
                        get(m, "theorem"),
                        get(m, "instances"),
                        rate,
                        get(m, "inclusion_pass_refined"),
                        get(m, "witness_pass"),
                        get(m, "errors"),
                    )
                    .expect("writing to a String");
                }
            }
            _ => {
                for (name, m) in rs {
                    let entries: Vec<String> = m
                        .summary
                        .iter()
                        .map(|(k, v)| format!("{k}={}", scalar(v)))
                        .collect();
                    writeln!(text, "{name}: {}", entries.join(" ")).expect("writing to a String");
                }
            }
        }
        text.push('\n');
    }
    Ok(Report {
        csv,
        text,
        runs: runs.len(),
    })
}

fn fmt_num(v: Option<&Value>) -> String {
    match v.and_then(Value::as_f64) {
        Some(x) => format!("{x:.4}"),
        None => "-".into(),
    }
}
