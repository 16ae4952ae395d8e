use std::fmt::Write as _;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::config::{
    BodyCorpus, CalibrateConfig, CzConfig, EmbedConfig, Experiment, ExperimentConfig, FitConfig,
    HaloConfig, JohnConfig, TauberianConfig,
};
use super::corpus::{instance_rng, random_polygon};
use super::manifest::{sha256_hex, Manifest, Staging, Timing};
use crate::convex::{body_counts, john_rectangle, normalize_to_unit_cube, ConvexBody, JohnRect};
use crate::cz::{cz_decompose, maximal_parent_union_bound, DyadicAddress, DyadicRoot};
use crate::embedding::{
    construct_convex_witnesses, john_power, verify_ball_embedding, verify_convex_embedding,
    verify_rect_embedding, ConvexWitness, DeltaChoice, EmbeddingReport, Theorem,
};
use crate::error::{Error, Result};
use crate::grid::{rasterize, GridMask, ShapeSpec, Window};
use crate::maximal::{halo, maximal_field, Basis, BasisKind};
use crate::tauberian::{
    cor1_witness_check, halo_function, holder_quotient, scan, solyanik_fit, Cor1Check,
    TauberianTable,
};

/// Validates `config`, runs it and writes every output plus `manifest.json` into `out`.
/// Relative paths inside the config resolve against `base_dir`.
pub fn run(config: &ExperimentConfig, out: &Path, base_dir: &Path) -> Result<Manifest> {
    config.validate()?;
    let started = Instant::now();
    let started_unix_secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let config_bytes = serde_json::to_vec_pretty(config)?;
    let mut st = Staging::new(out)?;
    st.write("config.json", &config_bytes)?;
    let seed = config.seed;
    let summary = match &config.experiment {
        Experiment::Halo(c) => run_halo(c, &mut st)?,
        Experiment::Czdec(c) => run_czdec(c, &mut st)?,
        Experiment::John(c) => run_john(c, seed, &mut st)?,
        Experiment::Embed(c) => run_embed(c, seed, &mut st)?,
        Experiment::Tauberian(c) => run_tauberian(c, seed, &mut st)?,
        Experiment::Fit(c) => run_fit(c, base_dir, &mut st)?,
        Experiment::Calibrate(c) => run_calibrate(c, seed, &mut st)?,
    };
    st.finish(
        config.kind(),
        sha256_hex(&config_bytes),
        seed,
        summary,
        Timing {
            started_unix_secs,
            wall_seconds: started.elapsed().as_secs_f64(),
        },
    )
}

fn to_map(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("value".into(), other);
            m
        }
    }
}

fn jsonl<T: Serialize>(items: &[T]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for it in items {
        serde_json::to_writer(&mut out, it)?;
        out.push(b'\n');
    }
    Ok(out)
}

fn nonempty_set(shape: &ShapeSpec, w: &Window) -> Result<GridMask> {
    let e = rasterize(shape, w)?;
    if e.is_empty() {
        return Err(Error::EmptySet("the set covers no cell centers".into()));
    }
    Ok(e)
}

fn run_halo(c: &HaloConfig, st: &mut Staging) -> Result<Map<String, Value>> {
    let w = c.window.build()?;
    let e = nonempty_set(&c.set, &w)?;
    st.mask("e", &e)?;
    let mut csv = String::from(
        "alpha,basis,grid_n,e_cells,e_measure,halo_cells,halo_measure,ratio,clamped,touches_boundary\n",
    );
    let mut ratios = Vec::new();
    for (i, &alpha) in c.alphas.iter().enumerate() {
        let h = halo(&e, &c.basis, alpha)?;
        st.mask(&format!("halo_{i:02}"), &h.mask)?;
        let ratio = h.mask.count() as f64 / e.count() as f64;
        ratios.push(ratio);
        writeln!(
            csv,
            "{alpha},{},{},{},{},{},{},{ratio},{},{}",
            c.basis.name(),
            w.max_resolution(),
            e.count(),
            e.measure(),
            h.mask.count(),
            h.mask.measure(),
            h.clamped,
            h.mask.touches_boundary()
        )
        .expect("writing to a String");
    }
    st.write("halo.csv", csv.as_bytes())?;
    if c.export_field {
        let f = maximal_field(&e, &c.basis)?;
        st.field("field", &f.window, &f.values)?;
    }
    Ok(to_map(json!({
        "basis": c.basis.name(),
        "n": w.n(),
        "alphas": c.alphas,
        "ratios": ratios,
    })))
}

fn address_array(a: &DyadicAddress) -> Vec<u64> {
    std::iter::once(a.level as u64).chain(a.index.iter().copied()).collect()
}

fn run_czdec(c: &CzConfig, st: &mut Staging) -> Result<Map<String, Value>> {
    let w = c.window.build()?;
    let e = nonempty_set(&c.set, &w)?;
    let root = DyadicRoot::covering(&w, &c.root)?;
    let d = cz_decompose(&e, &root, c.xi)?;
    let (reps, selected) = maximal_parent_union_bound(&d, &w);
    let bound_holds = reps >= selected / 2f64.powi(w.n() as i32);
    st.mask("e", &e)?;
    st.write_json(
        "cz.json",
        &json!({
            "root": root.rect,
            "depth": root.depth,
            "xi": c.xi,
            "selected": d.selected.iter().map(address_array).collect::<Vec<_>>(),
            "maximal_parents": d.maximal_parents.iter().map(address_array).collect::<Vec<_>>(),
            "selected_measure": selected,
            "representative_measure": reps,
            "parent_bound_holds": bound_holds,
        }),
    )?;
    Ok(to_map(json!({
        "selected": d.selected.len(),
        "maximal_parents": d.maximal_parents.len(),
        "selected_measure": selected,
        "representative_measure": reps,
        "parent_bound_holds": bound_holds,
    })))
}

/// Points of `R` that fall outside `Λ`, and points of `Λ` outside the dilated `R`.
pub fn john_sandwich_violations(
    body: &ConvexBody,
    john: &JohnRect,
    samples: usize,
    rng: &mut impl Rng,
) -> (u64, u64) {
    let n = body.n();
    let r = &john.rect;
    let scale = body.bounding_rect().max_side();
    let tol = 1e-9 * scale;
    let mut inner = 0;
    for _ in 0..samples {
        let mut p = r.center.clone();
        for (u, w) in r.axes.iter().zip(&r.half_widths) {
            let s = rng.random_range(-1.0..=1.0) * w;
            for i in 0..n {
                p[i] += s * u[i];
            }
        }
        if !body.contains_tol(&p, tol) {
            inner += 1;
        }
    }
    let big = r.dilate(john.outer_factor);
    let bb = body.bounding_rect();
    let (mut outer, mut taken) = (0, 0);
    while taken < samples {
        let p: Vec<f64> = (0..n).map(|i| rng.random_range(bb.lo[i]..=bb.hi[i])).collect();
        if !body.contains(&p) {
            continue;
        }
        taken += 1;
        if !big.contains(&p, tol) {
            outer += 1;
        }
    }
    (inner, outer)
}

#[derive(Serialize)]
struct JohnRecord {
    id: usize,
    vertices: usize,
    area: f64,
    rect: crate::convex::OrientedRect,
    outer_factor: f64,
    samples: usize,
    inner_violations: u64,
    outer_violations: u64,
}

fn run_john(c: &JohnConfig, seed: u64, st: &mut Staging) -> Result<Map<String, Value>> {
    let bodies: Vec<ConvexBody> = match &c.bodies {
        BodyCorpus::Bodies { bodies } => bodies.clone(),
        BodyCorpus::RandomPolygons {
            count,
            min_vertices,
            max_vertices,
        } => (0..*count)
            .map(|i| random_polygon(&mut instance_rng(seed, i as u64), *min_vertices, *max_vertices))
            .collect::<Result<_>>()?,
    };
    let records: Vec<JohnRecord> = bodies
        .par_iter()
        .enumerate()
        .map(|(i, b)| {
            let john = john_rectangle(b, c.eps)?;
            let mut rng = instance_rng(seed ^ 0x5a5a_5a5a, i as u64);
            let (inner, outer) = john_sandwich_violations(b, &john, c.samples, &mut rng);
            Ok(JohnRecord {
                id: i,
                vertices: b.vertices().len(),
                area: b.volume(),
                rect: john.rect,
                outer_factor: john.outer_factor,
                samples: c.samples,
                inner_violations: inner,
                outer_violations: outer,
            })
        })
        .collect::<Result<_>>()?;
    st.write("john.jsonl", &jsonl(&records)?)?;
    let mut csv = String::from("id,vertices,area,rect_area,outer_factor,inner_violations,outer_violations\n");
    for r in &records {
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.id,
            r.vertices,
            r.area,
            r.rect.volume(),
            r.outer_factor,
            r.inner_violations,
            r.outer_violations
        )
        .expect("writing to a String");
    }
    st.write("john.csv", csv.as_bytes())?;
    let clean = records
        .iter()
        .filter(|r| r.inner_violations == 0 && r.outer_violations == 0)
        .count();
    Ok(to_map(json!({ "bodies": records.len(), "without_violations": clean })))
}

/// Witness construction outcome, retried once on a finer grid when it fails.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessOutcome {
    pub holds: bool,
    pub refined: bool,
    pub case: Option<String>,
    pub min_slack: Option<f64>,
    pub implied_constant: Option<f64>,
    pub failures: Vec<String>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceOutcome {
    pub id: String,
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub report: Option<EmbeddingReport>,
    /// The same check on the doubled grid, run only when the first one failed.
    pub refined_report: Option<EmbeddingReport>,
    pub cor1: Option<Cor1Check>,
    pub witness: Option<WitnessOutcome>,
    pub error: Option<String>,
}

struct Prepared {
    body: Option<ConvexBody>,
    window: Window,
}

fn prepare(c: &EmbedConfig) -> Result<Prepared> {
    let window = c.window.build()?;
    let body = match (&c.body, c.theorem) {
        (Some(b), Theorem::Convex) if c.normalize => Some(normalize_to_unit_cube(b, 1e-3)?.body),
        (Some(b), Theorem::Convex) => Some(b.clone()),
        _ => None,
    };
    Ok(Prepared { body, window })
}

fn delta_for(c: &EmbedConfig, alpha: f64, n: usize) -> f64 {
    match (c.delta, c.delta_fraction) {
        (Some(d), _) => d,
        (None, Some(f)) => {
            let regime = match c.theorem {
                Theorem::Rect => 1.0 - alpha,
                Theorem::Ball => c.kappa * (1.0 - alpha),
                Theorem::Convex => (1.0 - alpha) / (3.0 * john_power(n)),
            };
            f * regime
        }
        (None, None) => unreachable!("validated config has a δ"),
    }
}

fn check_once(
    c: &EmbedConfig,
    body: Option<&ConvexBody>,
    e: &GridMask,
    alpha: f64,
    delta: f64,
    c_n: f64,
) -> Result<Option<EmbeddingReport>> {
    match c.theorem {
        Theorem::Rect => match c.xi {
            Some(xi) => {
                let basis = c.basis.clone().unwrap_or_else(Basis::strong);
                verify_rect_embedding(e, &basis, alpha, delta, xi, c.slack_cells).map(Some)
            }
            None => Ok(None),
        },
        Theorem::Ball => verify_ball_embedding(e, alpha, delta, c_n, c.kappa, c.slack_cells).map(Some),
        Theorem::Convex => {
            let body = body.expect("convex runs carry a body");
            verify_convex_embedding(e, body, alpha, delta, c_n, c.slack_cells).map(Some)
        }
    }
}

fn witness_for(c: &EmbedConfig, shape: &ShapeSpec, body: &ConvexBody) -> WitnessOutcome {
    let choice = c.witness_delta.unwrap_or(DeltaChoice::FractionOfRegime(1.0));
    let attempt = |g| construct_convex_witnesses(shape, body, choice, g);
    let summarize = |r: &Result<ConvexWitness>, refined: bool| match r {
        Ok(w) => WitnessOutcome {
            holds: w.all_hold(),
            refined,
            case: Some(format!("{:?}", w.case)),
            min_slack: Some(w.min_slack()),
            implied_constant: Some(w.implied_constant),
            failures: w.failures().iter().map(|q| q.name.clone()).collect(),
            error: None,
        },
        Err(e) => WitnessOutcome {
            holds: false,
            refined,
            case: None,
            min_slack: None,
            implied_constant: None,
            failures: Vec::new(),
            error: Some(e.to_string()),
        },
    };
    let first = attempt(c.witness_grid);
    let out = summarize(&first, false);
    if out.holds {
        return out;
    }
    summarize(&attempt(c.witness_grid.refined()), true)
}

/// Runs one corpus instance of an embedding experiment.
pub fn embed_instance(
    c: &EmbedConfig,
    body: Option<&ConvexBody>,
    window: &Window,
    seed: u64,
    index: usize,
    c_n: f64,
) -> InstanceOutcome {
    let id = format!("e{index:03}");
    let mut out = InstanceOutcome {
        id: id.clone(),
        alpha: None,
        delta: None,
        report: None,
        refined_report: None,
        cor1: None,
        witness: None,
        error: None,
    };
    let result = (|| -> Result<()> {
        let shape = c.corpus.instance(window.n(), seed, index, body, window)?;
        let e = nonempty_set(&shape, window)?;
        let alpha = match (c.alpha, body) {
            (Some(a), _) => a,
            (None, Some(b)) => {
                let (hits, cells) = body_counts(&e, b);
                hits as f64 / cells.max(1) as f64
            }
            (None, None) => return Err(Error::Config("α is required".into())),
        };
        let delta = delta_for(c, alpha, window.n());
        out.alpha = Some(alpha);
        out.delta = Some(delta);
        if let Some(r) = check_once(c, body, &e, alpha, delta, c_n)? {
            if !r.inclusion_holds {
                let fine = window.refined(2)?;
                let e2 = nonempty_set(&shape, &fine)?;
                out.refined_report =
                    check_once(c, body, &e2, alpha, delta, c_n)?.map(|r| r.with_id(id.clone()));
            }
            out.report = Some(r.with_id(id.clone()));
        }
        if c.theorem == Theorem::Rect && c.cor1 {
            let basis = c.basis.clone().unwrap_or_else(Basis::strong);
            out.cor1 = Some(cor1_witness_check(&e, &basis, alpha, delta, c.slack_cells)?);
        }
        if c.theorem == Theorem::Convex && c.witnesses {
            out.witness = Some(witness_for(c, &shape, body.expect("convex runs carry a body")));
        }
        Ok(())
    })();
    if let Err(e) = result {
        out.error = Some(e.to_string());
    }
    out
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct EmbedSummary {
    pub theorem: String,
    pub instances: usize,
    pub errors: usize,
    pub inclusion_pass: usize,
    pub inclusion_pass_refined: usize,
    pub measure_pass: usize,
    pub cor1_pass: usize,
    pub witness_pass: usize,
    pub witness_pass_refined: usize,
    pub min_witness_slack: Option<f64>,
    pub max_violations: u64,
    pub slack_cells: usize,
}

pub fn summarize_embed(theorem: Theorem, slack_cells: usize, outs: &[InstanceOutcome]) -> EmbedSummary {
    let mut s = EmbedSummary {
        theorem: format!("{theorem:?}").to_lowercase(),
        instances: outs.len(),
        slack_cells,
        ..Default::default()
    };
    for o in outs {
        s.errors += o.error.is_some() as usize;
        if let Some(r) = &o.report {
            s.max_violations = s.max_violations.max(r.violations);
            s.measure_pass += r.measure_inequality_holds as usize;
            if r.inclusion_holds {
                s.inclusion_pass += 1;
            } else if o.refined_report.as_ref().is_some_and(|r| r.inclusion_holds) {
                s.inclusion_pass_refined += 1;
            }
        }
        if let Some(c) = &o.cor1 {
            s.cor1_pass += c.holds as usize;
        }
        if let Some(w) = &o.witness {
            if w.holds {
                if w.refined {
                    s.witness_pass_refined += 1;
                } else {
                    s.witness_pass += 1;
                }
            }
            if let Some(m) = w.min_slack {
                s.min_witness_slack = Some(s.min_witness_slack.map_or(m, |x: f64| x.min(m)));
            }
        }
    }
    s
}

fn run_embed(c: &EmbedConfig, seed: u64, st: &mut Staging) -> Result<Map<String, Value>> {
    let p = prepare(c)?;
    let outs: Vec<InstanceOutcome> = (0..c.corpus.len())
        .into_par_iter()
        .map(|i| embed_instance(c, p.body.as_ref(), &p.window, seed, i, c.c_n))
        .collect();
    st.write("reports.jsonl", &jsonl(&outs)?)?;
    let s = summarize_embed(c.theorem, c.slack_cells, &outs);
    let mut csv = String::from(
        "theorem,instances,errors,inclusion_pass,inclusion_pass_refined,measure_pass,cor1_pass,witness_pass,witness_pass_refined,min_witness_slack,max_violations,slack_cells\n",
    );
    writeln!(
        csv,
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        s.theorem,
        s.instances,
        s.errors,
        s.inclusion_pass,
        s.inclusion_pass_refined,
        s.measure_pass,
        s.cor1_pass,
        s.witness_pass,
        s.witness_pass_refined,
        s.min_witness_slack.map(|v| v.to_string()).unwrap_or_default(),
        s.max_violations,
        s.slack_cells
    )
    .expect("writing to a String");
    st.write("summary.csv", csv.as_bytes())?;
    Ok(to_map(serde_json::to_value(&s)?))
}

/// Exponent predicted for `Ĉ(α) - 1` near `α = 1`, where one is known.
pub fn target_exponent(basis: &Basis, n: usize) -> Option<f64> {
    match basis.kind {
        BasisKind::Cubes | BasisKind::StrongRects => Some(1.0 / n as f64),
        BasisKind::Balls => Some(1.0 / (n as f64 + 1.0)),
        BasisKind::Convex { .. } => None,
    }
}

fn run_tauberian(c: &TauberianConfig, seed: u64, st: &mut Staging) -> Result<Map<String, Value>> {
    let w = c.window.build()?;
    let mut family = c.family.clone();
    family.seed = seed;
    let table = scan(&w, &c.basis, &c.alphas.values(), &family, c.budget)?;
    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    st.write("table.csv", &csv)?;
    st.write_json("table.json", &table)?;
    for (id, shape) in &table.witnesses {
        st.mask(&format!("witnesses/{id}"), &rasterize(shape, &w)?)?;
    }
    let mut summary = json!({
        "basis": c.basis.name(),
        "family": family.name(),
        "n": w.n(),
        "rows": table.rows.len(),
        "window_limited": table.window_limited.len(),
        "monotone": table.monotone,
        "target_exponent": target_exponent(&c.basis, w.n()),
    });
    if let Some(alpha_min) = c.fit_alpha_min {
        match solyanik_fit(&table, alpha_min) {
            Ok(fit) => {
                st.write_json("fit.json", &fit)?;
                summary["p_hat"] = json!(fit.p);
                summary["r2"] = json!(fit.r2);
            }
            Err(e) => {
                st.write_json("fit.json", &json!({ "error": e.to_string() }))?;
                summary["fit_error"] = json!(e.to_string());
            }
        }
    }
    Ok(to_map(summary))
}

fn run_fit(c: &FitConfig, base_dir: &Path, st: &mut Staging) -> Result<Map<String, Value>> {
    let table: TauberianTable = match (&c.table, &c.points) {
        (Some(p), _) => {
            let path = base_dir.join(p);
            let bytes = std::fs::read(&path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_slice(&bytes)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        (None, Some(points)) => {
            let pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
            TauberianTable::from_points("inline", &pts)
        }
        (None, None) => unreachable!("validated config has a table"),
    };
    let fit = solyanik_fit(&table, c.alpha_min)?;
    let holder = c
        .holder
        .as_ref()
        .map(|h| holder_quotient(&table, h.p, (h.k[0], h.k[1])))
        .transpose()?;
    let phi = c
        .phi_at
        .iter()
        .map(|&a| halo_function(&table, a).map(|v| [a, v]))
        .collect::<Result<Vec<_>>>()?;
    st.write_json(
        "fit.json",
        &json!({ "basis": table.basis, "fit": fit, "holder_quotient": holder, "phi": phi }),
    )?;
    Ok(to_map(json!({
        "basis": table.basis,
        "p_hat": fit.p,
        "r2": fit.r2,
        "rows_used": fit.alphas.len(),
        "holder_quotient": holder,
    })))
}

fn run_calibrate(c: &CalibrateConfig, seed: u64, st: &mut Staging) -> Result<Map<String, Value>> {
    let p = prepare(&c.embed)?;
    let passes = |c_n: f64| -> (usize, usize) {
        let outs: Vec<InstanceOutcome> = (0..c.embed.corpus.len())
            .into_par_iter()
            .map(|i| embed_instance(&c.embed, p.body.as_ref(), &p.window, seed, i, c_n))
            .collect();
        let ok = outs
            .iter()
            .filter(|o| o.report.as_ref().is_some_and(|r| r.inclusion_holds))
            .count();
        (ok, outs.len())
    };
    let mut history = Vec::new();
    let mut record = |c_n: f64| {
        let (ok, total) = passes(c_n);
        history.push(json!({ "c_n": c_n, "passed": ok, "total": total }));
        ok == total
    };
    let c_n = if !record(c.c_min) {
        None
    } else if record(c.c_max) {
        Some(c.c_max)
    } else {
        let (mut lo, mut hi) = (c.c_min, c.c_max);
        for _ in 0..c.iterations {
            let mid = (lo * hi).sqrt();
            if record(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    };
    let theorem = format!("{:?}", c.embed.theorem).to_lowercase();
    st.write_json(
        "calibration.json",
        &json!({ "theorem": theorem, "c_n": c_n, "history": history }),
    )?;
    Ok(to_map(json!({ "theorem": theorem, "c_n": c_n, "evaluations": history.len() })))
}
