//! Acceptance suite: prints one `criterion N: PASS|FAIL ...` line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use halo_core::convex::{
    band_cube_in_body, body_counts, inner_band, inner_cube, inner_cube_cells, john_rectangle,
    normalize_to_unit_cube, ConvexBody,
};
use halo_core::cz::{cz_decompose, maximal_parent_union_bound, DyadicAddress, DyadicRoot};
use halo_core::embedding::{
    construct_convex_witnesses, verify_convex_embedding, verify_rect_embedding, ConvexWitness,
    DeltaChoice, WitnessGrid,
};
use halo_core::experiment::{instance_rng, random_ball_cluster, random_polygon, random_rect_union};
use halo_core::grid::{rasterize, CellBox, GridMask, Rect, ShapeSpec, Window};
use halo_core::maximal::{halo_set, Basis};
use halo_core::tauberian::{
    cor1_witness_check, scan, solyanik_fit, CandidateFamily, Generator, TauberianTable,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Halo of `e` over every box of the grid, with `avg > p/q` decided in integers. Boxes
/// with a qualifying average are painted through a difference array.
fn brute_box_halo(e: &GridMask, p: i64, q: i64) -> u64 {
    let w = e.window();
    match w.n() {
        1 => {
            let n = w.resolution()[0];
            let mut pre = vec![0i64; n + 1];
            for i in 0..n {
                pre[i + 1] = pre[i] + e.get(&[i]) as i64;
            }
            let mut diff = vec![0i64; n + 1];
            for a in 0..n {
                for b in a + 1..=n {
                    if q * (pre[b] - pre[a]) > p * (b - a) as i64 {
                        diff[a] += 1;
                        diff[b] -= 1;
                    }
                }
            }
            let mut acc = 0;
            (0..n).filter(|&i| {
                acc += diff[i];
                acc > 0
            })
            .count() as u64
        }
        2 => {
            let (nx, ny) = (w.resolution()[0], w.resolution()[1]);
            let mut pre = vec![vec![0i64; ny + 1]; nx + 1];
            for x in 0..nx {
                for y in 0..ny {
                    pre[x + 1][y + 1] =
                        pre[x][y + 1] + pre[x + 1][y] - pre[x][y] + e.get(&[x, y]) as i64;
                }
            }
            let rows: Vec<Vec<Vec<i64>>> = (0..nx)
                .into_par_iter()
                .map(|x0| {
                    let mut diff = vec![vec![0i64; ny + 1]; nx + 1];
                    for x1 in x0 + 1..=nx {
                        for y0 in 0..ny {
                            for y1 in y0 + 1..=ny {
                                let c = pre[x1][y1] - pre[x0][y1] - pre[x1][y0] + pre[x0][y0];
                                let area = ((x1 - x0) * (y1 - y0)) as i64;
                                if q * c > p * area {
                                    diff[x0][y0] += 1;
                                    diff[x1][y0] -= 1;
                                    diff[x0][y1] -= 1;
                                    diff[x1][y1] += 1;
                                }
                            }
                        }
                    }
                    diff
                })
                .collect();
            let mut diff = vec![vec![0i64; ny + 1]; nx + 1];
            for d in rows {
                for x in 0..=nx {
                    for y in 0..=ny {
                        diff[x][y] += d[x][y];
                    }
                }
            }
            let mut count = 0;
            let mut acc = vec![vec![0i64; ny + 1]; nx + 1];
            for x in 0..nx {
                for y in 0..ny {
                    let left = if x > 0 { acc[x - 1][y] } else { 0 };
                    let down = if y > 0 { acc[x][y - 1] } else { 0 };
                    let diag = if x > 0 && y > 0 { acc[x - 1][y - 1] } else { 0 };
                    acc[x][y] = diff[x][y] + left + down - diag;
                    count += (acc[x][y] > 0) as u64;
                }
            }
            count
        }
        _ => unreachable!("oracle covers n = 1, 2"),
    }
}

fn one_d_window() -> Window {
    Window::uniform(1, -3.5, 4.5, 4096).unwrap()
}

fn interval_family() -> CandidateFamily {
    CandidateFamily::new(Generator::SingleCube { side: 0.25 }, 0)
}

fn criterion_1() -> Outcome {
    let w = one_d_window();
    let alphas = [(0.5, 1, 2), (0.7, 7, 10), (0.9, 9, 10)];
    let grid: Vec<f64> = alphas.iter().map(|a| a.0).collect();
    let table = scan(&w, &Basis::strong(), &grid, &interval_family(), 1).unwrap();
    let mut pass = table.rows.len() == 3;
    let mut parts = Vec::new();
    for (row, &(alpha, p, q)) in table.rows.iter().zip(&alphas) {
        let truth = 2.0 / alpha - 1.0;
        let e = rasterize(&table.witnesses[&row.witness_id], &w).unwrap();
        let brute = brute_box_halo(&e, p, q) as f64 / e.count() as f64;
        let rel = (row.c_hat - truth).abs() / truth;
        pass &= rel < 0.02 && brute == row.c_hat;
        parts.push(format!("Ĉ({alpha})={:.4} vs {truth:.4} (brute {brute:.4})", row.c_hat));
    }
    outcome(pass, parts.join(", "))
}

fn criterion_2() -> Outcome {
    let w = one_d_window();
    let alphas: Vec<f64> = (3..=8).map(|k| 1.0 - 2f64.powi(-k)).collect();
    let table = scan(&w, &Basis::strong(), &alphas, &interval_family(), 1).unwrap();
    match solyanik_fit(&table, 0.0) {
        Ok(fit) => outcome(
            (0.85..=1.15).contains(&fit.p),
            format!("p̂ = {:.4} over {} rows, R² = {:.5}", fit.p, fit.alphas.len(), fit.r2),
        ),
        Err(e) => outcome(false, format!("fit failed: {e}")),
    }
}

fn criterion_3() -> Outcome {
    let square = ShapeSpec::Rect {
        lo: vec![0.0, 0.0],
        hi: vec![1.0, 1.0],
    };
    let truth = 1.0 + 4.0 / 0.8 * (1.0f64 / 0.8).ln();
    let coarse = Window::uniform(2, -0.5, 1.5, 128).unwrap();
    let e128 = rasterize(&square, &coarse).unwrap();
    let engine128 = halo_set(&e128, &Basis::strong(), 0.8).unwrap().count();
    let brute128 = brute_box_halo(&e128, 4, 5);
    let fine = Window::uniform(2, -0.5, 1.5, 512).unwrap();
    let e = rasterize(&square, &fine).unwrap();
    let h = halo_set(&e, &Basis::strong(), 0.8).unwrap();
    let rel = (h.measure() - truth) / truth;
    outcome(
        rel.abs() < 0.02 && engine128 == brute128 && !h.touches_boundary(),
        format!(
            "|H| = {:.4} vs {truth:.4} ({:+.2}%), N=128 engine {engine128} = brute {brute128} cells",
            h.measure(),
            100.0 * rel
        ),
    )
}

fn rect_corpus() -> Vec<ShapeSpec> {
    (0..100)
        .map(|i| random_rect_union(&mut instance_rng(4, i), 2, 8, 0.0, 1.0))
        .collect()
}

fn rect_window(cells: usize) -> Window {
    Window::uniform(2, -1.5, 2.5, cells).unwrap()
}

fn criterion_4() -> Outcome {
    let corpus = rect_corpus();
    let results: Vec<(bool, Option<bool>, String)> = corpus
        .par_iter()
        .map(|s| {
            let run = |cells| {
                let e = rasterize(s, &rect_window(cells)).unwrap();
                verify_rect_embedding(&e, &Basis::strong(), 0.6, 0.2, 0.85, 1)
            };
            match run(256) {
                Ok(r) if r.inclusion_holds => (true, None, String::new()),
                Ok(_) => (false, Some(run(512).is_ok_and(|r| r.inclusion_holds)), String::new()),
                Err(e) => (false, None, e.to_string()),
            }
        })
        .collect();
    let ok = results.iter().filter(|r| r.0).count();
    let failed: Vec<_> = results.iter().filter(|r| !r.0).collect();
    let vanish = failed.iter().filter(|r| r.1 == Some(true)).count();
    let errors: Vec<&str> = failed.iter().filter(|r| !r.2.is_empty()).map(|r| r.2.as_str()).collect();
    outcome(
        ok == 100,
        format!(
            "{ok}/100 hold at N=256 with 1-cell slack; {} failures ({vanish} vanish at N=512){}",
            failed.len(),
            if errors.is_empty() { String::new() } else { format!("; errors: {errors:?}") }
        ),
    )
}

/// Direct cell loop over an address of `root`, clipped to the window.
fn direct_counts(e: &GridMask, root: &DyadicRoot, a: &DyadicAddress) -> (u64, u64) {
    let (lo, hi) = root.cell_range(a);
    let res = e.window().resolution();
    let mut hits = 0;
    let mut cells = 0;
    for x in lo[0]..hi[0] {
        for y in lo[1]..hi[1] {
            cells += 1;
            let inside = x >= 0 && y >= 0 && (x as usize) < res[0] && (y as usize) < res[1];
            if inside && e.get(&[x as usize, y as usize]) {
                hits += 1;
            }
        }
    }
    (hits, cells)
}

fn contains_cell(root: &DyadicRoot, a: &DyadicAddress, c: [i64; 2]) -> bool {
    let (lo, hi) = root.cell_range(a);
    (0..2).all(|i| c[i] >= lo[i] && c[i] < hi[i])
}

fn criterion_5() -> Outcome {
    let w = Window::uniform(2, 0.0, 1.0, 64).unwrap();
    let xi = 0.85;
    let failures: Vec<String> = (0..100u64)
        .into_par_iter()
        .filter_map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = GridMask::from_fn(&w, |_| rng.random_bool(0.3));
            let root = DyadicRoot::new(&w, &w.bounds()).unwrap();
            let d = cz_decompose(&e, &root, xi).unwrap();
            let mut bad = Vec::new();
            for s in &d.selected {
                let (h, c) = direct_counts(&e, &root, s);
                if h as f64 / c as f64 <= xi {
                    bad.push("(ii)");
                }
                let mut a = s.clone();
                while let Some(p) = a.parent() {
                    let (h, c) = direct_counts(&e, &root, &p);
                    if h as f64 / c as f64 > xi {
                        bad.push("(iii)");
                    }
                    a = p;
                }
            }
            let mut owner = vec![0u32; w.len()];
            for s in &d.selected {
                let (lo, hi) = root.cell_range(s);
                for x in lo[0]..hi[0] {
                    for y in lo[1]..hi[1] {
                        owner[w.linear(&[x as usize, y as usize])] += 1;
                    }
                }
            }
            if owner.iter().any(|&k| k > 1) {
                bad.push("overlap");
            }
            if (0..w.len()).any(|l| e.get_linear(l) && owner[l] == 0) {
                bad.push("(i)");
            }
            for p in &d.maximal_parents {
                if d.maximal_parents.iter().any(|q| q != p && p.within(q)) {
                    bad.push("maximality");
                }
            }
            for s in &d.selected {
                let p = s.parent().unwrap();
                if !d.maximal_parents.iter().any(|m| p.within(m)) {
                    bad.push("parent not under a maximal parent");
                }
            }
            let union_cells = owner.iter().filter(|&&k| k > 0).count() as f64;
            let reps: f64 = d
                .maximal_parents
                .iter()
                .map(|m| {
                    let child = d.selected.iter().find(|s| s.parent().as_ref() == Some(m));
                    child.map_or(0.0, |c| root.cells_of(c) as f64)
                })
                .sum();
            if reps < union_cells / 4.0 {
                bad.push("parent bound");
            }
            let (lib_reps, lib_all) = maximal_parent_union_bound(&d, &w);
            let cv = w.cell_volume();
            if (lib_reps - reps * cv).abs() > 1e-12 || (lib_all - union_cells * cv).abs() > 1e-12 {
                bad.push("bound bookkeeping");
            }
            let _ = contains_cell(&root, &DyadicAddress::root(2), [0, 0]);
            (!bad.is_empty()).then(|| format!("seed {seed}: {bad:?}"))
        })
        .collect();
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "100/100 decompositions satisfy (i)(ii)(iii), disjointness, maximality and the 2^-n parent bound".into()
        } else {
            failures.join("; ")
        },
    )
}

/// Membership in a convex polygon given by its vertices in cyclic order.
fn in_polygon(v: &[Vec<f64>], p: &[f64], tol: f64) -> bool {
    let k = v.len();
    let area: f64 = (0..k)
        .map(|i| v[i][0] * v[(i + 1) % k][1] - v[(i + 1) % k][0] * v[i][1])
        .sum();
    let orient = area.signum();
    (0..k).all(|i| {
        let (a, b) = (&v[i], &v[(i + 1) % k]);
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        orient * cross / len >= -tol
    })
}

fn criterion_6() -> Outcome {
    let factor = 2f64.powf(1.5) * (1.0 + 1e-3);
    let results: Vec<(u64, u64)> = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let body = random_polygon(&mut instance_rng(6, i), 5, 12).unwrap();
            let john = john_rectangle(&body, 1e-3).unwrap();
            let r = &john.rect;
            let v = body.vertices();
            let tol = 1e-9;
            let mut rng = instance_rng(60, i);
            let mut inner = 0;
            for _ in 0..10_000 {
                let s = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
                let p: Vec<f64> = (0..2)
                    .map(|k| {
                        r.center[k]
                            + s[0] * r.half_widths[0] * r.axes[0][k]
                            + s[1] * r.half_widths[1] * r.axes[1][k]
                    })
                    .collect();
                inner += !in_polygon(v, &p, tol) as u64;
            }
            let bb = body.bounding_rect();
            let mut outer = 0;
            let mut taken = 0;
            while taken < 10_000 {
                let p = vec![
                    rng.random_range(bb.lo[0]..=bb.hi[0]),
                    rng.random_range(bb.lo[1]..=bb.hi[1]),
                ];
                if !in_polygon(v, &p, 0.0) {
                    continue;
                }
                taken += 1;
                let l = r.local(&p);
                outer += (0..2).any(|k| l[k].abs() > factor * r.half_widths[k] + tol) as u64;
            }
            (inner, outer)
        })
        .collect();
    let inner: u64 = results.iter().map(|r| r.0).sum();
    let outer: u64 = results.iter().map(|r| r.1).sum();
    outcome(
        inner == 0 && outer == 0,
        format!("50 polygons × 2·10⁴ samples: {inner} points of R outside Λ, {outer} points of Λ outside 2^1.5(1+1e-3)R"),
    )
}

fn criterion_7() -> Outcome {
    let unit = Rect::new(vec![0.0], vec![1.0]).unwrap();
    let t = inner_cube(&unit, 0.5, 0.25).unwrap().t_min;
    let exact = (t - 0.8).abs() < 1e-15;
    let mut sweep_ok = true;
    let mut sweep_n = 0;
    for n in 1..=3 {
        for ai in 1..100 {
            let alpha = ai as f64 / 100.0;
            let m = alpha.min(1.0 - alpha);
            for ei in 1..20 {
                let eps = m * ei as f64 / 20.0;
                let r = Rect::new(vec![0.0; n], vec![1.0; n]).unwrap();
                let t = inner_cube(&r, alpha, eps).unwrap().t_min;
                sweep_ok &= t > 0.0 && t < 1.0;
                sweep_n += 1;
            }
        }
    }
    let w = Window::uniform(2, -2.0, 3.0, 320).unwrap();
    let band: Vec<Result<(bool, bool), String>> = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = instance_rng(7, i);
            let raw = random_polygon(&mut rng, 5, 12).map_err(|e| e.to_string())?;
            let body = normalize_to_unit_cube(&raw, 1e-3).map_err(|e| e.to_string())?.body;
            let shape = random_ball_cluster(&mut rng, &body, 5, [0.2, 0.5], [0.3, 0.7], &w)
                .map_err(|e| e.to_string())?;
            let e = rasterize(&shape, &w).unwrap();
            let (hits, cells) = body_counts(&e, &body);
            let alpha = hits as f64 / cells as f64;
            let eps = 0.5 * alpha.min(1.0 - alpha);
            let found = band_cube_in_body(&e, &body, alpha, eps).map_err(|e| e.to_string())?;
            let cube = &found.cube;
            // Verify on a grid where R spans 64 cells per side.
            let r = &cube.rect;
            let fine = Window::new(r.lo.clone(), vec![r.side(0), r.side(1)], vec![64, 64]).unwrap();
            let ef = rasterize(&shape, &fine).unwrap();
            let avg_r = ef.count() as f64 / fine.len() as f64;
            let ic = inner_cube_cells(&fine, &fine.full_box(), alpha, eps).map_err(|e| e.to_string())?;
            let inner: CellBox = ic.cells.clone().unwrap();
            let mut hits_in = 0u64;
            for x in inner.lo[0]..inner.hi[0] {
                for y in inner.lo[1]..inner.hi[1] {
                    hits_in += ef.get(&[x, y]) as u64;
                }
            }
            let avg = hits_in as f64 / inner.cells() as f64;
            let (lo, hi) = inner_band(alpha, eps);
            let outside = (cube.band.0 - avg_r).max(avg_r - cube.band.1).max(0.0);
            let slack = outside * ic.ratio;
            let holds = avg >= lo - slack && avg <= hi + slack && ic.ratio <= ic.ratio_bound;
            Ok((holds, outside > 0.0))
        })
        .collect();
    let held = band.iter().filter(|r| matches!(r, Ok((true, _)))).count();
    let off_band = band.iter().filter(|r| matches!(r, Ok((_, true)))).count();
    let errors: Vec<&String> = band.iter().filter_map(|r| r.as_ref().err()).collect();
    outcome(
        exact && sweep_ok && held == 50,
        format!(
            "t_o(0.5, 0.25, 1) = {t}; {sweep_n} sweep points in (0,1): {sweep_ok}; inner band {held}/50 ({off_band} with R off-band by a jump){}",
            if errors.is_empty() { String::new() } else { format!(" errors: {errors:?}") }
        ),
    )
}

fn criterion_8() -> Outcome {
    let corpus = rect_corpus();
    let results: Vec<Result<bool, String>> = corpus
        .par_iter()
        .map(|s| {
            let e = rasterize(s, &rect_window(256)).unwrap();
            cor1_witness_check(&e, &Basis::strong(), 0.6, 0.2, 1)
                .map(|c| c.holds)
                .map_err(|e| e.to_string())
        })
        .collect();
    let ok = results.iter().filter(|r| matches!(r, Ok(true))).count();
    outcome(ok == 100, format!("{ok}/100 satisfy |H_α(E)| ≤ |H_α(1+δ/4)(H_1−δ(E))|"))
}

struct ConvexInstance {
    inclusion: Result<bool, String>,
    witness: Result<ConvexWitness, String>,
    refined: Option<Result<ConvexWitness, String>>,
}

fn witness_holds(w: &Result<ConvexWitness, String>) -> bool {
    w.as_ref().is_ok_and(|w| w.all_hold())
}

fn criterion_9() -> Outcome {
    let w = Window::uniform(2, -4.0, 5.0, 288).unwrap();
    let runs: Vec<ConvexInstance> = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let (body, shape) = disc_cluster(i, &w);
            let e = rasterize(&shape, &w).unwrap();
            let (hits, cells) = body_counts(&e, &body);
            let alpha = hits as f64 / cells as f64;
            let inclusion = verify_convex_embedding(&e, &body, alpha, (1.0 - alpha) / 48.0, 0.005, 1)
                .map(|r| r.inclusion_holds)
                .map_err(|e| e.to_string());
            let attempt = |g| {
                construct_convex_witnesses(&shape, &body, DeltaChoice::FractionOfRegime(1.0), g)
                    .map_err(|e| e.to_string())
            };
            let witness = attempt(WitnessGrid::default());
            let refined = (!witness_holds(&witness)).then(|| attempt(WitnessGrid::default().refined()));
            ConvexInstance {
                inclusion,
                witness,
                refined,
            }
        })
        .collect();
    let incl = runs.iter().filter(|r| matches!(r.inclusion, Ok(true))).count();
    let wit = runs.iter().filter(|r| witness_holds(&r.witness)).count();
    let vanish = runs
        .iter()
        .filter(|r| r.refined.as_ref().is_some_and(witness_holds))
        .count();
    let delta_matches = runs.iter().all(|r| match &r.witness {
        Ok(w) => ((w.delta - (1.0 - w.alpha) / 48.0) / w.delta).abs() < 1e-9,
        Err(_) => true,
    });
    let cases = runs
        .iter()
        .filter_map(|r| r.witness.as_ref().ok())
        .filter(|w| w.case == halo_core::embedding::WitnessCase::DilateLeavesCube)
        .count();
    let errs: Vec<String> = runs
        .iter()
        .filter_map(|r| r.inclusion.as_ref().err().cloned())
        .collect();
    outcome(
        incl == 50 && wit >= 45 && wit + vanish == 50 && delta_matches,
        format!(
            "inclusion {incl}/50; witnesses {wit}/50 ({cases} dilate-leaves-cube), {vanish} more at doubled grid; δ = (1−α)/48: {delta_matches}{}",
            if errs.is_empty() { String::new() } else { format!("; errors: {errs:?}") }
        ),
    )
}

fn disc_cluster(i: u64, probe: &Window) -> (ConvexBody, ShapeSpec) {
    let mut rng = instance_rng(9, i);
    let k = if i.is_multiple_of(2) { 6 } else { 3 };
    let raw = ConvexBody::regular_polygon(k, [0.0, 0.0], 1.0, rng.random_range(0.0..1.0)).unwrap();
    let body = normalize_to_unit_cube(&raw, 1e-3).unwrap().body;
    let shape = random_ball_cluster(&mut rng, &body, 5, [0.2, 0.5], [0.4, 0.6], probe).unwrap();
    (body, shape)
}

fn criterion_10() -> Outcome {
    let probe = Window::uniform(2, -4.0, 5.0, 288).unwrap();
    let changes: Vec<f64> = (0..50u64)
        .into_par_iter()
        .flat_map_iter(|i| {
            let (body, shape) = disc_cluster(i, &probe);
            [Basis::balls(), Basis::convex(body)].map(|basis| {
                let m = |cells| {
                    let e = rasterize(&shape, &Window::uniform(2, -4.0, 5.0, cells).unwrap()).unwrap();
                    halo_set(&e, &basis, 0.6).unwrap().measure()
                };
                let (a, b) = (m(576), m(1152));
                (b - a).abs() / b
            })
        })
        .collect();
    let worst = changes.iter().cloned().fold(0.0, f64::max);
    let rect_changes: Vec<f64> = rect_corpus()
        .par_iter()
        .map(|s| {
            let m = |cells| {
                let e = rasterize(s, &rect_window(cells)).unwrap();
                halo_set(&e, &Basis::strong(), 0.6).unwrap().measure()
            };
            let (a, b) = (m(256), m(512));
            (b - a).abs() / b
        })
        .collect();
    let rect_worst = rect_changes.iter().cloned().fold(0.0, f64::max);
    let mut fit_err = 0.0f64;
    for (p, k) in [(0.5, 1.0), (1.0, 2.0), (1.0 / 3.0, 0.7), (2.0, 0.1)] {
        let pts: Vec<(f64, f64)> = (2..=10)
            .map(|j| {
                let a = 1.0 - 2f64.powi(-j);
                (a, 1.0 + k * (1.0 - a).powf(p))
            })
            .collect();
        let fit = solyanik_fit(&TauberianTable::from_points("planted", &pts), 0.0).unwrap();
        fit_err = fit_err.max((fit.p - p).abs());
    }
    outcome(
        worst < 0.01 && fit_err < 1e-6,
        format!(
            "largest ball/convex halo change N=576→1152 over 50 disc clusters: {:.3}% (strong-rectangle corpus N=256→512, not gated: {:.1}%); planted-exponent error {fit_err:.1e}. Not reproduced at desk scale: two-sided n ≥ 2 asymptotics of the Solyanik rate (extremal families live elsewhere) and improving the ball exponent 1/(n+1)",
            100.0 * worst,
            100.0 * rect_worst
        ),
    )
}

type Criterion = (u32, fn() -> Outcome, Option<u64>);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, criterion_1, Some(10)),
        (2, criterion_2, Some(30)),
        (3, criterion_3, Some(60)),
        (4, criterion_4, Some(600)),
        (5, criterion_5, Some(60)),
        (6, criterion_6, Some(60)),
        (7, criterion_7, None),
        (8, criterion_8, None),
        (9, criterion_9, Some(900)),
        (10, criterion_10, None),
    ];
    let only: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut all = true;
    for (id, f, limit) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let o = f();
        let took = t.elapsed();
        let in_time = limit.is_none_or(|s| took <= Duration::from_secs(s));
        let pass = o.pass && in_time;
        all &= pass;
        let budget = limit.map(|s| format!(" < {s} s")).unwrap_or_default();
        println!(
            "criterion {id}: {} {} [{:.1} s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
