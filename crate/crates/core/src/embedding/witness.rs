use serde::{Deserialize, Serialize};

use super::{john_power, vitali_select};
use crate::convex::{band_cube_in_body, body_counts, inner_band, ConvexBody};
use crate::cz::{cz_decompose, band_limits, DyadicAddress, DyadicRoot};
use crate::error::{Error, Result};
use crate::grid::{for_each_cell, rasterize, CellBox, GridMask, Rect, ShapeSpec, Window};

/// How `δ` is chosen once `α` is measured on the raster.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum DeltaChoice {
    Value(f64),
    /// This fraction of the largest admissible `δ`.
    FractionOfRegime(f64),
}

/// Grids used by the construction: a dyadic search grid with `2^search_log2` cells per unit,
/// and a verification grid on which the inner cube spans `2^inner_log2` cells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessGrid {
    pub search_log2: u32,
    pub inner_log2: u32,
}

impl Default for WitnessGrid {
    fn default() -> Self {
        WitnessGrid {
            search_log2: 6,
            inner_log2: 5,
        }
    }
}

impl WitnessGrid {
    pub fn refined(self) -> Self {
        WitnessGrid {
            search_log2: self.search_log2 + 1,
            inner_log2: self.inner_log2 + 1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Inequality {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Nonnegative iff the inequality holds.
    pub slack: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessCase {
    /// Some dilated CZ cube leaves `R`: one body is grown inside `Λ`.
    DilateLeavesCube,
    /// Every dilated CZ cube stays in `R`: disjoint bodies from a Vitali subfamily.
    DilatesInsideCube,
}

/// `x -> factor·x + shift` applied to `Λ`, with its raster statistics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessBody {
    pub role: String,
    pub factor: f64,
    pub shift: Vec<f64>,
    pub cells: u64,
    pub average: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvexWitness {
    pub alpha: f64,
    pub delta: f64,
    pub eps: f64,
    pub case: WitnessCase,
    pub grid: Window,
    pub band_cube: Rect,
    pub inner_cube: Rect,
    pub cz_cubes: Vec<Rect>,
    /// Indices into `cz_cubes` that carry a body.
    pub chosen: Vec<usize>,
    pub bodies: Vec<WitnessBody>,
    pub inequalities: Vec<Inequality>,
    /// `|(∪ bodies) \ E| / |Λ|`: guaranteed increase of the middle halo's average over `Λ`.
    pub gain: f64,
    /// `gain / (α min(α,1-α)^{2n} δ)`, the constant of the statement's form.
    pub implied_constant: f64,
    /// The constant in the form proved for the case taken.
    pub implied_case_constant: f64,
}

impl ConvexWitness {
    pub fn all_hold(&self) -> bool {
        self.inequalities.iter().all(|q| q.slack >= 0.0)
    }

    pub fn min_slack(&self) -> f64 {
        self.inequalities
            .iter()
            .map(|q| q.slack)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn failures(&self) -> Vec<&Inequality> {
        self.inequalities.iter().filter(|q| q.slack < 0.0).collect()
    }
}

struct Ledger(Vec<Inequality>);

impl Ledger {
    /// Records `lhs <= rhs`.
    fn le(&mut self, name: &str, lhs: f64, rhs: f64) {
        self.0.push(Inequality {
            name: name.into(),
            lhs,
            rhs,
            slack: rhs - lhs + 1e-12 * lhs.abs().max(rhs.abs()).max(1.0),
        });
    }

    /// Records `lhs > rhs`; equality counts as a failure.
    fn gt(&mut self, name: &str, lhs: f64, rhs: f64) {
        let slack = if lhs > rhs { lhs - rhs } else { (lhs - rhs).min(-f64::MIN_POSITIVE) };
        self.0.push(Inequality {
            name: name.into(),
            lhs,
            rhs,
            slack,
        });
    }
}

/// Largest `δ` allowed by the construction's regime.
pub fn delta_regime(alpha: f64, n: usize) -> f64 {
    let eps = 0.5 * alpha.min(1.0 - alpha);
    0.5 * (1.0 - alpha / (1.0 - eps)).min((1.0 - alpha) / (3.0 * john_power(n)))
}

fn dyadic_window(body: &ConvexBody, h: f64) -> Result<Window> {
    let bb = body.bounding_rect();
    let n = body.n();
    let lo: Vec<f64> = (0..n).map(|i| ((bb.lo[i] / h).floor() - 1.0) * h).collect();
    let cells: Vec<usize> = (0..n)
        .map(|i| ((bb.hi[i] - lo[i]) / h).ceil() as usize + 1)
        .collect();
    Window::new(lo, cells.iter().map(|&c| c as f64 * h).collect(), cells)
}

fn stats(e: &GridMask, body: &ConvexBody) -> (u64, f64) {
    let (hits, cells) = body_counts(e, body);
    let avg = if cells == 0 { f64::NAN } else { hits as f64 / cells as f64 };
    (cells, avg)
}

/// Homothety of `Λ` shrunk by `1/c` about the center of `cube`, where `Λ ⊆ c·[0,1]^n`.
fn small_map(cube: &Rect, c: f64) -> (f64, Vec<f64>) {
    let s = cube.side(0);
    let f = s / c;
    let shift = (0..cube.n())
        .map(|i| cube.lo[i] + 0.5 * s - f * 0.5)
        .collect();
    (f, shift)
}

fn lerp_map(a: &(f64, Vec<f64>), b: &(f64, Vec<f64>), t: f64) -> (f64, Vec<f64>) {
    (
        (1.0 - t) * a.0 + t * b.0,
        a.1.iter().zip(&b.1).map(|(x, y)| (1.0 - t) * x + t * y).collect(),
    )
}

/// Bisection along the homothety path from `from` (average above `target`) to `to`
/// (average at most `target`). Returns the maps just above and just below the crossing.
fn crossing(
    e: &GridMask,
    body: &ConvexBody,
    from: &(f64, Vec<f64>),
    to: &(f64, Vec<f64>),
    target: f64,
) -> ((f64, Vec<f64>), (f64, Vec<f64>)) {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let m = lerp_map(from, to, mid);
        let (cells, avg) = stats(e, &body.homothety(m.0, &m.1));
        if cells > 0 && avg > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lerp_map(from, to, lo), lerp_map(from, to, hi))
}

/// Signed distance by which `inner`'s vertices stay inside the rectangle `r`.
fn rect_margin(r: &Rect, body: &ConvexBody) -> f64 {
    body.vertices()
        .iter()
        .flat_map(|v| (0..r.n()).flat_map(move |i| [v[i] - r.lo[i], r.hi[i] - v[i]]))
        .fold(f64::INFINITY, f64::min)
}

/// Signed distance by which `inner`'s vertices stay inside `outer`.
fn body_margin(outer: &ConvexBody, points: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .flat_map(|p| {
            outer
                .halfspaces()
                .map(move |(a, b)| b - a.iter().zip(p).map(|(x, y)| x * y).sum::<f64>())
        })
        .fold(f64::INFINITY, f64::min)
}

fn witness_body(
    e: &GridMask,
    body: &ConvexBody,
    role: &str,
    m: &(f64, Vec<f64>),
) -> (ConvexBody, WitnessBody) {
    let b = body.homothety(m.0, &m.1);
    let (cells, average) = stats(e, &b);
    (
        b,
        WitnessBody {
            role: role.into(),
            factor: m.0,
            shift: m.1.clone(),
            cells,
            average,
        },
    )
}

/// Builds the bodies of the convex embedding argument for `E` inside a normalized `Λ`
/// (`[0,1]^n ⊆ Λ`) and re-checks every inequality of the chain on the raster.
pub fn construct_convex_witnesses(
    e_shape: &ShapeSpec,
    body: &ConvexBody,
    delta: DeltaChoice,
    grid: WitnessGrid,
) -> Result<ConvexWitness> {
    let n = body.n();
    if e_shape.n() != Some(n) {
        return Err(Error::DegenerateShape("E and Λ dimensions differ".into()));
    }
    let unit = Rect::new(vec![0.0; n], vec![1.0; n])?;
    if !body.contains_rect(&unit, 1e-9) {
        return Err(Error::Precondition(
            "Λ must be normalized so that [0,1]^n ⊆ Λ".into(),
        ));
    }
    let containment = body
        .vertices()
        .iter()
        .flat_map(|v| v.iter().map(|x| 2.0 * (x - 0.5).abs()))
        .fold(0.0, f64::max);
    let np = john_power(n);
    let dil = 4.0 * (n as f64).powf(1.5);

    // Search grid: locate the band cube R.
    let w1 = dyadic_window(body, 2f64.powi(-(grid.search_log2 as i32)))?;
    let e1 = rasterize(e_shape, &w1)?;
    let (c1, a1) = stats(&e1, body);
    if c1 == 0 || !(a1 > 0.0 && a1 < 1.0) {
        return Err(Error::Precondition(format!(
            "E must have average in (0, 1) over Λ, got {a1}"
        )));
    }
    let eps1 = 0.5 * a1.min(1.0 - a1);
    let found = band_cube_in_body(&e1, body, a1, eps1)?;
    let r = found.cube.rect;
    let s = r.side(0);

    // Verification grid: R spans K cells and the concentric R^in spans 2^j cells.
    let ratio_bound = |a: f64, ep: f64| {
        0.5 * ((1.0 - ep + a) / a).min((2.0 - ep - a) / (1.0 - a))
    };
    let t_o = ratio_bound(a1, eps1).powf(-1.0 / n as f64);
    let t_target = t_o + 0.5 * (1.0 - t_o);
    let need = (2.0 / (1.0 / t_target - 1.0)).ceil() as usize;
    let inner = (1usize << grid.inner_log2).max(need.next_power_of_two());
    let k = ((inner as f64 / t_target).floor() as usize).max(inner + 1);
    let h2 = s / k as f64;
    let bb = body.bounding_rect();
    let lo: Vec<f64> = (0..n)
        .map(|i| r.lo[i] - (((r.lo[i] - bb.lo[i]) / h2).ceil() + 1.0) * h2)
        .collect();
    let cells: Vec<usize> = (0..n)
        .map(|i| ((bb.hi[i] - lo[i]) / h2).ceil() as usize + 1)
        .collect();
    let w2 = Window::new(lo, cells.iter().map(|&c| c as f64 * h2).collect(), cells)?;
    let e = rasterize(e_shape, &w2)?;
    let (cells_l, alpha) = stats(&e, body);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Precondition(format!("average over Λ is {alpha}")));
    }
    let eps = 0.5 * alpha.min(1.0 - alpha);
    let regime = delta_regime(alpha, n);
    let delta = match delta {
        DeltaChoice::Value(d) => d,
        DeltaChoice::FractionOfRegime(f) => f * regime,
    };
    if !(delta > 0.0) || delta > regime * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "δ = {delta} is outside the regime (0, {regime:.6}]"
        )));
    }
    let (band_lo, band_hi) = band_limits(alpha, eps)?;
    let mut q = Ledger(Vec::new());

    let r_box = w2.snap(&r).ok_or(Error::DegenerateQuery)?;
    let off = (k - inner) / 2;
    let rin_box = CellBox::new(
        r_box.lo.iter().map(|l| l + off).collect(),
        r_box.lo.iter().map(|l| l + off + inner).collect(),
    );
    let rin = w2.cell_rect(&rin_box);
    let ii = crate::grid::IntegralImage::new(&e);
    let avg_r = ii.average_box(&r_box);
    let avg_in = ii.average_box(&rin_box);
    let body_corners = r.corners();
    q.le("R ⊆ Λ", 0.0, body_margin(body, &body_corners));
    q.le("band: avg(R) ≥ (α-ε)/(1-ε)", band_lo, avg_r);
    q.le("band: avg(R) ≤ α/(1-ε)", avg_r, band_hi);
    let ratio = (k as f64 / inner as f64).powi(n as i32);
    q.le("|R|/|R^in| ≤ t_o^{-n}", ratio, ratio_bound(alpha, eps));
    let (ib_lo, ib_hi) = inner_band(alpha, eps);
    q.le("avg(R^in) ≥ ½(α-ε)/(1-ε)", ib_lo, avg_in);
    q.le("avg(R^in) ≤ ½(1+α/(1-ε))", avg_in, ib_hi);
    q.le("½(1+α/(1-ε)) ≤ 1-δ", ib_hi, 1.0 - delta);

    // CZ decomposition of E ∩ R^in in the dyadic grid of R^in.
    let e_in = GridMask::from_fn(&w2, |c| rin_box.contains_cell(c) && e.get(c));
    let root = DyadicRoot::new(&w2, &rin)?;
    q.le("avg(E ∩ R^in over R^in) ≤ 1-δ", avg_in, 1.0 - delta);
    let cz = cz_decompose(&e_in, &root, 1.0 - delta)
        .map_err(|err| Error::Witness(format!("CZ decomposition of E ∩ R^in failed: {err}")))?;
    if cz.selected.is_empty() {
        return Err(Error::Witness("E ∩ R^in is empty".into()));
    }
    let cubes: Vec<Rect> = cz.selected.iter().map(|a| root.rect_of(a)).collect();
    let leaves: Vec<usize> = (0..cubes.len())
        .filter(|&j| !r.contains_rect(&cubes[j].dilate(dil), 1e-9 * s))
        .collect();

    let l_map = (1.0, vec![0.0; n]);
    let mut bodies = Vec::new();
    let mut union = vec![false; w2.len()];
    let mark = |b: &ConvexBody, union: &mut Vec<bool>| {
        if let Some(bx) = w2.snap(&b.bounding_rect()) {
            let tol = 1e-9 * w2.min_cell_size();
            for_each_cell(&bx, |c| {
                if b.contains_tol(&w2.center_point(c), tol) {
                    union[w2.linear(c)] = true;
                }
            });
        }
    };
    let (case, chosen) = if let Some(&jo) = leaves
        .iter()
        .max_by(|&&a, &&b| cubes[a].side(0).total_cmp(&cubes[b].side(0)).then(b.cmp(&a)))
    {
        let cj = &cubes[jo];
        let sm = small_map(cj, containment);
        let (small, wb_small) = witness_body(&e, body, "small", &sm);
        q.le("Λ_small ⊆ R_jo", 0.0, rect_margin(cj, &small));
        q.le("|R_jo| ≤ n^{3n/2}|Λ_small|", cj.volume(), np * small.volume());
        q.le(
            "4n^{3/2} side(R_jo) > (side(R) − side(R^in))/2",
            0.5 * (s - rin.side(0)),
            dil * cj.side(0),
        );
        q.le("avg(Λ_small) ≥ 1 − n^{3n/2}δ", 1.0 - np * delta, wb_small.average);
        q.le("α ≤ 1 − 6n^{3n/2}δ", alpha, 1.0 - 6.0 * np * delta);
        let target = 1.0 - 2.0 * np * delta;
        if !(wb_small.cells > 0 && wb_small.average > target) {
            return Err(Error::Witness(format!(
                "avg(Λ_small) = {:.6} does not exceed 1 − 2n^(3n/2)δ = {target:.6}",
                wb_small.average
            )));
        }
        let (_, below) = crossing(&e, body, &sm, &l_map, target);
        let (grown, wb) = witness_body(&e, body, "grown", &below);
        q.le("Λ_small ⊆ Λ_jo", 0.0, body_margin(&grown, small.vertices()));
        q.le("Λ_jo ⊆ Λ", 0.0, body_margin(body, grown.vertices()));
        q.le("avg(Λ_jo) ≤ 1 − 2n^{3n/2}δ", wb.average, target);
        q.gt("avg(Λ_jo) > 1 − 3n^{3n/2}δ", wb.average, 1.0 - 3.0 * np * delta);
        q.le("|Λ_jo| ≥ n^{-3n/2}|R_jo|", cj.volume() / np, grown.volume());
        mark(&grown, &mut union);
        bodies.push(wb_small);
        bodies.push(wb);
        (WitnessCase::DilateLeavesCube, vec![jo])
    } else {
        let sel = vitali_select(&cubes, dil)?;
        let dilates: Vec<Rect> = sel.selected.iter().map(|&j| cubes[j].dilate(dil)).collect();
        for a in 0..dilates.len() {
            for b in a + 1..dilates.len() {
                let ov = dilates[a]
                    .intersection(&dilates[b])
                    .map_or(0.0, |x| x.volume());
                q.le("Vitali dilates pairwise disjoint", ov, 0.0);
            }
        }
        q.le("Vitali coverage ≥ 3^{-n}", 3f64.powi(-(n as i32)), sel.coverage);
        let covered: f64 = cubes.iter().map(|c| c.volume()).sum();
        q.le(
            "|∪R_j| ≥ |E ∩ R^in|",
            e_in.count() as f64 * w2.cell_volume(),
            covered * (1.0 + 1e-12),
        );
        let (lo_t, hi_t) = (1.0 - np * delta, 1.0 - delta / np);
        for &j in &sel.selected {
            let cj = &cubes[j];
            let parent: DyadicAddress = cz.selected[j]
                .parent()
                .ok_or_else(|| Error::Witness("selected cube is the root".into()))?;
            let pr = root.rect_of(&parent);
            let sm = small_map(cj, containment);
            let bg = (pr.side(0), pr.lo.clone());
            let (small, wb_small) = witness_body(&e, body, "small", &sm);
            let (big, wb_big) = witness_body(&e, body, "big", &bg);
            q.le("Λ_small ⊆ R_jk", 0.0, rect_margin(cj, &small));
            q.le("|R_jk| ≤ n^{3n/2}|Λ_small|", cj.volume(), np * small.volume());
            q.gt("avg(Λ_small) > 1 − n^{3n/2}δ", wb_small.average, lo_t);
            q.le("R_jk^(1) ⊆ Λ_big", 0.0, body_margin(&big, &pr.corners()));
            q.le("Λ_big ⊆ 4n^{3/2}R_jk", 0.0, rect_margin(&cj.dilate(dil), &big));
            q.le("Λ_big ⊆ R", 0.0, rect_margin(&r, &big));
            q.le("avg(R_jk^(1)) ≤ 1 − δ", ii.rect_average(&pr)?, 1.0 - delta);
            q.le("avg(Λ_big) ≤ 1 − n^{-3n/2}δ", wb_big.average, hi_t);
            if !(wb_small.cells > 0 && wb_small.average > lo_t) {
                return Err(Error::Witness(format!(
                    "avg(Λ_small) = {:.6} does not exceed 1 − n^(3n/2)δ = {lo_t:.6}",
                    wb_small.average
                )));
            }
            let chosen = if wb_big.average > lo_t {
                bg.clone()
            } else {
                crossing(&e, body, &sm, &bg, lo_t).0
            };
            let (lk, wb) = witness_body(&e, body, "sandwiched", &chosen);
            q.gt("avg(Λ_k) > 1 − n^{3n/2}δ", wb.average, lo_t);
            q.le("avg(Λ_k) ≤ 1 − n^{-3n/2}δ", wb.average, hi_t);
            q.le("Λ_k ⊆ Λ_big", 0.0, body_margin(&big, lk.vertices()));
            mark(&lk, &mut union);
            bodies.push(wb_small);
            bodies.push(wb_big);
            bodies.push(wb);
        }
        (WitnessCase::DilatesInsideCube, sel.selected)
    };

    let outside_e = union
        .iter()
        .enumerate()
        .filter(|&(l, &u)| u && !e.get_linear(l))
        .count();
    let gain = outside_e as f64 / cells_l as f64;
    q.le("gain > 0", 0.0, gain - f64::MIN_POSITIVE);
    let m = alpha.min(1.0 - alpha);
    let implied_constant = gain / (alpha * m.powi(2 * n as i32) * delta);
    let implied_case_constant = match case {
        WitnessCase::DilateLeavesCube => gain / (m.powi(2 * n as i32) * delta),
        WitnessCase::DilatesInsideCube => gain / (m.powi(n as i32) * alpha * delta),
    };
    Ok(ConvexWitness {
        alpha,
        delta,
        eps,
        case,
        grid: w2,
        band_cube: r,
        inner_cube: rin,
        cz_cubes: cubes,
        chosen,
        bodies,
        inequalities: q.0,
        gain,
        implied_constant,
        implied_case_constant,
    })
}
