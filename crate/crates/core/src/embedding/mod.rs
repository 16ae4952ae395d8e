mod witness;

use serde::{Deserialize, Serialize};

use crate::convex::ConvexBody;
use crate::error::{Error, Result};
use crate::grid::{union_volume, GridMask, Rect};
use crate::maximal::{halo, Basis, BasisKind};

pub use witness::{
    construct_convex_witnesses, delta_regime, ConvexWitness, DeltaChoice, Inequality, WitnessBody,
    WitnessCase,
    WitnessGrid,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    Rect,
    Ball,
    Convex,
}

/// Outcome of checking `H_α(E) ⊆ H_β(H_γ(E))` on one instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub theorem: Theorem,
    pub id: String,
    pub basis: String,
    pub alpha: f64,
    pub delta: f64,
    pub xi: Option<f64>,
    pub c_n: Option<f64>,
    /// Threshold `γ` of the middle halo `H_γ(E)`.
    pub middle_alpha: f64,
    /// Threshold `β` of the outer halo.
    pub outer_alpha: f64,
    pub slack_cells: usize,
    pub violations: u64,
    pub inclusion_holds: bool,
    pub measure_inner: f64,
    pub measure_middle: f64,
    pub measure_outer: f64,
    /// `|H_α(E)| <= |outer|`.
    pub measure_inequality_holds: bool,
    /// Set when a family limit truncated any halo (results are then lower bounds).
    pub clamped: bool,
}

impl EmbeddingReport {
    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

fn open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {v} must lie in (0, 1)")))
    }
}

struct Chain<'a> {
    theorem: Theorem,
    inner: &'a Basis,
    middle: &'a Basis,
    alpha: f64,
    delta: f64,
    xi: Option<f64>,
    c_n: Option<f64>,
    middle_alpha: f64,
    outer_alpha: f64,
}

fn run_chain(e: &GridMask, c: Chain, slack_cells: usize) -> Result<EmbeddingReport> {
    if c.outer_alpha >= 1.0 {
        return Err(Error::Domain(format!(
            "degenerate outer threshold {:.6} ≥ 1",
            c.outer_alpha
        )));
    }
    let inner = halo(e, c.inner, c.alpha)?;
    if inner.mask.touches_boundary() {
        return Err(Error::WindowTooSmall(format!(
            "H_α(E) at α = {} reaches the window boundary",
            c.alpha
        )));
    }
    let middle = halo(e, c.middle, c.middle_alpha)?;
    let outer = halo(&middle.mask, c.inner, c.outer_alpha)?;
    if outer.mask.touches_boundary() {
        return Err(Error::WindowTooSmall(format!(
            "outer halo at β = {:.6} reaches the window boundary",
            c.outer_alpha
        )));
    }
    let violations = inner.mask.violations(&outer.mask, slack_cells)?;
    let (mi, mm, mo) = (inner.mask.measure(), middle.mask.measure(), outer.mask.measure());
    Ok(EmbeddingReport {
        theorem: c.theorem,
        id: String::new(),
        basis: c.inner.name().to_string(),
        alpha: c.alpha,
        delta: c.delta,
        xi: c.xi,
        c_n: c.c_n,
        middle_alpha: c.middle_alpha,
        outer_alpha: c.outer_alpha,
        slack_cells,
        violations,
        inclusion_holds: violations == 0,
        measure_inner: mi,
        measure_middle: mm,
        measure_outer: mo,
        measure_inequality_holds: mi <= mo,
        clamped: inner.clamped || middle.clamped || outer.clamped,
    })
}

/// `H_α(E) ⊆ H_{α(1+(1-ξ)/2^n)}(H_{1-δ}(E))` for rectangles or cubes.
pub fn verify_rect_embedding(
    e: &GridMask,
    basis: &Basis,
    alpha: f64,
    delta: f64,
    xi: f64,
    slack_cells: usize,
) -> Result<EmbeddingReport> {
    if !matches!(basis.kind, BasisKind::StrongRects | BasisKind::Cubes) {
        return Err(Error::Unsupported(format!(
            "rectangle embedding needs strong_rects or cubes, got {}",
            basis.name()
        )));
    }
    open_unit("α", alpha)?;
    open_unit("δ", delta)?;
    open_unit("ξ", xi)?;
    if !(alpha < 1.0 - delta && 1.0 - delta < xi) {
        return Err(Error::Domain(format!(
            "rectangle embedding requires α < 1−δ < ξ < 1 (got α = {alpha}, δ = {delta}, ξ = {xi})"
        )));
    }
    let n = e.window().n() as i32;
    let chain = Chain {
        theorem: Theorem::Rect,
        inner: basis,
        middle: basis,
        alpha,
        delta,
        xi: Some(xi),
        c_n: None,
        middle_alpha: 1.0 - delta,
        outer_alpha: alpha * (1.0 + (1.0 - xi) / 2f64.powi(n)),
    };
    run_chain(e, chain, slack_cells)
}

/// `H_{b,α}(E) ⊆ H_{b,α(1+c_n min(α,1-α)^n δ)}(H_{S,1-δ}(E))`: balls outside, rectangles in
/// the middle. Requires `δ <= κ (1-α)`.
pub fn verify_ball_embedding(
    e: &GridMask,
    alpha: f64,
    delta: f64,
    c_n: f64,
    kappa: f64,
    slack_cells: usize,
) -> Result<EmbeddingReport> {
    open_unit("α", alpha)?;
    open_unit("δ", delta)?;
    if !(c_n > 0.0) || !(kappa > 0.0) {
        return Err(Error::Domain("c_n and κ must be positive".into()));
    }
    if delta > kappa * (1.0 - alpha) {
        return Err(Error::Domain(format!(
            "ball embedding requires δ ≤ κ(1−α) = {:.6} (got δ = {delta})",
            kappa * (1.0 - alpha)
        )));
    }
    let n = e.window().n() as i32;
    let balls = Basis::balls();
    let strong = Basis::strong();
    let chain = Chain {
        theorem: Theorem::Ball,
        inner: &balls,
        middle: &strong,
        alpha,
        delta,
        xi: None,
        c_n: Some(c_n),
        middle_alpha: 1.0 - delta,
        outer_alpha: alpha * (1.0 + c_n * alpha.min(1.0 - alpha).powi(n) * delta),
    };
    run_chain(e, chain, slack_cells)
}

/// `n^{3n/2}`.
pub fn john_power(n: usize) -> f64 {
    (n as f64).powf(1.5 * n as f64)
}

/// `H_α(E) ⊆ H_{α(1+c_n min(α,1-α)^{2n} δ)}(H_{1-3n^{3n/2}δ}(E))` over homothecies of `Λ`.
pub fn verify_convex_embedding(
    e: &GridMask,
    body: &ConvexBody,
    alpha: f64,
    delta: f64,
    c_n: f64,
    slack_cells: usize,
) -> Result<EmbeddingReport> {
    open_unit("α", alpha)?;
    open_unit("δ", delta)?;
    if !(c_n > 0.0) {
        return Err(Error::Domain("c_n must be positive".into()));
    }
    let n = body.n();
    let k = 3.0 * john_power(n);
    if k * delta > (1.0 - alpha) * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "convex embedding requires 3n^(3n/2)·δ ≤ 1−α (got {:.6} > {:.6})",
            k * delta,
            1.0 - alpha
        )));
    }
    let basis = Basis::convex(body.clone());
    let chain = Chain {
        theorem: Theorem::Convex,
        inner: &basis,
        middle: &basis,
        alpha,
        delta,
        xi: None,
        c_n: Some(c_n),
        middle_alpha: (1.0 - k * delta).max(f64::MIN_POSITIVE),
        outer_alpha: alpha * (1.0 + c_n * alpha.min(1.0 - alpha).powi(2 * n as i32) * delta),
    };
    run_chain(e, chain, slack_cells)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VitaliSelection {
    /// Indices into the input, in selection order.
    pub selected: Vec<usize>,
    pub dilation: f64,
    /// `|∪ dilated selected| / |∪ dilated input|`.
    pub coverage: f64,
}

/// Greedy selection by decreasing side: keep a rectangle when its dilate is disjoint from
/// the dilates kept so far.
pub fn vitali_select(rects: &[Rect], dilation: f64) -> Result<VitaliSelection> {
    if !(dilation >= 1.0) {
        return Err(Error::Domain(format!("dilation {dilation} must be ≥ 1")));
    }
    if rects.is_empty() {
        return Ok(VitaliSelection {
            selected: Vec::new(),
            dilation,
            coverage: 1.0,
        });
    }
    let dil: Vec<Rect> = rects.iter().map(|r| r.dilate(dilation)).collect();
    let mut order: Vec<usize> = (0..rects.len()).collect();
    order.sort_by(|&a, &b| rects[b].max_side().total_cmp(&rects[a].max_side()).then(a.cmp(&b)));
    let mut selected: Vec<usize> = Vec::new();
    for i in order {
        if selected.iter().all(|&j| !dil[i].overlaps(&dil[j])) {
            selected.push(i);
        }
    }
    let kept: Vec<Rect> = selected.iter().map(|&i| dil[i].clone()).collect();
    let coverage = union_volume(&kept) / union_volume(&dil);
    Ok(VitaliSelection {
        selected,
        dilation,
        coverage,
    })
}
