use serde::{Deserialize, Serialize};

use super::ConvexBody;
use crate::cz::{band_cube_search, band_limits, BandCube};
use crate::error::{Error, Result};
use crate::grid::{for_each_cell, CellBox, GridMask, Rect, Window};

/// Cells whose centers lie in `body`, and how many of them satisfy `hit`.
fn count_in_body(window: &Window, body: &ConvexBody, hit: impl Fn(usize) -> bool) -> (u64, u64) {
    let Some(b) = window.snap(&body.bounding_rect()) else {
        return (0, 0);
    };
    let tol = 1e-9 * window.min_cell_size();
    let (mut hits, mut cells) = (0u64, 0u64);
    for_each_cell(&b, |c| {
        if body.contains_tol(&window.center_point(c), tol) {
            cells += 1;
            hits += hit(window.linear(c)) as u64;
        }
    });
    (hits, cells)
}

/// `(|E ∩ Λ|, |Λ|)` in cells, with `Λ` rasterized by the center rule.
pub fn body_counts(e: &GridMask, body: &ConvexBody) -> (u64, u64) {
    count_in_body(e.window(), body, |lin| e.get_linear(lin))
}

/// Dyadic cubes of side `2^{-level}` contained in a convex body.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DyadicCover {
    pub level: i32,
    pub side: f64,
    pub cubes: Vec<Rect>,
    pub body_volume: f64,
    pub uncovered: f64,
    /// Raster cells of the body not covered by the cubes (when a window was given).
    pub uncovered_cells: Option<u64>,
    pub body_cells: Option<u64>,
}

fn is_integer(x: f64) -> bool {
    (x - x.round()).abs() <= 1e-9 * x.abs().max(1.0)
}

fn cubes_inside(body: &ConvexBody, side: f64) -> Vec<Rect> {
    let bb = body.bounding_rect();
    let n = body.n();
    let lo: Vec<i64> = (0..n).map(|i| (bb.lo[i] / side).floor() as i64).collect();
    let hi: Vec<i64> = (0..n).map(|i| (bb.hi[i] / side).ceil() as i64).collect();
    let tol = 1e-12 * bb.max_side().max(1.0);
    let mut out = Vec::new();
    let mut k = lo.clone();
    loop {
        let q = Rect::new_unchecked(
            k.iter().map(|&v| v as f64 * side).collect(),
            k.iter().map(|&v| (v + 1) as f64 * side).collect(),
        );
        if body.contains_rect(&q, tol) {
            out.push(q);
        }
        let mut axis = 0;
        loop {
            if axis == n {
                return out;
            }
            k[axis] += 1;
            if k[axis] < hi[axis] {
                break;
            }
            k[axis] = lo[axis];
            axis += 1;
        }
    }
}

/// Dyadic cubes inside `Λ` leaving less than `ε|Λ|` uncovered, starting at side `2^{-start}`
/// and halving the side until the bound holds. With a window, cubes must be unions of cells
/// and the bound is also enforced on raster cell counts.
pub fn dyadic_cover(
    body: &ConvexBody,
    eps: f64,
    start: i32,
    window: Option<&Window>,
) -> Result<DyadicCover> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("ε = {eps} must lie in (0, 1)")));
    }
    if let Some(w) = window {
        if w.n() != body.n() {
            return Err(Error::WindowMismatch);
        }
        if (0..w.n()).any(|i| !is_integer(w.origin()[i] / w.cell_size(i))) {
            return Err(Error::InvalidWindow(
                "window origin must sit on the cell lattice through 0".into(),
            ));
        }
    }
    let vol = body.volume();
    let body_cells = window.map(|w| count_in_body(w, body, |_| false).1);
    for level in start..start + 48 {
        let side = 2f64.powi(-level);
        if let Some(w) = window {
            for i in 0..w.n() {
                let r = side / w.cell_size(i);
                if r < 1.0 - 1e-9 {
                    return Err(Error::RefineGrid(format!(
                        "dyadic side {side} is below the cell size {}",
                        w.cell_size(i)
                    )));
                }
                if !is_integer(r) {
                    return Err(Error::InvalidWindow(format!(
                        "dyadic side {side} is not a whole number of cells"
                    )));
                }
            }
        }
        let cubes = cubes_inside(body, side);
        let uncovered = vol - cubes.len() as f64 * side.powi(body.n() as i32);
        let uncovered_cells = window.map(|w| {
            let per: u64 = (0..w.n())
                .map(|i| (side / w.cell_size(i)).round() as u64)
                .product();
            body_cells.unwrap_or(0).saturating_sub(cubes.len() as u64 * per)
        });
        let discrete_ok = match (uncovered_cells, body_cells) {
            (Some(u), Some(c)) => (u as f64) < eps * c as f64,
            _ => true,
        };
        if uncovered < eps * vol && discrete_ok {
            return Ok(DyadicCover {
                level,
                side,
                cubes,
                body_volume: vol,
                uncovered,
                uncovered_cells,
                body_cells,
            });
        }
    }
    Err(Error::Numerical("dyadic refinement did not converge".into()))
}

/// Starting side `κ_n ε` with `κ_n = 4^{-n}`.
pub fn dyadic_approximation(
    body: &ConvexBody,
    eps: f64,
    window: Option<&Window>,
) -> Result<DyadicCover> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("ε = {eps} must lie in (0, 1)")));
    }
    let kappa = 4f64.powi(-(body.n() as i32));
    let start = (1.0 / (kappa * eps)).log2().ceil() as i32;
    dyadic_cover(body, eps, start, window)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BodyBandCube {
    pub cube: BandCube,
    pub cover: DyadicCover,
    pub body_average: f64,
}

/// A cube `R ⊆ Λ` with `E`-average in `[(α-ε)/(1-ε), α/(1-ε)]`, given that `E` has average
/// `α` over `Λ` (to one cell). Uses the coarsest dyadic cover meeting the `ε|Λ|` bound.
pub fn band_cube_in_body(
    e: &GridMask,
    body: &ConvexBody,
    alpha: f64,
    eps: f64,
) -> Result<BodyBandCube> {
    band_limits(alpha, eps)?;
    let (hits, cells) = body_counts(e, body);
    if cells == 0 {
        return Err(Error::RefineGrid("body covers no cell centers".into()));
    }
    if (hits as f64 - alpha * cells as f64).abs() > 1.0 {
        return Err(Error::Precondition(format!(
            "E has average {:.6} over the body, not α = {alpha}",
            hits as f64 / cells as f64
        )));
    }
    let start = (-body.bounding_rect().max_side().log2().floor()) as i32;
    let cover = dyadic_cover(body, eps, start, Some(e.window()))?;
    let cube = band_cube_search(e, &cover.cubes, alpha, eps)?;
    Ok(BodyBandCube {
        cube,
        cover,
        body_average: hits as f64 / cells as f64,
    })
}

/// Concentric cube `R^in = t R` whose average stays in
/// `[½(α-ε)/(1-ε), ½(1 + α/(1-ε))]` whenever `R`'s average is in the band.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InnerCube {
    pub rect: Rect,
    pub cells: Option<CellBox>,
    /// `t_o`, the smallest admissible ratio.
    pub t_min: f64,
    /// `|R| / |R^in|` as realized.
    pub ratio: f64,
    /// `t_o^{-n}`, the largest admissible volume ratio.
    pub ratio_bound: f64,
}

fn ratio_bound(alpha: f64, eps: f64) -> Result<f64> {
    band_limits(alpha, eps)?;
    Ok(0.5 * ((1.0 - eps + alpha) / alpha).min((2.0 - eps - alpha) / (1.0 - alpha)))
}

pub fn inner_band(alpha: f64, eps: f64) -> (f64, f64) {
    (
        0.5 * (alpha - eps) / (1.0 - eps),
        0.5 * (1.0 + alpha / (1.0 - eps)),
    )
}

pub fn inner_cube(r: &Rect, alpha: f64, eps: f64) -> Result<InnerCube> {
    let bound = ratio_bound(alpha, eps)?;
    let t = bound.powf(-1.0 / r.n() as f64);
    Ok(InnerCube {
        rect: r.dilate(t),
        cells: None,
        t_min: t,
        ratio: bound,
        ratio_bound: bound,
    })
}

/// Largest cell-aligned cube strictly inside the cell cube `r` (centered up to half a cell)
/// whose volume ratio respects the bound.
pub fn inner_cube_cells(window: &Window, r: &CellBox, alpha: f64, eps: f64) -> Result<InnerCube> {
    let bound = ratio_bound(alpha, eps)?;
    let n = r.n();
    let side = r.side(0);
    if (1..n).any(|i| r.side(i) != side) {
        return Err(Error::Precondition("cell box is not a cube".into()));
    }
    let t = bound.powf(-1.0 / n as f64);
    let inner = (t * side as f64 - 1e-9).ceil() as usize;
    if inner >= side || inner == 0 {
        return Err(Error::RefineGrid(format!(
            "a cube of {side} cells has no strictly smaller inner cube with ratio ≤ {bound:.4}"
        )));
    }
    let off = (side - inner) / 2;
    let cells = CellBox::new(
        r.lo.iter().map(|l| l + off).collect(),
        r.lo.iter().map(|l| l + off + inner).collect(),
    );
    Ok(InnerCube {
        rect: window.cell_rect(&cells),
        cells: Some(cells),
        t_min: t,
        ratio: (side as f64 / inner as f64).powi(n as i32),
        ratio_bound: bound,
    })
}
