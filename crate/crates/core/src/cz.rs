use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellBox, GridMask, IntegralImage, Rect, Window};

/// A rectangle of the dyadic grid generated by a root: `level` bisections, `index` per axis.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicAddress {
    pub level: u32,
    pub index: Vec<u64>,
}

impl DyadicAddress {
    pub fn root(n: usize) -> Self {
        DyadicAddress {
            level: 0,
            index: vec![0; n],
        }
    }

    pub fn parent(&self) -> Option<DyadicAddress> {
        (self.level > 0).then(|| DyadicAddress {
            level: self.level - 1,
            index: self.index.iter().map(|i| i / 2).collect(),
        })
    }

    pub fn children(&self) -> Vec<DyadicAddress> {
        let n = self.index.len();
        (0..1u64 << n)
            .map(|m| DyadicAddress {
                level: self.level + 1,
                index: (0..n)
                    .map(|i| 2 * self.index[i] + (m >> i & 1))
                    .collect(),
            })
            .collect()
    }

    /// True when `self` is `other` or one of its descendants.
    pub fn within(&self, other: &DyadicAddress) -> bool {
        self.level >= other.level
            && self
                .index
                .iter()
                .zip(&other.index)
                .all(|(a, b)| a >> (self.level - other.level) == *b)
    }
}

/// A root rectangle aligned to the cells of a window, spanning `2^depth` cells per axis.
/// The root may stick out of the window; cells outside count as not in `E`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicRoot {
    pub rect: Rect,
    pub origin_cell: Vec<i64>,
    pub depth: u32,
}

impl DyadicRoot {
    pub fn new(window: &Window, rect: &Rect) -> Result<Self> {
        let n = window.n();
        if rect.n() != n {
            return Err(Error::WindowMismatch);
        }
        let mut origin_cell = Vec::with_capacity(n);
        let mut side = None;
        for i in 0..n {
            let h = window.cell_size(i);
            let a = (rect.lo[i] - window.origin()[i]) / h;
            let b = (rect.hi[i] - window.origin()[i]) / h;
            let (ar, br) = (a.round(), b.round());
            if (a - ar).abs() > 1e-6 || (b - br).abs() > 1e-6 {
                return Err(Error::Precondition(
                    "root rectangle must lie on cell boundaries".into(),
                ));
            }
            let cells = (br - ar) as i64;
            if cells <= 0 || (cells as u64).count_ones() != 1 || side.is_some_and(|s| s != cells) {
                return Err(Error::Precondition(format!(
                    "root must span the same power-of-two number of cells on every axis, got {cells} on axis {i}"
                )));
            }
            side = Some(cells);
            origin_cell.push(ar as i64);
        }
        Ok(DyadicRoot {
            rect: rect.clone(),
            origin_cell,
            depth: side.expect("n >= 1").trailing_zeros(),
        })
    }

    /// Smallest admissible root containing `r`: a cube of `2^k` cells per axis anchored at
    /// the cell holding `r.lo`.
    pub fn covering(window: &Window, r: &Rect) -> Result<Self> {
        let n = window.n();
        let mut lo = Vec::with_capacity(n);
        let mut need = 1i64;
        for i in 0..n {
            let h = window.cell_size(i);
            let a = ((r.lo[i] - window.origin()[i]) / h + 1e-9).floor() as i64;
            let b = ((r.hi[i] - window.origin()[i]) / h - 1e-9).ceil() as i64;
            lo.push(a);
            need = need.max(b - a);
        }
        let side = (need as u64).next_power_of_two() as i64;
        let rect = Rect::new(
            (0..n)
                .map(|i| window.origin()[i] + lo[i] as f64 * window.cell_size(i))
                .collect(),
            (0..n)
                .map(|i| window.origin()[i] + (lo[i] + side) as f64 * window.cell_size(i))
                .collect(),
        )?;
        DyadicRoot::new(window, &rect)
    }

    pub fn n(&self) -> usize {
        self.origin_cell.len()
    }

    pub fn side_cells(&self) -> u64 {
        1 << self.depth
    }

    /// Cell range of an address, in window cell coordinates (may be negative).
    pub fn cell_range(&self, a: &DyadicAddress) -> (Vec<i64>, Vec<i64>) {
        let s = (self.side_cells() >> a.level) as i64;
        let lo: Vec<i64> = (0..self.n())
            .map(|i| self.origin_cell[i] + a.index[i] as i64 * s)
            .collect();
        let hi = lo.iter().map(|v| v + s).collect();
        (lo, hi)
    }

    pub fn rect_of(&self, a: &DyadicAddress) -> Rect {
        let k = (1u64 << a.level) as f64;
        let lo = (0..self.n())
            .map(|i| {
                let side = self.rect.side(i) / k;
                self.rect.lo[i] + a.index[i] as f64 * side
            })
            .collect::<Vec<_>>();
        let hi = (0..self.n())
            .map(|i| lo[i] + self.rect.side(i) / k)
            .collect();
        Rect::new_unchecked(lo, hi)
    }

    pub fn cells_of(&self, a: &DyadicAddress) -> u64 {
        (self.side_cells() >> a.level).pow(self.n() as u32)
    }
}

/// Counts of `E` cells in root-relative boxes, with zero padding outside the window.
pub struct RootCounter {
    root: DyadicRoot,
    clip_lo: Vec<i64>,
    ii: IntegralImage,
}

impl RootCounter {
    pub fn new(e: &GridMask, root: &DyadicRoot) -> Self {
        RootCounter {
            root: root.clone(),
            clip_lo: vec![0; root.n()],
            ii: IntegralImage::new(e),
        }
    }

    pub fn count_range(&self, lo: &[i64], hi: &[i64]) -> u64 {
        let res = self.ii.window().resolution();
        let mut a = Vec::with_capacity(lo.len());
        let mut b = Vec::with_capacity(lo.len());
        for i in 0..lo.len() {
            let l = lo[i].max(self.clip_lo[i]);
            let h = hi[i].min(res[i] as i64);
            if h <= l {
                return 0;
            }
            a.push(l as usize);
            b.push(h as usize);
        }
        self.ii.count_box(&CellBox::new(a, b))
    }

    pub fn count(&self, a: &DyadicAddress) -> u64 {
        let (lo, hi) = self.root.cell_range(a);
        self.count_range(&lo, &hi)
    }

    pub fn average(&self, a: &DyadicAddress) -> f64 {
        self.count(a) as f64 / self.root.cells_of(a) as f64
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CzDecomposition {
    pub root: DyadicRoot,
    pub xi: f64,
    pub selected: Vec<DyadicAddress>,
    pub parents: Vec<DyadicAddress>,
    pub maximal_parents: Vec<DyadicAddress>,
}

/// Selected rectangles: maximal dyadic subrectangles of the root with `E`-average above `ξ`.
pub fn cz_decompose(e: &GridMask, root: &DyadicRoot, xi: f64) -> Result<CzDecomposition> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::Domain(format!("level ξ = {xi} must lie in (0, 1)")));
    }
    let counter = RootCounter::new(e, root);
    let top = DyadicAddress::root(root.n());
    if counter.average(&top) > xi {
        return Err(Error::Precondition("root is itself a CZ rectangle".into()));
    }
    let mut selected = Vec::new();
    let mut stack = vec![top];
    while let Some(a) = stack.pop() {
        let count = counter.count(&a);
        if count == 0 {
            continue;
        }
        if count as f64 / root.cells_of(&a) as f64 > xi {
            selected.push(a);
        } else if a.level < root.depth {
            let mut ch = a.children();
            ch.reverse();
            stack.extend(ch);
        }
    }
    selected.sort();
    let mut parents: Vec<DyadicAddress> = selected.iter().filter_map(|s| s.parent()).collect();
    parents.sort();
    parents.dedup();
    let maximal_parents: Vec<DyadicAddress> = parents
        .iter()
        .filter(|p| !parents.iter().any(|q| q != *p && p.within(q)))
        .cloned()
        .collect();
    Ok(CzDecomposition {
        root: root.clone(),
        xi,
        selected,
        parents,
        maximal_parents,
    })
}

impl CzDecomposition {
    /// The first selected child (in address order) of each maximal parent.
    pub fn representatives(&self) -> Vec<DyadicAddress> {
        self.maximal_parents
            .iter()
            .filter_map(|p| {
                self.selected
                    .iter()
                    .find(|s| s.parent().as_ref() == Some(p))
                    .cloned()
            })
            .collect()
    }

    pub fn selected_measure(&self, window: &Window) -> f64 {
        self.selected
            .iter()
            .map(|a| self.root.cells_of(a) as f64)
            .sum::<f64>()
            * window.cell_volume()
    }
}

/// `(|∪ representatives|, |∪ selected|)`: one selected child per maximal parent against all
/// selected rectangles. The first is at least `2^-n` times the second.
pub fn maximal_parent_union_bound(d: &CzDecomposition, window: &Window) -> (f64, f64) {
    let cv = window.cell_volume();
    let reps: f64 = d
        .representatives()
        .iter()
        .map(|a| d.root.cells_of(a) as f64)
        .sum::<f64>()
        * cv;
    (reps, d.selected_measure(window))
}

/// Result of a scan for a rectangle with a prescribed `E`-average.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioHit {
    pub rect: Rect,
    pub cells: CellBox,
    pub average: f64,
    /// Size of the discrete step in average at the crossing (0 when the target is hit).
    pub jump: f64,
    /// Set when the discrete averages jump over `[ξ - tol, ξ + tol]`.
    pub quantized: bool,
    pub t: f64,
}

fn snapped_average(window: &Window, ii: &IntegralImage, r: &Rect) -> Option<(CellBox, f64)> {
    let b = window.snap(r)?;
    let avg = ii.average_box(&b);
    Some((b, avg))
}

/// Homothetic copy `S` of `inner` with `inner ⊆ S ⊆ outer` and `E`-average `ξ` up to the
/// discrete jump. `S(t)` interpolates the corners of `inner` (t=0) and `outer` (t=1), i.e.
/// scales about the homothety center of the pair; bisection keeps `avg(S(lo)) > ξ >= avg(S(hi))`.
pub fn exact_ratio_homothety(
    e: &GridMask,
    inner: &Rect,
    outer: &Rect,
    xi: f64,
    tol: f64,
) -> Result<RatioHit> {
    let window = e.window();
    if !(tol > 0.0) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    if !outer.contains_rect(inner, 1e-12) || inner == outer {
        return Err(Error::Precondition("inner must be strictly inside outer".into()));
    }
    let ratios: Vec<f64> = (0..inner.n()).map(|i| inner.side(i) / outer.side(i)).collect();
    if ratios.iter().any(|r| (r - ratios[0]).abs() > 1e-9 * ratios[0].max(1.0)) {
        return Err(Error::Precondition("inner and outer must be homothetic".into()));
    }
    let ii = IntegralImage::new(e);
    let at = |t: f64| {
        Rect::new_unchecked(
            (0..inner.n())
                .map(|i| inner.lo[i] + t * (outer.lo[i] - inner.lo[i]))
                .collect(),
            (0..inner.n())
                .map(|i| inner.hi[i] + t * (outer.hi[i] - inner.hi[i]))
                .collect(),
        )
    };
    let (b_in, a_in) = snapped_average(window, &ii, inner).ok_or(Error::DegenerateQuery)?;
    if a_in <= xi {
        return Err(Error::Precondition(format!(
            "inner average {a_in:.6} does not exceed ξ = {xi}"
        )));
    }
    let (b_out, a_out) = snapped_average(window, &ii, outer).ok_or(Error::DegenerateQuery)?;
    if a_out > xi {
        return Err(Error::NoCrossing(format!(
            "outer average {a_out:.6} still exceeds ξ = {xi}"
        )));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (mut hi_box, mut hi_avg) = (b_out, a_out);
    let (mut lo_box, mut lo_avg) = (b_in, a_in);
    for _ in 0..48 {
        let mid = 0.5 * (lo + hi);
        let Some((b, a)) = snapped_average(window, &ii, &at(mid)) else {
            lo = mid;
            continue;
        };
        if a > xi {
            lo = mid;
            lo_box = b;
            lo_avg = a;
        } else {
            hi = mid;
            hi_box = b;
            hi_avg = a;
        }
        if lo_box == hi_box {
            break;
        }
    }
    let quantized = xi - hi_avg > tol;
    Ok(RatioHit {
        rect: window.cell_rect(&hi_box),
        cells: hi_box,
        average: hi_avg,
        jump: lo_avg - hi_avg,
        quantized,
        t: hi,
    })
}

/// Cube whose `E`-average lies in the band `[(α-ε)/(1-ε), α/(1-ε)]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BandCube {
    pub rect: Rect,
    pub cells: CellBox,
    pub average: f64,
    pub band: (f64, f64),
    /// Largest change of average between consecutive scan positions near the result.
    pub jump: f64,
    /// Number of positions examined on the translation path (0 if a region cube was in band).
    pub scanned: usize,
}

pub fn band_limits(alpha: f64, eps: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("α = {alpha} must lie in (0, 1)")));
    }
    if !(eps > 0.0 && eps < alpha.min(1.0 - alpha)) {
        return Err(Error::Domain(format!(
            "ε = {eps} must satisfy 0 < ε < min(α, 1 - α)"
        )));
    }
    Ok(((alpha - eps) / (1.0 - eps), alpha / (1.0 - eps)))
}

/// Among equal cubes, finds one in the band, else translates a high cube onto a low one
/// cell by cell and stops at the first position in the band (or at the crossing).
pub fn band_cube_search(e: &GridMask, region: &[Rect], alpha: f64, eps: f64) -> Result<BandCube> {
    let (lo_b, hi_b) = band_limits(alpha, eps)?;
    let window = e.window();
    let ii = IntegralImage::new(e);
    let mut boxes = Vec::with_capacity(region.len());
    for r in region {
        let (b, a) = snapped_average(window, &ii, r).ok_or(Error::DegenerateQuery)?;
        if a >= lo_b && a <= hi_b {
            return Ok(BandCube {
                rect: window.cell_rect(&b),
                cells: b,
                average: a,
                band: (lo_b, hi_b),
                jump: 0.0,
                scanned: 0,
            });
        }
        boxes.push((b, a));
    }
    let high = boxes.iter().find(|(_, a)| *a > hi_b);
    let low = boxes.iter().find(|(_, a)| *a < lo_b);
    let (Some((b1, a1)), Some((b2, _))) = (high, low) else {
        return Err(Error::Precondition(
            "counting argument precondition violated: need both a high and a low cube".into(),
        ));
    };
    if (0..b1.n()).any(|i| b1.side(i) != b2.side(i)) {
        return Err(Error::Precondition("region cubes must have equal cell size".into()));
    }
    translate_scan(&ii, b1, *a1, b2, (lo_b, hi_b))
}

pub(crate) fn translate_scan(
    ii: &IntegralImage,
    from: &CellBox,
    from_avg: f64,
    to: &CellBox,
    band: (f64, f64),
) -> Result<BandCube> {
    let window = ii.window();
    let n = from.n();
    let delta: Vec<i64> = (0..n).map(|i| to.lo[i] as i64 - from.lo[i] as i64).collect();
    let steps = delta.iter().map(|d| d.unsigned_abs()).max().unwrap_or(0).max(1);
    let mut prev = (from.clone(), from_avg);
    for s in 1..=steps {
        let lo: Vec<usize> = (0..n)
            .map(|i| {
                (from.lo[i] as f64 + delta[i] as f64 * s as f64 / steps as f64).round() as usize
            })
            .collect();
        let hi = (0..n).map(|i| lo[i] + from.side(i)).collect();
        let b = CellBox::new(lo, hi);
        let a = ii.average_box(&b);
        let jump = (a - prev.1).abs();
        let crossed = (prev.1 > band.1 && a < band.0) || (prev.1 < band.0 && a > band.1);
        if (a >= band.0 && a <= band.1) || crossed {
            return Ok(BandCube {
                rect: window.cell_rect(&b),
                cells: b,
                average: a,
                band,
                jump,
                scanned: s as usize,
            });
        }
        prev = (b, a);
    }
    Err(Error::NoCrossing(
        "translation path never reached the band".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_quadrant() {
        let w = Window::uniform(2, 0.0, 1.0, 16).unwrap();
        let e = GridMask::from_fn(&w, |c| c[0] < 8 && c[1] < 8);
        let root = DyadicRoot::new(&w, &w.bounds()).unwrap();
        let d = cz_decompose(&e, &root, 0.5).unwrap();
        assert_eq!(
            d.selected,
            vec![DyadicAddress {
                level: 1,
                index: vec![0, 0]
            }]
        );
        assert_eq!(d.maximal_parents, vec![DyadicAddress::root(2)]);
    }

    #[test]
    fn full_root_is_rejected() {
        let w = Window::uniform(2, 0.0, 1.0, 8).unwrap();
        let root = DyadicRoot::new(&w, &w.bounds()).unwrap();
        let err = cz_decompose(&GridMask::full(&w), &root, 0.9).unwrap_err();
        assert!(err.to_string().contains("root is itself a CZ rectangle"));
    }

    #[test]
    fn non_power_of_two_root_rejected() {
        let w = Window::uniform(2, 0.0, 1.0, 12).unwrap();
        assert!(DyadicRoot::new(&w, &w.bounds()).is_err());
    }

    #[test]
    fn exact_ratio_hits_outer_when_target_is_outer_average() {
        let w = Window::uniform(2, 0.0, 4.0, 64).unwrap();
        let inner = Rect::new(vec![1.5, 1.5], vec![2.5, 2.5]).unwrap();
        let outer = Rect::new(vec![1.0, 1.0], vec![3.0, 3.0]).unwrap();
        let e = GridMask::from_box(&w, &w.snap(&inner).unwrap());
        let hit = exact_ratio_homothety(&e, &inner, &outer, 0.25, 1e-3).unwrap();
        assert_eq!(hit.cells, w.snap(&outer).unwrap());
        assert_eq!(hit.average, 0.25);
        assert!(!hit.quantized);
    }

    #[test]
    fn band_limits_domain() {
        assert!(band_limits(0.5, 0.5).is_err());
        let (a, b) = band_limits(0.5, 0.1).unwrap();
        assert!((a - 0.4 / 0.9).abs() < 1e-15 && (b - 0.5 / 0.9).abs() < 1e-15);
    }
}
