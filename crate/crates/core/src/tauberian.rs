use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{verify_rect_embedding, EmbeddingReport};
use crate::error::{Error, Result};
use crate::grid::{rasterize, GridMask, Rect, ShapeSpec, Window};
use crate::maximal::{halo, Basis};

fn default_side() -> f64 {
    0.125
}

fn default_restarts() -> usize {
    20
}

/// How candidate sets are generated. Sizes are fractions of the window extent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum Generator {
    /// One centered cube.
    SingleCube {
        #[serde(default = "default_side")]
        side: f64,
    },
    /// `k` equal cubes at random positions.
    CubeUnion {
        k: usize,
        #[serde(default = "default_side")]
        side: f64,
    },
    /// Up to `k` random rectangles with random proportions.
    RandomClusters {
        k: usize,
        #[serde(default = "default_side")]
        side: f64,
    },
    /// Hill climbing on unions of `k` rectangles: translate, scale or split one of them.
    PerturbationSearch {
        k: usize,
        #[serde(default = "default_side")]
        side: f64,
        #[serde(default = "default_restarts")]
        restarts: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateFamily {
    #[serde(flatten)]
    pub generator: Generator,
    #[serde(default)]
    pub seed: u64,
}

impl CandidateFamily {
    pub fn new(generator: Generator, seed: u64) -> Self {
        CandidateFamily { generator, seed }
    }

    pub fn name(&self) -> &'static str {
        match self.generator {
            Generator::SingleCube { .. } => "single_cube",
            Generator::CubeUnion { .. } => "cube_union",
            Generator::RandomClusters { .. } => "random_clusters",
            Generator::PerturbationSearch { .. } => "perturbation_search",
        }
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Candidates live in the central half of the window so their halos have room.
struct Frame {
    lo: Vec<f64>,
    ext: Vec<f64>,
    h: Vec<f64>,
}

impl Frame {
    fn new(w: &Window) -> Self {
        Frame {
            lo: (0..w.n())
                .map(|i| w.origin()[i] + 0.25 * w.extent()[i])
                .collect(),
            ext: w.extent().iter().map(|e| 0.5 * e).collect(),
            h: w.cell_sizes(),
        }
    }

    fn n(&self) -> usize {
        self.lo.len()
    }

    fn clip(&self, lo: Vec<f64>, hi: Vec<f64>) -> Option<Rect> {
        let n = self.n();
        let lo: Vec<f64> = (0..n).map(|i| lo[i].max(self.lo[i])).collect();
        let hi: Vec<f64> = (0..n)
            .map(|i| hi[i].min(self.lo[i] + self.ext[i]))
            .collect();
        if (0..n).any(|i| hi[i] - lo[i] < self.h[i]) {
            return None;
        }
        Rect::new(lo, hi).ok()
    }

    fn random_rect(&self, rng: &mut ChaCha8Rng, side: f64, cube: bool) -> Rect {
        let n = self.n();
        let base = rng.random_range(0.5..1.0) * side * 2.0;
        let sides: Vec<f64> = (0..n)
            .map(|i| {
                let s = if cube { base } else { rng.random_range(0.25..1.0) * side * 2.0 };
                (s * self.ext[i]).max(self.h[i])
            })
            .collect();
        let lo: Vec<f64> = (0..n)
            .map(|i| self.lo[i] + rng.random_range(0.0..1.0) * (self.ext[i] - sides[i]).max(0.0))
            .collect();
        let hi = (0..n).map(|i| lo[i] + sides[i]).collect();
        Rect::new_unchecked(lo, hi)
    }
}

fn union_of(rects: &[Rect]) -> ShapeSpec {
    ShapeSpec::Union {
        parts: rects.iter().map(ShapeSpec::rect).collect(),
    }
}

#[derive(Clone, Debug)]
struct Scored {
    ratio: f64,
    shape: ShapeSpec,
    cells: u64,
    limited: bool,
}

fn score(window: &Window, basis: &Basis, alpha: f64, shape: ShapeSpec) -> Result<Option<Scored>> {
    let e = rasterize(&shape, window)?;
    if e.is_empty() {
        return Ok(None);
    }
    let h = halo(&e, basis, alpha)?;
    Ok(Some(Scored {
        ratio: h.mask.count() as f64 / e.count() as f64,
        cells: e.count(),
        limited: h.mask.touches_boundary(),
        shape,
    }))
}

fn better(a: Option<(usize, Scored)>, b: Option<(usize, Scored)>) -> Option<(usize, Scored)> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => {
            let key = |s: &Scored| (!s.limited, s.ratio);
            let (kx, ky) = (key(&x.1), key(&y.1));
            if ky > kx || (ky == kx && y.0 < x.0) {
                Some(y)
            } else {
                Some(x)
            }
        }
    }
}

fn perturb(frame: &Frame, rng: &mut ChaCha8Rng, rects: &[Rect]) -> Vec<Rect> {
    let mut out = rects.to_vec();
    let i = rng.random_range(0..out.len());
    let r = out[i].clone();
    let n = frame.n();
    let step: Vec<Normal<f64>> = (0..n)
        .map(|a| Normal::new(0.0, 2.0 * frame.h[a]).expect("positive σ"))
        .collect();
    match rng.random_range(0..3) {
        0 => {
            let d: Vec<f64> = step.iter().map(|s| s.sample(rng)).collect();
            if let Some(q) = frame.clip(
                (0..n).map(|a| r.lo[a] + d[a]).collect(),
                (0..n).map(|a| r.hi[a] + d[a]).collect(),
            ) {
                out[i] = q;
            }
        }
        1 => {
            let d: Vec<f64> = step.iter().map(|s| s.sample(rng)).collect();
            if let Some(q) = frame.clip(
                (0..n).map(|a| r.lo[a] - 0.5 * d[a]).collect(),
                (0..n).map(|a| r.hi[a] + 0.5 * d[a]).collect(),
            ) {
                out[i] = q;
            }
        }
        _ => {
            let a = rng.random_range(0..n);
            let cut = rng.random_range(0.2..0.8);
            let mid = r.lo[a] + cut * r.side(a);
            let gap = rng.random_range(1.0..4.0) * frame.h[a];
            let mut hi1 = r.hi.clone();
            hi1[a] = mid - 0.5 * gap;
            let mut lo2 = r.lo.clone();
            lo2[a] = mid + 0.5 * gap;
            if let (Some(p), Some(q)) = (
                frame.clip(r.lo.clone(), hi1),
                frame.clip(lo2, r.hi.clone()),
            ) {
                out[i] = p;
                out.push(q);
            }
        }
    }
    out
}

/// Best candidate ratio `|H_α(E)| / |E|`, a lower bound for the Tauberian constant.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Estimate {
    pub c_hat: f64,
    pub witness: ShapeSpec,
    pub witness_cells: u64,
    pub candidates: usize,
    /// The best candidate's halo reaches the window boundary.
    pub window_limited: bool,
}

pub fn estimate_constant(
    window: &Window,
    basis: &Basis,
    alpha: f64,
    family: &CandidateFamily,
    budget: usize,
) -> Result<Estimate> {
    if budget == 0 {
        return Err(Error::Domain("budget must be at least 1".into()));
    }
    let frame = Frame::new(window);
    let n = window.n();
    let seed = family.seed;
    let (best, candidates) = match family.generator {
        Generator::SingleCube { side } => {
            let c: Vec<f64> = (0..n).map(|i| frame.lo[i] + 0.5 * frame.ext[i]).collect();
            let s = side * window.extent()[0];
            let r = Rect::cube(&c, s)?;
            (score(window, basis, alpha, union_of(&[r]))?.map(|s| (0, s)), 1)
        }
        Generator::CubeUnion { k, side } | Generator::RandomClusters { k, side } => {
            let cube = matches!(family.generator, Generator::CubeUnion { .. });
            let scored: Vec<Option<(usize, Scored)>> = (0..budget)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream_rng(seed, i as u64);
                    let count = if cube { k } else { rng.random_range(1..=k.max(1)) };
                    let rects: Vec<Rect> = (0..count.max(1))
                        .map(|_| frame.random_rect(&mut rng, side, cube))
                        .collect();
                    Ok(score(window, basis, alpha, union_of(&rects))?.map(|s| (i, s)))
                })
                .collect::<Result<_>>()?;
            (scored.into_iter().fold(None, better), budget)
        }
        Generator::PerturbationSearch { k, side, restarts } => {
            let restarts = restarts.clamp(1, budget);
            let steps = budget / restarts;
            let scored: Vec<Option<(usize, Scored)>> = (0..restarts)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream_rng(seed, i as u64);
                    let mut rects: Vec<Rect> = (0..k.max(1))
                        .map(|_| frame.random_rect(&mut rng, side, false))
                        .collect();
                    let mut cur = score(window, basis, alpha, union_of(&rects))?;
                    for _ in 1..steps {
                        let next = perturb(&frame, &mut rng, &rects);
                        let s = score(window, basis, alpha, union_of(&next))?;
                        let improves = match (&s, &cur) {
                            (Some(a), Some(b)) => !a.limited && a.ratio > b.ratio,
                            (Some(a), None) => !a.limited,
                            _ => false,
                        };
                        if improves {
                            rects = next;
                            cur = s;
                        }
                    }
                    Ok(cur.map(|s| (i, s)))
                })
                .collect::<Result<_>>()?;
            (scored.into_iter().fold(None, better), restarts * steps.max(1))
        }
    };
    let (_, best) = best.ok_or_else(|| Error::EmptySet("no candidate covered a cell".into()))?;
    Ok(Estimate {
        c_hat: best.ratio,
        witness: best.shape,
        witness_cells: best.cells,
        candidates,
        window_limited: best.limited,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub alpha: f64,
    pub c_hat: f64,
    /// This α's own search result before the monotone envelope.
    pub raw_c_hat: f64,
    pub witness_id: String,
    pub n_candidates: usize,
    pub grid_n: usize,
    /// Rows with `c_hat - 1` at or below this are rasterization noise.
    pub noise_floor: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TauberianTable {
    pub basis: String,
    pub rows: Vec<TableRow>,
    /// α values whose best candidate hit the window boundary (excluded from `rows`).
    pub window_limited: Vec<f64>,
    pub monotone: bool,
    #[serde(default)]
    pub witnesses: BTreeMap<String, ShapeSpec>,
}

impl TauberianTable {
    /// A table from `(α, Ĉ)` pairs with no witnesses and no noise floor.
    pub fn from_points(basis: &str, points: &[(f64, f64)]) -> Self {
        let mut rows: Vec<TableRow> = points
            .iter()
            .map(|&(alpha, c)| TableRow {
                alpha,
                c_hat: c,
                raw_c_hat: c,
                witness_id: String::new(),
                n_candidates: 0,
                grid_n: 0,
                noise_floor: 0.0,
            })
            .collect();
        rows.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
        let monotone = rows.windows(2).all(|w| w[1].c_hat <= w[0].c_hat);
        TauberianTable {
            basis: basis.into(),
            rows,
            window_limited: Vec::new(),
            monotone,
            witnesses: BTreeMap::new(),
        }
    }

    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "alpha,c_hat,raw_c_hat,witness_id,n_candidates,grid_n,noise_floor")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.alpha, r.c_hat, r.raw_c_hat, r.witness_id, r.n_candidates, r.grid_n, r.noise_floor
            )?;
        }
        Ok(())
    }
}

/// Estimates every α, then takes the non-increasing envelope: at each α the best witness
/// found at any α' ≥ α is re-scored at α, so every entry is reproduced by its witness.
pub fn scan(
    window: &Window,
    basis: &Basis,
    alphas: &[f64],
    family: &CandidateFamily,
    budget: usize,
) -> Result<TauberianTable> {
    if alphas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain("α grid must be strictly increasing".into()));
    }
    let grid_n = window.max_resolution();
    let mut rows = Vec::new();
    let mut limited = Vec::new();
    let mut witnesses = BTreeMap::new();
    let mut carry: Option<(ShapeSpec, String)> = None;
    for (idx, &alpha) in alphas.iter().enumerate().rev() {
        let est = estimate_constant(window, basis, alpha, family, budget)?;
        if est.window_limited {
            limited.push(alpha);
            continue;
        }
        let id = format!("w{idx:03}");
        let (mut c_hat, mut wid, mut shape, mut cells) =
            (est.c_hat, id.clone(), est.witness.clone(), est.witness_cells);
        if let Some((prev, pid)) = &carry {
            if let Some(s) = score(window, basis, alpha, prev.clone())? {
                if !s.limited && s.ratio > c_hat {
                    c_hat = s.ratio;
                    wid = pid.clone();
                    shape = prev.clone();
                    cells = s.cells;
                }
            }
        }
        if wid == id {
            witnesses.insert(id.clone(), est.witness.clone());
        }
        carry = Some((shape, wid.clone()));
        rows.push(TableRow {
            alpha,
            c_hat,
            raw_c_hat: est.c_hat,
            witness_id: wid,
            n_candidates: est.candidates,
            grid_n,
            noise_floor: 10.0 / cells as f64,
        });
    }
    rows.reverse();
    limited.reverse();
    let monotone = rows.windows(2).all(|w| w[1].c_hat <= w[0].c_hat);
    Ok(TauberianTable {
        basis: basis.name().into(),
        rows,
        window_limited: limited,
        monotone,
        witnesses,
    })
}

/// `φ(α) = α` on `[0, 1]` and `Ĉ(1/α)` above, interpolating linearly between table rows.
pub fn halo_function(table: &TauberianTable, alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("φ is defined for α ≥ 0, got {alpha}")));
    }
    if alpha <= 1.0 {
        return Ok(alpha);
    }
    let x = 1.0 / alpha;
    let rows = &table.rows;
    let (first, last) = match (rows.first(), rows.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::Domain("empty table".into())),
    };
    if x < first.alpha || x > last.alpha {
        return Err(Error::Domain(format!(
            "1/α = {x} is outside the table range [{}, {}]",
            first.alpha, last.alpha
        )));
    }
    let j = rows.partition_point(|r| r.alpha < x);
    if rows[j].alpha == x {
        return Ok(rows[j].c_hat);
    }
    let (a, b) = (&rows[j - 1], &rows[j]);
    let t = (x - a.alpha) / (b.alpha - a.alpha);
    Ok(a.c_hat + t * (b.c_hat - a.c_hat))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolyanikFit {
    pub alphas: Vec<f64>,
    /// Fitted `p` in `Ĉ(α) - 1 ≈ K (1-α)^p`.
    pub p: f64,
    pub log_constant: f64,
    pub r2: f64,
}

/// Least squares of `log(Ĉ - 1)` on `log(1 - α)` over rows with `α ≥ α_min` above the
/// noise floor.
pub fn solyanik_fit(table: &TauberianTable, alpha_min: f64) -> Result<SolyanikFit> {
    let pts: Vec<(f64, f64, f64)> = table
        .rows
        .iter()
        .filter(|r| r.alpha >= alpha_min && r.alpha < 1.0 && r.c_hat - 1.0 > r.noise_floor)
        .map(|r| (r.alpha, (1.0 - r.alpha).ln(), (r.c_hat - 1.0).ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::Domain(format!(
            "need at least 4 rows above the noise floor, have {}",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.2).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.1 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.1 - mx) * (p.2 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.2 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Domain("α values must be distinct".into()));
    }
    let p = sxy / sxx;
    let b = my - p * mx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    Ok(SolyanikFit {
        alphas: pts.iter().map(|p| p.0).collect(),
        p,
        log_constant: b,
        r2,
    })
}

/// `max |Ĉ(x) - Ĉ(y)| / |x - y|^p` over table nodes in `[a, b]`.
pub fn holder_quotient(table: &TauberianTable, p: f64, k: (f64, f64)) -> Result<f64> {
    let nodes: Vec<&TableRow> = table
        .rows
        .iter()
        .filter(|r| r.alpha >= k.0 && r.alpha <= k.1)
        .collect();
    if nodes.len() < 2 {
        return Err(Error::Domain(format!(
            "need 2 table nodes in [{}, {}], have {}",
            k.0,
            k.1,
            nodes.len()
        )));
    }
    let mut q = 0.0f64;
    for (i, x) in nodes.iter().enumerate() {
        for y in &nodes[i + 1..] {
            q = q.max((x.c_hat - y.c_hat).abs() / (x.alpha - y.alpha).abs().powf(p));
        }
    }
    Ok(q)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Cor1Check {
    pub holds: bool,
    /// `ξ` slightly above `1 - δ`.
    pub xi: f64,
    pub report: EmbeddingReport,
}

/// `|H_α(E)| <= |H_{α(1+(1-ξ)/2^n)}(H_{1-δ}(E))|` with `ξ = 1 - δ + 1/|E|` (one cell of `E`
/// as the discrete stand-in for `ξ -> (1-δ)+`).
pub fn cor1_witness_check(
    e: &GridMask,
    basis: &Basis,
    alpha: f64,
    delta: f64,
    slack_cells: usize,
) -> Result<Cor1Check> {
    let cells = e.count();
    if cells == 0 {
        return Err(Error::EmptySet("E has no cells".into()));
    }
    let xi = 1.0 - delta + 1.0 / cells as f64;
    if xi >= 1.0 {
        return Err(Error::Domain("E is too small for ξ below 1".into()));
    }
    let report = verify_rect_embedding(e, basis, alpha, delta, xi, slack_cells)?;
    Ok(Cor1Check {
        holds: report.measure_inequality_holds,
        xi,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_exponent_is_recovered() {
        let pts: Vec<(f64, f64)> = (3..9)
            .map(|k| {
                let a = 1.0 - 2f64.powi(-k);
                (a, 1.0 + (1.0 - a).sqrt())
            })
            .collect();
        let fit = solyanik_fit(&TauberianTable::from_points("synthetic", &pts), 0.0).unwrap();
        assert!((fit.p - 0.5).abs() < 1e-6);
        assert!(fit.log_constant.abs() < 1e-9);
    }

    #[test]
    fn halo_function_branches() {
        let t = TauberianTable::from_points("t", &[(0.5, 3.0), (0.7, 1.857), (0.9, 1.222)]);
        assert_eq!(halo_function(&t, 0.37).unwrap(), 0.37);
        assert_eq!(halo_function(&t, 1.0).unwrap(), 1.0);
        assert_eq!(halo_function(&t, 2.0).unwrap(), 3.0);
        assert!(halo_function(&t, 3.0).is_err());
    }

    #[test]
    fn holder_quotient_of_constant_table_is_zero() {
        let t = TauberianTable::from_points("t", &[(0.3, 2.0), (0.5, 2.0), (0.7, 2.0)]);
        assert_eq!(holder_quotient(&t, 1.0, (0.3, 0.7)).unwrap(), 0.0);
        assert!(holder_quotient(&t, 1.0, (0.31, 0.49)).is_err());
    }
}
