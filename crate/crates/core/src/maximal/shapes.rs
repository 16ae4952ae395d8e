//! Maximal functions over homothetic copies of a fixed shape (balls, convex bodies)
//! anchored at cell centers.
//!
//! Offsets from the anchor are sorted by the scale at which they enter the element, so the
//! elements of one anchor are nested prefixes of a single list. The threshold route only
//! touches anchors whose count changes: each added offset increments the anchors that map
//! it onto `E`, and an anchor's best element is the largest prefix it still exceeds.

use rayon::prelude::*;

use super::{BasisLimits, Level};
use crate::convex::ConvexBody;
use crate::error::{Error, Result};
use crate::grid::{GridMask, Window};

pub(crate) enum Profile {
    Ball,
    Body(ConvexBody),
}

struct Gauge {
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    rho_max: f64,
    unit_volume: f64,
    unit_size: f64,
}

impl Gauge {
    fn new(profile: &Profile, n: usize) -> Gauge {
        match profile {
            Profile::Ball => Gauge {
                normals: Vec::new(),
                offsets: Vec::new(),
                rho_max: 1.0,
                unit_volume: match n {
                    1 => 2.0,
                    2 => std::f64::consts::PI,
                    _ => 4.0 / 3.0 * std::f64::consts::PI,
                },
                unit_size: 2.0,
            },
            Profile::Body(body) => {
                let p = body.vertex_centroid();
                let (normals, offsets) = body
                    .halfspaces()
                    .map(|(a, b)| {
                        let ap: f64 = a.iter().zip(&p).map(|(x, y)| x * y).sum();
                        (a.to_vec(), b - ap)
                    })
                    .unzip();
                let rho_max = body
                    .vertices()
                    .iter()
                    .map(|v| v.iter().zip(&p).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
                    .fold(0.0, f64::max);
                Gauge {
                    normals,
                    offsets,
                    rho_max,
                    unit_volume: body.volume(),
                    unit_size: body.bounding_rect().max_side(),
                }
            }
        }
    }

    /// Smallest scale `λ` with `y` in the element of scale `λ` anchored at the origin.
    fn entry(&self, y: &[f64]) -> f64 {
        if self.normals.is_empty() {
            return y.iter().map(|v| v * v).sum::<f64>().sqrt();
        }
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(a, b)| a.iter().zip(y).map(|(x, v)| x * v).sum::<f64>() / b)
            .fold(0.0, f64::max)
    }
}

/// Offsets sorted by entry scale; element `j` is the prefix `offsets[..ends[j]]`.
struct Family {
    n: usize,
    reach: Vec<isize>,
    offsets: Vec<isize>,
    ends: Vec<usize>,
    clamped: bool,
}

impl Family {
    fn offset(&self, i: usize) -> &[isize] {
        &self.offsets[i * self.n..(i + 1) * self.n]
    }

    fn build(profile: &Profile, window: &Window, limits: &BasisLimits, need: Option<u64>) -> Family {
        let n = window.n();
        let h = window.cell_sizes();
        let res = window.resolution();
        let gauge = Gauge::new(profile, n);
        let limit_scale = limits
            .max_cells
            .map_or(f64::INFINITY, |m| m as f64 * window.min_cell_size() / gauge.unit_size);
        let full_fit = (0..n)
            .map(|i| res[i] as f64 * h[i])
            .fold(f64::INFINITY, f64::min)
            / gauge.rho_max;
        let clamped = limit_scale.is_finite() && limit_scale >= full_fit;

        let mut reach: Vec<isize> = match need {
            None => res.iter().map(|&r| r as isize - 1).collect(),
            Some(l) => {
                let scale = (l as f64 * window.cell_volume() / gauge.unit_volume)
                    .powf(1.0 / n as f64)
                    * 1.25;
                (0..n)
                    .map(|i| ((scale * gauge.rho_max / h[i]).ceil() as isize + 2).min(res[i] as isize - 1))
                    .collect()
            }
        };
        loop {
            let family = Family::with_reach(&gauge, profile, &h, &reach, limit_scale, limits.stride, clamped);
            let complete = need.is_none_or(|l| family.ends.last().is_some_and(|&e| e as u64 >= l));
            let at_max = reach.iter().zip(res).all(|(&r, &nr)| r == nr as isize - 1);
            let limited = family.ends.last().is_some_and(|&e| e < family.offsets.len() / n)
                && limit_scale.is_finite();
            if complete || at_max || limited {
                return family;
            }
            for (r, &nr) in reach.iter_mut().zip(res) {
                *r = (*r * 2).min(nr as isize - 1);
            }
        }
    }

    fn with_reach(
        gauge: &Gauge,
        profile: &Profile,
        h: &[f64],
        reach: &[isize],
        limit_scale: f64,
        stride: usize,
        clamped: bool,
    ) -> Family {
        let n = h.len();
        let mut pts: Vec<(f64, Vec<isize>)> = Vec::new();
        let mut d: Vec<isize> = reach.iter().map(|r| -r).collect();
        let mut y = vec![0.0; n];
        loop {
            for i in 0..n {
                y[i] = d[i] as f64 * h[i];
            }
            pts.push((gauge.entry(&y), d.clone()));
            let mut axis = 0;
            loop {
                if axis == n {
                    break;
                }
                d[axis] += 1;
                if d[axis] <= reach[axis] {
                    break;
                }
                d[axis] = -reach[axis];
                axis += 1;
            }
            if axis == n {
                break;
            }
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        // Elements must lie inside the offset box: points outside it are at distance at least
        // (reach+1)h from the anchor, hence enter no earlier than that over rho_max.
        let fit = (0..n)
            .map(|i| (reach[i] + 1) as f64 * h[i])
            .fold(f64::INFINITY, f64::min)
            / gauge.rho_max;
        let max_scale = limit_scale.min(fit * (1.0 - 1e-12));
        let mut ends = Vec::new();
        match profile {
            Profile::Ball => {
                let step = stride as f64 * h.iter().copied().fold(f64::INFINITY, f64::min);
                let mut k = 1usize;
                loop {
                    let rho = k as f64 * step;
                    if rho > max_scale {
                        break;
                    }
                    let e = pts.partition_point(|p| p.0 <= rho * (1.0 + 1e-9));
                    if ends.last() != Some(&e) {
                        ends.push(e);
                    }
                    k += 1;
                }
            }
            Profile::Body(_) => {
                let mut i = 0;
                let mut group = 0usize;
                while i < pts.len() {
                    let start = pts[i].0;
                    let mut j = i + 1;
                    while j < pts.len() && pts[j].0 <= start * (1.0 + 1e-9) + 1e-300 {
                        j += 1;
                    }
                    if pts[j - 1].0 > max_scale {
                        break;
                    }
                    if group.is_multiple_of(stride) || j == pts.len() {
                        ends.push(j);
                    }
                    group += 1;
                    i = j;
                }
            }
        }
        let mut offsets = Vec::with_capacity(pts.len() * n);
        for p in &pts {
            offsets.extend_from_slice(&p.1);
        }
        Family {
            n,
            reach: reach.to_vec(),
            offsets,
            ends,
            clamped,
        }
    }
}

fn in_window(c: &[usize], d: &[isize], res: &[usize], out: &mut [usize]) -> bool {
    for i in 0..c.len() {
        let v = c[i] as isize + d[i];
        if v < 0 || v >= res[i] as isize {
            return false;
        }
        out[i] = v as usize;
    }
    true
}

pub(super) fn halo(
    e: &GridMask,
    level: &Level,
    profile: &Profile,
    limits: &BasisLimits,
) -> Result<(Vec<bool>, bool)> {
    let window = e.window();
    let n = window.n();
    let res = window.resolution().to_vec();
    let n0 = res[0];
    let total = e.count();
    let need = (total as f64 / level.t()).ceil() as u64 + 1;
    let fam = Family::build(profile, window, limits, Some(need));
    if fam.ends.is_empty() {
        return Err(Error::Domain("no basis element fits the limits".into()));
    }
    let lens: Vec<u64> = fam.ends.iter().map(|&x| x as u64).collect();
    // best_for[c] = largest element index exceeded with count c, or -1.
    let mut best_for = vec![-1i32; total as usize + 1];
    let mut j = 0usize;
    for (c, slot) in best_for.iter_mut().enumerate() {
        while j < lens.len() && level.exceeds(c as u64, lens[j]) {
            j += 1;
        }
        *slot = j as i32 - 1;
    }
    let top = best_for[total as usize];
    let window_len = window.len();
    let mut counts = vec![0u32; window_len];
    let mut best = vec![-1i32; window_len];
    let runs: Vec<(Vec<usize>, usize)> = e
        .runs()
        .into_iter()
        .map(|(start, len)| (window.coords(start), len))
        .collect();
    let strides = window.strides();
    let mut start = 0usize;
    for (jj, &end) in fam.ends.iter().enumerate().take((top + 1).max(0) as usize) {
        let jj = jj as i32;
        for idx in start..end {
            let d = fam.offset(idx);
            'runs: for (rc, len) in &runs {
                let mut base = 0usize;
                for i in 1..n {
                    let v = rc[i] as isize - d[i];
                    if v < 0 || v >= res[i] as isize {
                        continue 'runs;
                    }
                    base += v as usize * strides[i];
                }
                let x0 = (rc[0] as isize - d[0]).max(0);
                let x1 = (rc[0] as isize + *len as isize - d[0]).min(n0 as isize);
                for x in x0..x1 {
                    let a = base + x as usize;
                    counts[a] += 1;
                    let b = best_for[counts[a] as usize];
                    if b >= jj && b > best[a] {
                        best[a] = b;
                    }
                }
            }
        }
        start = end;
    }

    // Scatter every anchor's best element through per-row spans of the nested elements.
    let mut by_element: Vec<Vec<usize>> = vec![Vec::new(); (top + 1).max(0) as usize];
    for (a, &b) in best.iter().enumerate() {
        if b >= 0 {
            by_element[b as usize].push(a);
        }
    }
    let rest_dims: Vec<usize> = fam.reach[1..].iter().map(|r| 2 * *r as usize + 1).collect();
    let row_keys: usize = rest_dims.iter().product();
    let mut span_lo = vec![isize::MAX; row_keys];
    let mut span_hi = vec![isize::MIN; row_keys];
    let mut active: Vec<(usize, Vec<isize>)> = Vec::new();
    let rows = window_len / n0;
    let mut diff = vec![0i32; rows * (n0 + 1)];
    let mut start = 0usize;
    for (jj, anchors) in by_element.iter().enumerate() {
        for idx in start..fam.ends[jj] {
            let d = fam.offset(idx);
            let mut key = 0;
            let mut acc = 1;
            for i in 1..n {
                key += (d[i] + fam.reach[i]) as usize * acc;
                acc *= rest_dims[i - 1];
            }
            if span_lo[key] == isize::MAX {
                active.push((key, d[1..].to_vec()));
            }
            span_lo[key] = span_lo[key].min(d[0]);
            span_hi[key] = span_hi[key].max(d[0]);
        }
        start = fam.ends[jj];
        for &a in anchors {
            let c = window.coords(a);
            'rows: for (key, dr) in &active {
                let mut row = 0usize;
                let mut acc = 1usize;
                for i in 1..n {
                    let v = c[i] as isize + dr[i - 1];
                    if v < 0 || v >= res[i] as isize {
                        continue 'rows;
                    }
                    row += v as usize * acc;
                    acc *= res[i];
                }
                let x0 = (c[0] as isize + span_lo[*key]).max(0);
                let x1 = (c[0] as isize + span_hi[*key] + 1).min(n0 as isize);
                if x0 < x1 {
                    diff[row * (n0 + 1) + x0 as usize] += 1;
                    diff[row * (n0 + 1) + x1 as usize] -= 1;
                }
            }
        }
    }
    let mut bits = vec![false; window_len];
    for row in 0..rows {
        let mut run = 0i32;
        for x in 0..n0 {
            run += diff[row * (n0 + 1) + x];
            bits[row * n0 + x] = run > 0;
        }
    }
    Ok((bits, fam.clamped))
}

pub(super) fn field(
    e: &GridMask,
    profile: &Profile,
    limits: &BasisLimits,
) -> Result<(Vec<f64>, bool)> {
    let window = e.window();
    let n = window.n();
    let res = window.resolution().to_vec();
    let fam = Family::build(profile, window, limits, None);
    let Some(&used) = fam.ends.last() else {
        return Err(Error::Domain("no basis element fits the limits".into()));
    };
    let mut group_of = vec![0usize; used];
    let mut start = 0;
    for (j, &end) in fam.ends.iter().enumerate() {
        group_of[start..end].fill(j);
        start = end;
    }
    let len = window.len();
    let values = (0..len)
        .into_par_iter()
        .fold(
            || (vec![0.0f64; len], vec![0usize; n], vec![0.0f64; fam.ends.len()]),
            |(mut acc, mut t, mut avg), a| {
                let c = window.coords(a);
                let mut count = 0u64;
                let mut g = 0;
                for idx in 0..used {
                    if in_window(&c, fam.offset(idx), &res, &mut t) && e.get(&t) {
                        count += 1;
                    }
                    if idx + 1 == fam.ends[g] {
                        avg[g] = count as f64 / fam.ends[g] as f64;
                        g += 1;
                    }
                }
                for j in (0..avg.len().saturating_sub(1)).rev() {
                    avg[j] = avg[j].max(avg[j + 1]);
                }
                for idx in 0..used {
                    if in_window(&c, fam.offset(idx), &res, &mut t) {
                        let lin = window.linear(&t);
                        acc[lin] = acc[lin].max(avg[group_of[idx]]);
                    }
                }
                (acc, t, avg)
            },
        )
        .map(|(acc, _, _)| acc)
        .reduce(
            || vec![0.0f64; len],
            |mut x, y| {
                for (a, b) in x.iter_mut().zip(y) {
                    *a = a.max(b);
                }
                x
            },
        );
    Ok((values, fam.clamped))
}
