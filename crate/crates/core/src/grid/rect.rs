use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-parallel rectangular parallelepiped `[lo, hi]` with nonempty interior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Rect {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::DegenerateShape("rectangle dimension mismatch".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::DegenerateShape(format!(
                "rectangle {lo:?}..{hi:?} has empty interior"
            )));
        }
        Ok(Rect { lo, hi })
    }

    pub(crate) fn new_unchecked(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Rect { lo, hi }
    }

    /// The cube with the given center and side length.
    pub fn cube(center: &[f64], side: f64) -> Result<Self> {
        Rect::new(
            center.iter().map(|c| c - side / 2.0).collect(),
            center.iter().map(|c| c + side / 2.0).collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.lo.len()
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn max_side(&self) -> f64 {
        (0..self.n()).map(|i| self.side(i)).fold(0.0, f64::max)
    }

    pub fn volume(&self) -> f64 {
        (0..self.n()).map(|i| self.side(i)).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    pub fn is_cube(&self, rel_tol: f64) -> bool {
        let s0 = self.side(0);
        (1..self.n()).all(|i| (self.side(i) - s0).abs() <= rel_tol * s0)
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        p.iter()
            .enumerate()
            .all(|(i, &x)| x >= self.lo[i] && x <= self.hi[i])
    }

    pub fn contains_rect(&self, other: &Rect, tol: f64) -> bool {
        (0..self.n()).all(|i| other.lo[i] >= self.lo[i] - tol && other.hi[i] <= self.hi[i] + tol)
    }

    /// True when the interiors overlap.
    pub fn overlaps(&self, other: &Rect) -> bool {
        (0..self.n()).all(|i| self.lo[i] < other.hi[i] && other.lo[i] < self.hi[i])
    }

    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let lo: Vec<f64> = (0..self.n()).map(|i| self.lo[i].max(other.lo[i])).collect();
        let hi: Vec<f64> = (0..self.n()).map(|i| self.hi[i].min(other.hi[i])).collect();
        Rect::new(lo, hi).ok()
    }

    /// Concentric dilate by `factor`.
    pub fn dilate(&self, factor: f64) -> Rect {
        let c = self.center();
        Rect::new_unchecked(
            (0..self.n())
                .map(|i| c[i] - 0.5 * factor * self.side(i))
                .collect(),
            (0..self.n())
                .map(|i| c[i] + 0.5 * factor * self.side(i))
                .collect(),
        )
    }

    /// Homothety about `anchor` with ratio `factor`.
    pub fn scale_about(&self, anchor: &[f64], factor: f64) -> Rect {
        Rect::new_unchecked(
            (0..self.n())
                .map(|i| anchor[i] + factor * (self.lo[i] - anchor[i]))
                .collect(),
            (0..self.n())
                .map(|i| anchor[i] + factor * (self.hi[i] - anchor[i]))
                .collect(),
        )
    }

    pub fn translate(&self, v: &[f64]) -> Rect {
        Rect::new_unchecked(
            self.lo.iter().zip(v).map(|(a, d)| a + d).collect(),
            self.hi.iter().zip(v).map(|(a, d)| a + d).collect(),
        )
    }

    /// Corner points, `2^n` of them.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        (0..1usize << n)
            .map(|m| {
                (0..n)
                    .map(|i| if m >> i & 1 == 1 { self.hi[i] } else { self.lo[i] })
                    .collect()
            })
            .collect()
    }
}

/// Lebesgue measure of a finite union of rectangles, by coordinate compression.
pub fn union_volume(rects: &[Rect]) -> f64 {
    if rects.is_empty() {
        return 0.0;
    }
    let n = rects[0].n();
    let mut cuts: Vec<Vec<f64>> = vec![Vec::new(); n];
    for r in rects {
        for (i, c) in cuts.iter_mut().enumerate() {
            c.push(r.lo[i]);
            c.push(r.hi[i]);
        }
    }
    for c in cuts.iter_mut() {
        c.sort_by(|a, b| a.total_cmp(b));
        c.dedup();
    }
    let dims: Vec<usize> = cuts.iter().map(|c| c.len().saturating_sub(1)).collect();
    let total: usize = dims.iter().product();
    if total == 0 {
        return 0.0;
    }
    let mut covered = vec![false; total];
    for r in rects {
        let ranges: Vec<(usize, usize)> = (0..n)
            .map(|i| {
                let a = cuts[i].partition_point(|&x| x < r.lo[i]);
                let b = cuts[i].partition_point(|&x| x < r.hi[i]);
                (a, b)
            })
            .collect();
        mark_ranges(&mut covered, &dims, &ranges);
    }
    let mut vol = 0.0;
    let mut idx = vec![0usize; n];
    for (lin, &c) in covered.iter().enumerate() {
        let mut l = lin;
        for i in 0..n {
            idx[i] = l % dims[i];
            l /= dims[i];
        }
        if c {
            vol += (0..n)
                .map(|i| cuts[i][idx[i] + 1] - cuts[i][idx[i]])
                .product::<f64>();
        }
    }
    vol
}

fn mark_ranges(covered: &mut [bool], dims: &[usize], ranges: &[(usize, usize)]) {
    let n = dims.len();
    if ranges.iter().any(|(a, b)| a >= b) {
        return;
    }
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    loop {
        let mut lin = 0;
        let mut acc = 1;
        for i in 0..n {
            lin += idx[i] * acc;
            acc *= dims[i];
        }
        covered[lin] = true;
        let mut axis = 0;
        loop {
            if axis == n {
                return;
            }
            idx[axis] += 1;
            if idx[axis] < ranges[axis].1 {
                break;
            }
            idx[axis] = ranges[axis].0;
            axis += 1;
        }
    }
}
