use serde::{Deserialize, Serialize};

use super::Rect;
use crate::error::{Error, Result};

/// Axis-aligned box of cells, half-open per axis: `lo[i] <= c[i] < hi[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellBox {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
}

impl CellBox {
    pub fn new(lo: Vec<usize>, hi: Vec<usize>) -> Self {
        debug_assert_eq!(lo.len(), hi.len());
        CellBox { lo, hi }
    }

    pub fn n(&self) -> usize {
        self.lo.len()
    }

    pub fn side(&self, axis: usize) -> usize {
        self.hi[axis].saturating_sub(self.lo[axis])
    }

    pub fn cells(&self) -> u64 {
        (0..self.n()).map(|i| self.side(i) as u64).product()
    }

    pub fn is_empty(&self) -> bool {
        (0..self.n()).any(|i| self.hi[i] <= self.lo[i])
    }

    pub fn contains_cell(&self, c: &[usize]) -> bool {
        c.iter()
            .enumerate()
            .all(|(i, &v)| v >= self.lo[i] && v < self.hi[i])
    }

    pub fn contains_box(&self, other: &CellBox) -> bool {
        (0..self.n()).all(|i| other.lo[i] >= self.lo[i] && other.hi[i] <= self.hi[i])
    }

    pub fn intersects(&self, other: &CellBox) -> bool {
        (0..self.n()).all(|i| self.lo[i] < other.hi[i] && other.lo[i] < self.hi[i])
    }
}

/// A finite rectangular window of R^n discretized into `resolution[i]` cells per axis.
///
/// Cells are addressed by integer coordinates; the linear index stores axis 0 fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    origin: Vec<f64>,
    extent: Vec<f64>,
    resolution: Vec<usize>,
}

impl Window {
    pub fn new(origin: Vec<f64>, extent: Vec<f64>, resolution: Vec<usize>) -> Result<Self> {
        let n = origin.len();
        if n == 0 || extent.len() != n || resolution.len() != n {
            return Err(Error::InvalidWindow(format!(
                "origin/extent/resolution lengths {}/{}/{}",
                origin.len(),
                extent.len(),
                resolution.len()
            )));
        }
        for i in 0..n {
            if !(extent[i].is_finite() && extent[i] > 0.0) {
                return Err(Error::InvalidWindow(format!("extent[{i}] = {}", extent[i])));
            }
            if !origin[i].is_finite() {
                return Err(Error::InvalidWindow(format!("origin[{i}] not finite")));
            }
            if resolution[i] == 0 {
                return Err(Error::InvalidWindow(format!("resolution[{i}] = 0")));
            }
        }
        let total = resolution
            .iter()
            .try_fold(1usize, |acc, &r| acc.checked_mul(r))
            .ok_or_else(|| Error::InvalidWindow("cell count overflows".into()))?;
        if total > (1 << 30) {
            return Err(Error::InvalidWindow(format!("{total} cells is too many")));
        }
        Ok(Window {
            origin,
            extent,
            resolution,
        })
    }

    /// The cube `[lo, hi]^n` with `cells` cells per axis.
    pub fn uniform(n: usize, lo: f64, hi: f64, cells: usize) -> Result<Self> {
        Window::new(vec![lo; n], vec![hi - lo; n], vec![cells; n])
    }

    pub fn n(&self) -> usize {
        self.origin.len()
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn cell_size(&self, axis: usize) -> f64 {
        self.extent[axis] / self.resolution[axis] as f64
    }

    pub fn cell_sizes(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.cell_size(i)).collect()
    }

    pub fn min_cell_size(&self) -> f64 {
        self.cell_sizes().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.n()).map(|i| self.cell_size(i)).product()
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn volume(&self) -> f64 {
        self.extent.iter().product()
    }

    pub fn max_resolution(&self) -> usize {
        self.resolution.iter().copied().max().unwrap_or(0)
    }

    /// Cells are isotropic when every axis has the same cell size (to 1e-9 relative).
    pub fn is_isotropic(&self) -> bool {
        let h0 = self.cell_size(0);
        (1..self.n()).all(|i| (self.cell_size(i) - h0).abs() <= 1e-9 * h0)
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = Vec::with_capacity(self.n());
        let mut acc = 1;
        for &r in &self.resolution {
            s.push(acc);
            acc *= r;
        }
        s
    }

    pub fn linear(&self, c: &[usize]) -> usize {
        let mut idx = 0;
        let mut acc = 1;
        for (i, &v) in c.iter().enumerate() {
            idx += v * acc;
            acc *= self.resolution[i];
        }
        idx
    }

    pub fn coords(&self, mut lin: usize) -> Vec<usize> {
        let mut c = Vec::with_capacity(self.n());
        for &r in &self.resolution {
            c.push(lin % r);
            lin /= r;
        }
        c
    }

    pub fn cell_center(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + (i as f64 + 0.5) * self.cell_size(axis)
    }

    pub fn center_point(&self, c: &[usize]) -> Vec<f64> {
        c.iter()
            .enumerate()
            .map(|(a, &i)| self.cell_center(a, i))
            .collect()
    }

    /// The whole window as a cell box.
    pub fn full_box(&self) -> CellBox {
        CellBox::new(vec![0; self.n()], self.resolution.clone())
    }

    /// The window as a real rectangle.
    pub fn bounds(&self) -> Rect {
        let hi = self
            .origin
            .iter()
            .zip(&self.extent)
            .map(|(o, e)| o + e)
            .collect();
        Rect::new_unchecked(self.origin.clone(), hi)
    }

    /// Index range of the cells whose centers lie in the closed interval `[lo, hi]` on `axis`,
    /// clipped to the window. Returned half-open; may be empty.
    pub fn snap_interval(&self, axis: usize, lo: f64, hi: f64) -> (usize, usize) {
        let h = self.cell_size(axis);
        let o = self.origin[axis];
        let n = self.resolution[axis] as f64;
        let a = ((lo - o) / h - 0.5 - 1e-9).ceil().clamp(0.0, n);
        let b = ((hi - o) / h - 0.5 + 1e-9).floor() + 1.0;
        let b = b.clamp(0.0, n);
        (a as usize, (b as usize).max(a as usize))
    }

    /// Snap a rectangle to the cells whose centers it contains (center rule).
    pub fn snap(&self, r: &Rect) -> Option<CellBox> {
        if r.n() != self.n() {
            return None;
        }
        let mut lo = Vec::with_capacity(self.n());
        let mut hi = Vec::with_capacity(self.n());
        for i in 0..self.n() {
            let (a, b) = self.snap_interval(i, r.lo[i], r.hi[i]);
            if b <= a {
                return None;
            }
            lo.push(a);
            hi.push(b);
        }
        Some(CellBox::new(lo, hi))
    }

    /// Physical rectangle covered by a cell box.
    pub fn cell_rect(&self, b: &CellBox) -> Rect {
        let lo = (0..self.n())
            .map(|i| self.origin[i] + b.lo[i] as f64 * self.cell_size(i))
            .collect();
        let hi = (0..self.n())
            .map(|i| self.origin[i] + b.hi[i] as f64 * self.cell_size(i))
            .collect();
        Rect::new_unchecked(lo, hi)
    }

    /// Same geometry and resolution up to rounding.
    pub fn same_grid(&self, other: &Window) -> bool {
        self.n() == other.n()
            && self.resolution == other.resolution
            && (0..self.n()).all(|i| {
                let tol = 1e-9 * self.extent[i].abs().max(1.0);
                (self.origin[i] - other.origin[i]).abs() <= tol
                    && (self.extent[i] - other.extent[i]).abs() <= tol
            })
    }

    /// The same region at `factor` times the resolution on every axis.
    pub fn refined(&self, factor: usize) -> Result<Window> {
        Window::new(
            self.origin.clone(),
            self.extent.clone(),
            self.resolution.iter().map(|r| r * factor).collect(),
        )
    }

    /// Homothetic copy of the window scaled by `factor` about the coordinate origin,
    /// keeping the cell counts.
    pub fn scaled(&self, factor: f64) -> Result<Window> {
        Window::new(
            self.origin.iter().map(|o| o * factor).collect(),
            self.extent.iter().map(|e| e * factor).collect(),
            self.resolution.clone(),
        )
    }
}
