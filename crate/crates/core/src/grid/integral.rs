use super::{CellBox, GridMask, Rect, Window};
use crate::error::{Error, Result};

/// Inclusive prefix sums of a mask, padded with a zero layer on the low side of every axis
/// so that any cell box is counted from `2^n` corner lookups.
#[derive(Clone, Debug)]
pub struct IntegralImage {
    window: Window,
    dims: Vec<usize>,
    strides: Vec<usize>,
    sums: Vec<u32>,
}

impl IntegralImage {
    pub fn new(mask: &GridMask) -> Self {
        let window = mask.window().clone();
        let dims: Vec<usize> = window.resolution().iter().map(|d| d + 1).collect();
        let mut strides = Vec::with_capacity(dims.len());
        let mut acc = 1;
        for d in &dims {
            strides.push(acc);
            acc *= d;
        }
        let mut sums = vec![0u32; acc];
        for (lin, &b) in mask.bits().iter().enumerate() {
            if b {
                let c = window.coords(lin);
                let p: usize = c.iter().zip(&strides).map(|(ci, s)| (ci + 1) * s).sum();
                sums[p] = 1;
            }
        }
        for axis in 0..dims.len() {
            let s = strides[axis];
            for p in 0..sums.len() {
                if (p / s) % dims[axis] != 0 {
                    sums[p] += sums[p - s];
                }
            }
        }
        IntegralImage {
            window,
            dims,
            strides,
            sums,
        }
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn total(&self) -> u64 {
        *self.sums.last().unwrap_or(&0) as u64
    }

    /// Number of set cells in a cell box.
    pub fn count_box(&self, b: &CellBox) -> u64 {
        let n = self.dims.len();
        if b.is_empty() {
            return 0;
        }
        let mut total: i64 = 0;
        for m in 0..1usize << n {
            let mut p = 0;
            let mut neg = false;
            for i in 0..n {
                if m >> i & 1 == 1 {
                    p += b.hi[i] * self.strides[i];
                } else {
                    p += b.lo[i] * self.strides[i];
                    neg = !neg;
                }
            }
            let v = self.sums[p] as i64;
            total += if neg { -v } else { v };
        }
        total as u64
    }

    pub fn average_box(&self, b: &CellBox) -> f64 {
        self.count_box(b) as f64 / b.cells() as f64
    }

    /// Cells of `E` inside the rectangle snapped by the center rule.
    pub fn rect_count(&self, r: &Rect) -> Result<u64> {
        let b = self.window.snap(r).ok_or(Error::DegenerateQuery)?;
        Ok(self.count_box(&b))
    }

    /// `(cells of E in snapped r) / (cells in snapped r)`.
    pub fn rect_average(&self, r: &Rect) -> Result<f64> {
        let b = self.window.snap(r).ok_or(Error::DegenerateQuery)?;
        Ok(self.average_box(&b))
    }
}
