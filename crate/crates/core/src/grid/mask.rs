use super::{CellBox, Window};
use crate::error::{Error, Result};

/// Binary raster of a set `E` over a window: cell `c` is set when it lies in `E`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMask {
    window: Window,
    bits: Vec<bool>,
}

impl GridMask {
    pub fn empty(window: &Window) -> Self {
        GridMask {
            window: window.clone(),
            bits: vec![false; window.len()],
        }
    }

    pub fn full(window: &Window) -> Self {
        GridMask {
            window: window.clone(),
            bits: vec![true; window.len()],
        }
    }

    pub fn from_bits(window: &Window, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != window.len() {
            return Err(Error::Format(format!(
                "bit array has {} cells, window has {}",
                bits.len(),
                window.len()
            )));
        }
        Ok(GridMask {
            window: window.clone(),
            bits,
        })
    }

    pub fn from_fn(window: &Window, mut f: impl FnMut(&[usize]) -> bool) -> Self {
        let bits = (0..window.len()).map(|lin| f(&window.coords(lin))).collect();
        GridMask {
            window: window.clone(),
            bits,
        }
    }

    /// Mask with exactly the cells of `b` set.
    pub fn from_box(window: &Window, b: &CellBox) -> Self {
        GridMask::from_fn(window, |c| b.contains_cell(c))
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, c: &[usize]) -> bool {
        self.bits[self.window.linear(c)]
    }

    pub fn get_linear(&self, lin: usize) -> bool {
        self.bits[lin]
    }

    pub fn set(&mut self, c: &[usize], v: bool) {
        let lin = self.window.linear(c);
        self.bits[lin] = v;
    }

    pub fn count(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Lebesgue measure of the rasterized set: set cells times the cell volume.
    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.window.cell_volume()
    }

    fn zip_with(&self, other: &GridMask, f: impl Fn(bool, bool) -> bool) -> Result<GridMask> {
        if !self.window.same_grid(&other.window) {
            return Err(Error::WindowMismatch);
        }
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(GridMask {
            window: self.window.clone(),
            bits,
        })
    }

    pub fn union(&self, other: &GridMask) -> Result<GridMask> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersect(&self, other: &GridMask) -> Result<GridMask> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &GridMask) -> Result<GridMask> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn is_subset_of(&self, other: &GridMask) -> Result<bool> {
        if !self.window.same_grid(&other.window) {
            return Err(Error::WindowMismatch);
        }
        Ok(self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b))
    }

    /// Chebyshev dilation by `radius` cells (clipped to the window).
    pub fn dilate(&self, radius: usize) -> GridMask {
        if radius == 0 {
            return self.clone();
        }
        let dims = self.window.resolution().to_vec();
        let strides = self.window.strides();
        let mut cur: Vec<bool> = self.bits.clone();
        for axis in 0..dims.len() {
            let len = dims[axis];
            let stride = strides[axis];
            let mut next = vec![false; cur.len()];
            let mut line = vec![0u32; len + 1];
            for base in line_starts(&dims, axis) {
                line[0] = 0;
                for i in 0..len {
                    line[i + 1] = line[i] + cur[base + i * stride] as u32;
                }
                for i in 0..len {
                    let a = i.saturating_sub(radius);
                    let b = (i + radius + 1).min(len);
                    next[base + i * stride] = line[b] > line[a];
                }
            }
            cur = next;
        }
        GridMask {
            window: self.window.clone(),
            bits: cur,
        }
    }

    /// True iff every set cell of `self` lies within Chebyshev distance `slack_cells` of a
    /// set cell of `other`.
    pub fn subset_within(&self, other: &GridMask, slack_cells: usize) -> Result<bool> {
        Ok(self.violations(other, slack_cells)? == 0)
    }

    /// Number of set cells of `self` farther than `slack_cells` from every set cell of `other`.
    pub fn violations(&self, other: &GridMask, slack_cells: usize) -> Result<u64> {
        if !self.window.same_grid(&other.window) {
            return Err(Error::WindowMismatch);
        }
        let grown = other.dilate(slack_cells);
        Ok(self
            .bits
            .iter()
            .zip(&grown.bits)
            .filter(|(&a, &b)| a && !b)
            .count() as u64)
    }

    /// Bounding box of the set cells, `None` for an empty mask.
    pub fn bounding_box(&self) -> Option<CellBox> {
        let n = self.window.n();
        let mut lo = vec![usize::MAX; n];
        let mut hi = vec![0usize; n];
        let mut any = false;
        for (lin, &b) in self.bits.iter().enumerate() {
            if b {
                any = true;
                let c = self.window.coords(lin);
                for i in 0..n {
                    lo[i] = lo[i].min(c[i]);
                    hi[i] = hi[i].max(c[i] + 1);
                }
            }
        }
        any.then(|| CellBox::new(lo, hi))
    }

    /// True when a set cell lies on the outer layer of the window.
    pub fn touches_boundary(&self) -> bool {
        let dims = self.window.resolution();
        self.bits.iter().enumerate().any(|(lin, &b)| {
            b && self
                .window
                .coords(lin)
                .iter()
                .zip(dims)
                .any(|(&c, &d)| c == 0 || c + 1 == d)
        })
    }

    /// Maximal runs of set cells along axis 0, as (linear start, length).
    pub fn runs(&self) -> Vec<(usize, usize)> {
        let n0 = self.window.resolution()[0];
        let mut out = Vec::new();
        for row in (0..self.bits.len()).step_by(n0) {
            let mut i = 0;
            while i < n0 {
                if self.bits[row + i] {
                    let s = i;
                    while i < n0 && self.bits[row + i] {
                        i += 1;
                    }
                    out.push((row + s, i - s));
                } else {
                    i += 1;
                }
            }
        }
        out
    }

    /// Resample onto another window by cell-center lookup (nearest cell of `self`).
    pub fn resample(&self, target: &Window) -> Result<GridMask> {
        if target.n() != self.window.n() {
            return Err(Error::WindowMismatch);
        }
        let n = target.n();
        let mut idx = vec![0usize; n];
        let mut bits = vec![false; target.len()];
        'cells: for (lin, bit) in bits.iter_mut().enumerate() {
            let c = target.coords(lin);
            for a in 0..n {
                let x = target.cell_center(a, c[a]);
                let f = (x - self.window.origin()[a]) / self.window.cell_size(a);
                if f < 0.0 || f >= self.window.resolution()[a] as f64 {
                    continue 'cells;
                }
                idx[a] = f as usize;
            }
            *bit = self.get(&idx);
        }
        Ok(GridMask {
            window: target.clone(),
            bits,
        })
    }
}

/// Linear indices of the first cell of every line along `axis`.
pub(crate) fn line_starts(dims: &[usize], axis: usize) -> Vec<usize> {
    let total: usize = dims.iter().product();
    let mut stride = 1;
    for d in &dims[..axis] {
        stride *= d;
    }
    let span = stride * dims[axis];
    let mut out = Vec::with_capacity(total / dims[axis]);
    for block in (0..total).step_by(span) {
        for off in 0..stride {
            out.push(block + off);
        }
    }
    out
}
