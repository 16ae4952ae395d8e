use serde::{Deserialize, Serialize};

use super::{CellBox, GridMask, Rect, Window};
use crate::convex::ConvexBody;
use crate::error::{Error, Result};

/// A set described geometrically, to be rasterized onto a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeSpec {
    Rect { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Polytope { body: ConvexBody },
    Union { parts: Vec<ShapeSpec> },
}

impl ShapeSpec {
    pub fn rect(r: &Rect) -> Self {
        ShapeSpec::Rect {
            lo: r.lo.clone(),
            hi: r.hi.clone(),
        }
    }

    pub fn n(&self) -> Option<usize> {
        match self {
            ShapeSpec::Rect { lo, .. } => Some(lo.len()),
            ShapeSpec::Ball { center, .. } => Some(center.len()),
            ShapeSpec::Polytope { body } => Some(body.n()),
            ShapeSpec::Union { parts } => parts.first().and_then(|p| p.n()),
        }
    }

    /// Smallest axis-parallel box containing the shape.
    pub fn bounding_rect(&self) -> Result<Rect> {
        match self {
            ShapeSpec::Rect { lo, hi } => Rect::new(lo.clone(), hi.clone()),
            ShapeSpec::Ball { center, radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::DegenerateShape(format!("ball radius {radius}")));
                }
                Rect::new(
                    center.iter().map(|c| c - radius).collect(),
                    center.iter().map(|c| c + radius).collect(),
                )
            }
            ShapeSpec::Polytope { body } => Ok(body.bounding_rect()),
            ShapeSpec::Union { parts } => {
                let mut it = parts.iter();
                let first = it
                    .next()
                    .ok_or_else(|| Error::DegenerateShape("empty union".into()))?
                    .bounding_rect()?;
                let (mut lo, mut hi) = (first.lo, first.hi);
                for p in it {
                    let b = p.bounding_rect()?;
                    if b.n() != lo.len() {
                        return Err(Error::DegenerateShape("union of mixed dimensions".into()));
                    }
                    for i in 0..lo.len() {
                        lo[i] = lo[i].min(b.lo[i]);
                        hi[i] = hi[i].max(b.hi[i]);
                    }
                }
                Ok(Rect::new_unchecked(lo, hi))
            }
        }
    }

    fn contains(&self, p: &[f64], tol: f64) -> bool {
        match self {
            ShapeSpec::Rect { lo, hi } => p
                .iter()
                .enumerate()
                .all(|(i, &x)| x >= lo[i] - tol && x <= hi[i] + tol),
            ShapeSpec::Ball { center, radius } => {
                let d2: f64 = p.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                d2.sqrt() <= radius + tol
            }
            ShapeSpec::Polytope { body } => body.contains_tol(p, tol),
            ShapeSpec::Union { parts } => parts.iter().any(|s| s.contains(p, tol)),
        }
    }
}

/// Rasterize by the center rule: a cell is set iff its center lies in the (closed) shape.
pub fn rasterize(shape: &ShapeSpec, window: &Window) -> Result<GridMask> {
    if shape.n() != Some(window.n()) {
        return Err(Error::DegenerateShape(format!(
            "shape dimension {:?} does not match window dimension {}",
            shape.n(),
            window.n()
        )));
    }
    shape.bounding_rect()?;
    let mut mask = GridMask::empty(window);
    paint(shape, window, &mut mask)?;
    Ok(mask)
}

// Unions are painted part by part so each part only visits its own bounding box.
fn paint(shape: &ShapeSpec, window: &Window, mask: &mut GridMask) -> Result<()> {
    if let ShapeSpec::Union { parts } = shape {
        for p in parts {
            paint(p, window, mask)?;
        }
        return Ok(());
    }
    let Some(cells) = window.snap(&shape.bounding_rect()?) else {
        return Ok(());
    };
    let tol = 1e-9 * window.min_cell_size();
    for_each_cell(&cells, |c| {
        if shape.contains(&window.center_point(c), tol) {
            mask.set(c, true);
        }
    });
    Ok(())
}

pub(crate) fn for_each_cell(b: &CellBox, mut f: impl FnMut(&[usize])) {
    if b.is_empty() {
        return;
    }
    let n = b.n();
    let mut c = b.lo.clone();
    loop {
        f(&c);
        let mut axis = 0;
        loop {
            if axis == n {
                return;
            }
            c[axis] += 1;
            if c[axis] < b.hi[axis] {
                break;
            }
            c[axis] = b.lo[axis];
            axis += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_exact() {
        let w = Window::uniform(1, -2.0, 3.0, 5000).unwrap();
        let m = rasterize(&ShapeSpec::Rect { lo: vec![0.0], hi: vec![1.0] }, &w).unwrap();
        assert_eq!(m.count(), 1000);
        assert!((m.measure() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_square_within_a_cell() {
        let w = Window::uniform(2, -2.0, 3.0, 500).unwrap();
        let m = rasterize(
            &ShapeSpec::Rect { lo: vec![0.0; 2], hi: vec![1.0; 2] },
            &w,
        )
        .unwrap();
        assert!((m.measure() - 1.0).abs() <= w.cell_size(0));
    }

    #[test]
    fn disk_area_within_one_percent() {
        let w = Window::uniform(2, -2.0, 2.0, 1024).unwrap();
        let m = rasterize(&ShapeSpec::Ball { center: vec![0.0; 2], radius: 1.0 }, &w).unwrap();
        assert!((m.measure() / std::f64::consts::PI - 1.0).abs() < 0.01);
    }

    #[test]
    fn zero_radius_is_degenerate() {
        let w = Window::uniform(2, -2.0, 2.0, 16).unwrap();
        let s = ShapeSpec::Ball { center: vec![0.0; 2], radius: 0.0 };
        assert!(matches!(rasterize(&s, &w), Err(Error::DegenerateShape(_))));
    }

    #[test]
    fn polygon_matches_rect() {
        let w = Window::uniform(2, -1.0, 2.0, 96).unwrap();
        let r = Rect::new(vec![0.1, 0.2], vec![0.9, 1.3]).unwrap();
        let a = rasterize(&ShapeSpec::rect(&r), &w).unwrap();
        let b = rasterize(
            &ShapeSpec::Polytope { body: ConvexBody::from_rect(&r).unwrap() },
            &w,
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
