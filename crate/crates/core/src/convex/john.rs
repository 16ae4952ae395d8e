use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ellipsoid::{mvee, Ellipsoid};
use super::ConvexBody;
use crate::error::{Error, Result};

/// Rectangle `{c + Σ s_i u_i : |s_i| <= w_i}` with orthonormal directions `u_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientedRect {
    pub center: Vec<f64>,
    pub axes: Vec<Vec<f64>>,
    pub half_widths: Vec<f64>,
}

impl OrientedRect {
    pub fn n(&self) -> usize {
        self.center.len()
    }

    pub fn volume(&self) -> f64 {
        self.half_widths.iter().map(|w| 2.0 * w).product()
    }

    /// Coordinates of `x` in the rectangle's frame.
    pub fn local(&self, x: &[f64]) -> Vec<f64> {
        self.axes
            .iter()
            .map(|u| u.iter().zip(x).zip(&self.center).map(|((a, b), c)| a * (b - c)).sum())
            .collect()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.local(x)
            .iter()
            .zip(&self.half_widths)
            .all(|(s, w)| s.abs() <= w + tol)
    }

    pub fn dilate(&self, f: f64) -> OrientedRect {
        OrientedRect {
            center: self.center.clone(),
            axes: self.axes.clone(),
            half_widths: self.half_widths.iter().map(|w| w * f).collect(),
        }
    }

    pub fn corners(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        (0..1usize << n)
            .map(|m| {
                let mut p = self.center.clone();
                for (k, u) in self.axes.iter().enumerate() {
                    let s = if m >> k & 1 == 1 { 1.0 } else { -1.0 } * self.half_widths[k];
                    for i in 0..n {
                        p[i] += s * u[i];
                    }
                }
                p
            })
            .collect()
    }

    pub fn to_body(&self) -> Result<ConvexBody> {
        ConvexBody::from_points(self.n(), &self.corners())
    }
}

/// `x -> A x + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl AffineMap {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(row, bi)| row.iter().zip(x).map(|(r, v)| r * v).sum::<f64>() + bi)
            .collect()
    }

    fn matrix(&self) -> DMatrix<f64> {
        let n = self.b.len();
        DMatrix::from_fn(n, n, |i, j| self.a[i][j])
    }

    pub fn determinant(&self) -> f64 {
        self.matrix().determinant()
    }

    pub fn inverse(&self) -> Result<AffineMap> {
        let n = self.b.len();
        let inv = self
            .matrix()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("affine map is singular".into()))?;
        let b = -(&inv * DVector::from_column_slice(&self.b));
        Ok(AffineMap {
            a: (0..n).map(|i| (0..n).map(|j| inv[(i, j)]).collect()).collect(),
            b: b.iter().copied().collect(),
        })
    }
}

/// Rectangle `R` with `R ⊆ Λ ⊆ n^{3/2}(1+ε) R`, from the inner John ellipsoid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JohnRect {
    pub rect: OrientedRect,
    pub outer: Ellipsoid,
    pub inner: Ellipsoid,
    pub eps: f64,
    /// Factor `n^{3/2}(1+ε)` of the outer containment.
    pub outer_factor: f64,
}

fn ellipsoid_inside(e: &Ellipsoid, body: &ConvexBody) -> bool {
    body.halfspaces().all(|(a, b)| {
        let scale = b.abs().max(1.0);
        e.support(a) <= b + 1e-10 * scale
    })
}

pub fn john_rectangle(body: &ConvexBody, eps: f64) -> Result<JohnRect> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("ε = {eps} must lie in (0, 1)")));
    }
    let n = body.n() as f64;
    let shrink = 1.0 / ((1.0 + eps) * n);
    let mut tol = eps;
    loop {
        let outer = mvee(body.vertices(), tol)?;
        let inner = outer.scaled(shrink);
        if ellipsoid_inside(&inner, body) {
            let (axes, semi) = inner.axes();
            let rect = OrientedRect {
                center: inner.center.clone(),
                axes,
                half_widths: semi.iter().map(|s| s / n.sqrt()).collect(),
            };
            return Ok(JohnRect {
                rect,
                outer,
                inner,
                eps,
                outer_factor: n.powf(1.5) * (1.0 + eps),
            });
        }
        tol *= 0.1;
        if tol < 1e-12 {
            return Err(Error::Numerical(
                "inner ellipsoid never fit inside the body".into(),
            ));
        }
    }
}

/// Affine normalization sending the John rectangle of `Λ` onto `[0, 1]^n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Normalization {
    pub map: AffineMap,
    pub inverse: AffineMap,
    pub body: ConvexBody,
    pub john: JohnRect,
    /// Smallest `c` with `T(Λ) ⊆ c·Q` about the center of `Q = [0,1]^n`.
    pub containment: f64,
}

pub fn normalize_to_unit_cube(body: &ConvexBody, eps: f64) -> Result<Normalization> {
    let john = john_rectangle(body, eps)?;
    let r = &john.rect;
    let n = body.n();
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| r.axes[i].iter().map(|u| u / (2.0 * r.half_widths[i])).collect())
        .collect();
    let b: Vec<f64> = (0..n)
        .map(|i| 0.5 - a[i].iter().zip(&r.center).map(|(x, c)| x * c).sum::<f64>())
        .collect();
    let map = AffineMap { a, b };
    let inverse = map.inverse()?;
    let normalized = body.map_affine(|v| map.apply(v))?;
    let containment = normalized
        .vertices()
        .iter()
        .flat_map(|v| v.iter().map(|x| 2.0 * (x - 0.5).abs()))
        .fold(0.0, f64::max);
    Ok(Normalization {
        map,
        inverse,
        body: normalized,
        john,
        containment,
    })
}
