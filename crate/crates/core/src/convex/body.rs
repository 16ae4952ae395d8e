use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Rect;

/// A full-dimensional convex polytope given by its extreme points (counterclockwise in 2D),
/// with a cached half-space representation `normal · x <= offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BodyFile", into = "BodyFile")]
pub struct ConvexBody {
    n: usize,
    vertices: Vec<Vec<f64>>,
    normals: Vec<Vec<f64>>,
    offsets: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BodyFile {
    pub n: usize,
    pub vertices: Vec<Vec<f64>>,
}

impl TryFrom<BodyFile> for ConvexBody {
    type Error = Error;
    fn try_from(f: BodyFile) -> Result<Self> {
        if f.vertices.iter().any(|v| v.len() != f.n) {
            return Err(Error::DegenerateShape("vertex dimension mismatch".into()));
        }
        ConvexBody::from_points(f.n, &f.vertices)
    }
}

impl From<ConvexBody> for BodyFile {
    fn from(b: ConvexBody) -> Self {
        BodyFile {
            n: b.n,
            vertices: b.vertices,
        }
    }
}

fn cross(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

impl ConvexBody {
    /// Convex hull of the given points. Errors when the hull has no interior.
    pub fn from_points(n: usize, points: &[Vec<f64>]) -> Result<Self> {
        match n {
            1 => {
                let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
                let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
                if !(lo < hi) {
                    return Err(Error::DegenerateShape("interval has zero length".into()));
                }
                Ok(ConvexBody {
                    n,
                    vertices: vec![vec![lo], vec![hi]],
                    normals: vec![vec![-1.0], vec![1.0]],
                    offsets: vec![-lo, hi],
                })
            }
            2 => {
                let mut pts: Vec<Vec<f64>> = points.to_vec();
                pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
                pts.dedup();
                if pts.len() < 3 {
                    return Err(Error::DegenerateShape("fewer than 3 distinct points".into()));
                }
                let mut lower: Vec<Vec<f64>> = Vec::new();
                for p in &pts {
                    while lower.len() >= 2
                        && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0
                    {
                        lower.pop();
                    }
                    lower.push(p.clone());
                }
                let mut upper: Vec<Vec<f64>> = Vec::new();
                for p in pts.iter().rev() {
                    while upper.len() >= 2
                        && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0
                    {
                        upper.pop();
                    }
                    upper.push(p.clone());
                }
                lower.pop();
                upper.pop();
                lower.extend(upper);
                let hull = lower;
                if hull.len() < 3 {
                    return Err(Error::DegenerateShape("points are collinear".into()));
                }
                let body = ConvexBody::from_ccw(hull);
                let scale = body
                    .vertices
                    .iter()
                    .map(|v| v[0].abs().max(v[1].abs()))
                    .fold(1e-300, f64::max);
                if body.volume() <= 1e-12 * scale * scale {
                    return Err(Error::DegenerateShape("polygon has zero area".into()));
                }
                Ok(body)
            }
            _ => Err(Error::Unsupported(format!(
                "convex bodies in dimension {n} (supported: 1, 2)"
            ))),
        }
    }

    fn from_ccw(vertices: Vec<Vec<f64>>) -> Self {
        let k = vertices.len();
        let mut normals = Vec::with_capacity(k);
        let mut offsets = Vec::with_capacity(k);
        for i in 0..k {
            let a = &vertices[i];
            let b = &vertices[(i + 1) % k];
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let len = (dx * dx + dy * dy).sqrt();
            let nrm = vec![dy / len, -dx / len];
            offsets.push(nrm[0] * a[0] + nrm[1] * a[1]);
            normals.push(nrm);
        }
        ConvexBody {
            n: 2,
            vertices,
            normals,
            offsets,
        }
    }

    /// Axis-parallel box as a body.
    pub fn from_rect(r: &Rect) -> Result<Self> {
        ConvexBody::from_points(r.n(), &r.corners())
    }

    /// Regular polygon with `k` vertices on the circle of radius `radius` about `center`.
    pub fn regular_polygon(k: usize, center: [f64; 2], radius: f64, phase: f64) -> Result<Self> {
        let pts: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                let t = phase + std::f64::consts::TAU * i as f64 / k as f64;
                vec![center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            })
            .collect();
        ConvexBody::from_points(2, &pts)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    /// Half-spaces `(normal, offset)`; unit normals.
    pub fn halfspaces(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.normals
            .iter()
            .map(|v| v.as_slice())
            .zip(self.offsets.iter().copied())
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.contains_tol(p, 0.0)
    }

    /// Membership with an outward tolerance in length units.
    pub fn contains_tol(&self, p: &[f64], tol: f64) -> bool {
        self.halfspaces()
            .all(|(a, b)| a.iter().zip(p).map(|(x, y)| x * y).sum::<f64>() <= b + tol)
    }

    pub fn volume(&self) -> f64 {
        match self.n {
            1 => self.vertices[1][0] - self.vertices[0][0],
            _ => {
                let k = self.vertices.len();
                0.5 * (0..k)
                    .map(|i| {
                        let a = &self.vertices[i];
                        let b = &self.vertices[(i + 1) % k];
                        a[0] * b[1] - a[1] * b[0]
                    })
                    .sum::<f64>()
            }
        }
    }

    /// Mean of the vertices; an interior point.
    pub fn vertex_centroid(&self) -> Vec<f64> {
        let k = self.vertices.len() as f64;
        (0..self.n)
            .map(|i| self.vertices.iter().map(|v| v[i]).sum::<f64>() / k)
            .collect()
    }

    pub fn bounding_rect(&self) -> Rect {
        let lo = (0..self.n)
            .map(|i| self.vertices.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min))
            .collect();
        let hi = (0..self.n)
            .map(|i| {
                self.vertices
                    .iter()
                    .map(|v| v[i])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        Rect::new_unchecked(lo, hi)
    }

    /// Image under `x -> anchor + factor (x - anchor)`.
    pub fn scale_about(&self, anchor: &[f64], factor: f64) -> ConvexBody {
        self.map_points(|v| {
            v.iter()
                .zip(anchor)
                .map(|(x, a)| a + factor * (x - a))
                .collect()
        })
    }

    pub fn translate(&self, t: &[f64]) -> ConvexBody {
        self.map_points(|v| v.iter().zip(t).map(|(x, d)| x + d).collect())
    }

    /// Image under `x -> factor x + shift`.
    pub fn homothety(&self, factor: f64, shift: &[f64]) -> ConvexBody {
        self.map_points(|v| v.iter().zip(shift).map(|(x, d)| factor * x + d).collect())
    }

    /// Image under an orientation-agnostic affine map (re-hulls the vertices).
    pub fn map_affine(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<ConvexBody> {
        let pts: Vec<Vec<f64>> = self.vertices.iter().map(|v| f(v)).collect();
        ConvexBody::from_points(self.n, &pts)
    }

    fn map_points(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> ConvexBody {
        let pts: Vec<Vec<f64>> = self.vertices.iter().map(|v| f(v)).collect();
        match self.n {
            1 => ConvexBody::from_points(1, &pts).expect("positive homothety keeps the interval"),
            _ => ConvexBody::from_ccw(pts),
        }
    }

    /// True when every vertex of `inner` lies in `self` (up to `tol`).
    pub fn contains_body(&self, inner: &ConvexBody, tol: f64) -> bool {
        inner.vertices.iter().all(|v| self.contains_tol(v, tol))
    }

    pub fn contains_rect(&self, r: &Rect, tol: f64) -> bool {
        r.corners().iter().all(|c| self.contains_tol(c, tol))
    }
}
