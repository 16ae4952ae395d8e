use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `{x : (x - c)ᵀ S⁻¹ (x - c) <= 1}` with `S` symmetric positive definite (length²).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub center: Vec<f64>,
    pub shape: Vec<Vec<f64>>,
}

impl Ellipsoid {
    pub fn new(center: Vec<f64>, shape: DMatrix<f64>) -> Result<Self> {
        let n = center.len();
        if shape.nrows() != n || shape.ncols() != n {
            return Err(Error::DegenerateShape("shape matrix size".into()));
        }
        let eig = SymmetricEigen::new(shape.clone());
        if eig.eigenvalues.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::DegenerateShape(
                "shape matrix is not positive definite".into(),
            ));
        }
        Ok(Ellipsoid {
            center,
            shape: (0..n)
                .map(|i| (0..n).map(|j| shape[(i, j)]).collect())
                .collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.center.len()
    }

    pub fn shape_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| self.shape[i][j])
    }

    /// Concentric scaling of every semi-axis by `f`.
    pub fn scaled(&self, f: f64) -> Ellipsoid {
        Ellipsoid {
            center: self.center.clone(),
            shape: self
                .shape
                .iter()
                .map(|r| r.iter().map(|v| v * f * f).collect())
                .collect(),
        }
    }

    /// `max_{x in E} dir · x`.
    pub fn support(&self, dir: &[f64]) -> f64 {
        let d = DVector::from_column_slice(dir);
        let c: f64 = self.center.iter().zip(dir).map(|(a, b)| a * b).sum();
        c + (d.transpose() * self.shape_matrix() * &d)[(0, 0)].max(0.0).sqrt()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        let n = self.n();
        let d = DVector::from_fn(n, |i, _| x[i] - self.center[i]);
        let inv = self
            .shape_matrix()
            .try_inverse()
            .expect("positive definite shape is invertible");
        (d.transpose() * inv * &d)[(0, 0)] <= 1.0 + tol
    }

    /// Principal directions (unit rows) and semi-axis lengths.
    pub fn axes(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let eig = SymmetricEigen::new(self.shape_matrix());
        let n = self.n();
        let dirs = (0..n)
            .map(|k| (0..n).map(|i| eig.eigenvectors[(i, k)]).collect())
            .collect();
        let semi = eig.eigenvalues.iter().map(|v| v.sqrt()).collect();
        (dirs, semi)
    }
}

/// Minimum-volume enclosing ellipsoid of a point set (Khachiyan's iteration), scaled up so
/// that it contains every point exactly.
pub fn mvee(points: &[Vec<f64>], eps: f64) -> Result<Ellipsoid> {
    if !(eps > 0.0) {
        return Err(Error::Domain("mvee tolerance must be positive".into()));
    }
    let m = points.len();
    let d = points.first().map_or(0, |p| p.len());
    if d == 0 || m < d + 1 {
        return Err(Error::DegenerateShape(format!(
            "{m} points cannot span dimension {d}"
        )));
    }
    let p = DMatrix::from_fn(d, m, |i, j| points[j][i]);
    let mean = p.column_mean();
    let centered = DMatrix::from_fn(d, m, |i, j| p[(i, j)] - mean[i]);
    let sv = centered.clone().svd(false, false).singular_values;
    let scale = sv.max().max(1e-300);
    if sv.min() <= 1e-10 * scale {
        return Err(Error::DegenerateShape("points do not span the space".into()));
    }
    let mut q = DMatrix::from_element(d + 1, m, 1.0);
    q.view_mut((0, 0), (d, m)).copy_from(&p);
    let mut u = DVector::from_element(m, 1.0 / m as f64);
    let dd = (d + 1) as f64;
    for _ in 0..200_000 {
        let x = &q * DMatrix::from_diagonal(&u) * q.transpose();
        let xinv = x
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular moment matrix".into()))?;
        let mut best = 0;
        let mut best_m = f64::NEG_INFINITY;
        for j in 0..m {
            let col = q.column(j);
            let v = (col.transpose() * &xinv * col)[(0, 0)];
            if v > best_m {
                best_m = v;
                best = j;
            }
        }
        if best_m <= dd * (1.0 + eps) {
            break;
        }
        let step = (best_m - dd) / (dd * (best_m - 1.0));
        u *= 1.0 - step;
        u[best] += step;
    }
    let c = &p * &u;
    let cov = &p * DMatrix::from_diagonal(&u) * p.transpose() - &c * c.transpose();
    let a = cov
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular covariance".into()))?
        / d as f64;
    let reach = (0..m)
        .map(|j| {
            let v = p.column(j) - &c;
            (v.transpose() * &a * &v)[(0, 0)]
        })
        .fold(0.0, f64::max);
    let shape = (a / reach)
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular ellipsoid".into()))?;
    let shape = (&shape + shape.transpose()) * 0.5;
    Ellipsoid::new(c.iter().copied().collect(), shape)
}
