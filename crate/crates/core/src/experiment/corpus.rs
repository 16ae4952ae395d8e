use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convex::{body_counts, ConvexBody};
use crate::error::{Error, Result};
use crate::grid::{rasterize, ShapeSpec, Window};

/// Independent generator for instance `index` of a corpus seeded with `seed`.
pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn default_balls() -> usize {
    5
}

fn default_radius() -> [f64; 2] {
    [0.2, 0.5]
}

fn default_average() -> [f64; 2] {
    [0.4, 0.6]
}

fn default_hi() -> f64 {
    1.0
}

/// Sets `E` fed to a verifier, one per instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum Corpus {
    Sets {
        sets: Vec<ShapeSpec>,
    },
    /// Unions of 1 to `max_rects` random boxes inside `[lo, hi]^n`.
    RandomRects {
        count: usize,
        max_rects: usize,
        #[serde(default)]
        lo: f64,
        #[serde(default = "default_hi")]
        hi: f64,
    },
    /// Unions of discs centered in the body, kept when their average over the body falls
    /// in `average`.
    BallClusters {
        count: usize,
        #[serde(default = "default_balls")]
        balls: usize,
        #[serde(default = "default_radius")]
        radius: [f64; 2],
        #[serde(default = "default_average")]
        average: [f64; 2],
    },
}

impl Corpus {
    pub fn len(&self) -> usize {
        match self {
            Corpus::Sets { sets } => sets.len(),
            Corpus::RandomRects { count, .. } | Corpus::BallClusters { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Instance `index`; `body` and `probe` are needed for ball clusters.
    pub fn instance(
        &self,
        n: usize,
        seed: u64,
        index: usize,
        body: Option<&ConvexBody>,
        probe: &Window,
    ) -> Result<ShapeSpec> {
        let mut rng = instance_rng(seed, index as u64);
        match self {
            Corpus::Sets { sets } => Ok(sets[index].clone()),
            Corpus::RandomRects {
                max_rects, lo, hi, ..
            } => Ok(random_rect_union(&mut rng, n, *max_rects, *lo, *hi)),
            Corpus::BallClusters {
                balls,
                radius,
                average,
                ..
            } => {
                let body = body.ok_or_else(|| {
                    Error::Config("ball clusters need a convex body".into())
                })?;
                random_ball_cluster(&mut rng, body, *balls, *radius, *average, probe)
            }
        }
    }
}

/// Union of 1 to `max_rects` boxes with sides between 1/16 and 1/2 of `[lo, hi]`.
pub fn random_rect_union(
    rng: &mut impl Rng,
    n: usize,
    max_rects: usize,
    lo: f64,
    hi: f64,
) -> ShapeSpec {
    let span = hi - lo;
    let k = rng.random_range(1..=max_rects.max(1));
    let parts = (0..k)
        .map(|_| {
            let sides: Vec<f64> = (0..n)
                .map(|_| rng.random_range(span / 16.0..span / 2.0))
                .collect();
            let a: Vec<f64> = sides
                .iter()
                .map(|s| lo + rng.random_range(0.0..span - s))
                .collect();
            ShapeSpec::Rect {
                hi: a.iter().zip(&sides).map(|(x, s)| x + s).collect(),
                lo: a,
            }
        })
        .collect();
    ShapeSpec::Union { parts }
}

/// Union of `balls` discs with centers in the body, rejection-sampled until the rasterized
/// average over the body on `probe` lies in `average`.
pub fn random_ball_cluster(
    rng: &mut impl Rng,
    body: &ConvexBody,
    balls: usize,
    radius: [f64; 2],
    average: [f64; 2],
    probe: &Window,
) -> Result<ShapeSpec> {
    let bb = body.bounding_rect();
    for _ in 0..10_000 {
        let mut parts = Vec::with_capacity(balls);
        while parts.len() < balls {
            let c: Vec<f64> = (0..body.n())
                .map(|i| rng.random_range(bb.lo[i]..bb.hi[i]))
                .collect();
            let r = rng.random_range(radius[0]..radius[1]);
            if body.contains(&c) {
                parts.push(ShapeSpec::Ball {
                    center: c,
                    radius: r,
                });
            }
        }
        let shape = ShapeSpec::Union { parts };
        let (hits, cells) = body_counts(&rasterize(&shape, probe)?, body);
        let a = hits as f64 / cells.max(1) as f64;
        if a >= average[0] && a <= average[1] {
            return Ok(shape);
        }
    }
    Err(Error::Precondition(format!(
        "no disc cluster with average in [{}, {}] after 10000 draws",
        average[0], average[1]
    )))
}

/// Polygon with `min_vertices..=max_vertices` vertices on a random rotated ellipse.
pub fn random_polygon(
    rng: &mut impl Rng,
    min_vertices: usize,
    max_vertices: usize,
) -> Result<ConvexBody> {
    let k = rng.random_range(min_vertices..=max_vertices);
    let (a, b) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
    let rot: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let center = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
    let mut angles: Vec<f64> = (0..k)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    angles.sort_by(f64::total_cmp);
    let pts: Vec<Vec<f64>> = angles
        .iter()
        .map(|t| {
            let (x, y) = (a * t.cos(), b * t.sin());
            vec![
                center[0] + x * rot.cos() - y * rot.sin(),
                center[1] + x * rot.sin() + y * rot.cos(),
            ]
        })
        .collect();
    ConvexBody::from_points(2, &pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_unions_stay_in_range() {
        let mut rng = instance_rng(7, 3);
        for _ in 0..50 {
            let s = random_rect_union(&mut rng, 2, 8, 0.0, 1.0);
            let b = s.bounding_rect().unwrap();
            assert!(b.lo.iter().all(|&x| x >= 0.0) && b.hi.iter().all(|&x| x <= 1.0));
        }
    }

    #[test]
    fn streams_are_independent_of_order() {
        let a: u64 = instance_rng(1, 5).random();
        let _: u64 = instance_rng(1, 4).random();
        assert_eq!(a, instance_rng(1, 5).random::<u64>());
        assert_ne!(a, instance_rng(1, 4).random::<u64>());
    }
}
