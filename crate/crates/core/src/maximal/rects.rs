//! Strong maximal function: supremum over every cell-aligned box of the window.
//!
//! The last axis is split into all bands `[a, b)`; each band is collapsed to an
//! `(n-1)`-dimensional weighted problem and solved recursively. One-dimensional lines are
//! solved exactly: the threshold route compares prefix-sum minima/maxima, the field route
//! finds the best slope between a prefix lower hull and a suffix upper hull.

use rayon::prelude::*;

use super::Level;
use crate::grid::GridMask;

trait LineEngine: Sync {
    type Cell: Copy + Send + Sync;
    const ZERO: Self::Cell;
    fn join(a: Self::Cell, b: Self::Cell) -> Self::Cell;
    /// No box of a band with this total count and weight can contribute.
    fn hopeless(&self, total: u64, weight: u64) -> bool;
    fn line(&self, counts: &[u64], weight: u64) -> Option<Vec<Self::Cell>>;
}

fn join_into<E: LineEngine>(acc: &mut [E::Cell], other: &[E::Cell]) {
    for (a, &b) in acc.iter_mut().zip(other) {
        *a = E::join(*a, b);
    }
}

fn solve<E: LineEngine>(
    eng: &E,
    data: &[u64],
    dims: &[usize],
    weight: u64,
    parallel: bool,
) -> Option<Vec<E::Cell>> {
    let total: u64 = data.iter().sum();
    if eng.hopeless(total, weight) {
        return None;
    }
    let n = dims.len();
    if n == 1 {
        return eng.line(data, weight);
    }
    let last = dims[n - 1];
    let slice = data.len() / last;
    let sub = &dims[..n - 1];

    let band_start = |a: usize, acc: &mut Vec<E::Cell>| {
        let mut collapsed = vec![0u64; slice];
        let mut results: Vec<Option<Vec<E::Cell>>> = Vec::new();
        for b in a + 1..=last {
            let w = weight * (b - a) as u64;
            if eng.hopeless(total, w) {
                break;
            }
            for (c, v) in collapsed.iter_mut().zip(&data[(b - 1) * slice..b * slice]) {
                *c += v;
            }
            results.push(solve(eng, &collapsed, sub, w, false));
        }
        // A band [a, b) covers rows a..b; sweep b downward keeping the join of all longer bands.
        let mut running: Option<Vec<E::Cell>> = None;
        for (i, r) in results.into_iter().enumerate().rev() {
            let row = a + i;
            if let Some(r) = r {
                match running.as_mut() {
                    None => running = Some(r),
                    Some(run) => join_into::<E>(run, &r),
                }
            }
            if let Some(run) = &running {
                join_into::<E>(&mut acc[row * slice..(row + 1) * slice], run);
            }
        }
    };

    let len = data.len();
    let acc = if parallel {
        (0..last)
            .into_par_iter()
            .fold(
                || vec![E::ZERO; len],
                |mut acc, a| {
                    band_start(a, &mut acc);
                    acc
                },
            )
            .reduce(
                || vec![E::ZERO; len],
                |mut x, y| {
                    join_into::<E>(&mut x, &y);
                    x
                },
            )
    } else {
        let mut acc = vec![E::ZERO; len];
        for a in 0..last {
            band_start(a, &mut acc);
        }
        acc
    };
    Some(acc)
}

struct Threshold<'a>(&'a Level);

impl LineEngine for Threshold<'_> {
    type Cell = bool;
    const ZERO: bool = false;

    fn join(a: bool, b: bool) -> bool {
        a || b
    }

    fn hopeless(&self, total: u64, weight: u64) -> bool {
        !self.0.exceeds(total, weight)
    }

    fn line(&self, counts: &[u64], weight: u64) -> Option<Vec<bool>> {
        let n = counts.len();
        // q[k] = P_k 2^s - m W k; [l, r) exceeds iff q[r] > q[l].
        let mut q = Vec::with_capacity(n + 1);
        let mut p = 0u64;
        q.push(0i128);
        for (k, &c) in counts.iter().enumerate() {
            p += c;
            q.push(self.0.excess(p, weight * (k as u64 + 1)));
        }
        let mut suffix_max = vec![i128::MIN; n + 1];
        for k in (0..n).rev() {
            suffix_max[k] = suffix_max[k + 1].max(q[k + 1]);
        }
        let mut out = vec![false; n];
        let mut prefix_min = i128::MAX;
        let mut any = false;
        for x in 0..n {
            prefix_min = prefix_min.min(q[x]);
            out[x] = suffix_max[x] > prefix_min;
            any |= out[x];
        }
        any.then_some(out)
    }
}

struct Field;

impl LineEngine for Field {
    type Cell = f64;
    const ZERO: f64 = 0.0;

    fn join(a: f64, b: f64) -> f64 {
        a.max(b)
    }

    fn hopeless(&self, total: u64, _weight: u64) -> bool {
        total == 0
    }

    fn line(&self, counts: &[u64], weight: u64) -> Option<Vec<f64>> {
        Some(
            best_slopes(counts)
                .into_iter()
                .map(|(num, den)| num as f64 / (den as f64 * weight as f64))
                .collect(),
        )
    }
}

fn cross(p: &[i64], a: usize, b: usize, c: usize) -> i128 {
    let (a_, b_, c_) = (a as i128, b as i128, c as i128);
    (b_ - a_) * (p[c] - p[a]) as i128 - (p[b] - p[a]) as i128 * (c_ - a_)
}

/// Edge slope `(p[v] - p[u]) / (v - u)` compared with `num / den`: returns sign of the difference.
fn slope_cmp(p: &[i64], u: usize, v: usize, num: i64, den: i64) -> std::cmp::Ordering {
    let lhs = (p[v] - p[u]) as i128 * den as i128;
    let rhs = num as i128 * (v - u) as i128;
    lhs.cmp(&rhs)
}

/// For each cell `x` of a line, the best `(P_r - P_l, r - l)` over `l <= x < r`.
pub(super) fn best_slopes(counts: &[u64]) -> Vec<(i64, i64)> {
    use std::cmp::Ordering;
    let n = counts.len();
    let mut p = vec![0i64; n + 1];
    for k in 0..n {
        p[k + 1] = p[k] + counts[k] as i64;
    }
    // Prefix lower hulls of points 0..=x, built forward with an undo log.
    let mut lower = vec![0usize; n + 1];
    let mut len = 0usize;
    let mut log = Vec::with_capacity(n);
    for k in 0..n {
        let pos = if len < 2 {
            len
        } else {
            // largest j in [1, len) with a strict left turn at lower[j]
            let (mut lo, mut hi) = (1usize, len);
            while lo < hi {
                let mid = (lo + hi) / 2;
                if cross(&p, lower[mid - 1], lower[mid], k) > 0 {
                    lo = mid + 1;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        log.push((pos, lower[pos], len));
        lower[pos] = k;
        len = pos + 1;
    }
    // Suffix upper hull as a stack: upper[0] is the rightmost point, the top the leftmost.
    let mut upper: Vec<usize> = Vec::with_capacity(n + 1);
    let mut out = vec![(0i64, 1i64); n];
    for x in (0..n).rev() {
        let q = x + 1;
        while upper.len() >= 2
            && cross(&p, q, upper[upper.len() - 1], upper[upper.len() - 2]) >= 0
        {
            upper.pop();
        }
        upper.push(q);

        let m = upper.len();
        let vert = |i: usize| upper[m - 1 - i];
        let (mut num, mut den) = (p[x + 1] - p[x], 1i64);
        loop {
            // argmax of P_r - λ r: first edge with slope <= λ
            let (mut lo, mut hi) = (0usize, m - 1);
            while lo < hi {
                let mid = (lo + hi) / 2;
                if slope_cmp(&p, vert(mid), vert(mid + 1), num, den) != Ordering::Greater {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            let r = vert(lo);
            // argmin of P_l - λ l: first edge with slope >= λ
            let (mut lo, mut hi) = (0usize, len - 1);
            while lo < hi {
                let mid = (lo + hi) / 2;
                if slope_cmp(&p, lower[mid], lower[mid + 1], num, den) != Ordering::Less {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            let l = lower[lo];
            let gain = (p[r] - p[l]) as i128 * den as i128 - num as i128 * (r - l) as i128;
            if gain > 0 {
                num = p[r] - p[l];
                den = (r - l) as i64;
            } else {
                break;
            }
        }
        out[x] = (num, den);

        let (pos, old, old_len) = log.pop().expect("one log entry per point");
        lower[pos] = old;
        len = old_len;
    }
    out
}

fn counts_of(e: &GridMask) -> Vec<u64> {
    e.bits().iter().map(|&b| b as u64).collect()
}

pub(super) fn halo(e: &GridMask, level: &Level) -> Vec<bool> {
    let dims = e.window().resolution().to_vec();
    solve(&Threshold(level), &counts_of(e), &dims, 1, true).unwrap_or_else(|| vec![false; e.window().len()])
}

pub(super) fn field(e: &GridMask) -> Vec<f64> {
    let dims = e.window().resolution().to_vec();
    solve(&Field, &counts_of(e), &dims, 1, true).unwrap_or_else(|| vec![0.0; e.window().len()])
}
