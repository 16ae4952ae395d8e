//! Maximal function over cell-aligned cubes. For each side `s`, box sums at every position
//! come from separable sliding sums; the covered cells then take the separable sliding
//! maximum (or OR) of the per-position values.

use std::collections::VecDeque;

use rayon::prelude::*;

use super::{BasisLimits, Level};
use crate::grid::GridMask;

/// Applies `f(input_line, output_line)` to every line along `axis`, changing that axis length
/// from `dims[axis]` to `new_len`.
fn map_lines<T: Copy + Default>(
    data: &[T],
    dims: &[usize],
    axis: usize,
    new_len: usize,
    mut f: impl FnMut(&[T], &mut [T]),
) -> (Vec<T>, Vec<usize>) {
    let inner: usize = dims[..axis].iter().product();
    let outer: usize = dims[axis + 1..].iter().product();
    let old_len = dims[axis];
    let mut out = vec![T::default(); inner * new_len * outer];
    let mut src = vec![T::default(); old_len];
    let mut dst = vec![T::default(); new_len];
    for o in 0..outer {
        for i in 0..inner {
            for k in 0..old_len {
                src[k] = data[i + inner * (k + old_len * o)];
            }
            f(&src, &mut dst);
            for k in 0..new_len {
                out[i + inner * (k + new_len * o)] = dst[k];
            }
        }
    }
    let mut nd = dims.to_vec();
    nd[axis] = new_len;
    (out, nd)
}

fn box_sums(bits: &[u32], dims: &[usize], s: usize) -> Vec<u32> {
    let mut cur = bits.to_vec();
    let mut d = dims.to_vec();
    for axis in 0..dims.len() {
        let p = d[axis] - s + 1;
        let (next, nd) = map_lines(&cur, &d, axis, p, |src, dst| {
            let mut acc: u32 = src[..s].iter().sum();
            dst[0] = acc;
            for k in 1..p {
                acc = acc + src[k + s - 1] - src[k - 1];
                dst[k] = acc;
            }
        });
        cur = next;
        d = nd;
    }
    cur
}

/// Every cell takes the max over the `s` positions whose cube covers it.
fn spread_max(vals: Vec<f64>, dims: &[usize], s: usize) -> Vec<f64> {
    let mut cur = vals;
    let mut d: Vec<usize> = dims.iter().map(|n| n - s + 1).collect();
    for axis in 0..dims.len() {
        let p = d[axis];
        let (next, nd) = map_lines(&cur, &d, axis, dims[axis], |src, dst| {
            let mut dq: VecDeque<usize> = VecDeque::new();
            let mut next_in = 0;
            for (c, out) in dst.iter_mut().enumerate() {
                while next_in < p && next_in <= c {
                    while dq.back().is_some_and(|&j| src[j] <= src[next_in]) {
                        dq.pop_back();
                    }
                    dq.push_back(next_in);
                    next_in += 1;
                }
                while dq.front().is_some_and(|&j| j + s <= c) {
                    dq.pop_front();
                }
                *out = dq.front().map_or(0.0, |&j| src[j]);
            }
        });
        cur = next;
        d = nd;
    }
    cur
}

fn spread_or(vals: Vec<bool>, dims: &[usize], s: usize) -> Vec<bool> {
    let mut cur = vals;
    let mut d: Vec<usize> = dims.iter().map(|n| n - s + 1).collect();
    for axis in 0..dims.len() {
        let p = d[axis];
        let (next, nd) = map_lines(&cur, &d, axis, dims[axis], |src, dst| {
            let mut last: Option<usize> = None;
            for (c, out) in dst.iter_mut().enumerate() {
                if c < p && src[c] {
                    last = Some(c);
                }
                *out = last.is_some_and(|j| j + s > c);
            }
        });
        cur = next;
        d = nd;
    }
    cur
}

fn sides(e: &GridMask, limits: &BasisLimits) -> (Vec<usize>, bool) {
    let min_n = *e.window().resolution().iter().min().expect("n >= 1");
    let cap = limits.max_cells.unwrap_or(min_n);
    (
        (1..=cap.min(min_n)).step_by(limits.stride).collect(),
        cap > min_n,
    )
}

pub(super) fn halo(e: &GridMask, level: &Level, limits: &BasisLimits) -> (Vec<bool>, bool) {
    let dims = e.window().resolution().to_vec();
    let n = dims.len() as u32;
    let bits: Vec<u32> = e.bits().iter().map(|&b| b as u32).collect();
    let total = e.count();
    let (sides, clamped) = sides(e, limits);
    let len = e.window().len();
    let out = sides
        .into_par_iter()
        .filter(|&s| level.exceeds(total, (s as u64).pow(n)))
        .fold(
            || vec![false; len],
            |mut acc, s| {
                let vol = (s as u64).pow(n);
                let good: Vec<bool> = box_sums(&bits, &dims, s)
                    .into_iter()
                    .map(|c| level.exceeds(c as u64, vol))
                    .collect();
                if good.iter().any(|&g| g) {
                    for (a, b) in acc.iter_mut().zip(spread_or(good, &dims, s)) {
                        *a |= b;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![false; len],
            |mut x, y| {
                for (a, b) in x.iter_mut().zip(y) {
                    *a |= b;
                }
                x
            },
        );
    (out, clamped)
}

pub(super) fn field(e: &GridMask, limits: &BasisLimits) -> (Vec<f64>, bool) {
    let dims = e.window().resolution().to_vec();
    let n = dims.len() as u32;
    let bits: Vec<u32> = e.bits().iter().map(|&b| b as u32).collect();
    let (sides, clamped) = sides(e, limits);
    let len = e.window().len();
    let out = sides
        .into_par_iter()
        .fold(
            || vec![0.0f64; len],
            |mut acc, s| {
                let vol = (s as u64).pow(n) as f64;
                let vals: Vec<f64> = box_sums(&bits, &dims, s)
                    .into_iter()
                    .map(|c| c as f64 / vol)
                    .collect();
                for (a, b) in acc.iter_mut().zip(spread_max(vals, &dims, s)) {
                    *a = a.max(b);
                }
                acc
            },
        )
        .reduce(
            || vec![0.0f64; len],
            |mut x, y| {
                for (a, b) in x.iter_mut().zip(y) {
                    *a = a.max(b);
                }
                x
            },
        );
    (out, clamped)
}
