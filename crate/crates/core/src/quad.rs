//! Grid and composite-trapezoid helpers shared by the oracle and estimators.

use crate::error::{Error, Result};

/// `n` evenly spaced points from `lo` to `hi` inclusive. The last point is
/// exactly `hi`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            let mut v: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
            v[n - 1] = hi;
            v
        }
    }
}

/// Points `lo, lo + step, ...` up to and including `hi` (the last point is
/// `hi` itself when `hi - lo` is not a multiple of `step`).
pub fn arange_inclusive(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut v: Vec<f64> = (0..=n).map(|i| lo + step * i as f64).collect();
    if let Some(last) = v.last_mut() {
        if (hi - *last).abs() <= 1e-9 * step {
            *last = hi;
        } else if *last < hi {
            v.push(hi);
        }
    }
    v
}

/// Sort, drop non-finite values and merge nodes closer than 1e-12 (relative);
/// a merged cluster keeps its exact zero or integer-valued member if present.
pub fn merge_nodes(nodes: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = nodes.into_iter().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(v.len());
    for x in v {
        match out.last_mut() {
            Some(last) if (x - *last).abs() <= 1e-12 * (1.0 + x.abs()) => {
                if x == 0.0 || x.fract() == 0.0 {
                    *last = x;
                }
            }
            _ => out.push(x),
        }
    }
    out
}

/// Linear interpolation on a sorted grid. Errors outside `[grid[0], grid[n-1]]`.
pub fn interp(grid: &[f64], values: &[f64], x: f64) -> Result<f64> {
    let n = grid.len();
    let (lo, hi) = (grid[0], grid[n - 1]);
    if !(x >= lo && x <= hi) {
        return Err(Error::OutOfRange { x, lo, hi });
    }
    let idx = grid.partition_point(|&g| g <= x);
    if idx == 0 {
        return Ok(values[0]);
    }
    if idx >= n {
        return Ok(values[n - 1]);
    }
    let (x0, x1) = (grid[idx - 1], grid[idx]);
    let w = (x - x0) / (x1 - x0);
    Ok(values[idx - 1] + w * (values[idx] - values[idx - 1]))
}

pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Running trapezoid integral starting at 0 on `grid[0]`.
pub fn cumulative_trapezoid(grid: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..grid.len() {
        acc += 0.5 * (grid[i] - grid[i - 1]) * (values[i] + values[i - 1]);
        out.push(acc);
    }
    out
}

/// Trapezoid rule on every other node (keeping the last node), used for a
/// Richardson-type error estimate.
pub fn every_other_trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    let n = grid.len();
    let mut idx: Vec<usize> = (0..n).step_by(2).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    idx.windows(2)
        .map(|w| 0.5 * (grid[w[1]] - grid[w[0]]) * (values[w[0]] + values[w[1]]))
        .sum()
}
