//! Grids, finite-difference weights and cumulative quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing positions, fm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidGrid("grid contains non-finite positions".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    /// `start, start + step, ...` up to and including `end` (within 1e-9 step).
    pub fn uniform(start: f64, end: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !start.is_finite() || !end.is_finite() {
            return Err(Error::InvalidGrid(format!("bad uniform grid start={start} end={end} step={step}")));
        }
        if end < start {
            return Err(Error::InvalidGrid(format!("grid end {end} precedes start {start}")));
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        Ok(Self { points: (0..=n).map(|i| start + i as f64 * step).collect() })
    }

    /// `count` points spanning [start, end].
    pub fn linspace(start: f64, end: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Self::new(vec![start]);
        }
        let h = (end - start) / (count - 1) as f64;
        Self::new((0..count).map(|i| start + i as f64 * h).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.points[0]
    }

    pub fn last(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Constant spacing if the grid is uniform to 1e-9 relative.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.points.len() < 2 {
            return None;
        }
        let h = (self.last() - self.first()) / (self.points.len() - 1) as f64;
        let uniform = self.points.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1e-300));
        uniform.then_some(h)
    }

    /// Index of the grid point equal to `x` within `tol`.
    pub fn index_of(&self, x: f64, tol: f64) -> Option<usize> {
        let p = self.points.partition_point(|&g| g < x);
        [p.checked_sub(1), Some(p)]
            .into_iter()
            .flatten()
            .filter(|&i| i < self.points.len())
            .find(|&i| (self.points[i] - x).abs() <= tol)
    }

    /// Interval index i with points[i] <= x <= points[i+1] (clamped).
    pub fn interval_of(&self, x: f64) -> usize {
        let n = self.points.len();
        if n < 2 {
            return 0;
        }
        self.points.partition_point(|&g| g <= x).saturating_sub(1).min(n - 2)
    }
}

/// Finite-difference weights for derivatives 0..=`order` at `z` from
/// arbitrary nodes (Fornberg's recursion). Returns `weights[k][j]`.
pub fn fornberg_weights(z: f64, nodes: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Cumulative integral of samples `f` over nodes `x` (uniform or not)
/// starting at 0: composite Simpson on pairs of intervals, with a
/// three-point quadratic for odd endpoints.
pub fn cumulative_simpson(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * (x[1] - x[0]) * (f[0] + f[1]);
        return out;
    }
    let mut i = 2;
    while i < n {
        out[i] = out[i - 2] + simpson_pair(x[i - 2], x[i - 1], x[i], f[i - 2], f[i - 1], f[i]);
        out[i - 1] = out[i - 2] + quadratic_first_interval(x[i - 2], x[i - 1], x[i], f[i - 2], f[i - 1], f[i]);
        i += 2;
    }
    if n.is_multiple_of(2) {
        let k = n - 1;
        out[k] = out[k - 1] + quadratic_last_interval(x[k - 2], x[k - 1], x[k], f[k - 2], f[k - 1], f[k]);
    }
    out
}

/// Cumulative integral of `f` over nodes `x` starting at 0, integrating
/// every interval with the cubic through the four nearest nodes. Unlike
/// [`cumulative_simpson`] the local error has the same form on every
/// interval, so the result stays smooth enough to differentiate.
pub fn cumulative_cubic(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 4 {
        return cumulative_simpson(x, f);
    }
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let j = i.saturating_sub(1).min(n - 4);
        let nodes = [x[j], x[j + 1], x[j + 2], x[j + 3]];
        let w = cubic_interval_weights(x[i], x[i + 1], &nodes);
        out[i + 1] = out[i] + (0..4).map(|k| w[k] * f[j + k]).sum::<f64>();
    }
    out
}

/// Weights integrating the cubic interpolant through four nodes from `lo`
/// to `hi`, in local coordinates.
fn cubic_interval_weights(lo: f64, hi: f64, nodes: &[f64; 4]) -> [f64; 4] {
    let o = lo;
    let z = nodes.map(|v| v - o);
    let (lo, hi) = (0.0, hi - o);
    let mut w = [0.0; 4];
    for (j, wj) in w.iter_mut().enumerate() {
        // ∏_{m≠j} (x − z_m) as coefficients of x³..x⁰
        let others: Vec<f64> = (0..4).filter(|&m| m != j).map(|m| z[m]).collect();
        let (p, q, r) = (others[0], others[1], others[2]);
        let c2 = -(p + q + r);
        let c1 = p * q + p * r + q * r;
        let c0 = -p * q * r;
        let anti = |x: f64| x.powi(4) / 4.0 + c2 * x.powi(3) / 3.0 + c1 * x * x / 2.0 + c0 * x;
        let denom: f64 = others.iter().map(|m| z[j] - m).product();
        *wj = (anti(hi) - anti(lo)) / denom;
    }
    w
}

/// ∫ from x0 to x2 of the quadratic through three points.
fn simpson_pair(x0: f64, x1: f64, x2: f64, f0: f64, f1: f64, f2: f64) -> f64 {
    let h0 = x1 - x0;
    let h1 = x2 - x1;
    let s = h0 + h1;
    s / 6.0 * ((2.0 - h1 / h0) * f0 + s * s / (h0 * h1) * f1 + (2.0 - h0 / h1) * f2)
}

/// ∫ from x0 to x1 of the quadratic through three points.
fn quadratic_first_interval(x0: f64, x1: f64, x2: f64, f0: f64, f1: f64, f2: f64) -> f64 {
    let w = fornberg_integral_weights(x0, x1, &[x0, x1, x2]);
    w[0] * f0 + w[1] * f1 + w[2] * f2
}

/// ∫ from x1 to x2 of the quadratic through three points.
fn quadratic_last_interval(x0: f64, x1: f64, x2: f64, f0: f64, f1: f64, f2: f64) -> f64 {
    let w = fornberg_integral_weights(x1, x2, &[x0, x1, x2]);
    w[0] * f0 + w[1] * f1 + w[2] * f2
}

/// Weights integrating the quadratic interpolant through three nodes from
/// `lo` to `hi`.
fn fornberg_integral_weights(lo: f64, hi: f64, nodes: &[f64; 3]) -> [f64; 3] {
    // Local coordinates avoid cancellation in the cubic antiderivative.
    let o = nodes[1];
    let (lo, hi) = (lo - o, hi - o);
    let nodes = [nodes[0] - o, 0.0, nodes[2] - o];
    let mut w = [0.0; 3];
    for (j, wj) in w.iter_mut().enumerate() {
        let (p, q) = match j {
            0 => (nodes[1], nodes[2]),
            1 => (nodes[0], nodes[2]),
            _ => (nodes[0], nodes[1]),
        };
        let denom = (nodes[j] - p) * (nodes[j] - q);
        // ∫ (x − p)(x − q) dx
        let anti = |x: f64| x * x * x / 3.0 - (p + q) * x * x / 2.0 + p * q * x;
        *wj = (anti(hi) - anti(lo)) / denom;
    }
    w
}
