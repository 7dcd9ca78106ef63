//! Static potentials V(x) with first and second derivatives.
//!
//! V in MeV, x in fm, dV/dx in MeV/fm, d²V/dx² in MeV/fm².

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Potential {
    /// V(x) = U0.
    Constant { u0: f64 },
    /// V(x) = g x.
    Linear { slope: f64 },
    /// Natural cubic spline through tabulated values.
    Tabulated(TabulatedPotential),
}

impl Potential {
    pub fn constant(u0: f64) -> Self {
        Potential::Constant { u0 }
    }

    pub fn linear(slope: f64) -> Self {
        Potential::Linear { slope }
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        TabulatedPotential::new(grid, values).map(Potential::Tabulated)
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Potential::Constant { u0 } => *u0,
            Potential::Linear { slope } => slope * x,
            Potential::Tabulated(t) => t.eval(x).0,
        }
    }

    pub fn gradient(&self, x: f64) -> f64 {
        match self {
            Potential::Constant { .. } => 0.0,
            Potential::Linear { slope } => *slope,
            Potential::Tabulated(t) => t.eval(x).1,
        }
    }

    pub fn curvature(&self, x: f64) -> f64 {
        match self {
            Potential::Constant { .. } | Potential::Linear { .. } => 0.0,
            Potential::Tabulated(t) => t.eval(x).2,
        }
    }

    /// True when dV/dx vanishes identically.
    pub fn is_constant(&self) -> bool {
        matches!(self, Potential::Constant { .. })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Potential::Constant { .. } => "constant",
            Potential::Linear { .. } => "linear",
            Potential::Tabulated(_) => "tabulated",
        }
    }
}

/// Tabulated potential interpolated by a natural cubic spline.
///
/// Outside the table the end cubic pieces are extrapolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedPotential {
    grid: Vec<f64>,
    values: Vec<f64>,
    /// Second derivatives at the knots.
    moments: Vec<f64>,
}

impl TabulatedPotential {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidGrid(format!(
                "tabulated potential has {} positions but {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid.len() < 2 {
            return Err(Error::InvalidGrid("tabulated potential needs at least 2 points".into()));
        }
        if grid.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("tabulated potential contains non-finite entries".into()));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("tabulated potential grid must be strictly increasing".into()));
        }
        let moments = natural_spline_moments(&grid, &values);
        Ok(Self { grid, values, moments })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// (V, V', V'') at x.
    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.grid.len();
        let i = match self.grid.partition_point(|&g| g <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.moments[i], self.moments[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let dv = (y1 - y0) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        let d2v = a * m0 + b * m1;
        (v, dv, d2v)
    }
}

fn natural_spline_moments(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on the interior knots.
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        diag[i] = 2.0 * (h0 + h1);
        upper[i] = h1;
        rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
        if i > 1 {
            let w = h0 / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
    }
    for i in (1..n - 1).rev() {
        let next = if i + 1 < n - 1 { m[i + 1] } else { 0.0 };
        m[i] = (rhs[i] - upper[i] * next) / diag[i];
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_linear_derivatives_exact() {
        let c = Potential::constant(3.5);
        let l = Potential::linear(-2e-4);
        for x in [-5400.0, 0.0, 17.25] {
            assert_eq!(c.value(x), 3.5);
            assert_eq!(c.gradient(x), 0.0);
            assert_eq!(c.curvature(x), 0.0);
            assert_eq!(l.value(x), -2e-4 * x);
            assert_eq!(l.gradient(x), -2e-4);
            assert_eq!(l.curvature(x), 0.0);
        }
    }

    #[test]
    fn tabulated_rejects_bad_grids() {
        assert!(Potential::tabulated(vec![0.0, 1.0, 1.0], vec![0.0; 3]).is_err());
        assert!(Potential::tabulated(vec![0.0, 2.0, 1.0], vec![0.0; 3]).is_err());
        assert!(Potential::tabulated(vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(Potential::tabulated(vec![0.0], vec![0.0]).is_err());
    }

    #[test]
    fn tabulated_reproduces_linear_data_exactly() {
        let grid: Vec<f64> = (0..11).map(|i| i as f64 * 10.0).collect();
        let vals: Vec<f64> = grid.iter().map(|x| 0.5 + 0.01 * x).collect();
        let p = Potential::tabulated(grid, vals).unwrap();
        for x in [0.0, 3.3, 55.0, 99.9] {
            assert!((p.value(x) - (0.5 + 0.01 * x)).abs() < 1e-12);
            assert!((p.gradient(x) - 0.01).abs() < 1e-12);
            assert!(p.curvature(x).abs() < 1e-12);
        }
    }

    #[test]
    fn tabulated_derivatives_match_centered_differences_second_order() {
        // Smooth data; centered differences of values at the knots vs the
        // spline derivative shrink ~4x per grid halving.
        let err_for = |n: usize| {
            let h = 1.0 / n as f64;
            let grid: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
            let vals: Vec<f64> = grid.iter().map(|x| (2.0 * x).sin()).collect();
            let p = Potential::tabulated(grid.clone(), vals.clone()).unwrap();
            let mut worst: f64 = 0.0;
            for i in n / 4..3 * n / 4 {
                let fd = (vals[i + 1] - vals[i - 1]) / (2.0 * h);
                worst = worst.max((fd - p.gradient(grid[i])).abs());
                let fd2 = (vals[i + 1] - 2.0 * vals[i] + vals[i - 1]) / (h * h);
                worst = worst.max((fd2 - p.curvature(grid[i])).abs());
            }
            worst
        };
        let e1 = err_for(40);
        let e2 = err_for(80);
        assert!(e1 / e2 > 3.5, "ratio {}", e1 / e2);
    }
}
