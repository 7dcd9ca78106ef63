//! Two independent real solutions of the stationary Klein–Gordon equation
//!
//! ```text
//! −c²ħ² φ″ + [m0²c⁴ − (E − V)²] φ = 0   ⇔   φ″ = q(x) φ,
//! q(x) = [m0²c⁴ − (E − V(x))²] / (ħc)²   [fm⁻²]
//! ```
//!
//! Constant potentials have closed forms (sin/cos or sinh/cosh); anything
//! else is integrated as the first-order system (φ, φ′) with RK4 or
//! explicit Euler. The Wronskian convention is W = φ1′φ2 − φ1φ2′.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{regime_for, Regime};
use crate::numerics::Grid;
use crate::potential::Potential;
use crate::setup::PhysicalSetup;

/// Default accuracy guard on |k h|.
pub const DEFAULT_STEP_GUARD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Integrator {
    Euler,
    Rk4,
}

impl Integrator {
    pub fn name(self) -> &'static str {
        match self {
            Integrator::Euler => "euler",
            Integrator::Rk4 => "rk4",
        }
    }
}

/// Closed-form constant-potential basis, measured from `origin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AnalyticBasis {
    /// φ1 = sin(k ξ), φ2 = cos(k ξ), W = k.
    Oscillatory { k: f64, origin: f64 },
    /// φ1 = sinh(κ ξ), φ2 = cosh(κ ξ), W = κ.
    Evanescent { kappa: f64, origin: f64 },
}

impl AnalyticBasis {
    pub fn new(setup: &PhysicalSetup, u0: f64) -> Result<Self> {
        let gap = setup.energy - u0;
        let disc = gap * gap - setup.rest_energy_sq();
        match regime_for(setup, gap) {
            Regime::Oscillatory => Ok(AnalyticBasis::Oscillatory { k: disc.sqrt() / setup.hbar_c, origin: 0.0 }),
            Regime::Evanescent => Ok(AnalyticBasis::Evanescent { kappa: (-disc).sqrt() / setup.hbar_c, origin: 0.0 }),
            Regime::TurningPoint => Err(Error::TurningPointSingular { x: f64::NAN }),
        }
    }

    pub fn with_origin(self, origin: f64) -> Self {
        match self {
            AnalyticBasis::Oscillatory { k, .. } => AnalyticBasis::Oscillatory { k, origin },
            AnalyticBasis::Evanescent { kappa, .. } => AnalyticBasis::Evanescent { kappa, origin },
        }
    }

    pub fn wronskian(&self) -> f64 {
        match *self {
            AnalyticBasis::Oscillatory { k, .. } => k,
            AnalyticBasis::Evanescent { kappa, .. } => kappa,
        }
    }

    pub fn eval(&self, x: f64) -> BasisPoint {
        match *self {
            AnalyticBasis::Oscillatory { k, origin } => {
                let (s, c) = (k * (x - origin)).sin_cos();
                BasisPoint { phi1: s, dphi1: k * c, phi2: c, dphi2: -k * s }
            }
            AnalyticBasis::Evanescent { kappa, origin } => {
                let u = kappa * (x - origin);
                let (s, c) = (u.sinh(), u.cosh());
                BasisPoint { phi1: s, dphi1: kappa * c, phi2: c, dphi2: kappa * s }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Analytic(AnalyticBasis),
    Numeric { method: Integrator, step: f64 },
}

/// Values and first derivatives of both solutions at one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisPoint {
    pub phi1: f64,
    pub dphi1: f64,
    pub phi2: f64,
    pub dphi2: f64,
}

impl BasisPoint {
    pub fn wronskian(&self) -> f64 {
        self.dphi1 * self.phi2 - self.phi1 * self.dphi2
    }
}

/// A solution pair (φ, φ′) at the start of integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub value: f64,
    pub slope: f64,
}

impl InitialCondition {
    pub const fn new(value: f64, slope: f64) -> Self {
        Self { value, slope }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericOptions {
    pub method: Integrator,
    /// Initial (φ1, φ1′); `None` picks (0, k0) with k0 the local wavenumber
    /// at the grid start, so a constant potential reproduces sin(k ξ).
    pub init1: Option<InitialCondition>,
    /// Initial (φ2, φ2′); `None` picks (1, 0).
    pub init2: Option<InitialCondition>,
    /// Upper bound on |k h|; `None` disables the guard.
    pub step_guard: Option<f64>,
}

impl Default for NumericOptions {
    fn default() -> Self {
        Self { method: Integrator::Rk4, init1: None, init2: None, step_guard: Some(DEFAULT_STEP_GUARD) }
    }
}

impl NumericOptions {
    pub fn with_method(mut self, method: Integrator) -> Self {
        self.method = method;
        self
    }

    pub fn with_initials(mut self, init1: InitialCondition, init2: InitialCondition) -> Self {
        self.init1 = Some(init1);
        self.init2 = Some(init2);
        self
    }

    /// φ1 = (1, 0), φ2 = (0, −k0) at the grid start: x0 is a zero of φ2, so
    /// every (a, b) trajectory leaves x0 through a common node.
    pub fn anchored_at_node(self, setup: &PhysicalSetup, pot: &Potential, x0: f64) -> Self {
        let k0 = kg_coefficient(setup, pot, x0).abs().sqrt();
        let k0 = if k0 > 0.0 { k0 } else { 1.0 };
        self.with_initials(InitialCondition::new(1.0, 0.0), InitialCondition::new(0.0, -k0))
    }

    pub fn with_step_guard(mut self, guard: Option<f64>) -> Self {
        self.step_guard = guard;
        self
    }
}

/// Two independent Klein–Gordon solutions sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionBasis {
    pub grid: Grid,
    pub phi1: Vec<f64>,
    pub dphi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub dphi2: Vec<f64>,
    /// W at the grid start, fm⁻¹.
    pub wronskian: f64,
    pub provenance: Provenance,
    pub setup: PhysicalSetup,
    pub potential: Potential,
}

/// q(x) = [m0²c⁴ − (E − V)²]/(ħc)², so that φ″ = q φ.
pub fn kg_coefficient(setup: &PhysicalSetup, pot: &Potential, x: f64) -> f64 {
    let gap = setup.energy - pot.value(x);
    (setup.rest_energy_sq() - gap * gap) / (setup.hbar_c * setup.hbar_c)
}

/// Analytic basis for V = U0 on the given grid (origin at x = 0).
pub fn solve_constant(setup: &PhysicalSetup, u0: f64, grid: &Grid) -> Result<SolutionBasis> {
    solve_constant_from(setup, u0, grid, 0.0)
}

/// Analytic basis for V = U0 with φ1(origin) = 0, φ2(origin) = 1.
pub fn solve_constant_from(setup: &PhysicalSetup, u0: f64, grid: &Grid, origin: f64) -> Result<SolutionBasis> {
    let analytic = AnalyticBasis::new(setup, u0)
        .map_err(|_| Error::TurningPointSingular { x: grid.first() })?
        .with_origin(origin);
    let n = grid.len();
    let (mut phi1, mut dphi1, mut phi2, mut dphi2) =
        (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for &x in grid.points() {
        let p = analytic.eval(x);
        phi1.push(p.phi1);
        dphi1.push(p.dphi1);
        phi2.push(p.phi2);
        dphi2.push(p.dphi2);
    }
    Ok(SolutionBasis {
        grid: grid.clone(),
        phi1,
        dphi1,
        phi2,
        dphi2,
        wronskian: analytic.wronskian(),
        provenance: Provenance::Analytic(analytic),
        setup: *setup,
        potential: Potential::constant(u0),
    })
}

/// Integrates the Klein–Gordon equation for an arbitrary potential on a
/// uniform grid.
pub fn solve_numeric(setup: &PhysicalSetup, pot: &Potential, grid: &Grid, opts: &NumericOptions) -> Result<SolutionBasis> {
    let x0 = grid.first();
    let h = match grid.uniform_step() {
        Some(h) => h,
        None if grid.len() == 1 => 0.0,
        None => return Err(Error::InvalidGrid("numeric Klein-Gordon integration needs a uniform grid".into())),
    };

    let k0 = kg_coefficient(setup, pot, x0).abs().sqrt();
    let init1 = opts.init1.unwrap_or(InitialCondition::new(0.0, if k0 > 0.0 { k0 } else { 1.0 }));
    let init2 = opts.init2.unwrap_or(InitialCondition::new(1.0, 0.0));
    let w0 = init1.slope * init2.value - init1.value * init2.slope;
    let scale = (init1.value.abs() + init1.slope.abs()) * (init2.value.abs() + init2.slope.abs());
    if !(w0.abs() > 1e-12 * scale) {
        return Err(Error::DependentInitials { wronskian: w0 });
    }

    if let Some(limit) = opts.step_guard {
        // Largest local wavenumber, including the half steps RK4 visits.
        let kmax = grid
            .points()
            .iter()
            .flat_map(|&x| [x, x + 0.5 * h])
            .map(|x| kg_coefficient(setup, pot, x).abs().sqrt())
            .fold(0.0, f64::max);
        let kh = kmax * h;
        if kh > limit {
            return Err(Error::StepTooLarge { kh, limit });
        }
    }

    let n = grid.len();
    let mut cols = [vec![(init1.value, init1.slope)], vec![(init2.value, init2.slope)]];
    let rhs = |x: f64, (y, dy): (f64, f64)| (dy, kg_coefficient(setup, pot, x) * y);
    for col in cols.iter_mut() {
        col.reserve(n - 1);
        for &x in &grid.points()[..n - 1] {
            let y = *col.last().unwrap();
            let next = match opts.method {
                Integrator::Euler => {
                    let k1 = rhs(x, y);
                    (y.0 + h * k1.0, y.1 + h * k1.1)
                }
                Integrator::Rk4 => {
                    let k1 = rhs(x, y);
                    let k2 = rhs(x + 0.5 * h, (y.0 + 0.5 * h * k1.0, y.1 + 0.5 * h * k1.1));
                    let k3 = rhs(x + 0.5 * h, (y.0 + 0.5 * h * k2.0, y.1 + 0.5 * h * k2.1));
                    let k4 = rhs(x + h, (y.0 + h * k3.0, y.1 + h * k3.1));
                    (
                        y.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
                        y.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
                    )
                }
            };
            col.push(next);
        }
    }
    let [c1, c2] = cols;
    let (phi1, dphi1) = c1.into_iter().unzip();
    let (phi2, dphi2) = c2.into_iter().unzip();
    Ok(SolutionBasis {
        grid: grid.clone(),
        phi1,
        dphi1,
        phi2,
        dphi2,
        wronskian: w0,
        provenance: Provenance::Numeric { method: opts.method, step: h },
        setup: *setup,
        potential: pot.clone(),
    })
}

impl SolutionBasis {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn point(&self, i: usize) -> BasisPoint {
        BasisPoint { phi1: self.phi1[i], dphi1: self.dphi1[i], phi2: self.phi2[i], dphi2: self.dphi2[i] }
    }

    /// Local Wronskian at grid index `i`.
    pub fn local_wronskian(&self, i: usize) -> f64 {
        self.point(i).wronskian()
    }

    /// φ″ = q φ at x for the given value.
    pub fn second_derivative(&self, x: f64, phi: f64) -> f64 {
        kg_coefficient(&self.setup, &self.potential, x) * phi
    }

    /// Evaluates both solutions anywhere inside the grid: closed form for
    /// analytic bases, cubic Hermite (using φ″ = qφ for the slope) otherwise.
    pub fn eval(&self, x: f64) -> Result<BasisPoint> {
        if let Provenance::Analytic(a) = self.provenance {
            return Ok(a.eval(x));
        }
        let (lo, hi) = (self.grid.first(), self.grid.last());
        let tol = 1e-9 * (hi - lo).abs().max(1.0);
        if x < lo - tol || x > hi + tol {
            return Err(Error::BasisGap { x, grid_lo: lo, grid_hi: hi });
        }
        if self.len() == 1 {
            return Ok(self.point(0));
        }
        let i = self.grid.interval_of(x);
        let (xa, xb) = (self.grid.points()[i], self.grid.points()[i + 1]);
        let h = xb - xa;
        let t = (x - xa) / h;
        let (h00, h10, h01, h11) = hermite_basis(t);
        let (qa, qb) = (kg_coefficient(&self.setup, &self.potential, xa), kg_coefficient(&self.setup, &self.potential, xb));
        let interp = |ya: f64, dya: f64, yb: f64, dyb: f64| h00 * ya + h10 * h * dya + h01 * yb + h11 * h * dyb;
        let column = |phi: &[f64], dphi: &[f64]| {
            let value = interp(phi[i], dphi[i], phi[i + 1], dphi[i + 1]);
            let (dda, ddb) = (qa * phi[i], qb * phi[i + 1]);
            let slope = interp(dphi[i], dda, dphi[i + 1], ddb);
            (value, slope)
        };
        let (phi1, dphi1) = column(&self.phi1, &self.dphi1);
        let (phi2, dphi2) = column(&self.phi2, &self.dphi2);
        Ok(BasisPoint { phi1, dphi1, phi2, dphi2 })
    }

    /// Positions where φ2 changes sign, refined with the Hermite interpolant.
    pub fn phi2_zeros(&self) -> Vec<f64> {
        let pts = self.grid.points();
        let mut zeros = Vec::new();
        for i in 0..self.len().saturating_sub(1) {
            let (fa, fb) = (self.phi2[i], self.phi2[i + 1]);
            if fa == 0.0 {
                zeros.push(pts[i]);
                continue;
            }
            if fa * fb < 0.0 {
                // Newton from the linear estimate, staying inside the cell.
                let mut x = pts[i] - fa * (pts[i + 1] - pts[i]) / (fb - fa);
                for _ in 0..8 {
                    let Ok(p) = self.eval(x) else { break };
                    if p.dphi2 == 0.0 {
                        break;
                    }
                    let nx = (x - p.phi2 / p.dphi2).clamp(pts[i], pts[i + 1]);
                    if (nx - x).abs() < 1e-14 * x.abs().max(1.0) {
                        x = nx;
                        break;
                    }
                    x = nx;
                }
                zeros.push(x);
            }
        }
        zeros
    }
}

fn hermite_basis(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0, t3 - 2.0 * t2 + t, -2.0 * t3 + 3.0 * t2, t3 - t2)
}

/// max over the grid of |W(x)/W(x0) − 1|.
pub fn wronskian_drift(basis: &SolutionBasis) -> f64 {
    if basis.len() < 2 {
        return 0.0;
    }
    let w0 = basis.local_wronskian(0);
    (0..basis.len()).map(|i| (basis.local_wronskian(i) / w0 - 1.0).abs()).fold(0.0, f64::max)
}

/// Klein–Gordon residual from centered second differences,
/// max |φ″_fd − qφ| / max |qφ| over interior points and both columns.
pub fn klein_gordon_residual(basis: &SolutionBasis) -> Result<f64> {
    let h = basis
        .grid
        .uniform_step()
        .ok_or_else(|| Error::InvalidGrid("second-difference residual needs a uniform grid".into()))?;
    if basis.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, found: basis.len() });
    }
    let pts = basis.grid.points();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for phi in [&basis.phi1, &basis.phi2] {
        for i in 1..basis.len() - 1 {
            let fd = (phi[i + 1] - 2.0 * phi[i] + phi[i - 1]) / (h * h);
            let exact = basis.second_derivative(pts[i], phi[i]);
            worst = worst.max((fd - exact).abs());
            scale = scale.max(exact.abs());
        }
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn electron(gap: f64) -> PhysicalSetup {
        PhysicalSetup::new(gap, 0.511).unwrap()
    }

    #[test]
    fn analytic_wavenumbers() {
        let g = Grid::linspace(-100.0, 100.0, 11).unwrap();
        let b = solve_constant(&electron(2.0), 0.0, &g).unwrap();
        // √(4 − 0.511²)/ħc with ħc = ħ·c.
        assert_relative_eq!(b.wronskian, 9.799_055_254_607_655e-3, max_relative = 1e-12);
        let ev = solve_constant(&electron(0.3), 0.0, &g).unwrap();
        assert_relative_eq!(ev.wronskian, 2.096_356_580_583_295e-3, max_relative = 1e-12);
        assert!(solve_constant(&electron(0.511), 0.0, &g).is_err());
    }

    #[test]
    fn analytic_values_at_origin() {
        let g = Grid::linspace(-1.0, 1.0, 3).unwrap();
        let b = solve_constant(&electron(2.0), 0.0, &g).unwrap();
        let p = b.point(1);
        assert_eq!((p.phi1, p.phi2, p.dphi2), (0.0, 1.0, -0.0));
        assert_eq!(p.dphi1, b.wronskian);
        assert!(wronskian_drift(&b) < 1e-12);
        let ev = solve_constant(&electron(0.3), 0.0, &g).unwrap();
        assert!(wronskian_drift(&ev) < 1e-12);
    }

    #[test]
    fn single_point_grid_returns_initials() {
        let g = Grid::new(vec![5.0]).unwrap();
        let opts = NumericOptions::default()
            .with_initials(InitialCondition::new(0.3, 0.7), InitialCondition::new(1.0, -0.2));
        let b = solve_numeric(&electron(2.0), &Potential::constant(0.0), &g, &opts).unwrap();
        assert_eq!((b.phi1[0], b.dphi1[0], b.phi2[0], b.dphi2[0]), (0.3, 0.7, 1.0, -0.2));
        assert_eq!(wronskian_drift(&b), 0.0);
    }

    #[test]
    fn dependent_initials_rejected() {
        let g = Grid::uniform(0.0, 10.0, 1.0).unwrap();
        let opts = NumericOptions::default()
            .with_initials(InitialCondition::new(1.0, 2.0), InitialCondition::new(2.0, 4.0));
        assert!(matches!(
            solve_numeric(&electron(2.0), &Potential::constant(0.0), &g, &opts),
            Err(Error::DependentInitials { .. })
        ));
    }

    #[test]
    fn step_guard() {
        let g = Grid::uniform(0.0, 1000.0, 50.0).unwrap();
        let s = electron(2.0);
        let p = Potential::constant(0.0);
        assert!(matches!(solve_numeric(&s, &p, &g, &NumericOptions::default()), Err(Error::StepTooLarge { .. })));
        assert!(solve_numeric(&s, &p, &g, &NumericOptions::default().with_step_guard(None)).is_ok());
    }

    #[test]
    fn non_uniform_grid_rejected() {
        let g = Grid::new(vec![0.0, 1.0, 3.0]).unwrap();
        assert!(matches!(
            solve_numeric(&electron(2.0), &Potential::constant(0.0), &g, &NumericOptions::default()),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn hermite_eval_is_fourth_order_accurate() {
        let s = electron(2.0);
        let k = AnalyticBasis::new(&s, 0.0).unwrap().wronskian();
        let g = Grid::uniform(0.0, 20.0 / k, 0.05 / k).unwrap();
        let b = solve_numeric(&s, &Potential::constant(0.0), &g, &NumericOptions::default()).unwrap();
        let exact = AnalyticBasis::new(&s, 0.0).unwrap();
        let x = 7.3 / k;
        let p = b.eval(x).unwrap();
        let e = exact.eval(x);
        assert!((p.phi1 - e.phi1).abs() < 1e-6);
        assert!((p.dphi2 - e.dphi2).abs() < 1e-6 * k);
        assert!(b.eval(-1.0).is_err());
    }

    #[test]
    fn phi2_zeros_of_cosine() {
        let s = electron(2.0);
        let k = AnalyticBasis::new(&s, 0.0).unwrap().wronskian();
        let g = Grid::uniform(0.0, 10.0 / k, 0.01 / k).unwrap();
        let b = solve_numeric(&s, &Potential::constant(0.0), &g, &NumericOptions::default()).unwrap();
        let z = b.phi2_zeros();
        assert_eq!(z.len(), 3);
        for (n, x) in z.iter().enumerate() {
            let expect = (n as f64 + 0.5) * std::f64::consts::PI / k;
            assert!((x - expect).abs() < 1e-6 * expect, "{x} vs {expect}");
        }
    }
}
