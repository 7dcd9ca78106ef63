//! Trajectories x(t).
//!
//! Constant potentials use closed forms: the unwrapped arctangent law for
//! oscillatory energies and the logarithmic law (which reaches infinity in
//! finite time) for evanescent ones. General potentials integrate
//! t(x) = ∫ dx / ẋ(x) over a Klein–Gordon basis, where
//!
//! ```text
//! ẋ = ± [E − V − m0²c⁴/(E − V)] [φ2² + (aφ1 + bφ2)²] / (ħ a W)
//! ```
//!
//! Every sample carries the signed momentum P with ẋ P = c·(E − V − m0²c⁴/(E − V)).

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::klein_gordon::SolutionBasis;
use crate::model::{kinetic_term_for, regime_for, Regime};
use crate::numerics::{cumulative_cubic, fornberg_weights};
use crate::potential::Potential;
use crate::reduced_action::ReducedAction;
use crate::setup::{Direction, HiddenParams, PhysicalSetup};

/// Quadrature stops once |ẋ| drops below this fraction of c.
pub const DEFAULT_MIN_SPEED_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// s
    pub t: f64,
    /// fm
    pub x: f64,
    pub branch: i64,
    pub regime: Regime,
    /// Signed conjugate momentum, pc in MeV.
    pub momentum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceMethod {
    ClosedFormOscillatory,
    ClosedFormEvanescent,
    Quadrature,
    Classical,
}

impl TraceMethod {
    pub fn name(self) -> &'static str {
        match self {
            TraceMethod::ClosedFormOscillatory => "closed_form_oscillatory",
            TraceMethod::ClosedFormEvanescent => "closed_form_evanescent",
            TraceMethod::Quadrature => "quadrature",
            TraceMethod::Classical => "classical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DivergenceKind {
    /// x → +∞ (pole of the tangent).
    PositiveInfinity,
    /// x → −∞ (logarithm argument reaches zero).
    NegativeInfinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    Complete,
    /// Stopped where the speed vanished; `x` is the last position reached.
    TurningPoint { x: f64 },
    /// The particle reaches infinity at `time`.
    Divergence { time: f64, kind: DivergenceKind },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub setup: PhysicalSetup,
    pub potential: Potential,
    /// `None` for the classical trace.
    pub params: Option<HiddenParams>,
    pub direction: Direction,
    /// Additive position constant (closed forms) or start position.
    pub x0: f64,
    pub method: TraceMethod,
    pub termination: Termination,
}

/// Uniform time samples on [start, end].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl TimeGrid {
    pub fn new(start: f64, end: f64, count: usize) -> Result<Self> {
        if !(end > start) || count < 2 || !start.is_finite() || !end.is_finite() {
            return Err(Error::InvalidGrid(format!("bad time grid [{start}, {end}] with {count} samples")));
        }
        Ok(Self { start, end, count })
    }

    pub fn step(&self) -> f64 {
        (self.end - self.start) / (self.count - 1) as f64
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.step();
        (0..self.count).map(move |i| if i + 1 == self.count { self.end } else { self.start + i as f64 * h })
    }
}

/// Closed-form oscillatory constant-potential quantities.
#[derive(Debug, Clone, Copy)]
struct OscillatoryLaw {
    /// fm⁻¹
    k: f64,
    /// rad/s, tangent argument rate (E−U0 − m0²c⁴/(E−U0))/ħ
    omega: f64,
    /// MeV, ħc k
    pc: f64,
}

impl OscillatoryLaw {
    fn new(setup: &PhysicalSetup, u0: f64) -> Result<Self> {
        let gap = setup.energy - u0;
        match regime_for(setup, gap) {
            Regime::Oscillatory => {}
            Regime::TurningPoint => return Err(Error::TurningPointSingular { x: f64::NAN }),
            Regime::Evanescent => {
                return Err(Error::RegimeError { x: f64::NAN, expected: "oscillatory", found: "evanescent" })
            }
        }
        let pc = (gap * gap - setup.rest_energy_sq()).sqrt();
        Ok(Self { k: pc / setup.hbar_c, omega: (gap - setup.rest_energy_sq() / gap) / setup.hbar, pc })
    }
}

impl OscillatoryLaw {
    /// Sample at tangent argument ψ (= ±ω t); `dir` is the motion sign.
    fn sample(&self, params: HiddenParams, x0: f64, dir: f64, psi: f64) -> Sample {
        let (a, b) = (params.a(), params.b());
        let n = (psi / PI).round();
        // Reduced angle, clamped so rounding cannot flip the tangent's sign
        // and skip a branch.
        let r = (psi - n * PI).clamp(-FRAC_PI_2, FRAC_PI_2);
        let theta = ((r.tan() - b) / a).atan() + a.signum() * n * PI;
        let (s, c) = theta.sin_cos();
        let u = a * s + b * c;
        Sample {
            t: psi / (self.omega * dir),
            x: x0 + theta / self.k,
            branch: n as i64,
            regime: Regime::Oscillatory,
            momentum: dir * self.pc * a / (c * c + u * u),
        }
    }

    /// θ = k(x − x0) at tangent argument ψ.
    fn theta(&self, params: HiddenParams, psi: f64) -> f64 {
        let n = (psi / PI).round();
        let r = (psi - n * PI).clamp(-FRAC_PI_2, FRAC_PI_2);
        ((r.tan() - params.b()) / params.a()).atan() + params.a().signum() * n * PI
    }
}

fn oscillatory_trajectory(setup: &PhysicalSetup, u0: f64, params: HiddenParams, x0: f64, samples: Vec<Sample>) -> Trajectory {
    Trajectory {
        samples,
        setup: *setup,
        potential: Potential::constant(u0),
        params: Some(params),
        direction: setup.direction,
        x0,
        method: TraceMethod::ClosedFormOscillatory,
        termination: Termination::Complete,
    }
}

/// Constant potential, (E − U0)² > m0²c⁴:
/// x(t) = x0 + [arctan((tan ψ − b)/a) + sgn(a) n π]/k, ψ = ±ω t,
/// with n = round(ψ/π) keeping x(t) continuous.
pub fn trace_constant_oscillatory(
    setup: &PhysicalSetup,
    u0: f64,
    params: HiddenParams,
    x0: f64,
    times: &TimeGrid,
) -> Result<Trajectory> {
    let law = OscillatoryLaw::new(setup, u0)?;
    let dir = setup.direction.sign();
    let samples = times
        .iter()
        .map(|t| {
            let mut s = law.sample(params, x0, dir, law.omega * dir * t);
            s.t = t;
            s
        })
        .collect();
    Ok(oscillatory_trajectory(setup, u0, params, x0, samples))
}

/// Same law as [`trace_constant_oscillatory`], with samples equidistributed
/// in the monitor 1 + |dθ/dψ| + |d ln ẋ/dψ| instead of uniform in t.
/// Uniform time steps under-resolve the fast stretches when (a, b) make the
/// speed vary by orders of magnitude, while over-dense steps on slow
/// stretches amplify round-off in higher derivatives. `times.count` is the
/// number of samples; the first and last sit at `times.start`/`times.end`.
pub fn trace_constant_oscillatory_adaptive(
    setup: &PhysicalSetup,
    u0: f64,
    params: HiddenParams,
    x0: f64,
    times: &TimeGrid,
) -> Result<Trajectory> {
    let law = OscillatoryLaw::new(setup, u0)?;
    let dir = setup.direction.sign();
    let rate = law.omega * dir;
    let (a, b) = (params.a(), params.b());
    let (p0, p1) = (rate * times.start, rate * times.end);

    // dθ/dψ = D/a peaks at the largest eigenvalue of [[1+b², ab], [ab, a²]].
    let tr = 1.0 + a * a + b * b;
    let lam_max = 0.5 * (tr + (tr * tr - 4.0 * a * a).max(0.0).sqrt());
    let per_pi = (100.0 * PI * lam_max / a.abs()).clamp(2000.0, 1e6);
    let m = (((p1 - p0).abs() / PI * per_pi).ceil() as usize).clamp(2, 20_000_000);
    let monitor = |psi: f64| {
        let (s, c) = law.theta(params, psi).sin_cos();
        let u = a * s + b * c;
        let d = c * c + u * u;
        let dd = 2.0 * u * (a * c - b * s) - 2.0 * c * s;
        1.0 + (d / a).abs() + (dd / a).abs()
    };
    let table_psi: Vec<f64> = (0..=m).map(|j| p0 + (p1 - p0) * j as f64 / m as f64).collect();
    let weights: Vec<f64> = table_psi.iter().map(|&p| monitor(p)).collect();
    let mut table_sigma = Vec::with_capacity(m + 1);
    table_sigma.push(0.0);
    for j in 0..m {
        table_sigma.push(table_sigma[j] + 0.5 * (weights[j] + weights[j + 1]));
    }
    let total = table_sigma[m];

    let samples = (0..times.count)
        .map(|i| {
            let psi = if i == 0 {
                p0
            } else if i + 1 == times.count {
                p1
            } else {
                let target = total * i as f64 / (times.count - 1) as f64;
                let j = table_sigma.partition_point(|&s| s <= target).clamp(1, m);
                let f = (target - table_sigma[j - 1]) / (table_sigma[j] - table_sigma[j - 1]);
                table_psi[j - 1] + f * (table_psi[j] - table_psi[j - 1])
            };
            law.sample(params, x0, dir, psi)
        })
        .collect();
    Ok(oscillatory_trajectory(setup, u0, params, x0, samples))
}

/// Closed-form evanescent constant-potential quantities.
#[derive(Debug, Clone, Copy)]
pub struct EvanescentLaw {
    /// fm⁻¹
    pub kappa: f64,
    /// Tangent argument rate (m0²c⁴ − (E−U0)²)/(ħ (E−U0)), rad/s.
    pub omega: f64,
}

impl EvanescentLaw {
    pub fn new(setup: &PhysicalSetup, u0: f64) -> Result<Self> {
        let gap = setup.energy - u0;
        match regime_for(setup, gap) {
            Regime::Evanescent => {}
            Regime::TurningPoint => return Err(Error::TurningPointSingular { x: f64::NAN }),
            Regime::Oscillatory => {
                return Err(Error::RegimeError { x: f64::NAN, expected: "evanescent", found: "oscillatory" })
            }
        }
        if gap == 0.0 {
            return Err(Error::EnergyEqualsPotential { x: f64::NAN });
        }
        let disc = setup.rest_energy_sq() - gap * gap;
        Ok(Self { kappa: disc.sqrt() / setup.hbar_c, omega: disc / (setup.hbar * gap) })
    }

    /// First time after `t_start` at which x(t) leaves every bounded window,
    /// for motion sign `dir`.
    pub fn next_divergence(&self, params: HiddenParams, dir: f64, t_start: f64) -> (f64, DivergenceKind) {
        let rate = self.omega * dir;
        let psi0 = rate * t_start;
        let sigma = rate.signum();
        let next = |phase: f64| {
            let m = (psi0 - phase) / PI;
            let m = if sigma > 0.0 { m.floor() + 1.0 } else { m.ceil() - 1.0 };
            phase + m * PI
        };
        let pole = next(FRAC_PI_2);
        let zero = next(-params.b().atan());
        let (psi, kind) = if sigma * (pole - zero) <= 0.0 {
            (pole, DivergenceKind::PositiveInfinity)
        } else {
            (zero, DivergenceKind::NegativeInfinity)
        };
        (psi / rate, kind)
    }
}

/// Constant potential, (E − U0)² < m0²c⁴:
/// x(t) = x0 + (1/2κ) ln|(tan ψ + b)/a|, ψ = ±(m0²c⁴ − (E−U0)²) t/(ħ(E−U0)).
///
/// Sampling stops at the first divergence after `times.start` or once
/// |x − x0| exceeds `window` (fm); the termination reports the analytic
/// divergence time.
pub fn trace_constant_evanescent(
    setup: &PhysicalSetup,
    u0: f64,
    params: HiddenParams,
    x0: f64,
    times: &TimeGrid,
    window: f64,
) -> Result<Trajectory> {
    let law = EvanescentLaw::new(setup, u0)?;
    let dir = setup.direction.sign();
    let (a, b) = (params.a(), params.b());
    let (t_div, kind) = law.next_divergence(params, dir, times.start);
    log::debug!(
        "evanescent divergence at t = {t_div:e} s; quarter-period expression pi*hbar*(E-U0)/(4(m0^2c^4-(E-U0)^2)) = {:e} s",
        PI * setup.hbar * (setup.energy - u0) / (4.0 * (setup.rest_energy_sq() - (setup.energy - u0).powi(2)))
    );

    let two_kappa_hc = 2.0 * law.kappa * setup.hbar_c;
    let mut samples = Vec::new();
    for t in times.iter() {
        if t >= t_div {
            break;
        }
        let tan = (law.omega * dir * t).tan();
        let arg = (tan + b) / a;
        let xi = arg.abs().ln() / (2.0 * law.kappa);
        if !xi.is_finite() || xi.abs() > window {
            break;
        }
        // Exponential basis φ1 = e^{κξ}, φ2 = e^{−κξ}; the effective scale
        // a' carries the sign that keeps a' e^{2κξ} = −tan ψ − b.
        let a_eff = -(tan + b).signum() * a.abs();
        let (e1, e2) = ((law.kappa * xi).exp(), (-law.kappa * xi).exp());
        let u = a_eff * e1 + b * e2;
        let momentum = dir * two_kappa_hc * a_eff / (e2 * e2 + u * u);
        samples.push(Sample { t, x: x0 + xi, branch: 0, regime: Regime::Evanescent, momentum });
    }
    Ok(Trajectory {
        samples,
        setup: *setup,
        potential: Potential::constant(u0),
        params: Some(params),
        direction: setup.direction,
        x0,
        method: TraceMethod::ClosedFormEvanescent,
        termination: Termination::Divergence { time: t_div, kind },
    })
}

/// Range and time anchor for [`trace_quadrature`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpan {
    /// Grid position where t = `t_start`.
    pub x_start: f64,
    /// Grid position where integration ends.
    pub x_end: f64,
    pub t_start: f64,
    /// Stop when |ẋ| < fraction · c.
    pub min_speed_fraction: f64,
}

impl QuadratureSpan {
    pub fn new(x_start: f64, x_end: f64) -> Self {
        Self { x_start, x_end, t_start: 0.0, min_speed_fraction: DEFAULT_MIN_SPEED_FRACTION }
    }

    pub fn with_start_time(mut self, t_start: f64) -> Self {
        self.t_start = t_start;
        self
    }
}

/// Integrates t(x) = t_start + ∫ dx/ẋ on the basis grid with a cubic rule
/// per interval. Setup and potential come from the basis.
pub fn trace_quadrature(
    basis: &SolutionBasis,
    params: HiddenParams,
    span: QuadratureSpan,
    direction: Direction,
) -> Result<Trajectory> {
    let setup = basis.setup.with_direction(direction);
    let pot = &basis.potential;
    let grid = &basis.grid;
    let (lo, hi) = (grid.first(), grid.last());
    let step = grid.uniform_step().unwrap_or_else(|| {
        grid.points().windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    });
    let locate = |x: f64| {
        if x < lo - 1e-9 * step || x > hi + 1e-9 * step {
            return Err(Error::BasisGap { x, grid_lo: lo, grid_hi: hi });
        }
        grid.index_of(x, 1e-6 * step)
            .ok_or_else(|| Error::InvalidGrid(format!("x = {x} fm is not a basis grid point")))
    };
    let i_start = locate(span.x_start)?;
    let i_end = locate(span.x_end)?;
    let indices: Vec<usize> =
        if i_end >= i_start { (i_start..=i_end).collect() } else { (i_end..=i_start).rev().collect() };

    let ra = ReducedAction::new(basis, params);
    let dir = direction.sign();
    let c_fm = setup.c_fm();
    let v_min = span.min_speed_fraction * c_fm;
    let start_regime = regime_for(&setup, setup.energy - pot.value(grid.points()[i_start]));
    if start_regime == Regime::TurningPoint {
        return Err(Error::TurningPointInRange { x: span.x_start });
    }

    let mut xs = Vec::with_capacity(indices.len());
    let mut inv_v = Vec::with_capacity(indices.len());
    let mut partial = Vec::with_capacity(indices.len());
    let mut termination = Termination::Complete;
    for &i in &indices {
        let x = grid.points()[i];
        let gap = setup.energy - pot.value(x);
        let regime = regime_for(&setup, gap);
        let kinetic = kinetic_term_for(&setup, gap);
        let p = ra.momentum_at(i);
        let v = kinetic.map(|k| dir * c_fm * k / p);
        match v {
            Some(v) if regime == start_regime && v.abs() >= v_min => {
                xs.push(x);
                inv_v.push(1.0 / v);
                partial.push((i, regime, dir * p));
            }
            _ => {
                termination = Termination::TurningPoint { x: xs.last().copied().unwrap_or(x) };
                break;
            }
        }
    }
    if xs.len() < 2 {
        return Err(Error::TurningPointInRange { x: span.x_start });
    }

    let elapsed = cumulative_cubic(&xs, &inv_v);
    let mut samples: Vec<Sample> = partial
        .iter()
        .zip(xs.iter().zip(&elapsed))
        .map(|(&(i, regime, momentum), (&x, &dt))| Sample {
            t: span.t_start + dt,
            x,
            branch: ra.branches()[i],
            regime,
            momentum,
        })
        .collect();
    if samples.len() > 1 && samples[1].t < samples[0].t {
        samples.reverse();
    }
    Ok(Trajectory {
        samples,
        setup,
        potential: pot.clone(),
        params: Some(params),
        direction,
        x0: span.x_start,
        method: TraceMethod::Quadrature,
        termination,
    })
}

/// Classical relativistic trajectory (ħ → 0) starting at x0 with the
/// setup's direction. Constant and linear potentials are closed form;
/// tabulated ones integrate Hamilton's equations with RK4. Stops at a
/// turning point.
pub fn classical_trace(setup: &PhysicalSetup, pot: &Potential, x0: f64, times: &TimeGrid) -> Result<Trajectory> {
    let gap0 = setup.energy - pot.value(x0);
    if gap0 <= 0.0 || regime_for(setup, gap0) != Regime::Oscillatory {
        return Err(Error::RegimeError { x: x0, expected: "oscillatory with E - V > 0", found: "other" });
    }
    let m2 = setup.rest_energy_sq();
    let c_fm = setup.c_fm();
    let dir = setup.direction.sign();
    let p0 = dir * (gap0 * gap0 - m2).sqrt();

    let mut samples = Vec::new();
    let mut termination = Termination::Complete;
    let sample = |t: f64, x: f64, p: f64| Sample { t, x, branch: 0, regime: Regime::Oscillatory, momentum: p };
    match pot {
        Potential::Constant { .. } => {
            let v = c_fm * p0 / gap0;
            samples.extend(times.iter().map(|t| sample(t, x0 + v * (t - times.start), p0)));
        }
        Potential::Linear { slope } => {
            // pc(t) = p0 − g c t; x − x0 = c τ (2 p0 − g c τ)/(gap0 + √(m² + pc²))
            let g = *slope;
            let t_turn = if g * p0 > 0.0 { times.start + p0 / (g * c_fm) } else { f64::INFINITY };
            let state = |tau: f64| {
                let p = p0 - g * c_fm * tau;
                let x = x0 + c_fm * tau * (2.0 * p0 - g * c_fm * tau) / (gap0 + (m2 + p * p).sqrt());
                (x, p)
            };
            for t in times.iter() {
                if t >= t_turn {
                    break;
                }
                let (x, p) = state(t - times.start);
                samples.push(sample(t, x, p));
            }
            if t_turn <= times.end {
                let (x, _) = state(t_turn - times.start);
                samples.push(sample(t_turn, x, 0.0));
                termination = Termination::TurningPoint { x };
            }
        }
        Potential::Tabulated(_) => {
            let rhs = |(x, p): (f64, f64)| (c_fm * p / (m2 + p * p).sqrt(), -c_fm * pot.gradient(x));
            let substeps = 32;
            let h = times.step() / substeps as f64;
            let mut y = (x0, p0);
            let mut t = times.start;
            samples.push(sample(t, x0, p0));
            'outer: for _ in 1..times.count {
                for _ in 0..substeps {
                    let k1 = rhs(y);
                    let k2 = rhs((y.0 + 0.5 * h * k1.0, y.1 + 0.5 * h * k1.1));
                    let k3 = rhs((y.0 + 0.5 * h * k2.0, y.1 + 0.5 * h * k2.1));
                    let k4 = rhs((y.0 + h * k3.0, y.1 + h * k3.1));
                    let next = (
                        y.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
                        y.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
                    );
                    if next.1 * p0 <= 0.0 {
                        let frac = y.1 / (y.1 - next.1);
                        let x_turn = y.0 + frac * (next.0 - y.0);
                        samples.push(sample(t + frac * h, x_turn, 0.0));
                        termination = Termination::TurningPoint { x: x_turn };
                        break 'outer;
                    }
                    y = next;
                    t += h;
                }
                samples.push(sample(t, y.0, y.1));
            }
        }
    }
    Ok(Trajectory {
        samples,
        setup: *setup,
        potential: pot.clone(),
        params: None,
        direction: setup.direction,
        x0,
        method: TraceMethod::Classical,
        termination,
    })
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn positions(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.x).collect()
    }

    /// Five-point centered velocity (fm/s) at sample `i`, which needs two
    /// neighbours on each side; fourth order on non-uniform times.
    pub fn centered_velocity(&self, i: usize) -> f64 {
        let s = &self.samples[i - 2..=i + 2];
        let (t0, x0) = (s[2].t, s[2].x);
        let scale = s[4].t - s[0].t;
        let nodes: Vec<f64> = s.iter().map(|p| (p.t - t0) / scale).collect();
        let w = fornberg_weights(0.0, &nodes, 1);
        w[1].iter().zip(s).map(|(w, p)| w * (p.x - x0)).sum::<f64>() / scale
    }

    /// Per interior sample: ẋ P / (c (E − V − m0²c⁴/(E − V))) − 1, with ẋ
    /// from [`Trajectory::centered_velocity`].
    pub fn law_of_motion_gaps(&self) -> Result<Vec<f64>> {
        if self.samples.len() < 5 {
            return Err(Error::TooFewSamples { needed: 5, found: self.samples.len() });
        }
        let c_fm = self.setup.c_fm();
        (2..self.samples.len() - 2)
            .map(|i| {
                let s = &self.samples[i];
                let gap = self.setup.energy - self.potential.value(s.x);
                let k = kinetic_term_for(&self.setup, gap).ok_or(Error::EnergyEqualsPotential { x: s.x })?;
                Ok(self.centered_velocity(i) * s.momentum / (c_fm * k) - 1.0)
            })
            .collect()
    }

    /// max |ẋ P / (c (E − V − m0²c⁴/(E − V))) − 1| over interior samples.
    pub fn law_of_motion_closure(&self) -> Result<f64> {
        Ok(self.law_of_motion_gaps()?.into_iter().map(f64::abs).fold(0.0, f64::max))
    }

    /// Whether t is strictly increasing and x is monotone.
    pub fn is_monotone(&self) -> bool {
        let t_ok = self.samples.windows(2).all(|w| w[1].t > w[0].t);
        let inc = self.samples.windows(2).all(|w| w[1].x >= w[0].x);
        let dec = self.samples.windows(2).all(|w| w[1].x <= w[0].x);
        t_ok && (inc || dec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::klein_gordon::{solve_constant, solve_numeric, NumericOptions};
    use crate::numerics::Grid;
    use approx::assert_relative_eq;

    fn fig1() -> PhysicalSetup {
        PhysicalSetup::new(2.0, 0.511).unwrap()
    }

    // πħ(E−U0)/((E−U0)² − m0²c⁴) at 30 digits.
    const DT_FIG1: f64 = 1.106_125_115_953_014_3e-21;
    // c √((E−U0)² − m0²c⁴)/(E−U0), m/s.
    const V_FIG1: f64 = 2.898_420_631_965_077e8;

    #[test]
    fn classical_pair_is_a_straight_line() {
        let s = fig1();
        let tg = TimeGrid::new(0.0, 5.0 * DT_FIG1, 2001).unwrap();
        let tr = trace_constant_oscillatory(&s, 0.0, HiddenParams::classical(), 12.0, &tg).unwrap();
        for smp in &tr.samples {
            let expect = 12.0 + V_FIG1 * 1e15 * smp.t;
            assert_relative_eq!(smp.x, expect, max_relative = 1e-9, epsilon = 1e-9);
        }
        assert!(tr.is_monotone());
    }

    #[test]
    fn trajectories_share_nodes() {
        let s = fig1();
        let k = 1.933_618_111_210_173_8 / s.hbar_c;
        for n in 0..4 {
            let t = (n as f64 + 0.5) * DT_FIG1 * (1.0 + 1e-13);
            let tg = TimeGrid::new(t, t * (1.0 + 1e-12), 2).unwrap();
            for (a, b) in [(0.2, 0.0), (4.0 / 3.0, -1.05), (0.25, 8.0)] {
                let tr = trace_constant_oscillatory(&s, 0.0, HiddenParams::new(a, b).unwrap(), 0.0, &tg).unwrap();
                let expect = (n as f64 + 0.5) * PI / k;
                assert_relative_eq!(tr.samples[0].x, expect, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn oscillatory_continuity_and_monotonicity_for_negative_a_and_reverse_direction() {
        for dir in [Direction::Forward, Direction::Backward] {
            let s = fig1().with_direction(dir);
            let tg = TimeGrid::new(0.0, 4.0 * DT_FIG1, 40_001).unwrap();
            for (a, b) in [(0.6, 0.3), (-0.6, 0.3), (-2.0, -1.0)] {
                let tr = trace_constant_oscillatory(&s, 0.0, HiddenParams::new(a, b).unwrap(), 0.0, &tg).unwrap();
                assert!(tr.is_monotone(), "dir {dir:?} a {a}");
                let jump = tr.samples.windows(2).map(|w| (w[1].x - w[0].x).abs()).fold(0.0, f64::max);
                assert!(jump < 5.0, "jump {jump}");
            }
        }
    }

    #[test]
    fn adaptive_sampling_stays_on_the_closed_form() {
        let s = fig1();
        let tg = TimeGrid::new(-0.3 * DT_FIG1, 2.2 * DT_FIG1, 3001).unwrap();
        for (a, b) in [(0.25, 8.0), (-0.7, 0.4)] {
            let hp = HiddenParams::new(a, b).unwrap();
            let ad = trace_constant_oscillatory_adaptive(&s, 0.0, hp, 3.0, &tg).unwrap();
            assert_eq!(ad.len(), 3001);
            assert!(ad.is_monotone());
            assert_relative_eq!(ad.samples[0].t, tg.start, max_relative = 1e-12);
            assert_relative_eq!(ad.samples[3000].t, tg.end, max_relative = 1e-12);
            for smp in ad.samples.iter().step_by(97) {
                let single = TimeGrid::new(smp.t, smp.t + 1e-3 * DT_FIG1, 2).unwrap();
                let u = trace_constant_oscillatory(&s, 0.0, hp, 3.0, &single).unwrap();
                assert_relative_eq!(u.samples[0].x, smp.x, epsilon = 1e-6);
            }
            // finer in time where the speed is large
            let steps: Vec<f64> = ad.samples.windows(2).map(|w| w[1].t - w[0].t).collect();
            let (lo, hi) = steps.iter().fold((f64::MAX, 0.0f64), |(l, h), &d| (l.min(d), h.max(d)));
            if a == 0.25 {
                assert!(hi / lo > 100.0);
            }
        }
    }

    #[test]
    fn oscillatory_rejects_other_regimes() {
        let tg = TimeGrid::new(0.0, 1e-21, 10).unwrap();
        let ev = PhysicalSetup::new(0.3, 0.511).unwrap();
        assert!(matches!(
            trace_constant_oscillatory(&ev, 0.0, HiddenParams::classical(), 0.0, &tg),
            Err(Error::RegimeError { .. })
        ));
        let tp = PhysicalSetup::new(0.511, 0.511).unwrap();
        assert!(matches!(
            trace_constant_oscillatory(&tp, 0.0, HiddenParams::classical(), 0.0, &tg),
            Err(Error::TurningPointSingular { .. })
        ));
        assert!(trace_constant_evanescent(&fig1(), 0.0, HiddenParams::classical(), 0.0, &tg, 1e4).is_err());
    }

    #[test]
    fn evanescent_start_and_divergence() {
        let s = PhysicalSetup::new(0.3, 0.511).unwrap();
        let hp = HiddenParams::new(0.25, 8.0).unwrap();
        let tg = TimeGrid::new(0.0, 3e-21, 30_001).unwrap();
        let tr = trace_constant_evanescent(&s, 0.0, hp, 5.0, &tg, 1e5).unwrap();
        let kappa_mev = (0.511f64 * 0.511 - 0.09).sqrt();
        let expect0 = s.hbar_c / (2.0 * kappa_mev) * (8.0f64 / 0.25).ln() + 5.0;
        assert_relative_eq!(tr.samples[0].x, expect0, max_relative = 1e-12);
        match tr.termination {
            Termination::Divergence { time, kind } => {
                // (π/2) ħ (E−U0)/(m0²c⁴ − (E−U0)²)
                assert_relative_eq!(time, 1.812_606_854_539_751e-21, max_relative = 1e-9);
                assert_eq!(kind, DivergenceKind::PositiveInfinity);
            }
            other => panic!("unexpected termination {other:?}"),
        }
        assert!(tr.samples.last().unwrap().t < 1.8127e-21);
        assert!(tr.samples.windows(2).all(|w| w[1].x > w[0].x));
    }

    #[test]
    fn evanescent_log_zero_reached_backward() {
        let s = PhysicalSetup::new(0.3, 0.511).unwrap().with_direction(Direction::Backward);
        let hp = HiddenParams::new(0.25, 8.0).unwrap();
        let law = EvanescentLaw::new(&s, 0.0).unwrap();
        let (t, kind) = law.next_divergence(hp, -1.0, 0.0);
        // ψ = −ω t hits −atan(8) before −π/2.
        assert_eq!(kind, DivergenceKind::NegativeInfinity);
        assert_relative_eq!(t, 8f64.atan() / law.omega, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_satisfies_law_of_motion() {
        let s = fig1();
        let tg = TimeGrid::new(0.0, 2.0 * DT_FIG1, 200_001).unwrap();
        for (a, b) in [(0.2, 0.0), (4.0 / 3.0, -1.05), (1.0, 0.0)] {
            let tr = trace_constant_oscillatory(&s, 0.0, HiddenParams::new(a, b).unwrap(), 0.0, &tg).unwrap();
            let gap = tr.law_of_motion_closure().unwrap();
            assert!(gap < 1e-4, "(a,b)=({a},{b}) gap {gap}");
        }
        let ev = PhysicalSetup::new(0.3, 0.511).unwrap();
        let tg = TimeGrid::new(0.0, 1.7e-21, 100_001).unwrap();
        let tr = trace_constant_evanescent(&ev, 0.0, HiddenParams::new(0.25, 8.0).unwrap(), 0.0, &tg, 1e4).unwrap();
        assert!(tr.law_of_motion_closure().unwrap() < 1e-4);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let s = fig1();
        let k = 1.933_618_111_210_173_8 / s.hbar_c;
        let span_x = 5.0 * PI / k;
        let g = Grid::uniform(0.0, span_x, 1.0 / (400.0 * k)).unwrap();
        let basis = solve_constant(&s, 0.0, &g).unwrap();
        for (a, b) in [(0.2, 0.0), (4.0 / 3.0, -1.05), (0.7, 0.5)] {
            let hp = HiddenParams::new(a, b).unwrap();
            // Closed form passes x = 0 at ψ0 = atan(b) (t0 = ψ0/ω).
            let omega = DT_FIG1.recip() * PI;
            let t0 = b.atan() / omega;
            let tr = trace_quadrature(&basis, hp, QuadratureSpan::new(0.0, g.last()).with_start_time(t0), Direction::Forward)
                .unwrap();
            assert_eq!(tr.termination, Termination::Complete);
            let law = OscillatoryLaw::new(&s, 0.0).unwrap();
            for smp in tr.samples.iter().step_by(50) {
                // invert the closed form: ψ = atan(a tan(kx) + b) + nπ
                let theta = k * smp.x;
                let n = (theta / PI).round();
                let psi = (a * theta.tan() + b).atan() + n * PI;
                let t_exact = psi / law.omega;
                assert_relative_eq!(smp.t, t_exact, max_relative = 1e-6, epsilon = 1e-6 * DT_FIG1);
            }
        }
    }

    #[test]
    fn quadrature_velocity_identity() {
        let s = fig1();
        // P peaks sharply for (4, 2.5); the three-point ẋ needs ~1/1000 of λ.
        let g = Grid::uniform(-6000.0, -2000.0, 0.125).unwrap();
        let pot = Potential::linear(1e-4);
        let basis = solve_numeric(&s, &pot, &g, &NumericOptions::default()).unwrap();
        let hp = HiddenParams::new(4.0, 2.5).unwrap();
        let tr = trace_quadrature(&basis, hp, QuadratureSpan::new(-5400.0, -2000.0), Direction::Forward).unwrap();
        assert!(tr.is_monotone());
        let gap = tr.law_of_motion_closure().unwrap();
        assert!(gap < 1e-4, "closure gap {gap}");
    }

    #[test]
    fn quadrature_stops_at_turning_point() {
        // E − g x = m0c² at x_t = (2 − 0.511)/1e-3 = 1489 fm.
        let s = fig1();
        let pot = Potential::linear(1e-3);
        let g = Grid::uniform(-1000.0, 2000.0, 0.25).unwrap();
        let basis = solve_numeric(&s, &pot, &g, &NumericOptions::default()).unwrap();
        let tr = trace_quadrature(&basis, HiddenParams::classical(), QuadratureSpan::new(-1000.0, 2000.0), Direction::Forward)
            .unwrap();
        match tr.termination {
            Termination::TurningPoint { x } => assert!(x < 1489.0 && x > 1400.0, "x = {x}"),
            other => panic!("{other:?}"),
        }
        assert!(tr.samples.iter().all(|s| s.regime == Regime::Oscillatory));
    }

    #[test]
    fn quadrature_errors() {
        let s = fig1();
        let g = Grid::uniform(0.0, 100.0, 1.0).unwrap();
        let basis = solve_constant(&s, 0.0, &g).unwrap();
        let hp = HiddenParams::classical();
        assert!(matches!(
            trace_quadrature(&basis, hp, QuadratureSpan::new(0.0, 200.0), Direction::Forward),
            Err(Error::BasisGap { .. })
        ));
        assert!(matches!(
            trace_quadrature(&basis, hp, QuadratureSpan::new(0.5, 50.0), Direction::Forward),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn classical_trace_constant_and_linear() {
        let s = fig1();
        let tg = TimeGrid::new(0.0, 1e-20, 101).unwrap();
        let line = classical_trace(&s, &Potential::constant(0.0), 0.0, &tg).unwrap();
        let last = line.samples.last().unwrap();
        assert_relative_eq!(last.x / last.t / 1e15, V_FIG1, max_relative = 1e-12);

        let g = 1e-3;
        let pot = Potential::linear(g);
        let tg = TimeGrid::new(0.0, 1e-19, 2001).unwrap();
        let arc = classical_trace(&s, &pot, -1000.0, &tg).unwrap();
        match arc.termination {
            Termination::TurningPoint { x } => assert_relative_eq!(x, (2.0 - 0.511) / g, max_relative = 1e-9),
            other => panic!("{other:?}"),
        }
        assert!(arc.is_monotone());

        // RK4 Hamilton path on tabulated data of the same line.
        let grid: Vec<f64> = (0..=60).map(|i| -1500.0 + 50.0 * i as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|x| g * x).collect();
        let tab = Potential::tabulated(grid, vals).unwrap();
        let num = classical_trace(&s, &tab, -1000.0, &tg).unwrap();
        for (p, q) in num.samples.iter().zip(&arc.samples).take(arc.samples.len() - 1) {
            assert_relative_eq!(p.x, q.x, max_relative = 1e-8, epsilon = 1e-6);
        }
        match num.termination {
            Termination::TurningPoint { x } => assert_relative_eq!(x, (2.0 - 0.511) / g, max_relative = 1e-6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn classical_trace_ignores_hbar() {
        let tg = TimeGrid::new(0.0, 1e-20, 11).unwrap();
        let pot = Potential::linear(1e-3);
        let base = classical_trace(&fig1(), &pot, 0.0, &tg).unwrap();
        for eps in [0.5, 0.25] {
            let s = fig1().with_hbar_scale(eps).unwrap();
            assert_eq!(classical_trace(&s, &pot, 0.0, &tg).unwrap().samples, base.samples);
        }
    }
}
