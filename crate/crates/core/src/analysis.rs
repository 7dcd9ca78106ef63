//! Nodes, de Broglie relations and residual validation.
//!
//! Nodes are the points every trajectory of a given energy passes through
//! regardless of (a, b); adjacent nodes are half a de Broglie wavelength
//! apart. Validation evaluates the third-order equation of motion on sampled
//! trajectories and the quantum stationary Hamilton–Jacobi equation on the
//! reduced action, both normalized to be dimensionless.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::klein_gordon::{Provenance, SolutionBasis};
use crate::model::{regime_for, Regime};
use crate::numerics::fornberg_weights;
use crate::potential::Potential;
use crate::reduced_action::ReducedAction;
use crate::setup::{HiddenParams, PhysicalSetup};
use crate::trajectory::{trace_constant_oscillatory, TimeGrid, TraceMethod, Trajectory};

/// Default node clustering radius in sample steps.
pub const DEFAULT_CLUSTER_RADIUS: f64 = 2.0;

pub const FIRQNL_TOL_CLOSED_FORM: f64 = 1e-6;
pub const FIRQNL_TOL_QUADRATURE: f64 = 1e-3;
pub const RQSHJE_TOL_ANALYTIC: f64 = 1e-9;
pub const RQSHJE_TOL_NUMERIC: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeMethod {
    ClosedForm,
    CrossingDetection,
    Phi2Zeros,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeReport {
    pub method: NodeMethod,
    /// Empty for [`NodeMethod::Phi2Zeros`].
    pub node_times_s: Vec<f64>,
    pub node_positions_fm: Vec<f64>,
    pub spacing_t_s: Vec<f64>,
    pub spacing_x_fm: Vec<f64>,
    /// πħc/Δx per interval, i.e. the interval's mean momentum as pc.
    pub interval_momentum_mev: Vec<f64>,
    /// 2Δx per interval.
    pub wavelength_fm: Vec<f64>,
    /// Crossing scatter inside each detected cluster (zero otherwise).
    pub cluster_spread_t_s: Vec<f64>,
    pub cluster_spread_x_fm: Vec<f64>,
    /// Detected node minus nearest φ2 zero; filled by [`NodeReport::with_phi2_offsets`].
    pub phi2_zero_offsets_fm: Vec<f64>,
}

impl NodeReport {
    fn build(method: NodeMethod, times: Vec<f64>, positions: Vec<f64>, hbar_c: f64) -> Self {
        let diffs = |v: &[f64]| v.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>();
        let spacing_x = diffs(&positions);
        let n = positions.len();
        Self {
            method,
            spacing_t_s: diffs(&times),
            interval_momentum_mev: spacing_x.iter().map(|dx| PI * hbar_c / dx.abs()).collect(),
            wavelength_fm: spacing_x.iter().map(|dx| 2.0 * dx.abs()).collect(),
            spacing_x_fm: spacing_x,
            node_times_s: times,
            node_positions_fm: positions,
            cluster_spread_t_s: vec![0.0; n],
            cluster_spread_x_fm: vec![0.0; n],
            phi2_zero_offsets_fm: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.node_positions_fm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_positions_fm.is_empty()
    }

    /// Mean |Δx| over intervals, fm.
    pub fn mean_spacing_x(&self) -> Option<f64> {
        mean(self.spacing_x_fm.iter().map(|d| d.abs()))
    }

    /// Mean |Δt| over intervals, s.
    pub fn mean_spacing_t(&self) -> Option<f64> {
        mean(self.spacing_t_s.iter().map(|d| d.abs()))
    }

    /// Mean 2|Δx|, fm.
    pub fn mean_wavelength(&self) -> Option<f64> {
        self.mean_spacing_x().map(|d| 2.0 * d)
    }

    /// Records, per node, its offset from the nearest φ2 zero of `basis`.
    pub fn with_phi2_offsets(mut self, basis: &SolutionBasis) -> Self {
        let zeros = basis.phi2_zeros();
        self.phi2_zero_offsets_fm = self
            .node_positions_fm
            .iter()
            .map(|&x| {
                zeros.iter().map(|z| x - z).min_by(|p, q| p.abs().total_cmp(&q.abs())).unwrap_or(f64::NAN)
            })
            .collect();
        self
    }
}

fn mean(it: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Wavenumber (fm⁻¹) and tangent rate (rad/s) of an oscillatory constant potential.
fn oscillatory_rates(setup: &PhysicalSetup, u0: f64) -> Result<(f64, f64)> {
    let gap = setup.energy - u0;
    if regime_for(setup, gap) != Regime::Oscillatory {
        return Err(Error::RegimeError { x: f64::NAN, expected: "oscillatory", found: regime_for(setup, gap).name() });
    }
    let pc = (gap * gap - setup.rest_energy_sq()).sqrt();
    Ok((pc / setup.hbar_c, (gap - setup.rest_energy_sq() / gap) / setup.hbar))
}

/// First `count` nodes of a constant potential after t = 0:
/// t_n = (n+½)πħ(E−U0)/((E−U0)² − m0²c⁴), x_n = x0 ± (n+½)π/k.
/// Positions assume a > 0; for a < 0 they mirror about x0.
pub fn nodes_closed_form(setup: &PhysicalSetup, u0: f64, x0: f64, count: usize) -> Result<NodeReport> {
    let (k, omega) = oscillatory_rates(setup, u0)?;
    let dir = setup.direction.sign();
    let half = |n: usize| (n as f64 + 0.5) * PI;
    let times = (0..count).map(|n| half(n) / omega).collect();
    let positions = (0..count).map(|n| x0 + dir * half(n) / k).collect();
    Ok(NodeReport::build(NodeMethod::ClosedForm, times, positions, setup.hbar_c))
}

/// Node positions taken as the φ2 zeros of a basis (no times).
pub fn nodes_from_phi2_zeros(basis: &SolutionBasis) -> NodeReport {
    let mut r = NodeReport::build(NodeMethod::Phi2Zeros, Vec::new(), basis.phi2_zeros(), basis.setup.hbar_c);
    r.phi2_zero_offsets_fm = vec![0.0; r.len()];
    r
}

/// Clustering radius for crossings: the larger of `cluster_radius` local
/// sample steps and `period_fraction` of the local node period πħ/K(x),
/// K = E − V − m0²c⁴/(E − V).
///
/// For constant potentials nodes are exact and the default (no period
/// term) applies. When V varies, trajectories reach each φ2 zero at times
/// that differ slightly with (a, b), and the spread accumulates along the
/// path; a non-zero `period_fraction` groups such near-coincidences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeOptions {
    pub cluster_radius: f64,
    pub period_fraction: f64,
}

impl Default for NodeOptions {
    fn default() -> Self {
        Self { cluster_radius: DEFAULT_CLUSTER_RADIUS, period_fraction: 0.0 }
    }
}

impl NodeOptions {
    pub fn with_period_fraction(mut self, fraction: f64) -> Self {
        self.period_fraction = fraction;
        self
    }
}

#[derive(Debug, Clone, Copy)]
struct Crossing {
    t: f64,
    x: f64,
    /// Clustering radius around this crossing, s.
    radius: f64,
    pair: (usize, usize),
}

/// Linear interpolation of x at `t` (None outside the sampled range).
fn x_at(traj: &Trajectory, t: f64) -> Option<f64> {
    let s = &traj.samples;
    if s.is_empty() || t < s[0].t || t > s[s.len() - 1].t {
        return None;
    }
    let j = s.partition_point(|p| p.t <= t);
    if j == 0 {
        return Some(s[0].x);
    }
    if j == s.len() {
        return Some(s[j - 1].x);
    }
    let (p, q) = (&s[j - 1], &s[j]);
    Some(p.x + (q.x - p.x) * (t - p.t) / (q.t - p.t))
}

fn pair_crossings(a: &Trajectory, b: &Trajectory, pair: (usize, usize), opts: NodeOptions) -> Vec<Crossing> {
    let radius = |dt: f64, x: f64| {
        let mut r = opts.cluster_radius * dt;
        if opts.period_fraction > 0.0 {
            let gap = a.setup.energy - a.potential.value(x);
            if let Some(k) = crate::model::kinetic_term_for(&a.setup, gap) {
                r = r.max(opts.period_fraction * PI * a.setup.hbar / k.abs());
            }
        }
        r
    };
    // difference on a's sample times within the common window
    let pts: Vec<(f64, f64, f64)> = a
        .samples
        .iter()
        .filter_map(|s| x_at(b, s.t).map(|xb| (s.t, s.x, s.x - xb)))
        .collect();
    let mut out = Vec::new();
    for k in 0..pts.len() {
        let (t, x, d) = pts[k];
        let local_dt = |k: usize| {
            let lo = pts[k.saturating_sub(1)].0;
            let hi = pts[(k + 1).min(pts.len() - 1)].0;
            (hi - lo).max(f64::MIN_POSITIVE)
        };
        if d == 0.0 {
            let prev_zero = k > 0 && pts[k - 1].2 == 0.0;
            let next_zero = k + 1 < pts.len() && pts[k + 1].2 == 0.0;
            if !prev_zero && !next_zero {
                out.push(Crossing { t, x, radius: radius(local_dt(k), x), pair });
            }
            continue;
        }
        if let Some(&(t1, x1, d1)) = pts.get(k + 1) {
            if d * d1 < 0.0 {
                let f = d / (d - d1);
                let xc = x + f * (x1 - x);
                out.push(Crossing { t: t + f * (t1 - t), x: xc, radius: radius(t1 - t, xc), pair });
            }
        }
    }
    out
}

/// Nodes common to all trajectories: pairwise crossings clustered in time,
/// keeping clusters where every pair crosses.
pub fn detect_nodes(trajectories: &[Trajectory], opts: NodeOptions) -> Result<NodeReport> {
    let n = trajectories.len();
    if n < 2 {
        return Err(Error::InsufficientTrajectories { found: n });
    }
    let mut crossings = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            crossings.extend(pair_crossings(&trajectories[i], &trajectories[j], (i, j), opts));
        }
    }
    if crossings.is_empty() {
        return Err(Error::NoCrossings);
    }
    crossings.sort_by(|p, q| p.t.total_cmp(&q.t));

    let mut clusters: Vec<Vec<Crossing>> = Vec::new();
    for c in crossings {
        match clusters.last_mut() {
            Some(cl) if c.t - cl[0].t <= cl[0].radius.max(c.radius) => cl.push(c),
            _ => clusters.push(vec![c]),
        }
    }
    let pairs = n * (n - 1) / 2;
    let mut times = Vec::new();
    let mut positions = Vec::new();
    let mut spread_t = Vec::new();
    let mut spread_x = Vec::new();
    for cl in clusters {
        let distinct: BTreeSet<(usize, usize)> = cl.iter().map(|c| c.pair).collect();
        if distinct.len() < pairs {
            continue;
        }
        let m = cl.len() as f64;
        let t = cl.iter().map(|c| c.t).sum::<f64>() / m;
        let x = cl.iter().map(|c| c.x).sum::<f64>() / m;
        spread_t.push(cl.iter().map(|c| (c.t - t).abs()).fold(0.0, f64::max));
        spread_x.push(cl.iter().map(|c| (c.x - x).abs()).fold(0.0, f64::max));
        times.push(t);
        positions.push(x);
    }
    let mut r = NodeReport::build(NodeMethod::CrossingDetection, times, positions, trajectories[0].setup.hbar_c);
    r.cluster_spread_t_s = spread_t;
    r.cluster_spread_x_fm = spread_x;
    Ok(r)
}

/// λ = hc/√((E−U0)² − m0²c⁴), fm.
pub fn de_broglie(setup: &PhysicalSetup, u0: f64) -> Result<f64> {
    let (k, _) = oscillatory_rates(setup, u0)?;
    Ok(2.0 * PI / k)
}

/// [S0(x_b) − S0(x_a)]/(x_b − x_a) as pc, MeV.
pub fn mean_momentum(ra: &ReducedAction<'_>, x_a: f64, x_b: f64) -> Result<f64> {
    if !(x_b > x_a) {
        return Err(Error::InvalidParameter(format!("mean momentum needs x_a < x_b, got {x_a} and {x_b}")));
    }
    let hc = ra.basis().setup.hbar_c;
    Ok(hc * (ra.phase(x_b)? - ra.phase(x_a)?) / (x_b - x_a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValidationKind {
    Firqnl,
    Rqshje,
    Closure,
    Limits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCheck {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub kind: ValidationKind,
    /// Evaluation times (FIRQNL only).
    pub times_s: Vec<f64>,
    pub positions_fm: Vec<f64>,
    /// Dimensionless residual per evaluation point.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Terms that vanish identically for this input.
    pub exact_zero_terms: Vec<String>,
    pub checks: Vec<NamedCheck>,
}

impl ValidationReport {
    fn from_residuals(kind: ValidationKind, times: Vec<f64>, positions: Vec<f64>, residuals: Vec<f64>, tol: f64) -> Self {
        let max = residuals.iter().map(|r| r.abs()).fold(0.0, f64::max);
        let mean = mean(residuals.iter().map(|r| r.abs())).unwrap_or(0.0);
        Self {
            kind,
            times_s: times,
            positions_fm: positions,
            residuals,
            max_residual: max,
            mean_residual: mean,
            tolerance: tol,
            passed: max <= tol,
            exact_zero_terms: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self.passed = self.max_residual <= tol && self.checks.iter().all(|c| c.passed);
        self
    }
}

/// The six additive pieces of the first integral at one sample, MeV⁶.
/// The first term (U²−M)³[(1 − ẋ²/c²) − M/U²] is split in two so the
/// normalization does not hide its internal cancellation.
pub fn firqnl_terms(setup: &PhysicalSetup, pot: &Potential, x: f64, xd: f64, xdd: f64, xddd: f64) -> [f64; 6] {
    let m = setup.rest_energy_sq();
    let u = setup.energy - pot.value(x);
    let (dv, d2v) = (pot.gradient(x), pot.curvature(x));
    let h2 = setup.hbar * setup.hbar;
    let c = setup.c_fm();
    let w = u * u - m;
    let w3 = w * w * w;
    let g = (u.powi(4) - m * m) / u;
    [
        w3 * (1.0 - xd * xd / (c * c)),
        -w3 * m / (u * u),
        -0.5 * h2 * g * xdd * dv,
        -0.5 * h2 * g * xd * xd * d2v,
        0.5 * h2 * w * w * (1.5 * (xdd / xd).powi(2) - xddd / xd),
        -0.25 * h2 * (4.0 * m * (1.0 - m / (u * u)) + 3.0 * (u + m / u).powi(2)) * (xd * dv).powi(2),
    ]
}

/// Normalized first-integral residual on every sample with three neighbours
/// on each side; derivatives from 7-point local polynomial fits in t.
pub fn firqnl_residual(traj: &Trajectory) -> Result<ValidationReport> {
    let s = &traj.samples;
    if s.len() < 7 {
        return Err(Error::TooFewSamples { needed: 7, found: s.len() });
    }
    let mut times = Vec::with_capacity(s.len() - 6);
    let mut positions = Vec::with_capacity(s.len() - 6);
    let mut residuals = Vec::with_capacity(s.len() - 6);
    for i in 3..s.len() - 3 {
        let win = &s[i - 3..=i + 3];
        let (t0, x0) = (s[i].t, s[i].x);
        let scale = win[6].t - win[0].t;
        let nodes: Vec<f64> = win.iter().map(|p| (p.t - t0) / scale).collect();
        let w = fornberg_weights(0.0, &nodes, 3);
        let d = |k: usize| w[k].iter().zip(win).map(|(w, p)| w * (p.x - x0)).sum::<f64>() / scale.powi(k as i32);
        let terms = firqnl_terms(&traj.setup, &traj.potential, x0, d(1), d(2), d(3));
        let norm = terms.iter().map(|t| t.abs()).fold(0.0, f64::max);
        let sum: f64 = terms.iter().sum();
        times.push(t0);
        positions.push(x0);
        residuals.push(if norm > 0.0 { sum / norm } else { 0.0 });
    }
    let tol = match traj.method {
        TraceMethod::Quadrature => FIRQNL_TOL_QUADRATURE,
        _ => FIRQNL_TOL_CLOSED_FORM,
    };
    let mut r = ValidationReport::from_residuals(ValidationKind::Firqnl, times, positions, residuals, tol);
    if traj.potential.is_constant() {
        r.exact_zero_terms = vec!["xddot_dV".into(), "xdot2_d2V".into(), "xdot_dV_squared".into()];
    }
    Ok(r)
}

/// Normalized stationary Hamilton–Jacobi residual at every grid point:
/// P² − (ħc)²/2 [3/2 (P′/P)² − P″/P] + m0²c⁴ − (E − V)², divided by the
/// largest of its terms. P and its derivatives are closed-form in the basis.
pub fn rqshje_residual(ra: &ReducedAction<'_>) -> Result<ValidationReport> {
    let basis = ra.basis();
    let setup = &basis.setup;
    let m = setup.rest_energy_sq();
    let hc2 = setup.hbar_c * setup.hbar_c;
    let mut positions = Vec::with_capacity(basis.len());
    let mut residuals = Vec::with_capacity(basis.len());
    for &x in basis.grid.points() {
        let jet = ra.momentum_jet(x)?;
        let u = setup.energy - basis.potential.value(x);
        let quantum = -0.5 * hc2 * (1.5 * (jet.dp / jet.p).powi(2) - jet.d2p / jet.p);
        let terms = [jet.p * jet.p, quantum, m, -u * u];
        let norm = terms.iter().map(|t| t.abs()).fold(0.0, f64::max);
        positions.push(x);
        residuals.push(terms.iter().sum::<f64>() / norm);
    }
    let tol = match basis.provenance {
        Provenance::Analytic(_) => RQSHJE_TOL_ANALYTIC,
        Provenance::Numeric { .. } => RQSHJE_TOL_NUMERIC,
    };
    Ok(ValidationReport::from_residuals(ValidationKind::Rqshje, Vec::new(), positions, residuals, tol))
}

/// Distance in the (t [s], x [m]) plane from each sample to the classical
/// line through (0, x0) of a constant potential. Returns the maximum.
pub fn max_pp0_distance(traj: &Trajectory) -> Result<f64> {
    let Potential::Constant { u0 } = traj.potential else {
        return Err(Error::InvalidParameter("PP0 distance needs a constant potential".into()));
    };
    let setup = &traj.setup;
    let gap = setup.energy - u0;
    let pc = (gap * gap - setup.rest_energy_sq()).sqrt();
    let slope = traj.direction.sign() * setup.c * pc / gap;
    let norm = (1.0 + slope * slope).sqrt();
    let x0 = traj.x0 / crate::setup::FM_PER_M;
    Ok(traj
        .samples
        .iter()
        .map(|s| (s.x / crate::setup::FM_PER_M - x0 - slope * s.t).abs() / norm)
        .fold(0.0, f64::max))
}

/// Relative gap between E−V − m0²c⁴/(E−V) and twice the kinetic energy
/// T = E−V − m0c² at the given T/m0c².
pub fn nonrelativistic_gap(rest_energy: f64, kinetic_ratio: f64) -> f64 {
    let m = rest_energy;
    let u = m * (1.0 + kinetic_ratio);
    let rhs = u - m * m / u;
    rhs / (2.0 * m * kinetic_ratio) - 1.0
}

/// Limit checks: the non-relativistic reduction of the law of motion and,
/// for oscillatory constant potentials, linear ħ-scaling of node spacings
/// and monotone shrinking of the PP0 distance as ħ → 0.
pub fn limit_checks(setup: &PhysicalSetup, pot: &Potential, params: HiddenParams) -> Result<ValidationReport> {
    let mut checks = Vec::new();
    let mut push = |name: &str, value: f64, tolerance: f64, passed: bool| {
        checks.push(NamedCheck { name: name.into(), value, tolerance, passed })
    };

    let ratios = [1e-2, 1e-3, 1e-4];
    let gaps: Vec<f64> = ratios.iter().map(|&r| nonrelativistic_gap(setup.rest_energy, r)).collect();
    push("nonrelativistic_gap_at_1e-3", gaps[1].abs(), 1e-3, gaps[1].abs() <= 1e-3);
    let order = (gaps[0] / gaps[1]).abs();
    push("nonrelativistic_gap_decade_ratio", order, 0.5, (order - 10.0).abs() <= 0.5);

    if let Potential::Constant { u0 } = *pot {
        if regime_for(setup, setup.energy - u0) == Regime::Oscillatory {
            let base = nodes_closed_form(setup, u0, 0.0, 2)?;
            let (dx1, dt1) = (base.spacing_x_fm[0], base.spacing_t_s[0]);
            for eps in [0.5, 0.25] {
                let r = nodes_closed_form(&setup.with_hbar_scale(eps)?, u0, 0.0, 2)?;
                let ex = (r.spacing_x_fm[0] / dx1 / eps - 1.0).abs();
                let et = (r.spacing_t_s[0] / dt1 / eps - 1.0).abs();
                push(&format!("spacing_x_linear_in_eps_{eps}"), ex, 1e-9, ex <= 1e-9);
                push(&format!("spacing_t_linear_in_eps_{eps}"), et, 1e-9, et <= 1e-9);
            }
            let window = TimeGrid::new(0.0, 5.0 * dt1, 8001)?;
            let mut pp0 = Vec::new();
            for eps in [1.0, 0.5, 0.25, 0.125] {
                let s = setup.with_hbar_scale(eps)?;
                pp0.push(max_pp0_distance(&trace_constant_oscillatory(&s, u0, params, 0.0, &window)?)?);
            }
            let monotone = pp0.windows(2).all(|w| w[1] < w[0]) || pp0[0] == 0.0;
            push("pp0_monotone_in_eps", pp0[3] / pp0[0].max(f64::MIN_POSITIVE), 1.0, monotone);
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(ValidationReport {
        kind: ValidationKind::Limits,
        times_s: Vec::new(),
        positions_fm: Vec::new(),
        residuals: Vec::new(),
        max_residual: 0.0,
        mean_residual: 0.0,
        tolerance: 0.0,
        passed,
        exact_zero_terms: Vec::new(),
        checks,
    })
}

/// Law-of-motion closure of a trajectory as a report.
pub fn closure_report(traj: &Trajectory, tol: f64) -> Result<ValidationReport> {
    let gaps = traj.law_of_motion_gaps()?;
    let s = &traj.samples[2..traj.samples.len() - 2];
    Ok(ValidationReport::from_residuals(
        ValidationKind::Closure,
        s.iter().map(|p| p.t).collect(),
        s.iter().map(|p| p.x).collect(),
        gaps,
        tol,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::klein_gordon::{solve_constant, solve_numeric, NumericOptions};
    use crate::numerics::Grid;
    use crate::setup::Direction;
    use approx::assert_relative_eq;

    const DX_FIG1: f64 = 320.601_585_761_297_9;
    const DT_FIG1: f64 = 1.106_125_115_953_014_3e-21;
    const PC_FIG1: f64 = 1.933_618_111_210_173_8;

    fn fig1() -> PhysicalSetup {
        PhysicalSetup::new(2.0, 0.511).unwrap()
    }

    fn fig1_sets() -> Vec<HiddenParams> {
        [(0.2, 0.0), (4.0 / 3.0, -1.05), (0.25, 8.0)].iter().map(|&(a, b)| HiddenParams::new(a, b).unwrap()).collect()
    }

    #[test]
    fn closed_form_nodes_oracle() {
        let r = nodes_closed_form(&fig1(), 0.0, 0.0, 4).unwrap();
        assert_relative_eq!(r.spacing_x_fm[0], DX_FIG1, max_relative = 1e-12);
        assert_relative_eq!(r.spacing_t_s[2], DT_FIG1, max_relative = 1e-12);
        assert_relative_eq!(r.wavelength_fm[1], 2.0 * DX_FIG1, max_relative = 1e-12);
        assert_relative_eq!(r.interval_momentum_mev[0], PC_FIG1, max_relative = 1e-12);
        // Δx/Δt is the classical speed
        assert_relative_eq!(r.spacing_x_fm[0] / r.spacing_t_s[0] / 1e15, 2.898_420_631_965_077e8, max_relative = 1e-12);
        assert_relative_eq!(de_broglie(&fig1(), 0.0).unwrap(), 2.0 * DX_FIG1, max_relative = 1e-12);
        let half = fig1().with_hbar_scale(0.5).unwrap();
        assert_relative_eq!(de_broglie(&half, 0.0).unwrap(), DX_FIG1, max_relative = 1e-12);
        assert!(nodes_closed_form(&PhysicalSetup::new(0.3, 0.511).unwrap(), 0.0, 0.0, 3).is_err());
        let back = nodes_closed_form(&fig1().with_direction(Direction::Backward), 0.0, 0.0, 2).unwrap();
        assert!(back.spacing_x_fm[0] < 0.0);
    }

    #[test]
    fn detected_nodes_match_closed_form() {
        let s = fig1();
        let tg = TimeGrid::new(0.0, 4.0 * DT_FIG1, 160_001).unwrap();
        let trajs: Vec<_> =
            fig1_sets().into_iter().map(|hp| trace_constant_oscillatory(&s, 0.0, hp, 0.0, &tg).unwrap()).collect();
        let det = detect_nodes(&trajs, NodeOptions::default()).unwrap();
        let cf = nodes_closed_form(&s, 0.0, 0.0, 4).unwrap();
        assert_eq!(det.len(), 4, "{:?}", det.node_times_s);
        for (d, c) in det.node_positions_fm.iter().zip(&cf.node_positions_fm) {
            assert_relative_eq!(*d, *c, max_relative = 1e-3);
        }
        for w in &det.wavelength_fm {
            assert_relative_eq!(*w, 2.0 * DX_FIG1, max_relative = 1e-3);
        }
    }

    #[test]
    fn identical_trajectories_have_no_crossings() {
        let s = fig1();
        let tg = TimeGrid::new(0.0, 2.0 * DT_FIG1, 1001).unwrap();
        let hp = HiddenParams::new(0.5, 1.0).unwrap();
        let t = trace_constant_oscillatory(&s, 0.0, hp, 0.0, &tg).unwrap();
        assert!(matches!(detect_nodes(&[t.clone(), t.clone()], NodeOptions::default()), Err(Error::NoCrossings)));
        assert!(matches!(
            detect_nodes(&[t], NodeOptions::default()),
            Err(Error::InsufficientTrajectories { found: 1 })
        ));
    }

    #[test]
    fn mean_momentum_between_nodes() {
        let s = fig1();
        let k = PC_FIG1 / s.hbar_c;
        let g = Grid::uniform(0.0, 3.0 * PI / k, 0.5).unwrap();
        let basis = solve_constant(&s, 0.0, &g).unwrap();
        let (x1, x2) = (0.5 * PI / k, 1.5 * PI / k);
        for (a, b) in [(0.2, 0.0), (4.0 / 3.0, -1.05), (0.25, 8.0), (1.0, 0.0), (-3.0, 0.7)] {
            let ra = ReducedAction::new(&basis, HiddenParams::new(a, b).unwrap());
            let p = mean_momentum(&ra, x1, x2).unwrap();
            assert_relative_eq!(p.abs(), PC_FIG1, max_relative = 1e-9);
            // telescoping over two gaps
            assert_relative_eq!(mean_momentum(&ra, x1, x2 + PI / k).unwrap(), p, max_relative = 1e-9);
            // short interval tends to the local momentum
            let h = 1e-3 / k;
            let local = mean_momentum(&ra, 100.0, 100.0 + h).unwrap();
            assert_relative_eq!(local, ra.momentum(100.0 + 0.5 * h).unwrap(), max_relative = 1e-4);
        }
        let ra = ReducedAction::new(&basis, HiddenParams::classical());
        assert!(mean_momentum(&ra, 10.0, 5.0).is_err());
    }

    #[test]
    fn firqnl_classical_line_is_exact() {
        let s = fig1();
        let tg = TimeGrid::new(0.0, 2.0 * DT_FIG1, 2001).unwrap();
        let t = trace_constant_oscillatory(&s, 0.0, HiddenParams::classical(), 0.0, &tg).unwrap();
        let r = firqnl_residual(&t).unwrap();
        // analytically zero; what remains is round-off in the third derivative
        assert!(r.max_residual < 1e-6, "{}", r.max_residual);
        assert_eq!(r.exact_zero_terms.len(), 3);
    }

    #[test]
    fn firqnl_closed_form_and_negative_control() {
        let s = fig1();
        let tg = TimeGrid::new(-0.5 * DT_FIG1, 0.5 * DT_FIG1, 1001).unwrap();
        let hp = HiddenParams::new(4.0 / 3.0, -1.05).unwrap();
        let mut t = crate::trajectory::trace_constant_oscillatory_adaptive(&s, 0.0, hp, 0.0, &tg).unwrap();
        let r = firqnl_residual(&t).unwrap();
        assert!(r.passed, "{}", r.max_residual);
        for p in &mut t.samples {
            p.x *= 1.01;
        }
        assert!(firqnl_residual(&t).unwrap().max_residual > 1e-2);
    }

    #[test]
    fn rqshje_analytic_and_numeric() {
        let s = fig1();
        let k = PC_FIG1 / s.hbar_c;
        let g = Grid::uniform(-200.0, 6.0 * PI / k, 1.0).unwrap();
        let basis = solve_constant(&s, 0.0, &g).unwrap();
        for hp in fig1_sets() {
            let r = rqshje_residual(&ReducedAction::new(&basis, hp)).unwrap();
            assert!(r.max_residual < 1e-9, "{}", r.max_residual);
        }
        let pot = Potential::linear(1e-4);
        let res = |h: f64| {
            let g = Grid::uniform(-5400.0, -1400.0, h).unwrap();
            let b = solve_numeric(&s, &pot, &g, &NumericOptions::default()).unwrap();
            rqshje_residual(&ReducedAction::new(&b, HiddenParams::new(4.0, 2.5).unwrap())).unwrap().max_residual
        };
        let (r1, r2) = (res(4.0), res(2.0));
        assert!(r1 / r2 >= 3.9, "{r1} {r2}");
    }

    #[test]
    fn limit_checks_pass_for_fig1() {
        let r = limit_checks(&fig1(), &Potential::constant(0.0), HiddenParams::new(0.2, 0.0).unwrap()).unwrap();
        assert!(r.passed, "{:?}", r.checks.last());
        assert_relative_eq!(nonrelativistic_gap(0.511, 1e-3), -4.995_004_995e-4, max_relative = 1e-9);
        let lin = limit_checks(&fig1(), &Potential::linear(1e-3), HiddenParams::classical()).unwrap();
        assert_eq!(lin.checks.len(), 2);
    }

    #[test]
    fn pp0_scales_with_hbar() {
        let tg = TimeGrid::new(0.0, 4.0 * DT_FIG1, 4001).unwrap();
        let hp = HiddenParams::new(0.5, 0.5).unwrap();
        let d: Vec<f64> = [1.0, 0.5]
            .iter()
            .map(|&e| {
                let s = fig1().with_hbar_scale(e).unwrap();
                max_pp0_distance(&trace_constant_oscillatory(&s, 0.0, hp, 0.0, &tg).unwrap()).unwrap()
            })
            .collect();
        assert_relative_eq!(d[1] / d[0], 0.5, max_relative = 1e-2);
        let classical = trace_constant_oscillatory(&fig1(), 0.0, HiddenParams::classical(), 0.0, &tg).unwrap();
        assert!(max_pp0_distance(&classical).unwrap() < 1e-30);
    }
}
