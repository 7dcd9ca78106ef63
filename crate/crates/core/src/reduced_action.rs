//! Reduced action S0 = ħ arctan(a φ1/φ2 + b) and conjugate momentum
//! P = ∂S0/∂x = ħ a W / [φ2² + (a φ1 + b φ2)²].
//!
//! The arctangent phase is unwrapped along the grid so S0 stays continuous
//! where φ2 vanishes; `branch` holds the integer n of the π-shift at every
//! grid point. S0 is returned in MeV·s, momenta as pc in MeV.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::Result;
use crate::klein_gordon::{BasisPoint, SolutionBasis};
use crate::setup::HiddenParams;

#[derive(Debug, Clone)]
pub struct ReducedAction<'a> {
    basis: &'a SolutionBasis,
    params: HiddenParams,
    phase: Vec<f64>,
    branch: Vec<i64>,
    /// θ − atan2(aφ1 + bφ2, φ2), modulo 2π.
    offset: f64,
}

/// Derivatives of the momentum, pc units: (P, dP/dx, d²P/dx²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumJet {
    pub p: f64,
    pub dp: f64,
    pub d2p: f64,
}

impl<'a> ReducedAction<'a> {
    pub fn new(basis: &'a SolutionBasis, params: HiddenParams) -> Self {
        let (a, b) = (params.a(), params.b());
        let raw: Vec<f64> = (0..basis.len())
            .map(|i| (a * basis.phi1[i] + b * basis.phi2[i]).atan2(basis.phi2[i]))
            .collect();

        // Principal branch of arctan at the grid origin.
        let mut theta0 = raw[0];
        if theta0 > FRAC_PI_2 {
            theta0 -= PI;
        } else if theta0 <= -FRAC_PI_2 {
            theta0 += PI;
        }
        let mut phase = Vec::with_capacity(raw.len());
        phase.push(theta0);
        let mut max_step: f64 = 0.0;
        for w in raw.windows(2) {
            let step = wrap_pi(w[1] - w[0]);
            max_step = max_step.max(step.abs());
            phase.push(phase.last().unwrap() + step);
        }
        if max_step > FRAC_PI_2 {
            log::warn!("reduced-action phase advances {max_step:.3} rad in one grid step; grid may under-resolve the trajectory law");
        }

        let branch = phase
            .iter()
            .enumerate()
            .map(|(i, &th)| {
                let principal = ((a * basis.phi1[i] + b * basis.phi2[i]) / basis.phi2[i]).atan();
                ((th - principal) / PI).round() as i64
            })
            .collect();
        let offset = theta0 - raw[0];
        Self { basis, params, phase, branch, offset }
    }

    pub fn basis(&self) -> &'a SolutionBasis {
        self.basis
    }

    pub fn params(&self) -> HiddenParams {
        self.params
    }

    /// Unwrapped phase θ = S0/ħ at every grid point.
    pub fn phases(&self) -> &[f64] {
        &self.phase
    }

    pub fn branches(&self) -> &[i64] {
        &self.branch
    }

    /// S0 at grid index `i`, MeV·s.
    pub fn s0_at(&self, i: usize) -> f64 {
        self.basis.setup.hbar * self.phase[i]
    }

    /// P at grid index `i`.
    pub fn momentum_at(&self, i: usize) -> f64 {
        self.momentum_from(&self.basis.point(i))
    }

    /// Unwrapped phase at any x inside the grid.
    pub fn phase(&self, x: f64) -> Result<f64> {
        let p = self.basis.eval(x)?;
        let (a, b) = (self.params.a(), self.params.b());
        let raw = (a * p.phi1 + b * p.phi2).atan2(p.phi2) + self.offset;
        let guess = self.interpolated_phase(x);
        Ok(raw + TAU * ((guess - raw) / TAU).round())
    }

    /// S0(x), MeV·s.
    pub fn s0(&self, x: f64) -> Result<f64> {
        Ok(self.basis.setup.hbar * self.phase(x)?)
    }

    /// Branch index n at x (θ = arctan(aφ1/φ2 + b) + nπ).
    pub fn branch(&self, x: f64) -> Result<i64> {
        let th = self.phase(x)?;
        let p = self.basis.eval(x)?;
        let principal = ((self.params.a() * p.phi1 + self.params.b() * p.phi2) / p.phi2).atan();
        Ok(((th - principal) / PI).round() as i64)
    }

    /// P(x) = ħc a W / [φ2² + (aφ1 + bφ2)²], MeV.
    pub fn momentum(&self, x: f64) -> Result<f64> {
        Ok(self.momentum_from(&self.basis.eval(x)?))
    }

    /// Closed-form P, P′, P″ using φ″ = qφ.
    pub fn momentum_jet(&self, x: f64) -> Result<MomentumJet> {
        let pt = self.basis.eval(x)?;
        let (a, b) = (self.params.a(), self.params.b());
        let q = self.basis.second_derivative(x, 1.0);
        let u = a * pt.phi1 + b * pt.phi2;
        let du = a * pt.dphi1 + b * pt.dphi2;
        let d = pt.phi2 * pt.phi2 + u * u;
        let dd = 2.0 * (pt.phi2 * pt.dphi2 + u * du);
        let d2d = 2.0 * (pt.dphi2 * pt.dphi2 + du * du + q * d);
        let amp = self.amplitude();
        Ok(MomentumJet {
            p: amp / d,
            dp: -amp * dd / (d * d),
            d2p: amp * (2.0 * dd * dd / (d * d * d) - d2d / (d * d)),
        })
    }

    fn amplitude(&self) -> f64 {
        self.basis.setup.hbar_c * self.params.a() * self.basis.wronskian
    }

    fn momentum_from(&self, p: &BasisPoint) -> f64 {
        let u = self.params.a() * p.phi1 + self.params.b() * p.phi2;
        self.amplitude() / (p.phi2 * p.phi2 + u * u)
    }

    fn interpolated_phase(&self, x: f64) -> f64 {
        let g = self.basis.grid.points();
        if g.len() == 1 {
            return self.phase[0];
        }
        let i = self.basis.grid.interval_of(x);
        let t = (x - g[i]) / (g[i + 1] - g[i]);
        self.phase[i] + t * (self.phase[i + 1] - self.phase[i])
    }
}

fn wrap_pi(d: f64) -> f64 {
    let mut d = d % TAU;
    if d > PI {
        d -= TAU;
    } else if d <= -PI {
        d += TAU;
    }
    d
}
