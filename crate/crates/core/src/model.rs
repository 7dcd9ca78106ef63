//! Pointwise quantities of the relativistic quantum law of motion.
//!
//! None of these depend on ħ. Velocities here are in m/s (same unit as
//! [`PhysicalSetup::c`]); momenta are `pc` in MeV.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::setup::PhysicalSetup;

/// Sign of (E − V)² − m0²c⁴.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Oscillatory,
    Evanescent,
    TurningPoint,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Oscillatory => "oscillatory",
            Regime::Evanescent => "evanescent",
            Regime::TurningPoint => "turning_point",
        }
    }
}

/// Relative width of the turning-point band, in units of m0²c⁴.
pub const TURNING_POINT_TOL: f64 = 1e-12;

/// Regime for a given kinetic energy E − V.
pub fn regime_for(setup: &PhysicalSetup, energy_gap: f64) -> Regime {
    let m2 = setup.rest_energy_sq();
    let disc = energy_gap * energy_gap - m2;
    let tol = TURNING_POINT_TOL * m2;
    if disc > tol {
        Regime::Oscillatory
    } else if disc < -tol {
        Regime::Evanescent
    } else {
        Regime::TurningPoint
    }
}

pub fn classify_regime(setup: &PhysicalSetup, pot: &Potential, x: f64) -> Regime {
    regime_for(setup, setup.energy - pot.value(x))
}

/// E − V − m0²c⁴/(E − V), the right side of ẋ P = ..., in MeV.
pub fn kinetic_term(setup: &PhysicalSetup, pot: &Potential, x: f64) -> Result<f64> {
    kinetic_term_for(setup, setup.energy - pot.value(x)).ok_or(Error::EnergyEqualsPotential { x })
}

pub(crate) fn kinetic_term_for(setup: &PhysicalSetup, gap: f64) -> Option<f64> {
    if gap.abs() <= f64::EPSILON * setup.rest_energy {
        None
    } else {
        Some(gap - setup.rest_energy_sq() / gap)
    }
}

/// f = P²c² / [(E − V)² − m0²c⁴] for momentum `pc` (MeV).
pub fn f_function(setup: &PhysicalSetup, pot: &Potential, x: f64, momentum: f64) -> Result<f64> {
    let gap = setup.energy - pot.value(x);
    match regime_for(setup, gap) {
        Regime::TurningPoint => Err(Error::TurningPointSingular { x }),
        _ => {
            let f = momentum * momentum / (gap * gap - setup.rest_energy_sq());
            if f > 0.0 && f.is_finite() {
                Ok(f)
            } else {
                Err(Error::NonPositiveF { x, value: f })
            }
        }
    }
}

/// L = −m0c² √(1 − (ẋ/c)² f) − V(x), MeV. `xdot` in m/s.
pub fn lagrangian(setup: &PhysicalSetup, pot: &Potential, x: f64, xdot: f64, f: f64) -> Result<f64> {
    let beta = xdot / setup.c;
    let radicand = 1.0 - beta * beta * f;
    if radicand <= 0.0 {
        return Err(Error::SuperluminalArgument { radicand });
    }
    Ok(-setup.rest_energy * radicand.sqrt() - pot.value(x))
}

/// H = √(m0²c⁴ + P²c²/f) + V(x), MeV.
pub fn hamiltonian(setup: &PhysicalSetup, pot: &Potential, x: f64, momentum: f64, f: f64) -> Result<f64> {
    if !(f > 0.0) {
        return Err(Error::NonPositiveF { x, value: f });
    }
    Ok((setup.rest_energy_sq() + momentum * momentum / f).sqrt() + pot.value(x))
}

/// Classical relativistic momentum √((E−V)² − m0²c⁴), MeV (i.e. pc).
pub fn classical_momentum(setup: &PhysicalSetup, pot: &Potential, x: f64) -> Result<f64> {
    let gap = setup.energy - pot.value(x);
    match regime_for(setup, gap) {
        Regime::Oscillatory => Ok((gap * gap - setup.rest_energy_sq()).sqrt()),
        Regime::TurningPoint => Ok(0.0),
        Regime::Evanescent => Err(Error::RegimeError { x, expected: "oscillatory", found: "evanescent" }),
    }
}

/// |ẋ| from the relativistic conservation law, m/s.
pub fn classical_velocity(setup: &PhysicalSetup, pot: &Potential, x: f64) -> Result<f64> {
    let gap = setup.energy - pot.value(x);
    if gap <= 0.0 {
        return Err(Error::RegimeError { x, expected: "oscillatory with E - V > 0", found: "E - V <= 0" });
    }
    match regime_for(setup, gap) {
        Regime::Evanescent => Err(Error::RegimeError { x, expected: "oscillatory", found: "evanescent" }),
        Regime::TurningPoint => Ok(0.0),
        Regime::Oscillatory => {
            let pc = (gap * gap - setup.rest_energy_sq()).sqrt();
            Ok(setup.c * pc / gap)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // Fig.-1 style electron: m0c² = 0.511 MeV, E − U0 = 2 MeV.
    fn fig1() -> (PhysicalSetup, Potential) {
        (PhysicalSetup::new(2.0, 0.511).unwrap(), Potential::constant(0.0))
    }

    // √(4 − 0.511²), computed independently at 30 digits.
    const PC_FIG1: f64 = 1.933_618_111_210_173_8;

    #[test]
    fn kinetic_term_examples() {
        let (s, p) = fig1();
        assert_relative_eq!(kinetic_term(&s, &p, 0.0).unwrap(), 1.869_439_5, max_relative = 1e-12);
        let at_rest = PhysicalSetup::new(0.511, 0.511).unwrap();
        assert_eq!(kinetic_term(&at_rest, &p, 0.0).unwrap(), 0.0);
        let zero_gap = PhysicalSetup::new(1.0, 0.511).unwrap();
        assert_eq!(
            kinetic_term(&zero_gap, &Potential::constant(1.0), 3.0),
            Err(Error::EnergyEqualsPotential { x: 3.0 })
        );
    }

    #[test]
    fn kinetic_term_nonrelativistic_limit() {
        let m = 0.511;
        let t = 1e-3 * m;
        let s = PhysicalSetup::new(m + t, m).unwrap();
        let k = kinetic_term(&s, &Potential::constant(0.0), 0.0).unwrap();
        assert!((k / (2.0 * t) - 1.0).abs() <= 1e-3);
    }

    #[test]
    fn regimes() {
        let p = Potential::constant(0.0);
        let r = |e| classify_regime(&PhysicalSetup::new(e, 0.511).unwrap(), &p, 0.0);
        assert_eq!(r(2.0), Regime::Oscillatory);
        assert_eq!(r(0.3), Regime::Evanescent);
        assert_eq!(r(0.511), Regime::TurningPoint);
        assert_eq!(r(-2.0), Regime::Oscillatory);
    }

    #[test]
    fn f_function_examples() {
        let (s, p) = fig1();
        assert_relative_eq!(f_function(&s, &p, 0.0, PC_FIG1).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(f_function(&s, &p, 0.0, 2.0 * PC_FIG1).unwrap(), 4.0, max_relative = 1e-14);
        let ev = PhysicalSetup::new(0.3, 0.511).unwrap();
        assert!(matches!(f_function(&ev, &p, 0.0, 1.0), Err(Error::NonPositiveF { .. })));
        let tp = PhysicalSetup::new(0.511, 0.511).unwrap();
        assert!(matches!(f_function(&tp, &p, 0.0, 1.0), Err(Error::TurningPointSingular { .. })));
    }

    #[test]
    fn lagrangian_examples() {
        let (s, _) = fig1();
        let u0 = 0.7;
        let pot = Potential::constant(u0);
        assert_relative_eq!(lagrangian(&s, &Potential::constant(0.0), 0.0, 0.0, 1.0).unwrap(), -0.511);
        // Classical speed at E − U0 = 2: ẋ/c = pc/(E − U0).
        let xdot = s.c * PC_FIG1 / 2.0;
        let l = lagrangian(&s, &pot, 0.0, xdot, 1.0).unwrap();
        assert_relative_eq!(l, -0.511 * 0.511 / 2.0 - u0, max_relative = 1e-12);
        assert_relative_eq!(l + u0, -0.130_560_5, max_relative = 1e-9);
        assert!(matches!(lagrangian(&s, &pot, 0.0, s.c, 1.0), Err(Error::SuperluminalArgument { .. })));
    }

    #[test]
    fn hamiltonian_examples() {
        let (s, _) = fig1();
        let u0 = 0.7;
        let pot = Potential::constant(u0);
        assert_relative_eq!(hamiltonian(&s, &Potential::constant(0.0), 0.0, 0.0, 1.0).unwrap(), 0.511);
        assert_relative_eq!(hamiltonian(&s, &pot, 0.0, PC_FIG1, 1.0).unwrap(), 2.0 + u0, max_relative = 1e-14);
        assert_relative_eq!(hamiltonian(&s, &pot, 0.0, 2.0 * PC_FIG1, 4.0).unwrap(), 2.0 + u0, max_relative = 1e-14);
        assert!(hamiltonian(&s, &pot, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn classical_velocity_examples() {
        let (s, p) = fig1();
        let v = classical_velocity(&s, &p, 0.0).unwrap();
        assert_relative_eq!(v / s.c, 0.966_809_055_605_087, max_relative = 1e-12);
        assert_relative_eq!(v, 2.898_420_631_965_077e8, max_relative = 1e-12);
        let rest = PhysicalSetup::new(0.511, 0.511).unwrap();
        assert_eq!(classical_velocity(&rest, &p, 0.0).unwrap(), 0.0);
        let ev = PhysicalSetup::new(0.3, 0.511).unwrap();
        assert!(classical_velocity(&ev, &p, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn hamiltonian_closes_on_any_momentum_f_pair(gap in 0.52f64..50.0, m in 0.1f64..0.5, scale in 0.05f64..20.0) {
            let s = PhysicalSetup::new(gap, m).unwrap();
            let p = Potential::constant(0.0);
            let pc = scale * (gap * gap - m * m).sqrt();
            let f = f_function(&s, &p, 0.0, pc).unwrap();
            let h = hamiltonian(&s, &p, 0.0, pc, f).unwrap();
            prop_assert!((h / gap - 1.0).abs() < 1e-9);
        }

        #[test]
        fn kinetic_sign_matches_regime(gap in 1e-3f64..10.0, m in 0.05f64..5.0) {
            let s = PhysicalSetup::new(gap, m).unwrap();
            let p = Potential::constant(0.0);
            let k = kinetic_term(&s, &p, 0.0).unwrap();
            match classify_regime(&s, &p, 0.0) {
                Regime::Oscillatory => prop_assert!(k > 0.0),
                Regime::Evanescent => prop_assert!(k < 0.0),
                Regime::TurningPoint => prop_assert!(k.abs() < 1e-9 * m),
            }
        }

        #[test]
        fn classical_velocity_subluminal_and_monotone(m in 0.05f64..5.0, g1 in 1.0001f64..100.0, dg in 1e-3f64..10.0) {
            let p = Potential::constant(0.0);
            let v1 = classical_velocity(&PhysicalSetup::new(g1 * m, m).unwrap(), &p, 0.0).unwrap();
            let s2 = PhysicalSetup::new((g1 + dg) * m, m).unwrap();
            let v2 = classical_velocity(&s2, &p, 0.0).unwrap();
            prop_assert!(v1 < s2.c && v2 < s2.c);
            prop_assert!(v2 > v1);
        }

        #[test]
        fn hbar_free_quantities(eps in 0.01f64..10.0, gap in 0.6f64..10.0) {
            let s = PhysicalSetup::new(gap, 0.511).unwrap();
            let se = s.with_hbar_scale(eps).unwrap();
            let p = Potential::constant(0.0);
            prop_assert_eq!(kinetic_term(&s, &p, 0.0).unwrap(), kinetic_term(&se, &p, 0.0).unwrap());
            prop_assert_eq!(classical_velocity(&s, &p, 0.0).unwrap(), classical_velocity(&se, &p, 0.0).unwrap());
            prop_assert_eq!(lagrangian(&s, &p, 0.0, 1e8, 1.0).unwrap(), lagrangian(&se, &p, 0.0, 1e8, 1.0).unwrap());
            prop_assert_eq!(hamiltonian(&s, &p, 0.0, 1.0, 1.0).unwrap(), hamiltonian(&se, &p, 0.0, 1.0, 1.0).unwrap());
        }
    }
}
