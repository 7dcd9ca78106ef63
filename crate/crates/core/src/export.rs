//! CSV emitters for bases, reduced actions and trajectories.
//!
//! Every number is written as `{:.16e}` (17 significant digits), which
//! round-trips an f64 exactly. Each file opens with `#` comment lines; the
//! first carries the caller's provenance tag (typically a config hash).

use std::io::{self, Write};

use crate::klein_gordon::SolutionBasis;
use crate::reduced_action::ReducedAction;
use crate::trajectory::{DivergenceKind, Termination, Trajectory};

/// Regime label used by the trajectory CSV for the divergence marker row.
pub const DIVERGENCE_LABEL: &str = "divergence";

fn preamble<W: Write + ?Sized>(w: &mut W, tag: &str, extra: &[String], header: &str) -> io::Result<()> {
    writeln!(w, "# config_sha256={tag}")?;
    for line in extra {
        writeln!(w, "# {line}")?;
    }
    writeln!(w, "{header}")
}

/// Columns x, phi1, dphi1, phi2, dphi2, W (fm, fm⁻¹).
pub fn write_basis_csv<W: Write + ?Sized>(w: &mut W, basis: &SolutionBasis, tag: &str) -> io::Result<()> {
    let extra = [format!("potential={} provenance={:?}", basis.potential.kind_name(), basis.provenance)];
    preamble(w, tag, &extra, "x_fm,phi1,dphi1,phi2,dphi2,W")?;
    for (i, &x) in basis.grid.points().iter().enumerate() {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            x,
            basis.phi1[i],
            basis.dphi1[i],
            basis.phi2[i],
            basis.dphi2[i],
            basis.local_wronskian(i)
        )?;
    }
    Ok(())
}

/// Columns x, S0, P, branch_n (fm, MeV·s, MeV).
pub fn write_action_csv<W: Write + ?Sized>(w: &mut W, ra: &ReducedAction<'_>, tag: &str) -> io::Result<()> {
    let p = ra.params();
    let extra = [format!("a={:e} b={:e}", p.a(), p.b())];
    preamble(w, tag, &extra, "x_fm,S0_MeV_s,P_MeV,branch_n")?;
    for (i, &x) in ra.basis().grid.points().iter().enumerate() {
        writeln!(w, "{:.16e},{:.16e},{:.16e},{}", x, ra.s0_at(i), ra.momentum_at(i), ra.branches()[i])?;
    }
    Ok(())
}

/// Columns t, x, branch_n, regime (s, fm). A trajectory that ends in a
/// divergence gets a final row at the divergence time with x = ±inf and
/// regime `divergence`.
pub fn write_trajectory_csv<W: Write + ?Sized>(w: &mut W, traj: &Trajectory, tag: &str) -> io::Result<()> {
    let params = match traj.params {
        Some(p) => format!("a={:e} b={:e}", p.a(), p.b()),
        None => "classical".to_string(),
    };
    let extra = [
        format!("method={} {params} direction={:+} x0_fm={:e}", traj.method.name(), traj.direction.sign(), traj.x0),
        format!("termination={:?}", traj.termination),
    ];
    preamble(w, tag, &extra, "t_s,x_fm,branch_n,regime")?;
    for s in &traj.samples {
        writeln!(w, "{:.16e},{:.16e},{},{}", s.t, s.x, s.branch, s.regime.name())?;
    }
    if let Termination::Divergence { time, kind } = traj.termination {
        let x = match kind {
            DivergenceKind::PositiveInfinity => "inf",
            DivergenceKind::NegativeInfinity => "-inf",
        };
        let branch = traj.samples.last().map_or(0, |s| s.branch);
        writeln!(w, "{time:.16e},{x},{branch},{DIVERGENCE_LABEL}")?;
    }
    Ok(())
}
