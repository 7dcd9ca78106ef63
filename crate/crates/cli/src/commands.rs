//! The four subcommands. Each writes its files into the configured output
//! directory and returns a human-readable summary for standard output.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use rqt_core::analysis::{
    closure_report, de_broglie, firqnl_residual, limit_checks, mean_momentum, nodes_closed_form, rqshje_residual,
    NamedCheck, NodeReport, ValidationReport,
};
use rqt_core::export::{write_action_csv, write_basis_csv, write_trajectory_csv};
use rqt_core::klein_gordon::{klein_gordon_residual, wronskian_drift};
use rqt_core::reduced_action::ReducedAction;
use rqt_core::trajectory::{Termination, Trajectory};

use crate::config::IntegratorChoice;
use crate::error::CliError;
use crate::pipeline::{Plan, Problem, Traced};
use crate::plot;

/// Law-of-motion closure tolerance applied by `analyze`.
pub const CLOSURE_TOL: f64 = 1e-4;
/// Relative tolerance of the Δx = λ/2 and mean-momentum node checks.
pub const NODE_TOL: f64 = 1e-3;

/// What a command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub summary: String,
    /// File names relative to the output directory, in write order.
    pub files: Vec<String>,
    /// Parameter sets whose trajectory could not be produced.
    pub failures: usize,
}

/// Output directory that tracks what was written.
pub struct OutDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(root: impl AsRef<Path>) -> Result<Self, CliError> {
        let root = root.as_ref().to_path_buf();
        std::fs::create_dir_all(&root).map_err(|source| CliError::Io { path: root.clone(), source })?;
        Ok(Self { root, files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<String, CliError> {
        let path = self.root.join(name);
        let io_err = |source| CliError::Io { path: path.clone(), source };
        let mut w = BufWriter::new(File::create(&path).map_err(io_err)?);
        body(&mut w).map_err(io_err)?;
        w.flush().map_err(io_err)?;
        self.files.push(name.to_string());
        Ok(name.to_string())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<String, CliError> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)
        })
    }

    fn into_files(self) -> Vec<String> {
        self.files
    }
}

fn open_output(problem: &Problem) -> Result<OutDir, CliError> {
    let mut out = OutDir::create(&problem.config.output.dir)?;
    let text = format!("# config_sha256={}\n{}", problem.hash, problem.config.to_canonical_toml());
    out.write("config.toml", |w| w.write_all(text.as_bytes()))?;
    Ok(out)
}

fn set_label(problem: &Problem, i: usize) -> String {
    let p = problem.sets[i];
    format!("(a, b) = ({}, {})", p.a(), p.b())
}

/// Basis CSV(s) and a Wronskian-drift summary. Numeric bases are computed
/// with both integrators for comparison.
pub fn cmd_basis(problem: &Problem) -> Result<Outcome, CliError> {
    let mut out = open_output(problem)?;
    let mut summary = String::new();
    if !problem.numeric_basis() {
        let basis = problem.basis()?;
        out.write("basis.csv", |w| write_basis_csv(w, &basis, &problem.hash))?;
        writeln!(summary, "analytic basis: {} points, W = {:.6e} fm^-1, drift {:.3e}", basis.len(), basis.wronskian, wronskian_drift(&basis)).unwrap();
        return Ok(Outcome { summary, files: out.into_files(), failures: 0 });
    }

    let primary = problem.config.numerics.integrator;
    let other = match primary {
        IntegratorChoice::Rk4 => IntegratorChoice::Euler,
        IntegratorChoice::Euler => IntegratorChoice::Rk4,
    };
    writeln!(summary, "{:<8} {:>10} {:>16} {:>16}", "method", "step_fm", "wronskian_drift", "kg_residual").unwrap();
    let mut drifts = Vec::new();
    for method in [primary, other] {
        let name = match method {
            IntegratorChoice::Rk4 => "rk4",
            IntegratorChoice::Euler => "euler",
        };
        let basis = problem.basis_with(method)?;
        out.write(&format!("basis_{name}.csv"), |w| write_basis_csv(w, &basis, &problem.hash))?;
        let drift = wronskian_drift(&basis);
        let kg = klein_gordon_residual(&basis)?;
        writeln!(summary, "{name:<8} {:>10.4} {drift:>16.6e} {kg:>16.6e}", problem.config.numerics.step.0).unwrap();
        drifts.push((method, drift));
    }
    let get = |m| drifts.iter().find(|d| d.0 == m).map(|d| d.1).unwrap_or(f64::NAN);
    let (euler, rk4) = (get(IntegratorChoice::Euler), get(IntegratorChoice::Rk4));
    writeln!(summary, "euler/rk4 drift ratio: {:.3e}", euler / rk4).unwrap();
    Ok(Outcome { summary, files: out.into_files(), failures: 0 })
}

#[derive(Debug, Serialize)]
struct SetEntry {
    index: usize,
    a: f64,
    b: f64,
    trajectory: Option<String>,
    action: Option<String>,
    method: Option<&'static str>,
    samples: usize,
    termination: Option<Termination>,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct ClassicalEntry {
    trajectory: Option<String>,
    samples: usize,
    termination: Option<Termination>,
    error: Option<String>,
}

/// Sweep manifest: parameter sets, output paths and outcomes.
#[derive(Debug, Serialize)]
struct Manifest {
    config_sha256: String,
    command: &'static str,
    units: serde_json::Value,
    potential: &'static str,
    plan: String,
    sets: Vec<SetEntry>,
    classical: Option<ClassicalEntry>,
    extra: Vec<String>,
}

fn units() -> serde_json::Value {
    json!({ "t": "s", "x": "fm", "energy": "MeV", "momentum": "MeV (pc)", "S0": "MeV s", "residuals": "dimensionless" })
}

fn plan_name(plan: Plan) -> String {
    match plan {
        Plan::ClosedFormOscillatory { .. } => "closed-form-oscillatory",
        Plan::ClosedFormEvanescent { .. } => "closed-form-evanescent",
        Plan::Quadrature => "quadrature",
    }
    .into()
}

/// Writes trajectory and reduced-action CSVs for every set plus the
/// classical trajectory; failed sets are reported and skipped.
fn emit_traces(problem: &Problem, traced: &Traced, out: &mut OutDir, command: &'static str) -> Result<Manifest, CliError> {
    let mut sets = Vec::new();
    for (i, result) in traced.quantum.iter().enumerate() {
        let p = problem.sets[i];
        let mut entry = SetEntry {
            index: i,
            a: p.a(),
            b: p.b(),
            trajectory: None,
            action: None,
            method: None,
            samples: 0,
            termination: None,
            error: None,
        };
        match result {
            Ok(traj) => {
                entry.trajectory = Some(out.write(&format!("traj_{i}.csv"), |w| write_trajectory_csv(w, traj, &problem.hash))?);
                let ra = ReducedAction::new(&traced.basis, p);
                entry.action = Some(out.write(&format!("action_{i}.csv"), |w| write_action_csv(w, &ra, &problem.hash))?);
                entry.method = Some(traj.method.name());
                entry.samples = traj.len();
                entry.termination = Some(traj.termination);
            }
            Err(e) => {
                eprintln!("set {i} {}: {e}", set_label(problem, i));
                entry.error = Some(e.to_string());
            }
        }
        sets.push(entry);
    }
    let classical = match &traced.classical {
        None => None,
        Some(Ok(traj)) => Some(ClassicalEntry {
            trajectory: Some(out.write("classical.csv", |w| write_trajectory_csv(w, traj, &problem.hash))?),
            samples: traj.len(),
            termination: Some(traj.termination),
            error: None,
        }),
        Some(Err(e)) => {
            eprintln!("classical trajectory: {e}");
            Some(ClassicalEntry { trajectory: None, samples: 0, termination: None, error: Some(e.to_string()) })
        }
    };
    Ok(Manifest {
        config_sha256: problem.hash.clone(),
        command,
        units: units(),
        potential: problem.potential.kind_name(),
        plan: plan_name(problem.plan),
        sets,
        classical,
        extra: Vec::new(),
    })
}

/// One trajectory CSV (and reduced-action CSV) per set plus a manifest.
pub fn cmd_trace(problem: &Problem) -> Result<Outcome, CliError> {
    let traced = problem.trace_all()?;
    let mut out = open_output(problem)?;
    let manifest = emit_traces(problem, &traced, &mut out, "trace")?;
    out.write_json("manifest.json", &manifest)?;
    let mut summary = String::new();
    for e in &manifest.sets {
        match &e.error {
            None => writeln!(summary, "set {} ({}, {}): {} samples, {:?}", e.index, e.a, e.b, e.samples, e.termination.unwrap()),
            Some(err) => writeln!(summary, "set {} ({}, {}): FAILED: {err}", e.index, e.a, e.b),
        }
        .unwrap();
    }
    Ok(Outcome { summary, files: out.into_files(), failures: traced.failures() })
}

/// Node and validation analysis of a traced run.
#[derive(Debug, Serialize)]
pub struct Analysis {
    pub closed_form_nodes: Option<NodeReport>,
    pub detected_nodes: Option<NodeReport>,
    pub node_error: Option<String>,
    pub node_checks: Vec<NamedCheck>,
    pub sets: Vec<SetValidation>,
    pub limits: Option<ValidationReport>,
    pub epsilon_sweep: Vec<EpsilonRow>,
}

#[derive(Debug, Serialize)]
pub struct SetValidation {
    pub a: f64,
    pub b: f64,
    pub closure: Option<ValidationReport>,
    pub firqnl: Option<ValidationReport>,
    pub rqshje: Option<ValidationReport>,
    pub errors: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct EpsilonRow {
    pub epsilon: f64,
    pub spacing_x_fm: f64,
    pub spacing_t_s: f64,
}

fn check(name: String, value: f64, tolerance: f64) -> NamedCheck {
    NamedCheck { name, value, tolerance, passed: value <= tolerance }
}

/// Runs every analysis that applies to the problem.
pub fn analyze(problem: &Problem, traced: &Traced) -> Result<Analysis, CliError> {
    let ok = traced.successful();
    let closed_form_nodes = match problem.plan {
        Plan::ClosedFormOscillatory { u0 } => {
            let t = &problem.config.trajectories;
            let span = t.t_end.map_or(0.0, |e| e.0);
            let probe = nodes_closed_form(&problem.setup, u0, problem.x0(), 2)?;
            let count = ((span / probe.spacing_t_s[0] - 0.5).floor().max(0.0) as usize + 1).max(2);
            Some(nodes_closed_form(&problem.setup, u0, problem.x0(), count)?)
        }
        _ => None,
    };
    let (detected_nodes, node_error) = match problem.nodes(traced) {
        Some(Ok(r)) => (Some(r), None),
        Some(Err(e)) => (None, Some(e.to_string())),
        None => (None, Some("fewer than two trajectories".into())),
    };

    let mut node_checks = Vec::new();
    if let Some(nodes) = &detected_nodes {
        let worst = match problem.plan {
            Plan::ClosedFormOscillatory { u0 } => {
                let half = 0.5 * de_broglie(&problem.setup, u0)?;
                nodes.spacing_x_fm.iter().map(|dx| (dx.abs() / half - 1.0).abs()).fold(0.0, f64::max)
            }
            _ => {
                // Between adjacent nodes the phase advances by π, i.e. Δx = λ/2
                // with λ = 2πħc/P̄ from the mean momentum over the interval.
                let ra = ReducedAction::new(&traced.basis, problem.sets[0]);
                let mut worst: f64 = 0.0;
                for w in nodes.node_positions_fm.windows(2) {
                    let pbar = mean_momentum(&ra, w[0], w[1])?;
                    let half = std::f64::consts::PI * problem.setup.hbar_c / pbar.abs();
                    worst = worst.max(((w[1] - w[0]).abs() / half - 1.0).abs());
                }
                worst
            }
        };
        if nodes.len() >= 2 {
            node_checks.push(check("half_wavelength_spacing".into(), worst, NODE_TOL));
        }
    }
    if let (Some(nodes), Plan::ClosedFormOscillatory { u0 }) = (&closed_form_nodes, problem.plan) {
        let gap = problem.setup.energy - u0;
        let pc = (gap * gap - problem.setup.rest_energy_sq()).sqrt();
        for (i, &p) in problem.sets.iter().enumerate() {
            let ra = ReducedAction::new(&traced.basis, p);
            let mut worst: f64 = 0.0;
            for w in nodes.node_positions_fm.windows(2) {
                if let Ok(pbar) = mean_momentum(&ra, w[0], w[1]) {
                    worst = worst.max((pbar.abs() / pc - 1.0).abs());
                }
            }
            node_checks.push(check(format!("mean_momentum_set_{i}"), worst, 1e-6));
        }
    }

    let mut sets = Vec::new();
    let mut k = 0;
    for (i, result) in traced.quantum.iter().enumerate() {
        let p = problem.sets[i];
        let mut v = SetValidation { a: p.a(), b: p.b(), closure: None, firqnl: None, rqshje: None, errors: Vec::new() };
        let mut note = |r: rqt_core::Result<ValidationReport>, slot: &mut Option<ValidationReport>| match r {
            Ok(r) => *slot = Some(r),
            Err(e) => v.errors.push(e.to_string()),
        };
        let mut closure = None;
        let mut firqnl = None;
        let mut rqshje = None;
        if result.is_ok() {
            let traj = &ok[k];
            k += 1;
            note(closure_report(traj, CLOSURE_TOL), &mut closure);
            note(firqnl_residual(traj), &mut firqnl);
        }
        if !matches!(problem.plan, Plan::ClosedFormEvanescent { .. }) {
            note(rqshje_residual(&ReducedAction::new(&traced.basis, p)), &mut rqshje);
        }
        if let Err(e) = result {
            v.errors.push(e.to_string());
        }
        v.closure = closure;
        v.firqnl = firqnl;
        v.rqshje = rqshje;
        sets.push(v);
    }

    let limits = match problem.plan {
        Plan::ClosedFormOscillatory { .. } => Some(limit_checks(&problem.setup, &problem.potential, problem.sets[0])?),
        _ => None,
    };

    let mut epsilon_sweep = Vec::new();
    if let Plan::ClosedFormOscillatory { u0 } = problem.plan {
        for &eps in &problem.config.numerics.epsilon_sweep {
            // The configured ħ-scale is the reference; the sweep rescales it.
            let setup = problem.setup.with_hbar_scale(eps)?;
            let r = nodes_closed_form(&setup, u0, problem.x0(), 2)?;
            epsilon_sweep.push(EpsilonRow { epsilon: eps, spacing_x_fm: r.spacing_x_fm[0], spacing_t_s: r.spacing_t_s[0] });
        }
    }
    Ok(Analysis { closed_form_nodes, detected_nodes, node_error, node_checks, sets, limits, epsilon_sweep })
}

fn strip_arrays(r: &mut Option<ValidationReport>) {
    if let Some(r) = r {
        r.times_s.clear();
        r.positions_fm.clear();
        r.residuals.clear();
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn node_lines(s: &mut String, label: &str, r: &NodeReport) {
    let (dx, dt) = (r.mean_spacing_x().unwrap_or(f64::NAN), r.mean_spacing_t().unwrap_or(f64::NAN));
    writeln!(
        s,
        "nodes ({label}, {}): mean dt = {dt:.4e} s, mean dx = {:.4e} m, lambda = {:.4e} m",
        r.len(),
        dx * 1e-15,
        2.0 * dx * 1e-15
    )
    .unwrap();
    if r.len() > 2 {
        let list: Vec<String> = r.spacing_x_fm.iter().map(|d| format!("{d:.3}")).collect();
        writeln!(s, "  per-interval dx [fm]: {}", list.join(" ")).unwrap();
    }
    if !r.phi2_zero_offsets_fm.is_empty() {
        let list: Vec<String> = r.phi2_zero_offsets_fm.iter().map(|d| format!("{d:.3}")).collect();
        writeln!(s, "  offsets from phi2 zeros [fm]: {}", list.join(" ")).unwrap();
    }
}

/// Human-readable table of an [`Analysis`].
pub fn render(problem: &Problem, a: &Analysis) -> String {
    let mut s = String::new();
    if let Some(r) = &a.closed_form_nodes {
        node_lines(&mut s, "closed form", r);
    }
    match (&a.detected_nodes, &a.node_error) {
        (Some(r), _) => node_lines(&mut s, "detected", r),
        (None, Some(e)) => writeln!(s, "nodes (detected): none: {e}").unwrap(),
        _ => {}
    }
    for c in &a.node_checks {
        writeln!(s, "check {:<28} {:>11.3e} <= {:.0e}  {}", c.name, c.value, c.tolerance, pass(c.passed)).unwrap();
    }
    writeln!(s, "{:<26} {:>20} {:>20} {:>20}", "set (a, b)", "closure", "firqnl", "rqshje").unwrap();
    let cell = |r: &Option<ValidationReport>| match r {
        Some(r) => format!("{:.2e}/{:.0e} {}", r.max_residual, r.tolerance, pass(r.passed)),
        None => "-".into(),
    };
    for (i, v) in a.sets.iter().enumerate() {
        writeln!(s, "{:<26} {:>20} {:>20} {:>20}", set_label(problem, i), cell(&v.closure), cell(&v.firqnl), cell(&v.rqshje))
            .unwrap();
        for e in &v.errors {
            writeln!(s, "  error: {e}").unwrap();
        }
    }
    if let Some(l) = &a.limits {
        for c in &l.checks {
            writeln!(s, "limit {:<34} {:>11.3e} (tol {:.1e})  {}", c.name, c.value, c.tolerance, pass(c.passed)).unwrap();
        }
    }
    if let Some(first) = a.epsilon_sweep.first() {
        writeln!(s, "{:>8} {:>14} {:>14} {:>12} {:>12}", "epsilon", "dx [fm]", "dt [s]", "dx ratio", "dt ratio").unwrap();
        for r in &a.epsilon_sweep {
            writeln!(
                s,
                "{:>8} {:>14.6} {:>14.6e} {:>12.9} {:>12.9}",
                r.epsilon,
                r.spacing_x_fm,
                r.spacing_t_s,
                r.spacing_x_fm / first.spacing_x_fm,
                r.spacing_t_s / first.spacing_t_s
            )
            .unwrap();
        }
    }
    s
}

/// Failed validations, for standard error.
pub fn failures(a: &Analysis) -> Vec<String> {
    let mut f = Vec::new();
    for c in a.node_checks.iter().chain(a.limits.iter().flat_map(|l| &l.checks)) {
        if !c.passed {
            f.push(format!("{}: {:.3e} exceeds {:.1e}", c.name, c.value, c.tolerance));
        }
    }
    for v in &a.sets {
        for r in [&v.closure, &v.firqnl, &v.rqshje].into_iter().flatten() {
            if !r.passed {
                f.push(format!("({}, {}) {:?}: max residual {:.3e} exceeds {:.1e}", v.a, v.b, r.kind, r.max_residual, r.tolerance));
            }
        }
    }
    f
}

fn write_analysis(problem: &Problem, analysis: &mut Analysis, out: &mut OutDir) -> Result<(), CliError> {
    if !problem.config.output.residual_arrays {
        for v in &mut analysis.sets {
            strip_arrays(&mut v.closure);
            strip_arrays(&mut v.firqnl);
            strip_arrays(&mut v.rqshje);
        }
    }
    out.write_json(
        "nodes.json",
        &json!({
            "config_sha256": problem.hash,
            "units": units(),
            "closed_form": analysis.closed_form_nodes,
            "detected": analysis.detected_nodes,
            "detection_error": analysis.node_error,
            "checks": analysis.node_checks,
        }),
    )?;
    out.write_json(
        "validation.json",
        &json!({
            "config_sha256": problem.hash,
            "units": units(),
            "sets": analysis.sets,
            "limits": analysis.limits,
            "epsilon_sweep": analysis.epsilon_sweep,
        }),
    )?;
    Ok(())
}

/// NodeReport and ValidationReport JSON plus a summary table. Failed checks
/// are listed on standard error but do not change the exit status.
pub fn cmd_analyze(problem: &Problem) -> Result<Outcome, CliError> {
    let traced = problem.trace_all()?;
    let mut analysis = analyze(problem, &traced)?;
    let summary = render(problem, &analysis);
    for f in failures(&analysis) {
        eprintln!("check failed: {f}");
    }
    let mut out = open_output(problem)?;
    write_analysis(problem, &mut analysis, &mut out)?;
    Ok(Outcome { summary, files: out.into_files(), failures: traced.failures() })
}

/// Data CSVs, node markers and a gnuplot script for one of the preset
/// figures (or any config rendered the same way).
pub fn cmd_figure(problem: &Problem, figure: u8) -> Result<Outcome, CliError> {
    let traced = problem.trace_all()?;
    let mut out = open_output(problem)?;
    let mut manifest = emit_traces(problem, &traced, &mut out, "figure")?;
    let nodes = problem.nodes(&traced).and_then(|r| r.ok());
    if let Some(n) = &nodes {
        let name = out.write("nodes.csv", |w| {
            writeln!(w, "# config_sha256={}", problem.hash)?;
            writeln!(w, "t_s,x_fm")?;
            for (t, x) in n.node_times_s.iter().zip(&n.node_positions_fm) {
                writeln!(w, "{t:.16e},{x:.16e}")?;
            }
            Ok(())
        })?;
        manifest.extra.push(name);
    }
    let ok: Vec<(usize, &Trajectory)> =
        traced.quantum.iter().enumerate().filter_map(|(i, r)| r.as_ref().ok().map(|t| (i, t))).collect();
    let script = plot::gnuplot_script(problem, figure, &ok, traced.classical.as_ref().and_then(|c| c.as_ref().ok()), nodes.is_some());
    manifest.extra.push(out.write(&format!("fig{figure}.gp"), |w| w.write_all(script.as_bytes()))?);
    out.write_json("manifest.json", &manifest)?;

    let mut summary = String::new();
    writeln!(summary, "figure {figure}: {} quantum trajectories, classical: {}", ok.len(), traced.classical.as_ref().is_some_and(|c| c.is_ok())).unwrap();
    for (i, t) in &ok {
        writeln!(summary, "  {}: {} samples, {:?}", set_label(problem, *i), t.len(), t.termination).unwrap();
    }
    match &nodes {
        Some(n) => node_lines(&mut summary, "detected", n),
        None if ok.len() >= 2 => writeln!(summary, "no common node clusters detected").unwrap(),
        None => {}
    }
    Ok(Outcome { summary, files: out.into_files(), failures: traced.failures() })
}

