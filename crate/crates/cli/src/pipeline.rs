//! Turns a [`RunConfig`] into core objects and runs the trace pipeline.

use rqt_core::analysis::{detect_nodes, NodeOptions, NodeReport};
use rqt_core::klein_gordon::{solve_constant_from, solve_numeric, Integrator, NumericOptions, SolutionBasis};
use rqt_core::model::regime_for;
use rqt_core::trajectory::{
    classical_trace, trace_constant_evanescent, trace_constant_oscillatory, trace_constant_oscillatory_adaptive,
    trace_quadrature, QuadratureSpan, TimeGrid, Trajectory,
};
use rqt_core::{Direction, Grid, HiddenParams, PhysicalSetup, Potential, Regime};

use crate::config::{BasisChoice, InitialChoice, IntegratorChoice, PotentialSection, RunConfig, Sampling, Sign, TraceChoice};
use crate::error::CliError;

/// How the quantum trajectories of a run are produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Plan {
    ClosedFormOscillatory { u0: f64 },
    ClosedFormEvanescent { u0: f64 },
    Quadrature,
}

/// A validated configuration resolved into physics objects.
#[derive(Debug, Clone)]
pub struct Problem {
    pub config: RunConfig,
    pub hash: String,
    pub setup: PhysicalSetup,
    pub potential: Potential,
    pub sets: Vec<HiddenParams>,
    pub grid: Grid,
    pub plan: Plan,
}

/// Everything `trace` produces, before any file is written.
#[derive(Debug)]
pub struct Traced {
    pub basis: SolutionBasis,
    pub quantum: Vec<rqt_core::Result<Trajectory>>,
    pub classical: Option<rqt_core::Result<Trajectory>>,
}

impl Traced {
    pub fn successful(&self) -> Vec<Trajectory> {
        self.quantum.iter().filter_map(|r| r.as_ref().ok().cloned()).collect()
    }

    pub fn failures(&self) -> usize {
        self.quantum.iter().filter(|r| r.is_err()).count()
    }
}

fn integrator(choice: IntegratorChoice) -> Integrator {
    match choice {
        IntegratorChoice::Euler => Integrator::Euler,
        IntegratorChoice::Rk4 => Integrator::Rk4,
    }
}

impl Problem {
    pub fn new(config: RunConfig) -> Result<Self, CliError> {
        config.validate()?;
        let cfg_err = |field: &str, e: rqt_core::Error| CliError::Config(format!("field `{field}`: {e}"));
        let direction = match config.trajectories.direction {
            Sign::Plus => Direction::Forward,
            Sign::Minus => Direction::Backward,
        };
        let setup = PhysicalSetup::new(config.particle.energy.0, config.particle.rest_energy.0)
            .and_then(|s| s.with_hbar_scale(config.numerics.hbar_scale))
            .map_err(|e| cfg_err("particle", e))?
            .with_direction(direction);
        let potential = match &config.potential {
            PotentialSection::Constant { u0 } => Potential::constant(u0.0),
            PotentialSection::Linear { slope } => Potential::linear(slope.0),
            PotentialSection::Tabulated { x, v } => {
                Potential::tabulated(x.iter().map(|q| q.0).collect(), v.iter().map(|q| q.0).collect())
                    .map_err(|e| cfg_err("potential", e))?
            }
        };
        let sets = config
            .trajectories
            .sets
            .iter()
            .enumerate()
            .map(|(i, &[a, b])| HiddenParams::new(a, b).map_err(|e| cfg_err(&format!("trajectories.sets[{i}]"), e)))
            .collect::<Result<Vec<_>, _>>()?;
        let n = &config.numerics;
        let grid = Grid::uniform(n.grid_start.0, n.grid_end.0, n.step.0).map_err(|e| cfg_err("numerics", e))?;

        let constant_u0 = match potential {
            Potential::Constant { u0 } => Some(u0),
            _ => None,
        };
        let plan = match (config.trajectories.method, constant_u0) {
            (TraceChoice::Quadrature, _) | (TraceChoice::Auto, None) => Plan::Quadrature,
            (TraceChoice::ClosedForm, None) => {
                return Err(CliError::Config(
                    "field `trajectories.method`: closed forms exist only for constant potentials".into(),
                ))
            }
            (_, Some(u0)) => match regime_for(&setup, setup.energy - u0) {
                Regime::Oscillatory => Plan::ClosedFormOscillatory { u0 },
                Regime::Evanescent => Plan::ClosedFormEvanescent { u0 },
                Regime::TurningPoint => {
                    return Err(rqt_core::Error::TurningPointSingular { x: config.trajectories.x0.0 }.into())
                }
            },
        };
        if !matches!(plan, Plan::Quadrature) && config.trajectories.t_end.is_none() {
            return Err(CliError::Config("field `trajectories.t_end`: closed-form traces need a time window".into()));
        }
        let hash = config.hash();
        Ok(Self { config, hash, setup, potential, sets, grid, plan })
    }

    pub fn x0(&self) -> f64 {
        self.config.trajectories.x0.0
    }

    /// True when the basis comes from integrating the Klein–Gordon equation.
    pub fn numeric_basis(&self) -> bool {
        !self.potential.is_constant() || self.config.numerics.basis == BasisChoice::Numeric
    }

    pub fn node_options(&self) -> NodeOptions {
        NodeOptions {
            cluster_radius: self.config.numerics.cluster_radius,
            period_fraction: self.config.numerics.period_fraction,
        }
    }

    /// The configured basis, with the integrator overridden.
    pub fn basis_with(&self, method: IntegratorChoice) -> rqt_core::Result<SolutionBasis> {
        if let (Potential::Constant { u0 }, false) = (&self.potential, self.numeric_basis()) {
            return solve_constant_from(&self.setup, *u0, &self.grid, self.x0());
        }
        let n = &self.config.numerics;
        let guard = (n.step_guard > 0.0).then_some(n.step_guard);
        let mut opts = NumericOptions::default().with_method(integrator(method)).with_step_guard(guard);
        if n.initial == InitialChoice::NodeAnchored {
            opts = opts.anchored_at_node(&self.setup, &self.potential, self.grid.first());
        }
        solve_numeric(&self.setup, &self.potential, &self.grid, &opts)
    }

    pub fn basis(&self) -> rqt_core::Result<SolutionBasis> {
        self.basis_with(self.config.numerics.integrator)
    }

    fn time_grid(&self) -> rqt_core::Result<TimeGrid> {
        let t = &self.config.trajectories;
        let end = t.t_end.map_or(t.t_start.0, |q| q.0);
        TimeGrid::new(t.t_start.0, end, t.samples)
    }

    pub fn trace_one(&self, params: HiddenParams, basis: &SolutionBasis) -> rqt_core::Result<Trajectory> {
        let t = &self.config.trajectories;
        match self.plan {
            Plan::ClosedFormOscillatory { u0 } => {
                let times = self.time_grid()?;
                match t.sampling {
                    Sampling::Uniform => trace_constant_oscillatory(&self.setup, u0, params, self.x0(), &times),
                    Sampling::Adaptive => {
                        trace_constant_oscillatory_adaptive(&self.setup, u0, params, self.x0(), &times)
                    }
                }
            }
            Plan::ClosedFormEvanescent { u0 } => {
                trace_constant_evanescent(&self.setup, u0, params, self.x0(), &self.time_grid()?, t.window.0)
            }
            Plan::Quadrature => {
                let x_end = t.x_end.map(|q| q.0).unwrap_or(match t.direction {
                    Sign::Plus => self.grid.last(),
                    Sign::Minus => self.grid.first(),
                });
                let span = QuadratureSpan::new(self.x0(), x_end).with_start_time(t.t_start.0);
                trace_quadrature(basis, params, span, self.setup.direction)
            }
        }
    }

    /// Classical trajectory over the time span of `reference`.
    pub fn trace_classical(&self, reference: &[Trajectory]) -> rqt_core::Result<Trajectory> {
        let (lo, hi) = reference
            .iter()
            .flat_map(|tr| tr.samples.iter().map(|s| s.t))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t), hi.max(t)));
        let (lo, hi) = if lo < hi { (lo, hi) } else { self.time_grid().map(|g| (g.start, g.end))? };
        let times = TimeGrid::new(lo, hi, self.config.trajectories.samples.max(2001))?;
        classical_trace(&self.setup, &self.potential, self.x0(), &times)
    }

    /// Basis, one trajectory per set (traced concurrently) and, if
    /// configured, the classical trajectory.
    pub fn trace_all(&self) -> Result<Traced, CliError> {
        let basis = self.basis()?;
        let quantum: Vec<_> = std::thread::scope(|s| {
            let basis = &basis;
            let handles: Vec<_> = self.sets.iter().map(|&p| s.spawn(move || self.trace_one(p, basis))).collect();
            handles.into_iter().map(|h| h.join().expect("trace worker panicked")).collect()
        });
        let ok: Vec<Trajectory> = quantum.iter().filter_map(|r| r.as_ref().ok().cloned()).collect();
        let classical = self.config.trajectories.classical.then(|| self.trace_classical(&ok));
        Ok(Traced { basis, quantum, classical })
    }

    /// Common nodes of the successful quantum trajectories, with φ2-zero
    /// offsets for numeric bases.
    pub fn nodes(&self, traced: &Traced) -> Option<rqt_core::Result<NodeReport>> {
        let ok = traced.successful();
        if ok.len() < 2 {
            return None;
        }
        Some(detect_nodes(&ok, self.node_options()).map(|r| {
            if self.numeric_basis() {
                r.with_phi2_offsets(&traced.basis)
            } else {
                r
            }
        }))
    }
}
