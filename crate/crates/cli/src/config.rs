//! Run configuration: a TOML file with sections `[particle]`, `[potential]`,
//! `[trajectories]`, `[numerics]` and `[output]`.
//!
//! Physical values are strings carrying a unit suffix (`"2 MeV"`,
//! `"-5400 fm"`, `"1e-20 s"`, `"1e-4 MeV/fm"`). The canonical form written
//! back out uses base units and shortest round-trip exponent notation, so
//! parse → serialize → parse is bit-exact.

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::CliError;

fn parse_quantity(text: &str, units: &[(&str, f64)]) -> Result<f64, String> {
    let known = || units.iter().map(|u| u.0).collect::<Vec<_>>().join(", ");
    let (num, unit) = text
        .trim()
        .rsplit_once(char::is_whitespace)
        .ok_or_else(|| format!("`{text}`: expected `<number> <unit>` with unit one of {}", known()))?;
    let factor = units
        .iter()
        .find(|u| u.0 == unit)
        .map(|u| u.1)
        .ok_or_else(|| format!("`{text}`: unknown unit `{unit}`, expected one of {}", known()))?;
    let value: f64 = num.trim().parse().map_err(|_| format!("`{text}`: `{num}` is not a number"))?;
    let value = value * factor;
    if !value.is_finite() {
        return Err(format!("`{text}` is not finite"));
    }
    Ok(value)
}

macro_rules! quantity {
    ($(#[$doc:meta])* $name:ident, $canon:literal, [$(($unit:literal, $factor:expr)),+ $(,)?]) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, Default)]
        pub struct $name(pub f64);

        impl $name {
            pub const UNIT: &'static str = $canon;
            const UNITS: &'static [(&'static str, f64)] = &[$(($unit, $factor)),+];
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{:e} {}", self.0, $canon)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.to_string())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = String::deserialize(d)?;
                parse_quantity(&text, Self::UNITS).map($name).map_err(D::Error::custom)
            }
        }
    };
}

quantity!(
    /// Energy in MeV.
    Energy, "MeV", [("MeV", 1.0), ("keV", 1e-3), ("eV", 1e-6)]
);
quantity!(
    /// Length in fm.
    Length, "fm", [("fm", 1.0), ("pm", 1e3), ("m", 1e15)]
);
quantity!(
    /// Time in s.
    Time, "s", [("s", 1.0)]
);
quantity!(
    /// Potential gradient in MeV/fm.
    Gradient, "MeV/fm", [("MeV/fm", 1.0)]
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Sign {
    #[default]
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TraceChoice {
    /// Closed form for constant potentials, quadrature otherwise.
    #[default]
    Auto,
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    #[default]
    Uniform,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorChoice {
    Euler,
    #[default]
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BasisChoice {
    /// sin/cos (or exponential) pair for constant potentials; numeric otherwise.
    #[default]
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitialChoice {
    /// φ1 = (0, k0), φ2 = (1, 0) at the grid start.
    #[default]
    Default,
    /// φ1 = (1, 0), φ2 = (0, −k0): the grid start is a common node.
    NodeAnchored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSection {
    #[serde(default = "electron")]
    pub rest_energy: Energy,
    pub energy: Energy,
}

fn electron() -> Energy {
    Energy(rqt_core::setup::ELECTRON_REST_ENERGY_MEV)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialSection {
    Constant { u0: Energy },
    Linear { slope: Gradient },
    Tabulated { x: Vec<Length>, v: Vec<Energy> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    /// Hidden-parameter pairs (a, b).
    pub sets: Vec<[f64; 2]>,
    #[serde(default)]
    pub x0: Length,
    #[serde(default)]
    pub direction: Sign,
    #[serde(default)]
    pub method: TraceChoice,
    /// Time sampling of closed-form oscillatory traces.
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub t_start: Time,
    /// End of the closed-form time window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<Time>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// End of quadrature traces; defaults to the grid end in the direction
    /// of motion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_end: Option<Length>,
    /// Evanescent traces stop once |x − x0| exceeds this.
    #[serde(default = "default_window")]
    pub window: Length,
    /// Also emit the purely relativistic (classical) trajectory.
    #[serde(default = "yes")]
    pub classical: bool,
}

fn default_samples() -> usize {
    2001
}

fn default_window() -> Length {
    Length(1e4)
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    pub grid_start: Length,
    pub grid_end: Length,
    pub step: Length,
    #[serde(default)]
    pub integrator: IntegratorChoice,
    #[serde(default)]
    pub basis: BasisChoice,
    #[serde(default)]
    pub initial: InitialChoice,
    /// ħ-scale ε: ħ → ε ħ.
    #[serde(default = "unit_scale")]
    pub hbar_scale: f64,
    /// Upper bound on |k h| for numeric bases; 0 disables the guard.
    #[serde(default = "default_guard")]
    pub step_guard: f64,
    /// Node clustering radius in local sample steps.
    #[serde(default = "default_radius")]
    pub cluster_radius: f64,
    /// Node clustering radius as a fraction of the local node period πħ/K.
    #[serde(default)]
    pub period_fraction: f64,
    /// ħ-scales for the linear-scaling table of `analyze`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilon_sweep: Vec<f64>,
}

fn unit_scale() -> f64 {
    1.0
}

fn default_guard() -> f64 {
    rqt_core::klein_gordon::DEFAULT_STEP_GUARD
}

fn default_radius() -> f64 {
    rqt_core::analysis::DEFAULT_CLUSTER_RADIUS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: String,
    /// Keep per-sample residual arrays in validation.json.
    #[serde(default)]
    pub residual_arrays: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_dir(), residual_arrays: false }
    }
}

fn default_dir() -> String {
    "out".to_string()
}

/// A complete, fully deterministic run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub particle: ParticleSection,
    pub potential: PotentialSection,
    pub trajectories: TrajectorySection,
    pub numerics: NumericsSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Command-line overrides applied on top of a file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub hbar_scale: Option<f64>,
    pub integrator: Option<IntegratorChoice>,
    pub direction: Option<Sign>,
    pub out: Option<String>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Canonical TOML: every field explicit, base units only.
    pub fn to_canonical_toml(&self) -> String {
        toml::to_string(self).expect("config values are always representable in TOML")
    }

    /// SHA-256 of the canonical form with the output directory blanked, so
    /// the same physics written to two places carries the same tag.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.dir.clear();
        let digest = Sha256::digest(c.to_canonical_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(eps) = o.hbar_scale {
            self.numerics.hbar_scale = eps;
        }
        if let Some(m) = o.integrator {
            self.numerics.integrator = m;
        }
        if let Some(d) = o.direction {
            self.trajectories.direction = d;
        }
        if let Some(dir) = &o.out {
            self.output.dir = dir.clone();
        }
        self.validate()
    }

    /// Field-level checks that need no physics.
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |field: &str, msg: String| Err(CliError::Config(format!("field `{field}`: {msg}")));
        if !(self.particle.rest_energy.0 > 0.0) {
            return fail("particle.rest_energy", "must be positive".into());
        }
        if self.trajectories.sets.is_empty() {
            return fail("trajectories.sets", "needs at least one (a, b) pair".into());
        }
        for (i, &[a, b]) in self.trajectories.sets.iter().enumerate() {
            if let Err(e) = rqt_core::HiddenParams::new(a, b) {
                return fail(&format!("trajectories.sets[{i}]"), e.to_string());
            }
        }
        if self.trajectories.samples < 2 {
            return fail("trajectories.samples", "needs at least 2 samples".into());
        }
        if let Some(t_end) = self.trajectories.t_end {
            if t_end.0 <= self.trajectories.t_start.0 {
                return fail("trajectories.t_end", "must exceed t_start".into());
            }
        }
        if !(self.trajectories.window.0 > 0.0) {
            return fail("trajectories.window", "must be positive".into());
        }
        let n = &self.numerics;
        if !(n.step.0 > 0.0) {
            return fail("numerics.step", "must be positive".into());
        }
        if !(n.grid_end.0 > n.grid_start.0) {
            return fail("numerics.grid_end", "must exceed grid_start".into());
        }
        if !(n.hbar_scale > 0.0 && n.hbar_scale.is_finite()) {
            return fail("numerics.hbar_scale", "must be positive and finite".into());
        }
        if !(n.step_guard >= 0.0) {
            return fail("numerics.step_guard", "must be non-negative".into());
        }
        if !(n.cluster_radius > 0.0) {
            return fail("numerics.cluster_radius", "must be positive".into());
        }
        if !(n.period_fraction >= 0.0) {
            return fail("numerics.period_fraction", "must be non-negative".into());
        }
        if let Some(e) = n.epsilon_sweep.iter().find(|e| !(**e > 0.0)) {
            return fail("numerics.epsilon_sweep", format!("scale {e} must be positive"));
        }
        if let PotentialSection::Tabulated { x, v } = &self.potential {
            if x.len() != v.len() {
                return fail("potential.v", format!("{} values for {} positions", v.len(), x.len()));
            }
        }
        Ok(())
    }
}
