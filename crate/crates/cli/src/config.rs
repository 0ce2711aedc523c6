//! JSON run configuration.

use crate::CliError;
use clap::ValueEnum;
use screenwave::diagnostics::{BoundaryRegularity, MeshRule, Observable, SetDescriptor};
use screenwave::trace::Incident;
use screenwave::{cantor_prefractal, make_screen, Complex64, Screen};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Aperture,
    Ksweep,
    Coercivity,
    Sharpness,
    Nullity,
    OracleCheck,
    Prefractal,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Aperture => "aperture",
            Command::Ksweep => "ksweep",
            Command::Coercivity => "coercivity",
            Command::Sharpness => "sharpness",
            Command::Nullity => "nullity",
            Command::OracleCheck => "oracle-check",
            Command::Prefractal => "prefractal",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScreenSpec {
    Boxes { dim: usize, boxes: Vec<BoxSpec> },
    Cantor { dim: usize, level: usize, ratio: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum IncidentSpec {
    PlaneWave { direction: Vec<f64> },
    PointSource { source: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemSpec {
    SoundSoft,
    SoundHard,
    ApertureH,
    ApertureI,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorSpec {
    SingleLayer,
    Hypersingular,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegularitySpec {
    Continuous,
    Holder { exponent: f64 },
    Lipschitz,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Cantor { n: usize, alpha: f64 },
    Hyperplane { ambient: usize },
    FiniteSet { ambient: usize },
    Boundary { ambient: usize, regularity: RegularitySpec },
    WithInterior { ambient: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedNullity {
    Null,
    NotNull,
    Undecided,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NullitySpec {
    pub set: SetSpec,
    pub s: Vec<f64>,
    #[serde(default)]
    pub expected: Option<Vec<ExpectedNullity>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    FarField { directions: usize },
    Field { point: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrefractalSpec {
    pub dim: usize,
    pub ratio: f64,
    pub levels: Vec<usize>,
    #[serde(default = "default_elements")]
    pub elements_per_feature: usize,
    pub observable: ObservableSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub h_max: Option<f64>,
    #[serde(default)]
    pub points_per_wavelength: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub screen: Option<ScreenSpec>,
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub k_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub mesh: Option<MeshSpec>,
    #[serde(default)]
    pub incident: Option<IncidentSpec>,
    #[serde(default)]
    pub problem: Option<ProblemSpec>,
    #[serde(default)]
    pub operator: Option<OperatorSpec>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub pass_line: Option<f64>,
    #[serde(default)]
    pub field_points: Vec<Vec<f64>>,
    #[serde(default = "default_far_field")]
    pub far_field_directions: usize,
    #[serde(default)]
    pub modulation: Option<Vec<f64>>,
    #[serde(default = "default_k_asymptotic")]
    pub k_asymptotic: f64,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub nullity: Option<NullitySpec>,
    #[serde(default)]
    pub prefractal: Option<PrefractalSpec>,
}

fn default_tol() -> f64 {
    1e-8
}

fn default_samples() -> usize {
    1000
}

fn default_far_field() -> usize {
    64
}

fn default_k_asymptotic() -> f64 {
    16.0
}

fn default_elements() -> usize {
    4
}

fn missing(field: &str, cmd: Command) -> CliError {
    CliError::Config(format!("`{field}` is required for `{}`", cmd.name()))
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("`{name}` must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        positive("tol", self.tol)?;
        positive("k_asymptotic", self.k_asymptotic)?;
        if let Some(k) = self.k {
            positive("k", k)?;
        }
        for &k in self.k_grid.iter().flatten() {
            positive("k_grid", k)?;
        }
        if let Some(m) = &self.mesh {
            for (name, v) in [("mesh.h", m.h), ("mesh.h_max", m.h_max), ("mesh.points_per_wavelength", m.points_per_wavelength)] {
                if let Some(v) = v {
                    positive(name, v)?;
                }
            }
        }
        if let Some(t) = self.threshold {
            positive("threshold", t)?;
        }
        if let Some(p) = self.pass_line {
            positive("pass_line", p)?;
        }
        if self.samples == 0 {
            return Err(CliError::Config("`samples` must be positive".into()));
        }
        Ok(())
    }

    pub fn screen(&self, cmd: Command) -> Result<Screen, CliError> {
        let spec = self.screen.as_ref().ok_or_else(|| missing("screen", cmd))?;
        let screen = match spec {
            ScreenSpec::Boxes { dim, boxes } => make_screen(*dim, boxes.iter().map(|b| (b.lower.clone(), b.upper.clone())).collect()),
            ScreenSpec::Cantor { dim, level, ratio } => cantor_prefractal(*dim, *level, *ratio),
        };
        Ok(screen?)
    }

    pub fn k(&self, cmd: Command) -> Result<f64, CliError> {
        self.k.ok_or_else(|| missing("k", cmd))
    }

    /// The k grid, or the single k when no grid is given.
    pub fn k_grid(&self, cmd: Command) -> Result<Vec<f64>, CliError> {
        match (&self.k_grid, self.k) {
            (Some(g), _) if !g.is_empty() => Ok(g.clone()),
            (_, Some(k)) => Ok(vec![k]),
            _ => Err(missing("k_grid", cmd)),
        }
    }

    pub fn mesh_rule(&self) -> MeshRule {
        let m = self.mesh.as_ref();
        let mut rule = MeshRule::new(m.and_then(|m| m.h_max).unwrap_or(0.125));
        if let Some(p) = m.and_then(|m| m.points_per_wavelength) {
            rule.points_per_wavelength = p;
        }
        rule
    }

    /// Fixed `mesh.h` if given, else the mesh rule at this k.
    pub fn h(&self, k: f64) -> f64 {
        self.mesh.as_ref().and_then(|m| m.h).unwrap_or_else(|| self.mesh_rule().h(k))
    }

    pub fn incident(&self, cmd: Command) -> Result<Incident, CliError> {
        Ok(match self.incident.as_ref().ok_or_else(|| missing("incident", cmd))? {
            IncidentSpec::PlaneWave { direction } => {
                Incident::PlaneWaves { amplitudes: vec![Complex64::new(1.0, 0.0)], directions: vec![direction.clone()] }
            }
            IncidentSpec::PointSource { source } => Incident::PointSource { source: source.clone() },
        })
    }

    pub fn operator(&self, cmd: Command) -> Result<OperatorSpec, CliError> {
        self.operator.ok_or_else(|| missing("operator", cmd))
    }

    pub fn nullity(&self, cmd: Command) -> Result<&NullitySpec, CliError> {
        self.nullity.as_ref().ok_or_else(|| missing("nullity", cmd))
    }

    pub fn prefractal(&self, cmd: Command) -> Result<&PrefractalSpec, CliError> {
        self.prefractal.as_ref().ok_or_else(|| missing("prefractal", cmd))
    }
}

impl SetSpec {
    pub fn descriptor(self) -> SetDescriptor {
        match self {
            SetSpec::Cantor { n, alpha } => SetDescriptor::CantorLimitSet { n, alpha },
            SetSpec::Hyperplane { ambient } => SetDescriptor::Hyperplane { ambient },
            SetSpec::FiniteSet { ambient } => SetDescriptor::FiniteSet { ambient },
            SetSpec::Boundary { ambient, regularity } => SetDescriptor::Boundary {
                ambient,
                regularity: match regularity {
                    RegularitySpec::Continuous => BoundaryRegularity::Continuous,
                    RegularitySpec::Holder { exponent } => BoundaryRegularity::Holder(exponent),
                    RegularitySpec::Lipschitz => BoundaryRegularity::Lipschitz,
                },
            },
            SetSpec::WithInterior { ambient } => SetDescriptor::WithInterior { ambient },
        }
    }
}

impl ObservableSpec {
    pub fn observable(&self) -> Observable {
        match self {
            ObservableSpec::FarField { directions } => Observable::FarField { directions: *directions },
            ObservableSpec::Field { point } => Observable::Field { point: point.clone() },
        }
    }
}
