use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::manufactured::ManufacturedCase;
use crate::diagnostics::Quadrature;
use crate::direct::{Params, SolverOptions};
use crate::error::{CbfError, Result};
use crate::fields::Grid;
use crate::inverse::FixedPointOptions;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Direct,
    Invert,
    VerifyEnergy,
    Stability,
    Admissibility,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Direct => "direct",
            Mode::Invert => "invert",
            Mode::VerifyEnergy => "verify-energy",
            Mode::Stability => "stability",
            Mode::Admissibility => "admissibility",
        }
    }
}

impl FromStr for Mode {
    type Err = CbfError;
    fn from_str(s: &str) -> Result<Self> {
        [Mode::Direct, Mode::Invert, Mode::VerifyEnergy, Mode::Stability, Mode::Admissibility]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                CbfError::Config(format!(
                    "unknown mode '{s}' (expected direct, invert, verify-energy, stability or admissibility)"
                ))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n: usize,
}

/// Source and initial state of the experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemCase {
    DecayingVortex,
    Steady,
    Separable,
    /// Smooth divergence-free bump, 2D only.
    Bump,
    /// Seeded random divergence-free source.
    Random,
    Zero,
}

impl ProblemCase {
    pub fn manufactured(self) -> Option<ManufacturedCase> {
        match self {
            ProblemCase::DecayingVortex => Some(ManufacturedCase::DecayingVortex),
            ProblemCase::Steady => Some(ManufacturedCase::Steady),
            ProblemCase::Separable => Some(ManufacturedCase::Separable),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    /// The manufactured initial state, or rest for the other cases.
    Case,
    Zero,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub case: ProblemCase,
    /// Source amplitude for `bump` and `random`; `L^2` norm for `random`.
    pub amplitude: f64,
    /// `g = g_offset + g_rate t` for the non-manufactured cases.
    pub g_offset: f64,
    pub g_rate: f64,
    pub initial: InitialKind,
    /// `L^2` norm of a random initial velocity.
    pub initial_amplitude: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            case: ProblemCase::DecayingVortex,
            amplitude: 0.5,
            g_offset: 1.0,
            g_rate: 1.0,
            initial: InitialKind::Case,
            initial_amplitude: 0.1,
        }
    }
}

/// Where the final-time data of an inversion come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataKind {
    /// Restricted from a finer run started at rest.
    Twin,
    /// Closed-form final state of a manufactured case.
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InverseConfig {
    pub data: DataKind,
    /// Space and time refinement of the data-generating run.
    pub refinement: usize,
    pub omega: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub rescale_to_ball: bool,
    pub override_admissibility: bool,
    /// Stokes eigenvalue; estimated on the run grid when absent.
    pub lambda1: Option<f64>,
}

impl Default for InverseConfig {
    fn default() -> Self {
        let fp = FixedPointOptions::default();
        InverseConfig {
            data: DataKind::Twin,
            refinement: 2,
            omega: fp.omega,
            tol: fp.tol,
            max_iter: fp.max_iter,
            rescale_to_ball: fp.rescale_to_ball,
            override_admissibility: fp.override_admissibility,
            lambda1: None,
        }
    }
}

impl InverseConfig {
    pub fn fixed_point(&self) -> FixedPointOptions {
        FixedPointOptions {
            omega: self.omega,
            tol: self.tol,
            max_iter: self.max_iter,
            rescale_to_ball: self.rescale_to_ball,
            override_admissibility: self.override_admissibility,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    pub quadrature: Quadrature,
    /// Number of runs, each halving `dt`.
    pub refinements: usize,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig {
            quadrature: Quadrature::default(),
            refinements: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilitySection {
    /// Relative perturbations of `g`.
    pub deltas: Vec<f64>,
    /// Largest accepted `max / min` of the implied constants.
    pub max_spread: f64,
}

impl Default for StabilitySection {
    fn default() -> Self {
        StabilitySection {
            deltas: vec![1e-2, 5e-3, 2.5e-3],
            max_spread: 2.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Output directory; the command line takes precedence.
    pub output: Option<PathBuf>,
    /// CBF1 initial velocity replacing the configured one; the data velocity
    /// in admissibility mode.
    pub initial: Option<PathBuf>,
    /// CBF1 spatial source replacing the configured one.
    pub source: Option<PathBuf>,
}

fn default_stride() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional here; must agree with the command-line mode when given.
    pub mode: Option<Mode>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    pub grid: GridConfig,
    pub params: Params,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub inverse: InverseConfig,
    #[serde(default)]
    pub energy: EnergyConfig,
    #[serde(default)]
    pub stability: StabilitySection,
    #[serde(default)]
    pub paths: PathsConfig,
    /// SHA-256 of the configuration text.
    #[serde(skip)]
    pub text_sha256: String,
}

fn knob(ok: bool, key: &str, msg: impl std::fmt::Display) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CbfError::Config(format!("{key}: {msg}")))
    }
}

impl RunConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.dim, self.grid.n)
    }

    /// Mode from the command line reconciled with the configured one.
    pub fn resolve_mode(&mut self, cli: Option<Mode>) -> Result<Mode> {
        let mode = match (cli, self.mode) {
            (Some(a), Some(b)) if a != b => {
                return Err(CbfError::Config(format!(
                    "mode: command line asks for '{}' but the config sets '{}'",
                    a.name(),
                    b.name()
                )))
            }
            (Some(m), _) | (None, Some(m)) => m,
            (None, None) => return Err(CbfError::Config("mode: not given".into())),
        };
        self.mode = Some(mode);
        Ok(mode)
    }

    /// Range checks on every knob; relative input paths resolve against `base`.
    pub fn validate(&mut self, base: &Path) -> Result<()> {
        let g = self.grid.clone_checked()?;
        self.params
            .validate_for_dim(g.dim())
            .map_err(|e| CbfError::Config(format!("params: {}", inner_message(e))))?;
        knob(self.snapshot_stride >= 1, "snapshot_stride", "must be at least 1")?;

        let p = &self.problem;
        knob(p.amplitude.is_finite(), "problem.amplitude", "must be finite")?;
        knob(
            p.g_offset.is_finite() && p.g_rate.is_finite(),
            "problem.g_offset",
            "g coefficients must be finite",
        )?;
        knob(p.initial_amplitude >= 0.0, "problem.initial_amplitude", "must be non-negative")?;
        if matches!(p.case, ProblemCase::Bump) || p.case.manufactured().is_some() {
            knob(g.dim() == 2, "problem.case", "this case is defined in 2D only")?;
        }
        if p.case.manufactured().is_some() {
            knob(
                p.initial == InitialKind::Case,
                "problem.initial",
                "manufactured cases use their own initial state",
            )?;
        }

        let s = &self.solver;
        knob(s.cfl > 0.0, "solver.cfl", "must be positive")?;
        knob(s.max_steps >= 1, "solver.max_steps", "must be at least 1")?;
        knob(s.krylov_tol > 0.0 && s.krylov_tol < 1.0, "solver.krylov_tol", "must lie in (0, 1)")?;
        knob(s.krylov_max_iter >= 1, "solver.krylov_max_iter", "must be at least 1")?;
        knob(s.ut_warn_threshold > 0.0, "solver.ut_warn_threshold", "must be positive")?;

        let inv = &self.inverse;
        knob(inv.refinement >= 2, "inverse.refinement", "must be at least 2")?;
        self.inverse
            .fixed_point()
            .validate()
            .map_err(|e| CbfError::Config(format!("inverse: {}", inner_message(e))))?;
        if let Some(l) = inv.lambda1 {
            knob(l > 0.0 && l.is_finite(), "inverse.lambda1", "must be positive")?;
        }
        if inv.data == DataKind::Exact {
            knob(
                p.case.manufactured().is_some(),
                "inverse.data",
                "exact data need a manufactured case",
            )?;
        }

        knob(
            (1..=8).contains(&self.energy.refinements),
            "energy.refinements",
            "must lie in 1..=8",
        )?;
        let st = &self.stability;
        knob(!st.deltas.is_empty(), "stability.deltas", "must not be empty")?;
        knob(
            st.deltas.iter().all(|d| *d > 0.0 && d.is_finite()),
            "stability.deltas",
            "entries must be positive",
        )?;
        knob(st.max_spread >= 1.0, "stability.max_spread", "must be at least 1")?;

        for (key, path) in [("paths.initial", &mut self.paths.initial), ("paths.source", &mut self.paths.source)] {
            if let Some(p) = path {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
                knob(p.is_file(), key, format!("no such file {}", p.display()))?;
            }
        }
        Ok(())
    }
}

impl GridConfig {
    fn clone_checked(&self) -> Result<Grid> {
        Grid::new(self.dim, self.n).map_err(|e| CbfError::Config(format!("grid: {}", inner_message(e))))
    }
}

fn inner_message(e: CbfError) -> String {
    match e {
        CbfError::Parameter(m) | CbfError::Shape(m) | CbfError::Config(m) => m,
        other => other.to_string(),
    }
}

fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parse and validate a TOML run configuration; relative paths resolve
/// against the working directory.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_in(text, Path::new("."))
}

pub fn parse_config_in(text: &str, base: &Path) -> Result<RunConfig> {
    let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CbfError::Config(e.to_string().trim_end().to_string()))?;
    cfg.validate(base)?;
    cfg.text_sha256 = sha256_hex(text);
    Ok(cfg)
}

/// Read a configuration file; relative paths resolve against its directory.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CbfError::Config(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    parse_config_in(&text, base)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
[grid]
dim = 2
n = 16

[params]
mu = 0.5
alpha = 1.0
beta = 1.0
r = 3.0
t_final = 0.1
dt = 0.01
";

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.mode, None);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.snapshot_stride, 10);
        assert_eq!(cfg.problem, ProblemConfig::default());
        assert_eq!(cfg.solver, SolverOptions::default());
        assert_eq!(cfg.inverse, InverseConfig::default());
        assert_eq!(cfg.stability.deltas, vec![1e-2, 5e-3, 2.5e-3]);
        assert_eq!(cfg.text_sha256.len(), 64);
    }

    #[test]
    fn unknown_key_is_named() {
        let text = format!("{MINIMAL}\n[solver]\ncfl = 0.4\nwobble = 1\n");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("wobble"), "{err}");
    }

    #[test]
    fn small_exponent_rejected() {
        let text = MINIMAL.replace("r = 3.0", "r = 0.5");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("r must be >= 1"), "{err}");
    }

    #[test]
    fn three_d_needs_large_exponent() {
        let text = MINIMAL.replace("dim = 2", "dim = 3").replace("r = 3.0", "r = 2.0");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("3D requires r >= 3"), "{err}");
    }

    #[test]
    fn knob_ranges_checked() {
        let text = format!("{MINIMAL}\n[inverse]\nomega = 1.5\n");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("omega"), "{err}");
        let text = format!("{MINIMAL}\n[paths]\ninitial = \"missing.cbf1\"\n");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("paths.initial"), "{err}");
    }

    #[test]
    fn mode_reconciliation() {
        let mut cfg = parse_config(&format!("mode = \"invert\"\n{MINIMAL}")).unwrap();
        assert_eq!(cfg.resolve_mode(None).unwrap(), Mode::Invert);
        assert!(cfg.resolve_mode(Some(Mode::Direct)).is_err());
        assert_eq!(cfg.resolve_mode(Some(Mode::Invert)).unwrap(), Mode::Invert);
        assert_eq!("verify-energy".parse::<Mode>().unwrap(), Mode::VerifyEnergy);
    }
}
